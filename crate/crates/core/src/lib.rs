//! A finite dyadic laboratory for sharp A2-weighted estimates.
//!
//! Everything lives on the dyadic tree of `[0, 1)` truncated at a finite
//! depth: leaf functions, Haar coefficients, A2 weights and their weighted
//! Haar systems, dyadic shifts viewed as sub-bilinear forms, the Carleson
//! measure `|Δ_I w||Δ_I σ||I|`, and the six-variable Bellman domain `Ω_Q`
//! with its segment geometry and a dynamic-programming estimator.
//!
//! The numerical core is generic over the scalar type through [`Scalar`]
//! (implemented for `f32` and `f64`). The `*64` aliases at the crate root
//! name the double-precision instantiations used by the experiments.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bellman;
pub mod dyadic;
pub mod embedding;
pub mod error;
pub mod fit;
pub mod form;
pub mod linalg;
pub mod scalar;
pub mod shifts;
pub mod weights;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use bellman::{BellmanPoint, NodeSplit, OmegaDomain};
pub use dyadic::{DyadicIndex, HaarExpansion, LeafFunction};
pub use embedding::{CarlesonMeasure, FourTerms};
pub use fit::{fit_slope, SlopeFit};
pub use shifts::{NormEstimate, NormMode, ShiftSpec};
pub use weights::{A2Report, HaarSplit, Weight, WeightedHaar};

pub type LeafFunction64 = LeafFunction<f64>;
pub type HaarExpansion64 = HaarExpansion<f64>;
pub type Weight64 = Weight<f64>;
pub type A2Report64 = A2Report<f64>;
pub type WeightedHaar64 = WeightedHaar<f64>;
pub type HaarSplit64 = HaarSplit<f64>;
pub type ShiftSpec64 = ShiftSpec<f64>;
pub type NormEstimate64 = NormEstimate<f64>;
pub type CarlesonMeasure64 = CarlesonMeasure<f64>;
pub type FourTerms64 = FourTerms<f64>;
pub type BellmanPoint64 = BellmanPoint<f64>;
pub type NodeSplit64 = NodeSplit<f64>;

pub type LeafFunction32 = LeafFunction<f32>;
pub type Weight32 = Weight<f32>;
pub type BellmanPoint32 = BellmanPoint<f32>;
