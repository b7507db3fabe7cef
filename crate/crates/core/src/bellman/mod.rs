//! The six-variable Bellman domain `Ω_Q` and everything computed on it.

pub mod dp;
pub mod geometry;
pub mod node;

pub use dp::{dp_estimate, DpConfig, DpEstimator, GAIN_FACTOR};
pub use geometry::{
    application_pattern_check, barycenter_lemma_check, in_domain, lemma_campaign, sample_point, segment_in_domain,
    segment_max_uv, segment_min_k, triangle_lemma_check, ApplicationReport, BarycenterReport, BellmanPoint, Lemma,
    LemmaReport, NodeSplit, OmegaDomain, TriangleReport,
};
pub use node::{d1_brackets, d1_lower_bound, node_defect, point_from_data, tree_sum, NodeDefect, TreeSum};
