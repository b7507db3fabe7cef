//! A2 weights on the dyadic tree.
//!
//! A [`Weight`] stores `w` together with its dual `σ = w⁻¹`. The dual is the
//! leafwise reciprocal, rounded up when necessary so that `w·σ ≥ 1` holds in
//! floating point on every leaf; `dual()` swaps the two, so it is an exact
//! involution and every quantity symmetric in `(w, σ)` is bitwise symmetric.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dyadic::{check_internal, same_depth, DyadicIndex, LeafFunction, Pyramid};
use crate::{Error, Result, Scalar};

pub const MIN_WEIGHT: f64 = 1e-8;
pub const MAX_WEIGHT: f64 = 1e8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Weight<T> {
    w: LeafFunction<T>,
    sigma: LeafFunction<T>,
}

fn reciprocal_at_least<T: Scalar>(w: T) -> T {
    let mut s = T::one() / w;
    while w * s < T::one() {
        s = s + s * T::epsilon();
    }
    s
}

impl<T: Scalar> Weight<T> {
    pub fn new(base: LeafFunction<T>) -> Result<Self> {
        let (lo, hi) = (T::lit(MIN_WEIGHT), T::lit(MAX_WEIGHT));
        if let Some((k, v)) = base.values().iter().enumerate().find(|(_, &v)| !(v >= lo && v <= hi)) {
            return Err(Error::domain(format!(
                "weight value {v} at leaf {k} outside [{MIN_WEIGHT:e}, {MAX_WEIGHT:e}]"
            )));
        }
        let sigma = base.map(reciprocal_at_least);
        Ok(Weight { w: base, sigma })
    }

    pub fn from_values(depth: u32, values: Vec<T>) -> Result<Self> {
        Self::new(LeafFunction::new(depth, values)?)
    }

    pub fn constant(depth: u32, c: T) -> Result<Self> {
        Self::new(LeafFunction::constant(depth, c)?)
    }

    pub fn depth(&self) -> u32 {
        self.w.depth()
    }

    pub fn as_function(&self) -> &LeafFunction<T> {
        &self.w
    }

    pub fn values(&self) -> &[T] {
        self.w.values()
    }

    /// `σ = w⁻¹` as a leaf function.
    pub fn sigma(&self) -> &LeafFunction<T> {
        &self.sigma
    }

    pub fn dual(&self) -> Self {
        Weight { w: self.sigma.clone(), sigma: self.w.clone() }
    }

    pub fn mirrored(&self) -> Self {
        Weight { w: self.w.mirrored(), sigma: self.sigma.mirrored() }
    }

    /// Pyramids of averages of `w` and `σ`.
    pub fn pyramids(&self) -> (Pyramid<T>, Pyramid<T>) {
        (self.w.pyramid(), self.sigma.pyramid())
    }
}

pub fn dual<T: Scalar>(w: &Weight<T>) -> Weight<T> {
    w.dual()
}

/// `[w]_{A₂}` with the interval attaining it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct A2Report<T> {
    pub characteristic: T,
    pub witness: DyadicIndex,
}

/// Exact maximum of `⟨w⟩_I⟨σ⟩_I` over every dyadic interval, leaves included.
/// Ties resolve to the first interval in heap order.
pub fn a2_characteristic<T: Scalar>(w: &Weight<T>) -> A2Report<T> {
    let (pw, ps) = w.pyramids();
    let mut best = A2Report { characteristic: T::neg_infinity(), witness: DyadicIndex::ROOT };
    for i in DyadicIndex::all(w.depth()) {
        let q = pw.avg(i) * ps.avg(i);
        if q > best.characteristic {
            best = A2Report { characteristic: q, witness: i };
        }
    }
    best
}

/// `‖f‖_w = (∫ f² w)^{1/2}`.
pub fn weighted_norm<T: Scalar>(f: &LeafFunction<T>, w: &Weight<T>) -> Result<T> {
    Ok(weighted_inner(f, f, w)?.sqrt())
}

/// `(f, g)_w = ∫ f g w`.
pub fn weighted_inner<T: Scalar>(f: &LeafFunction<T>, g: &LeafFunction<T>, w: &Weight<T>) -> Result<T> {
    same_depth(f, g)?;
    same_depth(f, w.as_function())?;
    let s: T = f.values().iter().zip(g.values()).zip(w.values()).map(|((&a, &b), &c)| a * b * c).sum();
    Ok(s * f.leaf_measure())
}

/// Two-valued function on `I`, orthogonal to constants and of unit norm in
/// `L²(w)`, positive on the left half.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedHaar<T> {
    pub interval: DyadicIndex,
    pub value_left: T,
    pub value_right: T,
}

impl<T: Scalar> WeightedHaar<T> {
    /// From the averages of `w` on the two halves of `interval`.
    pub(crate) fn from_child_averages(interval: DyadicIndex, wl: T, wr: T) -> Self {
        // a·wl = −b·wr and (a²·wl + b²·wr)·|I|/2 = 1
        let h = interval.length::<T>() * T::half();
        let s = wl + wr;
        WeightedHaar {
            interval,
            value_left: (wr / (h * wl * s)).sqrt(),
            value_right: -(wl / (h * wr * s)).sqrt(),
        }
    }

    pub fn sample(&self, depth: u32) -> Result<LeafFunction<T>> {
        check_internal(self.interval, depth)?;
        let range = self.interval.leaf_range(depth);
        let mid = range.start + range.len() / 2;
        LeafFunction::from_fn(depth, |k| {
            if !range.contains(&k) {
                T::zero()
            } else if k < mid {
                self.value_left
            } else {
                self.value_right
            }
        })
    }

    /// `∫_I g · h^w_I` (unweighted pairing) from the half-interval averages of `g`.
    pub(crate) fn pair_with_averages(&self, gl: T, gr: T) -> T {
        (self.value_left * gl + self.value_right * gr) * self.interval.length::<T>() * T::half()
    }
}

pub fn weighted_haar<T: Scalar>(w: &Weight<T>, interval: DyadicIndex) -> Result<WeightedHaar<T>> {
    check_internal(interval, w.depth())?;
    let p = w.as_function().pyramid();
    Ok(WeightedHaar::from_child_averages(interval, p.avg(interval.left()), p.avg(interval.right())))
}

/// Coefficients of `h_I = α h^w_I + β χ_I/√|I|`, with the two bound ratios
/// `|α|/√⟨w⟩_I` and `|β|·⟨w⟩_I/|Δ_I w|` (the latter `None` when `Δ_I w = 0`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HaarSplit<T> {
    pub alpha: T,
    pub beta: T,
    pub alpha_ratio: T,
    pub beta_ratio: Option<T>,
}

fn haar_split_from_averages<T: Scalar>(wl: T, wr: T) -> HaarSplit<T> {
    // Solving (c, −c) = α (a, b) + β (c, c) with h^w_I = (a, b) gives
    // α = √(w₋w₊/⟨w⟩) and β = (w₋ − w₊)/(w₋ + w₊).
    let mean = (wl + wr) * T::half();
    let delta = (wl - wr) * T::half();
    let alpha = (wl * wr / mean).sqrt();
    let beta = delta / mean;
    let beta_ratio = if delta == T::zero() { None } else { Some(beta.abs() * mean / delta.abs()) };
    HaarSplit {
        alpha,
        beta: if delta == T::zero() { T::zero() } else { beta },
        alpha_ratio: alpha.abs() / mean.sqrt(),
        beta_ratio,
    }
}

pub fn haar_split<T: Scalar>(w: &Weight<T>, interval: DyadicIndex) -> Result<HaarSplit<T>> {
    check_internal(interval, w.depth())?;
    let p = w.as_function().pyramid();
    Ok(haar_split_from_averages(p.avg(interval.left()), p.avg(interval.right())))
}

/// Power weight `x^a` averaged over each leaf.
pub fn gen_power<T: Scalar>(depth: u32, a: f64) -> Result<Weight<T>> {
    if !(a > -1.0) {
        return Err(Error::domain(format!("power exponent {a} must exceed -1")));
    }
    let n = (1u64 << depth) as f64;
    let f = LeafFunction::from_fn(depth, |k| {
        let (l, r) = (k as f64 / n, (k + 1) as f64 / n);
        T::lit((r.powf(a + 1.0) - l.powf(a + 1.0)) / ((a + 1.0) * (r - l)))
    })?;
    Weight::new(f)
}

/// Multiplicative cascade: the root carries 1, the left child of `I` gets the
/// parent value times `1 + ξ_I` and the right child times `1 − ξ_I`, with
/// `ξ_I` uniform on `[−eps, eps]` drawn in heap order from a seeded ChaCha8.
pub fn gen_cascade<T: Scalar>(depth: u32, eps: f64, seed: u64) -> Result<Weight<T>> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::domain(format!("cascade eps {eps} must lie in [0, 1)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut level = vec![T::one()];
    for _ in 0..depth {
        let mut next = Vec::with_capacity(level.len() * 2);
        for &v in &level {
            let xi = T::lit(rng.gen_range(-eps..=eps));
            next.push(v * (T::one() + xi));
            next.push(v * (T::one() - xi));
        }
        level = next;
    }
    Weight::new(LeafFunction::new(depth, level)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn w2() -> Weight<f64> {
        Weight::from_values(1, vec![2.0, 2.0 / 3.0]).unwrap()
    }

    #[test]
    fn dual_is_reciprocal_and_involution() {
        let one = Weight::<f64>::constant(3, 1.0).unwrap();
        assert!(one.sigma().values().iter().all(|&s| s == 1.0));
        let s = w2().dual();
        assert_abs_diff_eq!(s.values()[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(s.values()[1], 1.5, epsilon = 1e-15);
        assert_eq!(w2().dual().dual(), w2());
        let w = gen_cascade::<f64>(8, 0.7, 3).unwrap();
        for (a, b) in w.values().iter().zip(w.sigma().values()) {
            assert!(a * b >= 1.0 && a * b <= 1.0 + 1e-15);
        }
    }

    #[test]
    fn weight_range_validated() {
        assert!(Weight::<f64>::from_values(1, vec![1.0, 0.0]).is_err());
        assert!(Weight::<f64>::from_values(1, vec![1.0, 1e9]).is_err());
        assert!(Weight::<f64>::from_values(1, vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn a2_examples() {
        let r = a2_characteristic(&Weight::<f64>::constant(4, 7.0).unwrap());
        assert_eq!(r.characteristic, 1.0);
        let r = a2_characteristic(&w2());
        assert_abs_diff_eq!(r.characteristic, 4.0 / 3.0, epsilon = 1e-15);
        assert_eq!(r.witness, DyadicIndex::ROOT);
        let r = a2_characteristic(&Weight::from_values(1, vec![4.0, 0.25]).unwrap());
        assert_eq!(r.characteristic, 289.0 / 64.0);
    }

    #[test]
    fn a2_dual_symmetry_is_exact() {
        for seed in 0..20 {
            let w = gen_cascade::<f64>(7, 0.6, seed).unwrap();
            assert_eq!(a2_characteristic(&w).characteristic, a2_characteristic(&w.dual()).characteristic);
            assert!(a2_characteristic(&w).characteristic >= 1.0);
        }
    }

    #[test]
    fn weighted_norm_examples() {
        let one = Weight::<f64>::constant(2, 1.0).unwrap();
        assert_eq!(weighted_norm(&LeafFunction::constant(2, 1.0).unwrap(), &one).unwrap(), 1.0);
        let f = LeafFunction::new(1, vec![1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(weighted_norm(&f, &w2()).unwrap(), 1.0, epsilon = 1e-15);
        let w = gen_cascade::<f64>(5, 0.4, 1).unwrap();
        let g = LeafFunction::from_fn(5, |k| (k as f64).cos()).unwrap();
        assert_abs_diff_eq!(
            weighted_norm(&g.scale(-3.0), &w).unwrap(),
            3.0 * weighted_norm(&g, &w).unwrap(),
            epsilon = 1e-12
        );
        assert!(weighted_norm(&f, &one).is_err());
    }

    #[test]
    fn weighted_haar_examples() {
        let h = weighted_haar(&Weight::<f64>::constant(1, 1.0).unwrap(), DyadicIndex::ROOT).unwrap();
        assert_abs_diff_eq!(h.value_left, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(h.value_right, -1.0, epsilon = 1e-15);
        let h = weighted_haar(&w2(), DyadicIndex::ROOT).unwrap();
        assert_abs_diff_eq!(h.value_left, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(h.value_right, -1.5, epsilon = 1e-15);
        assert!(weighted_haar(&w2(), DyadicIndex::new(1, 0).unwrap()).is_err());
    }

    #[test]
    fn haar_split_examples() {
        let s = haar_split(&Weight::<f64>::constant(2, 1.0).unwrap(), DyadicIndex::ROOT).unwrap();
        assert_abs_diff_eq!(s.alpha, 1.0, epsilon = 1e-15);
        assert_eq!(s.beta, 0.0);
        assert_eq!(s.beta_ratio, None);
        let s = haar_split(&w2(), DyadicIndex::ROOT).unwrap();
        assert_abs_diff_eq!(s.alpha, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.beta, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(s.alpha_ratio, (3.0f64 / 4.0).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(s.beta_ratio.unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn power_examples() {
        let w = gen_power::<f64>(5, 0.0).unwrap();
        assert!(w.values().iter().all(|&v| v == 1.0));
        assert_eq!(gen_power::<f64>(1, 1.0).unwrap().values(), &[0.25, 0.75]);
        assert_eq!(gen_power::<f64>(2, 1.0).unwrap().values(), &[0.125, 0.375, 0.625, 0.875]);
        assert!(matches!(gen_power::<f64>(3, -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn cascade_examples() {
        let w = gen_cascade::<f64>(6, 0.0, 9).unwrap();
        assert!(w.values().iter().all(|&v| v == 1.0));
        assert_eq!(gen_cascade::<f64>(8, 0.5, 7).unwrap(), gen_cascade::<f64>(8, 0.5, 7).unwrap());
        assert_ne!(gen_cascade::<f64>(8, 0.5, 7).unwrap(), gen_cascade::<f64>(8, 0.5, 8).unwrap());
        assert!(matches!(gen_cascade::<f64>(3, 1.0, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn cascade_characteristic_grows_with_eps() {
        let mut prev = 0.0;
        for k in 1..=9 {
            let eps = k as f64 / 10.0;
            let mean: f64 =
                (0..100).map(|s| a2_characteristic(&gen_cascade::<f64>(8, eps, s).unwrap()).characteristic).sum::<f64>()
                    / 100.0;
            assert!(mean > prev, "eps {eps}: mean Q {mean} not above {prev}");
            prev = mean;
        }
    }
}
