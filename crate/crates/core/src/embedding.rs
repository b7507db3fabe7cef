//! The bilinear embedding `Σ_I |(φw, h_I)||(ψσ, h_I)|`, its split into four
//! sums through the weighted Haar decomposition, the weighted dyadic maximal
//! function, and the Carleson measure `α_I = |Δ_I w||Δ_I σ||I|`.

use serde::{Deserialize, Serialize};

use crate::dyadic::{check_level, num_internal, same_depth, DyadicIndex, LeafFunction, Pyramid};
use crate::form::{FormMax, Functional, Pair, SearchOptions, SubBilinearForm};
use crate::shifts::haar_functionals;
use crate::weights::{a2_characteristic, weighted_norm, Weight, WeightedHaar};
use crate::{Error, Result, Scalar};

/// Relative slack for inequalities that hold exactly in real arithmetic.
pub const ROUNDING_SLACK: f64 = 1e-12;

fn check_inputs<T: Scalar>(phi: &LeafFunction<T>, psi: &LeafFunction<T>, w: &Weight<T>) -> Result<()> {
    same_depth(phi, psi)?;
    same_depth(phi, w.as_function())
}

/// `Σ_I |(φw, h_I)| |(ψσ, h_I)|` over internal intervals.
pub fn key_sum<T: Scalar>(phi: &LeafFunction<T>, psi: &LeafFunction<T>, w: &Weight<T>) -> Result<T> {
    check_inputs(phi, psi, w)?;
    let a = phi.mul(w.as_function())?.pyramid();
    let b = psi.mul(w.sigma())?.pyramid();
    Ok(DyadicIndex::internal(phi.depth()).map(|i| a.haar(i).abs() * b.haar(i).abs()).sum())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourTerms<T> {
    pub term_i: T,
    pub term_ii: T,
    pub term_iii: T,
    pub term_iv: T,
}

impl<T: Scalar> FourTerms<T> {
    pub fn total(&self) -> T {
        self.term_i + self.term_ii + self.term_iii + self.term_iv
    }
}

struct Averages<T> {
    w: Pyramid<T>,
    sigma: Pyramid<T>,
    phi_w: Pyramid<T>,
    psi_sigma: Pyramid<T>,
}

impl<T: Scalar> Averages<T> {
    fn new(phi: &LeafFunction<T>, psi: &LeafFunction<T>, w: &Weight<T>) -> Result<Self> {
        check_inputs(phi, psi, w)?;
        let (pw, ps) = w.pyramids();
        Ok(Averages {
            w: pw,
            sigma: ps,
            phi_w: phi.mul(w.as_function())?.pyramid(),
            psi_sigma: psi.mul(w.sigma())?.pyramid(),
        })
    }

    /// `(φw, h^w_I)` and `(ψσ, h^σ_I)`.
    fn weighted_haar_pairings(&self, i: DyadicIndex) -> (T, T) {
        let hw = WeightedHaar::from_child_averages(i, self.w.avg(i.left()), self.w.avg(i.right()));
        let hs = WeightedHaar::from_child_averages(i, self.sigma.avg(i.left()), self.sigma.avg(i.right()));
        (
            hw.pair_with_averages(self.phi_w.avg(i.left()), self.phi_w.avg(i.right())),
            hs.pair_with_averages(self.psi_sigma.avg(i.left()), self.psi_sigma.avg(i.right())),
        )
    }
}

/// The four sums bounding [`key_sum`] after writing `h_I = α h^w_I + β χ_I/√|I|`
/// for both `w` and `σ` and using `|α_I| ≤ √⟨w⟩_I`, `|β_I| = |Δ_I w|/⟨w⟩_I`.
pub fn four_terms<T: Scalar>(phi: &LeafFunction<T>, psi: &LeafFunction<T>, w: &Weight<T>) -> Result<FourTerms<T>> {
    let av = Averages::new(phi, psi, w)?;
    let mut t = FourTerms { term_i: T::zero(), term_ii: T::zero(), term_iii: T::zero(), term_iv: T::zero() };
    for i in DyadicIndex::internal(phi.depth()) {
        let (a, b) = av.weighted_haar_pairings(i);
        let (mw, ms) = (av.w.avg(i), av.sigma.avg(i));
        let rw = av.w.delta(i).abs() / mw;
        let rs = av.sigma.delta(i).abs() / ms;
        let len = i.length::<T>();
        let (pw, qs) = (av.phi_w.avg(i).abs(), av.psi_sigma.avg(i).abs());
        t.term_i += a.abs() * mw.sqrt() * b.abs() * ms.sqrt();
        t.term_ii += pw * rw * b.abs() * ms.sqrt() * len.sqrt();
        t.term_iii += qs * rs * a.abs() * mw.sqrt() * len.sqrt();
        t.term_iv += pw * qs * rw * rs * len;
    }
    Ok(t)
}

/// `M_wφ(x) = max_{I ∋ x} ⟨|φ| w⟩_I / ⟨w⟩_I` over dyadic `I ⊆ [0,1)`.
pub fn maximal_weighted<T: Scalar>(phi: &LeafFunction<T>, w: &Weight<T>) -> Result<LeafFunction<T>> {
    maximal_with(phi, w.as_function())
}

fn maximal_with<T: Scalar>(phi: &LeafFunction<T>, w: &LeafFunction<T>) -> Result<LeafFunction<T>> {
    same_depth(phi, w)?;
    let depth = phi.depth();
    let num = phi.abs().mul(w)?.pyramid();
    let den = w.pyramid();
    let mut running = vec![num.avg(DyadicIndex::ROOT) / den.avg(DyadicIndex::ROOT)];
    for level in 1..depth {
        let ratios: Vec<T> = num.level(level).iter().zip(den.level(level)).map(|(&a, &b)| a / b).collect();
        running = ratios.iter().enumerate().map(|(k, &r)| r.max(running[k / 2])).collect();
    }
    let leaf: Vec<T> = phi.values().iter().enumerate().map(|(k, &v)| v.abs().max(running[k / 2])).collect();
    LeafFunction::new(depth, leaf)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualityProduct<T> {
    /// `∫ M_wφ · M_σψ`.
    pub product: T,
    /// `product / (‖φ‖_w ‖ψ‖_σ)`; zero when either norm vanishes.
    pub ratio: T,
}

pub fn duality_product<T: Scalar>(
    phi: &LeafFunction<T>,
    psi: &LeafFunction<T>,
    w: &Weight<T>,
) -> Result<DualityProduct<T>> {
    check_inputs(phi, psi, w)?;
    let mphi = maximal_with(phi, w.as_function())?;
    let mpsi = maximal_with(psi, w.sigma())?;
    let product = mphi.inner(&mpsi)?;
    let denom = weighted_norm(phi, w)? * weighted_norm(psi, &w.dual())?;
    let ratio = if denom > T::zero() { product / denom } else { T::zero() };
    Ok(DualityProduct { product, ratio })
}

/// Nonnegative masses `α_I` on the internal intervals (heap order).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CarlesonMeasure<T> {
    depth: u32,
    alpha: Vec<T>,
}

impl<T: Scalar> CarlesonMeasure<T> {
    pub fn new(depth: u32, alpha: Vec<T>) -> Result<Self> {
        if alpha.len() != num_internal(depth) {
            return Err(Error::structural(format!("depth {depth} needs {} masses", num_internal(depth))));
        }
        if alpha.iter().any(|&a| !(a >= T::zero())) {
            return Err(Error::domain("Carleson masses must be nonnegative"));
        }
        Ok(CarlesonMeasure { depth, alpha })
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn alpha(&self) -> &[T] {
        &self.alpha
    }

    pub fn mass(&self, i: DyadicIndex) -> T {
        self.alpha[i.heap_index()]
    }

    /// `Σ_{I ⊆ L} α_I` for every internal `L`, heap order.
    pub fn subtree_sums(&self) -> Vec<T> {
        let mut s = self.alpha.clone();
        for h in (0..s.len()).rev() {
            let i = DyadicIndex::from_heap_index(h);
            if i.level + 1 < self.depth {
                s[h] = s[h] + s[i.left().heap_index()] + s[i.right().heap_index()];
            }
        }
        s
    }

    /// `max_L |L|⁻¹ Σ_{I ⊆ L} α_I` with its maximizing `L`.
    pub fn norm_with_witness(&self) -> (T, DyadicIndex) {
        self.subtree_sums()
            .into_iter()
            .enumerate()
            .map(|(h, s)| {
                let i = DyadicIndex::from_heap_index(h);
                (s / i.length::<T>(), i)
            })
            .fold((T::zero(), DyadicIndex::ROOT), |best, cur| if cur.0 > best.0 { cur } else { best })
    }
}

/// `α_I = |Δ_I w| |Δ_I σ| |I|`.
pub fn carleson_measure_of<T: Scalar>(w: &Weight<T>) -> CarlesonMeasure<T> {
    let (pw, ps) = w.pyramids();
    let alpha = DyadicIndex::internal(w.depth()).map(|i| pw.delta(i).abs() * ps.delta(i).abs() * i.length::<T>()).collect();
    CarlesonMeasure { depth: w.depth(), alpha }
}

pub fn carleson_norm<T: Scalar>(m: &CarlesonMeasure<T>) -> T {
    m.norm_with_witness().0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VavoReport<T> {
    pub ratio: T,
    pub interval: DyadicIndex,
    /// Whether `⟨u⟩_I⟨v⟩_I ≤ 1` held (up to rounding slack) for every `I ⊆ L`.
    pub hypothesis_holds: bool,
    pub max_hypothesis_product: T,
}

fn vavo_parts<T: Scalar>(u: &LeafFunction<T>, v: &LeafFunction<T>) -> Result<(Pyramid<T>, Pyramid<T>, Vec<T>)> {
    same_depth(u, v)?;
    if u.values().iter().chain(v.values()).any(|&x| !(x > T::zero())) {
        return Err(Error::domain("u and v must be strictly positive"));
    }
    let (pu, pv) = (u.pyramid(), v.pyramid());
    let alpha = DyadicIndex::internal(u.depth()).map(|i| pu.delta(i).abs() * pv.delta(i).abs() * i.length::<T>()).collect();
    let sums = CarlesonMeasure { depth: u.depth(), alpha }.subtree_sums();
    Ok((pu, pv, sums))
}

fn vavo_at<T: Scalar>(pu: &Pyramid<T>, pv: &Pyramid<T>, sums: &[T], l: DyadicIndex) -> VavoReport<T> {
    let depth = pu.depth();
    let mut max_product = T::neg_infinity();
    for level in l.level..=depth {
        let g = level - l.level;
        let lo = (l.position << g) as usize;
        for k in lo..lo + (1usize << g) {
            let p = pu.level(level)[k] * pv.level(level)[k];
            max_product = max_product.max(p);
        }
    }
    let sum = if l.level < depth { sums[l.heap_index()] } else { T::zero() };
    VavoReport {
        ratio: sum / l.length::<T>() / (pu.avg(l) * pv.avg(l)).sqrt(),
        interval: l,
        hypothesis_holds: max_product <= T::one() + T::lit(ROUNDING_SLACK),
        max_hypothesis_product: max_product,
    }
}

/// `[|L|⁻¹ Σ_{I ⊆ L} |Δ_I u||Δ_I v||I|] / √(⟨u⟩_L⟨v⟩_L)`, with the check of
/// `⟨u⟩_I⟨v⟩_I ≤ 1` on every `I ⊆ L`.
pub fn vavo_ratio<T: Scalar>(u: &LeafFunction<T>, v: &LeafFunction<T>, l: DyadicIndex) -> Result<VavoReport<T>> {
    check_level(l, u.depth())?;
    let (pu, pv, sums) = vavo_parts(u, v)?;
    Ok(vavo_at(&pu, &pv, &sums, l))
}

/// [`vavo_ratio`] maximized over internal `L`.
pub fn vavo_ratio_max<T: Scalar>(u: &LeafFunction<T>, v: &LeafFunction<T>) -> Result<VavoReport<T>> {
    let (pu, pv, sums) = vavo_parts(u, v)?;
    let mut best: Option<VavoReport<T>> = None;
    let mut holds = true;
    for l in DyadicIndex::internal(u.depth()) {
        let r = vavo_at(&pu, &pv, &sums, l);
        holds &= r.hypothesis_holds;
        if best.is_none_or(|b| r.ratio > b.ratio) {
            best = Some(r);
        }
    }
    let mut best = best.expect("depth ≥ 1 has an internal interval");
    best.hypothesis_holds = holds;
    best.max_hypothesis_product = vavo_at(&pu, &pv, &sums, DyadicIndex::ROOT).max_hypothesis_product;
    Ok(best)
}

/// The substitution `u = w/[w]_{A₂}`, `v = σ`.
pub fn vavo_for_weight<T: Scalar>(w: &Weight<T>) -> Result<VavoReport<T>> {
    let q = a2_characteristic(w).characteristic;
    vavo_ratio_max(&w.as_function().scale(T::one() / q), w.sigma())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CarlTrick<T> {
    /// `Σ_I (|⟨φw⟩_I|/⟨w⟩_I)(|⟨ψσ⟩_I|/⟨σ⟩_I) α_I`.
    pub lhs: T,
    /// Carleson norm of `α` times `∫ M_wφ · M_σψ`.
    pub rhs_bound: T,
    pub holds: bool,
}

pub fn carltrick_check<T: Scalar>(phi: &LeafFunction<T>, psi: &LeafFunction<T>, w: &Weight<T>) -> Result<CarlTrick<T>> {
    let av = Averages::new(phi, psi, w)?;
    let m = carleson_measure_of(w);
    let lhs: T = DyadicIndex::internal(phi.depth())
        .map(|i| {
            (av.phi_w.avg(i).abs() / av.w.avg(i)) * (av.psi_sigma.avg(i).abs() / av.sigma.avg(i)) * m.mass(i)
        })
        .sum();
    let rhs_bound = carleson_norm(&m) * duality_product(phi, psi, w)?.product;
    let holds = lhs <= rhs_bound * (T::one() + T::lit(ROUNDING_SLACK)) + T::min_positive_value();
    Ok(CarlTrick { lhs, rhs_bound, holds })
}

/// The left side of the `L`-trick inequality divided by `[w]_{A₂}` times the
/// norm product, under the `‖φ‖_w‖ψ‖_σ` reading and the literal
/// `‖φ‖_σ‖ψ‖_σ` reading.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LtrickRatios<T> {
    pub lhs: T,
    pub w_reading: T,
    pub literal_reading: T,
}

pub fn ltrick_ratios<T: Scalar>(phi: &LeafFunction<T>, psi: &LeafFunction<T>, w: &Weight<T>) -> Result<LtrickRatios<T>> {
    let lhs = four_terms(phi, psi, w)?.term_iv;
    let q = a2_characteristic(w).characteristic;
    let sigma = w.dual();
    let nw = weighted_norm(phi, w)? * weighted_norm(psi, &sigma)?;
    let ns = weighted_norm(phi, &sigma)? * weighted_norm(psi, &sigma)?;
    let div = |n: T| if n > T::zero() { lhs / (q * n) } else { T::zero() };
    Ok(LtrickRatios { lhs, w_reading: div(nw), literal_reading: div(ns) })
}

fn leaf_measures<T: Scalar>(w: &Weight<T>) -> (Vec<T>, Vec<T>) {
    let m = T::pow2(-(w.depth() as i32));
    (w.values().iter().map(|&x| x * m).collect(), w.sigma().values().iter().map(|&x| x * m).collect())
}

fn multiply_functionals<T: Scalar>(funcs: Vec<Functional<T>>, by: &[T]) -> Vec<Functional<T>> {
    funcs
        .into_iter()
        .map(|g| {
            let values = g.values.iter().enumerate().map(|(k, &x)| x * by[g.start + k]).collect();
            Functional { start: g.start, values }
        })
        .collect()
}

/// [`key_sum`] as a form in `(φ, ψ) ∈ L²(w) × L²(σ)`.
pub fn key_sum_form<T: Scalar>(w: &Weight<T>) -> Result<SubBilinearForm<T>> {
    let depth = w.depth();
    let haar = haar_functionals::<T>(depth);
    let left = multiply_functionals(haar.clone(), w.values());
    let right = multiply_functionals(haar, w.sigma().values());
    let pairs = (0..num_internal(depth)).map(|k| Pair { left: k, right: k, coeff: T::one() }).collect();
    let (mw, ms) = leaf_measures(w);
    SubBilinearForm::new(1 << depth, left, right, pairs, mw, ms)
}

/// The first of the [`four_terms`] as a form in `(φ, ψ) ∈ L²(w) × L²(σ)`.
pub fn term_one_form<T: Scalar>(w: &Weight<T>) -> Result<SubBilinearForm<T>> {
    let depth = w.depth();
    let (pw, ps) = w.pyramids();
    let m = T::pow2(-(depth as i32));
    let weighted = |p: &Pyramid<T>, values: &[T]| -> Vec<Functional<T>> {
        DyadicIndex::internal(depth)
            .map(|i| {
                let h = WeightedHaar::from_child_averages(i, p.avg(i.left()), p.avg(i.right()));
                let range = i.leaf_range(depth);
                let half = range.len() / 2;
                let vals = range
                    .clone()
                    .enumerate()
                    .map(|(k, leaf)| if k < half { h.value_left } else { h.value_right } * values[leaf] * m)
                    .collect();
                Functional { start: range.start, values: vals }
            })
            .collect()
    };
    let left = weighted(&pw, w.values());
    let right = weighted(&ps, w.sigma().values());
    let pairs = DyadicIndex::internal(depth)
        .enumerate()
        .map(|(k, i)| Pair { left: k, right: k, coeff: (pw.avg(i) * ps.avg(i)).sqrt() })
        .collect();
    let (mw, ms) = leaf_measures(w);
    SubBilinearForm::new(1 << depth, left, right, pairs, mw, ms)
}

/// Search estimate of `sup key_sum / (‖φ‖_w ‖ψ‖_σ)`.
pub fn key_sum_max<T: Scalar>(w: &Weight<T>, opts: SearchOptions) -> Result<FormMax<T>> {
    key_sum_form(w)?.search_max(opts)
}

/// Search estimate of `sup term_I / (‖φ‖_w ‖ψ‖_σ)`.
pub fn term_one_max<T: Scalar>(w: &Weight<T>, opts: SearchOptions) -> Result<FormMax<T>> {
    term_one_form(w)?.search_max(opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::{gen_cascade, gen_power};
    use approx::assert_abs_diff_eq;

    fn w2() -> Weight<f64> {
        Weight::from_values(1, vec![2.0, 2.0 / 3.0]).unwrap()
    }

    fn lf(depth: u32, v: Vec<f64>) -> LeafFunction<f64> {
        LeafFunction::new(depth, v).unwrap()
    }

    #[test]
    fn key_sum_examples() {
        let one = Weight::constant(3, 1.0).unwrap();
        let h = LeafFunction::haar(3, DyadicIndex::ROOT).unwrap();
        assert_abs_diff_eq!(key_sum(&h, &h, &one).unwrap(), 1.0, epsilon = 1e-14);
        assert_eq!(key_sum(&LeafFunction::constant(3, 2.0).unwrap(), &h, &one).unwrap(), 0.0);
        let p = lf(1, vec![1.0, 0.0]);
        assert_abs_diff_eq!(key_sum(&p, &p, &w2()).unwrap(), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn four_terms_examples() {
        let one = Weight::constant(4, 1.0).unwrap();
        let phi = LeafFunction::from_fn(4, |k| (k as f64).sin()).unwrap();
        let psi = LeafFunction::from_fn(4, |k| (k as f64 * 0.3).cos()).unwrap();
        let t = four_terms(&phi, &psi, &one).unwrap();
        assert_eq!((t.term_ii, t.term_iii, t.term_iv), (0.0, 0.0, 0.0));
        assert_abs_diff_eq!(t.term_i, key_sum(&phi, &psi, &one).unwrap(), epsilon = 1e-14);

        let p = lf(1, vec![1.0, 0.0]);
        let t = four_terms(&p, &p, &w2()).unwrap();
        assert_abs_diff_eq!(t.term_iv, 1.0 / 16.0, epsilon = 1e-15);
        assert_abs_diff_eq!(t.term_i, 0.25, epsilon = 1e-15);
        assert!(key_sum(&p, &p, &w2()).unwrap() <= t.total());
    }

    #[test]
    fn maximal_examples() {
        let w = gen_cascade(5, 0.6, 1).unwrap();
        let m = maximal_weighted(&LeafFunction::constant(5, 1.0).unwrap(), &w).unwrap();
        assert!(m.values().iter().all(|&v| v == 1.0));
        let one = Weight::constant(2, 1.0).unwrap();
        let m = maximal_weighted(&lf(2, vec![1.0, 0.0, 0.0, 0.0]), &one).unwrap();
        assert_eq!(m.values(), &[1.0, 0.5, 0.25, 0.25]);
        let phi = LeafFunction::from_fn(5, |k| (k as f64 * 1.7).sin()).unwrap();
        let m = maximal_weighted(&phi, &w).unwrap();
        for (a, b) in m.values().iter().zip(phi.values()) {
            assert!(*a >= b.abs());
        }
    }

    #[test]
    fn duality_examples() {
        let one = Weight::constant(3, 1.0).unwrap();
        let c = LeafFunction::constant(3, 1.0).unwrap();
        let d = duality_product(&c, &c, &one).unwrap();
        assert_eq!((d.product, d.ratio), (1.0, 1.0));
        let w = gen_cascade(6, 0.7, 2).unwrap();
        let phi = LeafFunction::from_fn(6, |k| (k as f64 * 0.9).sin()).unwrap();
        let psi = LeafFunction::from_fn(6, |k| (k as f64 * 0.4).cos() - 0.2).unwrap();
        assert_eq!(duality_product(&phi, &psi, &w).unwrap(), duality_product(&phi.abs(), &psi, &w).unwrap());
    }

    #[test]
    fn carleson_examples() {
        let m = carleson_measure_of(&Weight::<f64>::constant(4, 3.0).unwrap());
        assert!(m.alpha().iter().all(|&a| a == 0.0));
        assert_eq!(carleson_norm(&m), 0.0);
        let m = carleson_measure_of(&w2());
        assert_abs_diff_eq!(m.mass(DyadicIndex::ROOT), 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(carleson_norm(&m), 1.0 / 3.0, epsilon = 1e-15);
        let w = Weight::from_values(1, vec![4.0, 0.25]).unwrap();
        let m = carleson_measure_of(&w);
        assert_eq!(m.mass(DyadicIndex::ROOT), 225.0 / 64.0);
        assert_eq!(carleson_norm(&m), 225.0 / 64.0);
        assert_abs_diff_eq!(carleson_norm(&m) / a2_characteristic(&w).characteristic, 225.0 / 289.0, epsilon = 1e-15);
    }

    #[test]
    fn carleson_symmetric_in_dual() {
        let w = gen_cascade::<f64>(7, 0.8, 4).unwrap();
        assert_eq!(carleson_measure_of(&w), carleson_measure_of(&w.dual()));
    }

    #[test]
    fn carleson_norm_brute_force() {
        let w = gen_cascade::<f64>(5, 0.7, 9).unwrap();
        let m = carleson_measure_of(&w);
        let brute = DyadicIndex::internal(5)
            .map(|l| {
                DyadicIndex::internal(5).filter(|i| l.contains(i)).map(|i| m.mass(i)).sum::<f64>() / l.length::<f64>()
            })
            .fold(0.0, f64::max);
        assert_abs_diff_eq!(carleson_norm(&m), brute, epsilon = 1e-13);
    }

    #[test]
    fn vavo_examples() {
        let one = LeafFunction::constant(4, 1.0).unwrap();
        let r = vavo_ratio(&one, &one, DyadicIndex::ROOT).unwrap();
        assert_eq!(r.ratio, 0.0);
        assert!(r.hypothesis_holds);
        let w = gen_power::<f64>(6, -0.7).unwrap();
        let r = vavo_for_weight(&w).unwrap();
        assert!(r.hypothesis_holds && r.ratio.is_finite() && r.ratio > 0.0);
        let big = LeafFunction::constant(4, 2.0).unwrap();
        assert!(!vavo_ratio(&big, &one, DyadicIndex::ROOT).unwrap().hypothesis_holds);
    }

    #[test]
    fn carltrick_examples() {
        let one = Weight::constant(3, 1.0).unwrap();
        let phi = LeafFunction::from_fn(3, |k| k as f64).unwrap();
        let c = carltrick_check(&phi, &phi, &one).unwrap();
        assert_eq!(c.lhs, 0.0);
        assert!(c.holds);
        let w = gen_cascade(6, 0.8, 3).unwrap();
        let ones = LeafFunction::constant(6, 1.0).unwrap();
        let c = carltrick_check(&ones, &ones, &w).unwrap();
        let m = carleson_measure_of(&w);
        assert_abs_diff_eq!(c.lhs, m.alpha().iter().sum::<f64>(), epsilon = 1e-12);
        assert_abs_diff_eq!(c.rhs_bound, carleson_norm(&m), epsilon = 1e-12);
        assert!(c.holds);
    }

    #[test]
    fn key_form_matches_direct_sum() {
        let w = gen_cascade(5, 0.6, 8).unwrap();
        let phi = LeafFunction::from_fn(5, |k| (k as f64 * 0.37).sin()).unwrap();
        let psi = LeafFunction::from_fn(5, |k| (k as f64 * 0.71).cos()).unwrap();
        let f = key_sum_form(&w).unwrap();
        assert_abs_diff_eq!(f.value(phi.values(), psi.values()), key_sum(&phi, &psi, &w).unwrap(), epsilon = 1e-13);
        let f = term_one_form(&w).unwrap();
        assert_abs_diff_eq!(f.value(phi.values(), psi.values()), four_terms(&phi, &psi, &w).unwrap().term_i, epsilon = 1e-13);
    }

    #[test]
    fn term_one_max_is_root_mean_product() {
        // h^w_I are orthonormal in L²(w), so the sup is max_I √(⟨w⟩_I⟨σ⟩_I)
        let w = gen_cascade::<f64>(6, 0.8, 2).unwrap();
        let (pw, ps) = w.pyramids();
        let expected = DyadicIndex::internal(6).map(|i| (pw.avg(i) * ps.avg(i)).sqrt()).fold(0.0, f64::max);
        let got = term_one_max(&w, SearchOptions::new(300, 1)).unwrap().value;
        assert_abs_diff_eq!(got, expected, epsilon = 1e-9 * expected);
    }
}
