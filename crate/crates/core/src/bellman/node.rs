//! The node inequality, points of `Ω_Q` produced by dyadic data, and the
//! summed form of the node inequality over a tree.

use serde::{Deserialize, Serialize};

use super::geometry::{in_domain, BellmanPoint, NodeSplit};
use crate::dyadic::{check_level, same_depth, DyadicIndex, LeafFunction};
use crate::weights::{a2_characteristic, Weight};
use crate::{Error, Result, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeDefect<T> {
    /// `B(b) − ¼ Σ B(b_ij)`.
    pub defect: T,
    /// `|α| (|δ₁| + |δ₂|)`.
    pub rhs: T,
    /// `defect / rhs`, absent when `rhs = 0`.
    pub constant: Option<T>,
}

/// Second-order defect of `evaluator` at a split, compared with `|α|(|δ₁| + |δ₂|)`.
pub fn node_defect<T: Scalar>(
    split: &NodeSplit<T>,
    q: T,
    mut evaluator: impl FnMut(&BellmanPoint<T>) -> Result<T>,
) -> Result<NodeDefect<T>> {
    if let Some(p) = split.points().iter().find(|p| !in_domain(p, q)) {
        return Err(Error::domain(format!("split point {p:?} is not in the domain with Q = {q}")));
    }
    let mut quarter = T::zero();
    for g in split.grandchildren() {
        quarter += evaluator(&g)?;
    }
    let defect = evaluator(&split.b)? - quarter * T::lit(0.25);
    let rhs = split.alpha().abs() * (split.delta1().abs() + split.delta2().abs());
    let constant = (rhs > T::zero()).then(|| defect / rhs);
    Ok(NodeDefect { defect, rhs, constant })
}

/// The second term of the first lower estimate of the defect:
/// `½ [(|α−β₁||λ−δ₁| + |α+β₁||λ+δ₁|) + (|α−β₂||λ−δ₂| + |α+β₂||λ+δ₂|)]`,
/// returned as its two brackets.
pub fn d1_brackets<T: Scalar>(split: &NodeSplit<T>) -> (T, T) {
    let (a, l) = (split.alpha(), split.lambda());
    let bracket = |b: T, d: T| (a - b).abs() * (l - d).abs() + (a + b).abs() * (l + d).abs();
    (bracket(split.beta1(), split.delta1()), bracket(split.beta2(), split.delta2()))
}

pub fn d1_lower_bound<T: Scalar>(split: &NodeSplit<T>) -> T {
    let (b1, b2) = d1_brackets(split);
    T::half() * (b1 + b2)
}

/// Averages over `J` of `φ²w, ψ²σ, φ, ψ, w, σ` and the normalized local sum
/// `|J|⁻¹ Σ_{I ⊆ J} |(φw, h_I)||(ψσ, h_I)|`.
///
/// The averages satisfy the defining inequalities of `Ω_Q` with `Q = [w]_{A₂}`
/// exactly in real arithmetic. When rounding leaves `x²` or `y²` above its cap
/// by a few ulps, `X` or `Y` is raised by that many ulps.
pub fn point_from_data<T: Scalar>(
    phi: &LeafFunction<T>,
    psi: &LeafFunction<T>,
    w: &Weight<T>,
    j: DyadicIndex,
) -> Result<(BellmanPoint<T>, T)> {
    same_depth(phi, psi)?;
    same_depth(phi, w.as_function())?;
    check_level(j, phi.depth())?;
    let depth = phi.depth();
    let pw = phi.mul(w.as_function())?.pyramid();
    let ps = psi.mul(w.sigma())?.pyramid();
    let mut local = T::zero();
    for level in j.level..depth {
        for i in j.descendants(level - j.level) {
            local += pw.haar(i).abs() * ps.haar(i).abs();
        }
    }
    let (pu, pv) = w.pyramids();
    let mut p = BellmanPoint::new(
        phi.mul(phi)?.mul(w.as_function())?.pyramid().avg(j),
        psi.mul(psi)?.mul(w.sigma())?.pyramid().avg(j),
        phi.pyramid().avg(j),
        psi.pyramid().avg(j),
        pu.avg(j),
        pv.avg(j),
    );
    for _ in 0..8 {
        if p.x * p.x <= p.X * p.v {
            break;
        }
        p.X += p.X * T::epsilon();
    }
    for _ in 0..8 {
        if p.y * p.y <= p.Y * p.u {
            break;
        }
        p.Y += p.Y * T::epsilon();
    }
    Ok((p, local / j.length::<T>()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeSum<T> {
    /// `|I|⁻¹ Σ_{J ⊆ I} |J| |Δ_J f| (|Δ_{J₋} g| + |Δ_{J₊} g|)`.
    pub lhs: T,
    /// `40 Q (⟨f²w⟩_I + ⟨g²σ⟩_I)`.
    pub scale: T,
    /// `lhs / scale`; zero when the scale vanishes.
    pub constant: T,
}

/// The summed node inequality over the subtree of `I`; `J` ranges over the
/// intervals whose children are not leaves.
pub fn tree_sum<T: Scalar>(f: &LeafFunction<T>, g: &LeafFunction<T>, w: &Weight<T>, i: DyadicIndex) -> Result<TreeSum<T>> {
    same_depth(f, g)?;
    same_depth(f, w.as_function())?;
    check_level(i, f.depth())?;
    let depth = f.depth();
    let (pf, pg) = (f.pyramid(), g.pyramid());
    let mut lhs = T::zero();
    for level in i.level..depth.saturating_sub(1) {
        for jj in i.descendants(level - i.level) {
            let term = pg.delta(jj.left()).abs() + pg.delta(jj.right()).abs();
            lhs += jj.length::<T>() * pf.delta(jj).abs() * term;
        }
    }
    lhs /= i.length::<T>();
    let q = a2_characteristic(w).characteristic;
    let f2w = f.mul(f)?.mul(w.as_function())?.pyramid().avg(i);
    let g2s = g.mul(g)?.mul(w.sigma())?.pyramid().avg(i);
    let scale = T::lit(40.0) * q * (f2w + g2s);
    let constant = if scale > T::zero() { lhs / scale } else { T::zero() };
    Ok(TreeSum { lhs, scale, constant })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bellman::dp::{DpConfig, DpEstimator};
    use crate::weights::gen_cascade;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_split_has_zero_defect() {
        let b = BellmanPoint::new(1.0, 2.0, 0.1, 0.2, 1.0, 1.5);
        let z = BellmanPoint::default();
        let s = NodeSplit::new(b, z, z, z);
        let r = node_defect(&s, 2.0, |p| Ok(p.X + p.Y)).unwrap();
        assert_eq!((r.defect, r.rhs, r.constant), (0.0, 0.0, None));
        let bad = NodeSplit::new(BellmanPoint::new(1.0, 1.0, 3.0, 0.0, 1.0, 1.0), z, z, z);
        assert!(node_defect(&bad, 2.0, |_| Ok(0.0)).is_err());
    }

    #[test]
    fn d1_first_bracket_pattern() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let z = BellmanPoint::default();
        for _ in 0..1000 {
            let alpha: f64 = rng.gen_range(-1.0..1.0);
            let mk = |rng: &mut ChaCha8Rng, bmax: f64| {
                BellmanPoint::new(0.0, 0.0, rng.gen_range(-bmax..=bmax), rng.gen_range(-1.0..1.0), 0.0, 0.0)
            };
            let e1 = mk(&mut rng, alpha.abs() / 2.0);
            let e2 = mk(&mut rng, alpha.abs() / 2.0);
            let d = BellmanPoint::new(0.0, 0.0, alpha, rng.gen_range(-1.0..1.0), 0.0, 0.0);
            let s = NodeSplit::new(z, d, e1, e2);
            let (b1, b2) = d1_brackets(&s);
            assert!(b1 >= alpha.abs() * e1.y.abs() * (1.0 - 1e-12));
            assert!(b2 >= alpha.abs() * e2.y.abs() * (1.0 - 1e-12));
            assert!(d1_lower_bound(&s) >= 0.5 * alpha.abs() * (e1.y.abs() + e2.y.abs()) * (1.0 - 1e-12));
        }
    }

    #[test]
    fn constant_data_point() {
        let one = LeafFunction::constant(3, 1.0).unwrap();
        let w = Weight::constant(3, 1.0).unwrap();
        let (p, s) = point_from_data(&one, &one, &w, DyadicIndex::ROOT).unwrap();
        assert_eq!(p, BellmanPoint::new(1.0, 1.0, 1.0, 1.0, 1.0, 1.0));
        assert_eq!(s, 0.0);
    }

    #[test]
    fn data_points_are_members() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for t in 0..300 {
            let depth = rng.gen_range(1..=7);
            let w = gen_cascade::<f64>(depth, rng.gen_range(0.0..0.95), t).unwrap();
            let phi = LeafFunction::from_fn(depth, |_| rng.gen_range(-1.0..1.0)).unwrap();
            let psi = LeafFunction::from_fn(depth, |_| rng.gen_range(-1.0..1.0)).unwrap();
            let q = a2_characteristic(&w).characteristic;
            for j in DyadicIndex::all(depth) {
                let (p, _) = point_from_data(&phi, &psi, &w, j).unwrap();
                assert!(in_domain(&p, q), "{p:?} at {j} with Q = {q}");
            }
        }
    }

    #[test]
    fn defect_of_dp_surrogate_is_finite() {
        let est = DpEstimator::<f64>::new(2.0, DpConfig { samples: 4, ..DpConfig::default() }).unwrap();
        let b = BellmanPoint::new(1.0, 1.0, 0.1, -0.1, 1.2, 1.1);
        let d = BellmanPoint::new(0.05, 0.0, 0.2, 0.1, 0.0, 0.0);
        let e = BellmanPoint::new(0.0, 0.05, 0.05, 0.2, 0.0, 0.0);
        let s = NodeSplit::new(b, d, e, e);
        let r = node_defect(&s, 2.0, |p| est.estimate(p, 3)).unwrap();
        assert!(r.defect.is_finite() && r.constant.is_some());
    }

    #[test]
    fn tree_sum_unweighted_example() {
        let w = Weight::constant(4, 1.0).unwrap();
        let f = LeafFunction::from_fn(4, |k| (k as f64).sin()).unwrap();
        let r = tree_sum(&f, &f, &w, DyadicIndex::ROOT).unwrap();
        assert!(r.lhs > 0.0 && r.constant > 0.0 && r.constant < 1.0);
        let c = LeafFunction::constant(4, 1.0).unwrap();
        assert_eq!(tree_sum(&c, &f, &w, DyadicIndex::ROOT).unwrap().lhs, 0.0);
    }
}
