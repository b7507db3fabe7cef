//! The domain `Ω_Q`, closed-form segment containment, and the two lemmas
//! that repair the lack of convexity of `Ω_Q`.

use std::ops::{Add, Sub};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, Scalar};

/// Relative slack used when checking lemma conclusions.
pub const LEMMA_SLACK: f64 = 1e-12;
/// The constant the proof of the triangle lemma produces.
pub const TRIANGLE_PROOF_K: f64 = 4.5;
/// The constant in the statements of both lemmas.
pub const STATEMENT_K: f64 = 40.0;

/// `(X, Y, x, y, u, v)`; membership in `Ω_Q` is checked separately.
#[allow(non_snake_case)]
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct BellmanPoint<T> {
    pub X: T,
    pub Y: T,
    pub x: T,
    pub y: T,
    pub u: T,
    pub v: T,
}

#[allow(non_snake_case)]
impl<T: Scalar> BellmanPoint<T> {
    pub fn new(X: T, Y: T, x: T, y: T, u: T, v: T) -> Self {
        BellmanPoint { X, Y, x, y, u, v }
    }

    pub fn from_array(a: [T; 6]) -> Self {
        BellmanPoint::new(a[0], a[1], a[2], a[3], a[4], a[5])
    }

    pub fn to_array(self) -> [T; 6] {
        [self.X, self.Y, self.x, self.y, self.u, self.v]
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|c| c.is_finite())
    }

    pub fn scale(self, c: T) -> Self {
        self.map(|a| a * c)
    }

    pub fn map(self, f: impl Fn(T) -> T) -> Self {
        BellmanPoint::from_array(self.to_array().map(f))
    }

    pub fn midpoint(self, other: Self) -> Self {
        (self + other).scale(T::half())
    }

    /// `self + t (other − self)`.
    pub fn lerp(self, other: Self, t: T) -> Self {
        self + (other - self).scale(t)
    }

    /// The symmetry `(X, x, v) ↔ (Y, y, u)` of the domain.
    pub fn swapped(self) -> Self {
        BellmanPoint::new(self.Y, self.X, self.y, self.x, self.v, self.u)
    }
}

impl<T: Scalar> Add for BellmanPoint<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let (a, b) = (self.to_array(), o.to_array());
        BellmanPoint::from_array(std::array::from_fn(|k| a[k] + b[k]))
    }
}

impl<T: Scalar> Sub for BellmanPoint<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        let (a, b) = (self.to_array(), o.to_array());
        BellmanPoint::from_array(std::array::from_fn(|k| a[k] - b[k]))
    }
}

/// `Ω_Q`, `Q ≥ 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OmegaDomain<T> {
    q: T,
}

impl<T: Scalar> OmegaDomain<T> {
    pub fn new(q: T) -> Result<Self> {
        if !(q >= T::one()) || !q.is_finite() {
            return Err(Error::domain(format!("domain parameter must be finite and ≥ 1, got {q}")));
        }
        Ok(OmegaDomain { q })
    }

    pub fn q(&self) -> T {
        self.q
    }

    pub fn contains(&self, p: &BellmanPoint<T>) -> bool {
        in_domain(p, self.q)
    }

    pub fn contains_segment(&self, p: &BellmanPoint<T>, q: &BellmanPoint<T>) -> bool {
        segment_in_domain(p, q, self.q)
    }
}

/// `X, Y, u, v > 0`, `x² ≤ Xv`, `y² ≤ Yu`, `1 ≤ uv ≤ Q`, compared exactly.
pub fn in_domain<T: Scalar>(p: &BellmanPoint<T>, q: T) -> bool {
    let zero = T::zero();
    let uv = p.u * p.v;
    p.is_finite()
        && p.X > zero
        && p.Y > zero
        && p.u > zero
        && p.v > zero
        && p.x * p.x <= p.X * p.v
        && p.y * p.y <= p.Y * p.u
        && T::one() <= uv
        && uv <= q
}

/// Quadratic `c0 + c1 t + c2 t²`.
#[derive(Clone, Copy, Debug)]
struct Quad<T> {
    c1: T,
    c2: T,
}

impl<T: Scalar> Quad<T> {
    /// Interior critical point in `(0, 1)`, if any.
    fn vertex(&self) -> Option<T> {
        if self.c2 == T::zero() {
            return None;
        }
        let t = -self.c1 / (T::two() * self.c2);
        (t > T::zero() && t < T::one()).then_some(t)
    }
}

/// Quadratic coefficients of `x² − Xv`, `y² − Yu` and `uv` along `p + t (q − p)`.
fn segment_quads<T: Scalar>(p: &BellmanPoint<T>, q: &BellmanPoint<T>) -> [Quad<T>; 3] {
    let d = *q - *p;
    let two = T::two();
    [
        Quad { c1: two * p.x * d.x - p.X * d.v - p.v * d.X, c2: d.x * d.x - d.X * d.v },
        Quad { c1: two * p.y * d.y - p.Y * d.u - p.u * d.Y, c2: d.y * d.y - d.Y * d.u },
        Quad { c1: p.u * d.v + p.v * d.u, c2: d.u * d.v },
    ]
}

/// Exact containment of the closed segment `[p, q]` in `Ω_Q`. Every
/// constraint is linear or quadratic along the segment, so it suffices to
/// test the endpoints and the interior vertex of each parabola that opens
/// towards violation; vertices are tested on the interpolated point.
pub fn segment_in_domain<T: Scalar>(p: &BellmanPoint<T>, q: &BellmanPoint<T>, big_q: T) -> bool {
    if !in_domain(p, big_q) || !in_domain(q, big_q) {
        return false;
    }
    let [qx, qy, quv] = segment_quads(p, q);
    let at = |t: T| p.lerp(*q, t);
    if qx.c2 < T::zero() {
        if let Some(t) = qx.vertex() {
            let c = at(t);
            if c.x * c.x > c.X * c.v {
                return false;
            }
        }
    }
    if qy.c2 < T::zero() {
        if let Some(t) = qy.vertex() {
            let c = at(t);
            if c.y * c.y > c.Y * c.u {
                return false;
            }
        }
    }
    if let Some(t) = quv.vertex() {
        let c = at(t);
        let uv = c.u * c.v;
        if (quv.c2 < T::zero() && uv > big_q) || (quv.c2 > T::zero() && uv < T::one()) {
            return false;
        }
    }
    true
}

/// `max_t u(t) v(t)` along `[p, q]`.
pub fn segment_max_uv<T: Scalar>(p: &BellmanPoint<T>, q: &BellmanPoint<T>) -> T {
    let quv = segment_quads(p, q)[2];
    let mut m = (p.u * p.v).max(q.u * q.v);
    if quv.c2 < T::zero() {
        if let Some(t) = quv.vertex() {
            let c = p.lerp(*q, t);
            m = m.max(c.u * c.v);
        }
    }
    m
}

/// Smallest `k ≥ 1` with `[p, q] ⊆ Ω_{kQ}`, for endpoints already in `Ω_Q`.
/// Only `uv ≤ kQ` can fail inside: the remaining constraints cut out convex sets.
pub fn segment_min_k<T: Scalar>(p: &BellmanPoint<T>, q: &BellmanPoint<T>, big_q: T) -> T {
    (segment_max_uv(p, q) / big_q).max(T::one())
}

fn within_k<T: Scalar>(min_k: T, k: f64) -> bool {
    min_k <= T::lit(k * (1.0 + LEMMA_SLACK))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriangleReport<T> {
    pub vacuous: bool,
    /// Smallest `k` with `[C, A], [C, B] ⊆ Ω_{kQ}`.
    pub min_k: Option<T>,
    pub holds_proof_k: Option<bool>,
    pub holds_statement_k: Option<bool>,
}

/// Given `A, B, C ∈ Ω_Q` with `[A, B] ⊆ Ω_Q` and `[C, M] ⊆ Ω_Q`, `M = (A+B)/2`,
/// measure how far `[C, A]` and `[C, B]` leave `Ω_Q`.
pub fn triangle_lemma_check<T: Scalar>(
    a: &BellmanPoint<T>,
    b: &BellmanPoint<T>,
    c: &BellmanPoint<T>,
    q: T,
) -> TriangleReport<T> {
    let m = a.midpoint(*b);
    let premises = in_domain(a, q) && in_domain(b, q) && in_domain(c, q) && segment_in_domain(a, b, q) && segment_in_domain(c, &m, q);
    if !premises {
        return TriangleReport { vacuous: true, min_k: None, holds_proof_k: None, holds_statement_k: None };
    }
    let k = segment_min_k(c, a, q).max(segment_min_k(c, b, q));
    TriangleReport {
        vacuous: false,
        min_k: Some(k),
        holds_proof_k: Some(within_k(k, TRIANGLE_PROOF_K)),
        holds_statement_k: Some(within_k(k, STATEMENT_K)),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarycenterReport<T> {
    pub vacuous: bool,
    /// Smallest `k` with every `[P, P_i] ⊆ Ω_{kQ}`.
    pub min_k: Option<T>,
    pub holds_statement_k: Option<bool>,
}

/// With `P` the barycenter of `P_1..P_4` and all five points in `Ω_Q`,
/// measure how far the segments `[P, P_i]` leave `Ω_Q`.
pub fn barycenter_lemma_check<T: Scalar>(points: &[BellmanPoint<T>; 4], q: T) -> BarycenterReport<T> {
    let p = barycenter(points);
    if !in_domain(&p, q) || points.iter().any(|pi| !in_domain(pi, q)) {
        return BarycenterReport { vacuous: true, min_k: None, holds_statement_k: None };
    }
    let k = points.iter().map(|pi| segment_min_k(&p, pi, q)).fold(T::one(), T::max);
    BarycenterReport { vacuous: false, min_k: Some(k), holds_statement_k: Some(within_k(k, STATEMENT_K)) }
}

fn barycenter<T: Scalar>(points: &[BellmanPoint<T>; 4]) -> BellmanPoint<T> {
    (points[0] + points[1] + points[2] + points[3]).scale(T::lit(0.25))
}

/// A grandparent `b`, its children `b± = b ± d` and grandchildren
/// `b₊± = b₊ ± e1`, `b₋± = b₋ ± e2`. `α, λ` are the `x, y` components of `d`;
/// `β₁, δ₁` and `β₂, δ₂` those of `e1` and `e2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeSplit<T> {
    pub b: BellmanPoint<T>,
    pub d: BellmanPoint<T>,
    pub e1: BellmanPoint<T>,
    pub e2: BellmanPoint<T>,
}

impl<T: Scalar> NodeSplit<T> {
    pub fn new(b: BellmanPoint<T>, d: BellmanPoint<T>, e1: BellmanPoint<T>, e2: BellmanPoint<T>) -> Self {
        NodeSplit { b, d, e1, e2 }
    }

    /// The split whose four grandchildren are the given points, in the order
    /// `b₊₊, b₊₋, b₋₊, b₋₋`.
    pub fn from_grandchildren(g: &[BellmanPoint<T>; 4]) -> Self {
        let bp = g[0].midpoint(g[1]);
        let bm = g[2].midpoint(g[3]);
        let b = bp.midpoint(bm);
        NodeSplit { b, d: (bp - bm).scale(T::half()), e1: (g[0] - g[1]).scale(T::half()), e2: (g[2] - g[3]).scale(T::half()) }
    }

    pub fn alpha(&self) -> T {
        self.d.x
    }
    pub fn lambda(&self) -> T {
        self.d.y
    }
    pub fn beta1(&self) -> T {
        self.e1.x
    }
    pub fn delta1(&self) -> T {
        self.e1.y
    }
    pub fn beta2(&self) -> T {
        self.e2.x
    }
    pub fn delta2(&self) -> T {
        self.e2.y
    }

    pub fn b_plus(&self) -> BellmanPoint<T> {
        self.b + self.d
    }
    pub fn b_minus(&self) -> BellmanPoint<T> {
        self.b - self.d
    }

    /// `b₊₊, b₊₋, b₋₊, b₋₋`.
    pub fn grandchildren(&self) -> [BellmanPoint<T>; 4] {
        let (p, m) = (self.b_plus(), self.b_minus());
        [p + self.e1, p - self.e1, m + self.e2, m - self.e2]
    }

    /// `b, b₊, b₋` followed by the grandchildren.
    pub fn points(&self) -> [BellmanPoint<T>; 7] {
        let g = self.grandchildren();
        [self.b, self.b_plus(), self.b_minus(), g[0], g[1], g[2], g[3]]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApplicationReport<T> {
    pub vacuous: bool,
    /// Smallest `k` with `[b, b±] ⊆ Ω_{kQ}`; the text claims `k = 2`.
    pub children_k: Option<T>,
    /// Smallest `k` with `[b, b_ij] ⊆ Ω_{kQ}`; the text claims `k = 40`.
    pub grandchildren_k: Option<T>,
    pub holds: Option<bool>,
}

/// The way the barycenter lemma is used at a node: all seven points of the
/// split in `Ω_Q`, then `[b, b±] ⊆ Ω_{2Q}` and `[b, b_ij] ⊆ Ω_{40Q}`.
pub fn application_pattern_check<T: Scalar>(split: &NodeSplit<T>, q: T) -> ApplicationReport<T> {
    if split.points().iter().any(|p| !in_domain(p, q)) {
        return ApplicationReport { vacuous: true, children_k: None, grandchildren_k: None, holds: None };
    }
    let b = split.b;
    let ck = segment_min_k(&b, &split.b_plus(), q).max(segment_min_k(&b, &split.b_minus(), q));
    let gk = split.grandchildren().iter().map(|g| segment_min_k(&b, g, q)).fold(T::one(), T::max);
    ApplicationReport {
        vacuous: false,
        children_k: Some(ck),
        grandchildren_k: Some(gk),
        holds: Some(within_k(ck, 2.0) && within_k(gk, STATEMENT_K)),
    }
}

/// A random point of `Ω_Q`: `uv` log-uniform on `[1, Q]`, split into `u, v`
/// log-uniformly, `X, Y` log-uniform on `[0.1, 10]`, and `x, y` uniform
/// fractions of their caps `√(Xv)`, `√(Yu)`.
pub fn sample_point<T: Scalar, R: Rng>(rng: &mut R, q: f64) -> BellmanPoint<T> {
    let r = (rng.gen::<f64>() * q.ln()).exp().clamp(1.0, q);
    let spread = (4.0 * q).ln() + 1.0;
    let u = (0.5 * r.ln() + rng.gen_range(-spread..=spread)).exp();
    let v = r / u;
    let big_x = (rng.gen_range(-1.0..=1.0) * 10f64.ln()).exp();
    let big_y = (rng.gen_range(-1.0..=1.0) * 10f64.ln()).exp();
    let x = rng.gen_range(-1.0..=1.0) * (big_x * v).sqrt();
    let y = rng.gen_range(-1.0..=1.0) * (big_y * u).sqrt();
    let a = [big_x, big_y, x, y, u, v];
    let p = BellmanPoint::from_array(a.map(T::lit));
    // rounding can push uv or x² across a boundary by an ulp; resample rarely
    if in_domain(&p, T::lit(q)) {
        p
    } else {
        sample_point(rng, q)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lemma {
    Triangle,
    Barycenter,
    Application,
}

impl Lemma {
    pub fn name(self) -> &'static str {
        match self {
            Lemma::Triangle => "triangle",
            Lemma::Barycenter => "barycenter",
            Lemma::Application => "application",
        }
    }

    fn constant(self) -> f64 {
        match self {
            Lemma::Triangle => TRIANGLE_PROOF_K,
            _ => STATEMENT_K,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub lemma: String,
    pub q: f64,
    /// Premise-valid trials.
    pub trials: usize,
    /// Samples rejected because a premise failed.
    pub vacuous: usize,
    /// The smallest `k` that worked for every trial.
    pub min_k_holding: f64,
    pub worst_case_point: Vec<BellmanPoint<f64>>,
    /// The constant tested (`4.5` for the triangle lemma, `40` otherwise).
    pub k_tested: f64,
    pub counterexamples: usize,
}

struct Trial {
    k: f64,
    holds: bool,
    points: Vec<BellmanPoint<f64>>,
}

fn one_trial(lemma: Lemma, rng: &mut ChaCha8Rng, q: f64) -> Option<Trial> {
    match lemma {
        Lemma::Triangle => {
            let pts: [BellmanPoint<f64>; 3] = std::array::from_fn(|_| sample_point(rng, q));
            let r = triangle_lemma_check(&pts[0], &pts[1], &pts[2], q);
            r.min_k.map(|k| Trial { k, holds: r.holds_proof_k == Some(true), points: pts.to_vec() })
        }
        Lemma::Barycenter => {
            let pts: [BellmanPoint<f64>; 4] = std::array::from_fn(|_| sample_point(rng, q));
            let r = barycenter_lemma_check(&pts, q);
            r.min_k.map(|k| Trial { k, holds: r.holds_statement_k == Some(true), points: pts.to_vec() })
        }
        Lemma::Application => {
            let pts: [BellmanPoint<f64>; 4] = std::array::from_fn(|_| sample_point(rng, q));
            let split = NodeSplit::from_grandchildren(&pts);
            let r = application_pattern_check(&split, q);
            let k = r.children_k.zip(r.grandchildren_k).map(|(c, g)| c.max(g))?;
            Some(Trial { k, holds: r.holds == Some(true), points: split.points().to_vec() })
        }
    }
}

const CHUNK: usize = 2000;
/// Sampling gives up after this many draws per requested trial; for `Q = 1`
/// no segment joining distinct points of the hyperbola stays in the domain.
const MAX_ATTEMPTS_PER_TRIAL: usize = 1000;

/// Randomized verification of a lemma: sample until `trials` premise-valid
/// instances have been checked (or the attempt budget runs out, in which case
/// the report holds fewer trials). Deterministic in `seed` whatever the thread
/// count, since every chunk of trials owns its own random stream.
pub fn lemma_campaign(lemma: Lemma, q: f64, trials: usize, seed: u64) -> Result<LemmaReport> {
    if !(q >= 1.0) || !q.is_finite() {
        return Err(Error::domain(format!("domain parameter must be finite and ≥ 1, got {q}")));
    }
    let chunks = trials.div_ceil(CHUNK);
    let results: Vec<(usize, usize, usize, Option<Trial>)> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let quota = CHUNK.min(trials - chunk * CHUNK);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk as u64);
            let (mut valid, mut vacuous, mut failed) = (0, 0, 0);
            let mut worst: Option<Trial> = None;
            while valid < quota && valid + vacuous < quota * MAX_ATTEMPTS_PER_TRIAL {
                match one_trial(lemma, &mut rng, q) {
                    None => vacuous += 1,
                    Some(t) => {
                        valid += 1;
                        failed += usize::from(!t.holds);
                        if worst.as_ref().is_none_or(|w| t.k > w.k) {
                            worst = Some(t);
                        }
                    }
                }
            }
            (valid, vacuous, failed, worst)
        })
        .collect();
    let mut report = LemmaReport {
        lemma: lemma.name().to_string(),
        q,
        trials: 0,
        vacuous: 0,
        min_k_holding: 1.0,
        worst_case_point: Vec::new(),
        k_tested: lemma.constant(),
        counterexamples: 0,
    };
    for (valid, vacuous, failed, worst) in results {
        report.trials += valid;
        report.vacuous += vacuous;
        report.counterexamples += failed;
        if let Some(w) = worst {
            if report.worst_case_point.is_empty() || w.k > report.min_k_holding {
                report.min_k_holding = w.k;
                report.worst_case_point = w.points;
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(a: [f64; 6]) -> BellmanPoint<f64> {
        BellmanPoint::from_array(a)
    }

    #[test]
    fn membership_examples() {
        assert!(in_domain(&pt([1.0, 1.0, 0.0, 0.0, 1.0, 1.0]), 1.0));
        assert!(!in_domain(&pt([1.0, 1.0, 2.0, 0.0, 1.0, 1.0]), 100.0));
        assert!(in_domain(&pt([1.0, 1.0, 1.0, 1.0, 2.0, 1.5]), 3.0));
        assert!(!in_domain(&pt([1.0, 1.0, 0.0, 0.0, 0.5, 1.0]), 3.0));
        assert!(!in_domain(&pt([-1.0, 1.0, 0.0, 0.0, 1.0, 1.0]), 3.0));
        assert!(!in_domain(&pt([1.0, 1.0, 0.0, f64::NAN, 1.0, 1.0]), 3.0));
        assert!(OmegaDomain::new(0.5).is_err());
    }

    #[test]
    fn hyperbola_chord() {
        let p = pt([10.0, 10.0, 0.0, 0.0, 1.0, 3.0]);
        let q = pt([10.0, 10.0, 0.0, 0.0, 3.0, 1.0]);
        assert!(!segment_in_domain(&p, &q, 3.0));
        assert!(segment_in_domain(&p, &q, 4.0));
        assert_eq!(segment_max_uv(&p, &q), 4.0);
        assert!(segment_in_domain(&p, &p, 3.0));
    }

    #[test]
    fn increasing_segments_stay_inside() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut n = 0;
        while n < 500 {
            let a = sample_point::<f64, _>(&mut rng, 5.0);
            let b = sample_point::<f64, _>(&mut rng, 5.0);
            if (b.u - a.u) * (b.v - a.v) >= 0.0 {
                assert!(segment_in_domain(&a, &b, 5.0));
                n += 1;
            }
        }
    }

    #[test]
    fn x_constraint_vertex() {
        // x moves while X stays and v dips: the cap bulges outward only at the ends
        let p = pt([1.0, 1.0, 1.0, 0.0, 1.0, 1.0]);
        let q = pt([1.0, 1.0, -1.0, 0.0, 1.0, 1.0]);
        assert!(segment_in_domain(&p, &q, 1.0));
        let p = pt([1.0, 1.0, 0.9, 0.0, 1.0, 1.0]);
        let q = pt([4.0, 1.0, 0.0, 0.0, 1.0, 1.0]);
        assert!(segment_in_domain(&p, &q, 1.0));
    }

    #[test]
    fn degenerate_lemma_inputs() {
        let a = pt([1.0, 2.0, 0.3, -0.2, 1.5, 1.0]);
        let r = triangle_lemma_check(&a, &a, &a, 2.0);
        assert_eq!(r.min_k, Some(1.0));
        assert_eq!(r.holds_proof_k, Some(true));
        let r = barycenter_lemma_check(&[a; 4], 2.0);
        assert_eq!(r.min_k, Some(1.0));
        let far = pt([1.0, 1.0, 0.0, 0.0, 1.0, 3.0]);
        let far2 = pt([1.0, 1.0, 0.0, 0.0, 3.0, 1.0]);
        // C = M-chord violates [C, M] ⊆ Ω_3
        let r = triangle_lemma_check(&far, &far, &far2, 3.0);
        assert!(r.vacuous);
        let r = barycenter_lemma_check(&[far, far, far2, far2], 3.0);
        assert!(r.vacuous);
    }

    #[test]
    fn split_points_are_nested_midpoints() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g: [BellmanPoint<f64>; 4] = std::array::from_fn(|_| sample_point(&mut rng, 3.0));
        let s = NodeSplit::from_grandchildren(&g);
        let back = s.grandchildren();
        for k in 0..4 {
            for (a, b) in back[k].to_array().iter().zip(g[k].to_array()) {
                assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
            }
        }
    }

    #[test]
    fn small_campaigns() {
        for lemma in [Lemma::Triangle, Lemma::Barycenter, Lemma::Application] {
            let r = lemma_campaign(lemma, 4.0, 3000, 1).unwrap();
            assert_eq!(r.trials, 3000);
            assert_eq!(r.counterexamples, 0, "{r:?}");
            assert!(r.min_k_holding >= 1.0);
            assert_eq!(r, lemma_campaign(lemma, 4.0, 3000, 1).unwrap());
        }
    }
}
