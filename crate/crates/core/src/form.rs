//! Sub-bilinear forms `Φ(f₁, f₂) = Σ_{(p,q)} c_{pq} |a_p(f₁)| |b_q(f₂)|` over
//! leaf functions, with `a_p`, `b_q` linear functionals, `c_{pq} ≥ 0`, and
//! `f₁`, `f₂` measured in weighted `L²` norms `‖f‖² = Σ_k μ_k f_k²`.
//!
//! Every shift and every sum of the embedding chain has this shape. The
//! supremum of `Φ` over the unit balls is computed in two ways:
//!
//! - exactly, through the identity `|a||b| = max_{s,t=±1} s·t·a·b`: the sup of
//!   `Φ` is the max over sign patterns of the top singular value of an
//!   ordinary bilinear form. When each right functional `b_q` occurs in a
//!   single pair (true for dyadic shifts, where `J` has a unique ancestor `I`
//!   at distance `n`), the pattern depends only on the products `s_p t_q`,
//!   so `2^{pairs − 1}` patterns suffice;
//! - from below, by alternating maximization: with `f₂` fixed and signs
//!   `s_p` chosen for `a_p(f₁)`, the optimal `f₁` is a closed-form weighted
//!   normalization. The signs are improved by single flips first, which
//!   only needs the Gram matrix of the functionals. The objective never
//!   decreases.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::linalg::{top_singular, Mat};
use crate::{Error, Result, Scalar};

/// Largest leaf count accepted by the exhaustive solver (depth 4).
pub const EXACT_MAX_LEAVES: usize = 16;
/// Largest number of sign-carrying pairs accepted by the exhaustive solver.
pub const EXACT_MAX_PAIRS: usize = 15;
/// Largest number of functionals for the unfolded `(s, t)` enumeration.
pub const FULL_MAX_FUNCTIONALS: usize = 24;

/// A linear functional `f ↦ Σ_k values[k]·f[start + k]` with contiguous support.
#[derive(Clone, Debug, PartialEq)]
pub struct Functional<T> {
    pub start: usize,
    pub values: Vec<T>,
}

impl<T: Scalar> Functional<T> {
    pub fn apply(&self, f: &[T]) -> T {
        self.values.iter().zip(&f[self.start..]).map(|(&g, &x)| g * x).sum()
    }

    fn add_scaled_to(&self, out: &mut [T], z: T) {
        for (o, &g) in out[self.start..].iter_mut().zip(&self.values) {
            *o += z * g;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pair<T> {
    pub left: usize,
    pub right: usize,
    pub coeff: T,
}

#[derive(Clone, Debug)]
pub struct SubBilinearForm<T> {
    leaves: usize,
    left: Vec<Functional<T>>,
    right: Vec<Functional<T>>,
    pairs: Vec<Pair<T>>,
    left_measure: Vec<T>,
    right_measure: Vec<T>,
}

/// Maximizer of a form over the two unit balls.
#[derive(Clone, Debug, PartialEq)]
pub struct FormMax<T> {
    pub value: T,
    pub f1: Vec<T>,
    pub f2: Vec<T>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchOptions {
    pub iters: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl SearchOptions {
    pub const DEFAULT_RESTARTS: usize = 24;

    pub fn new(iters: usize, seed: u64) -> Self {
        SearchOptions { iters, restarts: Self::DEFAULT_RESTARTS, seed }
    }
}

impl<T: Scalar> SubBilinearForm<T> {
    pub fn new(
        leaves: usize,
        left: Vec<Functional<T>>,
        right: Vec<Functional<T>>,
        pairs: Vec<Pair<T>>,
        left_measure: Vec<T>,
        right_measure: Vec<T>,
    ) -> Result<Self> {
        if left_measure.len() != leaves || right_measure.len() != leaves {
            return Err(Error::structural("measure length differs from leaf count"));
        }
        if left_measure.iter().chain(&right_measure).any(|&m| !(m > T::zero())) {
            return Err(Error::domain("measures must be strictly positive"));
        }
        for g in left.iter().chain(&right) {
            if g.start + g.values.len() > leaves {
                return Err(Error::structural("functional support exceeds leaf count"));
            }
        }
        for p in &pairs {
            if p.left >= left.len() || p.right >= right.len() {
                return Err(Error::structural("pair refers to a missing functional"));
            }
            if !(p.coeff >= T::zero()) {
                return Err(Error::domain("pair coefficients must be nonnegative"));
            }
        }
        Ok(SubBilinearForm { leaves, left, right, pairs, left_measure, right_measure })
    }

    pub fn leaves(&self) -> usize {
        self.leaves
    }

    pub fn pairs(&self) -> &[Pair<T>] {
        &self.pairs
    }

    pub fn left_coefficients(&self, f1: &[T]) -> Vec<T> {
        self.left.iter().map(|g| g.apply(f1)).collect()
    }

    pub fn right_coefficients(&self, f2: &[T]) -> Vec<T> {
        self.right.iter().map(|g| g.apply(f2)).collect()
    }

    pub fn value(&self, f1: &[T], f2: &[T]) -> T {
        let a = self.left_coefficients(f1);
        let b = self.right_coefficients(f2);
        self.pairs.iter().map(|p| p.coeff * a[p.left].abs() * b[p.right].abs()).sum()
    }

    pub fn left_norm(&self, f: &[T]) -> T {
        weighted_l2(f, &self.left_measure)
    }

    pub fn right_norm(&self, f: &[T]) -> T {
        weighted_l2(f, &self.right_measure)
    }

    /// `Φ(f₁, f₂) / (‖f₁‖ ‖f₂‖)`, zero when either norm vanishes.
    pub fn ratio(&self, f1: &[T], f2: &[T]) -> T {
        let d = self.left_norm(f1) * self.right_norm(f2);
        if d > T::zero() {
            self.value(f1, f2) / d
        } else {
            T::zero()
        }
    }

    fn active_pairs(&self) -> Vec<Pair<T>> {
        self.pairs.iter().copied().filter(|p| p.coeff > T::zero()).collect()
    }

    /// True when each right functional appears in at most one active pair.
    pub fn is_star_forest(&self) -> bool {
        let mut seen = vec![false; self.right.len()];
        for p in self.active_pairs() {
            if std::mem::replace(&mut seen[p.right], true) {
                return false;
            }
        }
        true
    }

    fn scaled_vectors(&self) -> (Vec<Vec<T>>, Vec<Vec<T>>) {
        let dense = |g: &Functional<T>, mu: &[T]| {
            let mut v = vec![T::zero(); self.leaves];
            for (k, &x) in g.values.iter().enumerate() {
                v[g.start + k] = x / mu[g.start + k].sqrt();
            }
            v
        };
        (
            self.left.iter().map(|g| dense(g, &self.left_measure)).collect(),
            self.right.iter().map(|g| dense(g, &self.right_measure)).collect(),
        )
    }

    fn check_exact_size(&self, sign_bits: usize) -> Result<()> {
        if self.leaves > EXACT_MAX_LEAVES || sign_bits > EXACT_MAX_PAIRS {
            return Err(Error::domain(format!(
                "exhaustive mode needs at most {EXACT_MAX_LEAVES} leaves and {EXACT_MAX_PAIRS} sign-carrying pairs \
                 (got {} leaves, {sign_bits} pairs); use the alternating search instead",
                self.leaves
            )));
        }
        Ok(())
    }

    /// Exact supremum. Uses the folded enumeration over pair signs when the
    /// form is a star forest and the full `(s, t)` enumeration otherwise.
    pub fn exact_max(&self) -> Result<FormMax<T>> {
        if self.is_star_forest() {
            let pairs = self.active_pairs();
            self.check_exact_size(pairs.len())?;
            let (pv, rv) = self.scaled_vectors();
            let n = self.leaves;
            let m = pairs.len();
            if m == 0 {
                return Ok(self.zero_max());
            }
            // ε_0 = +1 fixed (global flip); remaining bits split into a parallel
            // prefix and a Gray-coded suffix.
            let free = m - 1;
            let hi = free.min(6);
            let lo = free - hi;
            let rank_one = |a: &mut Mat<T>, pair: &Pair<T>, scale: T| {
                let (u, v) = (&pv[pair.left], &rv[pair.right]);
                for i in 0..n {
                    if u[i] == T::zero() {
                        continue;
                    }
                    let ui = u[i] * scale;
                    for j in 0..n {
                        a.data[i * n + j] += ui * v[j];
                    }
                }
            };
            let sign_of = |pattern: u64, k: usize| if k == 0 || (pattern >> (k - 1)) & 1 == 0 { T::one() } else { -T::one() };
            let best = (0u64..(1u64 << hi))
                .into_par_iter()
                .map(|chunk| {
                    let base = chunk << lo;
                    let mut a = Mat::zeros(n);
                    for (k, pair) in pairs.iter().enumerate() {
                        rank_one(&mut a, pair, pair.coeff * sign_of(base, k));
                    }
                    let mut best = (top_singular(&a).0, base);
                    let mut gray = 0u64;
                    for g in 1u64..(1u64 << lo) {
                        let bit = g.trailing_zeros() as usize;
                        let was = sign_of(base | gray, bit + 1);
                        gray ^= 1 << bit;
                        rank_one(&mut a, &pairs[bit + 1], -T::two() * was * pairs[bit + 1].coeff);
                        let s = top_singular(&a).0;
                        if s > best.0 {
                            best = (s, base | gray);
                        }
                    }
                    best
                })
                .reduce(|| (T::neg_infinity(), u64::MAX), pick_best);
            let mut a = Mat::zeros(n);
            for (k, pair) in pairs.iter().enumerate() {
                rank_one(&mut a, pair, pair.coeff * sign_of(best.1, k));
            }
            Ok(self.witness_from_matrix(&a))
        } else {
            self.exact_max_full()
        }
    }

    /// Exact supremum by enumerating left signs `s` and right signs `t`
    /// independently, without folding. Exponential in the number of
    /// functionals; the reference the folded enumeration is checked against.
    pub fn exact_max_full(&self) -> Result<FormMax<T>> {
        let pairs = self.active_pairs();
        let mut lefts: Vec<usize> = pairs.iter().map(|p| p.left).collect();
        let mut rights: Vec<usize> = pairs.iter().map(|p| p.right).collect();
        lefts.sort_unstable();
        lefts.dedup();
        rights.sort_unstable();
        rights.dedup();
        if self.leaves > EXACT_MAX_LEAVES || lefts.len() + rights.len() > FULL_MAX_FUNCTIONALS {
            return Err(Error::domain(format!(
                "full sign enumeration limited to {EXACT_MAX_LEAVES} leaves and {FULL_MAX_FUNCTIONALS} functionals"
            )));
        }
        if pairs.is_empty() {
            return Ok(self.zero_max());
        }
        let (pv, rv) = self.scaled_vectors();
        let n = self.leaves;
        let bits = lefts.len() + rights.len() - 1;
        let build = |pattern: u64| {
            let sign = |k: usize| if k == 0 || (pattern >> (k - 1)) & 1 == 0 { T::one() } else { -T::one() };
            let mut a = Mat::zeros(n);
            for p in &pairs {
                let s = sign(lefts.binary_search(&p.left).unwrap());
                let t = sign(lefts.len() + rights.binary_search(&p.right).unwrap());
                let scale = p.coeff * s * t;
                for i in 0..n {
                    for j in 0..n {
                        a.data[i * n + j] += scale * pv[p.left][i] * rv[p.right][j];
                    }
                }
            }
            a
        };
        let best = (0u64..(1u64 << bits))
            .into_par_iter()
            .map(|pattern| (top_singular(&build(pattern)).0, pattern))
            .reduce(|| (T::neg_infinity(), u64::MAX), pick_best);
        Ok(self.witness_from_matrix(&build(best.1)))
    }

    fn zero_max(&self) -> FormMax<T> {
        let unit = |mu: &[T]| {
            let c = T::one() / mu.iter().copied().sum::<T>().sqrt();
            vec![c; self.leaves]
        };
        FormMax { value: T::zero(), f1: unit(&self.left_measure), f2: unit(&self.right_measure) }
    }

    /// Top singular triple of the bilinear matrix `A` (in `μ^{1/2}`-scaled
    /// coordinates) mapped back to leaf functions.
    fn witness_from_matrix(&self, a: &Mat<T>) -> FormMax<T> {
        let (sigma, y) = top_singular(a);
        let n = self.leaves;
        let ay = a.mul_vec(&y);
        let x: Vec<T> = if sigma > T::zero() { ay.iter().map(|&v| v / sigma).collect() } else { vec![T::zero(); n] };
        let f1: Vec<T> = (0..n).map(|k| x[k] / self.left_measure[k].sqrt()).collect();
        let f2: Vec<T> = (0..n).map(|k| y[k] / self.right_measure[k].sqrt()).collect();
        if sigma == T::zero() {
            return self.zero_max();
        }
        FormMax { value: self.ratio(&f1, &f2), f1, f2 }
    }

    /// Best value of the alternating maximization over seeded restarts.
    pub fn search_max(&self, opts: SearchOptions) -> Result<FormMax<T>> {
        self.search_max_traced(opts).map(|(m, _)| m)
    }

    /// As [`search_max`](Self::search_max); also returns the objective trace
    /// (after every half-step) of each restart.
    pub fn search_max_traced(&self, opts: SearchOptions) -> Result<(FormMax<T>, Vec<Vec<T>>)> {
        if opts.iters == 0 {
            return Err(Error::domain("search needs at least one iteration"));
        }
        if opts.restarts == 0 {
            return Err(Error::domain("search needs at least one restart"));
        }
        let grams = (dual_gram(&self.left, &self.left_measure), dual_gram(&self.right, &self.right_measure));
        let mut traces = Vec::with_capacity(2 * opts.restarts);
        let mut best: Option<FormMax<T>> = None;
        let mut merge = |runs: Vec<(FormMax<T>, Vec<T>)>, best: &mut Option<FormMax<T>>| {
            for (m, trace) in runs {
                if best.as_ref().is_none_or(|b| m.value > b.value) {
                    *best = Some(m);
                }
                traces.push(trace);
            }
        };
        let runs = (0..opts.restarts)
            .into_par_iter()
            .map(|r| self.search_run(&grams, opts.iters, opts.seed, r as u64, None))
            .collect();
        merge(runs, &mut best);
        // second round: restart from perturbations of the best right-hand function
        let start = best.as_ref().map(|b| b.f2.clone());
        let runs = (0..opts.restarts)
            .into_par_iter()
            .map(|r| self.search_run(&grams, opts.iters, opts.seed, (opts.restarts + r) as u64, start.as_deref()))
            .collect();
        merge(runs, &mut best);
        Ok((best.expect("at least one restart"), traces))
    }

    fn search_run(
        &self,
        grams: &(Mat<T>, Mat<T>),
        iters: usize,
        seed: u64,
        restart: u64,
        around: Option<&[T]>,
    ) -> (FormMax<T>, Vec<T>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(restart);
        let mut f2: Vec<T> = (0..self.leaves).map(|_| T::lit(rng.gen_range(-1.0..1.0))).collect();
        if let Some(center) = around {
            // random directions have unit-order norm; the center is normalized
            let scale = T::lit(rng.gen_range(0.1..1.0)) / weighted_l2(&f2, &self.right_measure).max(T::min_positive_value());
            for (x, &c) in f2.iter_mut().zip(center) {
                *x = c + *x * scale;
            }
        }
        normalize(&mut f2, &self.right_measure);
        let mut left_signs = vec![T::one(); self.left.len()];
        let mut right_signs = vec![T::one(); self.right.len()];
        let mut f1 = vec![T::zero(); self.leaves];
        let mut trace = Vec::new();
        let mut last = T::neg_infinity();
        let mut stalls = 0;
        for _ in 0..iters {
            // f₁ step
            let b = self.right_coefficients(&f2);
            let mut z = vec![T::zero(); self.left.len()];
            for p in &self.pairs {
                z[p.left] += p.coeff * b[p.right].abs();
            }
            f1 = self.best_response(&self.left, &self.left_measure, &grams.0, &z, &mut left_signs);
            let a = self.left_coefficients(&f1);
            update_signs(&mut left_signs, &a);
            trace.push(self.value(&f1, &f2));
            // f₂ step
            let mut z = vec![T::zero(); self.right.len()];
            for p in &self.pairs {
                z[p.right] += p.coeff * a[p.left].abs();
            }
            f2 = self.best_response(&self.right, &self.right_measure, &grams.1, &z, &mut right_signs);
            update_signs(&mut right_signs, &self.right_coefficients(&f2));
            let v = self.value(&f1, &f2);
            trace.push(v);
            if v <= last + last.abs() * T::lit(1e-15) {
                stalls += 1;
                if stalls >= 3 {
                    break;
                }
            } else {
                stalls = 0;
            }
            last = v;
        }
        let value = self.ratio(&f1, &f2);
        (FormMax { value, f1, f2 }, trace)
    }

    /// Maximizer of `Σ_p z_p |g_p(f)|` over `Σ μ_k f_k² = 1` among the sign
    /// patterns reachable from `signs` by improving single flips: for fixed
    /// signs the optimum is `f = μ⁻¹ Σ_p s_p z_p g_p`, normalized, with value
    /// `√(sᵀ K s)`, `K_pq = z_p z_q G_pq`.
    fn best_response(&self, funcs: &[Functional<T>], mu: &[T], gram: &Mat<T>, z: &[T], signs: &mut [T]) -> Vec<T> {
        let n = funcs.len();
        let k = |p: usize, q: usize| z[p] * z[q] * gram.get(p, q);
        let mut r: Vec<T> = (0..n).map(|p| (0..n).map(|q| k(p, q) * signs[q]).sum()).collect();
        for _ in 0..4 * n {
            let total: T = (0..n).map(|p| signs[p] * r[p]).sum();
            // flipping p changes sᵀKs by 4 (K_pp − s_p r_p)
            let (best, gain) = (0..n)
                .map(|p| (p, k(p, p) - signs[p] * r[p]))
                .fold((0, T::zero()), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
            if !(gain > total.abs() * T::lit(1e-13)) {
                break;
            }
            let sp = signs[best];
            for (q, rq) in r.iter_mut().enumerate() {
                *rq -= T::two() * sp * k(q, best);
            }
            signs[best] = -sp;
        }
        let mut f = vec![T::zero(); self.leaves];
        for (g, (&zp, &s)) in funcs.iter().zip(z.iter().zip(signs.iter())) {
            if zp != T::zero() {
                g.add_scaled_to(&mut f, zp * s);
            }
        }
        for (x, &m) in f.iter_mut().zip(mu) {
            *x /= m;
        }
        if !normalize(&mut f, mu) {
            f = vec![T::one(); self.leaves];
            normalize(&mut f, mu);
        }
        f
    }
}

/// `G_pq = Σ_k g_p(k) g_q(k) / μ_k`.
fn dual_gram<T: Scalar>(funcs: &[Functional<T>], mu: &[T]) -> Mat<T> {
    let n = funcs.len();
    let mut g = Mat::zeros(n);
    for p in 0..n {
        for q in p..n {
            let (a, b) = (&funcs[p], &funcs[q]);
            let lo = a.start.max(b.start);
            let hi = (a.start + a.values.len()).min(b.start + b.values.len());
            let mut s = T::zero();
            for leaf in lo..hi {
                s += a.values[leaf - a.start] * b.values[leaf - b.start] / mu[leaf];
            }
            g.set(p, q, s);
            g.set(q, p, s);
        }
    }
    g
}

fn pick_best<T: Scalar>(a: (T, u64), b: (T, u64)) -> (T, u64) {
    if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}

fn update_signs<T: Scalar>(signs: &mut [T], coeffs: &[T]) {
    for (s, &c) in signs.iter_mut().zip(coeffs) {
        if c != T::zero() {
            *s = c.signum();
        }
    }
}

fn weighted_l2<T: Scalar>(f: &[T], mu: &[T]) -> T {
    f.iter().zip(mu).map(|(&x, &m)| x * x * m).sum::<T>().sqrt()
}

fn normalize<T: Scalar>(f: &mut [T], mu: &[T]) -> bool {
    let n = weighted_l2(f, mu);
    if !(n > T::zero()) || !n.is_finite() {
        return false;
    }
    for x in f.iter_mut() {
        *x /= n;
    }
    true
}
