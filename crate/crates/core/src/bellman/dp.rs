//! Depth-limited Bellman recursion on `Ω_Q`:
//! `B⁰ ≡ 0`, `B^d(p) = sup [(B^{d−1}(p₊) + B^{d−1}(p₋))/2 + |x₊ − x₋||y₊ − y₋|/4]`
//! over splits `p = (p₊ + p₋)/2` with `p± ∈ Ω_Q`.
//!
//! `B` is invariant under `(X, x) → (λ²X, λx)` up to the factor `λ`, likewise
//! for `(Y, y)`, and under `(X, Y, u, v) → (tX, Y/t, tu, v/t)`. Hence
//! `B = √(XY) F(|x|/√(Xv), |y|/√(Yu), uv)` and the recursion is tabulated for
//! `F` on a grid, linear in the two normalized coordinates and logarithmic
//! in `uv ∈ [1, Q]`. Values off the grid are trilinear interpolations.

use std::sync::{Arc, RwLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::geometry::{in_domain, BellmanPoint};
use crate::{Error, Result, Scalar};

/// Weight of `|x₊ − x₋||y₊ − y₋|` in the gain of one split, so the gain is
/// `|Δx||Δy|` with half-increments `Δ`.
pub const GAIN_FACTOR: f64 = 0.25;

/// Split lengths tried along every direction, as fractions of the largest one.
const FRACTIONS: [f64; 3] = [1.0, 0.5, 0.25];
/// Pull-back from the exit time so children stay inside the domain.
const EXIT_SHRINK: f64 = 1.0 - 1e-12;
const TOP_STREAM: u64 = u64::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DpConfig {
    /// Random split directions per node (each also used with `X ↔ Y` swapped).
    pub samples: usize,
    pub seed: u64,
    /// Grid points on each normalized `x`, `y` axis.
    pub grid_xy: usize,
    /// Grid points on the `log uv` axis.
    pub grid_uv: usize,
}

impl Default for DpConfig {
    fn default() -> Self {
        DpConfig { samples: 16, seed: 0, grid_xy: 17, grid_uv: 9 }
    }
}

/// Tabulated `F^d` for one `Q`, extended lazily in depth. Readers share the
/// finished levels; a level computed twice concurrently is merged by maximum.
#[derive(Debug)]
pub struct DpEstimator<T> {
    q: T,
    cfg: DpConfig,
    directions: Vec<Vec<[T; 6]>>,
    top_directions: Vec<[T; 6]>,
    levels: RwLock<Vec<Arc<Vec<T>>>>,
}

fn raw_directions<T: Scalar>(seed: u64, stream: u64, samples: usize) -> Vec<[T; 6]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut out = Vec::with_capacity(2 * samples + 6);
    for k in 0..6 {
        out.push(std::array::from_fn(|j| if j == k { T::one() } else { T::zero() }));
    }
    for _ in 0..samples {
        let r: [T; 6] = std::array::from_fn(|_| T::lit(rng.gen_range(-1.0..=1.0)));
        out.push(r);
        out.push([r[1], r[0], r[3], r[2], r[5], r[4]]);
    }
    out
}

/// First `τ > 0` at which `c0 + c1 τ + c2 τ²` becomes positive, given `c0 ≤ 0`.
fn first_exit<T: Scalar>(c0: T, c1: T, c2: T) -> T {
    let zero = T::zero();
    let inf = T::infinity();
    let c0 = c0.min(zero);
    if c2 == zero {
        return if c1 > zero { -c0 / c1 } else { inf };
    }
    if c0 == zero {
        return if c1 > zero || (c1 == zero && c2 > zero) {
            zero
        } else if c2 > zero {
            -c1 / c2
        } else {
            inf
        };
    }
    let disc = c1 * c1 - T::lit(4.0) * c2 * c0;
    if disc < zero {
        return inf;
    }
    let sign = if c1 >= zero { T::one() } else { -T::one() };
    let qq = -(c1 + sign * disc.sqrt()) * T::half();
    [qq / c2, c0 / qq].into_iter().filter(|&r| r > zero).fold(inf, T::min)
}

/// Largest `τ` with `p ± τ d ∈ Ω_Q`.
fn exit_time<T: Scalar>(p: &BellmanPoint<T>, d: &BellmanPoint<T>, q: T) -> T {
    let two = T::two();
    let mut tau = T::infinity();
    for s in [T::one(), -T::one()] {
        let e = d.scale(s);
        for (c, dc) in [(p.X, e.X), (p.Y, e.Y), (p.u, e.u), (p.v, e.v)] {
            if dc < T::zero() {
                tau = tau.min(-c / dc);
            }
        }
        let quv = (p.u * e.v + p.v * e.u, e.u * e.v);
        tau = tau
            .min(first_exit(p.x * p.x - p.X * p.v, two * p.x * e.x - p.X * e.v - p.v * e.X, e.x * e.x - e.X * e.v))
            .min(first_exit(p.y * p.y - p.Y * p.u, two * p.y * e.y - p.Y * e.u - p.u * e.Y, e.y * e.y - e.Y * e.u))
            .min(first_exit(p.u * p.v - q, quv.0, quv.1))
            .min(first_exit(T::one() - p.u * p.v, -quv.0, -quv.1));
    }
    tau
}

/// The split moving only `(X, x)` and `(Y, y)` with the largest one-step gain:
/// `x± = x ± t`, `X± = X ± 2xt/v` with `t = √(Xv − x²)`, likewise for `y`.
fn analytic_directions<T: Scalar>(p: &BellmanPoint<T>) -> [BellmanPoint<T>; 2] {
    let zero = T::zero();
    let t = (p.X * p.v - p.x * p.x).max(zero).sqrt();
    let s = (p.Y * p.u - p.y * p.y).max(zero).sqrt();
    let a = T::two() * p.x * t / p.v;
    let b = T::two() * p.y * s / p.u;
    [BellmanPoint::new(a, b, t, s, zero, zero), BellmanPoint::new(a, -b, t, -s, zero, zero)]
}

impl<T: Scalar> DpEstimator<T> {
    pub fn new(q: T, cfg: DpConfig) -> Result<Self> {
        if !(q >= T::one()) || !q.is_finite() {
            return Err(Error::domain(format!("domain parameter must be finite and ≥ 1, got {q}")));
        }
        if cfg.grid_xy < 2 || cfg.grid_uv < 1 {
            return Err(Error::domain("grid needs at least 2 points per normalized axis and 1 on the uv axis"));
        }
        let n = cfg.grid_xy;
        let nr = if q == T::one() { 1 } else { cfg.grid_uv };
        let cfg = DpConfig { grid_uv: nr, ..cfg };
        let directions = (0..n * n * nr)
            .map(|node| {
                let (i, j, k) = (node / (n * nr), (node / nr) % n, node % nr);
                let key = ((i.min(j) * n + i.max(j)) * nr + k) as u64;
                raw_directions(cfg.seed, key, cfg.samples)
            })
            .collect();
        Ok(DpEstimator {
            q,
            cfg,
            directions,
            top_directions: raw_directions(cfg.seed, TOP_STREAM, cfg.samples),
            levels: RwLock::new(vec![Arc::new(vec![T::zero(); n * n * nr])]),
        })
    }

    pub fn q(&self) -> T {
        self.q
    }

    pub fn config(&self) -> DpConfig {
        self.cfg
    }

    fn node_point(&self, node: usize) -> BellmanPoint<T> {
        let (n, nr) = (self.cfg.grid_xy, self.cfg.grid_uv);
        let (i, j, k) = (node / (n * nr), (node / nr) % n, node % nr);
        let r = if nr == 1 { T::one() } else { self.q.powf(T::lit(k as f64 / (nr - 1) as f64)) };
        let s = r.sqrt();
        let cap = s.sqrt();
        let step = T::lit(1.0 / (n - 1) as f64);
        let (x, y) = (T::lit(i as f64) * step * cap, T::lit(j as f64) * step * cap);
        BellmanPoint::new(T::one(), T::one(), x, y, s, s)
    }

    /// `√(XY) F(x̂, ŷ, uv)` with `F` interpolated from `table`.
    fn lookup(&self, table: &[T], p: &BellmanPoint<T>) -> T {
        let (n, nr) = (self.cfg.grid_xy, self.cfg.grid_uv);
        let one = T::one();
        let xh = (p.x.abs() / (p.X * p.v).sqrt()).min(one);
        let yh = (p.y.abs() / (p.Y * p.u).sqrt()).min(one);
        let rho = if nr == 1 { T::zero() } else { ((p.u * p.v).ln() / self.q.ln()).max(T::zero()).min(one) };
        let cell = |t: T, m: usize| -> (usize, T) {
            if m == 1 {
                return (0, T::zero());
            }
            let f = t * T::lit((m - 1) as f64);
            let i = f.floor().to_usize().unwrap_or(0).min(m - 2);
            (i, f - T::lit(i as f64))
        };
        let ((i, fx), (j, fy), (k, fr)) = (cell(xh, n), cell(yh, n), cell(rho, nr));
        let idx = |a: usize, b: usize, c: usize| (a * n + b) * nr + c;
        let mut acc = T::zero();
        for (a, wa) in [(i, one - fx), (i + 1, fx)] {
            if wa == T::zero() {
                continue;
            }
            for (b, wb) in [(j, one - fy), (j + 1, fy)] {
                if wb == T::zero() {
                    continue;
                }
                for (c, wc) in [(k, one - fr), (k + 1, fr)] {
                    if wc == T::zero() {
                        continue;
                    }
                    acc += wa * wb * wc * table[idx(a, b, c)];
                }
            }
        }
        (p.X * p.Y).sqrt() * acc
    }

    /// `max` over the candidate splits at `p` of the recursion's right side,
    /// with `previous` standing for `B^{d−1}`.
    fn best_split(&self, p: &BellmanPoint<T>, raw: &[[T; 6]], previous: &[T]) -> T {
        let gain_factor = T::lit(GAIN_FACTOR);
        let two = T::two();
        let mut best = T::zero();
        let mut consider = |d: BellmanPoint<T>| {
            let (cp, cm) = (*p + d, *p - d);
            let ok = |c: &BellmanPoint<T>| {
                c.X > T::zero() && c.Y > T::zero() && c.u > T::zero() && c.v > T::zero() && c.is_finite()
            };
            if !ok(&cp) || !ok(&cm) {
                return;
            }
            let gain = gain_factor * (two * d.x).abs() * (two * d.y).abs();
            let value = (self.lookup(previous, &cp) + self.lookup(previous, &cm)) * T::half() + gain;
            if value > best {
                best = value;
            }
        };
        for d in analytic_directions(p) {
            for f in FRACTIONS {
                consider(d.scale(T::lit(f)));
            }
        }
        let sx = (p.X * p.v).sqrt();
        let sy = (p.Y * p.u).sqrt();
        let shrink = T::lit(EXIT_SHRINK);
        for r in raw {
            let d = BellmanPoint::new(p.X * r[0], p.Y * r[1], sx * r[2], sy * r[3], p.u * r[4], p.v * r[5]);
            let tau = exit_time(p, &d, self.q);
            if !(tau > T::zero()) || !tau.is_finite() {
                continue;
            }
            for f in FRACTIONS {
                consider(d.scale(tau * T::lit(f) * shrink));
            }
        }
        best
    }

    /// `F^depth` on the grid.
    pub fn table(&self, depth: usize) -> Arc<Vec<T>> {
        loop {
            let (have, last) = {
                let levels = self.levels.read().expect("dp table lock");
                if let Some(t) = levels.get(depth) {
                    return Arc::clone(t);
                }
                (levels.len(), Arc::clone(levels.last().expect("level 0 exists")))
            };
            let next: Vec<T> = (0..last.len())
                .into_par_iter()
                .map(|node| {
                    let p = self.node_point(node);
                    last[node].max(self.best_split(&p, &self.directions[node], &last))
                })
                .collect();
            let mut levels = self.levels.write().expect("dp table lock");
            if levels.len() == have {
                levels.push(Arc::new(next));
            } else {
                let merged: Vec<T> = levels[have].iter().zip(&next).map(|(&a, &b)| a.max(b)).collect();
                levels[have] = Arc::new(merged);
            }
        }
    }

    /// `B^depth(p)`, the recursion evaluated at `p` itself on top of the tabulated lower levels.
    pub fn estimate(&self, p: &BellmanPoint<T>, depth: usize) -> Result<T> {
        if !in_domain(p, self.q) {
            return Err(Error::domain(format!("{p:?} is not in the domain with Q = {}", self.q)));
        }
        let mut value = T::zero();
        for d in 1..=depth {
            let previous = self.table(d - 1);
            value = value.max(self.best_split(p, &self.top_directions, &previous));
        }
        Ok(value)
    }

    /// `B^depth(p) / (Q (X + Y))`.
    pub fn b1_ratio(&self, p: &BellmanPoint<T>, depth: usize) -> Result<T> {
        Ok(self.estimate(p, depth)? / (self.q * (p.X + p.Y)))
    }
}

/// One-shot [`DpEstimator::estimate`] with a default grid.
pub fn dp_estimate<T: Scalar>(p: &BellmanPoint<T>, q: T, depth: usize, samples: usize, seed: u64) -> Result<T> {
    DpEstimator::new(q, DpConfig { samples, seed, ..DpConfig::default() })?.estimate(p, depth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bellman::geometry::sample_point;

    #[test]
    fn exit_times() {
        // (1 + τ)² ≤ 4 → τ = 1
        assert_eq!(first_exit(-3.0, 2.0, 1.0), 1.0);
        // tight and moving outward
        assert_eq!(first_exit(0.0, 1.0, -1.0), 0.0);
        // tight, moving inward, never coming back
        assert_eq!(first_exit(0.0, -1.0, -1.0), f64::INFINITY);
        // tight, moving inward, coming back at τ = 2
        assert_eq!(first_exit(0.0, -2.0, 1.0), 2.0);
        // opens downward and stays negative
        assert_eq!(first_exit(-1.0, 1.0, -1.0), f64::INFINITY);
        let p = BellmanPoint::new(1.0, 1.0, 0.0, 0.0, 1.0, 1.0);
        assert_eq!(exit_time(&p, &BellmanPoint::new(0.0, 0.0, 1.0, 0.0, 0.0, 0.0), 2.0), 1.0);
        assert_eq!(exit_time(&p, &BellmanPoint::new(0.0, 0.0, 0.0, 0.0, 1.0, 0.0), 2.0), 0.0);
    }

    #[test]
    fn base_cases() {
        let p = BellmanPoint::new(1.0, 1.0, 0.0, 0.0, 1.0, 1.0);
        for q in [1.0, 2.0, 10.0] {
            assert_eq!(dp_estimate(&p, q, 0, 8, 1).unwrap(), 0.0);
            assert_eq!(dp_estimate(&p, q, 1, 8, 1).unwrap(), 1.0);
        }
        assert!(dp_estimate(&BellmanPoint::new(1.0, 1.0, 2.0, 0.0, 1.0, 1.0), 2.0, 1, 8, 1).is_err());
    }

    #[test]
    fn monotone_and_symmetric() {
        let est = DpEstimator::new(3.0, DpConfig { samples: 6, ..DpConfig::default() }).unwrap();
        let more = DpEstimator::new(3.0, DpConfig { samples: 10, ..DpConfig::default() }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let p = sample_point::<f64, _>(&mut rng, 3.0);
            let mut last = 0.0;
            for d in 0..=5 {
                let b = est.estimate(&p, d).unwrap();
                assert!(b >= last);
                assert!(more.estimate(&p, d).unwrap() >= b);
                let s = est.estimate(&p.swapped(), d).unwrap();
                assert!((s - b).abs() <= 1e-12 * b.max(1.0), "{s} vs {b}");
                last = b;
            }
        }
    }
}
