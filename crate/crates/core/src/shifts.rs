//! Dyadic shifts of complexity `n` as sub-bilinear forms
//!
//! `(SH_n f₁, f₂) = Σ_I Σ_{J ⊆ I, |J| = 2^{-n}|I|} 2^{-n/2} |c_IJ| |(f₁, h_I)| |(f₂, h_J)|`
//!
//! and their norms between `L²(w)` and `L²(σ)`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dyadic::{check_internal, num_internal, same_depth, DyadicIndex, HaarExpansion, LeafFunction};
use crate::form::{FormMax, Functional, Pair, SearchOptions, SubBilinearForm, EXACT_MAX_PAIRS};
use crate::weights::Weight;
use crate::{Error, Result, Scalar};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftSpec<T> {
    complexity: u32,
    depth: u32,
    /// One coefficient per `(I, J)` pair: `I` in heap order, then `J` left to right.
    coeffs: Vec<T>,
}

impl<T: Scalar> ShiftSpec<T> {
    /// Number of `(I, J)` pairs with both intervals internal.
    pub fn pair_count(complexity: u32, depth: u32) -> usize {
        if complexity >= depth {
            0
        } else {
            num_internal(depth - complexity) << complexity
        }
    }

    pub fn new(complexity: u32, depth: u32, coeffs: Vec<T>) -> Result<Self> {
        if depth == 0 || depth > crate::dyadic::MAX_DEPTH {
            return Err(Error::domain(format!("depth {depth} out of range")));
        }
        let expected = Self::pair_count(complexity, depth);
        if coeffs.len() != expected {
            return Err(Error::structural(format!("expected {expected} coefficients, got {}", coeffs.len())));
        }
        if let Some(c) = coeffs.iter().find(|c| !(c.abs() <= T::one())) {
            return Err(Error::domain(format!("shift coefficient {c} outside [-1, 1]")));
        }
        Ok(ShiftSpec { complexity, depth, coeffs })
    }

    pub fn constant(complexity: u32, depth: u32, c: T) -> Result<Self> {
        Self::new(complexity, depth, vec![c; Self::pair_count(complexity, depth)])
    }

    pub fn from_fn(complexity: u32, depth: u32, mut f: impl FnMut(DyadicIndex, DyadicIndex) -> T) -> Result<Self> {
        let coeffs = Self::pair_indices(complexity, depth).map(|(i, j)| f(i, j)).collect();
        Self::new(complexity, depth, coeffs)
    }

    /// Coefficients uniform on `[-1, 1]` from a seeded generator.
    pub fn random(complexity: u32, depth: u32, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::from_fn(complexity, depth, |_, _| T::lit(rng.gen_range(-1.0..=1.0)))
    }

    fn pair_indices(complexity: u32, depth: u32) -> impl Iterator<Item = (DyadicIndex, DyadicIndex)> {
        let outer = if complexity >= depth { 0 } else { num_internal(depth - complexity) };
        (0..outer).flat_map(move |h| {
            let i = DyadicIndex::from_heap_index(h);
            i.descendants(complexity).map(move |j| (i, j))
        })
    }

    pub fn complexity(&self) -> u32 {
        self.complexity
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn pairs(&self) -> impl Iterator<Item = (DyadicIndex, DyadicIndex, T)> + '_ {
        Self::pair_indices(self.complexity, self.depth).zip(&self.coeffs).map(|((i, j), &c)| (i, j, c))
    }

    fn pair_slot(&self, i: DyadicIndex, j: DyadicIndex) -> Option<usize> {
        let valid = j.level == i.level + self.complexity && j.level < self.depth && i.contains(&j);
        valid.then(|| (i.heap_index() << self.complexity) + (j.position - (i.position << self.complexity)) as usize)
    }

    pub fn coefficient(&self, i: DyadicIndex, j: DyadicIndex) -> Option<T> {
        self.pair_slot(i, j).map(|k| self.coeffs[k])
    }

    /// `2^{-n/2}`.
    pub fn normalization(&self) -> T {
        T::pow2(-(self.complexity as i32)).sqrt()
    }

    /// The shift as a [`SubBilinearForm`] on `L²(w) × L²(σ)`.
    pub fn to_form(&self, w: &Weight<T>) -> Result<SubBilinearForm<T>> {
        if w.depth() != self.depth {
            return Err(Error::structural(format!("weight depth {} vs shift depth {}", w.depth(), self.depth)));
        }
        let haar = haar_functionals(self.depth);
        let norm = self.normalization();
        let offset = num_internal(self.complexity);
        let pairs = self
            .pairs()
            .map(|(i, j, c)| Pair { left: i.heap_index(), right: j.heap_index() - offset, coeff: norm * c.abs() })
            .collect();
        let right = haar[offset..].to_vec();
        let m = T::pow2(-(self.depth as i32));
        SubBilinearForm::new(
            1 << self.depth,
            haar,
            right,
            pairs,
            w.values().iter().map(|&x| x * m).collect(),
            w.sigma().values().iter().map(|&x| x * m).collect(),
        )
    }

    /// Parses `complexity=<n> depth=<d>` followed by `I_level I_pos J_level J_pos c`
    /// lines. Pairs not listed get coefficient 0; pairs outside the pattern are rejected.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut header = None;
        let mut entries = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let lineno = k + 1;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if header.is_none() {
                let mut n = None;
                let mut d = None;
                for tok in line.split_whitespace() {
                    let (key, val) = tok.split_once('=').ok_or_else(|| Error::parse(lineno, "bad header token"))?;
                    let val: u32 = val.parse().map_err(|_| Error::parse(lineno, format!("bad number `{val}`")))?;
                    match key {
                        "complexity" => n = Some(val),
                        "depth" => d = Some(val),
                        _ => return Err(Error::parse(lineno, format!("unknown header key `{key}`"))),
                    }
                }
                match (n, d) {
                    (Some(n), Some(d)) => header = Some((n, d)),
                    _ => return Err(Error::parse(lineno, "header needs complexity=<n> depth=<d>")),
                }
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 5 {
                return Err(Error::parse(lineno, "expected `I_level I_pos J_level J_pos c`"));
            }
            let int = |s: &str| s.parse::<u64>().map_err(|_| Error::parse(lineno, format!("bad integer `{s}`")));
            let i = DyadicIndex::new(int(toks[0])? as u32, int(toks[1])?)?;
            let j = DyadicIndex::new(int(toks[2])? as u32, int(toks[3])?)?;
            let c: f64 = toks[4].parse().map_err(|_| Error::parse(lineno, format!("bad coefficient `{}`", toks[4])))?;
            entries.push((lineno, i, j, c));
        }
        let (n, d) = header.ok_or_else(|| Error::parse(0, "missing header"))?;
        let mut spec = Self::constant(n, d, T::zero())?;
        for (lineno, i, j, c) in entries {
            let slot = spec
                .pair_slot(i, j)
                .ok_or_else(|| Error::parse(lineno, format!("pair ({i}, {j}) is not a complexity-{n} pair")))?;
            if !(c.abs() <= 1.0) {
                return Err(Error::parse(lineno, format!("coefficient {c} outside [-1, 1]")));
            }
            spec.coeffs[slot] = T::lit(c);
        }
        Ok(spec)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("complexity={} depth={}\n", self.complexity, self.depth);
        for (i, j, c) in self.pairs() {
            out.push_str(&format!("{} {} {} {} {}\n", i.level, i.position, j.level, j.position, c.as_f64()));
        }
        out
    }
}

/// `(f, h_I)` as functionals on leaf values, one per internal interval in heap order.
pub(crate) fn haar_functionals<T: Scalar>(depth: u32) -> Vec<Functional<T>> {
    let m = T::pow2(-(depth as i32));
    DyadicIndex::internal(depth)
        .map(|i| {
            let range = i.leaf_range(depth);
            let amp = m / i.length::<T>().sqrt();
            let half = range.len() / 2;
            Functional {
                start: range.start,
                values: (0..range.len()).map(|k| if k < half { amp } else { -amp }).collect(),
            }
        })
        .collect()
}

/// Direct evaluation of the shift form from the Haar coefficients of `f1`, `f2`.
pub fn form_value<T: Scalar>(spec: &ShiftSpec<T>, f1: &LeafFunction<T>, f2: &LeafFunction<T>) -> Result<T> {
    same_depth(f1, f2)?;
    if f1.depth() != spec.depth {
        return Err(Error::structural(format!("function depth {} vs shift depth {}", f1.depth(), spec.depth)));
    }
    let (p1, p2) = (f1.pyramid(), f2.pyramid());
    let norm = spec.normalization();
    Ok(spec.pairs().map(|(i, j, c)| norm * c.abs() * p1.haar(i).abs() * p2.haar(j).abs()).sum())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMode {
    Exact,
    LowerBound,
}

/// Empirical norm of a shift form with the functions attaining it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate<T> {
    pub value: T,
    pub mode: NormMode,
    pub witness_f1: LeafFunction<T>,
    pub witness_f2: LeafFunction<T>,
    /// Signs of `(f₁, h_I)` and `(f₂, h_J)` over internal intervals (heap order).
    pub sign_pattern: (Vec<i8>, Vec<i8>),
}

impl<T: Scalar> NormEstimate<T> {
    fn from_max(depth: u32, m: FormMax<T>, mode: NormMode) -> Result<Self> {
        let f1 = LeafFunction::new(depth, m.f1)?;
        let f2 = LeafFunction::new(depth, m.f2)?;
        let signs = |f: &LeafFunction<T>| {
            f.haar_expansion().coefficients().iter().map(|&c| if c < T::zero() { -1 } else { 1 }).collect::<Vec<i8>>()
        };
        let sign_pattern = (signs(&f1), signs(&f2));
        Ok(NormEstimate { value: m.value, mode, witness_f1: f1, witness_f2: f2, sign_pattern })
    }
}

/// Exact form norm for trees with at most 15 internal intervals (depth ≤ 4).
pub fn norm_exact_small<T: Scalar>(spec: &ShiftSpec<T>, w: &Weight<T>) -> Result<NormEstimate<T>> {
    if num_internal(spec.depth) > EXACT_MAX_PAIRS {
        return Err(Error::domain(format!(
            "exhaustive norm limited to {EXACT_MAX_PAIRS} internal intervals (depth ≤ 4); use norm_lower_search"
        )));
    }
    let m = spec.to_form(w)?.exact_max()?;
    NormEstimate::from_max(spec.depth, m, NormMode::Exact)
}

/// Alternating-maximization lower bound on the form norm.
pub fn norm_lower_search<T: Scalar>(
    spec: &ShiftSpec<T>,
    w: &Weight<T>,
    iters: usize,
    seed: u64,
) -> Result<NormEstimate<T>> {
    norm_lower_search_with(spec, w, SearchOptions::new(iters, seed))
}

pub fn norm_lower_search_with<T: Scalar>(
    spec: &ShiftSpec<T>,
    w: &Weight<T>,
    opts: SearchOptions,
) -> Result<NormEstimate<T>> {
    let m = spec.to_form(w)?.search_max(opts)?;
    NormEstimate::from_max(spec.depth, m, NormMode::LowerBound)
}

/// `Tf = Σ_I ε_I (f, h_I) h_I`: the Haar multiplier with `ε_I ∈ [-1, 1]`.
pub fn martingale_transform_apply<T: Scalar>(
    signs: &BTreeMap<DyadicIndex, T>,
    f: &LeafFunction<T>,
) -> Result<LeafFunction<T>> {
    let e = f.haar_expansion();
    let coeffs = DyadicIndex::internal(f.depth())
        .zip(e.coefficients())
        .map(|(i, &c)| {
            let s = signs.get(&i).copied().ok_or_else(|| Error::structural(format!("missing sign for {i}")))?;
            if !(s.abs() <= T::one()) {
                return Err(Error::domain(format!("multiplier {s} outside [-1, 1] at {i}")));
            }
            Ok(s * c)
        })
        .collect::<Result<Vec<_>>>()?;
    for i in signs.keys() {
        check_internal(*i, f.depth())?;
    }
    Ok(HaarExpansion::from_parts(f.depth(), T::zero(), coeffs)?.synthesize())
}

/// Maximum relative error of the search estimator against the exhaustive
/// norm over random shifts (complexity 0 or 1) and cascade weights.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub instances: usize,
    pub max_rel_error: f64,
}

pub fn calibrate_search(instances: usize, max_depth: u32, opts: SearchOptions) -> Result<Calibration> {
    let mut max_rel_error: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for k in 0..instances {
        let depth = rng.gen_range(2..=max_depth.max(2));
        let n = rng.gen_range(0..=1u32);
        let spec = ShiftSpec::<f64>::random(n, depth, rng.gen())?;
        let w = crate::weights::gen_cascade::<f64>(depth, rng.gen_range(0.0..0.9), rng.gen())?;
        let exact = norm_exact_small(&spec, &w)?.value;
        let est = norm_lower_search_with(&spec, &w, SearchOptions { seed: opts.seed.wrapping_add(k as u64), ..opts })?.value;
        if exact > 0.0 {
            max_rel_error = max_rel_error.max((exact - est).abs() / exact);
        }
    }
    Ok(Calibration { instances, max_rel_error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::gen_cascade;
    use approx::assert_abs_diff_eq;

    fn one(depth: u32) -> Weight<f64> {
        Weight::constant(depth, 1.0).unwrap()
    }

    #[test]
    fn pair_layout() {
        assert_eq!(ShiftSpec::<f64>::pair_count(0, 3), 7);
        assert_eq!(ShiftSpec::<f64>::pair_count(1, 3), 6);
        assert_eq!(ShiftSpec::<f64>::pair_count(2, 2), 0);
        let s = ShiftSpec::<f64>::from_fn(1, 3, |i, j| (i.heap_index() * 10 + j.heap_index()) as f64 / 100.0).unwrap();
        for (i, j, c) in s.pairs() {
            assert_eq!(s.coefficient(i, j), Some(c));
            assert_eq!(j.parent(), Some(i));
        }
        assert_eq!(s.coefficient(DyadicIndex::ROOT, DyadicIndex::ROOT), None);
        assert!(ShiftSpec::<f64>::constant(0, 2, 1.5).is_err());
    }

    #[test]
    fn form_value_examples() {
        let depth = 3;
        let spec = ShiftSpec::constant(1, depth, 1.0).unwrap();
        let f1 = LeafFunction::haar(depth, DyadicIndex::ROOT).unwrap();
        let f2 = LeafFunction::haar(depth, DyadicIndex::new(1, 0).unwrap()).unwrap();
        assert_abs_diff_eq!(form_value(&spec, &f1, &f2).unwrap(), 0.5f64.sqrt(), epsilon = 1e-14);

        let c = LeafFunction::constant(depth, 2.0).unwrap();
        assert_eq!(form_value(&spec, &c, &f2).unwrap(), 0.0);
        assert_eq!(form_value(&spec, &f1, &c).unwrap(), 0.0);

        let spec0 = ShiftSpec::constant(0, depth, 1.0).unwrap();
        for i in DyadicIndex::internal(depth) {
            let h = LeafFunction::haar(depth, i).unwrap();
            assert_abs_diff_eq!(form_value(&spec0, &h, &h).unwrap(), 1.0, epsilon = 1e-14);
        }
        assert!(form_value(&spec0, &LeafFunction::constant(2, 1.0).unwrap(), &c).is_err());
    }

    #[test]
    fn form_engine_agrees_with_direct_value() {
        let depth = 5;
        let spec = ShiftSpec::<f64>::random(1, depth, 4).unwrap();
        let w = gen_cascade(depth, 0.5, 2).unwrap();
        let form = spec.to_form(&w).unwrap();
        let f1 = LeafFunction::from_fn(depth, |k| (k as f64 * 0.7).sin()).unwrap();
        let f2 = LeafFunction::from_fn(depth, |k| (k as f64 * 1.3).cos()).unwrap();
        assert_abs_diff_eq!(
            form.value(f1.values(), f2.values()),
            form_value(&spec, &f1, &f2).unwrap(),
            epsilon = 1e-13
        );
    }

    #[test]
    fn exact_examples() {
        let e = norm_exact_small(&ShiftSpec::constant(0, 2, 1.0).unwrap(), &one(2)).unwrap();
        assert_abs_diff_eq!(e.value, 1.0, epsilon = 1e-12);
        assert_eq!(e.mode, NormMode::Exact);
        let e = norm_exact_small(&ShiftSpec::constant(1, 2, 1.0).unwrap(), &one(2)).unwrap();
        assert_abs_diff_eq!(e.value, 1.0, epsilon = 1e-12);
        let e = norm_exact_small(&ShiftSpec::constant(0, 2, 0.0).unwrap(), &one(2)).unwrap();
        assert_eq!(e.value, 0.0);
        assert!(matches!(
            norm_exact_small(&ShiftSpec::constant(0, 5, 1.0).unwrap(), &one(5)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn witness_reproduces_value() {
        let spec = ShiftSpec::<f64>::random(1, 3, 11).unwrap();
        let w = gen_cascade(3, 0.7, 5).unwrap();
        for est in [norm_exact_small(&spec, &w).unwrap(), norm_lower_search(&spec, &w, 300, 1).unwrap()] {
            let v = form_value(&spec, &est.witness_f1, &est.witness_f2).unwrap();
            let n1 = crate::weights::weighted_norm(&est.witness_f1, &w).unwrap();
            let n2 = crate::weights::weighted_norm(&est.witness_f2, &w.dual()).unwrap();
            assert_abs_diff_eq!(est.value, v / (n1 * n2), epsilon = 1e-9);
        }
    }

    #[test]
    fn search_examples() {
        let e = norm_lower_search(&ShiftSpec::constant(0, 8, 1.0).unwrap(), &one(8), 200, 3).unwrap();
        assert_abs_diff_eq!(e.value, 1.0, epsilon = 1e-6);
        assert_eq!(e.mode, NormMode::LowerBound);
        let spec = ShiftSpec::<f64>::random(1, 5, 2).unwrap();
        let w = gen_cascade(5, 0.6, 2).unwrap();
        assert_eq!(norm_lower_search(&spec, &w, 50, 9).unwrap(), norm_lower_search(&spec, &w, 50, 9).unwrap());
        assert!(norm_lower_search(&spec, &w, 0, 9).is_err());
    }

    #[test]
    fn search_objective_is_monotone() {
        let spec = ShiftSpec::<f64>::random(1, 6, 3).unwrap();
        let w = gen_cascade(6, 0.8, 3).unwrap();
        let (_, traces) = spec.to_form(&w).unwrap().search_max_traced(SearchOptions::new(100, 4)).unwrap();
        for t in traces {
            for pair in t.windows(2) {
                assert!(pair[1] >= pair[0] * (1.0 - 1e-12), "{} then {}", pair[0], pair[1]);
            }
        }
    }

    #[test]
    fn martingale_transform_examples() {
        let depth = 4;
        let f = LeafFunction::from_fn(depth, |k| (k * k) as f64 * 0.1 - 0.3).unwrap();
        let mean = crate::dyadic::average(&f, DyadicIndex::ROOT).unwrap();
        let plus: BTreeMap<_, _> = DyadicIndex::internal(depth).map(|i| (i, 1.0)).collect();
        let minus: BTreeMap<_, _> = DyadicIndex::internal(depth).map(|i| (i, -1.0)).collect();
        let tp = martingale_transform_apply(&plus, &f).unwrap();
        let tm = martingale_transform_apply(&minus, &f).unwrap();
        for k in 0..f.len() {
            assert_abs_diff_eq!(tp.values()[k], f.values()[k] - mean, epsilon = 1e-13);
            assert_abs_diff_eq!(tm.values()[k], mean - f.values()[k], epsilon = 1e-13);
        }
        let mut partial = plus.clone();
        partial.remove(&DyadicIndex::ROOT);
        assert!(matches!(martingale_transform_apply(&partial, &f), Err(Error::Structural(_))));
    }

    #[test]
    fn text_format() {
        let s = ShiftSpec::<f64>::random(1, 3, 1).unwrap();
        assert_eq!(ShiftSpec::<f64>::parse_text(&s.to_text()).unwrap(), s);
        let sparse = ShiftSpec::<f64>::parse_text("complexity=1 depth=2\n0 0 1 1 -0.5\n").unwrap();
        assert_eq!(sparse.coeffs(), &[0.0, -0.5]);
        assert!(ShiftSpec::<f64>::parse_text("complexity=1 depth=2\n0 0 0 0 1\n").is_err());
        assert!(ShiftSpec::<f64>::parse_text("complexity=1 depth=2\n0 0 1 0 2\n").is_err());
    }
}
