//! The dyadic tree of `[0, 1)`, leaf functions, averages, martingale
//! differences and the (unweighted) Haar system.
//!
//! Conventions:
//! - the left half of `I` is `I₋`, the right half `I₊`;
//! - `h_I = |I|^{-1/2}` on the left half and `-|I|^{-1/2}` on the right half;
//! - `Δ_I f = (⟨f⟩_{I₋} − ⟨f⟩_{I₊}) / 2`, so `⟨f⟩_{I₋} = ⟨f⟩_I + Δ_I f` and
//!   `(f, h_I) = √|I| · Δ_I f`.
//!
//! Internal intervals (level `< depth`) are stored in heap order:
//! `2^level − 1 + position`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Scalar};

/// Largest supported tree depth (2^20 leaves).
pub const MAX_DEPTH: u32 = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DyadicIndex {
    pub level: u32,
    pub position: u64,
}

impl DyadicIndex {
    pub const ROOT: DyadicIndex = DyadicIndex { level: 0, position: 0 };

    pub fn new(level: u32, position: u64) -> Result<Self> {
        if level > MAX_DEPTH {
            return Err(Error::domain(format!("level {level} exceeds depth cap {MAX_DEPTH}")));
        }
        if position >= 1u64 << level {
            return Err(Error::domain(format!("position {position} out of range at level {level}")));
        }
        Ok(DyadicIndex { level, position })
    }

    pub fn root() -> Self {
        Self::ROOT
    }

    /// `|I| = 2^{-level}`.
    pub fn length<T: Scalar>(&self) -> T {
        T::pow2(-(self.level as i32))
    }

    /// Left endpoint of the interval.
    pub fn start<T: Scalar>(&self) -> T {
        T::lit(self.position as f64) * self.length::<T>()
    }

    pub fn left(&self) -> Self {
        DyadicIndex { level: self.level + 1, position: 2 * self.position }
    }

    pub fn right(&self) -> Self {
        DyadicIndex { level: self.level + 1, position: 2 * self.position + 1 }
    }

    pub fn parent(&self) -> Option<Self> {
        (self.level > 0).then(|| DyadicIndex { level: self.level - 1, position: self.position / 2 })
    }

    /// Ancestor `generations` levels up, if it exists.
    pub fn ancestor(&self, generations: u32) -> Option<Self> {
        (generations <= self.level)
            .then(|| DyadicIndex { level: self.level - generations, position: self.position >> generations })
    }

    pub fn heap_index(&self) -> usize {
        ((1usize << self.level) - 1) + self.position as usize
    }

    pub fn from_heap_index(index: usize) -> Self {
        let level = usize::BITS - 1 - (index + 1).leading_zeros();
        DyadicIndex { level, position: (index + 1 - (1usize << level)) as u64 }
    }

    /// True when `other ⊆ self`.
    pub fn contains(&self, other: &DyadicIndex) -> bool {
        other.level >= self.level && (other.position >> (other.level - self.level)) == self.position
    }

    /// Range of leaf positions covered by this interval at tree depth `depth`.
    pub fn leaf_range(&self, depth: u32) -> std::ops::Range<usize> {
        let shift = depth - self.level;
        let lo = (self.position as usize) << shift;
        lo..lo + (1usize << shift)
    }

    /// Descendants of `self` exactly `generations` levels down, left to right.
    pub fn descendants(&self, generations: u32) -> impl Iterator<Item = DyadicIndex> {
        let level = self.level + generations;
        let lo = self.position << generations;
        (lo..lo + (1u64 << generations)).map(move |position| DyadicIndex { level, position })
    }

    /// All intervals at levels `< depth` in heap order.
    pub fn internal(depth: u32) -> impl Iterator<Item = DyadicIndex> {
        (0..(1usize << depth) - 1).map(DyadicIndex::from_heap_index)
    }

    /// All intervals at levels `<= depth` (leaves included) in heap order.
    pub fn all(depth: u32) -> impl Iterator<Item = DyadicIndex> {
        (0..(1usize << (depth + 1)) - 1).map(DyadicIndex::from_heap_index)
    }
}

impl fmt::Display for DyadicIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}·2^-{}, {}·2^-{})", self.position, self.level, self.position + 1, self.level)
    }
}

pub(crate) fn num_internal(depth: u32) -> usize {
    (1usize << depth) - 1
}

fn check_depth(depth: u32) -> Result<()> {
    if depth == 0 || depth > MAX_DEPTH {
        return Err(Error::domain(format!("depth must be in 1..={MAX_DEPTH}, got {depth}")));
    }
    Ok(())
}

/// Real-valued function on the `2^depth` leaves of the dyadic tree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeafFunction<T> {
    depth: u32,
    values: Vec<T>,
}

impl<T: Scalar> LeafFunction<T> {
    pub fn new(depth: u32, values: Vec<T>) -> Result<Self> {
        check_depth(depth)?;
        if values.len() != 1usize << depth {
            return Err(Error::structural(format!(
                "depth {depth} needs {} leaf values, got {}",
                1usize << depth,
                values.len()
            )));
        }
        Ok(LeafFunction { depth, values })
    }

    pub fn from_fn(depth: u32, f: impl FnMut(usize) -> T) -> Result<Self> {
        check_depth(depth)?;
        Ok(LeafFunction { depth, values: (0..1usize << depth).map(f).collect() })
    }

    pub fn constant(depth: u32, c: T) -> Result<Self> {
        Self::from_fn(depth, |_| c)
    }

    /// `χ_I` sampled on the leaves.
    pub fn indicator(depth: u32, interval: DyadicIndex) -> Result<Self> {
        check_level(interval, depth)?;
        let range = interval.leaf_range(depth);
        Self::from_fn(depth, |k| if range.contains(&k) { T::one() } else { T::zero() })
    }

    /// The Haar function `h_I` sampled on the leaves.
    pub fn haar(depth: u32, interval: DyadicIndex) -> Result<Self> {
        check_internal(interval, depth)?;
        let amp = T::one() / interval.length::<T>().sqrt();
        let range = interval.leaf_range(depth);
        let mid = range.start + range.len() / 2;
        Self::from_fn(depth, |k| {
            if k < range.start || k >= range.end {
                T::zero()
            } else if k < mid {
                amp
            } else {
                -amp
            }
        })
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Measure of a single leaf, `2^{-depth}`.
    pub fn leaf_measure(&self) -> T {
        T::pow2(-(self.depth as i32))
    }

    pub fn integral(&self) -> T {
        self.values.iter().copied().sum::<T>() * self.leaf_measure()
    }

    /// Unweighted `L²([0,1))` norm.
    pub fn l2_norm(&self) -> T {
        (self.values.iter().map(|&v| v * v).sum::<T>() * self.leaf_measure()).sqrt()
    }

    /// Unweighted `L²` inner product.
    pub fn inner(&self, other: &Self) -> Result<T> {
        same_depth(self, other)?;
        Ok(self.values.iter().zip(&other.values).map(|(&a, &b)| a * b).sum::<T>() * self.leaf_measure())
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        LeafFunction { depth: self.depth, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        same_depth(self, other)?;
        Ok(LeafFunction {
            depth: self.depth,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    /// Leafwise product.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, c: T) -> Self {
        self.map(|v| v * c)
    }

    pub fn abs(&self) -> Self {
        self.map(|v| v.abs())
    }

    /// The function reflected about `x = 1/2` (leaf order reversed).
    pub fn mirrored(&self) -> Self {
        let mut values = self.values.clone();
        values.reverse();
        LeafFunction { depth: self.depth, values }
    }

    /// Averages over every dyadic interval, computed bottom-up.
    pub fn pyramid(&self) -> Pyramid<T> {
        Pyramid::new(self)
    }

    pub fn haar_expansion(&self) -> HaarExpansion<T> {
        HaarExpansion::analyze(self)
    }

    /// Parses the text format: optional `#` comment lines, a `depth=<n>`
    /// header, then `2^n` decimal values one per line. Returns the function
    /// and the comment lines (without the leading `#`).
    pub fn parse_text(text: &str) -> Result<(Self, Vec<String>)> {
        let mut comments = Vec::new();
        let mut depth = None;
        let mut values = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let lineno = i + 1;
            if line.is_empty() {
                continue;
            }
            if let Some(c) = line.strip_prefix('#') {
                comments.push(c.trim().to_string());
                continue;
            }
            match depth {
                None => {
                    let d = line
                        .strip_prefix("depth=")
                        .ok_or_else(|| Error::parse(lineno, "expected `depth=<n>` header"))?;
                    depth = Some(d.trim().parse::<u32>().map_err(|e| Error::parse(lineno, e.to_string()))?);
                }
                Some(_) => {
                    let v: f64 = line.parse().map_err(|_| Error::parse(lineno, format!("bad value `{line}`")))?;
                    if !v.is_finite() {
                        return Err(Error::parse(lineno, "non-finite value"));
                    }
                    values.push(T::lit(v));
                }
            }
        }
        let depth = depth.ok_or_else(|| Error::parse(0, "missing `depth=<n>` header"))?;
        Ok((Self::new(depth, values)?, comments))
    }

    pub fn to_text(&self, comments: &[String]) -> String {
        let mut out = String::new();
        for c in comments {
            out.push_str("# ");
            out.push_str(c);
            out.push('\n');
        }
        out.push_str(&format!("depth={}\n", self.depth));
        for v in &self.values {
            out.push_str(&format!("{}\n", v.as_f64()));
        }
        out
    }
}

pub(crate) fn same_depth<T>(a: &LeafFunction<T>, b: &LeafFunction<T>) -> Result<()> {
    if a.depth != b.depth {
        return Err(Error::structural(format!("depth mismatch: {} vs {}", a.depth, b.depth)));
    }
    Ok(())
}

pub(crate) fn check_level(interval: DyadicIndex, depth: u32) -> Result<()> {
    if interval.level > depth || interval.position >= 1u64 << interval.level {
        return Err(Error::domain(format!("interval {interval} not in a depth-{depth} tree")));
    }
    Ok(())
}

pub(crate) fn check_internal(interval: DyadicIndex, depth: u32) -> Result<()> {
    check_level(interval, depth)?;
    if interval.level == depth {
        return Err(Error::domain(format!("interval {interval} is a leaf of the depth-{depth} tree")));
    }
    Ok(())
}

/// Mean of a block of `2^k` values by repeated pairwise halving. This is the
/// same arithmetic [`Pyramid`] performs, so the two agree bitwise.
fn block_mean<T: Scalar>(values: &[T]) -> T {
    let mut buf: Vec<T> = values.to_vec();
    while buf.len() > 1 {
        buf = buf.chunks(2).map(|p| (p[0] + p[1]) * T::half()).collect();
    }
    buf[0]
}

/// `⟨f⟩_I`.
pub fn average<T: Scalar>(f: &LeafFunction<T>, interval: DyadicIndex) -> Result<T> {
    check_level(interval, f.depth)?;
    Ok(block_mean(&f.values[interval.leaf_range(f.depth)]))
}

/// `Δ_I f = (⟨f⟩_{I₋} − ⟨f⟩_{I₊}) / 2`.
pub fn martingale_difference<T: Scalar>(f: &LeafFunction<T>, interval: DyadicIndex) -> Result<T> {
    check_internal(interval, f.depth)?;
    let l = average(f, interval.left())?;
    let r = average(f, interval.right())?;
    Ok((l - r) * T::half())
}

/// `(f, h_I) = √|I| · Δ_I f`.
pub fn haar_coefficient<T: Scalar>(f: &LeafFunction<T>, interval: DyadicIndex) -> Result<T> {
    Ok(interval.length::<T>().sqrt() * martingale_difference(f, interval)?)
}

/// Averages of a leaf function over every dyadic interval, level by level.
#[derive(Clone, Debug)]
pub struct Pyramid<T> {
    levels: Vec<Vec<T>>,
}

impl<T: Scalar> Pyramid<T> {
    pub fn new(f: &LeafFunction<T>) -> Self {
        let depth = f.depth as usize;
        let mut levels = vec![Vec::new(); depth + 1];
        levels[depth] = f.values.clone();
        for l in (0..depth).rev() {
            levels[l] = levels[l + 1].chunks(2).map(|p| (p[0] + p[1]) * T::half()).collect();
        }
        Pyramid { levels }
    }

    pub fn depth(&self) -> u32 {
        (self.levels.len() - 1) as u32
    }

    pub fn avg(&self, interval: DyadicIndex) -> T {
        self.levels[interval.level as usize][interval.position as usize]
    }

    pub fn level(&self, level: u32) -> &[T] {
        &self.levels[level as usize]
    }

    /// `Δ_I`; `interval` must be internal.
    pub fn delta(&self, interval: DyadicIndex) -> T {
        (self.avg(interval.left()) - self.avg(interval.right())) * T::half()
    }

    /// `(f, h_I)`; `interval` must be internal.
    pub fn haar(&self, interval: DyadicIndex) -> T {
        interval.length::<T>().sqrt() * self.delta(interval)
    }
}

/// Mean plus Haar coefficients `(f, h_I)` of every internal interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HaarExpansion<T> {
    depth: u32,
    mean: T,
    coefficients: Vec<T>,
}

impl<T: Scalar> HaarExpansion<T> {
    pub fn analyze(f: &LeafFunction<T>) -> Self {
        let p = f.pyramid();
        HaarExpansion {
            depth: f.depth,
            mean: p.avg(DyadicIndex::ROOT),
            coefficients: DyadicIndex::internal(f.depth).map(|i| p.haar(i)).collect(),
        }
    }

    /// Coefficients in heap order, one per internal interval.
    pub fn from_parts(depth: u32, mean: T, coefficients: Vec<T>) -> Result<Self> {
        check_depth(depth)?;
        if coefficients.len() != num_internal(depth) {
            return Err(Error::structural(format!(
                "depth {depth} needs {} coefficients, got {}",
                num_internal(depth),
                coefficients.len()
            )));
        }
        Ok(HaarExpansion { depth, mean, coefficients })
    }

    pub fn from_map(depth: u32, mean: T, map: &BTreeMap<DyadicIndex, T>) -> Result<Self> {
        check_depth(depth)?;
        let coefficients = DyadicIndex::internal(depth)
            .map(|i| map.get(&i).copied().ok_or_else(|| Error::structural(format!("missing coefficient for {i}"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(HaarExpansion { depth, mean, coefficients })
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn mean(&self) -> T {
        self.mean
    }

    pub fn coefficients(&self) -> &[T] {
        &self.coefficients
    }

    pub fn coefficient(&self, interval: DyadicIndex) -> Result<T> {
        check_internal(interval, self.depth)?;
        Ok(self.coefficients[interval.heap_index()])
    }

    /// Inverse of [`HaarExpansion::analyze`], walking averages top-down.
    pub fn synthesize(&self) -> LeafFunction<T> {
        let mut avgs = vec![self.mean];
        for level in 0..self.depth {
            let scale = T::one() / T::pow2(-(level as i32)).sqrt();
            let base = num_internal(level);
            let mut next = Vec::with_capacity(avgs.len() * 2);
            for (pos, &a) in avgs.iter().enumerate() {
                let delta = self.coefficients[base + pos] * scale;
                next.push(a + delta);
                next.push(a - delta);
            }
            avgs = next;
        }
        LeafFunction { depth: self.depth, values: avgs }
    }
}

pub fn haar_synthesis<T: Scalar>(e: &HaarExpansion<T>) -> LeafFunction<T> {
    e.synthesize()
}
