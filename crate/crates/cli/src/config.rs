//! Sweep configuration and its validation.

use std::collections::BTreeSet;
use std::path::PathBuf;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::SweepError;

/// Largest tree depth a sweep row may use.
pub const SWEEP_MAX_DEPTH: u32 = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `x^a` averaged over each leaf; the parameter is `a`.
    Power,
    /// Multiplicative cascade; the parameter is `eps`.
    Cascade,
    /// Weights read from files given with `--file`; the parameter is the file index.
    File,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Power => "power",
            Family::Cascade => "cascade",
            Family::File => "file",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[clap(rename_all = "snake_case")]
pub enum Experiment {
    A2,
    ShiftNorm,
    KeySum,
    FourTerms,
    Carleson,
    Vavo,
    Duality,
    BellmanB1,
    LemmaTriangle,
    LemmaBarycenter,
}

impl Experiment {
    pub const ALL: [Experiment; 10] = [
        Experiment::A2,
        Experiment::ShiftNorm,
        Experiment::KeySum,
        Experiment::FourTerms,
        Experiment::Carleson,
        Experiment::Vavo,
        Experiment::Duality,
        Experiment::BellmanB1,
        Experiment::LemmaTriangle,
        Experiment::LemmaBarycenter,
    ];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum NormChoice {
    /// Exhaustive when the tree has at most 15 internal intervals, search otherwise.
    Auto,
    Exact,
    Search,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub family: Family,
    /// Family parameters; ignored for [`Family::File`], which uses `files`.
    pub params: Vec<f64>,
    /// Tree depths; ignored for [`Family::File`], whose depth comes from the file.
    pub depths: Vec<u32>,
    pub seeds: Vec<u64>,
    pub files: Vec<PathBuf>,
    pub experiments: BTreeSet<Experiment>,
    /// Alternating-maximization iterations of the search estimator.
    pub iters: usize,
    /// Random `(φ, ψ)` pairs per row for the pointwise checks.
    pub trials: usize,
    /// Shift complexity for `shift_norm` (coefficients `c ≡ 1`).
    pub complexity: u32,
    pub norm_mode: NormChoice,
    pub dp_depth: usize,
    pub dp_samples: usize,
    /// Premise-valid trials per lemma campaign.
    pub lemma_trials: usize,
    /// Worker threads; `None` uses every available core.
    pub jobs: Option<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            family: Family::Power,
            params: Vec::new(),
            depths: vec![6],
            seeds: vec![0],
            files: Vec::new(),
            experiments: Experiment::ALL.into_iter().collect(),
            iters: 200,
            trials: 100,
            complexity: 1,
            norm_mode: NormChoice::Auto,
            dp_depth: 8,
            dp_samples: 16,
            lemma_trials: 2000,
            jobs: None,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), SweepError> {
        let usage = |m: String| Err(SweepError::Usage(m));
        if self.experiments.is_empty() {
            return usage("the experiment set is empty".into());
        }
        if self.seeds.is_empty() {
            return usage("the seed list is empty".into());
        }
        if self.jobs == Some(0) {
            return usage("--jobs must be at least 1".into());
        }
        match self.family {
            Family::File => {
                if self.files.is_empty() {
                    return usage("family `file` needs at least one --file".into());
                }
            }
            Family::Power | Family::Cascade => {
                if self.params.is_empty() {
                    return usage("the parameter list is empty".into());
                }
                if self.depths.is_empty() {
                    return usage("the depth list is empty".into());
                }
                if let Some(d) = self.depths.iter().find(|&&d| d == 0 || d > SWEEP_MAX_DEPTH) {
                    return usage(format!("depth {d} outside 1..={SWEEP_MAX_DEPTH}"));
                }
                for &p in &self.params {
                    let ok = match self.family {
                        Family::Power => p > -1.0 && p.is_finite(),
                        _ => (0.0..1.0).contains(&p),
                    };
                    if !ok {
                        let range = if self.family == Family::Power { "a > -1" } else { "0 <= eps < 1" };
                        return usage(format!("parameter {p} outside {range} for family {}", self.family.name()));
                    }
                }
            }
        }
        if self.iters == 0 {
            return usage("--iters must be positive".into());
        }
        Ok(())
    }
}
