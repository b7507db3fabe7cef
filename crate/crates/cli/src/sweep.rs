//! One row per `(family, param, seed, depth)`: the weight is built or read,
//! then every selected experiment runs on it.

use std::fs;
use std::path::Path;

use dyadic_lab::bellman::{in_domain, lemma_campaign, point_from_data, sample_point, DpConfig, DpEstimator, Lemma, LemmaReport};
use dyadic_lab::embedding::{
    carleson_measure_of, carltrick_check, duality_product, four_terms, key_sum, key_sum_max,
    ltrick_ratios, term_one_max, vavo_for_weight, ROUNDING_SLACK,
};
use dyadic_lab::form::SearchOptions;
use dyadic_lab::shifts::{norm_exact_small, norm_lower_search_with};
use dyadic_lab::weights::{a2_characteristic, dual, gen_cascade, gen_power};
use dyadic_lab::{DyadicIndex, LeafFunction64, NormMode, ShiftSpec64, Weight64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{Experiment, Family, NormChoice, SweepConfig};

/// Sampled points for the `B^d / (Q (X + Y))` maximum.
pub const B1_POINTS: usize = 200;
/// Deepest level of `J` checked by `point_from_data` in a row.
const PFD_MAX_LEVEL: u32 = 4;

/// Where a row's weight comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RowKey {
    pub family: Family,
    pub param: f64,
    pub seed: u64,
    pub depth: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub family: String,
    pub param: f64,
    pub seed: u64,
    pub depth: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    pub q: Option<f64>,
    pub q_witness: Option<String>,
    pub shift_norm: Option<f64>,
    pub shift_norm_mode: Option<NormMode>,
    pub key_sum_max: Option<f64>,
    pub term_i_max: Option<f64>,
    /// Largest `key_sum / (I + II + III + IV)` over the random pairs.
    pub key_over_terms_max: Option<f64>,
    pub ltrick_w_reading_max: Option<f64>,
    pub ltrick_literal_reading_max: Option<f64>,
    pub carleson_norm: Option<f64>,
    pub carleson_witness: Option<String>,
    pub vavo_ratio_max: Option<f64>,
    pub vavo_hypothesis_holds: Option<bool>,
    pub duality_ratio_max: Option<f64>,
    pub carltrick_max_ratio: Option<f64>,
    pub c_emp: Option<f64>,
    pub point_from_data_checked: Option<usize>,
    /// Largest `local_sum / B` at the emitted points whose subtree fits in the DP depth.
    pub domination_ratio_max: Option<f64>,
    pub lemmas: Vec<LemmaReport>,
    pub violations: Vec<String>,
    pub error: Option<String>,
}

pub fn row_keys(cfg: &SweepConfig) -> Vec<RowKey> {
    let mut keys = Vec::new();
    match cfg.family {
        Family::File => {
            for (k, path) in cfg.files.iter().enumerate() {
                for &seed in &cfg.seeds {
                    let file = Some(path.display().to_string());
                    keys.push(RowKey { family: Family::File, param: k as f64, seed, depth: 0, file });
                }
            }
        }
        family => {
            for &param in &cfg.params {
                for &seed in &cfg.seeds {
                    for &depth in &cfg.depths {
                        keys.push(RowKey { family, param, seed, depth, file: None });
                    }
                }
            }
        }
    }
    keys
}

/// Provenance comment stored in weight files.
pub fn provenance(key: &RowKey) -> String {
    match key.family {
        Family::Power => format!("family=power a={}", key.param),
        Family::Cascade => format!("family=cascade eps={} seed={}", key.param, key.seed),
        Family::File => format!("family=file source={}", key.file.as_deref().unwrap_or("")),
    }
}

pub fn build_weight(key: &RowKey) -> Result<Weight64, String> {
    match key.family {
        Family::Power => gen_power(key.depth, key.param).map_err(|e| e.to_string()),
        Family::Cascade => gen_cascade(key.depth, key.param, key.seed).map_err(|e| e.to_string()),
        Family::File => {
            let path = key.file.as_deref().unwrap_or("");
            read_weight(Path::new(path))
        }
    }
}

pub fn read_weight(path: &Path) -> Result<Weight64, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let (f, _) = LeafFunction64::parse_text(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    if f.depth() == 0 {
        return Err(format!("{}: depth 0 has no internal intervals", path.display()));
    }
    Weight64::new(f).map_err(|e| format!("{}: {e}", path.display()))
}

fn random_pair(rng: &mut ChaCha8Rng, depth: u32) -> (LeafFunction64, LeafFunction64) {
    let mut draw = || LeafFunction64::from_fn(depth, |_| rng.gen_range(-1.0..1.0)).expect("depth validated");
    (draw(), draw())
}

fn stream(seed: u64, experiment: Experiment) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(experiment as u64 + 1);
    rng
}

pub fn compute_row(cfg: &SweepConfig, key: &RowKey) -> Row {
    let mut row = Row {
        family: key.family.name().to_string(),
        param: key.param,
        seed: key.seed,
        depth: key.depth,
        file: key.file.clone(),
        ..Row::default()
    };
    let w = match build_weight(key) {
        Ok(w) => w,
        Err(e) => {
            row.error = Some(e);
            return row;
        }
    };
    row.depth = w.depth();
    if let Err(e) = run_experiments(cfg, key.seed, &w, &mut row) {
        row.error = Some(e.to_string());
    }
    row
}

fn run_experiments(cfg: &SweepConfig, seed: u64, w: &Weight64, row: &mut Row) -> dyadic_lab::Result<()> {
    let depth = w.depth();
    let a2 = a2_characteristic(w);
    let q = a2.characteristic;
    row.q = Some(q);
    row.q_witness = Some(a2.witness.to_string());
    let search = SearchOptions::new(cfg.iters, seed);
    let has = |e: Experiment| cfg.experiments.contains(&e);

    if has(Experiment::A2) {
        if q.is_nan() || q < 1.0 {
            row.violations.push(format!("[w]_A2 = {q} < 1"));
        }
        let qd = a2_characteristic(&dual(w)).characteristic;
        if qd != q {
            row.violations.push(format!("[w]_A2 = {q} differs from [sigma]_A2 = {qd}"));
        }
    }

    if has(Experiment::ShiftNorm) {
        let spec = ShiftSpec64::constant(cfg.complexity, depth, 1.0)?;
        let exact = match cfg.norm_mode {
            NormChoice::Exact => true,
            NormChoice::Search => false,
            NormChoice::Auto => depth <= 4,
        };
        let est = if exact { norm_exact_small(&spec, w)? } else { norm_lower_search_with(&spec, w, search)? };
        if !est.value.is_finite() {
            row.violations.push("shift norm is not finite".into());
        }
        row.shift_norm = Some(est.value);
        row.shift_norm_mode = Some(est.mode);
    }

    if has(Experiment::KeySum) {
        row.key_sum_max = Some(key_sum_max(w, search)?.value);
    }

    if has(Experiment::FourTerms) {
        row.term_i_max = Some(term_one_max(w, search)?.value);
        let mut rng = stream(seed, Experiment::FourTerms);
        let (mut worst, mut lw, mut ll) = (0.0f64, 0.0f64, 0.0f64);
        let mut failures = 0;
        for _ in 0..cfg.trials {
            let (phi, psi) = random_pair(&mut rng, depth);
            let key = key_sum(&phi, &psi, w)?;
            let total = four_terms(&phi, &psi, w)?.total();
            if key > total * (1.0 + ROUNDING_SLACK) {
                failures += 1;
            }
            if total > 0.0 {
                worst = worst.max(key / total);
            }
            let l = ltrick_ratios(&phi, &psi, w)?;
            lw = lw.max(l.w_reading);
            ll = ll.max(l.literal_reading);
        }
        if failures > 0 {
            row.violations.push(format!("key_sum exceeded I + II + III + IV on {failures} of {} pairs", cfg.trials));
        }
        row.key_over_terms_max = Some(worst);
        row.ltrick_w_reading_max = Some(lw);
        row.ltrick_literal_reading_max = Some(ll);
    }

    if has(Experiment::Carleson) {
        let m = carleson_measure_of(w);
        let (norm, witness) = m.norm_with_witness();
        if m != carleson_measure_of(&dual(w)) {
            row.violations.push("Carleson measure of w differs from that of sigma".into());
        }
        row.carleson_norm = Some(norm);
        row.carleson_witness = Some(witness.to_string());
    }

    if has(Experiment::Vavo) {
        let r = vavo_for_weight(w)?;
        if !r.hypothesis_holds {
            row.violations.push(format!("<u><v> <= 1 failed (max product {})", r.max_hypothesis_product));
        }
        row.vavo_ratio_max = Some(r.ratio);
        row.vavo_hypothesis_holds = Some(r.hypothesis_holds);
    }

    if has(Experiment::Duality) {
        let mut rng = stream(seed, Experiment::Duality);
        let (mut best, mut trick) = (0.0f64, 0.0f64);
        let mut failures = 0;
        for _ in 0..cfg.trials {
            let (phi, psi) = random_pair(&mut rng, depth);
            best = best.max(duality_product(&phi, &psi, w)?.ratio);
            let c = carltrick_check(&phi, &psi, w)?;
            failures += usize::from(!c.holds);
            if c.rhs_bound > 0.0 {
                trick = trick.max(c.lhs / c.rhs_bound);
            }
        }
        if !best.is_finite() {
            row.violations.push("duality ratio is not finite".into());
        }
        if failures > 0 {
            row.violations.push(format!("Carleson trick bound failed on {failures} of {} pairs", cfg.trials));
        }
        row.duality_ratio_max = Some(best);
        row.carltrick_max_ratio = Some(trick);
    }

    if has(Experiment::BellmanB1) {
        let est = DpEstimator::<f64>::new(q, DpConfig { samples: cfg.dp_samples, seed, ..DpConfig::default() })?;
        let mut rng = stream(seed, Experiment::BellmanB1);
        let mut c_emp = 0.0f64;
        for _ in 0..B1_POINTS {
            let p = sample_point::<f64, _>(&mut rng, q);
            c_emp = c_emp.max(est.b1_ratio(&p, cfg.dp_depth)?);
        }
        row.c_emp = Some(c_emp);
        let mut checked = 0;
        let mut outside = 0;
        let mut domination: Option<f64> = None;
        for _ in 0..cfg.trials {
            let (phi, psi) = random_pair(&mut rng, depth);
            for j in DyadicIndex::all(depth.min(PFD_MAX_LEVEL)) {
                let (p, local) = point_from_data(&phi, &psi, w, j)?;
                checked += 1;
                outside += usize::from(!in_domain(&p, q));
                let below = (depth - j.level) as usize;
                if below <= cfg.dp_depth {
                    let b = est.estimate(&p, below)?;
                    if b > 0.0 {
                        domination = Some(domination.map_or(local / b, |d| d.max(local / b)));
                    }
                }
            }
        }
        row.domination_ratio_max = domination;
        if outside > 0 {
            row.violations.push(format!("point_from_data left the domain on {outside} of {checked} intervals"));
        }
        row.point_from_data_checked = Some(checked);
    }

    for (e, lemma) in [(Experiment::LemmaTriangle, Lemma::Triangle), (Experiment::LemmaBarycenter, Lemma::Barycenter)] {
        if has(e) {
            let report = lemma_campaign(lemma, q, cfg.lemma_trials, seed)?;
            if report.counterexamples > 0 {
                row.violations.push(format!(
                    "{} lemma: {} counterexamples at k = {}",
                    lemma.name(),
                    report.counterexamples,
                    report.k_tested
                ));
            }
            row.lemmas.push(report);
        }
    }
    Ok(())
}
