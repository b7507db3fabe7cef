use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dyadic_lab_cli::{
    build_weight, provenance, row_keys, run_sweep, Experiment, Family, NormChoice, SweepConfig, SweepError, SweepOutput,
};

const EXIT_USAGE: u8 = 1;
const EXIT_VIOLATION: u8 = 2;

#[derive(Parser)]
#[command(name = "dyadic-lab", version, about = "Weighted dyadic experiments: A2 weights, Haar shifts, Carleson sums, Bellman geometry")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// A2 characteristic of each weight.
    A2 {
        #[command(flatten)]
        common: Common,
        /// Write each generated weight into this directory.
        #[arg(long)]
        emit_weights: Option<PathBuf>,
    },
    /// Norm of the shift with all coefficients 1.
    Norm(Common),
    /// Key sum, the four terms, and the maximal-function duality product.
    Embed(Common),
    /// Carleson norm of |Δw||Δσ||I| and the u = w/Q, v = σ ratio.
    Carleson(Common),
    /// Dynamic-programming estimate of B and the data-point membership check.
    Bellman(Common),
    /// Triangle and barycenter lemma campaigns at Q = [w]_A2.
    Geom(Common),
    /// Any subset of the experiments.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = Experiment::ALL.to_vec())]
        experiments: Vec<Experiment>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long, value_enum, default_value_t = Family::Power)]
    family: Family,
    /// Family parameters (`a` for power, `eps` for cascade), comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    param: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![6u32])]
    depth: Vec<u32>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0u64])]
    seed: Vec<u64>,
    /// Weight files for `--family file`.
    #[arg(long)]
    file: Vec<PathBuf>,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON summary destination.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Worker threads; defaults to the available cores.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, default_value_t = 200)]
    iters: usize,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    complexity: u32,
    #[arg(long, value_enum, default_value_t = NormChoice::Auto)]
    norm_mode: NormChoice,
    #[arg(long, default_value_t = 8)]
    dp_depth: usize,
    #[arg(long, default_value_t = 16)]
    dp_samples: usize,
    #[arg(long, default_value_t = 2000)]
    lemma_trials: usize,
}

impl Common {
    fn config(&self, experiments: &[Experiment]) -> SweepConfig {
        SweepConfig {
            family: self.family,
            params: self.param.clone(),
            depths: self.depth.clone(),
            seeds: self.seed.clone(),
            files: self.file.clone(),
            experiments: experiments.iter().copied().collect::<BTreeSet<_>>(),
            iters: self.iters,
            trials: self.trials,
            complexity: self.complexity,
            norm_mode: self.norm_mode,
            dp_depth: self.dp_depth,
            dp_samples: self.dp_samples,
            lemma_trials: self.lemma_trials,
            jobs: self.jobs,
        }
    }
}

fn emit_weights(cfg: &SweepConfig, dir: &PathBuf) -> Result<(), SweepError> {
    fs::create_dir_all(dir)?;
    for key in row_keys(cfg) {
        if key.family == Family::File {
            continue;
        }
        let w = build_weight(&key).map_err(SweepError::Usage)?;
        let name = format!("{}_{}_{}_{}.txt", key.family.name(), key.param, key.seed, key.depth);
        fs::write(dir.join(name), w.as_function().to_text(&[provenance(&key)]))?;
    }
    Ok(())
}

fn report(common: &Common, out: &SweepOutput) -> Result<(), SweepError> {
    match &common.out {
        Some(path) => out.write_csv(BufWriter::new(File::create(path)?))?,
        None => out.write_csv(io::stdout().lock())?,
    }
    if let Some(path) = &common.json {
        let mut f = BufWriter::new(File::create(path)?);
        out.write_json(&mut f)?;
        writeln!(f)?;
    }
    let s = &out.summary;
    for (name, fit) in &s.fits {
        if let (Some(slope), Some(r2)) = (fit.slope, fit.r2) {
            eprintln!("slope {name}: {slope:.4} (r2 {r2:.4}, {} points)", fit.used);
        }
    }
    for e in &s.errors {
        eprintln!("row {}: error: {}", e.row, e.message);
    }
    for v in &s.violations {
        eprintln!("row {}: invariant violated: {}", v.row, v.message);
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool, SweepError> {
    use Experiment::*;
    let (common, experiments, emit) = match &cli.command {
        Command::A2 { common, emit_weights } => (common, vec![A2], emit_weights.as_ref()),
        Command::Norm(c) => (c, vec![A2, ShiftNorm], None),
        Command::Embed(c) => (c, vec![A2, KeySum, FourTerms, Duality], None),
        Command::Carleson(c) => (c, vec![A2, Carleson, Vavo], None),
        Command::Bellman(c) => (c, vec![A2, BellmanB1], None),
        Command::Geom(c) => (c, vec![A2, LemmaTriangle, LemmaBarycenter], None),
        Command::Sweep { common, experiments } => (common, experiments.clone(), None),
    };
    let cfg = common.config(&experiments);
    cfg.validate()?;
    if let Some(dir) = emit {
        emit_weights(&cfg, dir)?;
    }
    let out = run_sweep(&cfg)?;
    report(common, &out)?;
    Ok(!out.has_violations())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_VIOLATION),
        Err(e) => {
            eprintln!("dyadic-lab: {e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
