//! Command-line front end for the `mmc-core` library.

pub mod demo;
pub mod spec;

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use mmc_core::channel::{self, Estimation, DEFAULT_GUARD};
use mmc_core::composite::build_mrd_composite;
use mmc_core::linalg::{format_matrix, parse_matrix, smith_normal_form};
use mmc_core::{ChainRing, ChainRingSpec};

use crate::spec::{ConfigFile, ExperimentSpec, ModelSpec, Overrides};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Spec(String),
    #[error("{0}")]
    Guard(String),
    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Spec(_) => 2,
            Self::Guard(_) => 3,
            Self::Verification(_) => 4,
        }
    }
}

impl From<mmc_core::Error> for CliError {
    fn from(e: mmc_core::Error) -> Self {
        match e {
            mmc_core::Error::GuardExceeded { .. } => Self::Guard(format!("{e}; rerun with --mc <SAMPLES>")),
            other => Self::Spec(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "mmc", version, about = "Coding and capacity tools for matrix channels over finite chain rings")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Chain ring: z:p:s for Z_{p^s}, fqu:p:r:s for F_{p^r}[u]/(u^s)
    #[arg(long, global = true)]
    pub ring: Option<String>,
    /// Number of transmitted packets (rows of X)
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Number of received packets (rows of Y); defaults to n
    #[arg(long, global = true)]
    pub m: Option<usize>,
    /// Packet shape, e.g. 1,2,2
    #[arg(long, global = true)]
    pub lambda: Option<String>,
    /// Base seed for all random draws
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Number of simulated codewords
    #[arg(long, global = true)]
    pub trials: Option<u64>,
    /// Use Monte Carlo with this many samples instead of exact enumeration
    #[arg(long, global = true)]
    pub mc: Option<u64>,
    /// Cap on worker threads
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// JSON experiment file; flags override its values
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Append results to this file instead of printing them
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Smith normal form A = P D Q of a matrix file
    Snf {
        /// Matrix file: a line "m n" followed by m rows of n entries
        matrix: PathBuf,
    },
    /// Channel capacity in q-ary digits per use
    Capacity {
        /// uniform, const:<shape> or table:<path>
        #[arg(long)]
        model: Option<String>,
        /// Also report the capacity in bits
        #[arg(long)]
        bits: bool,
    },
    /// Distribution of the transfer-matrix shape
    Shapedist {
        /// uniform, const:<shape> or table:<path>
        #[arg(long)]
        model: Option<String>,
    },
    /// Monte Carlo decoding error rate of an MRD composite code
    Simulate {
        /// uniform, const:<shape> or table:<path>
        #[arg(long)]
        model: Option<String>,
        /// Correctable shape deficiency; defaults to n - rho for const models
        #[arg(long)]
        beta: Option<String>,
        /// Channel uses per codeword
        #[arg(long)]
        shots: Option<usize>,
    },
    /// Digit-recovery walkthrough for a diagonal channel over Z_8
    Demo,
}

/// Runs a parsed command and returns its text output.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Snf { matrix } => cmd_snf(cli.global.ring.as_deref(), matrix),
        Command::Demo => demo::render(),
        Command::Capacity { model, bits } => cmd_capacity(&resolve(cli, model, &None, &None)?, *bits),
        Command::Shapedist { model } => cmd_shapedist(&resolve(cli, model, &None, &None)?),
        Command::Simulate { model, beta, shots } => cmd_simulate(&resolve(cli, model, beta, shots)?),
    }
}

/// Runs `cli`, sending output to `--out` (appending) or returning it for stdout.
pub fn execute(cli: &Cli) -> Result<Option<String>, CliError> {
    let text = run(cli)?;
    match &cli.global.out {
        Some(path) => {
            append_output(path, &text)?;
            Ok(None)
        }
        None => Ok(Some(text)),
    }
}

/// Appends `text`; when the file already has content, the CSV header line
/// (the first non-comment line) is not repeated.
fn append_output(path: &Path, text: &str) -> Result<(), CliError> {
    let existing = fs::read_to_string(path).unwrap_or_default();
    let body = if existing.trim().is_empty() {
        text.to_string()
    } else {
        let mut seen_header = false;
        text.lines()
            .filter(|l| {
                if l.starts_with('#') || seen_header {
                    return true;
                }
                seen_header = true;
                !existing.lines().any(|e| e == *l)
            })
            .map(|l| format!("{l}\n"))
            .collect()
    };
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| CliError::Spec(format!("cannot open {}: {e}", path.display())))?;
    f.write_all(body.as_bytes()).map_err(|e| CliError::Spec(format!("cannot write {}: {e}", path.display())))
}

fn resolve(
    cli: &Cli,
    model: &Option<String>,
    beta: &Option<String>,
    shots: &Option<usize>,
) -> Result<ExperimentSpec, CliError> {
    let g = &cli.global;
    let file = match &g.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let flags = Overrides {
        ring: g.ring.clone(),
        n: g.n,
        m: g.m,
        lambda: g.lambda.clone(),
        seed: g.seed,
        trials: g.trials,
        mc: g.mc,
        threads: g.threads,
        model: model.clone(),
        beta: beta.clone(),
        shots: *shots,
    };
    ExperimentSpec::resolve(&flags, &file)
}

fn csv_text(header: &[String], rows: &[Vec<String>]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Verification(format!("csv: {e}"));
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(row).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Verification(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn with_echo(spec: &ExperimentSpec, command: &str, csv: String) -> String {
    format!("{}\n{csv}", spec.echo(command))
}

fn estimation(spec: &ExperimentSpec) -> Estimation {
    match spec.mc {
        Some(trials) => Estimation::MonteCarlo { trials, seed: spec.seed, threads: spec.threads },
        None => Estimation::Exact { guard: DEFAULT_GUARD },
    }
}

pub fn cmd_snf(ring: Option<&str>, matrix: &Path) -> Result<String, CliError> {
    let ring_spec: ChainRingSpec = ring
        .ok_or_else(|| CliError::Spec("missing --ring".into()))?
        .parse()
        .map_err(|e: mmc_core::Error| CliError::Spec(e.to_string()))?;
    let ring = ChainRing::new(ring_spec)?;
    let text = fs::read_to_string(matrix)
        .map_err(|e| CliError::Spec(format!("cannot read {}: {e}", matrix.display())))?;
    let a = parse_matrix(&ring, &text)?;
    let dec = smith_normal_form(&a);
    if dec.product() != a {
        return Err(CliError::Verification("P D Q differs from A".into()));
    }
    let mut out = format!("# mmc snf ring={}\n", ring.spec());
    for (name, m) in [("A", &a), ("P", &dec.p), ("D", &dec.d), ("Q", &dec.q)] {
        out.push_str(&format!("{name} =\n{}", format_matrix(m)));
    }
    out.push_str(&format!("shape = ({})\n", dec.shape));
    Ok(out)
}

pub fn cmd_capacity(spec: &ExperimentSpec, bits: bool) -> Result<String, CliError> {
    let cfg = spec.channel()?;
    let c = channel::capacity(&cfg, estimation(spec))?;
    let mut header: Vec<String> = ["ring", "n", "m", "lambda", "model", "capacity_qdigits", "stderr", "trials"]
        .map(String::from)
        .to_vec();
    let mut row = vec![
        spec.ring.spec().to_string(),
        spec.n.to_string(),
        spec.m.to_string(),
        spec.lambda.to_string(),
        spec.model.to_string(),
        c.value.to_string(),
        c.stderr.unwrap_or(0.0).to_string(),
        c.trials.unwrap_or(0).to_string(),
    ];
    if bits {
        header.push("capacity_bits".into());
        row.push((c.value * (spec.ring.q() as f64).log2()).to_string());
    }
    Ok(with_echo(spec, "capacity", csv_text(&header, &[row])?))
}

pub fn cmd_shapedist(spec: &ExperimentSpec) -> Result<String, CliError> {
    let cfg = spec.channel()?;
    let dist = channel::shape_distribution(&cfg, estimation(spec))?;
    let header = ["ring", "n", "m", "shape", "probability", "mode"].map(String::from).to_vec();
    let rows: Vec<Vec<String>> = dist
        .probabilities
        .iter()
        .map(|(rho, p)| {
            vec![
                spec.ring.spec().to_string(),
                spec.n.to_string(),
                spec.m.to_string(),
                rho.to_string(),
                p.to_string(),
                dist.mode().to_string(),
            ]
        })
        .collect();
    Ok(with_echo(spec, "shapedist", csv_text(&header, &rows)?))
}

pub fn cmd_simulate(spec: &ExperimentSpec) -> Result<String, CliError> {
    let cfg = spec.channel()?;
    let beta = match (&spec.beta, &spec.model) {
        (Some(b), _) => b.clone(),
        (None, ModelSpec::ConstantShape(rho)) => rho.complement(spec.n)?,
        (None, _) => return Err(CliError::Spec("--beta is required unless the model is const:<shape>".into())),
    };
    let code = build_mrd_composite(&spec.ring, spec.n, &spec.lambda, &beta, spec.shots)?;
    let report = channel::simulate_error_rate(&cfg, &code, spec.trials, spec.seed, spec.threads)?;
    if report.miscorrections > 0 {
        return Err(CliError::Verification(format!("{} wrong unique decodes", report.miscorrections)));
    }
    let mut header: Vec<String> =
        ["ring", "n", "m", "lambda", "beta", "trials", "seed", "errors", "error_rate"].map(String::from).to_vec();
    let mut row = vec![
        spec.ring.spec().to_string(),
        spec.n.to_string(),
        spec.m.to_string(),
        spec.lambda.to_string(),
        beta.to_string(),
        report.trials.to_string(),
        report.seed.to_string(),
        report.errors.to_string(),
        report.error_rate().to_string(),
    ];
    for (i, f) in report.stage_failures.iter().enumerate() {
        header.push(format!("stage{i}_failures"));
        row.push(f.to_string());
    }
    let mut spec = spec.clone();
    spec.beta = Some(beta);
    Ok(with_echo(&spec, "simulate", csv_text(&header, &[row])?))
}
