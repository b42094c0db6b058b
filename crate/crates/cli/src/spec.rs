//! Experiment specification: JSON config merged with command-line flags.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use mmc_core::channel::{ChannelConfig, TransferModel};
use mmc_core::linalg::parse_matrix;
use mmc_core::{ChainRing, ChainRingSpec, RingMatrix, SShape};
use serde::Deserialize;

use crate::CliError;

/// A shape given either as `"1,2,2"` or `[1, 2, 2]`.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum ShapeValue {
    Text(String),
    List(Vec<usize>),
}

impl ShapeValue {
    fn resolve(&self, what: &str) -> Result<SShape, CliError> {
        match self {
            Self::Text(t) => parse_shape(t, what),
            Self::List(v) => SShape::new(v.clone()).map_err(|e| CliError::Spec(format!("{what}: {e}"))),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    Uniform,
    #[serde(alias = "const")]
    ConstantShape { rho: ShapeValue },
    Table { table_path: PathBuf },
}

/// On-disk experiment config; every field optional, flags take precedence.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub ring: Option<String>,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub lambda: Option<ShapeValue>,
    pub model: Option<ModelConfig>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    #[serde(rename = "N")]
    pub shots: Option<usize>,
    pub beta: Option<ShapeValue>,
    pub mc: Option<u64>,
    pub threads: Option<usize>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Spec(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: Self =
            serde_json::from_str(&text).map_err(|e| CliError::Spec(format!("bad config {}: {e}", path.display())))?;
        // table paths are relative to the config file
        if let Some(ModelConfig::Table { table_path }) = &mut cfg.model {
            if table_path.is_relative() {
                if let Some(dir) = path.parent() {
                    *table_path = dir.join(&*table_path);
                }
            }
        }
        Ok(cfg)
    }
}

/// Transfer model as named by the user.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelSpec {
    Uniform,
    ConstantShape(SShape),
    Table(PathBuf),
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Uniform => f.write_str("uniform"),
            Self::ConstantShape(rho) => write!(f, "const:{rho}"),
            Self::Table(p) => write!(f, "table:{}", p.display()),
        }
    }
}

impl ModelSpec {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let text = text.trim();
        if text == "uniform" {
            return Ok(Self::Uniform);
        }
        if let Some(rho) = text.strip_prefix("const:") {
            return Ok(Self::ConstantShape(parse_shape(rho, "model shape")?));
        }
        if let Some(path) = text.strip_prefix("table:") {
            return Ok(Self::Table(PathBuf::from(path)));
        }
        Err(CliError::Spec(format!("model {text:?} is not uniform, const:<shape> or table:<path>")))
    }

    fn from_config(cfg: &ModelConfig) -> Result<Self, CliError> {
        Ok(match cfg {
            ModelConfig::Uniform => Self::Uniform,
            ModelConfig::ConstantShape { rho } => Self::ConstantShape(rho.resolve("model rho")?),
            ModelConfig::Table { table_path } => Self::Table(table_path.clone()),
        })
    }
}

pub fn parse_shape(text: &str, what: &str) -> Result<SShape, CliError> {
    text.parse().map_err(|e| CliError::Spec(format!("{what}: {e}")))
}

/// Flags shared by every subcommand, before merging with a config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub ring: Option<String>,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub lambda: Option<String>,
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub mc: Option<u64>,
    pub threads: Option<usize>,
    pub model: Option<String>,
    pub beta: Option<String>,
    pub shots: Option<usize>,
}

/// Fully resolved and validated experiment.
#[derive(Clone, Debug)]
pub struct ExperimentSpec {
    pub ring: ChainRing,
    pub n: usize,
    pub m: usize,
    pub lambda: SShape,
    pub model: ModelSpec,
    pub seed: u64,
    pub trials: u64,
    pub mc: Option<u64>,
    pub threads: Option<usize>,
    pub shots: usize,
    pub beta: Option<SShape>,
}

pub const DEFAULT_TRIALS: u64 = 1000;

impl ExperimentSpec {
    pub fn resolve(flags: &Overrides, file: &ConfigFile) -> Result<Self, CliError> {
        let ring_text = flags
            .ring
            .clone()
            .or_else(|| file.ring.clone())
            .ok_or_else(|| CliError::Spec("missing --ring".into()))?;
        let ring_spec: ChainRingSpec = ring_text.parse().map_err(|e| CliError::Spec(format!("{e}")))?;
        let ring = ChainRing::new(ring_spec).map_err(|e| CliError::Spec(format!("{e}")))?;
        let n = flags.n.or(file.n).ok_or_else(|| CliError::Spec("missing --n".into()))?;
        let m = flags.m.or(file.m).unwrap_or(n);
        let lambda = match (&flags.lambda, &file.lambda) {
            (Some(t), _) => parse_shape(t, "lambda")?,
            (None, Some(v)) => v.resolve("lambda")?,
            (None, None) => return Err(CliError::Spec("missing --lambda".into())),
        };
        let model = match (&flags.model, &file.model) {
            (Some(t), _) => ModelSpec::parse(t)?,
            (None, Some(c)) => ModelSpec::from_config(c)?,
            (None, None) => ModelSpec::Uniform,
        };
        let beta = match (&flags.beta, &file.beta) {
            (Some(t), _) => Some(parse_shape(t, "beta")?),
            (None, Some(v)) => Some(v.resolve("beta")?),
            (None, None) => None,
        };
        let spec = Self {
            ring,
            n,
            m,
            lambda,
            model,
            seed: flags.seed.or(file.seed).unwrap_or(0),
            trials: flags.trials.or(file.trials).unwrap_or(DEFAULT_TRIALS),
            mc: flags.mc.or(file.mc),
            threads: flags.threads.or(file.threads),
            shots: flags.shots.or(file.shots).unwrap_or(1),
            beta,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<(), CliError> {
        let s = self.ring.s();
        if self.n == 0 || self.m == 0 {
            return Err(CliError::Spec("n and m must be positive".into()));
        }
        if self.lambda.s() != s {
            return Err(CliError::Spec(format!("lambda = ({}) needs {s} entries", self.lambda)));
        }
        if let Some(beta) = &self.beta {
            if beta.s() != s {
                return Err(CliError::Spec(format!("beta = ({beta}) needs {s} entries")));
            }
        }
        if self.shots == 0 {
            return Err(CliError::Spec("N must be positive".into()));
        }
        if self.mc == Some(0) || self.threads == Some(0) {
            return Err(CliError::Spec("--mc and --threads must be positive".into()));
        }
        Ok(())
    }

    /// Channel configuration; reads the table file for table models.
    pub fn channel(&self) -> Result<ChannelConfig, CliError> {
        let model = match &self.model {
            ModelSpec::Uniform => TransferModel::Uniform,
            ModelSpec::ConstantShape(rho) => TransferModel::ConstantShape(rho.clone()),
            ModelSpec::Table(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| CliError::Spec(format!("cannot read table {}: {e}", path.display())))?;
                TransferModel::Table(parse_table(&self.ring, &text)?)
            }
        };
        ChannelConfig::new(&self.ring, self.n, self.m, self.lambda.clone(), model)
            .and_then(|c| c.with_shots(self.shots))
            .map_err(CliError::from)
    }

    /// The resolved spec as `key=value` pairs; thread count is omitted so
    /// output does not depend on it.
    pub fn echo(&self, command: &str) -> String {
        let mut parts = vec![
            format!("# mmc {command}"),
            format!("ring={}", self.ring.spec()),
            format!("n={}", self.n),
            format!("m={}", self.m),
            format!("lambda={}", self.lambda),
            format!("model={}", self.model),
            format!("seed={}", self.seed),
            format!("trials={}", self.trials),
            format!("N={}", self.shots),
        ];
        if let Some(mc) = self.mc {
            parts.push(format!("mc={mc}"));
        }
        if let Some(beta) = &self.beta {
            parts.push(format!("beta={beta}"));
        }
        parts.join(" ")
    }
}

/// Transfer table: blocks of `prob <p>` followed by a matrix in text form.
pub fn parse_table(ring: &ChainRing, text: &str) -> Result<Vec<(RingMatrix, f64)>, CliError> {
    let mut entries = Vec::new();
    let mut current: Option<(f64, String)> = None;
    let flush = |cur: Option<(f64, String)>, out: &mut Vec<(RingMatrix, f64)>| -> Result<(), CliError> {
        if let Some((p, body)) = cur {
            out.push((parse_matrix(ring, &body)?, p));
        }
        Ok(())
    };
    for line in text.lines() {
        let content = line.split('#').next().unwrap_or("").trim();
        if let Some(p) = content.strip_prefix("prob") {
            flush(current.take(), &mut entries)?;
            let p: f64 = p.trim().parse().map_err(|_| CliError::Spec(format!("bad probability line {line:?}")))?;
            current = Some((p, String::new()));
        } else if !content.is_empty() {
            let (_, body) = current
                .as_mut()
                .ok_or_else(|| CliError::Spec("table must start with a `prob` line".into()))?;
            body.push_str(content);
            body.push('\n');
        }
    }
    flush(current, &mut entries)?;
    if entries.is_empty() {
        return Err(CliError::Spec("empty transfer table".into()));
    }
    Ok(entries)
}
