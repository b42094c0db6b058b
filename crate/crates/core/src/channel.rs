//! The coherent multiplicative matrix channel `Y = A X` with `X` in
//! `R^{n x lambda}` and `A` drawn from a transfer model.
//!
//! Capacity depends on the model only through the mean shape `E[rho]`:
//! `C = sum_i E[rho_{s-i-1}] lambda_i` q-ary digits per use.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::time::{Duration, Instant};

use num_rational::Ratio;
use rand::Rng;
use rayon::prelude::*;

use crate::composite::CompositeCode;
use crate::error::{Error, Result};
use crate::linalg::{column_level, shape_of, RingMatrix};
use crate::ring::{ChainRing, RingElem};
use crate::rng::{trial_rng, with_threads};
use crate::shapes::SShape;

/// Default cap on states visited by exact enumeration.
pub const DEFAULT_GUARD: u128 = 1 << 24;

#[derive(Clone, Debug)]
pub enum TransferModel {
    /// i.i.d. uniform entries.
    Uniform,
    /// Uniform over matrices of the given shape.
    ConstantShape(SShape),
    /// Explicit distribution; probabilities sum to one.
    Table(Vec<(RingMatrix, f64)>),
}

impl fmt::Display for TransferModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Uniform => f.write_str("uniform"),
            Self::ConstantShape(rho) => write!(f, "const:{rho}"),
            Self::Table(entries) => write!(f, "table[{}]", entries.len()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ChannelConfig {
    pub ring: ChainRing,
    pub n: usize,
    pub m: usize,
    pub lambda: SShape,
    pub model: TransferModel,
    pub shots: usize,
}

impl ChannelConfig {
    pub fn new(ring: &ChainRing, n: usize, m: usize, lambda: SShape, model: TransferModel) -> Result<Self> {
        let cfg = Self { ring: ring.clone(), n, m, lambda, model, shots: 1 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_shots(mut self, shots: usize) -> Result<Self> {
        self.shots = shots;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let s = self.ring.s();
        if self.n == 0 || self.m == 0 || self.shots == 0 {
            return Err(Error::InvalidParameter("n, m and the shot count must be positive".into()));
        }
        if self.lambda.s() != s {
            return Err(Error::ShapeLength { left: self.lambda.s(), right: s });
        }
        match &self.model {
            TransferModel::Uniform => {}
            TransferModel::ConstantShape(rho) => {
                if rho.s() != s {
                    return Err(Error::ShapeLength { left: rho.s(), right: s });
                }
                if !rho.leq_scalar(self.n.min(self.m)) {
                    return Err(Error::InvalidParameter(format!(
                        "shape ({rho}) does not fit a {}x{} matrix",
                        self.m, self.n
                    )));
                }
            }
            TransferModel::Table(entries) => {
                if entries.is_empty() {
                    return Err(Error::InvalidParameter("empty transfer table".into()));
                }
                let mut total = 0.0;
                for (a, p) in entries {
                    self.ring.check_same(a.ring())?;
                    if (a.rows(), a.cols()) != (self.m, self.n) {
                        return Err(Error::Dimension(format!(
                            "table matrix is {}x{}, expected {}x{}",
                            a.rows(),
                            a.cols(),
                            self.m,
                            self.n
                        )));
                    }
                    if !(p.is_finite() && *p >= 0.0) {
                        return Err(Error::InvalidParameter(format!("bad probability {p}")));
                    }
                    total += p;
                }
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidParameter(format!("table probabilities sum to {total}")));
                }
            }
        }
        Ok(())
    }

    /// Draws one transfer matrix.
    pub fn sample_transfer(&self, rng: &mut impl Rng) -> RingMatrix {
        match &self.model {
            TransferModel::Uniform => RingMatrix::random(&self.ring, self.m, self.n, rng),
            TransferModel::ConstantShape(rho) => {
                let p = RingMatrix::random_invertible(&self.ring, self.m, rng);
                let q = RingMatrix::random_invertible(&self.ring, self.n, rng);
                let d = canonical_matrix(&self.ring, self.m, self.n, rho);
                p.mul(&d).and_then(|pd| pd.mul(&q)).expect("dimensions agree")
            }
            TransferModel::Table(entries) => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (a, p) in entries {
                    acc += p;
                    if u < acc {
                        return a.clone();
                    }
                }
                // rounding slack: fall back to the last entry with mass
                entries.iter().rev().find(|(_, p)| *p > 0.0).unwrap_or(&entries[0]).0.clone()
            }
        }
    }

    /// `|R|^{mn}`, the number of transfer matrices.
    pub fn transfer_space_size(&self) -> u128 {
        pow_u128(self.ring.order() as u128, self.m * self.n)
    }
}

fn pow_u128(base: u128, exp: usize) -> u128 {
    (0..exp).try_fold(1u128, |acc, _| acc.checked_mul(base)).unwrap_or(u128::MAX)
}

/// The `rows x cols` diagonal matrix with `rho_i - rho_{i-1}` entries `pi^i`.
pub fn canonical_matrix(ring: &ChainRing, rows: usize, cols: usize, rho: &SShape) -> RingMatrix {
    let diag: Vec<RingElem> = (0..rho.last()).map(|t| ring.pi_pow(column_level(rho, t))).collect();
    RingMatrix::diagonal(ring, rows, cols, &diag).expect("shape fits the matrix")
}

/// `Y = A X`, checking that `X` obeys the row constraint.
pub fn transmit(x: &RingMatrix, a: &RingMatrix, lambda: &SShape) -> Result<RingMatrix> {
    x.check_row_space(lambda)?;
    a.mul(x)
}

/// `sum_i rho_{s-i-1} lambda_i`: q-ary digits passed by a matrix of shape `rho`.
pub fn shape_throughput(rho: &SShape, lambda: &SShape) -> Result<usize> {
    rho.reversed_dot(lambda)
}

/// Index `idx` decoded as a matrix in mixed radix `|R|`.
fn matrix_from_index(ring: &ChainRing, rows: usize, cols: usize, mut idx: u128) -> RingMatrix {
    let order = ring.order() as u128;
    let data = (0..rows * cols)
        .map(|_| {
            let e = (idx % order) as u32;
            idx /= order;
            RingElem(e)
        })
        .collect();
    RingMatrix::from_vec(ring, rows, cols, data).expect("codes below the ring order")
}

/// Number of `rows x cols` matrices of each shape, by full enumeration.
pub fn exact_shape_counts(ring: &ChainRing, rows: usize, cols: usize, guard: u128) -> Result<BTreeMap<SShape, u64>> {
    let total = pow_u128(ring.order() as u128, rows * cols);
    if total > guard {
        return Err(Error::GuardExceeded { needed: total, guard });
    }
    let total = total as u64;
    let counts = (0..total)
        .into_par_iter()
        .fold(HashMap::<SShape, u64>::new, |mut map, idx| {
            *map.entry(shape_of(&matrix_from_index(ring, rows, cols, idx as u128))).or_default() += 1;
            map
        })
        .reduce(HashMap::new, |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_default() += v;
            }
            a
        });
    Ok(counts.into_iter().collect())
}

/// How a statistic of the model is computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Estimation {
    /// Exact, refusing enumerations beyond `guard`.
    Exact { guard: u128 },
    MonteCarlo { trials: u64, seed: u64, threads: Option<usize> },
}

/// Distribution of `shape(A)`.
#[derive(Clone, Debug)]
pub struct ShapeDistribution {
    pub probabilities: BTreeMap<SShape, f64>,
    /// Exact rational probabilities, when known.
    pub exact: Option<BTreeMap<SShape, Ratio<u128>>>,
    /// Sample count in Monte Carlo mode.
    pub trials: Option<u64>,
}

impl ShapeDistribution {
    pub fn mode(&self) -> &'static str {
        if self.trials.is_some() {
            "mc"
        } else {
            "exact"
        }
    }

    /// `E[rho]`, componentwise.
    pub fn mean(&self) -> Vec<f64> {
        let s = self.probabilities.keys().next().map_or(0, SShape::s);
        (0..s)
            .map(|i| self.probabilities.iter().map(|(rho, p)| p * rho.entries()[i] as f64).sum())
            .collect()
    }

    fn from_counts(counts: BTreeMap<SShape, u64>, total: u64, trials: Option<u64>) -> Self {
        let probabilities = counts.iter().map(|(k, &c)| (k.clone(), c as f64 / total as f64)).collect();
        let exact = trials
            .is_none()
            .then(|| counts.into_iter().map(|(k, c)| (k, Ratio::new(c as u128, total as u128))).collect());
        Self { probabilities, exact, trials }
    }
}

/// Runs `trials` independent draws in parallel; output order is trial order.
fn run_trials<T: Send>(
    trials: u64,
    seed: u64,
    threads: Option<usize>,
    f: impl Fn(&mut rand_chacha::ChaCha8Rng) -> T + Sync + Send,
) -> Vec<T> {
    with_threads(threads, || {
        (0..trials)
            .into_par_iter()
            .map(|t| f(&mut trial_rng(seed, t)))
            .collect()
    })
}

pub fn shape_distribution(config: &ChannelConfig, how: Estimation) -> Result<ShapeDistribution> {
    config.validate()?;
    match how {
        Estimation::Exact { guard } => match &config.model {
            TransferModel::Uniform => {
                let counts = exact_shape_counts(&config.ring, config.m, config.n, guard)?;
                let total = counts.values().sum();
                Ok(ShapeDistribution::from_counts(counts, total, None))
            }
            TransferModel::ConstantShape(rho) => {
                Ok(ShapeDistribution::from_counts(BTreeMap::from([(rho.clone(), 1)]), 1, None))
            }
            TransferModel::Table(entries) => {
                let mut probabilities = BTreeMap::new();
                for (a, p) in entries {
                    *probabilities.entry(shape_of(a)).or_insert(0.0) += p;
                }
                Ok(ShapeDistribution { probabilities, exact: None, trials: None })
            }
        },
        Estimation::MonteCarlo { trials, seed, threads } => {
            if trials == 0 {
                return Err(Error::InvalidParameter("Monte Carlo needs at least one trial".into()));
            }
            let shapes = run_trials(trials, seed, threads, |rng| shape_of(&config.sample_transfer(rng)));
            let mut counts = BTreeMap::new();
            for rho in shapes {
                *counts.entry(rho).or_default() += 1;
            }
            Ok(ShapeDistribution::from_counts(counts, trials, Some(trials)))
        }
    }
}

/// Capacity in q-ary digits per channel use.
#[derive(Clone, Debug, PartialEq)]
pub struct CapacityEstimate {
    pub value: f64,
    /// Exact rational value, when the model allows it.
    pub exact: Option<Ratio<u128>>,
    /// Standard error of the Monte Carlo mean.
    pub stderr: Option<f64>,
    pub trials: Option<u64>,
}

impl CapacityEstimate {
    /// Half-width of the normal-approximation 95% interval.
    pub fn half_width_95(&self) -> Option<f64> {
        self.stderr.map(|se| 1.96 * se)
    }
}

fn ratio_to_f64(r: &Ratio<u128>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

pub fn capacity(config: &ChannelConfig, how: Estimation) -> Result<CapacityEstimate> {
    config.validate()?;
    let lambda = &config.lambda;
    match (how, &config.model) {
        (Estimation::Exact { .. } | Estimation::MonteCarlo { .. }, TransferModel::ConstantShape(rho)) => {
            let c = shape_throughput(rho, lambda)? as u128;
            Ok(CapacityEstimate { value: c as f64, exact: Some(Ratio::from_integer(c)), stderr: None, trials: None })
        }
        (Estimation::Exact { .. }, TransferModel::Table(entries)) => {
            let mut value = 0.0;
            for (a, p) in entries {
                value += p * shape_throughput(&shape_of(a), lambda)? as f64;
            }
            Ok(CapacityEstimate { value, exact: None, stderr: None, trials: None })
        }
        (Estimation::Exact { guard }, TransferModel::Uniform) => {
            let counts = exact_shape_counts(&config.ring, config.m, config.n, guard)?;
            let total: u64 = counts.values().sum();
            let mut weighted = 0u128;
            for (rho, c) in &counts {
                weighted += *c as u128 * shape_throughput(rho, lambda)? as u128;
            }
            let exact = Ratio::new(weighted, total as u128);
            Ok(CapacityEstimate { value: ratio_to_f64(&exact), exact: Some(exact), stderr: None, trials: None })
        }
        (Estimation::MonteCarlo { trials, seed, threads }, _) => {
            if trials < 2 {
                return Err(Error::InvalidParameter("Monte Carlo capacity needs at least two trials".into()));
            }
            let samples = run_trials(trials, seed, threads, |rng| {
                shape_throughput(&shape_of(&config.sample_transfer(rng)), lambda).expect("lengths checked") as u128
            });
            let sum: u128 = samples.iter().sum();
            let sum_sq: u128 = samples.iter().map(|v| v * v).sum();
            let n = trials as f64;
            let mean = sum as f64 / n;
            let var = ((sum_sq as f64 - n * mean * mean) / (n - 1.0)).max(0.0);
            Ok(CapacityEstimate { value: mean, exact: None, stderr: Some((var / n).sqrt()), trials: Some(trials) })
        }
    }
}

/// Entropy of `Y = A X` for uniform `X` in `R^{n x lambda}`.
#[derive(Clone, Debug, PartialEq)]
pub struct OutputEntropy {
    /// Entropy in q-ary digits.
    pub qdigits: f64,
    /// Number of distinct outputs.
    pub support: u128,
    /// `Some(k)` when the output is uniform on exactly `q^k` values.
    pub exact_qdigits: Option<usize>,
}

/// Exact output entropy by enumerating every input and tallying outputs.
pub fn entropy_oracle(a: &RingMatrix, lambda: &SShape, guard: u128) -> Result<OutputEntropy> {
    let ring = a.ring();
    let s = ring.s();
    if lambda.s() != s {
        return Err(Error::ShapeLength { left: lambda.s(), right: s });
    }
    let n = a.cols();
    let ell = lambda.last();
    let q = ring.q() as u128;
    // column c ranges over the ideal <pi^{level(c)}> of size q^{s - level}
    let radices: Vec<u128> = (0..ell).map(|c| pow_u128(q, s - column_level(lambda, c))).collect();
    let inputs = pow_u128(q, n * lambda.size());
    if inputs > guard {
        return Err(Error::GuardExceeded { needed: inputs, guard });
    }
    let mut tally: HashMap<Vec<RingElem>, u64> = HashMap::new();
    let mut x = RingMatrix::zeros(ring, n, ell);
    for mut idx in 0..inputs {
        for c in 0..ell {
            let level = column_level(lambda, c);
            for r in 0..n {
                let v = (idx % radices[c]) as u32;
                idx /= radices[c];
                x.set(r, c, ring.mul_pi_pow(RingElem(v), level));
            }
        }
        *tally.entry(a.mul(&x)?.data().to_vec()).or_default() += 1;
    }
    let support = tally.len() as u128;
    let first = *tally.values().next().expect("at least one input");
    let uniform = tally.values().all(|&c| c == first);
    let log_q = |v: f64| v.ln() / (q as f64).ln();
    let exact_qdigits = if uniform { (0..=n * lambda.size()).find(|&k| pow_u128(q, k) == support) } else { None };
    let qdigits = match exact_qdigits {
        Some(k) => k as f64,
        None => {
            let total = inputs as f64;
            tally.values().map(|&c| {
                let p = c as f64 / total;
                -p * log_q(p)
            }).sum()
        }
    };
    Ok(OutputEntropy { qdigits, support, exact_qdigits })
}

/// Outcome of a Monte Carlo decoding experiment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimulationReport {
    pub trials: u64,
    pub seed: u64,
    /// Codewords not decoded to the transmitted messages.
    pub errors: u64,
    /// Failures attributed to each decoding stage.
    pub stage_failures: Vec<u64>,
    /// Unique but wrong decodes; zero for a correct decoder.
    pub miscorrections: u64,
    pub elapsed: Duration,
}

impl SimulationReport {
    pub fn error_rate(&self) -> f64 {
        self.errors as f64 / self.trials as f64
    }
}

enum TrialOutcome {
    Correct,
    Stage(usize),
    Wrong,
}

/// Sends random messages through the channel and decodes them coherently.
pub fn simulate_error_rate(
    config: &ChannelConfig,
    code: &CompositeCode,
    trials: u64,
    seed: u64,
    threads: Option<usize>,
) -> Result<SimulationReport> {
    config.validate()?;
    config.ring.check_same(code.ring())?;
    if code.n() != config.n || code.lambda() != &config.lambda || code.shots() != config.shots {
        return Err(Error::InvalidParameter(format!(
            "code (n = {}, lambda = ({}), N = {}) does not match the channel (n = {}, lambda = ({}), N = {})",
            code.n(),
            code.lambda(),
            code.shots(),
            config.n,
            config.lambda,
            config.shots
        )));
    }
    let start = Instant::now();
    let outcomes: Vec<Result<TrialOutcome>> = run_trials(trials, seed, threads, |rng| {
        let msgs = code.random_messages(rng);
        let xs = code.encode(&msgs)?;
        let mut ys = Vec::with_capacity(xs.len());
        let mut as_ = Vec::with_capacity(xs.len());
        for x in &xs {
            let a = config.sample_transfer(rng);
            ys.push(transmit(x, &a, &config.lambda)?);
            as_.push(a);
        }
        match code.decode(&ys, &as_) {
            Ok(decoded) if decoded == msgs => Ok(TrialOutcome::Correct),
            Ok(_) => Ok(TrialOutcome::Wrong),
            Err(Error::StageFailure { stage, .. }) => Ok(TrialOutcome::Stage(stage)),
            Err(e) => Err(e),
        }
    });
    let mut report = SimulationReport {
        trials,
        seed,
        errors: 0,
        stage_failures: vec![0; config.ring.s()],
        miscorrections: 0,
        elapsed: Duration::ZERO,
    };
    for outcome in outcomes {
        match outcome? {
            TrialOutcome::Correct => {}
            TrialOutcome::Stage(i) => {
                report.errors += 1;
                report.stage_failures[i] += 1;
            }
            TrialOutcome::Wrong => {
                report.errors += 1;
                report.miscorrections += 1;
            }
        }
    }
    report.elapsed = start.elapsed();
    Ok(report)
}

/// `[I X']`: prepends an `n x n` identity header to the payload.
pub fn sounding_wrap(payload: &RingMatrix, lambda: &SShape) -> Result<RingMatrix> {
    let n = payload.rows();
    if lambda.entries()[0] < n {
        return Err(Error::InvalidParameter(format!(
            "sounding needs lambda_0 >= n, got lambda = ({lambda}) and n = {n}"
        )));
    }
    if payload.cols() + n != lambda.last() {
        return Err(Error::Dimension(format!(
            "payload width {} + header {n} does not match l = {}",
            payload.cols(),
            lambda.last()
        )));
    }
    let x = RingMatrix::identity(payload.ring(), n).hstack(payload)?;
    x.check_row_space(lambda)?;
    Ok(x)
}

/// Splits `Y = A [I X']` into the transfer estimate `A` and the payload `A X'`.
pub fn sounding_recover(y: &RingMatrix, n: usize) -> Result<(RingMatrix, RingMatrix)> {
    if y.cols() < n {
        return Err(Error::Dimension(format!("Y has {} columns, header needs {n}", y.cols())));
    }
    Ok((y.submatrix(0, y.rows(), 0, n), y.submatrix(0, y.rows(), n, y.cols())))
}

/// Packet shape left for the payload after an `n`-column header.
pub fn payload_shape(lambda: &SShape, n: usize) -> Result<SShape> {
    lambda.sub_scalar(n)
}
