//! Multilevel codes over a chain ring built from residue-field components.
//!
//! Component `i` fills digit level `i`: `X = sum_i lift([X_i 0]) pi^i`, with
//! `X_i` an `n x lambda_i` codeword over `F_q`. Decoding is multistage:
//! Smith-decompose `A`, read the digits exposed by the diagonal, then decode
//! the components in order, each stage removing the contribution of the
//! levels already decoded. The resulting code is generally not `R`-linear.

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::error::{DecodeFailure, Error, Result};
use crate::field::{FieldElem, FieldMatrix, Fq};
use crate::linalg::{diagonal_extract, shape_of, smith_normal_form, RingMatrix};
use crate::rank_metric::{index_to_symbols, DecodeOutcome, GabidulinCode};
use crate::ring::ChainRing;
use crate::shapes::SShape;

/// A code over `F_q` whose codewords are sequences of `shots` matrices of
/// size `n x width`, decodable given the transfer matrices.
pub trait ComponentCode: fmt::Debug + Send + Sync {
    fn n(&self) -> usize;

    fn width(&self) -> usize;

    fn shots(&self) -> usize;

    /// Message length in `F_q` symbols over all shots.
    fn message_len(&self) -> usize;

    fn encode(&self, message: &[FieldElem]) -> Result<Vec<FieldMatrix>>;

    /// `y[t] = a[t] * X[t]` for every shot `t`.
    fn decode(&self, y: &[FieldMatrix], a: &[FieldMatrix]) -> Result<DecodeOutcome>;
}

/// A Gabidulin code used independently on each of `shots` channel uses.
#[derive(Clone, Debug)]
pub struct GabidulinComponent {
    code: GabidulinCode,
    shots: usize,
}

impl GabidulinComponent {
    pub fn new(code: GabidulinCode, shots: usize) -> Result<Self> {
        if shots == 0 {
            return Err(Error::InvalidParameter("shot count must be positive".into()));
        }
        Ok(Self { code, shots })
    }

    pub fn code(&self) -> &GabidulinCode {
        &self.code
    }
}

impl ComponentCode for GabidulinComponent {
    fn n(&self) -> usize {
        self.code.n()
    }

    fn width(&self) -> usize {
        self.code.m()
    }

    fn shots(&self) -> usize {
        self.shots
    }

    fn message_len(&self) -> usize {
        self.code.message_len() * self.shots
    }

    fn encode(&self, message: &[FieldElem]) -> Result<Vec<FieldMatrix>> {
        if message.len() != self.message_len() {
            return Err(Error::InvalidParameter(format!(
                "component message has {} symbols, expected {}",
                message.len(),
                self.message_len()
            )));
        }
        let per = self.code.message_len();
        if per == 0 {
            return Ok(vec![FieldMatrix::zeros(self.code.field(), self.n(), self.width()); self.shots]);
        }
        message.chunks(per).map(|chunk| self.code.encode(chunk)).collect()
    }

    fn decode(&self, y: &[FieldMatrix], a: &[FieldMatrix]) -> Result<DecodeOutcome> {
        if y.len() != self.shots || a.len() != self.shots {
            return Err(Error::Dimension(format!("expected {} shots", self.shots)));
        }
        let mut message = Vec::with_capacity(self.message_len());
        for (yt, at) in y.iter().zip(a) {
            match self.code.decode_coherent(yt, at)? {
                Ok(part) => message.extend(part),
                Err(failure) => return Ok(Err(failure)),
            }
        }
        Ok(Ok(message))
    }
}

/// A code in `(R^{n x lambda})^N` assembled from one component per digit level.
#[derive(Clone)]
pub struct CompositeCode {
    ring: ChainRing,
    n: usize,
    lambda: SShape,
    shots: usize,
    components: Vec<Arc<dyn ComponentCode>>,
}

impl CompositeCode {
    pub fn new(ring: &ChainRing, n: usize, lambda: SShape, components: Vec<Arc<dyn ComponentCode>>) -> Result<Self> {
        let s = ring.s();
        if lambda.s() != s {
            return Err(Error::ShapeLength { left: lambda.s(), right: s });
        }
        if components.len() != s {
            return Err(Error::InvalidParameter(format!("{} components for s = {s}", components.len())));
        }
        let shots = components[0].shots();
        for (i, c) in components.iter().enumerate() {
            if c.n() != n || c.width() != lambda.entries()[i] || c.shots() != shots {
                return Err(Error::InvalidParameter(format!(
                    "component {i} is {}x{} over {} shots, expected {n}x{} over {shots}",
                    c.n(),
                    c.width(),
                    c.shots(),
                    lambda.entries()[i]
                )));
            }
        }
        Ok(Self { ring: ring.clone(), n, lambda, shots, components })
    }

    pub fn ring(&self) -> &ChainRing {
        &self.ring
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lambda(&self) -> &SShape {
        &self.lambda
    }

    pub fn shots(&self) -> usize {
        self.shots
    }

    pub fn components(&self) -> &[Arc<dyn ComponentCode>] {
        &self.components
    }

    /// q-ary digits carried per codeword (all shots).
    pub fn total_digits(&self) -> usize {
        self.components.iter().map(|c| c.message_len()).sum()
    }

    /// q-ary digits per channel use.
    pub fn rate(&self) -> f64 {
        self.total_digits() as f64 / self.shots as f64
    }

    fn field(&self) -> &Fq {
        self.ring.residue_field()
    }

    pub fn random_messages(&self, rng: &mut impl Rng) -> Vec<Vec<FieldElem>> {
        let q = self.field().q() as u32;
        self.components
            .iter()
            .map(|c| (0..c.message_len()).map(|_| FieldElem(rng.random_range(0..q))).collect())
            .collect()
    }

    /// Message file text: one line per component, field elements as integer codes.
    pub fn format_messages(&self, messages: &[Vec<FieldElem>]) -> String {
        messages
            .iter()
            .map(|m| {
                let tokens: Vec<String> = m.iter().map(|e| e.0.to_string()).collect();
                format!("{}\n", tokens.join(" "))
            })
            .collect()
    }

    /// Inverse of [`format_messages`](Self::format_messages). Lines starting
    /// with `#` are skipped; a blank line is the empty message of a zero-rate
    /// component.
    pub fn parse_messages(&self, text: &str) -> Result<Vec<Vec<FieldElem>>> {
        let mut lines: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.starts_with('#')).collect();
        while lines.len() > self.components.len() && lines.last().is_some_and(|l| l.is_empty()) {
            lines.pop();
        }
        if lines.len() != self.components.len() {
            return Err(Error::Parse(format!(
                "expected {} message lines, found {}",
                self.components.len(),
                lines.len()
            )));
        }
        lines
            .iter()
            .zip(&self.components)
            .map(|(line, c)| {
                let msg = line
                    .split_whitespace()
                    .map(|t| {
                        let v: u64 = t.parse().map_err(|_| Error::Parse(format!("bad field element {t:?}")))?;
                        self.field().elem(v)
                    })
                    .collect::<Result<Vec<_>>>()?;
                if msg.len() != c.message_len() {
                    return Err(Error::Dimension(format!(
                        "message line has {} symbols, component expects {}",
                        msg.len(),
                        c.message_len()
                    )));
                }
                Ok(msg)
            })
            .collect()
    }

    /// One codeword per shot.
    pub fn encode(&self, messages: &[Vec<FieldElem>]) -> Result<Vec<RingMatrix>> {
        if messages.len() != self.components.len() {
            return Err(Error::InvalidParameter(format!(
                "{} messages for {} components",
                messages.len(),
                self.components.len()
            )));
        }
        let ell = self.lambda.last();
        let mut xs = vec![RingMatrix::zeros(&self.ring, self.n, ell); self.shots];
        for (i, (comp, msg)) in self.components.iter().zip(messages).enumerate() {
            let words = comp.encode(msg)?;
            for (x, w) in xs.iter_mut().zip(&words) {
                let level = RingMatrix::lift(&self.ring, &w.padded(self.n, ell)).mul_pi_pow(i);
                *x = x.add(&level)?;
            }
        }
        Ok(xs)
    }

    /// Multistage decoding of `y[t] = a[t] * x[t]`.
    ///
    /// Stage `i` decodes component `i` over every shot before stage `i + 1`
    /// starts; a failure at stage `i` is reported as
    /// [`Error::StageFailure`] and later stages are not attempted.
    pub fn decode(&self, y: &[RingMatrix], a: &[RingMatrix]) -> Result<Vec<Vec<FieldElem>>> {
        if y.len() != self.shots || a.len() != self.shots {
            return Err(Error::Dimension(format!("expected {} shots", self.shots)));
        }
        let s = self.ring.s();
        let ell = self.lambda.last();
        struct Shot {
            q: RingMatrix,
            rho: SShape,
            levels: Vec<RingMatrix>,
        }
        let mut shots = Vec::with_capacity(self.shots);
        for (yt, at) in y.iter().zip(a) {
            if at.cols() != self.n || yt.rows() != at.rows() || yt.cols() != ell {
                return Err(Error::Dimension(format!(
                    "A is {}x{} and Y is {}x{}; expected m x {} and m x {ell}",
                    at.rows(),
                    at.cols(),
                    yt.rows(),
                    yt.cols(),
                    self.n
                )));
            }
            let dec = smith_normal_form(at);
            let y_tilde = dec.p_inv.mul(yt)?;
            let levels = diagonal_extract(&dec.d, &y_tilde, &self.lambda)?;
            shots.push(Shot { q: dec.q, rho: dec.shape, levels });
        }
        // X^{<i} per shot, grown one level per stage
        let mut partial = vec![RingMatrix::zeros(&self.ring, self.n, ell); self.shots];
        let mut messages = Vec::with_capacity(s);
        for (i, comp) in self.components.iter().enumerate() {
            let width = self.lambda.entries()[i];
            let mut ys = Vec::with_capacity(self.shots);
            let mut as_ = Vec::with_capacity(self.shots);
            for (shot, (x_low, at)) in shots.iter().zip(partial.iter().zip(a)) {
                let r = shot.rho.entries()[s - i - 1];
                let m_rx = at.rows();
                let q_top = shot.q.submatrix(0, r, 0, self.n);
                let known = q_top.mul(&x_low.submatrix(0, self.n, 0, width))?.digit(i)?;
                let y_i = shot.levels[i].sub(&known)?.residue().padded(m_rx, width);
                let a_i = q_top.residue().padded(m_rx, self.n);
                ys.push(y_i);
                as_.push(a_i);
            }
            let msg = comp
                .decode(&ys, &as_)?
                .map_err(|failure| Error::StageFailure { stage: i, failure })?;
            let words = comp.encode(&msg)?;
            for (x_low, w) in partial.iter_mut().zip(&words) {
                let level = RingMatrix::lift(&self.ring, &w.padded(self.n, ell)).mul_pi_pow(i);
                *x_low = x_low.add(&level)?;
            }
            messages.push(msg);
        }
        Ok(messages)
    }

    /// Every single-shot codeword; refused beyond `guard` codewords.
    pub fn codebook(&self, guard: u128) -> Result<Vec<RingMatrix>> {
        if self.shots != 1 {
            return Err(Error::InvalidParameter("codebook enumeration needs a single-shot code".into()));
        }
        let q = self.field().q();
        let lens: Vec<usize> = self.components.iter().map(|c| c.message_len()).collect();
        let total: usize = lens.iter().sum();
        let size = (0..total).try_fold(1u128, |acc, _| acc.checked_mul(q as u128)).unwrap_or(u128::MAX);
        if size > guard {
            return Err(Error::GuardExceeded { needed: size, guard });
        }
        let mut book = Vec::with_capacity(size as usize);
        for idx in 0..size {
            let flat = index_to_symbols(idx, q, total);
            let mut messages = Vec::with_capacity(lens.len());
            let mut at = 0;
            for &len in &lens {
                messages.push(flat[at..at + len].to_vec());
                at += len;
            }
            book.push(self.encode(&messages)?.remove(0));
        }
        Ok(book)
    }
}

impl fmt::Debug for CompositeCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CompositeCode")
            .field("ring", &self.ring.spec().to_string())
            .field("n", &self.n)
            .field("lambda", &self.lambda)
            .field("shots", &self.shots)
            .field("components", &self.components)
            .finish()
    }
}

/// Composite with Gabidulin component `i` of dimension `n - beta_i`.
///
/// Needs `lambda_0 >= n` and `beta <= n`; the result corrects every transfer
/// matrix of shape at least `n - beta`.
pub fn build_mrd_composite(
    ring: &ChainRing,
    n: usize,
    lambda: &SShape,
    beta: &SShape,
    shots: usize,
) -> Result<CompositeCode> {
    let s = ring.s();
    if lambda.s() != s || beta.s() != s {
        return Err(Error::ShapeLength { left: lambda.s().max(beta.s()), right: s });
    }
    if n == 0 || lambda.entries()[0] < n {
        return Err(Error::InvalidParameter(format!("need lambda_0 >= n >= 1, got lambda = ({lambda}), n = {n}")));
    }
    if !beta.leq_scalar(n) {
        return Err(Error::InvalidParameter(format!("beta = ({beta}) exceeds n = {n}")));
    }
    let field = ring.residue_field();
    let components = (0..s)
        .map(|i| {
            let code = GabidulinCode::new(field, lambda.entries()[i], n, n - beta.entries()[i])?;
            Ok(Arc::new(GabidulinComponent::new(code, shots)?) as Arc<dyn ComponentCode>)
        })
        .collect::<Result<Vec<_>>>()?;
    CompositeCode::new(ring, n, lambda.clone(), components)
}

/// How [`is_shape_deficiency_correcting`] decides.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckMode {
    /// No two distinct codewords differ by a matrix of shape `<= beta`.
    Criterion,
    /// Every `A` in `R^{m x n}` with shape `>= n - beta` is injective on the codebook.
    Oracle { m: usize },
}

/// Whether `codebook` (single-shot codewords in `R^{n x l}`) survives every
/// transfer matrix of shape at least `n - beta`.
pub fn is_shape_deficiency_correcting(
    codebook: &[RingMatrix],
    beta: &SShape,
    mode: CheckMode,
    guard: u128,
) -> Result<bool> {
    let Some(first) = codebook.first() else { return Ok(true) };
    let ring = first.ring().clone();
    let n = first.rows();
    if beta.s() != ring.s() {
        return Err(Error::ShapeLength { left: beta.s(), right: ring.s() });
    }
    if !beta.leq_scalar(n) {
        return Err(Error::InvalidParameter(format!("beta = ({beta}) exceeds n = {n}")));
    }
    match mode {
        CheckMode::Criterion => {
            let pairs = (codebook.len() as u128).saturating_mul(codebook.len() as u128) / 2;
            if pairs > guard {
                return Err(Error::GuardExceeded { needed: pairs, guard });
            }
            for (i, x1) in codebook.iter().enumerate() {
                for x2 in &codebook[i + 1..] {
                    if shape_of(&x2.sub(x1)?).leq(beta)? {
                        return Ok(false);
                    }
                }
            }
            Ok(true)
        }
        CheckMode::Oracle { m } => {
            let order = ring.order();
            let n_matrices = (0..m * n)
                .try_fold(1u128, |acc, _| acc.checked_mul(order as u128))
                .unwrap_or(u128::MAX);
            let needed = n_matrices.saturating_mul(codebook.len() as u128);
            if needed > guard {
                return Err(Error::GuardExceeded { needed, guard });
            }
            let floor = beta.complement(n)?;
            for idx in 0..n_matrices {
                let mut rest = idx;
                let data = (0..m * n)
                    .map(|_| {
                        let e = (rest % order as u128) as u32;
                        rest /= order as u128;
                        crate::ring::RingElem(e)
                    })
                    .collect();
                let a = RingMatrix::from_vec(&ring, m, n, data)?;
                if !floor.leq(&shape_of(&a))? {
                    continue;
                }
                let mut seen = HashSet::with_capacity(codebook.len());
                for x in codebook {
                    if !seen.insert(a.mul(x)?.data().to_vec()) {
                        return Ok(false);
                    }
                }
            }
            Ok(true)
        }
    }
}

/// Composite decoding outcome for simulation bookkeeping.
pub fn failure_stage(err: &Error) -> Option<(usize, DecodeFailure)> {
    match err {
        Error::StageFailure { stage, failure } => Some((*stage, *failure)),
        _ => None,
    }
}
