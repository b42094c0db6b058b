//! Gabidulin codes: maximum-rank-distance codes over `F_{q^m}`, viewed as
//! `n x m` matrices over `F_q`.
//!
//! A message is the coordinate vector of `k` coefficients of the
//! linearized polynomial `f(x) = sum_t f_t x^{q^t}`, each coefficient given
//! by its `m` coordinates over `F_q`, so a message is `k * m` base-field
//! symbols. Row `j` of the codeword is `f(g_j)` expanded over `F_q`.

use std::collections::HashSet;

use crate::error::{DecodeFailure, Error, Result};
use crate::field::{ExtElem, ExtField, FieldElem, FieldMatrix, Fq, Solution};

/// Result of a decoder that can fail without an API error.
pub type DecodeOutcome = std::result::Result<Vec<FieldElem>, DecodeFailure>;

#[derive(Clone, Debug)]
pub struct GabidulinCode {
    ext: ExtField,
    n: usize,
    k: usize,
    points: Vec<ExtElem>,
    /// Codeword of the `u`-th unit message, `u = t * m + c`.
    generators: Vec<FieldMatrix>,
}

impl GabidulinCode {
    /// Code with evaluation points `1, z, ..., z^{n-1}`.
    pub fn new(base: &Fq, m: usize, n: usize, k: usize) -> Result<Self> {
        if n == 0 || m < n {
            return Err(Error::InvalidParameter(format!("Gabidulin codes need 1 <= n <= m, got n = {n}, m = {m}")));
        }
        let ext = ExtField::new(base.clone(), m)?;
        let points = (0..n).map(|j| ext.basis(j)).collect();
        Self::with_points(ext, k, points)
    }

    /// Code with explicit evaluation points, which must be `F_q`-independent.
    pub fn with_points(ext: ExtField, k: usize, points: Vec<ExtElem>) -> Result<Self> {
        let n = points.len();
        let m = ext.degree();
        if n == 0 || m < n || k > n {
            return Err(Error::InvalidParameter(format!("need 0 <= k <= n <= m, got k = {k}, n = {n}, m = {m}")));
        }
        let base = ext.base().clone();
        let mut coords = FieldMatrix::zeros(&base, n, m);
        for (j, &g) in points.iter().enumerate() {
            ext.elem(g.0)?;
            for (c, v) in ext.to_coords(g).into_iter().enumerate() {
                coords.set(j, c, v);
            }
        }
        if coords.rank() != n {
            return Err(Error::InvalidParameter("evaluation points are not linearly independent over F_q".into()));
        }
        // g_j^{q^t} for every t < k
        let mut powers: Vec<Vec<ExtElem>> = Vec::with_capacity(k);
        for t in 0..k {
            let row = if t == 0 { points.clone() } else { powers[t - 1].iter().map(|&g| ext.frobenius(g)).collect() };
            powers.push(row);
        }
        let mut generators = Vec::with_capacity(k * m);
        for t in 0..k {
            for c in 0..m {
                let coeff = ext.basis(c);
                let mut x = FieldMatrix::zeros(&base, n, m);
                for j in 0..n {
                    let v = ext.mul(coeff, powers[t][j]);
                    for (col, e) in ext.to_coords(v).into_iter().enumerate() {
                        x.set(j, col, e);
                    }
                }
                generators.push(x);
            }
        }
        Ok(Self { ext, n, k, points, generators })
    }

    pub fn field(&self) -> &Fq {
        self.ext.base()
    }

    pub fn extension(&self) -> &ExtField {
        &self.ext
    }

    /// Codeword column count.
    pub fn m(&self) -> usize {
        self.ext.degree()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn points(&self) -> &[ExtElem] {
        &self.points
    }

    /// Message length in `F_q` symbols, which is also the rate in q-ary digits.
    pub fn message_len(&self) -> usize {
        self.k * self.m()
    }

    /// Designed minimum rank distance `n - k + 1`.
    pub fn designed_distance(&self) -> usize {
        self.n - self.k + 1
    }

    /// Codewords of the unit messages, in message-coordinate order.
    pub fn generators(&self) -> &[FieldMatrix] {
        &self.generators
    }

    pub fn encode(&self, message: &[FieldElem]) -> Result<FieldMatrix> {
        if message.len() != self.message_len() {
            return Err(Error::InvalidParameter(format!(
                "message has {} symbols, expected {}",
                message.len(),
                self.message_len()
            )));
        }
        let f = self.field();
        if let Some(bad) = message.iter().find(|e| e.0 as u64 >= f.q()) {
            return Err(Error::ElementOutOfRange { value: bad.0 as u64, context: format!("F_{}", f.q()) });
        }
        let mut x = FieldMatrix::zeros(f, self.n, self.m());
        for (&coeff, g) in message.iter().zip(&self.generators) {
            if coeff.0 != 0 {
                x = x.add(&g.scale(coeff)).expect("generator dimensions agree");
            }
        }
        Ok(x)
    }

    /// Message given as the `k` polynomial coefficients in `F_{q^m}`.
    pub fn message_from_coefficients(&self, coeffs: &[ExtElem]) -> Result<Vec<FieldElem>> {
        if coeffs.len() != self.k {
            return Err(Error::InvalidParameter(format!("{} coefficients for dimension {}", coeffs.len(), self.k)));
        }
        let mut msg = Vec::with_capacity(self.message_len());
        for &c in coeffs {
            self.ext.elem(c.0)?;
            msg.extend(self.ext.to_coords(c));
        }
        Ok(msg)
    }

    /// Evaluates `f` at the points directly, without the generator table.
    pub fn encode_coefficients(&self, coeffs: &[ExtElem]) -> Result<FieldMatrix> {
        if coeffs.len() != self.k {
            return Err(Error::InvalidParameter(format!("{} coefficients for dimension {}", coeffs.len(), self.k)));
        }
        let ext = &self.ext;
        let mut x = FieldMatrix::zeros(self.field(), self.n, self.m());
        for (j, &g) in self.points.iter().enumerate() {
            let mut acc = ext.zero();
            let mut g_pow = g;
            for &f_t in coeffs {
                acc = ext.add(acc, ext.mul(f_t, g_pow));
                g_pow = ext.frobenius(g_pow);
            }
            for (c, v) in ext.to_coords(acc).into_iter().enumerate() {
                x.set(j, c, v);
            }
        }
        Ok(x)
    }

    /// Recovers the message from `Y = A X`, `A` known.
    ///
    /// Solves the `F_q`-linear system in the message symbols; the solution
    /// set decides between a unique message, ambiguity and inconsistency.
    pub fn decode_coherent(&self, y: &FieldMatrix, a: &FieldMatrix) -> Result<DecodeOutcome> {
        let f = self.field();
        if a.cols() != self.n || y.cols() != self.m() || y.rows() != a.rows() {
            return Err(Error::Dimension(format!(
                "decode needs A: r x {} and Y: r x {}, got A: {}x{}, Y: {}x{}",
                self.n,
                self.m(),
                a.rows(),
                a.cols(),
                y.rows(),
                y.cols()
            )));
        }
        let unknowns = self.message_len();
        if unknowns == 0 {
            return Ok(if y.is_zero() { Ok(Vec::new()) } else { Err(DecodeFailure::Inconsistent) });
        }
        let eqs = y.rows() * y.cols();
        let mut system = FieldMatrix::zeros(f, eqs, unknowns);
        for (u, g) in self.generators.iter().enumerate() {
            let ag = a.mul(g)?;
            for (e, &v) in ag.data().iter().enumerate() {
                system.set(e, u, v);
            }
        }
        let rhs = FieldMatrix::from_vec(f, eqs, 1, y.data().to_vec())?;
        Ok(match system.solve(&rhs)? {
            Solution::Unique(x) => Ok(x.data().to_vec()),
            Solution::None => Err(DecodeFailure::Inconsistent),
            Solution::Affine { .. } => Err(DecodeFailure::Ambiguous),
        })
    }

    /// `q^{km}`, the number of codewords.
    pub fn size(&self) -> u128 {
        checked_pow(self.field().q(), self.message_len()).unwrap_or(u128::MAX)
    }

    /// Every codeword, in message order; refused beyond `guard` codewords.
    pub fn codebook(&self, guard: u128) -> Result<Vec<FieldMatrix>> {
        let size = self.size();
        if size > guard {
            return Err(Error::GuardExceeded { needed: size, guard });
        }
        let q = self.field().q();
        (0..size)
            .map(|idx| self.encode(&index_to_symbols(idx, q, self.message_len())))
            .collect()
    }
}

fn checked_pow(base: u64, exp: usize) -> Option<u128> {
    (0..exp).try_fold(1u128, |acc, _| acc.checked_mul(base as u128))
}

/// Base-`q` digits of `idx`, least significant first.
pub(crate) fn index_to_symbols(mut idx: u128, q: u64, len: usize) -> Vec<FieldElem> {
    (0..len)
        .map(|_| {
            let d = (idx % q as u128) as u32;
            idx /= q as u128;
            FieldElem(d)
        })
        .collect()
}

/// `rank(X2 - X1)`.
pub fn rank_distance(x1: &FieldMatrix, x2: &FieldMatrix) -> Result<usize> {
    Ok(x2.sub(x1)?.rank())
}

/// Minimum rank over nonzero codewords, which for a linear code equals the
/// minimum pairwise distance. A code with one codeword reports `n + 1`.
pub fn min_rank_distance(code: &GabidulinCode, guard: u128) -> Result<usize> {
    let book = code.codebook(guard)?;
    Ok(book.iter().filter(|x| !x.is_zero()).map(FieldMatrix::rank).min().unwrap_or(code.n() + 1))
}

/// Brute-force check that no `A` with `rank A >= n - b` merges two codewords.
///
/// Enumerates every `A` in `F^{n x n}` (any admissible row space is realized
/// by a square matrix) and every codeword; refuses work beyond `guard`.
pub fn is_rank_deficiency_correcting(code: &GabidulinCode, b: usize, guard: u128) -> Result<bool> {
    let n = code.n();
    let f = code.field();
    let q = f.q();
    let n_matrices = checked_pow(q, n * n).ok_or(Error::GuardExceeded { needed: u128::MAX, guard })?;
    let needed = n_matrices.saturating_mul(code.size());
    if needed > guard {
        return Err(Error::GuardExceeded { needed, guard });
    }
    let book = code.codebook(guard)?;
    let min_rank = n.saturating_sub(b);
    for idx in 0..n_matrices {
        let a = FieldMatrix::from_vec(f, n, n, index_to_symbols(idx, q, n * n))?;
        if a.rank() < min_rank {
            continue;
        }
        let mut seen = HashSet::with_capacity(book.len());
        for x in &book {
            if !seen.insert(a.mul(x)?.data().to_vec()) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
