//! Matrices over a chain ring, Smith normal form and exact solvers.

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::field::{FieldElem, FieldMatrix};
use crate::ring::{ChainRing, RingElem};
use crate::shapes::SShape;

/// Dense row-major matrix over a [`ChainRing`].
#[derive(Clone, PartialEq, Eq)]
pub struct RingMatrix {
    ring: ChainRing,
    rows: usize,
    cols: usize,
    data: Vec<RingElem>,
}

impl RingMatrix {
    pub fn zeros(ring: &ChainRing, rows: usize, cols: usize) -> Self {
        Self { ring: ring.clone(), rows, cols, data: vec![RingElem(0); rows * cols] }
    }

    pub fn identity(ring: &ChainRing, n: usize) -> Self {
        let mut m = Self::zeros(ring, n, n);
        for i in 0..n {
            m.set(i, i, RingElem(1));
        }
        m
    }

    /// `rows x cols` matrix with `diag` on the main diagonal.
    pub fn diagonal(ring: &ChainRing, rows: usize, cols: usize, diag: &[RingElem]) -> Result<Self> {
        if diag.len() > rows.min(cols) {
            return Err(Error::Dimension(format!("{} diagonal entries for {rows}x{cols}", diag.len())));
        }
        let mut m = Self::zeros(ring, rows, cols);
        for (i, &d) in diag.iter().enumerate() {
            m.set(i, i, d);
        }
        Ok(m)
    }

    pub fn from_vec(ring: &ChainRing, rows: usize, cols: usize, data: Vec<RingElem>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!("{} entries for a {rows}x{cols} matrix", data.len())));
        }
        if let Some(bad) = data.iter().find(|e| e.0 as u64 >= ring.order()) {
            return Err(Error::ElementOutOfRange { value: bad.0 as u64, context: ring.spec().to_string() });
        }
        Ok(Self { ring: ring.clone(), rows, cols, data })
    }

    /// Builds a matrix from integer codes, one inner vector per row.
    pub fn from_rows(ring: &ChainRing, rows: &[Vec<u32>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Self::from_vec(ring, r, c, rows.iter().flatten().map(|&v| RingElem(v)).collect())
    }

    /// Uniformly random matrix.
    pub fn random(ring: &ChainRing, rows: usize, cols: usize, rng: &mut impl Rng) -> Self {
        let n = ring.order() as u32;
        let data = (0..rows * cols).map(|_| RingElem(rng.random_range(0..n))).collect();
        Self { ring: ring.clone(), rows, cols, data }
    }

    /// Uniformly random element of `GL_n(R)`, by rejection on the residue rank.
    pub fn random_invertible(ring: &ChainRing, n: usize, rng: &mut impl Rng) -> Self {
        loop {
            let m = Self::random(ring, n, n, rng);
            if m.is_invertible() {
                return m;
            }
        }
    }

    /// Lifts a residue-field matrix entrywise into the digit set.
    pub fn lift(ring: &ChainRing, m: &FieldMatrix) -> Self {
        let data = m.data().iter().map(|&e| ring.lift(e)).collect();
        Self { ring: ring.clone(), rows: m.rows(), cols: m.cols(), data }
    }

    pub fn ring(&self) -> &ChainRing {
        &self.ring
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[RingElem] {
        &self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> RingElem {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: RingElem) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[RingElem] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|e| e.0 == 0)
    }

    fn map(&self, f: impl Fn(RingElem) -> RingElem) -> Self {
        Self { ring: self.ring.clone(), rows: self.rows, cols: self.cols, data: self.data.iter().map(|&e| f(e)).collect() }
    }

    fn zip_with(&self, other: &Self, f: impl Fn(RingElem, RingElem) -> RingElem) -> Result<Self> {
        self.ring.check_same(&other.ring)?;
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::Dimension(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { ring: self.ring.clone(), rows: self.rows, cols: self.cols, data })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let r = self.ring.clone();
        self.zip_with(other, |a, b| r.add(a, b))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        let r = self.ring.clone();
        self.zip_with(other, |a, b| r.sub(a, b))
    }

    pub fn neg(&self) -> Self {
        self.map(|a| self.ring.neg(a))
    }

    pub fn scale(&self, c: RingElem) -> Self {
        self.map(|a| self.ring.mul(a, c))
    }

    /// `pi^i * self`.
    pub fn mul_pi_pow(&self, i: usize) -> Self {
        self.map(|a| self.ring.mul_pi_pow(a, i))
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.ring.check_same(&other.ring)?;
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let r = &self.ring;
        let mut out = Self::zeros(r, self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.0 == 0 {
                    continue;
                }
                for j in 0..other.cols {
                    let idx = i * other.cols + j;
                    out.data[idx] = r.add(out.data[idx], r.mul(a, other.get(k, j)));
                }
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(&self.ring, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    /// Rows `r0..r1`, columns `c0..c1`.
    pub fn submatrix(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> Self {
        let mut out = Self::zeros(&self.ring, r1 - r0, c1 - c0);
        for i in r0..r1 {
            for j in c0..c1 {
                out.set(i - r0, j - c0, self.get(i, j));
            }
        }
        out
    }

    /// Copy into a zero matrix of the given size, top-left aligned.
    pub fn padded(&self, rows: usize, cols: usize) -> Self {
        assert!(rows >= self.rows && cols >= self.cols);
        let mut out = Self::zeros(&self.ring, rows, cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(i, j, self.get(i, j));
            }
        }
        out
    }

    /// `[self other]`.
    pub fn hstack(&self, other: &Self) -> Result<Self> {
        self.ring.check_same(&other.ring)?;
        if self.rows != other.rows {
            return Err(Error::Dimension(format!("hstack of {} and {} rows", self.rows, other.rows)));
        }
        let mut out = Self::zeros(&self.ring, self.rows, self.cols + other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(i, j, self.get(i, j));
            }
            for j in 0..other.cols {
                out.set(i, self.cols + j, other.get(i, j));
            }
        }
        Ok(out)
    }

    /// Entrywise pi-adic digit `A^(i)`.
    pub fn digit(&self, i: usize) -> Result<Self> {
        if i >= self.ring.s() {
            return Err(Error::IndexOutOfRange { index: i, limit: self.ring.s() });
        }
        Ok(self.map(|a| self.ring.digit_unchecked(a, i)))
    }

    /// Entrywise truncation to the first `i` digits.
    pub fn truncate(&self, i: usize) -> Result<Self> {
        if i > self.ring.s() {
            return Err(Error::IndexOutOfRange { index: i, limit: self.ring.s() + 1 });
        }
        Ok(self.map(|a| self.ring.truncate(a, i).expect("index checked")))
    }

    /// Entrywise projection onto the residue field.
    pub fn residue(&self) -> FieldMatrix {
        let data: Vec<FieldElem> = self.data.iter().map(|&a| self.ring.residue(a)).collect();
        FieldMatrix::from_vec(self.ring.residue_field(), self.rows, self.cols, data).expect("residues are in range")
    }

    /// Square with invertible residue, i.e. a member of `GL_n(R)`.
    pub fn is_invertible(&self) -> bool {
        self.rows == self.cols && self.residue().rank() == self.rows
    }

    /// Whether every row lies in `R^lambda` (width must equal `lambda_{s-1}`).
    pub fn in_row_space(&self, lambda: &SShape) -> bool {
        self.check_row_space(lambda).is_ok()
    }

    pub fn check_row_space(&self, lambda: &SShape) -> Result<()> {
        if lambda.s() != self.ring.s() {
            return Err(Error::ShapeLength { left: lambda.s(), right: self.ring.s() });
        }
        if self.cols != lambda.last() {
            return Err(Error::RowConstraint(format!("width {} but lambda = ({lambda})", self.cols)));
        }
        for c in 0..self.cols {
            let level = column_level(lambda, c);
            for r in 0..self.rows {
                if self.ring.valuation(self.get(r, c)) < level {
                    return Err(Error::RowConstraint(format!(
                        "entry ({r},{c}) must lie in <pi^{level}> for lambda = ({lambda})"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn inverse(&self) -> Result<Self> {
        solve_invertible(self, &Self::identity(&self.ring, self.rows))
    }
}

/// Ideal index of column `c` in `R^lambda`: the smallest `i` with `c < lambda_i`.
pub fn column_level(lambda: &SShape, c: usize) -> usize {
    lambda.entries().iter().position(|&l| c < l).unwrap_or(lambda.s())
}

impl fmt::Debug for RingMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[", self.ring.spec())?;
        for i in 0..self.rows {
            if i > 0 {
                f.write_str("; ")?;
            }
            let row: Vec<String> = self.row(i).iter().map(|&e| self.ring.format_element(e)).collect();
            f.write_str(&row.join(" "))?;
        }
        f.write_str("]")
    }
}

// ---- Smith normal form ----

/// `A = P D Q` with `D` the pi-power Smith normal form.
#[derive(Clone, Debug)]
pub struct SmithDecomposition {
    pub p: RingMatrix,
    pub p_inv: RingMatrix,
    pub d: RingMatrix,
    pub q: RingMatrix,
    pub shape: SShape,
}

impl SmithDecomposition {
    /// Recomputes `P D Q`.
    pub fn product(&self) -> RingMatrix {
        self.p.mul(&self.d).and_then(|pd| pd.mul(&self.q)).expect("factor dimensions agree")
    }
}

struct Transforms {
    p: RingMatrix,
    p_inv: RingMatrix,
    q: RingMatrix,
}

struct SmithRun {
    work: RingMatrix,
    transforms: Option<Transforms>,
    valuations: Vec<usize>,
}

impl SmithRun {
    fn new(a: &RingMatrix, track: bool) -> Self {
        let ring = a.ring();
        let transforms = track.then(|| Transforms {
            p: RingMatrix::identity(ring, a.rows),
            p_inv: RingMatrix::identity(ring, a.rows),
            q: RingMatrix::identity(ring, a.cols),
        });
        Self { work: a.clone(), transforms, valuations: Vec::new() }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let w = &mut self.work;
        for j in 0..w.cols {
            w.data.swap(a * w.cols + j, b * w.cols + j);
        }
        if let Some(t) = &mut self.transforms {
            for i in 0..t.p.rows {
                t.p.data.swap(i * t.p.cols + a, i * t.p.cols + b);
            }
            for j in 0..t.p_inv.cols {
                t.p_inv.data.swap(a * t.p_inv.cols + j, b * t.p_inv.cols + j);
            }
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let w = &mut self.work;
        for i in 0..w.rows {
            w.data.swap(i * w.cols + a, i * w.cols + b);
        }
        if let Some(t) = &mut self.transforms {
            for j in 0..t.q.cols {
                t.q.data.swap(a * t.q.cols + j, b * t.q.cols + j);
            }
        }
    }

    /// Row `t` times the unit `w` (whose inverse is `w_inv`).
    fn scale_row(&mut self, t: usize, w: RingElem, w_inv: RingElem) {
        let ring = self.work.ring.clone();
        for j in 0..self.work.cols {
            let v = ring.mul(self.work.get(t, j), w);
            self.work.set(t, j, v);
        }
        if let Some(tr) = &mut self.transforms {
            for i in 0..tr.p.rows {
                let v = ring.mul(tr.p.get(i, t), w_inv);
                tr.p.set(i, t, v);
            }
            for j in 0..tr.p_inv.cols {
                let v = ring.mul(tr.p_inv.get(t, j), w);
                tr.p_inv.set(t, j, v);
            }
        }
    }

    /// Row `i` minus `c` times row `t`.
    fn row_axpy(&mut self, i: usize, t: usize, c: RingElem) {
        let ring = self.work.ring.clone();
        for j in 0..self.work.cols {
            let v = ring.sub(self.work.get(i, j), ring.mul(c, self.work.get(t, j)));
            self.work.set(i, j, v);
        }
        if let Some(tr) = &mut self.transforms {
            for r in 0..tr.p.rows {
                let v = ring.add(tr.p.get(r, t), ring.mul(c, tr.p.get(r, i)));
                tr.p.set(r, t, v);
            }
            for j in 0..tr.p_inv.cols {
                let v = ring.sub(tr.p_inv.get(i, j), ring.mul(c, tr.p_inv.get(t, j)));
                tr.p_inv.set(i, j, v);
            }
        }
    }

    /// Column `j` minus `c` times column `t`.
    fn col_axpy(&mut self, j: usize, t: usize, c: RingElem) {
        let ring = self.work.ring.clone();
        for i in 0..self.work.rows {
            let v = ring.sub(self.work.get(i, j), ring.mul(c, self.work.get(i, t)));
            self.work.set(i, j, v);
        }
        if let Some(tr) = &mut self.transforms {
            for k in 0..tr.q.cols {
                let v = ring.add(tr.q.get(t, k), ring.mul(c, tr.q.get(j, k)));
                tr.q.set(t, k, v);
            }
        }
    }

    fn run(mut self) -> Self {
        let ring = self.work.ring.clone();
        let (m, n) = (self.work.rows, self.work.cols);
        for t in 0..m.min(n) {
            // minimum valuation, ties to the lexicographically smallest position
            let mut best: Option<(usize, usize, usize)> = None;
            for i in t..m {
                for j in t..n {
                    let v = ring.valuation(self.work.get(i, j));
                    if v < ring.s() && best.is_none_or(|(bv, _, _)| v < bv) {
                        best = Some((v, i, j));
                    }
                }
            }
            let Some((v, pi, pj)) = best else { break };
            self.swap_rows(t, pi);
            self.swap_cols(t, pj);
            let (unit, _) = ring.unit_factor(self.work.get(t, t)).expect("pivot is nonzero");
            if unit != ring.one() {
                let unit_inv = ring.inv(unit).expect("unit part is invertible");
                self.scale_row(t, unit_inv, unit);
            }
            for i in t + 1..m {
                let b = self.work.get(i, t);
                if b.0 != 0 {
                    self.row_axpy(i, t, ring.div_pi_pow(b, v));
                }
            }
            for j in t + 1..n {
                let b = self.work.get(t, j);
                if b.0 != 0 {
                    self.col_axpy(j, t, ring.div_pi_pow(b, v));
                }
            }
            self.valuations.push(v);
        }
        self
    }
}

fn shape_from_valuations(s: usize, valuations: &[usize]) -> SShape {
    let entries = (0..s).map(|i| valuations.iter().filter(|&&v| v <= i).count()).collect();
    SShape::new(entries).expect("counts are non-decreasing")
}

/// Smith decomposition with pi-power diagonal.
///
/// Pivot rule: minimum valuation in the trailing submatrix, ties broken by
/// the smallest `(row, col)`; the pivot row is scaled by the inverse unit
/// part so the diagonal entry is exactly `pi^v`.
pub fn smith_normal_form(a: &RingMatrix) -> SmithDecomposition {
    let run = SmithRun::new(a, true).run();
    let shape = shape_from_valuations(a.ring().s(), &run.valuations);
    let t = run.transforms.expect("tracked run");
    let dec = SmithDecomposition { p: t.p, p_inv: t.p_inv, d: run.work, q: t.q, shape };
    #[cfg(debug_assertions)]
    {
        debug_assert_eq!(&dec.product(), a, "P D Q must reproduce A");
        debug_assert!(dec.p.is_invertible() && dec.q.is_invertible());
        debug_assert!(dec.p.mul(&dec.p_inv).unwrap() == RingMatrix::identity(a.ring(), a.rows()));
    }
    dec
}

/// Shape of the row (equivalently column) span of `a`.
pub fn shape_of(a: &RingMatrix) -> SShape {
    let run = SmithRun::new(a, false).run();
    shape_from_valuations(a.ring().s(), &run.valuations)
}

/// Shape of `{x : A x = 0}`, as `n - shape(A)`.
pub fn nullspace_shape(a: &RingMatrix) -> SShape {
    shape_of(a).complement(a.cols()).expect("shape entries never exceed the column count")
}

/// `shape(pi^i A)`.
pub fn pi_scaled_shape(a: &RingMatrix, i: usize) -> Result<SShape> {
    if i >= a.ring().s() {
        return Err(Error::IndexOutOfRange { index: i, limit: a.ring().s() });
    }
    Ok(shape_of(&a.mul_pi_pow(i)))
}

/// Solves `A x = y` for `A` in `GL_n(R)` digit by digit:
/// `phi(A) x^(i) = phi(y^(i) - (A x_trunc_i)^(i))`.
pub fn solve_invertible(a: &RingMatrix, y: &RingMatrix) -> Result<RingMatrix> {
    a.ring().check_same(y.ring())?;
    if a.rows != a.cols || y.rows != a.rows {
        return Err(Error::Dimension(format!(
            "solve_invertible needs square A matching y; got {}x{} and {}x{}",
            a.rows, a.cols, y.rows, y.cols
        )));
    }
    let ring = a.ring();
    let a0_inv = a.residue().inverse()?;
    let mut x = RingMatrix::zeros(ring, a.cols, y.cols);
    for i in 0..ring.s() {
        let ax = a.mul(&x)?;
        let rhs = y.digit(i)?.sub(&ax.digit(i)?)?.residue();
        let xi = a0_inv.mul(&rhs)?;
        x = x.add(&RingMatrix::lift(ring, &xi).mul_pi_pow(i))?;
    }
    Ok(x)
}

/// Digit information readable from `Y = D X` with `D` a Smith form of itself.
///
/// Entry `i` of the result is `X^(i)` restricted to its first
/// `rho_{s-i-1}` rows and `lambda_i` columns. Row `r` of `D` carrying
/// `pi^v` reveals digits `0..s-v` of row `r` of `X`: `X^(i)[r] = Y^(i+v)[r]`.
pub fn diagonal_extract(d: &RingMatrix, y: &RingMatrix, lambda: &SShape) -> Result<Vec<RingMatrix>> {
    let ring = d.ring();
    ring.check_same(y.ring())?;
    let s = ring.s();
    if lambda.s() != s {
        return Err(Error::ShapeLength { left: lambda.s(), right: s });
    }
    if y.rows != d.rows || y.cols != lambda.last() {
        return Err(Error::Dimension(format!(
            "Y is {}x{}, expected {}x{}",
            y.rows,
            y.cols,
            d.rows,
            lambda.last()
        )));
    }
    let valuations = smith_diagonal_valuations(d)?;
    let rho = shape_from_valuations(s, &valuations);
    for r in 0..y.rows {
        let v = valuations.get(r).copied().unwrap_or(s);
        for c in 0..y.cols {
            let e = y.get(r, c);
            if ring.valuation(e) < v {
                return Err(Error::Inconsistent(format!("Y[{r}][{c}] is not divisible by pi^{v}")));
            }
            // digits of X beyond the packet constraint must vanish
            for i in 0..s.saturating_sub(v) {
                if c >= lambda.entries()[i] && ring.digit_unchecked(e, i + v).0 != 0 {
                    return Err(Error::Inconsistent(format!(
                        "Y[{r}][{c}] forces a nonzero digit {i} outside lambda = ({lambda})"
                    )));
                }
            }
        }
    }
    let mut out = Vec::with_capacity(s);
    for i in 0..s {
        let known_rows = rho.entries()[s - i - 1];
        let width = lambda.entries()[i];
        let mut level = RingMatrix::zeros(ring, known_rows, width);
        for r in 0..known_rows {
            for c in 0..width {
                level.set(r, c, ring.digit_unchecked(y.get(r, c), i + valuations[r]));
            }
        }
        out.push(level);
    }
    Ok(out)
}

/// Valuations of the nonzero diagonal of a matrix already in pi-power Smith form.
fn smith_diagonal_valuations(d: &RingMatrix) -> Result<Vec<usize>> {
    let ring = d.ring();
    let mut vals = Vec::new();
    for i in 0..d.rows {
        for j in 0..d.cols {
            let e = d.get(i, j);
            if i != j && e.0 != 0 {
                return Err(Error::InvalidParameter("D is not diagonal".into()));
            }
        }
    }
    let mut seen_zero = false;
    for t in 0..d.rows.min(d.cols) {
        let e = d.get(t, t);
        let v = ring.valuation(e);
        if v == ring.s() {
            seen_zero = true;
            continue;
        }
        if seen_zero || e != ring.pi_pow(v) || vals.last().is_some_and(|&last| last > v) {
            return Err(Error::InvalidParameter("D is not a pi-power Smith normal form".into()));
        }
        vals.push(v);
    }
    Ok(vals)
}

// ---- text format ----

/// Parses `"m n"` followed by `m` lines of `n` element tokens. Blank lines
/// and `#` comments are skipped.
pub fn parse_matrix(ring: &ChainRing, text: &str) -> Result<RingMatrix> {
    let mut lines = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty());
    let header = lines.next().ok_or_else(|| Error::Parse("empty matrix file".into()))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad dimension {t:?}"))))
        .collect::<Result<_>>()?;
    let [rows, cols] = dims[..] else {
        return Err(Error::Parse(format!("header {header:?} must be \"m n\"")));
    };
    let mut data = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        let line = lines.next().ok_or_else(|| Error::Parse(format!("missing row {r}")))?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != cols {
            return Err(Error::Parse(format!("row {r} has {} entries, expected {cols}", tokens.len())));
        }
        for t in tokens {
            data.push(ring.parse_element(t)?);
        }
    }
    if let Some(extra) = lines.next() {
        return Err(Error::Parse(format!("unexpected trailing line {extra:?}")));
    }
    RingMatrix::from_vec(ring, rows, cols, data)
}

pub fn format_matrix(m: &RingMatrix) -> String {
    let mut out = format!("{} {}\n", m.rows, m.cols);
    for r in 0..m.rows {
        let row: Vec<String> = m.row(r).iter().map(|&e| m.ring.format_element(e)).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}
