//! Finite fields and dense linear algebra over them.
//!
//! Two levels are modelled:
//!
//! * [`Fq`], the residue field `F_q` with `q = p^r`, realized as
//!   `F_p[z]/(f)` for `r > 1`.
//! * [`ExtField`], the extension `F_{q^m} = F_q[z]/(g)` used by rank-metric
//!   codes, together with the coordinate map onto `F_q^m` in the polynomial
//!   basis `1, z, ..., z^{m-1}`.
//!
//! Every modulus is the lexicographically smallest monic irreducible
//! polynomial of the required degree, where a candidate
//! `z^d + c_{d-1} z^{d-1} + ... + c_0` is ranked by the integer
//! `sum_j c_j Q^j` (`Q` = order of the coefficient field). For example
//! `F_4 = F_2[z]/(z^2+z+1)`, `F_8 = F_2[z]/(z^3+z+1)`, `F_9 = F_3[z]/(z^2+1)`.
//!
//! Elements are integer codes: the base-`Q` digits of a code are the
//! polynomial coefficients, lowest degree first.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Largest residue field order accepted.
pub const MAX_FIELD_ORDER: u64 = 1 << 31;
/// Residue fields up to this order use lookup tables.
const TABLE_LIMIT: u64 = 256;

/// Arithmetic on integer-coded scalars; shared by the polynomial helpers.
pub(crate) trait Scalars {
    fn order(&self) -> u64;
    fn sadd(&self, a: u64, b: u64) -> u64;
    fn ssub(&self, a: u64, b: u64) -> u64;
    fn smul(&self, a: u64, b: u64) -> u64;
    fn sinv(&self, a: u64) -> Option<u64>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct PrimeField {
    pub(crate) p: u64,
}

impl Scalars for PrimeField {
    fn order(&self) -> u64 {
        self.p
    }
    fn sadd(&self, a: u64, b: u64) -> u64 {
        (a + b) % self.p
    }
    fn ssub(&self, a: u64, b: u64) -> u64 {
        (a + self.p - b) % self.p
    }
    fn smul(&self, a: u64, b: u64) -> u64 {
        (a * b) % self.p
    }
    fn sinv(&self, a: u64) -> Option<u64> {
        if a.is_multiple_of(self.p) {
            return None;
        }
        // extended Euclid on signed integers
        let (mut r0, mut r1) = (self.p as i64, a as i64);
        let (mut t0, mut t1) = (0i64, 1i64);
        while r1 != 0 {
            let quot = r0 / r1;
            (r0, r1) = (r1, r0 - quot * r1);
            (t0, t1) = (t1, t0 - quot * t1);
        }
        Some(t0.rem_euclid(self.p as i64) as u64)
    }
}

pub(crate) fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

fn prime_factors(mut n: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

// ---- dense polynomials, little-endian coefficient vectors ----

fn trim(mut a: Vec<u64>) -> Vec<u64> {
    while a.last() == Some(&0) {
        a.pop();
    }
    a
}

fn poly_mul<S: Scalars>(f: &S, a: &[u64], b: &[u64]) -> Vec<u64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = f.sadd(out[i + j], f.smul(x, y));
        }
    }
    trim(out)
}

/// Remainder modulo an arbitrary nonzero divisor.
fn poly_rem<S: Scalars>(f: &S, a: &[u64], m: &[u64]) -> Vec<u64> {
    let mut a = trim(a.to_vec());
    let m = trim(m.to_vec());
    let dm = m.len() - 1;
    let lead_inv = f.sinv(m[dm]).expect("nonzero leading coefficient");
    while a.len() > dm {
        let top = a.len() - 1;
        let c = f.smul(a[top], lead_inv);
        if c != 0 {
            for (j, &mj) in m.iter().enumerate() {
                let idx = top - dm + j;
                a[idx] = f.ssub(a[idx], f.smul(c, mj));
            }
        }
        a.pop();
        a = trim(a);
    }
    a
}

fn poly_mulmod<S: Scalars>(f: &S, a: &[u64], b: &[u64], m: &[u64]) -> Vec<u64> {
    poly_rem(f, &poly_mul(f, a, b), m)
}

fn poly_powmod<S: Scalars>(f: &S, base: &[u64], mut exp: u128, m: &[u64]) -> Vec<u64> {
    let mut result = vec![1];
    let mut b = poly_rem(f, base, m);
    while exp > 0 {
        if exp & 1 == 1 {
            result = poly_mulmod(f, &result, &b, m);
        }
        b = poly_mulmod(f, &b, &b, m);
        exp >>= 1;
    }
    poly_rem(f, &result, m)
}

fn poly_gcd<S: Scalars>(f: &S, a: &[u64], b: &[u64]) -> Vec<u64> {
    let mut a = trim(a.to_vec());
    let mut b = trim(b.to_vec());
    while !b.is_empty() {
        let r = poly_rem(f, &a, &b);
        a = b;
        b = r;
    }
    a
}

fn poly_sub<S: Scalars>(f: &S, a: &[u64], b: &[u64]) -> Vec<u64> {
    let n = a.len().max(b.len());
    let out = (0..n)
        .map(|i| f.ssub(a.get(i).copied().unwrap_or(0), b.get(i).copied().unwrap_or(0)))
        .collect();
    trim(out)
}

/// `z^(Q^k) mod m`, by `k` successive Q-th powers.
fn frobenius_of_z<S: Scalars>(f: &S, k: usize, m: &[u64]) -> Vec<u64> {
    let mut x = poly_rem(f, &[0, 1], m);
    for _ in 0..k {
        x = poly_powmod(f, &x, f.order() as u128, m);
    }
    x
}

/// Rabin's irreducibility test for a monic polynomial of degree `d >= 1`.
fn is_irreducible<S: Scalars>(f: &S, m: &[u64]) -> bool {
    let d = m.len() - 1;
    if d == 1 {
        return true;
    }
    let z = [0u64, 1];
    if poly_sub(f, &frobenius_of_z(f, d, m), &z) != Vec::<u64>::new() {
        return false;
    }
    prime_factors(d).into_iter().all(|t| {
        let h = poly_sub(f, &frobenius_of_z(f, d / t, m), &z);
        let g = poly_gcd(f, m, &h);
        g.len() == 1
    })
}

/// Lexicographically smallest monic irreducible polynomial of degree `d`.
fn smallest_irreducible<S: Scalars>(f: &S, d: usize) -> Vec<u64> {
    let q = f.order();
    let mut code: u128 = 0;
    loop {
        let mut coeffs = Vec::with_capacity(d + 1);
        let mut c = code;
        for _ in 0..d {
            coeffs.push((c % q as u128) as u64);
            c /= q as u128;
        }
        coeffs.push(1);
        if (d == 1 || coeffs[0] != 0) && is_irreducible(f, &coeffs) {
            return coeffs;
        }
        code += 1;
    }
}

fn unpack(mut code: u64, base: u64, len: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        out.push(code % base);
        code /= base;
    }
    out
}

fn pack(digits: &[u64], base: u64) -> u64 {
    digits.iter().rev().fold(0, |acc, &d| acc * base + d)
}

// ---- residue field ----

/// An element of the residue field `F_q`, stored as its integer code.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldElem(pub u32);

struct Tables {
    add: Vec<u32>,
    mul: Vec<u32>,
    sub: Vec<u32>,
    inv: Vec<u32>,
}

struct FqInner {
    prime: PrimeField,
    r: usize,
    q: u64,
    /// Monic degree-`r` modulus over `F_p`; `[0, 1]` when `r == 1`.
    modulus: Vec<u64>,
    tables: Option<Tables>,
}

/// The finite field `F_q`, `q = p^r`. Cheap to clone.
#[derive(Clone)]
pub struct Fq {
    inner: Arc<FqInner>,
}

impl Fq {
    pub fn new(p: u64, r: usize) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::UnsupportedField(format!("{p} is not prime")));
        }
        if r == 0 {
            return Err(Error::UnsupportedField("extension degree must be positive".into()));
        }
        let q = (0..r).try_fold(1u64, |acc, _| acc.checked_mul(p).filter(|&v| v <= MAX_FIELD_ORDER));
        let q = q.ok_or_else(|| Error::UnsupportedField(format!("{p}^{r} exceeds 2^31")))?;
        let prime = PrimeField { p };
        let modulus = if r == 1 { vec![0, 1] } else { smallest_irreducible(&prime, r) };
        let mut inner = FqInner { prime, r, q, modulus, tables: None };
        if q <= TABLE_LIMIT {
            inner.tables = Some(build_tables(&inner));
        }
        Ok(Self { inner: Arc::new(inner) })
    }

    pub fn prime(p: u64) -> Result<Self> {
        Self::new(p, 1)
    }

    pub fn p(&self) -> u64 {
        self.inner.prime.p
    }

    pub fn degree(&self) -> usize {
        self.inner.r
    }

    /// Field order `q`.
    pub fn q(&self) -> u64 {
        self.inner.q
    }

    /// Coefficients of the defining modulus over `F_p`, lowest degree first.
    pub fn modulus(&self) -> &[u64] {
        &self.inner.modulus
    }

    pub fn zero(&self) -> FieldElem {
        FieldElem(0)
    }

    pub fn one(&self) -> FieldElem {
        FieldElem(1)
    }

    pub fn elem(&self, code: u64) -> Result<FieldElem> {
        if code >= self.q() {
            return Err(Error::ElementOutOfRange { value: code, context: format!("F_{}", self.q()) });
        }
        Ok(FieldElem(code as u32))
    }

    pub fn add(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        FieldElem(self.sadd(a.0 as u64, b.0 as u64) as u32)
    }

    pub fn sub(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        FieldElem(self.ssub(a.0 as u64, b.0 as u64) as u32)
    }

    pub fn neg(&self, a: FieldElem) -> FieldElem {
        self.sub(FieldElem(0), a)
    }

    pub fn mul(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        FieldElem(self.smul(a.0 as u64, b.0 as u64) as u32)
    }

    pub fn inv(&self, a: FieldElem) -> Result<FieldElem> {
        self.sinv(a.0 as u64).map(|v| FieldElem(v as u32)).ok_or(Error::ZeroInverse)
    }

    /// `a^e`.
    pub fn pow(&self, a: FieldElem, mut e: u64) -> FieldElem {
        let mut base = a;
        let mut acc = self.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// Iterator over all field elements in code order.
    pub fn elements(&self) -> impl Iterator<Item = FieldElem> {
        (0..self.q() as u32).map(FieldElem)
    }

    fn raw_add(inner: &FqInner, a: u64, b: u64) -> u64 {
        if inner.r == 1 {
            return inner.prime.sadd(a, b);
        }
        let p = inner.prime.p;
        let (da, db) = (unpack(a, p, inner.r), unpack(b, p, inner.r));
        let sum: Vec<u64> = da.iter().zip(&db).map(|(x, y)| (x + y) % p).collect();
        pack(&sum, p)
    }

    fn raw_sub(inner: &FqInner, a: u64, b: u64) -> u64 {
        if inner.r == 1 {
            return inner.prime.ssub(a, b);
        }
        let p = inner.prime.p;
        let (da, db) = (unpack(a, p, inner.r), unpack(b, p, inner.r));
        let diff: Vec<u64> = da.iter().zip(&db).map(|(x, y)| (x + p - y) % p).collect();
        pack(&diff, p)
    }

    fn raw_mul(inner: &FqInner, a: u64, b: u64) -> u64 {
        if inner.r == 1 {
            return inner.prime.smul(a, b);
        }
        let p = inner.prime.p;
        let prod = poly_mulmod(
            &inner.prime,
            &trim(unpack(a, p, inner.r)),
            &trim(unpack(b, p, inner.r)),
            &inner.modulus,
        );
        pack(&prod, p)
    }

    fn raw_inv(inner: &FqInner, a: u64) -> Option<u64> {
        if a == 0 {
            return None;
        }
        if inner.r == 1 {
            return inner.prime.sinv(a);
        }
        // a^(q-2)
        let mut e = inner.q - 2;
        let mut base = a;
        let mut acc = 1;
        while e > 0 {
            if e & 1 == 1 {
                acc = Self::raw_mul(inner, acc, base);
            }
            base = Self::raw_mul(inner, base, base);
            e >>= 1;
        }
        Some(acc)
    }
}

fn build_tables(inner: &FqInner) -> Tables {
    let q = inner.q as usize;
    let mut t = Tables {
        add: vec![0; q * q],
        mul: vec![0; q * q],
        sub: vec![0; q * q],
        inv: vec![0; q],
    };
    for a in 0..q {
        for b in 0..q {
            t.add[a * q + b] = Fq::raw_add(inner, a as u64, b as u64) as u32;
            t.sub[a * q + b] = Fq::raw_sub(inner, a as u64, b as u64) as u32;
            t.mul[a * q + b] = Fq::raw_mul(inner, a as u64, b as u64) as u32;
        }
        t.inv[a] = Fq::raw_inv(inner, a as u64).unwrap_or(0) as u32;
    }
    t
}

impl Scalars for Fq {
    fn order(&self) -> u64 {
        self.inner.q
    }
    #[inline]
    fn sadd(&self, a: u64, b: u64) -> u64 {
        match &self.inner.tables {
            Some(t) => t.add[(a * self.inner.q + b) as usize] as u64,
            None => Fq::raw_add(&self.inner, a, b),
        }
    }
    #[inline]
    fn ssub(&self, a: u64, b: u64) -> u64 {
        match &self.inner.tables {
            Some(t) => t.sub[(a * self.inner.q + b) as usize] as u64,
            None => Fq::raw_sub(&self.inner, a, b),
        }
    }
    #[inline]
    fn smul(&self, a: u64, b: u64) -> u64 {
        match &self.inner.tables {
            Some(t) => t.mul[(a * self.inner.q + b) as usize] as u64,
            None => Fq::raw_mul(&self.inner, a, b),
        }
    }
    fn sinv(&self, a: u64) -> Option<u64> {
        if a == 0 {
            return None;
        }
        match &self.inner.tables {
            Some(t) => Some(t.inv[a as usize] as u64),
            None => Fq::raw_inv(&self.inner, a),
        }
    }
}

impl PartialEq for Fq {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner) || (self.p() == other.p() && self.degree() == other.degree())
    }
}

impl Eq for Fq {}

impl fmt::Debug for Fq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}", self.q())
    }
}

// ---- extension field ----

/// An element of `F_{q^m}`, coded by its base-`q` coordinates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExtElem(pub u64);

struct ExtInner {
    base: Fq,
    m: usize,
    order: u64,
    modulus: Vec<u64>,
}

/// The extension `F_{q^m}` over a residue field `F_q`. Cheap to clone.
#[derive(Clone)]
pub struct ExtField {
    inner: Arc<ExtInner>,
}

impl ExtField {
    pub fn new(base: Fq, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::UnsupportedField("extension degree must be positive".into()));
        }
        let order = (0..m).try_fold(1u64, |acc, _| acc.checked_mul(base.q()).filter(|&v| v < (1 << 63)));
        let order = order.ok_or_else(|| {
            Error::UnsupportedField(format!("F_{}^{} does not fit a 63-bit code", base.q(), m))
        })?;
        let modulus = if m == 1 { vec![0, 1] } else { smallest_irreducible(&base, m) };
        Ok(Self { inner: Arc::new(ExtInner { base, m, order, modulus }) })
    }

    pub fn base(&self) -> &Fq {
        &self.inner.base
    }

    /// Degree `m` over the base field.
    pub fn degree(&self) -> usize {
        self.inner.m
    }

    /// `q^m`.
    pub fn order(&self) -> u64 {
        self.inner.order
    }

    pub fn modulus(&self) -> &[u64] {
        &self.inner.modulus
    }

    pub fn zero(&self) -> ExtElem {
        ExtElem(0)
    }

    pub fn one(&self) -> ExtElem {
        ExtElem(1)
    }

    /// `z^i`, the i-th polynomial basis element.
    pub fn basis(&self, i: usize) -> ExtElem {
        assert!(i < self.degree());
        ExtElem(self.base().q().pow(i as u32))
    }

    pub fn elem(&self, code: u64) -> Result<ExtElem> {
        if code >= self.order() {
            return Err(Error::ElementOutOfRange { value: code, context: format!("F_{}", self.order()) });
        }
        Ok(ExtElem(code))
    }

    fn digits(&self, a: ExtElem) -> Vec<u64> {
        unpack(a.0, self.base().q(), self.degree())
    }

    fn from_digits(&self, d: &[u64]) -> ExtElem {
        let mut padded = d.to_vec();
        padded.resize(self.degree(), 0);
        ExtElem(pack(&padded, self.base().q()))
    }

    pub fn add(&self, a: ExtElem, b: ExtElem) -> ExtElem {
        let f = self.base();
        let s: Vec<u64> = self.digits(a).iter().zip(self.digits(b)).map(|(&x, y)| f.sadd(x, y)).collect();
        self.from_digits(&s)
    }

    pub fn sub(&self, a: ExtElem, b: ExtElem) -> ExtElem {
        let f = self.base();
        let s: Vec<u64> = self.digits(a).iter().zip(self.digits(b)).map(|(&x, y)| f.ssub(x, y)).collect();
        self.from_digits(&s)
    }

    pub fn mul(&self, a: ExtElem, b: ExtElem) -> ExtElem {
        let prod = poly_mulmod(self.base(), &trim(self.digits(a)), &trim(self.digits(b)), self.modulus());
        self.from_digits(&prod)
    }

    pub fn pow(&self, a: ExtElem, e: u128) -> ExtElem {
        let r = poly_powmod(self.base(), &trim(self.digits(a)), e, self.modulus());
        self.from_digits(&r)
    }

    pub fn inv(&self, a: ExtElem) -> Result<ExtElem> {
        if a.0 == 0 {
            return Err(Error::ZeroInverse);
        }
        Ok(self.pow(a, self.order() as u128 - 2))
    }

    /// The `F_q`-linear automorphism `x -> x^q`.
    pub fn frobenius(&self, a: ExtElem) -> ExtElem {
        self.pow(a, self.base().q() as u128)
    }

    /// Coordinates of `a` in the basis `1, z, ..., z^{m-1}`.
    pub fn to_coords(&self, a: ExtElem) -> Vec<FieldElem> {
        self.digits(a).into_iter().map(|d| FieldElem(d as u32)).collect()
    }

    /// Inverse of [`ExtField::to_coords`].
    pub fn from_coords(&self, coords: &[FieldElem]) -> Result<ExtElem> {
        if coords.len() != self.degree() {
            return Err(Error::Dimension(format!(
                "expected {} coordinates, got {}",
                self.degree(),
                coords.len()
            )));
        }
        let d: Vec<u64> = coords.iter().map(|c| c.0 as u64).collect();
        if d.iter().any(|&c| c >= self.base().q()) {
            return Err(Error::ElementOutOfRange { value: *d.iter().max().unwrap(), context: "coordinate".into() });
        }
        Ok(self.from_digits(&d))
    }
}

impl fmt::Debug for ExtField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}^{}", self.base().q(), self.degree())
    }
}

// ---- matrices ----

/// Dense row-major matrix over `F_q`.
#[derive(Clone, PartialEq, Eq)]
pub struct FieldMatrix {
    field: Fq,
    rows: usize,
    cols: usize,
    data: Vec<FieldElem>,
}

/// Solution set of `M X = B`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Solution {
    Unique(FieldMatrix),
    None,
    /// `particular + span(nullspace)`; `nullspace` holds column vectors.
    Affine { particular: FieldMatrix, nullspace: Vec<FieldMatrix> },
}

impl FieldMatrix {
    pub fn zeros(field: &Fq, rows: usize, cols: usize) -> Self {
        Self { field: field.clone(), rows, cols, data: vec![FieldElem(0); rows * cols] }
    }

    pub fn identity(field: &Fq, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.set(i, i, FieldElem(1));
        }
        m
    }

    pub fn from_vec(field: &Fq, rows: usize, cols: usize, data: Vec<FieldElem>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!("{} entries for a {rows}x{cols} matrix", data.len())));
        }
        if let Some(bad) = data.iter().find(|e| e.0 as u64 >= field.q()) {
            return Err(Error::ElementOutOfRange { value: bad.0 as u64, context: format!("{field:?}") });
        }
        Ok(Self { field: field.clone(), rows, cols, data })
    }

    pub fn from_rows(field: &Fq, rows: &[Vec<u32>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Self::from_vec(field, r, c, rows.iter().flatten().map(|&v| FieldElem(v)).collect())
    }

    pub fn field(&self) -> &Fq {
        &self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[FieldElem] {
        &self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> FieldElem {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: FieldElem) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[FieldElem] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|e| e.0 == 0)
    }

    fn check_field(&self, other: &Self) -> Result<()> {
        if self.field != other.field {
            return Err(Error::Dimension(format!("field {:?} vs {:?}", self.field, other.field)));
        }
        Ok(())
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_field(other)?;
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let f = &self.field;
        let mut out = Self::zeros(f, self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k).0 as u64;
                if a == 0 {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j).0 as u64;
                    let cur = out.data[i * other.cols + j].0 as u64;
                    out.data[i * other.cols + j] = FieldElem(f.sadd(cur, f.smul(a, b)) as u32);
                }
            }
        }
        Ok(out)
    }

    fn zip_with(&self, other: &Self, op: impl Fn(FieldElem, FieldElem) -> FieldElem) -> Result<Self> {
        self.check_field(other)?;
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::Dimension(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| op(a, b)).collect();
        Ok(Self { field: self.field.clone(), rows: self.rows, cols: self.cols, data })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let f = self.field.clone();
        self.zip_with(other, |a, b| f.add(a, b))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        let f = self.field.clone();
        self.zip_with(other, |a, b| f.sub(a, b))
    }

    pub fn scale(&self, c: FieldElem) -> Self {
        let data = self.data.iter().map(|&a| self.field.mul(a, c)).collect();
        Self { field: self.field.clone(), rows: self.rows, cols: self.cols, data }
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(&self.field, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    /// Rows `r0..r1`, columns `c0..c1`.
    pub fn submatrix(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> Self {
        let mut out = Self::zeros(&self.field, r1 - r0, c1 - c0);
        for i in r0..r1 {
            for j in c0..c1 {
                out.set(i - r0, j - c0, self.get(i, j));
            }
        }
        out
    }

    /// Copy into a zero matrix of the given size (top-left aligned).
    pub fn padded(&self, rows: usize, cols: usize) -> Self {
        assert!(rows >= self.rows && cols >= self.cols);
        let mut out = Self::zeros(&self.field, rows, cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(i, j, self.get(i, j));
            }
        }
        out
    }

    /// Reduced row echelon form restricted to pivoting in the first
    /// `pivot_cols` columns; returns the pivot column of each pivot row.
    fn rref_in_place(&mut self, pivot_cols: usize) -> Vec<usize> {
        let f = self.field.clone();
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..pivot_cols {
            if row == self.rows {
                break;
            }
            let Some(pr) = (row..self.rows).find(|&r| self.get(r, col).0 != 0) else {
                continue;
            };
            if pr != row {
                for j in 0..self.cols {
                    self.data.swap(pr * self.cols + j, row * self.cols + j);
                }
            }
            let inv = f.inv(self.get(row, col)).expect("pivot is nonzero");
            for j in 0..self.cols {
                let v = f.mul(self.get(row, j), inv);
                self.set(row, j, v);
            }
            for r in 0..self.rows {
                if r == row {
                    continue;
                }
                let factor = self.get(r, col);
                if factor.0 == 0 {
                    continue;
                }
                for j in 0..self.cols {
                    let v = f.sub(self.get(r, j), f.mul(factor, self.get(row, j)));
                    self.set(r, j, v);
                }
            }
            pivots.push(col);
            row += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        m.rref_in_place(self.cols).len()
    }

    pub fn is_invertible(&self) -> bool {
        self.rows == self.cols && self.rank() == self.rows
    }

    pub fn inverse(&self) -> Result<Self> {
        if self.rows != self.cols {
            return Err(Error::NotInvertible);
        }
        match self.solve(&Self::identity(&self.field, self.rows))? {
            Solution::Unique(x) => Ok(x),
            _ => Err(Error::NotInvertible),
        }
    }

    /// Solves `self * X = rhs`, reporting the full solution set.
    pub fn solve(&self, rhs: &Self) -> Result<Solution> {
        self.check_field(rhs)?;
        if self.rows != rhs.rows {
            return Err(Error::Dimension(format!(
                "system has {} equations but right-hand side has {} rows",
                self.rows, rhs.rows
            )));
        }
        let (n, k) = (self.cols, rhs.cols);
        let mut aug = Self::zeros(&self.field, self.rows, n + k);
        for i in 0..self.rows {
            for j in 0..n {
                aug.set(i, j, self.get(i, j));
            }
            for j in 0..k {
                aug.set(i, n + j, rhs.get(i, j));
            }
        }
        let pivots = aug.rref_in_place(n);
        let rank = pivots.len();
        // rows below the rank have a zero coefficient part
        for i in rank..self.rows {
            if (0..k).any(|j| aug.get(i, n + j).0 != 0) {
                return Ok(Solution::None);
            }
        }
        let mut particular = Self::zeros(&self.field, n, k);
        for (i, &pc) in pivots.iter().enumerate() {
            for j in 0..k {
                particular.set(pc, j, aug.get(i, n + j));
            }
        }
        if rank == n {
            return Ok(Solution::Unique(particular));
        }
        let f = &self.field;
        let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
        let nullspace = free
            .iter()
            .map(|&fc| {
                let mut v = Self::zeros(f, n, 1);
                v.set(fc, 0, FieldElem(1));
                for (i, &pc) in pivots.iter().enumerate() {
                    v.set(pc, 0, f.neg(aug.get(i, fc)));
                }
                v
            })
            .collect();
        Ok(Solution::Affine { particular, nullspace })
    }
}

impl fmt::Debug for FieldMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}[", self.field)?;
        for i in 0..self.rows {
            if i > 0 {
                f.write_str("; ")?;
            }
            let row: Vec<String> = self.row(i).iter().map(|e| e.0.to_string()).collect();
            f.write_str(&row.join(" "))?;
        }
        f.write_str("]")
    }
}
