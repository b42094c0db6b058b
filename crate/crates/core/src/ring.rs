//! Finite chain rings `Z_{p^s}` and `F_q[u]/(u^s)`.
//!
//! Both families share one integer coding of elements: the base-`q`
//! digits of an element code are its pi-adic digits, lowest first. For
//! `Z_{p^s}` this is the ordinary base-`p` expansion with digit set
//! `{0, ..., p-1}`; for `F_q[u]/(u^s)` the digits are the coefficients of
//! `u^i`, each an embedded `F_q` element. Consequently `pi^i` has code `q^i`,
//! multiplication by `pi^i` is a digit shift, and the residue map keeps the
//! lowest digit.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{is_prime, FieldElem, Fq, Scalars};

/// Largest ring order accepted (`q^s`).
pub const MAX_RING_ORDER: u64 = 1 << 31;
const TABLE_LIMIT: u64 = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RingFamily {
    /// `Z_{p^s}`, with `pi = p`.
    IntegerMod,
    /// `F_q[u]/(u^s)`, with `pi = u`.
    PolyNilpotent,
}

/// Parameters of a chain ring. Text forms: `z:p:s` and `fqu:p:r:s`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ChainRingSpec {
    pub family: RingFamily,
    pub p: u64,
    /// Residue field extension degree; always 1 for `Z_{p^s}`.
    pub r: usize,
    pub s: usize,
}

impl ChainRingSpec {
    pub fn integer_mod(p: u64, s: usize) -> Self {
        Self { family: RingFamily::IntegerMod, p, r: 1, s }
    }

    pub fn poly_nilpotent(p: u64, r: usize, s: usize) -> Self {
        Self { family: RingFamily::PolyNilpotent, p, r, s }
    }
}

impl fmt::Display for ChainRingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            RingFamily::IntegerMod => write!(f, "z:{}:{}", self.p, self.s),
            RingFamily::PolyNilpotent => write!(f, "fqu:{}:{}:{}", self.p, self.r, self.s),
        }
    }
}

impl FromStr for ChainRingSpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.trim().split(':').collect();
        let num = |t: &str| {
            t.parse::<u64>().map_err(|_| Error::Parse(format!("bad number {t:?} in ring spec {text:?}")))
        };
        match parts.as_slice() {
            ["z", p, s] => Ok(Self::integer_mod(num(p)?, num(s)? as usize)),
            ["fqu", p, r, s] => Ok(Self::poly_nilpotent(num(p)?, num(r)? as usize, num(s)? as usize)),
            _ => Err(Error::Parse(format!("ring spec {text:?} is not z:p:s or fqu:p:r:s"))),
        }
    }
}

/// A chain ring element, stored as its integer code in `[0, q^s)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RingElem(pub u32);

struct RingTables {
    add: Vec<u32>,
    sub: Vec<u32>,
    mul: Vec<u32>,
}

struct RingInner {
    spec: ChainRingSpec,
    q: u64,
    size: u64,
    /// `q^i` for `0 <= i <= s`.
    pow_q: Vec<u64>,
    residue: Fq,
    tables: Option<RingTables>,
}

/// A `(q, s)` chain ring. Cheap to clone; equality compares parameters.
#[derive(Clone)]
pub struct ChainRing {
    inner: Arc<RingInner>,
}

impl ChainRing {
    pub fn new(spec: ChainRingSpec) -> Result<Self> {
        if !is_prime(spec.p) {
            return Err(Error::UnsupportedRing(format!("{} is not prime", spec.p)));
        }
        if spec.s == 0 || spec.r == 0 {
            return Err(Error::UnsupportedRing(format!("{spec}: r and s must be positive")));
        }
        if spec.family == RingFamily::IntegerMod && spec.r != 1 {
            return Err(Error::UnsupportedRing(format!("{spec}: Z_(p^s) has r = 1")));
        }
        let exp = spec.r.checked_mul(spec.s).ok_or_else(|| Error::UnsupportedRing(spec.to_string()))?;
        let size = (0..exp).try_fold(1u64, |acc, _| acc.checked_mul(spec.p).filter(|&v| v <= MAX_RING_ORDER));
        let size = size.ok_or_else(|| Error::UnsupportedRing(format!("{spec}: order exceeds 2^31")))?;
        let residue = Fq::new(spec.p, spec.r)?;
        let q = residue.q();
        let pow_q = (0..=spec.s).map(|i| q.pow(i as u32)).collect();
        let mut inner = RingInner { spec, q, size, pow_q, residue, tables: None };
        if size <= TABLE_LIMIT {
            inner.tables = Some(build_tables(&inner));
        }
        Ok(Self { inner: Arc::new(inner) })
    }

    /// `Z_{p^s}`.
    pub fn integers_mod(p: u64, s: usize) -> Result<Self> {
        Self::new(ChainRingSpec::integer_mod(p, s))
    }

    /// `F_{p^r}[u]/(u^s)`.
    pub fn truncated_poly(p: u64, r: usize, s: usize) -> Result<Self> {
        Self::new(ChainRingSpec::poly_nilpotent(p, r, s))
    }

    pub fn spec(&self) -> &ChainRingSpec {
        &self.inner.spec
    }

    pub fn q(&self) -> u64 {
        self.inner.q
    }

    /// Nilpotency index of `pi`.
    pub fn s(&self) -> usize {
        self.inner.spec.s
    }

    /// `|R| = q^s`.
    pub fn order(&self) -> u64 {
        self.inner.size
    }

    /// The residue field `F = R / <pi>`.
    pub fn residue_field(&self) -> &Fq {
        &self.inner.residue
    }

    pub fn zero(&self) -> RingElem {
        RingElem(0)
    }

    pub fn one(&self) -> RingElem {
        RingElem(1)
    }

    pub fn element(&self, code: u64) -> Result<RingElem> {
        if code >= self.order() {
            return Err(Error::ElementOutOfRange { value: code, context: self.spec().to_string() });
        }
        Ok(RingElem(code as u32))
    }

    pub fn elements(&self) -> impl Iterator<Item = RingElem> {
        (0..self.order() as u32).map(RingElem)
    }

    /// The elements of the ideal `<pi^i>`.
    pub fn ideal_elements(&self, i: usize) -> impl Iterator<Item = RingElem> + '_ {
        let i = i.min(self.s());
        (0..self.inner.pow_q[self.s() - i]).map(move |t| RingElem((t * self.inner.pow_q[i]) as u32))
    }

    fn is_same(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner) || self.spec() == other.spec()
    }

    pub(crate) fn check_same(&self, other: &Self) -> Result<()> {
        if !self.is_same(other) {
            return Err(Error::RingMismatch(self.spec().to_string(), other.spec().to_string()));
        }
        Ok(())
    }

    // ---- arithmetic ----

    #[inline]
    pub fn add(&self, a: RingElem, b: RingElem) -> RingElem {
        match &self.inner.tables {
            Some(t) => RingElem(t.add[a.0 as usize * self.inner.size as usize + b.0 as usize]),
            None => RingElem(raw_add(&self.inner, a.0 as u64, b.0 as u64) as u32),
        }
    }

    #[inline]
    pub fn sub(&self, a: RingElem, b: RingElem) -> RingElem {
        match &self.inner.tables {
            Some(t) => RingElem(t.sub[a.0 as usize * self.inner.size as usize + b.0 as usize]),
            None => RingElem(raw_sub(&self.inner, a.0 as u64, b.0 as u64) as u32),
        }
    }

    #[inline]
    pub fn neg(&self, a: RingElem) -> RingElem {
        self.sub(RingElem(0), a)
    }

    #[inline]
    pub fn mul(&self, a: RingElem, b: RingElem) -> RingElem {
        match &self.inner.tables {
            Some(t) => RingElem(t.mul[a.0 as usize * self.inner.size as usize + b.0 as usize]),
            None => RingElem(raw_mul(&self.inner, a.0 as u64, b.0 as u64) as u32),
        }
    }

    /// `pi`.
    pub fn pi(&self) -> RingElem {
        self.pi_pow(1)
    }

    /// `pi^i`; zero for `i >= s`.
    pub fn pi_pow(&self, i: usize) -> RingElem {
        if i >= self.s() {
            RingElem(0)
        } else {
            RingElem(self.inner.pow_q[i] as u32)
        }
    }

    /// `x * pi^i`.
    pub fn mul_pi_pow(&self, x: RingElem, i: usize) -> RingElem {
        if i >= self.s() {
            return RingElem(0);
        }
        RingElem(((x.0 as u64 * self.inner.pow_q[i]) % self.inner.size) as u32)
    }

    /// Pi-adic digit `x^(i)`, as an element of the digit set.
    pub fn digit(&self, x: RingElem, i: usize) -> Result<RingElem> {
        if i >= self.s() {
            return Err(Error::IndexOutOfRange { index: i, limit: self.s() });
        }
        Ok(RingElem(((x.0 as u64 / self.inner.pow_q[i]) % self.inner.q) as u32))
    }

    /// `x^(i)` without bounds checks, for internal loops.
    #[inline]
    pub(crate) fn digit_unchecked(&self, x: RingElem, i: usize) -> RingElem {
        RingElem(((x.0 as u64 / self.inner.pow_q[i]) % self.inner.q) as u32)
    }

    /// All `s` pi-adic digits, lowest first.
    pub fn digits(&self, x: RingElem) -> Vec<RingElem> {
        (0..self.s()).map(|i| self.digit_unchecked(x, i)).collect()
    }

    /// `x` truncated to its first `i` digits.
    pub fn truncate(&self, x: RingElem, i: usize) -> Result<RingElem> {
        if i > self.s() {
            return Err(Error::IndexOutOfRange { index: i, limit: self.s() + 1 });
        }
        Ok(RingElem((x.0 as u64 % self.inner.pow_q[i]) as u32))
    }

    /// Reassembles `sum_i digits[i] * pi^i` with ring arithmetic.
    pub fn from_digits(&self, digits: &[RingElem]) -> RingElem {
        digits
            .iter()
            .enumerate()
            .fold(RingElem(0), |acc, (i, &d)| self.add(acc, self.mul_pi_pow(d, i)))
    }

    /// Largest `i` with `x` in `<pi^i>`; `s` for zero.
    pub fn valuation(&self, x: RingElem) -> usize {
        if x.0 == 0 {
            return self.s();
        }
        let mut v = 0;
        let mut c = x.0 as u64;
        while c.is_multiple_of(self.inner.q) {
            c /= self.inner.q;
            v += 1;
        }
        v
    }

    pub fn is_unit(&self, x: RingElem) -> bool {
        self.valuation(x) == 0
    }

    /// Writes nonzero `x = unit * pi^v`; returns `(unit, v)`.
    pub fn unit_factor(&self, x: RingElem) -> Option<(RingElem, usize)> {
        if x.0 == 0 {
            return None;
        }
        let v = self.valuation(x);
        Some((self.div_pi_pow(x, v), v))
    }

    /// A `c` with `c * pi^v = x`, for `x` in `<pi^v>`.
    pub fn div_pi_pow(&self, x: RingElem, v: usize) -> RingElem {
        debug_assert!(self.valuation(x) >= v);
        RingElem((x.0 as u64 / self.inner.pow_q[v]) as u32)
    }

    /// Inverse of a unit, by Newton lifting from the residue field.
    pub fn inv(&self, u: RingElem) -> Result<RingElem> {
        if !self.is_unit(u) {
            return Err(Error::NotInvertible);
        }
        let f = self.residue_field();
        let mut y = self.lift(f.inv(self.residue(u))?);
        let two = self.add(RingElem(1), RingElem(1));
        // each step doubles the number of correct digits
        for _ in 0..=usize::BITS - self.s().leading_zeros() {
            if self.mul(u, y) == RingElem(1) {
                break;
            }
            y = self.mul(y, self.sub(two, self.mul(u, y)));
        }
        debug_assert_eq!(self.mul(u, y), RingElem(1));
        Ok(y)
    }

    /// Natural projection `phi : R -> F`.
    #[inline]
    pub fn residue(&self, x: RingElem) -> FieldElem {
        FieldElem((x.0 as u64 % self.inner.q) as u32)
    }

    /// Coset representative lift `F -> Gamma`, with `phi(lift(a)) = a`.
    #[inline]
    pub fn lift(&self, a: FieldElem) -> RingElem {
        RingElem(a.0)
    }

    // ---- text ----

    /// Decimal integer for `Z_{p^s}`; comma-separated digits (lowest
    /// first, each an `F_q` code) for `F_q[u]/(u^s)`.
    pub fn parse_element(&self, token: &str) -> Result<RingElem> {
        let token = token.trim();
        match self.spec().family {
            RingFamily::IntegerMod => {
                let v: u64 = token.parse().map_err(|_| Error::Parse(format!("bad ring element {token:?}")))?;
                self.element(v)
            }
            RingFamily::PolyNilpotent => {
                let digits: Vec<u64> = token
                    .split(',')
                    .map(|t| t.trim().parse::<u64>().map_err(|_| Error::Parse(format!("bad digit in {token:?}"))))
                    .collect::<Result<_>>()?;
                if digits.len() > self.s() {
                    return Err(Error::Parse(format!("{token:?} has more than s = {} digits", self.s())));
                }
                let mut code = 0u64;
                for (i, &d) in digits.iter().enumerate() {
                    if d >= self.q() {
                        return Err(Error::ElementOutOfRange { value: d, context: format!("F_{}", self.q()) });
                    }
                    code += d * self.inner.pow_q[i];
                }
                self.element(code)
            }
        }
    }

    pub fn format_element(&self, x: RingElem) -> String {
        match self.spec().family {
            RingFamily::IntegerMod => x.0.to_string(),
            RingFamily::PolyNilpotent => {
                let d: Vec<String> = self.digits(x).iter().map(|d| d.0.to_string()).collect();
                d.join(",")
            }
        }
    }
}

fn raw_add(inner: &RingInner, a: u64, b: u64) -> u64 {
    match inner.spec.family {
        RingFamily::IntegerMod => (a + b) % inner.size,
        RingFamily::PolyNilpotent => digitwise(inner, a, b, |x, y| inner.residue.sadd(x, y)),
    }
}

fn raw_sub(inner: &RingInner, a: u64, b: u64) -> u64 {
    match inner.spec.family {
        RingFamily::IntegerMod => (a + inner.size - b) % inner.size,
        RingFamily::PolyNilpotent => digitwise(inner, a, b, |x, y| inner.residue.ssub(x, y)),
    }
}

fn raw_mul(inner: &RingInner, a: u64, b: u64) -> u64 {
    match inner.spec.family {
        RingFamily::IntegerMod => (a * b) % inner.size,
        RingFamily::PolyNilpotent => {
            let s = inner.spec.s;
            let (da, db) = (split(inner, a), split(inner, b));
            let f = &inner.residue;
            let mut out = vec![0u64; s];
            for i in 0..s {
                if da[i] == 0 {
                    continue;
                }
                for j in 0..s - i {
                    out[i + j] = f.sadd(out[i + j], f.smul(da[i], db[j]));
                }
            }
            join(inner, &out)
        }
    }
}

fn split(inner: &RingInner, mut x: u64) -> Vec<u64> {
    (0..inner.spec.s)
        .map(|_| {
            let d = x % inner.q;
            x /= inner.q;
            d
        })
        .collect()
}

fn join(inner: &RingInner, d: &[u64]) -> u64 {
    d.iter().rev().fold(0, |acc, &v| acc * inner.q + v)
}

fn digitwise(inner: &RingInner, a: u64, b: u64, op: impl Fn(u64, u64) -> u64) -> u64 {
    let (da, db) = (split(inner, a), split(inner, b));
    let out: Vec<u64> = da.iter().zip(&db).map(|(&x, &y)| op(x, y)).collect();
    join(inner, &out)
}

fn build_tables(inner: &RingInner) -> RingTables {
    let n = inner.size as usize;
    let mut t = RingTables { add: vec![0; n * n], sub: vec![0; n * n], mul: vec![0; n * n] };
    for a in 0..n {
        for b in 0..n {
            t.add[a * n + b] = raw_add(inner, a as u64, b as u64) as u32;
            t.sub[a * n + b] = raw_sub(inner, a as u64, b as u64) as u32;
            t.mul[a * n + b] = raw_mul(inner, a as u64, b as u64) as u32;
        }
    }
    t
}

impl PartialEq for ChainRing {
    fn eq(&self, other: &Self) -> bool {
        self.is_same(other)
    }
}

impl Eq for ChainRing {}

impl fmt::Debug for ChainRing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ChainRing({})", self.spec())
    }
}
