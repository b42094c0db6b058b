//! s-shapes: non-decreasing tuples of non-negative integers.
//!
//! A shape classifies a finite module over a `(q, s)` chain ring up to
//! isomorphism, generalizing the dimension of a vector space. Packet spaces
//! (`lambda`), matrix shapes (`rho`), deficiency bounds (`beta`) and
//! null-space shapes are all [`SShape`] values.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// A non-decreasing sequence of `s >= 1` non-negative integers.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SShape(Vec<usize>);

impl SShape {
    /// Validates monotonicity; invalid sequences are rejected, never normalized.
    pub fn new(entries: Vec<usize>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidShape("a shape needs at least one entry".into()));
        }
        if let Some(w) = entries.windows(2).find(|w| w[0] > w[1]) {
            return Err(Error::InvalidShape(format!(
                "entries must be non-decreasing, found {} > {}",
                w[0], w[1]
            )));
        }
        Ok(Self(entries))
    }

    /// The shape `(m, m, ..., m)` of length `s`.
    pub fn constant(m: usize, s: usize) -> Result<Self> {
        if s == 0 {
            return Err(Error::InvalidShape("s must be positive".into()));
        }
        Ok(Self(vec![m; s]))
    }

    pub fn zero(s: usize) -> Result<Self> {
        Self::constant(0, s)
    }

    pub fn s(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[usize] {
        &self.0
    }

    /// Entry `i`, with the convention that index `-1` reads as zero.
    pub fn get(&self, i: isize) -> usize {
        if i < 0 {
            0
        } else {
            self.0[i as usize]
        }
    }

    /// Last entry; for a packet shape this is the packet length.
    pub fn last(&self) -> usize {
        *self.0.last().expect("shapes are non-empty")
    }

    /// `|mu| = mu_0 + ... + mu_{s-1}`.
    pub fn size(&self) -> usize {
        self.0.iter().sum()
    }

    fn check_len(&self, other: &Self) -> Result<()> {
        if self.s() != other.s() {
            return Err(Error::ShapeLength { left: self.s(), right: other.s() });
        }
        Ok(())
    }

    /// Componentwise partial order.
    pub fn leq(&self, other: &Self) -> Result<bool> {
        self.check_len(other)?;
        Ok(self.0.iter().zip(&other.0).all(|(a, b)| a <= b))
    }

    /// `self ⪯ m` for the constant shape `m`.
    pub fn leq_scalar(&self, m: usize) -> bool {
        self.last() <= m
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_len(other)?;
        Ok(Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect()))
    }

    /// `mu - n`, defined when `n <= mu_0`.
    pub fn sub_scalar(&self, n: usize) -> Result<Self> {
        if n > self.0[0] {
            return Err(Error::OutOfDomain(format!("{self} - {n} requires {n} <= {}", self.0[0])));
        }
        Ok(Self(self.0.iter().map(|a| a - n).collect()))
    }

    /// `n - mu = (n - mu_{s-1}, ..., n - mu_0)`, defined when `n >= mu_{s-1}`.
    pub fn complement(&self, n: usize) -> Result<Self> {
        if n < self.last() {
            return Err(Error::OutOfDomain(format!("{n} - {self} requires {n} >= {}", self.last())));
        }
        Ok(Self(self.0.iter().rev().map(|a| n - a).collect()))
    }

    /// Reversed-index weighted sum `sum_i self_{s-i-1} * weights_i`.
    ///
    /// With `self = rho` and `weights = lambda` this is the number of q-ary
    /// digits a transfer matrix of shape `rho` lets through.
    pub fn reversed_dot(&self, weights: &Self) -> Result<usize> {
        self.check_len(weights)?;
        let s = self.s();
        Ok((0..s).map(|i| self.0[s - i - 1] * weights.0[i]).sum())
    }

    /// Enumerates every s-shape with entries in `0..=max`, in lexicographic order.
    pub fn all_bounded(s: usize, max: usize) -> Vec<SShape> {
        fn rec(prefix: &mut Vec<usize>, s: usize, max: usize, out: &mut Vec<SShape>) {
            if prefix.len() == s {
                out.push(SShape(prefix.clone()));
                return;
            }
            let lo = prefix.last().copied().unwrap_or(0);
            for v in lo..=max {
                prefix.push(v);
                rec(prefix, s, max, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        if s > 0 {
            rec(&mut Vec::with_capacity(s), s, max, &mut out);
        }
        out
    }
}

impl fmt::Display for SShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for SShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({self})")
    }
}

impl FromStr for SShape {
    type Err = Error;

    /// Parses the comma-separated form `"a,b,c"`.
    fn from_str(text: &str) -> Result<Self> {
        let entries = text
            .trim()
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Parse(format!("bad shape entry {tok:?} in {text:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(entries)
    }
}
