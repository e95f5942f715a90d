//! Truncated tensor-product spaces.
//!
//! A space is an ordered list of factors, each either a truncation of
//! `ℓ²(ℕ)` (basis `e_0 .. e_{D-1}`) or of `ℓ²(ℤ)` (basis `e_{-D} .. e_D`).
//! Basis vectors of the product are enumerated row-major: the last factor
//! varies fastest.

use serde::{Deserialize, Serialize};
use std::fmt;

use super::FockError;

/// The kind of a tensor factor, independent of its truncation size.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Mode {
    /// Half-line factor `ℓ²(ℕ)`: the shift is a coisometry.
    Nat,
    /// Bilateral factor `ℓ²(ℤ)`: the shift is unitary.
    Int,
}

/// A truncated factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FactorKind {
    NatTrunc(usize),
    IntTrunc(usize),
}

impl FactorKind {
    pub fn mode(&self) -> Mode {
        match self {
            FactorKind::NatTrunc(_) => Mode::Nat,
            FactorKind::IntTrunc(_) => Mode::Int,
        }
    }

    /// The truncation parameter `D`.
    pub fn size_param(&self) -> usize {
        match *self {
            FactorKind::NatTrunc(d) | FactorKind::IntTrunc(d) => d,
        }
    }

    pub fn dim(&self) -> usize {
        match *self {
            FactorKind::NatTrunc(d) => d,
            FactorKind::IntTrunc(d) => 2 * d + 1,
        }
    }

    /// Smallest basis label.
    pub fn min_label(&self) -> i64 {
        match *self {
            FactorKind::NatTrunc(_) => 0,
            FactorKind::IntTrunc(d) => -(d as i64),
        }
    }

    /// Largest basis label.
    pub fn max_label(&self) -> i64 {
        match *self {
            FactorKind::NatTrunc(d) => d as i64 - 1,
            FactorKind::IntTrunc(d) => d as i64,
        }
    }

    /// Basis label `n` of local position `pos`.
    #[inline]
    pub fn label(&self, pos: usize) -> i64 {
        pos as i64 + self.min_label()
    }

    /// Local position of basis label `n`, if it lies in the truncation.
    #[inline]
    pub fn position(&self, n: i64) -> Option<usize> {
        if n < self.min_label() || n > self.max_label() {
            None
        } else {
            Some((n - self.min_label()) as usize)
        }
    }
}

impl fmt::Display for FactorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FactorKind::NatTrunc(d) => write!(f, "N{d}"),
            FactorKind::IntTrunc(d) => write!(f, "Z{d}"),
        }
    }
}

/// An ordered tensor product of truncated factors.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpaceSpec {
    factors: Vec<FactorKind>,
}

impl SpaceSpec {
    /// Builds a space; every factor needs `D >= 2`.
    ///
    /// The empty space (no factors) is the one-dimensional scalar space; it
    /// is used for scalar-valued representations.
    pub fn new(factors: Vec<FactorKind>) -> Result<Self, FockError> {
        if let Some(bad) = factors.iter().find(|f| f.size_param() < 2) {
            return Err(FockError::FactorTooSmall(*bad));
        }
        Ok(SpaceSpec { factors })
    }

    /// `mode`-shaped space with the same `D` in every factor.
    pub fn uniform(modes: &[Mode], d: usize) -> Result<Self, FockError> {
        SpaceSpec::new(
            modes
                .iter()
                .map(|m| match m {
                    Mode::Nat => FactorKind::NatTrunc(d),
                    Mode::Int => FactorKind::IntTrunc(d),
                })
                .collect(),
        )
    }

    pub fn factors(&self) -> &[FactorKind] {
        &self.factors
    }

    pub fn modes(&self) -> Vec<Mode> {
        self.factors.iter().map(FactorKind::mode).collect()
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.factors.iter().map(FactorKind::dim).product()
    }

    /// Row-major strides, last factor fastest.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1usize; self.factors.len()];
        for f in (0..self.factors.len().saturating_sub(1)).rev() {
            strides[f] = strides[f + 1] * self.factors[f + 1].dim();
        }
        strides
    }

    /// Per-factor local positions of a global basis index.
    pub fn unravel(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.factors.len()];
        for f in (0..self.factors.len()).rev() {
            let d = self.factors[f].dim();
            out[f] = idx % d;
            idx /= d;
        }
        out
    }

    pub fn ravel(&self, positions: &[usize]) -> usize {
        positions.iter().zip(&self.factors).fold(0, |acc, (&p, f)| acc * f.dim() + p)
    }

    /// Basis labels (`n` values) of a global basis index.
    pub fn labels(&self, idx: usize) -> Vec<i64> {
        self.unravel(idx).iter().zip(&self.factors).map(|(&p, f)| f.label(p)).collect()
    }

    /// Space with the factor order reversed.
    pub fn reversed(&self) -> SpaceSpec {
        let mut factors = self.factors.clone();
        factors.reverse();
        SpaceSpec { factors }
    }

    /// Basis-index permutation `idx -> idx'` realising the factor reversal.
    pub fn reversal_permutation(&self) -> Vec<usize> {
        let rev = self.reversed();
        (0..self.dim())
            .map(|i| {
                let mut pos = self.unravel(i);
                pos.reverse();
                rev.ravel(&pos)
            })
            .collect()
    }
}

impl fmt::Display for SpaceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "C");
        }
        let parts: Vec<String> = self.factors.iter().map(|k| k.to_string()).collect();
        write!(f, "{}", parts.join("⊗"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dims_and_labels() {
        let s = SpaceSpec::new(vec![FactorKind::IntTrunc(2), FactorKind::NatTrunc(3)]).unwrap();
        assert_eq!(s.dim(), 15);
        assert_eq!(s.labels(0), vec![-2, 0]);
        assert_eq!(s.labels(14), vec![2, 2]);
        assert_eq!(s.ravel(&s.unravel(11)), 11);
    }

    #[test]
    fn rejects_tiny_factor() {
        assert!(SpaceSpec::new(vec![FactorKind::NatTrunc(1)]).is_err());
    }

    #[test]
    fn reversal_is_bijective() {
        let s = SpaceSpec::new(vec![FactorKind::NatTrunc(3), FactorKind::IntTrunc(2)]).unwrap();
        let mut p = s.reversal_permutation();
        p.sort_unstable();
        assert_eq!(p, (0..s.dim()).collect::<Vec<_>>());
    }
}
