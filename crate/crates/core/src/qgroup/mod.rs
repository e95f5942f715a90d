//! Representations of the quantum symplectic group on Fock spaces.
//!
//! A [`RepMap`] sends every entry `u^i_j` of the fundamental matrix to an
//! [`OperatorExpr`]. Representations are multiplied by the coproduct
//! `(φ * ψ)(u^i_j) = Σ_k φ(u^i_k) ⊗ ψ(u^k_j)`.

mod assignment;

pub use assignment::{
    assignment_search, sign_gauge, AssignmentCandidate, AssignmentSearch, GeneratorAssignment, GeneratorEntry,
};

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use std::fmt;
use thiserror::Error;

use crate::fock::{DiagFn, FockError, Mode, OperatorExpr, Primitive};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QgroupError {
    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },
    #[error("rank must be at least 1")]
    ZeroRank,
    #[error("ranks differ: {0} vs {1}")]
    RankMismatch(usize, usize),
    #[error("torus point has {found} coordinates, expected {expected}")]
    TorusLength { expected: usize, found: usize },
    #[error("torus coordinate {0} is not unimodular")]
    NotUnimodular(C64),
    #[error("assignment has {found} generators, expected {expected}")]
    AssignmentLength { expected: usize, found: usize },
    #[error("no generator assignment meets the threshold; best residual {best:e}")]
    NoAssignment { best: f64 },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error(transparent)]
    Relation(Box<crate::relations::RelationError>),
}

/// The fundamental-matrix entry `u^row_col`, 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MatrixSymbol {
    pub row: usize,
    pub col: usize,
}

impl MatrixSymbol {
    pub fn new(row: usize, col: usize, n: usize) -> Result<Self, QgroupError> {
        for index in [row, col] {
            if index == 0 || index > 2 * n {
                return Err(QgroupError::IndexOutOfRange { index, max: 2 * n });
            }
        }
        Ok(MatrixSymbol { row, col })
    }
}

impl fmt::Display for MatrixSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "u^{}_{}", self.row, self.col)
    }
}

/// A representation given by its values on the fundamental matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct RepMap {
    n: usize,
    modes: Vec<Mode>,
    table: Vec<OperatorExpr>,
}

impl RepMap {
    fn from_fn<F>(n: usize, modes: Vec<Mode>, f: F) -> RepMap
    where
        F: Fn(usize, usize) -> OperatorExpr + Sync,
    {
        let dim = 2 * n;
        let table = (0..dim * dim).into_par_iter().map(|idx| f(idx / dim + 1, idx % dim + 1)).collect();
        RepMap { n, modes, table }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Tensor factors of the representation space; empty for characters.
    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn get(&self, sym: MatrixSymbol) -> &OperatorExpr {
        &self.table[(sym.row - 1) * 2 * self.n + sym.col - 1]
    }

    pub fn entry(&self, row: usize, col: usize) -> &OperatorExpr {
        self.get(MatrixSymbol { row, col })
    }

    /// TSV lines `row<TAB>col<TAB>expression`, row-major.
    pub fn dump_tsv(&self) -> String {
        let mut out = String::from("row\tcol\texpr\n");
        for r in 1..=2 * self.n {
            for c in 1..=2 * self.n {
                out.push_str(&format!("{r}\t{c}\t{}\n", crate::fock::format_expr(self.entry(r, c))));
            }
        }
        out
    }
}

fn check_index(i: usize, max: usize) -> Result<(), QgroupError> {
    if i == 0 || i > max {
        Err(QgroupError::IndexOutOfRange { index: i, max })
    } else {
        Ok(())
    }
}

fn qpow(slope: i32, offset: i32) -> Primitive {
    Primitive::Diag(DiagFn::QPow { slope, offset })
}

fn sq1m(slope: i32, offset: i32) -> Primitive {
    Primitive::Diag(DiagFn::Sq1m { slope, offset })
}

/// The elementary representation `π_{s_i}` of rank `n` on one half-line factor.
pub fn elementary_rep(i: usize, n: usize) -> Result<RepMap, QgroupError> {
    if n == 0 {
        return Err(QgroupError::ZeroRank);
    }
    check_index(i, n)?;
    let w = |prims: &[Primitive]| OperatorExpr::word(Mode::Nat, prims);
    let neg = |e: OperatorExpr| e.scale(C64::new(-1.0, 0.0));
    let m = 2 * n;
    Ok(RepMap::from_fn(n, vec![Mode::Nat], |k, l| {
        if i < n {
            match (k, l) {
                _ if (k, l) == (i, i) || (k, l) == (m - i, m - i) => w(&[sq1m(2, 2), Primitive::Shift]),
                _ if (k, l) == (i + 1, i + 1) || (k, l) == (m - i + 1, m - i + 1) => {
                    w(&[Primitive::CoShift, sq1m(2, 2)])
                }
                _ if (k, l) == (i, i + 1) => neg(w(&[qpow(1, 1)])),
                _ if (k, l) == (i + 1, i) => w(&[qpow(1, 0)]),
                _ if (k, l) == (m - i, m - i + 1) => w(&[qpow(1, 1)]),
                _ if (k, l) == (m - i + 1, m - i) => neg(w(&[qpow(1, 0)])),
                _ if k == l => OperatorExpr::identity(&[Mode::Nat]),
                _ => OperatorExpr::zero(&[Mode::Nat]),
            }
        } else {
            match (k, l) {
                _ if (k, l) == (n, n) => w(&[sq1m(4, 4), Primitive::Shift]),
                _ if (k, l) == (n + 1, n + 1) => w(&[Primitive::CoShift, sq1m(4, 4)]),
                _ if (k, l) == (n, n + 1) => neg(w(&[qpow(2, 2)])),
                _ if (k, l) == (n + 1, n) => w(&[qpow(2, 0)]),
                _ if k == l => OperatorExpr::identity(&[Mode::Nat]),
                _ => OperatorExpr::zero(&[Mode::Nat]),
            }
        }
    }))
}

/// The character `τ_t` for `t ∈ T^n`.
pub fn torus_char(t: &[C64], n: usize) -> Result<RepMap, QgroupError> {
    if n == 0 {
        return Err(QgroupError::ZeroRank);
    }
    if t.len() != n {
        return Err(QgroupError::TorusLength { expected: n, found: t.len() });
    }
    if let Some(&bad) = t.iter().find(|z| (z.norm() - 1.0).abs() > 1e-12) {
        return Err(QgroupError::NotUnimodular(bad));
    }
    Ok(RepMap::from_fn(n, Vec::new(), |i, j| {
        let v = if i != j {
            C64::new(0.0, 0.0)
        } else if i <= n {
            t[i - 1].conj()
        } else {
            t[2 * n - i]
        };
        OperatorExpr::scalar(v)
    }))
}

/// How the circle coordinate `t` of `η_{ω_k}` is realized.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CircleMode {
    /// A fixed point `t0` of the circle, substituted as a scalar.
    Sampled(C64),
    /// The bilateral shift `e_n ↦ e_{n+1}` on a leading `ℓ²(ℤ)` factor.
    Bilateral,
}

/// `τ_{(t,1,…,1)}` with `t` realized according to `mode`.
pub fn circle_rep(n: usize, mode: CircleMode) -> Result<RepMap, QgroupError> {
    match mode {
        CircleMode::Sampled(t0) => {
            let mut t = vec![C64::new(1.0, 0.0); n];
            if n > 0 {
                t[0] = t0;
            }
            torus_char(&t, n)
        }
        CircleMode::Bilateral => {
            if n == 0 {
                return Err(QgroupError::ZeroRank);
            }
            let z = [Mode::Int];
            Ok(RepMap::from_fn(n, z.to_vec(), |i, j| {
                if i != j {
                    OperatorExpr::zero(&z)
                } else if i == 1 {
                    OperatorExpr::word(Mode::Int, &[Primitive::Shift])
                } else if i == 2 * n {
                    OperatorExpr::word(Mode::Int, &[Primitive::CoShift])
                } else {
                    OperatorExpr::identity(&z)
                }
            }))
        }
    }
}

/// `φ * ψ`, acting on the concatenated factors.
pub fn convolve(phi: &RepMap, psi: &RepMap) -> Result<RepMap, QgroupError> {
    if phi.n != psi.n {
        return Err(QgroupError::RankMismatch(phi.n, psi.n));
    }
    let n = phi.n;
    let mut modes = phi.modes.clone();
    modes.extend_from_slice(&psi.modes);
    let zero = OperatorExpr::zero(&modes);
    Ok(RepMap::from_fn(n, modes, |i, j| {
        (1..=2 * n).fold(zero.clone(), |acc, k| {
            let a = phi.entry(i, k);
            let b = psi.entry(k, j);
            if a.is_zero() || b.is_zero() {
                acc
            } else {
                acc.add(&a.tensor(b)).expect("modes agree by construction")
            }
        })
    }))
}

/// A word in the simple reflections `s_1 … s_n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeylWord {
    pub letters: Vec<usize>,
}

impl WeylWord {
    /// `ω_k`: empty for `k = 1`, `s_1 ⋯ s_{k-1}` up to `k = n`, and
    /// `s_1 ⋯ s_{n-1} s_n s_{n-1} ⋯ s_{2n-k+1}` beyond.
    pub fn omega(k: usize, n: usize) -> Result<WeylWord, QgroupError> {
        if n == 0 {
            return Err(QgroupError::ZeroRank);
        }
        check_index(k, 2 * n)?;
        let letters = if k <= n { (1..k).collect() } else { (1..=n).chain((2 * n + 1 - k..n).rev()).collect() };
        Ok(WeylWord { letters })
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }
}

impl fmt::Display for WeylWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "I");
        }
        let parts: Vec<String> = self.letters.iter().map(|s| format!("s{s}")).collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// `π_{s_{i_1}} * ⋯ * π_{s_{i_k}}`; the empty word gives the counit.
pub fn weyl_rep(w: &WeylWord, n: usize) -> Result<RepMap, QgroupError> {
    let mut acc = torus_char(&vec![C64::new(1.0, 0.0); n], n)?;
    for &s in &w.letters {
        acc = convolve(&acc, &elementary_rep(s, n)?)?;
    }
    Ok(acc)
}

/// `τ * π_w`, convolved left to right.
pub fn word_rep(w: &WeylWord, circle: &RepMap) -> Result<RepMap, QgroupError> {
    let n = circle.n;
    let mut acc = circle.clone();
    for &s in &w.letters {
        acc = convolve(&acc, &elementary_rep(s, n)?)?;
    }
    Ok(acc)
}

/// Images `y_l^k = η_{ω_k}(z_l)`, `l = 1..2n`.
pub fn eta(
    k: usize,
    n: usize,
    circle: CircleMode,
    assignment: &GeneratorAssignment,
) -> Result<Vec<OperatorExpr>, QgroupError> {
    let table = word_rep(&WeylWord::omega(k, n)?, &circle_rep(n, circle)?)?;
    assignment.apply(&table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::format_expr;

    #[test]
    fn omega_words() {
        let w = |k, n| WeylWord::omega(k, n).unwrap().letters;
        assert!(w(1, 3).is_empty());
        assert_eq!(w(3, 3), vec![1, 2]);
        assert_eq!(w(4, 3), vec![1, 2, 3]);
        assert_eq!(w(6, 3), vec![1, 2, 3, 2, 1]);
        assert_eq!(w(2, 1), vec![1]);
        for n in 1..5 {
            for k in 1..=2 * n {
                assert_eq!(w(k, n).len(), k - 1);
            }
        }
        assert!(WeylWord::omega(7, 3).is_err());
    }

    #[test]
    fn elementary_rep_entries() {
        let p = elementary_rep(2, 2).unwrap();
        assert_eq!(format_expr(p.entry(2, 2)), "sqrt(1-q^{4N+4})@1 * S@1");
        assert_eq!(format_expr(p.entry(3, 3)), "sqrt(1-q^{4N})@1 * S*@1");
        assert_eq!(format_expr(p.entry(2, 3)), "-1 * q^{2} * q^{2N}@1");
        assert_eq!(format_expr(p.entry(3, 2)), "q^{2N}@1");
        let p = elementary_rep(1, 2).unwrap();
        assert_eq!(format_expr(p.entry(2, 1)), "q^{N}@1");
        assert!(p.entry(1, 3).is_zero());
        assert!(elementary_rep(3, 2).is_err());
    }

    #[test]
    fn torus_values() {
        let i = C64::new(0.0, 1.0);
        let tau = torus_char(&[i, C64::new(1.0, 0.0)], 2).unwrap();
        assert_eq!(*tau.entry(1, 1), OperatorExpr::scalar(-i));
        assert_eq!(*tau.entry(4, 4), OperatorExpr::scalar(i));
        assert!(torus_char(&[C64::new(2.0, 0.0)], 1).is_err());
    }

    #[test]
    fn unit_character_is_neutral() {
        let one = torus_char(&[C64::new(1.0, 0.0); 2], 2).unwrap();
        let p = elementary_rep(1, 2).unwrap();
        assert_eq!(convolve(&one, &p).unwrap(), p);
    }

    #[test]
    fn character_scales_first_row() {
        let t1 = C64::new(0.6, 0.8);
        let tau = torus_char(&[t1, C64::new(1.0, 0.0)], 2).unwrap();
        let c = convolve(&tau, &elementary_rep(1, 2).unwrap()).unwrap();
        let expected = OperatorExpr::word(Mode::Nat, &[sq1m(2, 2), Primitive::Shift]).scale(t1.conj());
        assert!(c.entry(1, 1).symbol_distance(&expected).unwrap() < 1e-15);
    }
}
