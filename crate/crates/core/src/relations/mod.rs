//! The defining relations of the quaternion sphere algebra.
//!
//! Each relation is stored as a single noncommutative polynomial `P` in the
//! letters `z_i`, `z_i*`, meaning `P = 0`. Coefficients stay symbolic in
//! `q`, `ρ` and `ε` until a [`PresentationParams`] instantiates them.

mod calibrate;
mod dsl;
mod qzero;
mod residual;

pub use calibrate::{calibrate_rho_eps, Calibration, CalibrationClass};
pub use dsl::{format_relation, parse_relation};
pub use qzero::{compare_q0, q_zero_presentation, Q0Comparison, RelationCheck};
pub use residual::{eval_residual, eval_residual_matrix, relation_expr, verify, Generators, RelationResidual};

use serde::Serialize;
use std::fmt;
use thiserror::Error;

use crate::fock::FockError;
use crate::qgroup::QgroupError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RelationError {
    #[error("no image for generator z{0}")]
    MissingImage(usize),
    #[error("parameters for rank {n} need {expected} entries, got {found}")]
    ParamLength { n: usize, expected: usize, found: usize },
    #[error("eps values must be +1 or -1")]
    BadEps,
    #[error("coefficient is singular at q = 0: {0}")]
    SingularAtZero(String),
    #[error("no (rho, eps) class has all residuals below {threshold:e}")]
    NoCalibration { threshold: f64 },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error(transparent)]
    Qgroup(#[from] QgroupError),
}

/// The eight relation families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Family {
    C1,
    C2,
    C3,
    C4,
    C5,
    C6,
    C7,
    C8,
}

impl Family {
    pub const ALL: [Family; 8] =
        [Family::C1, Family::C2, Family::C3, Family::C4, Family::C5, Family::C6, Family::C7, Family::C8];

    /// Families whose coefficients do not involve `ρ` or `ε`.
    pub const PARAMETER_FREE: [Family; 6] = [Family::C1, Family::C2, Family::C3, Family::C4, Family::C6, Family::C8];

    /// Names of the index slots in the DSL.
    pub fn index_names(&self) -> &'static [&'static str] {
        match self {
            Family::C1 | Family::C4 | Family::C5 => &["i", "j"],
            Family::C8 => &[],
            _ => &["i"],
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = Family::ALL.iter().position(|x| x == self).unwrap() + 1;
        write!(f, "c{k}")
    }
}

impl std::str::FromStr for Family {
    type Err = RelationError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let k: usize = s
            .strip_prefix('c')
            .and_then(|x| x.parse().ok())
            .filter(|k| (1..=8).contains(k))
            .ok_or_else(|| RelationError::Parse(format!("unknown family `{s}`")))?;
        Ok(Family::ALL[k - 1])
    }
}

/// `z_index` or its adjoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Letter {
    pub index: usize,
    pub star: bool,
}

impl Letter {
    pub fn z(index: usize) -> Letter {
        Letter { index, star: false }
    }

    pub fn zs(index: usize) -> Letter {
        Letter { index, star: true }
    }
}

/// `num · Π ε_e · q^{qexp + Σ ρ_r} · (1 - q²)^one_minus_q2`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Coeff {
    pub num: i64,
    pub qexp: i32,
    /// Indices whose `ρ` enters the exponent, with multiplicity, sorted.
    pub rho: Vec<usize>,
    /// Indices whose `ε` multiplies, sorted.
    pub eps: Vec<usize>,
    pub one_minus_q2: u32,
}

impl Coeff {
    pub fn int(num: i64) -> Coeff {
        Coeff { num, ..Coeff::default() }
    }

    pub fn negated(mut self) -> Coeff {
        self.num = -self.num;
        self
    }

    pub fn q(mut self, e: i32) -> Coeff {
        self.qexp += e;
        self
    }

    pub fn one_minus_q2(mut self) -> Coeff {
        self.one_minus_q2 += 1;
        self
    }

    pub fn rho(mut self, idx: &[usize]) -> Coeff {
        self.rho.extend_from_slice(idx);
        self.rho.sort_unstable();
        self
    }

    pub fn eps(mut self, idx: &[usize]) -> Coeff {
        self.eps.extend_from_slice(idx);
        self.eps.sort_unstable();
        self
    }

    pub fn is_parameter_free(&self) -> bool {
        self.rho.is_empty() && self.eps.is_empty()
    }

    /// Laurent polynomial in `q` as `(coefficient, exponent)` pairs.
    pub fn instantiate(&self, p: &PresentationParams) -> Vec<(f64, i32)> {
        let sign: i64 = self.eps.iter().map(|&e| p.eps[e - 1] as i64).product();
        let e0 = self.qexp + self.rho.iter().map(|&r| p.rho[r - 1]).sum::<i32>();
        let c0 = (self.num * sign) as f64;
        // (1 - q^2)^m by the binomial theorem.
        let m = self.one_minus_q2;
        let mut binom = 1.0;
        let mut out = Vec::with_capacity(m as usize + 1);
        for j in 0..=m {
            let sgn = if j % 2 == 0 { 1.0 } else { -1.0 };
            out.push((c0 * sgn * binom, e0 + 2 * j as i32));
            binom = binom * (m - j) as f64 / (j + 1) as f64;
        }
        out
    }

    /// Numeric value at `q`.
    pub fn value(&self, p: &PresentationParams, q: f64) -> f64 {
        self.instantiate(p).iter().map(|&(c, e)| c * q.powi(e)).sum()
    }
}

/// A formal sum of coefficient-weighted words.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct NCPoly {
    pub terms: Vec<(Coeff, Vec<Letter>)>,
}

impl NCPoly {
    pub fn push(&mut self, c: Coeff, word: &[Letter]) {
        self.terms.push((c, word.to_vec()));
    }

    pub fn letters(&self) -> impl Iterator<Item = Letter> + '_ {
        self.terms.iter().flat_map(|(_, w)| w.iter().copied())
    }
}

/// A single relation `poly = 0` with its family and index tuple.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relation {
    pub family: Family,
    pub indices: Vec<usize>,
    pub poly: NCPoly,
}

impl Relation {
    /// Short identifier such as `c5[1,2]`.
    pub fn id(&self) -> String {
        if self.indices.is_empty() {
            self.family.to_string()
        } else {
            let parts: Vec<String> = self.indices.iter().map(|i| i.to_string()).collect();
            format!("{}[{}]", self.family, parts.join(","))
        }
    }
}

/// Rank together with the `ρ` and `ε` tables.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PresentationParams {
    pub n: usize,
    pub rho: Vec<i32>,
    pub eps: Vec<i8>,
}

impl PresentationParams {
    pub fn new(n: usize, rho: Vec<i32>, eps: Vec<i8>) -> Result<Self, RelationError> {
        for len in [rho.len(), eps.len()] {
            if len != 2 * n {
                return Err(RelationError::ParamLength { n, expected: 2 * n, found: len });
            }
        }
        if eps.iter().any(|&e| e != 1 && e != -1) {
            return Err(RelationError::BadEps);
        }
        Ok(PresentationParams { n, rho, eps })
    }

    /// Calibrated tables: `ρ_i = n + 1 - i` for `i ≤ n`, `ρ_i = n - i` for
    /// `n < i < 2n`, and `ε_i = +1` for `i ≤ n`, `-1` for `n < i < 2n`. The
    /// entries at index `2n` never occur in a relation and are set to
    /// `0` and `+1`.
    pub fn calibrated(n: usize) -> PresentationParams {
        let rho = (1..=2 * n)
            .map(|i| {
                if i == 2 * n {
                    0
                } else if i <= n {
                    (n + 1 - i) as i32
                } else {
                    n as i32 - i as i32
                }
            })
            .collect();
        let eps = (1..=2 * n).map(|i| if i <= n || i == 2 * n { 1 } else { -1 }).collect();
        PresentationParams { n, rho, eps }
    }

    /// `i' = 2n + 1 - i`.
    pub fn prime(&self, i: usize) -> usize {
        2 * self.n + 1 - i
    }
}

/// All relations of the presentation, family by family.
pub fn build_presentation(n: usize) -> Vec<Relation> {
    let m = 2 * n;
    let pr = |i: usize| m + 1 - i;
    let (z, zs) = (Letter::z, Letter::zs);
    let one = || Coeff::int(1);
    let mut out = Vec::new();
    let mut rel = |family, indices: Vec<usize>, terms: Vec<(Coeff, Vec<Letter>)>| {
        out.push(Relation { family, indices, poly: NCPoly { terms } })
    };
    for i in 1..=m {
        for j in 1..i {
            if i + j != m + 1 {
                rel(Family::C1, vec![i, j], vec![(one(), vec![z(i), z(j)]), (one().negated().q(1), vec![z(j), z(i)])]);
            }
        }
    }
    for i in n + 1..=m {
        let mut t = vec![(one(), vec![z(i), z(pr(i))]), (one().negated().q(2), vec![z(pr(i)), z(i)])];
        for k in i + 1..=m {
            t.push((one().one_minus_q2().q(i as i32 - k as i32), vec![z(k), z(pr(k))]));
        }
        rel(Family::C2, vec![i], t);
    }
    for i in 1..=m {
        rel(Family::C3, vec![i], vec![(one(), vec![zs(i), z(pr(i))]), (one().negated().q(2), vec![z(pr(i)), zs(i)])]);
    }
    for i in 1..=m {
        for j in 1..=m {
            if i != j && i + j > m + 1 {
                rel(
                    Family::C4,
                    vec![i, j],
                    vec![(one(), vec![zs(i), z(j)]), (one().negated().q(1), vec![z(j), zs(i)])],
                );
            }
        }
    }
    for i in 1..=m {
        for j in 1..=m {
            if i != j && i + j < m + 1 {
                rel(
                    Family::C5,
                    vec![i, j],
                    vec![
                        (one(), vec![zs(i), z(j)]),
                        (one().negated().q(1), vec![z(j), zs(i)]),
                        (one().negated().one_minus_q2().eps(&[i, j]).rho(&[i, j]), vec![z(pr(i)), zs(pr(j))]),
                    ],
                );
            }
        }
    }
    for (family, range) in [(Family::C6, n + 1..=m), (Family::C7, 1..=n)] {
        for i in range {
            let mut t = vec![(one(), vec![zs(i), z(i)]), (one().negated(), vec![z(i), zs(i)])];
            if family == Family::C7 {
                t.push((one().negated().one_minus_q2().rho(&[i, i]), vec![z(pr(i)), zs(pr(i))]));
            }
            for k in i + 1..=m {
                t.push((one().negated().one_minus_q2(), vec![z(k), zs(k)]));
            }
            rel(family, vec![i], t);
        }
    }
    let mut t: Vec<(Coeff, Vec<Letter>)> = (1..=m).map(|i| (one(), vec![z(i), zs(i)])).collect();
    t.push((one().negated(), Vec::new()));
    rel(Family::C8, Vec::new(), t);
    // Families are emitted in order c1, c2, …; keep that order stable.
    out.sort_by_key(|r| r.family);
    out
}
