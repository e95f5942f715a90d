//! Identifying the generators `z_j` with entries of the fundamental matrix.
//!
//! An assignment sends `z_j` to `±u^r_c` or `±(u^r_c)*` with `r ∈ {1, 2n}`.
//! The structural part (row, adjoint, column order) is chosen by residuals
//! of the parameter-free relations; the signs are fixed by [`sign_gauge`].

use num_complex::Complex64 as C64;
use serde::Serialize;
use std::fmt;
use std::str::FromStr;

use super::{eta, CircleMode, MatrixSymbol, QgroupError, RepMap};
use crate::fock::OperatorExpr;
use crate::relations::{build_presentation, verify, Family, Generators, PresentationParams};

/// `z_j ↦ sign · u^row_col` (adjointed when `starred`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GeneratorEntry {
    pub symbol: MatrixSymbol,
    pub starred: bool,
    pub sign: i8,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratorAssignment {
    pub entries: Vec<GeneratorEntry>,
}

impl GeneratorAssignment {
    /// Row `row`, columns in order (`reversed`: `z_j ↦ u^row_{2n+1-j}`),
    /// all signs `+`.
    pub fn structural(n: usize, row: usize, starred: bool, reversed: bool) -> GeneratorAssignment {
        let m = 2 * n;
        let entries = (1..=m)
            .map(|j| GeneratorEntry {
                symbol: MatrixSymbol { row, col: if reversed { m + 1 - j } else { j } },
                starred,
                sign: 1,
            })
            .collect();
        GeneratorAssignment { entries }
    }

    /// `z_j = s_j u^{2n}_{2n+1-j}` with the gauge-fixed signs.
    pub fn default_for(n: usize) -> Result<GeneratorAssignment, QgroupError> {
        let base = GeneratorAssignment::structural(n, 2 * n, false, true);
        let signs = sign_gauge(n, &base)?;
        Ok(base.with_signs(&signs))
    }

    pub fn with_signs(mut self, signs: &[i8]) -> GeneratorAssignment {
        for (e, &s) in self.entries.iter_mut().zip(signs) {
            e.sign = s;
        }
        self
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Images of `z_1 … z_{2n}` under the representation `table`.
    pub fn apply(&self, table: &RepMap) -> Result<Vec<OperatorExpr>, QgroupError> {
        let m = 2 * table.n();
        if self.entries.len() != m {
            return Err(QgroupError::AssignmentLength { expected: m, found: self.entries.len() });
        }
        self.entries
            .iter()
            .map(|e| {
                MatrixSymbol::new(e.symbol.row, e.symbol.col, table.n())?;
                let x = table.get(e.symbol);
                let x = if e.starred { x.adjoint() } else { x.clone() };
                Ok(if e.sign < 0 { x.scale(C64::new(-1.0, 0.0)) } else { x })
            })
            .collect()
    }

    /// `η_{t,I}(z_j) = t δ_{1j}` on a generic point of the circle.
    pub fn satisfies_k1(&self, n: usize) -> Result<bool, QgroupError> {
        let t = C64::from_polar(1.0, 0.7);
        let y = eta(1, n, CircleMode::Sampled(t), self)?;
        Ok(y.iter().enumerate().all(|(j, e)| {
            let want = if j == 0 { OperatorExpr::scalar(t) } else { OperatorExpr::scalar(C64::new(0.0, 0.0)) };
            e.symbol_distance(&want).map(|d| d < 1e-14).unwrap_or(false)
        }))
    }
}

impl fmt::Display for GeneratorAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .entries
            .iter()
            .enumerate()
            .map(|(j, e)| {
                format!(
                    "z{}={}{}{}",
                    j + 1,
                    if e.sign < 0 { "-" } else { "" },
                    e.symbol,
                    if e.starred { "*" } else { "" }
                )
            })
            .collect();
        write!(f, "{}", parts.join(";"))
    }
}

impl FromStr for GeneratorAssignment {
    type Err = QgroupError;

    /// Parses `z1=u^4_4;z2=-u^4_3;z3=u^1_2*;…`; entries must be listed in order.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |msg: &str| QgroupError::Parse(format!("{msg} in `{s}`"));
        let mut entries = Vec::new();
        for (idx, part) in s.split(';').map(str::trim).filter(|p| !p.is_empty()).enumerate() {
            let (lhs, rhs) = part.split_once('=').ok_or_else(|| bad("missing `=`"))?;
            if lhs.trim() != format!("z{}", idx + 1) {
                return Err(bad("generators out of order"));
            }
            let mut rhs = rhs.trim();
            let sign = if let Some(r) = rhs.strip_prefix('-') {
                rhs = r;
                -1
            } else {
                1
            };
            let starred = rhs.ends_with('*');
            let rhs = rhs.trim_end_matches('*');
            let body = rhs.strip_prefix("u^").ok_or_else(|| bad("expected `u^r_c`"))?;
            let (r, c) = body.split_once('_').ok_or_else(|| bad("expected `u^r_c`"))?;
            let row = r.parse().map_err(|_| bad("bad row"))?;
            let col = c.parse().map_err(|_| bad("bad column"))?;
            if row == 0 || col == 0 {
                return Err(bad("indices are 1-based"));
            }
            entries.push(GeneratorEntry { symbol: MatrixSymbol { row, col }, starred, sign });
        }
        if entries.is_empty() || entries.len() % 2 != 0 {
            return Err(bad("need 2n entries"));
        }
        let m = entries.len();
        if entries.iter().any(|e| e.symbol.row > m || e.symbol.col > m) {
            return Err(bad("index exceeds 2n"));
        }
        Ok(GeneratorAssignment { entries })
    }
}

/// Signs `s_1 … s_{2n}` for `base`.
///
/// `s_1 = +1` and `s_k = s_{k'}`; each pair `{k, k'}` with `k ≥ 2` takes the
/// sign making most of the leading coefficients of `y_k^k`, `y_{k'}^{k'}`
/// positive, `+` on ties.
pub fn sign_gauge(n: usize, base: &GeneratorAssignment) -> Result<Vec<i8>, QgroupError> {
    let m = 2 * n;
    let unsigned = base.clone().with_signs(&vec![1; m]);
    let lead = |k: usize| -> Result<Option<f64>, QgroupError> {
        let y = eta(k, n, CircleMode::Bilateral, &unsigned)?;
        let c = y[k - 1].terms().next().map(|(_, c)| c.re);
        Ok(c)
    };
    let mut signs = vec![1i8; m];
    for k in 2..=n {
        let kp = m + 1 - k;
        let mut votes = 0i32;
        for idx in [k, kp] {
            if idx < m {
                match lead(idx)? {
                    Some(c) if c > 0.0 => votes += 1,
                    Some(c) if c < 0.0 => votes -= 1,
                    _ => {}
                }
            }
        }
        let s = if votes < 0 { -1 } else { 1 };
        signs[k - 1] = s;
        signs[kp - 1] = s;
    }
    Ok(signs)
}

/// One structural candidate with its residual summary.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AssignmentCandidate {
    pub assignment: String,
    pub row: usize,
    pub starred: bool,
    pub reversed: bool,
    /// Sum of interior residuals over the parameter-free relations.
    pub total_residual: f64,
    pub max_residual: f64,
    pub k1_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AssignmentSearch {
    pub n: usize,
    pub d: usize,
    pub q: f64,
    pub band: usize,
    /// Sorted by total residual; rejected candidates (`k1_ok = false`) last.
    pub candidates: Vec<AssignmentCandidate>,
    pub winner: String,
    pub winner_residual: f64,
    pub runner_up_residual: f64,
}

/// Exhaustive search over rows `{1, 2n}`, adjoint or not, and column order.
pub fn assignment_search(
    n: usize,
    d: usize,
    q: f64,
    band: usize,
    threshold: f64,
) -> Result<AssignmentSearch, QgroupError> {
    if n == 0 {
        return Err(QgroupError::ZeroRank);
    }
    let rels: Vec<_> =
        build_presentation(n).into_iter().filter(|r| Family::PARAMETER_FREE.contains(&r.family)).collect();
    // Parameter-free families ignore rho and eps.
    let params = PresentationParams::calibrated(n);
    let mut candidates = Vec::new();
    for row in [1, 2 * n] {
        for starred in [false, true] {
            for reversed in [false, true] {
                let a = GeneratorAssignment::structural(n, row, starred, reversed);
                let k1_ok = a.satisfies_k1(n)?;
                let gens = Generators::new(eta(2 * n, n, CircleMode::Bilateral, &a)?)
                    .map_err(|e| QgroupError::Relation(Box::new(e)))?;
                let res = verify(&rels, &gens, &params, q, d, band).map_err(|e| QgroupError::Relation(Box::new(e)))?;
                let total = res.iter().map(|r| r.value).sum();
                let max = res.iter().map(|r| r.value).fold(0.0, f64::max);
                candidates.push(AssignmentCandidate {
                    assignment: a.to_string(),
                    row,
                    starred,
                    reversed,
                    total_residual: total,
                    max_residual: max,
                    k1_ok,
                });
            }
        }
    }
    candidates.sort_by(|a, b| b.k1_ok.cmp(&a.k1_ok).then(a.total_residual.total_cmp(&b.total_residual)));
    let best = &candidates[0];
    if !best.k1_ok || best.total_residual > threshold {
        return Err(QgroupError::NoAssignment { best: best.total_residual });
    }
    let winner = GeneratorAssignment::structural(n, best.row, best.starred, best.reversed);
    let signs = sign_gauge(n, &winner)?;
    let runner_up_residual = candidates.get(1).map(|c| c.total_residual).unwrap_or(f64::INFINITY);
    Ok(AssignmentSearch {
        n,
        d,
        q,
        band,
        winner: winner.with_signs(&signs).to_string(),
        winner_residual: best.total_residual,
        runner_up_residual,
        candidates,
    })
}
