//! The quotient map `σ_{k+1} = 1^{⊗k} ⊗ σ` with `σ(S) = 1`.

use serde::Serialize;

use super::SpheresError;
use crate::fock::{format_expr, Mode, OperatorExpr, Word};
use crate::qgroup::{eta, CircleMode, GeneratorAssignment};

/// `σ` on one half-line word: shifts go to 1, compact diagonals to 0 and
/// every other diagonal to its limit at infinity.
fn sigma_word(mode: Mode, w: &Word) -> Result<f64, SpheresError> {
    if mode != Mode::Nat {
        return Err(SpheresError::SigmaUndefined("a bilateral factor".into()));
    }
    let d = w.diag();
    if d.proj().is_some() {
        return Ok(0.0);
    }
    if let Some((a, _)) = d.qpow() {
        if a < 0 {
            return Err(SpheresError::SigmaUndefined(format!("q^{{{a}N}}")));
        }
        return Ok(0.0);
    }
    if let Some((a, b)) = d.roots().find(|&(a, _)| a < 0) {
        return Err(SpheresError::SigmaUndefined(format!("sqrt(1-q^{{{a}N{b:+}}})")));
    }
    Ok(1.0)
}

/// Applies `σ` to the last tensor factor.
pub fn sigma_last(e: &OperatorExpr) -> Result<OperatorExpr, SpheresError> {
    let last = e.n_factors().checked_sub(1).ok_or(SpheresError::Empty)?;
    let mut failure = None;
    let out = e.contract_factor(last, |mode, w| match sigma_word(mode, w) {
        Ok(v) => Ok(OperatorExpr::scalar(v.into())),
        Err(err) => {
            failure = Some(err);
            Ok(OperatorExpr::scalar(0.0.into()))
        }
    })?;
    match failure {
        Some(err) => Err(err),
        None => Ok(out),
    }
}

/// Per-generator outcome of comparing `σ_{k+1}(y_l^{k+1})` with `y_l^k`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SigmaCheck {
    pub k: usize,
    pub l: usize,
    pub exact: bool,
    /// Largest coefficient difference of the normal forms.
    pub deviation: f64,
    pub image: String,
    pub expected: String,
}

/// Symbol-level check of `σ_{k+1}(y_l^{k+1}) = y_l^k` for all `l`.
pub fn sigma_check(k: usize, n: usize, assignment: &GeneratorAssignment) -> Result<Vec<SigmaCheck>, SpheresError> {
    if k == 0 || k >= 2 * n {
        return Err(SpheresError::KOutOfRange { k, max: 2 * n - 1 });
    }
    let upper = eta(k + 1, n, CircleMode::Bilateral, assignment)?;
    let lower = eta(k, n, CircleMode::Bilateral, assignment)?;
    upper
        .iter()
        .zip(&lower)
        .enumerate()
        .map(|(i, (u, y))| {
            let s = sigma_last(u)?;
            let deviation = s.symbol_distance(y)?;
            Ok(SigmaCheck {
                k,
                l: i + 1,
                exact: deviation == 0.0,
                deviation,
                image: format_expr(&s),
                expected: format_expr(y),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{DiagFn, Primitive};
    use num_complex::Complex64 as C64;

    #[test]
    fn sigma_values() {
        let w =
            OperatorExpr::word(Mode::Nat, &[Primitive::Diag(DiagFn::Sq1m { slope: 2, offset: 0 }), Primitive::CoShift]);
        assert_eq!(sigma_last(&w).unwrap(), OperatorExpr::scalar(C64::new(1.0, 0.0)));
        let p = OperatorExpr::word(Mode::Nat, &[Primitive::Proj(3)]);
        assert!(sigma_last(&p).unwrap().is_zero());
        let qn = OperatorExpr::word(Mode::Nat, &[Primitive::Diag(DiagFn::QPow { slope: 1, offset: 0 })]);
        assert!(sigma_last(&qn).unwrap().is_zero());
        let bad = OperatorExpr::word(Mode::Nat, &[Primitive::Diag(DiagFn::QPow { slope: -1, offset: 0 })]);
        assert!(sigma_last(&bad).is_err());
    }
}
