//! Finite-scale probes of the homogeneity of `0 → C(T)⊗K → C_{k+1} → C_k → 0`.
//!
//! For a point `t0` of the circle the lift `y_k^{k+1}(t0)` of `y_k^k` is
//! materialized, and the norm of `y y*` compressed to the tail of the last
//! factor estimates its essential norm.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use super::SpheresError;
use crate::fock::{format_expr, materialize, FactorKind, Mode, OperatorExpr, Primitive, SpaceSpec};
use crate::qgroup::{eta, CircleMode, GeneratorAssignment};

/// Tail-norm estimates for one sample point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeCurve {
    pub t0: [f64; 2],
    pub grid: Vec<usize>,
    pub values: Vec<f64>,
    pub monotone: bool,
    /// Last two grid values differ by less than `1e-3`.
    pub converged: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HomogeneityReport {
    pub k: usize,
    pub n: usize,
    pub q: f64,
    pub d: usize,
    /// Canonical text of the lift at the first sample point.
    pub lift: String,
    pub target: [f64; 2],
    pub curves: Vec<ProbeCurve>,
    /// Tail norm of `p^{⊗(k-1)} ⊗ S*` at the largest grid point.
    pub shift_probe: f64,
    pub shift_pass: bool,
    pub pass: bool,
}

fn is_monotone(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12) + 1e-15)
}

pub fn homogeneity_probe(
    k: usize,
    n: usize,
    q: f64,
    d: usize,
    t0s: &[C64],
    grid: &[usize],
    assignment: &GeneratorAssignment,
) -> Result<HomogeneityReport, SpheresError> {
    if k == 0 || k >= 2 * n {
        return Err(SpheresError::KOutOfRange { k, max: 2 * n - 1 });
    }
    let target = [0.95, 1.0];
    let space = SpaceSpec::new(vec![FactorKind::NatTrunc(d); k])?;
    let curves: Result<Vec<(String, ProbeCurve)>, SpheresError> = t0s
        .par_iter()
        .map(|&t0| {
            let lift = eta(k + 1, n, CircleMode::Sampled(t0), assignment)?[k - 1].clone();
            let yy = lift.compose(&lift.adjoint())?;
            let mat = materialize(&yy, &space, q)?;
            let values: Result<Vec<f64>, SpheresError> =
                grid.par_iter().map(|&m| Ok(mat.ess_norm_est(m, &[k - 1])?)).collect();
            let values = values?;
            let monotone = is_monotone(&values);
            let converged = match values.len() {
                0 => false,
                1 => true,
                l => (values[l - 1] - values[l - 2]).abs() < 1e-3,
            };
            let last = values.last().copied().unwrap_or(0.0);
            let pass = monotone && converged && last >= target[0] && last <= target[1] + 1e-12;
            Ok((
                format_expr(&lift),
                ProbeCurve { t0: [t0.re, t0.im], grid: grid.to_vec(), values, monotone, converged, pass },
            ))
        })
        .collect();
    let curves = curves?;
    let lift = curves.first().map(|c| c.0.clone()).unwrap_or_default();
    let curves: Vec<ProbeCurve> = curves.into_iter().map(|c| c.1).collect();

    let mut parts = vec![OperatorExpr::word(Mode::Nat, &[Primitive::Proj(0)]); k - 1];
    parts.push(OperatorExpr::word(Mode::Nat, &[Primitive::CoShift]));
    let probe = parts.iter().fold(OperatorExpr::scalar(1.0.into()), |acc, e| acc.tensor(e));
    let m_top = grid.iter().copied().max().unwrap_or(0);
    let shift_probe = materialize(&probe, &space, q)?.ess_norm_est(m_top, &[k - 1])?;
    let shift_pass = shift_probe >= 0.9;
    let pass = shift_pass && !curves.is_empty() && curves.iter().all(|c| c.pass);
    Ok(HomogeneityReport { k, n, q, d, lift, target, curves, shift_probe, shift_pass, pass })
}

/// `count` equispaced points `exp(2πij/count)`.
pub fn circle_samples(count: usize) -> Vec<C64> {
    (0..count).map(|j| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / count as f64)).collect()
}
