//! The representations `ϑ_m`, the compressions `R_m = P ϑ_m(u) P` and their
//! Fredholm indices.
//!
//! `P` projects onto the basis vectors with nonnegative label in the
//! bilateral factor. Indices are computed on a ladder of truncations and
//! accepted once the counts stabilize.

mod kernel;

pub use kernel::{defect, Defect, MAX_BLOCK};

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::fock::{materialize, power, FactorKind, FockError, Mode, OperatorExpr, Primitive, SpaceSpec, TruncOp};
use crate::spheres::am_generators;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FredholmError {
    #[error("ell must be at least 1")]
    ZeroEll,
    #[error("ladder needs at least {min} strictly increasing truncations, got {found:?}")]
    BadLadder { min: usize, found: Vec<usize> },
    #[error("defect counts did not stabilize over the ladder: {0:?}")]
    NotStabilized(Vec<(usize, usize, usize)>),
    #[error("singular value {0:e} is within a factor 10 of the rank tolerance")]
    RankAmbiguity(f64),
    #[error("connected block of size {0} exceeds the dense limit")]
    BlockTooLarge(usize),
    #[error("operator does not factor through the requested restriction")]
    NotRestrictable,
    #[error(transparent)]
    Fock(#[from] FockError),
}

/// Sign relating raw indices to the pairing: `pairing(1) = 1` at `ℓ = 1`.
pub const SIGMA_GLOBAL: i64 = -1;

/// Default rank threshold.
pub const RANK_TOL: f64 = 1e-8;

/// Width of the top-edge band whose kernel vectors are discarded.
pub const EDGE_BAND: usize = 2;

pub const MIN_RUNGS: usize = 5;

/// Consecutive agreeing rungs needed at the top of the ladder.
pub const STABLE_RUNGS: usize = 3;

fn nat(prims: &[Primitive]) -> OperatorExpr {
    OperatorExpr::word(Mode::Nat, prims)
}

fn p_power(ell: usize) -> OperatorExpr {
    (0..ell).fold(OperatorExpr::scalar(C64::new(1.0, 0.0)), |acc, _| acc.tensor(&nat(&[Primitive::Proj(0)])))
}

/// `p^{⊗ℓ} ⊗ x + (1 - p^{⊗ℓ}) ⊗ 1`.
fn block_unitary(ell: usize, x: &OperatorExpr) -> OperatorExpr {
    let pp = p_power(ell);
    let mut modes = vec![Mode::Nat; ell];
    modes.extend_from_slice(x.modes());
    let one = OperatorExpr::identity(&modes);
    let one_x = OperatorExpr::identity(x.modes());
    one.add(&pp.tensor(x)).unwrap().sub(&pp.tensor(&one_x)).unwrap()
}

/// `u = p^{⊗ℓ} ⊗ t + 1 - p^{⊗ℓ} ⊗ 1` on `ℓ²(ℕ)^{⊗ℓ} ⊗ ℓ²(ℤ)`.
pub fn u_generator(ell: usize) -> Result<OperatorExpr, FredholmError> {
    theta_u(1, ell)
}

/// `ϑ_m(u)`: the bilateral factor carries `t^m`.
pub fn theta_u(m: i64, ell: usize) -> Result<OperatorExpr, FredholmError> {
    if ell == 0 {
        return Err(FredholmError::ZeroEll);
    }
    Ok(block_unitary(ell, &OperatorExpr::word(Mode::Int, &power(Primitive::CoShift, m))))
}

/// Images of the sphere generators under `ϑ_m`.
pub fn theta_images(m: i64, ell: usize) -> Result<Vec<OperatorExpr>, FredholmError> {
    if ell == 0 {
        return Err(FredholmError::ZeroEll);
    }
    let mut gens = crate::spheres::sphere_generators(ell);
    let last = gens.len() - 1;
    gens[last] = p_power(ell).tensor(&OperatorExpr::word(Mode::Int, &power(Primitive::CoShift, m)));
    Ok(gens)
}

fn theta_space(ell: usize, d: usize) -> Result<SpaceSpec, FockError> {
    let mut f = vec![FactorKind::NatTrunc(d); ell];
    f.push(FactorKind::IntTrunc(d));
    SpaceSpec::new(f)
}

fn compressed_space(ell: usize, d: usize) -> Result<SpaceSpec, FockError> {
    let mut f = vec![FactorKind::NatTrunc(d); ell];
    f.push(FactorKind::NatTrunc(d + 1));
    SpaceSpec::new(f)
}

/// Compression of `x` to the basis vectors with nonnegative label in the
/// last factor, which must be bilateral.
pub fn compress_nonnegative(x: &TruncOp) -> Result<TruncOp, FredholmError> {
    let space = x.space();
    let (last, head) = space.factors().split_last().ok_or(FredholmError::NotRestrictable)?;
    let FactorKind::IntTrunc(d) = *last else {
        return Err(FredholmError::NotRestrictable);
    };
    let mut f = head.to_vec();
    f.push(FactorKind::NatTrunc(d + 1));
    let target = SpaceSpec::new(f)?;
    let width = last.dim();
    let map = |i: usize| -> Option<usize> {
        let pos = i % width;
        (pos >= d).then(|| (i / width) * (d + 1) + pos - d)
    };
    let trip: Vec<(usize, usize, C64)> = x.entries().filter_map(|(r, c, v)| Some((map(r)?, map(c)?, v))).collect();
    Ok(TruncOp::from_triplets(target, trip))
}

/// `R_m = P ϑ_m(u) P` on `ℓ²(ℕ)^{⊗ℓ} ⊗ ℓ²(ℕ)`, truncated at `D` (the last
/// factor keeps the labels `0..=D`).
pub fn compress_rm(m: i64, ell: usize, d: usize) -> Result<TruncOp, FredholmError> {
    let x = materialize(&theta_u(m, ell)?, &theta_space(ell, d)?, 0.0)?;
    compress_nonnegative(&x)
}

/// The same operator written directly as `p^{⊗ℓ} ⊗ T_m + (1 - p^{⊗ℓ}) ⊗ 1`
/// with the Toeplitz operator `T_m` of `(S*)^m` on the half line.
pub fn rm_direct(m: i64, ell: usize, d: usize) -> Result<TruncOp, FredholmError> {
    let e = block_unitary(ell, &nat(&power(Primitive::CoShift, m)));
    Ok(materialize(&e, &compressed_space(ell, d)?, 0.0)?)
}

/// Defect counts at one truncation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Rung {
    pub d: usize,
    pub ker: usize,
    pub coker: usize,
    pub ker_discarded: usize,
    pub coker_discarded: usize,
    pub min_nonzero_sv: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IndexResult {
    pub m: i64,
    pub ell: usize,
    pub rank_tol: f64,
    pub ladder: Vec<Rung>,
    pub stabilized: bool,
    /// `ker - coker` at the top rung.
    pub index: i64,
    pub sigma_global: i64,
    /// `sigma_global · index`.
    pub pairing: i64,
    pub winding: i64,
}

fn check_ladder(ladder: &[usize]) -> Result<(), FredholmError> {
    if ladder.len() < MIN_RUNGS || ladder.windows(2).any(|w| w[1] <= w[0]) || ladder[0] < 2 {
        return Err(FredholmError::BadLadder { min: MIN_RUNGS, found: ladder.to_vec() });
    }
    Ok(())
}

/// Stabilized `ker - coker` of `build(D)` over the ladder.
pub fn ladder_index<F>(ladder: &[usize], rank_tol: f64, build: F) -> Result<(Vec<Rung>, i64), FredholmError>
where
    F: Fn(usize) -> Result<TruncOp, FredholmError> + Sync,
{
    check_ladder(ladder)?;
    let rungs: Vec<Rung> = ladder
        .par_iter()
        .map(|&d| {
            let x = build(d)?;
            let df = defect(&x, rank_tol, EDGE_BAND)?;
            Ok(Rung {
                d,
                ker: df.ker,
                coker: df.coker,
                ker_discarded: df.ker_discarded,
                coker_discarded: df.coker_discarded,
                min_nonzero_sv: df.min_nonzero_sv,
            })
        })
        .collect::<Result<_, FredholmError>>()?;
    let top = &rungs[rungs.len() - STABLE_RUNGS..];
    if top.iter().any(|r| (r.ker, r.coker) != (top[0].ker, top[0].coker)) {
        return Err(FredholmError::NotStabilized(rungs.iter().map(|r| (r.d, r.ker, r.coker)).collect()));
    }
    let index = top[0].ker as i64 - top[0].coker as i64;
    Ok((rungs, index))
}

/// Index of `R_m` and the pairing `⟨u, F_m⟩`.
pub fn index(m: i64, ell: usize, ladder: &[usize], rank_tol: f64) -> Result<IndexResult, FredholmError> {
    if ell == 0 {
        return Err(FredholmError::ZeroEll);
    }
    let (rungs, idx) = ladder_index(ladder, rank_tol, |d| compress_rm(m, ell, d))?;
    Ok(IndexResult {
        m,
        ell,
        rank_tol,
        ladder: rungs,
        stabilized: true,
        index: idx,
        sigma_global: SIGMA_GLOBAL,
        pairing: SIGMA_GLOBAL * idx,
        winding: winding_oracle(m),
    })
}

/// Raw sign from the reference case `m = 1`, `ℓ = 1`.
pub fn calibrate_sign(ladder: &[usize]) -> Result<i64, FredholmError> {
    let (_, idx) = ladder_index(ladder, RANK_TOL, |d| compress_rm(1, 1, d))?;
    Ok(idx.signum())
}

/// `ker - coker` of the Toeplitz operator of `z^m` on the half line,
/// counted from the shift: `e_n ↦ e_{n+m}` misses `e_0 … e_{m-1}` when
/// `m > 0` and kills `e_0 … e_{|m|-1}` when `m < 0`.
pub fn winding_oracle(m: i64) -> i64 {
    let killed = (0..m.unsigned_abs()).filter(|&n| (n as i64) + m < 0).count() as i64;
    let missed = (0..m.unsigned_abs()).filter(|&j| (j as i64) - m < 0).count() as i64;
    killed - missed
}

/// The last listed generator of `A_m` with the trailing bilateral
/// identity removed, completed to `p^{⊗ℓ} ⊗ (S*)^m + (1 - p^{⊗ℓ}) ⊗ 1` on
/// `ℓ²(ℕ)^{⊗(ℓ+1)}`.
pub fn am_operator(m: i64, ell: usize) -> Result<OperatorExpr, FredholmError> {
    let am = am_generators(m, ell);
    let g = am.ops.last().ok_or(FredholmError::NotRestrictable)?;
    let f = g.n_factors() - 1;
    let h = g
        .contract_factor(f, |mode, w| {
            if mode == Mode::Int && w.is_identity() {
                Ok(OperatorExpr::scalar(C64::new(1.0, 0.0)))
            } else {
                Err(FockError::NotHalfLine(f))
            }
        })
        .map_err(|_| FredholmError::NotRestrictable)?;
    let pp = p_power(ell);
    let mut modes = vec![Mode::Nat; ell + 1];
    let one = OperatorExpr::identity(&modes);
    modes.truncate(1);
    let rest = one.sub(&pp.tensor(&OperatorExpr::identity(&modes)))?;
    Ok(h.add(&rest)?)
}

/// Index pairing detected by the `A_m` generator family.
pub fn am_index(m: i64, ell: usize, ladder: &[usize], rank_tol: f64) -> Result<IndexResult, FredholmError> {
    let e = am_operator(m, ell)?;
    let (rungs, idx) = ladder_index(ladder, rank_tol, |d| {
        let mut f = vec![FactorKind::NatTrunc(d); ell];
        f.push(FactorKind::NatTrunc(d + 1));
        Ok(materialize(&e, &SpaceSpec::new(f)?, 0.0)?)
    })?;
    Ok(IndexResult {
        m,
        ell,
        rank_tol,
        ladder: rungs,
        stabilized: true,
        index: idx,
        sigma_global: SIGMA_GLOBAL,
        pairing: SIGMA_GLOBAL * idx,
        winding: winding_oracle(m),
    })
}

pub const DEFAULT_LADDER: [usize; 6] = [8, 12, 16, 24, 32, 40];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_values() {
        assert_eq!(winding_oracle(0), 0);
        assert_eq!(winding_oracle(2), -2);
        assert_eq!(winding_oracle(-1), 1);
    }

    #[test]
    fn compression_matches_toeplitz_form() {
        for ell in 1..=2 {
            for m in -2..=2 {
                let a = compress_rm(m, ell, 6).unwrap();
                let b = rm_direct(m, ell, 6).unwrap();
                assert_eq!(a.max_abs_diff(&b).unwrap(), 0.0, "m={m} ell={ell}");
            }
        }
    }

    #[test]
    fn short_ladder_is_rejected() {
        assert!(matches!(index(1, 1, &[4, 5], RANK_TOL), Err(FredholmError::BadLadder { .. })));
    }
}
