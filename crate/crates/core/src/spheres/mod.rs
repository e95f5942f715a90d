//! Odd quantum spheres at `q = 0`, their extensions and the quotient maps
//! between the algebras `C_k`.

mod homogeneity;
mod sigma;

pub use homogeneity::{circle_samples, homogeneity_probe, HomogeneityReport, ProbeCurve};
pub use sigma::{sigma_check, sigma_last, SigmaCheck};

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::fock::{power, FockError, Mode, OperatorExpr, Primitive};
use crate::qgroup::QgroupError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpheresError {
    #[error("sigma is undefined on {0}")]
    SigmaUndefined(String),
    #[error("k = {k} outside 1..={max}")]
    KOutOfRange { k: usize, max: usize },
    #[error("empty generator list")]
    Empty,
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error(transparent)]
    Qgroup(#[from] QgroupError),
}

fn nat(prims: &[Primitive]) -> OperatorExpr {
    OperatorExpr::word(Mode::Nat, prims)
}

fn p() -> OperatorExpr {
    nat(&[Primitive::Proj(0)])
}

fn tensor_all(parts: &[OperatorExpr]) -> OperatorExpr {
    parts.iter().fold(OperatorExpr::scalar(C64::new(1.0, 0.0)), |acc, e| acc.tensor(e))
}

/// `p^{⊗(r-1)} ⊗ x ⊗ 1^{⊗(len-r)}` on half-line factors.
fn slot(len: usize, r: usize, x: &OperatorExpr) -> OperatorExpr {
    let one = OperatorExpr::identity(&[Mode::Nat]);
    let parts: Vec<OperatorExpr> = (1..=len)
        .map(|f| match f.cmp(&r) {
            std::cmp::Ordering::Less => p(),
            std::cmp::Ordering::Equal => x.clone(),
            std::cmp::Ordering::Greater => one.clone(),
        })
        .collect();
    tensor_all(&parts)
}

/// The bilateral shift `t : e_n ↦ e_{n+1}` on one `ℓ²(ℤ)` factor.
pub fn circle_t() -> OperatorExpr {
    OperatorExpr::word(Mode::Int, &[Primitive::CoShift])
}

/// Generators of `C(S_0^{2ℓ+1})` on `ℓ²(ℕ)^{⊗ℓ} ⊗ ℓ²(ℤ)`:
/// `p^{⊗(r-1)} ⊗ S* ⊗ 1 ⊗ ⋯` for `r ≤ ℓ`, then `p^{⊗ℓ} ⊗ t`.
pub fn sphere_generators(ell: usize) -> Vec<OperatorExpr> {
    let one_t = OperatorExpr::identity(&[Mode::Int]);
    let sd = nat(&[Primitive::CoShift]);
    let mut out: Vec<OperatorExpr> = (1..=ell).map(|r| slot(ell, r, &sd).tensor(&one_t)).collect();
    out.push(tensor_all(&vec![p(); ell]).tensor(&circle_t()));
    out
}

/// Quantum double suspension of a generator list: `{g ⊗ p} ∪ {1 ⊗ S}`.
pub fn qds(gens: &[OperatorExpr]) -> Result<Vec<OperatorExpr>, SpheresError> {
    let modes = gens.first().ok_or(SpheresError::Empty)?.modes().to_vec();
    let mut out: Vec<OperatorExpr> = gens.iter().map(|g| g.tensor(&p())).collect();
    out.push(OperatorExpr::identity(&modes).tensor(&nat(&[Primitive::Shift])));
    Ok(out)
}

/// `qds` applied `ell` times to `[t]`.
pub fn qds_tower(ell: usize) -> Vec<OperatorExpr> {
    let mut g = vec![circle_t()];
    for _ in 0..ell {
        g = qds(&g).expect("nonempty");
    }
    g
}

/// Puts a `qds` tower in the convention of [`sphere_generators`]: reverse
/// the tensor factors and the list, and take adjoints of the generators
/// coming from `1 ⊗ S`. With `reverse = false` the factor reversal is
/// skipped.
pub fn qds_to_sphere_convention(tower: &[OperatorExpr], reverse: bool) -> Vec<OperatorExpr> {
    tower
        .iter()
        .enumerate()
        .rev()
        .map(|(i, g)| {
            let g = if reverse { g.reverse_factors() } else { g.clone() };
            // index 0 is the circle generator t ⊗ p ⊗ ⋯
            if i == 0 {
                g
            } else {
                g.adjoint()
            }
        })
        .collect()
}

/// Images of the sphere generators under `φ_m`, on
/// `ℓ²(ℕ)^{⊗(ℓ+1)} ⊗ ℓ²(ℤ)`.
pub fn phi_m_images(m: i64, ell: usize) -> Vec<OperatorExpr> {
    let one_t = OperatorExpr::identity(&[Mode::Int]);
    let sd = nat(&[Primitive::CoShift]);
    let mut out: Vec<OperatorExpr> = (1..=ell).map(|r| slot(ell + 1, r, &sd).tensor(&one_t)).collect();
    out.push(slot(ell + 1, ell + 1, &nat(&power(Primitive::CoShift, m))).tensor(&one_t));
    out
}

/// Generators of the middle algebra `A_m` inside `C(S_0^{2ℓ+3})`.
#[derive(Clone, Debug, PartialEq)]
pub struct AmGenerators {
    pub m: i64,
    pub ell: usize,
    /// `ℓ + 1` operator generators; the last one carries `(S*)^m`.
    pub ops: Vec<OperatorExpr>,
}

impl AmGenerators {
    /// Number of listed generators, counting the ideal `K ⊗ C(T)` as one.
    pub fn listed_count(&self) -> usize {
        self.ops.len() + 1
    }

    /// Whether `e` lies in the ideal `K(ℓ²(ℕ)^{⊗(ℓ+1)}) ⊗ C(T)`: every term
    /// is finite rank on each half-line factor.
    pub fn in_ideal(e: &OperatorExpr) -> bool {
        e.terms().all(|(k, _)| k.words.iter().zip(e.modes()).all(|(w, &m)| m == Mode::Int || w.diag().proj().is_some()))
    }
}

pub fn am_generators(m: i64, ell: usize) -> AmGenerators {
    AmGenerators { m, ell, ops: phi_m_images(m, ell) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::format_expr;

    #[test]
    fn small_spheres() {
        assert_eq!(sphere_generators(0), vec![circle_t()]);
        let g = sphere_generators(1);
        assert_eq!(format_expr(&g[0]), "S*@1");
        assert_eq!(format_expr(&g[1]), "p_0@1 * S*@2");
        let g = sphere_generators(2);
        assert_eq!(g.len(), 3);
        assert_eq!(format_expr(&g[1]), "p_0@1 * S*@2");
        assert_eq!(format_expr(&g[2]), "p_0@1 * p_0@2 * S*@3");
    }

    #[test]
    fn qds_shapes() {
        let t = vec![circle_t()];
        let g = qds(&t).unwrap();
        assert_eq!(format_expr(&g[0]), "S*@1 * p_0@2");
        assert_eq!(format_expr(&g[1]), "S@2");
        let gg = qds(&g).unwrap();
        assert_eq!(gg.len(), 3);
        assert_eq!(format_expr(&gg[1]), "S@2 * p_0@3");
        assert_eq!(format_expr(&gg[2]), "S@3");
        assert!(qds(&[]).is_err());
    }

    #[test]
    fn tower_matches_spheres() {
        for ell in 0..=3 {
            assert_eq!(qds_to_sphere_convention(&qds_tower(ell), true), sphere_generators(ell));
        }
        assert_ne!(qds_to_sphere_convention(&qds_tower(2), false), sphere_generators(2));
    }

    #[test]
    fn phi_images() {
        let g = phi_m_images(1, 1);
        assert_eq!(format_expr(&g[0]), "S*@1");
        assert_eq!(format_expr(&g[1]), "p_0@1 * S*@2");
        assert_eq!(format_expr(phi_m_images(0, 2).last().unwrap()), "p_0@1 * p_0@2");
        assert_eq!(format_expr(phi_m_images(-2, 1).last().unwrap()), "p_0@1 * S^2@2");
    }

    #[test]
    fn a1_is_the_next_sphere() {
        let ell = 1;
        let a = am_generators(1, ell);
        let s = sphere_generators(ell + 1);
        assert_eq!(a.listed_count(), ell + 2);
        assert_eq!(a.ops[..], s[..ell + 1]);
        assert!(AmGenerators::in_ideal(&s[ell + 1]));
        assert!(!AmGenerators::in_ideal(&a.ops[ell]));
    }
}
