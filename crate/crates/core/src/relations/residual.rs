//! Evaluating relations on concrete generator images.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use super::{Family, Letter, PresentationParams, Relation, RelationError};
use crate::fock::{materialize, Mode, OperatorExpr, SpaceSpec, TruncOp};

/// Images of `z_1 … z_m` together with their adjoints.
#[derive(Clone, Debug)]
pub struct Generators {
    modes: Vec<Mode>,
    z: Vec<OperatorExpr>,
    zs: Vec<OperatorExpr>,
}

impl Generators {
    pub fn new(z: Vec<OperatorExpr>) -> Result<Generators, RelationError> {
        let modes = z.first().map(|e| e.modes().to_vec()).ok_or(RelationError::MissingImage(1))?;
        for e in &z {
            if e.modes() != modes.as_slice() {
                return Err(crate::fock::FockError::ModeMismatch(modes, e.modes().to_vec()).into());
            }
        }
        let zs = z.par_iter().map(OperatorExpr::adjoint).collect();
        Ok(Generators { modes, z, zs })
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn images(&self) -> &[OperatorExpr] {
        &self.z
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    /// The same generators with every q-dependence specialized to `q = 0`.
    pub fn at_q_zero(&self) -> Result<Generators, RelationError> {
        let z: Result<Vec<_>, _> = self.z.iter().map(OperatorExpr::at_q_zero).collect();
        Generators::new(z?)
    }

    /// `z_l ↦ λ z_l` for every `l`.
    pub fn scaled(&self, lambda: C64) -> Generators {
        Generators::new(self.z.iter().map(|e| e.scale(lambda)).collect()).expect("nonempty")
    }

    fn letter(&self, l: Letter) -> Result<&OperatorExpr, RelationError> {
        let v = if l.star { &self.zs } else { &self.z };
        v.get(l.index.wrapping_sub(1)).ok_or(RelationError::MissingImage(l.index))
    }
}

/// Symbolic value of the relation polynomial; zero iff the relation holds
/// identically in `q`.
pub fn relation_expr(
    rel: &Relation,
    gens: &Generators,
    params: &PresentationParams,
) -> Result<OperatorExpr, RelationError> {
    let modes = gens.modes();
    let mut out = OperatorExpr::zero(modes);
    for (c, word) in &rel.poly.terms {
        let mut prod = OperatorExpr::identity(modes);
        for &l in word {
            prod = prod.compose(gens.letter(l)?)?;
        }
        for (v, e) in c.instantiate(params) {
            out = out.add(&prod.scale(C64::new(v, 0.0)).scale_qpow(e))?;
        }
    }
    Ok(out)
}

/// Residual of one relation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RelationResidual {
    pub id: String,
    pub family: Family,
    /// Interior operator norm of `lhs - rhs`.
    pub value: f64,
    /// The relation polynomial normalized to the zero expression.
    pub symbolic_zero: bool,
}

fn check_q0_coefficients(rel: &Relation, params: &PresentationParams) -> Result<(), RelationError> {
    for (c, _) in &rel.poly.terms {
        if c.instantiate(params).iter().any(|&(v, e)| e < 0 && v != 0.0) {
            return Err(RelationError::SingularAtZero(rel.id()));
        }
    }
    Ok(())
}

/// `interior_residual(materialize(lhs - rhs), band)` on `D`-truncations.
///
/// The difference is first normalized symbolically; an exact zero gives a
/// residual of exactly 0 without materializing.
pub fn eval_residual(
    rel: &Relation,
    gens: &Generators,
    params: &PresentationParams,
    q: f64,
    d: usize,
    band: usize,
) -> Result<RelationResidual, RelationError> {
    let mut expr = relation_expr(rel, gens, params)?;
    if q == 0.0 {
        check_q0_coefficients(rel, params)?;
        expr = expr.at_q_zero()?;
    }
    let space = SpaceSpec::uniform(gens.modes(), d)?;
    let value = if expr.is_zero() { 0.0 } else { materialize(&expr, &space, q)?.interior_residual(band)? };
    Ok(RelationResidual { id: rel.id(), family: rel.family, value, symbolic_zero: expr.is_zero() })
}

/// Residual computed from materialized generator matrices by matrix
/// products, independent of the symbolic normal form.
pub fn eval_residual_matrix(
    rel: &Relation,
    mats: &[TruncOp],
    params: &PresentationParams,
    q: f64,
    band: usize,
) -> Result<f64, RelationError> {
    let first = mats.first().ok_or(RelationError::MissingImage(1))?;
    let space = first.space().clone();
    let adj: Vec<TruncOp> = mats.iter().map(TruncOp::adjoint).collect();
    let mut acc = TruncOp::zero(space.clone());
    for (c, word) in &rel.poly.terms {
        let mut prod = TruncOp::identity(space.clone());
        for l in word {
            let m = if l.star { &adj } else { mats };
            prod = prod.compose(m.get(l.index - 1).ok_or(RelationError::MissingImage(l.index))?)?;
        }
        acc = acc.add(&prod.scale(C64::new(c.value(params, q), 0.0)))?;
    }
    Ok(acc.interior_residual(band)?)
}

/// Residuals of every relation, in input order.
pub fn verify(
    rels: &[Relation],
    gens: &Generators,
    params: &PresentationParams,
    q: f64,
    d: usize,
    band: usize,
) -> Result<Vec<RelationResidual>, RelationError> {
    rels.par_iter().map(|r| eval_residual(r, gens, params, q, d, band)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relations::build_presentation;

    #[test]
    fn c8_with_zero_images_is_one() {
        let z = vec![OperatorExpr::zero(&[Mode::Nat]); 2];
        let gens = Generators::new(z).unwrap();
        let rels = build_presentation(1);
        let c8 = rels.iter().find(|r| r.family == Family::C8).unwrap();
        let p = PresentationParams::calibrated(1);
        let r = eval_residual(c8, &gens, &p, 0.5, 6, 1).unwrap();
        assert!((r.value - 1.0).abs() < 1e-15);
        assert!(!r.symbolic_zero);
    }

    #[test]
    fn missing_image_is_error() {
        let gens = Generators::new(vec![OperatorExpr::identity(&[Mode::Nat])]).unwrap();
        let rels = build_presentation(1);
        let p = PresentationParams::calibrated(1);
        assert!(matches!(eval_residual(&rels[0], &gens, &p, 0.5, 4, 1), Err(RelationError::MissingImage(2))));
    }
}
