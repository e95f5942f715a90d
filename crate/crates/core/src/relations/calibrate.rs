//! Recovering the `ρ` and `ε` tables from residuals of `c5` and `c7`.
//!
//! Only the combinations `ε_i ε_j`, `ρ_i + ρ_j` (from `c5`) and `2ρ_i`
//! (from `c7`) enter the relations, so candidate tables are grouped into
//! classes with identical instantiated coefficients and ranked by class.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::{BTreeMap, HashMap};

use super::{
    build_presentation, relation_expr, Coeff, Family, Generators, NCPoly, PresentationParams, Relation, RelationError,
};
use crate::fock::{materialize, OperatorExpr, SpaceSpec, TruncOp};

/// `(ε-sign, ρ-exponent)` carried by the parameter-dependent term.
type Key = (i8, i32);

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CalibrationClass {
    /// Instantiated `(sign, exponent)` per `c5`/`c7` relation, in order.
    pub signature: Vec<(i8, i32)>,
    pub members: usize,
    pub representative: PresentationParams,
    pub total_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Calibration {
    pub n: usize,
    pub q: f64,
    pub d: usize,
    pub band: usize,
    pub relation_ids: Vec<String>,
    pub candidates_examined: usize,
    pub class_count: usize,
    /// Best classes first; truncated to the leading few.
    pub classes: Vec<CalibrationClass>,
    pub winner: PresentationParams,
    pub winner_residual: f64,
    pub runner_up_residual: f64,
    /// Winner unique and at least six orders of magnitude below the runner-up.
    pub separated: bool,
}

struct Split {
    fixed: OperatorExpr,
    word: OperatorExpr,
    base: Coeff,
}

fn split(rel: &Relation, gens: &Generators, params: &PresentationParams) -> Result<Split, RelationError> {
    let pos = rel.poly.terms.iter().position(|(c, _)| !c.is_parameter_free()).expect("c5/c7 carry a parameter term");
    let mut fixed = rel.clone();
    let (base, w) = fixed.poly.terms.remove(pos);
    let word_rel = Relation { poly: NCPoly { terms: vec![(Coeff::int(1), w)] }, ..rel.clone() };
    let base = Coeff { rho: Vec::new(), eps: Vec::new(), ..base };
    Ok(Split { fixed: relation_expr(&fixed, gens, params)?, word: relation_expr(&word_rel, gens, params)?, base })
}

fn keyed(base: &Coeff, key: Key) -> Coeff {
    let mut c = base.clone();
    c.num *= key.0 as i64;
    c.qexp += key.1;
    c
}

fn key_of(rel: &Relation, p: &PresentationParams) -> Key {
    let (c, _) = rel.poly.terms.iter().find(|(c, _)| !c.is_parameter_free()).unwrap();
    let s: i8 = c.eps.iter().map(|&e| p.eps[e - 1]).product();
    (s, c.rho.iter().map(|&r| p.rho[r - 1]).sum())
}

/// Residual of one relation as a function of its key.
struct KeyedResidual {
    exact: Option<Key>,
    word_norm: f64,
    mats: Option<(TruncOp, TruncOp)>,
    base: Coeff,
    dummy: PresentationParams,
    q: f64,
    band: usize,
}

impl KeyedResidual {
    fn eval(&self, key: Key) -> Result<f64, RelationError> {
        let v = |k: Key| keyed(&self.base, k).value(&self.dummy, self.q);
        if let Some(k0) = self.exact {
            return Ok((v(key) - v(k0)).abs() * self.word_norm);
        }
        let (a, w) = self.mats.as_ref().unwrap();
        Ok(a.add(&w.scale(C64::new(v(key), 0.0)))?.interior_residual(self.band)?)
    }
}

fn rho_order(r: i32) -> i32 {
    2 * r.abs() - i32::from(r > 0)
}

fn order_key(p: &PresentationParams) -> (Vec<i32>, Vec<i8>) {
    (p.rho.iter().map(|&r| rho_order(r)).collect(), p.eps.iter().map(|&e| i8::from(e < 0)).collect())
}

/// Exhaustive search over `ρ_i ∈ [-n, n]`, `ε_i = ±1` with `ρ_i + ρ_j > 0`
/// whenever `i + j < 2n + 1`.
pub fn calibrate_rho_eps(
    n: usize,
    gens: &Generators,
    q: f64,
    d: usize,
    band: usize,
) -> Result<Calibration, RelationError> {
    let rels: Vec<Relation> =
        build_presentation(n).into_iter().filter(|r| matches!(r.family, Family::C5 | Family::C7)).collect();
    let m = 2 * n;
    let dummy = PresentationParams::calibrated(n);
    let space = SpaceSpec::uniform(gens.modes(), d)?;
    let ni = n as i32;
    let mut keys: Vec<Key> = Vec::new();
    for s in [1i8, -1] {
        for e in -2 * ni..=2 * ni {
            keys.push((s, e));
        }
    }

    let evaluators: Vec<KeyedResidual> = rels
        .par_iter()
        .map(|rel| {
            let sp = split(rel, gens, &dummy)?;
            let exact = keys.iter().copied().find(|&k| {
                let mut e = sp.fixed.clone();
                for (x, ex) in keyed(&sp.base, k).instantiate(&dummy) {
                    e = e.add(&sp.word.scale(C64::new(x, 0.0)).scale_qpow(ex)).unwrap();
                }
                e.is_zero()
            });
            let wmat = materialize(&sp.word, &space, q)?;
            let (word_norm, mats) = match exact {
                Some(_) => (wmat.interior_residual(band)?, None),
                None => (0.0, Some((materialize(&sp.fixed, &space, q)?, wmat))),
            };
            Ok(KeyedResidual { exact, word_norm, mats, base: sp.base, dummy: dummy.clone(), q, band })
        })
        .collect::<Result<_, RelationError>>()?;

    // Residual per (relation, key), computed lazily on the keys that occur.
    let mut table: Vec<HashMap<Key, f64>> = vec![HashMap::new(); rels.len()];
    let mut classes: BTreeMap<Vec<Key>, (usize, PresentationParams)> = BTreeMap::new();
    let span = (2 * n + 1) as u64;
    let total = span.pow(m as u32);
    let mut examined = 0usize;
    for code in 0..total {
        let mut c = code;
        let rho: Vec<i32> = (0..m)
            .map(|_| {
                let r = (c % span) as i32 - ni;
                c /= span;
                r
            })
            .collect();
        let admissible = (1..=m).all(|i| (i..=m).all(|j| i + j > m || rho[i - 1] + rho[j - 1] > 0));
        if !admissible {
            continue;
        }
        for bits in 0u32..(1 << m) {
            let eps: Vec<i8> = (0..m).map(|i| if bits >> i & 1 == 0 { 1 } else { -1 }).collect();
            let p = PresentationParams { n, rho: rho.clone(), eps };
            examined += 1;
            let sig: Vec<Key> = rels.iter().map(|r| key_of(r, &p)).collect();
            classes
                .entry(sig)
                .and_modify(|(count, rep)| {
                    *count += 1;
                    if order_key(&p) < order_key(rep) {
                        *rep = p.clone();
                    }
                })
                .or_insert((1, p));
        }
    }
    for sig in classes.keys() {
        for (r, &k) in sig.iter().enumerate() {
            if !table[r].contains_key(&k) {
                let v = evaluators[r].eval(k)?;
                table[r].insert(k, v);
            }
        }
    }
    let mut ranked: Vec<CalibrationClass> = classes
        .into_iter()
        .map(|(sig, (members, representative))| CalibrationClass {
            total_residual: sig.iter().enumerate().map(|(r, k)| table[r][k]).sum(),
            signature: sig,
            members,
            representative,
        })
        .collect();
    ranked.sort_by(|a, b| {
        a.total_residual
            .total_cmp(&b.total_residual)
            .then_with(|| order_key(&a.representative).cmp(&order_key(&b.representative)))
    });
    let best = ranked.first().ok_or(RelationError::NoCalibration { threshold: 0.0 })?;
    let winner_residual = best.total_residual;
    let runner_up_residual = ranked.get(1).map(|c| c.total_residual).unwrap_or(f64::INFINITY);
    let separated = runner_up_residual > 0.0 && runner_up_residual >= 1e6 * winner_residual;
    let class_count = ranked.len();
    let winner = best.representative.clone();
    ranked.truncate(8);
    Ok(Calibration {
        n,
        q,
        d,
        band,
        relation_ids: rels.iter().map(Relation::id).collect(),
        candidates_examined: examined,
        class_count,
        classes: ranked,
        winner,
        winner_residual,
        runner_up_residual,
        separated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn representative_order() {
        let mut v = vec![-2, 2, -1, 1, 0];
        v.sort_by_key(|&r| rho_order(r));
        assert_eq!(v, vec![0, 1, -1, 2, -2]);
    }
}
