//! The presentation at `q = 0` and its comparison with the odd sphere.

use serde::Serialize;
use std::collections::BTreeSet;

use super::{
    build_presentation, format_relation, relation_expr, Coeff, Family, Generators, Letter, NCPoly, PresentationParams,
    Relation, RelationError,
};
use crate::fock::{materialize, SpaceSpec};
use crate::qgroup::{eta, CircleMode, GeneratorAssignment};
use crate::spheres::sphere_generators;

/// Integer coefficient of `c` at `q = 0`, or `None` when `c` has a pole there.
fn value_at_zero(c: &Coeff, p: &PresentationParams) -> Option<i64> {
    let mut v = 0.0;
    for (x, e) in c.instantiate(p) {
        if x == 0.0 {
            continue;
        }
        match e {
            0 => v += x,
            e if e < 0 => return None,
            _ => {}
        }
    }
    Some(v as i64)
}

fn monomial_vanishes(word: &[Letter], zeros: &BTreeSet<Vec<Letter>>) -> bool {
    zeros.contains(word)
}

/// Sorted monomials, positive leading coefficient.
fn normalize(terms: Vec<(i64, Vec<Letter>)>) -> Vec<(i64, Vec<Letter>)> {
    let mut terms: Vec<(i64, Vec<Letter>)> = terms.into_iter().filter(|(c, _)| *c != 0).collect();
    terms.sort_by(|a, b| a.1.cmp(&b.1));
    let mut merged: Vec<(i64, Vec<Letter>)> = Vec::new();
    for (c, w) in terms {
        match merged.last_mut() {
            Some(last) if last.1 == w => last.0 += c,
            _ => merged.push((c, w)),
        }
    }
    merged.retain(|(c, _)| *c != 0);
    if merged.first().is_some_and(|(c, _)| *c < 0) {
        for t in &mut merged {
            t.0 = -t.0;
        }
    }
    merged
}

/// The relations at `q = 0`, normalized and without duplicates.
///
/// The `c2` family is processed from `i = 2n` downwards: a term whose
/// coefficient has a pole at `q = 0` is dropped only when its monomial is
/// already known to vanish.
pub fn q_zero_presentation(n: usize) -> Result<Vec<Relation>, RelationError> {
    let params = PresentationParams::calibrated(n);
    let mut rels = build_presentation(n);
    // Descending i inside c2; stable order elsewhere.
    rels.sort_by(|a, b| {
        a.family.cmp(&b.family).then_with(|| {
            if a.family == Family::C2 {
                b.indices.cmp(&a.indices)
            } else {
                std::cmp::Ordering::Equal
            }
        })
    });
    let mut zeros: BTreeSet<Vec<Letter>> = BTreeSet::new();
    let mut seen: BTreeSet<Vec<(i64, Vec<Letter>)>> = BTreeSet::new();
    let mut out = Vec::new();
    for rel in rels {
        let mut terms = Vec::new();
        for (c, w) in &rel.poly.terms {
            match value_at_zero(c, &params) {
                Some(v) => terms.push((v, w.clone())),
                None if monomial_vanishes(w, &zeros) => {}
                None => return Err(RelationError::SingularAtZero(rel.id())),
            }
        }
        let terms = normalize(terms);
        if terms.is_empty() {
            continue;
        }
        if let [(_, w)] = terms.as_slice() {
            zeros.insert(w.clone());
        }
        if seen.insert(terms.clone()) {
            let poly = NCPoly { terms: terms.into_iter().map(|(c, w)| (Coeff::int(c), w)).collect() };
            out.push(Relation { family: rel.family, indices: rel.indices, poly });
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RelationCheck {
    pub id: String,
    pub relation: String,
    /// Largest entry of the relation polynomial on the sphere generators.
    pub value: f64,
    pub exact: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Q0Comparison {
    pub n: usize,
    pub d: usize,
    pub ell: usize,
    pub relations: Vec<RelationCheck>,
    /// Every `q = 0` relation vanishes on the sphere generators.
    pub syntactic_pass: bool,
    /// Largest entry deviation between `y_j^{2n}` at `q = 0` (factors
    /// reversed) and the `j`-th sphere generator.
    pub generator_deviation: Vec<f64>,
    pub operator_pass: bool,
    pub pass: bool,
}

/// Both comparisons against `C(S_0^{2ℓ+1})`; `ell` is normally `2n - 1`.
pub fn compare_q0(
    n: usize,
    d: usize,
    ell: usize,
    assignment: &GeneratorAssignment,
) -> Result<Q0Comparison, RelationError> {
    let rels = q_zero_presentation(n)?;
    let sphere = sphere_generators(ell);
    let sphere_gens = Generators::new(sphere.clone())?;
    let params = PresentationParams::calibrated(n);
    let space = SpaceSpec::uniform(sphere_gens.modes(), d)?;
    let mut relations = Vec::with_capacity(rels.len());
    for rel in &rels {
        let (value, exact) = match relation_expr(rel, &sphere_gens, &params) {
            Ok(e) if e.is_zero() => (0.0, true),
            Ok(e) => {
                let m = materialize(&e, &space, 0.0)?;
                let v = m.entries().map(|(_, _, x)| x.norm()).fold(0.0, f64::max);
                (v, false)
            }
            Err(RelationError::MissingImage(_)) => (f64::INFINITY, false),
            Err(e) => return Err(e),
        };
        relations.push(RelationCheck { id: rel.id(), relation: format_relation(rel), value, exact });
    }
    let syntactic_pass = relations.iter().all(|r| r.exact);

    let y = eta(2 * n, n, CircleMode::Bilateral, assignment)?;
    let mut generator_deviation = Vec::with_capacity(y.len());
    for (j, yj) in y.iter().enumerate() {
        let lhs = yj.at_q_zero()?.reverse_factors();
        let dev = match sphere.get(j) {
            Some(s) if s.modes() == lhs.modes() => {
                let a = materialize(&lhs, &space, 0.0)?;
                let b = materialize(s, &space, 0.0)?;
                a.max_abs_diff(&b)?
            }
            _ => f64::INFINITY,
        };
        generator_deviation.push(dev);
    }
    if sphere.len() != y.len() {
        generator_deviation.push(f64::INFINITY);
    }
    let operator_pass = generator_deviation.iter().all(|&d| d == 0.0);
    Ok(Q0Comparison {
        n,
        d,
        ell,
        relations,
        syntactic_pass,
        generator_deviation,
        operator_pass,
        pass: syntactic_pass && operator_pass,
    })
}
