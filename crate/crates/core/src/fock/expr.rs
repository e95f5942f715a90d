//! Symbolic operator expressions.
//!
//! Every expression is a finite sum of terms. A term is a complex
//! coefficient, a q-dependent scalar and one canonical [`Word`] per tensor
//! factor. A word is `g(N) · T^s` where `T` is the unit shift
//! `e_n ↦ e_{n+1}` (so `T = S*`, `T^{-1} = S`) and `g` is a product of
//! diagonal atoms. Products are reduced with the exact identities of
//! `ℓ²(ℕ)` / `ℓ²(ℤ)`:
//!
//! * `T^a g(N) = g(N-a) T^a`,
//! * on `ℓ²(ℕ)`: `S S* = 1`, `S*^a S^c = [N ≥ a] T^{a-c}`, and the
//!   indicator is expanded as `1 - Σ_{i<a} p_i` unless a root in `g` is
//!   undefined at one of those `i`,
//! * `sqrt(1-x)^2 = 1 - x`,
//! * `p_i f(N) = f(i) p_i`, with `f(i)` moved into the scalar.
//!
//! The resulting normal form is unique for the operator families built in
//! this crate, so symbol-level equality is a `BTreeMap` comparison.

use num_complex::Complex64 as C64;
use std::collections::{BTreeMap, BTreeSet};

use super::space::Mode;
use super::FockError;

/// Coefficients below this magnitude are dropped.
pub const PRUNE_TOL: f64 = 1e-15;

/// Named diagonal functions `n ↦ f(n)`, evaluated at the ambient `q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DiagFn {
    /// `q^{slope·n + offset}` with `0^0 = 1`.
    QPow { slope: i32, offset: i32 },
    /// `sqrt(1 - q^{slope·n + offset})`.
    Sq1m { slope: i32, offset: i32 },
}

/// Generators of the per-factor operator words.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Primitive {
    /// `S : e_n ↦ e_{n-1}`.
    Shift,
    /// `S* : e_n ↦ e_{n+1}`.
    CoShift,
    /// Rank-one projection `p_i`.
    Proj(i64),
    Diag(DiagFn),
    Id,
}

/// `prim^m` as a primitive word; negative powers of one shift are positive
/// powers of the other.
pub fn power(prim: Primitive, m: i64) -> Vec<Primitive> {
    let (base, count) = match (prim, m < 0) {
        (Primitive::Shift, true) => (Primitive::CoShift, -m),
        (Primitive::CoShift, true) => (Primitive::Shift, -m),
        (p, _) => (p, m.abs()),
    };
    if count == 0 {
        vec![Primitive::Id]
    } else {
        vec![base; count as usize]
    }
}

/// Canonical diagonal part of a word.
///
/// If `proj` is set, all other atoms have been evaluated into the scalar.
/// The q-power atom always has offset 0.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Diag {
    qpow: Option<(i32, i32)>,
    roots: BTreeSet<(i32, i32)>,
    proj: Option<i64>,
    /// Indicator `[N >= lower]`, kept only where expanding it would evaluate
    /// a root outside its domain.
    lower: Option<i64>,
}

impl Diag {
    pub fn is_identity(&self) -> bool {
        self.qpow.is_none() && self.roots.is_empty() && self.proj.is_none() && self.lower.is_none()
    }

    /// `q^{slope·N + offset}` factor, if any.
    pub fn qpow(&self) -> Option<(i32, i32)> {
        self.qpow
    }

    /// `sqrt(1 - q^{slope·N + offset})` factors.
    pub fn roots(&self) -> impl Iterator<Item = (i32, i32)> + '_ {
        self.roots.iter().copied()
    }

    pub fn proj(&self) -> Option<i64> {
        self.proj
    }

    pub fn lower(&self) -> Option<i64> {
        self.lower
    }

    /// Value at basis label `n`.
    pub fn eval(&self, n: i64, q: f64) -> Result<f64, FockError> {
        if let Some(i) = self.proj {
            return Ok(if n == i { 1.0 } else { 0.0 });
        }
        if self.lower.is_some_and(|a| n < a) {
            return Ok(0.0);
        }
        let mut v = 1.0;
        if let Some((a, b)) = self.qpow {
            v *= qpow_value(q, a as i64 * n + b as i64)
                .ok_or_else(|| FockError::DiagOutOfRange { what: format!("q^{{{a}N{b:+}}}"), n })?;
        }
        for &(a, b) in &self.roots {
            v *= sq1m_value(q, a as i64 * n + b as i64)
                .ok_or_else(|| FockError::DiagOutOfRange { what: format!("sqrt(1-q^{{{a}N{b:+}}})"), n })?;
        }
        Ok(v)
    }

    fn to_raw(&self) -> RawDiag {
        RawDiag {
            qpow: self.qpow.unwrap_or((0, 0)),
            roots: self.roots.iter().copied().collect(),
            projs: self.proj.into_iter().collect(),
            lower: self.lower,
        }
    }
}

/// `q^e` with `0^0 = 1`; `None` when the value is infinite.
pub fn qpow_value(q: f64, e: i64) -> Option<f64> {
    if q == 0.0 {
        match e.cmp(&0) {
            std::cmp::Ordering::Less => None,
            std::cmp::Ordering::Equal => Some(1.0),
            std::cmp::Ordering::Greater => Some(0.0),
        }
    } else {
        let v = q.powi(e as i32);
        v.is_finite().then_some(v)
    }
}

/// `sqrt(1 - q^e)`; `None` when the radicand is negative or infinite.
pub fn sq1m_value(q: f64, e: i64) -> Option<f64> {
    let x = 1.0 - qpow_value(q, e)?;
    if x < 0.0 {
        None
    } else {
        Some(x.sqrt())
    }
}

/// One factor of a term: `diag(N) · T^shift`.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word {
    diag: Diag,
    shift: i32,
}

impl Word {
    pub fn identity() -> Word {
        Word::default()
    }

    pub fn is_identity(&self) -> bool {
        self.shift == 0 && self.diag.is_identity()
    }

    pub fn diag(&self) -> &Diag {
        &self.diag
    }

    /// Net shift: positive powers of `S*`, negative powers of `S`.
    pub fn shift(&self) -> i32 {
        self.shift
    }

    /// Image of basis label `n` as `(label, weight)`, or `None` if the word
    /// annihilates `e_n` (including truncation of the target).
    pub fn act(&self, n: i64, q: f64, mode: Mode) -> Result<Option<(i64, f64)>, FockError> {
        let m = n + self.shift as i64;
        if mode == Mode::Nat && m < 0 {
            return Ok(None);
        }
        let v = self.diag.eval(m, q)?;
        Ok(if v == 0.0 { None } else { Some((m, v)) })
    }
}

/// q-dependent scalar `q^qexp · Π sqrt(1 - q^c)`.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Scalar {
    qexp: i32,
    roots: BTreeSet<i32>,
}

impl Scalar {
    pub fn one() -> Scalar {
        Scalar::default()
    }

    pub fn qpow(e: i32) -> Scalar {
        Scalar { qexp: e, roots: BTreeSet::new() }
    }

    pub fn is_one(&self) -> bool {
        self.qexp == 0 && self.roots.is_empty()
    }

    pub fn qexp(&self) -> i32 {
        self.qexp
    }

    pub fn roots(&self) -> impl Iterator<Item = i32> + '_ {
        self.roots.iter().copied()
    }

    pub fn eval(&self, q: f64) -> Result<f64, FockError> {
        let mut v = qpow_value(q, self.qexp as i64)
            .ok_or_else(|| FockError::DiagOutOfRange { what: format!("q^{{{}}}", self.qexp), n: 0 })?;
        for &c in &self.roots {
            v *= sq1m_value(q, c as i64)
                .ok_or_else(|| FockError::DiagOutOfRange { what: format!("sqrt(1-q^{{{c}}})"), n: 0 })?;
        }
        Ok(v)
    }
}

/// The non-numeric part of a term.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TermKey {
    pub scalar: Scalar,
    pub words: Vec<Word>,
}

/// Un-normalized diagonal data collected while multiplying.
#[derive(Clone, Debug, Default)]
struct RawDiag {
    qpow: (i32, i32),
    roots: Vec<(i32, i32)>,
    projs: Vec<i64>,
    /// Indicator `[N >= lower]`.
    lower: Option<i64>,
}

impl RawDiag {
    fn mul(&mut self, other: RawDiag) {
        self.qpow.0 += other.qpow.0;
        self.qpow.1 += other.qpow.1;
        self.roots.extend(other.roots);
        self.projs.extend(other.projs);
        self.lower = match (self.lower, other.lower) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
    }

    /// `g(N + d)`.
    fn arg_shift(mut self, d: i64) -> RawDiag {
        self.qpow.1 += self.qpow.0 * d as i32;
        for r in &mut self.roots {
            r.1 += r.0 * d as i32;
        }
        for p in &mut self.projs {
            *p -= d;
        }
        self.lower = self.lower.map(|a| a - d);
        self
    }
}

/// A single canonical summand: sign, scalar and diagonal.
type Piece = (f64, Scalar, Diag);

/// Canonicalizes a raw diagonal. `range_min` is the smallest label on which
/// the diagonal can act (`None` for bilateral factors).
fn canon_diag(raw: RawDiag, range_min: Option<i64>, scalar: Scalar) -> Vec<Piece> {
    let mut out = Vec::new();
    canon_diag_into(raw, range_min, 1.0, scalar, &mut out);
    out
}

fn canon_diag_into(mut raw: RawDiag, range_min: Option<i64>, sign: f64, mut scalar: Scalar, out: &mut Vec<Piece>) {
    if let Some(&i) = raw.projs.first() {
        if raw.projs.iter().any(|&j| j != i) {
            return;
        }
        if range_min.is_some_and(|r| i < r) || raw.lower.is_some_and(|a| i < a) {
            return;
        }
        scalar.qexp += raw.qpow.0 * i as i32 + raw.qpow.1;
        let mut pieces = vec![(sign, scalar)];
        for (a, b) in raw.roots {
            let c = a * i as i32 + b;
            if c == 0 {
                return;
            }
            let single = Scalar { qexp: 0, roots: [c].into_iter().collect() };
            pieces = pieces
                .into_iter()
                .flat_map(|(s, sc)| scalar_mul(&sc, &single).into_iter().map(move |(s2, x)| (s * s2, x)))
                .collect();
        }
        for (s, sc) in pieces {
            out.push((s, sc, Diag { proj: Some(i), ..Diag::default() }));
        }
        return;
    }
    let mut lower = None;
    if let Some(a) = raw.lower.take() {
        let floor = range_min.unwrap_or(i64::MIN);
        if a > floor {
            let start = range_min.unwrap_or(a);
            let singular = (start..a).any(|i| raw.roots.iter().any(|&(ra, rb)| ra as i64 * i + (rb as i64) < 0));
            if singular {
                lower = Some(a);
            } else {
                for i in start..a {
                    let mut with_proj = raw.clone();
                    with_proj.projs.push(i);
                    canon_diag_into(with_proj, range_min, -sign, scalar.clone(), out);
                }
            }
        }
    }
    // q^{aN+b} = q^b · q^{aN}: offsets always live in the scalar.
    let (qa, qb) = raw.qpow;
    scalar.qexp += qb;
    let qpow = (qa != 0).then_some((qa, 0));
    let mut roots: BTreeSet<(i32, i32)> = BTreeSet::new();
    let mut squared: Vec<(i32, i32)> = Vec::new();
    for (a, b) in raw.roots {
        if a == 0 {
            if b == 0 {
                return;
            }
            if !scalar.roots.remove(&b) {
                scalar.roots.insert(b);
            } else {
                squared.push((0, b));
            }
        } else if !roots.remove(&(a, b)) {
            roots.insert((a, b));
        } else {
            squared.push((a, b));
        }
    }
    if let Some(&(a, b)) = squared.first() {
        // Expand one square; recurse for the rest.
        let rest: Vec<(i32, i32)> = squared[1..].iter().flat_map(|&r| [r, r]).chain(roots.iter().copied()).collect();
        let base = RawDiag { qpow: qpow.unwrap_or((0, 0)), roots: rest, projs: Vec::new(), lower };
        canon_diag_into(base.clone(), range_min, sign, scalar.clone(), out);
        let mut minus = base;
        minus.qpow.0 += a;
        minus.qpow.1 += b;
        canon_diag_into(minus, range_min, -sign, scalar, out);
        return;
    }
    out.push((sign, scalar, Diag { qpow, roots, proj: None, lower }));
}

fn scalar_mul(a: &Scalar, b: &Scalar) -> Vec<(f64, Scalar)> {
    let mut qexp = a.qexp + b.qexp;
    let mut roots = a.roots.clone();
    let mut squares = Vec::new();
    for &c in &b.roots {
        if !roots.remove(&c) {
            roots.insert(c);
        } else {
            squares.push(c);
        }
    }
    // Π (1 - q^c) over the squared roots.
    let mut out = vec![(1.0, 0i32)];
    for c in squares {
        let mut next = Vec::with_capacity(out.len() * 2);
        for (s, e) in out {
            next.push((s, e));
            next.push((-s, e + c));
        }
        out = next;
    }
    let base = std::mem::take(&mut qexp);
    out.into_iter().map(|(s, e)| (s, Scalar { qexp: base + e, roots: roots.clone() })).collect()
}

fn range_min(mode: Mode, shift: i32) -> Option<i64> {
    match mode {
        Mode::Nat => Some(shift.max(0) as i64),
        Mode::Int => None,
    }
}

/// Product of two words on a factor of the given mode.
fn word_mul(mode: Mode, w1: &Word, w2: &Word) -> Vec<Piece> {
    let (a, b) = (w1.shift, w2.shift);
    let mut raw = w1.diag.to_raw();
    raw.mul(w2.diag.to_raw().arg_shift(-(a as i64)));
    if mode == Mode::Nat && a > 0 && b < 0 {
        raw.mul(RawDiag { lower: Some(a as i64), ..RawDiag::default() });
    }
    canon_diag(raw, range_min(mode, a + b), Scalar::one())
}

fn word_adjoint(mode: Mode, w: &Word) -> Vec<(f64, Scalar, Word)> {
    let raw = w.diag.to_raw().arg_shift(w.shift as i64);
    let s = -w.shift;
    canon_diag(raw, range_min(mode, s), Scalar::one())
        .into_iter()
        .map(|(sg, sc, d)| (sg, sc, Word { diag: d, shift: s }))
        .collect()
}

fn primitive_word(mode: Mode, p: Primitive) -> Vec<(f64, Scalar, Word)> {
    let (raw, shift) = match p {
        Primitive::Shift => (RawDiag::default(), -1),
        Primitive::CoShift => (RawDiag::default(), 1),
        Primitive::Id => (RawDiag::default(), 0),
        Primitive::Proj(i) => (RawDiag { projs: vec![i], ..RawDiag::default() }, 0),
        Primitive::Diag(DiagFn::QPow { slope, offset }) => (RawDiag { qpow: (slope, offset), ..RawDiag::default() }, 0),
        Primitive::Diag(DiagFn::Sq1m { slope, offset }) => {
            (RawDiag { roots: vec![(slope, offset)], ..RawDiag::default() }, 0)
        }
    };
    canon_diag(raw, range_min(mode, shift), Scalar::one())
        .into_iter()
        .map(|(sg, sc, d)| (sg, sc, Word { diag: d, shift }))
        .collect()
}

/// A formal finite sum of elementary tensors.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorExpr {
    modes: Vec<Mode>,
    terms: BTreeMap<TermKey, C64>,
}

impl OperatorExpr {
    pub fn zero(modes: &[Mode]) -> OperatorExpr {
        OperatorExpr { modes: modes.to_vec(), terms: BTreeMap::new() }
    }

    pub fn identity(modes: &[Mode]) -> OperatorExpr {
        OperatorExpr::scalar_on(modes, C64::new(1.0, 0.0))
    }

    /// `c · 1` on the given factors.
    pub fn scalar_on(modes: &[Mode], c: C64) -> OperatorExpr {
        let mut e = OperatorExpr::zero(modes);
        e.add_term(TermKey { scalar: Scalar::one(), words: vec![Word::identity(); modes.len()] }, c);
        e
    }

    /// A complex number, as an expression with no tensor factors.
    pub fn scalar(c: C64) -> OperatorExpr {
        OperatorExpr::scalar_on(&[], c)
    }

    /// `c · q^e · 1`.
    pub fn q_scalar_on(modes: &[Mode], c: C64, e: i32) -> OperatorExpr {
        let mut out = OperatorExpr::zero(modes);
        out.add_term(TermKey { scalar: Scalar::qpow(e), words: vec![Word::identity(); modes.len()] }, c);
        out
    }

    /// The product of `prims` (left to right) on a single factor.
    pub fn word(mode: Mode, prims: &[Primitive]) -> OperatorExpr {
        let mut acc = OperatorExpr::identity(&[mode]);
        for &p in prims {
            let mut f = OperatorExpr::zero(&[mode]);
            for (sg, sc, w) in primitive_word(mode, p) {
                f.add_term(TermKey { scalar: sc, words: vec![w] }, C64::new(sg, 0.0));
            }
            acc = acc.compose(&f).expect("same single mode");
        }
        acc
    }

    /// Elementary tensor of per-factor primitive words.
    pub fn tensor_word(factors: &[(Mode, &[Primitive])]) -> OperatorExpr {
        factors
            .iter()
            .fold(OperatorExpr::scalar(C64::new(1.0, 0.0)), |acc, (m, w)| acc.tensor(&OperatorExpr::word(*m, w)))
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn n_factors(&self) -> usize {
        self.modes.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&TermKey, &C64)> {
        self.terms.iter()
    }

    /// Adds `c · key`, merging like terms. `key` must already be canonical.
    pub fn add_term(&mut self, key: TermKey, c: C64) {
        debug_assert_eq!(key.words.len(), self.modes.len());
        let entry = self.terms.entry(key);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                if c.norm() > PRUNE_TOL {
                    v.insert(c);
                }
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = *o.get() + c;
                if s.norm() > PRUNE_TOL {
                    *o.get_mut() = s;
                } else {
                    o.remove();
                }
            }
        }
    }

    fn check_modes(&self, other: &OperatorExpr) -> Result<(), FockError> {
        if self.modes != other.modes {
            return Err(FockError::ModeMismatch(self.modes.clone(), other.modes.clone()));
        }
        Ok(())
    }

    pub fn add(&self, other: &OperatorExpr) -> Result<OperatorExpr, FockError> {
        self.check_modes(other)?;
        let mut out = self.clone();
        for (k, &c) in &other.terms {
            out.add_term(k.clone(), c);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &OperatorExpr) -> Result<OperatorExpr, FockError> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: C64) -> OperatorExpr {
        let mut out = OperatorExpr::zero(&self.modes);
        for (k, &v) in &self.terms {
            out.add_term(k.clone(), v * c);
        }
        out
    }

    /// Multiplies by the scalar `q^e`.
    pub fn scale_qpow(&self, e: i32) -> OperatorExpr {
        let mut out = OperatorExpr::zero(&self.modes);
        for (k, &v) in &self.terms {
            let mut k = k.clone();
            k.scalar.qexp += e;
            out.add_term(k, v);
        }
        out
    }

    /// Operator product `self · other`, normalized.
    pub fn compose(&self, other: &OperatorExpr) -> Result<OperatorExpr, FockError> {
        self.check_modes(other)?;
        let mut out = OperatorExpr::zero(&self.modes);
        for (k1, &c1) in &self.terms {
            for (k2, &c2) in &other.terms {
                let c = c1 * c2;
                // Each alternative: sign, scalar, words so far.
                let mut partial: Vec<(f64, Scalar, Vec<Word>)> = scalar_mul(&k1.scalar, &k2.scalar)
                    .into_iter()
                    .map(|(s, sc)| (s, sc, Vec::with_capacity(self.modes.len())))
                    .collect();
                for (f, &mode) in self.modes.iter().enumerate() {
                    let w1 = &k1.words[f];
                    let w2 = &k2.words[f];
                    let shift = w1.shift + w2.shift;
                    let pieces = word_mul(mode, w1, w2);
                    let mut next = Vec::with_capacity(partial.len() * pieces.len());
                    for (s, sc, words) in &partial {
                        for (ps, psc, d) in &pieces {
                            for (ms, msc) in scalar_mul(sc, psc) {
                                let mut w = words.clone();
                                w.push(Word { diag: d.clone(), shift });
                                next.push((s * ps * ms, msc, w));
                            }
                        }
                    }
                    partial = next;
                    if partial.is_empty() {
                        break;
                    }
                }
                for (s, sc, words) in partial {
                    out.add_term(TermKey { scalar: sc, words }, c * s);
                }
            }
        }
        Ok(out)
    }

    /// `self ⊗ other` (factors of `other` appended).
    pub fn tensor(&self, other: &OperatorExpr) -> OperatorExpr {
        let mut modes = self.modes.clone();
        modes.extend_from_slice(&other.modes);
        let mut out = OperatorExpr::zero(&modes);
        for (k1, &c1) in &self.terms {
            for (k2, &c2) in &other.terms {
                let mut words = k1.words.clone();
                words.extend(k2.words.iter().cloned());
                for (s, sc) in scalar_mul(&k1.scalar, &k2.scalar) {
                    out.add_term(TermKey { scalar: sc, words: words.clone() }, c1 * c2 * s);
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> OperatorExpr {
        let mut out = OperatorExpr::zero(&self.modes);
        for (k, &c) in &self.terms {
            let mut partial: Vec<(f64, Scalar, Vec<Word>)> = vec![(1.0, k.scalar.clone(), Vec::new())];
            for (f, &mode) in self.modes.iter().enumerate() {
                let pieces = word_adjoint(mode, &k.words[f]);
                let mut next = Vec::new();
                for (s, sc, words) in &partial {
                    for (ps, psc, w) in &pieces {
                        for (ms, msc) in scalar_mul(sc, psc) {
                            let mut ws = words.clone();
                            ws.push(w.clone());
                            next.push((s * ps * ms, msc, ws));
                        }
                    }
                }
                partial = next;
            }
            for (s, sc, words) in partial {
                out.add_term(TermKey { scalar: sc, words }, c.conj() * s);
            }
        }
        out
    }

    /// Reorders factors: factor `f` of the result is factor `perm[f]` of `self`.
    pub fn permute_factors(&self, perm: &[usize]) -> Result<OperatorExpr, FockError> {
        let n = self.modes.len();
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return Err(FockError::BadPermutation(perm.to_vec()));
        }
        let modes: Vec<Mode> = perm.iter().map(|&p| self.modes[p]).collect();
        let mut out = OperatorExpr::zero(&modes);
        for (k, &c) in &self.terms {
            let words = perm.iter().map(|&p| k.words[p].clone()).collect();
            out.add_term(TermKey { scalar: k.scalar.clone(), words }, c);
        }
        Ok(out)
    }

    pub fn reverse_factors(&self) -> OperatorExpr {
        let perm: Vec<usize> = (0..self.modes.len()).rev().collect();
        self.permute_factors(&perm).expect("reversal is a permutation")
    }

    /// Replaces factor `f` by a scalar via `map(word) -> expression on no
    /// factors`; used for characters such as evaluation or `σ`.
    pub fn contract_factor<F>(&self, f: usize, mut map: F) -> Result<OperatorExpr, FockError>
    where
        F: FnMut(Mode, &Word) -> Result<OperatorExpr, FockError>,
    {
        if f >= self.modes.len() {
            return Err(FockError::FactorCount { expected: f + 1, found: self.modes.len() });
        }
        let mut modes = self.modes.clone();
        let mode = modes.remove(f);
        let mut out = OperatorExpr::zero(&modes);
        for (k, &c) in &self.terms {
            let image = map(mode, &k.words[f])?;
            if !image.modes.is_empty() {
                return Err(FockError::FactorCount { expected: 0, found: image.modes.len() });
            }
            let mut rest = k.words.clone();
            rest.remove(f);
            for (ik, &ic) in &image.terms {
                for (s, sc) in scalar_mul(&k.scalar, &ik.scalar) {
                    out.add_term(TermKey { scalar: sc, words: rest.clone() }, c * ic * s);
                }
            }
        }
        Ok(out)
    }

    /// Specialization at `q = 0`: every q-power becomes an indicator, so the
    /// result is a combination of shift and projection words.
    pub fn at_q_zero(&self) -> Result<OperatorExpr, FockError> {
        let mut out = OperatorExpr::zero(&self.modes);
        for (k, &c) in &self.terms {
            let sv = k.scalar.eval(0.0)?;
            if sv == 0.0 {
                continue;
            }
            let mut partial: Vec<(f64, Vec<Word>)> = vec![(sv, Vec::new())];
            for (f, &mode) in self.modes.iter().enumerate() {
                let pieces = diag_at_q_zero(mode, &k.words[f])?;
                let mut next = Vec::new();
                for (s, words) in &partial {
                    for (ps, pw) in &pieces {
                        let mut ws = words.clone();
                        ws.push(pw.clone());
                        next.push((s * ps, ws));
                    }
                }
                partial = next;
            }
            for (s, words) in partial {
                out.add_term(TermKey { scalar: Scalar::one(), words }, c * s);
            }
        }
        Ok(out)
    }

    /// True if every word is built only from shifts and projections.
    pub fn is_q_free(&self) -> bool {
        self.terms
            .keys()
            .all(|k| k.scalar.is_one() && k.words.iter().all(|w| w.diag.qpow.is_none() && w.diag.roots.is_empty()))
    }

    /// Largest absolute shift over all words of a factor.
    pub fn max_shift(&self) -> u32 {
        self.terms.keys().flat_map(|k| k.words.iter().map(|w| w.shift.unsigned_abs())).max().unwrap_or(0)
    }

    /// Largest coefficient difference against `other`, as a symbol-level
    /// comparison (`0` means equal normal forms).
    pub fn symbol_distance(&self, other: &OperatorExpr) -> Result<f64, FockError> {
        let d = self.sub(other)?;
        Ok(d.terms.values().map(|c| c.norm()).fold(0.0, f64::max))
    }
}

/// `q = 0` image of one word: list of (weight, q-free word).
fn diag_at_q_zero(mode: Mode, w: &Word) -> Result<Vec<(f64, Word)>, FockError> {
    let d = &w.diag;
    if d.proj.is_some() {
        return Ok(vec![(1.0, w.clone())]);
    }
    let singular = |what: String| FockError::DiagOutOfRange { what, n: 0 };
    // Smallest label the diagonal is evaluated on.
    let r = match range_min(mode, w.shift) {
        Some(r) => r,
        None if d.qpow.is_none() && d.roots.is_empty() => return Ok(vec![(1.0, w.clone())]),
        None => return Err(singular("q-power on a bilateral factor at q = 0".into())),
    };
    let r = d.lower.map_or(r, |a| a.max(r));
    let mut raw = RawDiag { lower: d.lower, ..RawDiag::default() };
    if let Some((a, _)) = d.qpow {
        // q^{aN} -> [N = 0]
        if a < 0 {
            return Err(singular(format!("q^{{{a}N}}")));
        }
        raw.projs.push(0);
    }
    // sqrt(1 - q^{aN+b}) -> 1 - [aN + b = 0], defined where aN + b >= 0.
    let mut zeros = Vec::new();
    for &(a, b) in &d.roots {
        if a < 0 || a as i64 * r + (b as i64) < 0 {
            return Err(singular(format!("sqrt(1-q^{{{a}N{b:+}}})")));
        }
        if b <= 0 && b % a == 0 && (-b / a) as i64 >= r {
            zeros.push((-b / a) as i64);
        }
    }
    let mut alts: Vec<(f64, RawDiag)> = vec![(1.0, raw)];
    for z in zeros {
        let mut next = Vec::with_capacity(alts.len() * 2);
        for (s, r0) in alts {
            let mut r1 = r0.clone();
            r1.projs.push(z);
            next.push((s, r0));
            next.push((-s, r1));
        }
        alts = next;
    }
    let mut out = Vec::new();
    for (s, raw) in alts {
        for (ps, sc, diag) in canon_diag(raw, range_min(mode, w.shift), Scalar::one()) {
            let sv = sc.eval(0.0)?;
            if sv != 0.0 {
                out.push((s * ps * sv, Word { diag, shift: w.shift }));
            }
        }
    }
    Ok(out)
}

pub(crate) fn make_scalar(qexp: i32, roots: &[i32]) -> Vec<(f64, Scalar)> {
    let mut acc = vec![(1.0, Scalar::qpow(qexp))];
    for &c in roots {
        if c == 0 {
            return Vec::new();
        }
        let single = Scalar { qexp: 0, roots: [c].into_iter().collect() };
        acc = acc
            .into_iter()
            .flat_map(|(s, sc)| scalar_mul(&sc, &single).into_iter().map(move |(s2, x)| (s * s2, x)))
            .collect();
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn power_rules() {
        assert_eq!(power(Primitive::CoShift, 0), vec![Primitive::Id]);
        assert_eq!(power(Primitive::CoShift, -2), vec![Primitive::Shift, Primitive::Shift]);
        assert_eq!(power(Primitive::Shift, 3), vec![Primitive::Shift; 3]);
    }

    #[test]
    fn shift_coshift_is_identity() {
        let s = OperatorExpr::word(Mode::Nat, &[Primitive::Shift]);
        let sd = OperatorExpr::word(Mode::Nat, &[Primitive::CoShift]);
        assert_eq!(s.compose(&sd).unwrap(), OperatorExpr::identity(&[Mode::Nat]));
        assert_eq!(sd, s.adjoint());
    }

    #[test]
    fn coshift_shift_is_one_minus_p0() {
        let s = OperatorExpr::word(Mode::Nat, &[Primitive::Shift]);
        let sd = OperatorExpr::word(Mode::Nat, &[Primitive::CoShift]);
        let lhs = sd.compose(&s).unwrap();
        let rhs =
            OperatorExpr::identity(&[Mode::Nat]).sub(&OperatorExpr::word(Mode::Nat, &[Primitive::Proj(0)])).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn conjugated_root_keeps_its_indicator() {
        let f = Primitive::Diag(DiagFn::Sq1m { slope: 2, offset: 1 });
        let e = OperatorExpr::word(Mode::Nat, &[Primitive::CoShift, f, Primitive::Shift]);
        assert_eq!(e.terms().count(), 1);
        let w = &e.terms().next().unwrap().0.words[0];
        assert_eq!((w.diag().lower(), w.shift()), (Some(1), 0));
        assert_eq!(w.diag().eval(0, 0.5).unwrap(), 0.0);
        assert!((w.diag().eval(1, 0.5).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        let defined = OperatorExpr::word(
            Mode::Nat,
            &[Primitive::CoShift, Primitive::Diag(DiagFn::Sq1m { slope: 2, offset: 2 }), Primitive::Shift],
        );
        assert!(defined.terms().all(|(k, _)| k.words[0].diag().lower().is_none()));
    }

    #[test]
    fn bilateral_shift_is_unitary() {
        let t = OperatorExpr::word(Mode::Int, &[Primitive::CoShift]);
        let one = OperatorExpr::identity(&[Mode::Int]);
        assert_eq!(t.compose(&t.adjoint()).unwrap(), one);
        assert_eq!(t.adjoint().compose(&t).unwrap(), one);
    }

    #[test]
    fn diagonal_moves_past_shift() {
        // S* sqrt(1 - q^{2N+2}) = sqrt(1 - q^{2N}) S*
        let lhs =
            OperatorExpr::word(Mode::Nat, &[Primitive::CoShift, Primitive::Diag(DiagFn::Sq1m { slope: 2, offset: 2 })]);
        let rhs =
            OperatorExpr::word(Mode::Nat, &[Primitive::Diag(DiagFn::Sq1m { slope: 2, offset: 0 }), Primitive::CoShift]);
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn square_root_squares_out() {
        let r = OperatorExpr::word(Mode::Nat, &[Primitive::Diag(DiagFn::Sq1m { slope: 2, offset: 2 })]);
        let q = OperatorExpr::word(Mode::Nat, &[Primitive::Diag(DiagFn::QPow { slope: 2, offset: 2 })]);
        let expected = OperatorExpr::identity(&[Mode::Nat]).sub(&q).unwrap();
        assert_eq!(r.compose(&r).unwrap(), expected);
    }

    #[test]
    fn projection_evaluates_diagonal() {
        // p_1 q^{N} = q p_1
        let e =
            OperatorExpr::word(Mode::Nat, &[Primitive::Proj(1), Primitive::Diag(DiagFn::QPow { slope: 1, offset: 0 })]);
        let expected = OperatorExpr::word(Mode::Nat, &[Primitive::Proj(1)]).scale_qpow(1);
        assert_eq!(e, expected);
        // p_0 sqrt(1 - q^{2N}) = 0
        let z =
            OperatorExpr::word(Mode::Nat, &[Primitive::Proj(0), Primitive::Diag(DiagFn::Sq1m { slope: 2, offset: 0 })]);
        assert!(z.is_zero());
    }

    #[test]
    fn adjoint_is_involution_on_mixed_word() {
        let e = OperatorExpr::word(
            Mode::Nat,
            &[
                Primitive::Diag(DiagFn::QPow { slope: 1, offset: 1 }),
                Primitive::CoShift,
                Primitive::CoShift,
                Primitive::Shift,
                Primitive::Diag(DiagFn::Sq1m { slope: 4, offset: 4 }),
            ],
        )
        .scale(C64::new(0.0, 2.0));
        assert_eq!(e.adjoint().adjoint(), e);
    }

    #[test]
    fn q_power_offsets_are_scalars() {
        let a = OperatorExpr::word(Mode::Nat, &[Primitive::Diag(DiagFn::QPow { slope: 1, offset: 1 })]);
        let b = OperatorExpr::word(Mode::Nat, &[Primitive::Diag(DiagFn::QPow { slope: 1, offset: 0 })]).scale_qpow(1);
        assert_eq!(a, b);
    }

    #[test]
    fn q_zero_specialization() {
        let e = OperatorExpr::word(Mode::Nat, &[Primitive::Diag(DiagFn::QPow { slope: 2, offset: 0 })]);
        assert_eq!(e.at_q_zero().unwrap(), OperatorExpr::word(Mode::Nat, &[Primitive::Proj(0)]));
        let r =
            OperatorExpr::word(Mode::Nat, &[Primitive::Diag(DiagFn::Sq1m { slope: 2, offset: 2 }), Primitive::Shift]);
        assert_eq!(r.at_q_zero().unwrap(), OperatorExpr::word(Mode::Nat, &[Primitive::Shift]));
        assert!(r.at_q_zero().unwrap().is_q_free());
    }

    #[test]
    fn tensor_and_scalar() {
        let one = OperatorExpr::scalar(c(2.0));
        let s = OperatorExpr::word(Mode::Nat, &[Primitive::Shift]);
        assert_eq!(one.tensor(&s), s.scale(c(2.0)));
    }

    #[test]
    fn mode_mismatch_is_error() {
        let a = OperatorExpr::identity(&[Mode::Nat]);
        let b = OperatorExpr::identity(&[Mode::Int]);
        assert!(a.compose(&b).is_err());
        assert!(a.add(&b).is_err());
    }
}
