//! Sparse matrices of expressions on truncated spaces.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::expr::{OperatorExpr, PRUNE_TOL};
use super::space::{FactorKind, SpaceSpec};
use super::FockError;

/// Square sparse matrix in compressed-row form, acting on `space`.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncOp {
    space: SpaceSpec,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

/// Checks `q ∈ [0, 1)`.
pub fn check_q(q: f64) -> Result<(), FockError> {
    if (0.0..1.0).contains(&q) {
        Ok(())
    } else {
        Err(FockError::BadQ(q))
    }
}

type Triplet = (usize, usize, C64);

/// Matrix of `e` on `space` at parameter `q`.
pub fn materialize(e: &OperatorExpr, space: &SpaceSpec, q: f64) -> Result<TruncOp, FockError> {
    check_q(q)?;
    if e.n_factors() != space.len() {
        return Err(FockError::FactorCount { expected: space.len(), found: e.n_factors() });
    }
    if e.modes() != space.modes().as_slice() {
        return Err(FockError::ModeMismatch(e.modes().to_vec(), space.modes()));
    }
    let strides = space.strides();
    let terms: Vec<_> = e.terms().collect();
    let chunks: Result<Vec<Vec<Triplet>>, FockError> = terms
        .par_iter()
        .map(|(key, &coeff)| {
            let c = coeff * key.scalar.eval(q)?;
            // Per-factor action tables: column position -> (row position, weight).
            let mut tables = Vec::with_capacity(space.len());
            for (kind, w) in space.factors().iter().zip(&key.words) {
                let mut t = Vec::new();
                for pos in 0..kind.dim() {
                    if let Some((m, v)) = w.act(kind.label(pos), q, kind.mode())? {
                        if let Some(p) = kind.position(m) {
                            t.push((pos, p, v));
                        }
                    }
                }
                tables.push(t);
            }
            let mut out = Vec::new();
            let mut stack = vec![(0usize, 0usize, 0usize, c)];
            while let Some((f, row, col, v)) = stack.pop() {
                if f == tables.len() {
                    if v.norm() > PRUNE_TOL {
                        out.push((row, col, v));
                    }
                    continue;
                }
                for &(cp, rp, w) in tables[f].iter().rev() {
                    stack.push((f + 1, row + rp * strides[f], col + cp * strides[f], v * w));
                }
            }
            Ok(out)
        })
        .collect();
    Ok(TruncOp::from_triplets(space.clone(), chunks?.into_iter().flatten().collect()))
}

/// Largest entry of `materialize(a) - materialize(b)` with every factor
/// truncated at `d`; infinite when the factor modes differ.
pub fn entry_deviation(a: &OperatorExpr, b: &OperatorExpr, d: usize, q: f64) -> Result<f64, FockError> {
    if a.modes() != b.modes() {
        return Ok(f64::INFINITY);
    }
    let space = SpaceSpec::uniform(a.modes(), d)?;
    materialize(a, &space, q)?.max_abs_diff(&materialize(b, &space, q)?)
}

impl TruncOp {
    /// Builds from `(row, col, value)` triplets; duplicates are summed and
    /// entries with `|v| <= 1e-15` dropped.
    pub fn from_triplets(space: SpaceSpec, mut trip: Vec<(usize, usize, C64)>) -> TruncOp {
        let n = space.dim();
        trip.par_sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(trip.len());
        let mut vals = Vec::with_capacity(trip.len());
        let mut i = 0;
        while i < trip.len() {
            let (r, c, mut v) = trip[i];
            assert!(r < n && c < n, "entry ({r}, {c}) outside dimension {n}");
            i += 1;
            while i < trip.len() && trip[i].0 == r && trip[i].1 == c {
                v += trip[i].2;
                i += 1;
            }
            if v.norm() > PRUNE_TOL {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
            }
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        TruncOp { space, row_ptr, cols, vals }
    }

    pub fn zero(space: SpaceSpec) -> TruncOp {
        TruncOp::from_triplets(space, Vec::new())
    }

    pub fn identity(space: SpaceSpec) -> TruncOp {
        let n = space.dim();
        TruncOp::from_triplets(space, (0..n).map(|i| (i, i, C64::new(1.0, 0.0))).collect())
    }

    pub fn space(&self) -> &SpaceSpec {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Entries in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim())
            .flat_map(move |r| (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.cols[k], self.vals[k])))
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (self.cols[k], self.vals[k]))
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[span.clone()].binary_search(&c) {
            Ok(k) => self.vals[span.start + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    fn check_space(&self, other: &TruncOp) -> Result<(), FockError> {
        if self.space != other.space {
            return Err(FockError::SpaceMismatch(self.space.clone(), other.space.clone()));
        }
        Ok(())
    }

    pub fn add(&self, other: &TruncOp) -> Result<TruncOp, FockError> {
        self.check_space(other)?;
        Ok(TruncOp::from_triplets(self.space.clone(), self.entries().chain(other.entries()).collect()))
    }

    pub fn sub(&self, other: &TruncOp) -> Result<TruncOp, FockError> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: C64) -> TruncOp {
        TruncOp::from_triplets(self.space.clone(), self.entries().map(|(r, k, v)| (r, k, v * c)).collect())
    }

    /// Matrix product `self · other`.
    pub fn compose(&self, other: &TruncOp) -> Result<TruncOp, FockError> {
        self.check_space(other)?;
        let trip: Vec<(usize, usize, C64)> = (0..self.dim())
            .into_par_iter()
            .flat_map_iter(|r| {
                let mut acc: Vec<(usize, C64)> = Vec::new();
                for (k, a) in self.row(r) {
                    for (c, b) in other.row(k) {
                        acc.push((c, a * b));
                    }
                }
                acc.into_iter().map(move |(c, v)| (r, c, v))
            })
            .collect();
        Ok(TruncOp::from_triplets(self.space.clone(), trip))
    }

    pub fn adjoint(&self) -> TruncOp {
        TruncOp::from_triplets(self.space.clone(), self.entries().map(|(r, c, v)| (c, r, v.conj())).collect())
    }

    /// Kronecker product; factors of `other` are appended.
    pub fn tensor(&self, other: &TruncOp) -> TruncOp {
        let mut factors = self.space.factors().to_vec();
        factors.extend_from_slice(other.space.factors());
        let space = SpaceSpec::new(factors).expect("factors already validated");
        let d2 = other.dim();
        let mut trip = Vec::with_capacity(self.nnz() * other.nnz());
        for (r1, c1, v1) in self.entries() {
            for (r2, c2, v2) in other.entries() {
                trip.push((r1 * d2 + r2, c1 * d2 + c2, v1 * v2));
            }
        }
        TruncOp::from_triplets(space, trip)
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        (0..self.dim()).into_par_iter().map(|r| self.row(r).map(|(c, v)| v * x[c]).sum()).collect()
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for (r, c, v) in self.entries() {
            m[(r, c)] = v;
        }
        m
    }

    /// Largest absolute entry of `self - other`.
    pub fn max_abs_diff(&self, other: &TruncOp) -> Result<f64, FockError> {
        Ok(self.sub(other)?.entries().map(|(_, _, v)| v.norm()).fold(0.0, f64::max))
    }

    /// Largest singular value.
    pub fn op_norm(&self) -> f64 {
        let keep: Vec<usize> = (0..self.dim()).collect();
        sub_norm(self, &keep)
    }

    /// Norm of the compression to interior basis vectors: half-line indices
    /// `n <= D-1-band`, bilateral indices `|n| <= D-band`.
    pub fn interior_residual(&self, band: usize) -> Result<f64, FockError> {
        for &f in self.space.factors() {
            if band >= f.size_param() {
                return Err(FockError::BandTooLarge { band, factor: f });
            }
        }
        let keep = self.select(|f, n| match f {
            FactorKind::NatTrunc(d) => n <= (d - 1 - band) as i64,
            FactorKind::IntTrunc(d) => n.abs() <= (d - band) as i64,
        });
        Ok(sub_norm(self, &keep))
    }

    /// Norm of the compression to basis vectors with index `>= m` in each
    /// listed half-line factor.
    pub fn ess_norm_est(&self, m: usize, factors: &[usize]) -> Result<f64, FockError> {
        for &f in factors {
            let kind = *self
                .space
                .factors()
                .get(f)
                .ok_or(FockError::FactorCount { expected: f + 1, found: self.space.len() })?;
            match kind {
                FactorKind::NatTrunc(d) if m < d => {}
                FactorKind::NatTrunc(_) => return Err(FockError::TailOutOfRange { m, factor: kind }),
                FactorKind::IntTrunc(_) => return Err(FockError::NotHalfLine(f)),
            }
        }
        let fs = factors.to_vec();
        let keep = self.select_indexed(|f, n| !fs.contains(&f) || n >= m as i64);
        Ok(sub_norm(self, &keep))
    }

    fn select<F: Fn(FactorKind, i64) -> bool>(&self, pred: F) -> Vec<usize> {
        let kinds = self.space.factors().to_vec();
        self.select_indexed(|f, n| pred(kinds[f], n))
    }

    /// Global indices whose every factor label satisfies `pred(factor, label)`.
    fn select_indexed<F: Fn(usize, i64) -> bool>(&self, pred: F) -> Vec<usize> {
        let kinds = self.space.factors();
        let ok: Vec<Vec<bool>> =
            kinds.iter().enumerate().map(|(f, k)| (0..k.dim()).map(|p| pred(f, k.label(p))).collect()).collect();
        (0..self.dim()).filter(|&i| self.space.unravel(i).iter().enumerate().all(|(f, &p)| ok[f][p])).collect()
    }
}

/// Norm of the compression of `x` to the sorted index set `keep`.
fn sub_norm(x: &TruncOp, keep: &[usize]) -> f64 {
    let mut map = vec![usize::MAX; x.dim()];
    for (j, &i) in keep.iter().enumerate() {
        map[i] = j;
    }
    let n = keep.len();
    let mut row_ptr = vec![0usize; n + 1];
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    for (j, &i) in keep.iter().enumerate() {
        for (c, v) in x.row(i) {
            if map[c] != usize::MAX {
                cols.push(map[c]);
                vals.push(v);
            }
        }
        row_ptr[j + 1] = cols.len();
    }
    csr_norm(n, &row_ptr, &cols, &vals)
}

fn csr_norm(n: usize, row_ptr: &[usize], cols: &[usize], vals: &[C64]) -> f64 {
    if vals.is_empty() || n == 0 {
        return 0.0;
    }
    // Monomial matrices: the norm is the largest entry.
    let mut col_count = vec![0u8; n];
    let mut monomial = true;
    for r in 0..n {
        if row_ptr[r + 1] - row_ptr[r] > 1 {
            monomial = false;
            break;
        }
    }
    if monomial {
        for &c in cols {
            col_count[c] += 1;
            if col_count[c] > 1 {
                monomial = false;
                break;
            }
        }
    }
    if monomial {
        return vals.iter().map(|v| v.norm()).fold(0.0, f64::max);
    }
    let comps = components(n, row_ptr, cols);
    comps.par_iter().map(|(rows, cs)| block_norm(rows, cs, row_ptr, cols, vals)).reduce(|| 0.0, f64::max)
}

/// Largest block handled by a dense SVD.
const DENSE_LIMIT: usize = 400;

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Connected components of the bipartite row/column graph, as sorted
/// `(rows, cols)` lists; empty rows are skipped.
fn components(n: usize, row_ptr: &[usize], cols: &[usize]) -> Vec<(Vec<usize>, Vec<usize>)> {
    let mut parent: Vec<usize> = (0..2 * n).collect();
    for r in 0..n {
        for &c in &cols[row_ptr[r]..row_ptr[r + 1]] {
            let (a, b) = (find(&mut parent, r), find(&mut parent, n + c));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut slot = vec![usize::MAX; 2 * n];
    let mut out: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
    for r in (0..n).filter(|&r| row_ptr[r + 1] > row_ptr[r]) {
        let root = find(&mut parent, r);
        if slot[root] == usize::MAX {
            slot[root] = out.len();
            out.push((Vec::new(), Vec::new()));
        }
        out[slot[root]].0.push(r);
    }
    for c in 0..n {
        let root = find(&mut parent, n + c);
        if slot[root] != usize::MAX {
            out[slot[root]].1.push(c);
        }
    }
    out
}

fn block_norm(rows: &[usize], bcols: &[usize], row_ptr: &[usize], cols: &[usize], vals: &[C64]) -> f64 {
    let local = |c: usize| bcols.binary_search(&c).expect("column in block");
    if rows.len().max(bcols.len()) <= DENSE_LIMIT {
        let mut m = DMatrix::<C64>::zeros(rows.len(), bcols.len());
        for (i, &r) in rows.iter().enumerate() {
            for k in row_ptr[r]..row_ptr[r + 1] {
                m[(i, local(cols[k]))] += vals[k];
            }
        }
        return m.singular_values().max();
    }
    let mut ptr = vec![0usize; rows.len() + 1];
    let mut cs = Vec::new();
    let mut vs = Vec::new();
    for (i, &r) in rows.iter().enumerate() {
        for k in row_ptr[r]..row_ptr[r + 1] {
            cs.push(local(cols[k]));
            vs.push(vals[k]);
        }
        ptr[i + 1] = cs.len();
    }
    power_norm(rows.len(), bcols.len(), &ptr, &cs, &vs)
}

/// Power iteration on `x* x` from the normalized all-ones vector.
fn power_norm(nr: usize, nc: usize, row_ptr: &[usize], cols: &[usize], vals: &[C64]) -> f64 {
    let mut t_ptr = vec![0usize; nc + 1];
    for &c in cols {
        t_ptr[c + 1] += 1;
    }
    for i in 0..nc {
        t_ptr[i + 1] += t_ptr[i];
    }
    let mut fill = t_ptr.clone();
    let mut t_cols = vec![0usize; cols.len()];
    let mut t_vals = vec![C64::new(0.0, 0.0); cols.len()];
    for r in 0..nr {
        for k in row_ptr[r]..row_ptr[r + 1] {
            let c = cols[k];
            t_cols[fill[c]] = r;
            t_vals[fill[c]] = vals[k].conj();
            fill[c] += 1;
        }
    }
    let apply = |len: usize, ptr: &[usize], cs: &[usize], vs: &[C64], x: &[C64]| -> Vec<C64> {
        (0..len)
            .into_par_iter()
            .with_min_len(1024)
            .map(|r| (ptr[r]..ptr[r + 1]).map(|k| vs[k] * x[cs[k]]).sum())
            .collect()
    };
    let norm = |v: &[C64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let mut x = vec![C64::new(1.0 / (nc as f64).sqrt(), 0.0); nc];
    let mut est = 0.0f64;
    for _ in 0..20_000 {
        let y = apply(nr, row_ptr, cols, vals, &x);
        let ny = norm(&y);
        let z = apply(nc, &t_ptr, &t_cols, &t_vals, &y);
        let nz = norm(&z);
        if nz == 0.0 {
            return ny;
        }
        // ‖x*x v‖ / ‖x v‖ with ‖v‖ = 1 brackets the top singular value from below.
        let new = nz / ny;
        x = z.into_iter().map(|v| v / nz).collect();
        if (new - est).abs() <= 1e-14 * new {
            return new;
        }
        est = new;
    }
    est
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{DiagFn, Mode, Primitive};

    fn nat(d: usize) -> SpaceSpec {
        SpaceSpec::new(vec![FactorKind::NatTrunc(d)]).unwrap()
    }

    fn one() -> C64 {
        C64::new(1.0, 0.0)
    }

    #[test]
    fn shift_matrix() {
        let s = materialize(&OperatorExpr::word(Mode::Nat, &[Primitive::Shift]), &nat(3), 0.3).unwrap();
        assert_eq!(s.nnz(), 2);
        assert_eq!(s.get(0, 1), one());
        assert_eq!(s.get(1, 2), one());
    }

    #[test]
    fn q_zero_power_is_projection() {
        let e = OperatorExpr::word(Mode::Nat, &[Primitive::Diag(DiagFn::QPow { slope: 1, offset: 0 })]);
        let m = materialize(&e, &nat(3), 0.0).unwrap();
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(0, 0), one());
    }

    #[test]
    fn root_times_shift() {
        let e =
            OperatorExpr::word(Mode::Nat, &[Primitive::Diag(DiagFn::Sq1m { slope: 2, offset: 2 }), Primitive::Shift]);
        let m = materialize(&e, &nat(4), 0.5).unwrap();
        for n in 1..4usize {
            let want = (1.0 - 0.5f64.powi(2 * (n as i32 - 1) + 2)).sqrt();
            assert!((m.get(n - 1, n).re - want).abs() < 1e-15);
        }
        assert_eq!(m.nnz(), 3);
    }

    #[test]
    fn shift_cube() {
        let e = OperatorExpr::word(Mode::Nat, &[Primitive::Shift; 3]);
        let m = materialize(&e, &nat(5), 0.5).unwrap();
        assert_eq!(m.get(1, 4), one());
        assert_eq!(m.nnz(), 2);
        let s = materialize(&OperatorExpr::word(Mode::Nat, &[Primitive::Shift]), &nat(5), 0.5).unwrap();
        let s3 = s.compose(&s).unwrap().compose(&s).unwrap();
        assert_eq!(s3, m);
    }

    #[test]
    fn norms() {
        assert_eq!(TruncOp::zero(nat(4)).op_norm(), 0.0);
        let s = materialize(&OperatorExpr::word(Mode::Nat, &[Primitive::Shift]), &nat(8), 0.5).unwrap();
        assert!((s.op_norm() - 1.0).abs() < 1e-12);
        let d = OperatorExpr::word(Mode::Nat, &[Primitive::Diag(DiagFn::QPow { slope: 1, offset: 0 })]);
        assert!((materialize(&d, &nat(6), 0.5).unwrap().op_norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn power_iteration_matches_dense_svd() {
        let e = OperatorExpr::word(Mode::Nat, &[Primitive::Shift])
            .add(&OperatorExpr::word(Mode::Nat, &[Primitive::CoShift]))
            .unwrap()
            .add(&OperatorExpr::word(Mode::Nat, &[Primitive::Diag(DiagFn::QPow { slope: 1, offset: 0 })]))
            .unwrap();
        let m = materialize(&e, &nat(7), 0.6).unwrap();
        let svd = m.to_dense().singular_values();
        let top = svd.iter().cloned().fold(0.0, f64::max);
        assert!((m.op_norm() - top).abs() < 1e-10 * top);
    }

    #[test]
    fn tail_norms() {
        let d = OperatorExpr::word(Mode::Nat, &[Primitive::Diag(DiagFn::QPow { slope: 2, offset: 0 })]);
        let m = materialize(&d, &nat(10), 0.5).unwrap();
        assert!((m.ess_norm_est(3, &[0]).unwrap() - 0.015625).abs() < 1e-15);
        let r = OperatorExpr::word(Mode::Nat, &[Primitive::Diag(DiagFn::Sq1m { slope: 2, offset: 0 })]);
        let m = materialize(&r, &nat(40), 0.5).unwrap();
        assert!((m.ess_norm_est(2, &[0]).unwrap() - 1.0).abs() < 1e-2);
        assert!(m.ess_norm_est(40, &[0]).is_err());
        let id = TruncOp::identity(nat(5));
        assert_eq!(id.ess_norm_est(4, &[0]).unwrap(), 1.0);
    }

    #[test]
    fn interior_residual_of_shift_defects() {
        let s = materialize(&OperatorExpr::word(Mode::Nat, &[Primitive::Shift]), &nat(6), 0.5).unwrap();
        let sd = s.adjoint();
        let id = TruncOp::identity(nat(6));
        // Matrix-level S S* misses the top vector, S* S misses e_0.
        let top = s.compose(&sd).unwrap().sub(&id).unwrap();
        assert!((top.interior_residual(0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(top.interior_residual(1).unwrap(), 0.0);
        let bottom = sd.compose(&s).unwrap().sub(&id).unwrap();
        assert!((bottom.interior_residual(3).unwrap() - 1.0).abs() < 1e-15);
        assert!(top.interior_residual(6).is_err());
    }

    #[test]
    fn rejects_bad_inputs() {
        let e = OperatorExpr::identity(&[Mode::Nat, Mode::Nat]);
        assert!(materialize(&e, &nat(3), 0.5).is_err());
        assert!(materialize(&OperatorExpr::identity(&[Mode::Nat]), &nat(3), 1.0).is_err());
        let neg = OperatorExpr::word(Mode::Nat, &[Primitive::Diag(DiagFn::QPow { slope: -1, offset: 0 })]);
        assert!(materialize(&neg, &nat(3), 0.0).is_err());
    }
}
