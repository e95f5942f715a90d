//! Kernel and cokernel dimensions of sparse block-structured operators.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::FredholmError;
use crate::fock::{FactorKind, TruncOp};

/// Largest connected block accepted by the dense decomposition.
pub const MAX_BLOCK: usize = 2000;

/// Counts for one truncation.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Defect {
    pub ker: usize,
    pub coker: usize,
    pub ker_discarded: usize,
    pub coker_discarded: usize,
    /// Smallest singular value above the rank threshold.
    pub min_nonzero_sv: f64,
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Row and column indices of one block.
type Block = (Vec<usize>, Vec<usize>);

/// Connected components of the bipartite graph of `x` that are not a
/// single entry of modulus at least `tol` alone in its row and column,
/// together with the moduli of those isolated entries.
fn blocks(x: &TruncOp, tol: f64) -> (Vec<Block>, Vec<f64>) {
    let n = x.dim();
    let mut row_count = vec![0u32; n];
    let mut col_count = vec![0u32; n];
    for (r, c, _) in x.entries() {
        row_count[r] += 1;
        col_count[c] += 1;
    }
    let mut parent: Vec<usize> = (0..2 * n).collect();
    let mut trivial_row = vec![false; n];
    let mut trivial_col = vec![false; n];
    let mut isolated = Vec::new();
    for (r, c, v) in x.entries() {
        if row_count[r] == 1 && col_count[c] == 1 && v.norm() >= tol {
            trivial_row[r] = true;
            trivial_col[c] = true;
            isolated.push(v.norm());
            continue;
        }
        let (a, b) = (find(&mut parent, r), find(&mut parent, n + c));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut slot = vec![usize::MAX; 2 * n];
    let mut out: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
    for i in 0..2 * n {
        if (i < n && trivial_row[i]) || (i >= n && trivial_col[i - n]) {
            continue;
        }
        let root = find(&mut parent, i);
        if slot[root] == usize::MAX {
            slot[root] = out.len();
            out.push((Vec::new(), Vec::new()));
        }
        let b = &mut out[slot[root]];
        if i < n {
            b.0.push(i);
        } else {
            b.1.push(i - n);
        }
    }
    (out, isolated)
}

/// Number of orthonormal columns of `basis` (over the index list `idx`)
/// spanning directions with at least `0.99` of their mass on `edge`.
fn edge_supported(basis: &DMatrix<C64>, idx: &[usize], edge: &dyn Fn(usize) -> bool) -> usize {
    if basis.ncols() == 0 {
        return 0;
    }
    let rows: Vec<usize> = (0..idx.len()).filter(|&i| edge(idx[i])).collect();
    if rows.is_empty() {
        return 0;
    }
    let b = basis.select_rows(rows.iter());
    let gram = b.adjoint() * &b;
    SymmetricEigen::new(gram).eigenvalues.iter().filter(|&&e| e >= 0.99).count()
}

/// Kernel and cokernel dimensions by singular-value thresholding at `tol`,
/// discarding directions concentrated within `band` of the top edge of a
/// half-line factor.
pub fn defect(x: &TruncOp, tol: f64, band: usize) -> Result<Defect, FredholmError> {
    let space = x.space().clone();
    let kinds = space.factors().to_vec();
    let edge = move |i: usize| {
        space.unravel(i).iter().zip(&kinds).any(|(&p, k)| match *k {
            FactorKind::NatTrunc(d) => p + band >= d - 1,
            FactorKind::IntTrunc(_) => false,
        })
    };
    let (blocks, isolated) = blocks(x, tol);
    let mut min_isolated = f64::INFINITY;
    for s in isolated {
        if s <= tol * 10.0 {
            return Err(FredholmError::RankAmbiguity(s));
        }
        min_isolated = min_isolated.min(s);
    }
    let parts: Result<Vec<Defect>, FredholmError> = blocks
        .par_iter()
        .map(|(rows, cols)| {
            let size = rows.len().max(cols.len());
            if size > MAX_BLOCK {
                return Err(FredholmError::BlockTooLarge(size));
            }
            let mut m = DMatrix::<C64>::zeros(rows.len(), cols.len());
            for (i, &r) in rows.iter().enumerate() {
                for (c, v) in x.row(r) {
                    let j = cols.binary_search(&c).expect("column in block");
                    m[(i, j)] = v;
                }
            }
            // Square up so that both singular-vector sets are complete.
            let dim = size;
            let mut sq = DMatrix::<C64>::zeros(dim, dim);
            sq.view_mut((0, 0), (rows.len(), cols.len())).copy_from(&m);
            let svd = sq.svd(true, true);
            let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
            let mut ker_cols = Vec::new();
            let mut coker_cols = Vec::new();
            let mut min_nz = f64::INFINITY;
            for (k, &s) in svd.singular_values.iter().enumerate() {
                if s >= tol / 10.0 && s <= tol * 10.0 {
                    return Err(FredholmError::RankAmbiguity(s));
                }
                if s < tol {
                    ker_cols.push(k);
                    coker_cols.push(k);
                } else {
                    min_nz = min_nz.min(s);
                }
            }
            // Padding rows/columns are not part of the space.
            let v = vt.adjoint();
            let kv = v.select_columns(ker_cols.iter()).rows(0, cols.len()).into_owned();
            let ku = u.select_columns(coker_cols.iter()).rows(0, rows.len()).into_owned();
            let kv = orthonormal_part(kv);
            let ku = orthonormal_part(ku);
            let kd = edge_supported(&kv, cols, &edge);
            let cd = edge_supported(&ku, rows, &edge);
            Ok(Defect {
                ker: kv.ncols() - kd,
                coker: ku.ncols() - cd,
                ker_discarded: kd,
                coker_discarded: cd,
                min_nonzero_sv: min_nz,
            })
        })
        .collect();
    Ok(parts?.into_iter().fold(Defect { min_nonzero_sv: min_isolated, ..Defect::default() }, |a, b| Defect {
        ker: a.ker + b.ker,
        coker: a.coker + b.coker,
        ker_discarded: a.ker_discarded + b.ker_discarded,
        coker_discarded: a.coker_discarded + b.coker_discarded,
        min_nonzero_sv: a.min_nonzero_sv.min(b.min_nonzero_sv),
    }))
}

/// Orthonormal basis of the column span; columns that were pure padding
/// vanish here.
fn orthonormal_part(m: DMatrix<C64>) -> DMatrix<C64> {
    if m.ncols() == 0 || m.nrows() == 0 {
        return DMatrix::zeros(m.nrows(), 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.unwrap();
    let keep: Vec<usize> = (0..svd.singular_values.len()).filter(|&k| svd.singular_values[k] > 0.5).collect();
    u.select_columns(keep.iter())
}
