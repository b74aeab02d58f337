//! Sparse matrices in compressed row storage, direct factorizations backed
//! by `faer`, and the optional Krylov path (CG / BiCGSTAB with a
//! Gauss–Seidel preconditioner).

use crate::{Error, Result};
use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMatRef, SymbolicSparseColMat};
use faer::Side;

/// Sparse matrix, compressed row storage. Rows are sorted by column index
/// and contain no duplicates.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Build from (row, col, value) triplets; duplicate entries are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        order.sort_unstable_by_key(|&k| (triplets[k].0, triplets[k].1));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        for &k in &order {
            let (r, c, v) = triplets[k];
            assert!(r < nrows && c < ncols, "triplet ({r},{c}) out of bounds");
            if let Some(&last) = indices.last() {
                if indptr[r + 1] > 0 && last == c && indptr[r + 1] == indices.len() {
                    *values.last_mut().unwrap() += v;
                    continue;
                }
            }
            indices.push(c);
            values.push(v);
            indptr[r + 1] = indices.len();
        }
        // forward-fill row pointers of empty rows
        for i in 1..=nrows {
            if indptr[i] < indptr[i - 1] {
                indptr[i] = indptr[i - 1];
            }
        }
        CsrMatrix {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let lo = self.indptr[i];
        let hi = self.indptr[i + 1];
        (&self.indices[lo..hi], &self.values[lo..hi])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    /// Add `v` to entry (i, j), which must exist in the pattern.
    pub fn add_at(&mut self, i: usize, j: usize, v: f64) {
        let lo = self.indptr[i];
        let hi = self.indptr[i + 1];
        match self.indices[lo..hi].binary_search(&j) {
            Ok(k) => self.values[lo + k] += v,
            Err(_) => panic!("entry ({i},{j}) not present in sparsity pattern"),
        }
    }

    /// Same pattern, all values zero.
    pub fn pattern_like(&self) -> CsrMatrix {
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            indptr: self.indptr.clone(),
            indices: self.indices.clone(),
            values: vec![0.0; self.values.len()],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            let mut acc = 0.0;
            for (&j, &v) in cols.iter().zip(vals) {
                acc += v * x[j];
            }
            y[i] = acc;
        }
    }

    /// max |a_ij - a_ji| over the pattern, relative to the largest entry.
    pub fn symmetry_deviation(&self) -> f64 {
        let scale = self
            .values
            .iter()
            .fold(0.0f64, |m, &v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        let mut dev = 0.0f64;
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                dev = dev.max((v - self.get(j, i)).abs());
            }
        }
        dev / scale
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.values {
            *v *= s;
        }
    }

    /// quadratic form x^T A y
    pub fn quadratic_form(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            let mut row_acc = 0.0;
            for (&j, &v) in cols.iter().zip(vals) {
                row_acc += v * y[j];
            }
            acc += x[i] * row_acc;
        }
        acc
    }
}

fn csc_from_symmetric_csr(a: &CsrMatrix) -> (SymbolicSparseColMat<usize>, Vec<f64>) {
    // for a symmetric matrix the CSR arrays are a valid CSC layout
    debug_assert_eq!(a.nrows, a.ncols);
    let sym = SymbolicSparseColMat::new_checked(
        a.nrows,
        a.ncols,
        a.indptr.clone(),
        None,
        a.indices.clone(),
    );
    (sym, a.values.clone())
}

/// Sparse Cholesky factorization of a symmetric positive definite matrix.
pub struct CholeskySolver {
    n: usize,
    factor: faer::sparse::linalg::solvers::Llt<usize, f64>,
}

impl CholeskySolver {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::InvalidArgument("matrix must be square".into()));
        }
        let (sym, vals) = csc_from_symmetric_csr(a);
        let mat = faer::sparse::SparseColMat::new(sym, vals);
        let factor = mat
            .sp_cholesky(Side::Lower)
            .map_err(|e| Error::Solver(format!("sparse Cholesky failed: {e:?}")))?;
        Ok(CholeskySolver {
            n: a.nrows(),
            factor,
        })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let rhs = faer::Mat::<f64>::from_fn(self.n, 1, |i, _| b[i]);
        let x = self.factor.solve(&rhs);
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }
}

/// Sparse LU with a reusable symbolic factorization: the pattern is fixed at
/// construction, numeric refactorization accepts new values.
pub struct SparseLu {
    n: usize,
    symbolic_mat: SymbolicSparseColMat<usize>,
    symbolic_lu: faer::sparse::linalg::solvers::SymbolicLu<usize>,
    factor: Option<faer::sparse::linalg::solvers::Lu<usize, f64>>,
}

impl SparseLu {
    /// `col_ptr`/`row_idx` describe the CSC pattern of the square system.
    pub fn from_pattern(n: usize, col_ptr: Vec<usize>, row_idx: Vec<usize>) -> Result<Self> {
        let symbolic_mat = SymbolicSparseColMat::new_checked(n, n, col_ptr, None, row_idx);
        let symbolic_lu = faer::sparse::linalg::solvers::SymbolicLu::try_new(symbolic_mat.as_ref())
            .map_err(|e| Error::Solver(format!("symbolic LU failed: {e:?}")))?;
        Ok(SparseLu {
            n,
            symbolic_mat,
            symbolic_lu,
            factor: None,
        })
    }

    /// Numeric refactorization; `values` must match the CSC pattern order.
    pub fn refactor(&mut self, values: &[f64]) -> Result<()> {
        let mat = SparseColMatRef::new(self.symbolic_mat.as_ref(), values);
        let lu = faer::sparse::linalg::solvers::Lu::try_new_with_symbolic(self.symbolic_lu.clone(), mat)
            .map_err(|e| Error::Solver(format!("numeric LU failed: {e:?}")))?;
        self.factor = Some(lu);
        Ok(())
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let factor = self
            .factor
            .as_ref()
            .ok_or_else(|| Error::Solver("LU not factorized".into()))?;
        assert_eq!(b.len(), self.n);
        let rhs = faer::Mat::<f64>::from_fn(self.n, 1, |i, _| b[i]);
        let x = factor.solve(&rhs);
        Ok((0..self.n).map(|i| x[(i, 0)]).collect())
    }
}

fn gauss_seidel_apply(a: &CsrMatrix, r: &[f64], z: &mut [f64]) {
    // symmetric Gauss-Seidel: z = (D+U)^{-1} D (D+L)^{-1} r
    // (symmetry keeps it admissible as a CG preconditioner)
    let n = a.nrows();
    for i in 0..n {
        let (cols, vals) = a.row(i);
        let mut acc = r[i];
        let mut diag = 0.0;
        for (&j, &v) in cols.iter().zip(vals) {
            if j < i {
                acc -= v * z[j];
            } else if j == i {
                diag = v;
            }
        }
        z[i] = if diag != 0.0 { acc / diag } else { acc };
    }
    for i in (0..n).rev() {
        let (cols, vals) = a.row(i);
        let mut acc = 0.0;
        let mut diag = 0.0;
        for (&j, &v) in cols.iter().zip(vals) {
            if j > i {
                acc += v * z[j];
            } else if j == i {
                diag = v;
            }
        }
        if diag != 0.0 {
            z[i] -= acc / diag;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Preconditioned conjugate gradients for SPD systems.
/// Returns the solution and the iteration count.
pub fn cg(
    a: &CsrMatrix,
    b: &[f64],
    tol_rel: f64,
    max_iter: usize,
    precondition: bool,
) -> Result<(Vec<f64>, usize)> {
    let n = b.len();
    let bnorm = norm(b).max(f64::MIN_POSITIVE);
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    let apply_prec = |r: &[f64], z: &mut [f64]| {
        if precondition {
            gauss_seidel_apply(a, r, z);
        } else {
            z.copy_from_slice(r);
        }
    };
    apply_prec(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for it in 0..max_iter {
        if norm(&r) <= tol_rel * bnorm {
            return Ok((x, it));
        }
        let ap = a.matvec(&p);
        let denom = dot(&p, &ap);
        if denom <= 0.0 {
            return Err(Error::Solver(format!(
                "CG breakdown: p^T A p = {denom:e} (matrix not SPD?)"
            )));
        }
        let alpha = rz / denom;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        apply_prec(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    if norm(&r) <= tol_rel * bnorm {
        Ok((x, max_iter))
    } else {
        Err(Error::Solver(format!(
            "CG did not reach tolerance {tol_rel:e} within {max_iter} iterations"
        )))
    }
}

/// BiCGSTAB with an optional Gauss–Seidel preconditioner, for the
/// nonsymmetric coupled systems of the Newton iteration.
pub fn bicgstab(
    a: &CsrMatrix,
    b: &[f64],
    tol_rel: f64,
    max_iter: usize,
    precondition: bool,
) -> Result<(Vec<f64>, usize)> {
    let n = b.len();
    let bnorm = norm(b).max(f64::MIN_POSITIVE);
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let r0 = r.clone();
    let mut rho = 1.0;
    let mut alpha = 1.0;
    let mut omega = 1.0;
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut phat = vec![0.0; n];
    let mut shat = vec![0.0; n];
    let apply_prec = |r: &[f64], z: &mut [f64]| {
        if precondition {
            gauss_seidel_apply(a, r, z);
        } else {
            z.copy_from_slice(r);
        }
    };
    for it in 0..max_iter {
        if norm(&r) <= tol_rel * bnorm {
            return Ok((x, it));
        }
        let rho_new = dot(&r0, &r);
        if rho_new.abs() < 1e-300 {
            return Err(Error::Solver("BiCGSTAB breakdown (rho = 0)".into()));
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        apply_prec(&p, &mut phat);
        v = a.matvec(&phat);
        alpha = rho / dot(&r0, &v);
        let s: Vec<f64> = (0..n).map(|i| r[i] - alpha * v[i]).collect();
        if norm(&s) <= tol_rel * bnorm {
            for i in 0..n {
                x[i] += alpha * phat[i];
            }
            return Ok((x, it + 1));
        }
        apply_prec(&s, &mut shat);
        let t = a.matvec(&shat);
        let tt = dot(&t, &t);
        if tt == 0.0 {
            return Err(Error::Solver("BiCGSTAB breakdown (t = 0)".into()));
        }
        omega = dot(&t, &s) / tt;
        for i in 0..n {
            x[i] += alpha * phat[i] + omega * shat[i];
            r[i] = s[i] - omega * t[i];
        }
        if omega == 0.0 {
            return Err(Error::Solver("BiCGSTAB breakdown (omega = 0)".into()));
        }
    }
    if norm(&r) <= tol_rel * bnorm {
        Ok((x, max_iter))
    } else {
        Err(Error::Solver(format!(
            "BiCGSTAB did not reach tolerance {tol_rel:e} within {max_iter} iterations"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> CsrMatrix {
        let mut t = vec![];
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, &t)
    }

    #[test]
    fn triplets_sum_duplicates() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 0, 2.0), (1, 0, 5.0)]);
        assert_eq!(a.get(0, 0), 3.0);
        assert_eq!(a.get(1, 0), 5.0);
        assert_eq!(a.get(1, 1), 0.0);
        assert_eq!(a.nnz(), 2);
    }

    #[test]
    fn matvec_matches_dense() {
        let a = CsrMatrix::from_triplets(2, 3, &[(0, 0, 1.0), (0, 2, 2.0), (1, 1, -1.0)]);
        let y = a.matvec(&[1.0, 2.0, 3.0]);
        assert_eq!(y, vec![7.0, -2.0]);
    }

    #[test]
    fn cholesky_solves_laplacian() {
        let n = 50;
        let a = laplacian_1d(n);
        let xtrue: Vec<f64> = (0..n).map(|i| (i as f64 * 0.1).sin()).collect();
        let b = a.matvec(&xtrue);
        let solver = CholeskySolver::new(&a).unwrap();
        let x = solver.solve(&b);
        for i in 0..n {
            assert!((x[i] - xtrue[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn lu_refactor_and_solve() {
        // nonsymmetric 3x3 with fixed pattern, two different value sets
        // CSC pattern: col 0 rows {0,1}, col 1 rows {0,1,2}, col 2 rows {1,2}
        let col_ptr = vec![0, 2, 5, 7];
        let row_idx = vec![0, 1, 0, 1, 2, 1, 2];
        let mut lu = SparseLu::from_pattern(3, col_ptr, row_idx).unwrap();
        // A = [[2,1,0],[1,3,1],[0,1,2]] in CSC order
        lu.refactor(&[2.0, 1.0, 1.0, 3.0, 1.0, 1.0, 2.0]).unwrap();
        let x = lu.solve(&[3.0, 5.0, 3.0]).unwrap();
        for (xi, want) in x.iter().zip([1.0, 1.0, 1.0]) {
            assert!((xi - want).abs() < 1e-12);
        }
        // refactor with different values, same pattern
        lu.refactor(&[4.0, 1.0, 2.0, 5.0, 1.0, 1.0, 3.0]).unwrap();
        let x = lu.solve(&[6.0, 7.0, 4.0]).unwrap();
        for (xi, want) in x.iter().zip([1.0, 1.0, 1.0]) {
            assert!((xi - want).abs() < 1e-12);
        }
    }

    #[test]
    fn cg_and_bicgstab_reach_tolerance() {
        let n = 80;
        let a = laplacian_1d(n);
        let xtrue: Vec<f64> = (0..n).map(|i| 1.0 + (i % 5) as f64).collect();
        let b = a.matvec(&xtrue);
        let bnorm = norm(&b);
        for which in ["cg", "bicgstab"] {
            let (x, _its) = match which {
                "cg" => cg(&a, &b, 1e-12, 10 * n, true).unwrap(),
                _ => bicgstab(&a, &b, 1e-12, 10 * n, true).unwrap(),
            };
            let ax = a.matvec(&x);
            let res = norm(&(0..n).map(|i| ax[i] - b[i]).collect::<Vec<_>>());
            assert!(res <= 1e-10 * bnorm, "{which}: residual {res:e}");
        }
    }

    #[test]
    fn symmetry_deviation_detects_asymmetry() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (1, 0, 1.0 + 1e-6)]);
        assert!(a.symmetry_deviation() > 1e-7);
        let b = CsrMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (1, 0, 1.0)]);
        assert!(b.symmetry_deviation() < 1e-15);
    }
}
