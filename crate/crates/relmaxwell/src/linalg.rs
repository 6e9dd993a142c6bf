//! Thin helpers over faer for the dense and sparse operations used here.

use crate::{Error, Result};
use faer::linalg::solvers::Solve;
use faer::linalg::triangular_solve::{solve_lower_triangular_in_place, solve_upper_triangular_in_place};
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, MatRef, Par, Side};

pub type Sparse = SparseColMat<usize, f64>;

pub fn sparse(nrows: usize, ncols: usize, trips: &[(usize, usize, f64)]) -> Sparse {
    let t: Vec<Triplet<usize, usize, f64>> = trips.iter().map(|&(i, j, v)| Triplet::new(i, j, v)).collect();
    SparseColMat::try_new_from_triplets(nrows, ncols, &t).expect("valid triplets")
}

/// y = A x
pub fn spmv(a: &Sparse, x: &[f64]) -> Vec<f64> {
    assert_eq!(a.ncols(), x.len());
    let mut y = vec![0.0; a.nrows()];
    let cp = a.symbolic().col_ptr();
    let ri = a.symbolic().row_idx();
    let v = a.val();
    for j in 0..a.ncols() {
        let xj = x[j];
        if xj == 0.0 {
            continue;
        }
        for k in cp[j]..cp[j + 1] {
            y[ri[k]] += v[k] * xj;
        }
    }
    y
}

/// y = A^T x
pub fn spmv_t(a: &Sparse, x: &[f64]) -> Vec<f64> {
    assert_eq!(a.nrows(), x.len());
    let cp = a.symbolic().col_ptr();
    let ri = a.symbolic().row_idx();
    let v = a.val();
    (0..a.ncols()).map(|j| (cp[j]..cp[j + 1]).map(|k| v[k] * x[ri[k]]).sum()).collect()
}

/// Triplets (row, col, value) of a sparse matrix in column order.
pub fn triplets(a: &Sparse) -> Vec<(usize, usize, f64)> {
    let cp = a.symbolic().col_ptr();
    let ri = a.symbolic().row_idx();
    let v = a.val();
    let mut out = Vec::with_capacity(v.len());
    for j in 0..a.ncols() {
        for k in cp[j]..cp[j + 1] {
            out.push((ri[k], j, v[k]));
        }
    }
    out
}

pub fn to_dense(a: &Sparse) -> Mat<f64> {
    a.to_dense()
}

pub fn transpose(a: &Sparse) -> Sparse {
    a.transpose().to_col_major().expect("transpose")
}

/// Sparse A times dense B.
pub fn sp_mul(a: &Sparse, b: &Mat<f64>) -> Mat<f64> {
    a * b
}

pub fn sp_sp(a: &Sparse, b: &Sparse) -> Sparse {
    a * b
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// <x, y>_A
pub fn inner(a: &Sparse, x: &[f64], y: &[f64]) -> f64 {
    dot(&spmv(a, x), y)
}

pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn column(v: &[f64]) -> Mat<f64> {
    Mat::from_fn(v.len(), 1, |i, _| v[i])
}

pub fn col_vec(m: MatRef<'_, f64>, j: usize) -> Vec<f64> {
    (0..m.nrows()).map(|i| m[(i, j)]).collect()
}

pub fn frobenius(m: MatRef<'_, f64>) -> f64 {
    let mut s = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            s += m[(i, j)] * m[(i, j)];
        }
    }
    s.sqrt()
}

pub fn symmetrize(m: &mut Mat<f64>) {
    let n = m.nrows();
    for j in 0..n {
        for i in j + 1..n {
            let a = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = a;
            m[(j, i)] = a;
        }
    }
}

/// max |A - A^T| / max |A|
pub fn asymmetry(m: MatRef<'_, f64>) -> f64 {
    let n = m.nrows();
    let mut d: f64 = 0.0;
    let mut s: f64 = 0.0;
    for j in 0..n {
        for i in 0..n {
            d = d.max((m[(i, j)] - m[(j, i)]).abs());
            s = s.max(m[(i, j)].abs());
        }
    }
    if s == 0.0 {
        0.0
    } else {
        d / s
    }
}

/// Sparse symmetric positive definite factorisation.
#[derive(Debug, Clone)]
pub struct SparseSpd {
    llt: faer::sparse::linalg::solvers::Llt<usize, f64>,
    n: usize,
}

impl SparseSpd {
    pub fn new(a: &Sparse) -> Result<Self> {
        let llt = a
            .sp_cholesky(Side::Lower)
            .map_err(|e| Error::Factorisation(format!("sparse Cholesky: {e:?}")))?;
        Ok(SparseSpd { llt, n: a.nrows() })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        if self.n == 0 {
            return Vec::new();
        }
        let x = self.llt.solve(column(b));
        col_vec(x.as_ref(), 0)
    }

    pub fn solve_mat(&self, b: &Mat<f64>) -> Mat<f64> {
        if self.n == 0 {
            return Mat::zeros(0, b.ncols());
        }
        self.llt.solve(b)
    }
}

/// Dense symmetric positive definite factorisation.
#[derive(Debug)]
pub struct DenseSpd {
    l: Mat<f64>,
}

impl DenseSpd {
    pub fn new(a: &Mat<f64>) -> Result<Self> {
        let llt = a.llt(Side::Lower).map_err(|e| Error::Factorisation(format!("dense Cholesky: {e:?}")))?;
        Ok(DenseSpd { l: llt.L().to_owned() })
    }

    pub fn solve_mat(&self, b: &Mat<f64>) -> Mat<f64> {
        let mut x = b.clone();
        solve_lower_triangular_in_place(self.l.as_ref(), x.as_mut(), Par::Seq);
        solve_upper_triangular_in_place(self.l.transpose(), x.as_mut(), Par::Seq);
        x
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        col_vec(self.solve_mat(&column(b)).as_ref(), 0)
    }

    pub fn l(&self) -> MatRef<'_, f64> {
        self.l.as_ref()
    }
}

/// Eigenpairs of a symmetric matrix, ascending.
pub fn eigh(a: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    if a.nrows() == 0 {
        return Ok((Vec::new(), Mat::zeros(0, 0)));
    }
    let e = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Spectral(format!("eigensolver failed: {e:?}")))?;
    let s = e.S().column_vector();
    let vals: Vec<f64> = (0..a.nrows()).map(|i| s[i]).collect();
    Ok((vals, e.U().to_owned()))
}

/// Solves S v = lambda M v with M symmetric positive definite. Returns
/// ascending eigenvalues and M-orthonormal eigenvectors.
pub fn generalized_eigh(s: &Mat<f64>, m: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let n = s.nrows();
    if n == 0 {
        return Ok((Vec::new(), Mat::zeros(0, 0)));
    }
    let chol = DenseSpd::new(m)?;
    let mut x = s.clone();
    solve_lower_triangular_in_place(chol.l(), x.as_mut(), Par::Seq);
    let mut c = x.transpose().to_owned();
    solve_lower_triangular_in_place(chol.l(), c.as_mut(), Par::Seq);
    symmetrize(&mut c);
    let (vals, mut w) = eigh(&c)?;
    solve_upper_triangular_in_place(chol.l().transpose(), w.as_mut(), Par::Seq);
    Ok((vals, w))
}
