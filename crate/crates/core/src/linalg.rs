//! Small dense pointwise linear algebra on complex matrices.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::grid::{Chart, ScalarField, C64, ZERO};

pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Singular values in descending order.
pub fn singular_values(a: &CMat) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = a.clone().singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.partial_cmp(x).unwrap());
    s
}

/// Number of singular values above `tol`.
pub fn rank(a: &CMat, tol: f64) -> usize {
    singular_values(a).iter().filter(|&&s| s > tol).count()
}

/// Least-norm least-squares solution of A x = b; singular values at or below
/// `rtol·σ_max` are dropped. Returns (x, residual norm, kernel dimension).
pub fn min_norm_solve(a: &CMat, b: &CVec, rtol: f64) -> (CVec, f64, usize) {
    let n = a.ncols();
    if n == 0 {
        return (CVec::zeros(0), b.norm(), 0);
    }
    let svd = a.clone().svd(true, true);
    let u = svd.u.as_ref().unwrap();
    let vt = svd.v_t.as_ref().unwrap();
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cut = rtol * smax.max(f64::MIN_POSITIVE);
    let mut x = CVec::zeros(n);
    let mut r = 0;
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > cut {
            r += 1;
            let coef = u.column(k).dotc(b) / s;
            for j in 0..n {
                x[j] += vt[(k, j)].conj() * coef;
            }
        }
    }
    let res = (a * &x - b).norm();
    (x, res, n - r)
}

/// Orthonormal basis (columns) of the null space of A.
pub fn null_space(a: &CMat, tol: f64) -> CMat {
    let (m, n) = a.shape();
    if n == 0 {
        return CMat::zeros(0, 0);
    }
    // Pad to square so the SVD returns a complete right basis.
    let rows = m.max(n);
    let mut sq = CMat::zeros(rows, n);
    sq.view_mut((0, 0), (m, n)).copy_from(a);
    let svd = sq.svd(false, true);
    let vt = svd.v_t.unwrap();
    let cols: Vec<CVec> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= tol)
        .map(|(k, _)| vt.row(k).adjoint())
        .collect();
    if cols.is_empty() {
        return CMat::zeros(n, 0);
    }
    CMat::from_columns(&cols)
}

/// Orthonormal basis of the column span of A.
pub fn column_basis(a: &CMat, tol: f64) -> CMat {
    if a.ncols() == 0 {
        return CMat::zeros(a.nrows(), 0);
    }
    let svd = a.clone().svd(true, false);
    let u = svd.u.unwrap();
    let cols: Vec<CVec> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > tol)
        .map(|(k, _)| u.column(k).into_owned())
        .collect();
    if cols.is_empty() {
        return CMat::zeros(a.nrows(), 0);
    }
    CMat::from_columns(&cols)
}

/// Eigenvalues (ascending) and eigenvectors of a Hermitian matrix.
pub fn hermitian_eigen(h: &CMat) -> (Vec<f64>, CMat) {
    let n = h.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let sym = (h + h.adjoint()) * C64::new(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vecs = CMat::from_columns(&order.iter().map(|&k| eig.eigenvectors.column(k).into_owned()).collect::<Vec<_>>());
    (vals, vecs)
}

pub fn hermitian_eigenvalues(h: &CMat) -> Vec<f64> {
    hermitian_eigen(h).0
}

/// Determinant by partial-pivot elimination (sizes here are at most 6).
pub fn det(a: &CMat) -> C64 {
    let n = a.nrows();
    if n == 0 {
        return C64::new(1.0, 0.0);
    }
    let mut m = a.clone();
    let mut d = C64::new(1.0, 0.0);
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| m[(i, c)].norm().partial_cmp(&m[(j, c)].norm()).unwrap()).unwrap();
        if m[(p, c)] == ZERO {
            return ZERO;
        }
        if p != c {
            m.swap_rows(p, c);
            d = -d;
        }
        let piv = m[(c, c)];
        d *= piv;
        for r in c + 1..n {
            let f = m[(r, c)] / piv;
            if f != ZERO {
                for k in c..n {
                    let v = m[(c, k)];
                    m[(r, k)] -= f * v;
                }
            }
        }
    }
    d
}

/// Submatrix with the given rows and columns.
pub fn select(a: &CMat, rows: &[usize], cols: &[usize]) -> CMat {
    CMat::from_fn(rows.len(), cols.len(), |i, j| a[(rows[i], cols[j])])
}

/// Orthonormal basis of the column span of a real matrix.
pub fn real_column_basis(a: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    if a.ncols() == 0 || a.nrows() == 0 {
        return DMatrix::zeros(a.nrows(), 0);
    }
    let svd = a.clone().svd(true, false);
    let u = svd.u.unwrap();
    let cols: Vec<DVector<f64>> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > tol)
        .map(|(k, _)| u.column(k).into_owned())
        .collect();
    if cols.is_empty() {
        return DMatrix::zeros(a.nrows(), 0);
    }
    DMatrix::from_columns(&cols)
}

/// A matrix at every grid point of a chart.
#[derive(Debug, Clone)]
pub struct MatrixField {
    chart: Arc<Chart>,
    rows: usize,
    cols: usize,
    data: Vec<CMat>,
}

impl MatrixField {
    pub fn new(chart: &Arc<Chart>, data: Vec<CMat>) -> Result<Self> {
        if data.len() != chart.len() {
            return Err(Error::Shape(format!("{} matrices for {} grid points", data.len(), chart.len())));
        }
        let (rows, cols) = data.first().map(|m| m.shape()).unwrap_or((0, 0));
        if data.iter().any(|m| m.shape() != (rows, cols)) {
            return Err(Error::Shape("matrices of differing shapes".into()));
        }
        Ok(MatrixField { chart: chart.clone(), rows, cols, data })
    }

    pub fn from_fn(chart: &Arc<Chart>, f: impl Fn(usize) -> CMat) -> Result<Self> {
        Self::new(chart, (0..chart.len()).map(f).collect())
    }

    pub fn identity(chart: &Arc<Chart>, n: usize) -> Self {
        MatrixField { chart: chart.clone(), rows: n, cols: n, data: vec![CMat::identity(n, n); chart.len()] }
    }

    /// Matrix of scalar fields, `entries[i][j]`.
    pub fn from_entries(entries: &[Vec<ScalarField>]) -> Result<Self> {
        let chart = entries
            .first()
            .and_then(|r| r.first())
            .map(|f| f.chart().clone())
            .ok_or_else(|| Error::Shape("empty matrix field".into()))?;
        let rows = entries.len();
        let cols = entries[0].len();
        if entries.iter().any(|r| r.len() != cols) {
            return Err(Error::Shape("ragged matrix field".into()));
        }
        Self::from_fn(&chart, |p| CMat::from_fn(rows, cols, |i, j| entries[i][j].at(p)))
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn at(&self, p: usize) -> &CMat {
        &self.data[p]
    }

    pub fn matrices(&self) -> &[CMat] {
        &self.data
    }

    /// Entry (i, j) as a scalar field.
    pub fn entry(&self, i: usize, j: usize) -> ScalarField {
        ScalarField::from_vec(&self.chart, self.data.iter().map(|m| m[(i, j)]).collect())
            .expect("entry field has the chart's shape")
    }

    pub fn map(&self, f: impl Fn(usize, &CMat) -> CMat) -> Result<Self> {
        Self::new(&self.chart, self.data.iter().enumerate().map(|(p, m)| f(p, m)).collect())
    }

    /// Largest entrywise deviation from another field.
    pub fn max_diff(&self, other: &MatrixField) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn min_norm_picks_smallest_solution() {
        let a = CMat::from_row_slice(1, 2, &[c(1.0), c(1.0)]);
        let b = CVec::from_vec(vec![c(2.0)]);
        let (x, res, k) = min_norm_solve(&a, &b, 1e-12);
        assert!(res < 1e-14);
        assert_eq!(k, 1);
        assert!((x[0] - c(1.0)).norm() < 1e-14 && (x[1] - c(1.0)).norm() < 1e-14);
    }

    #[test]
    fn null_space_of_wide_matrix() {
        let a = CMat::from_row_slice(1, 3, &[c(1.0), c(0.0), c(0.0)]);
        let ns = null_space(&a, 1e-10);
        assert_eq!(ns.ncols(), 2);
        assert!((&a * &ns).norm() < 1e-14);
    }

    #[test]
    fn determinant_matches_product_of_eigenvalues() {
        let a = CMat::from_row_slice(3, 3, &[c(2.0), c(1.0), c(0.0), c(1.0), c(3.0), c(1.0), c(0.0), c(1.0), c(4.0)]);
        let ev: f64 = hermitian_eigenvalues(&a).iter().product();
        assert!((det(&a) - c(ev)).norm() < 1e-12);
    }
}
