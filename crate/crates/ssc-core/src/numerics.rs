//! Dense linear-algebra plumbing shared by the pipeline stages.
//!
//! Everything operates on `f64` matrices and vectors from [`nalgebra`].
//! The three entry points are [`orthonormal_basis`], [`project`], and
//! [`least_squares`]; the incremental [`OrthonormalSet`] backs the greedy
//! regression loop, which grows a basis a few columns at a time.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Dense column-major matrix of `f64`.
pub type Matrix = DMatrix<f64>;
/// Dense column vector of `f64`.
pub type Vector = DVector<f64>;

/// Relative tolerance below which a direction counts as numerically
/// dependent on the ones already accepted.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

#[derive(Debug, Error, PartialEq)]
pub enum NumericsError {
    #[error("dimension mismatch: expected length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// An orthonormal set of vectors grown one column at a time.
///
/// Columns are orthonormalized with two-pass modified Gram-Schmidt, which
/// keeps `QᵀQ = I` to well below `1e-12` even for nearly dependent input.
#[derive(Debug, Clone)]
pub struct OrthonormalSet {
    dim: usize,
    cols: Vec<Vector>,
}

impl OrthonormalSet {
    pub fn new(dim: usize) -> Self {
        Self { dim, cols: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.cols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cols.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Orthogonalizes `v` against the set and appends the normalized
    /// remainder. Returns `false` (set unchanged) when the remainder's
    /// norm is at most `drop_tol`, i.e. `v` adds nothing new.
    pub fn push(&mut self, v: &Vector, drop_tol: f64) -> bool {
        assert_eq!(v.len(), self.dim, "column length must match set dimension");
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &self.cols {
                let c = q.dot(&w);
                w.axpy(-c, q, 1.0);
            }
        }
        let norm = w.norm();
        if norm <= drop_tol {
            return false;
        }
        w /= norm;
        self.cols.push(w);
        true
    }

    /// Component of `v` inside the span: `Q Qᵀ v`.
    pub fn project_onto(&self, v: &Vector) -> Vector {
        let mut out = Vector::zeros(self.dim);
        for q in &self.cols {
            out.axpy(q.dot(v), q, 1.0);
        }
        out
    }

    /// Component of `v` orthogonal to the span: `v − Q Qᵀ v`.
    pub fn project_out(&self, v: &Vector) -> Vector {
        let mut w = v.clone();
        for q in &self.cols {
            let c = q.dot(&w);
            w.axpy(-c, q, 1.0);
        }
        w
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_columns(&self.cols.iter().cloned().collect::<Vec<_>>())
    }
}

/// Orthonormal basis for the numerical column space of `a`.
///
/// Columns are processed left to right; a column whose component outside
/// the span accepted so far has norm at most `rank_tol` times the largest
/// input column norm is dropped. The result has `QᵀQ = I` and spans the
/// kept columns. An all-zero or empty input yields a matrix with zero
/// columns.
pub fn orthonormal_basis(a: &Matrix, rank_tol: f64) -> Matrix {
    let scale = (0..a.ncols())
        .map(|j| a.column(j).norm())
        .fold(0.0_f64, f64::max);
    let mut set = OrthonormalSet::new(a.nrows());
    if scale > 0.0 {
        let drop_tol = rank_tol * scale;
        for j in 0..a.ncols() {
            set.push(&a.column(j).into_owned(), drop_tol);
        }
    }
    if set.is_empty() {
        Matrix::zeros(a.nrows(), 0)
    } else {
        set.to_matrix()
    }
}

/// Orthogonal projection `Q Qᵀ v` of `v` onto the span of the columns of
/// `q`, which must be orthonormal.
pub fn project(v: &Vector, q: &Matrix) -> Result<Vector, NumericsError> {
    if v.len() != q.nrows() {
        return Err(NumericsError::DimensionMismatch { expected: q.nrows(), got: v.len() });
    }
    Ok(q * (q.transpose() * v))
}

/// Minimum-norm least-squares solution of `min ‖A c − b‖₂`.
///
/// Computed from the SVD with singular values at most `rank_tol` times
/// the largest treated as zero, so rank-deficient systems get the
/// pseudoinverse solution (duplicate columns share weight evenly).
pub fn least_squares(a: &Matrix, b: &Vector, rank_tol: f64) -> Result<Vector, NumericsError> {
    if b.len() != a.nrows() {
        return Err(NumericsError::DimensionMismatch { expected: a.nrows(), got: b.len() });
    }
    if a.ncols() == 0 {
        return Ok(Vector::zeros(0));
    }
    let svd = a.clone().svd(true, true);
    let sigma_max = svd.singular_values.max();
    if sigma_max <= 0.0 {
        return Ok(Vector::zeros(a.ncols()));
    }
    let sol = svd
        .solve(b, rank_tol * sigma_max)
        .expect("SVD was computed with both factors");
    Ok(Vector::from_column_slice(sol.as_slice()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn orthonormal_basis_keeps_identity() {
        let a = Matrix::identity(3, 3);
        let q = orthonormal_basis(&a, DEFAULT_RANK_TOL);
        assert_eq!(q, Matrix::identity(3, 3));
    }

    #[test]
    fn orthonormal_basis_collapses_rank_one() {
        let a = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        let q = orthonormal_basis(&a, DEFAULT_RANK_TOL);
        assert_eq!(q.ncols(), 1);
        let s = 5.0_f64.sqrt();
        assert_abs_diff_eq!(q[(0, 0)], 1.0 / s, epsilon = 1e-15);
        assert_abs_diff_eq!(q[(1, 0)], 2.0 / s, epsilon = 1e-15);
    }

    #[test]
    fn orthonormal_basis_of_zero_matrix_is_empty() {
        let a = Matrix::zeros(4, 3);
        let q = orthonormal_basis(&a, DEFAULT_RANK_TOL);
        assert_eq!(q.ncols(), 0);
    }

    #[test]
    fn project_onto_coordinate_plane() {
        let v = Vector::from_column_slice(&[1.0, 2.0, 3.0]);
        let q = Matrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let p = project(&v, &q).unwrap();
        assert_eq!(p.as_slice(), &[1.0, 2.0, 0.0]);
    }

    #[test]
    fn project_rejects_dimension_mismatch() {
        let v = Vector::from_column_slice(&[1.0, 2.0]);
        let q = Matrix::identity(3, 3);
        assert_eq!(
            project(&v, &q),
            Err(NumericsError::DimensionMismatch { expected: 3, got: 2 })
        );
    }

    #[test]
    fn least_squares_matches_normal_equations() {
        // Overdetermined full-rank system solved by hand through AᵀA c = Aᵀb:
        // AᵀA = [[2,1],[1,2]], Aᵀb = (3,4), c = (2/3, 5/3).
        let a = Matrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let b = Vector::from_column_slice(&[1.0, 2.0, 2.0]);
        let c = least_squares(&a, &b, DEFAULT_RANK_TOL).unwrap();
        assert_abs_diff_eq!(c[0], 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c[1], 5.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn least_squares_splits_duplicate_columns() {
        let a = Matrix::from_row_slice(3, 2, &[1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        let b = Vector::from_column_slice(&[1.0, 0.0, 0.0]);
        let c = least_squares(&a, &b, DEFAULT_RANK_TOL).unwrap();
        assert_abs_diff_eq!(c[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(c[1], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn least_squares_rejects_dimension_mismatch() {
        let a = Matrix::identity(3, 2);
        let b = Vector::from_column_slice(&[1.0, 2.0]);
        assert!(least_squares(&a, &b, DEFAULT_RANK_TOL).is_err());
    }

    fn entries(n: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-1.0..1.0_f64, n)
    }

    proptest! {
        #[test]
        fn basis_is_orthonormal(data in entries(40), cols in 1usize..5) {
            let a = Matrix::from_column_slice(8, cols, &data[..8 * cols]);
            let q = orthonormal_basis(&a, DEFAULT_RANK_TOL);
            let gram = q.transpose() * &q;
            let eye = Matrix::identity(q.ncols(), q.ncols());
            prop_assert!((gram - eye).abs().max() <= 1e-10);
        }

        #[test]
        fn projection_is_idempotent(data in entries(40), v in entries(8), cols in 1usize..5) {
            let a = Matrix::from_column_slice(8, cols, &data[..8 * cols]);
            let q = orthonormal_basis(&a, DEFAULT_RANK_TOL);
            let v = Vector::from_column_slice(&v);
            let once = project(&v, &q).unwrap();
            let twice = project(&once, &q).unwrap();
            prop_assert!((&once - &twice).norm() <= 1e-10 * (1.0 + once.norm()));
        }

        #[test]
        fn residual_is_orthogonal_to_columns(data in entries(40), rhs in entries(8), cols in 1usize..5) {
            let a = Matrix::from_column_slice(8, cols, &data[..8 * cols]);
            let b = Vector::from_column_slice(&rhs);
            let c = least_squares(&a, &b, DEFAULT_RANK_TOL).unwrap();
            let r = &b - &a * &c;
            for j in 0..a.ncols() {
                let col = a.column(j);
                prop_assert!(col.dot(&r).abs() <= 1e-8 * (1.0 + col.norm() * b.norm()));
            }
        }
    }
}
