//! Self-expression coefficients and the similarity graph built from them.

use crate::numerics::{Matrix, Vector};

/// Sparse self-expression coefficients for a dataset of `N` points.
///
/// Column `i` holds the representation of point `i` in terms of the other
/// points; the diagonal is identically zero. Alongside the dense values
/// the selected index set of every column is kept, so support-based
/// metrics count what the pursuit actually picked rather than comparing
/// magnitudes against a threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientMatrix {
    values: Matrix,
    supports: Vec<Vec<usize>>,
}

impl CoefficientMatrix {
    pub fn zeros(num_points: usize) -> Self {
        Self {
            values: Matrix::zeros(num_points, num_points),
            supports: vec![Vec::new(); num_points],
        }
    }

    /// Rebuilds support sets from the nonzero pattern of a dense matrix,
    /// for coefficients loaded back from disk. The diagonal must be zero.
    pub fn from_dense(values: Matrix) -> Self {
        assert_eq!(values.nrows(), values.ncols(), "coefficient matrix is square");
        let n = values.nrows();
        let supports = (0..n)
            .map(|i| {
                let col = values.column(i);
                assert_eq!(col[i], 0.0, "self-expression has a zero diagonal");
                (0..n).filter(|&j| col[j] != 0.0).collect()
            })
            .collect();
        Self { values, supports }
    }

    /// Installs the representation of point `i`: its selected indices and
    /// the full-length coefficient column (zero off the support).
    pub fn set_column(&mut self, i: usize, support: Vec<usize>, column: Vector) {
        assert_eq!(column.len(), self.num_points());
        assert_eq!(column[i], 0.0, "self-expression has a zero diagonal");
        debug_assert!(support.iter().all(|&j| j != i));
        self.values.set_column(i, &column);
        self.supports[i] = support;
    }

    pub fn num_points(&self) -> usize {
        self.values.nrows()
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn support(&self, i: usize) -> &[usize] {
        &self.supports[i]
    }

    /// Total selected entries across all columns.
    pub fn total_support(&self) -> usize {
        self.supports.iter().map(Vec::len).sum()
    }
}

/// Symmetric nonnegative similarity weights with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityGraph {
    weights: Matrix,
}

impl SimilarityGraph {
    /// Wraps an explicit weight matrix; it must already be square,
    /// symmetric, nonnegative, and zero on the diagonal.
    pub fn from_weights(weights: Matrix) -> Self {
        assert_eq!(weights.nrows(), weights.ncols());
        for i in 0..weights.nrows() {
            assert_eq!(weights[(i, i)], 0.0, "no self-loops");
            for j in 0..i {
                assert!(weights[(i, j)] >= 0.0, "weights are nonnegative");
                assert_eq!(weights[(i, j)], weights[(j, i)], "weights are symmetric");
            }
        }
        Self { weights }
    }

    pub fn num_vertices(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }
}

/// Symmetrizes coefficients into similarity weights
/// `g_ij = |c_ij| + |c_ji|`.
///
/// Coefficients can be negative (points may enter a representation with
/// either sign), so magnitudes are combined; both orientations count
/// because either column citing the other is evidence the two points share
/// a subspace. The mirror entries are assigned from one computation, making
/// the result exactly symmetric.
pub fn build_similarity(c: &CoefficientMatrix) -> SimilarityGraph {
    let n = c.num_points();
    let v = c.values();
    let mut w = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..i {
            let g = v[(i, j)].abs() + v[(j, i)].abs();
            w[(i, j)] = g;
            w[(j, i)] = g;
        }
    }
    SimilarityGraph { weights: w }
}
