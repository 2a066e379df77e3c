//! Synthetic unions of subspaces with controlled pairwise affinity.
//!
//! The generator follows the semi-random model: each subspace is fixed,
//! points are drawn uniformly from the intersection of the subspace with
//! the unit sphere, and noise is an isotropic Gaussian with total variance
//! σ² spread over the ambient coordinates.
//!
//! [`make_equiaffinity_subspaces`] builds `L` equal-dimension subspaces
//! whose pairwise affinity all equal a requested value ρ. Basis vector `j`
//! of subspace `k` is `√ρ·e_j + √(1−ρ)·f_k⁽ʲ⁾` where the `e_j` and all
//! `f_k⁽ʲ⁾` come from one orthonormal frame of `d(L+1)` directions, drawn
//! Haar-uniformly so nothing is axis-aligned. Cross inner products reduce
//! to `ρ·δ_jj'`, giving affinity exactly ρ for every pair.

use crate::numerics::{Matrix, OrthonormalSet, Vector};
use crate::seeds;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DatagenError {
    #[error(
        "ambient dimension n = {n} is too small: building {l} subspaces of dimension {d} \
         with equal pairwise affinity needs d(L+1) = {needed} orthonormal directions, \
         so n >= {needed} is required"
    )]
    AmbientTooSmall { n: usize, d: usize, l: usize, needed: usize },
    #[error("affinity must lie in [0, 1], got {0}")]
    AffinityOutOfRange(f64),
    #[error("noise level must be nonnegative, got {0}")]
    NegativeSigma(f64),
    #[error("expected {expected} per-cluster counts, got {got}")]
    CountsMismatch { expected: usize, got: usize },
    #[error("affinity is undefined for a zero-dimensional basis")]
    ZeroDimensionalBasis,
    #[error("bases live in different ambient dimensions ({a} vs {b})")]
    AmbientMismatch { a: usize, b: usize },
}

/// A union of linear subspaces, each given by an orthonormal basis.
#[derive(Debug, Clone)]
pub struct SubspaceModel {
    ambient_dim: usize,
    bases: Vec<Matrix>,
}

impl SubspaceModel {
    /// Wraps explicit bases. Each must be `n × d_k` with orthonormal
    /// columns; orthonormality is the caller's responsibility.
    pub fn new(ambient_dim: usize, bases: Vec<Matrix>) -> Result<Self, DatagenError> {
        for b in &bases {
            if b.ncols() == 0 {
                return Err(DatagenError::ZeroDimensionalBasis);
            }
            if b.nrows() != ambient_dim {
                return Err(DatagenError::AmbientMismatch { a: ambient_dim, b: b.nrows() });
            }
        }
        Ok(Self { ambient_dim, bases })
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn num_subspaces(&self) -> usize {
        self.bases.len()
    }

    pub fn basis(&self, k: usize) -> &Matrix {
        &self.bases[k]
    }

    pub fn bases(&self) -> &[Matrix] {
        &self.bases
    }

    pub fn dims(&self) -> Vec<usize> {
        self.bases.iter().map(Matrix::ncols).collect()
    }
}

/// Points drawn from a subspace union, one per row, with optional
/// ground-truth labels and pre-noise coordinates.
#[derive(Debug, Clone)]
pub struct DataSet {
    /// `N × n`, one point per row.
    pub points: Matrix,
    /// 1-based cluster ids, parallel to the rows.
    pub labels: Option<Vec<usize>>,
    /// Points before noise was added, when known.
    pub noiseless: Option<Matrix>,
    /// Noise level σ the points carry (0 when clean).
    pub sigma: f64,
}

impl DataSet {
    pub fn from_points(points: Matrix, labels: Option<Vec<usize>>) -> Self {
        if let Some(l) = &labels {
            assert_eq!(l.len(), points.nrows(), "one label per point");
        }
        Self { points, labels, noiseless: None, sigma: 0.0 }
    }

    pub fn num_points(&self) -> usize {
        self.points.nrows()
    }

    pub fn ambient_dim(&self) -> usize {
        self.points.ncols()
    }

    /// Row `i` as a column vector.
    pub fn point(&self, i: usize) -> Vector {
        self.points.row(i).transpose()
    }
}

/// Affinity `‖U_kᵀ U_l‖_F / √min(d_k, d_l)` between two subspaces given by
/// orthonormal bases. Equals 1 for identical subspaces, 0 for orthogonal
/// ones, and is symmetric in its arguments.
pub fn affinity(u_k: &Matrix, u_l: &Matrix) -> Result<f64, DatagenError> {
    if u_k.ncols() == 0 || u_l.ncols() == 0 {
        return Err(DatagenError::ZeroDimensionalBasis);
    }
    if u_k.nrows() != u_l.nrows() {
        return Err(DatagenError::AmbientMismatch { a: u_k.nrows(), b: u_l.nrows() });
    }
    let cross = u_k.transpose() * u_l;
    let d_min = u_k.ncols().min(u_l.ncols()) as f64;
    Ok(cross.norm() / d_min.sqrt())
}

/// Draws a Haar-uniform orthonormal frame of `cols` directions in Rⁿ.
fn random_frame<R: Rng>(n: usize, cols: usize, rng: &mut R) -> OrthonormalSet {
    let mut set = OrthonormalSet::new(n);
    while set.len() < cols {
        let g = Vector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        // A fresh Gaussian column is dependent only with probability zero;
        // the loop re-draws in that case rather than failing.
        set.push(&g, 1e-8 * (n as f64).sqrt());
    }
    set
}

/// Builds `l` subspaces of dimension `d` in Rⁿ whose pairwise affinities
/// all equal `rho`, in a uniformly random orientation.
pub fn make_equiaffinity_subspaces<R: Rng>(
    n: usize,
    d: usize,
    l: usize,
    rho: f64,
    rng: &mut R,
) -> Result<SubspaceModel, DatagenError> {
    if !(0.0..=1.0).contains(&rho) || !rho.is_finite() {
        return Err(DatagenError::AffinityOutOfRange(rho));
    }
    let needed = d * (l + 1);
    if n < needed {
        return Err(DatagenError::AmbientTooSmall { n, d, l, needed });
    }
    let frame = random_frame(n, needed, rng).to_matrix();
    let cos_a = rho.sqrt();
    let sin_a = (1.0 - rho).sqrt();
    let bases = (0..l)
        .map(|k| {
            Matrix::from_fn(n, d, |i, j| {
                cos_a * frame[(i, j)] + sin_a * frame[(i, d * (k + 1) + j)]
            })
        })
        .collect();
    SubspaceModel::new(n, bases)
}

/// Samples `counts[k]` unit-norm points uniformly from subspace `k` of the
/// model. Rows are grouped by cluster and labeled with 1-based ids.
///
/// Each cluster draws from its own stream derived from `rng`, so clusters
/// could be filled concurrently without changing the result.
pub fn sample_points<R: Rng>(
    model: &SubspaceModel,
    counts: &[usize],
    rng: &mut R,
) -> Result<DataSet, DatagenError> {
    if counts.len() != model.num_subspaces() {
        return Err(DatagenError::CountsMismatch {
            expected: model.num_subspaces(),
            got: counts.len(),
        });
    }
    let base: u64 = rng.random();
    let n = model.ambient_dim();
    let total: usize = counts.iter().sum();
    let mut points = Matrix::zeros(total, n);
    let mut labels = Vec::with_capacity(total);
    let mut row = 0;
    for (k, &count) in counts.iter().enumerate() {
        let mut cluster_rng = seeds::stream(base, &[k as u64]);
        let basis = model.basis(k);
        let d = basis.ncols();
        for _ in 0..count {
            let mut a = Vector::zeros(d);
            let mut norm = 0.0;
            while norm == 0.0 {
                a = Vector::from_fn(d, |_, _| cluster_rng.sample::<f64, _>(StandardNormal));
                norm = a.norm();
            }
            a /= norm;
            let x = basis * a;
            points.row_mut(row).copy_from(&x.transpose());
            labels.push(k + 1);
            row += 1;
        }
    }
    Ok(DataSet { points, labels: Some(labels), noiseless: None, sigma: 0.0 })
}

/// Adds isotropic Gaussian noise `e ~ N(0, (σ²/n) I)` to every point, so
/// `E‖e‖² = σ²` regardless of the ambient dimension. The input points are
/// kept in `noiseless`. With `sigma = 0` the points are returned unchanged.
pub fn add_noise<R: Rng>(ds: &DataSet, sigma: f64, rng: &mut R) -> Result<DataSet, DatagenError> {
    if sigma < 0.0 || !sigma.is_finite() {
        return Err(DatagenError::NegativeSigma(sigma));
    }
    let mut out = ds.clone();
    out.noiseless = Some(ds.points.clone());
    out.sigma = sigma;
    if sigma > 0.0 {
        let scale = sigma / (ds.ambient_dim() as f64).sqrt();
        for i in 0..out.points.nrows() {
            for j in 0..out.points.ncols() {
                out.points[(i, j)] += scale * rng.sample::<f64, _>(StandardNormal);
            }
        }
    }
    Ok(out)
}
