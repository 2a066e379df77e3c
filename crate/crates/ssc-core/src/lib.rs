//! Sparse subspace clustering with multi-neighbor greedy regression.
//!
//! The pipeline expresses every data point as a sparse combination of the
//! other points, selecting several neighbors per iteration instead of one,
//! and halts on a residual-ratio test. The self-expression coefficients
//! feed a similarity graph that is partitioned by normalized spectral
//! clustering.
//!
//! Modules:
//!
//! * [`numerics`] — dense matrix/vector plumbing: orthonormal bases,
//!   projections, minimum-norm least squares.
//! * [`datagen`] — semi-random unions of subspaces with controlled
//!   pairwise affinity, unit-sphere sampling, additive Gaussian noise.
//! * [`gomp`] — the greedy selection loop, its stopping rules, and
//!   per-iteration traces.
//! * [`graph`] — coefficient matrix and symmetric similarity graph.
//! * [`spectral`] — normalized Laplacian, spectral embedding, k-means.
//! * [`metrics`] — neighbor-recovery and clustering quality measures.
//! * [`bounds`] — closed-form recovery-probability calculators and the
//!   batch-allocation optimizer they are built on.

pub mod bounds;
pub mod datagen;
pub mod gomp;
pub mod graph;
pub mod metrics;
pub mod numerics;
pub mod seeds;
pub mod spectral;

pub use bounds::{BoundParams, BoundValue};
pub use datagen::{DataSet, SubspaceModel};
pub use gomp::{GompTrace, SparseRep, StopMode, StopPolicy};
pub use graph::{CoefficientMatrix, SimilarityGraph};
pub use metrics::MetricsReport;
pub use numerics::{Matrix, Vector};
pub use spectral::ClusterLabels;
