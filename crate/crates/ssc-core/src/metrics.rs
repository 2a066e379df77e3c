//! Quality measures for neighbor recovery and clustering.
//!
//! Support-based measures (true-neighbor rate, neighbor counts) read the
//! index sets the pursuit actually selected, never magnitude thresholds.
//! Label accuracy is permutation-invariant: predicted cluster ids carry
//! no meaning, so the score is maximized over relabelings.

use crate::gomp::GompTrace;
use crate::graph::CoefficientMatrix;
use crate::numerics::{Matrix, Vector};
use crate::spectral::ClusterLabels;

/// Metric bundle for one clustering run. Fields that need ground truth or
/// trace instrumentation stay `None` when those inputs were absent.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub tnr: Option<f64>,
    /// The coefficient matrix had no nonzeros, so `tnr` is vacuously 1.
    pub tnr_vacuous: bool,
    pub anrn: f64,
    pub ccr: Option<f64>,
    pub per_neighbor_true_rate: Option<Vec<f64>>,
    pub mean_aod_per_index: Option<Vec<f64>>,
}

impl MetricsReport {
    pub fn evaluate(
        c: &CoefficientMatrix,
        pred: Option<&ClusterLabels>,
        truth: Option<&[usize]>,
    ) -> Self {
        Self {
            tnr: truth.map(|t| tnr(c, t)),
            tnr_vacuous: truth.is_some() && c.total_support() == 0,
            anrn: anrn(c),
            ccr: match (pred, truth) {
                (Some(p), Some(t)) => Some(ccr(p, t)),
                _ => None,
            },
            per_neighbor_true_rate: None,
            mean_aod_per_index: None,
        }
    }
}

/// True-neighbor rate: the fraction of selected entries that connect
/// points of the same cluster. A matrix with no selections scores 1 — no
/// wrong neighbor was picked; callers can tell the vacuous case apart by
/// the empty support.
pub fn tnr(c: &CoefficientMatrix, labels: &[usize]) -> f64 {
    assert_eq!(labels.len(), c.num_points(), "one label per point");
    let total = c.total_support();
    if total == 0 {
        return 1.0;
    }
    let intra: usize = (0..c.num_points())
        .map(|i| {
            c.support(i)
                .iter()
                .filter(|&&j| labels[j] == labels[i])
                .count()
        })
        .sum();
    intra as f64 / total as f64
}

/// Average number of recovered neighbors per point (mean ℓ₀ of the
/// columns).
pub fn anrn(c: &CoefficientMatrix) -> f64 {
    assert!(c.num_points() > 0, "empty coefficient matrix");
    c.total_support() as f64 / c.num_points() as f64
}

/// Correct clustering rate: the fraction of points whose predicted label
/// matches the truth under the best one-to-one relabeling.
///
/// Equal cluster counts up to 8 are scored by exhaustive permutation;
/// anything larger, or mismatched counts, goes through maximum-weight
/// assignment on the confusion matrix. Both routes agree where they
/// overlap.
pub fn ccr(pred: &ClusterLabels, truth: &[usize]) -> f64 {
    assert_eq!(pred.assignment.len(), truth.len(), "one prediction per point");
    let n = truth.len();
    assert!(n > 0, "no points to score");

    let (t_dense, lt) = densify(truth);
    let (p_dense, lp) = densify(&pred.assignment);
    let mut confusion = vec![vec![0u64; lt]; lp];
    for (p, t) in p_dense.iter().zip(&t_dense) {
        confusion[*p][*t] += 1;
    }

    let matched = if lp == lt && lp <= 8 {
        best_permutation_weight(&confusion)
    } else {
        best_assignment_weight(&confusion)
    };
    matched as f64 / n as f64
}

/// Remaps arbitrary labels to 0..k, first-seen order.
fn densify(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut map = std::collections::HashMap::new();
    let dense = labels
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect();
    let k = map.len();
    (dense, k)
}

/// Maximum total over permutations matching row i of the (square)
/// confusion matrix to column perm[i]. Heap's algorithm, fine up to 8!.
fn best_permutation_weight(confusion: &[Vec<u64>]) -> u64 {
    let k = confusion.len();
    let mut perm: Vec<usize> = (0..k).collect();
    let mut counters = vec![0usize; k];
    let score =
        |perm: &[usize]| -> u64 { perm.iter().enumerate().map(|(i, &j)| confusion[i][j]).sum() };
    let mut best = score(&perm);
    let mut i = 0;
    while i < k {
        if counters[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(counters[i], i);
            }
            best = best.max(score(&perm));
            counters[i] += 1;
            i = 0;
        } else {
            counters[i] = 0;
            i += 1;
        }
    }
    best
}

/// Maximum-weight one-to-one assignment between rows and columns of a
/// (possibly rectangular) nonnegative matrix, via the Hungarian algorithm
/// with potentials on the square zero-padded cost matrix.
fn best_assignment_weight(weights: &[Vec<u64>]) -> u64 {
    let rows = weights.len();
    let cols = weights.first().map_or(0, Vec::len);
    let n = rows.max(cols);
    if n == 0 {
        return 0;
    }
    let peak = weights.iter().flatten().copied().max().unwrap_or(0) as i64;
    let cost = |i: usize, j: usize| -> i64 {
        if i < rows && j < cols {
            peak - weights[i][j] as i64
        } else {
            peak
        }
    };

    let inf = i64::MAX / 4;
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut matched_row = vec![0usize; n + 1]; // row matched to column j, 1-based
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        matched_row[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut total = 0u64;
    for j in 1..=n {
        let i = matched_row[j];
        if i >= 1 && i - 1 < rows && j - 1 < cols {
            total += weights[i - 1][j - 1];
        }
    }
    total
}

/// Angle of deviation of `r` from the subspace spanned by the orthonormal
/// columns of `basis`: `atan(‖r_⊥‖ / ‖r_∥‖)`, in `[0, π/2]`. A zero
/// residual reports angle 0.
pub fn aod(r: &Vector, basis: &Matrix) -> f64 {
    let parallel = basis * (basis.transpose() * r);
    let perp = r - &parallel;
    perp.norm().atan2(parallel.norm())
}

/// For each neighbor position `k` (flattened across iterations, selection
/// order), the fraction of runs whose `k`-th kept neighbor belongs to the
/// regressed point's cluster. Runs that kept fewer than `k+1` neighbors
/// drop out of that position's denominator.
pub fn per_neighbor_true_rate(traces: &[GompTrace], labels: &[usize]) -> Vec<f64> {
    let kept: Vec<(usize, Vec<usize>)> = traces
        .iter()
        .map(|t| (t.point_index, t.kept_selected()))
        .collect();
    let max_len = kept.iter().map(|(_, s)| s.len()).max().unwrap_or(0);
    (0..max_len)
        .map(|k| {
            let mut num = 0usize;
            let mut den = 0usize;
            for (i, sel) in &kept {
                if let Some(&j) = sel.get(k) {
                    den += 1;
                    num += usize::from(labels[j] == labels[*i]);
                }
            }
            num as f64 / den as f64
        })
        .collect()
}

/// Mean angle of deviation at the moment the `k`-th neighbor was selected,
/// averaged over instrumented runs. Neighbors picked in the same batch
/// share one residual, so the curve is a staircase with steps of the batch
/// size.
pub fn mean_aod_per_index(traces: &[GompTrace]) -> Vec<f64> {
    let max_len = traces
        .iter()
        .map(|t| t.kept_selected().len())
        .max()
        .unwrap_or(0);
    let mut out = Vec::new();
    for k in 0..max_len {
        let mut sum = 0.0;
        let mut count = 0usize;
        for t in traces {
            if let Some(a) = t.aod_at_selection(k) {
                sum += a;
                count += 1;
            }
        }
        if count == 0 {
            break;
        }
        out.push(sum / count as f64);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gomp::{HaltReason, IterationRecord, ResidualState};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn coeff_with_supports(n: usize, supports: &[&[usize]]) -> CoefficientMatrix {
        let mut c = CoefficientMatrix::zeros(n);
        for (i, support) in supports.iter().enumerate() {
            let mut col = Vector::zeros(n);
            for &j in *support {
                col[j] = 1.0 / (support.len() as f64).sqrt();
            }
            c.set_column(i, support.to_vec(), col);
        }
        c
    }

    #[test]
    fn tnr_is_one_for_block_diagonal_supports() {
        let labels = vec![1, 1, 2, 2];
        let c = coeff_with_supports(4, &[&[1], &[0], &[3], &[2]]);
        assert_eq!(tnr(&c, &labels), 1.0);
    }

    #[test]
    fn tnr_counts_intra_fraction() {
        // 10 selected entries; the supports of points 2, 3, and 4 cross
        // cluster lines once each, leaving 7 intra-cluster.
        let labels = vec![1, 1, 1, 2, 2];
        let c = coeff_with_supports(
            5,
            &[&[1, 2], &[0, 2], &[0, 1, 3], &[4, 0], &[0]],
        );
        assert_abs_diff_eq!(tnr(&c, &labels), 0.7, epsilon = 1e-15);
    }

    #[test]
    fn tnr_of_empty_matrix_is_vacuously_one() {
        let c = CoefficientMatrix::zeros(3);
        let labels = vec![1, 2, 3];
        assert_eq!(tnr(&c, &labels), 1.0);
        let report = MetricsReport::evaluate(&c, None, Some(&labels));
        assert!(report.tnr_vacuous);
        assert_eq!(report.tnr, Some(1.0));
    }

    #[test]
    fn anrn_averages_support_sizes() {
        let c = coeff_with_supports(3, &[&[1, 2], &[0], &[0, 1]]);
        assert_abs_diff_eq!(anrn(&c), 5.0 / 3.0, epsilon = 1e-15);
        // Every point selecting all six others averages to exactly 6.
        let all: Vec<Vec<usize>> = (0..7)
            .map(|i| (0..7).filter(|&j| j != i).collect())
            .collect();
        let refs: Vec<&[usize]> = all.iter().map(|v| v.as_slice()).collect();
        let six = coeff_with_supports(7, &refs);
        assert_eq!(anrn(&six), 6.0);
    }

    fn labels_from(ids: &[usize]) -> ClusterLabels {
        ClusterLabels::new(ids.to_vec())
    }

    #[test]
    fn ccr_is_permutation_invariant() {
        let truth = vec![1, 1, 2, 2, 3, 3];
        let pred = labels_from(&[3, 3, 1, 1, 2, 2]);
        assert_eq!(ccr(&pred, &truth), 1.0);
    }

    #[test]
    fn ccr_counts_one_mislabeled_point() {
        let truth = vec![1, 1, 1, 1, 1, 2, 2, 2, 2, 2];
        let pred = labels_from(&[2, 2, 2, 2, 1, 1, 1, 1, 1, 1]);
        assert_abs_diff_eq!(ccr(&pred, &truth), 0.9, epsilon = 1e-15);
    }

    #[test]
    fn ccr_handles_mismatched_cluster_counts() {
        // Two predicted clusters against three true: the best injection
        // matches 2+2 of 6 points... pred {1,1,1} covers truth cluster 1
        // (2 points of it), pred {2,2,2} covers truth cluster 2 fully.
        let truth = vec![1, 1, 2, 2, 3, 3];
        let pred = labels_from(&[1, 1, 2, 2, 2, 1]);
        // Confusion: pred1 → (2,0,1), pred2 → (0,2,1). Best: 2 + 2 = 4.
        assert_abs_diff_eq!(ccr(&pred, &truth), 4.0 / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn ccr_is_total_for_single_cluster_prediction() {
        let truth = vec![1, 1, 2, 2];
        let pred = labels_from(&[1, 1, 1, 1]);
        assert_eq!(ccr(&pred, &truth), 0.5);
    }

    proptest! {
        /// The assignment route must agree with brute-force permutations
        /// wherever both apply.
        #[test]
        fn assignment_matches_exhaustive(
            points in proptest::collection::vec((0usize..4, 0usize..4), 1..40)
        ) {
            let mut confusion = vec![vec![0u64; 4]; 4];
            for (p, t) in &points {
                confusion[*p][*t] += 1;
            }
            prop_assert_eq!(
                best_permutation_weight(&confusion),
                best_assignment_weight(&confusion)
            );
        }
    }

    #[test]
    fn aod_of_in_subspace_residual_is_zero() {
        let basis = Matrix::from_row_slice(3, 1, &[1.0, 0.0, 0.0]);
        let r = Vector::from_column_slice(&[2.0, 0.0, 0.0]);
        assert_abs_diff_eq!(aod(&r, &basis), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn aod_of_orthogonal_residual_is_right_angle() {
        let basis = Matrix::from_row_slice(3, 1, &[1.0, 0.0, 0.0]);
        let r = Vector::from_column_slice(&[0.0, 3.0, 0.0]);
        assert_abs_diff_eq!(aod(&r, &basis), std::f64::consts::FRAC_PI_2, epsilon = 1e-12);
    }

    #[test]
    fn aod_of_diagonal_residual_is_forty_five_degrees() {
        let basis = Matrix::from_row_slice(2, 1, &[1.0, 0.0]);
        let r = Vector::from_column_slice(&[0.5, 0.5]);
        assert_abs_diff_eq!(aod(&r, &basis), std::f64::consts::FRAC_PI_4, epsilon = 1e-12);
    }

    #[test]
    fn aod_of_zero_residual_is_zero_by_convention() {
        let basis = Matrix::from_row_slice(2, 1, &[1.0, 0.0]);
        let r = Vector::zeros(2);
        assert_eq!(aod(&r, &basis), 0.0);
    }

    fn trace_with(point: usize, batches: &[&[usize]], aods: &[f64]) -> GompTrace {
        let state = |a: f64| ResidualState {
            norm: 1.0,
            parallel_norm: Some(1.0),
            perpendicular_norm: Some(1.0),
            aod: Some(a),
        };
        GompTrace {
            point_index: point,
            initial: state(aods[0]),
            iterations: batches
                .iter()
                .enumerate()
                .map(|(m, b)| IterationRecord {
                    selected: b.to_vec(),
                    state: state(aods[m + 1]),
                    delta_norm: 0.1,
                })
                .collect(),
            halted_by: HaltReason::FixedM,
            discarded_last_batch: false,
            forced_first_batch: false,
        }
    }

    #[test]
    fn per_neighbor_rate_flattens_iteration_major() {
        let labels = vec![1, 1, 1, 2, 2, 2];
        // Point 0 picks (1, 3) then (4,): true, false, false.
        // Point 5 picks (4, 3) then (0,): true, true, false.
        let traces = vec![
            trace_with(0, &[&[1, 3], &[4]], &[0.0, 0.1, 0.2]),
            trace_with(5, &[&[4, 3], &[0]], &[0.0, 0.1, 0.2]),
        ];
        let rates = per_neighbor_true_rate(&traces, &labels);
        assert_eq!(rates, vec![1.0, 0.5, 0.0]);
    }

    #[test]
    fn per_neighbor_rate_shrinks_denominator_for_short_runs() {
        let labels = vec![1, 1, 2, 2];
        let traces = vec![
            trace_with(0, &[&[1]], &[0.0, 0.1]),
            trace_with(2, &[&[3], &[1]], &[0.0, 0.1, 0.2]),
        ];
        let rates = per_neighbor_true_rate(&traces, &labels);
        assert_eq!(rates, vec![1.0, 0.0]);
    }

    #[test]
    fn mean_aod_is_a_staircase_over_batches() {
        let traces = vec![
            trace_with(0, &[&[1, 2], &[3, 4]], &[0.1, 0.3, 0.9]),
            trace_with(1, &[&[2, 3], &[4, 5]], &[0.2, 0.5, 0.9]),
        ];
        let means = mean_aod_per_index(&traces);
        // Neighbors 0-1 see the initial residual, neighbors 2-3 the one
        // after the first batch.
        assert_eq!(means.len(), 4);
        assert_abs_diff_eq!(means[0], 0.15, epsilon = 1e-15);
        assert_eq!(means[0], means[1]);
        assert_abs_diff_eq!(means[2], 0.4, epsilon = 1e-15);
        assert_eq!(means[2], means[3]);
    }
}
