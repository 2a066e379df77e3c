//! Normalized spectral clustering of the similarity graph.
//!
//! The pipeline is the standard one: symmetric normalized Laplacian,
//! eigenvectors of the `L` smallest eigenvalues as an embedding, row
//! normalization, then k-means on the embedded points. Everything is
//! deterministic given the seed: eigenvalues are sorted with index
//! tie-breaks, eigenvector signs follow a fixed convention, and k-means
//! restarts draw from pre-derived streams.

use crate::graph::SimilarityGraph;
use crate::numerics::{Matrix, Vector};
use crate::seeds;
use rand::Rng;

/// A hard clustering: 1-based ids, one per point, with every cluster in
/// `1..=num_clusters` nonempty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterLabels {
    pub assignment: Vec<usize>,
    pub num_clusters: usize,
}

impl ClusterLabels {
    pub fn new(assignment: Vec<usize>) -> Self {
        let num_clusters = assignment.iter().copied().max().unwrap_or(0);
        let mut seen = vec![false; num_clusters];
        for &id in &assignment {
            assert!(id >= 1, "cluster ids are 1-based");
            seen[id - 1] = true;
        }
        assert!(seen.iter().all(|&s| s), "cluster ids must be contiguous from 1");
        Self { assignment, num_clusters }
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }
}

/// Symmetric normalized Laplacian `L = I − D^{−1/2} G D^{−1/2}`.
///
/// An isolated vertex (zero degree) gets `D^{−1/2} = 0` by convention, so
/// its row and column are zero except for the 1 on the diagonal. Mirror
/// entries are assigned from one computation; the result is exactly
/// symmetric.
pub fn normalized_laplacian(g: &SimilarityGraph) -> Matrix {
    let w = g.weights();
    let n = g.num_vertices();
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|i| {
            let degree: f64 = w.row(i).sum();
            if degree > 0.0 {
                1.0 / degree.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let mut l = Matrix::identity(n, n);
    for i in 0..n {
        for j in 0..i {
            let v = -w[(i, j)] * inv_sqrt[i] * inv_sqrt[j];
            l[(i, j)] = v;
            l[(j, i)] = v;
        }
    }
    l
}

/// Eigendecomposition of a symmetric matrix with eigenvalues ascending
/// (ties broken by original position) and each eigenvector's sign fixed
/// so its first nonzero component is positive.
pub fn symmetric_eigen_sorted(m: &Matrix) -> (Vec<f64>, Matrix) {
    let n = m.nrows();
    let se = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        se.eigenvalues[a]
            .partial_cmp(&se.eigenvalues[b])
            .unwrap()
            .then(a.cmp(&b))
    });
    let values: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = se.eigenvectors.column(src);
        let scale = col.amax();
        let flip = col
            .iter()
            .find(|x| x.abs() > 1e-12 * scale)
            .map_or(1.0, |&x| if x < 0.0 { -1.0 } else { 1.0 });
        for i in 0..n {
            vectors[(i, dst)] = flip * col[i];
        }
    }
    (values, vectors)
}

/// Rows of the `k` lowest eigenvectors of the Laplacian, normalized to
/// unit length. Rows that are numerically zero are left at zero rather
/// than divided.
pub fn spectral_embed(laplacian: &Matrix, k: usize) -> Matrix {
    let n = laplacian.nrows();
    assert!(k >= 1 && k <= n, "embedding dimension must be in 1..=N");
    let (_, vectors) = symmetric_eigen_sorted(laplacian);
    let mut embed = Matrix::zeros(n, k);
    for i in 0..n {
        for j in 0..k {
            embed[(i, j)] = vectors[(i, j)];
        }
    }
    for i in 0..n {
        let norm = embed.row(i).norm();
        if norm > 1e-12 {
            for j in 0..k {
                embed[(i, j)] /= norm;
            }
        }
    }
    embed
}

/// Lloyd iterations from one k-means++ seeding.
fn lloyd_run(points: &Matrix, k: usize, seed: u64, max_iters: usize) -> (Vec<usize>, f64) {
    let n = points.nrows();
    let d = points.ncols();
    let mut rng = seeds::stream(seed, &[]);

    let dist2 = |i: usize, c: &Vector| -> f64 {
        let mut s = 0.0;
        for j in 0..d {
            let diff = points[(i, j)] - c[j];
            s += diff * diff;
        }
        s
    };

    // k-means++: first center uniform, the rest weighted by squared
    // distance to the nearest chosen center.
    let mut centers: Vec<Vector> = Vec::with_capacity(k);
    centers.push(points.row(rng.random_range(0..n)).transpose());
    let mut best_d2: Vec<f64> = (0..n).map(|i| dist2(i, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = best_d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random_range(0.0..1.0) * total;
            let mut pick = n - 1;
            for (i, &w) in best_d2.iter().enumerate() {
                if target < w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            pick
        } else {
            // All mass sits on the chosen centers (duplicate points);
            // fall back to the lowest unused index.
            (0..n).find(|&i| best_d2[i] == 0.0 && !centers.iter().any(|c| dist2(i, c) == 0.0))
                .unwrap_or(0)
        };
        let c = points.row(next).transpose();
        for i in 0..n {
            best_d2[i] = best_d2[i].min(dist2(i, &c));
        }
        centers.push(c);
    }

    let mut assignment = vec![0usize; n];
    let mut previous: Option<Vec<usize>> = None;
    for _ in 0..max_iters {
        // Assign to the nearest center. A point moves only on a strict
        // improvement, so exact ties keep its current cluster; without
        // that, repaired placements of duplicate points oscillate back
        // out of the cluster they were meant to revive.
        for i in 0..n {
            let mut best = assignment[i];
            let mut best_dist = dist2(i, &centers[best]);
            for (c, center) in centers.iter().enumerate() {
                if c == best {
                    continue;
                }
                let dd = dist2(i, center);
                if dd < best_dist {
                    best_dist = dd;
                    best = c;
                }
            }
            assignment[i] = best;
        }

        // Revive empty clusters from the points farthest off their
        // centers, one point each.
        let mut counts = vec![0usize; k];
        for &a in &assignment {
            counts[a] += 1;
        }
        let mut stolen: Vec<usize> = Vec::new();
        let mut repaired = false;
        for c in 0..k {
            if counts[c] == 0 {
                repaired = true;
                let mut far = None;
                let mut far_dist = -1.0;
                for i in 0..n {
                    if stolen.contains(&i) || counts[assignment[i]] <= 1 {
                        continue;
                    }
                    let dd = dist2(i, &centers[assignment[i]]);
                    if dd > far_dist {
                        far_dist = dd;
                        far = Some(i);
                    }
                }
                let i = far.expect("a nonempty cluster can spare a point");
                counts[assignment[i]] -= 1;
                counts[c] += 1;
                centers[c] = points.row(i).transpose();
                assignment[i] = c;
                stolen.push(i);
            }
        }
        if repaired {
            previous = None;
            continue;
        }

        if previous.as_ref() == Some(&assignment) {
            break;
        }
        previous = Some(assignment.clone());

        // Means update.
        for (c, center) in centers.iter_mut().enumerate() {
            let mut mean = Vector::zeros(d);
            for i in 0..n {
                if assignment[i] == c {
                    for j in 0..d {
                        mean[j] += points[(i, j)];
                    }
                }
            }
            *center = mean / counts[c] as f64;
        }
    }

    let wcss: f64 = (0..n).map(|i| dist2(i, &centers[assignment[i]])).sum();
    (assignment, wcss)
}

/// k-means with k-means++ seeding, several restarts, and empty-cluster
/// repair. Points are rows. The best restart by within-cluster sum of
/// squares wins; ties keep the earliest restart.
pub fn kmeans<R: Rng>(points: &Matrix, k: usize, restarts: usize, rng: &mut R) -> ClusterLabels {
    let n = points.nrows();
    assert!(k >= 1, "need at least one cluster");
    assert!(n >= k, "cannot fill {k} clusters from {n} points");
    assert!(restarts >= 1, "need at least one restart");

    // Streams are drawn up front so restarts could run in any order.
    let restart_seeds: Vec<u64> = (0..restarts).map(|_| rng.random()).collect();
    let mut best: Option<(Vec<usize>, f64)> = None;
    for seed in restart_seeds {
        let (assignment, wcss) = lloyd_run(points, k, seed, 300);
        let better = match &best {
            None => true,
            Some((_, best_wcss)) => wcss < *best_wcss,
        };
        if better {
            best = Some((assignment, wcss));
        }
    }
    let (assignment, _) = best.expect("at least one restart ran");

    // Relabel to 1-based ids in order of first appearance, which also
    // erases any restart-specific center numbering.
    let mut remap = vec![0usize; k];
    let mut next = 0usize;
    let ids = assignment
        .iter()
        .map(|&a| {
            if remap[a] == 0 {
                next += 1;
                remap[a] = next;
            }
            remap[a]
        })
        .collect();
    ClusterLabels::new(ids)
}

/// Full spectral clustering of a similarity graph into `k` clusters.
pub fn spectral_cluster<R: Rng>(
    g: &SimilarityGraph,
    k: usize,
    restarts: usize,
    rng: &mut R,
) -> ClusterLabels {
    let l = normalized_laplacian(g);
    let embed = spectral_embed(&l, k);
    kmeans(&embed, k, restarts, rng)
}

/// Eigengap estimate of the cluster count: the `k ≤ l_max` where the gap
/// `λ_{k+1} − λ_k` of the ascending Laplacian spectrum is largest (ties
/// keep the smallest k).
pub fn estimate_num_clusters(g: &SimilarityGraph, l_max: usize) -> usize {
    let n = g.num_vertices();
    assert!(n >= 2, "need at least two vertices to see a gap");
    assert!(l_max >= 1, "l_max must be at least 1");
    let (values, _) = symmetric_eigen_sorted(&normalized_laplacian(g));
    let limit = l_max.min(n - 1);
    let mut best_k = 1;
    let mut best_gap = f64::NEG_INFINITY;
    for k in 1..=limit {
        let gap = values[k] - values[k - 1];
        if gap > best_gap {
            best_gap = gap;
            best_k = k;
        }
    }
    best_k
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::SimilarityGraph;
    use approx::assert_abs_diff_eq;

    /// Complete graph on each block, unit weights, no edges across.
    fn block_graph(sizes: &[usize]) -> SimilarityGraph {
        let n: usize = sizes.iter().sum();
        let mut block = vec![0usize; n];
        let mut at = 0;
        for (b, &s) in sizes.iter().enumerate() {
            for _ in 0..s {
                block[at] = b;
                at += 1;
            }
        }
        let mut w = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if i != j && block[i] == block[j] {
                    w[(i, j)] = 1.0;
                }
            }
        }
        SimilarityGraph::from_weights(w)
    }

    #[test]
    fn laplacian_is_exactly_symmetric_with_unit_diagonal() {
        let g = block_graph(&[3, 2]);
        let l = normalized_laplacian(&g);
        for i in 0..5 {
            assert_abs_diff_eq!(l[(i, i)], 1.0, epsilon = 1e-15);
            for j in 0..5 {
                assert_eq!(l[(i, j)], l[(j, i)]);
            }
        }
    }

    #[test]
    fn isolated_vertex_keeps_identity_row() {
        let mut w = Matrix::zeros(3, 3);
        w[(0, 1)] = 1.0;
        w[(1, 0)] = 1.0;
        let g = SimilarityGraph::from_weights(w);
        let l = normalized_laplacian(&g);
        assert_eq!(l[(2, 2)], 1.0);
        assert_eq!(l[(2, 0)], 0.0);
        assert_eq!(l[(0, 2)], 0.0);
    }

    #[test]
    fn laplacian_eigenvalues_stay_in_zero_two() {
        let g = block_graph(&[4, 3, 2]);
        let (values, _) = symmetric_eigen_sorted(&normalized_laplacian(&g));
        for v in values {
            assert!((-1e-10..=2.0 + 1e-10).contains(&v), "eigenvalue {v}");
        }
    }

    #[test]
    fn zero_eigenvalue_multiplicity_counts_components() {
        let g = block_graph(&[5, 4, 6]);
        let (values, _) = symmetric_eigen_sorted(&normalized_laplacian(&g));
        let zeros = values.iter().filter(|v| v.abs() <= 1e-8).count();
        assert_eq!(zeros, 3);
    }

    #[test]
    fn three_blocks_cluster_perfectly() {
        let g = block_graph(&[6, 5, 7]);
        let mut rng = crate::seeds::stream(77, &[]);
        let labels = spectral_cluster(&g, 3, 20, &mut rng);
        assert_eq!(labels.num_clusters, 3);
        // Same block ⇔ same label.
        let a = &labels.assignment;
        for i in 0..6 {
            assert_eq!(a[i], a[0]);
        }
        for i in 6..11 {
            assert_eq!(a[i], a[6]);
        }
        for i in 11..18 {
            assert_eq!(a[i], a[11]);
        }
        assert_ne!(a[0], a[6]);
        assert_ne!(a[6], a[11]);
        assert_ne!(a[0], a[11]);
    }

    #[test]
    fn eigengap_estimates_block_count() {
        assert_eq!(estimate_num_clusters(&block_graph(&[5, 5, 5]), 10), 3);
        assert_eq!(estimate_num_clusters(&block_graph(&[12]), 6), 1);
        assert_eq!(estimate_num_clusters(&block_graph(&[4, 4]), 5), 2);
    }

    #[test]
    fn kmeans_separates_clear_blobs() {
        let mut pts = Matrix::zeros(9, 2);
        let blobs = [(0.0, 0.0), (10.0, 0.0), (0.0, 10.0)];
        for (i, &(cx, cy)) in blobs.iter().enumerate() {
            for j in 0..3 {
                pts[(3 * i + j, 0)] = cx + 0.1 * j as f64;
                pts[(3 * i + j, 1)] = cy - 0.1 * j as f64;
            }
        }
        let mut rng = crate::seeds::stream(5, &[]);
        let labels = kmeans(&pts, 3, 10, &mut rng);
        assert_eq!(labels.num_clusters, 3);
        for i in 0..3 {
            let base = labels.assignment[3 * i];
            assert_eq!(labels.assignment[3 * i + 1], base);
            assert_eq!(labels.assignment[3 * i + 2], base);
        }
    }

    #[test]
    fn kmeans_fills_every_cluster_even_with_duplicates() {
        // Five copies of one point and one outlier, k = 3: repair has to
        // split the duplicates rather than leave a cluster empty.
        let mut pts = Matrix::zeros(6, 1);
        pts[(5, 0)] = 4.0;
        let mut rng = crate::seeds::stream(6, &[]);
        let labels = kmeans(&pts, 3, 5, &mut rng);
        assert_eq!(labels.num_clusters, 3);
        let mut counts = vec![0; 3];
        for &a in &labels.assignment {
            counts[a - 1] += 1;
        }
        assert!(counts.iter().all(|&c| c > 0));
    }

    #[test]
    fn clustering_is_reproducible() {
        let g = block_graph(&[5, 5, 5]);
        let run = |seed| {
            let mut rng = crate::seeds::stream(seed, &[]);
            spectral_cluster(&g, 3, 20, &mut rng).assignment
        };
        assert_eq!(run(9), run(9));
    }

    #[test]
    #[should_panic(expected = "contiguous")]
    fn cluster_labels_reject_gaps() {
        ClusterLabels::new(vec![1, 3, 3]);
    }
}
