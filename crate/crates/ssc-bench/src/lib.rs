//! Shared fixtures for the pipeline benchmarks.

use ssc_core::datagen::{self, DataSet};
use ssc_core::graph::{self, SimilarityGraph};
use ssc_core::{gomp, seeds};

/// A reproducible noisy union-of-subspaces dataset: `l` subspaces of
/// dimension `d` in Rⁿ at affinity 0.3, `per_cluster` points each,
/// noise level 0.1.
pub fn fixture(n: usize, d: usize, l: usize, per_cluster: usize) -> DataSet {
    let mut rng = seeds::stream(1234, &[]);
    let model = datagen::make_equiaffinity_subspaces(n, d, l, 0.3, &mut rng)
        .expect("fixture dimensions fit");
    let clean = datagen::sample_points(&model, &vec![per_cluster; l], &mut rng)
        .expect("counts match");
    datagen::add_noise(&clean, 0.1, &mut rng).expect("valid sigma")
}

/// Similarity graph for `fixture`, built with a ratio-rule pursuit.
pub fn fixture_graph(n: usize, d: usize, l: usize, per_cluster: usize, p: usize) -> SimilarityGraph {
    let ds = fixture(n, d, l, per_cluster);
    let c = gomp::sparse_representation(&ds, &gomp::StopPolicy::ratio(p));
    graph::build_similarity(&c)
}
