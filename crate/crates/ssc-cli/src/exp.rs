//! Seeded end-to-end experiment trials shared by the sweep and demo
//! commands (and the acceptance suite).
//!
//! One trial = draw a fresh union of subspaces, sample and perturb
//! points, self-express them, build the similarity graph, spectrally
//! cluster, and score. The RNG stream of a trial is derived from
//! `(seed, cell index, trial index)` alone, so trials can run in any
//! order on any number of threads without changing a single output bit.

use crate::config::StopSpec;
use crate::CliError;
use ssc_core::datagen;
use ssc_core::gomp;
use ssc_core::graph;
use ssc_core::metrics;
use ssc_core::seeds;
use ssc_core::spectral;

/// One grid cell of an experiment: a model shape plus run parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSpec {
    pub ambient: usize,
    pub dim: usize,
    pub clusters: usize,
    pub rho: f64,
    pub points_per_cluster: usize,
    pub sigma: f64,
    pub p: usize,
    pub stop: StopSpec,
    pub restarts: usize,
}

/// Scores of a single clustered trial. Ground truth is always known
/// here, so every metric is present.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub tnr: f64,
    pub ccr: f64,
    pub anrn: f64,
}

pub fn run_trial(
    spec: &CellSpec,
    seed: u64,
    cell: u64,
    trial: u64,
) -> Result<TrialOutcome, CliError> {
    if spec.p == 0 || spec.p > spec.ambient {
        return Err(CliError::Config(format!(
            "batch size p must satisfy 1 <= p <= n = {}, got {}",
            spec.ambient, spec.p
        )));
    }
    let mut rng = seeds::stream(seed, &[cell, trial]);
    let model = datagen::make_equiaffinity_subspaces(
        spec.ambient,
        spec.dim,
        spec.clusters,
        spec.rho,
        &mut rng,
    )?;
    let counts = vec![spec.points_per_cluster; spec.clusters];
    let clean = datagen::sample_points(&model, &counts, &mut rng)?;
    let ds = datagen::add_noise(&clean, spec.sigma, &mut rng)?;

    let policy = spec.stop.policy(spec.p);
    let c = gomp::sparse_representation(&ds, &policy);
    let g = graph::build_similarity(&c);
    let pred = spectral::spectral_cluster(&g, spec.clusters, spec.restarts, &mut rng);
    let report = metrics::MetricsReport::evaluate(&c, Some(&pred), ds.labels.as_deref());

    let outcome = TrialOutcome {
        tnr: report.tnr.expect("truth labels were supplied"),
        ccr: report.ccr.expect("prediction and truth were supplied"),
        anrn: report.anrn,
    };
    if !(outcome.tnr.is_finite() && outcome.ccr.is_finite() && outcome.anrn.is_finite()) {
        return Err(CliError::Runtime(format!(
            "non-finite metrics in cell {cell}, trial {trial}"
        )));
    }
    Ok(outcome)
}

/// Model shape for the neighbor-quality demo (no clustering stage).
#[derive(Debug, Clone, PartialEq)]
pub struct AodSpec {
    pub ambient: usize,
    pub dim: usize,
    pub clusters: usize,
    pub rho: f64,
    pub points_per_cluster: usize,
    pub sigma: f64,
    /// Number of recovered neighbors to report on, indexed 1-based.
    pub neighbors: usize,
}

/// Per-neighbor-index curves averaged over `trials` fresh datasets:
/// mean angle of deviation at selection time, and the fraction of
/// selections that were true neighbors.
pub fn run_aod_cell(
    spec: &AodSpec,
    p: usize,
    trials: usize,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    if p == 0 || p > spec.ambient {
        return Err(CliError::Config(format!(
            "batch size p must satisfy 1 <= p <= n = {}, got {p}",
            spec.ambient
        )));
    }
    if trials == 0 {
        return Err(CliError::Config("need at least one trial".into()));
    }
    // Enough full batches to cover the requested neighbor count.
    let iterations = spec.neighbors.div_ceil(p);
    let policy = StopSpec::Fixed(iterations).policy(p);

    let mut aod_sum = vec![0.0f64; spec.neighbors];
    let mut rate_sum = vec![0.0f64; spec.neighbors];
    for trial in 0..trials {
        let mut rng = seeds::stream(seed, &[p as u64, trial as u64]);
        let model = datagen::make_equiaffinity_subspaces(
            spec.ambient,
            spec.dim,
            spec.clusters,
            spec.rho,
            &mut rng,
        )?;
        let counts = vec![spec.points_per_cluster; spec.clusters];
        let clean = datagen::sample_points(&model, &counts, &mut rng)?;
        let ds = datagen::add_noise(&clean, spec.sigma, &mut rng)?;
        let (_, traces) = gomp::sparse_representation_with_traces(&ds, &policy, Some(&model));
        let labels = ds.labels.as_deref().expect("generated data is labeled");
        let aods = metrics::mean_aod_per_index(&traces);
        let rates = metrics::per_neighbor_true_rate(&traces, labels);
        if aods.len() < spec.neighbors || rates.len() < spec.neighbors {
            return Err(CliError::Runtime(format!(
                "trial {trial} recovered only {} of {} neighbors per point",
                aods.len().min(rates.len()),
                spec.neighbors
            )));
        }
        for k in 0..spec.neighbors {
            aod_sum[k] += aods[k];
            rate_sum[k] += rates[k];
        }
    }
    let t = trials as f64;
    Ok((
        aod_sum.into_iter().map(|s| s / t).collect(),
        rate_sum.into_iter().map(|s| s / t).collect(),
    ))
}

/// Mean and sample standard deviation (zero for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    assert!(!values.is_empty(), "no values to aggregate");
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn tiny_cell() -> CellSpec {
        CellSpec {
            ambient: 20,
            dim: 3,
            clusters: 2,
            rho: 0.0,
            points_per_cluster: 9,
            sigma: 0.0,
            p: 1,
            stop: StopSpec::Fixed(3),
            restarts: 5,
        }
    }

    #[test]
    fn noiseless_orthogonal_trial_is_perfect() {
        let outcome = run_trial(&tiny_cell(), 11, 0, 0).unwrap();
        assert_eq!(outcome.tnr, 1.0);
        assert_eq!(outcome.ccr, 1.0);
        assert!(outcome.anrn <= 3.0 + 1e-12);
    }

    #[test]
    fn trials_are_reproducible() {
        let a = run_trial(&tiny_cell(), 42, 3, 7).unwrap();
        let b = run_trial(&tiny_cell(), 42, 3, 7).unwrap();
        assert_eq!(a, b);
        let c = run_trial(&tiny_cell(), 42, 3, 8).unwrap();
        assert!(a != c || a.tnr == c.tnr); // different trial, same spec: may
                                           // coincide in score but usually not
    }

    #[test]
    fn oversize_batch_is_a_config_error() {
        let mut spec = tiny_cell();
        spec.p = 21;
        let err = run_trial(&spec, 1, 0, 0).unwrap_err();
        assert!(matches!(err, CliError::Config(_)));
    }

    #[test]
    fn mean_std_matches_hand_computation() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_abs_diff_eq!(m, 2.5, epsilon = 1e-15);
        // Sample variance: (2.25 + 0.25 + 0.25 + 2.25)/3 = 5/3.
        assert_abs_diff_eq!(s, (5.0f64 / 3.0).sqrt(), epsilon = 1e-15);
        assert_eq!(mean_std(&[7.0]), (7.0, 0.0));
    }

    #[test]
    fn aod_cell_produces_monotone_noiseless_curves() {
        let spec = AodSpec {
            ambient: 24,
            dim: 4,
            clusters: 2,
            rho: 0.0,
            points_per_cluster: 12,
            sigma: 0.0,
            neighbors: 4,
        };
        let (aods, rates) = run_aod_cell(&spec, 2, 3, 5).unwrap();
        assert_eq!(aods.len(), 4);
        assert_eq!(rates.len(), 4);
        for k in 0..4 {
            assert!((0.0..=std::f64::consts::FRAC_PI_2).contains(&aods[k]));
            assert!((0.0..=1.0).contains(&rates[k]));
        }
        // Batches of two share the selection-time residual: staircase.
        assert_abs_diff_eq!(aods[0], aods[1], epsilon = 1e-12);
        assert_abs_diff_eq!(aods[2], aods[3], epsilon = 1e-12);
    }
}
