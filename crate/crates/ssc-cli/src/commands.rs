//! The five subcommands. Each takes already-resolved inputs, performs the
//! run, and writes its artifacts (CSV, SVG, manifest) into the output
//! directory.

use crate::chart::{LineChart, Series};
use crate::config::{points_per_cluster, BoundsConfig, ModelConfig, RawConfig, StopSpec, SweepConfig};
use crate::exp::{self, AodSpec, CellSpec};
use crate::io;
use crate::CliError;
use rayon::prelude::*;
use ssc_core::bounds;
use ssc_core::datagen;
use ssc_core::gomp;
use ssc_core::graph;
use ssc_core::metrics::MetricsReport;
use ssc_core::seeds;
use ssc_core::spectral;
use ssc_core::Matrix;
use std::fmt::Display;
use std::path::{Path, PathBuf};

fn ensure_out_dir(out: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", out.display())))
}

fn kv(key: &str, value: impl Display) -> (String, String) {
    (key.to_string(), value.to_string())
}

fn join_list<T: Display>(items: &[T]) -> String {
    items
        .iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn ensure_finite(m: &Matrix, what: &str) -> Result<(), CliError> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(CliError::Runtime(format!(
            "numerical failure: non-finite values in the {what}"
        )));
    }
    Ok(())
}

/// `generate`: draw one labeled dataset and write it with its model.
pub fn cmd_generate(raw: &RawConfig, seed_flag: Option<u64>, out: &Path) -> Result<(), CliError> {
    let model_cfg = ModelConfig::from_raw(raw)?;
    let phi: f64 = raw.get_or("experiment", "phi", 8.0)?;
    let sigma: f64 = raw.get_or("experiment", "sigma", 0.0)?;
    let seed = match seed_flag {
        Some(s) => s,
        None => raw.get_or("experiment", "seed", 0)?,
    };
    let ppc = points_per_cluster(phi, model_cfg.dim)?;
    ensure_out_dir(out)?;

    let mut rng = seeds::stream(seed, &[]);
    let model = datagen::make_equiaffinity_subspaces(
        model_cfg.ambient,
        model_cfg.dim,
        model_cfg.clusters,
        model_cfg.rho,
        &mut rng,
    )?;
    let counts = vec![ppc; model_cfg.clusters];
    let clean = datagen::sample_points(&model, &counts, &mut rng)?;
    let ds = datagen::add_noise(&clean, sigma, &mut rng)?;

    io::write_points(&out.join("points.csv"), &ds.points)?;
    io::write_labels(
        &out.join("labels.csv"),
        ds.labels.as_deref().expect("generated data is labeled"),
    )?;
    // All bases side by side: columns [0, d) belong to cluster 1, and so on.
    let total_dim: usize = model.dims().iter().sum();
    let bases = Matrix::from_fn(model_cfg.ambient, total_dim, |i, j| {
        model.basis(j / model_cfg.dim)[(i, j % model_cfg.dim)]
    });
    io::write_matrix(&out.join("bases.csv"), &bases)?;
    io::write_manifest(
        &out.join("manifest.txt"),
        &[
            kv("command", "generate"),
            kv("seed", seed),
            kv("n", model_cfg.ambient),
            kv("d", model_cfg.dim),
            kv("l", model_cfg.clusters),
            kv("rho", model_cfg.rho),
            kv("phi", phi),
            kv("sigma", sigma),
            kv("points_per_cluster", ppc),
            kv("num_points", ds.num_points()),
        ],
    )
}

/// Inputs of the `cluster` command, already resolved from flags.
#[derive(Debug, Clone)]
pub struct ClusterArgs {
    pub points: PathBuf,
    pub labels: Option<PathBuf>,
    pub p: usize,
    pub stop: StopSpec,
    pub clusters: Option<usize>,
    pub normalize: bool,
    pub restarts: usize,
    pub seed: u64,
    pub out: PathBuf,
}

/// `cluster`: one full pipeline run over a points file.
pub fn cmd_cluster(args: &ClusterArgs) -> Result<(), CliError> {
    let mut points = io::read_points(&args.points)?;
    let n_points = points.nrows();
    let ambient = points.ncols();
    if n_points < 2 {
        return Err(CliError::Config(format!(
            "need at least two points, got {n_points}"
        )));
    }
    if args.p == 0 || args.p > ambient {
        return Err(CliError::Config(format!(
            "batch size p must satisfy 1 <= p <= n = {ambient}, got {}",
            args.p
        )));
    }
    let labels = match &args.labels {
        Some(path) => {
            let l = io::read_labels(path)?;
            if l.len() != n_points {
                return Err(CliError::Config(format!(
                    "{} labels for {n_points} points",
                    l.len()
                )));
            }
            Some(l)
        }
        None => None,
    };
    if args.normalize {
        for i in 0..n_points {
            let norm = points.row(i).norm();
            if norm <= 0.0 {
                return Err(CliError::Config(format!(
                    "point {i} has zero norm and cannot be normalized"
                )));
            }
            for j in 0..ambient {
                points[(i, j)] /= norm;
            }
        }
    }
    ensure_out_dir(&args.out)?;

    let ds = datagen::DataSet::from_points(points, labels);
    let policy = args.stop.policy(args.p);
    let c = gomp::sparse_representation(&ds, &policy);
    ensure_finite(c.values(), "coefficient matrix")?;
    let g = graph::build_similarity(&c);

    let l = match args.clusters {
        Some(l) => {
            if l == 0 || l > n_points {
                return Err(CliError::Config(format!(
                    "cluster count must satisfy 1 <= L <= {n_points}, got {l}"
                )));
            }
            l
        }
        None => match &ds.labels {
            Some(labels) => {
                let mut distinct: Vec<usize> = labels.clone();
                distinct.sort_unstable();
                distinct.dedup();
                distinct.len()
            }
            None => spectral::estimate_num_clusters(&g, 10.min(n_points - 1)),
        },
    };
    let mut rng = seeds::stream(args.seed, &[]);
    let pred = spectral::spectral_cluster(&g, l, args.restarts, &mut rng);
    let report = MetricsReport::evaluate(&c, Some(&pred), ds.labels.as_deref());

    io::write_matrix(&args.out.join("c_matrix.csv"), c.values())?;
    io::write_matrix(&args.out.join("g_matrix.csv"), g.weights())?;
    io::write_labels(&args.out.join("pred_labels.csv"), &pred.assignment)?;
    io::write_metrics(&args.out.join("metrics.csv"), &report)?;
    io::write_manifest(
        &args.out.join("manifest.txt"),
        &[
            kv("command", "cluster"),
            kv("points", args.points.display()),
            kv("seed", args.seed),
            kv("p", args.p),
            kv("stop", args.stop),
            kv("clusters", l),
            kv("normalize", args.normalize),
            kv("restarts", args.restarts),
        ],
    )
}

/// `sweep`: run the (rho, phi, sigma, p) grid and aggregate metrics.
pub fn cmd_sweep(raw: &RawConfig, seed_flag: Option<u64>, out: &Path) -> Result<(), CliError> {
    let cfg = SweepConfig::from_raw(raw)?;
    let seed = seed_flag.unwrap_or(cfg.seed);
    ensure_out_dir(out)?;

    // Cells in fixed nesting order rho -> phi -> sigma -> p; the cell
    // index seeds each trial stream, so the enumeration order is part of
    // the output contract.
    let mut cells: Vec<CellSpec> = Vec::new();
    for &rho in &cfg.rho_list {
        for &phi in &cfg.phi_list {
            let ppc = points_per_cluster(phi, cfg.dim)?;
            for &sigma in &cfg.sigma_list {
                for &p in &cfg.p_list {
                    cells.push(CellSpec {
                        ambient: cfg.ambient,
                        dim: cfg.dim,
                        clusters: cfg.clusters,
                        rho,
                        points_per_cluster: ppc,
                        sigma,
                        p,
                        stop: cfg.stop,
                        restarts: cfg.restarts,
                    });
                }
            }
        }
    }

    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..cfg.trials).map(move |t| (c, t)))
        .collect();
    let results: Vec<Result<exp::TrialOutcome, CliError>> = jobs
        .par_iter()
        .map(|&(c, t)| exp::run_trial(&cells[c], seed, c as u64, t as u64))
        .collect();
    let mut outcomes = Vec::with_capacity(results.len());
    for r in results {
        outcomes.push(r?);
    }

    let mut rows: Vec<io::SweepRow> = Vec::new();
    let mut cell_means: Vec<(f64, f64)> = Vec::new(); // (tnr mean, ccr mean)
    for (c, cell) in cells.iter().enumerate() {
        let chunk = &outcomes[c * cfg.trials..(c + 1) * cfg.trials];
        let phi = cell.points_per_cluster as f64 / cell.dim as f64;
        let mut push = |metric: &'static str, values: Vec<f64>| {
            let (mean, std) = exp::mean_std(&values);
            rows.push(io::SweepRow {
                rho: cell.rho,
                phi,
                sigma: cell.sigma,
                p: cell.p,
                metric,
                mean,
                std,
            });
            mean
        };
        let tnr_mean = push("tnr", chunk.iter().map(|o| o.tnr).collect());
        let ccr_mean = push("ccr", chunk.iter().map(|o| o.ccr).collect());
        push("anrn", chunk.iter().map(|o| o.anrn).collect());
        cell_means.push((tnr_mean, ccr_mean));
    }
    io::write_sweep(&out.join("sweep.csv"), &rows)?;

    // One chart per (rho, phi) panel and metric, sigma on the x-axis,
    // one series per p.
    let cell_index = |ri: usize, fi: usize, si: usize, pi: usize| {
        ((ri * cfg.phi_list.len() + fi) * cfg.sigma_list.len() + si) * cfg.p_list.len() + pi
    };
    for (ri, &rho) in cfg.rho_list.iter().enumerate() {
        for (fi, &phi) in cfg.phi_list.iter().enumerate() {
            for (metric, pick) in [
                ("tnr", 0usize),
                ("ccr", 1usize),
            ] {
                let series: Vec<Series> = cfg
                    .p_list
                    .iter()
                    .enumerate()
                    .map(|(pi, &p)| Series {
                        label: format!("p = {p}"),
                        points: cfg
                            .sigma_list
                            .iter()
                            .enumerate()
                            .map(|(si, &sigma)| {
                                let m = cell_means[cell_index(ri, fi, si, pi)];
                                (sigma, if pick == 0 { m.0 } else { m.1 })
                            })
                            .collect(),
                    })
                    .collect();
                let chart = LineChart {
                    title: format!("{metric} vs noise (rho = {rho}, phi = {phi})"),
                    x_label: "sigma".to_string(),
                    y_label: metric.to_string(),
                    series,
                };
                let name = format!("sweep_{metric}_rho{rho}_phi{phi}.svg");
                std::fs::write(out.join(&name), chart.render())
                    .map_err(|e| CliError::Runtime(format!("cannot write {name}: {e}")))?;
            }
        }
    }

    io::write_manifest(
        &out.join("manifest.txt"),
        &[
            kv("command", "sweep"),
            kv("seed", seed),
            kv("trials", cfg.trials),
            kv("n", cfg.ambient),
            kv("d", cfg.dim),
            kv("l", cfg.clusters),
            kv("rho", join_list(&cfg.rho_list)),
            kv("phi", join_list(&cfg.phi_list)),
            kv("sigma", join_list(&cfg.sigma_list)),
            kv("p", join_list(&cfg.p_list)),
            kv("stop", cfg.stop),
            kv("restarts", cfg.restarts),
        ],
    )
}

/// `bounds`: evaluate the closed-form bounds over the configured grid.
pub fn cmd_bounds(raw: &RawConfig, out: &Path) -> Result<(), CliError> {
    let cfg = BoundsConfig::from_raw(raw)?;
    ensure_out_dir(out)?;

    let mut rows: Vec<io::BoundsRow> = Vec::new();
    for &sigma in &cfg.sigma_list {
        for &tau in &cfg.tau_list {
            for &p in &cfg.p_list {
                let params = bounds::BoundParams {
                    ambient_dim: cfg.ambient,
                    data_size: cfg.data_size,
                    cluster_size: cfg.cluster_size,
                    subspace_dim: cfg.dim,
                    sigma,
                    tau,
                    batch_size: p,
                    iterations: cfg.iterations,
                    c_const: cfg.c_const,
                    affinities: cfg.affinities.clone(),
                };
                let k_total = cfg.k_total.unwrap_or(p * cfg.iterations);
                let k_comp = cfg.k_comp.unwrap_or_else(|| 2.min(p));
                let global = bounds::global_bound(&params, k_total)?;
                let halting = bounds::halting_bound(&params)?;
                let gomp_form = bounds::gomp_comparison_bound(&params, k_comp)?;
                let omp_form = bounds::omp_comparison_bound(&params, k_comp)?;
                let separation = if cfg.affinities.is_some() {
                    let check = bounds::assumption3_check(&params)?;
                    Some((check.lhs, check.rhs, check.pass))
                } else {
                    None
                };
                rows.push(io::BoundsRow {
                    sigma,
                    tau,
                    p,
                    k_total,
                    k_comp,
                    global: (global.value, global.vacuous),
                    halting: (halting.value, halting.vacuous),
                    gomp_form: (gomp_form.value, gomp_form.vacuous),
                    omp_form: (omp_form.value, omp_form.vacuous),
                    separation,
                });
            }
        }
    }
    io::write_bounds(&out.join("bounds.csv"), &rows)?;
    io::write_manifest(
        &out.join("manifest.txt"),
        &[
            kv("command", "bounds"),
            kv("n", cfg.ambient),
            kv("data_size", cfg.data_size),
            kv("cluster_size", cfg.cluster_size),
            kv("d", cfg.dim),
            kv("iterations", cfg.iterations),
            kv("c", cfg.c_const),
            kv("sigma", join_list(&cfg.sigma_list)),
            kv("tau", join_list(&cfg.tau_list)),
            kv("p", join_list(&cfg.p_list)),
        ],
    )
}

/// `aod-demo`: neighbor-quality curves (angle of deviation and
/// true-neighbor rate per recovered neighbor index) for several batch
/// sizes on one synthetic model.
pub fn cmd_aod_demo(
    raw: Option<&RawConfig>,
    seed_flag: Option<u64>,
    trials_flag: Option<usize>,
    out: &Path,
) -> Result<(), CliError> {
    let empty = RawConfig::default();
    let raw = raw.unwrap_or(&empty);

    let ambient: usize = raw.get_or("model", "n", 100)?;
    let dim: usize = raw.get_or("model", "d", 9)?;
    let clusters: usize = raw.get_or("model", "l", 3)?;
    let rho: f64 = raw.get_or("model", "rho", 0.0)?;
    let sigma: f64 = raw.get_or("experiment", "sigma", 0.2)?;
    let phi: f64 = raw.get_or("experiment", "phi", 5.0)?;
    let neighbors: usize = raw.get_or("experiment", "neighbors", 9)?;
    let p_list: Vec<usize> = raw.list_or("experiment", "p", vec![1, 3])?;
    let trials = match trials_flag {
        Some(t) => t,
        None => raw.get_or("experiment", "trials", 200)?,
    };
    let seed = match seed_flag {
        Some(s) => s,
        None => raw.get_or("experiment", "seed", 0)?,
    };
    if neighbors == 0 {
        return Err(CliError::Config("neighbors must be positive".into()));
    }
    ensure_out_dir(out)?;

    let spec = AodSpec {
        ambient,
        dim,
        clusters,
        rho,
        points_per_cluster: points_per_cluster(phi, dim)?,
        sigma,
        neighbors,
    };

    let mut rows: Vec<io::AodRow> = Vec::new();
    let mut aod_series: Vec<Series> = Vec::new();
    let mut rate_series: Vec<Series> = Vec::new();
    for &p in &p_list {
        let (aods, rates) = exp::run_aod_cell(&spec, p, trials, seed)?;
        for k in 0..neighbors {
            rows.push(io::AodRow {
                p,
                neighbor: k + 1,
                mean_aod: aods[k],
                true_rate: rates[k],
            });
        }
        let index_points = |values: &[f64]| {
            values
                .iter()
                .enumerate()
                .map(|(k, &v)| ((k + 1) as f64, v))
                .collect::<Vec<_>>()
        };
        aod_series.push(Series {
            label: format!("p = {p}"),
            points: index_points(&aods),
        });
        rate_series.push(Series {
            label: format!("p = {p}"),
            points: index_points(&rates),
        });
    }
    io::write_aod(&out.join("aod.csv"), &rows)?;

    let aod_chart = LineChart {
        title: "mean angle of deviation per recovered neighbor".to_string(),
        x_label: "neighbor index".to_string(),
        y_label: "mean AoD (rad)".to_string(),
        series: aod_series,
    };
    std::fs::write(out.join("aod_curve.svg"), aod_chart.render())
        .map_err(|e| CliError::Runtime(format!("cannot write aod_curve.svg: {e}")))?;
    let rate_chart = LineChart {
        title: "true-neighbor rate per recovered neighbor".to_string(),
        x_label: "neighbor index".to_string(),
        y_label: "true rate".to_string(),
        series: rate_series,
    };
    std::fs::write(out.join("aod_rate.svg"), rate_chart.render())
        .map_err(|e| CliError::Runtime(format!("cannot write aod_rate.svg: {e}")))?;

    io::write_manifest(
        &out.join("manifest.txt"),
        &[
            kv("command", "aod-demo"),
            kv("seed", seed),
            kv("trials", trials),
            kv("n", ambient),
            kv("d", dim),
            kv("l", clusters),
            kv("rho", rho),
            kv("phi", phi),
            kv("sigma", sigma),
            kv("neighbors", neighbors),
            kv("p", join_list(&p_list)),
        ],
    )
}
