//! Greedy self-expression: generalized orthogonal matching pursuit.
//!
//! Each data point `y_i` is regressed on the remaining points. One
//! iteration picks the `p` candidates with the largest absolute inner
//! product against the current residual, then replaces the residual with
//! the component of `y_i` orthogonal to everything selected so far:
//!
//! ```text
//! T_m  = top-p of |⟨y_j, r_{m−1}⟩|,  j ∉ Λ_{m−1} ∪ {i}
//! Λ_m  = Λ_{m−1} ∪ T_m
//! r_m  = (I − Y_{Λ_m} Y_{Λ_m}†) y_i
//! ```
//!
//! With `p = 1` this is plain orthogonal matching pursuit; larger `p`
//! buys the same support in fewer projections, which keeps the residual
//! direction closer to the point's own subspace while it still matters.
//!
//! The data-adaptive stopping rule halts once an iteration stops making
//! progress, `‖r_m‖ / ‖r_{m−1}‖ ≥ 1 − √(p/n)`, and the batch that broke
//! the rule is discarded. Runs end early when the residual is numerically
//! zero, when candidates run out, or at a safeguard cap; a preset
//! iteration budget is available instead for experiments that want an
//! exact neighbor count.

use crate::datagen::{DataSet, SubspaceModel};
use crate::graph::CoefficientMatrix;
use crate::metrics;
use crate::numerics::{self, Matrix, OrthonormalSet, Vector, DEFAULT_RANK_TOL};
use rayon::prelude::*;

/// When to stop adding batches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopMode {
    /// Run exactly this many iterations (selecting `p` neighbors each),
    /// keeping every batch.
    FixedIterations(usize),
    /// Halt on the residual-ratio test and discard the batch that
    /// triggered it.
    ResidualRatio,
}

/// Stopping configuration for a pursuit run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopPolicy {
    pub mode: StopMode,
    /// Neighbors selected per iteration.
    pub p: usize,
    /// Hard cap on iterations; `None` means `⌈min(n, N−1)/p⌉`.
    pub max_iters_safeguard: Option<usize>,
    /// Halt when `‖r_m‖ ≤ residual_floor_rel · ‖y_i‖`. The ratio rule
    /// never fires on exactly representable points (the ratio drops to
    /// zero instead of rising), so the floor ends those runs.
    pub residual_floor_rel: f64,
}

impl StopPolicy {
    pub fn ratio(p: usize) -> Self {
        Self {
            mode: StopMode::ResidualRatio,
            p,
            max_iters_safeguard: None,
            residual_floor_rel: 1e-10,
        }
    }

    pub fn fixed(iterations: usize, p: usize) -> Self {
        Self {
            mode: StopMode::FixedIterations(iterations),
            p,
            max_iters_safeguard: None,
            residual_floor_rel: 1e-10,
        }
    }

    fn validate(&self) {
        assert!(self.p >= 1, "batch size p must be at least 1");
        assert!(
            self.residual_floor_rel >= 0.0,
            "residual floor must be nonnegative"
        );
        if let StopMode::FixedIterations(m) = self.mode {
            assert!(m >= 1, "fixed iteration count must be at least 1");
        }
        if let Some(s) = self.max_iters_safeguard {
            assert!(s >= 1, "safeguard must allow at least one iteration");
        }
    }

    fn safeguard(&self, n: usize, num_points: usize) -> usize {
        self.max_iters_safeguard
            .unwrap_or_else(|| n.min(num_points - 1).div_ceil(self.p))
    }
}

/// Why a pursuit run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HaltReason {
    RatioRule,
    FixedM,
    ResidualFloor,
    Safeguard,
    CandidatesExhausted,
}

/// Norm breakdown of a residual. The split against the ground-truth
/// subspace and the angle of deviation are filled in only when the truth
/// basis was supplied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualState {
    pub norm: f64,
    pub parallel_norm: Option<f64>,
    pub perpendicular_norm: Option<f64>,
    pub aod: Option<f64>,
}

/// One completed iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// Selected indices, largest inner product first (ties go to the
    /// lowest index).
    pub selected: Vec<usize>,
    /// State of `r_m` after projecting the new batch out.
    pub state: ResidualState,
    /// `‖r_{m−1} − r_m‖`, the length of the step the iteration took.
    pub delta_norm: f64,
}

/// Full record of one pursuit run.
#[derive(Debug, Clone, PartialEq)]
pub struct GompTrace {
    /// Index of the regressed point.
    pub point_index: usize,
    /// State of `r_0 = y_i` before any selection.
    pub initial: ResidualState,
    /// Every executed iteration, including a final one the ratio rule
    /// may have discarded.
    pub iterations: Vec<IterationRecord>,
    pub halted_by: HaltReason,
    /// The last entry of `iterations` was rejected by the ratio rule and
    /// is not part of the support.
    pub discarded_last_batch: bool,
    /// The ratio rule fired on the very first iteration; its batch was
    /// kept anyway, since an empty representation would contribute
    /// nothing to the similarity graph.
    pub forced_first_batch: bool,
}

impl GompTrace {
    /// Iterations whose batches made it into the support.
    pub fn kept_iterations(&self) -> &[IterationRecord] {
        let cut = self.iterations.len() - usize::from(self.discarded_last_batch);
        &self.iterations[..cut]
    }

    /// Kept selections flattened in iteration order.
    pub fn kept_selected(&self) -> Vec<usize> {
        self.kept_iterations()
            .iter()
            .flat_map(|rec| rec.selected.iter().copied())
            .collect()
    }

    /// Angle of deviation of the residual that the `k`-th kept neighbor
    /// (0-based, flattened) was selected against. All neighbors of one
    /// batch share it.
    pub fn aod_at_selection(&self, k: usize) -> Option<f64> {
        let mut offset = k;
        for (m, rec) in self.kept_iterations().iter().enumerate() {
            if offset < rec.selected.len() {
                return if m == 0 {
                    self.initial.aod
                } else {
                    self.iterations[m - 1].state.aod
                };
            }
            offset -= rec.selected.len();
        }
        None
    }
}

/// A point's sparse self-expression.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRep {
    pub point_index: usize,
    /// Selected indices in selection order.
    pub support: Vec<usize>,
    /// Least-squares coefficients over `support`.
    pub coeffs: Vector,
    /// Full-length coefficient vector scaled to unit norm (all zero when
    /// nothing was selected or the fit is identically zero).
    pub normalized_full: Vector,
}

/// Residual-ratio stopping test: halt once
/// `‖r_m‖ / ‖r_{m−1}‖ ≥ 1 − √(p/n)`.
///
/// A zero previous residual halts unconditionally. With `p = n` the
/// threshold is zero and any ratio halts.
pub fn stopping_check(r_prev_norm: f64, r_curr_norm: f64, p: usize, n: usize) -> bool {
    assert!(p >= 1 && p <= n, "stopping rule needs 1 <= p <= n");
    if r_prev_norm <= 0.0 {
        return true;
    }
    r_curr_norm / r_prev_norm >= 1.0 - (p as f64 / n as f64).sqrt()
}

/// Equivalent form of the stopping test on the normalized step
/// `r̃_m = (r_{m−1} − r_m)/‖r_{m−1}‖`: halt once
/// `‖r̃_m‖ ≤ √(2√(p/n) − p/n)`.
///
/// Because `r_m ⊥ (r_{m−1} − r_m)`, the Pythagorean identity ties the
/// step length to the ratio, and this is the same test as
/// [`stopping_check`].
pub fn stopping_check_equiv(r_tilde_norm: f64, p: usize, n: usize) -> bool {
    assert!(p >= 1 && p <= n, "stopping rule needs 1 <= p <= n");
    let s = (p as f64 / n as f64).sqrt();
    r_tilde_norm <= (2.0 * s - s * s).sqrt()
}

fn residual_state(r: &Vector, truth: Option<&Matrix>) -> ResidualState {
    match truth {
        None => ResidualState {
            norm: r.norm(),
            parallel_norm: None,
            perpendicular_norm: None,
            aod: None,
        },
        Some(u) => {
            let parallel = u * (u.transpose() * r);
            let perp = r - &parallel;
            ResidualState {
                norm: r.norm(),
                parallel_norm: Some(parallel.norm()),
                perpendicular_norm: Some(perp.norm()),
                aod: Some(metrics::aod(r, u)),
            }
        }
    }
}

/// Runs the pursuit for point `index` of the dataset.
///
/// `truth_basis`, when given, must be the orthonormal basis of the
/// point's own subspace; it only feeds the trace instrumentation and
/// never influences selection.
pub fn gomp_select(
    ds: &DataSet,
    index: usize,
    policy: &StopPolicy,
    truth_basis: Option<&Matrix>,
) -> (SparseRep, GompTrace) {
    policy.validate();
    let n = ds.ambient_dim();
    let num = ds.num_points();
    assert!(num >= 2, "need at least two points to self-express");
    assert!(index < num, "point index out of range");
    assert!(policy.p <= n, "batch size cannot exceed the ambient dimension");

    let p = policy.p;
    let safeguard = policy.safeguard(n, num);
    let y = ds.point(index);
    let y_norm = y.norm();
    let floor = policy.residual_floor_rel * y_norm;

    let mut basis = OrthonormalSet::new(n);
    let mut taken = vec![false; num];
    taken[index] = true;
    let mut batches: Vec<IterationRecord> = Vec::new();
    let mut r = y.clone();
    let mut r_norm = y_norm;
    // The published recursion seeds the ratio with a virtual r_{−1} = 2·y_i
    // so the rule cannot fire before anything was selected; tracking "no
    // completed iteration yet" as None has the same effect for every p.
    let mut prev_norm: Option<f64> = None;
    let initial = residual_state(&r, truth_basis);

    let mut discarded_last_batch = false;
    let mut forced_first_batch = false;
    let halted_by = loop {
        let m = batches.len();
        if r_norm <= floor {
            break HaltReason::ResidualFloor;
        }
        match policy.mode {
            StopMode::FixedIterations(target) => {
                if m >= target {
                    break HaltReason::FixedM;
                }
            }
            StopMode::ResidualRatio => {
                if let Some(prev) = prev_norm {
                    if stopping_check(prev, r_norm, p, n) {
                        if m == 1 {
                            forced_first_batch = true;
                        } else {
                            discarded_last_batch = true;
                        }
                        break HaltReason::RatioRule;
                    }
                }
            }
        }
        if m >= safeguard {
            break HaltReason::Safeguard;
        }
        if taken.iter().all(|&t| t) {
            break HaltReason::CandidatesExhausted;
        }

        // Select the p strongest unselected candidates against r_{m−1}.
        let scores = &ds.points * &r;
        let mut ranked: Vec<(usize, f64)> = (0..num)
            .filter(|&j| !taken[j])
            .map(|j| (j, scores[j].abs()))
            .collect();
        ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        let batch: Vec<usize> = ranked.iter().take(p).map(|&(j, _)| j).collect();
        let partial = batch.len() < p;

        for &j in &batch {
            taken[j] = true;
            let col = ds.point(j);
            basis.push(&col, DEFAULT_RANK_TOL * col.norm());
        }
        // Projecting y_i from scratch (rather than updating r_{m−1}) keeps
        // the residual orthogonal to the whole selection at round-off level.
        let r_new = basis.project_out(&y);
        let delta_norm = (&r - &r_new).norm();
        prev_norm = Some(r_norm);
        r = r_new;
        r_norm = r.norm();
        batches.push(IterationRecord {
            selected: batch,
            state: residual_state(&r, truth_basis),
            delta_norm,
        });

        if partial {
            break HaltReason::CandidatesExhausted;
        }
    };

    let trace = GompTrace {
        point_index: index,
        initial,
        iterations: batches,
        halted_by,
        discarded_last_batch,
        forced_first_batch,
    };

    let support = trace.kept_selected();
    let a = Matrix::from_fn(n, support.len(), |i, t| ds.points[(support[t], i)]);
    let coeffs = numerics::least_squares(&a, &y, DEFAULT_RANK_TOL)
        .expect("design matrix rows match the regressed point");
    let mut full = Vector::zeros(num);
    for (t, &j) in support.iter().enumerate() {
        full[j] = coeffs[t];
    }
    let full_norm = full.norm();
    if full_norm > 0.0 {
        full /= full_norm;
    }
    let rep = SparseRep {
        point_index: index,
        support,
        coeffs,
        normalized_full: full,
    };
    (rep, trace)
}

/// Self-expresses every point of the dataset under one policy. Points are
/// independent, so they run in parallel; results are identical for any
/// thread count.
pub fn sparse_representation(ds: &DataSet, policy: &StopPolicy) -> CoefficientMatrix {
    let reps: Vec<SparseRep> = (0..ds.num_points())
        .into_par_iter()
        .map(|i| gomp_select(ds, i, policy, None).0)
        .collect();
    assemble(ds.num_points(), reps)
}

/// Like [`sparse_representation`], but also returns per-point traces,
/// instrumented against the model's subspaces when it is supplied
/// (requires ground-truth labels on the dataset).
pub fn sparse_representation_with_traces(
    ds: &DataSet,
    policy: &StopPolicy,
    model: Option<&SubspaceModel>,
) -> (CoefficientMatrix, Vec<GompTrace>) {
    let labels = ds.labels.as_deref();
    let basis_for = |i: usize| -> Option<&Matrix> {
        let model = model?;
        let labels = labels?;
        Some(model.basis(labels[i] - 1))
    };
    let results: Vec<(SparseRep, GompTrace)> = (0..ds.num_points())
        .into_par_iter()
        .map(|i| gomp_select(ds, i, policy, basis_for(i)))
        .collect();
    let mut reps = Vec::with_capacity(results.len());
    let mut traces = Vec::with_capacity(results.len());
    for (rep, trace) in results {
        reps.push(rep);
        traces.push(trace);
    }
    (assemble(ds.num_points(), reps), traces)
}

fn assemble(num_points: usize, reps: Vec<SparseRep>) -> CoefficientMatrix {
    let mut c = CoefficientMatrix::zeros(num_points);
    for rep in reps {
        c.set_column(rep.point_index, rep.support, rep.normalized_full);
    }
    c
}
