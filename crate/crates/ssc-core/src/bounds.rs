//! Closed-form lower bounds on the probability that the pursuit selects
//! only true neighbors, plus the batch-allocation optimizer they rest on.
//!
//! All bounds share one parameter set ([`BoundParams`]) describing the
//! regressed cluster: ambient dimension `n`, dataset size `N`, cluster
//! size `|Y_L|`, subspace dimension `d_L`, noise level σ, the inradius
//! proxy τ, batch size `p`, and iteration budget `M`.
//!
//! The iteration-wise bound charges every iteration `m` a loss `J(k_m)`
//! for the number `k_m` of true neighbors it must pick up. Minimizing
//! `Σ J(k_m)` subject to `Σ k_m = k_t` is a symmetric separable-convex
//! program whose solution spreads the total as evenly as integers allow —
//! the two-level sequence of [`optimal_k_sequence`]; [`global_bound`]
//! evaluates the closed form at that solution and [`brute_force_k_min`]
//! provides the exhaustive oracle.
//!
//! Powers are evaluated in log space: exponents here scale with cluster
//! sizes in the thousands, far past what naive `powf` chains survive.

use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::{E, PI};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BoundsError {
    #[error("tau must lie in the open interval (0, 1), got {0}")]
    TauOutOfRange(f64),
    #[error("sigma must be a finite nonnegative number, got {0}")]
    SigmaInvalid(f64),
    #[error("the separation condition requires sigma < 2/3, got {0}")]
    SigmaTooLarge(f64),
    #[error("need {field} to be positive")]
    NonPositive { field: &'static str },
    #[error("cluster size |Y_L| = {y_l} cannot exceed the dataset size N = {n}")]
    ClusterTooLarge { y_l: usize, n: usize },
    #[error("subspace dimension d_L = {d_l} must be below the ambient dimension n = {n}")]
    SubspaceTooLarge { d_l: usize, n: usize },
    #[error(
        "the residual bound needs d_L − p(M−1) > 0, got d_L = {d_l}, p = {p}, M = {m}"
    )]
    TooManyIterations { d_l: usize, p: usize, m: usize },
    #[error("k sequence has length {got}, expected M = {expected}")]
    SequenceLength { expected: usize, got: usize },
    #[error("an iteration cannot select more than p = {p} neighbors, got k_m = {k_m}")]
    BatchTooLarge { p: usize, k_m: usize },
    #[error("total selections k_t = {k_t} cannot exceed p·M = {max}")]
    TotalTooLarge { k_t: usize, max: usize },
    #[error("batch size p = {p} cannot exceed the subspace dimension d_L = {d_l}")]
    BatchExceedsDim { p: usize, d_l: usize },
    #[error("brute force would enumerate (p+1)^M ≈ {size:.2e} sequences, over the 1e7 guard")]
    BruteForceTooLarge { size: f64 },
    #[error("the separation check needs the pairwise affinities")]
    MissingAffinities,
}

/// Shared parameters of the recovery bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundParams {
    /// Ambient dimension n.
    pub ambient_dim: usize,
    /// Total number of points N.
    pub data_size: usize,
    /// Points in the regressed cluster, |Y_L|.
    pub cluster_size: usize,
    /// Dimension d_L of the regressed subspace.
    pub subspace_dim: usize,
    /// Noise level σ of the semi-random model.
    pub sigma: f64,
    /// Inradius proxy τ ∈ (0, 1).
    pub tau: f64,
    /// Neighbors selected per iteration, p.
    pub batch_size: usize,
    /// Iteration budget M.
    pub iterations: usize,
    /// The constant c of the (4 + 2c)/N² failure term.
    pub c_const: f64,
    /// Pairwise subspace affinities, needed only by the separation check.
    pub affinities: Option<Vec<f64>>,
}

impl BoundParams {
    fn validate(&self) -> Result<(), BoundsError> {
        if self.ambient_dim == 0 {
            return Err(BoundsError::NonPositive { field: "ambient_dim" });
        }
        if self.data_size == 0 {
            return Err(BoundsError::NonPositive { field: "data_size" });
        }
        if self.cluster_size == 0 {
            return Err(BoundsError::NonPositive { field: "cluster_size" });
        }
        if self.subspace_dim == 0 {
            return Err(BoundsError::NonPositive { field: "subspace_dim" });
        }
        if self.batch_size == 0 {
            return Err(BoundsError::NonPositive { field: "batch_size" });
        }
        if self.iterations == 0 {
            return Err(BoundsError::NonPositive { field: "iterations" });
        }
        if self.cluster_size > self.data_size {
            return Err(BoundsError::ClusterTooLarge {
                y_l: self.cluster_size,
                n: self.data_size,
            });
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(BoundsError::TauOutOfRange(self.tau));
        }
        if !self.sigma.is_finite() || self.sigma < 0.0 {
            return Err(BoundsError::SigmaInvalid(self.sigma));
        }
        if !self.c_const.is_finite() || self.c_const < 0.0 {
            return Err(BoundsError::NonPositive { field: "c_const" });
        }
        Ok(())
    }

    /// `8·ln²N / d_L`, the log of the recurring `N^{8 ln N / d_L}` scale.
    fn ln_n_power(&self) -> f64 {
        let ln_n = (self.data_size as f64).ln();
        8.0 * ln_n * ln_n / self.subspace_dim as f64
    }

    fn residual_dim(&self) -> Result<usize, BoundsError> {
        let d = self.subspace_dim as i64
            - self.batch_size as i64 * (self.iterations as i64 - 1);
        if d <= 0 {
            return Err(BoundsError::TooManyIterations {
                d_l: self.subspace_dim,
                p: self.batch_size,
                m: self.iterations,
            });
        }
        Ok(d as usize)
    }
}

/// A probability lower bound. `vacuous` marks values at or below zero,
/// which constrain nothing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundValue {
    pub value: f64,
    pub vacuous: bool,
}

impl BoundValue {
    fn from(value: f64) -> Self {
        Self { value, vacuous: value <= 0.0 }
    }
}

/// Outcome of the separation condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparationCheck {
    pub pass: bool,
    pub lhs: f64,
    pub rhs: f64,
}

/// `base^exp` through logs, with the conventions the bounds need:
/// `0^0 = 1`, `0^positive = 0`, and any `x^0 = 1`.
fn pow_log(base: f64, exp: f64) -> f64 {
    debug_assert!(base >= 0.0, "bound bases are nonnegative, got {base}");
    if exp == 0.0 {
        return 1.0;
    }
    if base == 0.0 {
        return if exp > 0.0 { 0.0 } else { f64::INFINITY };
    }
    (exp * base.ln()).exp()
}

/// Volume of the d-dimensional unit ball, `π^{d/2} / Γ(d/2 + 1)`.
pub fn unit_ball_volume(d: usize) -> f64 {
    // lnΓ(d/2 + 1) by the recurrence Γ(x+1) = x·Γ(x), climbing from
    // Γ(1) = 1 (even d) or Γ(1/2) = √π (odd d). Exact to round-off for
    // the half-integer arguments that occur here.
    let mut ln_gamma = if d % 2 == 0 { 0.0 } else { 0.5 * PI.ln() };
    let mut x = if d % 2 == 0 { 1.0 } else { 0.5 };
    while x < d as f64 / 2.0 + 1.0 - 0.25 {
        ln_gamma += x.ln();
        x += 1.0;
    }
    ((d as f64 / 2.0) * PI.ln() - ln_gamma).exp()
}

/// Separation condition between affinity and inradius:
///
/// `max aff + 9√3·d_L(1+σ) / ((8−12σ)√((n−d_L)·ln N)) ≤ τ/(4·ln N)`.
///
/// σ ≥ 2/3 makes the margin term meaningless and is rejected.
pub fn assumption3_check(params: &BoundParams) -> Result<SeparationCheck, BoundsError> {
    let margin = 9.0 * 3.0_f64.sqrt() * params.subspace_dim as f64;
    separation_with_margin(params, margin)
}

/// The separation condition with the margin constant the supporting
/// derivation ends at, `3√(3·d_L)·(3+3σ)`, which grows with `√d_L` rather
/// than `d_L`. Kept alongside [`assumption3_check`] because the two
/// printed forms disagree; this one is the weaker requirement.
pub fn assumption3_check_proof_form(
    params: &BoundParams,
) -> Result<SeparationCheck, BoundsError> {
    let margin = 9.0 * (3.0 * params.subspace_dim as f64).sqrt();
    separation_with_margin(params, margin)
}

fn separation_with_margin(
    params: &BoundParams,
    margin_scale: f64,
) -> Result<SeparationCheck, BoundsError> {
    params.validate()?;
    if params.sigma >= 2.0 / 3.0 {
        return Err(BoundsError::SigmaTooLarge(params.sigma));
    }
    if params.subspace_dim >= params.ambient_dim {
        return Err(BoundsError::SubspaceTooLarge {
            d_l: params.subspace_dim,
            n: params.ambient_dim,
        });
    }
    let affinities = params
        .affinities
        .as_ref()
        .ok_or(BoundsError::MissingAffinities)?;
    if affinities.is_empty() {
        return Err(BoundsError::MissingAffinities);
    }
    let max_aff = affinities.iter().cloned().fold(f64::MIN, f64::max);
    let ln_n = (params.data_size as f64).ln();
    let room = (params.ambient_dim - params.subspace_dim) as f64;
    let lhs = max_aff
        + margin_scale * (1.0 + params.sigma)
            / ((8.0 - 12.0 * params.sigma) * (room * ln_n).sqrt());
    let rhs = params.tau / (4.0 * ln_n);
    Ok(SeparationCheck { pass: lhs <= rhs, lhs, rhs })
}

/// Per-iteration loss `J(k_m)` charged by the iteration-wise bound when an
/// iteration picks up `k_m` true neighbors:
///
/// ```text
/// J(k) = (2e(N−|Y_L|) / ((p−k+1)·N^{8lnN/d_L}))^{p−k+1}
///      + (√(2/π)·τ)^{|Y_L|−d_L−k} · (e(|Y_L|−1)/(k−1))^{k−1} · 1(k>0)
/// ```
///
/// with `(x/0)^0 = 1` at `k = 1`. `k = 0` leaves only the first summand.
pub fn j_term(k_m: usize, params: &BoundParams) -> Result<f64, BoundsError> {
    params.validate()?;
    if k_m > params.batch_size {
        return Err(BoundsError::BatchTooLarge { p: params.batch_size, k_m });
    }
    Ok(j_term_unchecked(k_m, params))
}

fn j_term_unchecked(k_m: usize, params: &BoundParams) -> f64 {
    let n = params.data_size as f64;
    let y = params.cluster_size as f64;
    let d = params.subspace_dim as f64;
    let p = params.batch_size;

    // First summand, (2e(N−|Y_L|)/((p−k+1)·N^{8lnN/d_L}))^{p−k+1}.
    let a_exp = (p - k_m + 1) as f64;
    let scaled = 2.0 * E * (n - y);
    let first = if scaled == 0.0 {
        0.0
    } else {
        (a_exp * (scaled.ln() - a_exp.ln() - params.ln_n_power())).exp()
    };

    if k_m == 0 {
        return first;
    }

    // Second summand in one exp: the τ factor alone can underflow while
    // the combinatorial factor is large.
    let tau_base = (2.0 / PI).sqrt() * params.tau;
    let tau_exp = y - d - k_m as f64;
    let mut ln_second = tau_exp * tau_base.ln();
    if k_m > 1 {
        let ratio = E * (y - 1.0) / (k_m as f64 - 1.0);
        if ratio == 0.0 {
            return first; // |Y_L| = 1: the combinatorial factor is zero.
        }
        ln_second += (k_m as f64 - 1.0) * ratio.ln();
    }
    first + ln_second.exp()
}

/// The `1 − N e^{−n/8} − v(D)(σ/√π)^D` lead shared by the recovery
/// bounds, where `D` is the dimension left to the final residual.
fn bound_lead(params: &BoundParams, residual_dim: usize) -> f64 {
    let n = params.ambient_dim as f64;
    let big_n = params.data_size as f64;
    let noise_term = unit_ball_volume(residual_dim)
        * pow_log(params.sigma / PI.sqrt(), residual_dim as f64);
    1.0 - big_n * (-n / 8.0).exp() - noise_term
}

/// Iteration-wise recovery bound for an explicit sequence `k_1..k_M` of
/// per-iteration true-neighbor counts:
///
/// `1 − N e^{−n/8} − v(D)(σ/√π)^D − Σ_m [J(k_m) + (4+2c)/N²]·1(k_m>0)`
///
/// with `D = d_L − p(M−1)`, which must be positive.
pub fn iteration_bound(params: &BoundParams, k_seq: &[usize]) -> Result<BoundValue, BoundsError> {
    params.validate()?;
    if k_seq.len() != params.iterations {
        return Err(BoundsError::SequenceLength {
            expected: params.iterations,
            got: k_seq.len(),
        });
    }
    for &k in k_seq {
        if k > params.batch_size {
            return Err(BoundsError::BatchTooLarge { p: params.batch_size, k_m: k });
        }
    }
    let residual_dim = params.residual_dim()?;
    let n2 = (params.data_size as f64).powi(2);
    let per_iter_const = (4.0 + 2.0 * params.c_const) / n2;
    let mut losses = 0.0;
    for &k in k_seq {
        if k > 0 {
            losses += j_term_unchecked(k, params) + per_iter_const;
        }
    }
    Ok(BoundValue::from(bound_lead(params, residual_dim) - losses))
}

/// The sequence minimizing `Σ J(k_m)` under `Σ k_m = k_t`, `0 ≤ k_m ≤ p`:
/// spread the total as evenly as integers allow. With `k_t = M·q + r`,
/// that is `r` iterations of `q+1` followed by `M−r` of `q`.
pub fn optimal_k_sequence(k_t: usize, m: usize, p: usize) -> Result<Vec<usize>, BoundsError> {
    if m == 0 {
        return Err(BoundsError::NonPositive { field: "iterations" });
    }
    if p == 0 {
        return Err(BoundsError::NonPositive { field: "batch_size" });
    }
    if k_t > p * m {
        return Err(BoundsError::TotalTooLarge { k_t, max: p * m });
    }
    let q = k_t / m;
    let r = k_t % m;
    let mut seq = vec![q + 1; r];
    seq.resize(m, q);
    Ok(seq)
}

/// Recovery bound optimized over batch allocations: the closed form of
/// the iteration-wise bound at the two-level sequence for a total of
/// `k_t` true neighbors,
///
/// ```text
/// 1 − N e^{−n/8} − v(D)(σ/√π)^D
///   − r·[J(q+1) + (4+2c)/N²]
///   − (M−r)·[J(q) + (4+2c)/N²]·1(q>0),    k_t = M·q + r.
/// ```
pub fn global_bound(params: &BoundParams, k_t: usize) -> Result<BoundValue, BoundsError> {
    params.validate()?;
    if k_t > params.batch_size * params.iterations {
        return Err(BoundsError::TotalTooLarge {
            k_t,
            max: params.batch_size * params.iterations,
        });
    }
    let residual_dim = params.residual_dim()?;
    let m = params.iterations;
    let q = k_t / m;
    let r = k_t % m;
    let n2 = (params.data_size as f64).powi(2);
    let per_iter_const = (4.0 + 2.0 * params.c_const) / n2;

    let mut losses = 0.0;
    if r > 0 {
        losses += r as f64 * (j_term_unchecked(q + 1, params) + per_iter_const);
    }
    if q > 0 {
        losses += (m - r) as f64 * (j_term_unchecked(q, params) + per_iter_const);
    }
    Ok(BoundValue::from(bound_lead(params, residual_dim) - losses))
}

/// Bound on halting exactly when the subspace is exhausted: the ratio
/// rule neither stops a pursuit early nor lets it run past
/// `⌊d_L/p⌋` productive iterations. Needs `p ≤ d_L`.
pub fn halting_bound(params: &BoundParams) -> Result<BoundValue, BoundsError> {
    params.validate()?;
    let p = params.batch_size;
    let d_l = params.subspace_dim;
    if p > d_l {
        return Err(BoundsError::BatchExceedsDim { p, d_l });
    }
    // u = min over integers r with p·r < d_L of d_L − p·r; the minimum
    // sits at the largest such r.
    let u = d_l - p * ((d_l - 1) / p);

    let n = params.ambient_dim as f64;
    let big_n = params.data_size as f64;
    let y = params.cluster_size as f64;
    let tau_base = (2.0 / PI).sqrt() * params.tau;

    let lead = bound_lead(params, u) - 2.0 * p as f64 * (-(n / p as f64).sqrt()).exp();
    let scatter = 2.0 * E * (big_n - y) * (-params.ln_n_power()).exp();
    let tau_term = pow_log(tau_base, y - d_l as f64 - p as f64);
    let comb = if p == 1 {
        1.0
    } else {
        pow_log(E * (y - 1.0) / (p as f64 - 1.0), p as f64 - 1.0)
    };
    let per_iter = scatter
        + tau_term * comb
        + (4.0 + 2.0 * params.c_const) / big_n.powi(2);
    Ok(BoundValue::from(lead - (d_l / p) as f64 * per_iter))
}

/// Multi-neighbor comparison form: the iteration-wise bound when every
/// iteration must pick up the same count `k`.
pub fn gomp_comparison_bound(params: &BoundParams, k: usize) -> Result<BoundValue, BoundsError> {
    params.validate()?;
    if k == 0 {
        return Err(BoundsError::NonPositive { field: "k" });
    }
    if k > params.batch_size {
        return Err(BoundsError::BatchTooLarge { p: params.batch_size, k_m: k });
    }
    let residual_dim = params.residual_dim()?;
    let m = params.iterations as f64;
    let n2 = (params.data_size as f64).powi(2);
    let loss = m * (j_term_unchecked(k, params) + (4.0 + 2.0 * params.c_const) / n2);
    Ok(BoundValue::from(bound_lead(params, residual_dim) - loss))
}

/// Single-neighbor comparison form over the same `k·M` recoveries: the
/// one-at-a-time pursuit needs `k·M` iterations, each paying the `p = 1`
/// losses, and its residual keeps only `d_L − pM + 1` free dimensions.
pub fn omp_comparison_bound(params: &BoundParams, k: usize) -> Result<BoundValue, BoundsError> {
    params.validate()?;
    if k == 0 {
        return Err(BoundsError::NonPositive { field: "k" });
    }
    let d = params.subspace_dim as i64
        - (params.batch_size * params.iterations) as i64
        + 1;
    if d <= 0 {
        return Err(BoundsError::TooManyIterations {
            d_l: params.subspace_dim,
            p: params.batch_size,
            m: params.iterations,
        });
    }
    let residual_dim = d as usize;
    let big_n = params.data_size as f64;
    let y = params.cluster_size as f64;
    let km = (k * params.iterations) as f64;
    let tau_base = (2.0 / PI).sqrt() * params.tau;

    let scatter = 2.0 * km * E * (big_n - y) * (-params.ln_n_power()).exp();
    let tau_term = km * pow_log(tau_base, y - params.subspace_dim as f64 - 1.0);
    let tail = (4.0 + 2.0 * params.c_const) * km / big_n.powi(2);
    Ok(BoundValue::from(
        bound_lead(params, residual_dim) - scatter - tau_term - tail,
    ))
}

/// Exhaustive minimizer of `Σ J(k_m)` over all sequences with
/// `Σ k_m = k_t` and `0 ≤ k_m ≤ p`. Guarded to `(p+1)^M ≤ 10^7`.
pub fn brute_force_k_min(
    k_t: usize,
    m: usize,
    p: usize,
    params: &BoundParams,
) -> Result<(Vec<usize>, f64), BoundsError> {
    params.validate()?;
    if m == 0 {
        return Err(BoundsError::NonPositive { field: "iterations" });
    }
    if p == 0 {
        return Err(BoundsError::NonPositive { field: "batch_size" });
    }
    if k_t > p * m {
        return Err(BoundsError::TotalTooLarge { k_t, max: p * m });
    }
    let size = ((p + 1) as f64).powi(m as i32);
    if size > 1e7 {
        return Err(BoundsError::BruteForceTooLarge { size });
    }
    let costs: Vec<f64> = (0..=p).map(|k| j_term_unchecked(k, params)).collect();

    fn search(
        pos: usize,
        remaining: usize,
        m: usize,
        p: usize,
        costs: &[f64],
        acc: f64,
        prefix: &mut Vec<usize>,
        best: &mut (Vec<usize>, f64),
    ) {
        if pos == m {
            if acc < best.1 {
                *best = (prefix.clone(), acc);
            }
            return;
        }
        let slots_left = m - pos - 1;
        for k in 0..=p.min(remaining) {
            // The rest of the sequence must be able to absorb what remains.
            if remaining - k > p * slots_left {
                continue;
            }
            prefix.push(k);
            search(pos + 1, remaining - k, m, p, costs, acc + costs[k], prefix, best);
            prefix.pop();
        }
    }

    let mut best = (Vec::new(), f64::INFINITY);
    let mut prefix = Vec::with_capacity(m);
    search(0, k_t, m, p, &costs, 0.0, &mut prefix, &mut best);
    Ok(best)
}

/// Empirical check of the two inner-product concentration bounds for a
/// unit vector `a` uniform on the sphere in Rᵐ against an independent
/// Gaussian `b`:
///
/// * `Pr{|aᵀb| > ε‖b‖} ≤ 2·e^{−mε²/2}`
/// * `Pr{|aᵀb| < ε‖b‖/√m} ≤ √(2/π)·ε`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConcentrationResult {
    pub upper_empirical: f64,
    pub upper_bound: f64,
    pub lower_empirical: f64,
    pub lower_bound: f64,
    pub trials: usize,
}

pub fn mc_concentration<R: Rng>(
    m: usize,
    eps: f64,
    trials: usize,
    rng: &mut R,
) -> ConcentrationResult {
    assert!(m >= 1, "dimension must be positive");
    assert!(eps > 0.0, "threshold must be positive");
    assert!(trials >= 1, "need at least one trial");
    let sqrt_m = (m as f64).sqrt();
    let mut above = 0usize;
    let mut below = 0usize;
    let mut a = vec![0.0f64; m];
    let mut b = vec![0.0f64; m];
    for _ in 0..trials {
        let a_norm = loop {
            for x in a.iter_mut() {
                *x = rng.sample(StandardNormal);
            }
            let norm2: f64 = a.iter().map(|x| x * x).sum();
            if norm2 > 0.0 {
                break norm2.sqrt();
            }
        };
        for x in b.iter_mut() {
            *x = rng.sample(StandardNormal);
        }
        let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>() / a_norm;
        let b_norm = b.iter().map(|y| y * y).sum::<f64>().sqrt();
        if dot.abs() > eps * b_norm {
            above += 1;
        }
        if dot.abs() < eps * b_norm / sqrt_m {
            below += 1;
        }
    }
    ConcentrationResult {
        upper_empirical: above as f64 / trials as f64,
        upper_bound: 2.0 * (-(m as f64) * eps * eps / 2.0).exp(),
        lower_empirical: below as f64 / trials as f64,
        lower_bound: (2.0 / PI).sqrt() * eps,
        trials,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeds;
    use approx::assert_abs_diff_eq;

    fn reference_params() -> BoundParams {
        BoundParams {
            ambient_dim: 10_000,
            data_size: 10_000,
            cluster_size: 3_000,
            subspace_dim: 20,
            sigma: 0.01,
            tau: 0.5,
            batch_size: 3,
            iterations: 5,
            c_const: 1.0,
            affinities: None,
        }
    }

    #[test]
    fn unit_ball_volumes_match_known_values() {
        assert_abs_diff_eq!(unit_ball_volume(0), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(unit_ball_volume(1), 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(unit_ball_volume(2), PI, epsilon = 1e-14);
        assert_abs_diff_eq!(unit_ball_volume(3), 4.0 * PI / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn unit_ball_volume_satisfies_recurrence() {
        // v(d) = v(d−2)·2π/d.
        for d in 2..60 {
            let expected = unit_ball_volume(d - 2) * 2.0 * PI / d as f64;
            assert_abs_diff_eq!(
                unit_ball_volume(d),
                expected,
                epsilon = 1e-12 * expected.max(1e-300)
            );
        }
    }

    #[test]
    fn optimal_sequence_spreads_evenly() {
        assert_eq!(optimal_k_sequence(7, 3, 3).unwrap(), vec![3, 2, 2]);
        assert_eq!(optimal_k_sequence(6, 3, 2).unwrap(), vec![2, 2, 2]);
        assert_eq!(optimal_k_sequence(0, 4, 3).unwrap(), vec![0, 0, 0, 0]);
        assert_eq!(optimal_k_sequence(5, 4, 2).unwrap(), vec![2, 1, 1, 1]);
        assert_eq!(
            optimal_k_sequence(9, 2, 3).unwrap_err(),
            BoundsError::TotalTooLarge { k_t: 9, max: 6 }
        );
    }

    #[test]
    fn j_term_at_zero_keeps_only_the_scatter_summand() {
        let params = reference_params();
        let j0 = j_term(0, &params).unwrap();
        // Hand transcription of the first summand at k = 0.
        let a_exp = (params.batch_size + 1) as f64;
        let ln_n = (params.data_size as f64).ln();
        let expected = (a_exp
            * ((2.0 * E * 7000.0).ln()
                - a_exp.ln()
                - 8.0 * ln_n * ln_n / params.subspace_dim as f64))
            .exp();
        assert_abs_diff_eq!(j0, expected, epsilon = 1e-15 * expected);
        assert!(j0 > 0.0);
    }

    #[test]
    fn j_term_at_one_uses_the_empty_product_convention() {
        let params = reference_params();
        let j1 = j_term(1, &params).unwrap();
        let a_exp = params.batch_size as f64;
        let ln_n = (params.data_size as f64).ln();
        let first = (a_exp
            * ((2.0 * E * 7000.0).ln()
                - a_exp.ln()
                - 8.0 * ln_n * ln_n / params.subspace_dim as f64))
            .exp();
        // Second summand: (√(2/π)·τ)^{|Y_L|−d_L−1}, combinatorial factor 1.
        let tau_base = (2.0 / PI).sqrt() * 0.5;
        let second = (2979.0 * tau_base.ln()).exp();
        assert_abs_diff_eq!(j1, first + second, epsilon = 1e-15 * (first + second));
    }

    #[test]
    fn j_term_rejects_oversized_batches() {
        let params = reference_params();
        assert_eq!(
            j_term(4, &params).unwrap_err(),
            BoundsError::BatchTooLarge { p: 3, k_m: 4 }
        );
    }

    #[test]
    fn iteration_bound_specializes_to_the_single_neighbor_form() {
        // With p = 1 and k_m ≡ 1 the bound collapses to
        // 1 − N e^{−n/8} − v(d_L−M+1)(σ/√π)^{d_L−M+1}
        //   − M·[2e(N−|Y_L|)/N^{8lnN/d_L} + (√(2/π)τ)^{|Y_L|−d_L−1} + (4+2c)/N²],
        // transcribed here directly.
        let mut params = reference_params();
        params.batch_size = 1;
        let m = params.iterations;
        let got = iteration_bound(&params, &vec![1; m]).unwrap().value;

        let n = params.ambient_dim as f64;
        let big_n = params.data_size as f64;
        let y = params.cluster_size as f64;
        let d = params.subspace_dim;
        let residual_dim = d - m + 1;
        let ln_n = big_n.ln();
        let scatter = 2.0 * E * (big_n - y) * (-8.0 * ln_n * ln_n / d as f64).exp();
        let tau_term = ((y - d as f64 - 1.0) * ((2.0 / PI).sqrt() * params.tau).ln()).exp();
        let expected = 1.0
            - big_n * (-n / 8.0).exp()
            - unit_ball_volume(residual_dim)
                * (params.sigma / PI.sqrt()).powi(residual_dim as i32)
            - m as f64 * (scatter + tau_term + (4.0 + 2.0 * params.c_const) / big_n.powi(2));
        assert_abs_diff_eq!(got, expected, epsilon = 1e-12);
    }

    #[test]
    fn global_bound_equals_iteration_bound_at_the_optimal_sequence() {
        let params = reference_params();
        let p = params.batch_size;
        let m = params.iterations;
        for k_t in 0..=(p * m) {
            let seq = optimal_k_sequence(k_t, m, p).unwrap();
            let a = global_bound(&params, k_t).unwrap();
            let b = iteration_bound(&params, &seq).unwrap();
            assert_abs_diff_eq!(a.value, b.value, epsilon = 1e-12);
            assert_eq!(a.vacuous, b.vacuous);
        }
    }

    #[test]
    fn brute_force_confirms_the_two_level_minimizer() {
        let mut params = reference_params();
        for p in 1..=3usize {
            for m in 1..=3usize {
                params.batch_size = p;
                params.iterations = m;
                if params.residual_dim().is_err() {
                    continue;
                }
                for k_t in 0..=(p * m) {
                    let (_, brute) = brute_force_k_min(k_t, m, p, &params).unwrap();
                    let two_level: f64 = optimal_k_sequence(k_t, m, p)
                        .unwrap()
                        .iter()
                        .map(|&k| j_term(k, &params).unwrap())
                        .sum();
                    assert!(
                        (brute - two_level).abs() <= 1e-12,
                        "p={p} m={m} k_t={k_t}: {brute} vs {two_level}"
                    );
                }
            }
        }
    }

    #[test]
    fn transfers_toward_even_sequences_never_raise_the_loss() {
        // Moving one unit from a taller entry to a shorter one is a step
        // down the majorization order; the separable loss must not grow.
        let params = reference_params();
        let p = params.batch_size;
        let mut rng = seeds::stream(99, &[]);
        use rand::Rng;
        for _ in 0..200 {
            let m = rng.random_range(2usize..=5);
            let mut seq: Vec<usize> =
                (0..m).map(|_| rng.random_range(0..=p)).collect();
            let loss = |s: &[usize]| -> f64 {
                s.iter().map(|&k| j_term_unchecked(k, &params)).sum()
            };
            let before = loss(&seq);
            // Pick a donor/receiver pair differing by at least 2.
            let mut pair = None;
            'outer: for i in 0..m {
                for j in 0..m {
                    if seq[i] >= seq[j] + 2 {
                        pair = Some((i, j));
                        break 'outer;
                    }
                }
            }
            if let Some((i, j)) = pair {
                seq[i] -= 1;
                seq[j] += 1;
                let after = loss(&seq);
                assert!(
                    after <= before * (1.0 + 1e-12) + 1e-300,
                    "transfer raised loss: {before} -> {after} at {seq:?}"
                );
            }
        }
    }

    #[test]
    fn bounds_improve_with_ambient_dimension() {
        let mut params = reference_params();
        let mut last = f64::NEG_INFINITY;
        for n in [500, 1_000, 2_000, 4_000, 10_000] {
            params.ambient_dim = n;
            let v = global_bound(&params, 15).unwrap().value;
            assert!(v >= last, "bound shrank from {last} to {v} at n = {n}");
            last = v;
        }
    }

    #[test]
    fn multi_neighbor_form_beats_single_neighbor_form() {
        let params = reference_params();
        let gomp = gomp_comparison_bound(&params, 2).unwrap();
        let omp = omp_comparison_bound(&params, 2).unwrap();
        assert!(
            gomp.value > omp.value,
            "expected {} > {}",
            gomp.value,
            omp.value
        );
    }

    #[test]
    fn halting_bound_uses_the_residual_remainder_dimension() {
        // d_L = 7, p = 3: the largest r with 3r < 7 is 2, so u = 1.
        // d_L = 6, p = 3: r = 1 and u = 3. The remainder dimension only
        // shows up through the volume factor, so probe it via σ.
        let mut params = reference_params();
        params.subspace_dim = 7;
        params.iterations = 2;
        let b7 = halting_bound(&params).unwrap();
        params.subspace_dim = 6;
        let b6 = halting_bound(&params).unwrap();
        assert!(b7.value.is_finite() && b6.value.is_finite());
        // σ = 0 kills the volume term entirely; compare against that.
        params.sigma = 0.0;
        let clean = halting_bound(&params).unwrap();
        assert!(clean.value >= b6.value - 1e-12);
    }

    #[test]
    fn vacuous_bounds_are_flagged() {
        let mut params = reference_params();
        params.ambient_dim = 8; // N e^{−1} swamps the bound
        params.subspace_dim = 6;
        params.batch_size = 1;
        params.iterations = 1;
        let b = iteration_bound(&params, &[1]).unwrap();
        assert!(b.value < 0.0);
        assert!(b.vacuous);
    }

    #[test]
    fn too_many_iterations_is_an_error() {
        let mut params = reference_params();
        params.subspace_dim = 6;
        params.batch_size = 3;
        params.iterations = 3; // d_L − p(M−1) = 0
        assert_eq!(
            iteration_bound(&params, &[3, 3, 0]).unwrap_err(),
            BoundsError::TooManyIterations { d_l: 6, p: 3, m: 3 }
        );
    }

    #[test]
    fn invalid_tau_is_rejected() {
        let mut params = reference_params();
        params.tau = 1.2;
        assert_eq!(
            global_bound(&params, 3).unwrap_err(),
            BoundsError::TauOutOfRange(1.2)
        );
    }

    #[test]
    fn separation_check_requires_small_sigma_and_affinities() {
        let mut params = reference_params();
        params.affinities = Some(vec![0.1, 0.2]);
        params.sigma = 0.7;
        assert_eq!(
            assumption3_check(&params).unwrap_err(),
            BoundsError::SigmaTooLarge(0.7)
        );
        params.sigma = 0.01;
        params.affinities = None;
        assert_eq!(
            assumption3_check(&params).unwrap_err(),
            BoundsError::MissingAffinities
        );
    }

    #[test]
    fn separation_check_evaluates_the_printed_margin() {
        let mut params = reference_params();
        params.affinities = Some(vec![0.01, 0.005]);
        let check = assumption3_check(&params).unwrap();
        let ln_n = (params.data_size as f64).ln();
        let margin = 9.0 * 3.0_f64.sqrt() * 20.0 * 1.01
            / ((8.0 - 12.0 * 0.01) * ((10_000.0 - 20.0) * ln_n).sqrt());
        assert_abs_diff_eq!(check.lhs, 0.01 + margin, epsilon = 1e-15);
        assert_abs_diff_eq!(check.rhs, 0.5 / (4.0 * ln_n), epsilon = 1e-15);
        assert_eq!(check.pass, check.lhs <= check.rhs);
    }

    #[test]
    fn proof_form_margin_is_weaker_for_high_dimensions() {
        let mut params = reference_params();
        params.affinities = Some(vec![0.01]);
        let printed = assumption3_check(&params).unwrap();
        let proof = assumption3_check_proof_form(&params).unwrap();
        // 9√3·d_L vs 9√(3)·√(3)·√(d_L)... the proof margin scales with
        // √d_L and is smaller once d_L > 3.
        assert!(proof.lhs < printed.lhs);
        assert_eq!(proof.rhs, printed.rhs);
    }

    #[test]
    fn concentration_bounds_hold_on_a_quick_run() {
        let mut rng = seeds::stream(4242, &[]);
        let result = mc_concentration(50, 0.5, 2_000, &mut rng);
        assert!(result.upper_empirical <= result.upper_bound + 0.05);
        assert!(result.lower_empirical <= result.lower_bound + 0.05);
        assert!(result.upper_bound > 0.0 && result.lower_bound > 0.0);
    }
}
