//! Seeded Monte Carlo experiments over Rayleigh channel draws.
//!
//! Trial `t` of configuration `(kind, M, K)` always draws from
//! `trial_rng(base_seed, config_id(kind, M, K), t)`. Trials run on a rayon
//! pool, results are collected in trial order and reduced sequentially, so
//! a report depends only on its spec and never on the worker count.

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{epsilon_estimate, error_upper_bound, MAX_ESTIMATE_TERMS};
use crate::channel::{gram, sample_channel, trial_rng, GramMatrix};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig_extremes, iteration_spectral_radius};
use crate::neumann::residual_powers;
use crate::report::{Db, ReportMeta, Rows, TrialCount};
use crate::stats::ProbabilityEstimate;

/// Default ceiling on `sum(trials * K * M)` for one experiment.
pub const DEFAULT_BUDGET: u128 = 100_000_000_000;

/// Largest N for SIR experiments.
pub const MAX_SIR_TERMS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Convergence,
    Ddm,
    Sir,
    BoundComparison,
}

impl ExperimentKind {
    fn stream_tag(self) -> u64 {
        match self {
            ExperimentKind::Convergence => 1,
            ExperimentKind::Ddm => 2,
            // bound comparison reuses the SIR draws
            ExperimentKind::Sir | ExperimentKind::BoundComparison => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    #[serde(rename = "M")]
    pub antennas: usize,
    #[serde(rename = "K")]
    pub k_list: Vec<usize>,
    #[serde(rename = "N")]
    pub n_list: Vec<usize>,
    pub trials: usize,
    pub base_seed: u64,
    pub kind: ExperimentKind,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Parameter("trials must be at least 1".into()));
        }
        if self.k_list.is_empty() {
            return Err(Error::Parameter("empty user list".into()));
        }
        for &k in &self.k_list {
            if k == 0 || k > self.antennas {
                return Err(Error::Dimension(format!(
                    "need M >= K >= 1, got M = {}, K = {k}",
                    self.antennas
                )));
            }
        }
        match self.kind {
            ExperimentKind::Sir | ExperimentKind::BoundComparison => {
                if self.n_list.is_empty() {
                    return Err(Error::Parameter("empty term list".into()));
                }
                if let Some(n) = self.n_list.iter().find(|n| !(1..=MAX_SIR_TERMS).contains(*n)) {
                    return Err(Error::Parameter(format!("N = {n} outside 1..={MAX_SIR_TERMS}")));
                }
                if self.kind == ExperimentKind::BoundComparison && self.antennas <= 4 {
                    return Err(Error::Domain(format!("bound needs M > 4, got {}", self.antennas)));
                }
            }
            ExperimentKind::Convergence | ExperimentKind::Ddm => {}
        }
        Ok(())
    }

    pub fn work_units(&self) -> u128 {
        self.k_list
            .iter()
            .map(|&k| self.trials as u128 * k as u128 * self.antennas as u128)
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub workers: usize,
    pub budget: u128,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            budget: DEFAULT_BUDGET,
        }
    }
}

impl RunOptions {
    pub fn with_workers(workers: usize) -> Self {
        Self {
            workers,
            ..Self::default()
        }
    }
}

pub fn config_id(kind: ExperimentKind, antennas: usize, users: usize) -> u64 {
    (kind.stream_tag() << 56) ^ ((antennas as u64) << 28) ^ users as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvergenceOutcome {
    /// `rho(I - D^{-1} G) < 1`
    pub exact_ok: bool,
    /// `lambda_max(G) < 2M`
    pub approx_ok: bool,
}

pub fn convergence_check(g: &GramMatrix, antennas: usize) -> Result<ConvergenceOutcome> {
    let rho = iteration_spectral_radius(g)?;
    let lambda_max = hermitian_eig_extremes(g.matrix())?.lambda_max;
    Ok(ConvergenceOutcome {
        exact_ok: rho < 1.0,
        approx_ok: lambda_max < 2.0 * antennas as f64,
    })
}

pub fn convergence_trial<R: Rng + ?Sized>(antennas: usize, users: usize, rng: &mut R) -> Result<ConvergenceOutcome> {
    let g = gram(&sample_channel(antennas, users, rng)?);
    convergence_check(&g, antennas)
}

/// Row sum of normalized correlations, `sum_{j != i} |r_ij|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Delta {
    pub row: usize,
    pub value: f64,
}

pub fn deltas(g: &GramMatrix) -> Vec<Delta> {
    let k = g.dim();
    let m = g.matrix();
    let d = g.diag();
    (0..k)
        .map(|i| Delta {
            row: i,
            value: (0..k)
                .filter(|&j| j != i)
                .map(|j| m[(i, j)].norm() / (d[i] * d[j]).sqrt())
                .sum(),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DdmOutcome {
    /// `|g_ii| > sum_{j != i} |g_ij|` for every row.
    pub strict_ddm: bool,
    /// `Delta_i < 1` for every row.
    pub delta_ok: bool,
    pub max_delta: f64,
}

pub fn ddm_check(g: &GramMatrix) -> DdmOutcome {
    let k = g.dim();
    let m = g.matrix();
    let strict_ddm = (0..k).all(|i| {
        let off: f64 = (0..k).filter(|&j| j != i).map(|j| m[(i, j)].norm()).sum();
        g.diag()[i].abs() > off
    });
    let max_delta = deltas(g).iter().map(|d| d.value).fold(0.0, f64::max);
    DdmOutcome {
        strict_ddm,
        delta_ok: max_delta < 1.0,
        max_delta,
    }
}

pub fn ddm_trial<R: Rng + ?Sized>(antennas: usize, users: usize, rng: &mut R) -> Result<DdmOutcome> {
    Ok(ddm_check(&gram(&sample_channel(antennas, users, rng)?)))
}

/// `||Z^N||_F^2` for one channel draw.
pub fn sir_trial<R: Rng + ?Sized>(antennas: usize, users: usize, terms: usize, rng: &mut R) -> Result<f64> {
    if terms == 0 {
        return Err(Error::Parameter("N must be at least 1".into()));
    }
    Ok(sir_trial_powers(antennas, users, terms, rng)?[terms - 1])
}

/// `||Z^n||_F^2` for `n = 1..=max_terms` on one channel draw.
pub fn sir_trial_powers<R: Rng + ?Sized>(
    antennas: usize,
    users: usize,
    max_terms: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    residual_powers(&gram(&sample_channel(antennas, users, rng)?), max_terms)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    #[serde(rename = "M")]
    pub antennas: usize,
    #[serde(rename = "K")]
    pub users: usize,
    pub trials: usize,
    pub exact_successes: usize,
    pub exact_p: f64,
    pub exact_ci_low: f64,
    pub exact_ci_high: f64,
    pub approx_successes: usize,
    pub approx_p: f64,
    pub approx_ci_low: f64,
    pub approx_ci_high: f64,
    /// Trials on which both conditions gave the same answer.
    pub agreement: usize,
    pub seed: u64,
}

impl ConvergenceRow {
    pub fn exact(&self) -> ProbabilityEstimate {
        ProbabilityEstimate::new(self.exact_successes, self.trials)
    }

    pub fn approx(&self) -> ProbabilityEstimate {
        ProbabilityEstimate::new(self.approx_successes, self.trials)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DdmRow {
    #[serde(rename = "M")]
    pub antennas: usize,
    #[serde(rename = "K")]
    pub users: usize,
    pub trials: usize,
    pub strict_successes: usize,
    pub strict_p: f64,
    pub strict_ci_low: f64,
    pub strict_ci_high: f64,
    pub delta_successes: usize,
    pub delta_p: f64,
    pub delta_ci_low: f64,
    pub delta_ci_high: f64,
    pub mean_max_delta: f64,
    pub seed: u64,
}

impl DdmRow {
    pub fn strict(&self) -> ProbabilityEstimate {
        ProbabilityEstimate::new(self.strict_successes, self.trials)
    }

    pub fn delta(&self) -> ProbabilityEstimate {
        ProbabilityEstimate::new(self.delta_successes, self.trials)
    }
}

/// One (M, K, N) point of an SIR curve, all in dB.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SirCurvePoint {
    #[serde(rename = "M")]
    pub antennas: usize,
    #[serde(rename = "K")]
    pub users: usize,
    #[serde(rename = "N")]
    pub terms: usize,
    /// `K / mean ||Z^N||_F^2` over the trials.
    pub sir_exact_db: Db,
    /// From the closed-form estimate, when one exists for N.
    pub sir_estimated_db: Option<Db>,
    /// From the loose upper bound on the residual.
    pub sir_lower_bound_db: Option<Db>,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub spec: ExperimentSpec,
    pub rows: Rows,
    pub meta: ReportMeta,
}

fn trial_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Parameter(format!("cannot start {workers} workers: {e}")))
}

fn run_trials<T, F>(pool: &rayon::ThreadPool, trials: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    pool.install(|| (0..trials as u64).into_par_iter().map(f).collect())
}

pub fn run_experiment(spec: &ExperimentSpec, opts: &RunOptions) -> Result<ExperimentReport> {
    spec.validate()?;
    let requested = spec.work_units();
    if requested > opts.budget {
        return Err(Error::Budget {
            requested,
            budget: opts.budget,
        });
    }
    let start = Instant::now();
    let pool = trial_pool(opts.workers)?;
    let m = spec.antennas;
    let seed = spec.base_seed;
    let rows = match spec.kind {
        ExperimentKind::Convergence => Rows::Convergence(
            spec.k_list
                .iter()
                .map(|&k| convergence_row(&pool, m, k, spec.trials, seed))
                .collect::<Result<_>>()?,
        ),
        ExperimentKind::Ddm => Rows::Ddm(
            spec.k_list
                .iter()
                .map(|&k| ddm_row(&pool, m, k, spec.trials, seed))
                .collect::<Result<_>>()?,
        ),
        ExperimentKind::Sir | ExperimentKind::BoundComparison => {
            let with_bound = spec.kind == ExperimentKind::BoundComparison;
            let mut points = Vec::new();
            for &k in &spec.k_list {
                points.extend(sir_points(&pool, m, k, &spec.n_list, spec.trials, seed, with_bound)?);
            }
            Rows::Sir(points)
        }
    };
    Ok(ExperimentReport {
        spec: spec.clone(),
        rows,
        meta: ReportMeta {
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            wall_time_s: start.elapsed().as_secs_f64(),
            configurations: spec
                .k_list
                .iter()
                .map(|&k| TrialCount {
                    antennas: m,
                    users: k,
                    trials: spec.trials,
                })
                .collect(),
        },
    })
}

fn convergence_row(pool: &rayon::ThreadPool, m: usize, k: usize, trials: usize, seed: u64) -> Result<ConvergenceRow> {
    let id = config_id(ExperimentKind::Convergence, m, k);
    let outcomes = run_trials(pool, trials, |t| convergence_trial(m, k, &mut trial_rng(seed, id, t)))?;
    let exact_successes = outcomes.iter().filter(|o| o.exact_ok).count();
    let approx_successes = outcomes.iter().filter(|o| o.approx_ok).count();
    let agreement = outcomes.iter().filter(|o| o.exact_ok == o.approx_ok).count();
    let exact = ProbabilityEstimate::new(exact_successes, trials);
    let approx = ProbabilityEstimate::new(approx_successes, trials);
    Ok(ConvergenceRow {
        antennas: m,
        users: k,
        trials,
        exact_successes,
        exact_p: exact.p_hat,
        exact_ci_low: exact.ci_low,
        exact_ci_high: exact.ci_high,
        approx_successes,
        approx_p: approx.p_hat,
        approx_ci_low: approx.ci_low,
        approx_ci_high: approx.ci_high,
        agreement,
        seed,
    })
}

fn ddm_row(pool: &rayon::ThreadPool, m: usize, k: usize, trials: usize, seed: u64) -> Result<DdmRow> {
    let id = config_id(ExperimentKind::Ddm, m, k);
    let outcomes = run_trials(pool, trials, |t| ddm_trial(m, k, &mut trial_rng(seed, id, t)))?;
    let strict_successes = outcomes.iter().filter(|o| o.strict_ddm).count();
    let delta_successes = outcomes.iter().filter(|o| o.delta_ok).count();
    let mean_max_delta = outcomes.iter().map(|o| o.max_delta).sum::<f64>() / trials as f64;
    let strict = ProbabilityEstimate::new(strict_successes, trials);
    let delta = ProbabilityEstimate::new(delta_successes, trials);
    Ok(DdmRow {
        antennas: m,
        users: k,
        trials,
        strict_successes,
        strict_p: strict.p_hat,
        strict_ci_low: strict.ci_low,
        strict_ci_high: strict.ci_high,
        delta_successes,
        delta_p: delta.p_hat,
        delta_ci_low: delta.ci_low,
        delta_ci_high: delta.ci_high,
        mean_max_delta,
        seed,
    })
}

/// Mean `||Z^n||_F^2` for `n = 1..=max_terms`, one channel draw per trial
/// shared across all n.
pub fn mean_residual_powers(
    antennas: usize,
    users: usize,
    max_terms: usize,
    trials: usize,
    seed: u64,
    opts: &RunOptions,
) -> Result<Vec<f64>> {
    if trials == 0 {
        return Err(Error::Parameter("trials must be at least 1".into()));
    }
    let pool = trial_pool(opts.workers)?;
    mean_powers(&pool, antennas, users, max_terms, trials, seed)
}

fn mean_powers(
    pool: &rayon::ThreadPool,
    m: usize,
    k: usize,
    max_terms: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let id = config_id(ExperimentKind::Sir, m, k);
    let per_trial = run_trials(pool, trials, |t| {
        sir_trial_powers(m, k, max_terms, &mut trial_rng(seed, id, t))
    })?;
    let mut sums = vec![0.0; max_terms];
    for powers in &per_trial {
        for (s, p) in sums.iter_mut().zip(powers) {
            *s += p;
        }
    }
    Ok(sums.into_iter().map(|s| s / trials as f64).collect())
}

fn sir_points(
    pool: &rayon::ThreadPool,
    m: usize,
    k: usize,
    n_list: &[usize],
    trials: usize,
    seed: u64,
    with_bound: bool,
) -> Result<Vec<SirCurvePoint>> {
    let max_terms = n_list.iter().copied().max().unwrap_or(1);
    let means = mean_powers(pool, m, k, max_terms, trials, seed)?;
    let to_db = |eps: f64| Db(10.0 * (k as f64 / eps).log10());
    n_list
        .iter()
        .map(|&n| {
            let estimated = if n <= MAX_ESTIMATE_TERMS {
                Some(to_db(epsilon_estimate(m, k, n)?.epsilon))
            } else {
                None
            };
            let bound = if with_bound {
                error_upper_bound(m, k, n).map(to_db)
            } else {
                None
            };
            Ok(SirCurvePoint {
                antennas: m,
                users: k,
                terms: n,
                sir_exact_db: to_db(means[n - 1]),
                sir_estimated_db: estimated,
                sir_lower_bound_db: bound,
                trials,
                seed,
            })
        })
        .collect()
}

/// Exact, estimated and bound-derived SIR for every (K, N).
pub fn bound_comparison(
    antennas: usize,
    k_list: &[usize],
    n_list: &[usize],
    trials: usize,
    seed: u64,
    opts: &RunOptions,
) -> Result<Vec<SirCurvePoint>> {
    let spec = ExperimentSpec {
        antennas,
        k_list: k_list.to_vec(),
        n_list: n_list.to_vec(),
        trials,
        base_seed: seed,
        kind: ExperimentKind::BoundComparison,
    };
    match run_experiment(&spec, opts)?.rows {
        Rows::Sir(points) => Ok(points),
        _ => unreachable!("bound comparison yields SIR rows"),
    }
}
