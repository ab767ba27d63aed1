//! The experiment harness: seeded parameter grids run in parallel, one
//! module per experiment kind.

use rayon::prelude::*;
use rayon::ThreadPool;
use serde::{Deserialize, Serialize};
use statcost_core::oracles::{closed_form_profile, coverage_shapley, exact_shapley};
use statcost_core::rng::{derive_seed, name_seed};
use statcost_core::{Game, EXHAUSTIVE_LIMIT};

use crate::error::{CliError, CliResult};
use crate::report::{KindOutput, Report};

pub mod additive;
pub mod core_generalization;
pub mod curvature;
pub mod dd_audit;
pub mod dsh;
pub mod indistinguishability;
pub mod partition;

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "STATCOST_WORKERS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    /// Repetitions per grid point.
    pub seeds: usize,
    /// Defaults to a hash of `name`. Reports always carry the resolved
    /// value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_seed: Option<u64>,
    #[serde(flatten)]
    pub experiment: Experiment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "kebab-case")]
pub enum Experiment {
    AdditiveWarmup(additive::Params),
    CoreGeneralization(core_generalization::Params),
    Curvature(curvature::Params),
    Dsh(dsh::Params),
    DdAudit(dd_audit::Params),
    Indistinguishability(indistinguishability::Params),
    PartitionExhibit(partition::Params),
}

/// `(kind, description)` for every experiment kind.
pub const KINDS: &[(&str, &str)] = &[
    (
        "additive-warmup",
        "marginal estimator and scaled additive core on an additive game (params: weights, m, epsilon)",
    ),
    (
        "core-generalization",
        "empirical core trained on m samples, violation rate on fresh and exhaustive data (params: game, dist, m_grid, eval_m, epsilon, delta, confidence, mode, max_cost, exhaustive, resample_game)",
    ),
    (
        "curvature",
        "curvature-scaled and plain estimators against analytic Shapley values of the curvature construction (params: n, kappas, eps_prime, m, band_epsilon, verify_n)",
    ),
    (
        "dsh",
        "Shapley-distribution estimator error against exact Shapley values (params: game, m_grid, tolerance, resample_game, impute_zero, dist)",
    ),
    (
        "dd-audit",
        "data-dependent Shapley axioms by enumeration and empirical convergence (params: n_min, n_max, max_cost, m, tolerance)",
    ),
    (
        "indistinguishability",
        "sample disagreements between the two games of a pair and their exact Shapley gap (params: pair, m)",
    ),
    (
        "partition-exhibit",
        "approximately stable core impossibility on the block-partition family (params: n, eps, m, relaxation)",
    ),
];

impl Experiment {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Experiment::AdditiveWarmup(_) => "additive-warmup",
            Experiment::CoreGeneralization(_) => "core-generalization",
            Experiment::Curvature(_) => "curvature",
            Experiment::Dsh(_) => "dsh",
            Experiment::DdAudit(_) => "dd-audit",
            Experiment::Indistinguishability(_) => "indistinguishability",
            Experiment::PartitionExhibit(_) => "partition-exhibit",
        }
    }
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Spec(e.to_string()))
    }

    /// The spec with `base_seed` filled in.
    pub fn resolved(&self) -> Self {
        let mut out = self.clone();
        out.base_seed = Some(self.base_seed.unwrap_or_else(|| name_seed(&self.name)));
        out
    }
}

/// Shared state for one run: seeds and the worker pool.
pub struct Ctx<'a> {
    pub base_seed: u64,
    pub seeds: usize,
    pool: &'a ThreadPool,
}

impl Ctx<'_> {
    /// Seed of repetition `s`.
    pub fn seed(&self, s: usize) -> u64 {
        derive_seed(self.base_seed, s as u64)
    }

    /// Maps `f` over `items` on the pool, keeping input order.
    pub fn map<T: Sync, O: Send>(&self, items: &[T], f: impl Fn(&T) -> O + Sync + Send) -> Vec<O> {
        self.pool.install(|| items.par_iter().map(f).collect())
    }
}

/// Sub-seed roles inside a repetition.
pub(crate) const DATA: u64 = 1;
pub(crate) const EVAL: u64 = 2;
pub(crate) const GAME: u64 = 3;
pub(crate) const AUX: u64 = 4;

/// Worker count: the explicit value, else `STATCOST_WORKERS`, else all
/// cores (0).
pub fn worker_count(explicit: Option<usize>) -> CliResult<usize> {
    if let Some(w) = explicit {
        return Ok(w);
    }
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{WORKERS_ENV}={v:?} is not a worker count"))),
        Err(_) => Ok(0),
    }
}

pub fn run(spec: &ExperimentSpec, workers: usize) -> CliResult<Report> {
    if spec.seeds == 0 {
        return Err(CliError::Spec("seeds must be at least 1".into()));
    }
    let spec = spec.resolved();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Usage(format!("worker pool: {e}")))?;
    let ctx = Ctx {
        base_seed: spec.base_seed.expect("resolved"),
        seeds: spec.seeds,
        pool: &pool,
    };
    let output: KindOutput = match &spec.experiment {
        Experiment::AdditiveWarmup(p) => additive::run(&ctx, p)?,
        Experiment::CoreGeneralization(p) => core_generalization::run(&ctx, p)?,
        Experiment::Curvature(p) => curvature::run(&ctx, p)?,
        Experiment::Dsh(p) => dsh::run(&ctx, p)?,
        Experiment::DdAudit(p) => dd_audit::run(&ctx, p)?,
        Experiment::Indistinguishability(p) => indistinguishability::run(&ctx, p)?,
        Experiment::PartitionExhibit(p) => partition::run(&ctx, p)?,
    };
    Ok(Report { spec, output })
}

/// Exact Shapley values by the cheapest exact route: the coverage split,
/// enumeration up to the exhaustive limit, or the analytic profile of the
/// curvature construction.
pub fn exact_shapley_any(game: &Game) -> CliResult<Vec<f64>> {
    if let Some(phi) = coverage_shapley(game) {
        return Ok(phi);
    }
    if game.n() <= EXHAUSTIVE_LIMIT {
        return Ok(exact_shapley(game)?);
    }
    (0..game.n())
        .map(|i| {
            closed_form_profile(game, i).map(|p| p.shapley()).ok_or_else(|| {
                CliError::from(statcost_core::Error::Capability {
                    n: game.n(),
                    limit: EXHAUSTIVE_LIMIT,
                })
            })
        })
        .collect()
}

/// `estimate / exact`, or `None` when `|exact|` is below `floor`.
pub fn ratio(estimate: f64, exact: f64, floor: f64) -> Option<f64> {
    (exact.abs() >= floor && exact != 0.0).then(|| estimate / exact)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

pub(crate) fn fmt(x: f64) -> String {
    if x == 0.0 || (1e-3..1e6).contains(&x.abs()) {
        format!("{x:.4}")
    } else {
        format!("{x:.3e}")
    }
}

pub(crate) fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".into(), fmt)
}

pub(crate) fn default_true() -> bool {
    true
}
