use serde::{Deserialize, Serialize};
use serde_json::json;
use statcost_core::estimators::{shapley_dsh_estimate, EmptyBucketPolicy};
use statcost_core::rng::derive_seed;
use statcost_core::{Dataset, Game, SetDistribution};

use super::{exact_shapley_any, fmt, fmt_opt, log_log_slope, Ctx, DATA, GAME};
use crate::descriptor::{DistSpec, GameSpec};
use crate::error::{CliError, CliResult};
use crate::report::{CellRecord, KindOutput, PlotPoint, Table};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub game: GameSpec,
    pub m_grid: Vec<usize>,
    /// Relative tolerance on the max-player error, as a fraction of
    /// `max_i |φ_i|`.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default)]
    pub resample_game: bool,
    #[serde(default)]
    pub impute_zero: bool,
    /// Sampling law; the Shapley distribution unless overridden.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dist: Option<DistSpec>,
}

fn default_tolerance() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellOut {
    pub m: usize,
    pub estimates: Vec<f64>,
    pub exact: Vec<f64>,
    pub max_abs_error: f64,
    /// `max_abs_error / max_i |φ_i|`.
    pub relative_error: f64,
    pub within_tolerance: bool,
    pub imputed_buckets: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerM {
    pub m: usize,
    pub ok: usize,
    pub within_tolerance: usize,
    pub mean_max_abs_error: Option<f64>,
    pub mean_relative_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub per_m: Vec<PerM>,
    /// Slope of `ln(mean max error)` against `ln m`.
    pub slope: Option<f64>,
}

fn cell(p: &Params, game: &Game, exact: &[f64], dist: &SetDistribution, m: usize, seed: u64) -> CliResult<CellOut> {
    let ds = Dataset::generate(game, dist, m, derive_seed(seed, DATA))?;
    let policy = if p.impute_zero {
        EmptyBucketPolicy::ImputeZero
    } else {
        EmptyBucketPolicy::Error
    };
    let mut estimates = Vec::with_capacity(game.n());
    let mut imputed = 0;
    let mut warnings = Vec::new();
    for i in 0..game.n() {
        let e = shapley_dsh_estimate(&ds, i, policy)?;
        estimates.push(e.value);
        imputed += e.imputed.len();
        for w in e.warnings {
            if !warnings.contains(&w) {
                warnings.push(w);
            }
        }
    }
    let max_abs_error = estimates
        .iter()
        .zip(exact)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let scale = exact.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let relative_error = max_abs_error / scale;
    Ok(CellOut {
        m,
        estimates,
        exact: exact.to_vec(),
        max_abs_error,
        relative_error,
        within_tolerance: relative_error <= p.tolerance,
        imputed_buckets: imputed,
        warnings,
    })
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

pub fn run(ctx: &Ctx, p: &Params) -> CliResult<KindOutput> {
    if p.m_grid.is_empty() {
        return Err(CliError::Spec("m_grid is empty".into()));
    }
    let seeds: Vec<usize> = (0..ctx.seeds).collect();
    let instances: Vec<CliResult<(Game, Vec<f64>)>> = ctx.map(&seeds, |&s| {
        let spec = if p.resample_game {
            p.game.reseeded(derive_seed(ctx.seed(s), GAME))
        } else {
            p.game.clone()
        };
        let game = spec.build()?;
        let exact = exact_shapley_any(&game)?;
        Ok((game, exact))
    });
    let dist = match &p.dist {
        Some(d) => d.build()?,
        None => {
            let n = match &instances[0] {
                Ok((g, _)) => g.n(),
                Err(e) => return Err(CliError::Spec(format!("game: {e}"))),
            };
            SetDistribution::shapley(n)?
        }
    };
    let prechecks = instances
        .iter()
        .enumerate()
        .take(if p.resample_game { ctx.seeds } else { 1 })
        .map(|(s, inst)| match inst {
            Ok((g, phi)) => json!({ "check": "game", "seed_index": s, "game": g.label(), "exact_shapley": phi }),
            Err(e) => json!({ "check": "game", "seed_index": s, "error": e.to_string() }),
        })
        .collect();
    let coords: Vec<(usize, usize)> = (0..p.m_grid.len())
        .flat_map(|k| seeds.iter().map(move |&s| (k, s)))
        .collect();
    let cells: Vec<CellRecord> = ctx.map(&coords, |&(k, s)| {
        let seed = ctx.seed(s);
        let m = p.m_grid[k];
        let inst = &instances[if p.resample_game { s } else { 0 }];
        let result = match inst {
            Ok((game, exact)) => cell(p, game, exact, &dist, m, seed),
            Err(e) => Err(CliError::Spec(format!("game construction failed: {e}"))),
        };
        CellRecord::new(json!({ "m": m, "seed_index": s }), seed, result)
    });
    let mut per_m = Vec::new();
    let mut table = Table::new(["m", "ok", "within tol", "mean max error", "mean relative error"]);
    let mut plot = Vec::new();
    for (k, &m) in p.m_grid.iter().enumerate() {
        let outs: Vec<CellOut> = cells[k * ctx.seeds..(k + 1) * ctx.seeds]
            .iter()
            .filter_map(|c| c.values().and_then(|v| serde_json::from_value(v.clone()).ok()))
            .collect();
        let abs: Vec<f64> = outs.iter().map(|o| o.max_abs_error).collect();
        let rel: Vec<f64> = outs.iter().map(|o| o.relative_error).collect();
        let row = PerM {
            m,
            ok: outs.len(),
            within_tolerance: outs.iter().filter(|o| o.within_tolerance).count(),
            mean_max_abs_error: mean(&abs),
            mean_relative_error: mean(&rel),
        };
        table.push(vec![
            m.to_string(),
            row.ok.to_string(),
            format!("{}/{}", row.within_tolerance, row.ok),
            fmt_opt(row.mean_max_abs_error),
            fmt_opt(row.mean_relative_error),
        ]);
        if let Some(y) = row.mean_max_abs_error {
            plot.push(PlotPoint {
                x: m as f64,
                y,
                series: "mean-max-abs-error".into(),
            });
        }
        per_m.push(row);
    }
    let pts: Vec<(f64, f64)> = per_m
        .iter()
        .filter_map(|r| r.mean_max_abs_error.map(|e| (r.m as f64, e)))
        .collect();
    let slope = log_log_slope(&pts);
    table.push(vec!["slope".into(), "-".into(), "-".into(), slope.map_or("-".into(), fmt), "-".into()]);
    let mut aggregate = serde_json::to_value(&Summary { per_m, slope })?;
    aggregate["aggregate"] = json!("dsh");
    Ok(KindOutput {
        prechecks,
        cells,
        aggregates: vec![aggregate],
        table,
        plot,
    })
}
