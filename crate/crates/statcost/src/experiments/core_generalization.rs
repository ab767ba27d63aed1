use serde::{Deserialize, Serialize};
use serde_json::json;
use statcost_core::rng::derive_seed;
use statcost_core::solvers::{
    bounded_core_sample_size, empirical_core, empirical_core_bounded, evaluate_stability, exact_core, EvalMode,
    ExactCore,
};
use statcost_core::structure::spread;
use statcost_core::{Dataset, Game, SetDistribution, EXHAUSTIVE_LIMIT};

use super::{default_true, fmt, fmt_opt, Ctx, DATA, EVAL, GAME};
use crate::descriptor::{DistSpec, GameSpec};
use crate::error::{CliError, CliResult};
use crate::report::{CellRecord, KindOutput, PlotPoint, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Lp,
    Bounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub game: GameSpec,
    pub dist: DistSpec,
    pub m_grid: Vec<usize>,
    pub eval_m: usize,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Failure probability Δ of the sample-size formula.
    #[serde(default = "default_confidence")]
    pub confidence: f64,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    /// Bound on `max_S |C(S)|` for bounded mode; defaults to the true
    /// maximum when the game is enumerable.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_cost: Option<f64>,
    #[serde(default = "default_true")]
    pub exhaustive: bool,
    /// Draw a fresh random game for every repetition.
    #[serde(default)]
    pub resample_game: bool,
}

fn default_delta() -> f64 {
    0.1
}

fn default_confidence() -> f64 {
    0.05
}

fn default_mode() -> Mode {
    Mode::Lp
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellOut {
    pub m: usize,
    pub constraints: usize,
    pub margin: f64,
    pub fresh_rate: f64,
    pub fresh_worst: f64,
    pub exhaustive_rate: Option<f64>,
    pub l1_norm: f64,
    /// `2·max_abs_cost` in bounded mode.
    pub norm_bound: Option<f64>,
    /// `max_S C(S)` of the true game when enumerable.
    pub true_max_cost: Option<f64>,
    pub shares: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerM {
    pub m: usize,
    pub ok: usize,
    pub mean_fresh_rate: Option<f64>,
    pub max_fresh_rate: Option<f64>,
    pub mean_exhaustive_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub per_m: Vec<PerM>,
    /// Smallest grid `m` whose mean fresh violation rate is at most `delta`.
    pub calibrated_m: Option<usize>,
    /// Adjacent grid points where the mean fresh rate went up.
    pub inversions: usize,
    pub all_cores_nonempty: Option<bool>,
    /// The bounded-norm sample size at the largest spread over the games,
    /// when `epsilon > 0` and spreads are finite.
    pub formula_m: Option<f64>,
}

struct Instance {
    game: Game,
    core_nonempty: Option<bool>,
    max_cost: Option<f64>,
    spread: Option<f64>,
}

fn instance(p: &Params, seed: u64) -> CliResult<Instance> {
    let spec = if p.resample_game {
        p.game.reseeded(derive_seed(seed, GAME))
    } else {
        p.game.clone()
    };
    let game = spec.build()?;
    let enumerable = game.n() <= EXHAUSTIVE_LIMIT;
    let core_nonempty = if enumerable {
        Some(matches!(exact_core(&game)?, ExactCore::NonEmpty(_)))
    } else {
        None
    };
    let max_cost = if enumerable { Some(game.max_cost()?) } else { None };
    let spread = if enumerable { spread(&game).ok() } else { None };
    Ok(Instance {
        game,
        core_nonempty,
        max_cost,
        spread,
    })
}

fn cell(p: &Params, inst: &Instance, dist: &SetDistribution, m: usize, seed: u64) -> CliResult<CellOut> {
    let game = &inst.game;
    let ds = Dataset::generate(game, dist, m, derive_seed(seed, DATA))?;
    let (sol, norm_bound) = match p.mode {
        Mode::Lp => (empirical_core(&ds, game.grand_cost())?, None),
        Mode::Bounded => {
            let b = p.max_cost.or(inst.max_cost).ok_or_else(|| {
                CliError::Spec("bounded mode above the exhaustive limit needs max_cost".into())
            })?;
            (empirical_core_bounded(&ds, game.grand_cost(), b)?, Some(2.0 * b))
        }
    };
    let fresh = evaluate_stability(
        &sol.allocation,
        game,
        dist,
        p.epsilon,
        EvalMode::Fresh {
            m: p.eval_m,
            seed: derive_seed(seed, EVAL),
        },
    )?;
    let exhaustive_rate = if p.exhaustive && game.n() <= EXHAUSTIVE_LIMIT {
        Some(evaluate_stability(&sol.allocation, game, dist, p.epsilon, EvalMode::Exhaustive)?.violation_rate)
    } else {
        None
    };
    Ok(CellOut {
        m,
        constraints: sol.constraints,
        margin: sol.margin,
        fresh_rate: fresh.violation_rate,
        fresh_worst: fresh.worst_violation,
        exhaustive_rate,
        l1_norm: sol.allocation.l1_norm(),
        norm_bound,
        true_max_cost: inst.max_cost,
        shares: sol.allocation.shares,
    })
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

pub fn run(ctx: &Ctx, p: &Params) -> CliResult<KindOutput> {
    if p.m_grid.is_empty() {
        return Err(CliError::Spec("m_grid is empty".into()));
    }
    let dist = p.dist.build()?;
    let seeds: Vec<usize> = (0..ctx.seeds).collect();
    let instances: Vec<CliResult<Instance>> = ctx.map(&seeds, |&s| instance(p, ctx.seed(s)));
    let mut prechecks = Vec::new();
    for (s, inst) in instances.iter().enumerate() {
        let rec = match inst {
            Ok(i) => json!({
                "check": "game",
                "seed_index": s,
                "game": i.game.label(),
                "core_nonempty": i.core_nonempty,
                "max_cost": i.max_cost,
                "spread": i.spread,
            }),
            Err(e) => json!({ "check": "game", "seed_index": s, "error": e.to_string() }),
        };
        prechecks.push(rec);
        if !p.resample_game {
            break;
        }
    }
    let coords: Vec<(usize, usize)> = p
        .m_grid
        .iter()
        .enumerate()
        .flat_map(|(k, _)| seeds.iter().map(move |&s| (k, s)))
        .collect();
    let cells: Vec<CellRecord> = ctx.map(&coords, |&(k, s)| {
        let seed = ctx.seed(s);
        let m = p.m_grid[k];
        let inst = if p.resample_game { &instances[s] } else { &instances[0] };
        let result = match inst {
            Ok(inst) => cell(p, inst, &dist, m, seed),
            Err(e) => Err(CliError::Spec(format!("game construction failed: {e}"))),
        };
        CellRecord::new(json!({ "m": m, "seed_index": s }), seed, result)
    });

    let outs: Vec<Option<CellOut>> = cells
        .iter()
        .map(|c| c.values().and_then(|v| serde_json::from_value(v.clone()).ok()))
        .collect();
    let mut per_m = Vec::new();
    let mut table = Table::new(["m", "ok", "mean fresh rate", "max fresh rate", "mean exhaustive rate"]);
    let mut plot = Vec::new();
    for (k, &m) in p.m_grid.iter().enumerate() {
        let ok: Vec<&CellOut> = outs[k * ctx.seeds..(k + 1) * ctx.seeds].iter().flatten().collect();
        let fresh: Vec<f64> = ok.iter().map(|o| o.fresh_rate).collect();
        let exh: Vec<f64> = ok.iter().filter_map(|o| o.exhaustive_rate).collect();
        let row = PerM {
            m,
            ok: ok.len(),
            mean_fresh_rate: mean(&fresh),
            max_fresh_rate: fresh.iter().copied().reduce(f64::max),
            mean_exhaustive_rate: mean(&exh),
        };
        table.push(vec![
            m.to_string(),
            row.ok.to_string(),
            fmt_opt(row.mean_fresh_rate),
            fmt_opt(row.max_fresh_rate),
            fmt_opt(row.mean_exhaustive_rate),
        ]);
        if let Some(y) = row.mean_fresh_rate {
            plot.push(PlotPoint {
                x: m as f64,
                y,
                series: "mean-fresh-violation".into(),
            });
        }
        per_m.push(row);
    }
    let calibrated_m = per_m
        .iter()
        .find(|r| r.mean_fresh_rate.is_some_and(|x| x <= p.delta))
        .map(|r| r.m);
    let rates: Vec<f64> = per_m.iter().filter_map(|r| r.mean_fresh_rate).collect();
    let inversions = rates.windows(2).filter(|w| w[1] > w[0]).count();
    let built: Vec<&Instance> = instances.iter().flatten().collect();
    let all_cores_nonempty = built
        .iter()
        .map(|i| i.core_nonempty)
        .collect::<Option<Vec<bool>>>()
        .map(|v| v.iter().all(|&b| b));
    let formula_m = if p.epsilon > 0.0 {
        built
            .iter()
            .map(|i| i.spread)
            .collect::<Option<Vec<f64>>>()
            .and_then(|v| v.into_iter().reduce(f64::max))
            .map(|tau| bounded_core_sample_size(dist.n(), tau, p.epsilon, p.delta, p.confidence))
    } else {
        None
    };
    let summary = Summary {
        per_m,
        calibrated_m,
        inversions,
        all_cores_nonempty,
        formula_m,
    };
    table.push(vec![
        "calibrated".into(),
        "-".into(),
        calibrated_m.map_or("-".into(), |m| m.to_string()),
        format!("inversions {inversions}"),
        formula_m.map_or("-".into(), |m| format!("formula m {}", fmt(m))),
    ]);
    let mut aggregate = serde_json::to_value(&summary)?;
    aggregate["aggregate"] = json!("core-generalization");
    Ok(KindOutput {
        prechecks,
        cells,
        aggregates: vec![aggregate],
        table,
        plot,
    })
}
