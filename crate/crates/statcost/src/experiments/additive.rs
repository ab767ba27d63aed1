use serde::{Deserialize, Serialize};
use serde_json::json;
use statcost_core::estimators::{additive_core_allocation, marginal_estimates};
use statcost_core::rng::derive_seed;
use statcost_core::solvers::{evaluate_stability, EvalMode};
use statcost_core::{Dataset, Game, SetDistribution};

use super::{fmt, Ctx, DATA};
use crate::error::CliResult;
use crate::report::{CellRecord, KindOutput, PlotPoint, Table};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub weights: Vec<f64>,
    pub m: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

fn default_epsilon() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellOut {
    pub estimates: Vec<f64>,
    /// `|ṽ_i - C(i)| <= ε·C(i)`.
    pub in_band: Vec<bool>,
    pub shares: Vec<f64>,
    /// Uniform mass of sets with `(1-ε)·ψ(S) > C(S)`.
    pub violation_rate: f64,
    pub worst_violation: f64,
    pub approx_core: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub seeds_ok: usize,
    pub in_band_per_player: Vec<usize>,
    pub approx_core_seeds: usize,
}

fn cell(p: &Params, seed: u64) -> CliResult<CellOut> {
    let game = Game::additive(p.weights.clone())?;
    let n = game.n();
    let dist = SetDistribution::uniform(n)?;
    let ds = Dataset::generate(&game, &dist, p.m, derive_seed(seed, DATA))?;
    let estimates = marginal_estimates(&ds)?;
    let in_band = estimates
        .iter()
        .zip(&p.weights)
        .map(|(v, w)| (v - w).abs() <= p.epsilon * w)
        .collect();
    let psi = additive_core_allocation(&ds, game.grand_cost())?;
    let stab = evaluate_stability(&psi, &game, &dist, p.epsilon, EvalMode::Exhaustive)?;
    Ok(CellOut {
        estimates,
        in_band,
        shares: psi.shares,
        violation_rate: stab.violation_rate,
        worst_violation: stab.worst_violation,
        approx_core: stab.violation_rate == 0.0,
    })
}

pub fn run(ctx: &Ctx, p: &Params) -> CliResult<KindOutput> {
    let seeds: Vec<usize> = (0..ctx.seeds).collect();
    let cells: Vec<CellRecord> = ctx.map(&seeds, |&s| {
        let seed = ctx.seed(s);
        CellRecord::new(json!({ "m": p.m, "seed_index": s }), seed, cell(p, seed))
    });
    let outs: Vec<CellOut> = cells
        .iter()
        .filter_map(|c| c.values().and_then(|v| serde_json::from_value(v.clone()).ok()))
        .collect();
    let n = p.weights.len();
    let agg = Aggregate {
        seeds_ok: outs.len(),
        in_band_per_player: (0..n).map(|i| outs.iter().filter(|o| o.in_band[i]).count()).collect(),
        approx_core_seeds: outs.iter().filter(|o| o.approx_core).count(),
    };
    let mut table = Table::new(["player", "C(i)", "mean estimate", "seeds in band"]);
    let mut plot = Vec::new();
    for i in 0..n {
        let mean = outs.iter().map(|o| o.estimates[i]).sum::<f64>() / outs.len().max(1) as f64;
        table.push(vec![
            format!("{}", i + 1),
            fmt(p.weights[i]),
            fmt(mean),
            format!("{}/{}", agg.in_band_per_player[i], outs.len()),
        ]);
        plot.push(PlotPoint {
            x: (i + 1) as f64,
            y: mean,
            series: "mean-estimate".into(),
        });
    }
    table.push(vec![
        "core".into(),
        "-".into(),
        "-".into(),
        format!("{}/{}", agg.approx_core_seeds, outs.len()),
    ]);
    let mut aggregate = serde_json::to_value(&agg)?;
    aggregate["aggregate"] = json!("additive-warmup");
    Ok(KindOutput {
        prechecks: Vec::new(),
        cells,
        aggregates: vec![aggregate],
        table,
        plot,
    })
}
