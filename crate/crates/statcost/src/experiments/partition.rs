use serde::{Deserialize, Serialize};
use serde_json::json;
use statcost_core::rng::derive_seed;
use statcost_core::solvers::{empirical_core, evaluate_stability, EvalMode};
use statcost_core::{Dataset, Game, PlayerSet, SetDistribution};

use super::{fmt, Ctx, AUX, DATA};
use crate::error::{CliError, CliResult};
use crate::report::{CellRecord, KindOutput, PlotPoint, Table};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub n: usize,
    pub eps: f64,
    /// Training samples per allocation.
    pub m: usize,
    /// Stability relaxation used in the evaluation. Defaults to the
    /// largest value the block inequality still forces a violation at,
    /// `1 - (1+eps)/(2(1-eps))`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relaxation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellOut {
    /// Zero-based index of the block the training game caps.
    pub hidden_block: usize,
    pub block_shares: Vec<f64>,
    pub best_block: usize,
    /// `(1-eps)·eps·n`.
    pub threshold: f64,
    /// `max_j ψ(A_j) > threshold`.
    pub inequality_holds: bool,
    /// `(1-relaxation)·ψ(A_best) > C^{A_best}(A_best)`.
    pub block_violates: bool,
    /// Exhaustive violation mass of ψ against the game capping the best
    /// block.
    pub violation_rate_best: f64,
    /// The same against the game that produced the training data.
    pub violation_rate_hidden: f64,
    pub best_is_hidden: bool,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub allocations: usize,
    pub relaxation: f64,
    pub threshold: f64,
    pub inequality_holds: usize,
    pub block_violates: usize,
    pub best_is_hidden: usize,
    pub violated_on_hidden_game: usize,
}

fn default_relaxation(eps: f64) -> f64 {
    1.0 - (1.0 + eps) / (2.0 * (1.0 - eps))
}

fn cell(p: &Params, relaxation: f64, seed: u64) -> CliResult<CellOut> {
    let blocks = (1.0 / p.eps).round() as usize;
    let size = p.n / blocks;
    let hidden_block = (derive_seed(seed, AUX) % blocks as u64) as usize;
    let hidden = Game::partition_hard(p.n, p.eps, hidden_block)?;
    let uniform = SetDistribution::uniform(p.n)?;
    let ds = Dataset::generate(&hidden, &uniform, p.m, derive_seed(seed, DATA))?;
    let psi = empirical_core(&ds, hidden.grand_cost())?.allocation;
    let block_shares: Vec<f64> = (0..blocks)
        .map(|j| psi.coalition_share(PlayerSet::range(j * size, (j + 1) * size)))
        .collect();
    let best_block = (0..blocks)
        .reduce(|a, b| if block_shares[b] > block_shares[a] { b } else { a })
        .expect("at least one block");
    let threshold = (1.0 - p.eps) * p.eps * p.n as f64;
    let best = Game::partition_hard(p.n, p.eps, best_block)?;
    let best_set = PlayerSet::range(best_block * size, (best_block + 1) * size);
    let block_excess = (1.0 - relaxation) * block_shares[best_block] - best.cost(best_set);
    let on_best = evaluate_stability(&psi, &best, &uniform, relaxation, EvalMode::Exhaustive)?;
    let on_hidden = evaluate_stability(&psi, &hidden, &uniform, relaxation, EvalMode::Exhaustive)?;
    Ok(CellOut {
        hidden_block,
        best_block,
        threshold,
        inequality_holds: block_shares[best_block] > threshold,
        block_violates: block_excess > statcost_core::lp::FEASIBILITY_TOLERANCE,
        violation_rate_best: on_best.violation_rate,
        violation_rate_hidden: on_hidden.violation_rate,
        best_is_hidden: best_block == hidden_block,
        total: psi.total(),
        block_shares,
    })
}

pub fn run(ctx: &Ctx, p: &Params) -> CliResult<KindOutput> {
    // Validates the parameters once before the grid.
    Game::partition_hard(p.n, p.eps, 0)?;
    let relaxation = p.relaxation.unwrap_or_else(|| default_relaxation(p.eps));
    if !(0.0..1.0).contains(&relaxation) {
        return Err(CliError::Spec(format!("relaxation {relaxation} must lie in [0, 1)")));
    }
    let seeds: Vec<usize> = (0..ctx.seeds).collect();
    let cells: Vec<CellRecord> = ctx.map(&seeds, |&s| {
        let seed = ctx.seed(s);
        CellRecord::new(json!({ "allocation": s }), seed, cell(p, relaxation, seed))
    });
    let outs: Vec<CellOut> = cells
        .iter()
        .filter_map(|c| c.values().and_then(|v| serde_json::from_value(v.clone()).ok()))
        .collect();
    let summary = Summary {
        allocations: outs.len(),
        relaxation,
        threshold: (1.0 - p.eps) * p.eps * p.n as f64,
        inequality_holds: outs.iter().filter(|o| o.inequality_holds).count(),
        block_violates: outs.iter().filter(|o| o.block_violates).count(),
        best_is_hidden: outs.iter().filter(|o| o.best_is_hidden).count(),
        violated_on_hidden_game: outs.iter().filter(|o| o.violation_rate_hidden > 0.0).count(),
    };
    let mut table = Table::new(["allocations", "relaxation", "inequality", "block violates", "best = hidden", "hidden game violated"]);
    table.push(vec![
        summary.allocations.to_string(),
        fmt(relaxation),
        summary.inequality_holds.to_string(),
        summary.block_violates.to_string(),
        summary.best_is_hidden.to_string(),
        summary.violated_on_hidden_game.to_string(),
    ]);
    let plot = outs
        .iter()
        .enumerate()
        .map(|(s, o)| PlotPoint {
            x: s as f64,
            y: o.block_shares[o.best_block],
            series: "largest-block-share".into(),
        })
        .collect();
    let mut aggregate = serde_json::to_value(&summary)?;
    aggregate["aggregate"] = json!("partition-exhibit");
    Ok(KindOutput {
        prechecks: Vec::new(),
        cells,
        aggregates: vec![aggregate],
        table,
        plot,
    })
}
