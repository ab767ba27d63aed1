use serde::{Deserialize, Serialize};
use serde_json::json;
use statcost_core::numeric::binomial;
use statcost_core::players::all_subsets;
use statcost_core::rng::{derive_seed, seeded};
use statcost_core::{GamePair, PlayerSet, SetDistribution, EXHAUSTIVE_LIMIT};

use super::{exact_shapley_any, fmt, fmt_opt, Ctx, DATA};
use crate::descriptor::PairSpec;
use crate::error::CliResult;
use crate::report::{CellRecord, KindOutput, PlotPoint, Table};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub pair: PairSpec,
    pub m: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellOut {
    pub disagreements: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub seeds_ok: usize,
    pub total_disagreements: usize,
    pub max_per_seed: usize,
    pub seeds_with_none: usize,
    pub mean_fraction: f64,
    /// Exact probability that one uniform draw tells the games apart.
    pub exact_probability: Option<f64>,
    pub expected_per_seed: Option<f64>,
    /// `(total - expected) / sd` under independent draws.
    pub z_score: Option<f64>,
    /// Concentration bound on the disagreement probability.
    pub bound: Option<f64>,
    pub all_fractions_within_bound: Option<bool>,
    pub distinguished: Option<usize>,
    pub phi_first: Option<f64>,
    pub phi_second: Option<f64>,
    /// `phi_second / phi_first` at the distinguished player.
    pub shapley_ratio: Option<f64>,
    pub shapley_note: Option<String>,
}

fn tail_at_least(k: usize, n: usize) -> f64 {
    (k..=n).map(|j| binomial(n, j)).sum::<f64>() / 2f64.powi(n as i32)
}

/// Exact disagreement probability under the uniform law.
fn exact_probability(spec: &PairSpec, pair: &GamePair) -> Option<f64> {
    let n = pair.n();
    match spec {
        PairSpec::Coverage { n, .. } => {
            let q = 0.5f64.powi((*n / 2) as i32);
            Some(2.0 * q * (1.0 - q))
        }
        PairSpec::PartitionVsCardinality { n, eps, .. } => {
            let size = (eps * *n as f64).round() as usize;
            let cap = (1.0 + eps) * size as f64 / 2.0;
            Some(tail_at_least(cap.floor() as usize + 1, size))
        }
        PairSpec::Same { .. } => Some(0.0),
        PairSpec::Curvature { .. } if n > EXHAUSTIVE_LIMIT => {
            // Costs depend only on the size and on whether player 0 is in.
            let mut p = 0.0;
            for s in 0..=n {
                for with_star in [false, true] {
                    let (others, count) = if with_star {
                        (s.checked_sub(1)?, binomial(n - 1, s.checked_sub(1)?))
                    } else {
                        if s == n {
                            continue;
                        }
                        (s, binomial(n - 1, s))
                    };
                    let mut set = PlayerSet::range(1, 1 + others);
                    if with_star {
                        set = set.with(0);
                    }
                    if pair.first.cost(set) != pair.second.cost(set) {
                        p += count / 2f64.powi(n as i32);
                    }
                }
            }
            Some(p)
        }
        PairSpec::Curvature { .. } => Some(
            all_subsets(n)
                .filter(|&s| pair.first.cost(s) != pair.second.cost(s))
                .count() as f64
                / 2f64.powi(n as i32),
        ),
    }
}

fn bound(spec: &PairSpec) -> Option<f64> {
    match spec {
        PairSpec::Coverage { n, .. } => Some(2.0 * (-(*n as f64) / 16.0).exp()),
        PairSpec::PartitionVsCardinality { n, eps, .. } => Some((-eps * eps * eps * *n as f64 / 6.0).exp()),
        PairSpec::Curvature { n, eps_prime, .. } => Some(2.0 * (-eps_prime * eps_prime * *n as f64 / 6.0).exp()),
        PairSpec::Same { .. } => Some(0.0),
    }
}

fn cell(pair: &GamePair, uniform: &SetDistribution, m: usize, seed: u64) -> CellOut {
    let mut rng = seeded(derive_seed(seed, DATA));
    let disagreements = (0..m)
        .filter(|_| {
            let s = uniform.sample(&mut rng);
            pair.first.cost(s) != pair.second.cost(s)
        })
        .count();
    CellOut {
        disagreements,
        fraction: disagreements as f64 / m as f64,
    }
}

pub fn run(ctx: &Ctx, p: &Params) -> CliResult<KindOutput> {
    let pair = p.pair.build()?;
    let uniform = SetDistribution::uniform(pair.n())?;
    let seeds: Vec<usize> = (0..ctx.seeds).collect();
    let cells: Vec<CellRecord> = ctx.map(&seeds, |&s| {
        let seed = ctx.seed(s);
        let result = if p.m == 0 {
            Err(statcost_core::Error::EmptyInput.into())
        } else {
            Ok(cell(&pair, &uniform, p.m, seed))
        };
        CellRecord::new(json!({ "m": p.m, "seed_index": s }), seed, result)
    });
    let outs: Vec<CellOut> = cells
        .iter()
        .filter_map(|c| c.values().and_then(|v| serde_json::from_value(v.clone()).ok()))
        .collect();
    let exact = exact_probability(&p.pair, &pair);
    let b = bound(&p.pair);
    let total: usize = outs.iter().map(|o| o.disagreements).sum();
    let draws = (outs.len() * p.m) as f64;
    let z_score = exact.and_then(|q| {
        let sd = (draws * q * (1.0 - q)).sqrt();
        (sd > 0.0).then(|| (total as f64 - draws * q) / sd)
    });
    let star = pair.distinguished.unwrap_or(0);
    let (phi_first, phi_second, shapley_note) = match (exact_shapley_any(&pair.first), exact_shapley_any(&pair.second)) {
        (Ok(a), Ok(b)) => (Some(a[star]), Some(b[star]), None),
        (Err(e), _) | (_, Err(e)) => (None, None, Some(format!("no exact Shapley route: {e}"))),
    };
    let summary = Summary {
        seeds_ok: outs.len(),
        total_disagreements: total,
        max_per_seed: outs.iter().map(|o| o.disagreements).max().unwrap_or(0),
        seeds_with_none: outs.iter().filter(|o| o.disagreements == 0).count(),
        mean_fraction: if draws > 0.0 { total as f64 / draws } else { 0.0 },
        exact_probability: exact,
        expected_per_seed: exact.map(|q| q * p.m as f64),
        z_score,
        bound: b,
        all_fractions_within_bound: b.map(|b| outs.iter().all(|o| o.fraction <= b)),
        distinguished: pair.distinguished,
        phi_first,
        phi_second,
        shapley_ratio: phi_first.zip(phi_second).and_then(|(a, b)| (a != 0.0).then(|| b / a)),
        shapley_note,
    };
    let mut table = Table::new(["disagreements", "max/seed", "expected/seed", "z", "bound", "shapley ratio"]);
    table.push(vec![
        total.to_string(),
        summary.max_per_seed.to_string(),
        fmt_opt(summary.expected_per_seed),
        fmt_opt(summary.z_score),
        fmt_opt(b),
        summary.shapley_ratio.map_or("-".into(), fmt),
    ]);
    let plot = outs
        .iter()
        .enumerate()
        .map(|(s, o)| PlotPoint {
            x: s as f64,
            y: o.fraction,
            series: "disagreement-fraction".into(),
        })
        .collect();
    let mut aggregate = serde_json::to_value(&summary)?;
    aggregate["aggregate"] = json!("indistinguishability");
    Ok(KindOutput {
        prechecks: Vec::new(),
        cells,
        aggregates: vec![aggregate],
        table,
        plot,
    })
}
