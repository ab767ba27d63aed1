use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;
use statcost_core::estimators::{empirical_dd_shapley_all, exact_dd_shapley_all};
use statcost_core::oracles::exact_expected_cost;
use statcost_core::rng::{derive_seed, seeded, SampleRng};
use statcost_core::Dataset;

use super::{fmt, Ctx, DATA, GAME};
use crate::descriptor::{DistSpec, GameSpec, MixtureComponent};
use crate::error::{CliError, CliResult};
use crate::report::{CellRecord, KindOutput, PlotPoint, Table};

/// Tolerance of the exact axiom checks.
pub const AXIOM_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(default = "default_n_min")]
    pub n_min: usize,
    pub n_max: usize,
    #[serde(default = "default_max_cost")]
    pub max_cost: u32,
    pub m: usize,
    /// Empirical error tolerance as a fraction of `max_S C(S)`.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_n_min() -> usize {
    2
}

fn default_max_cost() -> u32 {
    100
}

fn default_tolerance() -> f64 {
    0.02
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellOut {
    pub game: String,
    pub dist: String,
    pub second_dist: String,
    pub n: usize,
    /// `|Σφ - E[C]|`.
    pub balance_error: f64,
    /// `|φ_1 - φ_2|` under a law where players 1 and 2 always appear
    /// together or not at all.
    pub symmetry_gap: f64,
    /// `φ_1` under a law that never contains player 1.
    pub zero_value: f64,
    /// Largest coordinate gap of `φ^{0.3·D1 + 0.7·D2} - 0.3·φ^{D1} - 0.7·φ^{D2}`.
    pub additivity_error: f64,
    pub axioms_hold: bool,
    pub max_cost: f64,
    pub empirical_max_error: f64,
    pub empirical_within_tolerance: bool,
    /// `(Σφ̃ - mean sample cost) / (1 + mean sample cost)`.
    pub empirical_balance_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub instances: usize,
    pub axioms_hold: usize,
    pub empirical_within_tolerance: usize,
    pub worst_axiom_error: f64,
    /// Largest `|empirical_balance_gap|`.
    pub worst_empirical_balance: f64,
}

fn random_set(rng: &mut SampleRng, n: usize) -> Vec<usize> {
    (0..n).filter(|_| rng.gen_bool(0.5)).collect()
}

fn point_masses(n: usize, sets: Vec<Vec<usize>>, rng: &mut SampleRng) -> DistSpec {
    let raw: Vec<f64> = sets.iter().map(|_| rng.gen_range(1..=8) as f64).collect();
    let total: f64 = raw.iter().sum();
    DistSpec::Mixture {
        components: sets
            .into_iter()
            .zip(raw)
            .map(|(players, w)| MixtureComponent {
                weight: w / total,
                dist: DistSpec::PointMass { n, players },
            })
            .collect(),
    }
}

fn random_dist(rng: &mut SampleRng, n: usize, kind: usize) -> DistSpec {
    let product = |rng: &mut SampleRng| DistSpec::Product {
        marginals: (0..n).map(|_| (rng.gen_range(1..=9) as f64) / 10.0).collect(),
        lo: Some(0.1),
        hi: Some(0.9),
    };
    match kind % 5 {
        0 => DistSpec::Uniform { n },
        1 => DistSpec::Shapley { n },
        2 => product(rng),
        3 => {
            let w = rng.gen_range(1..=9) as f64 / 10.0;
            DistSpec::Mixture {
                components: vec![
                    MixtureComponent {
                        weight: w,
                        dist: DistSpec::Uniform { n },
                    },
                    MixtureComponent {
                        weight: 1.0 - w,
                        dist: product(rng),
                    },
                ],
            }
        }
        _ => {
            let sets = (0..4).map(|_| random_set(rng, n)).collect();
            let masses = point_masses(n, sets, rng);
            DistSpec::Mixture {
                components: vec![
                    MixtureComponent {
                        weight: 0.5,
                        dist: masses,
                    },
                    MixtureComponent {
                        weight: 0.5,
                        dist: DistSpec::Shapley { n },
                    },
                ],
            }
        }
    }
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn cell(p: &Params, index: usize, seed: u64) -> CliResult<CellOut> {
    let mut rng = seeded(derive_seed(seed, GAME));
    let n = rng.gen_range(p.n_min..=p.n_max);
    let game_spec = GameSpec::RandomTable {
        n,
        max_cost: p.max_cost,
        seed: rng.gen(),
    };
    let game = game_spec.build()?;
    let d1_spec = random_dist(&mut rng, n, index);
    let d2_spec = random_dist(&mut rng, n, index + 2);
    let (d1, d2) = (d1_spec.build()?, d2_spec.build()?);

    let phi = exact_dd_shapley_all(&game, &d1)?;
    let balance_error = (phi.iter().sum::<f64>() - exact_expected_cost(&game, &d1)?).abs();

    let paired: Vec<Vec<usize>> = (0..4)
        .map(|_| {
            let mut s: Vec<usize> = random_set(&mut rng, n).into_iter().filter(|&i| i > 1).collect();
            if rng.gen_bool(0.5) {
                s.extend([0, 1]);
            }
            s
        })
        .collect();
    let sym = exact_dd_shapley_all(&game, &point_masses(n, paired, &mut rng).build()?)?;
    let symmetry_gap = (sym[0] - sym[1]).abs();

    let without_first: Vec<Vec<usize>> = (0..4)
        .map(|_| random_set(&mut rng, n).into_iter().filter(|&i| i != 0).collect())
        .collect();
    let zero_value = exact_dd_shapley_all(&game, &point_masses(n, without_first, &mut rng).build()?)?[0];

    let mix = statcost_core::SetDistribution::mixture(0.3, d1.clone(), 0.7, d2.clone())?;
    let phi2 = exact_dd_shapley_all(&game, &d2)?;
    let combined: Vec<f64> = phi.iter().zip(&phi2).map(|(a, b)| 0.3 * a + 0.7 * b).collect();
    let additivity_error = max_gap(&exact_dd_shapley_all(&game, &mix)?, &combined);

    let axioms_hold = balance_error <= AXIOM_TOLERANCE
        && symmetry_gap <= AXIOM_TOLERANCE
        && zero_value == 0.0
        && additivity_error <= AXIOM_TOLERANCE;

    let ds = Dataset::generate(&game, &d1, p.m, derive_seed(seed, DATA))?;
    let est = empirical_dd_shapley_all(&ds)?;
    let max_cost = game.max_cost()?;
    let empirical_max_error = max_gap(&est, &phi);
    let mean_cost = ds.mean_cost()?;
    Ok(CellOut {
        game: game_spec.canonical(),
        dist: d1_spec.canonical(),
        second_dist: d2_spec.canonical(),
        n,
        balance_error,
        symmetry_gap,
        zero_value,
        additivity_error,
        axioms_hold,
        max_cost,
        empirical_max_error,
        empirical_within_tolerance: empirical_max_error <= p.tolerance * max_cost,
        empirical_balance_gap: (est.iter().sum::<f64>() - mean_cost) / (1.0 + mean_cost),
    })
}

pub fn run(ctx: &Ctx, p: &Params) -> CliResult<KindOutput> {
    if p.n_min < 2 || p.n_min > p.n_max || p.n_max > statcost_core::EXHAUSTIVE_LIMIT {
        return Err(CliError::Spec(format!(
            "need 2 <= n_min <= n_max <= {}",
            statcost_core::EXHAUSTIVE_LIMIT
        )));
    }
    let seeds: Vec<usize> = (0..ctx.seeds).collect();
    let cells: Vec<CellRecord> = ctx.map(&seeds, |&s| {
        let seed = ctx.seed(s);
        CellRecord::new(json!({ "seed_index": s }), seed, cell(p, s, seed))
    });
    let outs: Vec<CellOut> = cells
        .iter()
        .filter_map(|c| c.values().and_then(|v| serde_json::from_value(v.clone()).ok()))
        .collect();
    let summary = Summary {
        instances: outs.len(),
        axioms_hold: outs.iter().filter(|o| o.axioms_hold).count(),
        empirical_within_tolerance: outs.iter().filter(|o| o.empirical_within_tolerance).count(),
        worst_axiom_error: outs
            .iter()
            .map(|o| o.balance_error.max(o.symmetry_gap).max(o.zero_value.abs()).max(o.additivity_error))
            .fold(0.0, f64::max),
        worst_empirical_balance: outs
            .iter()
            .map(|o| o.empirical_balance_gap.abs())
            .fold(0.0, f64::max),
    };
    let mut table = Table::new(["instances", "axioms hold", "empirical within tol", "worst axiom error", "worst balance gap"]);
    table.push(vec![
        summary.instances.to_string(),
        summary.axioms_hold.to_string(),
        summary.empirical_within_tolerance.to_string(),
        fmt(summary.worst_axiom_error),
        fmt(summary.worst_empirical_balance),
    ]);
    let plot = outs
        .iter()
        .map(|o| PlotPoint {
            x: o.n as f64,
            y: o.empirical_max_error / o.max_cost,
            series: "relative-empirical-error".into(),
        })
        .collect();
    let mut aggregate = serde_json::to_value(&summary)?;
    aggregate["aggregate"] = json!("dd-audit");
    Ok(KindOutput {
        prechecks: Vec::new(),
        cells,
        aggregates: vec![aggregate],
        table,
        plot,
    })
}
