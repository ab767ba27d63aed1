//! Core allocations from samples, their stability on fresh or exhaustive
//! data, and the exact-core oracle.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::dataset::Dataset;
use crate::distribution::SetDistribution;
use crate::error::{check_exhaustive, Error, Result};
use crate::estimators::CostAllocation;
use crate::game::Game;
use crate::lp::{solve_feasibility, FeasibilityProgram, LinearConstraint, LpOutcome, Objective, FEASIBILITY_TOLERANCE};
use crate::numeric::CompensatedSum;
use crate::players::{all_subsets, PlayerSet};
use crate::rng::seeded;
use crate::EXHAUSTIVE_LIMIT;

/// An empirical-core allocation plus the size of the program behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct CoreSolution {
    pub allocation: CostAllocation,
    /// Records in the training data.
    pub raw_samples: usize,
    /// Distinct sample constraints passed to the solver.
    pub constraints: usize,
    /// Smallest slack over the sample constraints.
    pub margin: f64,
}

fn indicator(n: usize, set: PlayerSet) -> Vec<f64> {
    let mut a = vec![0.0; n];
    for i in set.iter() {
        a[i] = 1.0;
    }
    a
}

/// Balance plus one inequality per distinct nonempty sample set. The
/// grand coalition is implied by balance unless its sampled cost is lower.
fn sample_program(ds: &Dataset, grand_cost: f64) -> Result<FeasibilityProgram> {
    if ds.m() == 0 {
        return Err(Error::EmptyInput);
    }
    if !grand_cost.is_finite() {
        return Err(Error::Construction(format!("grand cost {grand_cost} is not finite")));
    }
    let n = ds.n();
    let full = PlayerSet::full(n);
    let mut tightest: BTreeMap<PlayerSet, f64> = BTreeMap::new();
    let mut order = Vec::new();
    for r in ds.records() {
        if r.subset.is_empty() || (r.subset == full && r.cost >= grand_cost) {
            continue;
        }
        tightest
            .entry(r.subset)
            .and_modify(|c| *c = c.min(r.cost))
            .or_insert_with(|| {
                order.push(r.subset);
                r.cost
            });
    }
    let mut p = FeasibilityProgram::new(n);
    p.equalities.push(LinearConstraint::new(vec![1.0; n], grand_cost));
    p.inequalities = order
        .iter()
        .map(|s| LinearConstraint::new(indicator(n, *s), tightest[s]))
        .collect();
    let cap = ds
        .records()
        .iter()
        .map(|r| r.cost)
        .fold(grand_cost.abs(), f64::max);
    p.objective = Objective::MaxMinSlack { cap };
    Ok(p)
}

fn solve_core(p: &FeasibilityProgram, raw: usize, method: String, grand_cost: f64) -> Result<CoreSolution> {
    match solve_feasibility(p)? {
        LpOutcome::Feasible { psi, objective } => Ok(CoreSolution {
            allocation: CostAllocation {
                shares: psi,
                method,
                balanced_to: Some(grand_cost),
            },
            raw_samples: raw,
            constraints: p.inequalities.len(),
            margin: objective,
        }),
        LpOutcome::Infeasible => Err(Error::NoEmpiricalCore),
        LpOutcome::Unbounded => Err(Error::NumericalFailure("max-margin program reported unbounded".into())),
        LpOutcome::NumericalFailure(e) => Err(Error::NumericalFailure(e)),
    }
}

/// A balanced allocation satisfying the core inequality on every sample,
/// chosen to maximize the smallest sample slack.
pub fn empirical_core(ds: &Dataset, grand_cost: f64) -> Result<CoreSolution> {
    let p = sample_program(ds, grand_cost)?;
    solve_core(&p, ds.m(), "empirical-core(max-margin)".into(), grand_cost)
}

/// [`empirical_core`] restricted to `‖ψ‖₁ ≤ 2·max_abs_cost`.
pub fn empirical_core_bounded(ds: &Dataset, grand_cost: f64, max_abs_cost: f64) -> Result<CoreSolution> {
    if !(max_abs_cost.is_finite() && max_abs_cost > 0.0) {
        return Err(Error::Construction(format!("max cost {max_abs_cost} must be positive and finite")));
    }
    let mut p = sample_program(ds, grand_cost)?;
    p.norm_bound = Some(2.0 * max_abs_cost);
    solve_core(
        &p,
        ds.m(),
        format!("empirical-core-bounded(max-margin, l1 <= {})", 2.0 * max_abs_cost),
        grand_cost,
    )
}

/// Sample size from the bounded-norm generalization bound:
/// `((1-ε)/(εδ))² · (128τ²·ln(2n) + 8τ²·ln(2/Δ))`, rounded up.
pub fn bounded_core_sample_size(n: usize, spread: f64, epsilon: f64, delta: f64, confidence: f64) -> f64 {
    let lead = (1.0 - epsilon) / (epsilon * delta);
    let t2 = spread * spread;
    let m = lead * lead * (128.0 * t2 * libm::log(2.0 * n as f64) + 8.0 * t2 * libm::log(2.0 / confidence));
    libm::ceil(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    Fresh { m: usize, seed: u64 },
    Exhaustive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    pub epsilon: f64,
    /// Fraction of fresh draws, or probability mass under the
    /// distribution, of sets with `(1-ε)·ψ(S) > C(S)`.
    pub violation_rate: f64,
    pub eval_mode: EvalMode,
    /// `max_S (1-ε)·ψ(S) - C(S)` over evaluated sets.
    pub worst_violation: f64,
    /// Fresh draws, or sets in the support of the distribution.
    pub evaluated: usize,
}

/// Excess of `(1-ε)·ψ(S)` over `C(S)`; counted as a violation beyond the
/// solver's feasibility tolerance.
fn excess(psi: &[f64], game: &Game, set: PlayerSet, epsilon: f64) -> f64 {
    let share: f64 = set.iter().map(|i| psi[i]).sum();
    (1.0 - epsilon) * share - game.cost(set)
}

pub fn evaluate_stability(
    psi: &CostAllocation,
    game: &Game,
    dist: &SetDistribution,
    epsilon: f64,
    mode: EvalMode,
) -> Result<StabilityReport> {
    let n = game.n();
    if psi.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: psi.n(),
        });
    }
    if dist.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: dist.n(),
        });
    }
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::Construction(format!("epsilon {epsilon} must lie in [0, 1)")));
    }
    let shares = &psi.shares;
    let mut worst = f64::NEG_INFINITY;
    match mode {
        EvalMode::Fresh { m, seed } => {
            if m == 0 {
                return Err(Error::EmptyInput);
            }
            let mut rng = seeded(seed);
            let mut violations = 0usize;
            for _ in 0..m {
                let e = excess(shares, game, dist.sample(&mut rng), epsilon);
                worst = worst.max(e);
                if e > FEASIBILITY_TOLERANCE {
                    violations += 1;
                }
            }
            Ok(StabilityReport {
                epsilon,
                violation_rate: violations as f64 / m as f64,
                eval_mode: mode,
                worst_violation: worst,
                evaluated: m,
            })
        }
        EvalMode::Exhaustive => {
            check_exhaustive(n, EXHAUSTIVE_LIMIT)?;
            let mut mass = CompensatedSum::new();
            let mut evaluated = 0;
            for s in all_subsets(n) {
                let p = dist.prob(s);
                if p == 0.0 {
                    continue;
                }
                evaluated += 1;
                let e = excess(shares, game, s, epsilon);
                worst = worst.max(e);
                if e > FEASIBILITY_TOLERANCE {
                    mass.add(p);
                }
            }
            Ok(StabilityReport {
                epsilon,
                violation_rate: mass.value().clamp(0.0, 1.0),
                eval_mode: mode,
                worst_violation: worst,
                evaluated,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExactCore {
    NonEmpty(Vec<f64>),
    Empty,
}

fn core_program(game: &Game) -> Result<FeasibilityProgram> {
    let n = game.n();
    check_exhaustive(n, EXHAUSTIVE_LIMIT)?;
    let full = PlayerSet::full(n);
    let mut p = FeasibilityProgram::new(n);
    p.equalities.push(LinearConstraint::new(vec![1.0; n], game.cost(full)));
    p.inequalities = all_subsets(n)
        .filter(|s| !s.is_empty() && *s != full)
        .map(|s| LinearConstraint::new(indicator(n, s), game.cost(s)))
        .collect();
    Ok(p)
}

fn core_outcome(outcome: LpOutcome) -> Result<ExactCore> {
    match outcome {
        LpOutcome::Feasible { psi, .. } => Ok(ExactCore::NonEmpty(psi)),
        LpOutcome::Infeasible => Ok(ExactCore::Empty),
        LpOutcome::Unbounded => Err(Error::NumericalFailure("core program reported unbounded".into())),
        LpOutcome::NumericalFailure(e) => Err(Error::NumericalFailure(e)),
    }
}

/// Decides core emptiness over all `2^n - 1` coalition constraints.
pub fn exact_core(game: &Game) -> Result<ExactCore> {
    core_outcome(solve_feasibility(&core_program(game)?)?)
}

/// The core point maximizing `direction · ψ`. Cores are bounded, so this
/// is a vertex whenever the core is nonempty.
pub fn exact_core_extreme(game: &Game, direction: &[f64]) -> Result<ExactCore> {
    let mut p = core_program(game)?;
    p.objective = Objective::Maximize(direction.to_vec());
    core_outcome(solve_feasibility(&p)?)
}

/// `E_{S∼𝒟}[ [ψ(S)/C(S) - 1]₊ ]` by enumeration over nonempty sets.
pub fn expected_relative_excess(psi: &[f64], game: &Game, dist: &SetDistribution) -> Result<f64> {
    let n = game.n();
    if psi.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: psi.len(),
        });
    }
    check_exhaustive(n, EXHAUSTIVE_LIMIT)?;
    let mut acc = CompensatedSum::new();
    for s in all_subsets(n).skip(1) {
        let p = dist.prob(s);
        if p == 0.0 {
            continue;
        }
        let c = game.cost(s);
        if c <= 0.0 {
            return Err(Error::InfiniteSpread);
        }
        let share: f64 = s.iter().map(|i| psi[i]).sum();
        acc.add(p * (share / c - 1.0).max(0.0));
    }
    Ok(acc.value())
}

/// Expected-excess level below which Markov's inequality caps the
/// `ε`-relaxed violation probability at `δ`: `εδ/(1-ε)`.
pub fn markov_threshold(epsilon: f64, delta: f64) -> f64 {
    epsilon * delta / (1.0 - epsilon)
}
