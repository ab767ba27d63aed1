//! Value estimators computed from samples, plus the exact data-dependent
//! Shapley value they target.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::dataset::{Dataset, Law};
use crate::distribution::SetDistribution;
use crate::error::{check_exhaustive, check_player, Bucket, Error, Result, Side};
use crate::game::Game;
use crate::numeric::{compensated_sum, CompensatedSum, Mean};
use crate::players::all_subsets;
use crate::EXHAUSTIVE_LIMIT;

/// A vector of per-player shares with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct CostAllocation {
    pub shares: Vec<f64>,
    /// Estimator or solver that produced the shares, with parameters.
    pub method: String,
    /// Total the shares were constrained or rescaled to, if any.
    pub balanced_to: Option<f64>,
}

impl CostAllocation {
    pub fn new(shares: Vec<f64>, method: impl Into<String>) -> Self {
        CostAllocation {
            shares,
            method: method.into(),
            balanced_to: None,
        }
    }

    pub fn n(&self) -> usize {
        self.shares.len()
    }

    pub fn total(&self) -> f64 {
        compensated_sum(self.shares.iter().copied())
    }

    pub fn l1_norm(&self) -> f64 {
        compensated_sum(self.shares.iter().map(|x| x.abs()))
    }

    /// `Σ_{i∈S} ψ_i`.
    pub fn coalition_share(&self, set: crate::PlayerSet) -> f64 {
        set.iter().map(|i| self.shares[i]).sum()
    }
}

fn nonempty(ds: &Dataset) -> Result<()> {
    if ds.m() == 0 {
        Err(Error::EmptyInput)
    } else {
        Ok(())
    }
}

/// `ṽ_i = avg(𝒮_i) - avg(𝒮_{-i})`.
pub fn marginal_estimate(ds: &Dataset, player: usize) -> Result<f64> {
    nonempty(ds)?;
    check_player(player, ds.n())?;
    let (mut with, mut without) = (Mean::default(), Mean::default());
    for r in ds.records() {
        if r.subset.contains(player) {
            with.push(r.cost);
        } else {
            without.push(r.cost);
        }
    }
    let with = with.get().ok_or(Error::InsufficientData {
        player,
        side: Side::With,
    })?;
    let without = without.get().ok_or(Error::InsufficientData {
        player,
        side: Side::Without,
    })?;
    Ok(with - without)
}

/// `ṽ_i` for every player.
pub fn marginal_estimates(ds: &Dataset) -> Result<Vec<f64>> {
    (0..ds.n()).map(|i| marginal_estimate(ds, i)).collect()
}

/// What to do when a size bucket needed by the Shapley-distribution
/// estimator is empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EmptyBucketPolicy {
    #[default]
    Error,
    /// Treat the missing average as zero and record the bucket.
    ImputeZero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DshEstimate {
    pub value: f64,
    pub imputed: Vec<Bucket>,
    pub warnings: Vec<String>,
}

/// `φ̃_i = (1/n)·(Σ_{j=1}^{n} avg(𝒮^j_i) - Σ_{j=0}^{n-1} avg(𝒮^j_{-i}))`.
///
/// Each difference of bucket averages estimates the expected marginal
/// contribution to a uniform set of size `j-1`, and the Shapley value is
/// the mean of those `n` terms. Unbiased when the data come from the
/// Shapley distribution. Other laws produce a warning, not an error.
pub fn shapley_dsh_estimate(ds: &Dataset, player: usize, policy: EmptyBucketPolicy) -> Result<DshEstimate> {
    nonempty(ds)?;
    check_player(player, ds.n())?;
    let n = ds.n();
    let mut with = vec![Mean::default(); n + 1];
    let mut without = vec![Mean::default(); n + 1];
    for r in ds.records() {
        let j = r.subset.len();
        if r.subset.contains(player) {
            with[j].push(r.cost);
        } else {
            without[j].push(r.cost);
        }
    }
    let mut missing = Vec::new();
    let mut acc = CompensatedSum::new();
    for j in 1..=n {
        match with[j].get() {
            Some(v) => acc.add(v),
            None => missing.push(Bucket {
                size: j,
                side: Side::With,
            }),
        }
    }
    for j in 0..n {
        match without[j].get() {
            Some(v) => acc.add(-v),
            None => missing.push(Bucket {
                size: j,
                side: Side::Without,
            }),
        }
    }
    if !missing.is_empty() && policy == EmptyBucketPolicy::Error {
        return Err(Error::MissingBuckets {
            player,
            buckets: missing,
        });
    }
    let mut warnings = Vec::new();
    if ds.meta().law != Law::Shapley {
        warnings.push(format!(
            "dataset law is {}, not shapley; the estimate is biased",
            ds.meta().law.as_str()
        ));
    }
    Ok(DshEstimate {
        value: acc.value() / n as f64,
        imputed: missing,
        warnings,
    })
}

/// `(2-κ) / (2·sqrt(1-κ))`.
pub fn curvature_factor(kappa: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&kappa) {
        return Err(Error::InvalidCurvature(kappa));
    }
    Ok((2.0 - kappa) / (2.0 * libm::sqrt(1.0 - kappa)))
}

/// `ṽ_i` rescaled by [`curvature_factor`]; meant for uniform samples of a
/// monotone submodular game with known curvature `κ`.
pub fn curvature_scaled_estimate(ds: &Dataset, player: usize, kappa: f64) -> Result<f64> {
    let factor = curvature_factor(kappa)?;
    Ok(factor * marginal_estimate(ds, player)?)
}

/// `φ̃^𝒟_i = (1/m) Σ_{S_j ∋ i} C(S_j) / |S_j|`.
pub fn empirical_dd_shapley(ds: &Dataset, player: usize) -> Result<f64> {
    nonempty(ds)?;
    check_player(player, ds.n())?;
    let mut acc = CompensatedSum::new();
    for r in ds.records().iter().filter(|r| r.subset.contains(player)) {
        acc.add(r.cost / r.subset.len() as f64);
    }
    Ok(acc.value() / ds.m() as f64)
}

/// [`empirical_dd_shapley`] for every player in one pass.
pub fn empirical_dd_shapley_all(ds: &Dataset) -> Result<Vec<f64>> {
    nonempty(ds)?;
    let mut acc = vec![CompensatedSum::new(); ds.n()];
    for r in ds.records() {
        if r.subset.is_empty() {
            continue;
        }
        let share = r.cost / r.subset.len() as f64;
        for i in r.subset.iter() {
            acc[i].add(share);
        }
    }
    let m = ds.m() as f64;
    Ok(acc.iter().map(|a| a.value() / m).collect())
}

/// `φ^𝒟_i = Σ_{S ∋ i} Pr[S]·C(S)/|S|` by enumeration.
pub fn exact_dd_shapley(game: &Game, dist: &SetDistribution, player: usize) -> Result<f64> {
    check_player(player, game.n())?;
    Ok(exact_dd_shapley_all(game, dist)?[player])
}

/// [`exact_dd_shapley`] for every player.
pub fn exact_dd_shapley_all(game: &Game, dist: &SetDistribution) -> Result<Vec<f64>> {
    let n = game.n();
    if dist.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: dist.n(),
        });
    }
    check_exhaustive(n, EXHAUSTIVE_LIMIT)?;
    let mut acc = vec![CompensatedSum::new(); n];
    for s in all_subsets(n).skip(1) {
        let p = dist.prob(s);
        if p == 0.0 {
            continue;
        }
        let share = p * game.cost(s) / s.len() as f64;
        for i in s.iter() {
            acc[i].add(share);
        }
    }
    Ok(acc.iter().map(CompensatedSum::value).collect())
}

/// `ψ_i = ṽ_i · C(N) / Σ_j ṽ_j`, which balances exactly to `grand_cost`.
pub fn additive_core_allocation(ds: &Dataset, grand_cost: f64) -> Result<CostAllocation> {
    let estimates = marginal_estimates(ds)?;
    let total = compensated_sum(estimates.iter().copied());
    if !(total > 0.0) {
        return Err(Error::DegenerateScaling(total));
    }
    let scale = grand_cost / total;
    let mut shares: Vec<f64> = estimates.iter().map(|v| v * scale).collect();
    // Push the rounding residue onto the largest share so the sum is exact.
    let residue = grand_cost - compensated_sum(shares.iter().copied());
    if let Some(k) = (0..shares.len()).max_by(|&a, &b| shares[a].abs().total_cmp(&shares[b].abs())) {
        shares[k] += residue;
    }
    Ok(CostAllocation {
        shares,
        method: String::from("additive-core(scaled marginal estimates)"),
        balanced_to: Some(grand_cost),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::SampleRecord;
    use crate::players::PlayerSet;

    fn rec(players: &[usize], cost: f64) -> SampleRecord {
        SampleRecord {
            subset: PlayerSet::from_players(players.iter().copied()),
            cost,
        }
    }

    #[test]
    fn marginal_from_two_records() {
        let ds = Dataset::from_records(1, vec![rec(&[0], 5.0), rec(&[], 0.0)]).unwrap();
        assert_eq!(marginal_estimate(&ds, 0).unwrap(), 5.0);
    }

    #[test]
    fn marginal_needs_both_sides() {
        let ds = Dataset::from_records(2, vec![rec(&[0], 5.0), rec(&[0, 1], 6.0)]).unwrap();
        assert_eq!(
            marginal_estimate(&ds, 0),
            Err(Error::InsufficientData {
                player: 0,
                side: Side::Without
            })
        );
        let empty = Dataset::from_records(2, vec![]).unwrap();
        assert_eq!(marginal_estimate(&empty, 0), Err(Error::EmptyInput));
    }

    #[test]
    fn dsh_single_player() {
        let ds = Dataset::from_records(1, vec![rec(&[0], 3.0), rec(&[], 0.0), rec(&[0], 3.0)]).unwrap();
        let est = shapley_dsh_estimate(&ds, 0, EmptyBucketPolicy::Error).unwrap();
        assert_eq!(est.value, 3.0);
        assert_eq!(est.warnings.len(), 1);
    }

    #[test]
    fn dsh_lists_missing_buckets() {
        let ds = Dataset::from_records(2, vec![rec(&[0], 1.0), rec(&[], 0.0)]).unwrap();
        let err = shapley_dsh_estimate(&ds, 0, EmptyBucketPolicy::Error).unwrap_err();
        let Error::MissingBuckets { buckets, .. } = err else {
            panic!("wrong error");
        };
        assert_eq!(
            buckets,
            vec![
                Bucket { size: 2, side: Side::With },
                Bucket { size: 1, side: Side::Without }
            ]
        );
        let imputed = shapley_dsh_estimate(&ds, 0, EmptyBucketPolicy::ImputeZero).unwrap();
        assert_eq!(imputed.value, 0.5);
        assert_eq!(imputed.imputed.len(), 2);
    }

    #[test]
    fn curvature_factors() {
        assert_eq!(curvature_factor(0.0).unwrap(), 1.0);
        assert_eq!(curvature_factor(0.75).unwrap(), 1.25);
        assert!(curvature_factor(1.0).is_err());
        assert!(curvature_factor(-0.1).is_err());
    }

    #[test]
    fn curvature_scaling_at_zero_is_identity() {
        let g = Game::additive(vec![1.0, 2.0, 3.0]).unwrap();
        let d = SetDistribution::uniform(3).unwrap();
        let ds = Dataset::generate(&g, &d, 1000, 4).unwrap();
        for i in 0..3 {
            assert_eq!(
                curvature_scaled_estimate(&ds, i, 0.0).unwrap(),
                marginal_estimate(&ds, i).unwrap()
            );
        }
    }

    #[test]
    fn equal_split_of_a_single_record() {
        let ds = Dataset::from_records(3, vec![rec(&[0, 1], 6.0)]).unwrap();
        assert_eq!(empirical_dd_shapley(&ds, 0).unwrap(), 3.0);
        assert_eq!(empirical_dd_shapley(&ds, 1).unwrap(), 3.0);
        assert_eq!(empirical_dd_shapley(&ds, 2).unwrap(), 0.0);
        assert_eq!(empirical_dd_shapley_all(&ds).unwrap(), vec![3.0, 3.0, 0.0]);
        let empty = Dataset::from_records(3, vec![]).unwrap();
        assert_eq!(empirical_dd_shapley(&empty, 0), Err(Error::EmptyInput));
    }

    #[test]
    fn exact_dd_shapley_examples() {
        let g = Game::additive(vec![1.0, 3.0, 5.0]).unwrap();
        let d = SetDistribution::point_mass(3, PlayerSet::from_players([0, 1])).unwrap();
        assert_eq!(exact_dd_shapley_all(&g, &d).unwrap(), vec![2.0, 2.0, 0.0]);
        let g = Game::additive(vec![2.0]).unwrap();
        let d = SetDistribution::uniform(1).unwrap();
        assert_eq!(exact_dd_shapley(&g, &d, 0).unwrap(), 1.0);
    }

    #[test]
    fn additive_core_on_exact_marginals() {
        // Every subset once: marginal estimates equal the weights exactly.
        let g = Game::additive(vec![1.0, 2.0, 3.0]).unwrap();
        let records = all_subsets(3)
            .map(|s| SampleRecord { subset: s, cost: g.cost(s) })
            .collect();
        let ds = Dataset::from_records(3, records).unwrap();
        let psi = additive_core_allocation(&ds, 6.0).unwrap();
        assert_eq!(psi.shares, vec![1.0, 2.0, 3.0]);
        assert_eq!(psi.total(), 6.0);
    }

    #[test]
    fn additive_core_rejects_nonpositive_total() {
        let ds = Dataset::from_records(1, vec![rec(&[0], 0.0), rec(&[], 0.0)]).unwrap();
        assert_eq!(
            additive_core_allocation(&ds, 1.0),
            Err(Error::DegenerateScaling(0.0))
        );
    }
}
