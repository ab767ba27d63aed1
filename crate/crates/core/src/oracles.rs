//! Ground truth by exhaustive enumeration.
//!
//! Every function here is exact up to float rounding and refuses games
//! above [`EXHAUSTIVE_LIMIT`] players, except the closed-form profiles for
//! families whose cost depends only on set sizes.

use alloc::vec;
use alloc::vec::Vec;

use crate::distribution::SetDistribution;
use crate::error::{check_exhaustive, check_player, Error, Result};
use crate::game::{Game, GameKind};
use crate::numeric::{binomial, shapley_weights, CompensatedSum};
use crate::players::{all_subsets, PlayerSet};
use crate::EXHAUSTIVE_LIMIT;

/// Expected marginal contribution of one player by coalition size:
/// `by_size[j] = E[C_S(i) | |S| = j, i ∉ S]` for `j = 0..n-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalProfile {
    pub player: usize,
    pub by_size: Vec<f64>,
}

impl MarginalProfile {
    /// `φ_i = (1/n) Σ_j by_size[j]`.
    pub fn shapley(&self) -> f64 {
        let mut acc = CompensatedSum::new();
        acc.extend(self.by_size.iter().copied());
        acc.value() / self.by_size.len() as f64
    }

    /// Whether `by_size` never increases by more than `tol`.
    pub fn is_nonincreasing(&self, tol: f64) -> bool {
        self.by_size.windows(2).all(|w| w[1] <= w[0] + tol)
    }

    /// `v_i` under the uniform law: sizes weighted by `Binomial(n-1, 1/2)`.
    pub fn uniform_expectation(&self) -> f64 {
        let n1 = self.by_size.len() - 1;
        let scale = libm::exp2(-(n1 as f64));
        let mut acc = CompensatedSum::new();
        for (j, v) in self.by_size.iter().enumerate() {
            acc.add(binomial(n1, j) * scale * v);
        }
        acc.value()
    }
}

fn tabulate(game: &Game) -> Result<Vec<f64>> {
    check_exhaustive(game.n(), EXHAUSTIVE_LIMIT)?;
    Ok(all_subsets(game.n()).map(|s| game.cost(s)).collect())
}

/// `φ_i = Σ_{S ∌ i} |S|!(n-|S|-1)!/n! · C_S(i)`.
pub fn exact_shapley_subset(game: &Game, player: usize) -> Result<f64> {
    check_player(player, game.n())?;
    let costs = tabulate(game)?;
    Ok(shapley_from_table(&costs, game.n(), player))
}

fn shapley_from_table(costs: &[f64], n: usize, player: usize) -> f64 {
    let weights = shapley_weights(n);
    let bit = 1usize << player;
    let mut acc = CompensatedSum::new();
    for mask in 0..costs.len() {
        if mask & bit == 0 {
            let gain = costs[mask | bit] - costs[mask];
            acc.add(weights[mask.count_ones() as usize] * gain);
        }
    }
    acc.value()
}

/// Shapley value of every player by the subset formula, tabulating once.
pub fn exact_shapley(game: &Game) -> Result<Vec<f64>> {
    let costs = tabulate(game)?;
    Ok((0..game.n())
        .map(|i| shapley_from_table(&costs, game.n(), i))
        .collect())
}

/// Per-size average marginals by enumeration.
pub fn marginal_profile(game: &Game, player: usize) -> Result<MarginalProfile> {
    check_player(player, game.n())?;
    let costs = tabulate(game)?;
    Ok(profile_from_table(&costs, game.n(), player))
}

fn profile_from_table(costs: &[f64], n: usize, player: usize) -> MarginalProfile {
    let bit = 1usize << player;
    let mut sums = vec![CompensatedSum::new(); n];
    for mask in 0..costs.len() {
        if mask & bit == 0 {
            sums[mask.count_ones() as usize].add(costs[mask | bit] - costs[mask]);
        }
    }
    let by_size = sums
        .iter()
        .enumerate()
        .map(|(j, s)| s.value() / binomial(n - 1, j))
        .collect();
    MarginalProfile { player, by_size }
}

/// `φ_i` as the average of the per-size profile.
pub fn exact_shapley_sizes(game: &Game, player: usize) -> Result<f64> {
    Ok(marginal_profile(game, player)?.shapley())
}

/// Per-size profile in closed form for families whose marginals depend
/// only on sizes (and, for the curvature pair, on the distinguished
/// player). Works at any `n`; `None` for other families.
pub fn closed_form_profile(game: &Game, player: usize) -> Option<MarginalProfile> {
    let n = game.n();
    if player >= n {
        return None;
    }
    let by_size: Vec<f64> = match game.kind() {
        GameKind::Additive { weights } => vec![weights[player]; n],
        GameKind::Symmetric { by_size } => (0..n).map(|j| by_size[j + 1] - by_size[j]).collect(),
        GameKind::CurvatureFirst(_) => (0..n)
            .map(|j| {
                let s = PlayerSet::full(j);
                game.cost(s.with(n - 1)) - game.cost(s)
            })
            .collect(),
        GameKind::CurvatureSecond(shape) | GameKind::CurvatureSecondAsPrinted(shape) => {
            let star = shape.distinguished;
            // Representative sets of each size, avoiding `player`, with and
            // without the distinguished player.
            let others: Vec<usize> = (0..n).filter(|&p| p != player && p != star).collect();
            let without_star = |j: usize| PlayerSet::from_players(others.iter().copied().take(j));
            (0..n)
                .map(|j| {
                    if player == star {
                        let s = without_star(j);
                        game.cost(s.with(player)) - game.cost(s)
                    } else {
                        let gain = |s: PlayerSet| game.cost(s.with(player)) - game.cost(s);
                        let p_star = j as f64 / (n - 1) as f64;
                        let absent = if j <= n - 2 { gain(without_star(j)) } else { 0.0 };
                        let present = if j >= 1 {
                            gain(without_star(j - 1).with(star))
                        } else {
                            0.0
                        };
                        p_star * present + (1.0 - p_star) * absent
                    }
                })
                .collect()
        }
        _ => return None,
    };
    Some(MarginalProfile { player, by_size })
}

/// `v_i = E_{S∼D}[C_S(i) | i ∉ S]` by enumeration.
pub fn exact_expected_marginal(game: &Game, dist: &SetDistribution, player: usize) -> Result<f64> {
    let n = game.n();
    if dist.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: dist.n(),
        });
    }
    check_player(player, n)?;
    check_exhaustive(n, EXHAUSTIVE_LIMIT)?;
    let mut mass = CompensatedSum::new();
    let mut acc = CompensatedSum::new();
    for s in all_subsets(n).filter(|s| !s.contains(player)) {
        let p = dist.prob(s);
        if p > 0.0 {
            mass.add(p);
            acc.add(p * game.marginal(s, player));
        }
    }
    let mass = mass.value();
    if mass <= 0.0 {
        return Err(Error::UndefinedConditional { player });
    }
    Ok(acc.value() / mass)
}

/// `E[C(S) | i ∈ S] - E[C(S) | i ∉ S]` by enumeration; equals the expected
/// marginal contribution for product laws.
pub fn exact_membership_difference(game: &Game, dist: &SetDistribution, player: usize) -> Result<f64> {
    let n = game.n();
    check_player(player, n)?;
    check_exhaustive(n, EXHAUSTIVE_LIMIT)?;
    let (mut pin, mut cin, mut pout, mut cout) = (
        CompensatedSum::new(),
        CompensatedSum::new(),
        CompensatedSum::new(),
        CompensatedSum::new(),
    );
    for s in all_subsets(n) {
        let p = dist.prob(s);
        if s.contains(player) {
            pin.add(p);
            cin.add(p * game.cost(s));
        } else {
            pout.add(p);
            cout.add(p * game.cost(s));
        }
    }
    if pin.value() <= 0.0 || pout.value() <= 0.0 {
        return Err(Error::UndefinedConditional { player });
    }
    Ok(cin.value() / pin.value() - cout.value() / pout.value())
}

/// `E_{S∼D}[C(S)]` by enumeration.
pub fn exact_expected_cost(game: &Game, dist: &SetDistribution) -> Result<f64> {
    check_exhaustive(game.n(), EXHAUSTIVE_LIMIT)?;
    let mut acc = CompensatedSum::new();
    for s in all_subsets(game.n()) {
        acc.add(dist.prob(s) * game.cost(s));
    }
    Ok(acc.value())
}

/// Whether players `i` and `j` are interchangeable:
/// `C(S ∪ {i}) = C(S ∪ {j})` for every `S ⊆ N ∖ {i, j}`.
pub fn interchangeable(game: &Game, i: usize, j: usize) -> Result<bool> {
    check_exhaustive(game.n(), EXHAUSTIVE_LIMIT)?;
    let rest = PlayerSet::full(game.n()).without(i).without(j);
    Ok(crate::players::submasks(rest).all(|s| game.cost(s.with(i)) == game.cost(s.with(j))))
}

/// Whether `C(S ∪ {i}) = C(S)` for every `S`.
pub fn is_null_player(game: &Game, player: usize) -> Result<bool> {
    check_exhaustive(game.n(), EXHAUSTIVE_LIMIT)?;
    Ok(all_subsets(game.n())
        .filter(|s| !s.contains(player))
        .all(|s| game.cost(s.with(player)) == game.cost(s)))
}

/// Shapley value of a coverage game at any `n`: each element's unit cost
/// is split equally among the players covering it. `None` for other
/// families.
pub fn coverage_shapley(game: &Game) -> Option<Vec<f64>> {
    let GameKind::Coverage { covers, universe } = game.kind() else {
        return None;
    };
    let mut phi = vec![0.0; game.n()];
    for e in 0..*universe {
        let (word, bit) = (e / 64, 1u64 << (e % 64));
        let owners: Vec<usize> = (0..covers.len()).filter(|&i| covers[i][word] & bit != 0).collect();
        for &i in &owners {
            phi[i] += 1.0 / owners.len() as f64;
        }
    }
    Some(phi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coverage_split_matches_enumeration() {
        let g = Game::coverage(&[vec![0, 1], vec![1, 2, 70], vec![2, 3], vec![0, 70, 71]], 72).unwrap();
        let split = coverage_shapley(&g).unwrap();
        for (a, b) in split.iter().zip(exact_shapley(&g).unwrap()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(coverage_shapley(&Game::cardinality(3).unwrap()).is_none());
    }
    use crate::game::{coverage_pair, Game};

    #[test]
    fn additive_shapley_is_singleton_cost() {
        let g = Game::additive(vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(exact_shapley(&g).unwrap(), vec![1.0, 2.0, 3.0]);
        for i in 0..3 {
            let p = marginal_profile(&g, i).unwrap();
            assert!(p.by_size.iter().all(|&v| v == (i + 1) as f64));
            assert_eq!(exact_shapley_sizes(&g, i).unwrap(), (i + 1) as f64);
        }
    }

    #[test]
    fn single_player() {
        let g = Game::additive(vec![7.5]).unwrap();
        assert_eq!(exact_shapley_sizes(&g, 0).unwrap(), 7.5);
        assert_eq!(exact_shapley_subset(&g, 0).unwrap(), 7.5);
    }

    #[test]
    fn coverage_pair_shapley_values() {
        let n = 8;
        let pair = coverage_pair(n, 0.5).unwrap();
        let phi = exact_shapley(&pair.first).unwrap();
        for (i, v) in phi.iter().enumerate() {
            let expect = if i < n / 2 { 2.0 / n as f64 } else { 2.0 / (0.25 * n as f64) };
            assert!((v - expect).abs() < 1e-12, "player {i}: {v}");
        }
    }

    #[test]
    fn symmetric_game_splits_evenly() {
        let g = Game::symmetric(vec![0.0, 3.0, 4.0, 4.5, 6.0]).unwrap();
        for v in exact_shapley(&g).unwrap() {
            assert!((v - 1.5).abs() < 1e-12);
        }
    }

    #[test]
    fn curvature_first_profile() {
        let g = Game::curvature_first(16, 0.5, 0.25).unwrap();
        let p = marginal_profile(&g, 0).unwrap();
        for (j, v) in p.by_size.iter().enumerate() {
            assert_eq!(*v, if j < 6 { 1.0 } else { 0.5 });
        }
    }

    #[test]
    fn closed_form_profiles_match_enumeration() {
        let games = [
            Game::curvature_first(14, 0.75, 0.25).unwrap(),
            Game::curvature_second(14, 0.75, 0.25).unwrap(),
            Game::curvature_second(16, 0.25, 0.25).unwrap(),
            Game::curvature_second_as_printed(16, 0.5, 0.25).unwrap(),
            Game::symmetric(vec![0.0, 2.0, 3.0, 3.5, 3.75]).unwrap(),
            Game::additive(vec![1.0, 4.0, 2.0]).unwrap(),
        ];
        for g in &games {
            for i in [0, 1, g.n() - 1] {
                let exact = marginal_profile(g, i).unwrap();
                let closed = closed_form_profile(g, i).unwrap();
                for (a, b) in exact.by_size.iter().zip(&closed.by_size) {
                    assert!((a - b).abs() < 1e-9, "{} player {i}: {a} vs {b}", g.label());
                }
            }
        }
        assert!(closed_form_profile(&Game::table(1, vec![0.0, 1.0]).unwrap(), 0).is_none());
    }

    #[test]
    fn uniform_expected_marginal() {
        let g = Game::symmetric(vec![0.0, 1.0, 1.0, 1.0]).unwrap();
        let d = SetDistribution::uniform(3).unwrap();
        // Only the empty set (probability 1/4 of S ∌ i) has positive gain.
        assert_eq!(exact_expected_marginal(&g, &d, 0).unwrap(), 0.25);
        let p = marginal_profile(&g, 0).unwrap();
        assert_eq!(p.uniform_expectation(), 0.25);
    }

    #[test]
    fn conditional_undefined_when_player_always_present() {
        let g = Game::additive(vec![1.0, 1.0]).unwrap();
        let d = SetDistribution::point_mass(2, PlayerSet::from_players([0])).unwrap();
        assert_eq!(
            exact_expected_marginal(&g, &d, 0),
            Err(Error::UndefinedConditional { player: 0 })
        );
    }

    #[test]
    fn interchangeability_and_null_players() {
        let g = Game::additive(vec![1.0, 1.0, 0.0]).unwrap();
        assert!(interchangeable(&g, 0, 1).unwrap());
        assert!(!interchangeable(&g, 0, 2).unwrap());
        assert!(is_null_player(&g, 2).unwrap());
        assert!(!is_null_player(&g, 0).unwrap());
    }
}
