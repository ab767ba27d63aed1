//! Exhaustive structural oracles: curvature, spread, monotonicity and
//! submodularity.

use crate::error::{check_exhaustive, Error, Result};
use crate::game::Game;
use crate::players::{all_subsets, PlayerSet};
use crate::{EXHAUSTIVE_LIMIT, PAIRWISE_LIMIT};

/// Slack allowed on float comparisons in the structure scan.
pub const STRUCTURE_TOLERANCE: f64 = 1e-9;

/// Result of [`check_structure`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructureReport {
    pub monotone: bool,
    pub submodular: bool,
    /// First `(S, i)` in ascending mask order with `C_S(i) < 0`.
    pub monotone_witness: Option<(PlayerSet, usize)>,
    /// First `(S, T, i)` with `S ⊆ T`, `i ∉ T` and `C_S(i) < C_T(i)`.
    pub witness: Option<(PlayerSet, PlayerSet, usize)>,
}

/// Scans every `(S, i)` and every `(S, S ∪ {j}, i)` in ascending mask order.
///
/// Checking submodularity on adjacent pairs `T = S ∪ {j}` suffices: any
/// violation on `S ⊆ T` telescopes into one on some adjacent pair.
pub fn check_structure(game: &Game) -> Result<StructureReport> {
    let n = game.n();
    check_exhaustive(n, PAIRWISE_LIMIT)?;
    let costs: alloc::vec::Vec<f64> = all_subsets(n).map(|s| game.cost(s)).collect();
    let c = |s: PlayerSet| costs[s.bits() as usize];
    let mut report = StructureReport {
        monotone: true,
        submodular: true,
        monotone_witness: None,
        witness: None,
    };
    for s in all_subsets(n) {
        for i in s.complement(n).iter() {
            let gain = c(s.with(i)) - c(s);
            if report.monotone && gain < -STRUCTURE_TOLERANCE {
                report.monotone = false;
                report.monotone_witness = Some((s, i));
            }
            if report.submodular {
                for j in s.complement(n).without(i).iter() {
                    let t = s.with(j);
                    let later = c(t.with(i)) - c(t);
                    if gain < later - STRUCTURE_TOLERANCE {
                        report.submodular = false;
                        report.witness = Some((s, t, i));
                        break;
                    }
                }
            }
        }
        if !report.monotone && !report.submodular {
            break;
        }
    }
    Ok(report)
}

/// `κ = 1 - min_i C_{N∖{i}}(i) / C({i})`.
///
/// Touches only `2n` sets, so it runs at any `n`; the caller vouches for
/// monotone submodularity (see [`check_structure`]).
pub fn curvature(game: &Game) -> Result<f64> {
    let n = game.n();
    let full = PlayerSet::full(n);
    let mut worst = f64::INFINITY;
    for i in 0..n {
        let alone = game.cost(PlayerSet::EMPTY.with(i));
        if alone <= 0.0 {
            return Err(Error::UndefinedCurvature { player: i });
        }
        let last = game.cost(full) - game.cost(full.without(i));
        worst = worst.min(last / alone);
    }
    Ok(1.0 - worst)
}

/// `τ = max_S C(S) / min_{S≠∅} C(S)` by enumeration.
pub fn spread(game: &Game) -> Result<f64> {
    let n = game.n();
    check_exhaustive(n, EXHAUSTIVE_LIMIT)?;
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for s in all_subsets(n).skip(1) {
        let c = game.cost(s);
        lo = lo.min(c);
        hi = hi.max(c);
    }
    if lo <= 0.0 {
        return Err(Error::InfiniteSpread);
    }
    Ok(hi / lo)
}

/// `min_{S≠∅} C(S)` by enumeration.
pub fn min_nonempty_cost(game: &Game) -> Result<f64> {
    check_exhaustive(game.n(), EXHAUSTIVE_LIMIT)?;
    Ok(all_subsets(game.n())
        .skip(1)
        .map(|s| game.cost(s))
        .fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{coverage_pair, curvature_pair, Game};
    use alloc::vec;
    use alloc::vec::Vec;

    #[test]
    fn additive_is_flat() {
        let g = Game::additive(vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(curvature(&g).unwrap(), 0.0);
        let r = check_structure(&g).unwrap();
        assert!(r.monotone && r.submodular);
        assert_eq!(spread(&Game::additive(vec![1.0; 3]).unwrap()).unwrap(), 3.0);
    }

    #[test]
    fn unit_demand_has_unbounded_curvature() {
        let g = Game::symmetric(vec![0.0, 1.0, 1.0]).unwrap();
        assert_eq!(curvature(&g).unwrap(), 1.0);
    }

    #[test]
    fn zero_singleton_breaks_curvature() {
        let g = Game::additive(vec![1.0, 0.0]).unwrap();
        assert_eq!(curvature(&g), Err(Error::UndefinedCurvature { player: 1 }));
        assert_eq!(spread(&g), Err(Error::InfiniteSpread));
    }

    #[test]
    fn constant_game_has_unit_spread() {
        let g = Game::symmetric(vec![0.0, 2.0, 2.0, 2.0]).unwrap();
        assert_eq!(spread(&g).unwrap(), 1.0);
    }

    #[test]
    fn squares_are_supermodular() {
        let g = Game::symmetric((0..=3).map(|s| (s * s) as f64).collect()).unwrap();
        let r = check_structure(&g).unwrap();
        assert!(r.monotone);
        assert!(!r.submodular);
        let (s, t, i) = r.witness.unwrap();
        assert!(s.is_subset(t) && !t.contains(i));
        assert!(g.marginal(s, i) < g.marginal(t, i));
    }

    #[test]
    fn decreasing_game_flags_monotonicity() {
        let g = Game::table(2, vec![0.0, 2.0, 2.0, 1.0]).unwrap();
        let r = check_structure(&g).unwrap();
        assert!(!r.monotone);
        assert_eq!(r.monotone_witness, Some((PlayerSet::from_players([0]), 1)));
    }

    #[test]
    fn coverage_pair_spread_is_five() {
        let pair = coverage_pair(8, 0.5).unwrap();
        assert_eq!(spread(&pair.first).unwrap(), 5.0);
    }

    #[test]
    fn curvature_pair_structure() {
        for &kappa in &[0.25, 0.5, 0.75] {
            let pair = curvature_pair(16, kappa, 0.25).unwrap();
            for g in [&pair.first, &pair.second] {
                let r = check_structure(g).unwrap();
                assert!(r.monotone && r.submodular, "{}: {r:?}", g.label());
            }
            assert_eq!(curvature(&pair.first).unwrap(), kappa);
        }
    }

    #[test]
    fn printed_second_form_is_not_submodular() {
        let g = Game::curvature_second_as_printed(16, 0.5, 0.25).unwrap();
        let r = check_structure(&g).unwrap();
        assert!(!r.submodular);
    }

    #[test]
    fn capability_limit() {
        let g = Game::additive(vec![1.0; 17]).unwrap();
        assert!(matches!(check_structure(&g), Err(Error::Capability { .. })));
        let g: Vec<f64> = vec![1.0; 21];
        assert!(matches!(
            spread(&Game::additive(g).unwrap()),
            Err(Error::Capability { .. })
        ));
    }
}
