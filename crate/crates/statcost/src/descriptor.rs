//! Serializable descriptors for games, game pairs and set distributions.
//!
//! Descriptors are structured records (`{family = "...", ...}` for games,
//! `{kind = "...", ...}` for distributions). The CLI accepts them inline as
//! a TOML inline table or as a path to a TOML file. Player indices inside
//! descriptors are zero-based, like the library API.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use statcost_core::distribution::default_product_bounds;
use statcost_core::game::{coverage_pair, curvature_pair};
use statcost_core::rng::seeded;
use statcost_core::{Game, GamePair, PlayerSet, SetDistribution};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GameSpec {
    Additive {
        weights: Vec<f64>,
    },
    Coverage {
        covers: Vec<Vec<usize>>,
        universe: usize,
    },
    /// Block index is zero-based.
    PartitionHard {
        n: usize,
        eps: f64,
        block: usize,
    },
    Cardinality {
        n: usize,
    },
    Symmetric {
        by_size: Vec<f64>,
    },
    Table {
        n: usize,
        costs: Vec<f64>,
    },
    CurvatureFirst {
        n: usize,
        kappa: f64,
        eps_prime: f64,
    },
    CurvatureSecond {
        n: usize,
        kappa: f64,
        eps_prime: f64,
    },
    CurvatureSecondAsPrinted {
        n: usize,
        kappa: f64,
        eps_prime: f64,
    },
    CoveragePairMember {
        n: usize,
        alpha: f64,
        #[serde(default)]
        swapped: bool,
    },
    /// Each player covers each element independently with probability
    /// `density`; a player that drew nothing gets one random element.
    RandomCoverage {
        n: usize,
        universe: usize,
        density: f64,
        seed: u64,
    },
    /// Integer costs uniform on `0..=max_cost`, with `C(∅) = 0`.
    RandomTable {
        n: usize,
        max_cost: u32,
        seed: u64,
    },
    Sum {
        first: Box<GameSpec>,
        second: Box<GameSpec>,
    },
}

impl GameSpec {
    pub fn build(&self) -> CliResult<Game> {
        Ok(match self {
            GameSpec::Additive { weights } => Game::additive(weights.clone())?,
            GameSpec::Coverage { covers, universe } => Game::coverage(covers, *universe)?,
            GameSpec::PartitionHard { n, eps, block } => Game::partition_hard(*n, *eps, *block)?,
            GameSpec::Cardinality { n } => Game::cardinality(*n)?,
            GameSpec::Symmetric { by_size } => Game::symmetric(by_size.clone())?,
            GameSpec::Table { n, costs } => Game::table(*n, costs.clone())?,
            GameSpec::CurvatureFirst { n, kappa, eps_prime } => Game::curvature_first(*n, *kappa, *eps_prime)?,
            GameSpec::CurvatureSecond { n, kappa, eps_prime } => Game::curvature_second(*n, *kappa, *eps_prime)?,
            GameSpec::CurvatureSecondAsPrinted { n, kappa, eps_prime } => {
                Game::curvature_second_as_printed(*n, *kappa, *eps_prime)?
            }
            GameSpec::CoveragePairMember { n, alpha, swapped } => Game::coverage_pair_member(*n, *alpha, *swapped)?,
            GameSpec::RandomCoverage {
                n,
                universe,
                density,
                seed,
            } => random_coverage(*n, *universe, *density, *seed)?,
            GameSpec::RandomTable { n, max_cost, seed } => random_table(*n, *max_cost, *seed)?,
            GameSpec::Sum { first, second } => Game::sum(first.build()?, second.build()?)?,
        })
    }

    /// The same family with its random seed replaced, for grids that draw
    /// a fresh random game per repetition. Deterministic families are
    /// returned unchanged.
    pub fn reseeded(&self, new_seed: u64) -> GameSpec {
        let mut out = self.clone();
        match &mut out {
            GameSpec::RandomCoverage { seed, .. } | GameSpec::RandomTable { seed, .. } => *seed = new_seed,
            GameSpec::Sum { first, second } => {
                **first = first.reseeded(new_seed);
                **second = second.reseeded(statcost_core::rng::mix64(new_seed));
            }
            _ => {}
        }
        out
    }

    pub fn canonical(&self) -> String {
        canonical(self)
    }
}

fn random_coverage(n: usize, universe: usize, density: f64, seed: u64) -> CliResult<Game> {
    if universe == 0 || !(0.0..=1.0).contains(&density) {
        return Err(CliError::Descriptor(format!(
            "random-coverage needs universe > 0 and density in [0, 1], got {universe} and {density}"
        )));
    }
    let mut rng = seeded(seed);
    let covers: Vec<Vec<usize>> = (0..n)
        .map(|_| {
            let mut cover: Vec<usize> = (0..universe).filter(|_| rng.gen_bool(density)).collect();
            if cover.is_empty() {
                cover.push(rng.gen_range(0..universe));
            }
            cover
        })
        .collect();
    Ok(Game::coverage(&covers, universe)?.with_label(format!(
        "random-coverage(n={n}, universe={universe}, density={density}, seed={seed})"
    )))
}

fn random_table(n: usize, max_cost: u32, seed: u64) -> CliResult<Game> {
    if n > statcost_core::EXHAUSTIVE_LIMIT {
        return Err(CliError::Descriptor(format!(
            "random-table needs n <= {}, got {n}",
            statcost_core::EXHAUSTIVE_LIMIT
        )));
    }
    let mut rng = seeded(seed);
    let mut costs: Vec<f64> = (0..1usize << n).map(|_| f64::from(rng.gen_range(0..=max_cost))).collect();
    costs[0] = 0.0;
    Ok(Game::table(n, costs)?.with_label(format!("random-table(n={n}, max_cost={max_cost}, seed={seed})")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PairSpec {
    Curvature {
        n: usize,
        kappa: f64,
        eps_prime: f64,
    },
    Coverage {
        n: usize,
        alpha: f64,
    },
    /// A partition-hard game against `C(S) = |S|`.
    PartitionVsCardinality {
        n: usize,
        eps: f64,
        block: usize,
    },
    /// A game paired with itself.
    Same {
        game: GameSpec,
    },
}

impl PairSpec {
    pub fn build(&self) -> CliResult<GamePair> {
        Ok(match self {
            PairSpec::Curvature { n, kappa, eps_prime } => curvature_pair(*n, *kappa, *eps_prime)?,
            PairSpec::Coverage { n, alpha } => coverage_pair(*n, *alpha)?,
            PairSpec::PartitionVsCardinality { n, eps, block } => {
                let first = Game::partition_hard(*n, *eps, *block)?;
                let size = (eps * *n as f64).round() as usize;
                GamePair::new(first, Game::cardinality(*n)?, Some(block * size))?
            }
            PairSpec::Same { game } => {
                let g = game.build()?;
                GamePair::new(g.clone(), g, None)?
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureComponent {
    pub weight: f64,
    pub dist: DistSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DistSpec {
    Uniform {
        n: usize,
    },
    /// Bounds default to `[1/n², 1 - 1/n²]`.
    Product {
        marginals: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lo: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        hi: Option<f64>,
    },
    Shapley {
        n: usize,
    },
    PointMass {
        n: usize,
        players: Vec<usize>,
    },
    Mixture {
        components: Vec<MixtureComponent>,
    },
}

impl DistSpec {
    pub fn build(&self) -> CliResult<SetDistribution> {
        Ok(match self {
            DistSpec::Uniform { n } => SetDistribution::uniform(*n)?,
            DistSpec::Product { marginals, lo, hi } => {
                let (dlo, dhi) = default_product_bounds(marginals.len());
                SetDistribution::product_with_bounds(marginals.clone(), lo.unwrap_or(dlo), hi.unwrap_or(dhi))?
            }
            DistSpec::Shapley { n } => SetDistribution::shapley(*n)?,
            DistSpec::PointMass { n, players } => {
                if let Some(&p) = players.iter().find(|&&p| p >= *n) {
                    return Err(CliError::Descriptor(format!("point-mass player {p} out of range for n={n}")));
                }
                SetDistribution::point_mass(*n, PlayerSet::from_players(players.iter().copied()))?
            }
            DistSpec::Mixture { components } => {
                let parts = components
                    .iter()
                    .map(|c| Ok((c.weight, c.dist.build()?)))
                    .collect::<CliResult<Vec<_>>>()?;
                SetDistribution::mixture_of(parts)?
            }
        })
    }

    pub fn canonical(&self) -> String {
        canonical(self)
    }
}

/// Compact JSON with object keys sorted, so equal descriptors print
/// identically however they were written.
pub fn canonical<T: Serialize>(value: &T) -> String {
    serde_json::to_value(value)
        .expect("descriptors serialize to JSON")
        .to_string()
}

/// Parses a descriptor given inline (`{family = "additive", ...}`), as
/// JSON, or as a path to a TOML file.
pub fn parse_descriptor<T: for<'de> Deserialize<'de>>(arg: &str) -> CliResult<T> {
    let trimmed = arg.trim_start();
    if trimmed.starts_with('{') {
        if let Ok(v) = serde_json::from_str(arg) {
            return Ok(v);
        }
        #[derive(Deserialize)]
        struct Wrapper<T> {
            v: T,
        }
        let w: Wrapper<T> =
            toml::from_str(&format!("v = {arg}")).map_err(|e| CliError::Descriptor(format!("{arg}: {e}")))?;
        return Ok(w.v);
    }
    let path = Path::new(arg);
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    toml::from_str(&text).map_err(|e| CliError::Descriptor(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inline_toml_and_json_agree() {
        let a: GameSpec = parse_descriptor(r#"{family = "additive", weights = [1, 2, 3]}"#).unwrap();
        let b: GameSpec = parse_descriptor(r#"{"family": "additive", "weights": [1.0, 2.0, 3.0]}"#).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.canonical(), r#"{"family":"additive","weights":[1.0,2.0,3.0]}"#);
        assert_eq!(a.build().unwrap().cost(PlayerSet::from_players([0, 2])), 4.0);
    }

    #[test]
    fn nested_mixture() {
        let d: DistSpec = parse_descriptor(
            r#"{kind = "mixture", components = [{weight = 0.5, dist = {kind = "point-mass", n = 2, players = [0]}}, {weight = 0.5, dist = {kind = "point-mass", n = 2, players = [1]}}]}"#,
        )
        .unwrap();
        let law = d.build().unwrap();
        assert_eq!(law.prob(PlayerSet::from_players([0])), 0.5);
    }

    #[test]
    fn random_families_are_seeded() {
        let spec = GameSpec::RandomCoverage {
            n: 6,
            universe: 20,
            density: 0.25,
            seed: 9,
        };
        assert_eq!(spec.build().unwrap(), spec.build().unwrap());
        assert_ne!(spec.build().unwrap(), spec.reseeded(10).build().unwrap());
        let g = spec.build().unwrap();
        assert!((0..6).all(|i| g.cost(PlayerSet::from_players([i])) >= 1.0));
    }

    #[test]
    fn rejects_unknown_fields() {
        assert!(parse_descriptor::<GameSpec>(r#"{family = "cardinality", n = 3, extra = 1}"#).is_err());
        assert!(parse_descriptor::<DistSpec>(r#"{kind = "point-mass", n = 2, players = [5]}"#)
            .unwrap()
            .build()
            .is_err());
    }
}
