//! Sample datasets: ordered `(S, C(S))` records plus provenance.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::distribution::{DistributionKind, SetDistribution};
use crate::error::{check_player, Error, Result};
use crate::game::Game;
use crate::players::PlayerSet;
use crate::rng::seeded;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleRecord {
    pub subset: PlayerSet,
    pub cost: f64,
}

/// Coarse family of the sampling law, kept so estimators can check their
/// distributional preconditions without the full descriptor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Law {
    Uniform,
    Product,
    Shapley,
    PointMass,
    Mixture,
    Unknown,
}

impl Law {
    pub fn of(dist: &SetDistribution) -> Law {
        match dist.kind() {
            DistributionKind::Uniform => Law::Uniform,
            DistributionKind::Product { .. } => Law::Product,
            DistributionKind::Shapley => Law::Shapley,
            DistributionKind::PointMass(_) => Law::PointMass,
            DistributionKind::Mixture(_) => Law::Mixture,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Law::Uniform => "uniform",
            Law::Product => "product",
            Law::Shapley => "shapley",
            Law::PointMass => "point-mass",
            Law::Mixture => "mixture",
            Law::Unknown => "unknown",
        }
    }

    pub fn parse(s: &str) -> Law {
        match s {
            "uniform" => Law::Uniform,
            "product" => Law::Product,
            "shapley" => Law::Shapley,
            "point-mass" => Law::PointMass,
            "mixture" => Law::Mixture,
            _ => Law::Unknown,
        }
    }
}

/// Generation provenance. `game` and `distribution` are opaque descriptor
/// strings; the companion crate stores canonical serialized descriptors
/// there.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetMeta {
    pub n: usize,
    pub seed: u64,
    pub game: String,
    pub distribution: String,
    pub law: Law,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    meta: DatasetMeta,
    records: Vec<SampleRecord>,
}

/// Records of one size split by membership of a player.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SizeBucket {
    pub with: Vec<SampleRecord>,
    pub without: Vec<SampleRecord>,
}

impl Dataset {
    /// Wraps records after checking that they respect `meta.n`.
    pub fn new(meta: DatasetMeta, records: Vec<SampleRecord>) -> Result<Self> {
        let full = PlayerSet::full(meta.n);
        for (k, r) in records.iter().enumerate() {
            if !r.subset.is_subset(full) {
                return Err(Error::Construction(alloc::format!(
                    "record {k}: subset {} exceeds n={}",
                    r.subset,
                    meta.n
                )));
            }
            if !(r.cost.is_finite() && r.cost >= 0.0) {
                return Err(Error::Construction(alloc::format!(
                    "record {k}: cost {} is not a finite nonnegative number",
                    r.cost
                )));
            }
        }
        Ok(Dataset { meta, records })
    }

    /// Records without provenance, for hand-built inputs.
    pub fn from_records(n: usize, records: Vec<SampleRecord>) -> Result<Self> {
        Self::new(
            DatasetMeta {
                n,
                seed: 0,
                game: String::new(),
                distribution: String::new(),
                law: Law::Unknown,
            },
            records,
        )
    }

    /// Draws `m` sets from `dist` with a generator seeded by `seed` and
    /// labels each with its cost. Record `k` is the `k`-th draw.
    pub fn generate(game: &Game, dist: &SetDistribution, m: usize, seed: u64) -> Result<Self> {
        if game.n() != dist.n() {
            return Err(Error::DimensionMismatch {
                expected: game.n(),
                found: dist.n(),
            });
        }
        if m == 0 {
            return Err(Error::EmptyInput);
        }
        let mut rng = seeded(seed);
        let records = (0..m)
            .map(|_| {
                let subset = dist.sample(&mut rng);
                SampleRecord {
                    subset,
                    cost: game.cost(subset),
                }
            })
            .collect();
        Ok(Dataset {
            meta: DatasetMeta {
                n: game.n(),
                seed,
                game: game.label().into(),
                distribution: dist.label(),
                law: Law::of(dist),
            },
            records,
        })
    }

    #[must_use]
    pub fn with_descriptors(mut self, game: String, distribution: String) -> Self {
        self.meta.game = game;
        self.meta.distribution = distribution;
        self
    }

    pub fn n(&self) -> usize {
        self.meta.n
    }

    pub fn m(&self) -> usize {
        self.records.len()
    }

    pub fn meta(&self) -> &DatasetMeta {
        &self.meta
    }

    pub fn records(&self) -> &[SampleRecord] {
        &self.records
    }

    /// `(𝒮_i, 𝒮_{-i})`, each in dataset order.
    pub fn split_by_membership(&self, player: usize) -> Result<(Vec<SampleRecord>, Vec<SampleRecord>)> {
        check_player(player, self.n())?;
        Ok(self.records.iter().partition(|r| r.subset.contains(player)))
    }

    /// Buckets indexed by size `j = 0..=n`, each split by membership.
    pub fn split_by_size_and_membership(&self, player: usize) -> Result<Vec<SizeBucket>> {
        check_player(player, self.n())?;
        let mut buckets = vec![SizeBucket::default(); self.n() + 1];
        for r in &self.records {
            let b = &mut buckets[r.subset.len()];
            if r.subset.contains(player) {
                b.with.push(*r);
            } else {
                b.without.push(*r);
            }
        }
        Ok(buckets)
    }

    /// Mean cost over all records.
    pub fn mean_cost(&self) -> Result<f64> {
        if self.records.is_empty() {
            return Err(Error::EmptyInput);
        }
        Ok(crate::numeric::compensated_sum(self.records.iter().map(|r| r.cost)) / self.m() as f64)
    }

    /// Distinct subsets, keeping the first cost seen for each, in first
    /// appearance order.
    pub fn distinct_records(&self) -> Vec<SampleRecord> {
        let mut seen = alloc::collections::BTreeSet::new();
        self.records
            .iter()
            .filter(|r| seen.insert(r.subset))
            .copied()
            .collect()
    }
}
