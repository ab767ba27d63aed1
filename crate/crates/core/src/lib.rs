//! Cost sharing from samples of a cooperative game.
//!
//! A cooperative game assigns a cost to every coalition of `n` players. This
//! crate computes cost allocations (core points and Shapley-style values) from
//! i.i.d. `(S, C(S))` samples, and ships exhaustive oracles that certify every
//! estimator at small `n`.
//!
//! The crate is `no_std` and only needs an allocator. File formats, the
//! experiment harness and the command line live in the companion `statcost`
//! crate.
//!
//! Players are addressed by zero-based index in the API. Reports and set
//! literals print them one-based, so player `0` is shown as `{1}`.

#![no_std]

extern crate alloc;

pub mod dataset;
pub mod distribution;
pub mod error;
pub mod estimators;
pub mod game;
pub mod lp;
pub mod numeric;
pub mod oracles;
pub mod players;
pub mod rng;
pub mod solvers;
pub mod structure;

pub use dataset::{Dataset, DatasetMeta, SampleRecord};
pub use distribution::SetDistribution;
pub use error::{Error, Result};
pub use estimators::CostAllocation;
pub use game::{Game, GamePair};
pub use players::PlayerSet;

/// Largest `n` accepted by `O(2^n)` enumeration.
pub const EXHAUSTIVE_LIMIT: usize = 20;

/// Largest `n` accepted by the pairwise submodularity scan.
pub const PAIRWISE_LIMIT: usize = 16;

/// Largest player count representable by [`PlayerSet`].
pub const MAX_PLAYERS: usize = 64;
