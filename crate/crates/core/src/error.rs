use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Which side of a membership split an estimator found empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    With,
    Without,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::With => f.write_str("with"),
            Side::Without => f.write_str("without"),
        }
    }
}

/// A size bucket `(j, side)` of a dataset split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bucket {
    pub size: usize,
    pub side: Side,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Invalid parameters passed to a constructor.
    Construction(String),
    /// Player counts of two inputs differ.
    DimensionMismatch { expected: usize, found: usize },
    /// A player index outside `0..n`.
    PlayerOutOfRange { player: usize, n: usize },
    /// Exhaustive operation requested above its enumeration limit.
    Capability { n: usize, limit: usize },
    /// Dataset holds no records.
    EmptyInput,
    /// Marginal estimator found one membership side empty.
    InsufficientData { player: usize, side: Side },
    /// Size-bucketed estimator found required buckets empty.
    MissingBuckets { player: usize, buckets: Vec<Bucket> },
    /// Some singleton has zero cost, so curvature is undefined.
    UndefinedCurvature { player: usize },
    /// Some nonempty coalition has zero cost, so spread is infinite.
    InfiniteSpread,
    /// Conditioning on `i ∉ S` has probability zero.
    UndefinedConditional { player: usize },
    /// Rescaling by a nonpositive total.
    DegenerateScaling(f64),
    /// The sample constraints admit no balanced allocation.
    NoEmpiricalCore,
    /// The LP solver lost accuracy or hit its iteration cap.
    NumericalFailure(String),
    /// A curvature input outside `[0, 1)`.
    InvalidCurvature(f64),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Construction(msg) => write!(f, "invalid construction: {msg}"),
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected n={expected}, found n={found}")
            }
            Error::PlayerOutOfRange { player, n } => {
                write!(f, "player {} out of range for n={n}", player + 1)
            }
            Error::Capability { n, limit } => {
                write!(f, "n={n} exceeds the exhaustive limit {limit}")
            }
            Error::EmptyInput => f.write_str("dataset has no records"),
            Error::InsufficientData { player, side } => write!(
                f,
                "insufficient data: no samples {side} player {}",
                player + 1
            ),
            Error::MissingBuckets { player, buckets } => {
                write!(f, "insufficient data for player {}: empty buckets", player + 1)?;
                for b in buckets {
                    write!(f, " (j={}, {})", b.size, b.side)?;
                }
                Ok(())
            }
            Error::UndefinedCurvature { player } => {
                write!(f, "curvature undefined: C({{{}}}) = 0", player + 1)
            }
            Error::InfiniteSpread => f.write_str("spread infinite: a nonempty set has zero cost"),
            Error::UndefinedConditional { player } => {
                write!(f, "Pr[player {} not in S] = 0", player + 1)
            }
            Error::DegenerateScaling(total) => {
                write!(f, "cannot rescale: estimate total {total} is not positive")
            }
            Error::NoEmpiricalCore => f.write_str("no allocation satisfies balance and every sample"),
            Error::NumericalFailure(msg) => write!(f, "numerical failure: {msg}"),
            Error::InvalidCurvature(k) => write!(f, "curvature {k} outside [0, 1)"),
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn check_player(player: usize, n: usize) -> Result<()> {
    if player < n {
        Ok(())
    } else {
        Err(Error::PlayerOutOfRange { player, n })
    }
}

pub(crate) fn check_exhaustive(n: usize, limit: usize) -> Result<()> {
    if n <= limit {
        Ok(())
    } else {
        Err(Error::Capability { n, limit })
    }
}
