use core::fmt;

use crate::error::{Error, Result};
use crate::MAX_PLAYERS;

/// A coalition of players encoded as a bit mask: player `i` is bit `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct PlayerSet(u64);

impl PlayerSet {
    pub const EMPTY: PlayerSet = PlayerSet(0);

    #[inline]
    pub const fn from_bits(bits: u64) -> Self {
        PlayerSet(bits)
    }

    #[inline]
    pub const fn bits(self) -> u64 {
        self.0
    }

    /// The grand coalition `{0, .., n-1}`.
    #[inline]
    pub const fn full(n: usize) -> Self {
        if n >= MAX_PLAYERS {
            PlayerSet(u64::MAX)
        } else {
            PlayerSet((1u64 << n) - 1)
        }
    }

    pub fn from_players<I: IntoIterator<Item = usize>>(players: I) -> Self {
        let mut set = PlayerSet::EMPTY;
        for p in players {
            set = set.with(p);
        }
        set
    }

    /// Consecutive block `start..end`.
    pub fn range(start: usize, end: usize) -> Self {
        PlayerSet::full(end).difference(PlayerSet::full(start))
    }

    /// Rejects sets with members at index `n` or above.
    pub fn validate(self, n: usize) -> Result<Self> {
        if self.is_subset(PlayerSet::full(n)) {
            Ok(self)
        } else {
            Err(Error::Construction(alloc::format!(
                "set {self} has members outside 1..={n}"
            )))
        }
    }

    #[inline]
    pub const fn contains(self, player: usize) -> bool {
        player < MAX_PLAYERS && self.0 >> player & 1 == 1
    }

    #[inline]
    #[must_use]
    pub const fn with(self, player: usize) -> Self {
        PlayerSet(self.0 | 1u64 << player)
    }

    #[inline]
    #[must_use]
    pub const fn without(self, player: usize) -> Self {
        PlayerSet(self.0 & !(1u64 << player))
    }

    #[inline]
    pub const fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    #[inline]
    pub const fn is_empty(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub const fn union(self, other: Self) -> Self {
        PlayerSet(self.0 | other.0)
    }

    #[inline]
    pub const fn intersection(self, other: Self) -> Self {
        PlayerSet(self.0 & other.0)
    }

    #[inline]
    pub const fn difference(self, other: Self) -> Self {
        PlayerSet(self.0 & !other.0)
    }

    #[inline]
    pub const fn complement(self, n: usize) -> Self {
        PlayerSet(!self.0 & PlayerSet::full(n).0)
    }

    #[inline]
    pub const fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn iter(self) -> Members {
        Members(self.0)
    }
}

impl fmt::Display for PlayerSet {
    /// One-based set literal, e.g. `{1,3,5}`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, p) in self.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", p + 1)?;
        }
        f.write_str("}")
    }
}

/// Ascending member indices.
#[derive(Debug, Clone)]
pub struct Members(u64);

impl Iterator for Members {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let p = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(p)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let k = self.0.count_ones() as usize;
        (k, Some(k))
    }
}

impl ExactSizeIterator for Members {}

/// All `2^n` subsets of `{0..n-1}` in ascending bit-mask order.
///
/// Callers enforce the exhaustive limit; `n` must be below 64.
pub fn all_subsets(n: usize) -> impl Iterator<Item = PlayerSet> + Clone {
    debug_assert!(n < MAX_PLAYERS);
    (0..1u64 << n).map(PlayerSet)
}

/// All subsets of `mask` in ascending bit-mask order.
pub fn submasks(mask: PlayerSet) -> impl Iterator<Item = PlayerSet> {
    let full = mask.0;
    let mut next = Some(0u64);
    core::iter::from_fn(move || {
        let cur = next?;
        next = if cur == full {
            None
        } else {
            Some((cur.wrapping_sub(full)) & full)
        };
        Some(PlayerSet(cur))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec::Vec;

    #[test]
    fn display_is_one_based() {
        let s = PlayerSet::from_players([0, 2, 4]);
        assert_eq!(s.to_string(), "{1,3,5}");
        assert_eq!(PlayerSet::EMPTY.to_string(), "{}");
    }

    #[test]
    fn full_handles_64_players() {
        assert_eq!(PlayerSet::full(64).len(), 64);
        assert_eq!(PlayerSet::full(3).bits(), 0b111);
        assert_eq!(PlayerSet::full(0), PlayerSet::EMPTY);
        assert_eq!(PlayerSet::from_bits(1).complement(64).len(), 63);
    }

    #[test]
    fn set_algebra_stays_inside_ground_set() {
        let a = PlayerSet::from_players([0, 1]);
        let b = PlayerSet::from_players([1, 2]);
        assert_eq!(a.union(b).len(), 3);
        assert_eq!(a.intersection(b), PlayerSet::from_players([1]));
        assert_eq!(a.complement(4), PlayerSet::from_players([2, 3]));
        assert!(a.validate(2).is_ok());
        assert!(b.validate(2).is_err());
        assert_eq!(PlayerSet::range(2, 5), PlayerSet::from_players([2, 3, 4]));
    }

    #[test]
    fn submasks_enumerate_every_subset_once() {
        let mask = PlayerSet::from_players([1, 3, 4]);
        let subs: Vec<_> = submasks(mask).collect();
        assert_eq!(subs.len(), 8);
        assert!(subs.windows(2).all(|w| w[0] < w[1]));
        assert!(subs.iter().all(|s| s.is_subset(mask)));
        assert_eq!(submasks(PlayerSet::EMPTY).count(), 1);
    }
}
