//! Cooperative cost games and the hard-instance constructions.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_exhaustive, Error, Result};
use crate::players::{all_subsets, PlayerSet};
use crate::{EXHAUSTIVE_LIMIT, MAX_PLAYERS};

/// A cost function over coalitions of `n` players.
///
/// Games are immutable values: `cost` is deterministic, `cost(∅) = 0` and
/// every cost is finite and nonnegative for the built-in families.
#[derive(Debug, Clone, PartialEq)]
pub struct Game {
    n: usize,
    kind: GameKind,
    label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GameKind {
    Additive { weights: Vec<f64> },
    /// `C(S) = |∪_{i∈S} T_i|`; each cover is a bit set over the universe.
    Coverage { covers: Vec<Vec<u64>>, universe: usize },
    /// `|S \ A| + min(|S ∩ A|, cap)`.
    PartitionHard { block: PlayerSet, cap: f64 },
    /// Piecewise-linear in `|S|` with curvature kink at `L`.
    CurvatureFirst(CurvatureShape),
    /// Companion of [`GameKind::CurvatureFirst`] with a depressed tail for
    /// the distinguished player, built so that every marginal matches its
    /// piecewise definition.
    CurvatureSecond(CurvatureShape),
    /// The companion exactly as its closed form is usually printed. Its
    /// middle branch is off by one step from the marginal definition, which
    /// makes it non-submodular; kept so the discrepancy stays checkable.
    CurvatureSecondAsPrinted(CurvatureShape),
    /// `C(S) = by_size[|S|]`.
    Symmetric { by_size: Vec<f64> },
    /// Explicit cost per bit mask.
    Table { costs: Vec<f64> },
    /// Pointwise sum of two games on the same players.
    Sum(Box<Game>, Box<Game>),
}

/// Rounded parameters of the curvature construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureShape {
    pub kappa: f64,
    /// `L = floor((1 - eps') n / 2)`.
    pub low: usize,
    /// `H = ceil((1 + eps') n / 2)`.
    pub high: usize,
    /// `round(sqrt(n))`, the width of the descending ramp.
    pub ramp: usize,
    pub distinguished: usize,
}

impl CurvatureShape {
    pub fn new(n: usize, kappa: f64, eps_prime: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&kappa) {
            return Err(Error::InvalidCurvature(kappa));
        }
        if !(eps_prime > 0.0 && eps_prime < 1.0) {
            return Err(Error::Construction(format!(
                "eps' = {eps_prime} must lie in (0, 1)"
            )));
        }
        let half = n as f64 / 2.0;
        let low = libm::floor((1.0 - eps_prime) * half + 1e-9) as usize;
        let high = libm::ceil((1.0 + eps_prime) * half - 1e-9) as usize;
        let ramp = libm::round(libm::sqrt(n as f64)) as usize;
        if low < 2 || low > high || high + ramp > n {
            return Err(Error::Construction(format!(
                "n={n}, eps'={eps_prime} gives L={low}, H={high}, sqrt(n)~{ramp}; need 2 <= L <= H and H + sqrt(n) <= n"
            )));
        }
        Ok(CurvatureShape {
            kappa,
            low,
            high,
            ramp,
            distinguished: 0,
        })
    }

    fn slope(&self) -> f64 {
        1.0 - self.kappa
    }

    /// Per-step decrease along the ramp, `(1-κ - (1-κ)^2) / sqrt(n)`.
    fn ramp_step(&self) -> f64 {
        let a = self.slope();
        (a - a * a) / self.ramp as f64
    }

    /// Marginal of a non-distinguished player below `L`.
    fn early_marginal(&self) -> f64 {
        (self.low as f64 - self.slope()) / (self.low as f64 - 1.0)
    }

    fn first(&self, size: usize) -> f64 {
        let (l, a) = (self.low, self.slope());
        if size < l {
            size as f64
        } else {
            l as f64 + (size - l) as f64 * a
        }
    }

    /// Cost of a set of `size` players that excludes the distinguished one.
    fn second_without(&self, size: usize) -> f64 {
        let (l, h, r, a) = (self.low, self.high, self.ramp, self.slope());
        if size < l {
            size as f64 * self.early_marginal()
        } else if size <= h + r {
            l as f64 + (size - l) as f64 * a
        } else {
            l as f64 + (h + r - l) as f64 * a + (size - h - r) as f64 * (a - self.ramp_step())
        }
    }

    /// Marginal of the distinguished player to a set of `size` others.
    pub fn distinguished_marginal(&self, size: usize) -> f64 {
        let (h, r, a) = (self.high, self.ramp, self.slope());
        if size <= h {
            a
        } else if size <= h + r {
            a - (size - h) as f64 * self.ramp_step()
        } else {
            a * a
        }
    }

    fn second(&self, set: PlayerSet) -> f64 {
        let size = set.len();
        if set.contains(self.distinguished) {
            self.second_without(size - 1) + self.distinguished_marginal(size - 1)
        } else {
            self.second_without(size)
        }
    }

    fn second_as_printed(&self, set: PlayerSet) -> f64 {
        let (l, h, r, a, step) = (
            self.low,
            self.high,
            self.ramp,
            self.slope(),
            self.ramp_step(),
        );
        let s = set.len();
        let star = usize::from(set.contains(self.distinguished));
        if s < l {
            star as f64 * a + (s - star) as f64 * self.early_marginal()
        } else if s <= h || (s <= h + r && star == 0) {
            l as f64 + (s - l) as f64 * a
        } else if s <= h + r {
            l as f64 + (s - l) as f64 * a + a - (s - h) as f64 * step
        } else {
            l as f64
                + (h + r - l) as f64 * a
                + star as f64 * a * a
                + (s - star - (h + r)) as f64 * (a - step)
        }
    }
}

/// Two games on the same players, typically indistinguishable from samples.
#[derive(Debug, Clone, PartialEq)]
pub struct GamePair {
    pub first: Game,
    pub second: Game,
    pub distinguished: Option<usize>,
}

impl GamePair {
    pub fn n(&self) -> usize {
        self.first.n()
    }

    pub fn new(first: Game, second: Game, distinguished: Option<usize>) -> Result<Self> {
        if first.n() != second.n() {
            return Err(Error::DimensionMismatch {
                expected: first.n(),
                found: second.n(),
            });
        }
        Ok(GamePair {
            first,
            second,
            distinguished,
        })
    }
}

fn check_n(n: usize) -> Result<()> {
    if (1..=MAX_PLAYERS).contains(&n) {
        Ok(())
    } else {
        Err(Error::Construction(format!(
            "player count {n} outside 1..={MAX_PLAYERS}"
        )))
    }
}

fn near_integer(x: f64) -> Option<usize> {
    let r = libm::round(x);
    (r >= 0.0 && libm::fabs(x - r) < 1e-9).then_some(r as usize)
}

impl Game {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn kind(&self) -> &GameKind {
        &self.kind
    }

    #[must_use]
    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// `C(S)`. Members of `set` outside `0..n` are ignored.
    pub fn cost(&self, set: PlayerSet) -> f64 {
        let set = set.intersection(PlayerSet::full(self.n));
        match &self.kind {
            GameKind::Additive { weights } => set.iter().map(|i| weights[i]).sum(),
            GameKind::Coverage { covers, universe } => {
                let words = universe.div_ceil(64);
                let mut covered = 0u32;
                for w in 0..words {
                    let mut acc = 0u64;
                    for i in set.iter() {
                        acc |= covers[i][w];
                    }
                    covered += acc.count_ones();
                }
                f64::from(covered)
            }
            GameKind::PartitionHard { block, cap } => {
                let inside = set.intersection(*block).len() as f64;
                set.difference(*block).len() as f64 + inside.min(*cap)
            }
            GameKind::CurvatureFirst(shape) => shape.first(set.len()),
            GameKind::CurvatureSecond(shape) => shape.second(set),
            GameKind::CurvatureSecondAsPrinted(shape) => shape.second_as_printed(set),
            GameKind::Symmetric { by_size } => by_size[set.len()],
            GameKind::Table { costs } => costs[set.bits() as usize],
            GameKind::Sum(a, b) => a.cost(set) + b.cost(set),
        }
    }

    /// `C_S(i) = C(S ∪ {i}) - C(S)`.
    #[inline]
    pub fn marginal(&self, set: PlayerSet, player: usize) -> f64 {
        self.cost(set.with(player)) - self.cost(set.without(player))
    }

    pub fn grand_cost(&self) -> f64 {
        self.cost(PlayerSet::full(self.n))
    }

    /// Whether the family is monotone by construction.
    pub fn is_monotone_family(&self) -> bool {
        match &self.kind {
            GameKind::Additive { .. }
            | GameKind::Coverage { .. }
            | GameKind::PartitionHard { .. }
            | GameKind::CurvatureFirst(_)
            | GameKind::CurvatureSecond(_)
            | GameKind::CurvatureSecondAsPrinted(_) => true,
            GameKind::Symmetric { by_size } => by_size.windows(2).all(|w| w[0] <= w[1]),
            GameKind::Table { .. } => false,
            GameKind::Sum(a, b) => a.is_monotone_family() && b.is_monotone_family(),
        }
    }

    /// `max_S C(S)`: `C(N)` for monotone families, otherwise by enumeration.
    pub fn max_cost(&self) -> Result<f64> {
        if self.is_monotone_family() {
            return Ok(self.grand_cost());
        }
        if let GameKind::Table { costs } = &self.kind {
            return Ok(costs.iter().copied().fold(0.0, f64::max));
        }
        check_exhaustive(self.n, EXHAUSTIVE_LIMIT)?;
        Ok(all_subsets(self.n).map(|s| self.cost(s)).fold(0.0, f64::max))
    }

    /// `C(S) = Σ_{i∈S} w_i`.
    pub fn additive(weights: Vec<f64>) -> Result<Game> {
        check_n(weights.len())?;
        if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Construction(format!(
                "weight of player {} is {}; weights must be finite and nonnegative",
                i + 1,
                weights[i]
            )));
        }
        Ok(Game {
            n: weights.len(),
            label: format!("additive(n={})", weights.len()),
            kind: GameKind::Additive { weights },
        })
    }

    /// Coverage game from per-player covers over a universe `0..universe`.
    pub fn coverage(covers: &[Vec<usize>], universe: usize) -> Result<Game> {
        check_n(covers.len())?;
        let words = universe.div_ceil(64).max(1);
        let mut bitsets = Vec::with_capacity(covers.len());
        for (i, cover) in covers.iter().enumerate() {
            let mut bits = vec![0u64; words];
            for &e in cover {
                if e >= universe {
                    return Err(Error::Construction(format!(
                        "cover of player {} names element {e} outside universe of size {universe}",
                        i + 1
                    )));
                }
                bits[e / 64] |= 1u64 << (e % 64);
            }
            bitsets.push(bits);
        }
        Ok(Game {
            n: covers.len(),
            label: format!("coverage(n={}, |U|={universe})", covers.len()),
            kind: GameKind::Coverage {
                covers: bitsets,
                universe: words * 64,
            },
        })
    }

    /// The block-partition family: players split into `1/eps` consecutive
    /// blocks of size `eps·n`; block `part` (zero-based) is capped at
    /// `(1+eps)·eps·n/2`.
    pub fn partition_hard(n: usize, eps: f64, part: usize) -> Result<Game> {
        check_n(n)?;
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::Construction(format!("eps = {eps} must lie in (0, 1]")));
        }
        let blocks = near_integer(1.0 / eps)
            .ok_or_else(|| Error::Construction(format!("1/eps = {} is not integral", 1.0 / eps)))?;
        let size = near_integer(eps * n as f64)
            .filter(|s| *s > 0)
            .ok_or_else(|| {
                Error::Construction(format!("block size eps*n = {} is not integral", eps * n as f64))
            })?;
        if blocks * size != n {
            return Err(Error::Construction(format!(
                "{blocks} blocks of size {size} do not tile n={n}"
            )));
        }
        if part >= blocks {
            return Err(Error::Construction(format!(
                "block {} does not exist; there are {blocks}",
                part + 1
            )));
        }
        let block = PlayerSet::range(part * size, (part + 1) * size);
        let cap = (1.0 + eps) * size as f64 / 2.0;
        Ok(Game {
            n,
            label: format!("partition-hard(n={n}, eps={eps}, block={})", part + 1),
            kind: GameKind::PartitionHard { block, cap },
        })
    }

    /// `C(S) = |S|`, the game every partition-hard instance agrees with on
    /// typical samples.
    pub fn cardinality(n: usize) -> Result<Game> {
        check_n(n)?;
        Ok(Game {
            n,
            label: format!("cardinality(n={n})"),
            kind: GameKind::Symmetric {
                by_size: (0..=n).map(|s| s as f64).collect(),
            },
        })
    }

    /// `C(S) = by_size[|S|]`.
    pub fn symmetric(by_size: Vec<f64>) -> Result<Game> {
        if by_size.is_empty() {
            return Err(Error::Construction("by_size must have n + 1 entries".into()));
        }
        let n = by_size.len() - 1;
        check_n(n)?;
        validate_costs(&by_size)?;
        if by_size[0] != 0.0 {
            return Err(Error::Construction("cost of the empty set must be 0".into()));
        }
        Ok(Game {
            n,
            label: format!("symmetric(n={n})"),
            kind: GameKind::Symmetric { by_size },
        })
    }

    /// Explicit table indexed by bit mask; requires `n <= 20`.
    pub fn table(n: usize, costs: Vec<f64>) -> Result<Game> {
        check_n(n)?;
        check_exhaustive(n, EXHAUSTIVE_LIMIT)?;
        if costs.len() != 1 << n {
            return Err(Error::Construction(format!(
                "table for n={n} needs {} entries, got {}",
                1usize << n,
                costs.len()
            )));
        }
        validate_costs(&costs)?;
        if costs[0] != 0.0 {
            return Err(Error::Construction("cost of the empty set must be 0".into()));
        }
        Ok(Game {
            n,
            label: format!("table(n={n})"),
            kind: GameKind::Table { costs },
        })
    }

    /// Tabulates any game with `n <= 20`.
    pub fn tabulate(&self) -> Result<Game> {
        check_exhaustive(self.n, EXHAUSTIVE_LIMIT)?;
        let costs = all_subsets(self.n).map(|s| self.cost(s)).collect();
        Ok(Game {
            n: self.n,
            label: self.label.clone(),
            kind: GameKind::Table { costs },
        })
    }

    /// Pointwise sum `C_1 + C_2`.
    pub fn sum(a: Game, b: Game) -> Result<Game> {
        if a.n != b.n {
            return Err(Error::DimensionMismatch {
                expected: a.n,
                found: b.n,
            });
        }
        Ok(Game {
            n: a.n,
            label: format!("({}) + ({})", a.label, b.label),
            kind: GameKind::Sum(Box::new(a), Box::new(b)),
        })
    }

    fn curvature_game(shape: CurvatureShape, n: usize, kind: fn(CurvatureShape) -> GameKind, tag: &str) -> Game {
        Game {
            n,
            label: format!(
                "{tag}(n={n}, kappa={}, L={}, H={}, r={})",
                shape.kappa, shape.low, shape.high, shape.ramp
            ),
            kind: kind(shape),
        }
    }

    /// First game of the curvature pair alone.
    pub fn curvature_first(n: usize, kappa: f64, eps_prime: f64) -> Result<Game> {
        check_n(n)?;
        let shape = CurvatureShape::new(n, kappa, eps_prime)?;
        Ok(Self::curvature_game(shape, n, GameKind::CurvatureFirst, "curvature-first"))
    }

    /// Second game of the curvature pair alone.
    pub fn curvature_second(n: usize, kappa: f64, eps_prime: f64) -> Result<Game> {
        check_n(n)?;
        let shape = CurvatureShape::new(n, kappa, eps_prime)?;
        Ok(Self::curvature_game(shape, n, GameKind::CurvatureSecond, "curvature-second"))
    }

    /// The literal printed closed form of the second curvature game.
    pub fn curvature_second_as_printed(n: usize, kappa: f64, eps_prime: f64) -> Result<Game> {
        check_n(n)?;
        let shape = CurvatureShape::new(n, kappa, eps_prime)?;
        Ok(Self::curvature_game(
            shape,
            n,
            GameKind::CurvatureSecondAsPrinted,
            "curvature-second-as-printed",
        ))
    }

    /// The coverage pair on halves `A = 0..n/2`, `B = n/2..n`; `swapped`
    /// selects the second game of the pair.
    pub fn coverage_pair_member(n: usize, alpha: f64, swapped: bool) -> Result<Game> {
        check_n(n)?;
        if n % 2 != 0 {
            return Err(Error::Construction(format!("n = {n} must be even")));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Construction(format!("alpha = {alpha} must lie in (0, 1)")));
        }
        let k = near_integer(1.0 / (alpha * alpha)).ok_or_else(|| {
            Error::Construction(format!("1/alpha^2 = {} is not integral", 1.0 / (alpha * alpha)))
        })?;
        let single: Vec<usize> = vec![0];
        let wide: Vec<usize> = (1..=k).collect();
        let covers: Vec<Vec<usize>> = (0..n)
            .map(|i| {
                let in_a = i < n / 2;
                if in_a != swapped {
                    single.clone()
                } else {
                    wide.clone()
                }
            })
            .collect();
        let which = if swapped { "second" } else { "first" };
        Ok(Game::coverage(&covers, k + 1)?.with_label(format!(
            "coverage-pair-{which}(n={n}, alpha={alpha})"
        )))
    }
}

fn validate_costs(costs: &[f64]) -> Result<()> {
    if let Some(k) = costs.iter().position(|c| !(c.is_finite() && *c >= 0.0)) {
        return Err(Error::Construction(format!(
            "cost entry {k} is {}; costs must be finite and nonnegative",
            costs[k]
        )));
    }
    Ok(())
}

/// The curvature construction: two games that agree on every set with
/// `L <= |S| <= H` while the distinguished player's marginals differ by a
/// factor `1 - κ` elsewhere. The distinguished player is player `0`.
pub fn curvature_pair(n: usize, kappa: f64, eps_prime: f64) -> Result<GamePair> {
    let first = Game::curvature_first(n, kappa, eps_prime)?;
    let second = Game::curvature_second(n, kappa, eps_prime)?;
    GamePair::new(first, second, Some(0))
}

/// The coverage pair: costs `1` or `1/α²` depending on which half a set
/// touches. The two games differ only on sets meeting exactly one half.
pub fn coverage_pair(n: usize, alpha: f64) -> Result<GamePair> {
    let first = Game::coverage_pair_member(n, alpha, false)?;
    let second = Game::coverage_pair_member(n, alpha, true)?;
    GamePair::new(first, second, Some(0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(players: &[usize]) -> PlayerSet {
        PlayerSet::from_players(players.iter().copied())
    }

    #[test]
    fn additive_sums_selected_weights() {
        let g = Game::additive(vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(g.cost(set(&[0, 2])), 4.0);
        assert_eq!(g.cost(PlayerSet::EMPTY), 0.0);
        assert_eq!(Game::additive(vec![5.0]).unwrap().cost(set(&[0])), 5.0);
        assert!(Game::additive(vec![1.0, -1.0]).is_err());
        assert!(Game::additive(vec![f64::NAN]).is_err());
    }

    #[test]
    fn coverage_counts_union() {
        let g = Game::coverage(&[vec![0], vec![0, 1]], 2).unwrap();
        assert_eq!(g.cost(set(&[0, 1])), 2.0);
        let same = Game::coverage(&[vec![0], vec![0]], 1).unwrap();
        assert_eq!(same.cost(set(&[0, 1])), 1.0);
        assert!(Game::coverage(&[vec![3]], 2).is_err());
    }

    #[test]
    fn coverage_handles_wide_universes() {
        let g = Game::coverage(&[vec![0, 100], vec![100, 129]], 130).unwrap();
        assert_eq!(g.cost(set(&[0, 1])), 3.0);
        assert_eq!(g.cost(set(&[1])), 2.0);
    }

    #[test]
    fn coverage_pair_halves() {
        let pair = coverage_pair(8, 0.5).unwrap();
        // S meets A only.
        assert_eq!(pair.first.cost(set(&[0, 1])), 1.0);
        assert_eq!(pair.second.cost(set(&[0, 1])), 4.0);
        assert_eq!(pair.first.cost(set(&[0, 5])), 5.0);
        assert_eq!(pair.second.cost(set(&[0, 5])), 5.0);
        assert_eq!(pair.first.cost(PlayerSet::EMPTY), 0.0);
        assert!(coverage_pair(7, 0.5).is_err());
        assert!(coverage_pair(8, 0.3).is_err());
    }

    #[test]
    fn partition_hard_formula() {
        let g = Game::partition_hard(8, 0.5, 0).unwrap();
        assert_eq!(g.cost(set(&[0, 1, 4])), 3.0);
        assert_eq!(g.cost(set(&[0, 1, 2, 4, 5])), 5.0);
        assert_eq!(g.cost(set(&[0, 1, 2, 3])), 3.0);
        assert_eq!(g.cost(PlayerSet::EMPTY), 0.0);
        assert!(Game::partition_hard(10, 0.3, 0).is_err());
        assert!(Game::partition_hard(6, 0.25, 0).is_err());
        assert!(Game::partition_hard(8, 0.5, 2).is_err());
    }

    #[test]
    fn curvature_first_is_identity_below_low() {
        let g = Game::curvature_first(16, 0.5, 0.25).unwrap();
        for s in 0..6usize {
            assert_eq!(g.cost(PlayerSet::full(s)), s as f64);
        }
        assert_eq!(g.cost(PlayerSet::full(10)), 6.0 + 4.0 * 0.5);
        assert!(Game::curvature_first(16, 1.0, 0.25).is_err());
    }

    #[test]
    fn curvature_rounding() {
        let s = CurvatureShape::new(16, 0.5, 0.25).unwrap();
        assert_eq!((s.low, s.high, s.ramp), (6, 10, 4));
        let s = CurvatureShape::new(64, 0.5, 0.25).unwrap();
        assert_eq!((s.low, s.high, s.ramp), (24, 40, 8));
        let s = CurvatureShape::new(10, 0.5, 0.25).unwrap();
        assert_eq!((s.low, s.high, s.ramp), (3, 7, 3));
        assert!(CurvatureShape::new(4, 0.5, 0.25).is_err());
    }

    #[test]
    fn curvature_second_matches_printed_form_off_the_ramp() {
        let n = 16;
        let fixed = Game::curvature_second(n, 0.5, 0.25).unwrap();
        let printed = Game::curvature_second_as_printed(n, 0.5, 0.25).unwrap();
        let shape = CurvatureShape::new(n, 0.5, 0.25).unwrap();
        for s in all_subsets(n) {
            let on_ramp = s.contains(0) && s.len() > shape.high && s.len() <= shape.high + shape.ramp;
            let (a, b) = (fixed.cost(s), printed.cost(s));
            if on_ramp {
                assert!((a - b).abs() > 1e-9, "{s}");
            } else {
                assert!((a - b).abs() < 1e-12, "{s}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn sum_and_table() {
        let a = Game::additive(vec![1.0, 2.0]).unwrap();
        let t = Game::table(2, vec![0.0, 1.0, 1.0, 1.0]).unwrap();
        let s = Game::sum(a, t).unwrap();
        assert_eq!(s.cost(set(&[0, 1])), 4.0);
        assert!(Game::table(2, vec![1.0, 1.0, 1.0, 1.0]).is_err());
        assert!(Game::table(2, vec![0.0, 1.0]).is_err());
        assert_eq!(s.max_cost().unwrap(), 4.0);
    }
}
