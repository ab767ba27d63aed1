//! Sampling laws over subsets of the players.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::numeric::binomial;
use crate::players::PlayerSet;
use crate::MAX_PLAYERS;

/// Tolerance on mixture weights summing to one.
pub const WEIGHT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SetDistribution {
    n: usize,
    kind: DistributionKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DistributionKind {
    /// Every player independently with probability 1/2.
    Uniform,
    /// Player `i` independently with probability `marginals[i]`, every
    /// marginal inside `[lo, hi]`.
    Product { marginals: Vec<f64>, lo: f64, hi: f64 },
    /// Size uniform on `0..=n`, then a uniform subset of that size.
    Shapley,
    PointMass(PlayerSet),
    Mixture(Vec<(f64, SetDistribution)>),
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

/// Default marginal bounds for bounded product laws: `[1/n², 1 - 1/n²]`.
pub fn default_product_bounds(n: usize) -> (f64, f64) {
    let m = n.max(2) as f64;
    let lo = 1.0 / (m * m);
    (lo, 1.0 - lo)
}

impl SetDistribution {
    pub fn uniform(n: usize) -> Result<Self> {
        check_n(n)?;
        Ok(SetDistribution {
            n,
            kind: DistributionKind::Uniform,
        })
    }

    pub fn shapley(n: usize) -> Result<Self> {
        check_n(n)?;
        Ok(SetDistribution {
            n,
            kind: DistributionKind::Shapley,
        })
    }

    pub fn point_mass(n: usize, set: PlayerSet) -> Result<Self> {
        check_n(n)?;
        set.validate(n)?;
        Ok(SetDistribution {
            n,
            kind: DistributionKind::PointMass(set),
        })
    }

    /// Bounded product law with the default bounds.
    pub fn product(marginals: Vec<f64>) -> Result<Self> {
        let (lo, hi) = default_product_bounds(marginals.len());
        Self::product_with_bounds(marginals, lo, hi)
    }

    pub fn product_with_bounds(marginals: Vec<f64>, lo: f64, hi: f64) -> Result<Self> {
        let n = marginals.len();
        check_n(n)?;
        if !(lo > 0.0 && hi < 1.0 && lo <= hi) {
            return Err(Error::Construction(format!(
                "product bounds [{lo}, {hi}] must satisfy 0 < lo <= hi < 1"
            )));
        }
        if let Some(i) = marginals.iter().position(|p| !(*p >= lo && *p <= hi)) {
            return Err(Error::Construction(format!(
                "marginal of player {} is {}, outside [{lo}, {hi}]",
                i + 1,
                marginals[i]
            )));
        }
        Ok(SetDistribution {
            n,
            kind: DistributionKind::Product { marginals, lo, hi },
        })
    }

    /// `α·D₁ + β·D₂`.
    pub fn mixture(alpha: f64, first: SetDistribution, beta: f64, second: SetDistribution) -> Result<Self> {
        Self::mixture_of(alloc::vec![(alpha, first), (beta, second)])
    }

    /// Finite mixture; weights must be nonnegative and sum to one.
    pub fn mixture_of(components: Vec<(f64, SetDistribution)>) -> Result<Self> {
        let n = components
            .first()
            .map(|(_, d)| d.n)
            .ok_or_else(|| Error::Construction("mixture needs at least one component".into()))?;
        if let Some((_, d)) = components.iter().find(|(_, d)| d.n != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: d.n,
            });
        }
        if let Some((w, _)) = components.iter().find(|(w, _)| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::Construction(format!("mixture weight {w} is negative")));
        }
        let total: f64 = components.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(Error::Construction(format!(
                "mixture weights sum to {total}, not 1"
            )));
        }
        Ok(SetDistribution {
            n,
            kind: DistributionKind::Mixture(components),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> &DistributionKind {
        &self.kind
    }

    pub fn is_product(&self) -> bool {
        matches!(
            self.kind,
            DistributionKind::Uniform | DistributionKind::Product { .. }
        )
    }

    pub fn is_shapley(&self) -> bool {
        matches!(self.kind, DistributionKind::Shapley)
    }

    pub fn label(&self) -> String {
        match &self.kind {
            DistributionKind::Uniform => format!("uniform(n={})", self.n),
            DistributionKind::Product { lo, hi, .. } => {
                format!("product(n={}, bounds=[{lo}, {hi}])", self.n)
            }
            DistributionKind::Shapley => format!("shapley(n={})", self.n),
            DistributionKind::PointMass(s) => format!("point-mass({s})"),
            DistributionKind::Mixture(parts) => {
                let mut out = String::from("mixture(");
                for (k, (w, d)) in parts.iter().enumerate() {
                    if k > 0 {
                        out.push_str(" + ");
                    }
                    out.push_str(&format!("{w}*{}", d.label()));
                }
                out.push(')');
                out
            }
        }
    }

    /// One draw. The result depends only on `self` and the generator state.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PlayerSet {
        match &self.kind {
            DistributionKind::Uniform => {
                PlayerSet::from_bits(rng.next_u64()).intersection(PlayerSet::full(self.n))
            }
            DistributionKind::Product { marginals, .. } => {
                let mut s = PlayerSet::EMPTY;
                for (i, &p) in marginals.iter().enumerate() {
                    if rng.gen::<f64>() < p {
                        s = s.with(i);
                    }
                }
                s
            }
            DistributionKind::Shapley => {
                let size = rng.gen_range(0..=self.n);
                uniform_subset_of_size(self.n, size, rng)
            }
            DistributionKind::PointMass(s) => *s,
            DistributionKind::Mixture(parts) => {
                let u = rng.gen::<f64>();
                let mut acc = 0.0;
                for (w, d) in parts {
                    acc += w;
                    if u < acc {
                        return d.sample(rng);
                    }
                }
                // u landed in the rounding gap above the last cumulative weight.
                let (_, last) = parts
                    .iter()
                    .rev()
                    .find(|(w, _)| *w > 0.0)
                    .unwrap_or(&parts[parts.len() - 1]);
                last.sample(rng)
            }
        }
    }

    /// `Pr[S]` in closed form.
    pub fn prob(&self, set: PlayerSet) -> f64 {
        if !set.is_subset(PlayerSet::full(self.n)) {
            return 0.0;
        }
        match &self.kind {
            DistributionKind::Uniform => libm::exp2(-(self.n as f64)),
            DistributionKind::Product { marginals, .. } => marginals
                .iter()
                .enumerate()
                .map(|(i, &p)| if set.contains(i) { p } else { 1.0 - p })
                .product(),
            DistributionKind::Shapley => {
                1.0 / ((self.n + 1) as f64 * binomial(self.n, set.len()))
            }
            DistributionKind::PointMass(s) => {
                if *s == set {
                    1.0
                } else {
                    0.0
                }
            }
            DistributionKind::Mixture(parts) => parts.iter().map(|(w, d)| w * d.prob(set)).sum(),
        }
    }

    /// `Pr[i ∈ S]` in closed form.
    pub fn membership_prob(&self, player: usize) -> f64 {
        if player >= self.n {
            return 0.0;
        }
        match &self.kind {
            DistributionKind::Uniform | DistributionKind::Shapley => 0.5,
            DistributionKind::Product { marginals, .. } => marginals[player],
            DistributionKind::PointMass(s) => {
                if s.contains(player) {
                    1.0
                } else {
                    0.0
                }
            }
            DistributionKind::Mixture(parts) => parts
                .iter()
                .map(|(w, d)| w * d.membership_prob(player))
                .sum(),
        }
    }
}

/// Floyd's algorithm: a uniform `size`-subset of `0..n` using exactly
/// `size` bounded draws.
pub fn uniform_subset_of_size<R: Rng + ?Sized>(n: usize, size: usize, rng: &mut R) -> PlayerSet {
    debug_assert!(size <= n);
    let mut s = PlayerSet::EMPTY;
    for j in (n - size)..n {
        let t = rng.gen_range(0..=j);
        s = if s.contains(t) { s.with(j) } else { s.with(t) };
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::players::all_subsets;
    use crate::rng::seeded;
    use alloc::vec;

    fn set(players: &[usize]) -> PlayerSet {
        PlayerSet::from_players(players.iter().copied())
    }

    #[test]
    fn point_mass_always_returns_its_set() {
        let d = SetDistribution::point_mass(4, set(&[0, 1])).unwrap();
        let mut rng = seeded(1);
        for _ in 0..100 {
            assert_eq!(d.sample(&mut rng), set(&[0, 1]));
        }
        assert!(SetDistribution::point_mass(2, set(&[3])).is_err());
    }

    #[test]
    fn closed_form_probabilities() {
        assert_eq!(SetDistribution::uniform(3).unwrap().prob(set(&[1])), 0.125);
        assert_eq!(
            SetDistribution::shapley(3).unwrap().prob(set(&[0, 1])),
            1.0 / 12.0
        );
        let mix = SetDistribution::mixture(
            0.5,
            SetDistribution::point_mass(2, set(&[0])).unwrap(),
            0.5,
            SetDistribution::point_mass(2, set(&[1])).unwrap(),
        )
        .unwrap();
        assert_eq!(mix.prob(set(&[0])), 0.5);
        let mix = SetDistribution::mixture(
            0.5,
            SetDistribution::point_mass(2, set(&[0])).unwrap(),
            0.5,
            SetDistribution::point_mass(2, set(&[0, 1])).unwrap(),
        )
        .unwrap();
        assert_eq!(mix.prob(set(&[0])), 0.5);
    }

    #[test]
    fn mixture_validation() {
        let u = SetDistribution::uniform(3).unwrap();
        assert!(SetDistribution::mixture(0.6, u.clone(), 0.6, u.clone()).is_err());
        assert!(SetDistribution::mixture(1.5, u.clone(), -0.5, u.clone()).is_err());
        let v = SetDistribution::uniform(4).unwrap();
        assert!(matches!(
            SetDistribution::mixture(0.5, u, 0.5, v),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn degenerate_mixture_behaves_as_first_component() {
        let d = SetDistribution::shapley(5).unwrap();
        let other = SetDistribution::point_mass(5, set(&[2])).unwrap();
        let mix = SetDistribution::mixture(1.0, d.clone(), 0.0, other).unwrap();
        for s in all_subsets(5) {
            assert_eq!(mix.prob(s), d.prob(s));
        }
        let (mut a, mut b) = (seeded(9), seeded(9));
        for _ in 0..200 {
            // The mixture consumes one extra draw to pick a component.
            let _: f64 = a.gen();
            assert_eq!(d.sample(&mut a), mix.sample(&mut b));
        }
    }

    #[test]
    fn product_bounds_enforced() {
        assert!(SetDistribution::product(vec![0.5, 0.0]).is_err());
        assert!(SetDistribution::product(vec![0.5, 1.0]).is_err());
        assert!(SetDistribution::product_with_bounds(vec![0.3], 0.4, 0.6).is_err());
        assert!(SetDistribution::product(vec![0.3, 0.7, 0.5]).is_ok());
    }

    #[test]
    fn floyd_returns_requested_size() {
        let mut rng = seeded(3);
        for n in 1..=64 {
            for size in [0, 1, n / 2, n] {
                let s = uniform_subset_of_size(n, size, &mut rng);
                assert_eq!(s.len(), size);
                assert!(s.is_subset(PlayerSet::full(n)));
            }
        }
    }

    #[test]
    fn membership_probabilities() {
        let p = SetDistribution::product(vec![0.25, 0.75]).unwrap();
        assert_eq!(p.membership_prob(1), 0.75);
        let pm = SetDistribution::point_mass(3, set(&[2])).unwrap();
        assert_eq!(pm.membership_prob(2), 1.0);
        assert_eq!(pm.membership_prob(0), 0.0);
    }
}
