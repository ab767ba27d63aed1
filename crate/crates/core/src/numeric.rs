//! Summation and combinatorial weights.

use alloc::vec::Vec;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub const fn new() -> Self {
        CompensatedSum {
            sum: 0.0,
            compensation: 0.0,
        }
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if libm::fabs(self.sum) >= libm::fabs(x) {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl Extend<f64> for CompensatedSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.add(x);
        }
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = CompensatedSum::new();
    acc.extend(values);
    acc.value()
}

/// Running mean with compensated accumulation.
#[derive(Debug, Clone, Copy, Default)]
pub struct Mean {
    total: CompensatedSum,
    count: usize,
}

impl Mean {
    #[inline]
    pub fn push(&mut self, x: f64) {
        self.total.add(x);
        self.count += 1;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn get(&self) -> Option<f64> {
        (self.count > 0).then(|| self.total.value() / self.count as f64)
    }
}

/// `C(n, k)` as a float, correctly rounded for `n <= 64`.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    if n <= 64 {
        return binomial_u128(n, k) as f64;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for t in 0..k {
        acc = acc * (n - t) as f64 / (t + 1) as f64;
    }
    libm::round(acc)
}

/// Exact `C(n, k)` for `n <= 64`.
pub fn binomial_u128(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for t in 0..k {
        acc = acc * (n - t) as u128 / (t + 1) as u128;
    }
    acc
}

/// Shapley weights `s!(n-s-1)!/n!` for `s = 0..n-1`, as products of ratios.
pub fn shapley_weights(n: usize) -> Vec<f64> {
    (0..n)
        .map(|s| 1.0 / (n as f64 * binomial(n - 1, s)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensation_recovers_lost_bits() {
        let mut xs = alloc::vec![1.0e16];
        xs.extend(core::iter::repeat(1.0).take(1000));
        xs.push(-1.0e16);
        assert_eq!(compensated_sum(xs.iter().copied()), 1000.0);
        let naive: f64 = xs.iter().sum();
        assert_ne!(naive, 1000.0);
    }

    #[test]
    fn binomials_match_exact_integers() {
        for n in 0..=60 {
            for k in 0..=n {
                assert_eq!(binomial(n, k), binomial_u128(n, k) as f64, "C({n},{k})");
            }
        }
        assert_eq!(binomial(3, 5), 0.0);
    }

    #[test]
    fn shapley_weights_are_a_distribution_over_orders() {
        // Sum over sizes of C(n-1,s) * w_s must be one.
        for n in 1..=20 {
            let w = shapley_weights(n);
            let total: f64 = (0..n).map(|s| binomial(n - 1, s) * w[s]).sum();
            assert!((total - 1.0).abs() < 1e-13);
        }
        assert_eq!(shapley_weights(3)[0], 1.0 / 3.0);
        assert_eq!(shapley_weights(3)[1], 1.0 / 6.0);
    }

    #[test]
    fn mean_of_nothing_is_none() {
        let mut m = Mean::default();
        assert_eq!(m.get(), None);
        m.push(2.0);
        m.push(4.0);
        assert_eq!(m.get(), Some(3.0));
    }
}
