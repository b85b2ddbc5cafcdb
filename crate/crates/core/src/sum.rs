//! Deterministic reductions for long, badly scaled sums.
//!
//! The pairwise tree is a pure function of the input length, so the
//! rounding pattern never depends on scheduling.

use crate::Real;

const LEAF: usize = 32;

/// Pairwise (cascade) summation. Error grows like `O(log n)` ulps.
pub fn pairwise_sum<T: Real>(xs: &[T]) -> T {
    if xs.len() <= LEAF {
        let mut acc = T::zero();
        for &x in xs {
            acc += x;
        }
        return acc;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Pairwise sum of `f(i)` for `i` in `lo..hi` without materializing the terms.
pub fn pairwise_sum_by<T: Real, F: Fn(usize) -> T>(lo: usize, hi: usize, f: &F) -> T {
    if hi - lo <= LEAF {
        let mut acc = T::zero();
        for i in lo..hi {
            acc += f(i);
        }
        return acc;
    }
    let mid = lo + (hi - lo) / 2;
    pairwise_sum_by(lo, mid, f) + pairwise_sum_by(mid, hi, f)
}

/// Neumaier's compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct Compensated<T> {
    sum: T,
    comp: T,
}

impl<T: Real> Compensated<T> {
    pub fn new() -> Self {
        Self {
            sum: T::zero(),
            comp: T::zero(),
        }
    }

    pub fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> T {
        self.sum + self.comp
    }
}

impl<T: Real> FromIterator<T> for Compensated<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut acc = Self::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_exact_integer_sum() {
        let xs: Vec<f64> = (1..=10_000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 50_005_000.0);
        assert_eq!(pairwise_sum_by(0, xs.len(), &|i| xs[i]), 50_005_000.0);
    }

    #[test]
    fn pairwise_beats_naive_on_harmonic_tail() {
        let n = 1_000_000;
        let xs: Vec<f32> = (1..=n).map(|i| 1.0 / i as f32).collect();
        let exact: f64 = (1..=n).rev().map(|i| (1.0 / i as f32) as f64).sum();
        let naive: f32 = xs.iter().copied().fold(0.0, |a, b| a + b);
        let pw = pairwise_sum(&xs);
        assert!((pw as f64 - exact).abs() < (naive as f64 - exact).abs());
        assert!((pw as f64 - exact).abs() / exact < 1e-6);
    }

    #[test]
    fn compensated_recovers_cancelled_bits() {
        let acc: Compensated<f64> = [1.0, 1e100, 1.0, -1e100].into_iter().collect();
        assert_eq!(acc.value(), 2.0);
    }

    #[test]
    fn empty_sums_are_zero() {
        assert_eq!(pairwise_sum::<f64>(&[]), 0.0);
        assert_eq!(Compensated::<f64>::new().value(), 0.0);
    }
}
