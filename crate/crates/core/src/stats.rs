//! Sample means with standard errors.
//!
//! Every Monte Carlo number the crate reports travels as an [`Estimate`] so
//! acceptance bands can be written as multiples of the standard error.

use serde::Serialize;

use crate::Scalar;

/// A point estimate with its standard error (zero for exact quantities).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate<T> {
    pub value: T,
    pub se: T,
}

impl<T: Scalar> Estimate<T> {
    pub fn exact(value: T) -> Self {
        Self { value, se: T::zero() }
    }

    pub fn is_exact(&self) -> bool {
        self.se == T::zero()
    }

    /// Signed distance to `target` in standard errors. Infinite when the
    /// estimate is exact and differs from the target.
    pub fn z_score(&self, target: T) -> T {
        let diff = self.value - target;
        if self.se > T::zero() {
            diff / self.se
        } else if diff == T::zero() {
            T::zero()
        } else {
            diff.signum() * T::infinity()
        }
    }

    /// `|value - target| <= k * se`.
    pub fn within(&self, target: T, k: T) -> bool {
        (self.value - target).abs() <= k * self.se
    }

    pub fn to_f64(self) -> Estimate<f64> {
        Estimate {
            value: self.value.to_f64_lossy(),
            se: self.se.to_f64_lossy(),
        }
    }
}

/// Welford accumulator. Pushing in a fixed order gives bit-identical results.
#[derive(Debug, Clone, Copy)]
pub struct RunningStats<T> {
    n: usize,
    mean: T,
    m2: T,
}

impl<T: Scalar> Default for RunningStats<T> {
    fn default() -> Self {
        Self {
            n: 0,
            mean: T::zero(),
            m2: T::zero(),
        }
    }
}

impl<T: Scalar> RunningStats<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: T) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean = self.mean + delta / T::lit(self.n as f64);
        self.m2 = self.m2 + delta * (x - self.mean);
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> T {
        self.mean
    }

    /// Unbiased sample variance; zero for fewer than two observations.
    pub fn variance(&self) -> T {
        if self.n < 2 {
            T::zero()
        } else {
            self.m2 / T::lit((self.n - 1) as f64)
        }
    }

    pub fn estimate(&self) -> Estimate<T> {
        let se = if self.n < 2 {
            T::zero()
        } else {
            (self.variance() / T::lit(self.n as f64)).sqrt()
        };
        Estimate { value: self.mean, se }
    }
}

impl<T: Scalar> FromIterator<T> for RunningStats<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut s = Self::new();
        for x in iter {
            s.push(x);
        }
        s
    }
}

pub fn mean_se<T: Scalar>(xs: impl IntoIterator<Item = T>) -> Estimate<T> {
    xs.into_iter().collect::<RunningStats<T>>().estimate()
}

/// Sample covariance of two equally long series.
pub fn covariance<T: Scalar>(a: &[T], b: &[T]) -> T {
    assert_eq!(a.len(), b.len(), "covariance needs paired samples");
    let n = a.len();
    if n < 2 {
        return T::zero();
    }
    let ma = a.iter().copied().sum::<T>() / T::lit(n as f64);
    let mb = b.iter().copied().sum::<T>() / T::lit(n as f64);
    let s: T = a.iter().zip(b).map(|(&x, &y)| (x - ma) * (y - mb)).sum();
    s / T::lit((n - 1) as f64)
}

/// Per-replicate values for several quantities evaluated on a common pool
/// of paths, so that differences can be reported with paired standard errors.
#[derive(Debug, Clone)]
pub struct PairedSamples<T> {
    columns: Vec<Vec<T>>,
}

impl<T: Scalar> PairedSamples<T> {
    /// `rows[i][k]` is quantity `k` on replicate `i`.
    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let k = rows.first().map_or(0, Vec::len);
        let mut columns = vec![Vec::with_capacity(rows.len()); k];
        for row in rows {
            assert_eq!(row.len(), k, "ragged paired samples");
            for (col, &v) in columns.iter_mut().zip(row) {
                col.push(v);
            }
        }
        Self { columns }
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn replicates(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn column(&self, k: usize) -> &[T] {
        &self.columns[k]
    }

    pub fn estimate(&self, k: usize) -> Estimate<T> {
        mean_se(self.columns[k].iter().copied())
    }

    /// Estimate of `E[q_a - q_b]` with the paired standard error.
    pub fn difference(&self, a: usize, b: usize) -> Estimate<T> {
        mean_se(self.columns[a].iter().zip(&self.columns[b]).map(|(&x, &y)| x - y))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn welford_matches_two_pass() {
        let xs = [1.0, 4.0, 2.5, -3.0, 7.25, 0.5];
        let s: RunningStats<f64> = xs.iter().copied().collect();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((s.mean() - mean).abs() < 1e-14);
        assert!((s.variance() - var).abs() < 1e-12);
        assert!((s.estimate().se - (var / n).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn single_observation_has_zero_se() {
        let e = mean_se([3.0_f64]);
        assert_eq!(e, Estimate { value: 3.0, se: 0.0 });
    }

    #[test]
    fn z_score_of_exact_estimate() {
        let e = Estimate::exact(1.0_f64);
        assert_eq!(e.z_score(1.0), 0.0);
        assert!(e.z_score(0.0).is_infinite());
    }

    #[test]
    fn paired_difference_cancels_common_noise() {
        let rows: Vec<Vec<f64>> = (0..100)
            .map(|i| {
                let noise = (i as f64 * 0.37).sin() * 10.0;
                vec![noise + 1.0, noise]
            })
            .collect();
        let p = PairedSamples::from_rows(&rows);
        let d = p.difference(0, 1);
        assert!((d.value - 1.0).abs() < 1e-12);
        assert!(d.se < 1e-12);
        assert!(p.estimate(0).se > 0.1);
    }
}
