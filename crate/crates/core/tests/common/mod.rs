#![allow(dead_code)]

use statrs::distribution::{ContinuousCDF, Normal};

/// Kolmogorov-Smirnov 1% critical coefficient.
pub const KS_1PCT: f64 = 1.628;

/// One-sample KS statistic against the standard normal.
pub fn ks_standard_normal(mut xs: Vec<f64>) -> f64 {
    let n = xs.len() as f64;
    xs.sort_by(f64::total_cmp);
    let phi = Normal::new(0.0, 1.0).unwrap();
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = phi.cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Two-sample KS statistic.
pub fn ks_two_sample(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

pub fn ks_two_sample_critical(n: usize, m: usize) -> f64 {
    KS_1PCT * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}
