//! Error metrics and the reductions used to summarize replications.

use nalgebra::{DMatrix, DVector};

/// `‖β̂ − β‖²`
pub fn mse(beta_hat: &DVector<f64>, beta: &DVector<f64>) -> f64 {
    (beta_hat - beta).norm_squared()
}

/// Mean of `(xᵢᵀβ̂ − xᵢᵀβ)²` over the rows of `x_test`: prediction error
/// against the noise-free conditional mean.
pub fn mspe(x_test: &DMatrix<f64>, beta_hat: &DVector<f64>, beta: &DVector<f64>) -> f64 {
    (x_test * (beta_hat - beta)).norm_squared() / x_test.nrows() as f64
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (divisor `n − 1`).
pub fn std_dev(values: &[f64]) -> f64 {
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (values.len() as f64 - 1.0)).sqrt()
}

/// Empirical quantile with linear interpolation between order statistics.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Mean with the empirical 2.5% and 97.5% quantiles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Band {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Band { mean: f64::NAN, lo: f64::NAN, hi: f64::NAN };
        }
        Band { mean: mean(values), lo: quantile(values, 0.025), hi: quantile(values, 0.975) }
    }
}

/// Subtract the smallest value of one replication from every entry,
/// giving scaled errors relative to the best method.
pub fn scale_against_best<K: Clone>(errors: &[(K, f64)]) -> Vec<(K, f64)> {
    let best = errors.iter().map(|(_, e)| *e).fold(f64::INFINITY, f64::min);
    errors.iter().map(|(k, e)| (k.clone(), e - best)).collect()
}

/// Counts of `values` in `bins` equal-width bins over `[lo, hi)`; values
/// outside the range are not counted.
pub fn histogram(values: &[f64], lo: f64, hi: f64, bins: usize) -> Vec<usize> {
    let mut counts = vec![0; bins];
    let width = (hi - lo) / bins as f64;
    for &v in values {
        if v >= lo && v < hi {
            let b = (((v - lo) / width) as usize).min(bins - 1);
            counts[b] += 1;
        }
    }
    counts
}
