#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use transma_core::DomainData;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix<R: Rng>(rng: &mut R, n: usize, p: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, p, |_, _| rng.sample(StandardNormal))
}

pub fn gaussian_vector<R: Rng>(rng: &mut R, n: usize, sd: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| sd * rng.sample::<f64, _>(StandardNormal))
}

pub fn linear_domain<R: Rng>(rng: &mut R, id: usize, n: usize, beta: &DVector<f64>, sd: f64) -> DomainData {
    let x = gaussian_matrix(rng, n, beta.len());
    let y = &x * beta + gaussian_vector(rng, n, sd);
    DomainData::new(id, x, y).unwrap()
}

/// Target plus `m` sources whose coefficients drift away from the target's
/// by increasing, random amounts.
pub fn random_problem<R: Rng>(rng: &mut R, m: usize, p: usize, n0: usize, n_m: usize) -> Vec<DomainData> {
    let beta0 = gaussian_vector(rng, p, 1.0);
    let mut out = vec![linear_domain(rng, 0, n0, &beta0, 1.0)];
    for id in 1..=m {
        let scale: f64 = rng.random_range(0.0..1.5);
        let beta = &beta0 + gaussian_vector(rng, p, scale);
        let sd: f64 = rng.random_range(0.5..1.5);
        out.push(linear_domain(rng, id, n_m, &beta, sd));
    }
    out
}

/// Least squares by Householder QR: solve `Rβ = Qᵀy`.
pub fn qr_ols(x: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    let qr = x.clone().qr();
    let qty = qr.q().transpose() * y;
    qr.r().solve_upper_triangular(&qty).unwrap()
}

pub fn stacked(domains: &[&DomainData]) -> (DMatrix<f64>, DVector<f64>) {
    let n: usize = domains.iter().map(|d| d.n()).sum();
    let p = domains[0].p();
    let mut x = DMatrix::zeros(n, p);
    let mut y = DVector::zeros(n);
    let mut r = 0;
    for d in domains {
        x.rows_mut(r, d.n()).copy_from(d.x());
        y.rows_mut(r, d.n()).copy_from(d.y());
        r += d.n();
    }
    (x, y)
}

pub fn rel_err(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).amax() / b.amax().max(1e-300)
}

/// Exhaustive search over the 3-point simplex at step `1/steps`.
pub fn grid_min3(f: impl Fn(&[f64]) -> f64, steps: usize) -> (f64, [f64; 3]) {
    let mut best = (f64::INFINITY, [0.0; 3]);
    for i in 0..=steps {
        for j in 0..=(steps - i) {
            let w = [i as f64 / steps as f64, j as f64 / steps as f64, (steps - i - j) as f64 / steps as f64];
            let v = f(&w);
            if v < best.0 {
                best = (v, w);
            }
        }
    }
    best
}

pub fn random_simplex_point<R: Rng>(rng: &mut R, k: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..k).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Two-sample Kolmogorov–Smirnov distance.
pub fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}
