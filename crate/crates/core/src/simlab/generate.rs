//! Data-generating processes of the simulation experiments.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;

use super::config::{CovMode, DeltaMode, ExperimentConfig};
use super::rng::{stream, Purpose};
use crate::error::{Error, Result};
use crate::estimation::DomainData;

/// Covariance of domain `m`'s covariates.
///
/// The Toeplitz band is cut at column `p − 1` when `2m − 1 > p − 1`.
pub fn gen_covariance(mode: CovMode, m: usize, p: usize) -> DMatrix<f64> {
    match mode {
        CovMode::Identity => DMatrix::identity(p, p),
        CovMode::ToeplitzBand => {
            let band = (2 * m).saturating_sub(1).min(p.saturating_sub(1));
            let off = 1.0 / (m + 1) as f64;
            DMatrix::from_fn(p, p, |i, j| {
                let lag = i.abs_diff(j);
                if lag == 0 {
                    1.0
                } else if lag <= band {
                    off
                } else {
                    0.0
                }
            })
        }
        CovMode::Ar(rho) => DMatrix::from_fn(p, p, |i, j| rho.powi(i.abs_diff(j) as i32)),
    }
}

/// One simulated replication with its ground truth.
#[derive(Debug, Clone)]
pub struct SimInstance {
    /// Target first, then sources `1..=M`.
    pub domains: Vec<DomainData>,
    /// True coefficients by domain id (`betas[0]` is the target).
    pub betas: Vec<DVector<f64>>,
    /// True noise standard deviations by domain id.
    pub sigmas: Vec<f64>,
}

impl SimInstance {
    pub fn beta0(&self) -> &DVector<f64> {
        &self.betas[0]
    }

    pub fn true_variances(&self) -> Vec<f64> {
        self.sigmas.iter().map(|s| s * s).collect()
    }
}

fn normal_vec<R: Rng>(rng: &mut R, len: usize, mean: f64, sd: f64) -> DVector<f64> {
    DVector::from_iterator(len, (0..len).map(|_| mean + sd * rng.sample::<f64, _>(StandardNormal)))
}

/// `n` rows from `N(0, Ω)` given the lower Cholesky factor of `Ω`.
fn gaussian_rows<R: Rng>(rng: &mut R, n: usize, chol_l: &DMatrix<f64>) -> DMatrix<f64> {
    let p = chol_l.nrows();
    let z: Vec<f64> = (0..n * p).map(|_| rng.sample(StandardNormal)).collect();
    DMatrix::from_row_slice(n, p, &z) * chol_l.transpose()
}

fn cov_factor(mode: CovMode, m: usize, p: usize) -> Result<DMatrix<f64>> {
    Cholesky::new(gen_covariance(mode, m, p))
        .map(|c| c.l())
        .ok_or_else(|| Error::ConfigInvalid(format!("covariance of domain {m} is not positive definite")))
}

fn gen_contrast(cfg: &ExperimentConfig, replicate: u64, m: usize) -> DVector<f64> {
    let mut rng = stream(cfg.seed, replicate, m as u64, Purpose::Contrast);
    match cfg.delta_mode {
        DeltaMode::Sparse(k) => {
            let mut delta = DVector::zeros(cfg.p);
            let support = index::sample(&mut rng, cfg.p, k);
            for j in support.iter() {
                delta[j] = cfg.h * rng.sample::<f64, _>(StandardNormal);
            }
            delta
        }
        DeltaMode::Dense => {
            let dir = normal_vec(&mut rng, cfg.p, 0.0, 1.0);
            if cfg.h == 0.0 {
                DVector::zeros(cfg.p)
            } else {
                &dir * (cfg.h / dir.norm())
            }
        }
    }
}

fn domain_size(cfg: &ExperimentConfig, m: usize) -> usize {
    if m == 0 {
        cfg.n0
    } else {
        cfg.n_m
    }
}

fn domain_sigma(cfg: &ExperimentConfig, m: usize) -> f64 {
    if m == 0 {
        cfg.sigma_target
    } else {
        cfg.sigma_sources.sigma(m)
    }
}

fn domain_cov(cfg: &ExperimentConfig, m: usize) -> CovMode {
    if m == 0 {
        cfg.target_cov_mode
    } else {
        cfg.cov_mode
    }
}

/// Generate replication `replicate` of `cfg`. Sources `1..=A_size` are the
/// informative ones.
pub fn gen_experiment(cfg: &ExperimentConfig, replicate: u64) -> Result<SimInstance> {
    cfg.validate()?;
    let (p, big_m, a) = (cfg.p, cfg.num_sources, cfg.informative);

    let designs = (0..=big_m)
        .map(|m| {
            let l = cov_factor(domain_cov(cfg, m), m, p)?;
            let mut rng = stream(cfg.seed, replicate, m as u64, Purpose::Design);
            Ok(gaussian_rows(&mut rng, domain_size(cfg, m), &l))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut betas: Vec<DVector<f64>> = vec![DVector::zeros(p); big_m + 1];
    if cfg.experiment.is_combinatorial() {
        for (m, beta) in betas.iter_mut().enumerate().skip(a + 1) {
            let mut rng = stream(cfg.seed, replicate, m as u64, Purpose::Coefficients);
            *beta = normal_vec(&mut rng, p, 2.0, 4.0);
        }
        let grams: Vec<DMatrix<f64>> = designs.iter().map(|x| x.tr_mul(x)).collect();
        betas[0] = combination_target(&grams, &betas, a)?;
    } else {
        let mut rng = stream(cfg.seed, replicate, 0, Purpose::Coefficients);
        betas[0] = normal_vec(&mut rng, p, 2.0, 2.0);
        for (m, beta) in betas.iter_mut().enumerate().skip(a + 1) {
            let mut rng = stream(cfg.seed, replicate, m as u64, Purpose::Coefficients);
            *beta = normal_vec(&mut rng, p, -1.0, 2.0);
        }
    }
    for m in 1..=a {
        betas[m] = &betas[0] + gen_contrast(cfg, replicate, m);
    }

    let sigmas: Vec<f64> = (0..=big_m).map(|m| domain_sigma(cfg, m)).collect();
    let domains = designs
        .into_iter()
        .enumerate()
        .map(|(m, x)| {
            let mut rng = stream(cfg.seed, replicate, m as u64, Purpose::Noise);
            let noise = normal_vec(&mut rng, x.nrows(), 0.0, sigmas[m]);
            let y = &x * &betas[m] + noise;
            DomainData::new(m, x, y)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SimInstance { domains, betas, sigmas })
}

/// Fresh covariates from the target distribution for MSPE evaluation.
pub fn gen_test_design(cfg: &ExperimentConfig, replicate: u64) -> Result<DMatrix<f64>> {
    let l = cov_factor(cfg.target_cov_mode, 0, cfg.p)?;
    let mut rng = stream(cfg.seed, replicate, 0, Purpose::TestSet);
    Ok(gaussian_rows(&mut rng, cfg.n_test, &l))
}

/// Cumulative Grams `G^[m] = Σ_{j≤m} G⁽ʲ⁾` and moments `Σ_{a<j≤m} G⁽ʲ⁾β⁽ʲ⁾`
/// for `m = a+1..=M`, using the true informative prefix `{0..a}`.
fn combination_terms(
    grams: &[DMatrix<f64>],
    betas: &[DVector<f64>],
    a: usize,
) -> (DMatrix<f64>, Vec<(DMatrix<f64>, DVector<f64>)>) {
    let p = grams[0].nrows();
    let g_a = grams[..=a].iter().fold(DMatrix::zeros(p, p), |acc, g| acc + g);
    let mut cum_g = g_a.clone();
    let mut cum_r = DVector::zeros(p);
    let mut terms = Vec::new();
    for m in (a + 1)..grams.len() {
        cum_g += &grams[m];
        cum_r += &grams[m] * &betas[m];
        terms.push((cum_g.clone(), cum_r.clone()));
    }
    (g_a, terms)
}

/// Target coefficients under which the equal-weight combination of the
/// non-informative candidates' quasi-true parameters reproduces `β⁽⁰⁾`:
///
/// `β⁽⁰⁾ = (I − Σ ρ_m G^[m]⁻¹ G^[a])⁻¹ Σ ρ_m G^[m]⁻¹ Σ_{j=a+1}^{m} G⁽ʲ⁾β⁽ʲ⁾`.
pub fn combination_target(grams: &[DMatrix<f64>], betas: &[DVector<f64>], a: usize) -> Result<DVector<f64>> {
    let big_m = grams.len() - 1;
    if a >= big_m {
        return Err(Error::ConfigInvalid("no non-informative sources to combine".into()));
    }
    let p = grams[0].nrows();
    let rho = 1.0 / (big_m - a) as f64;
    let (g_a, terms) = combination_terms(grams, betas, a);
    let mut lhs = DMatrix::identity(p, p);
    let mut rhs = DVector::zeros(p);
    for (g_m, r_m) in &terms {
        let chol = Cholesky::new(g_m.clone())
            .ok_or_else(|| Error::ConfigInvalid("pooled Gram matrix is singular".into()))?;
        lhs -= chol.solve(&g_a) * rho;
        rhs += chol.solve(r_m) * rho;
    }
    lhs.lu()
        .solve(&rhs)
        .ok_or_else(|| Error::ConfigInvalid("combination system is singular".into()))
}

/// Relative residual `‖β⁽⁰⁾ − Σ ρ_m G^[m]⁻¹(G^[a]β⁽⁰⁾ + Σ G⁽ʲ⁾β⁽ʲ⁾)‖ / ‖β⁽⁰⁾‖`
/// of the combination fixed point.
pub fn combination_residual(grams: &[DMatrix<f64>], betas: &[DVector<f64>], a: usize) -> f64 {
    let big_m = grams.len() - 1;
    let rho = 1.0 / (big_m - a) as f64;
    let (g_a, terms) = combination_terms(grams, betas, a);
    let beta0 = &betas[0];
    let mut combo = DVector::zeros(beta0.len());
    for (g_m, r_m) in &terms {
        let quasi_true = g_m.clone().lu().solve(&(&g_a * beta0 + r_m)).expect("nonsingular pooled Gram");
        combo += quasi_true * rho;
    }
    (beta0 - combo).norm() / beta0.norm()
}
