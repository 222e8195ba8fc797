//! Weight-convergence, normality and train/test holdout studies.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::generate::gen_experiment;
use super::metrics::{histogram, mean, scale_against_best, std_dev};
use super::rng::{stream, Purpose};
use crate::averaging::{fit_trans_mai, CriterionConfig};
use crate::error::{Error, Result};
use crate::estimation::DomainData;
use crate::inference::normality_statistic;
use crate::methods::{fit_methods, prepare, Method, MethodOptions};

#[derive(Debug, Clone, PartialEq)]
pub struct WeightPoint {
    pub v: f64,
    pub n0: usize,
    /// Mean over completed replications of the total weight on candidates
    /// that contain a truly non-informative source.
    pub mean_weight: f64,
    pub completed: usize,
}

/// `y ≈ c·n^(−a)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLaw {
    pub c: f64,
    pub a: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveFit {
    pub v: f64,
    /// Least squares of `log y` on `log n`; `None` when some mean is 0.
    pub log_fit: Option<PowerLaw>,
    /// Gauss–Newton on `Σ (y − c n^(−a))²`; `None` when every mean is 0
    /// and the exponent is not identified.
    pub refined: Option<PowerLaw>,
}

impl CurveFit {
    /// The refined fit when available, else the log fit.
    pub fn best(&self) -> Option<PowerLaw> {
        self.refined.or(self.log_fit)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightConvergence {
    pub points: Vec<WeightPoint>,
    pub fits: Vec<CurveFit>,
}

/// Fit `log y = log c − a log n` by ordinary least squares. Returns `None`
/// if any point has `y ≤ 0`, since dropping such points biases the slope.
pub fn fit_power_law_log(points: &[(f64, f64)]) -> Option<PowerLaw> {
    if points.iter().any(|(n, y)| !(*n > 0.0 && *y > 0.0)) {
        return None;
    }
    fit_positive(points)
}

fn fit_positive(points: &[(f64, f64)]) -> Option<PowerLaw> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(n, y)| *n > 0.0 && *y > 0.0)
        .map(|(n, y)| (n.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some(PowerLaw { c: (my - slope * mx).exp(), a: -slope })
}

/// Starting point for [`refine_power_law`]: the log fit over the positive
/// points, or a `n^(−1/2)` curve through the single positive point.
/// `None` if no point is positive.
pub fn power_law_start(points: &[(f64, f64)]) -> Option<PowerLaw> {
    if let Some(fit) = fit_positive(points) {
        return Some(fit);
    }
    let &(n, y) = points.iter().find(|(n, y)| *n > 0.0 && *y > 0.0)?;
    Some(PowerLaw { c: y * n.sqrt(), a: 0.5 })
}

/// Gauss–Newton on the untransformed residuals `y − c n^(−a)`, started at
/// `start`, with step halving to keep the objective decreasing.
pub fn refine_power_law(points: &[(f64, f64)], start: PowerLaw, iterations: usize) -> PowerLaw {
    let sse = |pl: PowerLaw| -> f64 { points.iter().map(|(n, y)| (y - pl.c * n.powf(-pl.a)).powi(2)).sum() };
    let mut cur = start;
    let mut cur_sse = sse(cur);
    for _ in 0..iterations {
        let mut jtj = DMatrix::<f64>::zeros(2, 2);
        let mut jtr = DVector::<f64>::zeros(2);
        for &(n, y) in points {
            let f = n.powf(-cur.a);
            let r = y - cur.c * f;
            // d(c n^-a)/dc = n^-a,  d/da = −c n^-a ln n
            let j = [f, -cur.c * f * n.ln()];
            for r_i in 0..2 {
                jtr[r_i] += j[r_i] * r;
                for c_i in 0..2 {
                    jtj[(r_i, c_i)] += j[r_i] * j[c_i];
                }
            }
        }
        let Some(delta) = jtj.lu().solve(&jtr) else { break };
        let mut step = 1.0;
        let mut improved = false;
        while step > 1e-10 {
            let trial = PowerLaw { c: cur.c + step * delta[0], a: cur.a + step * delta[1] };
            let trial_sse = sse(trial);
            if trial_sse.is_finite() && trial_sse <= cur_sse {
                improved = trial_sse < cur_sse;
                cur = trial;
                cur_sse = trial_sse;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    cur
}

/// Mean non-informative weight of Trans-MAI across `v_grid × n0_grid`,
/// with `n_m = n₀` at every grid point. Every `v` is fitted on the same
/// simulated datasets.
pub fn weight_convergence_study(
    base: &ExperimentConfig,
    v_grid: &[f64],
    n0_grid: &[usize],
) -> Result<WeightConvergence> {
    if v_grid.is_empty() || n0_grid.is_empty() {
        return Err(Error::ConfigInvalid("empty v or n0 grid".into()));
    }
    let mut points = Vec::new();
    for &n0 in n0_grid {
        let cfg = ExperimentConfig { n0, n_m: n0, ..base.clone() };
        cfg.validate()?;
        let criteria = v_grid
            .iter()
            .map(|&v| CriterionConfig::new(v, cfg.phi.unwrap_or_else(|| (n0 as f64).ln())))
            .collect::<Result<Vec<_>>>()?;
        let per_rep: Vec<Option<Vec<f64>>> = (0..cfg.replications)
            .into_par_iter()
            .map(|b| {
                let inst = gen_experiment(&cfg, b as u64).ok()?;
                let prepared = prepare(&inst.domains).ok()?;
                let non_informative: Vec<bool> = prepared
                    .candidates
                    .iter()
                    .map(|c| c.members.iter().any(|&id| id > cfg.informative))
                    .collect();
                criteria
                    .iter()
                    .map(|crit| {
                        let fit = fit_trans_mai(&inst.domains[0], &prepared.candidates, crit).ok()?;
                        Some(
                            fit.weights
                                .values()
                                .iter()
                                .zip(&non_informative)
                                .filter(|(_, &bad)| bad)
                                .map(|(w, _)| w)
                                .sum(),
                        )
                    })
                    .collect()
            })
            .collect();
        for (vi, &v) in v_grid.iter().enumerate() {
            let sums: Vec<f64> = per_rep.iter().flatten().map(|s| s[vi]).collect();
            points.push(WeightPoint {
                v,
                n0,
                mean_weight: if sums.is_empty() { f64::NAN } else { mean(&sums) },
                completed: sums.len(),
            });
        }
    }
    points.sort_by(|a, b| a.v.total_cmp(&b.v).then(a.n0.cmp(&b.n0)));
    let fits = v_grid
        .iter()
        .map(|&v| {
            let pts: Vec<(f64, f64)> = points
                .iter()
                .filter(|p| p.v == v && p.mean_weight.is_finite())
                .map(|p| (p.n0 as f64, p.mean_weight))
                .collect();
            let log_fit = fit_power_law_log(&pts);
            let refined = power_law_start(&pts).map(|start| refine_power_law(&pts, start, 100));
            CurveFit { v, log_fit, refined }
        })
        .collect();
    Ok(WeightConvergence { points, fits })
}

#[derive(Debug, Clone)]
pub struct NormalityStudy {
    /// `(replicate, T)` for completed replications.
    pub statistics: Vec<(usize, f64)>,
    pub mean: f64,
    pub std: f64,
    /// 40 equal bins over `[−4, 4)`.
    pub histogram: Vec<usize>,
    pub failures: Vec<(usize, String)>,
}

pub const HISTOGRAM_RANGE: (f64, f64) = (-4.0, 4.0);
pub const HISTOGRAM_BINS: usize = 40;

/// Trans-MAI's standardized statistic over `B` replications with
/// `ψ = p^(−1/2)·1` and the true noise variances.
pub fn normality_study(cfg: &ExperimentConfig) -> Result<NormalityStudy> {
    cfg.validate()?;
    let crit = cfg.criterion()?;
    let psi = DVector::from_element(cfg.p, 1.0 / (cfg.p as f64).sqrt());
    let outcomes: Vec<Result<f64>> = (0..cfg.replications)
        .into_par_iter()
        .map(|b| {
            let inst = gen_experiment(cfg, b as u64)?;
            let prepared = prepare(&inst.domains)?;
            let fit = fit_trans_mai(&inst.domains[0], &prepared.candidates, &crit)?;
            let report = normality_statistic(
                &fit,
                &prepared.candidates,
                &prepared.summaries,
                &psi,
                &inst.true_variances(),
                inst.beta0(),
                false,
            )?;
            Ok(report.statistic)
        })
        .collect();
    let mut statistics = Vec::new();
    let mut failures = Vec::new();
    for (b, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(t) => statistics.push((b, t)),
            Err(e) => failures.push((b, e.to_string())),
        }
    }
    let values: Vec<f64> = statistics.iter().map(|s| s.1).collect();
    if values.len() < 2 {
        return Err(Error::InvalidInput("fewer than two completed replications".into()));
    }
    Ok(NormalityStudy {
        mean: mean(&values),
        std: std_dev(&values),
        histogram: histogram(&values, HISTOGRAM_RANGE.0, HISTOGRAM_RANGE.1, HISTOGRAM_BINS),
        statistics,
        failures,
    })
}

#[derive(Debug, Clone)]
pub struct HoldoutOptions {
    pub repeats: usize,
    pub train_fraction: f64,
    pub seed: u64,
    /// `None` selects `v = 0.5`, `φ = log n_train`.
    pub criterion: Option<CriterionConfig>,
    pub summaries_only: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HoldoutRow {
    pub replicate: usize,
    pub method: Method,
    /// `‖y_test − X_test β̂‖² / n_test`
    pub mspe: f64,
    /// `mspe` minus the best method's `mspe` in the same replication.
    pub scaled_mspe: f64,
}

#[derive(Debug, Clone)]
pub struct HoldoutStudy {
    pub rows: Vec<HoldoutRow>,
    pub failures: Vec<(usize, Method, String)>,
}

/// Repeated random train/test splits of the target. Sources are used in
/// full; each method is scored on the held-out target rows.
pub fn holdout_study(domains: &[DomainData], methods: &[Method], opts: &HoldoutOptions) -> Result<HoldoutStudy> {
    crate::methods::check_layout(domains)?;
    if methods.is_empty() {
        return Err(Error::ConfigInvalid("no methods selected".into()));
    }
    if !(opts.train_fraction > 0.0 && opts.train_fraction < 1.0) {
        return Err(Error::ConfigInvalid(format!("train fraction {} must be in (0, 1)", opts.train_fraction)));
    }
    let target = &domains[0];
    let n = target.n();
    let n_train = ((n as f64) * opts.train_fraction).round() as usize;
    if n_train < target.p() || n_train >= n {
        return Err(Error::ConfigInvalid(format!(
            "split of {n} target rows leaves {n_train} for training and {} for testing",
            n - n_train
        )));
    }
    let outcomes: Vec<Result<Vec<(Method, Result<f64>)>>> = (0..opts.repeats)
        .into_par_iter()
        .map(|b| {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut stream(opts.seed, b as u64, 0, Purpose::Split));
            let train = target.select_rows(&order[..n_train])?;
            let test = target.select_rows(&order[n_train..])?;
            let mut split = Vec::with_capacity(domains.len());
            split.push(train);
            split.extend(domains[1..].iter().cloned());
            let prepared = prepare(&split)?;
            let criterion = match opts.criterion {
                Some(c) => c,
                None => CriterionConfig::recommended(n_train)?,
            };
            let method_opts = MethodOptions { criterion, m_s_override: None, summaries_only: opts.summaries_only };
            Ok(fit_methods(&split, &prepared, methods, &method_opts)
                .into_iter()
                .map(|(m, fit)| {
                    let err = fit.map(|f| (test.y() - test.x() * &f.beta).norm_squared() / test.n() as f64);
                    (m, err)
                })
                .collect())
        })
        .collect();

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (b, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(per_method) => {
                let mut ok = Vec::new();
                for (m, r) in per_method {
                    match r {
                        Ok(e) => ok.push((m, e)),
                        Err(e) => failures.push((b, m, e.to_string())),
                    }
                }
                for ((m, raw), (_, scaled)) in ok.iter().zip(scale_against_best(&ok)) {
                    rows.push(HoldoutRow { replicate: b, method: *m, mspe: *raw, scaled_mspe: scaled });
                }
            }
            Err(e) => {
                for &m in methods {
                    failures.push((b, m, e.to_string()));
                }
            }
        }
    }
    Ok(HoldoutStudy { rows, failures })
}
