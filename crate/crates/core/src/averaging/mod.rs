//! Model-averaging weight selection over the nested candidate domains.
//!
//! Trans-MAI works from summaries plus the target rows. Trans-MACs and
//! Trans-MAC evaluate their loss on the pooled rows of the sufficient
//! domain `M_{m_s}`, so every member of that domain must expose raw data.

mod criteria;
mod qp;

use nalgebra::DVector;

pub use criteria::{mac_index, trans_mac_qp, trans_macs_qp, trans_mai_qp, CriterionConfig};
pub use qp::{
    project_simplex, solve_simplex_qp, solve_simplex_qp_detailed, QpSolution, SimplexQP, SimplexWeights,
};

use crate::candidates::CandidateDomain;
use crate::error::{Error, Result};
use crate::estimation::{residual_variance, DomainData};

/// Averaged estimator produced by one criterion.
#[derive(Debug, Clone)]
pub struct FitResult {
    /// Weights over all `M + 1` candidates (zero outside the criterion's set).
    pub weights: SimplexWeights,
    pub beta: DVector<f64>,
    /// Candidate with the largest weight, lowest index on ties.
    pub m_s_hat: usize,
    /// Criterion value at the optimum.
    pub objective: f64,
}

fn average(candidates: &[CandidateDomain], weights: &SimplexWeights) -> DVector<f64> {
    let p = candidates[0].beta.len();
    weights
        .values()
        .iter()
        .zip(candidates)
        .filter(|(w, _)| **w != 0.0)
        .fold(DVector::zeros(p), |acc, (w, c)| acc + &c.beta * *w)
}

fn finish(candidates: &[CandidateDomain], index: &[usize], qp: &SimplexQP) -> Result<FitResult> {
    let sol = solve_simplex_qp_detailed(qp)?;
    let weights = sol.weights.expand(index, candidates.len());
    Ok(FitResult {
        beta: average(candidates, &weights),
        m_s_hat: weights.argmax(),
        weights,
        objective: sol.objective,
    })
}

/// Candidates ranked strictly after `m_s`, the estimated non-informative set.
pub fn donor_set(m_s: usize, num_candidates: usize) -> Vec<usize> {
    ((m_s + 1)..num_candidates).collect()
}

/// Trans-MAI with `σ̂²₍₀₎` taken from the target-only fit (candidate 0).
pub fn fit_trans_mai(target: &DomainData, candidates: &[CandidateDomain], cfg: &CriterionConfig) -> Result<FitResult> {
    let first = candidates
        .first()
        .ok_or_else(|| Error::InvalidInput("no candidate domains".into()))?;
    let sigma2 = residual_variance(target, &first.beta)?;
    fit_trans_mai_with_variance(target, candidates, sigma2, cfg)
}

pub fn fit_trans_mai_with_variance(
    target: &DomainData,
    candidates: &[CandidateDomain],
    sigma2_target: f64,
    cfg: &CriterionConfig,
) -> Result<FitResult> {
    let qp = trans_mai_qp(target, candidates, sigma2_target, cfg)?;
    let all: Vec<usize> = (0..candidates.len()).collect();
    finish(candidates, &all, &qp)
}

/// Trans-MACs anchored at candidate `m_s` with the default donor set.
///
/// With no donors (`m_s = M`) the strict combination is vacuous and the
/// fit puts all weight on `m_s`.
pub fn fit_trans_macs(
    raw: &[&DomainData],
    candidates: &[CandidateDomain],
    m_s: usize,
    sigma2_by_source: &[f64],
) -> Result<FitResult> {
    let donors = donor_set(m_s, candidates.len());
    if donors.is_empty() {
        return fit_trans_mac(raw, candidates, m_s, sigma2_by_source);
    }
    fit_trans_macs_with_donors(raw, candidates, m_s, &donors, sigma2_by_source)
}

pub fn fit_trans_macs_with_donors(
    raw: &[&DomainData],
    candidates: &[CandidateDomain],
    m_s: usize,
    donors: &[usize],
    sigma2_by_source: &[f64],
) -> Result<FitResult> {
    let qp = trans_macs_qp(raw, candidates, m_s, donors, sigma2_by_source)?;
    finish(candidates, donors, &qp)
}

/// Trans-MAC anchored at candidate `m_s` with the default donor set.
pub fn fit_trans_mac(
    raw: &[&DomainData],
    candidates: &[CandidateDomain],
    m_s: usize,
    sigma2_by_source: &[f64],
) -> Result<FitResult> {
    let donors = donor_set(m_s, candidates.len());
    fit_trans_mac_with_donors(raw, candidates, m_s, &donors, sigma2_by_source)
}

pub fn fit_trans_mac_with_donors(
    raw: &[&DomainData],
    candidates: &[CandidateDomain],
    m_s: usize,
    donors: &[usize],
    sigma2_by_source: &[f64],
) -> Result<FitResult> {
    let qp = trans_mac_qp(raw, candidates, m_s, donors, sigma2_by_source)?;
    finish(candidates, &mac_index(m_s, donors), &qp)
}
