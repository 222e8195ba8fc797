//! Assembly of the weight-selection criteria as [`SimplexQP`]s.

use nalgebra::{DMatrix, DVector};

use super::qp::SimplexQP;
use crate::candidates::CandidateDomain;
use crate::error::{Error, Result};
use crate::estimation::DomainData;

/// Tuning of the individual-similarity criterion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriterionConfig {
    /// Mix between the averaged-predictor loss (`v = 0`) and the
    /// weighted candidate losses (`v = 1`).
    pub v: f64,
    /// Multiplier of the sample-size (trace) penalty.
    pub phi: f64,
}

impl CriterionConfig {
    pub fn new(v: f64, phi: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::ConfigInvalid(format!("v = {v} is outside [0, 1]")));
        }
        if !(phi > 0.0 && phi.is_finite()) {
            return Err(Error::ConfigInvalid(format!("phi = {phi} must be positive")));
        }
        Ok(CriterionConfig { v, phi })
    }

    /// `v = 0.5`, `φ = log n₀`.
    pub fn recommended(n0: usize) -> Result<Self> {
        CriterionConfig::new(0.5, (n0 as f64).ln())
    }
}

fn coefficient_matrix(candidates: &[CandidateDomain], index: &[usize]) -> DMatrix<f64> {
    let p = candidates[0].beta.len();
    DMatrix::from_fn(p, index.len(), |r, c| candidates[index[c]].beta[r])
}

fn check_candidates(candidates: &[CandidateDomain], p: usize) -> Result<()> {
    let first = candidates
        .first()
        .ok_or_else(|| Error::InvalidInput("no candidate domains".into()))?;
    if first.members != [0] {
        return Err(Error::InvalidInput("candidate 0 must be the target alone".into()));
    }
    if let Some(c) = candidates.iter().find(|c| c.beta.len() != p) {
        return Err(Error::DimensionMismatch(format!(
            "candidate {} has {} coefficients, expected {p}",
            c.index,
            c.beta.len()
        )));
    }
    Ok(())
}

/// Trans-MAI criterion
/// `(1−v)‖y − Σw_m μ̂_m‖² + v Σ w_m‖y − μ̂_m‖² + φσ̂² Σ w_m tr(G^[m]⁻¹G⁽⁰⁾)`
/// with `μ̂_m = X⁽⁰⁾β̂^[m]`.
pub fn trans_mai_qp(
    target: &DomainData,
    candidates: &[CandidateDomain],
    sigma2_target: f64,
    cfg: &CriterionConfig,
) -> Result<SimplexQP> {
    if target.id() != 0 {
        return Err(Error::InvalidInput(format!("target must have id 0, got {}", target.id())));
    }
    check_candidates(candidates, target.p())?;
    if !(sigma2_target >= 0.0 && sigma2_target.is_finite()) {
        return Err(Error::InvalidInput(format!("target variance {sigma2_target} is invalid")));
    }
    let k = candidates.len();
    let all: Vec<usize> = (0..k).collect();
    let h = target.x() * coefficient_matrix(candidates, &all);
    let y = target.y();
    let hty = h.tr_mul(y);
    let gram0 = target.x().tr_mul(target.x());
    let v = cfg.v;

    let a = h.tr_mul(&h) * (1.0 - v);
    let b = DVector::from_fn(k, |m, _| {
        let mu = h.column(m);
        let penalty = cfg.phi * sigma2_target * candidates[m].trace_solve(&gram0);
        -2.0 * (1.0 - v) * hty[m] + v * (mu.norm_squared() - 2.0 * hty[m]) + penalty
    });
    SimplexQP::new(a, b, y.norm_squared())
}

/// Shared assembly of the combinatorial criteria: loss evaluated on the
/// pooled raw rows of candidate `m_s`, over candidate columns `set`.
fn combination_qp(
    raw: &[&DomainData],
    candidates: &[CandidateDomain],
    m_s: usize,
    set: &[usize],
    sigma2_by_source: &[f64],
) -> Result<SimplexQP> {
    let anchor = candidates
        .get(m_s)
        .ok_or_else(|| Error::InvalidInput(format!("m_s = {m_s} is not a candidate index")))?;
    let p = anchor.beta.len();
    check_candidates(candidates, p)?;
    if let Some(&m) = set.iter().find(|&&m| m >= candidates.len()) {
        return Err(Error::InvalidInput(format!("candidate index {m} out of range")));
    }

    let mut rows = Vec::with_capacity(anchor.members.len());
    for &id in &anchor.members {
        let d = raw.iter().find(|d| d.id() == id).ok_or(Error::PrivacyViolation(id))?;
        if d.p() != p {
            return Err(Error::DimensionMismatch(format!("domain {id} has {} covariates, expected {p}", d.p())));
        }
        rows.push(*d);
    }
    // Σ_j σ̂²_j G⁽ʲ⁾ over the members of the anchor domain.
    let mut weighted_gram = DMatrix::zeros(p, p);
    for d in &rows {
        let s2 = *sigma2_by_source
            .get(d.id())
            .ok_or_else(|| Error::InvalidInput(format!("no variance for domain {}", d.id())))?;
        if !(s2 >= 0.0 && s2.is_finite()) {
            return Err(Error::InvalidInput(format!("variance {s2} of domain {} is invalid", d.id())));
        }
        weighted_gram += d.x().tr_mul(d.x()) * s2;
    }
    let stacked = DomainData::stack(&rows)?;
    let h = stacked.x() * coefficient_matrix(candidates, set);
    let y = stacked.y();
    let hty = h.tr_mul(y);

    let a = h.tr_mul(&h);
    let b = DVector::from_fn(set.len(), |c, _| {
        -2.0 * hty[c] + 2.0 * candidates[set[c]].trace_solve(&weighted_gram)
    });
    SimplexQP::new(a, b, y.norm_squared())
}

fn check_donors(donors: &[usize], m_s: usize) -> Result<()> {
    if donors.contains(&m_s) {
        return Err(Error::InvalidInput(format!("donor set contains m_s = {m_s}")));
    }
    if donors.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput("donor set must be strictly increasing".into()));
    }
    Ok(())
}

/// Trans-MACs (strict combinatorial similarity): weights over `donors` only.
pub fn trans_macs_qp(
    raw: &[&DomainData],
    candidates: &[CandidateDomain],
    m_s: usize,
    donors: &[usize],
    sigma2_by_source: &[f64],
) -> Result<SimplexQP> {
    if donors.is_empty() {
        return Err(Error::InvalidInput("Trans-MACs needs a nonempty donor set".into()));
    }
    check_donors(donors, m_s)?;
    combination_qp(raw, candidates, m_s, donors, sigma2_by_source)
}

/// Candidate columns of the Trans-MAC criterion: `donors ∪ {m_s}`, sorted.
pub fn mac_index(m_s: usize, donors: &[usize]) -> Vec<usize> {
    let mut set = donors.to_vec();
    set.push(m_s);
    set.sort_unstable();
    set.dedup();
    set
}

/// Trans-MAC (combinatorial similarity): weights over `donors ∪ {m_s}`.
pub fn trans_mac_qp(
    raw: &[&DomainData],
    candidates: &[CandidateDomain],
    m_s: usize,
    donors: &[usize],
    sigma2_by_source: &[f64],
) -> Result<SimplexQP> {
    check_donors(donors, m_s)?;
    combination_qp(raw, candidates, m_s, &mac_index(m_s, donors), sigma2_by_source)
}
