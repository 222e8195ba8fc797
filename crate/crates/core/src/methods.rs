//! One entry point that runs any subset of the estimators on a set of
//! domains, sharing the per-domain fits and candidate construction.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::averaging::{
    fit_trans_mac, fit_trans_macs, fit_trans_mai, CriterionConfig, FitResult, SimplexWeights,
};
use crate::candidates::{build_candidates, contrast_norms, CandidateDomain, ContrastTable};
use crate::error::{Error, Result};
use crate::estimation::{ols_fit, DomainData, DomainSummary};
use crate::simlab::baselines::{baseline_ols_pool, baseline_ols_tar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    OlsTar,
    OlsPool,
    TransMai,
    TransMacs,
    TransMac,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::OlsTar,
        Method::OlsPool,
        Method::TransMai,
        Method::TransMacs,
        Method::TransMac,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::OlsTar => "ols-tar",
            Method::OlsPool => "ols-pool",
            Method::TransMai => "trans-mai",
            Method::TransMacs => "trans-macs",
            Method::TransMac => "trans-mac",
        }
    }

    pub fn is_averaging(self) -> bool {
        matches!(self, Method::TransMai | Method::TransMacs | Method::TransMac)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.trim())
            .ok_or_else(|| Error::ConfigInvalid(format!("unknown method `{s}`")))
    }
}

/// Per-domain summaries, contrast ranking and candidate domains.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub summaries: Vec<DomainSummary>,
    pub table: ContrastTable,
    pub candidates: Vec<CandidateDomain>,
}

impl Prepared {
    /// `σ̂²` of every domain, indexed by id.
    pub fn sigma2_by_id(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.summaries.len()];
        for s in &self.summaries {
            out[s.id] = s.sigma2;
        }
        out
    }
}

/// Fit every domain and build the nested candidates. `domains` must carry
/// ids `0..=M` with the target at index 0.
pub fn prepare(domains: &[DomainData]) -> Result<Prepared> {
    check_layout(domains)?;
    let summaries = domains.iter().map(ols_fit).collect::<Result<Vec<_>>>()?;
    let table = contrast_norms(&summaries)?;
    let candidates = build_candidates(&summaries, &table)?;
    Ok(Prepared { summaries, table, candidates })
}

pub(crate) fn check_layout(domains: &[DomainData]) -> Result<()> {
    if domains.is_empty() || domains[0].id() != 0 {
        return Err(Error::MissingTarget);
    }
    if let Some((i, d)) = domains.iter().enumerate().find(|(i, d)| d.id() != *i) {
        return Err(Error::InvalidInput(format!("domain at position {i} has id {}", d.id())));
    }
    let p = domains[0].p();
    if let Some(d) = domains.iter().find(|d| d.p() != p) {
        return Err(Error::DimensionMismatch(format!("domain {} has {} covariates, expected {p}", d.id(), d.p())));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct MethodOptions {
    pub criterion: CriterionConfig,
    /// Anchor for Trans-MACs/MAC; defaults to Trans-MAI's `m̂_s`.
    pub m_s_override: Option<usize>,
    /// Only the target's rows are visible; sources share summaries.
    pub summaries_only: bool,
}

impl MethodOptions {
    pub fn new(criterion: CriterionConfig) -> Self {
        MethodOptions { criterion, m_s_override: None, summaries_only: false }
    }
}

#[derive(Debug, Clone)]
pub struct MethodFit {
    pub method: Method,
    pub beta: DVector<f64>,
    pub weights: Option<SimplexWeights>,
    pub m_s_hat: Option<usize>,
    pub objective: Option<f64>,
}

impl MethodFit {
    fn from_fit(method: Method, fit: FitResult) -> Self {
        MethodFit {
            method,
            beta: fit.beta,
            m_s_hat: Some(fit.m_s_hat),
            weights: Some(fit.weights),
            objective: Some(fit.objective),
        }
    }

    fn baseline(method: Method, beta: DVector<f64>) -> Self {
        MethodFit { method, beta, weights: None, m_s_hat: None, objective: None }
    }
}

/// Run `methods` in order. Each method succeeds or fails on its own.
pub fn fit_methods(
    domains: &[DomainData],
    prepared: &Prepared,
    methods: &[Method],
    opts: &MethodOptions,
) -> Vec<(Method, Result<MethodFit>)> {
    let target = &domains[0];
    let mut mai: Option<Result<FitResult>> = None;
    let mai_fit = |mai: &mut Option<Result<FitResult>>| -> Result<FitResult> {
        mai.get_or_insert_with(|| fit_trans_mai(target, &prepared.candidates, &opts.criterion))
            .clone()
    };
    let raw: Vec<&DomainData> = if opts.summaries_only {
        vec![target]
    } else {
        domains.iter().collect()
    };
    let sigma2 = prepared.sigma2_by_id();

    methods
        .iter()
        .map(|&method| {
            let result = match method {
                Method::OlsTar => baseline_ols_tar(domains).map(|b| MethodFit::baseline(method, b)),
                Method::OlsPool => baseline_ols_pool(domains).map(|b| MethodFit::baseline(method, b)),
                Method::TransMai => mai_fit(&mut mai).map(|f| MethodFit::from_fit(method, f)),
                Method::TransMacs | Method::TransMac => {
                    let anchor = match opts.m_s_override {
                        Some(m) => Ok(m),
                        None => mai_fit(&mut mai).map(|f| f.m_s_hat),
                    };
                    anchor.and_then(|m_s| {
                        let fit = if method == Method::TransMacs {
                            fit_trans_macs(&raw, &prepared.candidates, m_s, &sigma2)
                        } else {
                            fit_trans_mac(&raw, &prepared.candidates, m_s, &sigma2)
                        };
                        fit.map(|f| MethodFit::from_fit(method, f))
                    })
                }
            };
            (method, result)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("lasso".parse::<Method>().is_err());
    }
}
