//! Reference estimators that ignore the transfer structure.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::estimation::{ols_fit, DomainData};

/// OLS on the target (first domain) only.
pub fn baseline_ols_tar(domains: &[DomainData]) -> Result<DVector<f64>> {
    let target = domains.first().ok_or(Error::MissingTarget)?;
    Ok(ols_fit(target)?.beta)
}

/// OLS on all domains stacked.
pub fn baseline_ols_pool(domains: &[DomainData]) -> Result<DVector<f64>> {
    let parts: Vec<&DomainData> = domains.iter().collect();
    Ok(ols_fit(&DomainData::stack(&parts)?)?.beta)
}
