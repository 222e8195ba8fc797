//! Standardized statistic for the asymptotic normality of Trans-MAI.
//!
//! For the selected domain `M_ŝ` with Gram `G` and size `N`,
//!
//! ```text
//! T = √N ψᵀ (G/N)^{1/2} (β̂(ŵ) − β⁽⁰⁾) / √( Σ_{k∈I_ŝ} σ²_k ψᵀ G⁽ᵏ⁾ G⁻¹ ψ )
//! ```

use nalgebra::{DMatrix, DVector};

use crate::averaging::FitResult;
use crate::candidates::CandidateDomain;
use crate::error::{Error, Result};
use crate::estimation::DomainSummary;
use crate::linalg::{relative_asymmetry, symmetrize};

#[derive(Debug, Clone)]
pub struct NormalityReport {
    pub statistic: f64,
    pub psi: DVector<f64>,
    pub m_s_hat: usize,
    pub numerator: f64,
    pub denominator: f64,
    /// The variances were estimates rather than true values.
    pub plug_in: bool,
}

/// Symmetric square root of a PSD matrix via eigendecomposition, with
/// negative eigenvalues from rounding clamped to zero.
pub fn psd_sqrt(s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !s.is_square() {
        return Err(Error::DimensionMismatch(format!("{}x{} matrix has no square root", s.nrows(), s.ncols())));
    }
    if relative_asymmetry(s) > 1e-10 {
        return Err(Error::InvalidInput("matrix is not symmetric".into()));
    }
    let eig = symmetrize(s).symmetric_eigen();
    let max = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -1e-10 * max {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let q = &eig.eigenvectors;
    Ok(symmetrize(&(q * DMatrix::from_diagonal(&roots) * q.transpose())))
}

pub fn normality_statistic(
    fit: &FitResult,
    candidates: &[CandidateDomain],
    summaries: &[DomainSummary],
    psi: &DVector<f64>,
    sigma2_by_source: &[f64],
    true_beta0: &DVector<f64>,
    plug_in: bool,
) -> Result<NormalityReport> {
    let sel = candidates
        .get(fit.m_s_hat)
        .ok_or_else(|| Error::InvalidInput(format!("selected index {} is not a candidate", fit.m_s_hat)))?;
    let p = sel.beta.len();
    if psi.len() != p || true_beta0.len() != p || fit.beta.len() != p {
        return Err(Error::DimensionMismatch(format!("expected vectors of length {p}")));
    }
    if (psi.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidInput(format!("psi has norm {}, expected 1", psi.norm())));
    }

    let n = sel.n as f64;
    let root = psd_sqrt(&(&sel.gram / n))?;
    let numerator = n.sqrt() * psi.dot(&(root * (&fit.beta - true_beta0)));

    let g_inv_psi = sel.solve(psi);
    let mut variance = 0.0;
    for &id in &sel.members {
        let s = summaries.iter().find(|s| s.id == id).ok_or(Error::UnknownId(id))?;
        let s2 = *sigma2_by_source
            .get(id)
            .ok_or_else(|| Error::InvalidInput(format!("no variance for domain {id}")))?;
        variance += s2 * psi.dot(&(&s.gram * &g_inv_psi));
    }
    let denominator = variance.max(0.0).sqrt();
    if !(denominator > 1e-14) {
        return Err(Error::SingularDenominator(denominator));
    }
    Ok(NormalityReport {
        statistic: numerator / denominator,
        psi: psi.clone(),
        m_s_hat: fit.m_s_hat,
        numerator,
        denominator,
        plug_in,
    })
}
