//! Per-domain least squares and the regression-cube aggregation.
//!
//! A source only ever has to ship its [`DomainSummary`] (Gram matrix,
//! coefficients, residual variance); pooled estimators over any set of
//! domains are rebuilt from those summaries alone by [`aggregate_cube`].

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result, Subject};
use crate::linalg::{relative_asymmetry, SpdFactor};

/// Raw covariates and responses of one study. Id 0 is the target.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainData {
    id: usize,
    x: DMatrix<f64>,
    y: DVector<f64>,
}

impl DomainData {
    pub fn new(id: usize, x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch(format!(
                "domain {id}: X has {} rows but y has {} entries",
                x.nrows(),
                y.len()
            )));
        }
        if x.nrows() == 0 {
            return Err(Error::InvalidInput(format!("domain {id} has no rows")));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("domain {id} contains non-finite values")));
        }
        Ok(DomainData { id, x, y })
    }

    /// Build from row vectors, checking that every row has the same length.
    pub fn from_rows(id: usize, rows: &[Vec<f64>], y: Vec<f64>) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != p) {
            return Err(Error::DimensionMismatch(format!(
                "domain {id}: row {i} has {} covariates, expected {p}",
                r.len()
            )));
        }
        let x = DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j]);
        DomainData::new(id, x, DVector::from_vec(y))
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn with_id(mut self, id: usize) -> Self {
        self.id = id;
        self
    }

    /// Rows selected by `idx`, in that order.
    pub fn select_rows(&self, idx: &[usize]) -> Result<Self> {
        let x = self.x.select_rows(idx);
        let y = DVector::from_iterator(idx.len(), idx.iter().map(|&i| self.y[i]));
        DomainData::new(self.id, x, y)
    }

    /// Row-stack several domains into one (keeps the first id).
    pub fn stack(parts: &[&DomainData]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidInput("cannot stack zero domains".into()))?;
        let p = first.p();
        if let Some(d) = parts.iter().find(|d| d.p() != p) {
            return Err(Error::DimensionMismatch(format!(
                "domain {} has {} covariates, expected {p}",
                d.id,
                d.p()
            )));
        }
        let n: usize = parts.iter().map(|d| d.n()).sum();
        let mut x = DMatrix::zeros(n, p);
        let mut y = DVector::zeros(n);
        let mut row = 0;
        for d in parts {
            x.rows_mut(row, d.n()).copy_from(&d.x);
            y.rows_mut(row, d.n()).copy_from(&d.y);
            row += d.n();
        }
        DomainData::new(first.id, x, y)
    }
}

/// Summary statistics a domain shares instead of its rows.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainSummary {
    pub id: usize,
    pub n: usize,
    /// `XᵀX`
    pub gram: DMatrix<f64>,
    pub beta: DVector<f64>,
    /// Residual variance with divisor `n`.
    pub sigma2: f64,
}

impl DomainSummary {
    pub fn p(&self) -> usize {
        self.beta.len()
    }

    /// Check the invariants a received summary must satisfy.
    pub fn validate(&self) -> Result<()> {
        let p = self.beta.len();
        if self.gram.nrows() != p || self.gram.ncols() != p {
            return Err(Error::DimensionMismatch(format!(
                "summary {}: Gram is {}x{} but beta has length {p}",
                self.id,
                self.gram.nrows(),
                self.gram.ncols()
            )));
        }
        if relative_asymmetry(&self.gram) > 1e-12 {
            return Err(Error::InvalidInput(format!("summary {}: Gram matrix is not symmetric", self.id)));
        }
        if !(self.sigma2 >= 0.0) || self.beta.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("summary {}: invalid coefficients or variance", self.id)));
        }
        Ok(())
    }
}

/// Ordinary least squares for one domain via a Cholesky solve of the
/// normal equations.
pub fn ols_fit(data: &DomainData) -> Result<DomainSummary> {
    let (n, p) = (data.n(), data.p());
    if n < p {
        return Err(Error::RankDeficient { subject: Subject::Domain(data.id), rcond: 0.0 });
    }
    let gram = data.x.tr_mul(&data.x);
    let xty = data.x.tr_mul(&data.y);
    let factor = SpdFactor::new(&gram, Subject::Domain(data.id))?;
    let beta = factor.solve(&xty);
    let sigma2 = residual_variance(data, &beta)?;
    Ok(DomainSummary { id: data.id, n, gram, beta, sigma2 })
}

/// `n⁻¹‖y − Xβ‖²`.
pub fn residual_variance(data: &DomainData, beta: &DVector<f64>) -> Result<f64> {
    if beta.len() != data.p() {
        return Err(Error::DimensionMismatch(format!(
            "coefficient vector has length {} but domain {} has {} covariates",
            beta.len(),
            data.id,
            data.p()
        )));
    }
    let resid = &data.y - &data.x * beta;
    Ok(resid.norm_squared() / data.n() as f64)
}

/// Pooled least-squares fit over a set of domains, rebuilt from summaries.
#[derive(Debug, Clone)]
pub struct PooledFit {
    pub n: usize,
    pub gram: DMatrix<f64>,
    pub beta: DVector<f64>,
    pub factor: SpdFactor,
}

/// Regression-cube aggregation: `β = (Σ G⁽ʲ⁾)⁻¹ Σ G⁽ʲ⁾β⁽ʲ⁾` over `members`.
///
/// Equals OLS on the row-stacked raw data of the members.
pub fn aggregate_cube(summaries: &[DomainSummary], members: &[usize]) -> Result<PooledFit> {
    if members.is_empty() {
        return Err(Error::InvalidInput("aggregation over an empty member set".into()));
    }
    let by_id: HashMap<usize, &DomainSummary> = summaries.iter().map(|s| (s.id, s)).collect();
    let first = by_id.get(&members[0]).ok_or(Error::UnknownId(members[0]))?;
    let p = first.p();
    let mut gram = DMatrix::zeros(p, p);
    let mut moment = DVector::zeros(p);
    let mut n = 0;
    let mut seen = Vec::with_capacity(members.len());
    for &id in members {
        if seen.contains(&id) {
            return Err(Error::InvalidInput(format!("domain {id} listed twice")));
        }
        seen.push(id);
        let s = by_id.get(&id).ok_or(Error::UnknownId(id))?;
        if s.p() != p || s.gram.nrows() != p {
            return Err(Error::DimensionMismatch(format!("summary {id} has dimension {}, expected {p}", s.p())));
        }
        gram += &s.gram;
        moment += &s.gram * &s.beta;
        n += s.n;
    }
    let factor = SpdFactor::new(&gram, Subject::Matrix)?;
    // A single member is its own pooled fit; skip the round trip through G.
    let beta = if members.len() == 1 { first.beta.clone() } else { factor.solve(&moment) };
    Ok(PooledFit { n, gram, beta, factor })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_design_interpolates() {
        let d = DomainData::new(0, DMatrix::identity(2, 2), DVector::from_vec(vec![1.0, 2.0])).unwrap();
        let s = ols_fit(&d).unwrap();
        assert_eq!(s.beta, DVector::from_vec(vec![1.0, 2.0]));
        assert_eq!(s.gram, DMatrix::identity(2, 2));
        assert_eq!(s.sigma2, 0.0);
        assert_eq!(s.n, 2);
    }

    #[test]
    fn duplicated_column_is_rank_deficient() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 1.0, 2.0, 2.0, 3.0, 3.0, -1.0, -1.0]);
        let d = DomainData::new(7, x, DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0])).unwrap();
        match ols_fit(&d) {
            Err(Error::RankDeficient { subject, .. }) => assert_eq!(subject, Subject::Domain(7)),
            other => panic!("expected RankDeficient, got {other:?}"),
        }
    }

    #[test]
    fn fewer_rows_than_columns_is_rank_deficient() {
        let d = DomainData::new(0, DMatrix::from_element(2, 3, 1.0), DVector::zeros(2)).unwrap();
        assert!(matches!(ols_fit(&d), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn ragged_rows_are_a_dimension_mismatch() {
        let rows = vec![vec![1.0, 2.0], vec![3.0]];
        assert!(matches!(DomainData::from_rows(0, &rows, vec![1.0, 2.0]), Err(Error::DimensionMismatch(_))));
        let x = DMatrix::zeros(3, 2);
        assert!(matches!(DomainData::new(0, x, DVector::zeros(2)), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn residual_variance_of_exact_fit_and_constant_offset() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 2.0, -1.0]);
        let beta = DVector::from_vec(vec![0.5, -2.0]);
        let y = &x * &beta;
        let d = DomainData::new(0, x.clone(), y.clone()).unwrap();
        assert_eq!(residual_variance(&d, &beta).unwrap(), 0.0);
        let shifted = DomainData::new(0, x, y.add_scalar(1.0)).unwrap();
        assert!((residual_variance(&shifted, &beta).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(residual_variance(&d, &DVector::zeros(3)), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn cube_over_target_alone_is_exact() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.3, -0.2, 1.0, 0.7, 0.7]);
        let d = DomainData::new(0, x, DVector::from_vec(vec![1.0, -1.0, 0.5])).unwrap();
        let s = ols_fit(&d).unwrap();
        let pooled = aggregate_cube(std::slice::from_ref(&s), &[0]).unwrap();
        assert_eq!(pooled.gram, s.gram);
        assert!((&pooled.beta - &s.beta).amax() <= 1e-14 * s.beta.amax());
        assert_eq!(pooled.n, 3);
    }

    #[test]
    fn identical_domains_aggregate_to_their_common_fit() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.3, -0.2, 1.0, 0.7, 0.7]);
        let y = DVector::from_vec(vec![1.0, -1.0, 0.5]);
        let a = ols_fit(&DomainData::new(0, x.clone(), y.clone()).unwrap()).unwrap();
        let b = ols_fit(&DomainData::new(1, x, y).unwrap()).unwrap();
        let pooled = aggregate_cube(&[a.clone(), b], &[0, 1]).unwrap();
        assert!((&pooled.beta - &a.beta).amax() <= 1e-13);
    }

    #[test]
    fn cube_rejects_unknown_and_empty_members() {
        let d = DomainData::new(0, DMatrix::identity(2, 2), DVector::from_vec(vec![1.0, 2.0])).unwrap();
        let s = ols_fit(&d).unwrap();
        assert!(matches!(aggregate_cube(std::slice::from_ref(&s), &[0, 4]), Err(Error::UnknownId(4))));
        assert!(aggregate_cube(&[s], &[]).is_err());
    }
}
