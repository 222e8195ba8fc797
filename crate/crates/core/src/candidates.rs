//! Contrast norms and the nested candidate-domain sequence.
//!
//! Sources are ranked by `‖β̂⁽ᵐ⁾ − β̂⁽⁰⁾‖`; candidate `m` pools the target
//! with the `m` closest sources, so candidate `m − 1` is always a strict
//! subset of candidate `m`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result, Subject};
use crate::estimation::{aggregate_cube, DomainSummary};
use crate::linalg::SpdFactor;

#[derive(Debug, Clone, PartialEq)]
pub struct ContrastTable {
    /// `norms[id] = ‖β̂⁽ⁱᵈ⁾ − β̂⁽⁰⁾‖`, with `norms[0] = 0`.
    pub norms: Vec<f64>,
    /// Domain ids sorted by ascending norm, ties by smaller id.
    pub rank: Vec<usize>,
}

impl ContrastTable {
    pub fn num_sources(&self) -> usize {
        self.norms.len() - 1
    }
}

/// Index summaries by id, requiring the ids to be exactly `0..=M`.
pub(crate) fn index_by_id(summaries: &[DomainSummary]) -> Result<Vec<&DomainSummary>> {
    if !summaries.iter().any(|s| s.id == 0) {
        return Err(Error::MissingTarget);
    }
    let mut slots: Vec<Option<&DomainSummary>> = vec![None; summaries.len()];
    for s in summaries {
        match slots.get_mut(s.id) {
            Some(slot @ None) => *slot = Some(s),
            Some(Some(_)) => return Err(Error::InvalidInput(format!("duplicate summary for domain {}", s.id))),
            None => return Err(Error::UnknownId(s.id)),
        }
    }
    slots
        .into_iter()
        .enumerate()
        .map(|(id, s)| s.ok_or(Error::UnknownId(id)))
        .collect()
}

pub fn contrast_norms(summaries: &[DomainSummary]) -> Result<ContrastTable> {
    let by_id = index_by_id(summaries)?;
    let target = &by_id[0].beta;
    let mut norms = Vec::with_capacity(by_id.len());
    norms.push(0.0);
    for s in &by_id[1..] {
        if s.beta.len() != target.len() {
            return Err(Error::DimensionMismatch(format!(
                "summary {} has {} coefficients, target has {}",
                s.id,
                s.beta.len(),
                target.len()
            )));
        }
        norms.push((&s.beta - target).norm());
    }
    let mut rank: Vec<usize> = (0..norms.len()).collect();
    rank.sort_by(|&a, &b| norms[a].total_cmp(&norms[b]).then(a.cmp(&b)));
    Ok(ContrastTable { norms, rank })
}

/// One nested pooled domain and its aggregated estimator.
#[derive(Debug, Clone)]
pub struct CandidateDomain {
    pub index: usize,
    /// Member domain ids in the order they entered.
    pub members: Vec<usize>,
    /// Total sample count over the members.
    pub n: usize,
    /// Aggregated Gram matrix `Σ G⁽ʲ⁾`.
    pub gram: DMatrix<f64>,
    pub beta: DVector<f64>,
    pub(crate) factor: SpdFactor,
}

impl CandidateDomain {
    /// `tr(G⁻¹ B)` with this candidate's aggregated Gram matrix.
    pub fn trace_solve(&self, b: &DMatrix<f64>) -> f64 {
        self.factor.trace_solve(b)
    }

    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        self.factor.solve(rhs)
    }

    pub fn contains(&self, id: usize) -> bool {
        self.members.contains(&id)
    }
}

pub fn build_candidates(summaries: &[DomainSummary], table: &ContrastTable) -> Result<Vec<CandidateDomain>> {
    if table.rank.first() != Some(&0) {
        return Err(Error::InvalidInput("contrast ranking must start with the target".into()));
    }
    let mut sorted = table.rank.clone();
    sorted.sort_unstable();
    if sorted.iter().enumerate().any(|(i, &id)| i != id) || sorted.len() != table.norms.len() {
        return Err(Error::InvalidInput("contrast ranking is not a permutation of the domain ids".into()));
    }
    (0..table.rank.len())
        .map(|m| {
            let members = table.rank[..=m].to_vec();
            let pooled = aggregate_cube(summaries, &members).map_err(|e| match e {
                Error::RankDeficient { rcond, .. } => Error::RankDeficient { subject: Subject::Candidate(m), rcond },
                other => other,
            })?;
            Ok(CandidateDomain {
                index: m,
                members,
                n: pooled.n,
                gram: pooled.gram,
                beta: pooled.beta,
                factor: pooled.factor,
            })
        })
        .collect()
}
