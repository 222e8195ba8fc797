//! Transfer learning for multi-source linear regression by model averaging
//! over nested candidate domains.
//!
//! The pipeline is:
//!
//! 1. [`estimation::ols_fit`] every domain, producing shareable
//!    [`DomainSummary`] statistics;
//! 2. rank sources by their contrast to the target and pool them into
//!    nested [`CandidateDomain`]s ([`candidates`]);
//! 3. choose simplex weights over the candidates with Trans-MAI,
//!    Trans-MACs or Trans-MAC ([`averaging`]).
//!
//! [`simlab`] reproduces the simulation experiments and [`inference`]
//! computes the standardized statistic of the normality result.

pub mod averaging;
pub mod candidates;
pub mod error;
pub mod estimation;
pub mod inference;
pub mod linalg;
pub mod methods;
pub mod simlab;

pub use averaging::{CriterionConfig, FitResult, SimplexQP, SimplexWeights};
pub use candidates::{CandidateDomain, ContrastTable};
pub use error::{Error, Result, Subject};
pub use estimation::{DomainData, DomainSummary};
pub use inference::NormalityReport;
pub use methods::{fit_methods, prepare, Method, MethodFit, MethodOptions, Prepared};

pub use nalgebra::{DMatrix, DVector};
