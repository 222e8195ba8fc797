//! Simulation lab: data generators, baselines, metrics, the replication
//! engine and the convergence/normality/holdout studies.

pub mod baselines;
pub mod config;
pub mod generate;
pub mod metrics;
pub mod replicate;
pub mod rng;
pub mod studies;

pub use baselines::{baseline_ols_pool, baseline_ols_tar};
pub use config::{CovMode, DeltaMode, Experiment, ExperimentConfig, NoiseSchedule};
pub use generate::{combination_residual, combination_target, gen_covariance, gen_experiment, gen_test_design, SimInstance};
pub use replicate::{run_replications, MethodMetrics, MethodSummary, ReplicationMetrics, ReplicationTable, RunOptions};
pub use studies::{
    fit_power_law_log, holdout_study, normality_study, power_law_start, refine_power_law, weight_convergence_study, CurveFit,
    HoldoutOptions, HoldoutRow, HoldoutStudy, NormalityStudy, PowerLaw, WeightConvergence, WeightPoint,
};
