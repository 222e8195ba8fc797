//! Replication engine: generate, fit every method, score, summarize.

use std::collections::BTreeMap;

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::generate::{gen_experiment, gen_test_design};
use super::metrics::{mse, mspe, scale_against_best, Band};
use crate::averaging::SimplexWeights;
use crate::error::{Error, Result};
use crate::methods::{fit_methods, prepare, Method, MethodOptions};

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub summaries_only: bool,
    pub m_s_override: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct MethodMetrics {
    pub method: Method,
    pub mse: f64,
    pub mspe: f64,
    pub weights: Option<SimplexWeights>,
    pub m_s_hat: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct ReplicationMetrics {
    pub replicate: usize,
    pub methods: Vec<MethodMetrics>,
    /// Methods that failed in this replication, with the reason.
    pub failed: Vec<(Method, String)>,
}

#[derive(Debug, Clone)]
pub struct MethodSummary {
    pub method: Method,
    pub completed: usize,
    pub failed: usize,
    pub mse: Band,
    pub mspe: Band,
}

#[derive(Debug, Clone)]
pub struct ReplicationTable {
    pub config: ExperimentConfig,
    pub methods: Vec<Method>,
    /// Completed replications in replicate order.
    pub rows: Vec<ReplicationMetrics>,
    /// Replications that failed as a whole (generation or candidate
    /// construction), with the reason.
    pub failures: Vec<(usize, String)>,
}

impl ReplicationTable {
    /// Mean and 95% band per method over the replications where the method
    /// completed.
    pub fn summarize(&self) -> Vec<MethodSummary> {
        self.methods
            .iter()
            .map(|&method| {
                let done: Vec<&MethodMetrics> = self
                    .rows
                    .iter()
                    .filter_map(|r| r.methods.iter().find(|m| m.method == method))
                    .collect();
                let mse: Vec<f64> = done.iter().map(|m| m.mse).collect();
                let mspe: Vec<f64> = done.iter().map(|m| m.mspe).collect();
                MethodSummary {
                    method,
                    completed: done.len(),
                    failed: self.config.replications - done.len(),
                    mse: Band::of(&mse),
                    mspe: Band::of(&mspe),
                }
            })
            .collect()
    }

    /// Per replication, each method's MSPE minus the best MSPE among the
    /// methods that completed in that replication.
    pub fn scaled_mspe(&self) -> Vec<(usize, Vec<(Method, f64)>)> {
        self.rows
            .iter()
            .map(|r| {
                let raw: Vec<(Method, f64)> = r.methods.iter().map(|m| (m.method, m.mspe)).collect();
                (r.replicate, scale_against_best(&raw))
            })
            .collect()
    }

    /// Count of failures per method, whole-replication failures included.
    pub fn failure_counts(&self) -> BTreeMap<Method, usize> {
        self.summarize().into_iter().map(|s| (s.method, s.failed)).collect()
    }
}

/// One replication: returns `Err` only when the whole replication fails.
pub fn run_one(
    cfg: &ExperimentConfig,
    methods: &[Method],
    opts: &RunOptions,
    replicate: usize,
) -> Result<ReplicationMetrics> {
    let inst = gen_experiment(cfg, replicate as u64)?;
    let prepared = prepare(&inst.domains)?;
    let x_test = gen_test_design(cfg, replicate as u64)?;
    let method_opts = MethodOptions {
        criterion: cfg.criterion()?,
        m_s_override: opts.m_s_override,
        summaries_only: opts.summaries_only,
    };
    let beta0 = inst.beta0();
    let mut row = ReplicationMetrics { replicate, methods: Vec::new(), failed: Vec::new() };
    for (method, fit) in fit_methods(&inst.domains, &prepared, methods, &method_opts) {
        match fit {
            Ok(fit) => row.methods.push(MethodMetrics {
                method,
                mse: mse(&fit.beta, beta0),
                mspe: mspe(&x_test, &fit.beta, beta0),
                weights: fit.weights,
                m_s_hat: fit.m_s_hat,
            }),
            Err(e) => row.failed.push((method, e.to_string())),
        }
    }
    Ok(row)
}

/// Run all `B` replications of `cfg` on the current rayon pool. Results are
/// reduced in replicate order, so output does not depend on scheduling.
pub fn run_replications(cfg: &ExperimentConfig, methods: &[Method], opts: &RunOptions) -> Result<ReplicationTable> {
    cfg.validate()?;
    if methods.is_empty() {
        return Err(Error::ConfigInvalid("no methods selected".into()));
    }
    let outcomes: Vec<Result<ReplicationMetrics>> = (0..cfg.replications)
        .into_par_iter()
        .map(|b| run_one(cfg, methods, opts, b))
        .collect();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (b, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(row) => rows.push(row),
            Err(e) => failures.push((b, e.to_string())),
        }
    }
    Ok(ReplicationTable { config: cfg.clone(), methods: methods.to_vec(), rows, failures })
}
