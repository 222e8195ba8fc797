use serde::{Deserialize, Serialize};

use crate::averaging::CriterionConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Experiment {
    Exp1,
    Exp2,
    Exp3,
    Exp4,
    Exp5,
    WeightConv,
    Normality,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Exp1 => "Exp1",
            Experiment::Exp2 => "Exp2",
            Experiment::Exp3 => "Exp3",
            Experiment::Exp4 => "Exp4",
            Experiment::Exp5 => "Exp5",
            Experiment::WeightConv => "WeightConv",
            Experiment::Normality => "Normality",
        }
    }

    /// Whether the non-informative sources are built so that a convex
    /// combination of candidate parameters reproduces the target.
    pub fn is_combinatorial(self) -> bool {
        matches!(self, Experiment::Exp2 | Experiment::Exp3 | Experiment::Exp4 | Experiment::WeightConv)
    }
}

/// How informative contrasts `δ⁽ᵐ⁾` are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeltaMode {
    /// `v` random coordinates drawn from `N(0, h²)`, the rest zero.
    Sparse(usize),
    /// Gaussian direction rescaled to norm exactly `h`.
    Dense,
}

/// Noise standard deviation of source `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseSchedule {
    Constant(f64),
    /// `σ_m = step·m`
    Linear(f64),
    /// `σ_m = base^(m−3)`
    Geometric(f64),
}

impl NoiseSchedule {
    pub fn sigma(self, m: usize) -> f64 {
        match self {
            NoiseSchedule::Constant(s) => s,
            NoiseSchedule::Linear(step) => step * m as f64,
            NoiseSchedule::Geometric(base) => base.powi(m as i32 - 3),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CovMode {
    Identity,
    /// Source `m`: Toeplitz with first row `(1, 1/(m+1) ×(2m−1), 0, …)`.
    #[serde(rename = "toeplitz")]
    ToeplitzBand,
    /// `ρ^|i−j|`
    Ar(f64),
}

/// One simulation design point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(rename = "M")]
    pub num_sources: usize,
    pub p: usize,
    pub n0: usize,
    pub n_m: usize,
    #[serde(rename = "A_size")]
    pub informative: usize,
    pub h: f64,
    pub delta_mode: DeltaMode,
    pub sigma_target: f64,
    pub sigma_sources: NoiseSchedule,
    /// Covariance of the source covariates.
    pub cov_mode: CovMode,
    /// Covariance of the target covariates (and of the test draws).
    pub target_cov_mode: CovMode,
    #[serde(rename = "B")]
    pub replications: usize,
    pub seed: u64,
    pub v: f64,
    /// Defaults to `log n₀`.
    pub phi: Option<f64>,
    pub n_test: usize,
}

impl ExperimentConfig {
    /// Baseline settings of each experiment.
    pub fn defaults(experiment: Experiment) -> Self {
        let base = ExperimentConfig {
            experiment,
            num_sources: 10,
            p: 20,
            n0: 100,
            n_m: 200,
            informative: 4,
            h: 0.0,
            delta_mode: DeltaMode::Dense,
            sigma_target: 1.0,
            sigma_sources: NoiseSchedule::Constant(1.0),
            cov_mode: CovMode::Identity,
            target_cov_mode: CovMode::Identity,
            replications: 500,
            seed: 20240101,
            v: 0.5,
            phi: None,
            n_test: 10_000,
        };
        match experiment {
            Experiment::Exp1 => base,
            Experiment::Exp2 => ExperimentConfig {
                sigma_target: 0.5,
                sigma_sources: NoiseSchedule::Constant(0.5),
                ..base
            },
            Experiment::Exp3 => ExperimentConfig { cov_mode: CovMode::ToeplitzBand, ..base },
            Experiment::Exp4 => ExperimentConfig {
                cov_mode: CovMode::ToeplitzBand,
                target_cov_mode: CovMode::Ar(0.5),
                sigma_sources: NoiseSchedule::Linear(0.2),
                ..base
            },
            Experiment::Exp5 => ExperimentConfig { p: 50, n0: 150, n_m: 100, h: 0.12, ..base },
            Experiment::WeightConv => ExperimentConfig {
                p: 10,
                n0: 20,
                n_m: 20,
                informative: 3,
                sigma_target: 0.5,
                sigma_sources: NoiseSchedule::Constant(0.5),
                replications: 1000,
                ..base
            },
            Experiment::Normality => ExperimentConfig { n0: 200, informative: 2, ..base },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::ConfigInvalid(msg));
        if self.num_sources == 0 || self.p == 0 || self.n0 == 0 || self.n_m == 0 {
            return bad("M, p, n0 and n_m must be positive".into());
        }
        if self.replications == 0 {
            return bad("B must be positive".into());
        }
        if self.informative > self.num_sources {
            return bad(format!("A_size = {} exceeds M = {}", self.informative, self.num_sources));
        }
        if self.experiment.is_combinatorial() && self.informative == self.num_sources {
            return bad("combinatorial designs need at least one non-informative source".into());
        }
        if !(self.h >= 0.0 && self.h.is_finite()) {
            return bad(format!("h = {} must be nonnegative", self.h));
        }
        if let DeltaMode::Sparse(k) = self.delta_mode {
            if k == 0 || k > self.p {
                return bad(format!("sparse contrast support {k} must be in 1..=p"));
            }
        }
        if !(self.sigma_target >= 0.0) {
            return bad("sigma_target must be nonnegative".into());
        }
        if (1..=self.num_sources).any(|m| !(self.sigma_sources.sigma(m) >= 0.0 && self.sigma_sources.sigma(m).is_finite())) {
            return bad("source noise schedule yields an invalid standard deviation".into());
        }
        for mode in [self.cov_mode, self.target_cov_mode] {
            if let CovMode::Ar(r) = mode {
                if !(r.abs() < 1.0) {
                    return bad(format!("AR coefficient {r} must lie in (-1, 1)"));
                }
            }
        }
        if self.n_test == 0 {
            return bad("n_test must be positive".into());
        }
        self.criterion().map(|_| ())
    }

    pub fn criterion(&self) -> Result<CriterionConfig> {
        CriterionConfig::new(self.v, self.phi.unwrap_or_else(|| (self.n0 as f64).ln()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        for e in [
            Experiment::Exp1,
            Experiment::Exp2,
            Experiment::Exp3,
            Experiment::Exp4,
            Experiment::Exp5,
            Experiment::WeightConv,
            Experiment::Normality,
        ] {
            ExperimentConfig::defaults(e).validate().unwrap();
        }
    }

    #[test]
    fn schedules() {
        assert_eq!(NoiseSchedule::Linear(0.2).sigma(5), 1.0);
        assert!((NoiseSchedule::Geometric(1.2).sigma(3) - 1.0).abs() < 1e-15);
        assert!((NoiseSchedule::Geometric(1.2).sigma(1) - 1.0 / 1.44).abs() < 1e-15);
    }

    #[test]
    fn json_shape_is_flat_and_strict() {
        let cfg = ExperimentConfig::defaults(Experiment::Exp4);
        let json = serde_json::to_value(&cfg).unwrap();
        assert_eq!(json["M"], 10);
        assert_eq!(json["A_size"], 4);
        assert_eq!(json["sigma_sources"]["linear"], 0.2);
        assert_eq!(json["target_cov_mode"]["ar"], 0.5);
        let mut obj = json.as_object().unwrap().clone();
        obj.insert("bogus".into(), 1.into());
        assert!(serde_json::from_value::<ExperimentConfig>(obj.into()).is_err());
    }

    #[test]
    fn invalid_configs() {
        let mut c = ExperimentConfig::defaults(Experiment::Exp2);
        c.informative = 10;
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::defaults(Experiment::Exp1);
        c.h = -1.0;
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::defaults(Experiment::Exp1);
        c.v = 1.5;
        assert!(c.validate().is_err());
    }
}
