//! JSON run configuration.
//!
//! Simulation configs are flat objects with the field names of
//! [`ExperimentConfig`]. Every field is optional and falls back to the
//! experiment's defaults; `h`, `A_size`, `n0`, `n_m` and `p` also accept a
//! list, and the run sweeps their Cartesian product. Unknown keys are
//! rejected.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Deserialize;
use transma_core::simlab::{CovMode, DeltaMode, Experiment, ExperimentConfig, NoiseSchedule};

use crate::CliError;

/// A scalar or a list of values.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Sweep<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> Sweep<T> {
    pub fn values(&self) -> Vec<T> {
        match self {
            Sweep::One(v) => vec![v.clone()],
            Sweep::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub experiment: Option<Experiment>,
    #[serde(rename = "M")]
    pub num_sources: Option<usize>,
    pub p: Option<Sweep<usize>>,
    pub n0: Option<Sweep<usize>>,
    pub n_m: Option<Sweep<usize>>,
    #[serde(rename = "A_size")]
    pub informative: Option<Sweep<usize>>,
    pub h: Option<Sweep<f64>>,
    pub delta_mode: Option<DeltaMode>,
    pub sigma_target: Option<f64>,
    pub sigma_sources: Option<NoiseSchedule>,
    pub cov_mode: Option<CovMode>,
    pub target_cov_mode: Option<CovMode>,
    #[serde(rename = "B")]
    pub replications: Option<usize>,
    pub seed: Option<u64>,
    pub v: Option<f64>,
    pub phi: Option<f64>,
    pub n_test: Option<usize>,
    /// Weight-convergence study only.
    pub v_grid: Option<Vec<f64>>,
}

/// Sweep grids used when a config leaves them out.
struct Grids {
    p: Vec<usize>,
    n0: Vec<usize>,
    n_m: Vec<usize>,
    informative: Vec<usize>,
    h: Vec<f64>,
}

fn default_grids(base: &ExperimentConfig) -> Grids {
    let fixed = Grids {
        p: vec![base.p],
        n0: vec![base.n0],
        n_m: vec![base.n_m],
        informative: vec![base.informative],
        h: vec![base.h],
    };
    match base.experiment {
        Experiment::Exp1 | Experiment::Exp2 | Experiment::Exp3 | Experiment::Exp4 => Grids {
            informative: (0..=8).collect(),
            h: vec![0.0, 0.04, 0.08, 0.12],
            ..fixed
        },
        Experiment::Exp5 => Grids { p: vec![50, 80], n0: vec![150, 200, 250], n_m: vec![100, 150, 200], ..fixed },
        Experiment::WeightConv => Grids {
            n0: vec![
                12, 14, 16, 18, 20, 22, 24, 26, 28, 30, 32, 34, 36, 38, 40, 42, 46, 48, 50, 52, 54, 56, 60, 65, 70, 75, 80,
                85, 90, 95, 100,
            ],
            ..fixed
        },
        Experiment::Normality => fixed,
    }
}

pub const DEFAULT_V_GRID: [f64; 6] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5];

fn nonempty<T: Clone>(name: &str, sweep: &Option<Sweep<T>>, default: Vec<T>) -> Result<Vec<T>, CliError> {
    match sweep {
        None => Ok(default),
        Some(s) if s.values().is_empty() => Err(CliError::Config(format!("`{name}` list is empty"))),
        Some(s) => Ok(s.values()),
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

impl SimConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        read_json(path)
    }

    /// Experiment defaults with every scalar setting of this config applied.
    pub fn base(&self, fallback: Option<Experiment>) -> Result<ExperimentConfig, CliError> {
        let experiment = self
            .experiment
            .or(fallback)
            .ok_or_else(|| CliError::Config("`experiment` is required".into()))?;
        let mut cfg = ExperimentConfig::defaults(experiment);
        macro_rules! set {
            ($($field:ident),*) => {$(if let Some(v) = self.$field { cfg.$field = v; })*};
        }
        set!(num_sources, delta_mode, sigma_target, sigma_sources, cov_mode, target_cov_mode, replications, seed, v, n_test);
        if self.phi.is_some() {
            cfg.phi = self.phi;
        }
        Ok(cfg)
    }

    /// Every design point of the sweep, `A_size` varying fastest, then `h`,
    /// `n0`, `n_m` and `p`.
    pub fn points(&self, fallback: Option<Experiment>) -> Result<Vec<ExperimentConfig>, CliError> {
        let base = self.base(fallback)?;
        let d = default_grids(&base);
        let (ps, n0s, n_ms) = (nonempty("p", &self.p, d.p)?, nonempty("n0", &self.n0, d.n0)?, nonempty("n_m", &self.n_m, d.n_m)?);
        let (hs, sizes) = (nonempty("h", &self.h, d.h)?, nonempty("A_size", &self.informative, d.informative)?);
        let mut out = Vec::new();
        for &p in &ps {
            for &n_m in &n_ms {
                for &n0 in &n0s {
                    for &h in &hs {
                        for &informative in &sizes {
                            let cfg = ExperimentConfig { p, n_m, n0, h, informative, ..base.clone() };
                            cfg.validate()?;
                            out.push(cfg);
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// A single design point; lists are rejected.
    pub fn single(&self, fallback: Option<Experiment>) -> Result<ExperimentConfig, CliError> {
        let points = self.points(fallback)?;
        match points.as_slice() {
            [one] => Ok(one.clone()),
            _ => Err(CliError::Config(format!("expected one design point, the config describes {}", points.len()))),
        }
    }

    /// Base design and `(v grid, n0 grid)` of the weight-convergence study.
    /// `n_m` is tied to `n0` there and may not be set.
    pub fn weightconv(&self) -> Result<(ExperimentConfig, Vec<f64>, Vec<usize>), CliError> {
        if self.n_m.is_some() {
            return Err(CliError::Config("`n_m` is tied to `n0` in the weight-convergence study".into()));
        }
        let base = self.base(Some(Experiment::WeightConv))?;
        let n0s = nonempty("n0", &self.n0, default_grids(&base).n0)?;
        let fixed = SimConfig { n0: Some(Sweep::One(n0s[0])), v_grid: None, ..self.clone() };
        let base = fixed.single(Some(Experiment::WeightConv))?;
        let v_grid = self.v_grid.clone().unwrap_or_else(|| DEFAULT_V_GRID.to_vec());
        if v_grid.is_empty() {
            return Err(CliError::Config("`v_grid` is empty".into()));
        }
        Ok((base, v_grid, n0s))
    }
}

fn default_repeats() -> usize {
    500
}

fn default_train_fraction() -> f64 {
    0.7
}

/// Real-data run: one target file, any number of source files.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub target: PathBuf,
    pub sources: Vec<PathBuf>,
    /// Random train/test splits of the target; 0 skips the holdout study.
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    /// Center every domain and scale its covariates to unit variance.
    #[serde(default)]
    pub standardize: bool,
    /// Defaults to 0.5.
    pub v: Option<f64>,
    /// Defaults to `log n` of the (training) target.
    pub phi: Option<f64>,
    pub seed: Option<u64>,
}

impl FitConfig {
    /// Relative data paths are resolved against the config file's directory.
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let mut cfg: FitConfig = read_json(path)?;
        let dir = path.parent().unwrap_or(Path::new("."));
        cfg.target = dir.join(&cfg.target);
        cfg.sources = cfg.sources.iter().map(|s| dir.join(s)).collect();
        Ok(cfg)
    }
}

/// Post-processing of an existing `metrics.csv`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaledMspeConfig {
    pub metrics: PathBuf,
}

impl ScaledMspeConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let cfg: ScaledMspeConfig = read_json(path)?;
        let dir = path.parent().unwrap_or(Path::new("."));
        Ok(ScaledMspeConfig { metrics: dir.join(cfg.metrics) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<SimConfig, serde_json::Error> {
        serde_json::from_str(text)
    }

    #[test]
    fn exp1_defaults_sweep_h_and_informative_count() {
        let points = parse(r#"{"experiment": "Exp1"}"#).unwrap().points(None).unwrap();
        assert_eq!(points.len(), 4 * 9);
        assert_eq!((points[0].h, points[0].informative), (0.0, 0));
        assert_eq!((points[9].h, points[9].informative), (0.04, 0));
        assert!(points.iter().all(|c| c.num_sources == 10 && c.p == 20 && c.n0 == 100 && c.n_m == 200));
    }

    #[test]
    fn scalars_and_lists() {
        let cfg = parse(r#"{"experiment": "Exp2", "h": 0, "A_size": [1, 3], "n0": [50, 60], "B": 7, "sigma_sources": {"linear": 0.2}}"#)
            .unwrap();
        let points = cfg.points(None).unwrap();
        assert_eq!(points.len(), 4);
        assert_eq!(points.iter().map(|c| (c.n0, c.informative)).collect::<Vec<_>>(), [(50, 1), (50, 3), (60, 1), (60, 3)]);
        assert!(points.iter().all(|c| c.replications == 7 && c.sigma_sources == NoiseSchedule::Linear(0.2)));
    }

    #[test]
    fn strictness() {
        assert!(parse(r#"{"experiment": "Exp1", "tau": 1}"#).is_err());
        assert!(parse(r#"{"experiment": "Exp9"}"#).is_err());
        assert!(parse(r#"{"h": "big"}"#).is_err());
        assert!(matches!(parse("{}").unwrap().points(None), Err(CliError::Config(_))));
        assert!(matches!(parse(r#"{"experiment": "Exp1", "h": []}"#).unwrap().points(None), Err(CliError::Config(_))));
        assert!(matches!(parse(r#"{"experiment": "Exp1", "A_size": 11}"#).unwrap().points(None), Err(CliError::Config(_))));
        assert!(matches!(parse(r#"{"experiment": "Exp1"}"#).unwrap().single(None), Err(CliError::Config(_))));
        assert!(parse(r#"{"n_m": 30}"#).unwrap().weightconv().is_err());
    }

    #[test]
    fn weightconv_grid() {
        let (base, v, n0) = parse(r#"{"n0": [20, 40], "B": 5}"#).unwrap().weightconv().unwrap();
        assert_eq!(base.experiment, Experiment::WeightConv);
        assert_eq!((base.replications, base.p, base.num_sources, base.informative), (5, 10, 10, 3));
        assert_eq!(v, DEFAULT_V_GRID);
        assert_eq!(n0, [20, 40]);
    }
}
