//! Command execution. All computation finishes before any file is written,
//! and tables are written in a fixed order from a single thread.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use transma_core::methods::{fit_methods, prepare, Method, MethodOptions};
use transma_core::simlab::metrics::{scale_against_best, Band};
use transma_core::simlab::studies::{HISTOGRAM_BINS, HISTOGRAM_RANGE};
use transma_core::simlab::{
    holdout_study, normality_study, run_replications, weight_convergence_study, Experiment, ExperimentConfig,
    HoldoutOptions, ReplicationTable, RunOptions,
};
use transma_core::{CriterionConfig, DomainData};

use crate::config::{FitConfig, ScaledMspeConfig, SimConfig};
use crate::ingest::{ingest_csv, standardize, IngestError};
use crate::table::{Cell, Table};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Fit real data and score methods on repeated target holdout splits.
    Fit,
    Simulate,
    WeightConv,
    Normality,
    /// Scaled MSPE of an existing metrics table.
    ScaledMspe,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone)]
pub struct RunManifest {
    pub command: Command,
    pub config_path: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub methods: Vec<Method>,
    pub format: Format,
    /// Overrides the seed of the config file.
    pub seed: Option<u64>,
    /// Worker threads; `None` or 0 uses all cores.
    pub threads: Option<usize>,
    pub summaries_only: bool,
}

impl RunManifest {
    pub fn new(command: Command, config_path: Option<PathBuf>, output_dir: PathBuf) -> Self {
        RunManifest {
            command,
            config_path,
            output_dir,
            methods: Method::ALL.to_vec(),
            format: Format::Csv,
            seed: None,
            threads: None,
            summaries_only: false,
        }
    }

    fn config(&self) -> Result<&Path, CliError> {
        self.config_path.as_deref().ok_or_else(|| CliError::Config("--config is required for this command".into()))
    }

    /// Requested methods without duplicates, in request order.
    fn methods(&self) -> Result<Vec<Method>, CliError> {
        let mut out: Vec<Method> = Vec::new();
        for &m in &self.methods {
            if !out.contains(&m) {
                out.push(m);
            }
        }
        if out.is_empty() {
            return Err(CliError::Config("no methods selected".into()));
        }
        Ok(out)
    }
}

/// Tables produced by a command, plus failures that make the run count as a
/// numerical failure (a requested method that never completed).
struct Output {
    tables: Vec<Table>,
    problems: Vec<String>,
}

/// Run the command and write its tables. Returns the written tables.
pub fn execute(manifest: &RunManifest) -> Result<Vec<Table>, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(manifest.threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let output = pool.install(|| match manifest.command {
        Command::Simulate => simulate(manifest),
        Command::Fit => fit(manifest),
        Command::WeightConv => weightconv(manifest),
        Command::Normality => normality(manifest),
        Command::ScaledMspe => scaled_mspe(manifest),
    })?;
    std::fs::create_dir_all(&manifest.output_dir)
        .map_err(|e| CliError::Io(format!("{}: {e}", manifest.output_dir.display())))?;
    for table in &output.tables {
        table.write(&manifest.output_dir, manifest.format == Format::Json)?;
    }
    if !output.problems.is_empty() {
        return Err(CliError::Numerical(output.problems.join("; ")));
    }
    Ok(output.tables)
}

/// Exit code of the run: 0 on success, 2 on configuration or input errors,
/// 3 on numerical failure. Errors are reported on standard error.
pub fn run(manifest: &RunManifest) -> i32 {
    match execute(manifest) {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("transma: {e}");
            e.exit_code()
        }
    }
}

fn sim_config(manifest: &RunManifest, required: bool) -> Result<SimConfig, CliError> {
    let cfg = match &manifest.config_path {
        Some(path) => SimConfig::from_path(path)?,
        None if !required => SimConfig::default(),
        None => return Err(CliError::Config("--config is required for this command".into())),
    };
    if cfg.v_grid.is_some() && manifest.command != Command::WeightConv {
        return Err(CliError::Config("`v_grid` only applies to weightconv".into()));
    }
    Ok(cfg)
}

fn reseed(cfg: &mut ExperimentConfig, seed: Option<u64>) {
    if let Some(s) = seed {
        cfg.seed = s;
    }
}

fn band_cells(b: Band) -> [Cell; 3] {
    [b.mean.into(), b.lo.into(), b.hi.into()]
}

fn weight_columns(k: usize) -> impl Iterator<Item = String> {
    (0..k).map(|i| format!("w_{i}"))
}

fn simulate(manifest: &RunManifest) -> Result<Output, CliError> {
    let mut points = sim_config(manifest, true)?.points(None)?;
    let methods = manifest.methods()?;
    points.iter_mut().for_each(|c| reseed(c, manifest.seed));
    let opts = RunOptions { summaries_only: manifest.summaries_only, m_s_override: None };
    let runs: Vec<ReplicationTable> =
        points.iter().map(|c| run_replications(c, &methods, &opts)).collect::<Result<_, _>>()?;
    Ok(simulation_tables(&runs))
}

fn simulation_tables(runs: &[ReplicationTable]) -> Output {
    let k = runs[0].config.num_sources + 1;
    let mut summary = Table::new(
        "summary",
        [
            "experiment", "method", "h", "A_size", "n0", "mean_mse", "mse_lo", "mse_hi", "mean_mspe", "mspe_lo", "mspe_hi",
            "p", "n_m", "completed", "failed",
        ],
    );
    let mut metrics = Table::new("metrics", ["point", "replicate", "method", "mse", "mspe"]);
    let mut weights = Table::new(
        "weights",
        ["point", "replicate", "method"].into_iter().map(String::from).chain(weight_columns(k)).chain(["m_s_hat".into()]),
    );
    let mut failures = Table::new("failures", ["point", "replicate", "method", "reason"]);
    let mut problems = Vec::new();

    for (point, run) in runs.iter().enumerate() {
        let c = &run.config;
        for s in run.summarize() {
            let mut row = vec![c.experiment.name().into(), s.method.name().into(), c.h.into(), c.informative.into(), c.n0.into()];
            row.extend(band_cells(s.mse));
            row.extend(band_cells(s.mspe));
            row.extend([c.p.into(), c.n_m.into(), s.completed.into(), s.failed.into()]);
            summary.push(row);
            if s.completed == 0 {
                problems.push(format!("{} completed no replications at design point {point}", s.method));
            }
        }
        for rep in &run.rows {
            for m in &rep.methods {
                metrics.push(vec![point.into(), rep.replicate.into(), m.method.name().into(), m.mse.into(), m.mspe.into()]);
                if let Some(w) = &m.weights {
                    let mut row = vec![point.into(), rep.replicate.into(), m.method.name().into()];
                    row.extend(w.values().iter().map(|&v| Cell::from(v)));
                    row.push(m.m_s_hat.into());
                    weights.push(row);
                }
            }
            for (method, reason) in &rep.failed {
                failures.push(vec![point.into(), rep.replicate.into(), method.name().into(), reason.as_str().into()]);
            }
        }
        for (b, reason) in &run.failures {
            failures.push(vec![point.into(), (*b).into(), Cell::Empty, reason.as_str().into()]);
        }
    }
    Output { tables: vec![summary, metrics, weights, failures], problems }
}

fn load_domains(cfg: &FitConfig) -> Result<Vec<DomainData>, CliError> {
    let mut domains = vec![ingest_csv(&cfg.target, 0)?];
    for (i, path) in cfg.sources.iter().enumerate() {
        domains.push(ingest_csv(path, i + 1)?);
    }
    if cfg.standardize {
        domains = domains.iter().map(standardize).collect::<Result<_, _>>()?;
    }
    Ok(domains)
}

fn criterion(v: Option<f64>, phi: Option<f64>, n: usize) -> Result<CriterionConfig, CliError> {
    Ok(CriterionConfig::new(v.unwrap_or(0.5), phi.unwrap_or_else(|| (n as f64).ln()))?)
}

fn fit(manifest: &RunManifest) -> Result<Output, CliError> {
    let cfg = FitConfig::from_path(manifest.config()?)?;
    let methods = manifest.methods()?;
    let domains = load_domains(&cfg)?;
    let n0 = domains[0].n();
    let (p, k) = (domains[0].p(), domains.len());
    let full_criterion = criterion(cfg.v, cfg.phi, n0)?;

    let mut coefficients = Table::new(
        "coefficients",
        ["method".to_string(), "m_s_hat".to_string()].into_iter().chain((1..=p).map(|j| format!("beta_{j}"))),
    );
    let mut weights =
        Table::new("weights", std::iter::once("method".to_string()).chain(weight_columns(k)).chain(["m_s_hat".into()]));
    let mut failures = Table::new("failures", ["split", "method", "reason"]);
    let mut problems = Vec::new();

    let prepared = prepare(&domains)?;
    let opts = MethodOptions { criterion: full_criterion, m_s_override: None, summaries_only: manifest.summaries_only };
    for (method, result) in fit_methods(&domains, &prepared, &methods, &opts) {
        match result {
            Ok(f) => {
                let mut row = vec![method.name().into(), f.m_s_hat.into()];
                row.extend(f.beta.iter().map(|&b| Cell::from(b)));
                coefficients.push(row);
                if let Some(w) = &f.weights {
                    let mut row = vec![method.name().into()];
                    row.extend(w.values().iter().map(|&v| Cell::from(v)));
                    row.push(f.m_s_hat.into());
                    weights.push(row);
                }
            }
            Err(e) => {
                problems.push(format!("{method} failed on the full data: {e}"));
                failures.push(vec!["full".into(), method.name().into(), e.to_string().as_str().into()]);
            }
        }
    }
    let mut tables = vec![coefficients, weights];

    if cfg.repeats > 0 {
        let n_train = ((n0 as f64) * cfg.train_fraction).round() as usize;
        let holdout = holdout_study(
            &domains,
            &methods,
            &HoldoutOptions {
                repeats: cfg.repeats,
                train_fraction: cfg.train_fraction,
                seed: manifest.seed.or(cfg.seed).unwrap_or(ExperimentConfig::defaults(Experiment::Exp1).seed),
                criterion: match (cfg.v, cfg.phi) {
                    (None, None) => None,
                    (v, phi) => Some(criterion(v, phi, n_train)?),
                },
                summaries_only: manifest.summaries_only,
            },
        )?;
        let mut metrics = Table::new("metrics", ["replicate", "method", "mspe", "scaled_mspe"]);
        for r in &holdout.rows {
            metrics.push(vec![r.replicate.into(), r.method.name().into(), r.mspe.into(), r.scaled_mspe.into()]);
        }
        let mut summary = Table::new(
            "summary",
            [
                "method", "mean_mspe", "mspe_lo", "mspe_hi", "mean_scaled_mspe", "scaled_mspe_lo", "scaled_mspe_hi",
                "completed", "failed",
            ],
        );
        for &method in &methods {
            let rows: Vec<_> = holdout.rows.iter().filter(|r| r.method == method).collect();
            let raw: Vec<f64> = rows.iter().map(|r| r.mspe).collect();
            let scaled: Vec<f64> = rows.iter().map(|r| r.scaled_mspe).collect();
            let mut row = vec![method.name().into()];
            row.extend(band_cells(Band::of(&raw)));
            row.extend(band_cells(Band::of(&scaled)));
            row.extend([rows.len().into(), (cfg.repeats - rows.len()).into()]);
            summary.push(row);
            if rows.is_empty() {
                problems.push(format!("{method} completed no holdout splits"));
            }
        }
        for (b, method, reason) in &holdout.failures {
            failures.push(vec![Cell::Str(b.to_string()), method.name().into(), reason.as_str().into()]);
        }
        tables.extend([summary, metrics]);
    }
    tables.push(failures);
    Ok(Output { tables, problems })
}

fn normality(manifest: &RunManifest) -> Result<Output, CliError> {
    let mut cfg = sim_config(manifest, false)?.single(Some(Experiment::Normality))?;
    reseed(&mut cfg, manifest.seed);
    let study = normality_study(&cfg)?;
    let mut values = Table::new("normality", ["replicate", "T"]);
    for &(b, t) in &study.statistics {
        values.push(vec![b.into(), t.into()]);
    }
    let mut summary = Table::new("normality_summary", ["mean", "std", "completed", "failed"]);
    summary.push(vec![study.mean.into(), study.std.into(), study.statistics.len().into(), study.failures.len().into()]);
    let mut histogram = Table::new("normality_histogram", ["bin_lo", "bin_hi", "count"]);
    let (lo, hi) = HISTOGRAM_RANGE;
    let width = (hi - lo) / HISTOGRAM_BINS as f64;
    for (i, &count) in study.histogram.iter().enumerate() {
        histogram.push(vec![(lo + i as f64 * width).into(), (lo + (i + 1) as f64 * width).into(), count.into()]);
    }
    let mut failures = Table::new("failures", ["replicate", "reason"]);
    for (b, reason) in &study.failures {
        failures.push(vec![(*b).into(), reason.as_str().into()]);
    }
    Ok(Output { tables: vec![values, summary, histogram, failures], problems: Vec::new() })
}

fn weightconv(manifest: &RunManifest) -> Result<Output, CliError> {
    let (mut base, v_grid, n0_grid) = sim_config(manifest, false)?.weightconv()?;
    reseed(&mut base, manifest.seed);
    let study = weight_convergence_study(&base, &v_grid, &n0_grid)?;
    let mut points = Table::new("weightconv", ["v", "n0", "mean_weight", "completed"]);
    let mut problems = Vec::new();
    for pt in &study.points {
        points.push(vec![pt.v.into(), pt.n0.into(), pt.mean_weight.into(), pt.completed.into()]);
        if pt.completed == 0 {
            problems.push(format!("no replication completed at v = {}, n0 = {}", pt.v, pt.n0));
        }
    }
    // log_*: log–log least squares; c, a: least squares on the original scale
    let mut fits = Table::new("weightconv_fit", ["v", "log_c", "log_a", "c", "a"]);
    for f in &study.fits {
        fits.push(vec![
            f.v.into(),
            f.log_fit.map(|pl| pl.c).into(),
            f.log_fit.map(|pl| pl.a).into(),
            f.refined.map(|pl| pl.c).into(),
            f.refined.map(|pl| pl.a).into(),
        ]);
    }
    Ok(Output { tables: vec![points, fits], problems })
}

fn scaled_mspe(manifest: &RunManifest) -> Result<Output, CliError> {
    let cfg = ScaledMspeConfig::from_path(manifest.config()?)?;
    let path = &cfg.metrics;
    let io = |e: &dyn std::fmt::Display| IngestError::Io { path: path.clone(), message: e.to_string() };
    let mut reader = csv::Reader::from_path(path).map_err(|e| io(&e))?;
    let header = reader.headers().map_err(|e| io(&e))?.clone();
    let col = |name: &str| header.iter().position(|h| h == name);
    let (Some(rep_col), Some(method_col), Some(mspe_col)) = (col("replicate"), col("method"), col("mspe")) else {
        return Err(CliError::Config(format!("{}: needs `replicate`, `method` and `mspe` columns", path.display())));
    };
    let point_col = col("point");

    // (point, replicate) -> [(method, mspe)]
    let mut groups: BTreeMap<(u64, u64), Vec<(String, f64)>> = BTreeMap::new();
    let mut method_order: Vec<String> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| io(&e))?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |c: usize| record.get(c).unwrap_or("").trim();
        let parse_err = |c: usize| IngestError::Parse {
            path: path.clone(),
            line,
            column: c + 1,
            message: format!("cannot parse `{}`", field(c)),
        };
        let point = match point_col {
            Some(c) => field(c).parse().map_err(|_| parse_err(c))?,
            None => 0,
        };
        let replicate: u64 = field(rep_col).parse().map_err(|_| parse_err(rep_col))?;
        let mspe: f64 = field(mspe_col).parse().map_err(|_| parse_err(mspe_col))?;
        let method = field(method_col).to_string();
        if !method_order.contains(&method) {
            method_order.push(method.clone());
        }
        groups.entry((point, replicate)).or_default().push((method, mspe));
    }

    let lead: Vec<&str> = if point_col.is_some() { vec!["point"] } else { Vec::new() };
    let mut scaled = Table::new("scaled_mspe", lead.iter().copied().chain(["replicate", "method", "mspe", "scaled_mspe"]));
    let mut by_method: BTreeMap<(u64, usize), Vec<f64>> = BTreeMap::new();
    for (&(point, replicate), entries) in &groups {
        for ((method, raw), (_, s)) in entries.iter().zip(scale_against_best(entries)) {
            let mut row: Vec<Cell> = if point_col.is_some() { vec![(point as usize).into()] } else { Vec::new() };
            row.extend([(replicate as usize).into(), method.as_str().into(), (*raw).into(), s.into()]);
            scaled.push(row);
            let idx = method_order.iter().position(|m| m == method).expect("method was recorded");
            by_method.entry((point, idx)).or_default().push(s);
        }
    }
    let mut summary = Table::new(
        "scaled_summary",
        lead.iter().copied().chain(["method", "mean_scaled_mspe", "scaled_mspe_lo", "scaled_mspe_hi", "count"]),
    );
    for (&(point, idx), values) in &by_method {
        let mut row: Vec<Cell> = if point_col.is_some() { vec![(point as usize).into()] } else { Vec::new() };
        row.push(method_order[idx].as_str().into());
        row.extend(band_cells(Band::of(values)));
        row.push(values.len().into());
        summary.push(row);
    }
    Ok(Output { tables: vec![scaled, summary], problems: Vec::new() })
}
