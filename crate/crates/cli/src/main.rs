use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use transma_cli::{run, Command, Format, RunManifest};
use transma_core::Method;

#[derive(Parser)]
#[command(name = "transma", version, about = "Transfer learning by model averaging over nested candidate domains")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = "transma-out")]
    out: PathBuf,

    /// Overrides the seed of the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Comma-separated subset of ols-tar, ols-pool, trans-mai, trans-macs,
    /// trans-mac.
    #[arg(long, global = true, default_value = "ols-tar,ols-pool,trans-mai,trans-macs,trans-mac")]
    methods: String,

    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,

    /// Worker threads (0 = all cores).
    #[arg(long, global = true, env = "TRANSMA_THREADS")]
    threads: Option<usize>,

    /// Sources share summary statistics only; Trans-MACs and Trans-MAC
    /// then fail with a privacy violation.
    #[arg(long, global = true)]
    summaries_only: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Fit target and source CSV files and score methods on holdout splits.
    Fit,
    /// Monte Carlo replications over a grid of design points.
    Simulate,
    /// Non-informative weight of Trans-MAI across v and n0.
    Weightconv,
    /// Distribution of Trans-MAI's standardized statistic.
    Normality,
    /// Scaled MSPE of an existing metrics table.
    Scaledmspe,
}

#[derive(ValueEnum, Clone, Copy)]
enum FormatArg {
    Csv,
    Json,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let methods: Result<Vec<Method>, _> =
        cli.methods.split(',').filter(|s| !s.trim().is_empty()).map(str::parse).collect();
    let methods = match methods {
        Ok(m) => m,
        Err(e) => {
            eprintln!("transma: {e}");
            return ExitCode::from(2);
        }
    };
    let manifest = RunManifest {
        command: match cli.command {
            Cmd::Fit => Command::Fit,
            Cmd::Simulate => Command::Simulate,
            Cmd::Weightconv => Command::WeightConv,
            Cmd::Normality => Command::Normality,
            Cmd::Scaledmspe => Command::ScaledMspe,
        },
        config_path: cli.config,
        output_dir: cli.out,
        methods,
        format: match cli.format {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        },
        seed: cli.seed,
        threads: cli.threads,
        summaries_only: cli.summaries_only,
    };
    ExitCode::from(run(&manifest) as u8)
}
