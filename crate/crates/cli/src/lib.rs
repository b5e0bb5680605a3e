//! The `lit` command line: fixture generation, single questions, benchmark
//! sweeps and report rendering.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub mod commands;
pub mod config;

pub use config::{InferencerChoice, Layer, PlannerChoice, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Run(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Run(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Config(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "lit", version, about = "Cost-aware tool orchestration over the patent and paper fixtures")]
pub struct Cli {
    /// JSON config file; its keys are the long flag names in snake_case.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the synthetic hupd and neurips fixtures as JSON lines.
    GenData(GenDataArgs),
    /// Answer one question and print its trace as JSON.
    Ask(AskArgs),
    /// Run the benchmark under both conditions and write traces and reports.
    Bench(BenchArgs),
    /// Rebuild a report from the trace files of a previous bench run.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = config::DEFAULT_FIXTURE_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = 6000)]
    pub patents: usize,
    #[arg(long, default_value_t = 3590)]
    pub papers: usize,
}

/// Settings shared by `ask` and `bench`.
#[derive(Debug, Args, Default)]
pub struct EngineArgs {
    /// Directory with hupd.jsonl and neurips.jsonl; generated in memory when omitted.
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    /// Seed for in-memory fixtures.
    #[arg(long)]
    pub fixture_seed: Option<u64>,
    /// JSON cost table replacing the built-in one.
    #[arg(long)]
    pub cost_table: Option<PathBuf>,
    /// scripted (default) or chat.
    #[arg(long)]
    pub planner: Option<String>,
    /// offline (default) or chat.
    #[arg(long)]
    pub inferencer: Option<String>,
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub classifier_endpoint: Option<String>,
    #[arg(long)]
    pub step_timeout_secs: Option<f64>,
    /// year_month (default) or calendar_month, for the Q7 script plans.
    #[arg(long)]
    pub month_grouping: Option<String>,
    /// Directory for trained classifier weights.
    #[arg(long)]
    pub model_cache: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AskArgs {
    pub question: String,
    #[command(flatten)]
    pub engine: EngineArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub engine: EngineArgs,
    /// e.g. "Q1..Q6", "Q8,Q10" or "all" (default).
    #[arg(long)]
    pub templates: Option<String>,
    /// Instances per template.
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Output directory of a bench run.
    pub dir: PathBuf,
    /// Bootstrap seed; defaults to the one recorded by the run.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Print the JSON report instead of the table.
    #[arg(long)]
    pub json: bool,
}

impl EngineArgs {
    fn layer(&self) -> Result<Layer, CliError> {
        let month_grouping = match &self.month_grouping {
            None => None,
            Some(s) => Some(
                serde_json::from_value(serde_json::Value::String(s.clone())).map_err(|_| {
                    CliError::Usage(format!("unknown month grouping `{s}` (expected year_month or calendar_month)"))
                })?,
            ),
        };
        Ok(Layer {
            data_dir: self.data_dir.clone(),
            fixture_seed: self.fixture_seed,
            cost_table: self.cost_table.clone(),
            planner: self.planner.clone(),
            inferencer: self.inferencer.clone(),
            endpoint: self.endpoint.clone(),
            model: self.model.clone(),
            classifier_endpoint: self.classifier_endpoint.clone(),
            step_timeout_secs: self.step_timeout_secs,
            month_grouping,
            model_cache: self.model_cache.clone(),
            ..Layer::default()
        })
    }
}

impl BenchArgs {
    fn layer(&self) -> Result<Layer, CliError> {
        Ok(Layer {
            templates: self.templates.clone(),
            count: self.count,
            seed: self.seed,
            jobs: self.jobs,
            out: self.out.clone(),
            ..self.engine.layer()?
        })
    }
}

/// Merges the flag layer with the config file and the process environment.
pub fn layered(flags: Layer, config: Option<&PathBuf>) -> Result<RunConfig, CliError> {
    let file = match config {
        Some(p) => Layer::from_file(p)?,
        None => Layer::default(),
    };
    let env = Layer::from_env(|k| std::env::var(k).ok());
    RunConfig::resolve(flags.over(file).over(env))
}

/// Runs one invocation, writing results to `out` and diagnostics to `err`.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            // Help and version are successful outcomes.
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return 0;
            }
            let _ = write!(err, "{e}");
            return CliError::Usage(String::new()).exit_code();
        }
    };
    let result = match &cli.command {
        Command::GenData(a) => commands::gen_data(a, out),
        Command::Ask(a) => a
            .engine
            .layer()
            .and_then(|l| layered(l, cli.config.as_ref()))
            .and_then(|cfg| commands::ask(&a.question, &cfg, out)),
        Command::Bench(a) => a
            .layer()
            .and_then(|l| layered(l, cli.config.as_ref()))
            .and_then(|cfg| commands::bench(&cfg, out, err)),
        Command::Report(a) => commands::report(a, out),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "lit: {e}");
            e.exit_code()
        }
    }
}
