//! Command-line parsing and dispatch.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::experiment;

#[derive(Debug, Parser)]
#[command(name = "vfrecon", version, about = "Vector field reconstruction experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate noisy trajectories and write them as CSV and JSON.
    Generate(CommonArgs),
    /// Fit the estimator once and evaluate it on the envelope.
    Estimate(CommonArgs),
    /// Repeat the estimate over a sweep axis.
    Sweep(CommonArgs),
    /// Compare both estimator variants with SINDy across dimensions.
    Compare(CommonArgs),
    /// Sample the evaluation envelope and the true field there.
    Envelope(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Experiment configuration (TOML).
    #[arg(short, long)]
    pub config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// Master seed; overrides `data.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (defaults to the number of cores).
    #[arg(short = 'j', long)]
    pub workers: Option<usize>,
}

impl Command {
    fn common(&self) -> &CommonArgs {
        match self {
            Command::Generate(a) | Command::Estimate(a) | Command::Sweep(a) | Command::Compare(a) | Command::Envelope(a) => a,
        }
    }
}

/// Loads the config and applies command-line overrides.
pub fn load_config(args: &CommonArgs) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.data.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.output.dir = out.clone();
    }
    Ok(cfg)
}

/// Runs a parsed command and returns the paths written.
pub fn execute(command: &Command) -> Result<Vec<PathBuf>, CliError> {
    let args = command.common();
    let cfg = load_config(args)?;
    let pool = match args.workers {
        Some(0) => return Err(CliError::Config("--workers must be >= 1".into())),
        Some(w) => rayon::ThreadPoolBuilder::new().num_threads(w).build(),
        None => rayon::ThreadPoolBuilder::new().build(),
    }
    .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let hash = cfg.hash();
    let out = cfg.output.dir.clone();
    pool.install(|| match command {
        Command::Generate(_) => experiment::write_generate(&cfg, &out, &hash),
        Command::Envelope(_) => experiment::write_envelope(&cfg, &out, &hash),
        Command::Estimate(_) => {
            let (run, paths) = experiment::write_single(&cfg, &out, &hash)?;
            println!(
                "mean normalized error {} ({} excluded), build {:.3}s, query {:.3}s",
                run.report.mean, run.report.excluded, run.timing.build_seconds, run.timing.query_seconds
            );
            Ok(paths)
        }
        Command::Sweep(_) => {
            let (rows, paths) = experiment::write_sweep(&cfg, &out, &hash)?;
            for (value, n, m, mean, sd) in experiment::summarize_sweep(&rows) {
                println!("value {value} (n = {n}, m = {m}): mean error {mean:.4} +- {sd:.4}");
            }
            Ok(paths)
        }
        Command::Compare(_) => Ok(experiment::write_compare(&cfg, &out, &hash)?.1),
    })
}

/// Parses `args` (program name first), runs, and returns the exit status:
/// 0 on success, 1 for usage or configuration errors, 2 for runtime errors.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match execute(&cli.command) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
