use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;

use config::{ConfigError, Format, RunConfig};
use walkbound::Error;

#[derive(Parser, Debug)]
#[command(
    name = "walkbound",
    version,
    about = "Random walks on free-by-(free or abelian) groups"
)]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed; overrides run.seed.
    #[arg(long, global = true, env = "WALKBOUND_SEED")]
    seed: Option<u64>,

    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Command,
}

/// Per-command numeric overrides of the `[run]` table.
#[derive(Args, Debug, Default)]
struct Overrides {
    #[arg(long, global = true)]
    n_paths: Option<usize>,
    #[arg(long, global = true)]
    n_steps: Option<usize>,
    #[arg(long, global = true)]
    depth: Option<usize>,
    #[arg(long, global = true)]
    table_depth: Option<usize>,
    #[arg(long, global = true)]
    margin: Option<usize>,
    #[arg(long, global = true)]
    burn_in: Option<usize>,
    #[arg(long, global = true)]
    horizon: Option<usize>,
    #[arg(long, global = true)]
    max_iter: Option<usize>,
    #[arg(long, global = true)]
    samples: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Sample paths: per-step CSV, or a drift and moment summary as JSON.
    Walk,
    /// Empirical hitting measure on cylinders of length `depth`.
    Hitting,
    /// Total variation between the hitting measure and its μ-convolution.
    Stationarity,
    /// Common-prefix convergence of translated probes along sample paths.
    Track,
    /// Growth type of every automorphism table in the config.
    Growth,
    /// Entropy and moments of the step measure.
    Moments,
    /// Asymptotic entropy from plug-in entropies of `x_n`.
    EntropyRate,
    /// Positions and times of returns to the configured sublattice.
    FirstReturn,
    /// `liminf` of a vertex sequence in the inner-automorphism tree.
    TreeLiminf,
    /// Exit points of a basic strip and their growth profile.
    TreeStrips,
    /// Poisson transform of a cylinder function and its harmonicity residual.
    Poisson,
    /// Validates the config and writes it in normalized form.
    Config,
}

#[derive(Debug, thiserror::Error)]
enum AppError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Run(#[from] Error),
    #[error("output: {0}")]
    Io(#[from] io::Error),
}

impl AppError {
    fn exit_code(&self) -> u8 {
        match self {
            AppError::Config(_) => 2,
            AppError::Run(e) => match e {
                Error::ConvergenceFailure { .. }
                | Error::Inconclusive { .. }
                | Error::LiminfInconclusive { .. } => 3,
                Error::Budget(_) => 4,
                Error::TruncationOverflow { .. } => 5,
                _ => 2,
            },
            AppError::Io(_) => 1,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("walkbound: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), AppError> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| ConfigError::Invalid("--config is required".into()))?;
    let mut cfg = RunConfig::load(path)?;
    apply_overrides(&mut cfg, &cli);
    let model = cfg.build()?;
    if let Some(n) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| ConfigError::Invalid(format!("--workers: {e}")))?;
    }
    let format = cli.format.unwrap_or(cfg.output.format);
    let out = cli.out.clone().or_else(|| cfg.output.path.clone());
    let artifact = commands::execute(cli.command, &cfg, &model, format)?;
    emit(out.as_deref(), |w| artifact.write(w))?;
    Ok(())
}

fn apply_overrides(cfg: &mut RunConfig, cli: &Cli) {
    let o = &cli.overrides;
    let r = &mut cfg.run;
    if let Some(s) = cli.seed {
        r.seed = s;
    }
    let pairs = [
        (o.n_paths, &mut r.n_paths),
        (o.n_steps, &mut r.n_steps),
        (o.depth, &mut r.depth),
        (o.burn_in, &mut r.burn_in),
        (o.horizon, &mut r.horizon),
        (o.max_iter, &mut r.max_iter),
        (o.samples, &mut r.samples),
    ];
    for (v, slot) in pairs {
        if let Some(v) = v {
            *slot = v;
        }
    }
    if o.table_depth.is_some() {
        r.table_depth = o.table_depth;
    }
    if o.margin.is_some() {
        r.margin = o.margin;
    }
}

/// Writes through a temporary file in the destination directory and renames
/// it into place, so a failed write leaves no output behind.
fn emit(out: Option<&Path>, body: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> io::Result<()> {
    match out {
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            body(&mut lock)?;
            lock.flush()
        }
        Some(path) => {
            let dir = match path.parent() {
                Some(p) if !p.as_os_str().is_empty() => p,
                _ => Path::new("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
            {
                let mut w = io::BufWriter::new(tmp.as_file_mut());
                body(&mut w)?;
                w.flush()?;
            }
            tmp.persist(path).map_err(|e| e.error)?;
            Ok(())
        }
    }
}
