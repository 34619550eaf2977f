use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use turbmimo::config::{apply_override, load_config};
use turbmimo::output::{csv_bytes, write_results, RunMetadata};
use turbmimo::records::{channel_summary, render_channel, render_modes, screen_files, write_screen};
use turbmimo::sweep::{default_workers, run_parallel};
use turbmimo::validate::{render_report, run_checks, Fault, ValidateOptions};
use turbmimo::{AppError, AppResult};
use turbmimo_core::experiment::SimConfig;

/// Wave-optical simulator of spatially multiplexed free-space quantum links.
#[derive(Debug, Parser)]
#[command(name = "turbmimo", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// Configuration file (`key = value` lines).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output file, or directory for `screens`.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Override one configuration key; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Master seed; overrides `master_seed` from the configuration.
    #[arg(long, global = true, env = "TURBMIMO_SEED")]
    seed: Option<u64>,
    /// Worker threads for `sweep` (default: available cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Only report errors.
    #[arg(long, short, global = true, conflicts_with = "verbose")]
    quiet: bool,
    /// Report progress details.
    #[arg(long, short, global = true)]
    verbose: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the Monte Carlo sweep and write CSV results.
    Sweep,
    /// Write the first `k` phase screens of one realization.
    Screens {
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 1e-14)]
        cn2: f64,
    },
    /// Report the Gram matrices of the transmit and receiver mode banks.
    Modes {
        #[arg(long, default_value_t = 2)]
        n: usize,
    },
    /// Summarize one channel realization.
    Channel {
        #[arg(long, default_value_t = 1e-14)]
        cn2: f64,
        #[arg(long, default_value_t = 2)]
        n: usize,
    },
    /// Run the fast self-check suite.
    Validate {
        #[arg(long, hide = true, value_enum)]
        inject_fault: Option<FaultArg>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FaultArg {
    KernelSignFlip,
}

fn resolve_config(g: &Global) -> AppResult<SimConfig> {
    let mut config = match &g.config {
        Some(path) => load_config(path)?.config,
        None => SimConfig::default(),
    };
    for o in &g.overrides {
        apply_override(&mut config, o)?;
    }
    if let Some(seed) = g.seed {
        config.master_seed = seed;
    }
    config.validate()?;
    Ok(config)
}

fn emit(out: Option<&Path>, text: &str) -> AppResult<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| AppError::io(path, e)),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| AppError::io("<stdout>", e)),
    }
}

fn cmd_sweep(g: &Global) -> AppResult<()> {
    let config = resolve_config(g)?;
    if let Some(parent) = g.out.as_deref().and_then(Path::parent) {
        if !parent.as_os_str().is_empty() && !parent.is_dir() {
            return Err(AppError::io(
                parent,
                std::io::Error::new(std::io::ErrorKind::NotFound, "output directory does not exist"),
            ));
        }
    }
    let workers = g.workers.unwrap_or_else(default_workers);
    let started = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64());
    let clock = Instant::now();
    let rows = run_parallel(&config, workers)?;
    let meta = RunMetadata {
        version: env!("CARGO_PKG_VERSION"),
        started_unix_seconds: started,
        wall_clock_seconds: clock.elapsed().as_secs_f64(),
        workers,
        rows: rows.len(),
    };
    log::info!("sweep finished in {:.1} s", meta.wall_clock_seconds);
    match &g.out {
        Some(path) => write_results(&rows, path, &config, &meta),
        None => std::io::stdout()
            .write_all(&csv_bytes(&rows))
            .map_err(|e| AppError::io("<stdout>", e)),
    }
}

fn cmd_screens(g: &Global, k: usize, cn2: f64) -> AppResult<()> {
    let config = resolve_config(g)?;
    let dir = g.out.clone().unwrap_or_else(|| PathBuf::from("."));
    if !dir.is_dir() {
        return Err(AppError::io(
            &dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "output directory does not exist"),
        ));
    }
    for file in screen_files(&config, cn2, k, config.master_seed)? {
        let path = dir.join(format!("screen_{:03}.bin", file.screen.slab_index()));
        write_screen(&path, &file)?;
        log::info!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_validate(g: &Global, fault: Option<FaultArg>) -> AppResult<()> {
    let options = ValidateOptions {
        seed: g.seed.unwrap_or(0),
        fault: fault.map(|f| match f {
            FaultArg::KernelSignFlip => Fault::KernelSignFlip,
        }),
    };
    let checks = run_checks(options);
    emit(g.out.as_deref(), &render_report(&checks))?;
    match checks.iter().filter(|c| !c.passed).count() {
        0 => Ok(()),
        failed => Err(AppError::Validation(failed)),
    }
}

fn run(cli: &Cli) -> AppResult<()> {
    let g = &cli.global;
    match &cli.command {
        Command::Sweep => cmd_sweep(g),
        Command::Screens { k, cn2 } => cmd_screens(g, *k, *cn2),
        Command::Modes { n } => {
            let config = resolve_config(g)?;
            emit(g.out.as_deref(), &render_modes(&config, *n)?)
        }
        Command::Channel { cn2, n } => {
            let config = resolve_config(g)?;
            let summary = channel_summary(&config, *cn2, *n, config.master_seed)?;
            emit(g.out.as_deref(), &render_channel(&summary))
        }
        Command::Validate { inject_fault } => cmd_validate(g, *inject_fault),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.global.quiet {
        log::LevelFilter::Error
    } else if cli.global.verbose {
        log::LevelFilter::Debug
    } else {
        log::LevelFilter::Info
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .parse_default_env()
        .init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
