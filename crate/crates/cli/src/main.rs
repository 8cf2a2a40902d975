use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dampgap::spectral::GRID_BUDGET_ENV;
use dampgap_cli::error::{CliError, CliResult};
use dampgap_cli::presets::{self, PRESETS};
use dampgap_cli::{load, run, RunOptions, Source};

#[derive(Parser)]
#[command(
    name = "dampgap",
    version,
    about = "Spectral experiments for structurally damped evolution equations",
    after_help = format!(
        "Exit codes: 0 success, 2 invalid configuration, 3 numerical failure (partial output kept), 4 I/O failure.\n\
         {GRID_BUDGET_ENV} caps the bytes a single grid may allocate (default 4 GiB)."
    )
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment configuration (TOML).
    #[arg(long, value_name = "PATH", conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// Shipped preset instead of a file.
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
}

impl ConfigArgs {
    fn source(&self) -> Source {
        match (&self.config, &self.preset) {
            (Some(path), _) => Source::File(path.clone()),
            (None, Some(name)) => Source::Preset(name.clone()),
            (None, None) => unreachable!("clap requires one of them"),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Validate and run an experiment, writing tables, plots and a manifest.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output directory; overrides `output` in the config.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        /// Seed for every random choice; overrides `seed` in the config.
        #[arg(long, value_name = "U64")]
        seed: Option<u64>,
        /// Worker threads.
        #[arg(long, value_name = "N")]
        threads: Option<usize>,
    },
    /// Check every precondition without running.
    Validate {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// List the shipped presets, or print one.
    Presets { name: Option<String> },
}

fn configure_threads(requested: Option<usize>) -> CliResult<usize> {
    if requested == Some(0) {
        return Err(CliError::invalid("--threads", "must be at least 1"));
    }
    #[cfg(feature = "parallel")]
    {
        if let Some(n) = requested {
            // fails only if a global pool already exists, whose size is then reported
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        Ok(rayon::current_num_threads())
    }
    #[cfg(not(feature = "parallel"))]
    {
        if requested.is_some_and(|n| n > 1) {
            eprintln!("built without the parallel feature; running on one thread");
        }
        Ok(1)
    }
}

fn execute(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            threads,
        } => {
            let cfg = load(&config.source())?;
            let threads = configure_threads(threads)?;
            let report = run(cfg, &RunOptions { out, seed, threads })?;
            for line in &report.summary {
                println!("{line}");
            }
            println!("wrote {}", report.dir.display());
            Ok(())
        }
        Command::Validate { config } => {
            let cfg = load(&config.source())?;
            let problems = cfg.validate();
            if problems.is_empty() {
                println!("ok: no violations");
                Ok(())
            } else {
                Err(CliError::Validation(problems))
            }
        }
        Command::Presets { name: None } => {
            let width = PRESETS.iter().map(|p| p.name.len()).max().unwrap_or(0);
            for p in PRESETS {
                println!("{:width$}  {}", p.name, p.description());
            }
            Ok(())
        }
        Command::Presets { name: Some(name) } => {
            let p = presets::find(&name)
                .ok_or_else(|| CliError::invalid("preset", format!("unknown preset `{name}`")))?;
            print!("{}", p.text);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
