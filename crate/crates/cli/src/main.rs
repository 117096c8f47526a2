use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use swan_core::harness::{
    run_bound_sweep, run_segment_sweep, run_single, run_user_sweep, write_metadata, write_sweep,
    ExperimentConfig, SweepOutcome,
};

/// Monte Carlo experiments for segmented-waveguide pinching-antenna uplinks.
#[derive(Parser)]
#[command(name = "swan", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sum-rate upper bound versus the number of segments.
    BoundSweep(RunArgs),
    /// Every configured scheme versus the number of segments.
    SegmentSweep(RunArgs),
    /// Every configured scheme versus the number of users.
    UserSweep(RunArgs),
    /// Full greedy traces for one user drop.
    SingleRun(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment file; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed, overriding `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Realizations per sweep point, overriding `run.realizations`.
    #[arg(long)]
    realizations: Option<usize>,
    /// CSV destination, overriding `run.output`; stdout when neither is set.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Suppress warnings and the summary on stderr.
    #[arg(long)]
    quiet: bool,
    /// Worker threads (results do not depend on this).
    #[arg(long)]
    threads: Option<usize>,
}

impl RunArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)
                .with_context(|| format!("reading config {}", path.display()))?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.run.seed = seed;
        }
        if let Some(n) = self.realizations {
            cfg.run.realizations = n;
        }
        if let Some(out) = &self.output {
            cfg.run.output = Some(out.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let (name, args) = match &cli.command {
        Command::BoundSweep(a) => ("bound-sweep", a),
        Command::SegmentSweep(a) => ("segment-sweep", a),
        Command::UserSweep(a) => ("user-sweep", a),
        Command::SingleRun(a) => ("single-run", a),
    };
    if let Some(n) = args.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    let cfg = args.config()?;
    let output = cfg.run.output.clone();

    if let Command::SingleRun(_) = cli.command {
        let run = run_single(&cfg)?;
        let csv = run.to_csv();
        match &output {
            Some(path) => {
                std::fs::write(path, &csv)
                    .with_context(|| format!("writing {}", path.display()))?;
                write_metadata(&cfg, name, &[], &[], path)?;
                summary(args.quiet, name, &[], path);
            }
            None => print!("{csv}"),
        }
        return Ok(());
    }

    let outcome: SweepOutcome = match cli.command {
        Command::BoundSweep(_) => run_bound_sweep(&cfg)?,
        Command::SegmentSweep(_) => run_segment_sweep(&cfg)?,
        Command::UserSweep(_) => run_user_sweep(&cfg)?,
        Command::SingleRun(_) => unreachable!(),
    };
    match &output {
        Some(path) => {
            write_sweep(&outcome, &cfg, name, path)
                .with_context(|| format!("writing {}", path.display()))?;
            summary(args.quiet, name, &outcome.warnings, path);
        }
        None => {
            if !args.quiet {
                for w in &outcome.warnings {
                    eprintln!("warning: {w}");
                }
            }
            print!("{}", outcome.to_csv());
        }
    }
    Ok(())
}

fn summary(quiet: bool, name: &str, warnings: &[String], path: &Path) {
    if quiet {
        return;
    }
    for w in warnings {
        eprintln!("warning: {w}");
    }
    eprintln!("{name}: wrote {}", path.display());
}
