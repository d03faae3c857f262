use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rrmimo_harness::presets::{preset, preset_source, PRESET_NAMES};
use rrmimo_harness::{
    evaluate_checks, run, write_outputs, ExperimentConfig, HarnessError, OUT_DIR_ENV,
};

#[derive(Parser)]
#[command(
    name = "rrmimo",
    version,
    about = "Reduced-rank MIMO channel estimation experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a preset or a JSON config file and write its CSV.
    Run {
        /// Preset name or path to a JSON config.
        target: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        /// Output directory [default: the config's `output`, else `results`].
        #[arg(long, env = OUT_DIR_ENV)]
        out: Option<PathBuf>,
        /// Worker threads; defaults to the number of cores.
        #[arg(long)]
        threads: Option<usize>,
        /// Evaluate the config's assertion suite; failures exit with status 2.
        #[arg(long)]
        check: bool,
    },
    /// List the bundled presets.
    List,
    /// Print a preset's JSON.
    Show { name: String },
}

fn load(target: &str) -> rrmimo_harness::Result<ExperimentConfig> {
    let path = Path::new(target);
    if path.extension().is_some_and(|e| e == "json") || path.is_file() {
        ExperimentConfig::from_path(path)
    } else {
        preset(target)
    }
}

enum Failure {
    Config(HarnessError),
    Other(HarnessError),
    Checks,
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Config(_) => Failure::Config(e),
            other => Failure::Other(other),
        }
    }
}

fn run_command(
    target: &str,
    seed: Option<u64>,
    trials: Option<usize>,
    out: Option<PathBuf>,
    threads: Option<usize>,
    check: bool,
) -> Result<(), Failure> {
    let mut cfg = load(target)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    if let Some(trials) = trials {
        cfg.trials = trials;
    }
    cfg.validate()?;
    let dir = out
        .or_else(|| cfg.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("results"));

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| {
        HarnessError::Config(format!("cannot start {threads:?} worker threads: {e}"))
    })?;
    let table = pool.install(|| run(&cfg))?;
    let csv = write_outputs(&cfg, &table, &dir)?;
    println!(
        "{} rows -> {} (config {})",
        table.rows.len(),
        csv.display(),
        cfg.hash()
    );

    if check {
        let outcomes = evaluate_checks(&cfg, &table);
        for o in &outcomes {
            println!("{o}");
        }
        if outcomes.iter().any(|o| !o.passed) {
            return Err(Failure::Checks);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            target,
            seed,
            trials,
            out,
            threads,
            check,
        } => run_command(&target, seed, trials, out, threads, check),
        Command::List => {
            PRESET_NAMES.iter().for_each(|n| println!("{n}"));
            Ok(())
        }
        Command::Show { name } => match preset_source(&name) {
            Some(text) => {
                print!("{text}");
                Ok(())
            }
            None => Err(Failure::Config(HarnessError::Config(format!(
                "unknown preset {name:?}"
            )))),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e) | Failure::Other(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Checks) => {
            eprintln!("checks failed");
            ExitCode::from(2)
        }
    }
}
