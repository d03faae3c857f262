//! Seeded Monte Carlo experiments for reduced-rank channel estimation.
//!
//! A run takes an [`ExperimentConfig`], produces a long-format [`ResultTable`] and,
//! on request, evaluates the named check suite against it. Every trial draws from
//! generators keyed by `(master seed, stream, trial)`, and per-trial results are
//! reduced in trial order, so output bytes do not depend on the worker count.

pub mod checks;
pub mod config;
pub mod experiments;
pub mod presets;
pub mod stats;
pub mod table;

use std::path::{Path, PathBuf};

pub use checks::{evaluate_checks, CheckOutcome};
pub use config::{ExperimentConfig, ExperimentKind};
pub use table::{ResultTable, Row};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] rrmimo_core::Error),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, HarnessError>;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "RRMIMO_OUT";

/// Runs the experiment a config describes.
pub fn run(cfg: &ExperimentConfig) -> Result<ResultTable> {
    cfg.validate()?;
    match cfg.experiment {
        ExperimentKind::MseSweep => experiments::run_mse_sweep(cfg),
        ExperimentKind::SpectrumReport => experiments::run_spectrum_report(cfg),
        ExperimentKind::RankTables => experiments::run_rank_tables(cfg),
        ExperimentKind::BeamPatterns => experiments::run_beam_patterns(cfg),
        ExperimentKind::Multicluster => experiments::run_multicluster(cfg),
    }
}

/// Writes `<dir>/<name>.csv` and the resolved `<dir>/<name>.config.json`.
pub fn write_outputs(cfg: &ExperimentConfig, table: &ResultTable, dir: &Path) -> Result<PathBuf> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| HarnessError::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let csv_path = dir.join(format!("{}.csv", cfg.name));
    let file = std::fs::File::create(&csv_path).map_err(io(&csv_path))?;
    table.write_csv(file)?;
    let cfg_path = dir.join(format!("{}.config.json", cfg.name));
    std::fs::write(&cfg_path, cfg.to_pretty_json() + "\n").map_err(io(&cfg_path))?;
    Ok(csv_path)
}
