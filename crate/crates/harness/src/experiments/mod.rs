//! The five experiment runners and the plumbing they share.

mod beams;
mod mse;
mod multicluster;
mod ranks;
mod spectra;

pub use beams::run_beam_patterns;
pub use mse::run_mse_sweep;
pub use multicluster::run_multicluster;
pub use ranks::{run_rank_tables, KLT_SAMPLE_DEFICIENT};
pub use spectra::run_spectrum_report;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rrmimo_core::bases::{build_basis, Basis, BasisKind};
use rrmimo_core::channel::{
    draw_channel_with, draw_uncorrelated_with, make_pilot, ArrayGeometry, ClusterSpec, PilotBlock,
    PilotStyle, SpatialCorrelation,
};
use rrmimo_core::rng::{derive_seed, trial_rng, Stream};
use rrmimo_core::spectrum::LpmOperator;
use rrmimo_core::CVector;

use crate::config::{ExperimentConfig, Scenario};
use crate::table::ResultTable;
use crate::Result;

/// Per-run constants derived once from the config.
pub(crate) struct Context<'a> {
    pub cfg: &'a ExperimentConfig,
    pub geom: ArrayGeometry,
    pub pilot: PilotBlock,
}

impl<'a> Context<'a> {
    pub fn new(cfg: &'a ExperimentConfig) -> Result<Self> {
        Ok(Self {
            cfg,
            geom: cfg.geometry()?,
            pilot: make_pilot(cfg.pilot_len, 1, PilotStyle::Dft)?.remove(0),
        })
    }

    pub fn m(&self) -> usize {
        self.geom.num_antennas()
    }

    pub fn table(&self) -> ResultTable {
        ResultTable::new(self.cfg.experiment.id(), self.cfg.seed, self.cfg.hash())
    }

    /// Pilot energy `‖p‖² = T`.
    pub fn energy(&self) -> f64 {
        self.pilot.pilot_energy()
    }
}

/// Seeds for one scenario. Channel draws are shared across the SNR sweep; every SNR
/// point gets its own noise stream.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Seeds {
    scenario: u64,
}

impl Seeds {
    pub fn new(master: u64, scenario_index: usize) -> Self {
        Self {
            scenario: derive_seed(master, &[scenario_index as u64]),
        }
    }

    pub fn channel(&self, draw: u64) -> ChaCha8Rng {
        trial_rng(self.scenario, Stream::Channel, draw)
    }

    pub fn noise(&self, alpha_index: usize, draw: u64) -> ChaCha8Rng {
        trial_rng(
            derive_seed(self.scenario, &[100 + alpha_index as u64]),
            Stream::Noise,
            draw,
        )
    }
}

/// A scenario's channel generator and exact correlation.
pub(crate) struct ChannelModel {
    pub clusters: Vec<ClusterSpec>,
    pub corr: SpatialCorrelation,
}

impl ChannelModel {
    pub fn new(scenario: &Scenario, geom: &ArrayGeometry) -> Result<Self> {
        Ok(Self {
            clusters: scenario.cluster_specs()?,
            corr: scenario.correlation(geom)?,
        })
    }

    pub fn draw(&self, geom: &ArrayGeometry, rng: &mut ChaCha8Rng) -> Result<CVector> {
        if self.clusters.is_empty() {
            Ok(draw_uncorrelated_with(geom, rng))
        } else {
            Ok(draw_channel_with(geom, &self.clusters, rng)?.h)
        }
    }
}

pub(crate) fn bases_for(cfg: &ExperimentConfig, corr: &SpatialCorrelation) -> Result<Vec<Basis>> {
    cfg.bases
        .iter()
        .map(|b| Ok(build_basis(b.kind(), corr.dim(), Some(corr.matrix()))?))
        .collect()
}

/// LPM alignment applied with `basis`. A KLT is matched to the correlation itself and stays unaligned.
pub(crate) fn alignment_for<'w>(
    basis: &Basis,
    w: Option<&'w LpmOperator>,
) -> Option<&'w LpmOperator> {
    w.filter(|_| basis.kind() != BasisKind::Klt)
}

/// Runs `f` for every trial on the current rayon pool and returns results in trial order.
pub(crate) fn par_trials<T, F>(trials: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    (0..trials).into_par_iter().map(f).collect()
}
