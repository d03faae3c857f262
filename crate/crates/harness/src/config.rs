//! Experiment configuration: JSON schema, validation and hashing.

use std::path::Path;

use rrmimo_core::bases::BasisKind;
use rrmimo_core::channel::{
    correlation_analytic_multi, AoaDistribution, ArrayGeometry, ClusterSpec, SpatialCorrelation,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{HarnessError, Result};

/// Quadrature refinement tolerance for analytic correlations.
pub const CORRELATION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    MseSweep,
    SpectrumReport,
    RankTables,
    BeamPatterns,
    Multicluster,
}

impl ExperimentKind {
    pub fn id(&self) -> &'static str {
        match self {
            ExperimentKind::MseSweep => "mse_sweep",
            ExperimentKind::SpectrumReport => "spectrum_report",
            ExperimentKind::RankTables => "rank_tables",
            ExperimentKind::BeamPatterns => "beam_patterns",
            ExperimentKind::Multicluster => "multicluster",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisName {
    Klt,
    #[serde(alias = "dct2")]
    Dct,
    Dft,
    #[serde(alias = "polynomial")]
    Poly,
}

impl BasisName {
    pub fn kind(self) -> BasisKind {
        match self {
            BasisName::Klt => BasisKind::Klt,
            BasisName::Dct => BasisKind::Dct2,
            BasisName::Dft => BasisKind::Dft,
            BasisName::Poly => BasisKind::Polynomial,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubpathLaw {
    #[default]
    Uniform,
    FixedOffset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterConfig {
    pub mean_deg: f64,
    /// Half-width of the AoA distribution.
    pub spread_deg: f64,
    #[serde(default = "default_subpaths")]
    pub subpaths: usize,
    #[serde(default)]
    pub law: SubpathLaw,
}

impl ClusterConfig {
    pub fn spec(&self) -> Result<ClusterSpec> {
        let law = match self.law {
            SubpathLaw::Uniform => AoaDistribution::Uniform,
            SubpathLaw::FixedOffset => AoaDistribution::FixedOffset,
        };
        Ok(ClusterSpec::new(
            self.mean_deg.to_radians(),
            self.spread_deg.to_radians(),
            self.subpaths,
            law,
        )?)
    }
}

/// One channel model. No clusters means a spatially white channel, `Φ = I`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub label: String,
    #[serde(default)]
    pub clusters: Vec<ClusterConfig>,
}

impl Scenario {
    pub fn is_white(&self) -> bool {
        self.clusters.is_empty()
    }

    /// Known mean AoA used for LPM alignment; only single-cluster channels have one.
    pub fn mean_aoa_rad(&self) -> Option<f64> {
        match self.clusters.as_slice() {
            [c] => Some(c.mean_deg.to_radians()),
            _ => None,
        }
    }

    pub fn cluster_specs(&self) -> Result<Vec<ClusterSpec>> {
        self.clusters.iter().map(ClusterConfig::spec).collect()
    }

    pub fn correlation(&self, geom: &ArrayGeometry) -> Result<SpatialCorrelation> {
        if self.is_white() {
            return Ok(SpatialCorrelation::identity(geom.num_antennas()));
        }
        Ok(correlation_analytic_multi(
            geom,
            &self.cluster_specs()?,
            CORRELATION_TOL,
        )?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub experiment: ExperimentKind,
    #[serde(default = "default_antennas")]
    pub antennas: usize,
    /// Element spacing in wavelengths.
    #[serde(default = "default_spacing")]
    pub spacing: f64,
    /// Pilot length `T`; pilots are unit-power DFT rows, so `‖p‖² = T`.
    #[serde(default = "default_pilot_len")]
    pub pilot_len: usize,
    pub scenarios: Vec<Scenario>,
    #[serde(default)]
    pub bases: Vec<BasisName>,
    #[serde(default)]
    pub etas: Vec<f64>,
    /// Efficiencies used with an estimated correlation (rank tables only).
    #[serde(default)]
    pub estimated_etas: Vec<f64>,
    pub alpha_db: Vec<f64>,
    #[serde(default)]
    pub orders: Vec<usize>,
    pub trials: usize,
    /// `J`, pilot blocks averaged into a correlation estimate.
    #[serde(default = "default_corr_blocks")]
    pub corr_blocks: usize,
    #[serde(default = "yes")]
    pub known_beta: bool,
    #[serde(default = "yes")]
    pub known_phi: bool,
    #[serde(default = "default_grid_deg")]
    pub grid_deg: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    /// Named assertion suite evaluated by `--check`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub check: Option<String>,
}

fn default_subpaths() -> usize {
    rrmimo_core::channel::DEFAULT_SUBPATHS
}
fn default_antennas() -> usize {
    100
}
fn default_spacing() -> f64 {
    0.5
}
fn default_pilot_len() -> usize {
    16
}
fn default_corr_blocks() -> usize {
    10
}
fn default_grid_deg() -> f64 {
    rrmimo_core::search::DEFAULT_GRID_DEG
}
fn yes() -> bool {
    true
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn geometry(&self) -> Result<ArrayGeometry> {
        Ok(ArrayGeometry::new(self.antennas, self.spacing)?)
    }

    /// `α` in linear scale for each entry of the sweep.
    pub fn alphas(&self) -> Vec<f64> {
        self.alpha_db
            .iter()
            .map(|db| 10f64.powf(db / 10.0))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return bad(format!("name {:?} is not usable as a file stem", self.name));
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.alpha_db.is_empty() {
            return bad("alpha_db must list at least one SNR".into());
        }
        if self.alpha_db.iter().any(|a| !a.is_finite()) {
            return bad("alpha_db entries must be finite".into());
        }
        if self.scenarios.is_empty() {
            return bad("at least one scenario is required".into());
        }
        if self.pilot_len == 0 {
            return bad("pilot_len must be at least 1".into());
        }
        if !(self.grid_deg > 0.0 && self.grid_deg <= 10.0) {
            return bad(format!("grid_deg {} outside (0, 10]", self.grid_deg));
        }
        if let Some(eta) = self
            .etas
            .iter()
            .chain(&self.estimated_etas)
            .find(|e| !(**e > 0.0 && **e < 1.0))
        {
            return bad(format!("efficiency {eta} outside (0, 1)"));
        }
        if let Some(m) = self.orders.iter().find(|&&m| m > self.antennas) {
            return bad(format!("modeling order {m} exceeds M = {}", self.antennas));
        }
        self.geometry()?;
        for s in &self.scenarios {
            s.cluster_specs()?;
            if s.label.is_empty() {
                return bad("scenario labels must be nonempty".into());
            }
        }
        if self.bases.is_empty() {
            return bad("at least one basis is required".into());
        }
        if let Some(suite) = self
            .check
            .as_deref()
            .filter(|s| !crate::checks::SUITES.contains(s))
        {
            return bad(format!("unknown check suite {suite:?}"));
        }
        match self.experiment {
            ExperimentKind::MseSweep => {
                if self.orders.is_empty() {
                    return bad("mse_sweep needs a modeling-order list".into());
                }
                if !self.known_phi && self.orders.contains(&0) {
                    return bad("AoA search needs m ≥ 1".into());
                }
                if self.bases.contains(&BasisName::Klt)
                    && self.scenarios.iter().any(|s| s.is_white())
                {
                    return bad(
                        "the KLT of a white channel is not unique; use a fixed basis".into(),
                    );
                }
            }
            ExperimentKind::SpectrumReport | ExperimentKind::BeamPatterns => {
                if self.etas.is_empty() {
                    return bad("at least one η is required".into());
                }
                if self.scenarios.iter().any(|s| s.mean_aoa_rad().is_none()) {
                    return bad(format!(
                        "{} needs single-cluster scenarios",
                        self.experiment.id()
                    ));
                }
            }
            ExperimentKind::RankTables => {
                let n = self.alpha_db.len();
                if self.etas.len() != n || self.estimated_etas.len() != n {
                    return bad("rank_tables pairs alpha_db, etas and estimated_etas entrywise; lengths differ".into());
                }
                if self.corr_blocks == 0 {
                    return bad("corr_blocks must be at least 1".into());
                }
                if self.scenarios.iter().any(|s| s.mean_aoa_rad().is_none()) {
                    return bad("rank_tables needs single-cluster scenarios".into());
                }
            }
            ExperimentKind::Multicluster => {
                if self.etas.is_empty() {
                    return bad("at least one η is required".into());
                }
                if self.bases.len() != 1 {
                    return bad("multicluster takes exactly one basis".into());
                }
            }
        }
        if matches!(self.experiment, ExperimentKind::BeamPatterns) && self.corr_blocks == 0 {
            return bad("corr_blocks must be at least 1".into());
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, ignoring the output path. First 16 hex digits.
    pub fn hash(&self) -> String {
        let mut canon = self.clone();
        canon.output = None;
        let json = serde_json::to_string(&canon).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn to_pretty_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
