//! Pilot matched filter and the channel estimators built on it.
//!
//! All estimators start from the matched-filter output `Y p = γ h + N p` with
//! `γ = √β ‖p‖²`.

use nalgebra::linalg::{Cholesky, LU};

use crate::bases::TruncatedBasis;
use crate::channel::{ArrayGeometry, CorrelationSource, PilotBlock, SpatialCorrelation};
use crate::search::maximize_angle;
use crate::spectrum::{lpm, LpmOperator};
use crate::{CMatrix, CVector, Error, Result, C64};

/// Smallest LSFC value [`estimate_beta`] will return.
pub const BETA_FLOOR: f64 = 1e-12;

/// `Y p` together with the scale `γ = √β ‖p‖²`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchedFilterOutput {
    pub yp: CVector,
    pub gamma: f64,
    pub pilot_energy: f64,
}

impl MatchedFilterOutput {
    pub fn len(&self) -> usize {
        self.yp.len()
    }

    pub fn is_empty(&self) -> bool {
        self.yp.is_empty()
    }

    /// `β` implied by `γ`.
    pub fn beta(&self) -> f64 {
        (self.gamma / self.pilot_energy).powi(2)
    }
}

fn check_dims(y: &CMatrix, pilot: &PilotBlock) -> Result<()> {
    if y.ncols() != pilot.num_symbols() {
        return Err(Error::Dimension(format!(
            "Y has {} columns but the pilot has {} symbols",
            y.ncols(),
            pilot.num_symbols()
        )));
    }
    Ok(())
}

/// Computes `Y p` and `γ = √β ‖p‖²` for a known or estimated `β`.
pub fn matched_filter(y: &CMatrix, pilot: &PilotBlock, beta: f64) -> Result<MatchedFilterOutput> {
    check_dims(y, pilot)?;
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::Domain {
            what: "large-scale fading β",
            value: beta,
            allowed: "(0, ∞)",
        });
    }
    let energy = pilot.pilot_energy();
    Ok(MatchedFilterOutput {
        yp: y * pilot.pilot(),
        gamma: beta.sqrt() * energy,
        pilot_energy: energy,
    })
}

/// Moment estimate `β̂ = (‖Yp‖² − M‖p‖²) / (M‖p‖⁴)`, floored at [`BETA_FLOOR`].
///
/// Assumes unit-variance noise and `E‖h‖² = tr Φ = M`.
pub fn estimate_beta(y: &CMatrix, pilot: &PilotBlock) -> Result<f64> {
    check_dims(y, pilot)?;
    let energy = pilot.pilot_energy();
    let yp = y * pilot.pilot();
    let m = y.nrows() as f64;
    let raw = (yp.norm_squared() - m * energy) / (m * energy * energy);
    Ok(raw.max(BETA_FLOOR))
}

/// Output of one estimator run.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimationReport {
    pub h_hat: CVector,
    /// Mean AoA used for alignment, if any.
    pub phi_hat: Option<f64>,
    /// Basis indices kept; `None` means the full space.
    pub support: Option<Vec<usize>>,
    /// `‖ĥ − h‖²` once [`EstimationReport::score`] has been called.
    pub sq_error: Option<f64>,
}

impl EstimationReport {
    fn new(h_hat: CVector, phi_hat: Option<f64>, support: Option<Vec<usize>>) -> Self {
        Self {
            h_hat,
            phi_hat,
            support,
            sq_error: None,
        }
    }

    /// Records and returns `‖ĥ − h‖²`.
    pub fn score(&mut self, truth: &CVector) -> f64 {
        let e = (&self.h_hat - truth).norm_squared();
        self.sq_error = Some(e);
        e
    }
}

/// Conventional LS: `ĥ = Y p / γ`.
pub fn estimate_ls(mf: &MatchedFilterOutput) -> EstimationReport {
    EstimationReport::new(mf.yp.unscale(mf.gamma), None, None)
}

fn check_trunc(mf: &MatchedFilterOutput, trunc: &TruncatedBasis<'_>) -> Result<()> {
    if trunc.parent().dim() != mf.len() {
        return Err(Error::Dimension(format!(
            "basis has dimension {} but Yp has length {}",
            trunc.parent().dim(),
            mf.len()
        )));
    }
    Ok(())
}

/// Regular RR estimator `ĥ' = Q_m Q_m^H Y p / γ`.
pub fn estimate_rr_regular(
    mf: &MatchedFilterOutput,
    trunc: &TruncatedBasis<'_>,
) -> Result<EstimationReport> {
    check_trunc(mf, trunc)?;
    let h = trunc.project(&mf.yp).unscale(mf.gamma);
    Ok(EstimationReport::new(
        h,
        None,
        Some(trunc.support().to_vec()),
    ))
}

/// `‖Q_m^H W^H(φ) x‖²`.
pub fn alignment_objective(
    geom: &ArrayGeometry,
    trunc: &TruncatedBasis<'_>,
    x: &CVector,
    phi: f64,
) -> f64 {
    match lpm(geom, phi) {
        Ok(w) => trunc.coefficients(&w.apply_adjoint(x)).norm_squared(),
        Err(_) => f64::NEG_INFINITY,
    }
}

/// Line search for the mean AoA that maximizes `‖(W(φ) Q_m)^H Y p‖²`.
pub fn search_mean_aoa(
    mf: &MatchedFilterOutput,
    trunc: &TruncatedBasis<'_>,
    geom: &ArrayGeometry,
    grid_deg: f64,
) -> Result<f64> {
    check_trunc(mf, trunc)?;
    if trunc.order() == 0 {
        return Err(Error::InvalidSupport(
            "AoA search needs at least one basis column".into(),
        ));
    }
    if geom.num_antennas() != mf.len() {
        return Err(Error::Dimension("geometry and Yp disagree on M".into()));
    }
    Ok(maximize_angle(
        |phi| alignment_objective(geom, trunc, &mf.yp, phi),
        grid_deg,
    ))
}

/// How the LPM-aided estimator picks `φ̂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Alignment {
    /// Grid line search with the given spacing in degrees.
    Search { grid_deg: f64 },
    /// Use this angle (radians) directly.
    Known(f64),
}

/// LPM-aided RR estimator `ĥ = W(φ̂) Q_m Q_m^H W^H(φ̂) Y p / γ`.
pub fn estimate_rr_lpm(
    mf: &MatchedFilterOutput,
    trunc: &TruncatedBasis<'_>,
    geom: &ArrayGeometry,
    alignment: Alignment,
) -> Result<EstimationReport> {
    check_trunc(mf, trunc)?;
    let phi = match alignment {
        Alignment::Known(phi) => phi,
        Alignment::Search { grid_deg } => search_mean_aoa(mf, trunc, geom, grid_deg)?,
    };
    let w = lpm(geom, phi)?;
    Ok(EstimationReport::new(
        rr_aligned(&w, trunc, &mf.yp).unscale(mf.gamma),
        Some(phi),
        Some(trunc.support().to_vec()),
    ))
}

fn rr_aligned(w: &LpmOperator, trunc: &TruncatedBasis<'_>, x: &CVector) -> CVector {
    w.apply(&trunc.project(&w.apply_adjoint(x)))
}

/// Linear MMSE estimate `ĥ = √β Φ (β‖p‖² Φ + I)⁻¹ Y p`.
///
/// With `β = 1` this is `Φ(‖p‖²Φ + I)⁻¹ Y p`. The system is solved by Cholesky,
/// falling back to LU when the matrix is not numerically positive definite.
pub fn estimate_mmse(
    y: &CMatrix,
    pilot: &PilotBlock,
    beta: f64,
    corr: &SpatialCorrelation,
) -> Result<EstimationReport> {
    let mf = matched_filter(y, pilot, beta)?;
    let m = mf.len();
    if corr.dim() != m {
        return Err(Error::Dimension("correlation and Yp disagree on M".into()));
    }
    let phi = corr.matrix();
    let a = phi.scale(beta * mf.pilot_energy) + CMatrix::identity(m, m);
    let x = match Cholesky::new(a.clone()) {
        Some(ch) => ch.solve(&mf.yp),
        None => LU::new(a).solve(&mf.yp).ok_or(Error::Singular)?,
    };
    if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Singular);
    }
    Ok(EstimationReport::new(
        (phi * x).scale(beta.sqrt()),
        None,
        None,
    ))
}

/// Pilot-based correlation estimate and its raw sample covariance.
#[derive(Debug, Clone)]
pub struct CorrelationEstimate {
    /// `Φ̂ = (Ψ̂ − ‖p‖² I) / γ²`.
    pub corr: SpatialCorrelation,
    /// `Ψ̂ = (1/J) Σ Y_i p_i (Y_i p_i)^H`.
    pub psi: CMatrix,
    pub blocks: usize,
}

/// Averages `J` matched-filter outer products and removes the noise floor.
pub fn estimate_correlation(
    blocks: &[(CMatrix, PilotBlock)],
    gamma: f64,
) -> Result<CorrelationEstimate> {
    let (y0, p0) = blocks
        .first()
        .ok_or_else(|| Error::InvalidConfig("correlation estimation needs J ≥ 1 blocks".into()))?;
    if !(gamma > 0.0) {
        return Err(Error::Domain {
            what: "γ",
            value: gamma,
            allowed: "(0, ∞)",
        });
    }
    let m = y0.nrows();
    let energy = p0.pilot_energy();
    let mut psi = CMatrix::zeros(m, m);
    for (y, p) in blocks {
        check_dims(y, p)?;
        if y.nrows() != m {
            return Err(Error::Dimension("blocks disagree on M".into()));
        }
        if (p.pilot_energy() - energy).abs() > 1e-9 * energy {
            return Err(Error::InvalidConfig(
                "pilot blocks must have equal energy".into(),
            ));
        }
        let yp = y * p.pilot();
        psi.gerc(C64::new(1.0, 0.0), &yp, &yp, C64::new(1.0, 0.0));
    }
    let j = blocks.len();
    psi.unscale_mut(j as f64);
    let phi = (&psi - CMatrix::identity(m, m).scale(energy)).unscale(gamma * gamma);
    Ok(CorrelationEstimate {
        corr: SpatialCorrelation::new(phi, CorrelationSource::PilotEstimated { blocks: j })?,
        psi,
        blocks: j,
    })
}

/// Number of eigenvalues of a Hermitian matrix above `rel_tol` times the largest.
pub fn numerical_rank(a: &CMatrix, rel_tol: f64) -> usize {
    let eig = nalgebra::SymmetricEigen::new(crate::symmetrize(a)).eigenvalues;
    let top = eig.iter().cloned().fold(0.0, f64::max);
    if top <= 0.0 {
        return 0;
    }
    eig.iter().filter(|&&v| v > rel_tol * top).count()
}
