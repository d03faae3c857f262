//! Joint modeling-order and mean-AoA determination.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;

use crate::bases::{Basis, BasisKind};
use crate::channel::{ArrayGeometry, ClusterSpec, SpatialCorrelation};
use crate::rng::{trial_rng, Stream};
use crate::search::{maximize_angle, DEFAULT_GRID_DEG};
use crate::spectrum::{bias_matrix, dominant_support, lpm, DominantSupport};
use crate::{CMatrix, Error, Result, C64};

/// `φ ↦ tr(Q_S^H W^H(φ) Φ W(φ) Q_S)` for a fixed column set `S`.
///
/// Writing `P = Q_S Q_S^H`, the trace is `Σ_ij Φ_ij P_ji e^{js(i-j)}` with
/// `s = 2π(ξ/λ) sin φ`, so summing `Φ ∘ P^T` along its diagonals once makes each
/// evaluation linear in `M`.
#[derive(Debug, Clone)]
pub struct AlignedEnergy {
    /// `lags[k]` holds the diagonal sum for offset `d = k - (M-1)`.
    lags: Vec<C64>,
    spacing: f64,
}

impl AlignedEnergy {
    pub fn new(
        geom: &ArrayGeometry,
        corr: &CMatrix,
        basis: &Basis,
        columns: &[usize],
    ) -> Result<Self> {
        let m = geom.num_antennas();
        if corr.nrows() != m || basis.dim() != m {
            return Err(Error::Dimension(
                "geometry, correlation and basis disagree on M".into(),
            ));
        }
        if let Some(&bad) = columns.iter().find(|&&c| c >= m) {
            return Err(Error::InvalidSupport(format!(
                "column {bad} out of range for M={m}"
            )));
        }
        let qs = basis.q().select_columns(columns);
        let p: CMatrix = &qs * qs.adjoint();
        let mut lags = vec![C64::new(0.0, 0.0); 2 * m - 1];
        for i in 0..m {
            for j in 0..m {
                lags[i + m - 1 - j] += corr[(i, j)] * p[(j, i)];
            }
        }
        Ok(Self {
            lags,
            spacing: geom.spacing_wavelengths(),
        })
    }

    pub fn eval(&self, phi: f64) -> f64 {
        let s = 2.0 * PI * self.spacing * phi.sin();
        let m = self.lags.len().div_ceil(2);
        self.lags
            .iter()
            .enumerate()
            .map(|(k, g)| {
                let d = k as f64 - (m as f64 - 1.0);
                (g * C64::from_polar(1.0, s * d)).re
            })
            .sum()
    }
}

/// Settings for [`imod`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImodOptions {
    pub max_iters: usize,
    pub grid_deg: f64,
    pub init_phi: f64,
    /// Windows allowed in the dominant support (1 or 2).
    pub num_windows: usize,
}

impl Default for ImodOptions {
    fn default() -> Self {
        Self {
            max_iters: 10,
            grid_deg: DEFAULT_GRID_DEG,
            init_phi: 0.0,
            num_windows: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImodResult {
    pub m_eta_hat: usize,
    pub phi_hat: f64,
    pub support: DominantSupport,
    /// Bias-matrix updates performed.
    pub iterations: usize,
    pub converged: bool,
}

/// Iterative modeling order determination.
///
/// Each iteration builds the bias matrix at the current `φ̂`, solves for the
/// dominant support, and moves `φ̂` to the grid maximizer of
/// `tr(Q_m^H W^H(φ) Φ W(φ) Q_m)` where `Q_m` holds the leading `m̂_η` columns.
/// The loop stops once `φ̂` moves by less than one grid step; the support and angle
/// reported are then the pair from that last bias-matrix update, so restarting from
/// the output reproduces it in one iteration.
pub fn imod(
    basis: &Basis,
    corr: &SpatialCorrelation,
    eta: f64,
    geom: &ArrayGeometry,
    opts: ImodOptions,
) -> Result<ImodResult> {
    if opts.max_iters == 0 {
        return Err(Error::InvalidConfig("IMOD needs max_iters ≥ 1".into()));
    }
    let resolution = opts.grid_deg.to_radians();
    let mut phi = opts.init_phi;
    let mut last = None;
    for iter in 1..=opts.max_iters {
        let w = lpm(geom, phi)?;
        let support = dominant_support(
            &bias_matrix(basis, corr, Some(&w))?.spectrum,
            eta,
            opts.num_windows,
        )?;
        let lead: Vec<usize> = (0..support.m).collect();
        let energy = AlignedEnergy::new(geom, corr.matrix(), basis, &lead)?;
        let next = maximize_angle(|p| energy.eval(p), opts.grid_deg);
        if (next - phi).abs() < resolution {
            return Ok(ImodResult {
                m_eta_hat: support.m,
                phi_hat: phi,
                support,
                iterations: iter,
                converged: true,
            });
        }
        last = Some((support, phi));
        phi = next;
    }
    let (support, phi) = last.expect("at least one iteration ran");
    Ok(ImodResult {
        m_eta_hat: support.m,
        phi_hat: phi,
        support,
        iterations: opts.max_iters,
        converged: false,
    })
}

/// Conventional beamformer peak `argmax_φ a(φ)^H Φ a(φ)`, usable as an IMOD warm start.
pub fn beam_peak(geom: &ArrayGeometry, corr: &SpatialCorrelation, grid_deg: f64) -> Result<f64> {
    let m = geom.num_antennas();
    if corr.dim() != m {
        return Err(Error::Dimension(
            "geometry and correlation disagree on M".into(),
        ));
    }
    let lags = (0..2 * m - 1)
        .map(|k| {
            let d = k as isize - (m as isize - 1);
            (0..m)
                .filter_map(|i| {
                    let j = i as isize - d;
                    (0..m as isize)
                        .contains(&j)
                        .then(|| corr.matrix()[(i, j as usize)])
                })
                .sum()
        })
        .collect();
    let energy = AlignedEnergy {
        lags,
        spacing: geom.spacing_wavelengths(),
    };
    Ok(maximize_angle(|p| energy.eval(p), grid_deg))
}

/// Parameters of the low-complexity mean-AoA search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Alg2Params {
    pub step_mu_rad: f64,
    pub shrink_kappa: f64,
    /// Absolute DC-column energy the coarse phase must reach.
    pub threshold_t: f64,
    pub window_w: usize,
    pub max_coarse_draws: usize,
    /// Fine phase stops once the step falls below this.
    pub min_step_rad: f64,
}

impl Alg2Params {
    /// `μ = 5°`, `κ = 2`, `t = 0.02 M`, `w = ⌈M/4⌉`, 200 coarse draws, stop below 0.01°.
    ///
    /// At `M = 100` the best achievable DC-column energy of a 15° cluster is about
    /// `0.04 M`, so the threshold has to stay below that to be reachable.
    pub fn defaults_for(num_antennas: usize) -> Self {
        Self {
            step_mu_rad: 5f64.to_radians(),
            shrink_kappa: 2.0,
            threshold_t: 0.02 * num_antennas as f64,
            window_w: num_antennas.div_ceil(4),
            max_coarse_draws: 200,
            min_step_rad: 0.01f64.to_radians(),
        }
    }

    fn validate(&self, m: usize) -> Result<()> {
        if !(self.step_mu_rad > 0.0) {
            return Err(Error::InvalidConfig("step μ must be positive".into()));
        }
        if !(self.shrink_kappa > 1.0) {
            return Err(Error::InvalidConfig("shrink ratio κ must exceed 1".into()));
        }
        if self.window_w == 0 || self.window_w >= m {
            return Err(Error::InvalidConfig(format!(
                "window w must be in [1, {m})"
            )));
        }
        if !(self.min_step_rad > 0.0) {
            return Err(Error::InvalidConfig("minimum step must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Alg2Outcome {
    pub phi_hat: f64,
    pub coarse_draws: usize,
    /// Tail-window energy after the coarse phase and after every fine step.
    pub tail_trace: Vec<f64>,
}

/// Coarse random draw until the DC-column energy reaches `t`, then a shrinking-step
/// descent on the energy of the last `w` DCT columns. The coarse draws use their own
/// random stream keyed by `rng_seed`.
pub fn aoa_search_fast(
    basis: &Basis,
    corr: &SpatialCorrelation,
    geom: &ArrayGeometry,
    params: &Alg2Params,
    rng_seed: u64,
) -> Result<Alg2Outcome> {
    if basis.kind() != BasisKind::Dct2 {
        return Err(Error::InvalidConfig(
            "the fast AoA search needs the DCT-2 basis".into(),
        ));
    }
    let m = basis.dim();
    params.validate(m)?;
    let dc = AlignedEnergy::new(geom, corr.matrix(), basis, &[0])?;
    let tail_cols: Vec<usize> = (m - params.window_w..m).collect();
    let tail = AlignedEnergy::new(geom, corr.matrix(), basis, &tail_cols)?;

    let mut rng = trial_rng(rng_seed, Stream::CoarseSearch, 0);
    let mut draws = 0;
    let mut phi = loop {
        if draws == params.max_coarse_draws {
            return Err(Error::CoarseSearchExhausted { draws });
        }
        draws += 1;
        let cand = rng.random_range(-FRAC_PI_2..=FRAC_PI_2);
        if dc.eval(cand) >= params.threshold_t {
            break cand;
        }
    };

    let mut value = tail.eval(phi);
    let mut trace = vec![value];
    let mut mu = params.step_mu_rad;
    while mu >= params.min_step_rad {
        for cand in [(phi + mu).min(FRAC_PI_2), (phi - mu).max(-FRAC_PI_2)] {
            let v = tail.eval(cand);
            if v < value {
                phi = cand;
                value = v;
            }
        }
        trace.push(value);
        mu /= params.shrink_kappa;
    }
    Ok(Alg2Outcome {
        phi_hat: phi,
        coarse_draws: draws,
        tail_trace: trace,
    })
}

/// `ρ = min{1, (ξ/λ)|sin(φ−Δ) − sin(φ+Δ)|}`, the large-`M` fraction of dominant dimensions.
pub fn asymptotic_rank(geom: &ArrayGeometry, cluster: &ClusterSpec) -> f64 {
    let (phi, delta) = (cluster.mean_aoa_rad(), cluster.angular_spread_rad());
    (geom.spacing_wavelengths() * ((phi - delta).sin() - (phi + delta).sin()).abs()).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bases::{basis_dct2, basis_klt, basis_polynomial};
    use crate::channel::correlation_analytic;
    use crate::spectrum::{bias_matrix_raw, dominant_support};

    fn ula(m: usize) -> ArrayGeometry {
        ArrayGeometry::half_wavelength(m).unwrap()
    }

    #[test]
    fn aligned_energy_matches_direct_trace() {
        let geom = ula(12);
        let c = ClusterSpec::from_degrees(20.0, 10.0).unwrap();
        let corr = correlation_analytic(&geom, &c, 64).unwrap();
        let b = basis_polynomial(12).unwrap();
        let cols = [0, 2, 5];
        let e = AlignedEnergy::new(&geom, corr.matrix(), &b, &cols).unwrap();
        for phi in [-1.0, 0.0, 0.35, 1.4] {
            let w = lpm(&geom, phi).unwrap();
            let s = bias_matrix_raw(&b, corr.matrix(), Some(&w))
                .unwrap()
                .spectrum;
            let want: f64 = cols.iter().map(|&c| s.diag()[c]).sum();
            assert!((e.eval(phi) - want).abs() < 1e-10);
        }
    }

    #[test]
    fn identity_converges_immediately() {
        let m = 16;
        let geom = ula(m);
        let r = imod(
            &basis_dct2(m).unwrap(),
            &SpatialCorrelation::identity(m),
            0.5,
            &geom,
            ImodOptions::default(),
        )
        .unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations, 1);
        assert_eq!(r.m_eta_hat, 9);
        assert_eq!(r.support.indices(), (0..9).collect::<Vec<_>>());
        assert_eq!(r.phi_hat, 0.0);
    }

    #[test]
    fn point_source_found_with_rank_one() {
        let m = 32;
        let geom = ula(m);
        let phi0 = 40f64.to_radians();
        let corr = SpatialCorrelation::point_source(&geom, phi0).unwrap();
        let r = imod(
            &basis_dct2(m).unwrap(),
            &corr,
            0.99,
            &geom,
            ImodOptions::default(),
        )
        .unwrap();
        assert!(r.converged);
        assert_eq!(r.m_eta_hat, 1);
        assert!((r.phi_hat - phi0).abs() < 0.5f64.to_radians());
    }

    #[test]
    fn klt_keeps_zero_alignment() {
        let m = 24;
        let geom = ula(m);
        let c = ClusterSpec::from_degrees(30.0, 7.2).unwrap();
        let corr = correlation_analytic(&geom, &c, 64).unwrap();
        let b = basis_klt(corr.matrix()).unwrap();
        let r = imod(&b, &corr, 0.99, &geom, ImodOptions::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.phi_hat, 0.0);
        let s = bias_matrix(&b, &corr, None).unwrap().spectrum;
        assert_eq!(r.m_eta_hat, dominant_support(&s, 0.99, 1).unwrap().m);
    }

    #[test]
    fn restart_from_output_is_a_fixed_point() {
        let m = 40;
        let geom = ula(m);
        let c = ClusterSpec::from_degrees(45.0, 7.2).unwrap();
        let corr = correlation_analytic(&geom, &c, 64).unwrap();
        let b = basis_dct2(m).unwrap();
        let first = imod(&b, &corr, 0.99, &geom, ImodOptions::default()).unwrap();
        assert!(first.converged);
        let again = imod(
            &b,
            &corr,
            0.99,
            &geom,
            ImodOptions {
                init_phi: first.phi_hat,
                ..ImodOptions::default()
            },
        )
        .unwrap();
        assert_eq!(again.iterations, 1);
        assert_eq!(again.support, first.support);
    }

    #[test]
    fn fast_search_on_point_source() {
        let m = 32;
        let geom = ula(m);
        let phi0 = -20f64.to_radians();
        let corr = SpatialCorrelation::point_source(&geom, phi0).unwrap();
        let b = basis_dct2(m).unwrap();
        let dc = AlignedEnergy::new(&geom, corr.matrix(), &b, &[0]).unwrap();
        assert!((dc.eval(phi0) - m as f64).abs() < 1e-9);
        let out = aoa_search_fast(&b, &corr, &geom, &Alg2Params::defaults_for(m), 3).unwrap();
        assert!((out.phi_hat - phi0).abs() < 1f64.to_radians());
        assert!(out.tail_trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn fast_search_rejects_bad_setup() {
        let m = 8;
        let geom = ula(m);
        let corr = SpatialCorrelation::identity(m);
        let p = Alg2Params::defaults_for(m);
        assert!(aoa_search_fast(&basis_polynomial(m).unwrap(), &corr, &geom, &p, 0).is_err());
        let unreachable = Alg2Params {
            threshold_t: 10.0 * m as f64,
            max_coarse_draws: 5,
            ..p
        };
        assert_eq!(
            aoa_search_fast(&basis_dct2(m).unwrap(), &corr, &geom, &unreachable, 0),
            Err(Error::CoarseSearchExhausted { draws: 5 })
        );
        let wide = Alg2Params { window_w: m, ..p };
        assert!(aoa_search_fast(&basis_dct2(m).unwrap(), &corr, &geom, &wide, 0).is_err());
    }

    #[test]
    fn asymptotic_rank_values() {
        let geom = ula(100);
        let c = ClusterSpec::from_degrees(0.0, 15.0).unwrap();
        assert!((asymptotic_rank(&geom, &c) - 15f64.to_radians().sin()).abs() < 1e-12);
        let wide = ClusterSpec::from_degrees(0.0, 89.9).unwrap();
        assert_eq!(
            asymptotic_rank(&ArrayGeometry::new(100, 1.0).unwrap(), &wide),
            1.0
        );
        let off = ClusterSpec::from_degrees(60.0, 15.0).unwrap();
        assert!(asymptotic_rank(&geom, &c) >= asymptotic_rank(&geom, &off));
    }
}
