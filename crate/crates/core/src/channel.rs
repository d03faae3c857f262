//! Clustered SIMO channel synthesis.
//!
//! A single-user uplink over an `M`-element ULA. The small-scale channel is a sum
//! of `S` subpaths per angular cluster,
//! `h = (L S)^{-1/2} Σ_ℓ Σ_s g_ℓs a(φ_ℓs)`, with `g_ℓs ~ CN(0, 1)` so that
//! `E‖h‖² = M`. The received pilot block is `Y = √β h p^H + N`.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::quadrature::gauss_legendre;
use crate::rng::{complex_normal, seeded};
use crate::{symmetrize, CMatrix, CVector, Error, Result, C64};

/// Default number of Gauss–Legendre nodes for [`correlation_analytic`].
pub const DEFAULT_QUADRATURE_POINTS: usize = 64;

/// Default subpaths per cluster.
pub const DEFAULT_SUBPATHS: usize = 20;

/// Uniform linear array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGeometry {
    num_antennas: usize,
    spacing_wavelengths: f64,
}

impl ArrayGeometry {
    pub fn new(num_antennas: usize, spacing_wavelengths: f64) -> Result<Self> {
        if num_antennas < 2 {
            return Err(Error::InvalidConfig(format!(
                "a ULA needs at least 2 antennas, got {num_antennas}"
            )));
        }
        if !(spacing_wavelengths > 0.0 && spacing_wavelengths.is_finite()) {
            return Err(Error::Domain {
                what: "antenna spacing (wavelengths)",
                value: spacing_wavelengths,
                allowed: "(0, ∞)",
            });
        }
        Ok(Self {
            num_antennas,
            spacing_wavelengths,
        })
    }

    /// Half-wavelength ULA.
    pub fn half_wavelength(num_antennas: usize) -> Result<Self> {
        Self::new(num_antennas, 0.5)
    }

    pub fn num_antennas(&self) -> usize {
        self.num_antennas
    }

    pub fn spacing_wavelengths(&self) -> f64 {
        self.spacing_wavelengths
    }

    /// Phase increment between neighbouring elements for a plane wave from `aoa`.
    pub(crate) fn phase_step(&self, aoa: f64) -> f64 {
        -2.0 * PI * self.spacing_wavelengths * aoa.sin()
    }
}

/// Law of subpath AoAs inside a cluster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AoaDistribution {
    /// i.i.d. uniform on `[φ-Δ, φ+Δ]`.
    #[default]
    Uniform,
    /// Deterministic, equally spaced offsets (midpoint rule) across `[φ-Δ, φ+Δ]`.
    FixedOffset,
}

/// One angular cluster.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterSpec {
    mean_aoa_rad: f64,
    angular_spread_rad: f64,
    num_subpaths: usize,
    aoa_distribution: AoaDistribution,
}

impl ClusterSpec {
    /// `angular_spread_rad` is the half-width Δ of the AoA support.
    pub fn new(
        mean_aoa_rad: f64,
        angular_spread_rad: f64,
        num_subpaths: usize,
        aoa_distribution: AoaDistribution,
    ) -> Result<Self> {
        if !(angular_spread_rad > 0.0) {
            return Err(Error::Domain {
                what: "angular spread",
                value: angular_spread_rad,
                allowed: "(0, π/2)",
            });
        }
        if mean_aoa_rad - angular_spread_rad <= -FRAC_PI_2 {
            return Err(Error::Domain {
                what: "cluster lower edge φ-Δ",
                value: mean_aoa_rad - angular_spread_rad,
                allowed: "(-π/2, π/2)",
            });
        }
        if mean_aoa_rad + angular_spread_rad >= FRAC_PI_2 {
            return Err(Error::Domain {
                what: "cluster upper edge φ+Δ",
                value: mean_aoa_rad + angular_spread_rad,
                allowed: "(-π/2, π/2)",
            });
        }
        if num_subpaths == 0 {
            return Err(Error::InvalidConfig(
                "a cluster needs at least one subpath".into(),
            ));
        }
        Ok(Self {
            mean_aoa_rad,
            angular_spread_rad,
            num_subpaths,
            aoa_distribution,
        })
    }

    /// Uniform cluster with the default 20 subpaths, angles in degrees.
    pub fn from_degrees(mean_aoa_deg: f64, angular_spread_deg: f64) -> Result<Self> {
        Self::new(
            mean_aoa_deg.to_radians(),
            angular_spread_deg.to_radians(),
            DEFAULT_SUBPATHS,
            AoaDistribution::Uniform,
        )
    }

    pub fn with_subpaths(mut self, num_subpaths: usize, law: AoaDistribution) -> Result<Self> {
        self.num_subpaths = num_subpaths;
        self.aoa_distribution = law;
        Self::new(
            self.mean_aoa_rad,
            self.angular_spread_rad,
            self.num_subpaths,
            self.aoa_distribution,
        )
    }

    pub fn mean_aoa_rad(&self) -> f64 {
        self.mean_aoa_rad
    }

    pub fn angular_spread_rad(&self) -> f64 {
        self.angular_spread_rad
    }

    pub fn num_subpaths(&self) -> usize {
        self.num_subpaths
    }

    pub fn aoa_distribution(&self) -> AoaDistribution {
        self.aoa_distribution
    }

    fn subpath_aoa<R: Rng + ?Sized>(&self, s: usize, rng: &mut R) -> f64 {
        let offset = match self.aoa_distribution {
            AoaDistribution::Uniform => rng.random_range(-1.0..=1.0),
            AoaDistribution::FixedOffset => 2.0 * (s as f64 + 0.5) / self.num_subpaths as f64 - 1.0,
        };
        self.mean_aoa_rad + self.angular_spread_rad * offset
    }
}

/// Large-scale fading coefficient `β = s d^{-a}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LargeScaleFading {
    pub distance: f64,
    pub pathloss_exp: f64,
    pub shadow_sigma_db: f64,
    pub beta: f64,
}

impl LargeScaleFading {
    /// A fixed, known β (distance 1, no shadowing).
    pub fn fixed(beta: f64) -> Result<Self> {
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::Domain {
                what: "beta",
                value: beta,
                allowed: "[0, ∞)",
            });
        }
        Ok(Self {
            distance: 1.0,
            pathloss_exp: 3.0,
            shadow_sigma_db: 0.0,
            beta,
        })
    }

    /// Samples lognormal shadowing, `10 log10 s ~ N(0, σ_s²)`.
    pub fn sample<R: Rng + ?Sized>(
        distance: f64,
        pathloss_exp: f64,
        shadow_sigma_db: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if !(distance > 0.0) {
            return Err(Error::Domain {
                what: "distance",
                value: distance,
                allowed: "(0, ∞)",
            });
        }
        if !(pathloss_exp > 2.0) {
            return Err(Error::Domain {
                what: "pathloss exponent",
                value: pathloss_exp,
                allowed: "(2, ∞)",
            });
        }
        if !(shadow_sigma_db >= 0.0) {
            return Err(Error::Domain {
                what: "shadowing std (dB)",
                value: shadow_sigma_db,
                allowed: "[0, ∞)",
            });
        }
        let shadow_db = if shadow_sigma_db > 0.0 {
            Normal::new(0.0, shadow_sigma_db)
                .expect("positive std")
                .sample(rng)
        } else {
            0.0
        };
        let s = 10f64.powf(shadow_db / 10.0);
        Ok(Self {
            distance,
            pathloss_exp,
            shadow_sigma_db,
            beta: s * distance.powf(-pathloss_exp),
        })
    }
}

/// One user's pilot sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotBlock {
    pilot: CVector,
}

impl PilotBlock {
    pub fn new(pilot: CVector) -> Result<Self> {
        if pilot.is_empty() {
            return Err(Error::InvalidConfig("empty pilot".into()));
        }
        if pilot.norm_squared() <= 0.0 {
            return Err(Error::InvalidConfig("pilot has zero energy".into()));
        }
        Ok(Self { pilot })
    }

    pub fn pilot(&self) -> &CVector {
        &self.pilot
    }

    /// `‖p‖²`.
    pub fn pilot_energy(&self) -> f64 {
        self.pilot.norm_squared()
    }

    /// `T`.
    pub fn num_symbols(&self) -> usize {
        self.pilot.len()
    }
}

/// Pilot construction styles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PilotStyle {
    /// Rows of the `T`-point DFT matrix with unit-modulus symbols.
    #[default]
    Dft,
}

/// `K` orthogonal pilots of length `T`, each with `‖p‖² = T`.
pub fn make_pilot(
    num_symbols: usize,
    num_users: usize,
    style: PilotStyle,
) -> Result<Vec<PilotBlock>> {
    if num_users == 0 || num_symbols < num_users {
        return Err(Error::InvalidConfig(format!(
            "need T >= K >= 1, got T={num_symbols}, K={num_users}"
        )));
    }
    match style {
        PilotStyle::Dft => (0..num_users)
            .map(|k| {
                let p = CVector::from_iterator(
                    num_symbols,
                    (0..num_symbols).map(|t| {
                        C64::from_polar(1.0, -2.0 * PI * (k * t) as f64 / num_symbols as f64)
                    }),
                );
                PilotBlock::new(p)
            })
            .collect(),
    }
}

/// Small-scale channel vector with the clusters that generated it.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h: CVector,
    pub clusters: Vec<ClusterSpec>,
}

/// Provenance of a correlation matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrelationSource {
    AnalyticIntegral,
    EnsembleAverage,
    /// Built from `blocks` pilot periods.
    PilotEstimated {
        blocks: usize,
    },
    /// Supplied directly (e.g. the identity for uncorrelated channels).
    Given,
}

/// Hermitian spatial correlation matrix Φ.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialCorrelation {
    phi: CMatrix,
    source: CorrelationSource,
}

impl SpatialCorrelation {
    /// Wraps a matrix after symmetrizing it. Fails if it is not square.
    pub fn new(phi: CMatrix, source: CorrelationSource) -> Result<Self> {
        if !phi.is_square() {
            return Err(Error::Dimension(format!(
                "correlation must be square, got {}x{}",
                phi.nrows(),
                phi.ncols()
            )));
        }
        Ok(Self {
            phi: symmetrize(&phi),
            source,
        })
    }

    /// Φ = I (spatially white channel).
    pub fn identity(m: usize) -> Self {
        Self {
            phi: CMatrix::identity(m, m),
            source: CorrelationSource::Given,
        }
    }

    /// Point source `a(φ) a(φ)^H`.
    pub fn point_source(geom: &ArrayGeometry, aoa_rad: f64) -> Result<Self> {
        let a = steering_vector(geom, aoa_rad)?;
        Ok(Self {
            phi: &a * a.adjoint(),
            source: CorrelationSource::Given,
        })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.phi
    }

    pub fn into_matrix(self) -> CMatrix {
        self.phi
    }

    pub fn source(&self) -> CorrelationSource {
        self.source
    }

    pub fn dim(&self) -> usize {
        self.phi.nrows()
    }

    /// Nearest PSD matrix in Frobenius norm: negative eigenvalues are set to zero.
    ///
    /// Noise subtraction leaves a pilot-estimated Φ̂ indefinite whenever `J < M`, with
    /// eigenvalues `−1/(β‖p‖²)` on the unobserved subspace. Those make the MMSE
    /// system `β‖p‖²Φ̂ + I` singular; the projection restores a valid correlation.
    pub fn psd_projection(&self) -> Self {
        let eig = nalgebra::SymmetricEigen::new(self.phi.clone());
        let clipped = eig.eigenvalues.map(|l| l.max(0.0));
        let v = &eig.eigenvectors;
        let scaled = CMatrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)] * clipped[j]);
        Self {
            phi: symmetrize(&(scaled * v.adjoint())),
            source: self.source,
        }
    }

    /// Normalized weighted sum, e.g. for multi-cluster channels.
    pub fn mix(parts: &[(f64, &SpatialCorrelation)]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidConfig("nothing to mix".into()))?;
        let m = first.1.dim();
        let total: f64 = parts.iter().map(|(w, _)| w).sum();
        let mut acc = CMatrix::zeros(m, m);
        for (w, c) in parts {
            if c.dim() != m {
                return Err(Error::Dimension(
                    "mixing correlations of different sizes".into(),
                ));
            }
            acc += c.matrix().scale(*w / total);
        }
        Ok(Self {
            phi: acc,
            source: first.1.source,
        })
    }
}

fn check_aoa(aoa_rad: f64) -> Result<()> {
    if !(-FRAC_PI_2..=FRAC_PI_2).contains(&aoa_rad) {
        return Err(Error::Domain {
            what: "angle of arrival",
            value: aoa_rad,
            allowed: "[-π/2, π/2]",
        });
    }
    Ok(())
}

/// `a(φ)_i = exp(-j 2π (i-1) (ξ/λ) sin φ)`.
pub fn steering_vector(geom: &ArrayGeometry, aoa_rad: f64) -> Result<CVector> {
    check_aoa(aoa_rad)?;
    Ok(steering_unchecked(geom, aoa_rad))
}

pub(crate) fn steering_unchecked(geom: &ArrayGeometry, aoa_rad: f64) -> CVector {
    let step = geom.phase_step(aoa_rad);
    CVector::from_iterator(
        geom.num_antennas(),
        (0..geom.num_antennas()).map(|i| C64::from_polar(1.0, step * i as f64)),
    )
}

/// Draws one channel realization with an explicit generator.
pub fn draw_channel_with<R: Rng + ?Sized>(
    geom: &ArrayGeometry,
    clusters: &[ClusterSpec],
    rng: &mut R,
) -> Result<ChannelRealization> {
    if clusters.is_empty() {
        return Err(Error::InvalidConfig(
            "at least one cluster is required".into(),
        ));
    }
    let m = geom.num_antennas();
    let mut h = CVector::zeros(m);
    let mut paths = 0usize;
    for cluster in clusters {
        for s in 0..cluster.num_subpaths() {
            let aoa = cluster.subpath_aoa(s, rng);
            check_aoa(aoa)?;
            let g = complex_normal(rng);
            let step = geom.phase_step(aoa);
            for (i, hi) in h.iter_mut().enumerate() {
                *hi += g * C64::from_polar(1.0, step * i as f64);
            }
            paths += 1;
        }
    }
    // equal subpath counts give (LS)^{-1/2}; unequal counts keep E‖h‖² = M as well
    h.unscale_mut((paths as f64).sqrt());
    Ok(ChannelRealization {
        h,
        clusters: clusters.to_vec(),
    })
}

/// Draws one channel realization from a seed.
pub fn draw_channel(
    geom: &ArrayGeometry,
    clusters: &[ClusterSpec],
    rng_seed: u64,
) -> Result<ChannelRealization> {
    draw_channel_with(geom, clusters, &mut seeded(rng_seed))
}

/// Spatially white channel, `h ~ CN(0, I_M)`.
pub fn draw_uncorrelated_with<R: Rng + ?Sized>(geom: &ArrayGeometry, rng: &mut R) -> CVector {
    CVector::from_iterator(
        geom.num_antennas(),
        (0..geom.num_antennas()).map(|_| complex_normal(rng)),
    )
}

/// Channel with a prescribed correlation, `h = Φ^{1/2} h̃` (Hermitian square root).
pub fn draw_correlated_with<R: Rng + ?Sized>(sqrt_phi: &CMatrix, rng: &mut R) -> CVector {
    let m = sqrt_phi.nrows();
    let white = CVector::from_iterator(m, (0..m).map(|_| complex_normal(rng)));
    sqrt_phi * white
}

/// Exact correlation of one uniform cluster by Gauss–Legendre quadrature:
/// `[Φ]_ij = (1/2Δ) ∫_{φ-Δ}^{φ+Δ} exp(-j2π (i-j) (ξ/λ) sin θ) dθ`.
///
/// Only the `M` distinct lags are integrated; the result is Hermitian Toeplitz with
/// a unit diagonal.
pub fn correlation_analytic(
    geom: &ArrayGeometry,
    cluster: &ClusterSpec,
    quadrature_points: usize,
) -> Result<SpatialCorrelation> {
    if quadrature_points < 32 {
        return Err(Error::InvalidConfig(format!(
            "quadrature needs at least 32 nodes, got {quadrature_points}"
        )));
    }
    if !(cluster.angular_spread_rad() > 0.0) {
        return Err(Error::Domain {
            what: "angular spread",
            value: cluster.angular_spread_rad(),
            allowed: "(0, π/2)",
        });
    }
    let m = geom.num_antennas();
    let (nodes, weights) = gauss_legendre(quadrature_points);
    let phi = cluster.mean_aoa_rad();
    let delta = cluster.angular_spread_rad();
    // density 1/(2Δ) times Jacobian Δ leaves weight/2
    let steps: Vec<(f64, f64)> = nodes
        .iter()
        .zip(&weights)
        .map(|(x, w)| (geom.phase_step(phi + delta * x), 0.5 * w))
        .collect();
    let lags: Vec<C64> = (0..m)
        .map(|d| {
            if d == 0 {
                return C64::new(1.0, 0.0);
            }
            steps
                .iter()
                .map(|&(step, w)| C64::from_polar(w, step * d as f64))
                .sum()
        })
        .collect();
    let out = CMatrix::from_fn(m, m, |i, j| {
        if i >= j {
            lags[i - j]
        } else {
            lags[j - i].conj()
        }
    });
    Ok(SpatialCorrelation {
        phi: out,
        source: CorrelationSource::AnalyticIntegral,
    })
}

/// [`correlation_analytic`] with node doubling until entries move by less than `tol`.
/// Returns the matrix and the node count that met the tolerance.
pub fn correlation_analytic_converged(
    geom: &ArrayGeometry,
    cluster: &ClusterSpec,
    start_points: usize,
    tol: f64,
) -> Result<(SpatialCorrelation, usize)> {
    let mut n = start_points.max(32);
    let mut current = correlation_analytic(geom, cluster, n)?;
    loop {
        let refined = correlation_analytic(geom, cluster, 2 * n)?;
        let change = crate::max_abs(&(refined.matrix() - current.matrix()));
        if change < tol {
            return Ok((current, n));
        }
        if n > 1 << 14 {
            return Err(Error::InvalidConfig(format!(
                "quadrature failed to converge (last change {change:.3e})"
            )));
        }
        n *= 2;
        current = refined;
    }
}

/// Analytic correlation of a multi-cluster channel, clusters weighted by their
/// subpath counts (matching [`draw_channel`]'s normalization).
pub fn correlation_analytic_multi(
    geom: &ArrayGeometry,
    clusters: &[ClusterSpec],
    tol: f64,
) -> Result<SpatialCorrelation> {
    let parts = clusters
        .iter()
        .map(|c| {
            correlation_analytic_converged(geom, c, DEFAULT_QUADRATURE_POINTS, tol)
                .map(|(corr, _)| (c.num_subpaths() as f64, corr))
        })
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<(f64, &SpatialCorrelation)> = parts.iter().map(|(w, c)| (*w, c)).collect();
    let mut mixed = SpatialCorrelation::mix(&refs)?;
    mixed.source = CorrelationSource::AnalyticIntegral;
    Ok(mixed)
}

/// Sample average of `h h^H` over `num_draws` independent channels, symmetrized.
pub fn correlation_ensemble(
    geom: &ArrayGeometry,
    clusters: &[ClusterSpec],
    num_draws: usize,
    rng_seed: u64,
) -> Result<SpatialCorrelation> {
    if num_draws == 0 {
        return Err(Error::InvalidConfig("num_draws must be at least 1".into()));
    }
    let m = geom.num_antennas();
    let mut rng = seeded(rng_seed);
    let mut acc = CMatrix::zeros(m, m);
    for _ in 0..num_draws {
        let h = draw_channel_with(geom, clusters, &mut rng)?.h;
        acc.gerc(C64::new(1.0, 0.0), &h, &h, C64::new(1.0, 0.0));
    }
    acc.unscale_mut(num_draws as f64);
    Ok(SpatialCorrelation {
        phi: symmetrize(&acc),
        source: CorrelationSource::EnsembleAverage,
    })
}

/// `Y = √β h p^H + σ N` with `N` i.i.d. CN(0, 1). `noise_std = 0` gives a noiseless block.
pub fn synthesize_rx_with<R: Rng + ?Sized>(
    h: &CVector,
    beta: f64,
    pilot: &PilotBlock,
    noise_std: f64,
    rng: &mut R,
) -> CMatrix {
    let m = h.len();
    let t = pilot.num_symbols();
    let mut y = h.scale(beta.sqrt()) * pilot.pilot().adjoint();
    if noise_std > 0.0 {
        for j in 0..t {
            for i in 0..m {
                y[(i, j)] += complex_normal(rng) * noise_std;
            }
        }
    }
    y
}

/// Received pilot block `Y = √β h p^H + N` for one user.
pub fn synthesize_rx(
    h: &ChannelRealization,
    lsfc: &LargeScaleFading,
    pilot: &PilotBlock,
    rng_seed: u64,
) -> CMatrix {
    synthesize_rx_with(&h.h, lsfc.beta, pilot, 1.0, &mut seeded(rng_seed))
}

/// Received block for `K` users sharing the array, `Y = Σ_k √β_k h_k p_k^H + N`.
pub fn synthesize_rx_multi(
    users: &[(&CVector, f64, &PilotBlock)],
    noise_std: f64,
    rng_seed: u64,
) -> Result<CMatrix> {
    let (h0, _, p0) = users
        .first()
        .ok_or_else(|| Error::InvalidConfig("no users".into()))?;
    let (m, t) = (h0.len(), p0.num_symbols());
    let mut rng = seeded(rng_seed);
    let mut y = synthesize_rx_with(&CVector::zeros(m), 0.0, p0, noise_std, &mut rng);
    for (h, beta, p) in users {
        if h.len() != m || p.num_symbols() != t {
            return Err(Error::Dimension("users disagree on M or T".into()));
        }
        y += h.scale(beta.sqrt()) * p.pilot().adjoint();
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn psd_projection_clips_negative_eigenvalues() {
        let a = CMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(1.0, 0.0),
                C64::new(0.0, 2.0),
                C64::new(0.0, -2.0),
                C64::new(1.0, 0.0),
            ],
        );
        // eigenvalues 3 and -1; the projection keeps the rank-1 part for 3
        let p = SpatialCorrelation::new(a, CorrelationSource::Given)
            .unwrap()
            .psd_projection();
        let eig = nalgebra::SymmetricEigen::new(p.matrix().clone()).eigenvalues;
        let (lo, hi) = (eig.min(), eig.max());
        assert!(lo.abs() < 1e-12 && (hi - 3.0).abs() < 1e-12, "{eig}");
        assert!(crate::max_abs(&(p.matrix() - p.matrix().adjoint())) < 1e-15);
    }

    #[test]
    fn psd_projection_keeps_a_psd_matrix() {
        let geom = ArrayGeometry::half_wavelength(16).unwrap();
        let c = correlation_analytic(&geom, &ClusterSpec::from_degrees(20.0, 10.0).unwrap(), 64)
            .unwrap();
        assert!(crate::max_abs(&(c.psd_projection().matrix() - c.matrix())) < 1e-10);
    }

    fn ula(m: usize) -> ArrayGeometry {
        ArrayGeometry::half_wavelength(m).unwrap()
    }

    #[test]
    fn geometry_validation() {
        assert!(ArrayGeometry::new(1, 0.5).is_err());
        assert!(ArrayGeometry::new(4, 0.0).is_err());
        assert!(ArrayGeometry::new(4, -1.0).is_err());
    }

    #[test]
    fn cluster_must_stay_inside_half_plane() {
        assert!(ClusterSpec::from_degrees(85.0, 7.2).is_err());
        assert!(ClusterSpec::from_degrees(-80.0, 15.0).is_err());
        assert!(ClusterSpec::from_degrees(60.0, 0.0).is_err());
        assert!(ClusterSpec::from_degrees(60.0, 7.2).is_ok());
    }

    #[test]
    fn steering_broadside_is_all_ones() {
        let a = steering_vector(&ula(4), 0.0).unwrap();
        for x in a.iter() {
            assert_relative_eq!(x.re, 1.0);
            assert_relative_eq!(x.im, 0.0);
        }
    }

    #[test]
    fn steering_endfire_alternates() {
        let a = steering_vector(&ula(2), FRAC_PI_2).unwrap();
        assert!((a[1] - C64::new(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn steering_thirty_degrees_third_element() {
        let a = steering_vector(&ula(3), PI / 6.0).unwrap();
        assert!((a[2] - C64::new(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn steering_rejects_out_of_range() {
        assert!(steering_vector(&ula(3), 1.6).is_err());
        assert!(steering_vector(&ula(3), -1.6).is_err());
    }

    #[test]
    fn single_subpath_channel_is_scaled_steering_vector() {
        let geom = ula(8);
        let c = ClusterSpec::new(0.4, 1e-9, 1, AoaDistribution::FixedOffset).unwrap();
        let h = draw_channel(&geom, &[c], 11).unwrap().h;
        let a = steering_vector(&geom, 0.4).unwrap();
        let g = h[0];
        assert!((&h - a.scale(1.0) * g).norm() < 1e-9);
        assert_relative_eq!(h.norm_squared(), g.norm_sqr() * 8.0, max_relative = 1e-12);
    }

    #[test]
    fn same_seed_same_channel() {
        let geom = ula(16);
        let c = ClusterSpec::from_degrees(60.0, 7.2).unwrap();
        let a = draw_channel(&geom, &[c], 99).unwrap();
        let b = draw_channel(&geom, &[c], 99).unwrap();
        assert_eq!(a, b);
        let d = draw_channel(&geom, &[c], 100).unwrap();
        assert_ne!(a.h, d.h);
    }

    #[test]
    fn analytic_unit_diagonal_and_hermitian() {
        let geom = ula(12);
        let c = ClusterSpec::from_degrees(25.0, 10.0).unwrap();
        let phi = correlation_analytic(&geom, &c, 64).unwrap();
        let p = phi.matrix();
        for i in 0..12 {
            assert_relative_eq!(p[(i, i)].re, 1.0, epsilon = 1e-12);
            assert!(p[(i, i)].im.abs() < 1e-12);
        }
        assert!(crate::max_abs(&(p - p.adjoint())) < 1e-12);
    }

    #[test]
    fn analytic_rejects_too_few_nodes() {
        let c = ClusterSpec::from_degrees(0.0, 10.0).unwrap();
        assert!(correlation_analytic(&ula(4), &c, 16).is_err());
    }

    #[test]
    fn tiny_spread_collapses_to_rank_one() {
        let geom = ula(6);
        let c = ClusterSpec::new(0.3, 1e-7, 20, AoaDistribution::Uniform).unwrap();
        let phi = correlation_analytic(&geom, &c, 64).unwrap();
        let a = steering_vector(&geom, 0.3).unwrap();
        let outer = &a * a.adjoint();
        assert!(crate::max_abs(&(phi.matrix() - outer)) < 1e-6);
    }

    #[test]
    fn ensemble_of_one_is_outer_product() {
        let geom = ula(5);
        let c = ClusterSpec::from_degrees(10.0, 5.0).unwrap();
        let phi = correlation_ensemble(&geom, &[c], 1, 4).unwrap();
        let h = draw_channel(&geom, &[c], 4).unwrap().h;
        assert!(crate::max_abs(&(phi.matrix() - &h * h.adjoint())) < 1e-12);
        let trace: f64 = (0..5).map(|i| phi.matrix()[(i, i)].re).sum();
        assert_relative_eq!(trace, h.norm_squared(), max_relative = 1e-12);
    }

    #[test]
    fn pilot_energy_and_orthogonality() {
        let p = make_pilot(4, 1, PilotStyle::Dft).unwrap();
        assert_relative_eq!(p[0].pilot_energy(), 4.0, epsilon = 1e-12);
        let ps = make_pilot(8, 3, PilotStyle::Dft).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                let g = ps[b].pilot().dotc(ps[a].pilot());
                let want = if a == b { 8.0 } else { 0.0 };
                assert!((g - C64::new(want, 0.0)).norm() < 1e-12);
            }
        }
        assert!(make_pilot(2, 3, PilotStyle::Dft).is_err());
        assert!(make_pilot(2, 0, PilotStyle::Dft).is_err());
    }

    #[test]
    fn noiseless_block_matched_filter_identity() {
        let geom = ula(10);
        let c = ClusterSpec::from_degrees(-20.0, 6.0).unwrap();
        let h = draw_channel(&geom, &[c], 5).unwrap().h;
        let p = &make_pilot(16, 1, PilotStyle::Dft).unwrap()[0];
        let beta = 2.5;
        let y = synthesize_rx_with(&h, beta, p, 0.0, &mut seeded(0));
        let yp = &y * p.pilot();
        let want = h.scale(beta.sqrt() * p.pilot_energy());
        assert!((yp - want).norm() < 1e-12);
    }

    #[test]
    fn orthogonal_users_decouple() {
        let geom = ula(6);
        let c1 = ClusterSpec::from_degrees(-20.0, 6.0).unwrap();
        let c2 = ClusterSpec::from_degrees(40.0, 6.0).unwrap();
        let h1 = draw_channel(&geom, &[c1], 1).unwrap().h;
        let h2 = draw_channel(&geom, &[c2], 2).unwrap().h;
        let ps = make_pilot(4, 2, PilotStyle::Dft).unwrap();
        let y = synthesize_rx_multi(&[(&h1, 1.0, &ps[0]), (&h2, 3.0, &ps[1])], 0.0, 9).unwrap();
        let yp = &y * ps[0].pilot();
        let want = h1.scale(4.0);
        assert!((yp - &want).norm() / want.norm() < 1e-12);
    }

    #[test]
    fn sampled_lsfc_matches_pathloss_without_shadowing() {
        let f = LargeScaleFading::sample(2.0, 3.0, 0.0, &mut seeded(1)).unwrap();
        assert_relative_eq!(f.beta, 0.125);
        assert!(LargeScaleFading::sample(2.0, 2.0, 0.0, &mut seeded(1)).is_err());
    }
}
