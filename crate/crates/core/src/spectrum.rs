//! LPM alignment, channel energy spectra and closed-form error prediction.
//!
//! For a basis `Q` and mean AoA `φ`, the bias matrix is `B = Q^H W^H(φ) Φ W(φ) Q`
//! (or `Q^H Φ Q` without alignment). Its diagonal is the channel energy spectrum.
//! With support `F_m`, the RR estimator's MSE splits into the variance
//! `m / (β‖p‖²)` and the bias `Σ_{ℓ∉F_m} [B]_ℓℓ`.

use std::io::{self, Write};

use crate::bases::{Basis, BasisKind};
use crate::channel::{steering_vector, ArrayGeometry, SpatialCorrelation};
use crate::{CMatrix, CVector, Error, Result};

/// Diagonal unit-modulus phase operator `W(φ)`, `[W]_ii = exp(-j2π(i-1)(ξ/λ) sin φ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpmOperator {
    phi_rad: f64,
    diag: CVector,
}

impl LpmOperator {
    pub fn phi_rad(&self) -> f64 {
        self.phi_rad
    }

    pub fn diag(&self) -> &CVector {
        &self.diag
    }

    /// `W x`.
    pub fn apply(&self, x: &CVector) -> CVector {
        x.component_mul(&self.diag)
    }

    /// `W^H x`.
    pub fn apply_adjoint(&self, x: &CVector) -> CVector {
        CVector::from_iterator(
            x.len(),
            x.iter().zip(self.diag.iter()).map(|(a, w)| a * w.conj()),
        )
    }

    /// `W^H A W`.
    pub fn align(&self, a: &CMatrix) -> CMatrix {
        let w = &self.diag;
        CMatrix::from_fn(a.nrows(), a.ncols(), |i, j| w[i].conj() * a[(i, j)] * w[j])
    }
}

/// Builds `W(φ)`.
pub fn lpm(geom: &ArrayGeometry, phi_rad: f64) -> Result<LpmOperator> {
    Ok(LpmOperator {
        phi_rad,
        diag: steering_vector(geom, phi_rad)?,
    })
}

/// Diagonal of a bias matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpectrum {
    diag: Vec<f64>,
    basis_kind: BasisKind,
    phi_used: Option<f64>,
}

impl ChannelSpectrum {
    pub fn new(diag: Vec<f64>, basis_kind: BasisKind, phi_used: Option<f64>) -> Self {
        Self {
            diag,
            basis_kind,
            phi_used,
        }
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn basis_kind(&self) -> BasisKind {
        self.basis_kind
    }

    pub fn phi_used(&self) -> Option<f64> {
        self.phi_used
    }

    pub fn total(&self) -> f64 {
        self.diag.iter().sum()
    }

    /// CSV with header `index,diag_b`; indices are 1-based.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "index,diag_b")?;
        for (i, v) in self.diag.iter().enumerate() {
            writeln!(out, "{},{:.17e}", i + 1, v)?;
        }
        Ok(())
    }
}

/// Full bias matrix and its spectrum.
#[derive(Debug, Clone)]
pub struct BiasMatrix {
    pub b: CMatrix,
    pub spectrum: ChannelSpectrum,
}

/// `B = Q^H W^H Φ W Q` with alignment, `B̃ = Q^H Φ Q` without.
pub fn bias_matrix(
    basis: &Basis,
    corr: &SpatialCorrelation,
    alignment: Option<&LpmOperator>,
) -> Result<BiasMatrix> {
    bias_matrix_raw(basis, corr.matrix(), alignment)
}

/// [`bias_matrix`] on a bare matrix.
pub fn bias_matrix_raw(
    basis: &Basis,
    corr: &CMatrix,
    alignment: Option<&LpmOperator>,
) -> Result<BiasMatrix> {
    let m = basis.dim();
    if corr.nrows() != m || corr.ncols() != m {
        return Err(Error::Dimension(format!(
            "basis is {m}x{m} but correlation is {}x{}",
            corr.nrows(),
            corr.ncols()
        )));
    }
    if let Some(w) = alignment {
        if w.diag.len() != m {
            return Err(Error::Dimension(
                "LPM operator length differs from basis".into(),
            ));
        }
    }
    let c = match alignment {
        Some(w) => w.align(corr),
        None => corr.clone(),
    };
    let q = basis.q();
    let b = q.adjoint() * c * q;
    let diag = (0..m).map(|l| b[(l, l)].re).collect();
    Ok(BiasMatrix {
        b,
        spectrum: ChannelSpectrum::new(diag, basis.kind(), alignment.map(|w| w.phi_rad)),
    })
}

/// Spectrum only, computed column by column (`q_ℓ^H C q_ℓ`) without forming `B`.
pub fn channel_spectrum(
    basis: &Basis,
    corr: &CMatrix,
    alignment: Option<&LpmOperator>,
) -> Result<ChannelSpectrum> {
    let m = basis.dim();
    if corr.nrows() != m || corr.ncols() != m {
        return Err(Error::Dimension(
            "basis and correlation sizes differ".into(),
        ));
    }
    let c = match alignment {
        Some(w) => w.align(corr),
        None => corr.clone(),
    };
    let cq = &c * basis.q();
    let diag = (0..m)
        .map(|l| basis.q().column(l).dotc(&cq.column(l)).re)
        .collect();
    Ok(ChannelSpectrum::new(
        diag,
        basis.kind(),
        alignment.map(|w| w.phi_rad),
    ))
}

/// `‖Im(W^H Φ W)‖_F / ‖Φ‖_F`: how far the aligned correlation is from real.
pub fn imag_leakage(geom: &ArrayGeometry, corr: &SpatialCorrelation, phi_rad: f64) -> Result<f64> {
    let w = lpm(geom, phi_rad)?;
    let c = w.align(corr.matrix());
    let imag: f64 = c.iter().map(|z| z.im * z.im).sum::<f64>().sqrt();
    Ok(imag / corr.matrix().norm())
}

/// Consecutive index run `[start, start + len)` (0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Window {
    pub start: usize,
    pub len: usize,
}

impl Window {
    pub fn end(&self) -> usize {
        self.start + self.len
    }

    pub fn indices(&self) -> std::ops::Range<usize> {
        self.start..self.end()
    }
}

/// Dominant support `F_η`: the shortest set of window(s) capturing more than `η M` energy.
#[derive(Debug, Clone, PartialEq)]
pub struct DominantSupport {
    pub m: usize,
    pub windows: Vec<Window>,
    pub eta: f64,
    /// Captured energy over `M`, with negative spectrum entries clamped at zero.
    pub captured_fraction: f64,
    /// False when no proper support exists and the full index set was returned.
    pub feasible: bool,
}

impl DominantSupport {
    /// Support indices in ascending order.
    pub fn indices(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = self.windows.iter().flat_map(|w| w.indices()).collect();
        idx.sort_unstable();
        idx
    }

    /// Indices not in the support.
    pub fn complement(&self, total: usize) -> Vec<usize> {
        let mut inside = vec![false; total];
        for i in self.indices() {
            inside[i] = true;
        }
        (0..total).filter(|&i| !inside[i]).collect()
    }

    /// Gap between the two windows (0 when adjacent), `None` for one window.
    pub fn gap(&self) -> Option<usize> {
        match self.windows.as_slice() {
            [a, b] => Some(b.start.saturating_sub(a.end())),
            _ => None,
        }
    }
}

struct Prefix(Vec<f64>);

impl Prefix {
    fn new(values: &[f64]) -> Self {
        let mut p = Vec::with_capacity(values.len() + 1);
        p.push(0.0);
        let mut acc = 0.0;
        for v in values {
            acc += v;
            p.push(acc);
        }
        Prefix(p)
    }

    fn window(&self, start: usize, len: usize) -> f64 {
        self.0[start + len] - self.0[start]
    }
}

/// Best single window of length `len`: maximum energy, then smallest start.
fn best_window(prefix: &Prefix, total_len: usize, len: usize) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for start in 0..=(total_len - len) {
        let e = prefix.window(start, len);
        if e > best.1 {
            best = (start, e);
        }
    }
    best
}

/// Best ordered pair of disjoint windows with lengths `l1` (first) and `l2` (second).
fn best_pair(
    prefix: &Prefix,
    total_len: usize,
    l1: usize,
    l2: usize,
) -> Option<(usize, usize, f64)> {
    if l1 + l2 > total_len {
        return None;
    }
    // suffix_best[s] = best start >= s for a window of length l2
    let last = total_len - l2;
    let mut suffix_best: Vec<(usize, f64)> = vec![(0, f64::NEG_INFINITY); last + 2];
    for s in (0..=last).rev() {
        let e = prefix.window(s, l2);
        let next = suffix_best[s + 1];
        suffix_best[s] = if e >= next.1 { (s, e) } else { next };
    }
    let mut best: Option<(usize, usize, f64)> = None;
    for s1 in 0..=(total_len - l1 - l2) {
        let e1 = prefix.window(s1, l1);
        let (s2, e2) = suffix_best[s1 + l1];
        let e = e1 + e2;
        if best.is_none_or(|b| e > b.2) {
            best = Some((s1, s2, e));
        }
    }
    best
}

fn clamped_fraction(spec: &[f64], windows: &[Window], m_total: usize) -> f64 {
    windows
        .iter()
        .flat_map(|w| w.indices())
        .map(|i| spec[i].max(0.0))
        .sum::<f64>()
        / m_total as f64
}

/// Solves `min { m : Σ_{ℓ∈F_m} [B]_ℓℓ / M > η }` over supports made of up to
/// `num_windows` (1 or 2) disjoint runs of consecutive indices.
///
/// Ties between supports of equal size go to the larger captured energy, then to the
/// smaller start index. With two windows, adjacent runs are merged. Raw spectrum values
/// drive the search; the reported captured fraction clamps negatives at zero. If no
/// support clears the threshold, the full index set is returned with `feasible = false`.
pub fn dominant_support(
    spec: &ChannelSpectrum,
    eta: f64,
    num_windows: usize,
) -> Result<DominantSupport> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::Domain {
            what: "efficiency η",
            value: eta,
            allowed: "(0, 1)",
        });
    }
    if !(1..=2).contains(&num_windows) {
        return Err(Error::InvalidConfig(format!(
            "num_windows must be 1 or 2, got {num_windows}"
        )));
    }
    let d = spec.diag();
    let n = d.len();
    if n == 0 {
        return Err(Error::Dimension("empty spectrum".into()));
    }
    let threshold = eta * n as f64;
    let prefix = Prefix::new(d);
    for m in 1..=n {
        let (start, single) = best_window(&prefix, n, m);
        let mut choice = (vec![Window { start, len: m }], single);
        if num_windows == 2 {
            for l1 in 1..m {
                if let Some((s1, s2, e)) = best_pair(&prefix, n, l1, m - l1) {
                    let cand_start = s1;
                    if e > choice.1 || (e == choice.1 && cand_start < choice.0[0].start) {
                        let w1 = Window { start: s1, len: l1 };
                        let w2 = Window {
                            start: s2,
                            len: m - l1,
                        };
                        let windows = if w1.end() == w2.start {
                            vec![Window { start: s1, len: m }]
                        } else {
                            vec![w1, w2]
                        };
                        choice = (windows, e);
                    }
                }
            }
        }
        if choice.1 > threshold {
            let captured_fraction = clamped_fraction(d, &choice.0, n);
            return Ok(DominantSupport {
                m,
                windows: choice.0,
                eta,
                captured_fraction,
                feasible: true,
            });
        }
    }
    let windows = vec![Window { start: 0, len: n }];
    Ok(DominantSupport {
        m: n,
        captured_fraction: clamped_fraction(d, &windows, n),
        windows,
        eta,
        feasible: false,
    })
}

/// Largest captured energy of any `num_windows`-window support of total size `m`.
pub fn best_captured_energy(spec: &ChannelSpectrum, m: usize, num_windows: usize) -> f64 {
    let d = spec.diag();
    let n = d.len();
    if m == 0 {
        return 0.0;
    }
    let m = m.min(n);
    let prefix = Prefix::new(d);
    let mut best = best_window(&prefix, n, m).1;
    if num_windows >= 2 {
        for l1 in 1..m {
            if let Some((_, _, e)) = best_pair(&prefix, n, l1, m - l1) {
                best = best.max(e);
            }
        }
    }
    best
}

/// `Var{ĥ_m} = m / (β ‖p‖²)`, independent of the basis.
pub fn theoretical_variance(m: usize, beta: f64, pilot_energy: f64) -> f64 {
    m as f64 / (beta * pilot_energy)
}

/// `b(ĥ_m) = Σ_{ℓ∉F_m} [B]_ℓℓ`.
pub fn theoretical_bias(spec: &ChannelSpectrum, support: &[usize]) -> Result<f64> {
    let n = spec.len();
    let mut inside = vec![false; n];
    for &i in support {
        if i >= n {
            return Err(Error::InvalidSupport(format!(
                "index {i} out of range for M={n}"
            )));
        }
        inside[i] = true;
    }
    Ok(spec
        .diag()
        .iter()
        .zip(&inside)
        .filter(|(_, &inn)| !inn)
        .map(|(v, _)| v)
        .sum())
}

/// Closed-form error of an RR estimator with a given support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MsePrediction {
    pub variance: f64,
    pub bias: f64,
    pub mse: f64,
    /// `mse / M`.
    pub nmse: f64,
}

pub fn theoretical_mse(
    spec: &ChannelSpectrum,
    support: &[usize],
    beta: f64,
    pilot_energy: f64,
) -> Result<MsePrediction> {
    let variance = theoretical_variance(support.len(), beta, pilot_energy);
    let bias = theoretical_bias(spec, support)?;
    let mse = variance + bias;
    Ok(MsePrediction {
        variance,
        bias,
        mse,
        nmse: mse / spec.len() as f64,
    })
}

/// MSE-minimizing modeling order and its support.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalOrder {
    pub m: usize,
    /// Ascending, 0-based.
    pub support: Vec<usize>,
    pub mse: f64,
}

/// Minimizes `m / (β‖p‖²) + Σ_{ℓ∉F_m} [B]_ℓℓ`.
///
/// Window-constrained mode scans single runs of consecutive indices (best window per
/// `m`). Unconstrained mode keeps exactly the entries larger than `1/(β‖p‖²)`, which is
/// the exact minimizer because each index contributes independently. Ties go to the
/// smaller `m`; `m = 0` (empty support) is allowed.
pub fn optimal_order(
    spec: &ChannelSpectrum,
    beta: f64,
    pilot_energy: f64,
    window_constrained: bool,
) -> OptimalOrder {
    let d = spec.diag();
    let n = d.len();
    let per_index = 1.0 / (beta * pilot_energy);
    let total = spec.total();
    if window_constrained {
        let prefix = Prefix::new(d);
        let mut best = OptimalOrder {
            m: 0,
            support: Vec::new(),
            mse: total,
        };
        for m in 1..=n {
            let (start, e) = best_window(&prefix, n, m);
            let mse = m as f64 * per_index + (total - e);
            if mse < best.mse {
                best = OptimalOrder {
                    m,
                    support: (start..start + m).collect(),
                    mse,
                };
            }
        }
        best
    } else {
        let mut support: Vec<usize> = (0..n).filter(|&i| d[i] > per_index).collect();
        support.sort_unstable();
        let kept: f64 = support.iter().map(|&i| d[i]).sum();
        OptimalOrder {
            m: support.len(),
            mse: support.len() as f64 * per_index + (total - kept),
            support,
        }
    }
}
