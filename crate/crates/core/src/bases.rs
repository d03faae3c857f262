//! Unitary bases for reduced-rank modeling.
//!
//! Conventions used everywhere else in the crate:
//!
//! - DCT-2: `q_ℓ[i] = c_ℓ cos(π (2i+1) ℓ / 2M)` (0-based), `c_0 = √(1/M)`, `c_ℓ = √(2/M)`.
//! - DFT: `q_k[i] = exp(-j 2π i k / M) / √M`, the same sign law as the steering vector,
//!   so a plane wave with `(ξ/λ) sin φ = k/M` lands on column `k`.
//! - Polynomial: column `j` spans polynomials of degree `≤ j` in the antenna index,
//!   with positive leading coefficient (QR of the Vandermonde matrix with `diag(R) > 0`).
//! - KLT: eigenvectors sorted by descending eigenvalue, each column's first non-negligible
//!   entry made real and positive.

use std::f64::consts::PI;
use std::io::{self, Write};

use nalgebra::SymmetricEigen;

use crate::{hermitian_deviation, symmetrize, CMatrix, CVector, Error, Result, C64};

/// Hermitian tolerance accepted by [`basis_klt`].
pub const HERMITIAN_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BasisKind {
    Klt,
    Dct2,
    Dft,
    Polynomial,
}

impl BasisKind {
    pub fn name(&self) -> &'static str {
        match self {
            BasisKind::Klt => "klt",
            BasisKind::Dct2 => "dct2",
            BasisKind::Dft => "dft",
            BasisKind::Polynomial => "poly",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "klt" => Some(BasisKind::Klt),
            "dct" | "dct2" | "dct-2" => Some(BasisKind::Dct2),
            "dft" => Some(BasisKind::Dft),
            "poly" | "polynomial" => Some(BasisKind::Polynomial),
            _ => None,
        }
    }
}

impl std::fmt::Display for BasisKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// An `M x M` unitary matrix `Q` tagged with its construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    q: CMatrix,
    kind: BasisKind,
    eigenvalues: Option<Vec<f64>>,
}

impl Basis {
    pub fn q(&self) -> &CMatrix {
        &self.q
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    /// Eigenvalues in column order (KLT only).
    pub fn eigenvalues(&self) -> Option<&[f64]> {
        self.eigenvalues.as_deref()
    }

    /// `‖Q^H Q - I‖_F`.
    pub fn unitarity_error(&self) -> f64 {
        let m = self.dim();
        (self.q.adjoint() * &self.q - CMatrix::identity(m, m)).norm()
    }

    /// Permutes columns, e.g. for invariance checks.
    pub fn permuted(&self, order: &[usize]) -> Result<Basis> {
        let t = truncate(self, order)?;
        if order.len() != self.dim() {
            return Err(Error::InvalidSupport(
                "a permutation must list every column".into(),
            ));
        }
        Ok(Basis {
            q: t.columns,
            kind: self.kind,
            eigenvalues: self
                .eigenvalues
                .as_ref()
                .map(|ev| order.iter().map(|&i| ev[i]).collect()),
        })
    }

    /// Row-major CSV with `re,im` pairs for each entry.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        for i in 0..self.q.nrows() {
            let row: Vec<String> = (0..self.q.ncols())
                .map(|j| {
                    let z = self.q[(i, j)];
                    format!("{:.17e},{:.17e}", z.re, z.im)
                })
                .collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

fn check_dim(m: usize) -> Result<()> {
    if m < 2 {
        return Err(Error::InvalidConfig(format!(
            "basis size must be at least 2, got {m}"
        )));
    }
    Ok(())
}

/// Orthonormal type-2 DCT basis (real).
pub fn basis_dct2(m: usize) -> Result<Basis> {
    check_dim(m)?;
    let mf = m as f64;
    let q = CMatrix::from_fn(m, m, |i, l| {
        let c = if l == 0 {
            (1.0 / mf).sqrt()
        } else {
            (2.0 / mf).sqrt()
        };
        C64::new(
            c * (PI * (2 * i + 1) as f64 * l as f64 / (2.0 * mf)).cos(),
            0.0,
        )
    });
    Ok(Basis {
        q,
        kind: BasisKind::Dct2,
        eigenvalues: None,
    })
}

/// Unitary DFT basis with the steering-vector sign convention.
pub fn basis_dft(m: usize) -> Result<Basis> {
    check_dim(m)?;
    let scale = 1.0 / (m as f64).sqrt();
    let q = CMatrix::from_fn(m, m, |i, k| {
        // reduce i*k mod M first to keep the phase argument small
        let r = (i * k) % m;
        C64::from_polar(scale, -2.0 * PI * r as f64 / m as f64)
    });
    Ok(Basis {
        q,
        kind: BasisKind::Dft,
        eigenvalues: None,
    })
}

/// Orthonormal discrete polynomial basis: the `Q` factor of `U = QR` with
/// `U_ij = (i-1)^{j-1}` and `diag(R) > 0`.
///
/// The raw Vandermonde matrix is far too ill-conditioned at `M ≈ 100` for any QR to
/// recover its high-degree columns, so the same nested column spaces are built by
/// Arnoldi iteration on the centred, scaled node set with modified Gram–Schmidt and
/// one full reorthogonalization pass. Spans and sign convention are unchanged by the
/// affine change of variable, so the result is the same `Q`.
pub fn basis_polynomial(m: usize) -> Result<Basis> {
    check_dim(m)?;
    let nodes: Vec<f64> = (0..m)
        .map(|i| 2.0 * i as f64 / (m - 1) as f64 - 1.0)
        .collect();
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(m);
    cols.push(vec![1.0 / (m as f64).sqrt(); m]);
    for j in 1..m {
        let prev = &cols[j - 1];
        let mut v: Vec<f64> = prev.iter().zip(&nodes).map(|(q, x)| q * x).collect();
        let before = norm(&v);
        for _pass in 0..2 {
            for q in &cols {
                let proj = dot(q, &v);
                v.iter_mut().zip(q).for_each(|(vi, qi)| *vi -= proj * qi);
            }
        }
        let after = norm(&v);
        let ratio = after / before;
        if !(ratio > 1e-10) {
            return Err(Error::RankLoss { column: j, ratio });
        }
        v.iter_mut().for_each(|x| *x /= after);
        cols.push(v);
    }
    let q = CMatrix::from_fn(m, m, |i, j| C64::new(cols[j][i], 0.0));
    Ok(Basis {
        q,
        kind: BasisKind::Polynomial,
        eigenvalues: None,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Karhunen–Loève basis of a Hermitian matrix.
///
/// Columns are sorted by descending eigenvalue; equal eigenvalues keep the solver's
/// original order. The first entry of each column with magnitude above `1e-8` is
/// rotated to the positive real axis.
pub fn basis_klt(corr: &CMatrix) -> Result<Basis> {
    if !corr.is_square() {
        return Err(Error::Dimension("KLT needs a square matrix".into()));
    }
    check_dim(corr.nrows())?;
    let dev = hermitian_deviation(corr);
    if dev > HERMITIAN_TOL {
        return Err(Error::NotHermitian(dev));
    }
    let m = corr.nrows();
    let eig = SymmetricEigen::new(symmetrize(corr));
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut q = CMatrix::zeros(m, m);
    for (dst, &src) in order.iter().enumerate() {
        let mut col: CVector = eig.eigenvectors.column(src).into_owned();
        if let Some(anchor) = col.iter().find(|z| z.norm() > 1e-8).copied() {
            let rot = anchor.conj() / anchor.norm();
            col *= rot;
        }
        q.set_column(dst, &col);
    }
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    Ok(Basis {
        q,
        kind: BasisKind::Klt,
        eigenvalues: Some(eigenvalues),
    })
}

/// Builds a basis of the requested kind. `corr` is required for the KLT.
pub fn build_basis(kind: BasisKind, m: usize, corr: Option<&CMatrix>) -> Result<Basis> {
    match kind {
        BasisKind::Dct2 => basis_dct2(m),
        BasisKind::Dft => basis_dft(m),
        BasisKind::Polynomial => basis_polynomial(m),
        BasisKind::Klt => basis_klt(
            corr.ok_or_else(|| Error::InvalidConfig("KLT needs a correlation matrix".into()))?,
        ),
    }
}

/// Transform coding gain: arithmetic over geometric mean of `σ_ℓ² = [Q^H C Q]_ℓℓ`.
pub fn coding_gain(basis: &Basis, corr: &CMatrix) -> Result<f64> {
    if corr.nrows() != basis.dim() || !corr.is_square() {
        return Err(Error::Dimension(format!(
            "basis is {0}x{0} but correlation is {1}x{2}",
            basis.dim(),
            corr.nrows(),
            corr.ncols()
        )));
    }
    let q = basis.q();
    let m = basis.dim();
    let mut log_sum = 0.0;
    let mut sum = 0.0;
    for l in 0..m {
        let col = q.column(l);
        let var = col.dotc(&(corr * col)).re;
        if !(var > 0.0) {
            return Err(Error::NonPositiveVariance {
                index: l,
                value: var,
            });
        }
        sum += var;
        log_sum += var.ln();
    }
    let mf = m as f64;
    Ok((sum / mf) / (log_sum / mf).exp())
}

/// Column subset `Q_m` of a basis, in the listed order.
#[derive(Debug, Clone)]
pub struct TruncatedBasis<'a> {
    parent: &'a Basis,
    support: Vec<usize>,
    columns: CMatrix,
}

impl<'a> TruncatedBasis<'a> {
    pub fn parent(&self) -> &'a Basis {
        self.parent
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    /// `m = |F_m|`.
    pub fn order(&self) -> usize {
        self.support.len()
    }

    /// `Q_m`, `M x m`.
    pub fn columns(&self) -> &CMatrix {
        &self.columns
    }

    /// `Q_m Q_m^H`.
    pub fn projector(&self) -> CMatrix {
        &self.columns * self.columns.adjoint()
    }

    /// `Q_m Q_m^H x` without forming the projector.
    pub fn project(&self, x: &CVector) -> CVector {
        if self.support.is_empty() {
            return CVector::zeros(x.len());
        }
        &self.columns * self.columns.ad_mul(x)
    }

    /// `Q_m^H x`.
    pub fn coefficients(&self, x: &CVector) -> CVector {
        self.columns.ad_mul(x)
    }
}

/// Selects the columns listed in `support` (0-based).
pub fn truncate<'a>(basis: &'a Basis, support: &[usize]) -> Result<TruncatedBasis<'a>> {
    let m = basis.dim();
    let mut seen = vec![false; m];
    for &i in support {
        if i >= m {
            return Err(Error::InvalidSupport(format!(
                "index {i} out of range for M={m}"
            )));
        }
        if seen[i] {
            return Err(Error::InvalidSupport(format!("duplicate index {i}")));
        }
        seen[i] = true;
    }
    let columns = basis.q.select_columns(support);
    Ok(TruncatedBasis {
        parent: basis,
        support: support.to_vec(),
        columns,
    })
}

/// Leading `m` columns, `F_m = {0, …, m-1}`.
pub fn leading<'a>(basis: &'a Basis, m: usize) -> Result<TruncatedBasis<'a>> {
    let support: Vec<usize> = (0..m).collect();
    truncate(basis, &support)
}
