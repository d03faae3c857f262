//! Reduced-rank (RR) pilot-aided channel estimation for uniform linear arrays.
//!
//! The crate is organised bottom-up:
//!
//! - [`channel`]: clustered SIMO channel synthesis, pilots, received samples and
//!   spatial correlation matrices.
//! - [`bases`]: unitary bases (KLT, DCT-2, DFT, orthonormal polynomial), their
//!   truncations and the transform coding gain.
//! - [`spectrum`]: linear phase modulation (LPM) alignment, bias matrices, channel
//!   energy spectra, dominant supports and closed-form variance/bias/MSE.
//! - [`estimators`]: matched filter, LS, regular and LPM-aided RR estimators,
//!   MMSE baseline and pilot-based correlation estimation.
//! - [`rank_aoa`]: iterative modeling order determination (IMOD), the
//!   low-complexity mean-AoA search and the asymptotic rank formula.
//!
//! Every randomized routine is a pure function of its inputs and an explicit
//! seed (see [`rng`]).

pub mod bases;
pub mod channel;
pub mod error;
pub mod estimators;
pub mod quadrature;
pub mod rank_aoa;
pub mod rng;
pub mod search;
pub mod spectrum;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub use error::{Error, Result};

/// Complex double.
pub type C64 = Complex64;
/// Dense complex matrix.
pub type CMatrix = DMatrix<C64>;
/// Dense complex column vector.
pub type CVector = DVector<C64>;

/// Degrees to radians.
pub fn deg(x: f64) -> f64 {
    x.to_radians()
}

/// Frobenius norm of `a - a^H` relative to the Frobenius norm of `a` (absolute when `a` is tiny).
pub fn hermitian_deviation(a: &CMatrix) -> f64 {
    let diff = a - a.adjoint();
    let scale = a.norm().max(1.0);
    diff.norm() / scale
}

/// `(a + a^H) / 2`.
pub fn symmetrize(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()).scale(0.5)
}

/// Largest entry modulus.
pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
