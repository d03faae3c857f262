//! Library results checked against slow, independent reference computations.

use std::f64::consts::PI;

use num_complex::Complex64 as C;
use rrmimo_core::bases::{
    basis_dct2, basis_dft, basis_klt, basis_polynomial, build_basis, BasisKind,
};
use rrmimo_core::channel::{correlation_analytic, steering_vector, ArrayGeometry, ClusterSpec};
use rrmimo_core::spectrum::{bias_matrix, dominant_support, optimal_order, ChannelSpectrum};
use rrmimo_core::{CMatrix, C64};

/// `Φ_ik = (1/2Δ) ∫ exp(-j2π ξ (i-k) sin θ) dθ` by composite Simpson on a fine grid.
fn simpson_correlation(m: usize, xi: f64, mean: f64, spread: f64) -> Vec<Vec<C>> {
    let n = 40_000;
    let (a, b) = (mean - spread, mean + spread);
    let h = (b - a) / n as f64;
    let mut out = vec![vec![C::new(0.0, 0.0); m]; m];
    for lag in 0..m {
        let mut acc = C::new(0.0, 0.0);
        for k in 0..=n {
            let th = a + k as f64 * h;
            let w = if k == 0 || k == n {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc += C::from_polar(w, -2.0 * PI * xi * lag as f64 * th.sin());
        }
        let v = acc * (h / 3.0) / (b - a);
        for i in lag..m {
            out[i][i - lag] = v;
            out[i - lag][i] = v.conj();
        }
    }
    out
}

#[test]
fn analytic_correlation_matches_simpson() {
    let m = 24;
    let geom = ArrayGeometry::half_wavelength(m).unwrap();
    for (mean, spread) in [(60.0, 7.2), (0.0, 15.0), (-30.0, 10.0)] {
        let c = ClusterSpec::from_degrees(mean, spread).unwrap();
        let got = correlation_analytic(&geom, &c, 64).unwrap();
        let want = simpson_correlation(m, 0.5, f64::to_radians(mean), f64::to_radians(spread));
        for (i, row) in want.iter().enumerate() {
            for (k, w) in row.iter().enumerate() {
                assert!(
                    (got.matrix()[(i, k)] - w).norm() < 1e-9,
                    "({mean},{spread}) entry {i},{k}"
                );
            }
        }
    }
}

#[test]
fn dct_matches_cosine_formula() {
    for m in [3usize, 8, 17, 100] {
        let q = basis_dct2(m).unwrap();
        for l in 0..m {
            let c = if l == 0 {
                (1.0 / m as f64).sqrt()
            } else {
                (2.0 / m as f64).sqrt()
            };
            for i in 0..m {
                let want = c * (PI * (2 * i + 1) as f64 * l as f64 / (2.0 * m as f64)).cos();
                assert!((q.q()[(i, l)] - C64::new(want, 0.0)).norm() < 1e-13);
            }
        }
    }
}

#[test]
fn dft_matches_exponential_formula() {
    let m = 12;
    let q = basis_dft(m).unwrap();
    for i in 0..m {
        for k in 0..m {
            let want = C::from_polar(
                1.0 / (m as f64).sqrt(),
                -2.0 * PI * (i * k) as f64 / m as f64,
            );
            assert!((q.q()[(i, k)] - want).norm() < 1e-13);
        }
    }
}

/// Textbook Gram–Schmidt on raw monomials, which is still well conditioned at M = 11 up to degree 5.
#[test]
fn polynomial_columns_match_low_degree_gram_schmidt() {
    let m = 11;
    let q = basis_polynomial(m).unwrap();
    let mut cols: Vec<Vec<f64>> = Vec::new();
    for deg in 0..6 {
        let mut v: Vec<f64> = (0..m).map(|i| (i as f64).powi(deg)).collect();
        for u in &cols {
            let d: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(u).for_each(|(a, b)| *a -= d * b);
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= n);
        for (i, vi) in v.iter().enumerate() {
            assert!(
                (q.q()[(i, deg as usize)].re - vi).abs() < 1e-10,
                "degree {deg}"
            );
        }
        cols.push(v);
    }
}

/// Direct triple sum `q_ℓ^H W^H Φ W q_ℓ` with `W` built from its scalar definition.
fn spectrum_by_loops(q: &CMatrix, phi: &CMatrix, aoa: f64) -> Vec<f64> {
    let m = q.nrows();
    let w: Vec<C> = (0..m)
        .map(|i| C::from_polar(1.0, -PI * i as f64 * aoa.sin()))
        .collect();
    (0..m)
        .map(|l| {
            let mut acc = C::new(0.0, 0.0);
            for i in 0..m {
                for k in 0..m {
                    acc += (w[i] * q[(i, l)]).conj() * phi[(i, k)] * w[k] * q[(k, l)];
                }
            }
            acc.re
        })
        .collect()
}

#[test]
fn bias_diagonal_matches_loop_oracle() {
    let m = 16;
    let geom = ArrayGeometry::half_wavelength(m).unwrap();
    let c = ClusterSpec::from_degrees(35.0, 9.0).unwrap();
    let corr = correlation_analytic(&geom, &c, 64).unwrap();
    for kind in [BasisKind::Dct2, BasisKind::Dft, BasisKind::Polynomial] {
        let b = build_basis(kind, m, None).unwrap();
        let w = rrmimo_core::spectrum::lpm(&geom, 35f64.to_radians()).unwrap();
        let got = bias_matrix(&b, &corr, Some(&w)).unwrap().spectrum;
        let want = spectrum_by_loops(b.q(), corr.matrix(), 35f64.to_radians());
        for (g, w) in got.diag().iter().zip(&want) {
            assert!((g - w).abs() < 1e-10);
        }
    }
}

/// Power iteration with deflation for the top few eigenpairs.
fn top_eigen(a: &CMatrix, k: usize) -> Vec<f64> {
    let m = a.nrows();
    let mut a = a.clone();
    let mut out = Vec::new();
    for _ in 0..k {
        let mut v = rrmimo_core::CVector::from_fn(m, |i, _| C::new(1.0 + i as f64 * 0.01, 0.3));
        let mut lambda = 0.0;
        for _ in 0..5000 {
            let w = &a * &v;
            lambda = v.dotc(&w).re / v.norm_squared();
            v = w.unscale(w.norm());
        }
        out.push(lambda);
        a -= (&v * v.adjoint()).scale(lambda);
    }
    out
}

#[test]
fn klt_leading_eigenvalues_match_power_iteration() {
    let m = 20;
    let geom = ArrayGeometry::half_wavelength(m).unwrap();
    let c = ClusterSpec::from_degrees(10.0, 12.0).unwrap();
    let corr = correlation_analytic(&geom, &c, 64).unwrap();
    let b = basis_klt(corr.matrix()).unwrap();
    let want = top_eigen(corr.matrix(), 3);
    for (g, w) in b.eigenvalues().unwrap().iter().zip(&want) {
        assert!((g - w).abs() < 1e-8 * want[0]);
    }
}

#[test]
fn klt_of_point_source_is_steering_direction() {
    let m = 10;
    let geom = ArrayGeometry::half_wavelength(m).unwrap();
    let a = steering_vector(&geom, 0.4).unwrap();
    let b = basis_klt(&(&a * a.adjoint())).unwrap();
    assert!((b.eigenvalues().unwrap()[0] - m as f64).abs() < 1e-10);
    let overlap = b.q().column(0).dotc(&a).norm() / (m as f64).sqrt();
    assert!((overlap - 1.0).abs() < 1e-10);
}

/// Exhaustive `(start, len)` scan implementing the same tie rule.
fn brute_single_window(d: &[f64], eta: f64) -> (usize, usize) {
    let n = d.len();
    for len in 1..=n {
        let mut best: Option<(usize, f64)> = None;
        for start in 0..=n - len {
            let e: f64 = d[start..start + len].iter().sum();
            if best.is_none_or(|(_, be)| e > be) {
                best = Some((start, e));
            }
        }
        let (start, e) = best.unwrap();
        if e > eta * n as f64 {
            return (start, len);
        }
    }
    (0, n)
}

/// Minimum size of any union of at most two disjoint windows capturing more than `ηM`.
fn brute_two_window_size(d: &[f64], eta: f64) -> usize {
    let n = d.len();
    let mut best = n;
    for s1 in 0..n {
        for e1 in s1 + 1..=n {
            let a: f64 = d[s1..e1].iter().sum();
            if a > eta * n as f64 {
                best = best.min(e1 - s1);
            }
            for s2 in e1..n {
                for e2 in s2 + 1..=n {
                    let b: f64 = d[s2..e2].iter().sum();
                    if a + b > eta * n as f64 {
                        best = best.min(e1 - s1 + e2 - s2);
                    }
                }
            }
        }
    }
    best
}

fn lcg_spectrum(seed: u64, n: usize) -> Vec<f64> {
    let mut x = seed
        .wrapping_mul(6364136223846793005)
        .wrapping_add(1442695040888963407);
    (0..n)
        .map(|_| {
            x = x
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            let u = (x >> 11) as f64 / (1u64 << 53) as f64;
            u.powi(3) * 4.0
        })
        .collect()
}

#[test]
fn dominant_support_matches_exhaustive_scan() {
    for seed in 0..60 {
        let n = 6 + (seed as usize % 9);
        let raw = lcg_spectrum(seed, n);
        let total: f64 = raw.iter().sum();
        let d: Vec<f64> = raw.iter().map(|v| v * n as f64 / total).collect();
        let spec = ChannelSpectrum::new(d.clone(), BasisKind::Dct2, None);
        for eta in [0.3, 0.6, 0.9] {
            let one = dominant_support(&spec, eta, 1).unwrap();
            let (start, len) = brute_single_window(&d, eta);
            assert_eq!((one.windows[0].start, one.m), (start, len), "seed {seed}");
            let two = dominant_support(&spec, eta, 2).unwrap();
            assert_eq!(two.m, brute_two_window_size(&d, eta), "seed {seed}");
        }
    }
}

#[test]
fn unconstrained_order_matches_subset_enumeration() {
    for seed in 100..140 {
        let n = 8;
        let d = lcg_spectrum(seed, n);
        let spec = ChannelSpectrum::new(d.clone(), BasisKind::Klt, None);
        for energy in [0.3, 1.0, 4.0, 30.0] {
            let got = optimal_order(&spec, 1.0, energy, false);
            let mut best = f64::INFINITY;
            for mask in 0u32..(1 << n) {
                let kept: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| d[i]).sum();
                let mse = mask.count_ones() as f64 / energy + d.iter().sum::<f64>() - kept;
                best = best.min(mse);
            }
            assert!((got.mse - best).abs() < 1e-12);
        }
    }
}

#[test]
fn windowed_order_matches_window_enumeration() {
    for seed in 200..230 {
        let n = 12;
        let d = lcg_spectrum(seed, n);
        let spec = ChannelSpectrum::new(d.clone(), BasisKind::Dct2, None);
        let total: f64 = d.iter().sum();
        for energy in [0.5, 2.0, 10.0] {
            let got = optimal_order(&spec, 1.0, energy, true);
            let mut best = (total, 0usize);
            for len in 1..=n {
                for s in 0..=n - len {
                    let mse = len as f64 / energy + total - d[s..s + len].iter().sum::<f64>();
                    if mse < best.0 {
                        best = (mse, len);
                    }
                }
            }
            assert_eq!(got.m, best.1);
            assert!((got.mse - best.0).abs() < 1e-12);
        }
    }
}
