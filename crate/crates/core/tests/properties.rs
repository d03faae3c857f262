use std::f64::consts::FRAC_PI_2;

use proptest::prelude::*;

use rrmimo_core::bases::{build_basis, coding_gain, leading, truncate, BasisKind};
use rrmimo_core::channel::{
    correlation_analytic, make_pilot, steering_vector, synthesize_rx_with, ArrayGeometry,
    ClusterSpec, PilotStyle, SpatialCorrelation,
};
use rrmimo_core::estimators::{
    estimate_ls, estimate_rr_lpm, estimate_rr_regular, matched_filter, Alignment,
};
use rrmimo_core::rank_aoa::asymptotic_rank;
use rrmimo_core::rng::{complex_normal, seeded};
use rrmimo_core::spectrum::{
    bias_matrix, dominant_support, lpm, optimal_order, theoretical_bias, theoretical_variance,
    ChannelSpectrum,
};
use rrmimo_core::{max_abs, CMatrix, CVector};

const KINDS: [BasisKind; 4] = [
    BasisKind::Klt,
    BasisKind::Dct2,
    BasisKind::Dft,
    BasisKind::Polynomial,
];

fn cluster() -> impl Strategy<Value = (f64, f64)> {
    (-60.0f64..60.0, 1.0f64..20.0)
}

fn setup(m: usize, mean: f64, spread: f64) -> (ArrayGeometry, SpatialCorrelation) {
    let geom = ArrayGeometry::half_wavelength(m).unwrap();
    let c = ClusterSpec::from_degrees(mean, spread).unwrap();
    let corr = correlation_analytic(&geom, &c, 64).unwrap();
    (geom, corr)
}

fn spectrum_vec() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..5.0, 4..24).prop_map(|v| {
        let n = v.len() as f64;
        let total: f64 = v.iter().sum::<f64>().max(1e-9);
        v.into_iter().map(|x| x * n / total).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn steering_entries_have_unit_modulus(m in 2usize..64, phi in -FRAC_PI_2..FRAC_PI_2) {
        let a = steering_vector(&ArrayGeometry::half_wavelength(m).unwrap(), phi).unwrap();
        for z in a.iter() {
            prop_assert!((z.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn every_basis_is_unitary(m in 2usize..48, (mean, spread) in cluster()) {
        let (_, corr) = setup(m, mean, spread);
        for kind in KINDS {
            let b = build_basis(kind, m, Some(corr.matrix())).unwrap();
            prop_assert!(b.unitarity_error() < 1e-10, "{kind:?}");
        }
    }

    #[test]
    fn truncations_are_semi_unitary_idempotent_projectors(m in 3usize..32, k in 0usize..32, seed in 0u64..1000) {
        let k = k % m;
        let b = build_basis(BasisKind::Polynomial, m, None).unwrap();
        let mut idx: Vec<usize> = (0..m).collect();
        let mut s = seed;
        for i in (1..m).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1);
            idx.swap(i, (s >> 33) as usize % (i + 1));
        }
        let t = truncate(&b, &idx[..k]).unwrap();
        let qm = t.columns();
        prop_assert!(max_abs(&(qm.adjoint() * qm - CMatrix::identity(k, k))) < 1e-10);
        let p = t.projector();
        prop_assert!(max_abs(&(&p * &p - &p)) < 1e-10);
        prop_assert!((p.trace().re - k as f64).abs() < 1e-10);
    }

    #[test]
    fn coding_gain_ignores_column_order((mean, spread) in cluster(), seed in 0u64..1000) {
        let m = 16;
        let (_, corr) = setup(m, mean, spread);
        let b = build_basis(BasisKind::Dct2, m, None).unwrap();
        let mut order: Vec<usize> = (0..m).collect();
        order.rotate_left((seed % m as u64) as usize);
        order.swap(0, m - 1);
        let p = b.permuted(&order).unwrap();
        let (g1, g2) = (coding_gain(&b, corr.matrix()).unwrap(), coding_gain(&p, corr.matrix()).unwrap());
        prop_assert!((g1 - g2).abs() < 1e-9 * g1);
    }

    #[test]
    fn klt_has_the_largest_coding_gain((mean, spread) in (-60.0f64..60.0, 8.0f64..20.0)) {
        // M small enough that all transformed variances stay well above zero
        let m = 8;
        let (_, corr) = setup(m, mean, spread);
        let klt = build_basis(BasisKind::Klt, m, Some(corr.matrix())).unwrap();
        let top = coding_gain(&klt, corr.matrix()).unwrap();
        prop_assert!(top >= 1.0);
        for kind in [BasisKind::Dct2, BasisKind::Dft, BasisKind::Polynomial] {
            let other = coding_gain(&build_basis(kind, m, None).unwrap(), corr.matrix()).unwrap();
            prop_assert!(top >= other - 1e-10, "{kind:?}: {top} < {other}");
        }
    }

    #[test]
    fn bias_matrix_preserves_trace(m in 4usize..40, (mean, spread) in cluster(), align in -1.5f64..1.5) {
        let (geom, corr) = setup(m, mean, spread);
        let w = lpm(&geom, align).unwrap();
        for kind in KINDS {
            let b = build_basis(kind, m, Some(corr.matrix())).unwrap();
            let s = bias_matrix(&b, &corr, Some(&w)).unwrap().spectrum;
            prop_assert!((s.total() - m as f64).abs() < 1e-6);
            prop_assert!(s.diag().iter().all(|&v| v >= -1e-8));
        }
    }

    #[test]
    fn dominant_support_is_consistent(d in spectrum_vec(), eta in 0.05f64..0.99, windows in 1usize..=2) {
        let n = d.len();
        let spec = ChannelSpectrum::new(d, BasisKind::Dct2, None);
        let s = dominant_support(&spec, eta, windows).unwrap();
        let total_len: usize = s.windows.iter().map(|w| w.len).sum();
        prop_assert_eq!(total_len, s.m);
        prop_assert!(s.windows.iter().all(|w| w.end() <= n));
        let captured: f64 = s.indices().iter().map(|&i| spec.diag()[i]).sum();
        prop_assert!(captured > eta * n as f64);
        let bias = theoretical_bias(&spec, &s.indices()).unwrap();
        prop_assert!(bias < n as f64 * (1.0 - eta) + 1e-9);
        if windows == 2 {
            let single = dominant_support(&spec, eta, 1).unwrap();
            prop_assert!(s.m <= single.m);
        }
    }

    #[test]
    fn optimal_order_grows_with_snr(d in spectrum_vec(), t in 1.0f64..64.0, constrained: bool) {
        let spec = ChannelSpectrum::new(d, BasisKind::Dct2, None);
        let mut prev = 0;
        for db in (-10..=30).step_by(5) {
            let alpha = 10f64.powf(db as f64 / 10.0);
            let m = optimal_order(&spec, 1.0, t * alpha, constrained).m;
            prop_assert!(m >= prev, "m* fell from {prev} to {m} at {db} dB");
            prev = m;
        }
    }

    #[test]
    fn variance_law_is_basis_free(m in 0usize..200, beta in 0.01f64..10.0, energy in 1.0f64..256.0) {
        let v = theoretical_variance(m, beta, energy);
        prop_assert!((v * beta * energy - m as f64).abs() < 1e-9 * (m as f64).max(1.0));
    }

    #[test]
    fn full_support_rr_equals_ls(m in 2usize..24, seed in 0u64..10_000, phi in -1.5f64..1.5, kind_ix in 0usize..3) {
        let kind = [BasisKind::Dct2, BasisKind::Dft, BasisKind::Polynomial][kind_ix];
        let geom = ArrayGeometry::half_wavelength(m).unwrap();
        let b = build_basis(kind, m, None).unwrap();
        let full = leading(&b, m).unwrap();
        let p = make_pilot(8, 1, PilotStyle::Dft).unwrap().remove(0);
        let mut rng = seeded(seed);
        let h = CVector::from_fn(m, |_, _| complex_normal(&mut rng));
        let y = synthesize_rx_with(&h, 1.0, &p, 1.0, &mut rng);
        let mf = matched_filter(&y, &p, 1.0).unwrap();
        let ls = estimate_ls(&mf).h_hat;
        prop_assert!((estimate_rr_regular(&mf, &full).unwrap().h_hat - &ls).norm() < 1e-10);
        prop_assert!((estimate_rr_lpm(&mf, &full, &geom, Alignment::Known(phi)).unwrap().h_hat - &ls).norm() < 1e-10);
    }

    #[test]
    fn regular_rr_is_a_projection(m in 3usize..24, k in 1usize..24, seed in 0u64..10_000) {
        let k = 1 + k % (m - 1);
        let b = build_basis(BasisKind::Dct2, m, None).unwrap();
        let t = leading(&b, k).unwrap();
        let p = make_pilot(4, 1, PilotStyle::Dft).unwrap().remove(0);
        let mut rng = seeded(seed);
        let h = CVector::from_fn(m, |_, _| complex_normal(&mut rng));
        let y = synthesize_rx_with(&h, 1.0, &p, 1.0, &mut rng);
        let once = estimate_rr_regular(&matched_filter(&y, &p, 1.0).unwrap(), &t).unwrap().h_hat;
        let y2 = synthesize_rx_with(&once, 1.0, &p, 0.0, &mut rng);
        let twice = estimate_rr_regular(&matched_filter(&y2, &p, 1.0).unwrap(), &t).unwrap().h_hat;
        prop_assert!((twice - once).norm() < 1e-10);
    }

    #[test]
    fn asymptotic_rank_shrinks_off_broadside(spread in 1.0f64..25.0, phi in 0.0f64..60.0) {
        let geom = ArrayGeometry::half_wavelength(100).unwrap();
        let at = |p: f64| asymptotic_rank(&geom, &ClusterSpec::from_degrees(p, spread).unwrap());
        let r = at(phi);
        prop_assert!((0.0..=1.0).contains(&r));
        prop_assert!(at(0.0) >= r - 1e-12);
    }
}
