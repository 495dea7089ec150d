use std::f64::consts::{E, PI};

use num_complex::Complex64;
use proptest::prelude::*;
use qnvp_core::bounds::*;
use qnvp_core::phase::{DistField, PhaseGrid};
use qnvp_core::Error;

fn spec_m(a: f64, m: u32, eps: f64, t0: f64, k: u32) -> NormSpec {
    NormSpec { t0, k, rate: DecayRate::Scaled { a, m, epsilon: eps } }
}

#[test]
fn weighted_norm_exact_cancellation() {
    let s = spec_m(1.0, 1, 0.5, 2.0, 1);
    let r = s.a_tilde();
    assert_eq!(r, 3.0);
    let times: Vec<f64> = (0..50).map(|i| 2.0 + 0.1 * i as f64).collect();
    let sup: Vec<f64> = times.iter().map(|t| t * (-r * t).exp()).collect();
    let n = weighted_sup_norm(&times, &sup, &s).unwrap();
    assert!(n.log.abs() <= 1e-12, "{}", n.log);
}

#[test]
fn weighted_norm_of_fast_decay_peaks_at_t0() {
    let s = spec_m(0.5, 2, 0.5, 1.5, 0);
    let r = s.a_tilde();
    let times: Vec<f64> = (0..40).map(|i| 0.5 + 0.1 * i as f64).collect();
    let sup: Vec<f64> = times.iter().map(|t| (-2.0 * r * t).exp()).collect();
    let n = weighted_sup_norm(&times, &sup, &s).unwrap();
    assert!((n.log - (-r * 1.5)).abs() <= 1e-12);
    assert!((n.argmax_time - 1.5).abs() < 1e-12);
}

#[test]
fn weighted_norm_edge_cases() {
    let s = spec_m(1.0, 1, 0.5, 1.0, 0);
    let n = weighted_sup_norm(&[1.0, 2.0], &[0.0, 0.0], &s).unwrap();
    assert_eq!(n.value(), 0.0);
    assert!(matches!(weighted_sup_norm(&[0.1, 0.5], &[1.0, 1.0], &s), Err(Error::EmptyWindow)));
}

#[test]
fn b_delta_examples() {
    let one = [(0i64, Complex64::new(1.0, 0.0))];
    for d in [0.1, 0.5, 1.0] {
        assert_eq!(b_delta_norm(&one, d).unwrap().value, 1.0);
    }
    let cos = [(-1i64, Complex64::new(0.5, 0.0)), (1, Complex64::new(0.5, 0.0))];
    assert!((b_delta_norm(&cos, 0.5).unwrap().value - 0.5).abs() < 1e-15);
    let c = [(-2i64, Complex64::new(0.0, 0.3)), (0, Complex64::new(-1.0, 0.0)), (3, Complex64::new(0.3, 0.4))];
    assert!((b_delta_norm(&c, 1.0).unwrap().value - 1.8).abs() < 1e-15);
    let n = 32;
    let vals: Vec<f64> = (0..n).map(|i| 1.0 + (2.0 * PI * i as f64 / n as f64).cos()).collect();
    let coeffs = fourier_coefficients(&vals);
    assert!((b_delta_norm(&coeffs, 0.5).unwrap().value - 1.5).abs() < 1e-14);
    assert!(b_delta_norm(&one, 0.0).is_err());
}

#[test]
fn maxwellian_satisfies_smoothness_hypothesis() {
    let g = PhaseGrid::new(16, 256, 1.0, 8.0).unwrap();
    let f = DistField::from_fn(g, 0.0, |_, v| (-0.5 * v * v).exp() / (2.0 * PI).sqrt());
    let mut spectrum = Vec::new();
    for nx in 0..3 {
        for j in 0..40 {
            let (kx, kv) = (2.0 * PI * nx as f64, 0.25 * j as f64);
            let fh = phase_space_transform(&f, kx, kv);
            let oracle = if nx == 0 { (-0.5 * kv * kv).exp() / (2.0 * PI) } else { 0.0 };
            assert!((fh.norm() - oracle).abs() < 1e-12, "{kx} {kv}");
            spectrum.push((kx, kv, fh.norm()));
        }
    }
    let values: Vec<(f64, f64, f64)> = (0..g.nv).map(|j| (0.0, g.v(j), f.at(0, j))).collect();
    for at in [0.25, 0.5, 1.0] {
        let p = LandauParams { a1: 1.0, a2: 1.0, a_tilde: at, t0: 1.0, k: 0 };
        let r = check_h(&p, &spectrum, &values);
        assert!(r.h1.pass, "a~ = {at}");
        assert!(r.h2.pass);
    }
}

#[test]
fn h3_boundary_and_time_threshold() {
    let p = LandauParams { a1: 0.125, a2: 1.0, a_tilde: 15.0, t0: 0.0, k: 0 };
    let r = check_h(&p, &[], &[]);
    assert!(r.h3.pass);
    assert_eq!(r.h3.margin, 0.0);
    let p = LandauParams { a1: 0.125, a2: 1.0, a_tilde: 1.0, t0: 0.0, k: 0 };
    let r = check_h(&p, &[], &[]);
    assert!(!r.h3.pass);
    let p = LandauParams { a1: 0.125, a2: 0.001, a_tilde: 1.0, t0: 0.0, k: 0 };
    assert!(check_h(&p, &[], &[]).h3.pass);
    let p = LandauParams { a1: 1.0, a2: 0.001, a_tilde: 1.0, t0: 2.0, k: 0 };
    assert!(!check_h(&p, &[], &[]).h3.pass);
}

#[test]
fn assumption_a_hand_arithmetic() {
    let p = LandauParams { a1: 1.0, a2: 1.0, a_tilde: 15.0, t0: 4.0, k: 1 };
    let r = check_a(&p);
    assert_eq!(r.c_e, 20.0);
    assert!(!r.a4.pass);
    assert!((r.a4.margin - (1.0 / 20.0 - 8.0 * E)).abs() < 1e-15);
    assert!(r.a5.pass);
    assert_eq!(r.a5.margin, 225.0 - 160.0);
    assert!(r.a1.pass && r.a1.margin == 0.0);
    assert!(r.a2.pass);
    let a3 = 1.0 - 50.0 * 20.0 / 15.0 * (3.0f64 / 15.0).powi(3) * (-3.0f64).exp();
    assert!((r.a3.margin - a3).abs() < 1e-15);
    assert!(r.a3.pass);
    let bad = LandauParams { k: 2, ..p };
    assert!(!check_a(&bad).a2.pass);
}

#[test]
fn a_tilde_examples() {
    let one = [1.0, 1.0];
    let zero = [0.0, 0.0];
    assert_eq!(a_tilde_series(&one, &one, &zero, 1.0).unwrap(), vec![2.0, 2.0]);
    assert_eq!(a_tilde_series(&one, &one, &zero, 0.5).unwrap(), vec![5.0, 5.0]);
    let r = a_tilde_series(&[1.3], &[0.0], &[0.3], 0.5).unwrap();
    assert!((r[0] - (1.0 + 4.0 * 0.3)).abs() < 1e-15);
}

#[test]
fn r_epsilon_examples() {
    for d in [2, 3] {
        let c = 16.0 * d as f64;
        for i in [0.0, 0.7, 5.0] {
            assert!((r_epsilon(c, i, d).unwrap().log - c.ln()).abs() < 1e-15);
        }
        assert!((r_epsilon(3.7, 0.0, d).unwrap().value() - 3.7).abs() < 1e-14);
    }
    let r = r_epsilon(32.0 / E, 2f64.ln(), 2).unwrap();
    assert!((r.log - (32f64.ln() - 2.0)).abs() < 1e-12);
    assert!((r.value() - 32.0 * (-2.0f64).exp()).abs() < 1e-13);
    let tiny = r_epsilon(1.0, 10.0, 2).unwrap();
    assert!(tiny.underflows());
}

#[test]
fn phi_psi_examples() {
    let (phi, psi) = phi_psi(1.0, 0.0, 2, 1).unwrap();
    assert!((phi.value() - 2.1116171470500014).abs() < 1e-13);
    assert_eq!(phi, psi);
    let (phi, psi) = phi_psi(0.3, 1.0, 3, 2).unwrap();
    assert!((psi.log - (phi.log - 2f64.ln())).abs() < 1e-15);
    let (phi, _) = phi_psi(0.01, 0.0, 2, 1).unwrap();
    assert!(phi.underflows());
    let logs: Vec<f64> = (1..=100).map(|i| phi_psi(i as f64 / 101.0, 0.0, 2, 1).unwrap().0.log).collect();
    assert!(logs.windows(2).all(|w| w[1] > w[0]));
    let logs: Vec<f64> = (1..=100).map(|i| phi_psi(0.05 + 0.9 * i as f64 / 101.0, 0.0, 3, 2).unwrap().0.log).collect();
    assert!(logs.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn rate_examples() {
    assert!((rate_kinetic(0.5, 0.0, 1, 1.0) - (2f64.ln() - 2.0)).abs() < 1e-15);
    let r: Vec<f64> = [0.5, 0.25, 0.125].iter().map(|e| rate_kinetic(*e, 1.0, 1, 2.0)).collect();
    assert!(r[0] > r[1] && r[1] > r[2]);
    let f: Vec<f64> = [0.5, 0.25, 0.125].iter().map(|e| rate_field(*e, 1.0, 1, 2.0, 1)).collect();
    assert!(f[0] > f[1] && f[1] > f[2]);
    for eps in [0.9, 0.5, 0.1] {
        for (a, m, t0) in [(1.0, 1, 2.0), (0.3, 2, 0.5), (0.0, 3, 1.0)] {
            assert_eq!(rate_field(eps, a, m, t0, 0), rate_kinetic(eps, a, m, t0));
            let d = rate_field(eps, a, m, t0, 1) - rate_field(eps, a, m, t0, 0);
            assert!((d + 2.0 * eps.ln()).abs() < 1e-12);
            let via_b = -log_b(eps, a, m, t0) - a * t0;
            assert!((via_b - rate_kinetic(eps, a, m, t0)).abs() <= 1e-12 * via_b.abs().max(1.0));
            assert_eq!(log_a(t0, eps, a, m), log_b(eps, a, m, t0));
        }
    }
}

#[test]
fn landau_root_matches_independent_oracle() {
    let cases = [
        (0.3, Complex64::new(1.15984648, -0.01262037), 1e-8),
        (0.4, Complex64::new(1.28505697, -0.06612796), 1e-8),
        (0.5, Complex64::new(1.41566188860, -0.15335946691), 1e-10),
        (1.0, Complex64::new(2.04590487, -0.85133046), 1e-8),
    ];
    for (k, oracle, tol) in cases {
        let w = landau_rate(k).unwrap();
        assert!((w - oracle).norm() < tol, "k={k}: {w}");
        assert!(dispersion_residual(k, w).norm() <= 1e-10);
    }
    let g = -landau_rate(0.5).unwrap().im;
    assert!((g - 0.1533).abs() < 1e-4);
}

#[test]
fn landau_modes_are_damped() {
    for i in 0..=80 {
        let k = 0.2 + 0.01 * i as f64;
        let w = landau_rate(k).unwrap();
        assert!(w.im < 0.0, "k = {k}");
        assert!(dispersion_residual(k, w).norm() <= 1e-10);
    }
    assert!(landau_rate(0.0).is_err());
    assert!(landau_rate(1.5).is_err());
}

fn random_series(seed: u64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut next = || {
        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (s >> 11) as f64 / (1u64 << 53) as f64
    };
    let mut t = 1.0;
    let mut times = Vec::with_capacity(n);
    let mut vals = Vec::with_capacity(n);
    for _ in 0..n {
        t += 0.05 + next();
        times.push(t);
        vals.push(next() * (-3.0 * t).exp() + 1e-12);
    }
    (times, vals)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]
    #[test]
    fn scaled_norm_equals_direct_norm(seed in any::<u64>(), a in 0.0f64..2.0, m in 1u32..4, eps in 0.05f64..0.99, k in 0u32..3) {
        let (t, v) = random_series(seed, 30);
        let s = spec_m(a, m, eps, 1.0, k);
        let d = NormSpec { rate: DecayRate::Direct { a_tilde: a + 1.0 / eps.powi(m as i32) }, ..s };
        let x = weighted_sup_norm(&t, &v, &s).unwrap();
        let y = weighted_sup_norm(&t, &v, &d).unwrap();
        prop_assert_eq!(x.log.to_bits(), y.log.to_bits());
    }

    #[test]
    fn norm_increases_with_m(seed in any::<u64>(), a in 0.0f64..2.0, m in 1u32..4, eps in 0.05f64..0.99, t0 in 1.0f64..2.0) {
        let (t, v) = random_series(seed, 30);
        let lo = weighted_sup_norm(&t, &v, &spec_m(a, m, eps, t0, 1)).unwrap();
        let hi = weighted_sup_norm(&t, &v, &spec_m(a, m + 1, eps, t0, 1)).unwrap();
        prop_assert!(hi.log >= lo.log);
    }
}
