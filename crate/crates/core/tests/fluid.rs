use std::f64::consts::PI;

use num_complex::Complex64;
use qnvp_core::fluid::*;
use qnvp_core::phase::*;
use qnvp_core::transport::wasserstein_exact;
use qnvp_core::Error;

fn profile(n: usize, f: impl Fn(f64) -> f64, kind: FieldKind) -> FieldProfile {
    FieldProfile::from_fn(1.0, n, kind, f)
}

fn single(rho: FieldProfile, u: FieldProfile, eps: f64) -> FluidEnsemble {
    FluidEnsemble::new(vec![0.0], vec![1.0], vec![rho], vec![u], Regime::Quasineutral { epsilon: eps }).unwrap()
}

fn cos_mode(p: &FieldProfile) -> f64 {
    let n = p.len() as f64;
    p.values.iter().enumerate().map(|(i, v)| (v - 1.0) * (2.0 * PI * i as f64 / n).cos()).sum::<f64>() * 2.0 / n
}

#[test]
fn equilibrium_is_fixed_point() {
    let s = single(
        FieldProfile::constant(1.0, 32, 1.0, FieldKind::ChargeDensity),
        FieldProfile::constant(1.0, 32, 0.0, FieldKind::Velocity),
        0.1,
    );
    let n = fluid_step(&s, 0.01).unwrap();
    assert_eq!(n.rho, s.rho);
    assert_eq!(n.u, s.u);
}

#[test]
fn uniform_drift_is_preserved() {
    let s = single(
        FieldProfile::constant(1.0, 32, 1.0, FieldKind::ChargeDensity),
        FieldProfile::constant(1.0, 32, 0.7, FieldKind::Velocity),
        0.1,
    );
    let out = evolve_fluid(&s, 0.01, 50, 50).unwrap();
    let last = out.last().unwrap();
    assert!(last.field().unwrap().values.iter().all(|e| e.abs() < 1e-13));
    assert!(last.rho[0].values.iter().all(|r| (r - 1.0).abs() < 1e-13));
    assert!(last.u[0].values.iter().all(|u| (u - 0.7).abs() < 1e-13));
}

#[test]
fn cold_plasma_oscillates_at_frequency_one_over_epsilon() {
    let (eps, delta) = (0.1, 1e-3);
    let n = 64;
    let s = single(
        profile(n, |x| 1.0 + delta * (2.0 * PI * x).cos(), FieldKind::ChargeDensity),
        FieldProfile::constant(1.0, n, 0.0, FieldKind::Velocity),
        eps,
    );
    let dt = eps / 100.0;
    let states = evolve_fluid(&s, dt, 1000, 1).unwrap();
    let amp: Vec<f64> = states.iter().map(|s| cos_mode(&s.rho[0])).collect();
    let mut crossings = Vec::new();
    for i in 1..amp.len() {
        if amp[i - 1].signum() != amp[i].signum() {
            let t = dt * ((i - 1) as f64 + amp[i - 1] / (amp[i - 1] - amp[i]));
            crossings.push(t);
        }
    }
    assert!(crossings.len() >= 3);
    let period = crossings[2] - crossings[0];
    let expected = 2.0 * PI * eps;
    assert!((period - expected).abs() <= 0.02 * expected, "{period} vs {expected}");
    assert!((crossings[0] - 0.5 * PI * eps).abs() <= 0.02 * 0.5 * PI * eps);
}

#[test]
fn label_averaged_mass_is_conserved() {
    let (thetas, weights) = mu_quadrature(5, 2.0);
    let n = 32;
    let rho: Vec<FieldProfile> =
        (0..5).map(|j| profile(n, |x| 1.0 + 0.1 * (2.0 * PI * x + j as f64).cos(), FieldKind::ChargeDensity)).collect();
    let u: Vec<FieldProfile> = thetas
        .iter()
        .map(|t| profile(n, |x| 0.1 * t + 0.01 * (2.0 * PI * x).sin(), FieldKind::Velocity))
        .collect();
    let s = FluidEnsemble::new(thetas, weights, rho, u, Regime::Quasineutral { epsilon: 0.5 }).unwrap();
    let m0 = s.mass();
    let out = evolve_fluid(&s, 0.001, 1000, 1000).unwrap();
    let m1 = out.last().unwrap().mass();
    assert!((m1 - m0).abs() / m0 <= 1e-10);
}

#[test]
fn mu_quadrature_is_symmetric_probability() {
    let (t, w) = mu_quadrature(9, 5.0);
    assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    for i in 0..9 {
        assert!((t[i] + t[8 - i]).abs() < 1e-14);
        assert!((w[i] - w[8 - i]).abs() < 1e-15);
    }
    assert!(w[4] > w[0]);
}

#[test]
fn shock_is_detected() {
    let s = single(
        FieldProfile::constant(1.0, 32, 1.0, FieldKind::ChargeDensity),
        profile(32, |x| 2.0 * (2.0 * PI * x).sin(), FieldKind::Velocity),
        1.0,
    );
    assert!(fluid_step(&s, 0.01).is_ok());
    assert!(matches!(fluid_step(&s, 0.2), Err(Error::ShockDetected { .. })));
}

#[test]
fn reconstruction_of_rest_state() {
    let s = single(
        FieldProfile::constant(1.0, 16, 1.0, FieldKind::ChargeDensity),
        FieldProfile::constant(1.0, 16, 0.0, FieldKind::Velocity),
        0.1,
    );
    let c = reconstruct_kinetic(&s).unwrap();
    assert_eq!(c.len(), 16);
    for i in 0..16 {
        assert_eq!(c.point(i).1[0], 0.0);
        assert!((c.weights[i] - 1.0 / 16.0).abs() < 1e-15);
    }
    let (w, _) = wasserstein_exact(&c, &c, 1).unwrap();
    assert!(w.abs() < 1e-14);
}

#[test]
fn reconstruction_of_two_beams() {
    let n = 8;
    let s = FluidEnsemble::new(
        vec![-1.0, 1.0],
        vec![0.5, 0.5],
        vec![FieldProfile::constant(1.0, n, 1.0, FieldKind::ChargeDensity); 2],
        vec![
            FieldProfile::constant(1.0, n, -1.0, FieldKind::Velocity),
            FieldProfile::constant(1.0, n, 1.0, FieldKind::Velocity),
        ],
        Regime::Quasineutral { epsilon: 1.0 },
    )
    .unwrap();
    let c = reconstruct_kinetic(&s).unwrap();
    let mut beam = [0.0; 2];
    for i in 0..c.len() {
        let v = c.point(i).1[0];
        beam[if v < 0.0 { 0 } else { 1 }] += c.weights[i];
    }
    assert!((beam[0] - 0.5).abs() < 1e-14 && (beam[1] - 0.5).abs() < 1e-14);
    assert!((c.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
}

#[test]
fn corrector_init_examples() {
    let n = 16;
    let zero = FieldProfile::constant(1.0, n, 0.0, FieldKind::ElectricField);
    let c = corrector_init(&zero, &zero, 0.3).unwrap();
    assert!(c.d_plus.iter().chain(&c.d_minus).all(|d| d.norm() == 0.0));
    assert!(corrector_eval(&c, 1.7).unwrap().values.iter().all(|v| *v == 0.0));

    let sin = profile(n, |x| (2.0 * PI * x).sin(), FieldKind::Current);
    let c = corrector_init(&zero, &sin, 0.3).unwrap();
    for i in 0..n {
        let s = sin.values[i];
        assert!((c.d_plus[i] - Complex64::new(0.0, 0.5 * s)).norm() < 1e-15);
        assert!((c.d_minus[i] - Complex64::new(0.0, -0.5 * s)).norm() < 1e-15);
    }

    let c = corrector_init(&sin, &zero, 0.5).unwrap();
    for i in 0..n {
        let s = sin.values[i];
        assert!((c.d_plus[i] - Complex64::new(0.25 * s, 0.0)).norm() < 1e-15);
        assert!((c.d_minus[i] - Complex64::new(0.25 * s, 0.0)).norm() < 1e-15);
    }
}

fn constant_state(n: usize, dp: Complex64, dm: Complex64, eps: f64) -> CorrectorState {
    CorrectorState { d_plus: vec![dp; n], d_minus: vec![dm; n], length: 1.0, epsilon: eps }
}

#[test]
fn corrector_eval_examples() {
    let eps = 0.2;
    let c = constant_state(8, Complex64::new(0.0, 0.5), Complex64::new(0.0, -0.5), eps);
    for t in [0.0, 0.1, 0.37, 2.0] {
        let v = corrector_eval(&c, t).unwrap();
        assert!(v.values.iter().all(|x| (x + (t / eps).cos()).abs() < 1e-15));
    }
    let c = constant_state(8, Complex64::new(0.3, 0.0), Complex64::new(0.3, 0.0), eps);
    assert!(corrector_eval(&c, 0.0).unwrap().values.iter().all(|x| x.abs() < 1e-15));
    let bad = constant_state(8, Complex64::new(0.3, 0.0), Complex64::new(-0.3, 0.0), eps);
    assert!(matches!(corrector_eval(&bad, 0.0), Err(Error::ComplexLeak { .. })));
}

#[test]
fn corrector_is_periodic_in_time() {
    let eps = 0.07;
    let e = profile(32, |x| (2.0 * PI * x).sin() + 0.3 * (4.0 * PI * x).cos(), FieldKind::ElectricField);
    let j = profile(32, |x| (2.0 * PI * x).cos(), FieldKind::Current);
    let c = corrector_init(&e, &j, eps).unwrap();
    for t in [0.0, 0.13, 1.0] {
        let a = corrector_eval(&c, t).unwrap();
        let b = corrector_eval(&c, t + 2.0 * PI * eps).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() <= 1e-12);
        }
    }
}

#[test]
fn corrector_transport() {
    let n = 32;
    let e = profile(n, |x| (2.0 * PI * x).sin(), FieldKind::ElectricField);
    let j = profile(n, |x| (2.0 * PI * x).cos(), FieldKind::Current);
    let c0 = corrector_init(&e, &j, 0.1).unwrap();
    let still = corrector_step(&c0, &FieldProfile::constant(1.0, n, 0.0, FieldKind::Current), 0.3).unwrap();
    for (a, b) in still.d_plus.iter().zip(&c0.d_plus) {
        assert!((a - b).norm() <= 1e-15);
    }
    let one = FieldProfile::constant(1.0, n, 1.0, FieldKind::Current);
    let round = corrector_step(&c0, &one, 1.0).unwrap();
    for (a, b) in round.d_plus.iter().zip(&c0.d_plus) {
        assert!((a - b).norm() <= 1e-8);
    }
    let mut c = c0.clone();
    let wavy = profile(n, |x| 0.5 + 0.2 * (2.0 * PI * x).sin(), FieldKind::Current);
    for _ in 0..20 {
        c = corrector_step(&c, &wavy, 0.013).unwrap();
        let m: Complex64 = c.d_plus.iter().sum::<Complex64>() / n as f64;
        assert!(m.norm() <= 1e-12);
    }
}

#[test]
fn velocity_shift() {
    let g = PhaseGrid::new(8, 64, 1.0, 8.0).unwrap();
    let f = DistField::from_fn(g, 0.0, |x, v| (1.0 + 0.3 * (2.0 * PI * x).sin()) * (-0.5 * v * v).exp());
    let zero = FieldProfile::constant(1.0, 8, 0.0, FieldKind::Velocity);
    assert_eq!(shift_velocity(&f, &zero).unwrap().values, f.values);
    let c = FieldProfile::constant(1.0, 8, 3.0 * g.dv(), FieldKind::Velocity);
    let s = shift_velocity(&f, &c).unwrap();
    for i in 0..g.nx {
        for j in 3..g.nv {
            assert!((s.at(i, j) - f.at(i, j - 3)).abs() < 1e-15);
        }
    }
    let wavy = profile(8, |x| 0.4 * (2.0 * PI * x).cos(), FieldKind::Velocity);
    let shifted = shift_velocity(&f, &wavy).unwrap();
    assert!((shifted.mass() - f.mass()).abs() <= 1e-10);
}

#[test]
fn velocity_shift_round_trip_is_fourth_order() {
    let err = |nv: usize| {
        let g = PhaseGrid::new(8, nv, 1.0, 8.0).unwrap();
        let f = DistField::from_fn(g, 0.0, |_, v| (-0.5 * v * v).exp());
        let c = profile(8, |x| 0.37 + 0.2 * (2.0 * PI * x).cos(), FieldKind::Velocity);
        let back = FieldProfile::new(1.0, c.values.iter().map(|v| -v).collect(), FieldKind::Velocity);
        let r = shift_velocity(&shift_velocity(&f, &c).unwrap(), &back).unwrap();
        r.values.iter().zip(&f.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    };
    let slope = (err(64) / err(128)).log2();
    assert!((slope - 4.0).abs() < 0.5, "slope {slope}");
}

#[test]
fn corrector_removes_cold_plasma_oscillation() {
    let (eps, delta) = (0.05, 1e-3);
    let n = 64;
    let s = single(
        profile(n, |x| 1.0 + eps * delta * (2.0 * PI * x).cos(), FieldKind::ChargeDensity),
        FieldProfile::constant(1.0, n, 0.0, FieldKind::Velocity),
        eps,
    );
    let dt = eps / 40.0;
    let steps = 400;
    let states = evolve_fluid(&s, dt, steps, 1).unwrap();
    let c = corrector_init(&s.field().unwrap(), &s.current(), eps).unwrap();
    let mut worst_ratio: f64 = 0.0;
    for st in states.iter().skip(1).step_by(37) {
        let corr = corrector_eval(&c, st.time).unwrap();
        let raw = st.u[0].sup_norm();
        let fixed = st.u[0].values.iter().zip(&corr.values).map(|(u, c)| (u + c).abs()).fold(0.0, f64::max);
        if raw > 0.2 * delta / (2.0 * PI) {
            worst_ratio = worst_ratio.max(fixed / raw);
        }
    }
    assert!(worst_ratio <= 0.3, "ratio {worst_ratio}");
}
