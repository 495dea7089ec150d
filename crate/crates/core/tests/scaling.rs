use std::f64::consts::PI;

use qnvp_core::phase::*;
use qnvp_core::scaling::*;
use qnvp_core::uq::{build_ensemble, InputFamily, NodeRule, RandomInput, ZEnsemble};
use qnvp_core::vlasov::*;
use qnvp_core::Error;

fn landau_run(nx: usize, nv: usize, dt: f64, t_end: f64, every: usize, alpha: f64) -> Trajectory {
    let g = PhaseGrid::new(nx, nv, 4.0 * PI, 8.0).unwrap();
    let f0 = landau_initial(alpha, 1, 0.0, g).unwrap();
    let cfg = SolverConfig::new(1.0, dt, t_end, g);
    let n = (t_end / dt).round() as usize;
    let times: Vec<f64> = (0..=n).step_by(every).map(|i| i as f64 * dt).collect();
    evolve(&f0, &cfg, &times).unwrap()
}

#[test]
fn unit_factor_is_identity() {
    let traj = landau_run(16, 32, 0.1, 0.3, 1, 0.1);
    let map = ScalingMap::new(1, 16).unwrap();
    let r = rescale_solution(&traj, &map).unwrap();
    for (a, b) in r.snapshots.iter().zip(&traj.snapshots) {
        assert_eq!(a.f.values, b.f.values);
        assert_eq!(a.e.values, b.e.values);
        assert_eq!(a.time, b.time);
    }
}

#[test]
fn x_uniform_data_only_rescales_time() {
    let g = PhaseGrid::new(8, 32, 1.0, 8.0).unwrap();
    let f = DistField::from_fn(g, 0.6, |_, v| (-0.5 * v * v).exp());
    let map = ScalingMap::new(3, 8).unwrap();
    let h = rescale_field(&f, &map).unwrap();
    assert_eq!(h.grid.nx, 24);
    assert!((h.time - 0.2).abs() < 1e-15);
    for i in 0..24 {
        assert_eq!(h.row(i), f.row(0));
    }
}

#[test]
fn index_arithmetic_preserves_mass_and_values() {
    let traj = landau_run(16, 64, 0.1, 0.5, 1, 0.2);
    for n in [2, 4] {
        let map = ScalingMap::new(n, 16).unwrap();
        let r = rescale_solution(&traj, &map).unwrap();
        for (h, s) in r.snapshots.iter().zip(&traj.snapshots) {
            let f = &s.f;
            assert!((h.f.mass() - f.mass()).abs() <= 1e-13 * f.mass());
            assert!((h.time - s.time / n as f64).abs() < 1e-15);
            for i in 0..h.f.grid.nx {
                assert_eq!(h.f.row(i), f.row(i % f.grid.nx));
                assert_eq!(h.e.values[i], n as f64 * s.e.values[i % f.grid.nx]);
            }
        }
    }
}

#[test]
fn mismatched_grid_requires_interpolation() {
    let map = ScalingMap { n: 2, target_nx: 12, allow_interpolation: false };
    let v: Vec<f64> = (0..8).map(|i| (2.0 * PI * i as f64 / 8.0).sin()).collect();
    assert!(matches!(map.sample(&v, 1.0), Err(Error::GridMismatch { .. })));
    let map = ScalingMap { allow_interpolation: true, ..map };
    let s = map.sample(&v, 1.0).unwrap();
    for (i, x) in s.iter().enumerate() {
        assert!((x - (4.0 * PI * i as f64 / 12.0).sin()).abs() < 1e-13);
    }
}

#[test]
fn residual_vanishes_on_stationary_uniform_state() {
    let g = PhaseGrid::new(8, 64, 1.0, 8.0).unwrap();
    let snaps: Vec<Snapshot> = (0..4)
        .map(|n| Snapshot {
            time: 0.1 * n as f64,
            f: DistField::from_fn(g, 0.1 * n as f64, |_, v| (-0.5 * v * v).exp() / (2.0 * PI).sqrt()),
            e: FieldProfile::constant(1.0, 8, 0.0, FieldKind::ElectricField),
        })
        .collect();
    let r = quasineutral_residual(&snaps, 0.25).unwrap();
    assert!(r.pde <= 1e-12);
    assert!(r.gauss <= 1e-12);
    assert!(quasineutral_residual(&snaps[..2], 0.25).is_err());
}

#[test]
fn rescaled_solver_output_has_second_order_residual() {
    for n in [2usize, 4] {
        let eps = 1.0 / n as f64;
        let levels: Vec<Residuals> = [(16, 64, 0.2), (32, 128, 0.1), (64, 256, 0.05)]
            .iter()
            .map(|&(nx, nv, dt)| {
                let traj = landau_run(nx, nv, dt, 2.0, 1, 0.05);
                let map = ScalingMap::new(n, nx).unwrap();
                let r = rescale_solution(&traj, &map).unwrap();
                quasineutral_residual(&r.snapshots, eps).unwrap()
            })
            .collect();
        let s1 = (levels[0].pde / levels[1].pde).log2();
        let s2 = (levels[1].pde / levels[2].pde).log2();
        assert!((s2 - 2.0).abs() <= 0.3, "eps={eps}: slopes {s1} {s2} {levels:?}");
        assert!(levels.iter().all(|r| r.gauss <= 1e-10), "{levels:?}");
    }
}

fn manufactured(x: f64, t: f64, z: f64) -> f64 {
    (1.0 + 0.3 * z + 0.1 * z * z) * (2.0 * PI * x).sin() * (-t).exp() + z.powi(3) * (4.0 * PI * x).cos() * (0.5 * t).cos()
}

fn cgl(n: usize) -> ZEnsemble {
    let input = RandomInput { family: InputFamily::Amplitude { base: 1.0, slope: 0.1 }, support: (-1.0, 1.0) };
    build_ensemble(&input, n, NodeRule::ChebyshevLobatto).unwrap()
}

#[test]
fn identity_holds_for_manufactured_fields() {
    let ens = cgl(6);
    let nx = 32;
    let times = [0.0, 0.3, 1.1];
    for n in [1usize, 2, 4] {
        let map = ScalingMap::new(n, nx).unwrap();
        let nf = n as f64;
        let normal: Vec<Vec<FieldProfile>> = ens
            .nodes
            .iter()
            .map(|&z| {
                times
                    .iter()
                    .map(|&t| FieldProfile::from_fn(1.0, nx, FieldKind::ElectricField, |x| manufactured(x, t, z)))
                    .collect()
            })
            .collect();
        let quasi: Vec<Vec<FieldProfile>> = ens
            .nodes
            .iter()
            .map(|&z| {
                times
                    .iter()
                    .map(|&t| {
                        FieldProfile::from_fn(1.0, nx * n, FieldKind::ElectricField, |x| nf * manufactured(nf * x, t, z))
                    })
                    .collect()
            })
            .collect();
        for l in 0..=2u32 {
            for k in 0..=2usize {
                for at in [-0.4, 0.0, 0.7] {
                    let r = field_rescale_identity_check(&normal, &quasi, l, k, &map, &ens, at).unwrap();
                    assert!(r.max_rel_error <= 1e-8, "n={n} l={l} k={k}: {}", r.max_rel_error);
                }
            }
        }
        let built: Vec<Vec<FieldProfile>> =
            normal.iter().map(|s| s.iter().map(|e| rescale_efield(e, &map).unwrap()).collect()).collect();
        let r = field_rescale_identity_check(&normal, &built, 0, 0, &map, &ens, 0.0).unwrap();
        assert!(r.max_rel_error <= 1e-12);
    }
}

#[test]
fn identity_on_solver_pairs_is_within_discretization_error() {
    let ens = cgl(3);
    let input = RandomInput { family: InputFamily::Amplitude { base: 0.05, slope: 0.2 }, support: (-1.0, 1.0) };
    let n = 2usize;
    let (nx, nv, dt, t_end) = (16, 64, 0.1, 1.0);
    let times: Vec<f64> = (0..=10).map(|i| i as f64 * 0.1).collect();
    let run = |alpha: f64, nx: usize, dt: f64, eps: f64, kidx: u32| {
        let g = PhaseGrid::new(nx, nv, 4.0 * PI, 8.0).unwrap();
        let f0 = landau_initial(alpha, kidx, 0.0, g).unwrap();
        let cfg = SolverConfig::new(eps, dt, t_end * eps, g);
        let ts: Vec<f64> = times.iter().map(|t| t * eps).collect();
        evolve(&f0, &cfg, &ts).unwrap().snapshots.into_iter().map(|s| s.e).collect::<Vec<_>>()
    };
    let normal: Vec<Vec<FieldProfile>> = ens.nodes.iter().map(|&z| run(input.value(z), nx, dt, 1.0, 1)).collect();
    let eps = 1.0 / n as f64;
    let quasi: Vec<Vec<FieldProfile>> =
        ens.nodes.iter().map(|&z| run(input.value(z), nx * n, dt * eps, eps, n as u32)).collect();
    let map = ScalingMap::new(n, nx).unwrap();
    let fine: Vec<Vec<FieldProfile>> = ens
        .nodes
        .iter()
        .map(|&z| {
            let g = PhaseGrid::new(nx, 2 * nv, 4.0 * PI, 8.0).unwrap();
            let f0 = landau_initial(input.value(z), 1, 0.0, g).unwrap();
            let cfg = SolverConfig::new(1.0, dt / 2.0, t_end, g);
            evolve(&f0, &cfg, &times).unwrap().snapshots.into_iter().map(|s| s.e).collect()
        })
        .collect();
    for k in 0..=2usize {
        let disc = {
            let mut worst: f64 = 0.0;
            let mut scale: f64 = 0.0;
            for (a, b) in normal.iter().zip(&fine) {
                for (x, y) in a.iter().zip(b) {
                    for (p, q) in x.values.iter().zip(&y.values) {
                        worst = worst.max((p - q).abs());
                        scale = scale.max(q.abs());
                    }
                }
            }
            worst / scale
        };
        let r = field_rescale_identity_check(&normal, &quasi, 0, k, &map, &ens, 0.0).unwrap();
        assert!(r.max_rel_error <= 10.0 * disc, "k={k}: {} vs {disc}", r.max_rel_error);
    }
}

#[test]
fn root_location_and_field_reconstruction() {
    let a = 0.2;
    let rho = FieldProfile::from_fn(1.0, 64, FieldKind::ChargeDensity, |x| 1.0 + a * (2.0 * PI * x).cos());
    let e = poisson_solve(&rho, 0.5).unwrap();
    let x0 = locate_root(&e).unwrap();
    assert!(x0.abs() < 1e-12 || (x0 - 0.5).abs() < 1e-12);
    let rebuilt = field_from_root(&rho, x0, 0.5);
    for (p, q) in rebuilt.values.iter().zip(&e.values) {
        assert!((p - q).abs() < 1e-12);
    }
    let shifted = FieldProfile::from_fn(1.0, 64, FieldKind::ElectricField, |x| (2.0 * PI * (x - 0.3)).sin());
    let r = locate_root(&shifted).unwrap();
    assert!((r - 0.3).abs() < 1e-3);
    assert!(locate_root(&FieldProfile::constant(1.0, 8, 1.0, FieldKind::ElectricField)).is_none());
}

#[test]
fn zero_set_of_velocity_derivative() {
    let g = PhaseGrid::new(4, 32, 1.0, 8.0).unwrap();
    let flat = DistField::from_fn(g, 0.0, |_, _| 1.0);
    assert!((zero_set_fraction(&flat, 0.0) - 30.0 / 32.0).abs() < 1e-15);
    let m = DistField::from_fn(g, 0.0, |_, v| (-0.5 * v * v).exp());
    assert_eq!(zero_set_fraction(&m, 0.0), 0.0);
}
