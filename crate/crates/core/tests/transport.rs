use proptest::prelude::*;
use qnvp_core::phase::{DistField, PhaseGrid};
use qnvp_core::transport::*;
use qnvp_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

fn cloud(points: &[(f64, f64)], weights: &[f64]) -> WeightedCloud {
    let coords: Vec<f64> = points.iter().flat_map(|(x, v)| [*x, *v]).collect();
    WeightedCloud::new(1, 1, coords, weights.to_vec(), 1.0).unwrap()
}

fn random_cloud(rng: &mut ChaCha8Rng, n: usize) -> WeightedCloud {
    let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen::<f64>(), rng.gen_range(-2.0..2.0))).collect();
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
    let s: f64 = raw.iter().sum();
    let coords: Vec<f64> = pts.iter().flat_map(|(x, v)| [*x, *v]).collect();
    WeightedCloud::normalized(1, 1, &coords, &raw.iter().map(|w| w / s).collect::<Vec<_>>(), 1.0).unwrap()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for k in 0..n {
            let mut q = p.clone();
            q.insert(k, n - 1);
            out.push(q);
        }
    }
    out
}

#[test]
fn ground_cost_examples() {
    assert_eq!(ground_cost(&[0.4], &[1.0], &[0.4], &[1.0], 1.0, 1), 0.0);
    assert!((ground_cost(&[0.1], &[0.5], &[0.9], &[0.5], 1.0, 1) - 0.2).abs() < 1e-15);
    assert_eq!(ground_cost(&[0.2], &[0.0], &[0.2], &[3.0], 1.0, 2), 9.0);
    assert!((ground_cost(&[0.0], &[0.0], &[0.3], &[0.4], 1.0, 1) - 0.5).abs() < 1e-15);
}

#[test]
fn identical_clouds_have_zero_distance() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = random_cloud(&mut rng, 12);
    for q in [1, 2] {
        let (w, plan) = wasserstein_exact(&a, &a, q).unwrap();
        assert!(w.abs() < 1e-12);
        assert!(plan.plan.iter().all(|(i, j, _)| i == j));
    }
}

#[test]
fn dirac_pair() {
    let a = cloud(&[(0.3, 0.0)], &[1.0]);
    let b = cloud(&[(0.3, 1.0)], &[1.0]);
    for q in [1, 2] {
        let (w, c) = wasserstein_exact(&a, &b, q).unwrap();
        assert!((w - 1.0).abs() < 1e-15);
        assert_eq!(c.plan, vec![(0, 0, 1.0)]);
    }
}

#[test]
fn crossing_two_point_instance_matches_vertex_enumeration() {
    let a = cloud(&[(0.0, 0.0), (0.0, 1.0)], &[0.5, 0.5]);
    let b = cloud(&[(0.0, 1.1), (0.0, -0.1)], &[0.5, 0.5]);
    for q in [1u32, 2] {
        let c = |i: usize, j: usize| {
            let (ax, av) = a.point(i);
            let (bx, bv) = b.point(j);
            ground_cost(ax, av, bx, bv, 1.0, q)
        };
        let identity = 0.5 * (c(0, 0) + c(1, 1));
        let swap = 0.5 * (c(0, 1) + c(1, 0));
        assert!(swap < identity);
        let (w, plan) = wasserstein_exact(&a, &b, q).unwrap();
        assert!((w.powi(q as i32) - identity.min(swap)).abs() < 1e-14);
        assert!(plan.plan.iter().all(|(i, j, _)| i != j));
    }
}

#[test]
fn uniform_clouds_match_brute_force_assignment() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for n in 2..=6 {
        for _ in 0..5 {
            let pa: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen::<f64>(), rng.gen_range(-1.0..1.0))).collect();
            let pb: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen::<f64>(), rng.gen_range(-1.0..1.0))).collect();
            let w = vec![1.0 / n as f64; n];
            let (a, b) = (cloud(&pa, &w), cloud(&pb, &w));
            for q in [1u32, 2] {
                let best = permutations(n)
                    .iter()
                    .map(|p| {
                        (0..n)
                            .map(|i| ground_cost(&[pa[i].0], &[pa[i].1], &[pb[p[i]].0], &[pb[p[i]].1], 1.0, q))
                            .sum::<f64>()
                            / n as f64
                    })
                    .fold(f64::INFINITY, f64::min);
                let (v, c) = wasserstein_exact(&a, &b, q).unwrap();
                assert!((v.powi(q as i32) - best).abs() < 1e-12, "n={n} q={q}");
                assert!(c.row_residual < 1e-8 && c.col_residual < 1e-8);
            }
        }
    }
}

#[test]
fn exact_solver_errors() {
    let big = WeightedCloud::new(1, 1, vec![0.0; 2 * 1001], vec![1.0 / 1001.0; 1001], 1.0);
    let big = big.unwrap_or_else(|_| {
        let w = vec![1.0 / 1001.0; 1001];
        WeightedCloud::normalized(1, 1, &vec![0.0; 2002], &w, 1.0).unwrap()
    });
    assert!(matches!(wasserstein_exact(&big, &big, 1), Err(Error::SizeExceeded { .. })));
    let a = cloud(&[(0.0, 0.0)], &[1.0]);
    let b = WeightedCloud { dim_x: 1, dim_v: 1, coords: vec![0.0, 0.0], weights: vec![0.9], length: 1.0 };
    assert!(matches!(wasserstein_exact(&a, &b, 1), Err(Error::Infeasible { .. })));
}

#[test]
fn metric_axioms_on_random_clouds() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let na = rng.gen_range(1..=16);
        let nb = rng.gen_range(1..=16);
        let nc = rng.gen_range(1..=16);
        let (a, b, c) = (random_cloud(&mut rng, na), random_cloud(&mut rng, nb), random_cloud(&mut rng, nc));
        for q in [1, 2] {
            let ab = wasserstein_exact(&a, &b, q).unwrap().0;
            let ba = wasserstein_exact(&b, &a, q).unwrap().0;
            let bc = wasserstein_exact(&b, &c, q).unwrap().0;
            let ac = wasserstein_exact(&a, &c, q).unwrap().0;
            assert!((ab - ba).abs() <= 1e-10);
            assert!(ab + bc - ac >= -1e-9);
        }
        let w1 = wasserstein_exact(&a, &b, 1).unwrap().0;
        let w2 = wasserstein_exact(&a, &b, 2).unwrap().0;
        assert!(w1 <= w2 + 1e-12);
    }
}

#[test]
fn entropic_matches_exact_on_random_clouds() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a = random_cloud(&mut rng, 64);
    let b = random_cloud(&mut rng, 64);
    for q in [1, 2] {
        let exact = wasserstein_exact(&a, &b, q).unwrap().0;
        let ent = wasserstein_entropic(&a, &b, q, &Schedule::default()).unwrap();
        assert!((ent - exact).abs() <= 0.01 * exact, "q={q}: {ent} vs {exact}");
        assert!(ent >= exact - 1e-9 - 0.01 * exact);
    }
}

#[test]
fn entropic_converges_when_plan_splits_into_blocks() {
    // These pairs leave a block imbalance that plain alternating updates
    // cannot remove at the final regularization.
    for seed in [1u64, 6, 8, 15] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_cloud(&mut rng, 64);
        let b = random_cloud(&mut rng, 64);
        for q in [1, 2] {
            let exact = wasserstein_exact(&a, &b, q).unwrap().0;
            let ent = wasserstein_entropic(&a, &b, q, &Schedule::default()).unwrap();
            assert!((ent - exact).abs() <= 0.01 * exact, "seed {seed} q={q}: {ent} vs {exact}");
        }
    }
}

#[test]
fn entropic_identity_and_translation() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a = random_cloud(&mut rng, 32);
    assert!(wasserstein_entropic(&a, &a, 1, &Schedule::default()).unwrap() <= 1e-6);
    let n = 40;
    let vs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let w = vec![1.0 / n as f64; n];
    let shift = 0.75;
    let p: Vec<(f64, f64)> = vs.iter().map(|v| (0.0, *v)).collect();
    let s: Vec<(f64, f64)> = vs.iter().map(|v| (0.0, v + shift)).collect();
    let value = wasserstein_entropic(&cloud(&p, &w), &cloud(&s, &w), 1, &Schedule::default()).unwrap();
    assert!((value - shift).abs() <= 0.01 * shift, "{value}");
}

#[test]
fn entropic_reports_non_convergence() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let a = random_cloud(&mut rng, 30);
    let b = random_cloud(&mut rng, 30);
    let short = Schedule { eta_start: 1e-3, eta_end: 1e-3, factor: 0.5, iterations: 1 };
    assert!(matches!(wasserstein_entropic(&a, &b, 2, &short), Err(Error::NoConvergence { .. })));
}

#[test]
fn one_dimensional_closed_form() {
    let q: Vec<f64> = (0..100).map(|i| i as f64 * 0.1).collect();
    assert_eq!(wasserstein_1d(&q, &q, 1).unwrap(), 0.0);
    let s: Vec<f64> = q.iter().map(|x| x + 0.5).collect();
    assert!((wasserstein_1d(&q, &s, 1).unwrap() - 0.5).abs() < 1e-14);
    assert!((wasserstein_1d(&q, &s, 2).unwrap() - 0.5).abs() < 1e-14);

    let n = 10_000;
    let std1 = Normal::new(0.0, 1.0).unwrap();
    let std2 = Normal::new(0.0, 2f64.sqrt()).unwrap();
    let levels: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
    let a: Vec<f64> = levels.iter().map(|p| std1.inverse_cdf(*p)).collect();
    let b: Vec<f64> = levels.iter().map(|p| std2.inverse_cdf(*p)).collect();
    let w = wasserstein_1d(&a, &b, 2).unwrap();
    assert!((w - (2f64.sqrt() - 1.0)).abs() <= 1e-3, "{w}");
}

#[test]
fn cloud_from_field_examples() {
    let g = PhaseGrid::new(4, 4, 1.0, 2.0).unwrap();
    let mut f = DistField::zeros(g);
    f.values[5] = 3.0;
    let c = cloud_from_field(&f, 0.0).unwrap();
    assert_eq!(c.len(), 1);
    assert_eq!(c.weights, vec![1.0]);
    assert_eq!(c.point(0), (&[g.x(1)][..], &[g.v(1)][..]));
    f.values[10] = 3.0;
    f.values[0] = -1.0;
    let c = cloud_from_field(&f, 0.0).unwrap();
    assert_eq!(c.weights, vec![0.5, 0.5]);
    assert!(matches!(cloud_from_field(&DistField::zeros(g), 0.0), Err(Error::EmptyCloud)));
    let mut h = DistField::zeros(g);
    h.values[0] = 1.0;
    h.values[1] = 1e-9;
    let c = cloud_from_field(&h, 1e-6).unwrap();
    assert_eq!(c.len(), 1);
    assert!((c.weights.iter().sum::<f64>() - 1.0).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn w1_never_exceeds_w2(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let na = rng.gen_range(1..=10);
        let nb = rng.gen_range(1..=10);
        let a = random_cloud(&mut rng, na);
        let b = random_cloud(&mut rng, nb);
        let w1 = wasserstein_exact(&a, &b, 1).unwrap().0;
        let w2 = wasserstein_exact(&a, &b, 2).unwrap().0;
        prop_assert!(w1 <= w2 + 1e-12);
        prop_assert!(w1 >= 0.0);
    }
}
