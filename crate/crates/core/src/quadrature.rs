//! Gauss-Legendre and Chebyshev-Gauss-Lobatto (Clenshaw-Curtis) rules on [-1, 1].

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

/// Gauss-Legendre nodes (increasing) and weights, by Newton iteration on the
/// three-term recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Chebyshev-Gauss-Lobatto nodes `-cos(pi j / (n-1))` (increasing) with
/// Clenshaw-Curtis weights.
pub fn chebyshev_lobatto(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2);
    let big_n = n - 1;
    let nodes: Vec<f64> = (0..n).map(|j| -(PI * j as f64 / big_n as f64).cos()).collect();
    let mut weights = vec![0.0; n];
    for (j, w) in weights.iter_mut().enumerate() {
        let mut s = 1.0;
        for k in 1..=big_n / 2 {
            let b = if 2 * k == big_n { 1.0 } else { 2.0 };
            s -= b / (4.0 * (k * k) as f64 - 1.0) * (2.0 * PI * (j * k) as f64 / big_n as f64).cos();
        }
        let c = if j == 0 || j == big_n { 1.0 } else { 2.0 };
        *w = c * s / big_n as f64;
    }
    (nodes, weights)
}
