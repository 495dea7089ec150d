//! Weighted time norms, initial-data and damping-profile hypotheses, the
//! closed-form bounds and convergence-rate predictors, and the Landau
//! dispersion root.
//!
//! Quantities that over- or underflow are carried as natural logarithms.

use alloc::vec::Vec;
use core::f64::consts::{E, PI};
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::faddeeva::Faddeeva;
use crate::phase::DistField;

/// Values below this are reported through their logarithm only.
pub const UNDERFLOW: f64 = 1e-300;

/// A positive quantity stored as its logarithm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogValue {
    pub log: f64,
}

impl LogValue {
    pub fn value(&self) -> f64 {
        self.log.exp()
    }

    pub fn underflows(&self) -> bool {
        self.log < UNDERFLOW.ln()
    }
}

/// Exponential weight of a time norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecayRate {
    /// `a + 1 / eps^m`.
    Scaled { a: f64, m: u32, epsilon: f64 },
    /// A rate supplied directly.
    Direct { a_tilde: f64 },
}

/// `a + 1 / eps^m`.
pub fn scaled_rate(a: f64, m: u32, epsilon: f64) -> f64 {
    a + 1.0 / epsilon.powi(m as i32)
}

/// `sup_{t >= t0} t^-k exp(rate t) |F(t)|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormSpec {
    pub t0: f64,
    pub k: u32,
    pub rate: DecayRate,
}

impl NormSpec {
    pub fn a_tilde(&self) -> f64 {
        match self.rate {
            DecayRate::Scaled { a, m, epsilon } => scaled_rate(a, m, epsilon),
            DecayRate::Direct { a_tilde } => a_tilde,
        }
    }
}

/// Result of a weighted sup norm; `log = -inf` encodes the zero norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedNorm {
    pub log: f64,
    pub argmax_time: f64,
}

impl WeightedNorm {
    pub fn value(&self) -> f64 {
        self.log.exp()
    }
}

/// Weighted sup norm of sampled `|F(t)|`, maximized in the log domain.
pub fn weighted_sup_norm(times: &[f64], sup_values: &[f64], spec: &NormSpec) -> Result<WeightedNorm> {
    if times.len() != sup_values.len() {
        return Err(Error::InvalidInput("series lengths differ"));
    }
    let rate = spec.a_tilde();
    let mut best = WeightedNorm { log: f64::NEG_INFINITY, argmax_time: f64::NAN };
    let mut any = false;
    for (&t, &s) in times.iter().zip(sup_values) {
        if t < spec.t0 {
            continue;
        }
        if s < 0.0 || s.is_nan() {
            return Err(Error::InvalidInput("sup values must be nonnegative"));
        }
        if !any {
            best.argmax_time = t;
        }
        any = true;
        let log = if s == 0.0 { f64::NEG_INFINITY } else { rate * t - spec.k as f64 * t.ln() + s.ln() };
        if log > best.log {
            best = WeightedNorm { log, argmax_time: t };
        }
    }
    if !any {
        return Err(Error::EmptyWindow);
    }
    Ok(best)
}

/// `sum_k |g_k| delta^|k|` with a geometric estimate of the omitted tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BDeltaNorm {
    pub value: f64,
    pub truncation_bound: f64,
}

pub fn b_delta_norm(coeffs: &[(i64, Complex64)], delta: f64) -> Result<BDeltaNorm> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidInput("delta must lie in (0, 1]"));
    }
    let mut value = 0.0;
    let mut kmax = 0u64;
    let mut cmax: f64 = 0.0;
    for (k, c) in coeffs {
        value += c.norm() * delta.powi(k.unsigned_abs() as i32);
        kmax = kmax.max(k.unsigned_abs());
        cmax = cmax.max(c.norm());
    }
    let truncation_bound = if delta < 1.0 {
        2.0 * cmax * delta.powi(kmax as i32 + 1) / (1.0 - delta)
    } else if cmax == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(BDeltaNorm { value, truncation_bound })
}

/// Normalized Fourier coefficients `g_k = (1/n) sum_j g_j exp(-2 pi i k j / n)`
/// for `|k| <= n/2 - 1` (Nyquist omitted).
pub fn fourier_coefficients(values: &[f64]) -> Vec<(i64, Complex64)> {
    let n = values.len();
    let modes = crate::spectral::fft_real(values);
    let half = (n / 2) as i64;
    (-(half - 1)..half)
        .map(|k| (k, modes[k.rem_euclid(n as i64) as usize] / n as f64))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LandauParams {
    pub a1: f64,
    pub a2: f64,
    pub a_tilde: f64,
    pub t0: f64,
    pub k: u32,
}

/// Outcome of one inequality: `margin >= 0` means it holds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Check {
    pub pass: bool,
    pub margin: f64,
}

impl Check {
    fn from_margin(margin: f64) -> Self {
        Self { pass: margin >= 0.0, margin }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HReport {
    pub h1: Check,
    pub h2: Check,
    pub h3: Check,
}

/// Checks the smoothness (H1), decay (H2) and size (H3) hypotheses on probe
/// lattices: `spectrum` holds `(k_x, k_v, |f*^(k_x, k_v)|)`, `values` holds
/// `(x, v, f*(x, v))`.
pub fn check_h(params: &LandauParams, spectrum: &[(f64, f64, f64)], values: &[(f64, f64, f64)]) -> HReport {
    let mut h1 = f64::INFINITY;
    for &(kx, kv, s) in spectrum {
        h1 = h1.min(params.a1 / (1.0 + kx * kx) * (-params.a_tilde * kv.abs()).exp() - s.abs());
    }
    let mut h2 = f64::INFINITY;
    for &(_, v, f) in values {
        h2 = h2.min(params.a2 / (1.0 + v.powi(4)) - f.abs());
    }
    let size = params.a_tilde - 15.0 * params.a2.sqrt();
    let time = params.t0 - ((8.0 * params.a1).ln() / params.a_tilde).max(0.0);
    HReport {
        h1: Check::from_margin(h1),
        h2: Check::from_margin(h2),
        h3: Check::from_margin(size.min(time)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AReport {
    pub c_e: f64,
    pub a1: Check,
    pub a2: Check,
    pub a3: Check,
    /// The same inequality with `t0` in place of its worst case `3 / a~`.
    pub a3_at_t0: Check,
    pub a4: Check,
    pub a5: Check,
}

/// `C_E = 240 a1 a2 / a~ + 4 a1`.
pub fn c_e(params: &LandauParams) -> f64 {
    240.0 * params.a1 * params.a2 / params.a_tilde + 4.0 * params.a1
}

pub fn check_a(params: &LandauParams) -> AReport {
    let at = params.a_tilde;
    let ce = c_e(params);
    let a1 = at - 1.0f64.max(15.0 * params.a2.sqrt());
    let a2 = params.t0 - 2.0f64.max(4.0 * params.k as f64).max((8.0 * params.a1).ln() / at);
    let a3 = 1.0 - 50.0 * ce / at * (3.0 / at).powi(3) * (-3.0f64).exp();
    let a3t = 1.0 - 50.0 * ce / at * params.t0.powi(3) * (-at * params.t0).exp();
    let a4 = 1.0 / (20.0 * params.a2) - 8.0 * E;
    let a5 = at * at - 8.0 * ce;
    AReport {
        c_e: ce,
        a1: Check::from_margin(a1),
        a2: Check::from_margin(a2),
        a3: Check::from_margin(a3),
        a3_at_t0: Check::from_margin(a3t),
        a4: Check::from_margin(a4),
        a5: Check::from_margin(a5),
    }
}

/// `A~(t) = 1 + eps^-2 sqrt(|rho_g|) max(|rho_f|, |rho_g|)^(1/2) + eps^-2 |rho_f - 1|`.
pub fn a_tilde_series(rho_f_sup: &[f64], rho_g_sup: &[f64], rho_f_minus_one_sup: &[f64], epsilon: f64) -> Result<Vec<f64>> {
    if rho_f_sup.len() != rho_g_sup.len() || rho_f_sup.len() != rho_f_minus_one_sup.len() {
        return Err(Error::InvalidInput("series lengths differ"));
    }
    let inv = 1.0 / (epsilon * epsilon);
    Ok(rho_f_sup
        .iter()
        .zip(rho_g_sup)
        .zip(rho_f_minus_one_sup)
        .map(|((f, g), d)| 1.0 + inv * g.sqrt() * f.max(*g).sqrt() + inv * d)
        .collect())
}

/// Trapezoid rule on samples.
pub fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

/// `R = 16d exp{ log(x / 16d) exp(I) }` with `I = C0 int_0^t A~`.
pub fn r_epsilon(x: f64, scaled_integral: f64, d: u32) -> Result<LogValue> {
    if !(x > 0.0) {
        return Err(Error::InvalidInput("x must be positive"));
    }
    let c = 16.0 * d as f64;
    Ok(LogValue { log: c.ln() + (x / c).ln() * scaled_integral.exp() })
}

/// `phi(eps) = 16d exp(-exp(eps^-K0))` and `psi = phi / (1 + z^2)`.
pub fn phi_psi(epsilon: f64, z: f64, d: u32, k0: u32) -> Result<(LogValue, LogValue)> {
    if !(epsilon > 0.0 && epsilon <= 1.0) || k0 == 0 {
        return Err(Error::InvalidInput("need 0 < eps <= 1 and K0 >= 1"));
    }
    let phi = (16.0 * d as f64).ln() - epsilon.powi(-(k0 as i32)).exp();
    Ok((LogValue { log: phi }, LogValue { log: phi - (1.0 + z * z).ln() }))
}

/// Log of the kinetic convergence speed
/// `-log eps - (eps^-(m+1) - eps^-m + a / eps) t0`.
pub fn rate_kinetic(epsilon: f64, a: f64, m: u32, t0: f64) -> f64 {
    rate_field(epsilon, a, m, t0, 0)
}

/// Log of the field convergence speed for `l` position derivatives.
pub fn rate_field(epsilon: f64, a: f64, m: u32, t0: f64, l: u32) -> f64 {
    let m = m as i32;
    -((2 * l + 1) as f64) * epsilon.ln() - (epsilon.powi(-(m + 1)) - epsilon.powi(-m) + a / epsilon) * t0
}

/// `log B(eps)` with `B = eps exp[(a + eps^-m)(1/eps - 1) t0]`.
pub fn log_b(epsilon: f64, a: f64, m: u32, t0: f64) -> f64 {
    epsilon.ln() + scaled_rate(a, m, epsilon) * (1.0 / epsilon - 1.0) * t0
}

/// `log A(t, eps)`, the same expression at time `t`.
pub fn log_a(t: f64, epsilon: f64, a: f64, m: u32) -> f64 {
    log_b(epsilon, a, m, t)
}

/// Complex frequency of the least damped Langmuir mode of a unit Maxwellian:
/// root of `1 + (1 + zeta Z(zeta)) / k^2` with `zeta = omega / (k sqrt 2)`.
///
/// Newton starts from the weak-damping approximation at `min(k, 0.4)` and is
/// continued in `k` in steps of at most 0.05.
pub fn landau_rate(k: f64) -> Result<Complex64> {
    if !(k > 0.0 && k <= 1.0) {
        return Err(Error::InvalidInput("k must lie in (0, 1]"));
    }
    let fad = Faddeeva::new();
    let start = k.min(0.4);
    let re = (1.0 + 3.0 * start * start).sqrt();
    let im = -(PI / 8.0).sqrt() / start.powi(3) * (-0.5 / (start * start) - 1.5).exp();
    let mut omega = newton_dispersion(&fad, start, Complex64::new(re, im))?;
    let pieces = ((k - start) / 0.05).ceil() as usize;
    for p in 1..=pieces {
        let kp = start + (k - start) * p as f64 / pieces as f64;
        omega = newton_dispersion(&fad, kp, omega)?;
    }
    Ok(omega)
}

fn newton_dispersion(fad: &Faddeeva, k: f64, guess: Complex64) -> Result<Complex64> {
    const MAX_ITER: usize = 100;
    let scale = k * 2.0f64.sqrt();
    let mut omega = guess;
    for _ in 0..MAX_ITER {
        let zeta = omega / scale;
        let z = fad.plasma_z(zeta);
        let g = 1.0 + zeta * z;
        let d = 1.0 + g / (k * k);
        let dd = (z - 2.0 * zeta * g) / (k * k * scale);
        let step = d / dd;
        omega -= step;
        if !omega.re.is_finite() || !omega.im.is_finite() {
            break;
        }
        if step.norm() <= 1e-12 * omega.norm() && dispersion_residual(k, omega).norm() <= 1e-10 {
            return Ok(omega);
        }
    }
    Err(Error::NoRoot { iterations: MAX_ITER })
}

/// `1 + (1 + zeta Z(zeta)) / k^2` at `omega`.
pub fn dispersion_residual(k: f64, omega: Complex64) -> Complex64 {
    let zeta = omega / (k * 2.0f64.sqrt());
    let z = Faddeeva::new().plasma_z(zeta);
    1.0 + (1.0 + zeta * z) / (k * k)
}

/// Transform `(1/2 pi) int int f(x, v) exp(i (k_x x + k_v v)) dx dv` by
/// midpoint quadrature on the grid.
pub fn phase_space_transform(f: &DistField, kx: f64, kv: f64) -> Complex64 {
    let g = f.grid;
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..g.nx {
        for j in 0..g.nv {
            let ph = kx * g.x(i) + kv * g.v(j);
            acc += Complex64::new(ph.cos(), ph.sin()) * f.at(i, j);
        }
    }
    acc * (g.dx() * g.dv() / (2.0 * PI))
}
