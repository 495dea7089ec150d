//! One-dimensional multi-fluid pressureless Euler-Poisson model with a discrete
//! label measure, its kinetic reconstruction, and the plasma-oscillation
//! corrector.

use alloc::vec::Vec;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::interp::{sample_periodic, Interpolation};
use crate::phase::{DistField, FieldKind, FieldProfile};
use crate::quadrature::gauss_legendre;
use crate::spectral::derivative;
use crate::transport::WeightedCloud;
use crate::vlasov::{poisson_solve, shift_v};

/// Field closure of the fluid system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regime {
    /// `eps^2 E_x = sum_j w_j rho_j - 1`.
    Quasineutral { epsilon: f64 },
    /// Incompressible limit: `E = d/dx sum_j w_j rho_j u_j^2`.
    Limit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FluidEnsemble {
    pub thetas: Vec<f64>,
    pub weights: Vec<f64>,
    pub rho: Vec<FieldProfile>,
    pub u: Vec<FieldProfile>,
    pub regime: Regime,
    pub time: f64,
}

/// Label nodes and weights for `dmu = c dtheta / (1 + theta^2)` on
/// `[-theta_max, theta_max]`, renormalized to sum to one.
pub fn mu_quadrature(n_theta: usize, theta_max: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n_theta);
    let thetas: Vec<f64> = x.iter().map(|t| t * theta_max).collect();
    let raw: Vec<f64> = thetas.iter().zip(&w).map(|(t, w)| w / (1.0 + t * t)).collect();
    let total: f64 = raw.iter().sum();
    (thetas, raw.iter().map(|r| r / total).collect())
}

impl FluidEnsemble {
    pub fn new(
        thetas: Vec<f64>,
        weights: Vec<f64>,
        rho: Vec<FieldProfile>,
        u: Vec<FieldProfile>,
        regime: Regime,
    ) -> Result<Self> {
        let n = thetas.len();
        if n == 0 || weights.len() != n || rho.len() != n || u.len() != n {
            return Err(Error::InvalidInput("fluid component counts differ"));
        }
        if weights.iter().any(|w| !(*w > 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput("label weights must be positive and sum to 1"));
        }
        let nx = rho[0].len();
        if rho.iter().chain(u.iter()).any(|p| p.len() != nx) {
            return Err(Error::InvalidInput("fluid profiles use different grids"));
        }
        if rho.iter().any(|p| p.values.iter().any(|r| *r < 0.0)) {
            return Err(Error::InvalidInput("negative fluid density"));
        }
        let s = Self { thetas, weights, rho, u, regime, time: 0.0 };
        let mean = s.total_density().mean();
        if (mean - 1.0).abs() > 1e-8 {
            return Err(Error::NonNeutral { mean });
        }
        Ok(s)
    }

    pub fn nx(&self) -> usize {
        self.rho[0].len()
    }

    pub fn length(&self) -> f64 {
        self.rho[0].length
    }

    /// `sum_j w_j rho_j`.
    pub fn total_density(&self) -> FieldProfile {
        let mut acc = alloc::vec![0.0; self.nx()];
        for (w, r) in self.weights.iter().zip(&self.rho) {
            for (a, v) in acc.iter_mut().zip(&r.values) {
                *a += w * v;
            }
        }
        FieldProfile::new(self.length(), acc, FieldKind::ChargeDensity)
    }

    /// `sum_j w_j rho_j u_j`.
    pub fn current(&self) -> FieldProfile {
        let mut acc = alloc::vec![0.0; self.nx()];
        for j in 0..self.weights.len() {
            for (i, a) in acc.iter_mut().enumerate() {
                *a += self.weights[j] * self.rho[j].values[i] * self.u[j].values[i];
            }
        }
        FieldProfile::new(self.length(), acc, FieldKind::Current)
    }

    /// `sum_j w_j int rho_j dx`.
    pub fn mass(&self) -> f64 {
        let dx = self.rho[0].dx();
        let mut total = 0.0;
        for (w, r) in self.weights.iter().zip(&self.rho) {
            for v in &r.values {
                total += w * v * dx;
            }
        }
        total
    }

    /// Electric field of the current state.
    pub fn field(&self) -> Result<FieldProfile> {
        match self.regime {
            Regime::Quasineutral { epsilon } => poisson_solve(&self.total_density(), epsilon),
            Regime::Limit => {
                let mut pressure = alloc::vec![0.0; self.nx()];
                for j in 0..self.weights.len() {
                    for (i, p) in pressure.iter_mut().enumerate() {
                        let u = self.u[j].values[i];
                        *p += self.weights[j] * self.rho[j].values[i] * u * u;
                    }
                }
                let e = derivative(&pressure, self.length(), 1);
                Ok(FieldProfile::new(self.length(), e, FieldKind::ElectricField))
            }
        }
    }
}

fn rates(s: &FluidEnsemble) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let e = s.field()?;
    let n = s.nx();
    let dx = s.rho[0].dx();
    let mut drho = Vec::with_capacity(s.weights.len());
    let mut du = Vec::with_capacity(s.weights.len());
    for j in 0..s.weights.len() {
        let r = &s.rho[j].values;
        let u = &s.u[j].values;
        let flux: Vec<f64> = (0..n)
            .map(|i| {
                let ip = (i + 1) % n;
                let face = 0.5 * (u[i] + u[ip]);
                if face >= 0.0 {
                    face * r[i]
                } else {
                    face * r[ip]
                }
            })
            .collect();
        drho.push((0..n).map(|i| -(flux[i] - flux[(i + n - 1) % n]) / dx).collect());
        du.push(
            (0..n)
                .map(|i| {
                    let grad = if u[i] >= 0.0 {
                        (u[i] - u[(i + n - 1) % n]) / dx
                    } else {
                        (u[(i + 1) % n] - u[i]) / dx
                    };
                    -u[i] * grad + e.values[i]
                })
                .collect(),
        );
    }
    Ok((drho, du))
}

fn advance(s: &FluidEnsemble, rates: &(Vec<Vec<f64>>, Vec<Vec<f64>>), h: f64) -> FluidEnsemble {
    let mut out = s.clone();
    for j in 0..s.weights.len() {
        for (v, d) in out.rho[j].values.iter_mut().zip(&rates.0[j]) {
            *v += h * d;
        }
        for (v, d) in out.u[j].values.iter_mut().zip(&rates.1[j]) {
            *v += h * d;
        }
    }
    out.time = s.time + h;
    out
}

/// Largest `|du/dx| dt` over all fluids (centred differences).
pub fn shock_indicator(s: &FluidEnsemble, dt: f64) -> f64 {
    let n = s.nx();
    let dx = s.rho[0].dx();
    let mut worst: f64 = 0.0;
    for u in &s.u {
        for i in 0..n {
            let g = (u.values[(i + 1) % n] - u.values[(i + n - 1) % n]) / (2.0 * dx);
            worst = worst.max(g.abs() * dt);
        }
    }
    worst
}

/// One midpoint step of upwind finite-volume transport and forced Burgers.
pub fn fluid_step(s: &FluidEnsemble, dt: f64) -> Result<FluidEnsemble> {
    let courant = shock_indicator(s, dt);
    if courant >= 1.0 || !courant.is_finite() {
        return Err(Error::ShockDetected { courant });
    }
    let k1 = rates(s)?;
    let mid = advance(s, &k1, 0.5 * dt);
    let k2 = rates(&mid)?;
    let mut next = advance(s, &k2, dt);
    next.time = s.time + dt;
    Ok(next)
}

/// Runs `n_steps` steps, keeping every `record_every`-th state (and the first).
pub fn evolve_fluid(s0: &FluidEnsemble, dt: f64, n_steps: usize, record_every: usize) -> Result<Vec<FluidEnsemble>> {
    let every = record_every.max(1);
    let mut out = alloc::vec![s0.clone()];
    let mut s = s0.clone();
    for n in 1..=n_steps {
        s = fluid_step(&s, dt)?;
        s.time = s0.time + n as f64 * dt;
        if n % every == 0 {
            out.push(s.clone());
        }
    }
    Ok(out)
}

/// Mono-kinetic cloud: one point `(x_i, u_j(x_i))` of mass `w_j rho_j(x_i) dx`
/// per cell and fluid, normalized by the label-averaged mass.
pub fn reconstruct_kinetic(s: &FluidEnsemble) -> Result<WeightedCloud> {
    let dx = s.rho[0].dx();
    let mass = s.mass();
    let mut coords = Vec::new();
    let mut weights = Vec::new();
    for j in 0..s.weights.len() {
        for i in 0..s.nx() {
            let w = s.weights[j] * s.rho[j].values[i] * dx;
            if w > 0.0 {
                coords.push(i as f64 * dx);
                coords.push(s.u[j].values[i]);
                weights.push(w / mass);
            }
        }
    }
    WeightedCloud::new(1, 1, coords, weights, s.length())
}

/// Complex amplitudes `d_+`, `d_-` of the fast plasma oscillation.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectorState {
    pub d_plus: Vec<Complex64>,
    pub d_minus: Vec<Complex64>,
    pub length: f64,
    pub epsilon: f64,
}

/// `d_pm = (eps E pm i (j - mean j)) / 2`.
pub fn corrector_init(e: &FieldProfile, j: &FieldProfile, epsilon: f64) -> Result<CorrectorState> {
    if e.len() != j.len() {
        return Err(Error::InvalidInput("corrector fields use different grids"));
    }
    let jm = j.mean();
    let mut d_plus = Vec::with_capacity(e.len());
    let mut d_minus = Vec::with_capacity(e.len());
    for (ev, jv) in e.values.iter().zip(&j.values) {
        d_plus.push(Complex64::new(epsilon * ev, jv - jm) * 0.5);
        d_minus.push(Complex64::new(epsilon * ev, -(jv - jm)) * 0.5);
    }
    let mut c = CorrectorState { d_plus, d_minus, length: e.length, epsilon };
    project_mean(&mut c.d_plus);
    project_mean(&mut c.d_minus);
    Ok(c)
}

fn project_mean(d: &mut [Complex64]) {
    let mean = d.iter().sum::<Complex64>() / d.len() as f64;
    for v in d.iter_mut() {
        *v -= mean;
    }
}

fn transport_complex(d: &[Complex64], speed: &[f64], dt: f64, dx: f64) -> Vec<Complex64> {
    let re: Vec<f64> = d.iter().map(|c| c.re).collect();
    let im: Vec<f64> = d.iter().map(|c| c.im).collect();
    (0..d.len())
        .map(|i| {
            let pos = i as f64 - speed[i] * dt / dx;
            Complex64::new(
                sample_periodic(&re, pos, Interpolation::Cubic),
                sample_periodic(&im, pos, Interpolation::Cubic),
            )
        })
        .collect()
}

/// Semi-Lagrangian transport of `d_pm` by the current `J`, then zero-mean projection.
pub fn corrector_step(c: &CorrectorState, current: &FieldProfile, dt: f64) -> Result<CorrectorState> {
    if current.len() != c.d_plus.len() {
        return Err(Error::InvalidInput("corrector and current use different grids"));
    }
    let dx = c.length / c.d_plus.len() as f64;
    let mut out = c.clone();
    out.d_plus = transport_complex(&c.d_plus, &current.values, dt, dx);
    out.d_minus = transport_complex(&c.d_minus, &current.values, dt, dx);
    project_mean(&mut out.d_plus);
    project_mean(&mut out.d_minus);
    Ok(out)
}

/// `C = -(1/i)(d_+ exp(it/eps) - d_- exp(-it/eps))`, returned as a real profile.
pub fn corrector_eval(c: &CorrectorState, t: f64) -> Result<FieldProfile> {
    let phase = t / c.epsilon;
    let rot = Complex64::new(phase.cos(), phase.sin());
    let minus_inv_i = Complex64::new(0.0, 1.0);
    let mut values = Vec::with_capacity(c.d_plus.len());
    let mut leak: f64 = 0.0;
    let mut scale: f64 = 1.0;
    for (p, m) in c.d_plus.iter().zip(&c.d_minus) {
        let v = minus_inv_i * (p * rot - m * rot.conj());
        leak = leak.max(v.im.abs());
        scale = scale.max(v.re.abs());
        values.push(v.re);
    }
    let residual = leak / scale;
    if residual > 1e-9 {
        return Err(Error::ComplexLeak { residual });
    }
    Ok(FieldProfile::new(c.length, values, FieldKind::Velocity))
}

/// `f(x, v) <- f(x, v - C(x))`.
pub fn shift_velocity(f: &DistField, c: &FieldProfile) -> Result<DistField> {
    if c.len() != f.grid.nx {
        return Err(Error::InvalidInput("shift profile does not match grid"));
    }
    Ok(shift_v(f, &c.values, Interpolation::Cubic))
}
