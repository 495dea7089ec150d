//! Strang-split semi-Lagrangian solver for the 1D1V Vlasov-Poisson system
//! `f_t + v f_x + E f_v = 0`, `eps^2 E_x = rho - 1`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::interp::{shift_line, Boundary, Interpolation};
use crate::phase::{kinetic_energy, moment_density, DistField, FieldKind, FieldProfile, PhaseGrid};
use crate::spectral::{fft_real, ifft, wavenumber};

/// Tolerance on the mean density required by the periodic Gauss law.
pub const NEUTRALITY_TOL: f64 = 1e-8;
/// Growth factor of max|f| treated as a blow-up.
pub const BLOWUP_FACTOR: f64 = 1e6;

/// Whether the electric field is computed or held at zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FieldMode {
    #[default]
    SelfConsistent,
    Disabled,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub epsilon: f64,
    pub dt: f64,
    pub t_end: f64,
    pub interpolation: Interpolation,
    pub grid: PhaseGrid,
    pub field: FieldMode,
}

/// Non-fatal conditions found while validating a configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Warning {
    /// `dt > dx / vmax`.
    Courant { dt: f64, limit: f64 },
    /// `dt > eps / 10`, the plasma period is under-resolved.
    Stiff { dt: f64, limit: f64 },
}

impl SolverConfig {
    pub fn new(epsilon: f64, dt: f64, t_end: f64, grid: PhaseGrid) -> Self {
        Self {
            epsilon,
            dt,
            t_end,
            interpolation: Interpolation::Cubic,
            grid,
            field: FieldMode::SelfConsistent,
        }
    }

    pub fn validate(&self) -> Result<Vec<Warning>> {
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(Error::InvalidInput("epsilon must lie in (0, 1]"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidInput("dt must be positive"));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidInput("t_end must be nonnegative"));
        }
        let mut warnings = Vec::new();
        let courant = self.grid.dx() / self.grid.vmax;
        if self.dt > courant {
            warnings.push(Warning::Courant { dt: self.dt, limit: courant });
        }
        if self.dt > self.epsilon / 10.0 {
            warnings.push(Warning::Stiff { dt: self.dt, limit: self.epsilon / 10.0 });
        }
        Ok(warnings)
    }

    pub fn is_quasineutral(&self) -> bool {
        self.epsilon < 1.0
    }
}

/// Per-step scalar diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    pub time: f64,
    pub mass: f64,
    pub kinetic_energy: f64,
    pub field_energy: f64,
    pub min_f: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub f: DistField,
    pub e: FieldProfile,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub epsilon: f64,
    pub snapshots: Vec<Snapshot>,
    pub diagnostics: Vec<Diagnostics>,
    pub warnings: Vec<Warning>,
}

/// Solves `eps^2 E' = rho - 1` with zero-mean `E` by Fourier division.
pub fn poisson_solve(rho: &FieldProfile, epsilon: f64) -> Result<FieldProfile> {
    let mean = rho.mean();
    if (mean - 1.0).abs() > NEUTRALITY_TOL || !mean.is_finite() {
        return Err(Error::NonNeutral { mean });
    }
    let n = rho.len();
    let shifted: Vec<f64> = rho.values.iter().map(|r| r - 1.0).collect();
    let mut modes = fft_real(&shifted);
    let eps2 = epsilon * epsilon;
    for (k, c) in modes.iter_mut().enumerate() {
        if k == 0 || (n % 2 == 0 && k == n / 2) {
            *c = Complex64::new(0.0, 0.0);
        } else {
            *c /= Complex64::new(0.0, wavenumber(k, n, rho.length) * eps2);
        }
    }
    ifft(&mut modes);
    let mut values: Vec<f64> = modes.iter().map(|c| c.re).collect();
    let drift = values.iter().sum::<f64>() / n as f64;
    for v in values.iter_mut() {
        *v -= drift;
    }
    Ok(FieldProfile::new(rho.length, values, FieldKind::ElectricField))
}

fn field_of(f: &DistField, cfg: &SolverConfig) -> Result<FieldProfile> {
    match cfg.field {
        FieldMode::Disabled => Ok(FieldProfile::constant(
            f.grid.length,
            f.grid.nx,
            0.0,
            FieldKind::ElectricField,
        )),
        FieldMode::SelfConsistent => poisson_solve(&moment_density(f), cfg.epsilon),
    }
}

/// Free streaming `f(x, v) <- f(x - v dt, v)` (any sign of `dt`).
pub fn advect_x(f: &DistField, dt: f64, order: Interpolation) -> DistField {
    let g = f.grid;
    let mut out = vec![0.0; g.cells()];
    let dx = g.dx();
    for j in 0..g.nv {
        let shift = g.v(j) * dt / dx;
        shift_line(&f.values, &mut out, g.nx, j, g.nv, shift, order, Boundary::Periodic);
    }
    DistField { grid: g, values: out, time: f.time }
}

/// Acceleration `f(x_i, v) <- f(x_i, v - a_i)`, zero outside the velocity window.
pub fn shift_v(f: &DistField, displacement: &[f64], order: Interpolation) -> DistField {
    let g = f.grid;
    let mut out = vec![0.0; g.cells()];
    let dv = g.dv();
    for (i, a) in displacement.iter().enumerate().take(g.nx) {
        shift_line(&f.values, &mut out, g.nv, i * g.nv, 1, a / dv, order, Boundary::Zero);
    }
    DistField { grid: g, values: out, time: f.time }
}

/// `f(x, v) <- f(x, v - E(x) dt)`.
pub fn advect_v(f: &DistField, e: &FieldProfile, dt: f64, order: Interpolation) -> DistField {
    let disp: Vec<f64> = e.values.iter().map(|v| v * dt).collect();
    shift_v(f, &disp, order)
}

fn step_unchecked(f: &DistField, cfg: &SolverConfig) -> Result<(DistField, FieldProfile)> {
    let half = advect_x(f, 0.5 * cfg.dt, cfg.interpolation);
    let e_half = field_of(&half, cfg)?;
    let kicked = advect_v(&half, &e_half, cfg.dt, cfg.interpolation);
    let mut next = advect_x(&kicked, 0.5 * cfg.dt, cfg.interpolation);
    next.time = f.time + cfg.dt;
    let e = field_of(&next, cfg)?;
    Ok((next, e))
}

fn check_growth(f: &DistField, reference: f64) -> Result<()> {
    let max = f.max_abs();
    if !max.is_finite() || max > BLOWUP_FACTOR * reference {
        return Err(Error::BlowUp { max, reference });
    }
    Ok(())
}

/// One Strang step; returns the new state and the field consistent with it.
pub fn step(f: &DistField, cfg: &SolverConfig) -> Result<(DistField, FieldProfile)> {
    let (next, e) = step_unchecked(f, cfg)?;
    check_growth(&next, f.max_abs())?;
    Ok((next, e))
}

/// Field energy `1/2 eps^2 int E^2 dx`.
pub fn field_energy(e: &FieldProfile, epsilon: f64) -> f64 {
    0.5 * epsilon * epsilon * e.values.iter().map(|v| v * v).sum::<f64>() * e.dx()
}

fn diagnostics(f: &DistField, e: &FieldProfile, epsilon: f64) -> Diagnostics {
    Diagnostics {
        time: f.time,
        mass: f.mass(),
        kinetic_energy: kinetic_energy(f),
        field_energy: field_energy(e, epsilon),
        min_f: f.min(),
    }
}

/// Index of `t` on the `dt` lattice, if it lies on it within 1e-12.
pub fn step_index(t: f64, dt: f64) -> Option<usize> {
    if t < 0.0 {
        return None;
    }
    let n = (t / dt).round();
    if (t - n * dt).abs() <= 1e-12 * t.abs().max(1.0) {
        Some(n as usize)
    } else {
        None
    }
}

/// Runs to `t_end`, recording snapshots at the requested lattice times.
pub fn evolve(f0: &DistField, cfg: &SolverConfig, snapshot_times: &[f64]) -> Result<Trajectory> {
    let warnings = cfg.validate()?;
    let n_steps = step_index(cfg.t_end, cfg.dt)
        .ok_or(Error::BadSnapshotTime { time: cfg.t_end, dt: cfg.dt })?;
    let mut wanted = Vec::with_capacity(snapshot_times.len());
    for &t in snapshot_times {
        let idx = step_index(t, cfg.dt).ok_or(Error::BadSnapshotTime { time: t, dt: cfg.dt })?;
        if idx > n_steps {
            return Err(Error::BadSnapshotTime { time: t, dt: cfg.dt });
        }
        wanted.push(idx);
    }
    wanted.sort_unstable();
    wanted.dedup();

    let reference = f0.max_abs();
    let mut f = f0.clone();
    let mut e = field_of(&f, cfg)?;
    let mut traj = Trajectory {
        epsilon: cfg.epsilon,
        snapshots: Vec::new(),
        diagnostics: vec![diagnostics(&f, &e, cfg.epsilon)],
        warnings,
    };
    let mut next_snap = wanted.iter().peekable();
    if next_snap.peek() == Some(&&0) {
        traj.snapshots.push(Snapshot { time: f.time, f: f.clone(), e: e.clone() });
        next_snap.next();
    }
    for n in 1..=n_steps {
        let (nf, ne) = step_unchecked(&f, cfg)?;
        check_growth(&nf, reference)?;
        f = nf;
        e = ne;
        f.time = f0.time + n as f64 * cfg.dt;
        traj.diagnostics.push(diagnostics(&f, &e, cfg.epsilon));
        if next_snap.peek() == Some(&&n) {
            traj.snapshots.push(Snapshot { time: f.time, f: f.clone(), e: e.clone() });
            next_snap.next();
        }
    }
    Ok(traj)
}

/// Perturbed Maxwellian `(1 + alpha cos(2 pi k x / L)) M(v - z_shift)` with mean
/// density one on the grid.
pub fn landau_initial(alpha: f64, wavenumber_index: u32, z_shift: f64, grid: PhaseGrid) -> Result<DistField> {
    if alpha.abs() >= 1.0 {
        return Err(Error::InvalidInput("|alpha| must be below 1"));
    }
    let kx = 2.0 * PI * wavenumber_index as f64 / grid.length;
    let maxwell: Vec<f64> = (0..grid.nv)
        .map(|j| {
            let w = grid.v(j) - z_shift;
            (-0.5 * w * w).exp() / (2.0 * PI).sqrt()
        })
        .collect();
    let vmass: f64 = maxwell.iter().sum::<f64>() * grid.dv();
    let mut values = Vec::with_capacity(grid.cells());
    for i in 0..grid.nx {
        let s = 1.0 + alpha * (kx * grid.x(i)).cos();
        values.extend(maxwell.iter().map(|m| s * m / vmass));
    }
    DistField::new(grid, values, 0.0)
}

/// Exponential fit to the peaks of an oscillating field-energy record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DampingFit {
    /// Amplitude damping rate; the energy decays like `exp(-2 gamma t)`.
    pub gamma: f64,
    pub peaks: usize,
}

/// Fits `log W(t)` at its local maxima in `[t_min, t_max]` by least squares.
///
/// Peak positions are refined with a parabola through the three samples.
pub fn fit_damping_rate(times: &[f64], energy: &[f64], t_min: f64, t_max: f64) -> Option<DampingFit> {
    let mut px = Vec::new();
    let mut py = Vec::new();
    for i in 1..times.len().saturating_sub(1) {
        let (a, b, c) = (energy[i - 1], energy[i], energy[i + 1]);
        if !(b > a && b >= c && a > 0.0 && c > 0.0) {
            continue;
        }
        if times[i] < t_min || times[i] > t_max {
            continue;
        }
        let (la, lb, lc) = (a.ln(), b.ln(), c.ln());
        let h = times[i + 1] - times[i];
        let denom = la - 2.0 * lb + lc;
        let (dt, peak) = if denom < 0.0 {
            let s = 0.5 * (la - lc) / denom;
            (s * h, lb - 0.25 * (la - lc) * s)
        } else {
            (0.0, lb)
        };
        px.push(times[i] + dt);
        py.push(peak);
    }
    if px.len() < 3 {
        return None;
    }
    let n = px.len() as f64;
    let mx = px.iter().sum::<f64>() / n;
    let my = py.iter().sum::<f64>() / n;
    let sxy: f64 = px.iter().zip(&py).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = px.iter().map(|x| (x - mx) * (x - mx)).sum();
    Some(DampingFit { gamma: -0.5 * sxy / sxx, peaks: px.len() })
}
