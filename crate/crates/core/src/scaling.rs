//! Maps between the normal regime and the quasineutral regime with
//! `eps = 1/N`: `h(x, v, t) = f(x/eps, v, t/eps)`, `E_1(x, t) = E(x/eps, t/eps) / eps`.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Euclid;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::phase::{moment_density, DistField, FieldKind, FieldProfile, PhaseGrid};
use crate::spectral::{derivative, eval_trig, fft_real, wavenumber};
use crate::uq::{z_derivative, ZEnsemble};
use crate::vlasov::{Diagnostics, Snapshot, Trajectory};
use num_complex::Complex64;

/// Rescaling by the integer factor `n` onto a grid of `target_nx` cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScalingMap {
    pub n: usize,
    pub target_nx: usize,
    pub allow_interpolation: bool,
}

impl ScalingMap {
    /// Target grid refined by `n`, which makes the sampling exact.
    pub fn new(n: usize, source_nx: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("scaling factor must be positive"));
        }
        Ok(Self { n, target_nx: n * source_nx, allow_interpolation: false })
    }

    pub fn epsilon(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Source index stride when sampling is exact.
    fn stride(&self, source_nx: usize) -> Option<usize> {
        let num = self.n * source_nx;
        (num % self.target_nx == 0).then(|| num / self.target_nx)
    }

    /// Samples `g(N x)` on the target grid from samples of the periodic `g`.
    pub fn sample(&self, values: &[f64], length: f64) -> Result<Vec<f64>> {
        let ns = values.len();
        if let Some(r) = self.stride(ns) {
            return Ok((0..self.target_nx).map(|i| values[(i * r) % ns]).collect());
        }
        if !self.allow_interpolation {
            return Err(Error::GridMismatch { source_nx: ns, target: self.target_nx, n: self.n });
        }
        let coeffs = fft_real(values);
        let dx = length / self.target_nx as f64;
        Ok((0..self.target_nx)
            .map(|i| eval_trig(&coeffs, length, Euclid::rem_euclid(&(self.n as f64 * i as f64 * dx), &length)))
            .collect())
    }
}

/// `h(x, v) = f(N x, v)` with the time multiplied by `eps`.
pub fn rescale_field(f: &DistField, map: &ScalingMap) -> Result<DistField> {
    let g = f.grid;
    let target = PhaseGrid::new(map.target_nx, g.nv, g.length, g.vmax)?;
    let mut values = vec![0.0; target.cells()];
    let mut column = vec![0.0; g.nx];
    for j in 0..g.nv {
        for (i, c) in column.iter_mut().enumerate() {
            *c = f.at(i, j);
        }
        let s = map.sample(&column, g.length)?;
        for (i, v) in s.iter().enumerate() {
            values[i * g.nv + j] = *v;
        }
    }
    DistField::new(target, values, f.time * map.epsilon())
}

/// `E_1(x) = N E(N x)`.
pub fn rescale_efield(e: &FieldProfile, map: &ScalingMap) -> Result<FieldProfile> {
    let s = map.sample(&e.values, e.length)?;
    let n = map.n as f64;
    Ok(FieldProfile::new(e.length, s.iter().map(|v| n * v).collect(), FieldKind::ElectricField))
}

/// Maps a normal-regime trajectory to the quasineutral regime.
pub fn rescale_solution(traj: &Trajectory, map: &ScalingMap) -> Result<Trajectory> {
    let eps = map.epsilon();
    let mut snapshots = Vec::with_capacity(traj.snapshots.len());
    for s in &traj.snapshots {
        snapshots.push(Snapshot {
            time: s.time * eps,
            f: rescale_field(&s.f, map)?,
            e: rescale_efield(&s.e, map)?,
        });
    }
    let diagnostics = traj
        .diagnostics
        .iter()
        .map(|d| Diagnostics { time: d.time * eps, ..*d })
        .collect();
    Ok(Trajectory { epsilon: eps, snapshots, diagnostics, warnings: traj.warnings.clone() })
}

/// Residuals of the Vlasov equation and the Gauss law on recorded snapshots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals {
    pub pde: f64,
    pub gauss: f64,
}

fn dv_centered(f: &DistField) -> Vec<f64> {
    let g = f.grid;
    let dv = g.dv();
    let mut out = vec![0.0; g.cells()];
    for i in 0..g.nx {
        for j in 0..g.nv {
            let up = if j + 1 < g.nv { f.at(i, j + 1) } else { 0.0 };
            let down = if j > 0 { f.at(i, j - 1) } else { 0.0 };
            out[i * g.nv + j] = (up - down) / (2.0 * dv);
        }
    }
    out
}

fn dx_spectral(f: &DistField) -> Vec<f64> {
    let g = f.grid;
    let mut out = vec![0.0; g.cells()];
    let mut column = vec![0.0; g.nx];
    for j in 0..g.nv {
        for (i, c) in column.iter_mut().enumerate() {
            *c = f.at(i, j);
        }
        for (i, d) in derivative(&column, g.length, 1).iter().enumerate() {
            out[i * g.nv + j] = *d;
        }
    }
    out
}

/// Removes the Nyquist component, which no field on the grid can balance.
fn resolved(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    if n % 2 != 0 {
        return values.to_vec();
    }
    let c: f64 = values.iter().enumerate().map(|(i, v)| if i % 2 == 0 { *v } else { -*v }).sum::<f64>() / n as f64;
    values.iter().enumerate().map(|(i, v)| if i % 2 == 0 { v - c } else { v + c }).collect()
}

/// `max |h_t + v h_x + E h_v|` at interior snapshots (centred in time, spectral
/// in `x`, centred in `v`) and `max |eps^2 E_x - (rho - 1)|` at all snapshots,
/// with the Nyquist mode of `rho` excluded.
pub fn quasineutral_residual(snaps: &[Snapshot], epsilon: f64) -> Result<Residuals> {
    if snaps.len() < 3 {
        return Err(Error::InvalidInput("at least 3 snapshots are needed"));
    }
    let dt = snaps[1].time - snaps[0].time;
    for w in snaps.windows(2) {
        if ((w[1].time - w[0].time) - dt).abs() > 1e-9 * dt.abs().max(1e-300) {
            return Err(Error::InvalidInput("snapshots must be equally spaced"));
        }
    }
    let mut pde: f64 = 0.0;
    for n in 1..snaps.len() - 1 {
        let f = &snaps[n].f;
        let g = f.grid;
        let fx = dx_spectral(f);
        let fv = dv_centered(f);
        let vs = g.vs();
        for i in 0..g.nx {
            for j in 0..g.nv {
                let idx = i * g.nv + j;
                let ft = (snaps[n + 1].f.values[idx] - snaps[n - 1].f.values[idx]) / (2.0 * dt);
                let r = ft + vs[j] * fx[idx] + snaps[n].e.values[i] * fv[idx];
                pde = pde.max(r.abs());
            }
        }
    }
    let mut gauss: f64 = 0.0;
    let eps2 = epsilon * epsilon;
    for s in snaps {
        let rho = resolved(&moment_density(&s.f).values);
        let ex = derivative(&s.e.values, s.e.length, 1);
        for (d, r) in ex.iter().zip(&rho) {
            gauss = gauss.max((eps2 * d - (r - 1.0)).abs());
        }
    }
    Ok(Residuals { pde, gauss })
}

/// Errors of the derivative identity `d_x^l d_z^k E_1 = eps^-(l+1) (d_x^l d_z^k E)(x/eps)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityReport {
    pub l: u32,
    pub k: usize,
    pub max_abs_error: f64,
    pub max_rel_error: f64,
}

fn z_profile(series: &[&FieldProfile], ensemble: &ZEnsemble, k: usize, at: f64, l: u32) -> Result<Vec<f64>> {
    let nx = series[0].len();
    let dx: Vec<Vec<f64>> = series.iter().map(|p| derivative(&p.values, p.length, l)).collect();
    let mut out = vec![0.0; nx];
    let mut column = vec![0.0; series.len()];
    for (i, o) in out.iter_mut().enumerate() {
        for (c, d) in column.iter_mut().zip(&dx) {
            *c = d[i];
        }
        *o = z_derivative(&column, ensemble, k, at)?;
    }
    Ok(out)
}

/// Compares both sides of the identity at every snapshot; `e_normal[node][t]`
/// and `e_quasi[node][t]` are aligned (quasineutral time = eps * normal time).
pub fn field_rescale_identity_check(
    e_normal: &[Vec<FieldProfile>],
    e_quasi: &[Vec<FieldProfile>],
    l: u32,
    k: usize,
    map: &ScalingMap,
    ensemble: &ZEnsemble,
    at: f64,
) -> Result<IdentityReport> {
    let nodes = ensemble.nodes.len();
    if e_normal.len() != nodes || e_quasi.len() != nodes {
        return Err(Error::InvalidInput("one series per ensemble node required"));
    }
    let steps = e_normal[0].len();
    if e_normal.iter().chain(e_quasi.iter()).any(|s| s.len() != steps) {
        return Err(Error::InvalidInput("series lengths differ"));
    }
    let factor = (map.n as f64).powi(l as i32 + 1);
    let mut max_abs: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for t in 0..steps {
        let normal: Vec<&FieldProfile> = e_normal.iter().map(|s| &s[t]).collect();
        let quasi: Vec<&FieldProfile> = e_quasi.iter().map(|s| &s[t]).collect();
        let rhs_src = z_profile(&normal, ensemble, k, at, l)?;
        let rhs = map.sample(&rhs_src, normal[0].length)?;
        let lhs = z_profile(&quasi, ensemble, k, at, l)?;
        if lhs.len() != rhs.len() {
            return Err(Error::GridMismatch { source_nx: rhs_src.len(), target: lhs.len(), n: map.n });
        }
        for (a, b) in lhs.iter().zip(&rhs) {
            let b = factor * b;
            max_abs = max_abs.max((a - b).abs());
            scale = scale.max(b.abs());
        }
    }
    let max_rel_error = if scale > 0.0 { max_abs / scale } else { max_abs };
    Ok(IdentityReport { l, k, max_abs_error: max_abs, max_rel_error })
}

/// First zero of a periodic profile by sign change and linear interpolation.
pub fn locate_root(e: &FieldProfile) -> Option<f64> {
    let n = e.len();
    let dx = e.dx();
    for i in 0..n {
        let a = e.values[i];
        let b = e.values[(i + 1) % n];
        if a == 0.0 {
            return Some(i as f64 * dx);
        }
        if a * b < 0.0 {
            return Some((i as f64 + a / (a - b)) * dx);
        }
    }
    None
}

/// Field from the density by integrating from a zero `x0` of the field:
/// `eps^2 E(x) = int_{x0}^x (rho - 1)`.
pub fn field_from_root(rho: &FieldProfile, x0: f64, epsilon: f64) -> FieldProfile {
    let n = rho.len();
    let shifted: Vec<f64> = rho.values.iter().map(|r| r - 1.0).collect();
    let mut modes = fft_real(&shifted);
    for (k, c) in modes.iter_mut().enumerate() {
        if k == 0 || (n % 2 == 0 && k == n / 2) {
            *c = Complex64::new(0.0, 0.0);
        } else {
            *c /= Complex64::new(0.0, wavenumber(k, n, rho.length));
        }
    }
    let base = eval_trig(&modes, rho.length, x0);
    let dx = rho.dx();
    let eps2 = epsilon * epsilon;
    let values = (0..n)
        .map(|i| (eval_trig(&modes, rho.length, i as f64 * dx) - base) / eps2)
        .collect();
    FieldProfile::new(rho.length, values, FieldKind::ElectricField)
}

/// Fraction of cells where the centred `|d_v f|` is at most `tol`.
pub fn zero_set_fraction(f: &DistField, tol: f64) -> f64 {
    let d = dv_centered(f);
    d.iter().filter(|v| v.abs() <= tol).count() as f64 / d.len() as f64
}
