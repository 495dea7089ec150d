//! Phase-space grids, distribution samples, spatial profiles and moments.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Euclid;

use crate::error::{Error, Result};

/// Tensor grid on the periodic interval `[0, L)` times `[-vmax, vmax]`.
///
/// Position nodes are `x_i = i dx`; velocity nodes are cell centres
/// `v_j = -vmax + (j + 1/2) dv`, symmetric about zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseGrid {
    pub nx: usize,
    pub nv: usize,
    pub length: f64,
    pub vmax: f64,
}

impl PhaseGrid {
    pub fn new(nx: usize, nv: usize, length: f64, vmax: f64) -> Result<Self> {
        if nx < 4 || nv < 4 {
            return Err(Error::InvalidInput("nx and nv must be at least 4"));
        }
        if nx % 2 != 0 {
            return Err(Error::InvalidInput("nx must be even"));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidInput("period must be positive"));
        }
        if !(vmax > 0.0 && vmax.is_finite()) {
            return Err(Error::InvalidInput("vmax must be positive"));
        }
        Ok(Self { nx, nv, length, vmax })
    }

    pub fn dx(&self) -> f64 {
        self.length / self.nx as f64
    }

    pub fn dv(&self) -> f64 {
        2.0 * self.vmax / self.nv as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx()
    }

    pub fn v(&self, j: usize) -> f64 {
        -self.vmax + (j as f64 + 0.5) * self.dv()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.x(i)).collect()
    }

    pub fn vs(&self) -> Vec<f64> {
        (0..self.nv).map(|j| self.v(j)).collect()
    }

    pub fn cells(&self) -> usize {
        self.nx * self.nv
    }
}

/// Samples of a phase-space density, stored row-major as `values[i * nv + j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistField {
    pub grid: PhaseGrid,
    pub values: Vec<f64>,
    pub time: f64,
}

impl DistField {
    pub fn new(grid: PhaseGrid, values: Vec<f64>, time: f64) -> Result<Self> {
        if values.len() != grid.cells() {
            return Err(Error::InvalidInput("value count does not match grid"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite distribution value"));
        }
        Ok(Self { grid, values, time })
    }

    pub fn zeros(grid: PhaseGrid) -> Self {
        Self { grid, values: vec![0.0; grid.cells()], time: 0.0 }
    }

    pub fn from_fn(grid: PhaseGrid, time: f64, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.cells());
        for i in 0..grid.nx {
            let x = grid.x(i);
            for j in 0..grid.nv {
                values.push(f(x, grid.v(j)));
            }
        }
        Self { grid, values, time }
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.nv + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let nv = self.grid.nv;
        &self.values[i * nv..(i + 1) * nv]
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.dx() * self.grid.dv()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// What a spatial profile represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    ChargeDensity,
    ElectricField,
    Potential,
    Current,
    Velocity,
}

/// Samples of a periodic function of `x` at `x_i = i L / n`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldProfile {
    pub length: f64,
    pub values: Vec<f64>,
    pub kind: FieldKind,
}

impl FieldProfile {
    pub fn new(length: f64, values: Vec<f64>, kind: FieldKind) -> Self {
        Self { length, values, kind }
    }

    pub fn constant(length: f64, n: usize, value: f64, kind: FieldKind) -> Self {
        Self { length, values: vec![value; n], kind }
    }

    pub fn from_fn(length: f64, n: usize, kind: FieldKind, f: impl Fn(f64) -> f64) -> Self {
        let dx = length / n as f64;
        Self { length, values: (0..n).map(|i| f(i as f64 * dx)).collect(), kind }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dx(&self) -> f64 {
        self.length / self.values.len() as f64
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.dx()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `rho(x_i) = sum_j f(x_i, v_j) dv`.
pub fn moment_density(f: &DistField) -> FieldProfile {
    let dv = f.grid.dv();
    let values = (0..f.grid.nx).map(|i| f.row(i).iter().sum::<f64>() * dv).collect();
    FieldProfile::new(f.grid.length, values, FieldKind::ChargeDensity)
}

/// `j(x_i) = sum_j f(x_i, v_j) v_j dv`.
pub fn moment_current(f: &DistField) -> FieldProfile {
    let dv = f.grid.dv();
    let vs = f.grid.vs();
    let values = (0..f.grid.nx)
        .map(|i| f.row(i).iter().zip(&vs).map(|(a, v)| a * v).sum::<f64>() * dv)
        .collect();
    FieldProfile::new(f.grid.length, values, FieldKind::Current)
}

/// `1/2 sum f v^2 dx dv`.
pub fn kinetic_energy(f: &DistField) -> f64 {
    let vs = f.grid.vs();
    let mut acc = 0.0;
    for i in 0..f.grid.nx {
        acc += f.row(i).iter().zip(&vs).map(|(a, v)| a * v * v).sum::<f64>();
    }
    0.5 * acc * f.grid.dx() * f.grid.dv()
}

/// Quotient distance on the circle of circumference `length`.
pub fn torus_distance(x1: f64, x2: f64, length: f64) -> f64 {
    let d = Euclid::rem_euclid(&(x1 - x2).abs(), &length);
    d.min(length - d)
}
