//! Random-input families, collocation ensembles, derivatives in the random
//! parameter, and the uniform-control set diagnostics.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::fluid::{FluidEnsemble, CorrectorState};
use crate::phase::FieldProfile;
use crate::quadrature::{chebyshev_lobatto, gauss_legendre};

/// Smooth one-parameter families of initial-data parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InputFamily {
    /// `alpha(z) = base (1 + slope z)`.
    Amplitude { base: f64, slope: f64 },
    /// `shift(z) = scale z`.
    Drift { scale: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomInput {
    pub family: InputFamily,
    pub support: (f64, f64),
}

impl RandomInput {
    pub fn value(&self, z: f64) -> f64 {
        match self.family {
            InputFamily::Amplitude { base, slope } => base * (1.0 + slope * z),
            InputFamily::Drift { scale } => scale * z,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeRule {
    GaussLegendre,
    ChebyshevLobatto,
}

/// Collocation nodes and quadrature weights for the uniform density on the support.
#[derive(Debug, Clone, PartialEq)]
pub struct ZEnsemble {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub rule: NodeRule,
    pub support: (f64, f64),
}

impl ZEnsemble {
    /// Index of the node equal to `z` (within 1e-12), if any.
    pub fn node_index(&self, z: f64) -> Option<usize> {
        self.nodes.iter().position(|n| (n - z).abs() <= 1e-12)
    }
}

pub fn build_ensemble(input: &RandomInput, n_nodes: usize, rule: NodeRule) -> Result<ZEnsemble> {
    if n_nodes < 2 {
        return Err(Error::InvalidInput("an ensemble needs at least 2 nodes"));
    }
    let (lo, hi) = input.support;
    if !(hi > lo) {
        return Err(Error::InvalidInput("empty support"));
    }
    let (x, w) = match rule {
        NodeRule::GaussLegendre => gauss_legendre(n_nodes),
        NodeRule::ChebyshevLobatto => chebyshev_lobatto(n_nodes),
    };
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    Ok(ZEnsemble {
        nodes: x.iter().map(|t| mid + half * t).collect(),
        weights: w.iter().map(|v| v * half).collect(),
        rule,
        support: input.support,
    })
}

/// Maximal number of nodes accepted by [`z_derivative`].
pub const MAX_DERIVATIVE_NODES: usize = 40;

/// `k`-th derivative at `at` of the polynomial interpolating `values` on a
/// Chebyshev-Gauss-Lobatto ensemble.
pub fn z_derivative(values: &[f64], ensemble: &ZEnsemble, k: usize, at: f64) -> Result<f64> {
    let n = ensemble.nodes.len();
    if ensemble.rule != NodeRule::ChebyshevLobatto {
        return Err(Error::InvalidInput("z-derivatives need a Chebyshev-Gauss-Lobatto ensemble"));
    }
    if n > MAX_DERIVATIVE_NODES {
        return Err(Error::IllConditioned { nodes: n });
    }
    if values.len() != n {
        return Err(Error::InvalidInput("one value per node required"));
    }
    if k >= n {
        return Err(Error::InvalidInput("derivative order must be below the node count"));
    }
    let big_n = n - 1;
    // Nodes are -cos(pi j / N); in the variable s = -t they are cos(pi j / N).
    let mut c = vec![0.0; n];
    for (m, cm) in c.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (j, v) in values.iter().enumerate() {
            let w = if j == 0 || j == big_n { 0.5 } else { 1.0 };
            acc += w * v * (PI * (j * m) as f64 / big_n as f64).cos();
        }
        *cm = 2.0 * acc / big_n as f64;
    }
    c[0] *= 0.5;
    c[big_n] *= 0.5;
    for _ in 0..k {
        let mut d = vec![0.0; n];
        for m in (1..n).rev() {
            let next = if m + 1 < n { d[m + 1] } else { 0.0 };
            d[m - 1] = next + 2.0 * m as f64 * c[m];
        }
        d[0] *= 0.5;
        c = d;
    }
    let (lo, hi) = ensemble.support;
    let t = (2.0 * at - lo - hi) / (hi - lo);
    let s = -t;
    // Chain rule: d/dz = (2 / (hi - lo)) d/dt and d/dt = -d/ds.
    let scale = (-2.0 / (hi - lo)).powi(k as i32);
    let (mut b1, mut b2) = (0.0, 0.0);
    for m in (1..n).rev() {
        let b0 = 2.0 * s * b1 - b2 + c[m];
        b2 = b1;
        b1 = b0;
    }
    Ok((s * b1 - b2 + c[0]) * scale)
}

/// Parameters of the uniform-control set around a reference node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ASetParams {
    pub delta: f64,
    pub m_factor: f64,
    pub z0: f64,
    pub horizon: f64,
}

/// Recorded data for one `(z, eps)` pair: fluid states at eps, limit states and
/// corrector values, all on the same time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlRun {
    pub epsilon: f64,
    pub times: Vec<f64>,
    pub fluid: Vec<FluidEnsemble>,
    pub limit: Vec<FluidEnsemble>,
    pub corrector: Vec<FieldProfile>,
}

/// Per-label sup norms over `x` and recorded `t <= horizon` entering the set's definition.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlNorms {
    pub rho_eps: Vec<f64>,
    pub v_limit: Vec<f64>,
    pub rho_gap: Vec<f64>,
    pub v_gap: Vec<f64>,
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

fn sup_corrected(ve: &[f64], c: &[f64], vl: &[f64]) -> f64 {
    ve.iter().zip(c).zip(vl).fold(0.0f64, |m, ((a, b), d)| m.max((a + b - d).abs()))
}

pub fn control_norms(run: &ControlRun, horizon: f64) -> Result<ControlNorms> {
    if run.fluid.len() != run.times.len() || run.limit.len() != run.times.len() || run.corrector.len() != run.times.len() {
        return Err(Error::InvalidInput("run series have different lengths"));
    }
    let labels = run.fluid.first().map(|s| s.weights.len()).unwrap_or(0);
    let mut out = ControlNorms {
        rho_eps: vec![0.0; labels],
        v_limit: vec![0.0; labels],
        rho_gap: vec![0.0; labels],
        v_gap: vec![0.0; labels],
    };
    for (n, t) in run.times.iter().enumerate() {
        if *t > horizon * (1.0 + 1e-12) {
            continue;
        }
        let (fe, fl, c) = (&run.fluid[n], &run.limit[n], &run.corrector[n]);
        for j in 0..labels {
            out.rho_eps[j] = out.rho_eps[j].max(fe.rho[j].sup_norm());
            out.v_limit[j] = out.v_limit[j].max(fl.u[j].sup_norm());
            out.rho_gap[j] = out.rho_gap[j].max(sup_diff(&fe.rho[j].values, &fl.rho[j].values));
            out.v_gap[j] = out.v_gap[j].max(sup_corrected(&fe.u[j].values, &c.values, &fl.u[j].values));
        }
    }
    Ok(out)
}

/// Membership of each node in the uniform-control set. `runs[node]` lists the
/// runs of that node (any eps order); only eps below `delta` are tested.
pub fn aset_membership(runs: &[Vec<ControlRun>], ensemble: &ZEnsemble, params: &ASetParams, eps_list: &[f64]) -> Result<Vec<bool>> {
    let z0 = ensemble
        .node_index(params.z0)
        .ok_or(Error::InvalidInput("z0 must be an ensemble node"))?;
    if runs.len() != ensemble.nodes.len() {
        return Err(Error::InvalidInput("one run list per node required"));
    }
    let find = |node: usize, eps: f64| -> Result<&ControlRun> {
        runs[node]
            .iter()
            .find(|r| r.epsilon == eps)
            .ok_or(Error::MissingRun { node, epsilon: eps })
    };
    let tested: Vec<f64> = eps_list.iter().copied().filter(|e| *e < params.delta).collect();
    let mut reference = Vec::with_capacity(tested.len());
    for &eps in &tested {
        reference.push(control_norms(find(z0, eps)?, params.horizon)?);
    }
    let m = params.m_factor;
    let mut member = vec![true; runs.len()];
    for (node, flag) in member.iter_mut().enumerate() {
        for (k, &eps) in tested.iter().enumerate() {
            let own = control_norms(find(node, eps)?, params.horizon)?;
            let r = &reference[k];
            let ok = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| *x <= m * *y);
            if !(ok(&own.rho_eps, &r.rho_eps)
                && ok(&own.v_limit, &r.v_limit)
                && ok(&own.rho_gap, &r.rho_gap)
                && ok(&own.v_gap, &r.v_gap))
            {
                *flag = false;
            }
        }
    }
    Ok(member)
}

/// `sup_t [ sup_j |rho_eps_j| * sum_j w_j |v_eps_j + C - v_j| + sum_j w_j |rho_eps_j - rho_j| (1/2 + sup_j |v_j|) ]`.
pub fn g_epsilon(run: &ControlRun) -> Result<f64> {
    if run.fluid.len() != run.limit.len() || run.fluid.len() != run.corrector.len() {
        return Err(Error::InvalidInput("run series have different lengths"));
    }
    let mut best: f64 = 0.0;
    for n in 0..run.fluid.len() {
        let (fe, fl, c) = (&run.fluid[n], &run.limit[n], &run.corrector[n]);
        if fe.weights.len() != fl.weights.len() {
            return Err(Error::InvalidInput("label quadratures differ"));
        }
        let mut rho_sup: f64 = 0.0;
        let mut v_sup: f64 = 0.0;
        let mut vel = 0.0;
        let mut dens = 0.0;
        for j in 0..fe.weights.len() {
            rho_sup = rho_sup.max(fe.rho[j].sup_norm());
            v_sup = v_sup.max(fl.u[j].sup_norm());
            vel += fe.weights[j] * sup_corrected(&fe.u[j].values, &c.values, &fl.u[j].values);
            dens += fe.weights[j] * sup_diff(&fe.rho[j].values, &fl.rho[j].values);
        }
        best = best.max(rho_sup * vel + dens * (0.5 + v_sup));
    }
    Ok(best)
}

/// Corrector evaluated along a run.
pub fn corrector_series(states: &[CorrectorState], times: &[f64]) -> Result<Vec<FieldProfile>> {
    states
        .iter()
        .zip(times)
        .map(|(s, t)| crate::fluid::corrector_eval(s, *t))
        .collect()
}
