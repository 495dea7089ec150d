//! Wasserstein distances between weighted point clouds on the periodic
//! position space times velocity space.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::phase::{torus_distance, DistField};

/// Largest dense cost matrix accepted by the exact solver.
pub const MAX_EXACT_ENTRIES: usize = 1_000_000;

/// Probability measure given by weighted points `(x, v)`; `x` is periodic.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedCloud {
    pub dim_x: usize,
    pub dim_v: usize,
    /// Point coordinates, `dim_x + dim_v` values per point (positions first).
    pub coords: Vec<f64>,
    pub weights: Vec<f64>,
    pub length: f64,
}

impl WeightedCloud {
    pub fn new(dim_x: usize, dim_v: usize, coords: Vec<f64>, weights: Vec<f64>, length: f64) -> Result<Self> {
        let stride = dim_x + dim_v;
        if stride == 0 || coords.len() != stride * weights.len() {
            return Err(Error::InvalidInput("coordinate count does not match weights"));
        }
        if weights.is_empty() {
            return Err(Error::EmptyCloud);
        }
        if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidInput("cloud weights must be positive"));
        }
        if (weights.iter().sum::<f64>() - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidInput("cloud weights must sum to 1"));
        }
        if !(length > 0.0) {
            return Err(Error::InvalidInput("period must be positive"));
        }
        Ok(Self { dim_x, dim_v, coords, weights, length })
    }

    /// Drops nonpositive weights and rescales the rest to total one.
    pub fn normalized(dim_x: usize, dim_v: usize, coords: &[f64], weights: &[f64], length: f64) -> Result<Self> {
        let stride = dim_x + dim_v;
        let total: f64 = weights.iter().filter(|w| **w > 0.0).sum();
        if !(total > 0.0) {
            return Err(Error::EmptyCloud);
        }
        let mut c = Vec::new();
        let mut w = Vec::new();
        for (i, wi) in weights.iter().enumerate() {
            if *wi > 0.0 {
                c.extend_from_slice(&coords[i * stride..(i + 1) * stride]);
                w.push(wi / total);
            }
        }
        Self::new(dim_x, dim_v, c, w, length)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> (&[f64], &[f64]) {
        let stride = self.dim_x + self.dim_v;
        let p = &self.coords[i * stride..(i + 1) * stride];
        p.split_at(self.dim_x)
    }
}

/// `(sum_k d_torus(x_k)^2 + |v - w|^2)^(q/2)`.
pub fn ground_cost(px: &[f64], pv: &[f64], qx: &[f64], qv: &[f64], length: f64, q: u32) -> f64 {
    let mut s = 0.0;
    for (a, b) in px.iter().zip(qx) {
        let d = torus_distance(*a, *b, length);
        s += d * d;
    }
    for (a, b) in pv.iter().zip(qv) {
        s += (a - b) * (a - b);
    }
    match q {
        1 => s.sqrt(),
        2 => s,
        _ => s.powf(0.5 * q as f64),
    }
}

fn check_pair(a: &WeightedCloud, b: &WeightedCloud, q: u32) -> Result<()> {
    if q != 1 && q != 2 {
        return Err(Error::InvalidInput("q must be 1 or 2"));
    }
    if a.dim_x != b.dim_x || a.dim_v != b.dim_v || a.length != b.length {
        return Err(Error::InvalidInput("clouds live on different spaces"));
    }
    Ok(())
}

fn cost_matrix(a: &WeightedCloud, b: &WeightedCloud, q: u32) -> Vec<f64> {
    let mut c = Vec::with_capacity(a.len() * b.len());
    for i in 0..a.len() {
        let (ax, av) = a.point(i);
        for j in 0..b.len() {
            let (bx, bv) = b.point(j);
            c.push(ground_cost(ax, av, bx, bv, a.length, q));
        }
    }
    c
}

/// Transport plan with its marginal errors.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    /// Nonzero entries `(i, j, mass)`, sorted by `(i, j)`.
    pub plan: Vec<(usize, usize, f64)>,
    pub row_residual: f64,
    pub col_residual: f64,
}

const TREE: i8 = 0;
const LOWER: i8 = 1;
const UP: i8 = 1;
const DOWN: i8 = -1;

/// Primal network simplex on the complete bipartite graph (uncapacitated),
/// spanning-tree bookkeeping with threads and successor counts.
struct NetworkSimplex {
    n_arcs: usize,
    source: Vec<usize>,
    target: Vec<usize>,
    cost: Vec<f64>,
    flow: Vec<f64>,
    state: Vec<i8>,
    pi: Vec<f64>,
    parent: Vec<usize>,
    pred: Vec<usize>,
    pred_dir: Vec<i8>,
    thread: Vec<usize>,
    rev_thread: Vec<usize>,
    succ_num: Vec<usize>,
    last_succ: Vec<usize>,
    dirty_revs: Vec<usize>,
    block_size: usize,
    next_arc: usize,
    in_arc: usize,
    join: usize,
    u_in: usize,
    v_in: usize,
    u_out: usize,
    delta: f64,
}

const NONE: usize = usize::MAX;
const PIVOT_EPS: f64 = 1e-12;

impl NetworkSimplex {
    fn new(supply: &[f64], demand: &[f64], cost: Vec<f64>) -> Self {
        let m = supply.len();
        let n = demand.len();
        let nodes = m + n;
        let n_arcs = m * n;
        let all_arcs = n_arcs + nodes;
        let mut source = Vec::with_capacity(all_arcs);
        let mut target = Vec::with_capacity(all_arcs);
        for i in 0..m {
            for j in 0..n {
                source.push(i);
                target.push(m + j);
            }
        }
        let max_cost = cost.iter().fold(0.0f64, |a, c| a.max(*c));
        let art_cost = (max_cost + 1.0) * nodes as f64;
        let root = nodes;
        let mut ns = NetworkSimplex {
            n_arcs,
            source,
            target,
            cost,
            flow: vec![0.0; all_arcs],
            state: vec![LOWER; all_arcs],
            pi: vec![0.0; nodes + 1],
            parent: vec![NONE; nodes + 1],
            pred: vec![NONE; nodes + 1],
            pred_dir: vec![UP; nodes + 1],
            thread: vec![0; nodes + 1],
            rev_thread: vec![0; nodes + 1],
            succ_num: vec![1; nodes + 1],
            last_succ: vec![0; nodes + 1],
            dirty_revs: Vec::new(),
            block_size: ((n_arcs as f64).sqrt().ceil() as usize).max(10),
            next_arc: 0,
            in_arc: 0,
            join: 0,
            u_in: 0,
            v_in: 0,
            u_out: 0,
            delta: 0.0,
        };
        ns.cost.resize(all_arcs, 0.0);
        ns.thread[root] = 0;
        ns.rev_thread[0] = root;
        ns.succ_num[root] = nodes + 1;
        ns.last_succ[root] = nodes - 1;
        for u in 0..nodes {
            let e = n_arcs + u;
            ns.parent[u] = root;
            ns.pred[u] = e;
            ns.thread[u] = u + 1;
            ns.rev_thread[u + 1] = u;
            ns.succ_num[u] = 1;
            ns.last_succ[u] = u;
            ns.state[e] = TREE;
            if u < m {
                ns.pred_dir[u] = UP;
                ns.pi[u] = 0.0;
                ns.source.push(u);
                ns.target.push(root);
                ns.flow[e] = supply[u];
                ns.cost[e] = 0.0;
            } else {
                ns.pred_dir[u] = DOWN;
                ns.pi[u] = art_cost;
                ns.source.push(root);
                ns.target.push(u);
                ns.flow[e] = demand[u - m];
                ns.cost[e] = art_cost;
            }
        }
        ns
    }

    fn reduced(&self, e: usize) -> f64 {
        self.state[e] as f64 * (self.cost[e] + self.pi[self.source[e]] - self.pi[self.target[e]])
    }

    fn tolerance(&self, e: usize) -> f64 {
        let s = self.pi[self.source[e]].abs().max(self.pi[self.target[e]].abs()).max(self.cost[e].abs());
        -PIVOT_EPS * s.max(1.0)
    }

    fn find_entering_arc(&mut self) -> bool {
        let mut min = 0.0;
        let mut best = NONE;
        let mut count = self.block_size;
        let total = self.n_arcs;
        for step in 0..total {
            let e = (self.next_arc + step) % total;
            let c = self.reduced(e);
            if c < min {
                min = c;
                best = e;
            }
            count -= 1;
            if count == 0 {
                if best != NONE && min < self.tolerance(best) {
                    self.in_arc = best;
                    self.next_arc = (e + 1) % total;
                    return true;
                }
                count = self.block_size;
            }
        }
        if best != NONE && min < self.tolerance(best) {
            self.in_arc = best;
            return true;
        }
        false
    }

    fn find_join_node(&mut self) {
        let mut u = self.source[self.in_arc];
        let mut v = self.target[self.in_arc];
        while u != v {
            if self.succ_num[u] < self.succ_num[v] {
                u = self.parent[u];
            } else {
                v = self.parent[v];
            }
        }
        self.join = u;
    }

    fn find_leaving_arc(&mut self) -> bool {
        let (first, second) = if self.state[self.in_arc] == LOWER {
            (self.source[self.in_arc], self.target[self.in_arc])
        } else {
            (self.target[self.in_arc], self.source[self.in_arc])
        };
        self.delta = f64::INFINITY;
        let mut result = 0;
        let mut u = first;
        while u != self.join {
            let d = if self.pred_dir[u] == DOWN { f64::INFINITY } else { self.flow[self.pred[u]] };
            if d < self.delta {
                self.delta = d;
                self.u_out = u;
                result = 1;
            }
            u = self.parent[u];
        }
        let mut u = second;
        while u != self.join {
            let d = if self.pred_dir[u] == UP { f64::INFINITY } else { self.flow[self.pred[u]] };
            if d <= self.delta {
                self.delta = d;
                self.u_out = u;
                result = 2;
            }
            u = self.parent[u];
        }
        if result == 1 {
            self.u_in = first;
            self.v_in = second;
        } else {
            self.u_in = second;
            self.v_in = first;
        }
        result != 0
    }

    fn change_flow(&mut self) {
        let delta = self.delta.max(0.0);
        if delta > 0.0 {
            let val = self.state[self.in_arc] as f64 * delta;
            self.flow[self.in_arc] += val;
            let mut u = self.source[self.in_arc];
            while u != self.join {
                self.flow[self.pred[u]] -= self.pred_dir[u] as f64 * val;
                u = self.parent[u];
            }
            let mut u = self.target[self.in_arc];
            while u != self.join {
                self.flow[self.pred[u]] += self.pred_dir[u] as f64 * val;
                u = self.parent[u];
            }
        }
        self.state[self.in_arc] = TREE;
        let out = self.pred[self.u_out];
        self.flow[out] = 0.0;
        self.state[out] = LOWER;
    }

    fn update_tree_structure(&mut self) {
        let old_rev_thread = self.rev_thread[self.u_out];
        let old_succ_num = self.succ_num[self.u_out];
        let old_last_succ = self.last_succ[self.u_out];
        let v_out = self.parent[self.u_out];
        let (u_in, v_in, u_out, in_arc) = (self.u_in, self.v_in, self.u_out, self.in_arc);

        if u_in == u_out {
            self.parent[u_in] = v_in;
            self.pred[u_in] = in_arc;
            self.pred_dir[u_in] = if u_in == self.source[in_arc] { UP } else { DOWN };
            if self.thread[v_in] != u_out {
                let mut after = self.thread[old_last_succ];
                self.thread[old_rev_thread] = after;
                self.rev_thread[after] = old_rev_thread;
                after = self.thread[v_in];
                self.thread[v_in] = u_out;
                self.rev_thread[u_out] = v_in;
                self.thread[old_last_succ] = after;
                self.rev_thread[after] = old_last_succ;
            }
        } else {
            let thread_continue =
                if old_rev_thread == v_in { self.thread[old_last_succ] } else { self.thread[v_in] };
            let mut stem = u_in;
            let mut par_stem = v_in;
            let mut last = self.last_succ[u_in];
            let mut after = self.thread[last];
            self.thread[v_in] = u_in;
            self.dirty_revs.clear();
            self.dirty_revs.push(v_in);
            while stem != u_out {
                let next_stem = self.parent[stem];
                self.thread[last] = next_stem;
                self.dirty_revs.push(last);
                let before = self.rev_thread[stem];
                self.thread[before] = after;
                self.rev_thread[after] = before;
                self.parent[stem] = par_stem;
                par_stem = stem;
                stem = next_stem;
                last = if self.last_succ[stem] == self.last_succ[par_stem] {
                    self.rev_thread[par_stem]
                } else {
                    self.last_succ[stem]
                };
                after = self.thread[last];
            }
            self.parent[u_out] = par_stem;
            self.thread[last] = thread_continue;
            self.rev_thread[thread_continue] = last;
            self.last_succ[u_out] = last;
            if old_rev_thread != v_in {
                self.thread[old_rev_thread] = after;
                self.rev_thread[after] = old_rev_thread;
            }
            for k in 0..self.dirty_revs.len() {
                let u = self.dirty_revs[k];
                let t = self.thread[u];
                self.rev_thread[t] = u;
            }
            let mut tmp_sc = 0usize;
            let tmp_ls = self.last_succ[u_out];
            let mut u = u_out;
            while u != u_in {
                let p = self.parent[u];
                self.pred[u] = self.pred[p];
                self.pred_dir[u] = -self.pred_dir[p];
                tmp_sc += self.succ_num[u] - self.succ_num[p];
                self.succ_num[u] = tmp_sc;
                self.last_succ[p] = tmp_ls;
                u = p;
            }
            self.pred[u_in] = in_arc;
            self.pred_dir[u_in] = if u_in == self.source[in_arc] { UP } else { DOWN };
            self.succ_num[u_in] = old_succ_num;
        }

        let up_limit_out = if self.last_succ[self.join] == v_in { self.join } else { NONE };
        let last_succ_out = self.last_succ[u_out];
        let mut u = v_in;
        while u != NONE && self.last_succ[u] == v_in {
            self.last_succ[u] = last_succ_out;
            u = self.parent[u];
        }
        if self.join != old_rev_thread && v_in != old_rev_thread {
            let mut u = v_out;
            while u != NONE && u != up_limit_out && self.last_succ[u] == old_last_succ {
                self.last_succ[u] = old_rev_thread;
                u = self.parent[u];
            }
        } else if last_succ_out != old_last_succ {
            let mut u = v_out;
            while u != NONE && u != up_limit_out && self.last_succ[u] == old_last_succ {
                self.last_succ[u] = last_succ_out;
                u = self.parent[u];
            }
        }
        let mut u = v_in;
        while u != self.join {
            self.succ_num[u] += old_succ_num;
            u = self.parent[u];
        }
        let mut u = v_out;
        while u != self.join {
            self.succ_num[u] -= old_succ_num;
            u = self.parent[u];
        }
    }

    fn update_potential(&mut self) {
        let sigma = self.pi[self.v_in] - self.pi[self.u_in] - self.pred_dir[self.u_in] as f64 * self.cost[self.in_arc];
        let end = self.thread[self.last_succ[self.u_in]];
        let mut u = self.u_in;
        while u != end {
            self.pi[u] += sigma;
            u = self.thread[u];
        }
    }

    fn run(&mut self) -> Result<()> {
        let limit = 50 * (self.n_arcs + self.pi.len()) + 1000;
        let mut iterations = 0;
        while self.find_entering_arc() {
            self.find_join_node();
            if !self.find_leaving_arc() || !self.delta.is_finite() {
                return Err(Error::InvalidInput("transport problem is unbounded"));
            }
            self.change_flow();
            self.update_tree_structure();
            self.update_potential();
            iterations += 1;
            if iterations > limit {
                return Err(Error::NoConvergence { residual: f64::NAN });
            }
        }
        Ok(())
    }
}

fn residuals(a: &[f64], b: &[f64], plan: &[(usize, usize, f64)]) -> (f64, f64) {
    let mut rows = vec![0.0; a.len()];
    let mut cols = vec![0.0; b.len()];
    for &(i, j, m) in plan {
        rows[i] += m;
        cols[j] += m;
    }
    let r = rows.iter().zip(a).fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs()));
    let c = cols.iter().zip(b).fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs()));
    (r, c)
}

/// Exact `W_q` by the network simplex method.
pub fn wasserstein_exact(a: &WeightedCloud, b: &WeightedCloud, q: u32) -> Result<(f64, Coupling)> {
    check_pair(a, b, q)?;
    let entries = a.len() * b.len();
    if entries > MAX_EXACT_ENTRIES {
        return Err(Error::SizeExceeded { entries });
    }
    let gap = (a.weights.iter().sum::<f64>() - b.weights.iter().sum::<f64>()).abs();
    if gap > 1e-8 {
        return Err(Error::Infeasible { gap });
    }
    let cost = cost_matrix(a, b, q);
    let mut ns = NetworkSimplex::new(&a.weights, &b.weights, cost);
    ns.run()?;
    let n = b.len();
    let mut total = 0.0;
    let mut plan = Vec::new();
    for e in 0..ns.n_arcs {
        let f = ns.flow[e];
        if f > 0.0 {
            total += f * ns.cost[e];
            plan.push((e / n, e % n, f));
        }
    }
    let (row_residual, col_residual) = residuals(&a.weights, &b.weights, &plan);
    let value = total.max(0.0).powf(1.0 / q as f64);
    Ok((value, Coupling { plan, row_residual, col_residual }))
}

/// Marginal residual accepted at the final regularization level.
pub const SINKHORN_TOL: f64 = 1e-6;
/// Largest first marginal for which every level adds Newton steps.
const NEWTON_MAX_POINTS: usize = 512;
/// Newton-polished levels aim this far below the tolerance.
const POLISH_FACTOR: f64 = 1e-3;
/// The final level, and every Newton-polished level, may run up to this many
/// times the per-level iterations while the residual exceeds its target.
pub const FINAL_LEVEL_BUDGET: usize = 20;

/// Geometric annealing of the entropic regularization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub eta_start: f64,
    pub eta_end: f64,
    pub factor: f64,
    pub iterations: usize,
}

impl Default for Schedule {
    fn default() -> Self {
        Self { eta_start: 1.0, eta_end: 1e-3, factor: 0.5, iterations: 500 }
    }
}

impl Schedule {
    fn levels(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut eta = self.eta_start;
        while eta > self.eta_end * (1.0 + 1e-12) {
            out.push(eta);
            eta *= self.factor;
        }
        out.push(self.eta_end);
        out
    }
}

fn logsumexp(vals: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = vals.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + vals.map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Annealed log-domain Sinkhorn; returns the transport cost `<P, C>` of the
/// final plan and the final row-marginal residual.
fn sinkhorn_cost(a: &[f64], b: &[f64], cost: &[f64], schedule: &Schedule) -> (f64, f64) {
    let m = a.len();
    let n = b.len();
    let la: Vec<f64> = a.iter().map(|x| x.ln()).collect();
    let lb: Vec<f64> = b.iter().map(|x| x.ln()).collect();
    let mut f = vec![0.0; m];
    let mut g = vec![0.0; n];
    let levels = schedule.levels();
    let last = levels.len() - 1;
    let mut eta = schedule.eta_start;
    // Small problems converge every level tightly with Newton help; otherwise
    // a block imbalance left at a coarse level freezes once the coupling
    // between blocks underflows at finer levels.
    let polish = m <= NEWTON_MAX_POINTS;
    let target = if polish { SINKHORN_TOL * POLISH_FACTOR } else { SINKHORN_TOL };
    for (l, level) in levels.into_iter().enumerate() {
        eta = level;
        let extend = l == last || polish;
        let budget = if extend { FINAL_LEVEL_BUDGET * schedule.iterations } else { schedule.iterations };
        for it in 0..budget {
            for i in 0..m {
                let row = &cost[i * n..(i + 1) * n];
                f[i] = -eta * logsumexp((0..n).map(|j| (g[j] - row[j]) / eta + lb[j]));
            }
            update_g(cost, &f, &mut g, &la, eta);
            if extend && it + 1 >= schedule.iterations && (it + 1) % 10 == 0 {
                if plan_cost(a, b, cost, &f, &g, &la, &lb, eta).1 <= target {
                    break;
                }
                if polish {
                    newton_polish(a, b, cost, &mut f, &mut g, &la, &lb, eta);
                }
            }
        }
    }
    let (total, r) = plan_cost(a, b, cost, &f, &g, &la, &lb, eta);
    (total, r)
}

/// Annealed Sinkhorn for `OT(a, a)`: the averaged symmetric update keeps
/// `f = g` and converges far faster than alternating updates.
fn sinkhorn_symmetric(a: &[f64], cost: &[f64], schedule: &Schedule) -> (f64, f64) {
    let m = a.len();
    let la: Vec<f64> = a.iter().map(|x| x.ln()).collect();
    let mut f = vec![0.0; m];
    let mut next = vec![0.0; m];
    let levels = schedule.levels();
    let last = levels.len() - 1;
    let mut eta = schedule.eta_start;
    for (l, level) in levels.into_iter().enumerate() {
        eta = level;
        let budget = if l == last { FINAL_LEVEL_BUDGET * schedule.iterations } else { schedule.iterations };
        for it in 0..budget {
            for i in 0..m {
                let row = &cost[i * m..(i + 1) * m];
                next[i] = -eta * logsumexp((0..m).map(|j| (f[j] - row[j]) / eta + la[j]));
            }
            for i in 0..m {
                f[i] = 0.5 * (f[i] + next[i]);
            }
            if l == last && it + 1 >= schedule.iterations && (it + 1) % 10 == 0 {
                if plan_cost(a, a, cost, &f, &f, &la, &la, eta).1 <= SINKHORN_TOL {
                    break;
                }
            }
        }
    }
    plan_cost(a, a, cost, &f, &f, &la, &la, eta)
}

fn update_g(cost: &[f64], f: &[f64], g: &mut [f64], la: &[f64], eta: f64) {
    let n = g.len();
    for j in 0..n {
        g[j] = -eta * logsumexp((0..f.len()).map(|i| (f[i] - cost[i * n + j]) / eta + la[i]));
    }
}

/// Gaussian elimination with partial pivoting on a dense row-major system.
fn solve_dense(mut mat: Vec<f64>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &k| mat[i * n + c].abs().total_cmp(&mat[k * n + c].abs()))?;
        if !(mat[p * n + c].abs() > 0.0) {
            return None;
        }
        if p != c {
            for k in 0..n {
                mat.swap(p * n + k, c * n + k);
            }
            rhs.swap(p, c);
        }
        for i in c + 1..n {
            let factor = mat[i * n + c] / mat[c * n + c];
            if factor != 0.0 {
                for k in c..n {
                    mat[i * n + k] -= factor * mat[c * n + k];
                }
                rhs[i] -= factor * rhs[c];
            }
        }
    }
    for c in (0..n).rev() {
        let mut acc = rhs[c];
        for k in c + 1..n {
            acc -= mat[c * n + k] * rhs[k];
        }
        rhs[c] = acc / mat[c * n + c];
    }
    rhs.iter().all(|x| x.is_finite()).then_some(rhs)
}

/// One safeguarded Newton step on `f` with `g` eliminated through its exact
/// update; resolves the slow modes of alternating updates on nearly
/// block-diagonal plans. Leaves the potentials unchanged unless the row
/// residual decreases.
#[allow(clippy::too_many_arguments)]
fn newton_polish(a: &[f64], b: &[f64], cost: &[f64], f: &mut [f64], g: &mut [f64], la: &[f64], lb: &[f64], eta: f64) {
    let m = a.len();
    let n = b.len();
    if m < 2 {
        return;
    }
    let mut p = vec![0.0; m * n];
    let mut rows = vec![0.0; m];
    let mut cols = vec![0.0; n];
    for i in 0..m {
        for j in 0..n {
            let v = ((f[i] + g[j] - cost[i * n + j]) / eta + la[i] + lb[j]).exp();
            p[i * n + j] = v;
            rows[i] += v;
            cols[j] += v;
        }
    }
    let current = plan_cost(a, b, cost, f, g, la, lb, eta).1;
    // Reduced Hessian of the dual in f, with f[0] pinned to remove the
    // constant null direction.
    let k = m - 1;
    let mut mat = vec![0.0; k * k];
    for r in 1..m {
        for c in r..m {
            let mut acc = 0.0;
            for j in 0..n {
                if cols[j] > 0.0 {
                    acc += p[r * n + j] * p[c * n + j] / cols[j];
                }
            }
            let v = if r == c { rows[r] - acc } else { -acc };
            mat[(r - 1) * k + (c - 1)] = v;
            mat[(c - 1) * k + (r - 1)] = v;
        }
    }
    let rhs: Vec<f64> = (1..m).map(|i| eta * (a[i] - rows[i])).collect();
    let Some(step) = solve_dense(mat, rhs) else { return };
    let mut trial_f = f.to_vec();
    let mut trial_g = g.to_vec();
    let mut scale = 1.0;
    for _ in 0..30 {
        trial_f[0] = f[0];
        for i in 1..m {
            trial_f[i] = f[i] + scale * step[i - 1];
        }
        update_g(cost, &trial_f, &mut trial_g, la, eta);
        let r = plan_cost(a, b, cost, &trial_f, &trial_g, la, lb, eta).1;
        if r < current {
            f.copy_from_slice(&trial_f);
            g.copy_from_slice(&trial_g);
            return;
        }
        scale *= 0.5;
    }
}

#[allow(clippy::too_many_arguments)]
fn plan_cost(a: &[f64], b: &[f64], cost: &[f64], f: &[f64], g: &[f64], la: &[f64], lb: &[f64], eta: f64) -> (f64, f64) {
    let n = b.len();
    let mut total = 0.0;
    let mut residual: f64 = 0.0;
    for i in 0..a.len() {
        let mut row_sum = 0.0;
        for j in 0..n {
            let p = ((f[i] + g[j] - cost[i * n + j]) / eta + la[i] + lb[j]).exp();
            row_sum += p;
            total += p * cost[i * n + j];
        }
        residual = residual.max((row_sum - a[i]).abs());
    }
    (total, residual)
}

/// Debiased entropic `W_q`: `S = OT(a,b) - (OT(a,a) + OT(b,b)) / 2`, then `S^(1/q)`.
pub fn wasserstein_entropic(a: &WeightedCloud, b: &WeightedCloud, q: u32, schedule: &Schedule) -> Result<f64> {
    check_pair(a, b, q)?;
    let (ab, r1) = sinkhorn_cost(&a.weights, &b.weights, &cost_matrix(a, b, q), schedule);
    let (aa, r2) = sinkhorn_symmetric(&a.weights, &cost_matrix(a, a, q), schedule);
    let (bb, r3) = sinkhorn_symmetric(&b.weights, &cost_matrix(b, b, q), schedule);
    let residual = r1.max(r2).max(r3);
    if !(residual <= SINKHORN_TOL) {
        return Err(Error::NoConvergence { residual });
    }
    let s = ab - 0.5 * (aa + bb);
    Ok(s.max(0.0).powf(1.0 / q as f64))
}

/// Closed-form `W_q` on the line from quantiles at common uniform levels.
pub fn wasserstein_1d(a_quantiles: &[f64], b_quantiles: &[f64], q: u32) -> Result<f64> {
    if a_quantiles.len() != b_quantiles.len() || a_quantiles.is_empty() {
        return Err(Error::InvalidInput("quantile sequences must have equal nonzero length"));
    }
    let dl = 1.0 / a_quantiles.len() as f64;
    let s: f64 = a_quantiles
        .iter()
        .zip(b_quantiles)
        .map(|(x, y)| (x - y).abs().powi(q as i32) * dl)
        .sum();
    Ok(s.powf(1.0 / q as f64))
}

/// One point per grid cell with weight `max(f, 0) dx dv`, normalized; points
/// whose normalized weight is below `mass_floor` are dropped before the final
/// renormalization.
pub fn cloud_from_field(f: &DistField, mass_floor: f64) -> Result<WeightedCloud> {
    let g = f.grid;
    let cell = g.dx() * g.dv();
    let total: f64 = f.values.iter().map(|v| v.max(0.0) * cell).sum();
    if !(total > 0.0) {
        return Err(Error::EmptyCloud);
    }
    let mut coords = Vec::new();
    let mut weights = Vec::new();
    for i in 0..g.nx {
        for j in 0..g.nv {
            let w = f.at(i, j).max(0.0) * cell / total;
            if w > 0.0 && w >= mass_floor {
                coords.push(g.x(i));
                coords.push(g.v(j));
                weights.push(w);
            }
        }
    }
    if weights.is_empty() {
        return Err(Error::EmptyCloud);
    }
    WeightedCloud::normalized(1, 1, &coords, &weights, g.length)
}
