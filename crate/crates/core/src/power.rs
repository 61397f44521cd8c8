//! Power allocation over the selected wavenumber streams.
//!
//! Stream `k` sees the signal `a_k p_k` against the interference
//! `I_k(p) = Σ_{m≠k} b_{k,m} p_m` plus noise `σ²`, and the sum rate
//!
//! ```text
//! C(p) = Σ_k log2(1 + a_k p_k / (I_k(p) + σ²))
//! ```
//!
//! is maximized over `{p ≥ 0, Σ p ≤ P_T}`. The rate is a difference of two
//! concave functions of `p`:
//!
//! ```text
//! C(p) = Σ_k log2(a_k p_k + I_k(p) + σ²) − Σ_k log2(I_k(p) + σ²)
//! ```
//!
//! [`allocate_dc`] linearizes the subtracted term at the current iterate and
//! maximizes the concave surrogate, which never decreases the true rate.
//! Water-filling, iterative water-filling and a particle swarm are provided
//! as baselines.
//!
//! Internally every solver works in normalized units (`σ² = 1`,
//! `P_T = 1`), which leaves the rate unchanged and keeps the high-SNR
//! regime well scaled.

use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::selection::StreamAssignment;

/// Direct and cross gains of the selected streams.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    direct_gains: Vec<f64>,
    cross_gains: DMatrix<f64>,
    noise_power_w: f64,
    budget_w: f64,
}

impl CouplingMatrix {
    pub fn new(direct_gains: Vec<f64>, cross_gains: DMatrix<f64>, noise_power_w: f64, budget_w: f64) -> Result<Self> {
        let k = direct_gains.len();
        if cross_gains.shape() != (k, k) {
            return Err(Error::ShapeMismatch {
                expected: (k, k),
                got: cross_gains.shape(),
            });
        }
        let ok = |x: f64| x.is_finite() && x >= 0.0;
        if !direct_gains.iter().copied().all(ok) {
            return Err(Error::NonFinite("direct gains"));
        }
        if !cross_gains.iter().copied().all(ok) {
            return Err(Error::NonFinite("cross gains"));
        }
        if (0..k).any(|i| cross_gains[(i, i)] != 0.0) {
            return Err(Error::invalid("cross_gains", "diagonal must be zero"));
        }
        if !(noise_power_w.is_finite() && noise_power_w > 0.0) {
            return Err(Error::invalid("noise_power_w", "must be positive"));
        }
        if !(budget_w.is_finite() && budget_w > 0.0) {
            return Err(Error::invalid("budget_w", "must be positive"));
        }
        Ok(Self {
            direct_gains,
            cross_gains,
            noise_power_w,
            budget_w,
        })
    }

    /// Builds `a_k = G[r_k, c_k]` and `b_{k,m} = G[r_k, c_m]` from the
    /// `|H_a|²` gain matrix.
    pub fn from_assignment(
        gains: &DMatrix<f64>,
        assign: &StreamAssignment,
        noise_power_w: f64,
        budget_w: f64,
    ) -> Result<Self> {
        let (rows, cols) = gains.shape();
        for &(r, c) in &assign.pairs {
            if r >= rows || c >= cols {
                return Err(Error::IndexOutOfRange {
                    row: r,
                    col: c,
                    rows,
                    cols,
                });
            }
        }
        let k = assign.len();
        let direct = assign.pairs.iter().map(|&p| gains[p]).collect();
        let cross = DMatrix::from_fn(k, k, |i, j| {
            if i == j {
                0.0
            } else {
                gains[(assign.pairs[i].0, assign.pairs[j].1)]
            }
        });
        Self::new(direct, cross, noise_power_w, budget_w)
    }

    pub fn num_streams(&self) -> usize {
        self.direct_gains.len()
    }

    pub fn direct_gains(&self) -> &[f64] {
        &self.direct_gains
    }

    pub fn cross_gains(&self) -> &DMatrix<f64> {
        &self.cross_gains
    }

    pub fn noise_power_w(&self) -> f64 {
        self.noise_power_w
    }

    pub fn budget_w(&self) -> f64 {
        self.budget_w
    }

    /// `I_k(p) = Σ_{m≠k} b_{k,m} p_m` for every stream.
    pub fn interference(&self, p: &[f64]) -> Vec<f64> {
        mat_vec(&self.cross_gains, p)
    }

    /// Per-stream SINR at allocation `p`.
    pub fn sinr(&self, p: &[f64]) -> Vec<f64> {
        let interference = self.interference(p);
        self.direct_gains
            .iter()
            .zip(p)
            .zip(&interference)
            .map(|((a, p), i)| a * p / (i + self.noise_power_w))
            .collect()
    }

    fn normalized(&self) -> Normalized {
        let s = self.budget_w / self.noise_power_w;
        Normalized {
            a: self.direct_gains.iter().map(|a| a * s).collect(),
            b: &self.cross_gains * s,
        }
    }
}

fn mat_vec(m: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    let (rows, cols) = m.shape();
    let mut out = vec![0.0; rows];
    // Column-major storage: accumulate column by column.
    for (j, &xj) in x.iter().enumerate().take(cols) {
        if xj == 0.0 {
            continue;
        }
        for (o, &mij) in out.iter_mut().zip(m.column(j).iter()) {
            *o += mij * xj;
        }
    }
    out
}

fn mat_t_vec(m: &DMatrix<f64>, y: &[f64]) -> Vec<f64> {
    m.column_iter()
        .map(|col| col.iter().zip(y).map(|(a, b)| a * b).sum())
        .collect()
}

/// `Σ_k log2(1 + a_k p_k / (I_k(p) + σ²))`.
pub fn capacity_objective(coupling: &CouplingMatrix, p: &[f64]) -> f64 {
    coupling.sinr(p).iter().map(|s| s.ln_1p()).sum::<f64>() / std::f64::consts::LN_2
}

/// Classical water-filling: `p_k = max(0, μ − noise / gains_k)` with the
/// level `μ` set so the budget is spent exactly. Streams with zero gain get
/// nothing; if every gain is zero the budget is split evenly.
pub fn waterfill(gains: &[f64], budget: f64, noise: f64) -> Vec<f64> {
    let mut order: Vec<usize> = (0..gains.len()).filter(|&i| gains[i] > 0.0).collect();
    if order.is_empty() {
        let n = gains.len().max(1) as f64;
        return vec![budget / n; gains.len()];
    }
    order.sort_by(|&a, &b| gains[b].total_cmp(&gains[a]).then(a.cmp(&b)));
    let floors: Vec<f64> = order.iter().map(|&i| noise / gains[i]).collect();
    let mut prefix = 0.0;
    let mut level = 0.0;
    let mut active = 0;
    for (n, floor) in floors.iter().enumerate() {
        let candidate = (budget + prefix + floor) / (n + 1) as f64;
        if candidate <= *floor {
            break;
        }
        prefix += floor;
        level = candidate;
        active = n + 1;
    }
    let mut p = vec![0.0; gains.len()];
    for (&i, floor) in order.iter().zip(&floors).take(active) {
        p[i] = (level - floor).max(0.0);
    }
    p
}

/// Euclidean projection onto `{x ≥ 0, Σ x ≤ total}`.
pub fn project_capped_simplex(v: &[f64], total: f64) -> Vec<f64> {
    let clipped: Vec<f64> = v.iter().map(|x| x.max(0.0)).collect();
    if clipped.iter().sum::<f64>() <= total {
        return clipped;
    }
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cum += uj;
        let t = (cum - total) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DcOptions {
    /// Stop once the rate improves by less than this fraction.
    pub tol_rel: f64,
    pub max_iter: usize,
    /// Equal power, water-filling, then random simplex points. Three
    /// structured warm starts (the IWF point and two greedy active sets)
    /// always run in addition.
    pub restarts: usize,
    /// Projected-gradient norm at which a surrogate subproblem is solved.
    pub inner_tol: f64,
    /// Inner steps per linearization. Any surrogate improvement already
    /// lifts the true rate, so a loose cap only trades inner for outer work.
    pub inner_max_iter: usize,
}

impl Default for DcOptions {
    fn default() -> Self {
        Self {
            tol_rel: 1e-8,
            max_iter: 500,
            restarts: 8,
            inner_tol: 1e-10,
            inner_max_iter: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IwfOptions {
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for IwfOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_sweeps: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsoOptions {
    pub particles: usize,
    pub iterations: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
}

impl Default for PsoOptions {
    fn default() -> Self {
        Self {
            particles: 50,
            iterations: 300,
            inertia: 0.72,
            cognitive: 1.49,
            social: 1.49,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub dc: DcOptions,
    pub iwf: IwfOptions,
    pub pso: PsoOptions,
    pub seed: u64,
    /// Solvers give up with [`Error::Timeout`] once this instant passes.
    #[serde(skip)]
    pub deadline: Option<Instant>,
}

impl SolverOptions {
    fn check_deadline(&self) -> Result<()> {
        match self.deadline {
            Some(d) if Instant::now() > d => Err(Error::Timeout),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerAllocation {
    pub powers_w: Vec<f64>,
    /// Interference actually seen by each stream, `Σ_{m≠k} b_{k,m} p_m`.
    pub slacks: Vec<f64>,
    pub achieved_capacity_bits: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Rate after each accepted iteration (DC only; empty otherwise).
    pub objective_trace: Vec<f64>,
}

impl PowerAllocation {
    fn from_normalized(
        coupling: &CouplingMatrix,
        x: &[f64],
        iterations: usize,
        converged: bool,
        trace: Vec<f64>,
    ) -> Self {
        let powers_w: Vec<f64> = x.iter().map(|v| v * coupling.budget_w).collect();
        Self {
            slacks: coupling.interference(&powers_w),
            achieved_capacity_bits: capacity_objective(coupling, &powers_w),
            powers_w,
            iterations,
            converged,
            objective_trace: trace,
        }
    }

    /// Rate of the slack-variable form `Σ log2(1 + a_k p_k / (u_k + σ²))`.
    pub fn slack_form_objective(&self, coupling: &CouplingMatrix) -> f64 {
        coupling
            .direct_gains
            .iter()
            .zip(&self.powers_w)
            .zip(&self.slacks)
            .map(|((a, p), u)| (a * p / (u + coupling.noise_power_w)).ln_1p())
            .sum::<f64>()
            / std::f64::consts::LN_2
    }

    pub fn active_streams(&self) -> usize {
        self.powers_w.iter().filter(|p| **p > 0.0).count()
    }
}

/// Problem in normalized units: noise 1, budget 1.
struct Normalized {
    a: Vec<f64>,
    b: DMatrix<f64>,
}

impl Normalized {
    fn k(&self) -> usize {
        self.a.len()
    }

    fn rate(&self, x: &[f64]) -> f64 {
        let i = mat_vec(&self.b, x);
        self.a
            .iter()
            .zip(x)
            .zip(&i)
            .map(|((a, x), i)| (a * x / (i + 1.0)).ln_1p())
            .sum::<f64>()
            / std::f64::consts::LN_2
    }

    /// Concave surrogate (in nats, up to a constant) and its gradient.
    ///
    /// `S(q) = Σ ln(a_k q_k + I_k(q) + 1) − Σ w_k I_k(q)` where `w` is the
    /// gradient of `Σ ln(I_k + 1)` at the linearization point.
    fn surrogate(&self, w: &[f64], q: &[f64]) -> (f64, Vec<f64>) {
        let i = mat_vec(&self.b, q);
        let mut value = 0.0;
        let mut inv_t = vec![0.0; self.k()];
        for k in 0..self.k() {
            let t = self.a[k] * q[k] + i[k] + 1.0;
            value += t.ln() - w[k] * i[k];
            inv_t[k] = 1.0 / t;
        }
        let diff: Vec<f64> = inv_t.iter().zip(w).map(|(it, w)| it - w).collect();
        let bt = mat_t_vec(&self.b, &diff);
        let grad = (0..self.k()).map(|k| self.a[k] * inv_t[k] + bt[k]).collect();
        (value, grad)
    }

    fn surrogate_value(&self, w: &[f64], q: &[f64]) -> f64 {
        let i = mat_vec(&self.b, q);
        (0..self.k())
            .map(|k| (self.a[k] * q[k] + i[k] + 1.0).ln() - w[k] * i[k])
            .sum()
    }
}

/// One DC ascent run from `start` (normalized units).
struct DcRun {
    x: Vec<f64>,
    trace: Vec<f64>,
    iterations: usize,
    converged: bool,
}

fn dc_ascent(prob: &Normalized, start: Vec<f64>, opts: &SolverOptions) -> Result<DcRun> {
    let dc = &opts.dc;
    let mut x = project_capped_simplex(&start, 1.0);
    let mut f = prob.rate(&x);
    let mut trace = vec![f];
    let mut converged = false;
    let mut iterations = 0;
    let mut push = 1.0;
    while iterations < dc.max_iter {
        opts.check_deadline()?;
        iterations += 1;
        let w: Vec<f64> = mat_vec(&prob.b, &x).iter().map(|i| 1.0 / (i + 1.0)).collect();
        let mut q = maximize_surrogate(prob, &w, &x, dc);
        let mut fq = prob.rate(&q);
        // Extrapolate along the last move; kept only if the rate improves.
        let z = project_capped_simplex(
            &add_scaled(&q, push, &q.iter().zip(&x).map(|(a, b)| a - b).collect::<Vec<_>>()),
            1.0,
        );
        let fz = prob.rate(&z);
        if fz > fq {
            q = z;
            fq = fz;
            push = (push * 2.0).min(1e6);
        } else {
            push = 1.0;
        }
        if fq < f {
            // Rounding noise only; the surrogate bound guarantees ascent.
            converged = true;
            break;
        }
        let gain = fq - f;
        x = q;
        f = fq;
        trace.push(f);
        if gain <= dc.tol_rel * f.abs() {
            converged = true;
            break;
        }
    }
    Ok(DcRun {
        x,
        trace,
        iterations,
        converged,
    })
}

/// Spectral projected-gradient ascent on the concave surrogate.
///
/// The search direction is `P(q + α g) − q` with `α` the Barzilai-Borwein
/// length (1 on the first step), and the Armijo backtracking runs along that
/// segment so each trial costs one evaluation and no projection. The gains
/// span many decades, which makes fixed-length projected steps backtrack
/// dozens of times per iteration.
fn maximize_surrogate(prob: &Normalized, w: &[f64], start: &[f64], dc: &DcOptions) -> Vec<f64> {
    const ARMIJO: f64 = 1e-4;
    let mut q = start.to_vec();
    let (mut s, mut g) = prob.surrogate(w, &q);
    let mut alpha = 1.0;
    for _ in 0..dc.inner_max_iter {
        let full = project_capped_simplex(&add_scaled(&q, 1.0, &g), 1.0);
        if max_abs_diff(&full, &q) <= dc.inner_tol {
            break;
        }
        let target = project_capped_simplex(&add_scaled(&q, alpha, &g), 1.0);
        let d: Vec<f64> = target.iter().zip(&q).map(|(t, q)| t - q).collect();
        let slope: f64 = g.iter().zip(&d).map(|(g, d)| g * d).sum();
        if slope <= 0.0 {
            break;
        }
        let mut lambda = 1.0;
        let mut accepted = None;
        while lambda > 1e-20 {
            let cand = add_scaled(&q, lambda, &d);
            let sc = prob.surrogate_value(w, &cand);
            if sc >= s + ARMIJO * lambda * slope {
                accepted = Some(cand);
                break;
            }
            lambda *= 0.5;
        }
        let Some(cand) = accepted else { break };
        let (sn, gn) = prob.surrogate(w, &cand);
        let mut ss = 0.0;
        let mut sy = 0.0;
        for k in 0..q.len() {
            let dq = cand[k] - q[k];
            ss += dq * dq;
            sy -= dq * (gn[k] - g[k]);
        }
        alpha = if sy > 0.0 { (ss / sy).clamp(1e-30, 1e30) } else { 1e30 };
        q = cand;
        s = sn;
        g = gn;
    }
    q
}

fn add_scaled(x: &[f64], step: f64, g: &[f64]) -> Vec<f64> {
    x.iter().zip(g).map(|(x, g)| x + step * g).collect()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

/// Uniform point on `{x ≥ 0, Σ x = 1}`.
fn random_simplex_point<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<f64> {
    let e: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Uniform point in `{x ≥ 0, Σ x ≤ 1}`.
fn random_capped_point<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<f64> {
    let mut p = random_simplex_point(k + 1, rng);
    p.truncate(k);
    p
}

fn dc_starts(prob: &Normalized, opts: &SolverOptions) -> Vec<Vec<f64>> {
    let k = prob.k();
    let mut starts = Vec::with_capacity(opts.dc.restarts);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for r in 0..opts.dc.restarts.max(1) {
        starts.push(match r {
            0 => vec![1.0 / k as f64; k],
            1 => waterfill(&prob.a, 1.0, 1.0),
            _ => random_simplex_point(k, &mut rng),
        });
    }
    starts
}

/// Best two-stream split found on a grid of budget shares.
fn best_pair_start(prob: &Normalized) -> Vec<f64> {
    const STEPS: usize = 64;
    let k = prob.k();
    let rate2 = |i: usize, j: usize, t: f64| {
        let si = prob.a[i] * t / (prob.b[(i, j)] * (1.0 - t) + 1.0);
        let sj = prob.a[j] * (1.0 - t) / (prob.b[(j, i)] * t + 1.0);
        si.ln_1p() + sj.ln_1p()
    };
    let mut best = (f64::NEG_INFINITY, 0, 1, 0.5);
    for i in 0..k {
        for j in i + 1..k {
            for s in 1..STEPS {
                let t = s as f64 / STEPS as f64;
                let r = rate2(i, j, t);
                if r > best.0 {
                    best = (r, i, j, t);
                }
            }
        }
    }
    let mut x = vec![0.0; k];
    x[best.1] = best.3;
    x[best.2] = 1.0 - best.3;
    x
}

/// Grows the active set of `x` one stream at a time. Each candidate is
/// blended in at a few budget shares and the best blend is kept while the
/// rate keeps improving. At high SNR the optimum often uses only a few
/// weakly coupled streams, which the interior starts rarely reach.
fn greedy_grow(prob: &Normalized, mut x: Vec<f64>) -> Vec<f64> {
    const SHARES: [f64; 8] = [0.5, 0.3, 0.2, 0.1, 0.05, 0.02, 0.01, 0.001];
    let k = prob.k();
    let mut rate = prob.rate(&x);
    loop {
        let mut pick: Option<(f64, Vec<f64>)> = None;
        for cand in (0..k).filter(|&c| x[c] == 0.0) {
            let shares: &[f64] = if rate == 0.0 { &[1.0] } else { &SHARES };
            for &t in shares {
                let mut y: Vec<f64> = x.iter().map(|v| v * (1.0 - t)).collect();
                y[cand] = t;
                let r = prob.rate(&y);
                if pick.as_ref().is_none_or(|(br, _)| r > *br) {
                    pick = Some((r, y));
                }
            }
        }
        match pick {
            Some((r, y)) if r > rate => {
                rate = r;
                x = y;
            }
            _ => break,
        }
    }
    x
}

fn trivial(coupling: &CouplingMatrix) -> Option<PowerAllocation> {
    match coupling.num_streams() {
        0 => Some(PowerAllocation::from_normalized(coupling, &[], 0, true, Vec::new())),
        // A single stream's rate is increasing in its power.
        1 => Some(PowerAllocation::from_normalized(coupling, &[1.0], 0, true, Vec::new())),
        _ => None,
    }
}

/// Difference-of-concave successive approximation with restarts.
pub fn allocate_dc(coupling: &CouplingMatrix, opts: &SolverOptions) -> Result<PowerAllocation> {
    if let Some(a) = trivial(coupling) {
        return Ok(a);
    }
    let prob = coupling.normalized();
    let mut starts = dc_starts(&prob, opts);
    starts.push(iwf_point(&prob, opts)?.1);
    starts.push(greedy_grow(&prob, vec![0.0; prob.k()]));
    starts.push(greedy_grow(&prob, best_pair_start(&prob)));
    let runs: Vec<Result<DcRun>> = starts.into_par_iter().map(|s| dc_ascent(&prob, s, opts)).collect();
    let mut best: Option<DcRun> = None;
    for run in runs {
        let run = run?;
        let better = match &best {
            None => true,
            Some(b) => run.trace.last() > b.trace.last(),
        };
        if better {
            best = Some(run);
        }
    }
    let best = best.expect("at least one restart");
    Ok(PowerAllocation::from_normalized(
        coupling,
        &best.x,
        best.iterations,
        best.converged,
        best.trace,
    ))
}

/// Runs a single DC ascent from `start_w` (watts) and returns the full
/// rate trace. Exposed for monotonicity checks.
pub fn dc_trace_from(coupling: &CouplingMatrix, start_w: &[f64], opts: &SolverOptions) -> Result<PowerAllocation> {
    let prob = coupling.normalized();
    let start: Vec<f64> = start_w.iter().map(|p| p / coupling.budget_w).collect();
    let run = dc_ascent(&prob, start, opts)?;
    Ok(PowerAllocation::from_normalized(
        coupling,
        &run.x,
        run.iterations,
        run.converged,
        run.trace,
    ))
}

/// Equal split of the budget.
pub fn allocate_equal(coupling: &CouplingMatrix) -> PowerAllocation {
    let k = coupling.num_streams();
    let x = vec![1.0 / k.max(1) as f64; k];
    PowerAllocation::from_normalized(coupling, &x, 0, true, Vec::new())
}

/// Water-filling on the direct gains, ignoring the cross terms when
/// allocating (the reported rate still counts them).
pub fn allocate_waterfill(coupling: &CouplingMatrix) -> PowerAllocation {
    let p = waterfill(&coupling.direct_gains, coupling.budget_w, coupling.noise_power_w);
    let x: Vec<f64> = p.iter().map(|p| p / coupling.budget_w).collect();
    PowerAllocation::from_normalized(coupling, &x, 1, true, Vec::new())
}

/// Iterative water-filling: each sweep freezes the current interference as
/// extra noise and water-fills the whole budget against it.
///
/// Returns the best iterate seen; `converged` is false when the sweep cap
/// is reached first.
pub fn allocate_iwf(coupling: &CouplingMatrix, opts: &SolverOptions) -> Result<PowerAllocation> {
    if let Some(a) = trivial(coupling) {
        return Ok(a);
    }
    let (sweeps, x, converged) = iwf_point(&coupling.normalized(), opts)?;
    Ok(PowerAllocation::from_normalized(
        coupling,
        &x,
        sweeps,
        converged,
        Vec::new(),
    ))
}

fn iwf_point(prob: &Normalized, opts: &SolverOptions) -> Result<(usize, Vec<f64>, bool)> {
    let mut x = vec![0.0; prob.k()];
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < opts.iwf.max_sweeps {
        opts.check_deadline()?;
        sweeps += 1;
        let i = mat_vec(&prob.b, &x);
        let effective: Vec<f64> = prob.a.iter().zip(&i).map(|(a, i)| a / (i + 1.0)).collect();
        let mut next = waterfill(&effective, 1.0, 1.0);
        let total: f64 = next.iter().sum();
        if total > 0.0 {
            next.iter_mut().for_each(|v| *v /= total);
        }
        let f = prob.rate(&next);
        if best.as_ref().is_none_or(|(bf, _)| f > *bf) {
            best = Some((f, next.clone()));
        }
        let change = max_abs_diff(&next, &x);
        x = next;
        if change < opts.iwf.tol {
            converged = true;
            break;
        }
    }
    let (_, bx) = best.expect("at least one sweep");
    Ok((sweeps, bx, converged))
}

/// Global-best particle swarm over `{p ≥ 0, Σ p ≤ P_T}`.
pub fn allocate_pso(coupling: &CouplingMatrix, opts: &SolverOptions) -> Result<PowerAllocation> {
    if let Some(a) = trivial(coupling) {
        return Ok(a);
    }
    let prob = coupling.normalized();
    let cfg = &opts.pso;
    let k = prob.k();
    let s = cfg.particles.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut pos: Vec<Vec<f64>> = (0..s).map(|_| random_capped_point(k, &mut rng)).collect();
    let mut vel: Vec<Vec<f64>> = (0..s)
        .map(|_| (0..k).map(|_| rng.random_range(-0.1..0.1)).collect())
        .collect();
    let mut best_pos = pos.clone();
    let mut best_val: Vec<f64> = pos.iter().map(|p| prob.rate(p)).collect();
    let mut g = argmax(&best_val);
    let mut g_pos = best_pos[g].clone();
    let mut g_val = best_val[g];
    for _ in 0..cfg.iterations {
        opts.check_deadline()?;
        for i in 0..s {
            for d in 0..k {
                let r1: f64 = rng.random();
                let r2: f64 = rng.random();
                let v = cfg.inertia * vel[i][d]
                    + cfg.cognitive * r1 * (best_pos[i][d] - pos[i][d])
                    + cfg.social * r2 * (g_pos[d] - pos[i][d]);
                vel[i][d] = v.clamp(-1.0, 1.0);
            }
            let moved = add_scaled(&pos[i], 1.0, &vel[i]);
            pos[i] = project_capped_simplex(&moved, 1.0);
            let f = prob.rate(&pos[i]);
            if f > best_val[i] {
                best_val[i] = f;
                best_pos[i] = pos[i].clone();
            }
        }
        g = argmax(&best_val);
        if best_val[g] > g_val {
            g_val = best_val[g];
            g_pos = best_pos[g].clone();
        }
    }
    Ok(PowerAllocation::from_normalized(
        coupling,
        &g_pos,
        cfg.iterations,
        true,
        Vec::new(),
    ))
}

/// First index of the maximum.
fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Wraps caller-chosen powers (watts) with their slacks and rate.
pub fn allocation_from_powers(coupling: &CouplingMatrix, powers_w: &[f64]) -> PowerAllocation {
    let x: Vec<f64> = powers_w.iter().map(|p| p / coupling.budget_w).collect();
    PowerAllocation::from_normalized(coupling, &x, 0, true, Vec::new())
}
