//! Penalty method for the surface-coefficient block.
//!
//! The composite gain of user `k` is a quadratic form of the coefficient
//! vector of its side, so the block is lifted: the vector `v_hat = [v; 1]`
//! becomes the Hermitian PSD matrix `V = v_hat v_hat^H` with gains turning
//! into the linear functionals `tr(V H_k)`. Feasible lifted pairs satisfy
//! per-element amplitude coupling on the diagonals, a unit corner, and PSD;
//! the lost rank-one structure is restored by penalizing
//! `tr(V) - lambda_max(V)` (zero exactly on rank-one PSD matrices) and
//! linearizing `lambda_max` at the previous iterate, which keeps every
//! iterate a convex feasibility problem and the true penalized objective
//! non-increasing.
//!
//! Each convex iterate is solved by bisection on the penalized epigraph value
//! with a max-min-slack projected supergradient probe: all constraints are
//! expressed as concave slacks, the probe maximizes the worst one until it
//! turns nonnegative (feasible, keep as witness) or stalls (infeasible).
//! Projection onto the feasible set alternates an exact affine step
//! (diagonals, corner) with a PSD eigenvalue clip.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::linalg::{hermitianize, psd_project, quad_form, top_eigenpair, trace_re};
#[cfg(test)]
use crate::linalg::min_eigenvalue;
use crate::perf::{StarConfig, LN_2, TWO_PI};
use crate::scenario::{ChannelRealization, Side};

/// Lifted Hermitian PSD form of a surface configuration, one matrix per mode.
#[derive(Clone, Debug)]
pub struct LiftedCoeff {
    pub v_r: DMatrix<Complex64>,
    pub v_t: DMatrix<Complex64>,
}

/// How the per-element amplitudes are constrained during optimization.
#[derive(Clone, Debug)]
pub enum AmplitudeCoupling {
    /// `gamma_r + gamma_t = 1` per element (both matrices free).
    EnergySplit,
    /// Diagonals pinned to fixed amplitude profiles; phases stay free.
    /// A side whose profile is all zeros is frozen entirely.
    Pinned { gamma_r: Vec<f64>, gamma_t: Vec<f64> },
}

impl AmplitudeCoupling {
    /// Whether the given side's matrix is optimized at all.
    pub fn active(&self, side: Side) -> bool {
        match self {
            AmplitudeCoupling::EnergySplit => true,
            AmplitudeCoupling::Pinned { gamma_r, gamma_t } => match side {
                Side::Reflection => gamma_r.iter().any(|g| *g > 0.0),
                Side::Transmission => gamma_t.iter().any(|g| *g > 0.0),
            },
        }
    }
}

/// Rate model used inside the coefficient block, with all other variable
/// blocks frozen.
#[derive(Clone, Debug)]
pub enum RateCoupling {
    /// SDMA surrogate at fixed powers and auxiliaries.
    Surrogate { p: Vec<f64>, y: Vec<f64> },
    /// FDMA rates at fixed powers and bandwidth fractions (no interference).
    Orthogonal { p: Vec<f64>, b: Vec<f64> },
}

/// Inputs of one coefficient-block solve: channels plus the per-user latency
/// prefixes `A_k` (local + edge time), bit loads `beta d_k^2`, and minimal
/// rates keeping the transmit-energy budget (`load_k p_k / headroom_k`; zero
/// disables the floor).
#[derive(Clone, Debug)]
pub struct StarProblem<'a> {
    pub ch: &'a ChannelRealization,
    pub bandwidth: f64,
    pub noise_psd: f64,
    pub prefix: Vec<f64>,
    pub load: Vec<f64>,
    pub rate_floor: Vec<f64>,
    pub coupling: RateCoupling,
}

/// First-order minorant of `lambda_max` at a reference matrix:
/// `L(V) = lambda_max(V0) + u^H (V - V0) u <= lambda_max(V)` for Hermitian `V`,
/// with equality at `V0`.
#[derive(Clone, Debug)]
pub struct LambdaMaxLin {
    /// Unit top eigenvector of the reference matrix.
    pub u: DVector<Complex64>,
    /// `lambda_max(V0) - u^H V0 u` (zero up to rounding).
    pub constant: f64,
    /// `lambda_max(V0)`.
    pub value_at_prev: f64,
    /// Top two eigenvalues within 1e-12 of each other; the first eigenvector
    /// in the solver's deterministic order is used.
    pub degenerate: bool,
}

impl LambdaMaxLin {
    pub fn eval(&self, v: &DMatrix<Complex64>) -> f64 {
        self.constant + quad_form(v, &self.u)
    }
}

/// Objective trace of one constant-penalty stage.
#[derive(Clone, Debug)]
pub struct PenaltyStage {
    pub nu: f64,
    /// True penalized objective per iterate (non-increasing within a stage).
    pub objective: Vec<f64>,
}

/// Diagnostics of a full penalty-method run.
#[derive(Clone, Debug)]
pub struct PenaltyState {
    pub stages: Vec<PenaltyStage>,
    /// `tr - lambda_max` of the final reflection/transmission matrices.
    pub residual_r: f64,
    pub residual_t: f64,
    pub nu_final: f64,
    /// Total convex iterates across all stages.
    pub iterations: usize,
    /// Total projected-supergradient steps (deterministic work counter).
    pub work: u64,
}

#[derive(Debug, Error)]
pub enum StarError {
    #[error("coefficient block infeasible at the incoming objective (worst user {worst_user:?})")]
    Infeasible { worst_user: Option<usize> },
    #[error("rank-one residuals ({residual_r:.3e}, {residual_t:.3e}) still exceed the bound at penalty factor {nu:.3e}")]
    PenaltyStall {
        residual_r: f64,
        residual_t: f64,
        nu: f64,
        state: PenaltyState,
    },
    #[error("matrix not close enough to rank one: residual {residual:.3e} > {bound:.3e}")]
    RankTooHigh { residual: f64, bound: f64 },
}

/// Tuning knobs of the penalty method and its inner probes.
#[derive(Clone, Debug)]
pub struct StarCfg {
    /// Relative width at which the per-iterate epigraph bisection stops.
    pub iterate_tol: f64,
    /// Relative objective change that ends a constant-penalty stage.
    pub alg1_tol: f64,
    /// Iterate cap per constant-penalty stage.
    pub alg1_max_iters: usize,
    /// Step cap per feasibility probe.
    pub pg_max_steps: usize,
    /// Steps without slack improvement after which a probe gives up.
    pub pg_stall_window: usize,
    /// Minimal slack improvement that counts as progress.
    pub pg_tol: f64,
    /// Escalation cap: the penalty factor may grow to `nu_init * nu_cap_factor`.
    pub nu_cap_factor: f64,
    /// Rank residual bound relative to the trace.
    pub rank_tol: f64,
}

impl Default for StarCfg {
    fn default() -> Self {
        StarCfg {
            iterate_tol: 1e-4,
            alg1_tol: 1e-4,
            alg1_max_iters: 30,
            pg_max_steps: 500,
            pg_stall_window: 80,
            pg_tol: 1e-7,
            nu_cap_factor: 1e6,
            rank_tol: 1e-4,
        }
    }
}

impl LiftedCoeff {
    /// Exact rank-one lift of an amplitude/phase configuration.
    pub fn from_config(star: &StarConfig) -> Self {
        let n = star.n();
        let build = |side: Side| {
            let mut v = DVector::<Complex64>::zeros(n + 1);
            for e in 0..n {
                v[e] = star.coeff(side, e);
            }
            v[n] = Complex64::new(1.0, 0.0);
            &v * v.adjoint()
        };
        LiftedCoeff {
            v_r: build(Side::Reflection),
            v_t: build(Side::Transmission),
        }
    }

    pub fn n(&self) -> usize {
        self.v_r.nrows() - 1
    }

    pub fn side(&self, side: Side) -> &DMatrix<Complex64> {
        match side {
            Side::Reflection => &self.v_r,
            Side::Transmission => &self.v_t,
        }
    }

    /// Amplitudes read off a diagonal.
    pub fn gamma(&self, side: Side) -> Vec<f64> {
        let m = self.side(side);
        (0..self.n()).map(|e| m[(e, e)].re).collect()
    }

    /// `tr - lambda_max` per matrix (reflection, transmission); zero exactly
    /// on rank-one matrices.
    pub fn rank_residuals(&self) -> (f64, f64) {
        let r = trace_re(&self.v_r) - top_eigenpair(&self.v_r).value;
        let t = trace_re(&self.v_t) - top_eigenpair(&self.v_t).value;
        (r, t)
    }
}

/// First-order minorant of `lambda_max` at `v_prev` (Hermitian PSD).
///
/// The `degenerate` flag marks a (near-)tied top eigenpair; the linearization
/// is still a valid minorant, just not unique.
pub fn linearize_lambda_max(v_prev: &DMatrix<Complex64>) -> LambdaMaxLin {
    let top = top_eigenpair(v_prev);
    let constant = top.value - quad_form(v_prev, &top.vector);
    LambdaMaxLin {
        degenerate: top.gap <= 1e-12,
        u: top.vector,
        constant,
        value_at_prev: top.value,
    }
}

/// Per-side working data of one convex iterate.
struct SideCtx {
    active: bool,
    lin: LambdaMaxLin,
    /// `I - u u^H`, the gradient of the linearized penalty.
    pen_grad: DMatrix<Complex64>,
}

struct Evaluator<'a> {
    prob: &'a StarProblem<'a>,
    coupling: &'a AmplitudeCoupling,
    /// `sum_j p_j H_j` per side (SDMA only; zero matrices under FDMA).
    p_side: [DMatrix<Complex64>; 2],
    /// Slack normalization per user (a representative rate scale).
    scale: Vec<f64>,
    /// Seconds scale of the epigraph-domain slack.
    t_scale: f64,
    a_max: f64,
}

fn side_idx(side: Side) -> usize {
    match side {
        Side::Reflection => 0,
        Side::Transmission => 1,
    }
}

impl<'a> Evaluator<'a> {
    fn new(prob: &'a StarProblem<'a>, coupling: &'a AmplitudeCoupling, t_ref: f64) -> Self {
        let k = prob.prefix.len();
        let dim = prob.ch.h_r.len() + 1;
        let mut p_side = [DMatrix::zeros(dim, dim), DMatrix::zeros(dim, dim)];
        if let RateCoupling::Surrogate { p, .. } = &prob.coupling {
            for u in 0..k {
                let s = side_idx(prob.ch.sides[u]);
                p_side[s] += &prob.ch.big_h[u] * Complex64::new(p[u], 0.0);
            }
        }
        let a_max = prob.prefix.iter().cloned().fold(0.0f64, f64::max);
        let scale = (0..k)
            .map(|u| {
                let need = prob.load[u] / (t_ref - prob.prefix[u]).max(1e-9 * t_ref.max(1e-9));
                need.max(prob.rate_floor[u]).max(1.0)
            })
            .collect();
        Evaluator {
            prob,
            coupling,
            p_side,
            scale,
            t_scale: t_ref.max(1e-12),
            a_max,
        }
    }

    fn k(&self) -> usize {
        self.prob.prefix.len()
    }

    fn gains(&self, v: &LiftedCoeff) -> Vec<f64> {
        (0..self.k())
            .map(|u| quad_form(v.side(self.prob.ch.sides[u]), &self.prob.ch.h_hat[u]).max(0.0))
            .collect()
    }

    fn rates(&self, gains: &[f64]) -> Vec<f64> {
        let noise = self.prob.bandwidth * self.prob.noise_psd;
        match &self.prob.coupling {
            RateCoupling::Surrogate { p, y } => {
                let total: f64 = p.iter().zip(gains).map(|(p, g)| p * g).sum();
                (0..self.k())
                    .map(|u| {
                        let interference = total - p[u] * gains[u] + noise;
                        self.prob.bandwidth / LN_2
                            * ((total + noise).ln() - y[u] * interference + y[u].ln() + 1.0)
                    })
                    .collect()
            }
            RateCoupling::Orthogonal { p, b } => (0..self.k())
                .map(|u| {
                    if b[u] <= 0.0 {
                        0.0
                    } else {
                        let band = b[u] * self.prob.bandwidth;
                        band * (1.0 + p[u] * gains[u] / (band * self.prob.noise_psd)).log2()
                    }
                })
                .collect(),
        }
    }

    /// Gradient of user `u`'s rate w.r.t. the lifted pair, encoded as
    /// `grad(V_i) = alpha[i] * p_side[i] + [side(u) == i] * own * H_u`.
    fn rate_grad(&self, u: usize, gains: &[f64]) -> (f64, f64) {
        let noise = self.prob.bandwidth * self.prob.noise_psd;
        match &self.prob.coupling {
            RateCoupling::Surrogate { p, y } => {
                let total: f64 = p.iter().zip(gains).map(|(p, g)| p * g).sum();
                let c = self.prob.bandwidth / LN_2;
                let alpha = c * (1.0 / (total + noise) - y[u]);
                let own = c * y[u] * p[u];
                (alpha, own)
            }
            RateCoupling::Orthogonal { p, b } => {
                if b[u] <= 0.0 {
                    (0.0, 0.0)
                } else {
                    let band = b[u] * self.prob.bandwidth;
                    let own = band * p[u] / (LN_2 * (band * self.prob.noise_psd + p[u] * gains[u]));
                    (0.0, own)
                }
            }
        }
    }
}

/// Linearized penalty `sum_i tr(V_i) - L_i(V_i)` over active sides.
fn penalty_lin(v: &LiftedCoeff, sides: &[SideCtx; 2]) -> f64 {
    let mut pen = 0.0;
    for (i, m) in [&v.v_r, &v.v_t].into_iter().enumerate() {
        if sides[i].active {
            pen += trace_re(m) - sides[i].lin.eval(m);
        }
    }
    pen
}

/// True penalty `sum_i tr(V_i) - lambda_max(V_i)` over active sides.
fn penalty_true(v: &LiftedCoeff, coupling: &AmplitudeCoupling) -> f64 {
    let mut pen = 0.0;
    if coupling.active(Side::Reflection) {
        pen += trace_re(&v.v_r) - top_eigenpair(&v.v_r).value;
    }
    if coupling.active(Side::Transmission) {
        pen += trace_re(&v.v_t) - top_eigenpair(&v.v_t).value;
    }
    pen
}

/// Worst-user latency `max_k A_k + load_k / rate_k` (infinite on zero rates).
fn comm_objective(ev: &Evaluator, rates: &[f64]) -> f64 {
    let mut t = 0.0f64;
    for u in 0..ev.k() {
        let tc = if rates[u] > 0.0 {
            ev.prob.load[u] / rates[u]
        } else {
            f64::INFINITY
        };
        t = t.max(ev.prob.prefix[u] + tc);
    }
    t
}

/// True penalized objective at a lifted pair.
fn objective_true(ev: &Evaluator, v: &LiftedCoeff, nu: f64) -> f64 {
    let rates = ev.rates(&ev.gains(v));
    comm_objective(ev, &rates) + nu * penalty_true(v, ev.coupling)
}

/// Exact projection onto the affine part of the feasible set: Hermitian,
/// unit corner, diagonal coupling (or pinned amplitudes), real diagonals.
fn affine_project(v: &mut LiftedCoeff, coupling: &AmplitudeCoupling) {
    let n = v.n();
    v.v_r = hermitianize(&v.v_r);
    v.v_t = hermitianize(&v.v_t);
    v.v_r[(n, n)] = Complex64::new(1.0, 0.0);
    v.v_t[(n, n)] = Complex64::new(1.0, 0.0);
    match coupling {
        AmplitudeCoupling::EnergySplit => {
            for e in 0..n {
                let a = v.v_r[(e, e)].re;
                let b = v.v_t[(e, e)].re;
                let a = ((a - b + 1.0) / 2.0).clamp(0.0, 1.0);
                v.v_r[(e, e)] = Complex64::new(a, 0.0);
                v.v_t[(e, e)] = Complex64::new(1.0 - a, 0.0);
            }
        }
        AmplitudeCoupling::Pinned { gamma_r, gamma_t } => {
            for e in 0..n {
                v.v_r[(e, e)] = Complex64::new(gamma_r[e], 0.0);
                v.v_t[(e, e)] = Complex64::new(gamma_t[e], 0.0);
            }
        }
    }
}

/// One optimization-step projection: affine part exactly, then a PSD clip.
fn step_project(v: &mut LiftedCoeff, coupling: &AmplitudeCoupling) {
    affine_project(v, coupling);
    if coupling.active(Side::Reflection) {
        v.v_r = psd_project(&v.v_r);
    }
    if coupling.active(Side::Transmission) {
        v.v_t = psd_project(&v.v_t);
    }
}

/// Worst affine-constraint violation (diagonal coupling and unit corner).
fn affine_violation(v: &LiftedCoeff, coupling: &AmplitudeCoupling) -> f64 {
    let n = v.n();
    let mut worst = 0.0f64;
    for e in 0..n {
        let (a, b) = (v.v_r[(e, e)].re, v.v_t[(e, e)].re);
        match coupling {
            AmplitudeCoupling::EnergySplit => worst = worst.max((a + b - 1.0).abs()),
            AmplitudeCoupling::Pinned { gamma_r, gamma_t } => {
                worst = worst.max((a - gamma_r[e]).abs()).max((b - gamma_t[e]).abs())
            }
        }
    }
    worst
        .max((v.v_r[(n, n)].re - 1.0).abs())
        .max((v.v_t[(n, n)].re - 1.0).abs())
}

/// Worst negative-eigenvalue mass over active sides.
#[cfg(test)]
fn psd_violation(v: &LiftedCoeff, coupling: &AmplitudeCoupling) -> f64 {
    let mut worst = 0.0f64;
    if coupling.active(Side::Reflection) {
        worst = worst.max(-min_eigenvalue(&v.v_r));
    }
    if coupling.active(Side::Transmission) {
        worst = worst.max(-min_eigenvalue(&v.v_t));
    }
    worst.max(0.0)
}

/// Tight projection used on accepted witnesses: alternate affine/PSD until
/// both constraint families hold to high accuracy. Ends on the PSD clip, so
/// the returned matrices are exactly in the cone (honest penalty and rank
/// residuals) while coupling and corner hold to the alternation tolerance.
fn cleanup_project(v: &mut LiftedCoeff, coupling: &AmplitudeCoupling) {
    let tol = 1e-10 * (1.0 + trace_re(&v.v_r).abs() + trace_re(&v.v_t).abs());
    for _ in 0..40 {
        // Ends on the PSD clip; affine parts may drift by the clip magnitude.
        step_project(v, coupling);
        if affine_violation(v, coupling) <= tol {
            break;
        }
    }
}

struct SlackEval {
    value: f64,
    /// Index of the binding slack: 0 = epigraph domain, then latency slacks,
    /// then energy-floor slacks.
    which: usize,
}

/// Minimum normalized slack at `v` for epigraph level `tau`.
///
/// Slack 0: `(tau - nu * pen_lin - A_max) / t_scale` (domain/penalty budget).
/// Slacks 1..=K: `(rate_k - load_k / (tau - nu * pen_lin - A_k)) / scale_k`.
/// Slacks K+1..: `(rate_k - floor_k) / scale_k`.
fn min_slack(ev: &Evaluator, sides: &[SideCtx; 2], nu: f64, tau: f64, v: &LiftedCoeff, rates: &[f64]) -> SlackEval {
    let pen = penalty_lin(v, sides);
    let budget = tau - nu * pen;
    let k = ev.k();
    let mut best = SlackEval {
        value: (budget - ev.a_max) / ev.t_scale,
        which: 0,
    };
    if best.value < 0.0 {
        // Rate slacks are undefined outside the domain; drive the budget first.
        return best;
    }
    for u in 0..k {
        let d = budget - ev.prob.prefix[u];
        let s1 = (rates[u] - ev.prob.load[u] / d) / ev.scale[u];
        if s1 < best.value {
            best = SlackEval { value: s1, which: 1 + u };
        }
        if ev.prob.rate_floor[u] > 0.0 {
            let s2 = (rates[u] - ev.prob.rate_floor[u]) / ev.scale[u];
            if s2 < best.value {
                best = SlackEval { value: s2, which: 1 + k + u };
            }
        }
    }
    best
}

/// Supergradient of the binding slack, added into `grad` (per active side).
fn slack_gradient(
    ev: &Evaluator,
    sides: &[SideCtx; 2],
    nu: f64,
    tau: f64,
    v: &LiftedCoeff,
    gains: &[f64],
    which: usize,
    grad: &mut [DMatrix<Complex64>; 2],
) {
    let k = ev.k();
    for g in grad.iter_mut() {
        g.fill(Complex64::new(0.0, 0.0));
    }
    let add_pen_grad = |grad: &mut [DMatrix<Complex64>; 2], w: f64| {
        for i in 0..2 {
            if sides[i].active {
                grad[i] += &sides[i].pen_grad * Complex64::new(w, 0.0);
            }
        }
    };
    let add_rate_grad = |grad: &mut [DMatrix<Complex64>; 2], u: usize, w: f64| {
        let (alpha, own) = ev.rate_grad(u, gains);
        if alpha != 0.0 {
            for i in 0..2 {
                if sides[i].active {
                    grad[i] += &ev.p_side[i] * Complex64::new(w * alpha, 0.0);
                }
            }
        }
        let si = side_idx(ev.prob.ch.sides[u]);
        if sides[si].active && own != 0.0 {
            grad[si] += &ev.prob.ch.big_h[u] * Complex64::new(w * own, 0.0);
        }
    };
    if which == 0 {
        // d/dV (tau - nu pen)/t_scale = -nu pen_grad / t_scale
        add_pen_grad(grad, -nu / ev.t_scale);
    } else if which <= k {
        let u = which - 1;
        let pen = penalty_lin(v, sides);
        let d = tau - nu * pen - ev.prob.prefix[u];
        let w = 1.0 / ev.scale[u];
        add_rate_grad(grad, u, w);
        // -load/d(V): d'(V) = -nu pen_grad, so gradient is -load/d^2 * nu pen_grad.
        add_pen_grad(grad, -w * ev.prob.load[u] * nu / (d * d));
    } else {
        let u = which - 1 - k;
        add_rate_grad(grad, u, 1.0 / ev.scale[u]);
    }
}

/// Projects a gradient pair onto the tangent space of the affine constraints
/// (fixed corner, diagonal coupling or pinned amplitudes), so that Polyak
/// steps are sized by the gradient mass that actually survives projection.
/// Without this, the large diagonal components of the rank-one channel
/// matrices dominate the norm but are clamped away immediately.
fn tangent_project(grad: &mut [DMatrix<Complex64>; 2], coupling: &AmplitudeCoupling, active: &[bool; 2]) {
    let dim = grad[0].nrows();
    let n = dim - 1;
    for i in 0..2 {
        if !active[i] {
            grad[i].fill(Complex64::new(0.0, 0.0));
        }
    }
    match coupling {
        AmplitudeCoupling::EnergySplit => {
            // Feasible diagonal moves satisfy d(gamma_r) = -d(gamma_t).
            for e in 0..n {
                let d = 0.5 * (grad[0][(e, e)].re - grad[1][(e, e)].re);
                grad[0][(e, e)] = Complex64::new(d, 0.0);
                grad[1][(e, e)] = Complex64::new(-d, 0.0);
            }
        }
        AmplitudeCoupling::Pinned { .. } => {
            for g in grad.iter_mut() {
                for e in 0..n {
                    g[(e, e)] = Complex64::new(0.0, 0.0);
                }
            }
        }
    }
    grad[0][(n, n)] = Complex64::new(0.0, 0.0);
    grad[1][(n, n)] = Complex64::new(0.0, 0.0);
}

enum ProbeOutcome {
    Feasible(LiftedCoeff),
    Infeasible { worst_user: Option<usize> },
}

/// Maximize the minimum slack from `start` until feasibility or stall.
fn probe(
    ev: &Evaluator,
    sides: &[SideCtx; 2],
    nu: f64,
    tau: f64,
    start: &LiftedCoeff,
    cfg: &StarCfg,
    work: &mut u64,
) -> ProbeOutcome {
    let dim = start.v_r.nrows();
    let mut v = start.clone();
    let mut grad = [DMatrix::zeros(dim, dim), DMatrix::zeros(dim, dim)];
    let mut best = f64::NEG_INFINITY;
    let mut best_which = 0usize;
    let mut last_improve = 0usize;
    // Evaluation carried over from an accepted backtracking candidate.
    let mut carried: Option<(Vec<f64>, SlackEval)> = None;
    // Trust length: accepted Polyak steps seed the next attempt's cap.
    let mut trust = f64::INFINITY;
    // Raw slack needed before the (expensive) cleanup is attempted; raised
    // whenever a cleanup costs more slack than the raw point had.
    let mut cleanup_bar = 0.0f64;
    for step in 0..cfg.pg_max_steps {
        *work += 1;
        let (gains, slack) = carried.take().unwrap_or_else(|| {
            let gains = ev.gains(&v);
            let rates = ev.rates(&gains);
            let slack = min_slack(ev, sides, nu, tau, &v, &rates);
            (gains, slack)
        });
        if slack.value >= cleanup_bar {
            // Iterates are PSD-exact after every step; if the affine drift is
            // negligible too, the point is a witness as-is.
            let scale = 1.0 + trace_re(&v.v_r).abs() + trace_re(&v.v_t).abs();
            if affine_violation(&v, ev.coupling) <= 1e-8 * scale {
                return ProbeOutcome::Feasible(v);
            }
            // Otherwise tighten the projection and re-verify before accepting.
            let mut clean = v.clone();
            cleanup_project(&mut clean, ev.coupling);
            let gains = ev.gains(&clean);
            let rates = ev.rates(&gains);
            let clean_slack = min_slack(ev, sides, nu, tau, &clean, &rates).value;
            if clean_slack >= -1e-9 {
                return ProbeOutcome::Feasible(clean);
            }
            // Cleanup cost too much slack; restart the ascent from the clean
            // point and demand enough raw slack to cover the cost next time.
            cleanup_bar = 1.5 * (slack.value - clean_slack) + 1e-12;
            v = clean;
            continue;
        }
        if slack.value > best + cfg.pg_tol {
            best = slack.value;
            best_which = slack.which;
            last_improve = step;
        } else if step - last_improve > cfg.pg_stall_window {
            break;
        }
        slack_gradient(ev, sides, nu, tau, &v, &gains, slack.which, &mut grad);
        tangent_project(&mut grad, ev.coupling, &[sides[0].active, sides[1].active]);
        let gnorm2: f64 = grad.iter().map(|g| g.norm_squared()).sum();
        if !gnorm2.is_finite() || gnorm2 <= 1e-30 {
            break;
        }
        // Polyak step toward slack level 0, capped to keep iterates bounded,
        // then backtracked until the minimum slack strictly improves (the
        // supergradient of the binding slack is not an ascent direction for
        // the min at kinks, and the Polyak length overshoots under curvature).
        // Accepted lengths seed a trust cap so later steps rarely backtrack.
        let gnorm = gnorm2.sqrt();
        let mut alpha = (1.5 * (cleanup_bar - slack.value) / gnorm2)
            .min(2.0 / gnorm)
            .min(2.0 * trust / gnorm);
        if !alpha.is_finite() || alpha <= 0.0 {
            break;
        }
        let mut stepped = false;
        for _ in 0..12 {
            let mut cand = v.clone();
            if sides[0].active {
                cand.v_r += &grad[0] * Complex64::new(alpha, 0.0);
            }
            if sides[1].active {
                cand.v_t += &grad[1] * Complex64::new(alpha, 0.0);
            }
            step_project(&mut cand, ev.coupling);
            *work += 1;
            let cand_gains = ev.gains(&cand);
            let cand_rates = ev.rates(&cand_gains);
            let cand_slack = min_slack(ev, sides, nu, tau, &cand, &cand_rates);
            if cand_slack.value > slack.value {
                v = cand;
                trust = alpha * gnorm;
                carried = Some((cand_gains, cand_slack));
                stepped = true;
                break;
            }
            alpha *= 0.5;
        }
        if !stepped {
            // No ascent even at a tiny step: stationary for this slack.
            break;
        }
    }
    let k = ev.k();
    let worst_user = if best_which >= 1 && best_which <= 2 * k {
        Some((best_which - 1) % k)
    } else {
        None
    };
    ProbeOutcome::Infeasible { worst_user }
}

/// Solves one convex iterate of the penalty method: minimize
/// `max_k(A_k + load_k/rate_k(V)) + nu * pen_lin(V)` over the lifted feasible
/// set, where `pen_lin` uses the `lambda_max` minorants taken at `v_prev`.
///
/// Returns a pair whose penalized-linearized objective never exceeds that of
/// `v_prev` (block descent); `v_prev` itself is returned if no strictly
/// better feasible point is found.
///
/// # Errors
/// `Infeasible` if even the incoming point fails the feasibility pre-pass
/// (energy floors unattainable).
pub fn solve_penalized_iterate(
    prob: &StarProblem,
    v_prev: &LiftedCoeff,
    nu: f64,
    coupling: &AmplitudeCoupling,
    cfg: &StarCfg,
    work: &mut u64,
) -> Result<LiftedCoeff, StarError> {
    let lin_r = linearize_lambda_max(&v_prev.v_r);
    let lin_t = linearize_lambda_max(&v_prev.v_t);
    let dim = v_prev.v_r.nrows();
    let eye = DMatrix::<Complex64>::identity(dim, dim);
    let sides = [
        SideCtx {
            active: coupling.active(Side::Reflection),
            pen_grad: &eye - &lin_r.u * lin_r.u.adjoint(),
            lin: lin_r,
        },
        SideCtx {
            active: coupling.active(Side::Transmission),
            pen_grad: &eye - &lin_t.u * lin_t.u.adjoint(),
            lin: lin_t,
        },
    ];

    // Incoming objective; pen_lin(v_prev) = pen_true(v_prev) by tangency.
    let t_ref = {
        let ev_tmp = Evaluator::new(prob, coupling, 1.0);
        let rates_prev = ev_tmp.rates(&ev_tmp.gains(v_prev));
        comm_objective(&ev_tmp, &rates_prev) + nu * penalty_lin(v_prev, &sides)
    };
    if !t_ref.is_finite() {
        return Err(StarError::Infeasible { worst_user: None });
    }
    let ev = Evaluator::new(prob, coupling, t_ref);

    // Feasibility pre-pass at the incoming level. The latency slacks hold at
    // `v_prev` by construction of `t_ref`; only rate floors can fail here
    // (the previous block may have moved them), in which case the point is
    // repaired first and the repaired point is kept even if it costs latency.
    let mut witness = v_prev.clone();
    let mut repaired = false;
    {
        let gains = ev.gains(&witness);
        let rates = ev.rates(&gains);
        if min_slack(&ev, &sides, nu, t_ref, &witness, &rates).value < -1e-9 {
            match probe(&ev, &sides, nu, t_ref, &witness, cfg, work) {
                ProbeOutcome::Feasible(v) => {
                    witness = v;
                    repaired = true;
                }
                ProbeOutcome::Infeasible { worst_user } => {
                    return Err(StarError::Infeasible { worst_user })
                }
            }
        }
    }

    // Quick descent check: if barely below the incoming level is already
    // infeasible, the iterate is converged and the bisection is skipped.
    // The bracket floor assumes no single iterate gains more than 30%;
    // larger gains simply carry over into the next iterate.
    let first = t_ref * (1.0 - 4.0 * cfg.iterate_tol);
    let mut lo = ev.a_max.max(0.7 * first);
    let mut hi = first;
    match probe(&ev, &sides, nu, first, &witness, cfg, work) {
        ProbeOutcome::Feasible(v) => witness = v,
        ProbeOutcome::Infeasible { .. } => {
            return Ok(witness);
        }
    }
    while hi - lo > cfg.iterate_tol * hi {
        let mid = 0.5 * (lo + hi);
        match probe(&ev, &sides, nu, mid, &witness, cfg, work) {
            ProbeOutcome::Feasible(v) => {
                witness = v;
                hi = mid;
            }
            ProbeOutcome::Infeasible { .. } => {
                lo = mid;
            }
        }
    }

    // The witness may carry small affine drift from the fast probe path;
    // tighten it once per iterate (it feeds the next linearization and,
    // eventually, the extraction).
    cleanup_project(&mut witness, coupling);

    // Never return something worse than the incoming point (unless the
    // incoming point itself had to be repaired).
    let lin_obj = |v: &LiftedCoeff| -> f64 {
        let rates = ev.rates(&ev.gains(v));
        comm_objective(&ev, &rates) + nu * penalty_lin(v, &sides)
    };
    if repaired || lin_obj(&witness) <= t_ref {
        Ok(witness)
    } else {
        Ok(v_prev.clone())
    }
}

/// Full penalty method: repeat linearize-and-solve until the objective
/// settles, escalating the penalty factor tenfold whenever the terminal
/// rank residuals exceed `rank_tol * tr`, up to `nu_start * nu_cap_factor`.
///
/// The returned state carries one objective trace per constant-penalty stage;
/// each trace is non-increasing.
///
/// # Errors
/// `PenaltyStall` if the residual bound still fails at the escalation cap;
/// `Infeasible` propagated from the iterate solver.
pub fn run_algorithm1(
    prob: &StarProblem,
    init: &LiftedCoeff,
    coupling: &AmplitudeCoupling,
    cfg: &StarCfg,
    nu_start: f64,
) -> Result<(LiftedCoeff, PenaltyState), StarError> {
    let mut v = init.clone();
    let mut nu = nu_start;
    let mut stages = Vec::new();
    let mut iterations = 0usize;
    let mut work = 0u64;
    loop {
        let ev = Evaluator::new(prob, coupling, 1.0);
        let mut objective = vec![objective_true(&ev, &v, nu)];
        for _ in 0..cfg.alg1_max_iters {
            let next = solve_penalized_iterate(prob, &v, nu, coupling, cfg, &mut work)?;
            iterations += 1;
            let obj = objective_true(&ev, &next, nu);
            let prev = *objective.last().unwrap();
            objective.push(obj);
            v = next;
            if (prev - obj).abs() <= cfg.alg1_tol * prev.abs().max(1e-30) {
                break;
            }
        }
        let residual_ok = |v: &LiftedCoeff| {
            let (res_r, res_t) = v.rank_residuals();
            let ok_r = !coupling.active(Side::Reflection) || res_r <= cfg.rank_tol * trace_re(&v.v_r);
            let ok_t = !coupling.active(Side::Transmission) || res_t <= cfg.rank_tol * trace_re(&v.v_t);
            (res_r, res_t, ok_r && ok_t)
        };
        let (mut res_r, mut res_t, mut rank_ok) = residual_ok(&v);
        if !rank_ok {
            // Snap to the nearest rank-one configuration when that does not
            // raise the true penalized objective: dropping the non-top
            // eigenvalue mass saves `nu * (tr - lambda_max)` exactly, which
            // outweighs the gain perturbation once the penalty factor is
            // large enough.
            if let Ok(snap) = extract_rank_one(&v, f64::INFINITY) {
                let cand = LiftedCoeff::from_config(&snap);
                let cand_obj = objective_true(&ev, &cand, nu);
                if cand_obj <= objective_true(&ev, &v, nu) * (1.0 + 1e-12) {
                    objective.push(cand_obj);
                    v = cand;
                    (res_r, res_t, rank_ok) = residual_ok(&v);
                }
            }
        }
        stages.push(PenaltyStage { nu, objective });
        if rank_ok {
            return Ok((
                v,
                PenaltyState {
                    stages,
                    residual_r: res_r,
                    residual_t: res_t,
                    nu_final: nu,
                    iterations,
                    work,
                },
            ));
        }
        if nu >= nu_start * cfg.nu_cap_factor {
            let state = PenaltyState {
                stages,
                residual_r: res_r,
                residual_t: res_t,
                nu_final: nu,
                iterations,
                work,
            };
            return Err(StarError::PenaltyStall {
                residual_r: res_r,
                residual_t: res_t,
                nu,
                state,
            });
        }
        nu *= 10.0;
    }
}

/// Reads an amplitude/phase configuration out of a (near-)rank-one lifted
/// pair: take the top eigenpair, rescale so the corner entry (whose exact
/// value is one on the feasible set) is exactly one and real positive, then
/// read amplitudes off squared magnitudes and renormalize each element pair
/// so the amplitude coupling holds exactly.
///
/// # Errors
/// `RankTooHigh` if a matrix's `tr - lambda_max` exceeds `rank_tol * tr`.
pub fn extract_rank_one(lifted: &LiftedCoeff, rank_tol: f64) -> Result<StarConfig, StarError> {
    let n = lifted.n();
    let side_vec = |m: &DMatrix<Complex64>| -> Result<DVector<Complex64>, StarError> {
        let top = top_eigenpair(m);
        let tr = trace_re(m);
        let residual = tr - top.value;
        if residual > rank_tol * tr {
            return Err(StarError::RankTooHigh {
                residual,
                bound: rank_tol * tr,
            });
        }
        let mut v = top.vector * Complex64::new(top.value.max(0.0).sqrt(), 0.0);
        let corner = v[n];
        if corner.norm_sqr() < 1e-6 {
            return Err(StarError::RankTooHigh {
                residual: 1.0,
                bound: rank_tol,
            });
        }
        let corr = corner.conj() / corner.norm_sqr();
        v *= corr;
        Ok(v)
    };
    let vr = side_vec(&lifted.v_r)?;
    let vt = side_vec(&lifted.v_t)?;
    let mut cfg = StarConfig {
        gamma_r: (0..n).map(|e| vr[e].norm_sqr()).collect(),
        gamma_t: (0..n).map(|e| vt[e].norm_sqr()).collect(),
        theta_r: (0..n).map(|e| vr[e].arg().rem_euclid(TWO_PI)).collect(),
        theta_t: (0..n).map(|e| vt[e].arg().rem_euclid(TWO_PI)).collect(),
    };
    for e in 0..n {
        let s = cfg.gamma_r[e] + cfg.gamma_t[e];
        if s > 0.0 {
            cfg.gamma_r[e] = (cfg.gamma_r[e] / s).clamp(0.0, 1.0);
            cfg.gamma_t[e] = 1.0 - cfg.gamma_r[e];
        } else {
            cfg.gamma_r[e] = 0.5;
            cfg.gamma_t[e] = 0.5;
        }
    }
    Ok(cfg)
}
