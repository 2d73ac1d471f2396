//! Transmit-power block (SDMA) and joint power/bandwidth block (FDMA).
//!
//! Both blocks minimize the worst-user service latency at fixed surface
//! coefficients and compute allocations, subject to per-user power boxes and
//! the transmit-energy budget `p_k * load_k / rate_k <= headroom_k`.
//!
//! SDMA uses the concave rate surrogate at fixed auxiliaries, so feasibility
//! at an epigraph level is a max-min-slack concave program over the power
//! box: it is solved by projected supergradient ascent on the worst slack,
//! wrapped in a bisection on the level.
//!
//! FDMA rates `b B log2(1 + p g / (b B N0))` are free of interference, which
//! decouples the level-feasibility test per user: for each user the minimal
//! bandwidth share meeting its rate need is found by bisection (the best
//! achievable rate is increasing in the share), and the level is feasible
//! when the shares sum to at most one. Leftover bandwidth is handed back
//! proportionally at the end, which never hurts any user.

use thiserror::Error;

use crate::perf::LN_2;

#[derive(Debug, Error)]
pub enum PowerError {
    #[error("no feasible allocation for user {user}")]
    Infeasible { user: usize },
}

/// Tuning knobs shared by the two blocks.
#[derive(Clone, Debug)]
pub struct PowerCfg {
    /// Relative width at which the epigraph bisection stops.
    pub bisect_tol: f64,
    /// Step cap per feasibility probe (SDMA).
    pub pg_max_steps: usize,
    /// Steps without slack improvement after which a probe gives up.
    pub pg_stall_window: usize,
    /// Minimal slack improvement that counts as progress.
    pub pg_tol: f64,
}

impl Default for PowerCfg {
    fn default() -> Self {
        PowerCfg {
            bisect_tol: 1e-4,
            pg_max_steps: 500,
            pg_stall_window: 80,
            pg_tol: 1e-7,
        }
    }
}

/// Output of the SDMA power block.
#[derive(Clone, Debug)]
pub struct PowerSolution {
    pub p: Vec<f64>,
    /// Worst-user surrogate latency achieved by `p`.
    pub t: f64,
    /// Supergradient steps spent (deterministic work counter).
    pub work: u64,
}

/// Output of the FDMA joint power/bandwidth block.
#[derive(Clone, Debug)]
pub struct FdmaSolution {
    pub p: Vec<f64>,
    pub b: Vec<f64>,
    /// Worst-user latency achieved by `(p, b)`.
    pub t: f64,
}

/// Problem data shared by every user: composite gains at the current surface
/// configuration, latency prefixes `A_k`, bit loads, and transmit-energy
/// headrooms `E_max - E_local_k`.
#[derive(Clone, Debug)]
pub struct PowerProblem<'a> {
    pub gains: &'a [f64],
    pub prefix: &'a [f64],
    pub load: &'a [f64],
    pub headroom: &'a [f64],
    pub p_max: &'a [f64],
    pub bandwidth: f64,
    pub noise_psd: f64,
}

impl PowerProblem<'_> {
    fn k(&self) -> usize {
        self.gains.len()
    }

    fn noise(&self) -> f64 {
        self.bandwidth * self.noise_psd
    }

    /// Rejects users that no power level can serve: nonpositive gain or
    /// nonpositive energy headroom (with a positive bit load, any positive
    /// power spends energy, and zero power moves no bits).
    fn check_users(&self) -> Result<(), PowerError> {
        for u in 0..self.k() {
            if self.gains[u] <= 0.0 || self.headroom[u] <= 0.0 {
                return Err(PowerError::Infeasible { user: u });
            }
        }
        Ok(())
    }
}

/// Surrogate rates of all users at powers `p` and fixed auxiliaries `y`.
fn surrogate_rates(prob: &PowerProblem, p: &[f64], y: &[f64]) -> Vec<f64> {
    let noise = prob.noise();
    let total: f64 = p.iter().zip(prob.gains).map(|(p, g)| p * g).sum();
    let c = prob.bandwidth / LN_2;
    (0..prob.k())
        .map(|u| {
            let interference = total - p[u] * prob.gains[u] + noise;
            c * ((total + noise).ln() - y[u] * interference + y[u].ln() + 1.0)
        })
        .collect()
}

/// Worst-user latency at given per-user rates (infinite on nonpositive rates).
fn max_latency(prob: &PowerProblem, rates: &[f64]) -> f64 {
    let mut t = 0.0f64;
    for u in 0..prob.k() {
        let tc = if rates[u] > 0.0 {
            prob.load[u] / rates[u]
        } else {
            f64::INFINITY
        };
        t = t.max(prob.prefix[u] + tc);
    }
    t
}

struct SlackEval {
    value: f64,
    /// Binding constraint: user index, and whether it is the energy slack.
    user: usize,
    energy: bool,
}

/// Minimum normalized slack at powers `p` for epigraph level `t`.
fn min_slack(prob: &PowerProblem, p: &[f64], rates: &[f64], t: f64, scale: &[f64]) -> SlackEval {
    let mut best = SlackEval {
        value: f64::INFINITY,
        user: 0,
        energy: false,
    };
    for u in 0..prob.k() {
        let d = t - prob.prefix[u];
        let need = if d > 0.0 { prob.load[u] / d } else { f64::INFINITY };
        let s1 = (rates[u] - need) / scale[u];
        if s1 < best.value {
            best = SlackEval { value: s1, user: u, energy: false };
        }
        let s2 = (rates[u] - p[u] * prob.load[u] / prob.headroom[u]) / scale[u];
        if s2 < best.value {
            best = SlackEval { value: s2, user: u, energy: true };
        }
    }
    best
}

/// Supergradient of the binding slack w.r.t. the power vector.
fn slack_gradient(prob: &PowerProblem, p: &[f64], y: &[f64], which: &SlackEval, scale: &[f64], grad: &mut [f64]) {
    let noise = prob.noise();
    let total: f64 = p.iter().zip(prob.gains).map(|(p, g)| p * g).sum();
    let c = prob.bandwidth / LN_2;
    let u = which.user;
    let w = 1.0 / scale[u];
    for (j, g) in grad.iter_mut().enumerate() {
        *g = w * c * prob.gains[j] * (1.0 / (total + noise) - if j == u { 0.0 } else { y[u] });
    }
    if which.energy {
        grad[u] -= w * prob.load[u] / prob.headroom[u];
    }
}

enum ProbeOutcome {
    Feasible(Vec<f64>),
    Infeasible { user: usize },
}

/// Maximize the minimum slack over the power box from `start`, accepting the
/// first point whose worst slack reaches `margin` (zero for plain level
/// feasibility; strictly positive when degenerate boundary points such as
/// all-zero powers must be avoided).
fn probe(
    prob: &PowerProblem,
    y: &[f64],
    t: f64,
    scale: &[f64],
    start: &[f64],
    margin: f64,
    cfg: &PowerCfg,
    work: &mut u64,
) -> ProbeOutcome {
    let k = prob.k();
    let mut p = start.to_vec();
    let mut grad = vec![0.0; k];
    let mut best = f64::NEG_INFINITY;
    let mut best_user = 0usize;
    let mut last_improve = 0usize;
    for step in 0..cfg.pg_max_steps {
        *work += 1;
        let rates = surrogate_rates(prob, &p, y);
        let slack = min_slack(prob, &p, &rates, t, scale);
        if slack.value >= margin {
            return ProbeOutcome::Feasible(p);
        }
        if slack.value > best + cfg.pg_tol {
            best = slack.value;
            best_user = slack.user;
            last_improve = step;
        } else if step - last_improve > cfg.pg_stall_window {
            break;
        }
        slack_gradient(prob, &p, y, &slack, scale, &mut grad);
        let gnorm2: f64 = grad.iter().map(|g| g * g).sum();
        if !gnorm2.is_finite() || gnorm2 <= 1e-30 {
            break;
        }
        let box_edge = prob.p_max.iter().cloned().fold(0.0f64, f64::max);
        let alpha = (1.5 * (margin - slack.value) / gnorm2).min(box_edge / gnorm2.sqrt());
        for j in 0..k {
            p[j] = (p[j] + alpha * grad[j]).clamp(0.0, prob.p_max[j]);
        }
    }
    ProbeOutcome::Infeasible { user: best_user }
}

/// Minimizes the worst-user surrogate latency over the power box at fixed
/// surface coefficients and auxiliaries, honoring the transmit-energy budget.
///
/// `p_init` must describe the incoming allocation; the result never has a
/// worse surrogate latency than `p_init` (block descent).
///
/// # Errors
/// `Infeasible` with the offending user if some user cannot be served at any
/// power level, or if the incoming point violates its energy budget beyond
/// repair.
pub fn solve_sdma_power(
    prob: &PowerProblem,
    y: &[f64],
    p_init: &[f64],
    cfg: &PowerCfg,
) -> Result<PowerSolution, PowerError> {
    assert_eq!(p_init.len(), prob.k());
    assert_eq!(y.len(), prob.k());
    prob.check_users()?;
    let mut work = 0u64;

    // Repair the incoming point first if it overdraws energy. The repair
    // probes at an infinite latency level (energy slacks only): pinning the
    // incoming latency here would be unsatisfiable whenever fixing the
    // energy draw costs rate.
    let rates0 = surrogate_rates(prob, p_init, y);
    let mut witness = p_init.to_vec();
    {
        let scale0: Vec<f64> = rates0.iter().map(|r| r.abs().max(1.0)).collect();
        if min_slack(prob, &witness, &rates0, f64::INFINITY, &scale0).value < -1e-9 {
            // Demand an interior point: the all-zero power vector satisfies
            // every energy budget with slack exactly zero but moves no bits.
            match probe(prob, y, f64::INFINITY, &scale0, &witness, 1e-6, cfg, &mut work) {
                ProbeOutcome::Feasible(p) => witness = p,
                ProbeOutcome::Infeasible { user } => {
                    return Err(PowerError::Infeasible { user })
                }
            }
        }
    }
    let rates_w = surrogate_rates(prob, &witness, y);
    let t_inc = max_latency(prob, &rates_w);
    if !t_inc.is_finite() {
        let worst = (0..prob.k())
            .max_by(|&a, &b| {
                let ra = if rates_w[a] > 0.0 { prob.prefix[a] + prob.load[a] / rates_w[a] } else { f64::INFINITY };
                let rb = if rates_w[b] > 0.0 { prob.prefix[b] + prob.load[b] / rates_w[b] } else { f64::INFINITY };
                ra.total_cmp(&rb)
            })
            .unwrap_or(0);
        return Err(PowerError::Infeasible { user: worst });
    }
    let scale: Vec<f64> = (0..prob.k())
        .map(|u| (prob.load[u] / (t_inc - prob.prefix[u]).max(1e-12)).max(1.0))
        .collect();

    let a_max = prob.prefix.iter().cloned().fold(0.0f64, f64::max);
    // Quick descent check before paying for a full bisection.
    let first = t_inc * (1.0 - 4.0 * cfg.bisect_tol);
    if first <= a_max {
        let rates = surrogate_rates(prob, &witness, y);
        return Ok(PowerSolution { p: witness.clone(), t: max_latency(prob, &rates), work });
    }
    let mut lo = a_max;
    let mut hi = first;
    match probe(prob, y, first, &scale, &witness, 0.0, cfg, &mut work) {
        ProbeOutcome::Feasible(p) => witness = p,
        ProbeOutcome::Infeasible { .. } => {
            let rates = surrogate_rates(prob, &witness, y);
            return Ok(PowerSolution { p: witness.clone(), t: max_latency(prob, &rates), work });
        }
    }
    while hi - lo > cfg.bisect_tol * hi {
        let mid = 0.5 * (lo + hi);
        match probe(prob, y, mid, &scale, &witness, 0.0, cfg, &mut work) {
            ProbeOutcome::Feasible(p) => {
                witness = p;
                hi = mid;
            }
            ProbeOutcome::Infeasible { .. } => lo = mid,
        }
    }
    let rates = surrogate_rates(prob, &witness, y);
    let t = max_latency(prob, &rates);
    Ok(PowerSolution { p: witness, t, work })
}

/// FDMA rate of one user: `b B log2(1 + p g / (b B N0))`, zero on `b <= 0`.
fn fdma_rate(prob: &PowerProblem, u: usize, b: f64, p: f64) -> f64 {
    if b <= 0.0 {
        return 0.0;
    }
    let band = b * prob.bandwidth;
    band * (1.0 + p * prob.gains[u] / (band * prob.noise_psd)).log2()
}

/// Largest admissible power of user `u` at share `b`: the box bound, or the
/// point where the energy budget `p load / rate = headroom` becomes tight.
/// The energy draw `p load / rate` increases with `p` (the rate is concave
/// through the origin), so the admissible set is an interval `[0, p_cap]`.
fn fdma_power_cap(prob: &PowerProblem, u: usize, b: f64) -> f64 {
    let energy = |p: f64| p * prob.load[u] / fdma_rate(prob, u, b, p);
    if energy(prob.p_max[u]) <= prob.headroom[u] {
        return prob.p_max[u];
    }
    let (mut lo, mut hi) = (0.0f64, prob.p_max[u]);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if energy(mid) <= prob.headroom[u] {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Best rate user `u` can reach with share `b` (increasing in `b`).
fn fdma_best_rate(prob: &PowerProblem, u: usize, b: f64) -> f64 {
    fdma_rate(prob, u, b, fdma_power_cap(prob, u, b))
}

/// Minimal share meeting `need`, or `None` if even the full band fails.
fn fdma_min_share(prob: &PowerProblem, u: usize, need: f64) -> Option<f64> {
    if fdma_best_rate(prob, u, 1.0) < need {
        return None;
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if fdma_best_rate(prob, u, mid) >= need {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// Minimizes the worst-user latency over powers and bandwidth shares under
/// orthogonal access: bisection on the latency level, where a level is
/// feasible when the per-user minimal shares fit into the band. Leftover
/// bandwidth is redistributed proportionally before returning.
///
/// # Errors
/// `Infeasible` with the offending user if some user cannot be served: zero
/// gain, no energy headroom, or an energy floor `load N0 ln2 / g` at or above
/// the headroom (the draw of vanishing power).
pub fn solve_fdma(prob: &PowerProblem, cfg: &PowerCfg) -> Result<FdmaSolution, PowerError> {
    prob.check_users()?;
    let k = prob.k();
    for u in 0..k {
        // Vanishing-power energy draw: load / (dR/dp at 0).
        let floor = prob.load[u] * prob.noise_psd * LN_2 / prob.gains[u];
        if floor >= prob.headroom[u] {
            return Err(PowerError::Infeasible { user: u });
        }
    }

    let a_max = prob.prefix.iter().cloned().fold(0.0f64, f64::max);
    // Lower bound: every user alone with the full band.
    let mut t_lo = a_max;
    for u in 0..k {
        t_lo = t_lo.max(prob.prefix[u] + prob.load[u] / fdma_best_rate(prob, u, 1.0));
    }
    let shares_at = |t: f64| -> Result<Vec<f64>, usize> {
        let mut shares = Vec::with_capacity(k);
        for u in 0..k {
            let d = t - prob.prefix[u];
            if d <= 0.0 {
                return Err(u);
            }
            match fdma_min_share(prob, u, prob.load[u] / d) {
                Some(b) => shares.push(b),
                None => return Err(u),
            }
        }
        Ok(shares)
    };
    let fits = |shares: &[f64]| shares.iter().sum::<f64>() <= 1.0;

    // Find a feasible upper level by doubling the gap above the prefixes.
    let mut hi = t_lo * (1.0 + 4.0 * cfg.bisect_tol);
    let mut hi_shares = None;
    for _ in 0..60 {
        match shares_at(hi) {
            Ok(shares) if fits(&shares) => {
                hi_shares = Some(shares);
                break;
            }
            _ => hi = a_max + (hi - a_max) * 2.0,
        }
    }
    let mut shares = match hi_shares {
        Some(s) => s,
        None => {
            let worst = match shares_at(hi) {
                Err(u) => u,
                Ok(s) => (0..k).max_by(|&a, &b| s[a].total_cmp(&s[b])).unwrap_or(0),
            };
            return Err(PowerError::Infeasible { user: worst });
        }
    };

    let mut lo = t_lo;
    while hi - lo > cfg.bisect_tol * hi {
        let mid = 0.5 * (lo + hi);
        match shares_at(mid) {
            Ok(s) if fits(&s) => {
                shares = s;
                hi = mid;
            }
            _ => lo = mid,
        }
    }

    // Hand leftover bandwidth back proportionally; more band never hurts.
    let total: f64 = shares.iter().sum();
    if total > 0.0 && total < 1.0 {
        for b in shares.iter_mut() {
            *b /= total;
        }
    }
    let p: Vec<f64> = (0..k).map(|u| fdma_power_cap(prob, u, shares[u])).collect();
    let rates: Vec<f64> = (0..k).map(|u| fdma_rate(prob, u, shares[u], p[u])).collect();
    let t = max_latency(prob, &rates);
    Ok(FdmaSolution { p, b: shares, t })
}

#[cfg(test)]
mod tests {
    use super::*;

    const B: f64 = 5.0e7;
    const N0: f64 = 1.0e-13;

    fn one_user(gain: f64, headroom: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
        (vec![gain], vec![0.01], vec![562_500.0], vec![headroom])
    }

    #[test]
    fn sdma_single_user_matches_grid_search() {
        // First a loose energy budget (power box binds), then a tight one
        // (the energy budget caps the power below the box).
        for (gain, headroom) in [(4.0e-7, 1.95), (1.0e-4, 5.0e-4)] {
            let (gains, prefix, load, headroom) = one_user(gain, headroom);
            let prob = PowerProblem {
                gains: &gains,
                prefix: &prefix,
                load: &load,
                headroom: &headroom,
                p_max: &vec![1.0; gains.len()],
                bandwidth: B,
                noise_psd: N0,
            };
            // Tight auxiliary at p = p_max.
            let y = vec![1.0 / (B * N0)];
            let out = solve_sdma_power(&prob, &y, &[1.0], &PowerCfg::default()).unwrap();

            // Independent grid search over the box with the energy filter.
            let mut t_best = f64::INFINITY;
            for i in 1..=100_000 {
                let p = i as f64 / 100_000.0;
                let r = surrogate_rates(&prob, &[p], &y)[0];
                if r <= 0.0 || p * load[0] / r > headroom[0] {
                    continue;
                }
                t_best = t_best.min(prefix[0] + load[0] / r);
            }
            assert!(out.t <= t_best * (1.0 + 2.0e-3), "solver {} vs grid {}", out.t, t_best);
            assert!(out.t >= t_best * (1.0 - 2.0e-3));
            // Energy budget holds at the solution.
            let r = surrogate_rates(&prob, &out.p, &y)[0];
            assert!(out.p[0] * load[0] / r <= headroom[0] * (1.0 + 1.0e-6));
        }
    }

    #[test]
    fn sdma_descends_from_incoming_point() {
        let gains = vec![6.0e-7, 3.0e-7, 1.5e-7];
        let prefix = vec![0.012, 0.010, 0.011];
        let load = vec![562_500.0; 3];
        let headroom = vec![1.95; 3];
        let prob = PowerProblem {
            gains: &gains,
            prefix: &prefix,
            load: &load,
            headroom: &headroom,
            p_max: &vec![1.0; gains.len()],
            bandwidth: B,
            noise_psd: N0,
        };
        let p0 = vec![1.0; 3];
        // Tight auxiliaries at the incoming point.
        let noise = B * N0;
        let total: f64 = p0.iter().zip(&gains).map(|(p, g)| p * g).sum();
        let y: Vec<f64> = (0..3)
            .map(|u| 1.0 / (total - p0[u] * gains[u] + noise))
            .collect();
        let t_inc = max_latency(&prob, &surrogate_rates(&prob, &p0, &y));
        let out = solve_sdma_power(&prob, &y, &p0, &PowerCfg::default()).unwrap();
        assert!(out.t <= t_inc + 1e-12, "latency went up: {} > {}", out.t, t_inc);
        assert!(out.p.iter().all(|&p| (0.0..=1.0).contains(&p)));
        // Feasibility of the result: every energy budget holds.
        let rates = surrogate_rates(&prob, &out.p, &y);
        for u in 0..3 {
            assert!(out.p[u] * load[u] / rates[u] <= headroom[u] * (1.0 + 1e-6));
        }
    }

    #[test]
    fn sdma_rejects_dead_channel() {
        let gains = vec![4.0e-7, 0.0];
        let prefix = vec![0.01, 0.01];
        let load = vec![562_500.0; 2];
        let headroom = vec![1.95; 2];
        let prob = PowerProblem {
            gains: &gains,
            prefix: &prefix,
            load: &load,
            headroom: &headroom,
            p_max: &vec![1.0; gains.len()],
            bandwidth: B,
            noise_psd: N0,
        };
        match solve_sdma_power(&prob, &[1.0, 1.0], &[1.0, 1.0], &PowerCfg::default()) {
            Err(PowerError::Infeasible { user: 1 }) => {}
            other => panic!("expected Infeasible for user 1, got {other:?}"),
        }
    }

    #[test]
    fn sdma_rejects_spent_energy_budget() {
        let gains = vec![4.0e-7, 2.0e-7];
        let prefix = vec![0.01, 0.01];
        let load = vec![562_500.0; 2];
        let headroom = vec![1.95, -0.1];
        let prob = PowerProblem {
            gains: &gains,
            prefix: &prefix,
            load: &load,
            headroom: &headroom,
            p_max: &vec![1.0; gains.len()],
            bandwidth: B,
            noise_psd: N0,
        };
        match solve_sdma_power(&prob, &[1.0, 1.0], &[1.0, 1.0], &PowerCfg::default()) {
            Err(PowerError::Infeasible { user: 1 }) => {}
            other => panic!("expected Infeasible for user 1, got {other:?}"),
        }
    }

    #[test]
    fn fdma_single_user_gets_full_band() {
        let (gains, prefix, load, headroom) = one_user(4.0e-7, 1.95);
        let prob = PowerProblem {
            gains: &gains,
            prefix: &prefix,
            load: &load,
            headroom: &headroom,
            p_max: &vec![1.0; gains.len()],
            bandwidth: B,
            noise_psd: N0,
        };
        let out = solve_fdma(&prob, &PowerCfg::default()).unwrap();
        assert!((out.b[0] - 1.0).abs() <= 1e-9);
        let want = prefix[0] + load[0] / fdma_rate(&prob, 0, 1.0, fdma_power_cap(&prob, 0, 1.0));
        assert!((out.t - want).abs() <= 1e-9 * want);
    }

    #[test]
    fn fdma_splits_band_between_equal_users() {
        let gains = vec![4.0e-7, 4.0e-7];
        let prefix = vec![0.01, 0.01];
        let load = vec![562_500.0; 2];
        let headroom = vec![1.95; 2];
        let prob = PowerProblem {
            gains: &gains,
            prefix: &prefix,
            load: &load,
            headroom: &headroom,
            p_max: &vec![1.0; gains.len()],
            bandwidth: B,
            noise_psd: N0,
        };
        let out = solve_fdma(&prob, &PowerCfg::default()).unwrap();
        assert!((out.b[0] - 0.5).abs() <= 1e-3, "share {}", out.b[0]);
        assert!((out.b[0] + out.b[1] - 1.0).abs() <= 1e-12);
        let r0 = fdma_rate(&prob, 0, out.b[0], out.p[0]);
        let r1 = fdma_rate(&prob, 1, out.b[1], out.p[1]);
        assert!((r0 - r1).abs() <= 1e-3 * r0);
    }

    #[test]
    fn fdma_energy_cap_binds_when_headroom_is_small() {
        let (gains, prefix, load, headroom) = one_user(1.0e-4, 5.0e-4);
        let prob = PowerProblem {
            gains: &gains,
            prefix: &prefix,
            load: &load,
            headroom: &headroom,
            p_max: &vec![1.0; gains.len()],
            bandwidth: B,
            noise_psd: N0,
        };
        let out = solve_fdma(&prob, &PowerCfg::default()).unwrap();
        assert!(out.p[0] < 1.0, "cap should bind, got p = {}", out.p[0]);
        let r = fdma_rate(&prob, 0, out.b[0], out.p[0]);
        let draw = out.p[0] * load[0] / r;
        assert!((draw - headroom[0]).abs() <= 1e-6 * headroom[0]);
    }

    #[test]
    fn fdma_rejects_unreachable_energy_floor() {
        // Floor load * N0 * ln2 / g above the headroom: user 1 undeliverable.
        let gains = vec![4.0e-7, 2.0e-12];
        let prefix = vec![0.01, 0.01];
        let load = vec![562_500.0; 2];
        let headroom = vec![1.95, 1.0e-5];
        let prob = PowerProblem {
            gains: &gains,
            prefix: &prefix,
            load: &load,
            headroom: &headroom,
            p_max: &vec![1.0; gains.len()],
            bandwidth: B,
            noise_psd: N0,
        };
        match solve_fdma(&prob, &PowerCfg::default()) {
            Err(PowerError::Infeasible { user: 1 }) => {}
            other => panic!("expected Infeasible for user 1, got {other:?}"),
        }
    }

    #[test]
    fn fdma_share_search_is_monotone() {
        let (gains, prefix, load, headroom) = one_user(4.0e-7, 1.95);
        let prob = PowerProblem {
            gains: &gains,
            prefix: &prefix,
            load: &load,
            headroom: &headroom,
            p_max: &vec![1.0; gains.len()],
            bandwidth: B,
            noise_psd: N0,
        };
        let mut prev = 0.0;
        for i in 1..=20 {
            let b = i as f64 / 20.0;
            let r = fdma_best_rate(&prob, 0, b);
            assert!(r >= prev, "best rate dipped at b = {b}");
            prev = r;
        }
    }
}
