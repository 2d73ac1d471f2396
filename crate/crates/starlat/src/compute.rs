//! Compute-frequency blocks: closed-form local CPU choice and the water-level
//! edge allocation.
//!
//! Local side: raising `f_l` shortens conversion but costs `kappa f_l^2 w`
//! joules, so the best frequency is the energy-feasible cap
//! `min(sqrt((E_max - E_c)/(kappa w)), f_max)`.
//!
//! Edge side: minimizing the worst `A_k + l_k / f_{s,k}` under
//! `sum f_s <= F` forces full utilization and equal per-user totals, so the
//! optimum solves `sum_k l_k / (t - A_k) = F` for the common latency `t`
//! (monotone in `t`, hence a bisection) and the multipliers follow from
//! stationarity: `a_2 = 1 / sum(f_s^2 / l)`, `a_1,k = a_2 f_s,k^2 / l_k`.

use thiserror::Error;

/// Relative tolerance on every KKT residual checked by [`verify_kkt`].
pub const KKT_TOL: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum ComputeError {
    #[error("communication energy {e_c} J exceeds the budget {e_max} J")]
    InfeasibleEnergy { e_c: f64, e_max: f64 },
}

/// Multipliers certifying the edge allocation: `a1[k]` for the per-user
/// latency constraints (they sum to 1), `a2` for the frequency budget.
#[derive(Clone, Debug, PartialEq)]
pub struct DualCertificate {
    pub a1: Vec<f64>,
    pub a2: f64,
}

/// Result of [`solve_edge_allocation`].
#[derive(Clone, Debug)]
pub struct EdgeAllocation {
    /// Edge CPU share per user (cycles/s); sums to `f_edge` exactly.
    pub f_s: Vec<f64>,
    /// Common total latency attained by every user (s).
    pub t: f64,
    pub duals: DualCertificate,
}

/// Per-condition residuals of the edge-allocation KKT system, all relative.
#[derive(Clone, Debug)]
pub struct KktReport {
    /// `|a2 - a1_k l_k / f_k^2| / a2` per user (stationarity).
    pub stationarity: Vec<f64>,
    /// `|sum a1 - 1|` (multiplier normalization).
    pub normalization: f64,
    /// `|sum f_s - F| / F` (budget slackness against `a2 > 0`).
    pub comp_budget: f64,
    /// `|a1_k (A_k + l_k/f_k - t)| / t` per user (latency slackness).
    pub comp_latency: Vec<f64>,
    /// `(max_k - min_k)(A_k + l_k/f_k) / t` (equal-latency spread).
    pub latency_spread: f64,
    /// All multipliers strictly positive.
    pub positive: bool,
    /// Every residual above within [`KKT_TOL`] and `positive`.
    pub pass: bool,
}

/// Best local CPU frequency given the already-committed transmit energy:
/// `min(sqrt((e_max - e_c)/(kappa w)), f_max)`.
///
/// # Errors
/// `InfeasibleEnergy` if `e_c > e_max` (negative radicand).
pub fn optimal_local_cpu(e_max: f64, e_c: f64, w: f64, kappa: f64, f_max: f64) -> Result<f64, ComputeError> {
    assert!(w > 0.0 && kappa > 0.0, "w and kappa must be positive");
    if e_c > e_max {
        return Err(ComputeError::InfeasibleEnergy { e_c, e_max });
    }
    Ok(((e_max - e_c) / (kappa * w)).sqrt().min(f_max))
}

fn water_sum(t: f64, a: &[f64], loads: &[f64]) -> f64 {
    a.iter().zip(loads).map(|(ak, lk)| lk / (t - ak)).sum()
}

/// Splits the edge CPU budget so every user finishes at the same instant.
///
/// `a[k]` is the user's fixed prefix latency (local + upload, seconds) and
/// `loads[k] = beta d_k^2 c_k` its edge cycle demand. Returns shares summing
/// to `f_edge` exactly, the common completion time, and the dual certificate.
///
/// # Panics
/// If inputs are empty, non-finite, or non-positive (`loads`, `f_edge`).
pub fn solve_edge_allocation(a: &[f64], loads: &[f64], f_edge: f64) -> EdgeAllocation {
    assert!(!a.is_empty() && a.len() == loads.len(), "need one (prefix, load) pair per user");
    assert!(f_edge > 0.0, "edge budget must be positive");
    assert!(a.iter().all(|v| v.is_finite()), "prefix latencies must be finite");
    assert!(loads.iter().all(|v| *v > 0.0), "loads must be positive");

    let a_max = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let l_min = loads.iter().cloned().fold(f64::INFINITY, f64::min);
    let l_sum: f64 = loads.iter().sum();

    // water_sum is strictly decreasing on (a_max, inf) from +inf to 0.
    let mut lo = a_max + l_min / f_edge * 1e-6;
    let mut hi = a_max + l_sum / f_edge;
    while water_sum(hi, a, loads) >= f_edge {
        hi = a_max + 2.0 * (hi - a_max);
    }
    debug_assert!(water_sum(lo, a, loads) > f_edge);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // interval collapsed to machine precision
        }
        if water_sum(mid, a, loads) >= f_edge {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t_star = 0.5 * (lo + hi);

    let mut f_s: Vec<f64> = a.iter().zip(loads).map(|(ak, lk)| lk / (t_star - ak)).collect();
    // Exact budget: rescale the (already machine-accurate) shares.
    let sum: f64 = f_s.iter().sum();
    for f in &mut f_s {
        *f *= f_edge / sum;
    }
    let t = a
        .iter()
        .zip(loads)
        .zip(&f_s)
        .map(|((ak, lk), fk)| ak + lk / fk)
        .fold(f64::NEG_INFINITY, f64::max);

    let a2 = 1.0 / f_s.iter().zip(loads).map(|(f, l)| f * f / l).sum::<f64>();
    let a1 = f_s.iter().zip(loads).map(|(f, l)| a2 * f * f / l).collect();

    EdgeAllocation {
        f_s,
        t,
        duals: DualCertificate { a1, a2 },
    }
}

/// Checks the KKT system of the edge allocation on a candidate solution.
/// Diagnostic only: never fails, returns per-condition residuals.
pub fn verify_kkt(f_s: &[f64], t: f64, duals: &DualCertificate, a: &[f64], loads: &[f64], f_edge: f64) -> KktReport {
    let k = f_s.len();
    assert!(k == a.len() && k == loads.len() && k == duals.a1.len());

    let stationarity: Vec<f64> = (0..k)
        .map(|u| ((duals.a2 - duals.a1[u] * loads[u] / (f_s[u] * f_s[u])) / duals.a2).abs())
        .collect();
    let normalization = (duals.a1.iter().sum::<f64>() - 1.0).abs();
    let comp_budget = (f_s.iter().sum::<f64>() - f_edge).abs() / f_edge;
    let totals: Vec<f64> = (0..k).map(|u| a[u] + loads[u] / f_s[u]).collect();
    let comp_latency: Vec<f64> = (0..k).map(|u| (duals.a1[u] * (totals[u] - t)).abs() / t).collect();
    let spread = totals.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - totals.iter().cloned().fold(f64::INFINITY, f64::min);
    let latency_spread = spread / t;
    let positive = duals.a1.iter().all(|v| *v > 0.0) && duals.a2 > 0.0;

    let pass = positive
        && normalization <= KKT_TOL
        && comp_budget <= KKT_TOL
        && stationarity.iter().all(|r| *r <= KKT_TOL)
        && comp_latency.iter().all(|r| *r <= KKT_TOL);

    KktReport {
        stationarity,
        normalization,
        comp_budget,
        comp_latency,
        latency_spread,
        positive,
        pass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn local_cpu_hits_the_frequency_cap() {
        // sqrt(1.5/5e-20) ~ 5.48e9 exceeds the 1 GHz cap.
        let f = optimal_local_cpu(2.0, 0.5, 5e7, 1e-27, 1e9).unwrap();
        assert_eq!(f, 1e9);
    }

    #[test]
    fn local_cpu_energy_limited() {
        // sqrt(5e-3/5e-20) = sqrt(1e17).
        let f = optimal_local_cpu(2.0, 2.0 - 5e-3, 5e7, 1e-27, 1e9).unwrap();
        let expected = 1e17f64.sqrt();
        assert!((f - expected).abs() <= 1e-9 * expected, "got {f}");
    }

    #[test]
    fn local_cpu_rejects_overspent_energy() {
        let err = optimal_local_cpu(2.0, 2.1, 5e7, 1e-27, 1e9).unwrap_err();
        assert_eq!(err, ComputeError::InfeasibleEnergy { e_c: 2.1, e_max: 2.0 });
    }

    #[test]
    fn local_cpu_beats_grid() {
        let (e_max, w, kappa, f_max) = (2.0, 5e7, 1e-27, 1e9);
        for e_c in [0.0, 1.2, 1.9995, 1.9999995] {
            let best = optimal_local_cpu(e_max, e_c, w, kappa, f_max).unwrap();
            let t_best = w / best;
            let grid_points = 1000;
            for i in 1..=grid_points {
                let f = f_max * i as f64 / grid_points as f64;
                if kappa * f * f * w <= e_max - e_c {
                    assert!(w / f >= t_best - 1e-12, "grid point {f} beats closed form");
                }
            }
        }
    }

    #[test]
    fn symmetric_two_user_split() {
        // Two identical users: half the budget each, t = 0.05 + 5.625e8/1e10.
        let out = solve_edge_allocation(&[0.05, 0.05], &[5.625e8, 5.625e8], 2e10);
        assert!((out.f_s[0] - 1e10).abs() <= 1.0);
        assert!((out.f_s[1] - 1e10).abs() <= 1.0);
        assert!((out.t - 0.10625).abs() <= 1e-12);
    }

    #[test]
    fn asymmetric_loads_waterlevel() {
        // Second user carries 1/4 the pixels: loads 5.625e8 and 1.40625e8.
        let out = solve_edge_allocation(&[0.05, 0.05], &[5.625e8, 1.40625e8], 2e10);
        assert!((out.t - 0.08515625).abs() <= 1e-12, "t = {}", out.t);
        assert!((out.f_s[0] - 1.6e10).abs() <= 1.0);
        assert!((out.f_s[1] - 4e9).abs() <= 1.0);
    }

    #[test]
    fn solution_passes_its_own_certificate() {
        let a = [0.04, 0.07, 0.055];
        let loads = [5.625e8, 2.8e8, 9.1e8];
        let out = solve_edge_allocation(&a, &loads, 2e10);
        let report = verify_kkt(&out.f_s, out.t, &out.duals, &a, &loads, 2e10);
        assert!(report.pass, "report: {report:?}");
        assert!(report.latency_spread <= 1e-9);
        let budget: f64 = out.f_s.iter().sum();
        assert!((budget - 2e10).abs() <= 1e-12 * 2e10);
    }

    #[test]
    fn perturbed_shares_fail_equal_latency() {
        let a = [0.05, 0.05];
        let loads = [5.625e8, 5.625e8];
        let out = solve_edge_allocation(&a, &loads, 2e10);
        let mut f_s = out.f_s.clone();
        f_s[0] *= 1.01;
        f_s[1] *= 0.99;
        let report = verify_kkt(&f_s, out.t, &out.duals, &a, &loads, 2e10);
        assert!(!report.pass);
        assert!(report.latency_spread > 1e-6, "spread {}", report.latency_spread);
    }

    #[test]
    fn denormalized_duals_fail() {
        let a = [0.05, 0.05];
        let loads = [5.625e8, 5.625e8];
        let out = solve_edge_allocation(&a, &loads, 2e10);
        let mut duals = out.duals.clone();
        duals.a1[0] *= 0.8; // sum a1 = 0.9
        let report = verify_kkt(&out.f_s, out.t, &duals, &a, &loads, 2e10);
        assert!(!report.pass);
        assert!(report.normalization > 1e-6);
    }

    #[test]
    fn single_user_gets_everything() {
        let out = solve_edge_allocation(&[0.1], &[5.625e8], 2e10);
        assert!((out.f_s[0] - 2e10).abs() <= 1e-3);
        assert!((out.t - (0.1 + 5.625e8 / 2e10)).abs() <= 1e-12);
        assert!((out.duals.a1[0] - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn proportionality_at_equal_prefixes() {
        // Equal prefixes: shares scale as d sqrt(c) does, i.e. sqrt(load).
        let loads = [4e8, 1e8];
        let out = solve_edge_allocation(&[0.05, 0.05], &loads, 1e10);
        // Equal prefixes make the ratio follow the loads directly.
        assert!((out.f_s[0] / out.f_s[1] - 4.0).abs() <= 1e-9);
    }
}
