//! Property tests of the rate models: the concave surrogate never exceeds the
//! exact interference rate, touches it after an auxiliary refresh, and both
//! models respond to power and bandwidth the way the formulas demand.

use proptest::prelude::*;
use starlat::perf::{
    fdma_rate_from_gains, sdma_rate_from_gains, surrogate_rate_from_gains, update_y_from_gains,
};

const BANDWIDTH: f64 = 5e7;
const NOISE_PSD: f64 = 1e-13;
const TIGHT_EPS: f64 = 1e-9;
/// Natural rate unit `B / ln 2`; log terms carry absolute rounding of a few
/// ulps, so comparisons are made relative to this scale once rates fall
/// below it (near-zero SINR draws).
const RATE_SCALE: f64 = BANDWIDTH / std::f64::consts::LN_2;

/// Per-user (gain, power, auxiliary) draws spanning the magnitudes the
/// scenario generator produces (gains around rho d^-iota, powers up to 1 W).
fn user_draws(k: usize) -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
    prop::collection::vec(
        (
            (-10.0f64..-4.0).prop_map(|e| 10f64.powf(e)),
            0.0f64..1.0,
            (0.0f64..9.0).prop_map(|e| 10f64.powf(e)),
        ),
        k,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn surrogate_never_exceeds_exact_rate(draws in (1usize..5).prop_flat_map(user_draws)) {
        let gains: Vec<f64> = draws.iter().map(|d| d.0).collect();
        let p: Vec<f64> = draws.iter().map(|d| d.1).collect();
        let y: Vec<f64> = draws.iter().map(|d| d.2).collect();
        let exact = sdma_rate_from_gains(&p, &gains, BANDWIDTH, NOISE_PSD);
        let surr = surrogate_rate_from_gains(&p, &gains, &y, BANDWIDTH, NOISE_PSD).unwrap();
        for u in 0..gains.len() {
            prop_assert!(
                surr[u] <= exact[u] + TIGHT_EPS * exact[u].abs().max(RATE_SCALE),
                "user {u}: surrogate {} above exact {}",
                surr[u],
                exact[u]
            );
        }
    }

    #[test]
    fn surrogate_is_tight_after_auxiliary_refresh(draws in (1usize..5).prop_flat_map(user_draws)) {
        let gains: Vec<f64> = draws.iter().map(|d| d.0).collect();
        let p: Vec<f64> = draws.iter().map(|d| d.1).collect();
        let y = update_y_from_gains(&p, &gains, BANDWIDTH, NOISE_PSD);
        let exact = sdma_rate_from_gains(&p, &gains, BANDWIDTH, NOISE_PSD);
        let surr = surrogate_rate_from_gains(&p, &gains, &y, BANDWIDTH, NOISE_PSD).unwrap();
        for u in 0..gains.len() {
            prop_assert!(
                (surr[u] - exact[u]).abs() <= TIGHT_EPS * exact[u].abs().max(RATE_SCALE),
                "user {u}: surrogate {} vs exact {}",
                surr[u],
                exact[u]
            );
        }
    }

    #[test]
    fn more_interference_never_helps(draws in (2usize..5).prop_flat_map(user_draws), bump in 0.01f64..0.5) {
        let gains: Vec<f64> = draws.iter().map(|d| d.0).collect();
        let mut p: Vec<f64> = draws.iter().map(|d| d.1).collect();
        let before = sdma_rate_from_gains(&p, &gains, BANDWIDTH, NOISE_PSD);
        p[1] += bump;
        let after = sdma_rate_from_gains(&p, &gains, BANDWIDTH, NOISE_PSD);
        prop_assert!(after[0] <= before[0] + 1e-12, "rate rose with interference");
        // The interferer itself only gains from its own extra power.
        prop_assert!(after[1] >= before[1] - 1e-12, "own rate fell with own power");
    }

    #[test]
    fn orthogonal_rate_scales_with_share(draws in (2usize..5).prop_flat_map(user_draws)) {
        let k = draws.len();
        let gains: Vec<f64> = draws.iter().map(|d| d.0).collect();
        let p: Vec<f64> = draws.iter().map(|d| d.1).collect();
        let even = vec![1.0 / k as f64; k];
        let mut tilted = even.clone();
        tilted[0] *= 0.5;
        tilted[1] += even[0] * 0.5;
        let r_even = fdma_rate_from_gains(&p, &even, &gains, BANDWIDTH, NOISE_PSD);
        let r_tilt = fdma_rate_from_gains(&p, &tilted, &gains, BANDWIDTH, NOISE_PSD);
        prop_assert!(r_tilt[0] <= r_even[0] + 1e-12, "rate rose after losing bandwidth");
        prop_assert!(r_tilt[1] >= r_even[1] - 1e-12, "rate fell after gaining bandwidth");
    }
}

#[test]
fn zero_share_means_zero_rate() {
    let gains = [1e-6, 2e-6];
    let p = [0.8, 0.3];
    let r = fdma_rate_from_gains(&p, &[0.0, 1.0], &gains, BANDWIDTH, NOISE_PSD);
    assert_eq!(r[0], 0.0);
    assert!(r[1] > 0.0);
}

#[test]
fn auxiliary_refresh_matches_hand_formula() {
    // y_u = 1 / (interference + noise); two users, noise = B * N0 = 5e-6.
    let gains = [4e-6, 1e-6];
    let p = [0.5, 0.8];
    let y = update_y_from_gains(&p, &gains, BANDWIDTH, NOISE_PSD);
    let noise = BANDWIDTH * NOISE_PSD;
    let expect0 = 1.0 / (p[1] * gains[1] + noise);
    let expect1 = 1.0 / (p[0] * gains[0] + noise);
    assert!((y[0] - expect0).abs() <= 1e-12 * expect0);
    assert!((y[1] - expect1).abs() <= 1e-12 * expect1);
}
