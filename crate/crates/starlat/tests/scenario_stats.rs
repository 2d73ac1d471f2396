//! Statistical calibration of the channel generator and end-to-end checks of
//! the lifted quadratic form it hands to the coefficient block.
//!
//! The fading model is Rician: each link is
//! `sqrt(rho d^-iota) (sqrt(s/(s+1)) + sqrt(1/(s+1)) g)` with `g` standard
//! complex normal, so the second moment is exactly `rho d^-iota` and the mean
//! is the deterministic line-of-sight part. Both moments are checked by Monte
//! Carlo over many seeds.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use starlat::linalg::quad_form;
use starlat::perf::composite_gains;
use starlat::scenario::{gen_channels, lift_channel, ScenarioParams, Side};
use starlat::StarConfig;

const MC_SEEDS: u64 = 100_000;
const MC_TOL: f64 = 0.02;

/// Two users pinned at known positions so path loss is exact; the statistics
/// below read user 0 at (9, 1).
fn pinned_single_user() -> ScenarioParams {
    let mut params = ScenarioParams::with_users(1, 1, 1);
    params.user_pos = vec![[9.0, 1.0], [11.0, 1.0]];
    params
}

#[test]
fn direct_gain_mean_matches_path_loss() {
    let params = pinned_single_user();
    // Distance user (9,1) to BS (0,10): sqrt(81 + 81).
    let d = 162f64.sqrt();
    let expected = params.rho * d.powf(-params.iota_d);

    let mut acc = 0.0;
    for seed in 0..MC_SEEDS {
        let ch = gen_channels(&params, seed).unwrap();
        acc += ch.h_d[0].norm_sqr();
    }
    let mean = acc / MC_SEEDS as f64;
    assert!(
        (mean / expected - 1.0).abs() <= MC_TOL,
        "mean |h_d|^2 = {mean:.6e}, path-loss value {expected:.6e}"
    );
}

#[test]
fn line_of_sight_component_sets_the_mean() {
    let params = pinned_single_user();
    let d = 162f64.sqrt();
    let scale = (params.rho * d.powf(-params.iota_d)).sqrt();
    let los = scale * (params.rician / (params.rician + 1.0)).sqrt();

    let mut acc = Complex64::new(0.0, 0.0);
    for seed in 0..MC_SEEDS {
        let ch = gen_channels(&params, seed).unwrap();
        acc += ch.h_d[0];
    }
    let mean = acc / MC_SEEDS as f64;
    assert!(
        (mean.re / los - 1.0).abs() <= MC_TOL,
        "Re mean h_d = {:.6e}, line-of-sight part {los:.6e}",
        mean.re
    );
    assert!(
        mean.im.abs() <= MC_TOL * los,
        "Im mean h_d = {:.6e} not near zero",
        mean.im
    );
}

#[test]
fn scattered_power_fraction_matches_rician_factor() {
    // With factor s, the scattered part carries 1/(s+1) of the link power.
    let params = pinned_single_user();
    let d = 162f64.sqrt();
    let scale = (params.rho * d.powf(-params.iota_d)).sqrt();
    let los = Complex64::new(scale * (params.rician / (params.rician + 1.0)).sqrt(), 0.0);
    let expected_var = scale * scale / (params.rician + 1.0);

    let mut acc = 0.0;
    for seed in 0..MC_SEEDS {
        let ch = gen_channels(&params, seed).unwrap();
        acc += (ch.h_d[0] - los).norm_sqr();
    }
    let var = acc / MC_SEEDS as f64;
    assert!(
        (var / expected_var - 1.0).abs() <= MC_TOL,
        "scattered power {var:.6e}, expected {expected_var:.6e}"
    );
}

#[test]
fn sampled_positions_respect_sides_and_squares() {
    let params = ScenarioParams::default();
    for seed in 0..100 {
        let ch = gen_channels(&params, seed).unwrap();
        assert_eq!(ch.user_pos.len(), params.k_r + params.k_t);
        let mut n_r = 0;
        let mut n_t = 0;
        for (pos, side) in ch.user_pos.iter().zip(&ch.sides) {
            let [x, y] = *pos;
            assert!((0.0..=2.0).contains(&y), "y = {y} outside [0, 2]");
            match side {
                Side::Reflection => {
                    n_r += 1;
                    assert!((8.0..10.0).contains(&x), "reflection user at x = {x}");
                }
                Side::Transmission => {
                    n_t += 1;
                    assert!((10.0..=12.0).contains(&x) && x > 10.0, "transmission user at x = {x}");
                }
            }
        }
        assert_eq!((n_r, n_t), (params.k_r, params.k_t));
    }
}

/// Builds the lifted coefficient vector `[v; 1]` of one side of a config.
fn lifted_vector(star: &StarConfig, side: Side) -> DVector<Complex64> {
    let (gamma, theta) = match side {
        Side::Reflection => (&star.gamma_r, &star.theta_r),
        Side::Transmission => (&star.gamma_t, &star.theta_t),
    };
    let entries: Vec<Complex64> = gamma
        .iter()
        .zip(theta)
        .map(|(g, th)| Complex64::from_polar(g.sqrt(), *th))
        .chain(std::iter::once(Complex64::new(1.0, 0.0)))
        .collect();
    DVector::from_vec(entries)
}

#[test]
fn lifting_identity_links_gains_and_trace_form() {
    // |h_d + h_r^H Gamma h_i|^2 must equal v_hat^H H v_hat for every config.
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for n in 1..=8usize {
        let params = ScenarioParams::with_users(1, 1, n);
        for round in 0..12 {
            let ch = gen_channels(&params, 500 + round + 13 * n as u64).unwrap();
            let mut star = StarConfig::uniform_split(n);
            for e in 0..n {
                let g: f64 = rng.gen();
                star.gamma_r[e] = g;
                star.gamma_t[e] = 1.0 - g;
                star.theta_r[e] = rng.gen::<f64>() * std::f64::consts::TAU;
                star.theta_t[e] = rng.gen::<f64>() * std::f64::consts::TAU;
            }
            let gains = composite_gains(&star, &ch);
            for k in 0..2 {
                let (_, big_h) = lift_channel(&ch, k);
                let v_hat = lifted_vector(&star, ch.sides[k]);
                let trace_form = quad_form(big_h, &v_hat);
                assert!(
                    (gains[k] - trace_form).abs() <= 1e-10 * trace_form.abs().max(1e-300),
                    "n = {n}, user {k}: direct {:.15e} vs trace {:.15e}",
                    gains[k],
                    trace_form
                );
            }
        }
    }
}

#[test]
fn distinct_seeds_give_distinct_draws() {
    let params = ScenarioParams::default();
    let a = gen_channels(&params, 11).unwrap();
    let b = gen_channels(&params, 12).unwrap();
    assert!(a.h_d.iter().zip(&b.h_d).any(|(x, y)| x != y));
}
