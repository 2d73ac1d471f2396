use starlat::perf::{composite_gains, update_y_from_gains, StarConfig};
use starlat::power::{solve_sdma_power, PowerCfg, PowerProblem};
use starlat::scenario::{gen_channels, ScenarioParams};
use starlat::star::{
    run_algorithm1, AmplitudeCoupling, LiftedCoeff, RateCoupling, StarCfg, StarProblem,
};
use std::time::Instant;

fn main() {
    let params = ScenarioParams::default();
    let ch = gen_channels(&params, 1).unwrap();
    let k = params.k();
    let n = params.n;

    let bits: Vec<f64> = (0..k)
        .map(|u| params.beta * (params.pixels[u] as f64).powi(2))
        .collect();
    let prefix: Vec<f64> = (0..k)
        .map(|u| {
            params.work[u] / params.f_max[u]
                + bits[u] * params.cycles_per_bit[u] / (params.f_edge / k as f64)
        })
        .collect();
    let headroom: Vec<f64> = (0..k)
        .map(|u| params.e_max[u] - params.kappa * params.f_max[u].powi(2) * params.work[u])
        .collect();

    let star = StarConfig::uniform_split(n);
    let gains = composite_gains(&star, &ch);
    let p0 = params.p_max.clone();
    let y = update_y_from_gains(&p0, &gains, params.bandwidth, params.noise_psd);

    let pw = solve_sdma_power(
        &PowerProblem {
            gains: &gains,
            prefix: &prefix,
            load: &bits,
            headroom: &headroom,
            p_max: &params.p_max,
            bandwidth: params.bandwidth,
            noise_psd: params.noise_psd,
        },
        &y,
        &p0,
        &PowerCfg::default(),
    )
    .unwrap();
    println!("power block: t = {:.5}, work {}", pw.t, pw.work);

    let rate_floor: Vec<f64> = (0..k).map(|u| bits[u] * pw.p[u] / headroom[u]).collect();
    let prob = StarProblem {
        ch: &ch,
        bandwidth: params.bandwidth,
        noise_psd: params.noise_psd,
        prefix: prefix.clone(),
        load: bits.clone(),
        rate_floor,
        coupling: RateCoupling::Surrogate { p: pw.p.clone(), y: y.clone() },
    };
    let lifted = LiftedCoeff::from_config(&star);
    let cfg = StarCfg { alg1_max_iters: 30, ..StarCfg::default() };
    let t0 = Instant::now();
    match run_algorithm1(
        &prob,
        &lifted,
        &AmplitudeCoupling::EnergySplit,
        &cfg,
        params.penalty_init,
    ) {
        Ok((_, state)) => {
            println!(
                "alg1: {} iterates, work {}, wall {:?}, residuals ({:.2e}, {:.2e})",
                state.iterations,
                state.work,
                t0.elapsed(),
                state.residual_r,
                state.residual_t
            );
            for s in &state.stages {
                let first = s.objective.first().unwrap();
                let last = s.objective.last().unwrap();
                println!(
                    "  stage nu={:.0e}: {} iterates, obj {:.6} -> {:.6}",
                    s.nu,
                    s.objective.len() - 1,
                    first,
                    last
                );
            }
        }
        Err(e) => println!("alg1 error: {e}"),
    }
}
