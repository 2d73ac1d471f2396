use starlat::perf::{composite_gains, surrogate_rate_from_gains, update_y_from_gains, StarConfig};
use starlat::power::{solve_sdma_power, PowerCfg, PowerProblem};
use starlat::scenario::{gen_channels, ScenarioParams};
use starlat::star::{run_algorithm1, LiftedCoeff, RateCoupling, StarCfg, StarProblem};

fn main() {
    let params = ScenarioParams::with_users(1, 1, 2);
    let ch = gen_channels(&params, 7).unwrap();
    let k = 2usize;
    let bits: Vec<f64> = (0..k).map(|u| params.beta * (params.pixels[u] as f64).powi(2)).collect();
    let cycles: Vec<f64> = (0..k).map(|u| bits[u] * params.cycles_per_bit[u]).collect();
    let f_l: Vec<f64> = params.f_max.clone();
    let f_s: Vec<f64> = vec![params.f_edge / k as f64; k];
    let star = StarConfig::uniform_split(params.n);
    let gains = composite_gains(&star, &ch);
    let p = params.p_max.clone();
    let y = update_y_from_gains(&p, &gains, params.bandwidth, params.noise_psd);

    let prefix: Vec<f64> = (0..k).map(|u| params.work[u] / f_l[u] + cycles[u] / f_s[u]).collect();
    let headroom: Vec<f64> = (0..k)
        .map(|u| params.e_max[u] - params.kappa * f_l[u] * f_l[u] * params.work[u])
        .collect();

    // Power block exactly as the outer loop runs it.
    let power_prob = PowerProblem {
        gains: &gains,
        prefix: &prefix,
        load: &bits,
        headroom: &headroom,
        p_max: &params.p_max,
        bandwidth: params.bandwidth,
        noise_psd: params.noise_psd,
    };
    let psol = solve_sdma_power(&power_prob, &y, &p, &PowerCfg::default()).unwrap();
    let p = psol.p.clone();
    println!("power block: p={:?} t_surr={:.6}", p, psol.t);

    let rate_floor: Vec<f64> = (0..k).map(|u| bits[u] * p[u] / headroom[u]).collect();
    let sub_obj = |g: &[f64]| -> f64 {
        let rates = surrogate_rate_from_gains(&p, g, &y, params.bandwidth, params.noise_psd).unwrap();
        let mut t = 0.0f64;
        for u in 0..k {
            if rates[u] < rate_floor[u] || rates[u] <= 0.0 {
                return f64::INFINITY;
            }
            t = t.max(prefix[u] + bits[u] / rates[u]);
        }
        t
    };

    // Star block as the outer loop runs it.
    let prob = StarProblem {
        ch: &ch,
        bandwidth: params.bandwidth,
        noise_psd: params.noise_psd,
        prefix: prefix.clone(),
        load: bits.clone(),
        rate_floor: rate_floor.clone(),
        coupling: RateCoupling::Surrogate { p: p.clone(), y: y.clone() },
    };
    let lifted = LiftedCoeff::from_config(&star);
    let coupling = starlat::star::AmplitudeCoupling::EnergySplit;
    match run_algorithm1(&prob, &lifted, &coupling, &StarCfg::default(), params.penalty_init) {
        Ok((v, state)) => {
            println!("alg1: residuals=({:.3e},{:.3e}) iters={} stages={}",
                state.residual_r, state.residual_t, state.iterations, state.stages.len());
            match starlat::star::extract_rank_one(&v, StarCfg::default().rank_tol) {
                Ok(cand) => {
                    let g = composite_gains(&cand, &ch);
                    println!("alg1 config: gamma_r={:?}", cand.gamma_r);
                    println!("alg1 subproblem objective: {:.6}", sub_obj(&g));
                }
                Err(e) => println!("extract failed: {e}"),
            }
        }
        Err(e) => println!("alg1 failed: {e}"),
    }
    let g0 = composite_gains(&star, &ch);
    println!("incumbent objective: {:.6}", sub_obj(&g0));

    // Grid solve of the same subproblem.
    let amps: Vec<f64> = (0..11).map(|i| i as f64 / 10.0).collect();
    let phases: Vec<f64> = (0..16).map(|i| 2.0 * std::f64::consts::PI * i as f64 / 16.0).collect();
    let mut best = f64::INFINITY;
    let mut best_cfg = star.clone();
    let mut cand = star.clone();
    for &a0 in &amps {
        for &a1 in &amps {
            cand.gamma_r = vec![a0, a1];
            cand.gamma_t = vec![1.0 - a0, 1.0 - a1];
            for &tr0 in &phases {
                for &tr1 in &phases {
                    cand.theta_r = vec![tr0, tr1];
                    for &tt0 in &phases {
                        for &tt1 in &phases {
                            cand.theta_t = vec![tt0, tt1];
                            let g = composite_gains(&cand, &ch);
                            let t = sub_obj(&g);
                            if t < best {
                                best = t;
                                best_cfg = cand.clone();
                            }
                        }
                    }
                }
            }
        }
    }
    println!("grid best objective: {:.6}", best);
    println!("grid best gamma_r={:?} theta_r={:?} theta_t={:?}",
        best_cfg.gamma_r, best_cfg.theta_r, best_cfg.theta_t);

}
