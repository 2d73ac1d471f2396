use starlat::perf::{
    composite_gains, sdma_rate_from_gains, surrogate_rate_from_gains, update_y_from_gains,
    StarConfig,
};
use starlat::power::{solve_sdma_power, PowerCfg, PowerProblem};
use starlat::scenario::{gen_channels, ScenarioParams};

fn main() {
    let params = ScenarioParams::with_users(1, 1, 2);
    let ch = gen_channels(&params, 7).unwrap();
    let k = 2usize;
    let bits: Vec<f64> = (0..k)
        .map(|u| params.beta * params.pixels[u] * params.pixels[u])
        .collect();
    let cycles: Vec<f64> = (0..k).map(|u| bits[u] * params.cycles_per_bit[u]).collect();
    let f_l = params.f_max.clone();
    let f_s = vec![params.f_edge / k as f64; k];
    let prefix: Vec<f64> = (0..k)
        .map(|u| params.work[u] / f_l[u] + cycles[u] / f_s[u])
        .collect();
    let headroom: Vec<f64> = (0..k)
        .map(|u| params.e_max[u] - params.kappa * f_l[u] * f_l[u] * params.work[u])
        .collect();
    let star = StarConfig::uniform_split(params.n);
    let gains = composite_gains(&star, &ch);
    let p0 = params.p_max.clone();
    let y = update_y_from_gains(&p0, &gains, params.bandwidth, params.noise_psd);
    println!("gains={gains:?} prefix={prefix:?} headroom={headroom:?} y={y:?}");

    let prob = PowerProblem {
        gains: &gains,
        prefix: &prefix,
        load: &bits,
        headroom: &headroom,
        p_max: &params.p_max,
        bandwidth: params.bandwidth,
        noise_psd: params.noise_psd,
    };
    let sol = solve_sdma_power(&prob, &y, &p0, &PowerCfg::default()).unwrap();
    println!("solver: p={:?} t={:.6} work={}", sol.p, sol.t, sol.work);

    // Fine grid over the power box: surrogate and true objectives.
    let eval = |p: &[f64], surrogate: bool| -> f64 {
        let rates = if surrogate {
            surrogate_rate_from_gains(p, &gains, &y, params.bandwidth, params.noise_psd).unwrap()
        } else {
            sdma_rate_from_gains(p, &gains, params.bandwidth, params.noise_psd)
        };
        let mut t = 0.0f64;
        for u in 0..k {
            if rates[u] <= 0.0 || p[u] * bits[u] / rates[u] > headroom[u] {
                return f64::INFINITY;
            }
            t = t.max(prefix[u] + bits[u] / rates[u]);
        }
        t
    };
    for surrogate in [true, false] {
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for i in 1..=200 {
            for j in 1..=200 {
                let p = [i as f64 / 200.0, j as f64 / 200.0];
                let t = eval(&p, surrogate);
                if t < best.0 {
                    best = (t, p[0], p[1]);
                }
            }
        }
        println!(
            "{} grid best: t={:.6} at p=({:.3}, {:.3})",
            if surrogate { "surrogate" } else { "true     " },
            best.0,
            best.1,
            best.2
        );
    }

    // Iterated power/auxiliary alternation at frozen prefixes and gains.
    let mut p = p0.clone();
    let mut yy = y.clone();
    for round in 1..=400 {
        let sol = solve_sdma_power(&prob, &yy, &p, &PowerCfg::default()).unwrap();
        p = sol.p;
        yy = update_y_from_gains(&p, &gains, params.bandwidth, params.noise_psd);
        if round % 25 == 0 || round <= 5 {
            println!("round {round}: p=({:.4}, {:.4}) true t={:.6}", p[0], p[1], eval(&p, false));
        }
    }
}

// Trailing experiment runner is appended by build script edits during
// debugging; see main above.
