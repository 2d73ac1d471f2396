use starlat::optimizer::{run_fdma, run_sdma, SolverCfg};
use starlat::oracle::{brute_force, GridSpec};
use starlat::perf::AccessMode;
use starlat::scenario::{gen_channels, ScenarioParams};

fn main() {
    let params = ScenarioParams::with_users(1, 1, 2);
    for seed in [7u64, 1] {
        let ch = gen_channels(&params, seed).unwrap();
        println!("=== seed {seed} ===");
        for mode in [AccessMode::Sdma, AccessMode::Fdma] {
            let res = brute_force(&params, &ch, mode, &GridSpec::default()).unwrap();
            println!(
                "oracle {mode:?}: t*={:.6} p={:?} b={:?}",
                res.t, res.p, res.b
            );
            println!(
                "  gamma_r={:?} theta_r={:?} theta_t={:?}",
                res.star.gamma_r, res.star.theta_r, res.star.theta_t
            );
            let opt = match mode {
                AccessMode::Sdma => run_sdma(&params, &ch, &SolverCfg::default()),
                AccessMode::Fdma => run_fdma(&params, &ch, &SolverCfg::default()),
            }
            .unwrap();
            println!(
                "opt    {mode:?}: t={:.6} status={:?} iters={} p={:?} b={:?}",
                opt.alloc.t, opt.status, opt.iterations, opt.alloc.p, opt.alloc.b
            );
            println!(
                "  gamma_r={:?} theta_r={:?} theta_t={:?}",
                opt.star.gamma_r, opt.star.theta_r, opt.star.theta_t
            );
            let tr: Vec<f64> = opt.trace.iter().map(|r| (r.t * 1e4).round() / 1e4).collect();
            println!("  trace={tr:?}");
        }
    }
}
