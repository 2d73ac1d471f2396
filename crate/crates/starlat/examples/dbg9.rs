use starlat::optimizer::{run_fdma, run_sdma, SolverCfg};
use starlat::oracle::{brute_force, GridSpec};
use starlat::perf::AccessMode;
use starlat::scenario::{gen_channels, ScenarioParams};

fn main() {
    let params = ScenarioParams::with_users(1, 1, 2);
    let grid = GridSpec::default();
    let mut cfg = SolverCfg::default();
    cfg.outer_max_iters = 2000;
    cfg.outer_tol = 0.0;
    for seed in [7u64, 1, 2] {
        let ch = gen_channels(&params, seed).unwrap();
        for mode in [AccessMode::Sdma, AccessMode::Fdma] {
            let oracle = brute_force(&params, &ch, mode, &grid).unwrap();
            let opt = match mode {
                AccessMode::Sdma => run_sdma(&params, &ch, &cfg),
                AccessMode::Fdma => run_fdma(&params, &ch, &cfg),
            }
            .unwrap();
            let tr = &opt.trace;
            let probe: Vec<f64> = [49usize, 99, 199, 499, 999, 1999]
                .iter()
                .filter(|&&i| i < tr.len())
                .map(|&i| tr[i].t)
                .collect();
            println!(
                "seed {seed} {mode:?}: oracle {:.6} | iter50/100/200/500/1000/2000 {:?} | final gap {:+.2}%",
                oracle.t,
                probe.iter().map(|t| (t * 1e6).round() / 1e6).collect::<Vec<_>>(),
                100.0 * (opt.alloc.t / oracle.t - 1.0)
            );
        }
    }
}
