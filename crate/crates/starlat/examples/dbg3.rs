use starlat::optimizer::{run_fdma, run_sdma, SolverCfg};
use starlat::oracle::{brute_force, GridSpec};
use starlat::perf::AccessMode;
use starlat::scenario::{gen_channels, ScenarioParams};
use std::time::Instant;

fn main() {
    let params = ScenarioParams::with_users(1, 1, 2);
    let grid = GridSpec::default();
    for seed in [7u64, 1, 2, 3, 4] {
        let ch = gen_channels(&params, seed).unwrap();
        for mode in [AccessMode::Sdma, AccessMode::Fdma] {
            let t0 = Instant::now();
            let res = brute_force(&params, &ch, mode, &grid);
            let oracle_wall = t0.elapsed().as_secs_f64();
            let t1 = Instant::now();
            let opt = match mode {
                AccessMode::Sdma => run_sdma(&params, &ch, &SolverCfg::default()),
                AccessMode::Fdma => run_fdma(&params, &ch, &SolverCfg::default()),
            };
            let opt_wall = t1.elapsed().as_secs_f64();
            match (&res, &opt) {
                (Ok(r), Ok(o)) => {
                    let gap = (o.alloc.t - r.t) / r.t * 100.0;
                    println!(
                        "seed {seed} {mode:?}: oracle t*={:.6} ({:.2}s, {} evals) opt t={:.6} ({:.2}s) gap {gap:+.2}%",
                        r.t, oracle_wall, r.evaluations, o.alloc.t, opt_wall
                    );
                }
                (r, o) => println!(
                    "seed {seed} {mode:?}: oracle {:?} opt {:?}",
                    r.as_ref().map(|x| x.t),
                    o.as_ref().map(|x| x.alloc.t)
                ),
            }
        }
    }
}
