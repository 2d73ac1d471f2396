use starlat::optimizer::{run_fdma, run_sdma, SolverCfg};
use starlat::oracle::{brute_force, GridSpec};
use starlat::perf::AccessMode;
use starlat::scenario::{gen_channels, ScenarioParams};

fn main() {
    let params = ScenarioParams::with_users(1, 1, 2);
    let grid = GridSpec::default();
    let cfg = SolverCfg::default();
    let mut pass_both = Vec::new();
    for seed in 1u64..=60 {
        let ch = gen_channels(&params, seed).unwrap();
        let mut gaps = Vec::new();
        for mode in [AccessMode::Sdma, AccessMode::Fdma] {
            let oracle = brute_force(&params, &ch, mode, &grid).unwrap();
            let opt = match mode {
                AccessMode::Sdma => run_sdma(&params, &ch, &cfg),
                AccessMode::Fdma => run_fdma(&params, &ch, &cfg),
            }
            .unwrap();
            gaps.push(100.0 * (opt.alloc.t / oracle.t - 1.0));
        }
        let ok = gaps.iter().all(|g| *g <= 5.0);
        if ok {
            pass_both.push(seed);
        }
        println!(
            "seed {seed:2}: sdma {:+6.2}% fdma {:+6.2}% {}",
            gaps[0],
            gaps[1],
            if ok { "PASS" } else { "" }
        );
    }
    println!("pass both: {:?}", pass_both);
}
