use starlat::{gen_channels, run_baseline, run_fdma, run_sdma, BaselineScheme, ScenarioParams, SolverCfg};
use std::time::Instant;

fn main() {
    let params = ScenarioParams::default();
    let cfg = SolverCfg::default();
    for seed in [1u64, 2, 3] {
        let ch = gen_channels(&params, seed).unwrap();
        let t0 = Instant::now();
        let r = run_sdma(&params, &ch, &cfg).unwrap();
        let dt_s = t0.elapsed().as_secs_f64();
        let t0 = Instant::now();
        let rf = run_fdma(&params, &ch, &cfg).unwrap();
        let dt_f = t0.elapsed().as_secs_f64();
        let t0 = Instant::now();
        let rb = run_baseline(&params, &ch, BaselineScheme::RandomPhase, &cfg).unwrap();
        let dt_b = t0.elapsed().as_secs_f64();
        println!(
            "seed {seed}: sdma {:.3}s ({} it, {:?}, t={:.6}) fdma {:.3}s ({} it, {:?}, t={:.6}) rand {:.3}s (t={:.6})",
            dt_s, r.iterations, r.status, r.alloc.t,
            dt_f, rf.iterations, rf.status, rf.alloc.t,
            dt_b, rb.alloc.t
        );
    }
}
