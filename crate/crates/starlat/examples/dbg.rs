use starlat::scenario::{gen_channels, ScenarioParams};
use starlat::optimizer::{run_baseline, run_sdma, run_fdma, BaselineScheme, SolverCfg};
use std::time::Instant;

fn main() {
    let params = ScenarioParams::default();
    for seed in [1u64, 2, 3] {
        let ch = gen_channels(&params, seed).unwrap();
        let cfg = SolverCfg::default();
        let t0 = Instant::now();
        let full = run_sdma(&params, &ch, &cfg).unwrap();
        let dt = t0.elapsed();
        println!("seed {seed}: sdma t = {:.5} s, status {:?}, iters {}, nu_final {:.1e}, wall {:?}",
            full.alloc.t, full.status, full.iterations, full.nu_final, dt);
        println!("  trace: {:?}", full.trace.iter().map(|r| (r.n, (r.t * 1e4).round() / 1e4)).collect::<Vec<_>>());
        println!("  residuals last: ({:.2e}, {:.2e})", full.trace.last().unwrap().rank_residual_r, full.trace.last().unwrap().rank_residual_t);
        let (wp, ws): (u64, u64) = full.trace.iter().fold((0, 0), |(p, s), r| (p + r.work.power, s + r.work.surface));
        println!("  work: power {wp}, surface {ws}");

        let t0 = Instant::now();
        let rnd = run_baseline(&params, &ch, BaselineScheme::RandomPhase, &cfg).unwrap();
        println!("  random-phase t = {:.5} ({:?}), wall {:?}", rnd.alloc.t, rnd.status, t0.elapsed());
        let t0 = Instant::now();
        let refl = run_baseline(&params, &ch, BaselineScheme::ReflectOnly, &cfg).unwrap();
        println!("  reflect-only t = {:.5} ({:?}), wall {:?}", refl.alloc.t, refl.status, t0.elapsed());
        let t0 = Instant::now();
        let fdma = run_fdma(&params, &ch, &cfg).unwrap();
        println!("  fdma t = {:.5} ({:?}), wall {:?}", fdma.alloc.t, fdma.status, t0.elapsed());
    }
}
