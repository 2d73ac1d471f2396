use starlat::perf::{composite_gains, StarConfig};
use starlat::scenario::{gen_channels, ScenarioParams};

fn main() {
    let params = ScenarioParams::with_users(1, 1, 2);
    for seed in [7u64, 1, 2, 3, 4] {
        let ch = gen_channels(&params, seed).unwrap();
        println!("=== seed {seed} ===");
        for k in 0..2 {
            let d_bs = ((ch.user_pos[k][0] - params.bs_pos[0]).powi(2)
                + (ch.user_pos[k][1] - params.bs_pos[1]).powi(2))
            .sqrt();
            let d_ris = ((ch.user_pos[k][0] - params.ris_pos[0]).powi(2)
                + (ch.user_pos[k][1] - params.ris_pos[1]).powi(2))
            .sqrt();
            let casc: f64 = (0..params.n)
                .map(|e| (ch.h_r[e].conj() * ch.h_i[k][e]).norm())
                .sum();
            println!(
                "user {k} side {:?} pos ({:.2},{:.2}) d_bs {:.2} d_ris {:.3} |h_d|^2 {:.3e} |h_d| {:.3e} casc_amp_sum {:.3e}",
                ch.sides[k], ch.user_pos[k][0], ch.user_pos[k][1], d_bs, d_ris,
                ch.h_d[k].norm_sqr(), ch.h_d[k].norm(), casc
            );
        }
        let g = composite_gains(&StarConfig::uniform_split(params.n), &ch);
        println!("composite at init: {:.4e} {:.4e} ratio {:.1}", g[0], g[1], g[0] / g[1]);
    }
}
