//! Network geometry, user-side assignment, and seeded Rician channel draws.
//!
//! The base station sits on one side of the STAR-RIS plane (the vertical line
//! through the surface position); users with x-coordinate below that line are
//! served by the reflected beam, users beyond it by the transmitted one. Every
//! link (user-BS, user-RIS, RIS-BS) is Rician: a deterministic line-of-sight
//! part plus a circularly-symmetric complex Gaussian part, scaled by a
//! distance power law. All randomness is driven by `ChaCha8` streams keyed on
//! the caller's seed, so a `(params, seed)` pair always yields bit-identical
//! realizations.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Which STAR-RIS mode serves a user.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Reflection,
    Transmission,
}

/// Static system constants: population, radio, compute, and geometry.
///
/// Per-user vectors (`work`, `pixels`, ...) are indexed consistently with
/// `user_pos`: reflection-side users first, then transmission-side users, in
/// generation order.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScenarioParams {
    /// Number of reflection-side users.
    pub k_r: usize,
    /// Number of transmission-side users.
    pub k_t: usize,
    /// Number of STAR-RIS elements.
    pub n: usize,
    /// System bandwidth (Hz).
    pub bandwidth: f64,
    /// Noise power spectral density (W/Hz); noise power is `bandwidth * noise_psd`.
    pub noise_psd: f64,
    /// Bits carried per pixel.
    pub beta: f64,
    /// Effective-capacitance constant of the user CPUs (J*s^2/cycle^3).
    pub kappa: f64,
    /// Initial rank-one penalty factor for the coefficient block.
    pub penalty_init: f64,
    /// Total edge CPU frequency at the BS (cycles/s).
    pub f_edge: f64,
    /// Local conversion workload per user (cycles).
    pub work: Vec<f64>,
    /// Frame resolution per user (pixels per side; a frame is `pixels^2`).
    pub pixels: Vec<f64>,
    /// Edge CPU cycles needed per uploaded bit.
    pub cycles_per_bit: Vec<f64>,
    /// Local CPU frequency cap per user (cycles/s).
    pub f_max: Vec<f64>,
    /// Transmit power cap per user (W).
    pub p_max: Vec<f64>,
    /// Energy budget per user (J).
    pub e_max: Vec<f64>,
    /// Base-station position (m).
    pub bs_pos: [f64; 2],
    /// STAR-RIS position (m).
    pub ris_pos: [f64; 2],
    /// User positions (m); empty means "sample them from the seed".
    pub user_pos: Vec<[f64; 2]>,
    /// Path loss at unit distance (linear).
    pub rho: f64,
    /// Path-loss exponent of the direct user-BS links.
    pub iota_d: f64,
    /// Path-loss exponent of the user-RIS links.
    pub iota_i: f64,
    /// Path-loss exponent of the RIS-BS link.
    pub iota_r: f64,
    /// Rician factor (line-of-sight to scattered power ratio).
    pub rician: f64,
}

/// Per-user mode assignment derived from geometry.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SideAssignment {
    pub sides: Vec<Side>,
}

/// One fading draw plus its lifted quadratic form.
///
/// `h_hat[k]` stacks the element-wise product of the RIS-BS channel with the
/// conjugated user-RIS channel on top of the conjugated direct channel, so
/// that for any coefficient vector `v` (entries `sqrt(gamma_n) e^{i theta_n}`)
/// and its lifted extension `v_hat = [v; 1]`,
///
/// ```text
/// |h_d + h_r^H diag(v) h_i|^2 = v_hat^H H v_hat = tr(V H),   V = v_hat v_hat^H.
/// ```
///
/// `big_h[k] = h_hat[k] h_hat[k]^H` is Hermitian PSD with rank one.
#[derive(Clone, Debug)]
pub struct ChannelRealization {
    pub seed: u64,
    /// Positions actually used (sampled ones if `params.user_pos` was empty).
    pub user_pos: Vec<[f64; 2]>,
    pub sides: Vec<Side>,
    /// Direct user-BS channel, one scalar per user.
    pub h_d: Vec<Complex64>,
    /// User-RIS channel, one N-vector per user.
    pub h_i: Vec<Vec<Complex64>>,
    /// RIS-BS channel, one N-vector shared by all users.
    pub h_r: Vec<Complex64>,
    /// Lifted channel vector per user (length N+1).
    pub h_hat: Vec<DVector<Complex64>>,
    /// Rank-one Hermitian matrix `h_hat h_hat^H` per user.
    pub big_h: Vec<DMatrix<Complex64>>,
}

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("user {user} lies exactly on the RIS plane (x = {x})")]
    BoundaryUser { user: usize, x: f64 },
    #[error("side counts (reflection {got_r}, transmission {got_t}) do not match declared K_r = {expected_r}, K_t = {expected_t}")]
    CountMismatch {
        expected_r: usize,
        expected_t: usize,
        got_r: usize,
        got_t: usize,
    },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

/// RNG stream id for position sampling.
const STREAM_POSITIONS: u64 = 1;
/// RNG stream id for fading draws.
const STREAM_FADING: u64 = 2;

impl Default for ScenarioParams {
    /// Dense default scenario: 5 users per side, 16 surface elements,
    /// 50 MHz band, 20 GHz edge CPU, 150 px frames, 1 W / 2 J / 1 GHz user caps.
    fn default() -> Self {
        Self::with_users(5, 5, 16)
    }
}

impl ScenarioParams {
    /// Default per-user constants replicated for `k_r + k_t` users and `n`
    /// surface elements. Positions are left empty (seed-sampled).
    pub fn with_users(k_r: usize, k_t: usize, n: usize) -> Self {
        let k = k_r + k_t;
        ScenarioParams {
            k_r,
            k_t,
            n,
            bandwidth: 5e7,
            noise_psd: 1e-13,
            beta: 25.0,
            kappa: 1e-27,
            penalty_init: 1e-5,
            f_edge: 2e10,
            work: vec![5e7; k],
            pixels: vec![150.0; k],
            cycles_per_bit: vec![1000.0; k],
            f_max: vec![1e9; k],
            p_max: vec![1.0; k],
            e_max: vec![2.0; k],
            bs_pos: [0.0, 10.0],
            ris_pos: [10.0, 0.0],
            user_pos: Vec::new(),
            rho: 1e-3,
            iota_d: 3.0,
            iota_i: 2.0,
            iota_r: 2.0,
            rician: 3.0,
        }
    }

    /// Total user count.
    pub fn k(&self) -> usize {
        self.k_r + self.k_t
    }

    /// Checks counts, positivity, vector lengths, and position distinctness.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let fail = |msg: String| Err(ScenarioError::InvalidParams(msg));
        if self.k_r < 1 || self.k_t < 1 || self.n < 1 {
            return fail(format!(
                "counts must be >= 1 (K_r = {}, K_t = {}, N = {})",
                self.k_r, self.k_t, self.n
            ));
        }
        let k = self.k();
        let positives: [(&str, f64); 8] = [
            ("bandwidth", self.bandwidth),
            ("noise_psd", self.noise_psd),
            ("beta", self.beta),
            ("kappa", self.kappa),
            ("penalty_init", self.penalty_init),
            ("f_edge", self.f_edge),
            ("rho", self.rho),
            ("rician", self.rician),
        ];
        for (name, v) in positives {
            if !(v > 0.0) || !v.is_finite() {
                return fail(format!("{name} must be finite and > 0 (got {v})"));
            }
        }
        let per_user: [(&str, &Vec<f64>); 6] = [
            ("work", &self.work),
            ("pixels", &self.pixels),
            ("cycles_per_bit", &self.cycles_per_bit),
            ("f_max", &self.f_max),
            ("p_max", &self.p_max),
            ("e_max", &self.e_max),
        ];
        for (name, vs) in per_user {
            if vs.len() != k {
                return fail(format!("{name} must have K = {k} entries (got {})", vs.len()));
            }
            if let Some(v) = vs.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
                return fail(format!("{name} entries must be finite and > 0 (found {v})"));
            }
        }
        if !self.user_pos.is_empty() {
            if self.user_pos.len() != k {
                return fail(format!(
                    "user_pos must be empty or have K = {k} entries (got {})",
                    self.user_pos.len()
                ));
            }
            for (u, pos) in self.user_pos.iter().enumerate() {
                if dist(*pos, self.bs_pos) == 0.0 || dist(*pos, self.ris_pos) == 0.0 {
                    return fail(format!("user {u} coincides with the BS or the RIS"));
                }
            }
        }
        Ok(())
    }

    /// Returns a copy with user positions drawn uniformly from the two squares
    /// flanking the RIS: reflection users in `[ris_x - 2, ris_x) x [ris_y, ris_y + 2)`,
    /// transmission users in `(ris_x, ris_x + 2] x [ris_y, ris_y + 2)`.
    /// Reflection users are drawn first, then transmission users; each user
    /// consumes an (x, y) pair from a dedicated RNG stream of `seed`.
    pub fn sample_positions(&self, seed: u64) -> Self {
        let mut rng = stream_rng(seed, STREAM_POSITIONS);
        let [rx, ry] = self.ris_pos;
        let mut user_pos = Vec::with_capacity(self.k());
        for _ in 0..self.k_r {
            let u: f64 = rng.gen_range(0.0..2.0);
            let y: f64 = rng.gen_range(0.0..2.0);
            user_pos.push([rx - 2.0 + u, ry + y]); // x in [rx - 2, rx)
        }
        for _ in 0..self.k_t {
            let u: f64 = rng.gen_range(0.0..2.0);
            let y: f64 = rng.gen_range(0.0..2.0);
            user_pos.push([rx + 2.0 - u, ry + y]); // x in (rx, rx + 2]
        }
        ScenarioParams {
            user_pos,
            ..self.clone()
        }
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Assigns each user to the reflection or transmission mode by comparing its
/// x-coordinate with the RIS plane.
///
/// # Errors
/// `BoundaryUser` if a user sits exactly on the plane, `CountMismatch` if the
/// geometric counts disagree with the declared `K_r`/`K_t`.
pub fn assign_sides(params: &ScenarioParams) -> Result<SideAssignment, ScenarioError> {
    params.validate()?;
    if params.user_pos.is_empty() {
        return Err(ScenarioError::InvalidParams(
            "user positions not set; call sample_positions or fill user_pos".into(),
        ));
    }
    let ris_x = params.ris_pos[0];
    let mut sides = Vec::with_capacity(params.k());
    for (user, pos) in params.user_pos.iter().enumerate() {
        if pos[0] == ris_x {
            return Err(ScenarioError::BoundaryUser { user, x: pos[0] });
        }
        sides.push(if pos[0] < ris_x {
            Side::Reflection
        } else {
            Side::Transmission
        });
    }
    let got_r = sides.iter().filter(|s| **s == Side::Reflection).count();
    let got_t = sides.len() - got_r;
    if got_r != params.k_r || got_t != params.k_t {
        return Err(ScenarioError::CountMismatch {
            expected_r: params.k_r,
            expected_t: params.k_t,
            got_r,
            got_t,
        });
    }
    Ok(SideAssignment { sides })
}

/// One Rician draw: `sqrt(rho * d^-iota) * (sqrt(s/(s+1)) + sqrt(1/(s+1)) g)`
/// with `g` standard complex normal and an all-ones line-of-sight part.
fn rician_entry(rng: &mut ChaCha8Rng, scale: f64, rician: f64) -> Complex64 {
    let los = (rician / (rician + 1.0)).sqrt();
    let nlos = (1.0 / (rician + 1.0)).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    let g = Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2;
    (Complex64::new(los, 0.0) + g * nlos) * scale
}

/// Draws one channel realization. Pure in `(params, seed)`: identical inputs
/// give bit-identical outputs. If `params.user_pos` is empty, positions are
/// sampled first from the same seed (dedicated stream).
///
/// Draw order (fixed by the determinism contract): for each user `h_d[k]`
/// then the `N` entries of `h_i[k]`, and finally the `N` entries of `h_r`.
///
/// # Errors
/// Parameter validation and side-assignment errors only.
pub fn gen_channels(params: &ScenarioParams, seed: u64) -> Result<ChannelRealization, ScenarioError> {
    let params = if params.user_pos.is_empty() {
        params.sample_positions(seed)
    } else {
        params.clone()
    };
    let sides = assign_sides(&params)?;
    let k = params.k();
    let n = params.n;
    let mut rng = stream_rng(seed, STREAM_FADING);

    let mut h_d = Vec::with_capacity(k);
    let mut h_i = Vec::with_capacity(k);
    for pos in &params.user_pos {
        let scale_d = (params.rho * dist(*pos, params.bs_pos).powf(-params.iota_d)).sqrt();
        h_d.push(rician_entry(&mut rng, scale_d, params.rician));
        let scale_i = (params.rho * dist(*pos, params.ris_pos).powf(-params.iota_i)).sqrt();
        h_i.push(
            (0..n)
                .map(|_| rician_entry(&mut rng, scale_i, params.rician))
                .collect::<Vec<_>>(),
        );
    }
    let scale_r = (params.rho * dist(params.ris_pos, params.bs_pos).powf(-params.iota_r)).sqrt();
    let h_r: Vec<Complex64> = (0..n)
        .map(|_| rician_entry(&mut rng, scale_r, params.rician))
        .collect();

    let mut h_hat = Vec::with_capacity(k);
    let mut big_h = Vec::with_capacity(k);
    for u in 0..k {
        let mut v = DVector::zeros(n + 1);
        for e in 0..n {
            v[e] = h_r[e] * h_i[u][e].conj();
        }
        v[n] = h_d[u].conj();
        let m = &v * v.adjoint();
        h_hat.push(v);
        big_h.push(m);
    }

    Ok(ChannelRealization {
        seed,
        user_pos: params.user_pos,
        sides: sides.sides,
        h_d,
        h_i,
        h_r,
        h_hat,
        big_h,
    })
}

/// Lifted channel of user `k`: the vector `h_hat[k]` and the rank-one
/// Hermitian matrix `big_h[k] = h_hat[k] h_hat[k]^H`.
pub fn lift_channel(ch: &ChannelRealization, k: usize) -> (&DVector<Complex64>, &DMatrix<Complex64>) {
    (&ch.h_hat[k], &ch.big_h[k])
}
