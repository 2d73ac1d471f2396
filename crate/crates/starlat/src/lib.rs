//! Min-max service-latency optimization for a STAR-RIS assisted edge-computing
//! uplink.
//!
//! AR users convert a camera frame locally, upload it through a simultaneously
//! transmitting and reflecting surface (STAR-RIS, energy-splitting protocol),
//! and have it analyzed at the base station. The worst per-user latency
//! (local + uplink + edge processing) is minimized over transmit powers,
//! surface coefficients, local CPU frequencies, edge CPU shares and, under
//! FDMA, bandwidth fractions.
//!
//! Module map:
//! - [`scenario`]: geometry, user-side assignment, seeded Rician channel draws,
//!   and the quadratic-form lifting of the composite channel.
//! - [`perf`]: rates (exact and concave surrogate), latency and energy models.
//! - [`compute`]: closed-form local CPU choice and the water-level edge
//!   allocation with its KKT certificate.
//! - [`power`]: transmit-power block (SDMA) and joint power/bandwidth block
//!   (FDMA).
//! - [`star`]: penalty method for the lifted surface-coefficient block, with
//!   rank-one extraction.
//! - [`optimizer`]: the alternating loops (SDMA and FDMA) plus benchmark
//!   schemes.
//! - [`oracle`]: brute-force reference optimizer for tiny instances.
//! - [`linalg`]: small Hermitian helpers (top eigenpair, PSD projection).

pub mod compute;
pub mod linalg;
pub mod optimizer;
pub mod oracle;
pub mod perf;
pub mod power;
pub mod scenario;
pub mod star;

pub use optimizer::{
    run_baseline, run_fdma, run_sdma, BaselineScheme, SolveReport, SolveStatus, SolverCfg,
};
pub use oracle::{brute_force, GridSpec, OracleResult};
pub use perf::{AccessMode, AllocationState, StarConfig};
pub use scenario::{assign_sides, gen_channels, ChannelRealization, ScenarioParams, Side};
