//! Rates, latencies, energies, and the min-max objective.
//!
//! Uplink rates come in three flavors:
//! - [`sdma_rate`]: all users share the band; each one sees the others as
//!   interference.
//! - [`fdma_rate`]: orthogonal bandwidth fractions, no interference.
//! - [`surrogate_rate`]: a concave lower bound of the SDMA rate obtained by
//!   replacing `-ln(interference + noise)` with its conjugate linearization at
//!   an auxiliary `y > 0`. The bound is tight exactly at the [`update_y`]
//!   output, which is what makes the alternating loop monotone.
//!
//! Latency per user is local conversion + upload + edge detection; energy is
//! local conversion + transmission. Zero denominators yield infinite markers
//! rather than errors so solvers can probe infeasible corners.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::{ChannelRealization, ScenarioParams, Side};

pub const LN_2: f64 = std::f64::consts::LN_2;
pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Multiple-access mode of an allocation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AccessMode {
    Sdma,
    Fdma,
}

/// Amplitude/phase form of the STAR-RIS coefficients.
///
/// Element `e` reflects with `sqrt(gamma_r[e]) e^{i theta_r[e]}` and transmits
/// with `sqrt(gamma_t[e]) e^{i theta_t[e]}`; the energy-splitting protocol
/// requires `gamma_r[e] + gamma_t[e] = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StarConfig {
    pub gamma_r: Vec<f64>,
    pub gamma_t: Vec<f64>,
    pub theta_r: Vec<f64>,
    pub theta_t: Vec<f64>,
}

#[derive(Debug, Error, PartialEq)]
pub enum PerfError {
    #[error("auxiliary variable must be positive: y[{user}] = {value}")]
    NonPositiveAuxiliary { user: usize, value: f64 },
    #[error("invalid surface configuration: {0}")]
    InvalidConfig(String),
}

impl StarConfig {
    /// Even energy split with zero phases.
    pub fn uniform_split(n: usize) -> Self {
        StarConfig {
            gamma_r: vec![0.5; n],
            gamma_t: vec![0.5; n],
            theta_r: vec![0.0; n],
            theta_t: vec![0.0; n],
        }
    }

    /// All energy to the reflection mode.
    pub fn reflect_only(n: usize) -> Self {
        StarConfig {
            gamma_r: vec![1.0; n],
            gamma_t: vec![0.0; n],
            theta_r: vec![0.0; n],
            theta_t: vec![0.0; n],
        }
    }

    /// All energy to the transmission mode.
    pub fn transmit_only(n: usize) -> Self {
        StarConfig {
            gamma_r: vec![0.0; n],
            gamma_t: vec![1.0; n],
            theta_r: vec![0.0; n],
            theta_t: vec![0.0; n],
        }
    }

    pub fn n(&self) -> usize {
        self.gamma_r.len()
    }

    /// Coefficient of element `e` for the given mode.
    pub fn coeff(&self, side: Side, e: usize) -> Complex64 {
        let (gamma, theta) = match side {
            Side::Reflection => (self.gamma_r[e], self.theta_r[e]),
            Side::Transmission => (self.gamma_t[e], self.theta_t[e]),
        };
        Complex64::from_polar(gamma.max(0.0).sqrt(), theta)
    }

    /// Checks amplitude coupling (`gamma_r + gamma_t = 1` within 1e-9),
    /// nonnegativity, and equal lengths.
    pub fn validate(&self) -> Result<(), PerfError> {
        let n = self.n();
        if self.gamma_t.len() != n || self.theta_r.len() != n || self.theta_t.len() != n {
            return Err(PerfError::InvalidConfig("field lengths differ".into()));
        }
        for e in 0..n {
            let (gr, gt) = (self.gamma_r[e], self.gamma_t[e]);
            if gr < 0.0 || gt < 0.0 {
                return Err(PerfError::InvalidConfig(format!(
                    "negative amplitude at element {e}: ({gr}, {gt})"
                )));
            }
            if (gr + gt - 1.0).abs() > 1e-9 {
                return Err(PerfError::InvalidConfig(format!(
                    "amplitude coupling violated at element {e}: {gr} + {gt} != 1"
                )));
            }
            if !self.theta_r[e].is_finite() || !self.theta_t[e].is_finite() {
                return Err(PerfError::InvalidConfig(format!("non-finite phase at element {e}")));
            }
        }
        Ok(())
    }
}

/// Decision variables of one allocation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AllocationState {
    /// Transmit powers (W).
    pub p: Vec<f64>,
    /// Bandwidth fractions; `None` under SDMA.
    pub b: Option<Vec<f64>>,
    /// Local CPU frequencies (cycles/s).
    pub f_l: Vec<f64>,
    /// Edge CPU shares (cycles/s).
    pub f_s: Vec<f64>,
    /// Surrogate auxiliaries; `None` under FDMA (no interference to bound).
    pub y: Option<Vec<f64>>,
    /// Current epigraph value (s).
    pub t: f64,
    pub mode: AccessMode,
}

/// Per-user latency terms (s). `total = t_l + t_c + t_s`; infinities mark
/// unattainable corners (zero rate/frequency).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LatencyBreakdown {
    pub t_l: Vec<f64>,
    pub t_c: Vec<f64>,
    pub t_s: Vec<f64>,
    pub total: Vec<f64>,
}

/// Per-user energy terms (J). `total = e_l + e_c`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub e_l: Vec<f64>,
    pub e_c: Vec<f64>,
    pub total: Vec<f64>,
}

/// Composite channel gain `|h_d + h_r^H diag(v) h_i|^2` per user, using the
/// coefficient column of the user's own side.
pub fn composite_gains(star: &StarConfig, ch: &ChannelRealization) -> Vec<f64> {
    let n = star.n();
    assert_eq!(n, ch.h_r.len(), "config/channel element count mismatch");
    ch.h_d
        .iter()
        .enumerate()
        .map(|(k, hd)| {
            let mut amp = *hd;
            for e in 0..n {
                amp += ch.h_r[e].conj() * star.coeff(ch.sides[k], e) * ch.h_i[k][e];
            }
            amp.norm_sqr()
        })
        .collect()
}

/// SDMA rate per user from precomputed gains:
/// `R_k = B log2(1 + p_k g_k / (sum_{j != k} p_j g_j + B delta^2))`.
pub fn sdma_rate_from_gains(p: &[f64], gains: &[f64], bandwidth: f64, noise_psd: f64) -> Vec<f64> {
    let noise = bandwidth * noise_psd;
    let total: f64 = p.iter().zip(gains).map(|(p, g)| p * g).sum();
    p.iter()
        .zip(gains)
        .map(|(pk, gk)| {
            let own = pk * gk;
            bandwidth * (1.0 + own / (total - own + noise)).log2()
        })
        .collect()
}

/// SDMA rate per user for an explicit surface configuration.
pub fn sdma_rate(p: &[f64], star: &StarConfig, ch: &ChannelRealization, params: &ScenarioParams) -> Vec<f64> {
    sdma_rate_from_gains(p, &composite_gains(star, ch), params.bandwidth, params.noise_psd)
}

/// FDMA rate per user from precomputed gains:
/// `R_k = b_k B log2(1 + p_k g_k / (b_k B delta^2))`, with `R_k = 0` at
/// `b_k = 0` (continuous limit).
pub fn fdma_rate_from_gains(p: &[f64], b: &[f64], gains: &[f64], bandwidth: f64, noise_psd: f64) -> Vec<f64> {
    p.iter()
        .zip(b)
        .zip(gains)
        .map(|((pk, bk), gk)| {
            if *bk <= 0.0 {
                0.0
            } else {
                let band = bk * bandwidth;
                band * (1.0 + pk * gk / (band * noise_psd)).log2()
            }
        })
        .collect()
}

/// FDMA rate per user for an explicit surface configuration.
pub fn fdma_rate(
    p: &[f64],
    b: &[f64],
    star: &StarConfig,
    ch: &ChannelRealization,
    params: &ScenarioParams,
) -> Vec<f64> {
    fdma_rate_from_gains(p, b, &composite_gains(star, ch), params.bandwidth, params.noise_psd)
}

/// Concave surrogate of the SDMA rate at auxiliary `y`:
///
/// ```text
/// R~_k = (B/ln 2) ( ln(sum_j p_j g_j + B delta^2)
///                   - y_k (sum_{j != k} p_j g_j + B delta^2)
///                   + ln y_k + 1 ).
/// ```
///
/// Always `<=` the true rate; equality at `y_k = 1/(interference + noise)`.
///
/// # Errors
/// `NonPositiveAuxiliary` if any `y_k <= 0`.
pub fn surrogate_rate_from_gains(
    p: &[f64],
    gains: &[f64],
    y: &[f64],
    bandwidth: f64,
    noise_psd: f64,
) -> Result<Vec<f64>, PerfError> {
    if let Some((user, value)) = y.iter().enumerate().find(|(_, v)| **v <= 0.0) {
        return Err(PerfError::NonPositiveAuxiliary { user, value: *value });
    }
    let noise = bandwidth * noise_psd;
    let total: f64 = p.iter().zip(gains).map(|(p, g)| p * g).sum();
    Ok(p
        .iter()
        .zip(gains)
        .zip(y)
        .map(|((pk, gk), yk)| {
            let interference = total - pk * gk + noise;
            bandwidth / LN_2 * ((total + noise).ln() - yk * interference + yk.ln() + 1.0)
        })
        .collect())
}

/// Surrogate rate for an explicit surface configuration.
pub fn surrogate_rate(
    p: &[f64],
    star: &StarConfig,
    y: &[f64],
    ch: &ChannelRealization,
    params: &ScenarioParams,
) -> Result<Vec<f64>, PerfError> {
    surrogate_rate_from_gains(p, &composite_gains(star, ch), y, params.bandwidth, params.noise_psd)
}

/// Tightness point of the surrogate: `y_k = 1/(sum_{j != k} p_j g_j + B delta^2)`.
pub fn update_y_from_gains(p: &[f64], gains: &[f64], bandwidth: f64, noise_psd: f64) -> Vec<f64> {
    let noise = bandwidth * noise_psd;
    let total: f64 = p.iter().zip(gains).map(|(p, g)| p * g).sum();
    p.iter()
        .zip(gains)
        .map(|(pk, gk)| 1.0 / (total - pk * gk + noise))
        .collect()
}

/// Tightness point for an explicit surface configuration.
pub fn update_y(p: &[f64], star: &StarConfig, ch: &ChannelRealization, params: &ScenarioParams) -> Vec<f64> {
    update_y_from_gains(p, &composite_gains(star, ch), params.bandwidth, params.noise_psd)
}

/// Latency and energy terms of an allocation under the given per-user rates.
///
/// `T_l = w/f_l`, `T_c = beta d^2 / R`, `T_s = beta d^2 c / f_s`,
/// `E_l = kappa f_l^2 w`, `E_c = p T_c`. Zero denominators produce infinite
/// markers; a silent user (`p = 0`) spends no transmit energy even though its
/// upload never completes.
pub fn latency_energy(
    state: &AllocationState,
    rates: &[f64],
    params: &ScenarioParams,
) -> (LatencyBreakdown, EnergyBreakdown) {
    let k = params.k();
    assert_eq!(rates.len(), k, "rate vector length mismatch");
    let mut lat = LatencyBreakdown {
        t_l: Vec::with_capacity(k),
        t_c: Vec::with_capacity(k),
        t_s: Vec::with_capacity(k),
        total: Vec::with_capacity(k),
    };
    let mut en = EnergyBreakdown {
        e_l: Vec::with_capacity(k),
        e_c: Vec::with_capacity(k),
        total: Vec::with_capacity(k),
    };
    for u in 0..k {
        let bits = params.beta * params.pixels[u] * params.pixels[u];
        let t_l = if state.f_l[u] > 0.0 { params.work[u] / state.f_l[u] } else { f64::INFINITY };
        let t_c = if rates[u] > 0.0 { bits / rates[u] } else { f64::INFINITY };
        let t_s = if state.f_s[u] > 0.0 {
            bits * params.cycles_per_bit[u] / state.f_s[u]
        } else {
            f64::INFINITY
        };
        let e_l = params.kappa * state.f_l[u] * state.f_l[u] * params.work[u];
        let e_c = if state.p[u] == 0.0 { 0.0 } else { state.p[u] * t_c };
        lat.t_l.push(t_l);
        lat.t_c.push(t_c);
        lat.t_s.push(t_s);
        lat.total.push(t_l + t_c + t_s);
        en.e_l.push(e_l);
        en.e_c.push(e_c);
        en.total.push(e_l + e_c);
    }
    (lat, en)
}

/// Worst per-user total latency; infinite if any component is.
pub fn max_latency(lat: &LatencyBreakdown) -> f64 {
    assert!(!lat.total.is_empty(), "no users");
    lat.total.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}
