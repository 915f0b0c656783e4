//! Finite-time ruin probability of the discrete-time WiFi surplus process.
//!
//! The surplus after `s` periods is `U(s) = u + s*c - (Z_1 + ... + Z_s)` with
//! one claim `Z_i ~ Exp(mu')` per period. Ruin is the event `U(s) < 0` for some
//! `1 <= s <= n`. For this process the ruin probability has the closed form
//!
//! ```text
//! psi(u, n) = sum_{j=1..n} (mu' c_j)^(j-1) / (j-1)! * exp(-mu' c_j) * c_1 / c_j,
//! c_j = u + j*c
//! ```
//!
//! which [`ruin_probability_exact`] evaluates term by term in log space.
//! [`ruin_probability_mc`] estimates the same quantity by simulation and is
//! kept independent of the series.
//!
//! The claim rate is taken literally as `mu' = mu + alpha`, where `alpha` is the
//! LTE-U duty cycle. Note that a constant-shifted exponential is not itself
//! exponential; the substitution is a modeling convention, not an identity.

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rng;
use crate::{Error, Result};

/// Tolerance above 1 within which the series result is clamped instead of rejected.
pub const PSI_EPS: f64 = 1e-9;

/// Parameters of the surplus process, all in one time unit (slot-time).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurplusParams {
    pub initial_capital: f64,
    pub premium: f64,
    pub claim_rate: f64,
    pub horizon: u32,
}

impl SurplusParams {
    pub fn new(initial_capital: f64, premium: f64, claim_rate: f64, horizon: u32) -> Result<Self> {
        let params = Self {
            initial_capital,
            premium,
            claim_rate,
            horizon,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.initial_capital.is_finite() && self.initial_capital >= 0.0) {
            return Err(Error::domain(format!(
                "initial capital must be finite and >= 0, got {}",
                self.initial_capital
            )));
        }
        if !(self.premium.is_finite() && self.premium > 0.0) {
            return Err(Error::domain(format!(
                "premium must be finite and > 0, got {}",
                self.premium
            )));
        }
        if !(self.claim_rate.is_finite() && self.claim_rate > 0.0) {
            return Err(Error::domain(format!(
                "claim rate must be finite and > 0, got {}",
                self.claim_rate
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurplusPath {
    /// Surplus after each period; `values[0]` is the initial capital.
    pub values: Vec<f64>,
    pub ruined: bool,
    /// First period with negative surplus.
    pub ruin_time: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuinEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub trials: u64,
}

impl RuinEstimate {
    fn from_count(ruined: u64, trials: u64) -> Self {
        let estimate = ruined as f64 / trials as f64;
        Self {
            estimate,
            std_error: (estimate * (1.0 - estimate) / trials as f64).sqrt(),
            trials,
        }
    }

    /// Whether `value` lies within `k` standard errors of the estimate.
    pub fn agrees_with(&self, value: f64, k: f64) -> bool {
        (self.estimate - value).abs() <= k * self.std_error
    }
}

/// Claim rate seen by the surplus process once LTE-U occupies `alpha_k`.
pub fn effective_claim_rate(mu: f64, alpha_k: f64) -> Result<f64> {
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Error::domain(format!(
            "mu must be finite and > 0, got {mu}"
        )));
    }
    if !(alpha_k.is_finite() && alpha_k >= 0.0) {
        return Err(Error::domain(format!(
            "alpha_k must be finite and >= 0, got {alpha_k}"
        )));
    }
    Ok(mu + alpha_k)
}

pub fn ruin_probability_exact(params: &SurplusParams) -> Result<f64> {
    params.validate()?;
    let SurplusParams {
        initial_capital: u,
        premium: c,
        claim_rate: mu,
        horizon: n,
    } = *params;

    let c1 = u + c;
    let mut ln_fact = 0.0; // ln((j-1)!)
    let mut psi = 0.0;
    for j in 1..=n {
        if j > 1 {
            ln_fact += f64::from(j - 1).ln();
        }
        let cj = u + f64::from(j) * c;
        let x = mu * cj;
        let ln_term = f64::from(j - 1) * x.ln() - ln_fact - x + (c1 / cj).ln();
        psi += ln_term.exp();
    }

    if !psi.is_finite() {
        return Err(Error::Numerical(format!(
            "ruin series is not finite: {psi}"
        )));
    }
    if psi > 1.0 + PSI_EPS {
        return Err(Error::Numerical(format!(
            "ruin series exceeds 1 beyond tolerance: {psi}"
        )));
    }
    Ok(psi.clamp(0.0, 1.0))
}

/// Steps the process with the given rng; records values when `record` is set.
fn run_path<R: RngCore>(
    params: &SurplusParams,
    rng: &mut R,
    mut record: Option<&mut Vec<f64>>,
) -> Option<u32> {
    let mut surplus = params.initial_capital;
    let mut ruin_time = None;
    for s in 1..=params.horizon {
        surplus += params.premium - rng::exponential(rng, params.claim_rate);
        if let Some(values) = record.as_deref_mut() {
            values.push(surplus);
        } else if surplus < 0.0 {
            return Some(s);
        }
        if surplus < 0.0 && ruin_time.is_none() {
            ruin_time = Some(s);
        }
    }
    ruin_time
}

/// One sample path over the full horizon.
///
/// The path keeps running after ruin so `values` always has `n + 1` entries.
pub fn simulate_surplus_path(params: &SurplusParams, seed: u64) -> Result<SurplusPath> {
    params.validate()?;
    let mut rng = rng::stream(seed);
    let mut values = Vec::with_capacity(params.horizon as usize + 1);
    values.push(params.initial_capital);
    let ruin_time = run_path(params, &mut rng, Some(&mut values));
    Ok(SurplusPath {
        values,
        ruined: ruin_time.is_some(),
        ruin_time,
    })
}

/// Fraction of ruined paths over `trials` paths, trial `t` seeded with
/// `derive_seed(seed, t)`.
pub fn ruin_probability_mc(params: &SurplusParams, trials: u64, seed: u64) -> Result<RuinEstimate> {
    params.validate()?;
    if trials == 0 {
        return Err(Error::domain("trials must be >= 1"));
    }
    let ruined = (0..trials)
        .into_par_iter()
        .filter(|&t| {
            let mut rng = rng::stream(rng::derive_seed(seed, t));
            run_path(params, &mut rng, None).is_some()
        })
        .count() as u64;
    Ok(RuinEstimate::from_count(ruined, trials))
}
