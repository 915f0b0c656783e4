//! LTE-U duty-cycle policy driven by the WiFi ruin probability.
//!
//! The long frame `T = N * delta` is split into an LTE-U share
//! `alpha* = (1 - psi) * T` and a WiFi share. The surplus model behind `psi`
//! starts with all `N` slots as WiFi capital and earns the `r_reserved`
//! reserved slots as premium each period.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rng;
use crate::ruin::{effective_claim_rate, ruin_probability_exact, SurplusParams};
use crate::sim::sample_collisions;
use crate::{Error, Result};

pub const DEFAULT_SHORT_FRAME: f64 = 0.001;
pub const DEFAULT_PSI_CUTOFF: f64 = 0.4;

/// Convergence tolerance of the fixed-point mode, relative to `T`.
pub const FIXED_POINT_TOL: f64 = 1e-9;
pub const FIXED_POINT_MAX_ITER: usize = 100;

/// Long-frame layout of one unlicensed channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrameConfig {
    /// Short frames per long frame.
    pub short_frames: u32,
    /// Short-frame duration in seconds.
    pub short_frame_duration: f64,
    /// Short frames reserved for WiFi.
    pub reserved_wifi_frames: u32,
}

impl FrameConfig {
    pub fn new(
        short_frames: u32,
        short_frame_duration: f64,
        reserved_wifi_frames: u32,
    ) -> Result<Self> {
        let frame = Self {
            short_frames,
            short_frame_duration,
            reserved_wifi_frames,
        };
        frame.validate()?;
        Ok(frame)
    }

    pub fn validate(&self) -> Result<()> {
        if self.short_frames == 0 {
            return Err(Error::domain("short_frames must be >= 1"));
        }
        if !(self.short_frame_duration.is_finite() && self.short_frame_duration > 0.0) {
            return Err(Error::domain(format!(
                "short_frame_duration must be finite and > 0, got {}",
                self.short_frame_duration
            )));
        }
        if self.reserved_wifi_frames > self.short_frames {
            return Err(Error::domain(format!(
                "reserved_wifi_frames {} exceeds short_frames {}",
                self.reserved_wifi_frames, self.short_frames
            )));
        }
        Ok(())
    }

    /// Long-frame duration `N * delta`.
    pub fn long_frame(&self) -> f64 {
        f64::from(self.short_frames) * self.short_frame_duration
    }

    /// Time available to LTE-U plus collisions before the WiFi reservation is hit.
    pub fn unreserved_time(&self) -> f64 {
        f64::from(self.short_frames - self.reserved_wifi_frames) * self.short_frame_duration
    }
}

impl Default for FrameConfig {
    fn default() -> Self {
        Self {
            short_frames: 10,
            short_frame_duration: DEFAULT_SHORT_FRAME,
            reserved_wifi_frames: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    /// `alpha* = (1 - psi) T`.
    #[default]
    Linear,
    /// Linear up to the cutoff, nothing for LTE-U above it.
    ThresholdedLinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DutyCyclePolicy {
    pub kind: PolicyKind,
    pub psi_cutoff: f64,
}

impl DutyCyclePolicy {
    pub fn linear() -> Self {
        Self {
            kind: PolicyKind::Linear,
            psi_cutoff: DEFAULT_PSI_CUTOFF,
        }
    }

    pub fn thresholded(psi_cutoff: f64) -> Self {
        Self {
            kind: PolicyKind::ThresholdedLinear,
            psi_cutoff,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.psi_cutoff) {
            return Err(Error::domain(format!(
                "psi_cutoff must lie in [0, 1], got {}",
                self.psi_cutoff
            )));
        }
        Ok(())
    }
}

impl Default for DutyCyclePolicy {
    fn default() -> Self {
        Self::linear()
    }
}

/// Unit system for the surplus model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SurplusUnits {
    /// Capital `N * delta`, premium `r * delta`; claims in seconds.
    #[default]
    Seconds,
    /// Capital `N`, premium `r`; the claim rate is used as given.
    Slots,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChanceCheckReport {
    pub satisfied: bool,
    pub empirical_prob: f64,
    pub xi: f64,
    pub trials: u64,
}

/// Collision process of one channel: `Poisson(lambda)` collisions per long
/// frame, each lasting `Exp(mu)` seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionModel {
    pub lambda: f64,
    pub mu: f64,
}

pub fn lte_duty_cycle(psi: f64, frame: &FrameConfig, policy: &DutyCyclePolicy) -> Result<f64> {
    if !(0.0..=1.0).contains(&psi) {
        return Err(Error::domain(format!("psi must lie in [0, 1], got {psi}")));
    }
    frame.validate()?;
    policy.validate()?;
    let t = frame.long_frame();
    let alpha = match policy.kind {
        PolicyKind::Linear => (1.0 - psi) * t,
        PolicyKind::ThresholdedLinear if psi <= policy.psi_cutoff => (1.0 - psi) * t,
        PolicyKind::ThresholdedLinear => 0.0,
    };
    Ok(alpha.clamp(0.0, t))
}

/// Surplus parameters for a channel whose claims have base rate `mu` while
/// LTE-U holds `alpha` of the frame.
pub fn surplus_params(
    frame: &FrameConfig,
    mu: f64,
    alpha: f64,
    units: SurplusUnits,
) -> Result<SurplusParams> {
    frame.validate()?;
    let claim_rate = effective_claim_rate(mu, alpha)?;
    let (capital, premium) = match units {
        SurplusUnits::Seconds => (
            frame.long_frame(),
            f64::from(frame.reserved_wifi_frames) * frame.short_frame_duration,
        ),
        SurplusUnits::Slots => (
            f64::from(frame.short_frames),
            f64::from(frame.reserved_wifi_frames),
        ),
    };
    SurplusParams::new(capital, premium, claim_rate, frame.short_frames)
}

/// One-shot allocation: ruin probability under `mu' = mu + alpha_seed`, then
/// the policy. Returns `(alpha_star, psi)`.
pub fn duty_cycle_from_surplus(
    frame: &FrameConfig,
    mu: f64,
    alpha_seed: f64,
    policy: &DutyCyclePolicy,
) -> Result<(f64, f64)> {
    duty_cycle_from_surplus_in(frame, mu, alpha_seed, policy, SurplusUnits::Seconds)
}

pub fn duty_cycle_from_surplus_in(
    frame: &FrameConfig,
    mu: f64,
    alpha_seed: f64,
    policy: &DutyCyclePolicy,
    units: SurplusUnits,
) -> Result<(f64, f64)> {
    let t = frame.long_frame();
    if !(alpha_seed.is_finite() && (0.0..=t).contains(&alpha_seed)) {
        return Err(Error::domain(format!(
            "alpha_seed must lie in [0, T={t}], got {alpha_seed}"
        )));
    }
    let psi = ruin_probability_exact(&surplus_params(frame, mu, alpha_seed, units)?)?;
    let alpha = lte_duty_cycle(psi, frame, policy)?;
    Ok((alpha, psi))
}

/// Iterates `alpha <- policy(psi(mu + alpha))` from `alpha_seed` until the
/// step is below `1e-9 * T`.
///
/// The map is non-decreasing in `alpha`, so the iterates are monotone and
/// bounded by `[0, T]`.
pub fn duty_cycle_fixed_point(
    frame: &FrameConfig,
    mu: f64,
    alpha_seed: f64,
    policy: &DutyCyclePolicy,
    units: SurplusUnits,
) -> Result<(f64, f64)> {
    let tol = FIXED_POINT_TOL * frame.long_frame();
    let mut alpha = alpha_seed;
    for _ in 0..FIXED_POINT_MAX_ITER {
        let (next, psi) = duty_cycle_from_surplus_in(frame, mu, alpha, policy, units)?;
        if (next - alpha).abs() <= tol {
            return Ok((next, psi));
        }
        alpha = next;
    }
    Err(Error::Numerical(format!(
        "duty-cycle fixed point did not converge in {FIXED_POINT_MAX_ITER} iterations"
    )))
}

/// Monte Carlo estimate of `Pr[X_t + alpha_total <= (N - r) delta]` where
/// `X_t` is the total collision time of one long frame.
///
/// Trial `t` draws its collisions from `derive_seed(seed, t)`, independent of
/// `alpha_total`, so the estimate is non-increasing in `alpha_total` for a
/// fixed seed.
pub fn verify_chance_constraint(
    alpha_total: f64,
    frame: &FrameConfig,
    model: &CollisionModel,
    xi: f64,
    trials: u64,
    seed: u64,
) -> Result<ChanceCheckReport> {
    frame.validate()?;
    let t = frame.long_frame();
    if !(alpha_total.is_finite() && (0.0..=t).contains(&alpha_total)) {
        return Err(Error::domain(format!(
            "alpha_total must lie in [0, T={t}], got {alpha_total}"
        )));
    }
    if !(xi > 0.0 && xi < 1.0) {
        return Err(Error::domain(format!("xi must lie in (0, 1), got {xi}")));
    }
    if trials == 0 {
        return Err(Error::domain("trials must be >= 1"));
    }
    // validate once up front so the parallel loop cannot fail
    sample_collisions(model.lambda, model.mu, seed)?;

    let limit = frame.unreserved_time() + 1e-12 * t;
    let ok = (0..trials)
        .into_par_iter()
        .filter(|&i| {
            let draw = sample_collisions(model.lambda, model.mu, rng::derive_seed(seed, i))
                .expect("collision model validated above");
            draw.total + alpha_total <= limit
        })
        .count() as u64;
    let empirical_prob = ok as f64 / trials as f64;
    Ok(ChanceCheckReport {
        satisfied: empirical_prob >= xi,
        empirical_prob,
        xi,
        trials,
    })
}
