//! Per-user SNR utilities and water-filling of the LTE-U duty cycle.
//!
//! On channel `k` the SBS maximizes `alpha* * sum_i ln(1 + y_i * gamma_i)`
//! subject to `sum_i y_i <= B * alpha*`, `y_i >= 0`. The KKT conditions give
//! `y_i = [alpha* / nu - 1 / gamma_i]^+` with the water level `nu` set so the
//! budget binds. `nu` is located by geometric bisection and then recomputed in
//! closed form over the active set.

use crate::{Error, Result};

pub const BISECTION_REL_TOL: f64 = 1e-12;
pub const BISECTION_MAX_ITER: usize = 200;

/// `ln(1 + P g / sigma^2)` in nats.
pub fn snr_utility(power: f64, gain: f64, noise: f64) -> Result<f64> {
    if !(noise.is_finite() && noise > 0.0) {
        return Err(Error::domain(format!(
            "noise must be finite and > 0, got {noise}"
        )));
    }
    if !(power.is_finite() && power > 0.0) {
        return Err(Error::domain(format!(
            "power must be finite and > 0, got {power}"
        )));
    }
    if !(gain.is_finite() && gain >= 0.0) {
        return Err(Error::domain(format!(
            "gain must be finite and >= 0, got {gain}"
        )));
    }
    Ok((power * gain / noise).ln_1p())
}

/// Utilities `gamma[i][k]` of every user on every channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelUserGains {
    pub gamma: Vec<Vec<f64>>,
    pub power: Vec<f64>,
    pub gain: Vec<Vec<f64>>,
    pub noise: f64,
}

impl ChannelUserGains {
    /// `gain` is indexed `[user][channel]`; all rows must have the same length.
    pub fn new(power: Vec<f64>, gain: Vec<Vec<f64>>, noise: f64) -> Result<Self> {
        if power.len() != gain.len() {
            return Err(Error::domain(format!(
                "{} powers for {} gain rows",
                power.len(),
                gain.len()
            )));
        }
        let channels = gain.first().map_or(0, Vec::len);
        let mut gamma = Vec::with_capacity(gain.len());
        for (p, row) in power.iter().zip(&gain) {
            if row.len() != channels {
                return Err(Error::domain("ragged gain matrix"));
            }
            gamma.push(
                row.iter()
                    .map(|g| snr_utility(*p, *g, noise))
                    .collect::<Result<Vec<_>>>()?,
            );
        }
        Ok(Self {
            gamma,
            power,
            gain,
            noise,
        })
    }

    pub fn users(&self) -> usize {
        self.gamma.len()
    }

    pub fn channels(&self) -> usize {
        self.gamma.first().map_or(0, Vec::len)
    }

    /// Column `k` of the utility matrix.
    pub fn channel(&self, k: usize) -> Vec<f64> {
        self.gamma.iter().map(|row| row[k]).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AllocationResult {
    /// Bandwidth-time share of each user.
    pub y: Vec<f64>,
    /// Water level `nu`; `None` when nothing is allocated.
    pub water_level: Option<f64>,
    pub sum_rate: f64,
    /// `B * alpha*`.
    pub budget: f64,
}

fn check_gammas(gammas: &[f64]) -> Result<()> {
    if gammas.is_empty() {
        return Err(Error::domain("at least one user is required"));
    }
    if let Some(g) = gammas.iter().find(|g| !(g.is_finite() && **g >= 0.0)) {
        return Err(Error::domain(format!(
            "gamma must be finite and >= 0, got {g}"
        )));
    }
    Ok(())
}

/// `alpha* * sum_i ln(1 + y_i gamma_i)`.
pub fn sum_rate(alpha_star: f64, y: &[f64], gammas: &[f64]) -> Result<f64> {
    if y.len() != gammas.len() {
        return Err(Error::domain(format!(
            "{} allocations for {} users",
            y.len(),
            gammas.len()
        )));
    }
    if !(alpha_star.is_finite() && alpha_star >= 0.0) {
        return Err(Error::domain(format!(
            "alpha* must be finite and >= 0, got {alpha_star}"
        )));
    }
    if let Some(v) = y
        .iter()
        .chain(gammas)
        .find(|v| !(v.is_finite() && **v >= 0.0))
    {
        return Err(Error::domain(format!("negative or non-finite input {v}")));
    }
    if alpha_star == 0.0 {
        return Ok(0.0);
    }
    Ok(alpha_star
        * y.iter()
            .zip(gammas)
            .map(|(y, g)| (y * g).ln_1p())
            .sum::<f64>())
}

fn fill_level(alpha: f64, nu: f64, gammas: &[f64]) -> f64 {
    gammas
        .iter()
        .filter(|g| **g > 0.0)
        .map(|g| (alpha / nu - 1.0 / g).max(0.0))
        .sum()
}

/// Closed-form water level for the users active at `nu`, and that active set.
fn polish(alpha: f64, budget: f64, nu: f64, gammas: &[f64]) -> (f64, Vec<bool>) {
    let active: Vec<bool> = gammas
        .iter()
        .map(|g| *g > 0.0 && alpha / nu > 1.0 / g)
        .collect();
    let count = active.iter().filter(|a| **a).count() as f64;
    let inv_sum: f64 = gammas
        .iter()
        .zip(&active)
        .filter(|(_, a)| **a)
        .map(|(g, _)| 1.0 / g)
        .sum();
    (alpha * count / (budget + inv_sum), active)
}

pub fn water_fill(alpha_star: f64, bandwidth: f64, gammas: &[f64]) -> Result<AllocationResult> {
    check_gammas(gammas)?;
    if !(alpha_star.is_finite() && alpha_star >= 0.0) {
        return Err(Error::domain(format!(
            "alpha* must be finite and >= 0, got {alpha_star}"
        )));
    }
    if !(bandwidth.is_finite() && bandwidth > 0.0) {
        return Err(Error::domain(format!(
            "bandwidth must be finite and > 0, got {bandwidth}"
        )));
    }
    let budget = bandwidth * alpha_star;
    let g_max = gammas.iter().cloned().fold(0.0, f64::max);
    if alpha_star == 0.0 || g_max == 0.0 {
        return Ok(AllocationResult {
            y: vec![0.0; gammas.len()],
            water_level: None,
            sum_rate: 0.0,
            budget,
        });
    }

    // f(hi) = 0 since alpha/hi = 1/g_max; at lo every positive-gamma user alone exceeds the budget.
    let inv_sum: f64 = gammas.iter().filter(|g| **g > 0.0).map(|g| 1.0 / g).sum();
    let mut hi = alpha_star * g_max;
    let mut lo = alpha_star / (2.0 * (budget + inv_sum));
    if !(lo > 0.0 && hi.is_finite() && fill_level(alpha_star, lo, gammas) >= budget) {
        return Err(Error::Numerical(format!(
            "water level bracket [{lo}, {hi}] does not contain the budget {budget}"
        )));
    }
    for _ in 0..BISECTION_MAX_ITER {
        if hi / lo - 1.0 <= BISECTION_REL_TOL {
            break;
        }
        let mid = (lo * hi).sqrt();
        if fill_level(alpha_star, mid, gammas) >= budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    let mut nu = lo;
    for _ in 0..=gammas.len() {
        let (next, active) = polish(alpha_star, budget, nu, gammas);
        let (_, again) = polish(alpha_star, budget, next, gammas);
        nu = next;
        if active == again {
            break;
        }
    }
    if !(nu.is_finite() && nu > 0.0) {
        return Err(Error::Numerical(format!(
            "water level is not positive: {nu}"
        )));
    }

    let y: Vec<f64> = gammas
        .iter()
        .map(|g| {
            if *g > 0.0 {
                (alpha_star / nu - 1.0 / g).max(0.0)
            } else {
                0.0
            }
        })
        .collect();
    let rate = sum_rate(alpha_star, &y, gammas)?;
    Ok(AllocationResult {
        y,
        water_level: Some(nu),
        sum_rate: rate,
        budget,
    })
}
