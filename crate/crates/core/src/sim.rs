//! Frame-level coexistence simulator.
//!
//! One SBS shares `K` non-overlapping unlicensed channels with `K` WAPs, one
//! WAP per channel. Each long frame on channel `k` is split into an LTE-U
//! share and a WiFi window; WiFi loses `Poisson(lambda_k)` collisions of
//! `Exp(mu)` seconds each inside its window. No MAC timing is simulated:
//! whatever part of the window is neither success nor collision is idle.
//!
//! The collision draw for a channel depends only on the seed and the channel
//! index, so all schemes see the same collisions for the same seed.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::alloc::{snr_utility, water_fill};
use crate::duty::{
    duty_cycle_fixed_point, duty_cycle_from_surplus_in, lte_duty_cycle, DutyCyclePolicy,
    FrameConfig, SurplusUnits,
};
use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Wap {
    pub position: Point,
    pub radius: f64,
    pub wst_count: u32,
    pub channel: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ue {
    pub position: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub sbs_position: Point,
    pub sbs_radius: f64,
    pub waps: Vec<Wap>,
    pub ues: Vec<Ue>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopologyConfig {
    pub wap_count: u32,
    pub wst_per_wap: u32,
    pub ue_count: u32,
    pub sbs_radius: f64,
    pub wap_radius: f64,
    /// Non-overlapping unlicensed channels available to the WAPs.
    pub channels: u32,
}

impl Default for TopologyConfig {
    fn default() -> Self {
        Self {
            wap_count: 3,
            wst_per_wap: 5,
            ue_count: 10,
            sbs_radius: 200.0,
            wap_radius: 100.0,
            channels: 3,
        }
    }
}

impl TopologyConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("wap_count", self.wap_count),
            ("wst_per_wap", self.wst_per_wap),
            ("ue_count", self.ue_count),
            ("channels", self.channels),
        ] {
            if v == 0 {
                return Err(Error::config(format!("topology.{name}"), "must be >= 1"));
            }
        }
        if self.wap_count > self.channels {
            return Err(Error::config(
                "topology.wap_count",
                format!(
                    "{} WAPs need distinct channels but only {} are available",
                    self.wap_count, self.channels
                ),
            ));
        }
        for (name, v) in [
            ("sbs_radius", self.sbs_radius),
            ("wap_radius", self.wap_radius),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(
                    format!("topology.{name}"),
                    format!("must be finite and > 0, got {v}"),
                ));
            }
        }
        Ok(())
    }
}

fn point_in_disk<R: rand::RngCore>(rng: &mut R, center: Point, radius: f64) -> Point {
    let r = radius * rng::uniform(rng).sqrt();
    let theta = 2.0 * PI * rng::uniform(rng);
    Point {
        x: center.x + r * theta.cos(),
        y: center.y + r * theta.sin(),
    }
}

/// SBS at the origin; WAPs then UEs placed uniformly in the SBS disk.
pub fn generate_topology(seed: u64, config: &TopologyConfig) -> Result<Topology> {
    config.validate()?;
    let mut rng = rng::stream(seed);
    let sbs = Point::default();
    let waps = (0..config.wap_count as usize)
        .map(|channel| Wap {
            position: point_in_disk(&mut rng, sbs, config.sbs_radius),
            radius: config.wap_radius,
            wst_count: config.wst_per_wap,
            channel,
        })
        .collect();
    let ues = (0..config.ue_count)
        .map(|_| Ue {
            position: point_in_disk(&mut rng, sbs, config.sbs_radius),
        })
        .collect();
    Ok(Topology {
        sbs_position: sbs,
        sbs_radius: config.sbs_radius,
        waps,
        ues,
    })
}

/// Log-distance path loss with a near-field clamp at `ref_distance`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathLossModel {
    pub exponent: f64,
    pub ref_distance: f64,
    pub ref_gain: f64,
}

impl Default for PathLossModel {
    fn default() -> Self {
        Self {
            exponent: 3.5,
            ref_distance: 1.0,
            ref_gain: 1e-3,
        }
    }
}

pub fn path_gain(distance: f64, model: &PathLossModel) -> Result<f64> {
    if !(distance.is_finite() && distance > 0.0) {
        return Err(Error::domain(format!(
            "distance must be finite and > 0, got {distance}"
        )));
    }
    if !(model.ref_distance.is_finite() && model.ref_distance > 0.0) {
        return Err(Error::domain("ref_distance must be finite and > 0"));
    }
    if !(model.ref_gain.is_finite() && model.ref_gain >= 0.0 && model.exponent.is_finite()) {
        return Err(Error::domain("ref_gain must be >= 0 and exponent finite"));
    }
    Ok(model.ref_gain
        * (model.ref_distance / distance.max(model.ref_distance)).powf(model.exponent))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollisionDraw {
    pub count: u64,
    pub durations: Vec<f64>,
    pub total: f64,
}

/// Collisions of one long frame: `Poisson(lambda)` many, `Exp(mu)` seconds each.
pub fn sample_collisions(lambda: f64, mu: f64, seed: u64) -> Result<CollisionDraw> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::domain(format!(
            "lambda must be finite and > 0, got {lambda}"
        )));
    }
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Error::domain(format!(
            "mu must be finite and > 0, got {mu}"
        )));
    }
    let mut rng = rng::stream(seed);
    let count = rng::poisson(&mut rng, lambda)?;
    let durations: Vec<f64> = (0..count).map(|_| rng::exponential(&mut rng, mu)).collect();
    let total = durations.iter().sum();
    Ok(CollisionDraw {
        count,
        durations,
        total,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    PureWifi,
    EqualSharing,
    LteDominant,
    RuinFair,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [
        Scheme::PureWifi,
        Scheme::EqualSharing,
        Scheme::LteDominant,
        Scheme::RuinFair,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::PureWifi => "pure_wifi",
            Scheme::EqualSharing => "equal_sharing",
            Scheme::LteDominant => "lte_dominant",
            Scheme::RuinFair => "ruin_fair",
        }
    }
}

/// Collision traffic; `lambda_k = lambda_base * wst_count` per long frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrafficModel {
    pub lambda_base: f64,
    /// Collision-duration rate (1/s).
    pub mu: f64,
}

impl Default for TrafficModel {
    fn default() -> Self {
        Self {
            lambda_base: 0.5,
            mu: 110.0,
        }
    }
}

impl TrafficModel {
    pub fn lambda_for(&self, wst_count: u32) -> f64 {
        self.lambda_base * f64::from(wst_count)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioConfig {
    /// Unlicensed bandwidth `B` (MHz).
    pub bandwidth: f64,
    /// SBS downlink power per UE (W).
    pub ue_power: f64,
    /// Noise power (W).
    pub noise: f64,
    pub path: PathLossModel,
    /// WiFi PHY rate (bit/s) applied to successful airtime.
    pub wifi_phy_rate: f64,
}

impl Default for RadioConfig {
    fn default() -> Self {
        Self {
            bandwidth: 20.0,
            ue_power: 0.2,
            noise: 1e-13,
            path: PathLossModel::default(),
            wifi_phy_rate: 54e6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RuinMode {
    /// Ruin probability at `mu' = mu + alpha_seed`.
    #[default]
    OneShot,
    /// Iterate `alpha <- policy(psi(mu + alpha))` starting from `alpha_seed`.
    FixedPoint,
}

/// Where the ruin-fair scheme gets `psi` from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PsiSource {
    /// Surplus model fed by the channel's collision traffic.
    Surplus {
        units: SurplusUnits,
        mode: RuinMode,
        alpha_seed: f64,
    },
    /// `psi` imposed directly.
    Fixed(f64),
}

impl Default for PsiSource {
    fn default() -> Self {
        PsiSource::Surplus {
            units: SurplusUnits::Seconds,
            mode: RuinMode::OneShot,
            alpha_seed: 0.0,
        }
    }
}

/// Everything a long frame needs besides the topology and the seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimSetup {
    pub frame: FrameConfig,
    pub traffic: TrafficModel,
    pub policy: DutyCyclePolicy,
    pub radio: RadioConfig,
    pub psi_source: PsiSource,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameOutcome {
    pub channel: usize,
    pub scheme: Scheme,
    pub wifi_success_time: f64,
    pub collision_time: f64,
    pub lte_time: f64,
    pub idle_time: f64,
    /// Bits delivered by WiFi in this long frame.
    pub wifi_throughput: f64,
    pub lte_sum_rate: f64,
    /// Ruin probability behind the ruin-fair share; `None` for fixed schemes.
    pub psi: Option<f64>,
}

/// Per-period claim rate of the surplus model for collision traffic `lambda`.
///
/// Expected claims over the `N`-period horizon equal the expected collision
/// time of one long frame, `lambda / mu`.
pub fn surplus_claim_rate(frame: &FrameConfig, lambda: f64, mu: f64) -> f64 {
    mu * f64::from(frame.short_frames) / lambda
}

/// Ruin-fair LTE-U share and the ruin probability behind it.
pub fn ruin_fair_share(setup: &SimSetup, lambda: f64) -> Result<(f64, f64)> {
    let frame = &setup.frame;
    match setup.psi_source {
        PsiSource::Fixed(psi) => Ok((lte_duty_cycle(psi, frame, &setup.policy)?, psi)),
        PsiSource::Surplus {
            units,
            mode,
            alpha_seed,
        } => {
            let mut rate = surplus_claim_rate(frame, lambda, setup.traffic.mu);
            if units == SurplusUnits::Slots {
                rate *= frame.short_frame_duration;
            }
            match mode {
                RuinMode::OneShot => {
                    duty_cycle_from_surplus_in(frame, rate, alpha_seed, &setup.policy, units)
                }
                RuinMode::FixedPoint => {
                    duty_cycle_fixed_point(frame, rate, alpha_seed, &setup.policy, units)
                }
            }
        }
    }
}

/// UE utilities, identical on every channel (no frequency selectivity).
pub fn ue_utilities(topology: &Topology, radio: &RadioConfig) -> Result<Vec<f64>> {
    topology
        .ues
        .iter()
        .map(|ue| {
            let d = ue
                .position
                .distance(&topology.sbs_position)
                .max(f64::MIN_POSITIVE);
            snr_utility(radio.ue_power, path_gain(d, &radio.path)?, radio.noise)
        })
        .collect()
}

/// One long frame on every WAP channel under `scheme`.
pub fn simulate_long_frame(
    topology: &Topology,
    setup: &SimSetup,
    scheme: Scheme,
    seed: u64,
) -> Result<Vec<FrameOutcome>> {
    setup.frame.validate()?;
    setup.policy.validate()?;
    let t = setup.frame.long_frame();
    let gammas = ue_utilities(topology, &setup.radio)?;

    topology
        .waps
        .iter()
        .map(|wap| {
            let lambda = setup.traffic.lambda_for(wap.wst_count);
            let draw = sample_collisions(
                lambda,
                setup.traffic.mu,
                rng::derive_seed(seed, wap.channel as u64),
            )?;
            let (lte_time, psi) = match scheme {
                Scheme::PureWifi => (0.0, None),
                Scheme::EqualSharing => (t / 2.0, None),
                Scheme::LteDominant => (t, None),
                Scheme::RuinFair => {
                    let (alpha, psi) = ruin_fair_share(setup, lambda)?;
                    (alpha, Some(psi))
                }
            };
            let window = t - lte_time;
            let collision_time = draw.total.min(window);
            let wifi_success_time = (window - collision_time).max(0.0);
            let idle_time = (t - lte_time - collision_time - wifi_success_time).max(0.0);
            let lte_sum_rate = if lte_time > 0.0 {
                water_fill(lte_time, setup.radio.bandwidth, &gammas)?.sum_rate
            } else {
                0.0
            };
            Ok(FrameOutcome {
                channel: wap.channel,
                scheme,
                wifi_success_time,
                collision_time,
                lte_time,
                idle_time,
                wifi_throughput: setup.radio.wifi_phy_rate * wifi_success_time,
                lte_sum_rate,
                psi,
            })
        })
        .collect()
}
