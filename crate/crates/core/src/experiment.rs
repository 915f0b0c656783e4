//! Scenario configuration, parameter sweeps and their CSV/manifest outputs.
//!
//! A scenario is a JSON file; every field is optional and falls back to the
//! defaults below. Each replication `r` uses topology seed
//! `derive_seed(seeds.topology, r)` and traffic seed
//! `derive_seed(seeds.traffic, r)`, shared across sweep values and schemes.
//!
//! | field | default |
//! |---|---|
//! | `frame.short_frames` | 10 |
//! | `frame.short_frame_duration` | 0.001 s |
//! | `frame.reserved_wifi_frames` | 1 |
//! | `topology.{wap_count, wst_per_wap, ue_count, channels}` | 3, 5, 10, 3 |
//! | `topology.{sbs_radius, wap_radius}` | 200 m, 100 m |
//! | `traffic.lambda_base` | 0.5 collisions per WST per long frame |
//! | `traffic.mu` | 110 1/s |
//! | `radio.{bandwidth, ue_power, noise}` | 20 MHz, 0.2 W, 1e-13 W |
//! | `radio.path.{exponent, ref_distance, ref_gain}` | 3.5, 1 m, 1e-3 |
//! | `radio.wifi_phy_rate` | 54e6 bit/s |
//! | `policy.{kind, psi_cutoff}` | `linear`, 0.4 |
//! | `ruin.{units, mode, alpha_seed}` | `seconds`, `one_shot`, 0 |
//! | `seeds.{topology, traffic, replications}` | 1, 2, 200 |
//! | `sweeps` | `psi` over 0, 0.1, .., 1 and `wst` over 5, 10, 15, 20 |

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::duty::{DutyCyclePolicy, FrameConfig, SurplusUnits};
use crate::rng::derive_seed;
use crate::sim::{
    generate_topology, simulate_long_frame, PsiSource, RadioConfig, RuinMode, Scheme, SimSetup,
    TopologyConfig, TrafficModel,
};
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RuinSettings {
    pub units: SurplusUnits,
    pub mode: RuinMode,
    pub alpha_seed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seeds {
    pub topology: u64,
    pub traffic: u64,
    pub replications: u32,
}

impl Default for Seeds {
    fn default() -> Self {
        Self {
            topology: 1,
            traffic: 2,
            replications: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    /// Imposed ruin probability; the surplus model is bypassed.
    Psi,
    WstCount,
    LambdaBase,
}

impl SweepVariable {
    pub fn name(&self) -> &'static str {
        match self {
            SweepVariable::Psi => "psi",
            SweepVariable::WstCount => "wst_count",
            SweepVariable::LambdaBase => "lambda_base",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub name: String,
    pub variable: SweepVariable,
    pub values: Vec<f64>,
}

fn default_sweeps() -> Vec<SweepSpec> {
    vec![
        SweepSpec {
            name: "psi".into(),
            variable: SweepVariable::Psi,
            values: (0..=10).map(|i| f64::from(i) / 10.0).collect(),
        },
        SweepSpec {
            name: "wst".into(),
            variable: SweepVariable::WstCount,
            values: vec![5.0, 10.0, 15.0, 20.0],
        },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub frame: FrameConfig,
    pub topology: TopologyConfig,
    pub traffic: TrafficModel,
    pub radio: RadioConfig,
    pub policy: DutyCyclePolicy,
    pub ruin: RuinSettings,
    pub sweeps: Vec<SweepSpec>,
    pub seeds: Seeds,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            frame: FrameConfig::default(),
            topology: TopologyConfig::default(),
            traffic: TrafficModel::default(),
            radio: RadioConfig::default(),
            policy: DutyCyclePolicy::default(),
            ruin: RuinSettings::default(),
            sweeps: default_sweeps(),
            seeds: Seeds::default(),
        }
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::config(
            field,
            format!("must be finite and > 0, got {v}"),
        ))
    }
}

impl ScenarioConfig {
    /// Parses and validates a JSON scenario.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(
                if path == "." {
                    "<root>".to_string()
                } else {
                    path
                },
                e.inner().to_string(),
            )
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let f = &self.frame;
        if f.short_frames == 0 {
            return Err(Error::config("frame.short_frames", "must be >= 1"));
        }
        positive("frame.short_frame_duration", f.short_frame_duration)?;
        if f.reserved_wifi_frames > f.short_frames {
            return Err(Error::config(
                "frame.reserved_wifi_frames",
                "must not exceed short_frames",
            ));
        }
        self.topology.validate()?;
        positive("traffic.lambda_base", self.traffic.lambda_base)?;
        positive("traffic.mu", self.traffic.mu)?;
        positive("radio.bandwidth", self.radio.bandwidth)?;
        positive("radio.ue_power", self.radio.ue_power)?;
        positive("radio.noise", self.radio.noise)?;
        positive("radio.path.ref_distance", self.radio.path.ref_distance)?;
        positive("radio.wifi_phy_rate", self.radio.wifi_phy_rate)?;
        if !(self.radio.path.ref_gain.is_finite() && self.radio.path.ref_gain >= 0.0) {
            return Err(Error::config(
                "radio.path.ref_gain",
                "must be finite and >= 0",
            ));
        }
        if !self.radio.path.exponent.is_finite() {
            return Err(Error::config("radio.path.exponent", "must be finite"));
        }
        if !(0.0..=1.0).contains(&self.policy.psi_cutoff) {
            return Err(Error::config("policy.psi_cutoff", "must lie in [0, 1]"));
        }
        let alpha = self.ruin.alpha_seed;
        if !(alpha.is_finite() && (0.0..=f.long_frame()).contains(&alpha)) {
            return Err(Error::config("ruin.alpha_seed", "must lie in [0, T]"));
        }
        if self.seeds.replications == 0 {
            return Err(Error::config("seeds.replications", "must be >= 1"));
        }
        if self.sweeps.is_empty() {
            return Err(Error::config("sweeps", "at least one sweep is required"));
        }
        let mut names = std::collections::BTreeSet::new();
        for (i, sweep) in self.sweeps.iter().enumerate() {
            let at = |field: &str| format!("sweeps[{i}].{field}");
            if sweep.name.is_empty()
                || !sweep
                    .name
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
            {
                return Err(Error::config(at("name"), "must be non-empty [A-Za-z0-9_-]"));
            }
            if !names.insert(sweep.name.as_str()) {
                return Err(Error::config(
                    at("name"),
                    format!("duplicate sweep name `{}`", sweep.name),
                ));
            }
            if sweep.values.is_empty() {
                return Err(Error::config(at("values"), "must be non-empty"));
            }
            if sweep
                .values
                .windows(2)
                .any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less))
            {
                return Err(Error::config(at("values"), "must be strictly increasing"));
            }
            for (j, v) in sweep.values.iter().enumerate() {
                let ok = match sweep.variable {
                    SweepVariable::Psi => (0.0..=1.0).contains(v),
                    SweepVariable::WstCount => {
                        *v >= 1.0 && v.fract() == 0.0 && *v <= f64::from(u32::MAX)
                    }
                    SweepVariable::LambdaBase => v.is_finite() && *v > 0.0,
                };
                if !ok {
                    let want = match sweep.variable {
                        SweepVariable::Psi => "a probability in [0, 1]",
                        SweepVariable::WstCount => "a positive integer",
                        SweepVariable::LambdaBase => "finite and > 0",
                    };
                    return Err(Error::config(
                        format!("sweeps[{i}].values[{j}]"),
                        format!("{v} is not {want}"),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn sweep(&self, name: &str) -> Result<&SweepSpec> {
        self.sweeps
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| Error::config("sweeps", format!("no sweep named `{name}`")))
    }

    fn setup(&self, psi_source: PsiSource) -> SimSetup {
        SimSetup {
            frame: self.frame,
            traffic: self.traffic,
            policy: self.policy,
            radio: self.radio,
            psi_source,
        }
    }

    fn surplus_source(&self) -> PsiSource {
        PsiSource::Surplus {
            units: self.ruin.units,
            mode: self.ruin.mode,
            alpha_seed: self.ruin.alpha_seed,
        }
    }
}

/// Mean and sample standard deviation over replications.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
}

/// Welford accumulator; a constant input yields exactly that constant as mean.
#[derive(Debug, Clone, Copy, Default)]
struct Running {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Running {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn summary(&self) -> Summary {
        let std = if self.n > 1 {
            (self.m2.max(0.0) / (self.n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Summary {
            mean: self.mean,
            std,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SchemeStats {
    pub wifi_throughput: Summary,
    pub lte_sum_rate: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub sweep_value: f64,
    /// Indexed like [`Scheme::ALL`]; totals over all channels of a long frame.
    pub schemes: [SchemeStats; 4],
    /// Ruin-fair LTE-U share averaged over channels and replications.
    pub mean_alpha_star: f64,
    pub mean_psi: f64,
}

impl SweepRow {
    pub fn scheme(&self, scheme: Scheme) -> &SchemeStats {
        let i = Scheme::ALL
            .iter()
            .position(|s| *s == scheme)
            .expect("scheme listed in ALL");
        &self.schemes[i]
    }
}

/// Per-replication totals: `[scheme] -> (wifi, lte)`, plus ruin-fair alpha and psi per channel.
struct Replication {
    totals: [(f64, f64); 4],
    alphas: Vec<f64>,
    psis: Vec<f64>,
}

fn run_replication(
    config: &ScenarioConfig,
    topo_cfg: &TopologyConfig,
    setup: &SimSetup,
    r: u32,
) -> Result<Replication> {
    let topology = generate_topology(derive_seed(config.seeds.topology, u64::from(r)), topo_cfg)?;
    let traffic_seed = derive_seed(config.seeds.traffic, u64::from(r));
    let mut totals = [(0.0, 0.0); 4];
    let mut alphas = Vec::new();
    let mut psis = Vec::new();
    for (slot, scheme) in totals.iter_mut().zip(Scheme::ALL) {
        for o in simulate_long_frame(&topology, setup, scheme, traffic_seed)? {
            slot.0 += o.wifi_throughput;
            slot.1 += o.lte_sum_rate;
            if scheme == Scheme::RuinFair {
                alphas.push(o.lte_time);
                psis.push(o.psi.unwrap_or(0.0));
            }
        }
    }
    Ok(Replication {
        totals,
        alphas,
        psis,
    })
}

/// Runs every value of the named sweep.
pub fn run_sweep(config: &ScenarioConfig, sweep_name: &str) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let sweep = config.sweep(sweep_name)?;
    sweep
        .values
        .iter()
        .map(|&value| {
            let mut topo_cfg = config.topology;
            let mut setup = config.setup(config.surplus_source());
            match sweep.variable {
                SweepVariable::Psi => setup.psi_source = PsiSource::Fixed(value),
                SweepVariable::WstCount => topo_cfg.wst_per_wap = value as u32,
                SweepVariable::LambdaBase => setup.traffic.lambda_base = value,
            }
            let reps = (0..config.seeds.replications)
                .into_par_iter()
                .map(|r| run_replication(config, &topo_cfg, &setup, r))
                .collect::<Result<Vec<_>>>()?;

            let mut wifi = [Running::default(); 4];
            let mut lte = [Running::default(); 4];
            let mut alpha = Running::default();
            let mut psi = Running::default();
            for rep in &reps {
                for (i, (w, l)) in rep.totals.iter().enumerate() {
                    wifi[i].push(*w);
                    lte[i].push(*l);
                }
                rep.alphas.iter().for_each(|a| alpha.push(*a));
                rep.psis.iter().for_each(|p| psi.push(*p));
            }
            let schemes = std::array::from_fn(|i| SchemeStats {
                wifi_throughput: wifi[i].summary(),
                lte_sum_rate: lte[i].summary(),
            });
            Ok(SweepRow {
                sweep_value: value,
                schemes,
                mean_alpha_star: alpha.summary().mean,
                mean_psi: psi.summary().mean,
            })
        })
        .collect()
}

/// `%.9g`-style formatting: 9 significant digits, trailing zeros trimmed.
pub fn format_sig9(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if !(-5..9).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim(mantissa), exp.abs())
    } else {
        let decimals = (8 - exp).max(0) as usize;
        trim(&format!("{v:.decimals$}"))
    }
}

pub fn csv_header(variable: SweepVariable) -> String {
    let mut cols = vec![variable.name().to_string()];
    for scheme in Scheme::ALL {
        for metric in ["wifi_throughput", "lte_sum_rate"] {
            for stat in ["mean", "std"] {
                cols.push(format!("{}_{metric}_{stat}", scheme.name()));
            }
        }
    }
    cols.push("mean_alpha_star".into());
    cols.push("mean_psi".into());
    cols.join(",")
}

pub fn render_csv(rows: &[SweepRow], variable: SweepVariable) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::domain("no rows to write"));
    }
    let mut out = csv_header(variable);
    out.push('\n');
    for row in rows {
        let mut fields = vec![format_sig9(row.sweep_value)];
        for s in &row.schemes {
            for summary in [s.wifi_throughput, s.lte_sum_rate] {
                fields.push(format_sig9(summary.mean));
                fields.push(format_sig9(summary.std));
            }
        }
        fields.push(format_sig9(row.mean_alpha_star));
        fields.push(format_sig9(row.mean_psi));
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    Ok(out)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn emit_csv(rows: &[SweepRow], variable: SweepVariable, path: &Path) -> Result<()> {
    write_file(path, &render_csv(rows, variable)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub sweep: String,
    pub artifact_versions: BTreeMap<String, String>,
    pub seeds: Seeds,
    /// Fully resolved scenario, defaults expanded.
    pub config: ScenarioConfig,
}

pub fn artifact_versions() -> BTreeMap<String, String> {
    BTreeMap::from([
        (
            env!("CARGO_PKG_NAME").to_string(),
            env!("CARGO_PKG_VERSION").to_string(),
        ),
        (
            "rng".to_string(),
            "chacha8/seed_from_u64+splitmix64".to_string(),
        ),
        ("csv_schema".to_string(), SCHEMA_VERSION.to_string()),
    ])
}

pub fn render_manifest(
    config: &ScenarioConfig,
    sweep: &str,
    versions: &BTreeMap<String, String>,
) -> Result<String> {
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        sweep: sweep.to_string(),
        artifact_versions: versions.clone(),
        seeds: config.seeds,
        config: config.clone(),
    };
    let mut text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::Numerical(format!("manifest serialization failed: {e}")))?;
    text.push('\n');
    Ok(text)
}

pub fn emit_manifest(
    config: &ScenarioConfig,
    sweep: &str,
    versions: &BTreeMap<String, String>,
    path: &Path,
) -> Result<()> {
    write_file(path, &render_manifest(config, sweep, versions)?)
}

/// Runs one sweep and writes `sweep_<name>.csv` and `manifest_<name>.json` into `out`.
pub fn run_and_write(
    config: &ScenarioConfig,
    sweep_name: &str,
    out: &Path,
) -> Result<Vec<SweepRow>> {
    let rows = run_sweep(config, sweep_name)?;
    let variable = config.sweep(sweep_name)?.variable;
    fs::create_dir_all(out).map_err(|source| Error::Io {
        path: out.to_path_buf(),
        source,
    })?;
    emit_csv(
        &rows,
        variable,
        &out.join(format!("sweep_{sweep_name}.csv")),
    )?;
    emit_manifest(
        config,
        sweep_name,
        &artifact_versions(),
        &out.join(format!("manifest_{sweep_name}.json")),
    )?;
    Ok(rows)
}
