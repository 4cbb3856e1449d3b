//! Run configuration: a single TOML file with lab-style sections. Unknown
//! keys are rejected; every physical value passes the module-level
//! constructors at load time. Interface units (μA, pF, GHz, dBm, ns, ms)
//! convert to SI here and nowhere else.

use crate::error::{Error, Result};
use crate::escape::ThermalEnvironment;
use crate::junction::{JunctionParams, RfPulse};
use crate::protocol::{BiasWaveform, ProtocolConfig};
use crate::seeding;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub junction: JunctionSection,
    pub environment: EnvironmentSection,
    pub protocol: ProtocolSection,
    pub rf: RfSection,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub map: Option<MapSection>,
    #[serde(default)]
    pub sensitivity: Option<SensitivitySection>,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JunctionSection {
    pub ic_ua: f64,
    pub c_pf: f64,
    pub r_ohm: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentSection {
    pub t_mk: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSection {
    #[serde(default = "default_ramp_ms")]
    pub ramp_ms: f64,
    #[serde(default = "default_hold_ms")]
    pub hold_ms: f64,
    #[serde(default = "default_reset_ms")]
    pub reset_ms: f64,
    #[serde(default = "default_t_rf_ms")]
    pub t_rf_ms: f64,
    #[serde(default = "default_timeout_cycles")]
    pub timeout_cycles: u32,
    #[serde(default = "default_events")]
    pub events: usize,
    /// Hold current during the constant segment (μA).
    pub hold_bias_ua: f64,
}

fn default_ramp_ms() -> f64 {
    2.0
}
fn default_hold_ms() -> f64 {
    11.0
}
fn default_reset_ms() -> f64 {
    1.0
}
fn default_t_rf_ms() -> f64 {
    7.0
}
fn default_timeout_cycles() -> u32 {
    10
}
fn default_events() -> usize {
    2000
}

/// RF stimulus plus the generator's efficiency model for synthetic data.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RfSection {
    pub freq_ghz: f64,
    pub power_dbm: f64,
    pub width_ns: f64,
    /// Efficiency model for the synthetic generator: "poisson" (per-trial
    /// ε_j over ΔT/τ_j windows), "sigmoid_photon" (logistic in N_γ),
    /// "sigmoid_level" (logistic in N_level), or "fixed".
    #[serde(default = "default_model")]
    pub model: String,
    #[serde(default = "default_eps_j")]
    pub eps_j: f64,
    #[serde(default = "default_center")]
    pub center: f64,
    #[serde(default = "default_scale")]
    pub scale: f64,
    #[serde(default = "default_value")]
    pub value: f64,
}

fn default_model() -> String {
    "poisson".into()
}
fn default_eps_j() -> f64 {
    2.7e-4
}
fn default_center() -> f64 {
    12.0
}
fn default_scale() -> f64 {
    2.0
}
fn default_value() -> f64 {
    0.5
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Swept variable: "bias_ua", "power_dbm" or "width_ns".
    pub variable: String,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    /// Logarithmic spacing (natural for pulse-width scans).
    #[serde(default)]
    pub log: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSection {
    /// Bias grid bounds expressed as well depths in level counts; the bias
    /// axis runs from the deeper well (level_max) up in bias.
    pub level_min: f64,
    pub level_max: f64,
    #[serde(default = "default_grid_points")]
    pub bias_points: usize,
    pub photon_min: f64,
    pub photon_max: f64,
    #[serde(default = "default_grid_points")]
    pub photon_points: usize,
    /// Ceiling on grid cells × trajectories.
    #[serde(default = "default_budget")]
    pub budget: u64,
    /// Overlay the N_γ = N_level energy-threshold curve on the plot.
    #[serde(default)]
    pub overlay_level_curve: bool,
}

fn default_grid_points() -> usize {
    8
}
fn default_budget() -> u64 {
    5_000_000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivitySection {
    /// Photon-number detection threshold the figures are quoted at.
    #[serde(default = "default_n_gamma")]
    pub n_gamma: f64,
}

fn default_n_gamma() -> f64 {
    10.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_trajectories")]
    pub trajectories: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_rf_coupling")]
    pub rf_coupling: f64,
}

fn default_trajectories() -> usize {
    200
}
fn default_dt() -> f64 {
    0.02
}
fn default_rf_coupling() -> f64 {
    2.0
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            seed: 0,
            trajectories: default_trajectories(),
            dt: default_dt(),
            rf_coupling: default_rf_coupling(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    /// Histogram bin width (ms); default t_rf/70.
    #[serde(default)]
    pub bin_width_ms: Option<f64>,
    /// Dark-rate boundary between the histogram-fit and ratio-estimator
    /// efficiency routes (Hz).
    #[serde(default = "default_dark_threshold")]
    pub dark_rate_threshold_hz: f64,
}

fn default_dark_threshold() -> f64 {
    1.0
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self {
            bin_width_ms: None,
            dark_rate_threshold_hz: default_dark_threshold(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Output directory; when absent the CBJJ_OUT_DIR environment variable
    /// and then "out" apply.
    #[serde(default)]
    pub directory: Option<String>,
    #[serde(default = "default_formats")]
    pub formats: Vec<String>,
}

fn default_formats() -> Vec<String> {
    vec!["csv".into(), "json".into(), "svg".into()]
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: None,
            formats: default_formats(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("config parse: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Check every section against the module-level invariants.
    pub fn validate(&self) -> Result<()> {
        let params = self.junction_params()?;
        self.thermal_environment()?;
        let wf = self.waveform()?;
        if wf.hold_current >= params.critical_current {
            return Err(Error::Config(
                "protocol.hold_bias_ua must stay below junction.ic_ua".into(),
            ));
        }
        self.protocol_config()?.validate(&wf)?;
        self.pulse()?;
        if let Some(sweep) = &self.sweep {
            if sweep.points == 0 {
                return Err(Error::Config("sweep.points must be >= 1".into()));
            }
            match sweep.variable.as_str() {
                "bias_ua" | "power_dbm" | "width_ns" => {}
                v => {
                    return Err(Error::Config(format!(
                        "unknown sweep.variable '{v}' (expected bias_ua, power_dbm or width_ns)"
                    )))
                }
            }
            if sweep.log && (sweep.start <= 0.0 || sweep.stop <= 0.0) {
                return Err(Error::Config("log sweeps need positive bounds".into()));
            }
        }
        match self.rf.model.as_str() {
            "poisson" | "sigmoid_photon" | "sigmoid_level" | "fixed" => {}
            m => {
                return Err(Error::Config(format!(
                    "unknown rf.model '{m}' (expected poisson, sigmoid_photon, sigmoid_level or fixed)"
                )))
            }
        }
        if !(0.0..=1.0).contains(&self.rf.value) || !(0.0..=1.0).contains(&self.rf.eps_j) {
            return Err(Error::Config(
                "rf.value and rf.eps_j must lie in [0, 1]".into(),
            ));
        }
        if let Some(map) = &self.map {
            if map.level_min >= map.level_max || map.level_min <= 0.0 {
                return Err(Error::Config(
                    "map.level_min must be positive and below map.level_max".into(),
                ));
            }
            if map.bias_points < 2 || map.photon_points < 2 {
                return Err(Error::Config("map grids need at least 2 points".into()));
            }
            if map.photon_min >= map.photon_max || map.photon_min < 0.0 {
                return Err(Error::Config(
                    "map.photon_min must be nonnegative and below map.photon_max".into(),
                ));
            }
        }
        for f in &self.output.formats {
            match f.as_str() {
                "csv" | "json" | "svg" => {}
                other => return Err(Error::Config(format!("unknown output format '{other}'"))),
            }
        }
        if !(self.sim.dt > 0.0 && self.sim.dt <= 0.1) {
            return Err(Error::Config("sim.dt must lie in (0, 0.1]".into()));
        }
        Ok(())
    }

    pub fn junction_params(&self) -> Result<JunctionParams> {
        JunctionParams::new(
            self.junction.ic_ua * 1e-6,
            self.junction.c_pf * 1e-12,
            self.junction.r_ohm,
        )
    }

    pub fn thermal_environment(&self) -> Result<ThermalEnvironment> {
        ThermalEnvironment::new(self.environment.t_mk * 1e-3)
    }

    pub fn waveform(&self) -> Result<BiasWaveform> {
        BiasWaveform::new(
            self.protocol.ramp_ms * 1e-3,
            self.protocol.hold_bias_ua * 1e-6,
            self.protocol.hold_ms * 1e-3,
            self.protocol.reset_ms * 1e-3,
        )
    }

    pub fn protocol_config(&self) -> Result<ProtocolConfig> {
        Ok(ProtocolConfig {
            rf_delay: self.protocol.t_rf_ms * 1e-3,
            timeout_cycles: self.protocol.timeout_cycles,
            events_target: self.protocol.events,
            seed: self.sim.seed,
        })
    }

    pub fn pulse(&self) -> Result<RfPulse> {
        RfPulse::new(
            self.rf.freq_ghz * 1e9,
            self.rf.power_dbm,
            self.rf.width_ns * 1e-9,
            self.protocol.t_rf_ms * 1e-3,
        )
    }

    /// Histogram bin width (s); defaults to t_rf/70.
    pub fn bin_width(&self) -> f64 {
        match self.analysis.bin_width_ms {
            Some(ms) => ms * 1e-3,
            None => self.protocol.t_rf_ms * 1e-3 / 70.0,
        }
    }

    /// Sweep grid values in the sweep variable's interface unit.
    pub fn sweep_grid(&self) -> Result<Vec<f64>> {
        let sweep = self
            .sweep
            .as_ref()
            .ok_or_else(|| Error::Config("this command needs a [sweep] section".into()))?;
        if sweep.points == 1 {
            return Ok(vec![sweep.start]);
        }
        let n = sweep.points;
        Ok((0..n)
            .map(|k| {
                let f = k as f64 / (n - 1) as f64;
                if sweep.log {
                    (sweep.start.ln() + f * (sweep.stop.ln() - sweep.start.ln())).exp()
                } else {
                    sweep.start + f * (sweep.stop - sweep.start)
                }
            })
            .collect())
    }

    /// Canonical serialized form (stable key order via the struct layout).
    pub fn canonical_toml(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }

    /// Stable digest of the canonical config text.
    pub fn digest(&self) -> String {
        format!(
            "{:016x}",
            seeding::tag_bytes(self.canonical_toml().as_bytes())
        )
    }
}
