//! Command implementations behind the CLI: sweep orchestration, fits and
//! report-bundle emission.
//!
//! Every command resolves one effective (config, seed, formats, out-dir)
//! tuple, computes its sweep points (in parallel, each point on its own
//! derived random stream), and writes CSV tables, JSON documents and SVG
//! plots with deterministic bytes. Partial per-point failures are flushed
//! into a failure manifest instead of aborting the sweep.

use super::config::RunConfig;
use super::svg::Figure;
use crate::analysis::{
    efficiency_from_fit, efficiency_low_dark, fit_exponential, fit_kramers, fit_pulse_width,
    fit_rf_histogram, EfficiencyEstimate, FitResult, Histogram, PulseWidthPoint,
};
use crate::dataset;
use crate::error::{Error, Result};
use crate::escape::{kramers_rate, RateCurve, RatePoint, ThermalEnvironment, PREFACTOR_Q_RANGE};
use crate::junction::{self, JunctionParams, RfPulse};
use crate::langevin::{switching_boundary_map, SimConfig};
use crate::protocol::{sample_dataset, BiasWaveform, SwitchingDataset};
use crate::seeding::{self, tags};
use rayon::prelude::*;
use serde::Serialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const FIT_SCHEMA: &str = "cbjj-fit-v1";
pub const PROVENANCE_SCHEMA: &str = "cbjj-provenance-v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl Format {
    pub fn parse_list(names: &[String]) -> Result<Vec<Format>> {
        names
            .iter()
            .map(|n| match n.as_str() {
                "csv" => Ok(Format::Csv),
                "json" => Ok(Format::Json),
                "svg" => Ok(Format::Svg),
                other => Err(Error::Config(format!("unknown format '{other}'"))),
            })
            .collect()
    }
}

/// Flag-level overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub formats: Option<Vec<String>>,
}

/// Resolved execution context for one command run.
pub struct CommandContext {
    pub config: RunConfig,
    pub out_dir: PathBuf,
    pub formats: Vec<Format>,
    pub jobs: Option<usize>,
}

impl CommandContext {
    pub fn new(mut config: RunConfig, overrides: Overrides) -> Result<Self> {
        if let Some(seed) = overrides.seed {
            config.sim.seed = seed;
        }
        if let Some(formats) = &overrides.formats {
            config.output.formats = formats.clone();
        }
        let formats = Format::parse_list(&config.output.formats)?;
        let out_dir = overrides
            .out_dir
            .or_else(|| config.output.directory.as_ref().map(PathBuf::from))
            .or_else(|| std::env::var_os("CBJJ_OUT_DIR").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"));
        Ok(Self {
            config,
            out_dir,
            formats,
            jobs: overrides.jobs,
        })
    }

    fn seed(&self) -> u64 {
        self.config.sim.seed
    }

    fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }

    fn run_pooled<T: Send>(&self, f: impl FnOnce() -> T + Send) -> T {
        match self.jobs {
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .expect("thread pool")
                .install(f),
            None => f(),
        }
    }
}

/// What a command produced: file paths plus surfaced warnings.
#[derive(Debug, Clone, Default)]
pub struct ReportBundle {
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
struct Provenance {
    schema: &'static str,
    tool_version: &'static str,
    command: String,
    seed: u64,
    config_digest: String,
    warnings: Vec<String>,
    /// Effective config; re-running it with the same seed regenerates the
    /// bundle byte for byte.
    config_toml: String,
}

#[derive(Debug, Clone, Serialize)]
struct FitDocument<'a> {
    schema: &'static str,
    label: &'a str,
    fit: &'a FitResult,
    inputs_digest: String,
}

#[derive(Debug, Clone, Serialize)]
struct FailureEntry {
    point_index: usize,
    x: f64,
    error: String,
}

struct BundleWriter<'a> {
    ctx: &'a CommandContext,
    command: &'static str,
    bundle: ReportBundle,
    failures: Vec<FailureEntry>,
}

impl<'a> BundleWriter<'a> {
    fn new(ctx: &'a CommandContext, command: &'static str) -> Result<Self> {
        std::fs::create_dir_all(&ctx.out_dir)?;
        Ok(Self {
            ctx,
            command,
            bundle: ReportBundle::default(),
            failures: Vec::new(),
        })
    }

    fn warn(&mut self, message: impl Into<String>) {
        self.bundle.warnings.push(message.into());
    }

    fn fail_point(&mut self, point_index: usize, x: f64, error: &Error) {
        self.failures.push(FailureEntry {
            point_index,
            x,
            error: error.to_string(),
        });
    }

    fn write_text(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.ctx.out_dir.join(name);
        std::fs::write(&path, text.as_bytes())?;
        self.bundle.files.push(path);
        Ok(())
    }

    fn write_csv(&mut self, name: &str, header_lines: &[String], rows: &[String]) -> Result<()> {
        if !self.ctx.wants(Format::Csv) {
            return Ok(());
        }
        let mut text = String::new();
        for line in header_lines {
            let _ = writeln!(text, "# {line}");
        }
        for row in rows {
            let _ = writeln!(text, "{row}");
        }
        self.write_text(name, &text)
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        if !self.ctx.wants(Format::Json) {
            return Ok(());
        }
        let text = serde_json::to_string_pretty(value)
            .map_err(|e| Error::Config(format!("json encode: {e}")))?;
        self.write_text(name, &(text + "\n"))
    }

    fn write_fit_json(&mut self, name: &str, label: &str, fit: &FitResult, inputs: &str) -> Result<()> {
        let doc = FitDocument {
            schema: FIT_SCHEMA,
            label,
            fit,
            inputs_digest: format!("{:016x}", seeding::tag_bytes(inputs.as_bytes())),
        };
        self.write_json(name, &doc)
    }

    fn write_svg(&mut self, name: &str, figure: &Figure) -> Result<()> {
        if !self.ctx.wants(Format::Svg) {
            return Ok(());
        }
        self.write_text(name, &figure.render())
    }

    fn finish(mut self) -> Result<ReportBundle> {
        if !self.failures.is_empty() {
            let failures = std::mem::take(&mut self.failures);
            for f in &failures {
                self.bundle
                    .warnings
                    .push(format!("point {} (x={}) failed: {}", f.point_index, f.x, f.error));
            }
            let ctx = self.ctx;
            if ctx.wants(Format::Json) {
                let text = serde_json::to_string_pretty(&failures)
                    .map_err(|e| Error::Config(format!("json encode: {e}")))?;
                let path = ctx.out_dir.join(format!("{}_failures.json", self.command));
                std::fs::write(&path, text + "\n")?;
                self.bundle.files.push(path);
            }
        }
        let provenance = Provenance {
            schema: PROVENANCE_SCHEMA,
            tool_version: env!("CARGO_PKG_VERSION"),
            command: self.command.to_string(),
            seed: self.ctx.seed(),
            config_digest: self.ctx.config.digest(),
            warnings: self.bundle.warnings.clone(),
            config_toml: self.ctx.config.canonical_toml(),
        };
        let text = serde_json::to_string_pretty(&provenance)
            .map_err(|e| Error::Config(format!("json encode: {e}")))?;
        let path = self.ctx.out_dir.join("provenance.json");
        std::fs::write(&path, text + "\n")?;
        self.bundle.files.push(path);
        Ok(self.bundle)
    }
}

/// Model-validity warnings shared by the synthetic-data commands.
fn physics_warnings(ctx: &CommandContext, bias: f64) -> Vec<String> {
    let mut out = Vec::new();
    if let (Ok(params), Ok(env)) = (ctx.config.junction_params(), ctx.config.thermal_environment())
    {
        if env.below_crossover(&params, bias).unwrap_or(false) {
            out.push(format!(
                "environment temperature {} K sits below the thermal/quantum crossover; \
                 the thermal escape model loses validity",
                env.temperature
            ));
        }
        if let Ok(q) = junction::quality_factor(&params, bias) {
            if q < PREFACTOR_Q_RANGE.0 || q > PREFACTOR_Q_RANGE.1 {
                out.push(format!(
                    "quality factor {q:.2} outside the trusted damping-prefactor range"
                ));
            }
        }
    }
    out
}

fn fmt_f(v: f64) -> String {
    format!("{v}")
}

// ---------------------------------------------------------------------------
// rate-curve
// ---------------------------------------------------------------------------

struct RatePointOutcome {
    bias_ua: f64,
    rate: Result<(f64, f64, usize)>,
}

/// Dark-count rate curve: one synthetic dataset per bias, an exponential
/// lifetime fit per point, and a thermal-activation fit over the curve.
pub fn cmd_rate_curve(ctx: &CommandContext) -> Result<ReportBundle> {
    let cfg = &ctx.config;
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Config("rate-curve needs a [sweep] section".into()))?;
    if sweep.variable != "bias_ua" {
        return Err(Error::Config("rate-curve sweeps bias_ua only".into()));
    }
    let grid = cfg.sweep_grid()?;
    let params = cfg.junction_params()?;
    let env = cfg.thermal_environment()?;
    let mut writer = BundleWriter::new(ctx, "rate_curve")?;
    for w in physics_warnings(ctx, grid[0] * 1e-6) {
        writer.warn(w);
    }

    let seed = ctx.seed();
    let outcomes: Vec<RatePointOutcome> = ctx.run_pooled(|| {
        grid.par_iter()
            .enumerate()
            .map(|(idx, &bias_ua)| RatePointOutcome {
                bias_ua,
                rate: rate_curve_point(cfg, &params, &env, bias_ua, seed, idx),
            })
            .collect()
    });

    let mut rows = Vec::new();
    let mut points = Vec::new();
    for (idx, o) in outcomes.iter().enumerate() {
        match &o.rate {
            Ok((rate, sigma, events)) => {
                rows.push(format!(
                    "{},{},{},{}",
                    fmt_f(o.bias_ua),
                    fmt_f(*rate),
                    fmt_f(*sigma),
                    events
                ));
                points.push(RatePoint {
                    bias_current: o.bias_ua * 1e-6,
                    rate: *rate,
                    rate_uncertainty: *sigma,
                });
            }
            Err(e) => writer.fail_point(idx, o.bias_ua, e),
        }
    }
    writer.write_csv(
        "rate_curve.csv",
        &[
            "dark-count escape rate vs bias current".into(),
            "columns: bias_ua, rate_hz, rate_sigma_hz, events".into(),
        ],
        &rows,
    )?;

    let curve = RateCurve::new(points.clone())?;
    let mut model_line = Vec::new();
    if points.len() >= 6 && curve.dynamic_range() >= 100.0 {
        let fit = fit_kramers(&curve, &params)?;
        let t_fit = fit.get("t_kelvin").unwrap_or(f64::NAN);
        let ic_fit = fit.get("ic_amps").unwrap_or(f64::NAN);
        if let (Ok(fit_params), Ok(fit_env)) = (
            JunctionParams::new(ic_fit, params.capacitance, params.shunt_resistance),
            ThermalEnvironment::new(t_fit),
        ) {
            for k in 0..120 {
                let b = points[0].bias_current
                    + (points.last().unwrap().bias_current - points[0].bias_current) * k as f64
                        / 119.0;
                if let Ok(r) = kramers_rate(&fit_params, &fit_env, b) {
                    if r > 0.0 {
                        model_line.push((b * 1e6, r));
                    }
                }
            }
        }
        let inputs = rows.join(";");
        writer.write_fit_json("rate_curve_fit.json", "kramers", &fit, &inputs)?;
    } else {
        writer.warn("kramers fit skipped: needs >= 6 points spanning two decades".to_string());
    }

    if ctx.wants(Format::Svg) {
        let mut fig = Figure::new("Dark-count escape rate", "bias (uA)", "rate (Hz)").log_y();
        let pts: Vec<(f64, f64, f64)> = points
            .iter()
            .map(|p| (p.bias_current * 1e6, p.rate, p.rate_uncertainty))
            .collect();
        fig.error_bars(&pts, "#d62728");
        if !model_line.is_empty() {
            fig.line(&model_line, "#1f77b4");
        }
        writer.write_svg("rate_curve.svg", &fig)?;
    }
    writer.finish()
}

fn rate_curve_point(
    cfg: &RunConfig,
    params: &JunctionParams,
    env: &ThermalEnvironment,
    bias_ua: f64,
    seed: u64,
    idx: usize,
) -> Result<(f64, f64, usize)> {
    let bias = bias_ua * 1e-6;
    let wf = BiasWaveform::new(
        cfg.protocol.ramp_ms * 1e-3,
        bias,
        cfg.protocol.hold_ms * 1e-3,
        cfg.protocol.reset_ms * 1e-3,
    )?;
    let mut proto = cfg.protocol_config()?;
    proto.seed = seeding::derive_seed(seed, &[tags::SWEEP_POINT, seeding::tag_bytes(b"rate-curve"), idx as u64]);
    let ds = sample_dataset(params, env, &wf, None, &proto, 0.0)?;
    // With no pulse anywhere, the exposure coordinate runs through every
    // hold window up to the timeout.
    let lifetimes: Vec<f64> = ds.exposure_lifetimes().collect();
    if lifetimes.len() < 20 {
        return Err(Error::DegenerateHistogram(format!(
            "{} lifetimes at {bias_ua} uA",
            lifetimes.len()
        )));
    }
    let mean = lifetimes.iter().sum::<f64>() / lifetimes.len() as f64;
    // Resolve the decay with ~60 bins over the shorter of the full exposure
    // and twelve mean lifetimes.
    let max_exposure = proto.timeout_cycles as f64 * wf.hold_duration;
    let span = (12.0 * mean).min(max_exposure);
    let bin_width = span / 60.0;
    let n_bins = (span / bin_width).round() as usize;
    let hist = Histogram::from_lifetimes(lifetimes.iter().copied(), 0.0, bin_width, n_bins)?;
    let fit = fit_exponential(&hist)?;
    let tau = fit.get("tau").ok_or_else(|| Error::InvalidFit("no tau".into()))?;
    let sigma_tau = fit.uncertainty("tau").unwrap_or(f64::NAN);
    Ok((1.0 / tau, sigma_tau / (tau * tau), lifetimes.len()))
}

// ---------------------------------------------------------------------------
// efficiency-scan
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
struct EfficiencyPoint {
    x: f64,
    bias_ua: f64,
    power_dbm: f64,
    n_gamma: f64,
    n_level: f64,
    dark_rate_hz: f64,
    regime: &'static str,
    eps_true: f64,
    eps: f64,
    sigma: f64,
    clamped: bool,
}

/// Generator-truth efficiency at one sweep point.
fn model_efficiency(cfg: &RunConfig, params: &JunctionParams, pulse: &RfPulse, bias: f64) -> Result<f64> {
    let tau_j = params.relaxation_time();
    Ok(match cfg.rf.model.as_str() {
        "poisson" => crate::escape::poisson_switch_probability(cfg.rf.eps_j, pulse.width, tau_j)?,
        "sigmoid_photon" => {
            let n_gamma = junction::photon_number(pulse, tau_j)?;
            1.0 / (1.0 + (-(n_gamma - cfg.rf.center) / cfg.rf.scale).exp())
        }
        "sigmoid_level" => {
            let n_level = junction::level_count(params, bias)?;
            1.0 / (1.0 + (-(cfg.rf.center - n_level) / cfg.rf.scale).exp())
        }
        "fixed" => cfg.rf.value,
        other => return Err(Error::Config(format!("unknown rf.model '{other}'"))),
    })
}

fn efficiency_point(
    cfg: &RunConfig,
    params: &JunctionParams,
    env: &ThermalEnvironment,
    bias: f64,
    pulse: &RfPulse,
    seed: u64,
    command: &'static [u8],
    idx: usize,
) -> Result<(EfficiencyEstimate, f64, f64, &'static str)> {
    let eps_true = model_efficiency(cfg, params, pulse, bias)?;
    let wf = BiasWaveform::new(
        cfg.protocol.ramp_ms * 1e-3,
        bias,
        cfg.protocol.hold_ms * 1e-3,
        cfg.protocol.reset_ms * 1e-3,
    )?;
    let mut proto = cfg.protocol_config()?;
    proto.seed = seeding::derive_seed(seed, &[tags::SWEEP_POINT, seeding::tag_bytes(command), idx as u64]);
    let ds = sample_dataset(params, env, &wf, Some(pulse), &proto, eps_true)?;
    let dark = kramers_rate(params, env, bias)?;
    if dark > cfg.analysis.dark_rate_threshold_hz {
        // Exposure histogram up to just before the second pulse: the dark
        // decay stays a single exponential and every pre-second-pulse event
        // contributes.
        let span = wf.hold_duration + proto.rf_delay;
        let hist = Histogram::from_dataset_exposure(&ds, cfg.bin_width(), span)?;
        let fit = fit_rf_histogram(&hist, proto.rf_delay)?;
        let est = efficiency_from_fit(&fit, proto.rf_delay)?;
        Ok((est, eps_true, dark, "high-dark"))
    } else {
        let est = efficiency_low_dark(&ds)?;
        Ok((est, eps_true, dark, "low-dark"))
    }
}

/// Crossing of ε = 0.5 along a coordinate, linearly interpolated with the
/// two bracketing points' uncertainties propagated.
fn half_efficiency_crossing(points: &[(f64, f64, f64)]) -> Option<(f64, f64)> {
    for w in points.windows(2) {
        let (x1, e1, s1) = w[0];
        let (x2, e2, s2) = w[1];
        if (e1 - 0.5) * (e2 - 0.5) <= 0.0 && e1 != e2 {
            let d = x2 - x1;
            let span = e2 - e1;
            let x = x1 + (0.5 - e1) * d / span;
            let g1 = d * (0.5 - e2) / (span * span);
            let g2 = -d * (0.5 - e1) / (span * span);
            let sigma = ((g1 * s1).powi(2) + (g2 * s2).powi(2)).sqrt();
            return Some((x, sigma));
        }
    }
    None
}

/// Switching-efficiency scan over bias or RF power, with the estimator
/// chosen per point by the dark-rate regime.
pub fn cmd_efficiency_scan(ctx: &CommandContext) -> Result<ReportBundle> {
    let cfg = &ctx.config;
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Config("efficiency-scan needs a [sweep] section".into()))?;
    let grid = cfg.sweep_grid()?;
    let params = cfg.junction_params()?;
    let env = cfg.thermal_environment()?;
    let base_pulse = cfg.pulse()?;
    let tau_j = params.relaxation_time();
    let sweep_bias = match sweep.variable.as_str() {
        "bias_ua" => true,
        "power_dbm" => false,
        v => {
            return Err(Error::Config(format!(
                "efficiency-scan sweeps bias_ua or power_dbm, not '{v}'"
            )))
        }
    };

    let mut writer = BundleWriter::new(ctx, "efficiency_scan")?;
    for w in physics_warnings(ctx, cfg.protocol.hold_bias_ua * 1e-6) {
        writer.warn(w);
    }

    let seed = ctx.seed();
    let outcomes: Vec<(f64, Result<(EfficiencyEstimate, f64, f64, &'static str)>)> =
        ctx.run_pooled(|| {
            grid.par_iter()
                .enumerate()
                .map(|(idx, &x)| {
                    let run = || {
                        let (bias, pulse) = if sweep_bias {
                            (x * 1e-6, base_pulse)
                        } else {
                            (
                                cfg.protocol.hold_bias_ua * 1e-6,
                                RfPulse::new(
                                    base_pulse.frequency,
                                    x,
                                    base_pulse.width,
                                    base_pulse.arrival_time,
                                )?,
                            )
                        };
                        efficiency_point(cfg, &params, &env, bias, &pulse, seed, b"efficiency-scan", idx)
                    };
                    (x, run())
                })
                .collect()
        });

    let mut rows = Vec::new();
    let mut json_points = Vec::new();
    for (idx, (x, outcome)) in outcomes.iter().enumerate() {
        match outcome {
            Ok((est, eps_true, dark, regime)) => {
                let (bias_ua, power_dbm) = if sweep_bias {
                    (*x, cfg.rf.power_dbm)
                } else {
                    (cfg.protocol.hold_bias_ua, *x)
                };
                let pulse = RfPulse::new(
                    base_pulse.frequency,
                    power_dbm,
                    base_pulse.width,
                    base_pulse.arrival_time,
                )?;
                let point = EfficiencyPoint {
                    x: *x,
                    bias_ua,
                    power_dbm,
                    n_gamma: junction::photon_number(&pulse, tau_j)?,
                    n_level: junction::level_count(&params, bias_ua * 1e-6)?,
                    dark_rate_hz: *dark,
                    regime,
                    eps_true: *eps_true,
                    eps: est.value,
                    sigma: est.sigma,
                    clamped: est.clamped,
                };
                rows.push(format!(
                    "{},{},{},{},{},{},{},{},{},{}",
                    fmt_f(point.x),
                    fmt_f(point.bias_ua),
                    fmt_f(point.power_dbm),
                    fmt_f(point.n_gamma),
                    fmt_f(point.n_level),
                    fmt_f(point.dark_rate_hz),
                    point.regime,
                    fmt_f(point.eps_true),
                    fmt_f(point.eps),
                    fmt_f(point.sigma),
                ));
                json_points.push(point);
            }
            Err(e) => writer.fail_point(idx, *x, e),
        }
    }
    writer.write_csv(
        "efficiency_scan.csv",
        &[
            format!("switching efficiency vs {}", sweep.variable),
            "columns: x, bias_ua, power_dbm, n_gamma, n_level, dark_rate_hz, regime, eps_true, eps, eps_sigma"
                .into(),
        ],
        &rows,
    )?;

    // The crossing coordinate: photon number for power sweeps, bias for
    // bias sweeps.
    let coord: Vec<(f64, f64, f64)> = json_points
        .iter()
        .map(|p| {
            (
                if sweep_bias { p.bias_ua } else { p.n_gamma },
                p.eps,
                p.sigma,
            )
        })
        .collect();
    let crossing = half_efficiency_crossing(&coord);
    #[derive(Serialize)]
    struct ScanDoc<'a> {
        schema: &'static str,
        swept: &'a str,
        crossing_coordinate: &'static str,
        half_efficiency_crossing: Option<(f64, f64)>,
        points: &'a [EfficiencyPoint],
    }
    writer.write_json(
        "efficiency_scan.json",
        &ScanDoc {
            schema: FIT_SCHEMA,
            swept: &sweep.variable,
            crossing_coordinate: if sweep_bias { "bias_ua" } else { "n_gamma" },
            half_efficiency_crossing: crossing,
            points: &json_points,
        },
    )?;
    if crossing.is_none() {
        writer.warn("efficiency never crosses 0.5 on this sweep".to_string());
    }

    if ctx.wants(Format::Svg) {
        let x_axis = if sweep_bias { "bias (uA)" } else { "N_gamma" };
        let mut fig = Figure::new("Switching efficiency", x_axis, "efficiency");
        let pts: Vec<(f64, f64, f64)> = coord.clone();
        fig.error_bars(&pts, "#d62728");
        let truth: Vec<(f64, f64)> = json_points
            .iter()
            .map(|p| (if sweep_bias { p.bias_ua } else { p.n_gamma }, p.eps_true))
            .collect();
        fig.line(&truth, "#1f77b4");
        let top: Vec<(f64, String)> = json_points
            .iter()
            .map(|p| {
                if sweep_bias {
                    (p.bias_ua, format!("{:.1}", p.n_level))
                } else {
                    (p.n_gamma, format!("{:.1}", p.power_dbm))
                }
            })
            .collect();
        fig.top_axis_labels(&top);
        writer.write_svg("efficiency_scan.svg", &fig)?;
    }
    writer.finish()
}

// ---------------------------------------------------------------------------
// pulse-width-scan
// ---------------------------------------------------------------------------

/// Efficiency versus RF pulse duration with the independent-trials fit.
pub fn cmd_pulse_width_scan(ctx: &CommandContext) -> Result<ReportBundle> {
    let cfg = &ctx.config;
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Config("pulse-width-scan needs a [sweep] section".into()))?;
    if sweep.variable != "width_ns" {
        return Err(Error::Config("pulse-width-scan sweeps width_ns only".into()));
    }
    let grid = cfg.sweep_grid()?;
    let params = cfg.junction_params()?;
    let env = cfg.thermal_environment()?;
    let base_pulse = cfg.pulse()?;
    let bias = cfg.protocol.hold_bias_ua * 1e-6;
    let tau_j = params.relaxation_time();

    let mut writer = BundleWriter::new(ctx, "pulse_width_scan")?;
    for w in physics_warnings(ctx, bias) {
        writer.warn(w);
    }

    let seed = ctx.seed();
    let outcomes: Vec<(f64, Result<(EfficiencyEstimate, f64, f64, &'static str)>)> =
        ctx.run_pooled(|| {
            grid.par_iter()
                .enumerate()
                .map(|(idx, &width_ns)| {
                    let run = || {
                        let pulse = RfPulse::new(
                            base_pulse.frequency,
                            base_pulse.power_dbm,
                            width_ns * 1e-9,
                            base_pulse.arrival_time,
                        )?;
                        efficiency_point(cfg, &params, &env, bias, &pulse, seed, b"pulse-width-scan", idx)
                    };
                    (width_ns, run())
                })
                .collect()
        });

    let mut rows = Vec::new();
    let mut fit_points = Vec::new();
    for (idx, (width_ns, outcome)) in outcomes.iter().enumerate() {
        match outcome {
            Ok((est, eps_true, _dark, regime)) => {
                rows.push(format!(
                    "{},{},{},{},{}",
                    fmt_f(*width_ns),
                    fmt_f(*eps_true),
                    fmt_f(est.value),
                    fmt_f(est.sigma),
                    regime
                ));
                fit_points.push(PulseWidthPoint {
                    width: width_ns * 1e-9,
                    efficiency: est.value,
                    sigma: est.sigma.max(1e-6),
                });
            }
            Err(e) => writer.fail_point(idx, *width_ns, e),
        }
    }
    writer.write_csv(
        "pulse_width_scan.csv",
        &[
            "switching efficiency vs RF pulse duration".into(),
            "columns: width_ns, eps_true, eps, eps_sigma, regime".into(),
        ],
        &rows,
    )?;

    let mut model_line = Vec::new();
    if fit_points.len() >= 4 {
        let fit = fit_pulse_width(&fit_points, tau_j)?;
        for w in &fit.warnings {
            writer.warn(format!("pulse-width fit warning: {w:?}"));
        }
        let eps_j = fit.get("eps_j").unwrap_or(f64::NAN);
        if eps_j.is_finite() {
            let w_min = fit_points.first().unwrap().width;
            let w_max = fit_points.last().unwrap().width;
            for k in 0..120 {
                let w = (w_min.ln() + (w_max.ln() - w_min.ln()) * k as f64 / 119.0).exp();
                if let Ok(eps) = crate::escape::poisson_switch_probability(eps_j, w, tau_j) {
                    model_line.push((w * 1e9, eps));
                }
            }
        }
        writer.write_fit_json("pulse_width_fit.json", "pulse-width", &fit, &rows.join(";"))?;
    } else {
        writer.warn("pulse-width fit skipped: needs at least 4 points".to_string());
    }

    if ctx.wants(Format::Svg) {
        let mut fig = Figure::new("Efficiency vs pulse duration", "width (ns)", "efficiency").log_x();
        let pts: Vec<(f64, f64, f64)> = fit_points
            .iter()
            .map(|p| (p.width * 1e9, p.efficiency, p.sigma))
            .collect();
        fig.error_bars(&pts, "#d62728");
        if !model_line.is_empty() {
            fig.line(&model_line, "#1f77b4");
        }
        writer.write_svg("pulse_width_scan.svg", &fig)?;
    }
    writer.finish()
}

// ---------------------------------------------------------------------------
// boundary-map
// ---------------------------------------------------------------------------

/// Langevin switching map over (bias, photon number) with the ε = 0.5
/// threshold per bias row.
pub fn cmd_boundary_map(ctx: &CommandContext) -> Result<ReportBundle> {
    let cfg = &ctx.config;
    let map_cfg = cfg
        .map
        .as_ref()
        .ok_or_else(|| Error::Config("boundary-map needs a [map] section".into()))?;
    let params = cfg.junction_params()?;
    let env = cfg.thermal_environment()?;
    let base_pulse = cfg.pulse()?;

    let cells = (map_cfg.bias_points * map_cfg.photon_points) as u64;
    let requested = cells * cfg.sim.trajectories as u64;
    if requested > map_cfg.budget {
        return Err(Error::BudgetExceeded {
            requested,
            budget: map_cfg.budget,
        });
    }

    // Deeper wells (more levels) sit at lower bias.
    let bias_lo = junction::bias_for_level_count(&params, map_cfg.level_max)?;
    let bias_hi = junction::bias_for_level_count(&params, map_cfg.level_min)?;
    let bias_grid: Vec<f64> = (0..map_cfg.bias_points)
        .map(|k| bias_lo + (bias_hi - bias_lo) * k as f64 / (map_cfg.bias_points - 1) as f64)
        .collect();
    let photon_grid: Vec<f64> = (0..map_cfg.photon_points)
        .map(|k| {
            map_cfg.photon_min
                + (map_cfg.photon_max - map_cfg.photon_min) * k as f64
                    / (map_cfg.photon_points - 1) as f64
        })
        .collect();

    let sim = SimConfig {
        time_step: cfg.sim.dt,
        max_time: base_pulse.arrival_time * params.plasma_frequency_zero_bias()
            + base_pulse.width * params.plasma_frequency_zero_bias()
            + 400.0,
        trajectories: cfg.sim.trajectories,
        seed: ctx.seed(),
        rf_coupling: cfg.sim.rf_coupling,
        ..SimConfig::default()
    };
    // The pulse must start after a short settling window.
    let pulse = RfPulse::new(
        base_pulse.frequency,
        base_pulse.power_dbm,
        base_pulse.width,
        50.0 / params.plasma_frequency_zero_bias(),
    )?;

    let mut writer = BundleWriter::new(ctx, "boundary_map")?;
    let map = ctx.run_pooled(|| {
        switching_boundary_map(&params, &env, &bias_grid, &photon_grid, &pulse, &sim)
    })?;

    let mut rows = Vec::new();
    for (b_idx, &bias) in map.biases.iter().enumerate() {
        for (p_idx, &n_gamma) in map.photon_numbers.iter().enumerate() {
            rows.push(format!(
                "{},{},{},{}",
                fmt_f(bias * 1e6),
                fmt_f(junction::level_count(&params, bias)?),
                fmt_f(n_gamma),
                fmt_f(map.efficiency[b_idx][p_idx])
            ));
        }
    }
    writer.write_csv(
        "boundary_map.csv",
        &[
            "switching efficiency over (bias, photon number)".into(),
            "columns: bias_ua, n_level, n_gamma, efficiency".into(),
        ],
        &rows,
    )?;

    let thresholds: Vec<Option<f64>> = (0..map.biases.len())
        .map(|b| map.threshold_photon_number(b))
        .collect();
    #[derive(Serialize)]
    struct MapDoc<'a> {
        schema: &'static str,
        biases_ua: Vec<f64>,
        n_levels: Vec<f64>,
        photon_numbers: &'a [f64],
        efficiency: &'a [Vec<f64>],
        half_efficiency_threshold_photons: &'a [Option<f64>],
        threshold_monotone_in_bias: bool,
    }
    let n_levels: Vec<f64> = map
        .biases
        .iter()
        .map(|&b| junction::level_count(&params, b))
        .collect::<Result<_>>()?;
    writer.write_json(
        "boundary_map.json",
        &MapDoc {
            schema: FIT_SCHEMA,
            biases_ua: map.biases.iter().map(|b| b * 1e6).collect(),
            n_levels: n_levels.clone(),
            photon_numbers: &map.photon_numbers,
            efficiency: &map.efficiency,
            half_efficiency_threshold_photons: &thresholds,
            threshold_monotone_in_bias: map.threshold_monotone_in_bias(),
        },
    )?;

    if ctx.wants(Format::Svg) {
        let mut fig = Figure::new(
            "Switching boundary",
            "bias (uA)",
            "photon number per relaxation time",
        );
        let x_edges = grid_edges(&map.biases.iter().map(|b| b * 1e6).collect::<Vec<_>>());
        let y_edges = grid_edges(&map.photon_numbers);
        fig.heatmap(&x_edges, &y_edges, &map.efficiency);
        let contour: Vec<(f64, f64)> = map
            .biases
            .iter()
            .zip(&thresholds)
            .filter_map(|(&b, t)| t.map(|t| (b * 1e6, t)))
            .collect();
        if contour.len() > 1 {
            fig.line(&contour, "#ffffff");
        }
        if map_cfg.overlay_level_curve {
            let overlay: Vec<(f64, f64)> = map
                .biases
                .iter()
                .zip(&n_levels)
                .map(|(&b, &n)| (b * 1e6, n))
                .collect();
            fig.scatter(&overlay, "#000000");
        }
        writer.write_svg("boundary_map.svg", &fig)?;
    }
    writer.finish()
}

fn grid_edges(centers: &[f64]) -> Vec<f64> {
    if centers.len() < 2 {
        return vec![centers[0] - 0.5, centers[0] + 0.5];
    }
    let mut edges = Vec::with_capacity(centers.len() + 1);
    edges.push(centers[0] - 0.5 * (centers[1] - centers[0]));
    for w in centers.windows(2) {
        edges.push(0.5 * (w[0] + w[1]));
    }
    let n = centers.len();
    edges.push(centers[n - 1] + 0.5 * (centers[n - 1] - centers[n - 2]));
    edges
}

// ---------------------------------------------------------------------------
// sensitivity
// ---------------------------------------------------------------------------

/// Energy/power sensitivity bookkeeping at the configured photon threshold.
pub fn cmd_sensitivity(ctx: &CommandContext) -> Result<ReportBundle> {
    let cfg = &ctx.config;
    let params = cfg.junction_params()?;
    let pulse = cfg.pulse()?;
    let bias = cfg.protocol.hold_bias_ua * 1e-6;
    let n_gamma = cfg.sensitivity.as_ref().map(|s| s.n_gamma).unwrap_or(10.0);
    let tau_j = params.relaxation_time();
    let summary = junction::sensitivity_summary(&pulse, n_gamma, tau_j)?;
    let nu_p = junction::plasma_frequency(&params, bias)? / (2.0 * std::f64::consts::PI);
    let q = junction::quality_factor(&params, bias)?;
    let bandwidth = nu_p / q;
    let nep = summary.power / bandwidth.sqrt();

    #[derive(Serialize)]
    struct SensitivityDoc {
        schema: &'static str,
        n_gamma: f64,
        frequency_hz: f64,
        pulse_width_s: f64,
        relaxation_time_s: f64,
        photon_energy_j: f64,
        energy_per_pulse_j: f64,
        power_w: f64,
        bandwidth_hz: f64,
        nep_w_per_sqrt_hz: f64,
    }
    let doc = SensitivityDoc {
        schema: FIT_SCHEMA,
        n_gamma,
        frequency_hz: pulse.frequency,
        pulse_width_s: pulse.width,
        relaxation_time_s: tau_j,
        photon_energy_j: summary.photon_energy,
        energy_per_pulse_j: summary.energy_per_pulse,
        power_w: summary.power,
        bandwidth_hz: bandwidth,
        nep_w_per_sqrt_hz: nep,
    };

    let mut writer = BundleWriter::new(ctx, "sensitivity")?;
    for w in physics_warnings(ctx, bias) {
        writer.warn(w);
    }
    writer.write_csv(
        "sensitivity.csv",
        &[
            "detection-threshold sensitivity figures".into(),
            "columns: n_gamma, photon_energy_j, energy_per_pulse_j, power_w, bandwidth_hz, nep_w_per_sqrt_hz"
                .into(),
        ],
        &[format!(
            "{},{},{},{},{},{}",
            fmt_f(n_gamma),
            fmt_f(summary.photon_energy),
            fmt_f(summary.energy_per_pulse),
            fmt_f(summary.power),
            fmt_f(bandwidth),
            fmt_f(nep)
        )],
    )?;
    writer.write_json("sensitivity.json", &doc)?;
    writer.finish()
}

// ---------------------------------------------------------------------------
// fit (ingest an external dataset)
// ---------------------------------------------------------------------------

/// Ingest a dataset file and run the regime-appropriate efficiency analysis.
pub fn cmd_fit(ctx: &CommandContext, dataset_path: &Path) -> Result<ReportBundle> {
    let ds = dataset::read_file(dataset_path)?;
    let mut writer = BundleWriter::new(ctx, "fit")?;
    let dark = ds.dark_rate()?;
    let threshold = ctx.config.analysis.dark_rate_threshold_hz;
    let text = std::fs::read_to_string(dataset_path)?;

    if dark > threshold {
        let bin_width = ds.meta.rf_delay / 70.0;
        let span = if ds.meta.rf_efficiency > 0.0 {
            ds.meta.waveform.hold_duration + ds.meta.rf_delay
        } else {
            ds.meta.timeout_cycles as f64 * ds.meta.waveform.hold_duration
        };
        let hist = Histogram::from_dataset_exposure(&ds, bin_width, span)?;
        let (fit, est) = if ds.meta.pulse.is_some() {
            let fit = fit_rf_histogram(&hist, ds.meta.rf_delay)?;
            let est = efficiency_from_fit(&fit, ds.meta.rf_delay)?;
            (fit, Some(est))
        } else {
            (fit_exponential(&hist)?, None)
        };
        writer.write_fit_json("fit.json", "histogram", &fit, &text)?;
        emit_fit_summary(&mut writer, &ds, &fit, est, dark, "high-dark")?;
        if ctx.wants(Format::Svg) {
            let mut fig = Figure::new("Switching-time histogram", "lifetime (s)", "counts");
            let pts: Vec<(f64, f64)> = hist
                .counts
                .iter()
                .enumerate()
                .map(|(k, &c)| (hist.left_edge(k), c as f64))
                .collect();
            fig.scatter(&pts, "#d62728");
            writer.write_svg("fit.svg", &fig)?;
        }
    } else {
        let est = efficiency_low_dark(&ds)?;
        #[derive(Serialize)]
        struct LowDarkDoc {
            schema: &'static str,
            regime: &'static str,
            dark_rate_hz: f64,
            efficiency: f64,
            sigma: f64,
            inputs_digest: String,
        }
        writer.write_json(
            "fit.json",
            &LowDarkDoc {
                schema: FIT_SCHEMA,
                regime: "low-dark",
                dark_rate_hz: dark,
                efficiency: est.value,
                sigma: est.sigma,
                inputs_digest: format!("{:016x}", seeding::tag_bytes(text.as_bytes())),
            },
        )?;
    }
    writer.finish()
}

fn emit_fit_summary(
    writer: &mut BundleWriter,
    ds: &SwitchingDataset,
    fit: &FitResult,
    est: Option<EfficiencyEstimate>,
    dark_rate: f64,
    regime: &str,
) -> Result<()> {
    let mut rows = vec![format!(
        "records,{}",
        ds.records.len()
    )];
    rows.push(format!("censored,{}", ds.censored_count()));
    rows.push(format!("dark_rate_hz,{}", fmt_f(dark_rate)));
    rows.push(format!("regime,{regime}"));
    for (name, value) in fit.names.iter().zip(&fit.values) {
        rows.push(format!("{name},{}", fmt_f(*value)));
    }
    if let Some(est) = est {
        rows.push(format!("efficiency,{}", fmt_f(est.value)));
        rows.push(format!("efficiency_sigma,{}", fmt_f(est.sigma)));
    }
    writer.write_csv(
        "fit_summary.csv",
        &["fit summary".into(), "columns: key, value".into()],
        &rows,
    )
}
