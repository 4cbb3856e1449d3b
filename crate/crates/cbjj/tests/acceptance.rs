//! Acceptance suite: one test per criterion, each printing a pass/fail line
//! with the measured numbers. Tolerances are pinned in the assertions.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see every line.

use cbjj::analysis::{
    efficiency_from_fit, fit_kramers, fit_pulse_width, fit_rf_histogram, Histogram,
    PulseWidthPoint,
};
use cbjj::constants::BOLTZMANN;
use cbjj::escape::{
    kramers_rate, poisson_switch_probability, temperature_for_rate, RateCurve, RatePoint,
    ThermalEnvironment,
};
use cbjj::junction::{self, washboard, JunctionParams, RfPulse};
use cbjj::langevin::{mc_escape_rate, switching_boundary_map, SimConfig};
use cbjj::protocol::{sample_dataset, BiasWaveform, ProtocolConfig};
use cbjj::report::commands::{
    cmd_boundary_map, cmd_efficiency_scan, cmd_pulse_width_scan, cmd_rate_curve, cmd_sensitivity,
    CommandContext, Overrides, ReportBundle,
};
use cbjj::report::config::RunConfig;
use cbjj::seeding;
use rand::Rng;
use rand_distr::StandardNormal;
use std::path::{Path, PathBuf};

fn paper_params() -> JunctionParams {
    JunctionParams::new(3.156e-6, 1.6e-12, 50.0).unwrap()
}

fn report(criterion: &str, pass: bool, detail: &str) {
    println!(
        "criterion {criterion}: {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed: {detail}");
}

/// 1. One decade of dark-count rate per 0.020–0.026 μA of bias near the
/// working point.
#[test]
fn criterion_1_dark_count_slope() {
    let params = paper_params();
    let env = ThermalEnvironment::new(0.183).unwrap();
    let h = 1e-9;
    let r_lo = kramers_rate(&params, &env, 2.90e-6 - h).unwrap();
    let r_hi = kramers_rate(&params, &env, 2.90e-6 + h).unwrap();
    let decade = 2.0 * h / (r_hi.log10() - r_lo.log10());
    report(
        "1 (dark-count slope)",
        (0.020e-6..=0.026e-6).contains(&decade),
        &format!("one decade per {:.4} uA", decade * 1e6),
    );
}

/// 2. Kramers fit recovery from a noisy synthetic rate curve: T within 5%,
/// I_c within 0.2%.
#[test]
fn criterion_2_kramers_fit_recovery() {
    let params = paper_params();
    let env = ThermalEnvironment::new(0.183).unwrap();
    let noise = 1.0 / (500f64).sqrt();
    let mut rng = seeding::stream_rng(2024, &[2]);
    let points: Vec<RatePoint> = (0..10)
        .map(|k| {
            let bias = 2.86e-6 + 0.10e-6 * k as f64 / 9.0;
            let rate = kramers_rate(&params, &env, bias).unwrap();
            let z: f64 = rng.sample(StandardNormal);
            let noisy = rate * (1.0 + noise * z);
            RatePoint {
                bias_current: bias,
                rate: noisy,
                rate_uncertainty: noisy * noise,
            }
        })
        .collect();
    let curve = RateCurve::new(points).unwrap();
    let fit = fit_kramers(&curve, &params).unwrap();
    let t = fit.get("t_kelvin").unwrap();
    let ic = fit.get("ic_amps").unwrap();
    let t_ok = (t - 0.183).abs() / 0.183 < 0.05;
    let ic_ok = (ic - 3.156e-6).abs() / 3.156e-6 < 0.002;
    report(
        "2 (kramers fit recovery)",
        t_ok && ic_ok,
        &format!("T = {:.1} mK (target 183 +- 5%), Ic = {:.4} uA (target 3.156 +- 0.2%)",
            t * 1e3, ic * 1e6),
    );
}

/// 3. Independent-trials pulse model: the 10 ns reference value and the
/// five-point fit recovery of ε_j within 10%.
#[test]
fn criterion_3_pulse_model() {
    let eps = poisson_switch_probability(2.7e-4, 10e-9, 80e-12).unwrap();
    let value_ok = (0.030..=0.036).contains(&eps);

    let tau = 80e-12;
    let eps_j_true = 2.7e-4;
    let mut rng = seeding::stream_rng(3030, &[3]);
    let points: Vec<PulseWidthPoint> = [10e-9, 30e-9, 100e-9, 300e-9, 1000e-9]
        .iter()
        .map(|&w| {
            let e = poisson_switch_probability(eps_j_true, w, tau).unwrap();
            let z: f64 = rng.sample(StandardNormal);
            PulseWidthPoint {
                width: w,
                efficiency: (e * (1.0 + 0.05 * z)).clamp(1e-6, 0.999),
                sigma: e * 0.05,
            }
        })
        .collect();
    let fit = fit_pulse_width(&points, tau).unwrap();
    let eps_j = fit.get("eps_j").unwrap();
    let fit_ok = (eps_j - eps_j_true).abs() / eps_j_true < 0.10;
    report(
        "3 (pulse-duration model)",
        value_ok && fit_ok,
        &format!("eps(10 ns) = {eps:.4} (window [0.030, 0.036]); fitted eps_j = {eps_j:.3e} (target 2.7e-4 +- 10%)"),
    );
}

/// 4a. Photon number at the bench stimulus.
#[test]
fn criterion_4a_photon_number() {
    let pulse = RfPulse::new(7.89e9, -90.25, 10e-9, 0.0).unwrap();
    let n = junction::photon_number(&pulse, 80e-12).unwrap();
    report(
        "4a (photon number)",
        (14.2..=14.7).contains(&n),
        &format!("N_gamma = {n:.2} (window [14.2, 14.7])"),
    );
}

/// 4b. Single-photon energy at 8 GHz.
#[test]
fn criterion_4b_photon_energy() {
    let e = junction::photon_energy(8e9);
    report(
        "4b (photon energy)",
        (5.2e-24..=5.4e-24).contains(&e),
        &format!("h*nu = {:.2} yJ (window [5.2, 5.4])", e * 1e24),
    );
}

/// 4c. Sensitivity figures at 10 photons per relaxation time, asserted
/// against the quoted 5 zJ / 0.5 pW within 10%.
///
/// The exact arithmetic N_γ·hν·(ΔT/τ_j) with τ_j = 80 ps gives 6.63 zJ and
/// 0.663 pW — the quoted round figures absorb a 6.25 → 5 rounding that exact
/// evaluation cannot reproduce, so this check records an honest failure.
#[test]
fn criterion_4c_sensitivity_summary() {
    let pulse = RfPulse::new(8e9, -90.0, 10e-9, 0.0).unwrap();
    let s = junction::sensitivity_summary(&pulse, 10.0, 80e-12).unwrap();
    let energy_ok = (s.energy_per_pulse - 5e-21).abs() / 5e-21 <= 0.10;
    let power_ok = (s.power - 0.5e-12).abs() / 0.5e-12 <= 0.10;
    report(
        "4c (sensitivity summary)",
        energy_ok && power_ok,
        &format!(
            "energy/pulse = {:.2} zJ vs 5 zJ +- 10%; power = {:.2} pW vs 0.5 pW +- 10% \
             (exact N_gamma*h*nu*dT/tau_j at tau_j = 80 ps)",
            s.energy_per_pulse * 1e21,
            s.power * 1e12
        ),
    );
}

/// 5. Well depth in level counts at the two working biases.
#[test]
fn criterion_5_level_bookkeeping() {
    let params = paper_params();
    let n_high = junction::level_count(&params, 2.899e-6).unwrap();
    let n_low = junction::level_count(&params, 2.65e-6).unwrap();
    let ok = (8.0..=10.5).contains(&n_high) && (19.0..=23.0).contains(&n_low);
    report(
        "5 (level bookkeeping)",
        ok,
        &format!("N_level(2.899 uA) = {n_high:.2} (window [8, 10.5]); N_level(2.65 uA) = {n_low:.2} (window [19, 23])"),
    );
}

/// 6. Efficiency round trip at the bench working point: recovery within 2σ
/// with σ_ε < 0.03, and a calibrated pull distribution over 50 seeds.
#[test]
fn criterion_6_efficiency_round_trip() {
    let params = paper_params();
    let bias = 2.899e-6;
    let env = temperature_for_rate(&params, bias, 65.0).unwrap();
    let waveform = BiasWaveform::default_cycle(bias).unwrap();
    let t_rf = 7e-3;
    let pulse = RfPulse::new(8e9, -91.58, 10e-9, t_rf).unwrap();
    let eps_true = 0.5;
    let span = waveform.hold_duration + t_rf;

    let run_once = |seed: u64| -> (f64, f64) {
        let protocol = ProtocolConfig {
            events_target: 2000,
            seed,
            ..ProtocolConfig::default()
        };
        let ds = sample_dataset(&params, &env, &waveform, Some(&pulse), &protocol, eps_true)
            .unwrap();
        let hist = Histogram::from_dataset_exposure(&ds, t_rf / 70.0, span).unwrap();
        let fit = fit_rf_histogram(&hist, t_rf).unwrap();
        let est = efficiency_from_fit(&fit, t_rf).unwrap();
        (est.value, est.sigma)
    };

    let (eps, sigma) = run_once(600);
    let single_ok = (eps - eps_true).abs() < 2.0 * sigma && sigma < 0.03;

    let pulls: Vec<f64> = (0..50)
        .map(|k| {
            let (e, s) = run_once(700 + k);
            (e - eps_true) / s
        })
        .collect();
    let mean: f64 = pulls.iter().sum::<f64>() / pulls.len() as f64;
    let var: f64 =
        pulls.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>() / (pulls.len() - 1) as f64;
    let std = var.sqrt();
    let pulls_ok = mean.abs() < 0.15 && (0.85..=1.15).contains(&std);
    report(
        "6 (efficiency round trip)",
        single_ok && pulls_ok,
        &format!(
            "eps = {eps:.3} +- {sigma:.3} (true 0.5); pull mean {mean:.3} (|.| < 0.15), pull std {std:.3} ([0.85, 1.15])"
        ),
    );
}

/// 7. Monte Carlo escape rates against the thermal-activation formula at
/// ΔU/k_BT in {5, 6.5, 8} and Q in {3, 5}, within 35% with ≥ 1000 escapes.
#[test]
fn criterion_7_langevin_vs_kramers() {
    let tilt = 0.9f64;
    let ic = 3.156e-6;
    let c = 1.6e-12;
    let w_p0 = (2.0 * std::f64::consts::PI * ic / (cbjj::constants::FLUX_QUANTUM * c)).sqrt();
    let omega_scale = (1.0 - tilt * tilt).powf(0.25);

    let mut all_ok = true;
    let mut details = Vec::new();
    for &q_target in &[3.0, 5.0] {
        for &depth in &[5.0f64, 6.5, 8.0] {
            let r = q_target / (omega_scale * w_p0 * c);
            let params = JunctionParams::new(ic, c, r).unwrap();
            let bias = tilt * ic;
            let barrier = washboard::barrier(tilt) * params.potential_scale();
            let env = ThermalEnvironment::new(barrier / (depth * BOLTZMANN)).unwrap();
            let model = kramers_rate(&params, &env, bias).unwrap();
            // Horizon at 12 mean lifetimes keeps censoring negligible, so
            // virtually all of the ≥1000 trajectories escape.
            let mean_escape = w_p0 / model;
            let config = SimConfig {
                trajectories: 1050,
                time_step: 0.03,
                max_time: 12.0 * mean_escape,
                seed: 77,
                ..SimConfig::default()
            };
            let (mc, _sigma) = mc_escape_rate(&params, &env, bias, &config).unwrap();
            let rel = (mc - model).abs() / model;
            let ok = rel < 0.35;
            all_ok &= ok;
            details.push(format!(
                "dU/kT={depth}, Q={q_target}: mc/kramers = {:.2} ({})",
                mc / model,
                if ok { "ok" } else { "off" }
            ));
        }
    }
    report("7 (langevin vs kramers)", all_ok, &details.join("; "));
}

/// 8. Boundary-map property at 8 GHz, 10 ns, T = 0 over wells 3–8 levels
/// deep: the ε = 0.5 photon threshold is non-increasing in bias and within
/// a factor 3 of N_level at N_level ≈ 5.
#[test]
fn criterion_8_boundary_map() {
    let params = paper_params();
    let env = ThermalEnvironment::new(0.0).unwrap();
    let levels = [8.0, 7.29, 6.57, 5.86, 5.14, 4.43, 3.71, 3.0];
    let mut biases: Vec<f64> = levels
        .iter()
        .map(|&n| junction::bias_for_level_count(&params, n).unwrap())
        .collect();
    biases.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let photon_grid: Vec<f64> = (0..8).map(|k| 1.0 + 3.0 * k as f64).collect();
    let w_p0 = params.plasma_frequency_zero_bias();
    let pulse = RfPulse::new(8e9, -90.0, 10e-9, 50.0 / w_p0).unwrap();
    let config = SimConfig {
        trajectories: 128,
        max_time: 50.0 + 10e-9 * w_p0 + 400.0,
        seed: 88,
        ..SimConfig::default()
    };
    let map =
        switching_boundary_map(&params, &env, &biases, &photon_grid, &pulse, &config).unwrap();

    let monotone = map.threshold_monotone_in_bias();
    // The row whose well depth is closest to 5 levels.
    let (row, n_level) = map
        .biases
        .iter()
        .enumerate()
        .map(|(k, &b)| (k, junction::level_count(&params, b).unwrap()))
        .min_by(|a, b| {
            (a.1 - 5.0)
                .abs()
                .partial_cmp(&(b.1 - 5.0).abs())
                .unwrap()
        })
        .unwrap();
    let threshold = map.threshold_photon_number(row);
    let ratio_ok = match threshold {
        Some(t) => t >= n_level / 3.0 && t <= 3.0 * n_level,
        None => false,
    };
    report(
        "8 (boundary map)",
        monotone && ratio_ok,
        &format!(
            "threshold monotone: {monotone}; at N_level = {n_level:.2} threshold N_gamma = {:?} (factor-3 window [{:.2}, {:.2}])",
            threshold,
            n_level / 3.0,
            3.0 * n_level
        ),
    );
}

/// 9. Protocol censoring: censored fraction matches the per-cycle survival
/// product within binomial 2σ and no lifetime exceeds ten cycle periods.
#[test]
fn criterion_9_protocol_censoring() {
    let params = paper_params();
    let bias = 2.899e-6;
    let rate = 3.0;
    let env = temperature_for_rate(&params, bias, rate).unwrap();
    let waveform = BiasWaveform::default_cycle(bias).unwrap();
    let eps = 0.002;
    // Expected switches per ten cycles stays below 0.5.
    let per_cycle = 1.0 - (-rate * waveform.hold_duration).exp() * (1.0 - eps);
    assert!(10.0 * per_cycle < 0.5);
    let protocol = ProtocolConfig {
        events_target: 3000,
        seed: 909,
        ..ProtocolConfig::default()
    };
    let ds = sample_dataset(&params, &env, &waveform, None, &protocol, eps).unwrap();
    // eps > 0 needs the pulse argument for the RF bin; with none the
    // Bernoulli still applies per cycle at the trigger delay.
    let n = ds.records.len() as f64;
    let survival =
        ((-rate * waveform.hold_duration).exp() * (1.0 - eps)).powi(protocol.timeout_cycles as i32);
    let expected = n * survival;
    let sig = (n * survival * (1.0 - survival)).sqrt();
    let censored = ds.censored_count() as f64;
    let frac_ok = (censored - expected).abs() < 2.0 * sig;
    let bound = protocol.timeout_cycles as f64 * waveform.cycle_period();
    let bound_ok = ds.records.iter().all(|r| r.lifetime <= bound + 1e-15);
    report(
        "9 (protocol censoring)",
        frac_ok && bound_ok,
        &format!(
            "censored {censored} vs {expected:.1} +- {sig:.1} (2 sigma); max lifetime <= {:.3} s: {bound_ok}",
            bound
        ),
    );
}

/// 10. Byte-identical CSV/JSON from every command re-run with the same
/// config and seed, independent of the worker count.
#[test]
fn criterion_10_reproducibility() {
    let base = r#"
[junction]
ic_ua = 3.156
c_pf = 1.6
r_ohm = 50.0

[environment]
t_mk = 178.0

[protocol]
hold_bias_ua = 2.899
events = 300

[rf]
freq_ghz = 8.0
power_dbm = -91.58
width_ns = 10.0
model = "fixed"
value = 0.5

[sim]
trajectories = 24

[map]
level_min = 4.0
level_max = 7.0
bias_points = 3
photon_min = 1.0
photon_max = 16.0
photon_points = 3
"#;
    let sweep_bias = r#"
[sweep]
variable = "bias_ua"
start = 2.90
stop = 2.95
points = 4
"#;
    let sweep_power = r#"
[sweep]
variable = "power_dbm"
start = -93.0
stop = -90.0
points = 3
"#;
    let sweep_width = r#"
[sweep]
variable = "width_ns"
start = 10.0
stop = 1000.0
points = 4
log = true
"#;

    type Command = fn(&CommandContext) -> cbjj::Result<ReportBundle>;
    let commands: Vec<(&str, String, Command)> = vec![
        ("rate-curve", format!("{base}{sweep_bias}"), cmd_rate_curve),
        (
            "efficiency-scan",
            format!("{base}{sweep_power}"),
            cmd_efficiency_scan,
        ),
        (
            "pulse-width-scan",
            format!("{base}{sweep_width}"),
            cmd_pulse_width_scan,
        ),
        ("boundary-map", base.to_string(), cmd_boundary_map),
        ("sensitivity", base.to_string(), cmd_sensitivity),
    ];

    let read_tables = |dir: &Path| -> Vec<(String, Vec<u8>)> {
        let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| {
                let name = p.file_name().unwrap().to_str().unwrap();
                name.ends_with(".csv") || name.ends_with(".json")
            })
            .collect();
        files.sort();
        files
            .into_iter()
            .map(|p| {
                (
                    p.file_name().unwrap().to_str().unwrap().to_string(),
                    std::fs::read(&p).unwrap(),
                )
            })
            .collect()
    };

    let mut all_ok = true;
    let mut details = Vec::new();
    for (name, toml, command) in &commands {
        let mut outputs = Vec::new();
        for (variant, jobs) in [("a", 1usize), ("b", 2)] {
            let dir = std::env::temp_dir().join(format!(
                "cbjj-accept10-{name}-{variant}-{}",
                std::process::id()
            ));
            let _ = std::fs::remove_dir_all(&dir);
            std::fs::create_dir_all(&dir).unwrap();
            let cfg = RunConfig::from_toml(toml).unwrap();
            let ctx = CommandContext::new(
                cfg,
                Overrides {
                    out_dir: Some(dir.clone()),
                    seed: Some(5150),
                    jobs: Some(jobs),
                    formats: Some(vec!["csv".into(), "json".into()]),
                },
            )
            .unwrap();
            command(&ctx).unwrap();
            outputs.push(read_tables(&dir));
            let _ = std::fs::remove_dir_all(&dir);
        }
        let identical = outputs[0] == outputs[1];
        all_ok &= identical;
        details.push(format!(
            "{name}: {}",
            if identical { "byte-identical" } else { "MISMATCH" }
        ));
    }
    report("10 (reproducibility)", all_ok, &details.join("; "));
}
