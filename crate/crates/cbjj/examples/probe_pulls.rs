//! Temporary calibration probe for the efficiency estimator.

use cbjj::analysis::{efficiency_from_fit, fit_rf_histogram, Histogram};
use cbjj::escape::temperature_for_rate;
use cbjj::junction::{JunctionParams, RfPulse};
use cbjj::protocol::{sample_dataset, BiasWaveform, ProtocolConfig};

fn main() -> cbjj::Result<()> {
    let params = JunctionParams::new(3.156e-6, 1.6e-12, 50.0)?;
    let bias = 2.899e-6;
    let env = temperature_for_rate(&params, bias, 65.0)?;
    let waveform = BiasWaveform::default_cycle(bias)?;
    let t_rf = 7e-3;
    let pulse = RfPulse::new(8e9, -91.58, 10e-9, t_rf)?;
    let span = waveform.hold_duration + t_rf;

    let mut eps_hats = Vec::new();
    let mut sigmas = Vec::new();
    for k in 0..120u64 {
        let protocol = ProtocolConfig {
            events_target: 2000,
            seed: 700 + k,
            ..ProtocolConfig::default()
        };
        let ds = sample_dataset(&params, &env, &waveform, Some(&pulse), &protocol, 0.5)?;
        let hist = Histogram::from_dataset_exposure(&ds, t_rf / 70.0, span)?;
        let fit = fit_rf_histogram(&hist, t_rf)?;
        let est = efficiency_from_fit(&fit, t_rf)?;
        eps_hats.push(est.value);
        sigmas.push(est.sigma);
    }
    let n = eps_hats.len() as f64;
    let mean_eps: f64 = eps_hats.iter().sum::<f64>() / n;
    let emp_var: f64 = eps_hats
        .iter()
        .map(|e| (e - mean_eps) * (e - mean_eps))
        .sum::<f64>()
        / (n - 1.0);
    let mean_sigma: f64 = sigmas.iter().sum::<f64>() / n;
    println!("mean eps        = {mean_eps:.4}");
    println!("empirical std   = {:.4}", emp_var.sqrt());
    println!("mean reported s = {mean_sigma:.4}");
    println!("ratio emp/rep   = {:.3}", emp_var.sqrt() / mean_sigma);

    let mut indexed: Vec<(usize, f64, f64)> = eps_hats
        .iter()
        .zip(&sigmas)
        .enumerate()
        .map(|(k, (&e, &s))| (k, e, s))
        .collect();
    indexed.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    println!("five lowest and highest eps-hat (seed offset, eps, sigma):");
    for &(k, e, s) in indexed.iter().take(5).chain(indexed.iter().rev().take(5)) {
        println!("  {k:3}  {e:.4}  {s:.4}");
    }
    Ok(())
}
