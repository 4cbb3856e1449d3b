//! Switching-efficiency scan over RF power: generate datasets whose true
//! efficiency follows a logistic curve in photon number, recover ε per point
//! from the RF-modified histogram fit, and locate the ε = 0.5 crossing.

use cbjj::analysis::{efficiency_from_fit, fit_rf_histogram, Histogram};
use cbjj::escape::temperature_for_rate;
use cbjj::junction::{self, JunctionParams, RfPulse};
use cbjj::protocol::{sample_dataset, BiasWaveform, ProtocolConfig};

fn main() -> cbjj::Result<()> {
    let params = JunctionParams::new(3.156e-6, 1.6e-12, 50.0)?;
    let bias = 2.899e-6;
    // Tune the effective temperature for a 65 Hz dark rate at the working
    // bias, the high-dark-counts regime.
    let env = temperature_for_rate(&params, bias, 65.0)?;
    let waveform = BiasWaveform::default_cycle(bias)?;
    let tau_j = params.relaxation_time();
    let t_rf = 7e-3;

    println!("power (dBm)  N_gamma  eps_true  eps_fit +- sigma");
    let mut scan = Vec::new();
    for k in 0..9 {
        let power_dbm = -95.0 + 6.0 * k as f64 / 8.0;
        let pulse = RfPulse::new(8e9, power_dbm, 10e-9, t_rf)?;
        let n_gamma = junction::photon_number(&pulse, tau_j)?;
        // Logistic response centered at 12 photons, as the device shows.
        let eps_true = 1.0 / (1.0 + (-(n_gamma - 12.0) / 2.0).exp());
        let protocol = ProtocolConfig {
            events_target: 3000,
            seed: 40 + k,
            ..ProtocolConfig::default()
        };
        let ds = sample_dataset(&params, &env, &waveform, Some(&pulse), &protocol, eps_true)?;
        let hist = Histogram::from_dataset_exposure(&ds, t_rf / 70.0, waveform.hold_duration + t_rf)?;
        let fit = fit_rf_histogram(&hist, t_rf)?;
        let est = efficiency_from_fit(&fit, t_rf)?;
        println!(
            "{power_dbm:10.2}  {n_gamma:7.2}  {eps_true:8.3}  {:7.3} +- {:.3}",
            est.value, est.sigma
        );
        scan.push((n_gamma, est.value, est.sigma));
    }

    // Locate the half-efficiency crossing in photon number.
    for w in scan.windows(2) {
        let ((x1, e1, _), (x2, e2, _)) = (w[0], w[1]);
        if (e1 - 0.5) * (e2 - 0.5) <= 0.0 && e1 != e2 {
            let x = x1 + (0.5 - e1) * (x2 - x1) / (e2 - e1);
            println!("half-efficiency crossing at N_gamma = {x:.1}");
            break;
        }
    }
    Ok(())
}
