//! Efficiency versus RF pulse duration: the independent-trials model
//! ε(ΔT) = 1 − (1 − ε_j)^{ΔT/τ_j} generates the data and the one-parameter
//! fit recovers the per-trial switching probability ε_j.

use cbjj::analysis::{efficiency_from_fit, fit_pulse_width, fit_rf_histogram, Histogram, PulseWidthPoint};
use cbjj::escape::{poisson_switch_probability, temperature_for_rate};
use cbjj::junction::{JunctionParams, RfPulse};
use cbjj::protocol::{sample_dataset, BiasWaveform, ProtocolConfig};

fn main() -> cbjj::Result<()> {
    let params = JunctionParams::new(3.156e-6, 1.6e-12, 50.0)?;
    let bias = 2.899e-6;
    let env = temperature_for_rate(&params, bias, 65.0)?;
    let waveform = BiasWaveform::default_cycle(bias)?;
    let tau_j = params.relaxation_time();
    let t_rf = 7e-3;
    let eps_j = 2.7e-4;

    println!("width (ns)  eps_true  eps_fit +- sigma");
    let mut points = Vec::new();
    for (k, width_ns) in [10.0, 30.0, 100.0, 300.0, 1000.0].iter().enumerate() {
        let width = width_ns * 1e-9;
        let eps_true = poisson_switch_probability(eps_j, width, tau_j)?;
        let pulse = RfPulse::new(8e9, -92.5, width, t_rf)?;
        let protocol = ProtocolConfig {
            events_target: 4000,
            seed: 60 + k as u64,
            ..ProtocolConfig::default()
        };
        let ds = sample_dataset(&params, &env, &waveform, Some(&pulse), &protocol, eps_true)?;
        let hist = Histogram::from_dataset_exposure(&ds, t_rf / 70.0, waveform.hold_duration + t_rf)?;
        let fit = fit_rf_histogram(&hist, t_rf)?;
        let est = efficiency_from_fit(&fit, t_rf)?;
        println!(
            "{width_ns:9.0}  {eps_true:8.4}  {:7.4} +- {:.4}",
            est.value, est.sigma
        );
        points.push(PulseWidthPoint {
            width,
            efficiency: est.value,
            sigma: est.sigma.max(1e-4),
        });
    }

    let fit = fit_pulse_width(&points, tau_j)?;
    println!(
        "per-trial switching probability: eps_j = {:.3e} +- {:.1e} (generator {eps_j:.1e}, chi2/dof = {:.2})",
        fit.get("eps_j").unwrap(),
        fit.uncertainty("eps_j").unwrap(),
        fit.chi2_reduced
    );
    Ok(())
}
