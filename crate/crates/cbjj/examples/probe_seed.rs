//! Temporary probe: dissect the fit at one troublesome seed.

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

    let protocol = ProtocolConfig {
        events_target: 2000,
        seed: 734,
        ..ProtocolConfig::default()
    };
    let ds = sample_dataset(&params, &env, &waveform, Some(&pulse), &protocol, 0.5)?;
    let hist = Histogram::from_dataset_exposure(&ds, t_rf / 70.0, span)?;
    println!("total binned {}", hist.total());
    println!("rf bin count {}", hist.counts[70]);
    let pre: u64 = hist.counts[..70].iter().sum();
    let post: u64 = hist.counts[71..].iter().sum();
    println!("pre {pre} post {post}");
    let fit = fit_rf_histogram(&hist, t_rf)?;
    println!(
        "fit: n0 = {:.1} +- {:.1}, tau = {:.5} +- {:.5}, n_rf = {:.1} +- {:.1}",
        fit.get("n0").unwrap(),
        fit.uncertainty("n0").unwrap(),
        fit.get("tau").unwrap(),
        fit.uncertainty("tau").unwrap(),
        fit.get("n_rf").unwrap(),
        fit.uncertainty("n_rf").unwrap(),
    );
    println!("chi2/dof {:.3} converged {} warnings {:?}", fit.chi2_reduced, fit.converged, fit.warnings);
    let est = efficiency_from_fit(&fit, t_rf)?;
    println!("eps {} sigma {} clamped {}", est.value, est.sigma, est.clamped);
    Ok(())
}
