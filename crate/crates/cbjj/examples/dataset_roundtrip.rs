//! Generate a switching-time dataset under the measurement protocol, write
//! it in the line format, read it back, and run the full efficiency
//! extraction on the ingested copy.

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
    let protocol = ProtocolConfig {
        events_target: 2000,
        seed: 42,
        ..ProtocolConfig::default()
    };
    let eps_true = 0.5;
    let ds = sample_dataset(&params, &env, &waveform, Some(&pulse), &protocol, eps_true)?;

    let path = std::env::temp_dir().join("cbjj_roundtrip.dat");
    cbjj::dataset::write_file(&ds, &path)?;
    println!("wrote {} records to {}", ds.records.len(), path.display());

    let back = cbjj::dataset::read_file(&path)?;
    assert_eq!(back, ds);
    let (before, during, after) = back.three_chance_counts();
    println!(
        "three chances: {before} before / {during} during / {after} after the pulse, {} censored",
        back.censored_count()
    );

    let hist = Histogram::from_dataset_exposure(&back, t_rf / 70.0, waveform.hold_duration + t_rf)?;
    let fit = fit_rf_histogram(&hist, t_rf)?;
    let est = efficiency_from_fit(&fit, t_rf)?;
    println!(
        "recovered efficiency {:.3} +- {:.3} (generator {eps_true})",
        est.value, est.sigma
    );
    std::fs::remove_file(&path).ok();
    Ok(())
}
