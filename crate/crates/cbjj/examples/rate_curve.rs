//! End-to-end dark-count rate curve: generate switching-time datasets over
//! a bias sweep, fit each histogram with the exponential decay law, then fit
//! the resulting Γ(I) curve with the thermal-activation model to recover the
//! effective temperature and critical current.

use cbjj::analysis::{fit_exponential, fit_kramers, Histogram};
use cbjj::escape::{RateCurve, RatePoint, ThermalEnvironment};
use cbjj::junction::JunctionParams;
use cbjj::protocol::{sample_dataset, BiasWaveform, ProtocolConfig};

fn main() -> cbjj::Result<()> {
    let params = JunctionParams::new(3.156e-6, 1.6e-12, 50.0)?;
    let env = ThermalEnvironment::new(0.183)?;

    let mut points = Vec::new();
    println!("bias (uA)   fitted rate (Hz)");
    for k in 0..10 {
        let bias = 2.88e-6 + 0.08e-6 * k as f64 / 9.0;
        let waveform = BiasWaveform::default_cycle(bias)?;
        let protocol = ProtocolConfig {
            events_target: 1000,
            seed: 100 + k,
            ..ProtocolConfig::default()
        };
        let ds = sample_dataset(&params, &env, &waveform, None, &protocol, 0.0)?;
        let lifetimes: Vec<f64> = ds.exposure_lifetimes().collect();
        let mean = lifetimes.iter().sum::<f64>() / lifetimes.len() as f64;
        let span = (12.0 * mean).min(10.0 * waveform.hold_duration);
        let hist = Histogram::from_lifetimes(lifetimes.iter().copied(), 0.0, span / 60.0, 60)?;
        let fit = fit_exponential(&hist)?;
        let tau = fit.get("tau").unwrap();
        let sigma_tau = fit.uncertainty("tau").unwrap();
        let rate = 1.0 / tau;
        let sigma = sigma_tau / (tau * tau);
        println!("{:9.4}   {rate:12.3} +- {sigma:.3}", bias * 1e6);
        points.push(RatePoint {
            bias_current: bias,
            rate,
            rate_uncertainty: sigma,
        });
    }

    let curve = RateCurve::new(points)?;
    let fit = fit_kramers(&curve, &params)?;
    println!(
        "thermal-activation fit: T = {:.1} +- {:.1} mK, Ic = {:.4} +- {:.4} uA (chi2/dof = {:.2})",
        fit.get("t_kelvin").unwrap() * 1e3,
        fit.uncertainty("t_kelvin").unwrap() * 1e3,
        fit.get("ic_amps").unwrap() * 1e6,
        fit.uncertainty("ic_amps").unwrap() * 1e6,
        fit.chi2_reduced
    );
    Ok(())
}
