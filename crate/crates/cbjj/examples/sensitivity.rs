//! Detection-threshold sensitivity figures: single-photon energy, energy
//! per pulse at the photon-number threshold, the matching power, and the
//! noise-equivalent power from the plasma-resonance bandwidth.

use cbjj::junction::{self, JunctionParams, RfPulse};

fn main() -> cbjj::Result<()> {
    let params = JunctionParams::new(3.156e-6, 1.6e-12, 50.0)?;
    let bias = 2.899e-6;
    let pulse = RfPulse::new(8e9, -90.0, 10e-9, 0.0)?;
    let tau_j = params.relaxation_time();

    let n_gamma = 10.0;
    let s = junction::sensitivity_summary(&pulse, n_gamma, tau_j)?;
    let nu_p = junction::plasma_frequency(&params, bias)? / (2.0 * std::f64::consts::PI);
    let q = junction::quality_factor(&params, bias)?;
    let bandwidth = nu_p / q;
    let nep = s.power / bandwidth.sqrt();

    println!("relaxation time          : {:.0} ps", tau_j * 1e12);
    println!("single photon at 8 GHz   : {:.2} yJ", s.photon_energy * 1e24);
    println!(
        "threshold ({n_gamma} photons/tau_j): {:.2} zJ per 10 ns pulse",
        s.energy_per_pulse * 1e21
    );
    println!("threshold power          : {:.2} pW", s.power * 1e12);
    println!("bandwidth nu_p/Q         : {:.2} GHz", bandwidth * 1e-9);
    println!("noise-equivalent power   : {:.1} aW/sqrt(Hz)", nep * 1e18);
    Ok(())
}
