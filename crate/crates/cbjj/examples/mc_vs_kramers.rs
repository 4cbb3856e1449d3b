//! Monte Carlo escape rates from the Langevin integrator against the
//! thermal-activation formula, at a shallow well where both are cheap.

use cbjj::constants::BOLTZMANN;
use cbjj::escape::{kramers_rate, ThermalEnvironment};
use cbjj::junction::{washboard, JunctionParams};
use cbjj::langevin::{mc_escape_rate, SimConfig};

fn main() -> cbjj::Result<()> {
    let tilt = 0.9f64;
    println!("dU/kT   Q    Monte Carlo (Hz)      Kramers (Hz)   ratio");
    for &q_target in &[3.0, 5.0] {
        for &barrier_over_kt in &[5.0f64, 6.5] {
            // Pick R so the bias-dependent quality factor hits the target,
            // and T so the barrier measures the requested depth.
            let omega_scale = (1.0 - tilt * tilt).powf(0.25);
            let ic = 3.156e-6;
            let c = 1.6e-12;
            let w_p0 = (2.0 * std::f64::consts::PI * ic
                / (cbjj::constants::FLUX_QUANTUM * c))
                .sqrt();
            let r = q_target / (omega_scale * w_p0 * c);
            let params = JunctionParams::new(ic, c, r)?;
            let bias = tilt * ic;
            let barrier = washboard::barrier(tilt) * params.potential_scale();
            let env = ThermalEnvironment::new(barrier / (barrier_over_kt * BOLTZMANN))?;

            let config = SimConfig {
                trajectories: 400,
                time_step: 0.03,
                max_time: 80_000.0,
                seed: 12,
                ..SimConfig::default()
            };
            let (mc, sigma) = mc_escape_rate(&params, &env, bias, &config)?;
            let model = kramers_rate(&params, &env, bias)?;
            println!(
                "{barrier_over_kt:5.1} {q_target:4.1}  {mc:12.4e} +- {sigma:9.2e}  {model:12.4e}  {:5.2}",
                mc / model
            );
        }
    }
    Ok(())
}
