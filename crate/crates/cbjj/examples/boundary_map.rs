//! Simulate the switching-boundary map: efficiency over (bias, photon
//! number) for 10 ns pulses at 8 GHz and zero temperature, printing the
//! ε = 0.5 threshold per bias row next to the well depth.

use cbjj::escape::ThermalEnvironment;
use cbjj::junction::{self, JunctionParams, RfPulse};
use cbjj::langevin::{switching_boundary_map, SimConfig};

fn main() -> cbjj::Result<()> {
    let params = JunctionParams::new(3.156e-6, 1.6e-12, 50.0)?;
    let env = ThermalEnvironment::new(0.0)?;

    // Bias rows spanning well depths of 8 down to 3 levels.
    let levels = [8.0, 7.0, 6.0, 5.0, 4.5, 4.0, 3.5, 3.0];
    let mut biases: Vec<f64> = levels
        .iter()
        .map(|&n| junction::bias_for_level_count(&params, n))
        .collect::<cbjj::Result<_>>()?;
    biases.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let photon_grid: Vec<f64> = (0..10).map(|k| 1.0 + 3.0 * k as f64).collect();
    let w_p0 = params.plasma_frequency_zero_bias();
    let pulse = RfPulse::new(8e9, -90.0, 10e-9, 50.0 / w_p0)?;
    let config = SimConfig {
        trajectories: 64,
        max_time: 50.0 + 10e-9 * w_p0 + 400.0,
        seed: 7,
        ..SimConfig::default()
    };

    let map = switching_boundary_map(&params, &env, &biases, &photon_grid, &pulse, &config)?;

    println!("bias (uA)  N_level  eff per photon column {photon_grid:?}");
    for (b, &bias) in map.biases.iter().enumerate() {
        let n_level = junction::level_count(&params, bias)?;
        let row: Vec<String> = map.efficiency[b].iter().map(|e| format!("{e:.2}")).collect();
        let threshold = map
            .threshold_photon_number(b)
            .map(|t| format!("{t:.1}"))
            .unwrap_or_else(|| "none".into());
        println!(
            "{:9.4}  {:7.2}  [{}]  threshold N_gamma = {}",
            bias * 1e6,
            n_level,
            row.join(" "),
            threshold
        );
    }
    println!(
        "threshold monotone non-increasing in bias: {}",
        map.threshold_monotone_in_bias()
    );
    Ok(())
}
