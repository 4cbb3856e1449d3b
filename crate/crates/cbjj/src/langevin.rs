//! Stochastic phase dynamics of the shunted junction.
//!
//! The phase obeys the dimensionless Langevin equation
//!
//! ```text
//! φ'' + φ'/Q₀ + sin φ = i_b + i_rf·sin(Ωτ + θ) + ξ(τ)
//! ```
//!
//! with time in units of 1/ω_p0, currents in I_c and energies in U₀.
//! The white noise obeys ⟨ξ(τ)ξ(τ')⟩ = (2/Q₀)(k_BT/U₀)·δ(τ−τ'), the
//! fluctuation–dissipation pairing of the φ'/Q₀ damping term. Integration
//! uses a stochastic Heun (drift-midpoint) scheme with a fixed step.
//!
//! Trajectories are independent work items with counter-based random
//! streams, so any sharding across workers reproduces the same set.

use crate::error::{Error, Result};
use crate::escape::ThermalEnvironment;
use crate::junction::{self, washboard, JunctionParams, RfPulse};
use crate::seeding::{self, tags};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Fixed-step integrator and escape-detection settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Time step Δτ in units of 1/ω_p0; (0, 0.1].
    pub time_step: f64,
    /// Simulation horizon in units of 1/ω_p0.
    pub max_time: f64,
    /// Escape is declared once the phase passes the adjacent barrier
    /// maximum by `escape_phase_threshold − π` with positive velocity;
    /// must exceed π.
    pub escape_phase_threshold: f64,
    /// Number of independent trajectories.
    pub trajectories: usize,
    /// Root seed for the per-trajectory streams.
    pub seed: u64,
    /// RF power-to-current coupling κ in i_rf = κ·√(2P/Z₀)/I_c.
    pub rf_coupling: f64,
    /// Extra time after the pulse ends during which an escape still counts
    /// as pulse-induced (units of 1/ω_p0).
    pub post_pulse_margin: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            time_step: 0.02,
            max_time: 5_000.0,
            escape_phase_threshold: 1.5 * std::f64::consts::PI,
            trajectories: 256,
            seed: 0,
            rf_coupling: 2.0,
            post_pulse_margin: 150.0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.time_step > 0.0 && self.time_step <= 0.1) {
            return Err(Error::Config(format!(
                "time_step {} outside (0, 0.1]",
                self.time_step
            )));
        }
        if self.trajectories == 0 {
            return Err(Error::Config("trajectories must be >= 1".into()));
        }
        if !(self.escape_phase_threshold > std::f64::consts::PI) {
            return Err(Error::Config(format!(
                "escape_phase_threshold {} must exceed pi",
                self.escape_phase_threshold
            )));
        }
        if !(self.max_time > 0.0) {
            return Err(Error::Config("max_time must be positive".into()));
        }
        if !(self.rf_coupling >= 0.0) || !self.rf_coupling.is_finite() {
            return Err(Error::Config("rf_coupling must be finite and >= 0".into()));
        }
        Ok(())
    }
}

/// Outcome of one phase trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Trajectory {
    /// Escape time in units of 1/ω_p0; equals the horizon when censored.
    pub escape_time: f64,
    /// Whether the phase left the well before the horizon.
    pub escaped: bool,
}

/// Dimensionless drive amplitude i_rf = κ·√(2P/Z₀)/I_c for a pulse feeding
/// the junction through the line impedance Z₀ = R.
pub fn rf_drive_amplitude(params: &JunctionParams, pulse: &RfPulse, coupling: f64) -> f64 {
    coupling * (2.0 * pulse.power_watts() / params.shunt_resistance).sqrt()
        / params.critical_current
}

struct DriveWindow {
    amplitude: f64,
    omega: f64,
    phase: f64,
    on: f64,
    off: f64,
}

fn drive_window(
    params: &JunctionParams,
    pulse: &RfPulse,
    coupling: f64,
    rng: &mut ChaCha8Rng,
) -> DriveWindow {
    let w_p0 = params.plasma_frequency_zero_bias();
    let on = pulse.arrival_time * w_p0;
    DriveWindow {
        amplitude: rf_drive_amplitude(params, pulse, coupling),
        omega: 2.0 * std::f64::consts::PI * pulse.frequency / w_p0,
        // The pulse phase at arrival is not synchronized to the plasma
        // oscillation; draw it before any stepping so it is independent of
        // the step size.
        phase: rng.random::<f64>() * 2.0 * std::f64::consts::PI,
        on,
        off: on + pulse.width * w_p0,
    }
}

/// Integrate one trajectory from rest at the well minimum.
///
/// With `temperature = 0` and no pulse the motion is deterministic and the
/// particle stays in the well; an energy increase then signals an unstable
/// step size and is reported as an error.
pub fn integrate_phase(
    params: &JunctionParams,
    env: &ThermalEnvironment,
    bias: f64,
    pulse: Option<&RfPulse>,
    config: &SimConfig,
) -> Result<Trajectory> {
    config.validate()?;
    let mut rng = seeding::stream_rng(config.seed, &[tags::TRAJECTORY, 0]);
    integrate_phase_with_rng(params, env, bias, pulse, config, &mut rng)
}

fn integrate_phase_with_rng(
    params: &JunctionParams,
    env: &ThermalEnvironment,
    bias: f64,
    pulse: Option<&RfPulse>,
    config: &SimConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Trajectory> {
    let tilt = params.reduced_bias(bias)?;
    let q0 = params.plasma_frequency_zero_bias() * params.shunt_resistance * params.capacitance;
    let noise_energy = env.thermal_energy() / params.potential_scale();
    let noise_amp = (2.0 * noise_energy / q0).sqrt();
    let drive = pulse.map(|p| drive_window(params, p, config.rf_coupling, rng));

    let dt = config.time_step;
    let sqrt_dt = dt.sqrt();
    let phi_start = washboard::well_minimum(tilt);
    let escape_at = washboard::barrier_maximum(tilt)
        + (config.escape_phase_threshold - std::f64::consts::PI);

    let conservative_check = noise_amp == 0.0 && drive.is_none();
    let mut energy_ref = f64::INFINITY;

    let drive_at = |tau: f64| -> f64 {
        match &drive {
            Some(d) if tau >= d.on && tau < d.off => {
                d.amplitude * (d.omega * tau + d.phase).sin()
            }
            _ => 0.0,
        }
    };

    let mut phi = phi_start;
    let mut v = 0.0;
    let mut tau = 0.0;
    let mut step: u64 = 0;
    while tau < config.max_time {
        let dw = if noise_amp > 0.0 {
            let z: f64 = rng.sample(StandardNormal);
            noise_amp * sqrt_dt * z
        } else {
            0.0
        };
        let acc = -v / q0 - phi.sin() + tilt + drive_at(tau);
        // Heun predictor/corrector; the noise increment enters both stages.
        let phi_p = phi + v * dt;
        let v_p = v + acc * dt + dw;
        let acc_p = -v_p / q0 - phi_p.sin() + tilt + drive_at(tau + dt);
        phi += 0.5 * (v + v_p) * dt;
        v += 0.5 * (acc + acc_p) * dt + dw;
        tau += dt;
        step += 1;

        if phi > escape_at && v > 0.0 {
            return Ok(Trajectory {
                escape_time: tau,
                escaped: true,
            });
        }
        if conservative_check && step % 64 == 0 {
            let energy = 0.5 * v * v + washboard::potential(phi, tilt);
            if energy > energy_ref + 1e-6 {
                return Err(Error::Instability {
                    growth: energy - energy_ref,
                    time: tau,
                });
            }
            if energy < energy_ref {
                energy_ref = energy;
            }
        }
    }
    Ok(Trajectory {
        escape_time: config.max_time,
        escaped: false,
    })
}

/// Censoring-corrected maximum-likelihood escape rate from a trajectory set:
/// Γ = n_esc / Σ tᵢ over all trajectories, converted to Hz through ω_p0;
/// the uncertainty is Γ/√n_esc. Requires at least 10 escapes.
pub fn escape_rate_from_trajectories(
    trajectories: &[Trajectory],
    plasma_frequency_zero_bias: f64,
) -> Result<(f64, f64)> {
    let escapes = trajectories.iter().filter(|t| t.escaped).count();
    if escapes < 10 {
        return Err(Error::InsufficientEscapes {
            escapes,
            required: 10,
        });
    }
    let total_time: f64 = trajectories.iter().map(|t| t.escape_time).sum();
    let rate_dimless = escapes as f64 / total_time;
    let rate = rate_dimless * plasma_frequency_zero_bias;
    Ok((rate, rate / (escapes as f64).sqrt()))
}

/// Monte Carlo escape rate at a fixed bias: independent trajectories with
/// per-index random streams, merged in index order.
pub fn mc_escape_rate(
    params: &JunctionParams,
    env: &ThermalEnvironment,
    bias: f64,
    config: &SimConfig,
) -> Result<(f64, f64)> {
    config.validate()?;
    let trajectories: Vec<Trajectory> = (0..config.trajectories)
        .into_par_iter()
        .map(|idx| {
            let mut rng = seeding::stream_rng(config.seed, &[tags::TRAJECTORY, idx as u64]);
            integrate_phase_with_rng(params, env, bias, None, config, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    escape_rate_from_trajectories(&trajectories, params.plasma_frequency_zero_bias())
}

/// Switching-efficiency map over a (bias, photon-number) grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryMap {
    /// Bias grid (A), ascending.
    pub biases: Vec<f64>,
    /// Photon-number grid, ascending.
    pub photon_numbers: Vec<f64>,
    /// Efficiency per cell, row-major: `efficiency[bias_idx][photon_idx]`.
    pub efficiency: Vec<Vec<f64>>,
}

impl BoundaryMap {
    /// Photon number at which a bias row crosses efficiency 0.5, linearly
    /// interpolated; `None` when the row never reaches 0.5.
    pub fn threshold_photon_number(&self, bias_idx: usize) -> Option<f64> {
        let row = &self.efficiency[bias_idx];
        let grid = &self.photon_numbers;
        if row[0] >= 0.5 {
            return Some(grid[0]);
        }
        for k in 1..row.len() {
            if row[k] >= 0.5 {
                let f = (0.5 - row[k - 1]) / (row[k] - row[k - 1]);
                return Some(grid[k - 1] + f * (grid[k] - grid[k - 1]));
            }
        }
        None
    }

    /// True when every defined 0.5-threshold is non-increasing along the
    /// bias axis.
    pub fn threshold_monotone_in_bias(&self) -> bool {
        let thresholds: Vec<f64> = (0..self.biases.len())
            .filter_map(|b| self.threshold_photon_number(b))
            .collect();
        thresholds.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12))
    }

    /// Single-trial switching probability implied by a cell, inverting the
    /// independent-trials pulse model.
    pub fn eps_j_at(&self, bias_idx: usize, photon_idx: usize, trials: f64) -> f64 {
        let eps = self.efficiency[bias_idx][photon_idx].min(1.0 - 1e-12);
        -((1.0 - eps).ln() / trials).exp_m1()
    }
}

/// Simulate the switching-efficiency map: for every grid cell the pulse
/// template is scaled to deliver the cell's photon number and the fraction
/// of trajectories escaping within the pulse window (plus the configured
/// margin) is recorded.
pub fn switching_boundary_map(
    params: &JunctionParams,
    env: &ThermalEnvironment,
    bias_grid: &[f64],
    photon_grid: &[f64],
    pulse_template: &RfPulse,
    config: &SimConfig,
) -> Result<BoundaryMap> {
    config.validate()?;
    if bias_grid.is_empty() || photon_grid.is_empty() {
        return Err(Error::Config("boundary map grids must be non-empty".into()));
    }
    if bias_grid.windows(2).any(|w| w[1] <= w[0])
        || photon_grid.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(Error::Config(
            "boundary map grids must be strictly increasing".into(),
        ));
    }
    let tau_j = params.relaxation_time();
    let w_p0 = params.plasma_frequency_zero_bias();
    let window_start = pulse_template.arrival_time * w_p0;
    let window_end = window_start + pulse_template.width * w_p0 + config.post_pulse_margin;

    let cells: Vec<(usize, usize)> = (0..bias_grid.len())
        .flat_map(|b| (0..photon_grid.len()).map(move |p| (b, p)))
        .collect();

    let efficiencies: Vec<f64> = cells
        .par_iter()
        .map(|&(b_idx, p_idx)| -> Result<f64> {
            let n_gamma = photon_grid[p_idx];
            let power =
                junction::power_for_photon_number(n_gamma, pulse_template.frequency, tau_j);
            let pulse = RfPulse::new(
                pulse_template.frequency,
                junction::watts_to_dbm(power.max(f64::MIN_POSITIVE)),
                pulse_template.width,
                pulse_template.arrival_time,
            )?;
            let pulse = if n_gamma == 0.0 {
                RfPulse::new(
                    pulse_template.frequency,
                    f64::NEG_INFINITY,
                    pulse_template.width,
                    pulse_template.arrival_time,
                )?
            } else {
                pulse
            };
            let cell = (b_idx * photon_grid.len() + p_idx) as u64;
            let mut switched = 0usize;
            for t_idx in 0..config.trajectories {
                let mut rng = seeding::stream_rng(
                    config.seed,
                    &[tags::TRAJECTORY, cell, t_idx as u64],
                );
                let traj = integrate_phase_with_rng(
                    params,
                    env,
                    bias_grid[b_idx],
                    Some(&pulse),
                    config,
                    &mut rng,
                )?;
                if traj.escaped
                    && traj.escape_time >= window_start
                    && traj.escape_time <= window_end
                {
                    switched += 1;
                }
            }
            Ok(switched as f64 / config.trajectories as f64)
        })
        .collect::<Result<Vec<_>>>()?;

    let efficiency = efficiencies
        .chunks(photon_grid.len())
        .map(|row| row.to_vec())
        .collect();
    Ok(BoundaryMap {
        biases: bias_grid.to_vec(),
        photon_numbers: photon_grid.to_vec(),
        efficiency,
    })
}
