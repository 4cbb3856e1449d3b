//! Thermal escape kinetics: Kramers activation rate out of the washboard
//! well, model dark-count curves, and the Poisson switching model for
//! finite-length RF pulses.

use crate::constants::BOLTZMANN;
use crate::error::{Error, Result};
use crate::junction::{self, JunctionParams};
use serde::{Deserialize, Serialize};

/// Effective thermal environment of the junction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalEnvironment {
    /// Effective escape temperature T (K). Zero is the noiseless limit used
    /// by deterministic simulation; thermal rate models require T > 0.
    pub temperature: f64,
}

impl ThermalEnvironment {
    pub fn new(temperature: f64) -> Result<Self> {
        if !(temperature >= 0.0) || !temperature.is_finite() {
            return Err(Error::Domain {
                name: "temperature",
                value: temperature,
                requirement: "finite and >= 0",
            });
        }
        Ok(Self { temperature })
    }

    /// Thermal energy k_B·T (J).
    pub fn thermal_energy(&self) -> f64 {
        BOLTZMANN * self.temperature
    }

    /// True when the environment sits below the thermal/quantum crossover at
    /// this bias, where a purely thermal rate model loses validity.
    pub fn below_crossover(&self, params: &JunctionParams, bias: f64) -> Result<bool> {
        Ok(self.temperature < junction::crossover_temperature(params, bias)?)
    }
}

/// Exponent ΔU/k_BT beyond which the rate is reported as an exact zero.
pub const DEFAULT_EXPONENT_CAP: f64 = 700.0;

/// Quality-factor window where the intermediate-low-damping prefactor is
/// trusted; outside it a validity warning applies.
pub const PREFACTOR_Q_RANGE: (f64, f64) = (1.0, 100.0);

/// Damping-dependent Kramers prefactor for intermediate-low damping:
/// a_t = 4 / (√(1 + Q·k_BT/1.8ΔU) + 1)². Always in (0, 4); → 1 as the
/// argument vanishes.
pub fn damping_prefactor(quality_factor: f64, thermal_energy: f64, barrier: f64) -> f64 {
    let x = quality_factor * thermal_energy / (1.8 * barrier);
    4.0 / ((1.0 + x).sqrt() + 1.0).powi(2)
}

/// A Kramers rate with its underflow status.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KramersRate {
    /// Escape rate Γ (Hz); exactly zero when underflowed.
    pub hertz: f64,
    /// Set when ΔU/k_BT exceeded the exponent cap and the rate was
    /// declared an exact zero.
    pub underflowed: bool,
}

/// Thermal-activation escape rate Γ = a_t (ω_p/2π) e^{−ΔU/k_BT}, computed in
/// log space with an exponent cap so the deep-well regime yields exact zeros.
pub fn kramers_rate_capped(
    params: &JunctionParams,
    env: &ThermalEnvironment,
    bias: f64,
    exponent_cap: f64,
) -> Result<KramersRate> {
    let barrier = junction::barrier_height(params, bias)?;
    let omega_p = junction::plasma_frequency(params, bias)?;
    let q = omega_p * params.shunt_resistance * params.capacitance;
    let kt = env.thermal_energy();
    let exponent = barrier / kt;
    if exponent > exponent_cap {
        return Ok(KramersRate {
            hertz: 0.0,
            underflowed: true,
        });
    }
    let prefactor = damping_prefactor(q, kt, barrier);
    let ln_rate =
        prefactor.ln() + (omega_p / (2.0 * std::f64::consts::PI)).ln() - exponent;
    Ok(KramersRate {
        hertz: ln_rate.exp(),
        underflowed: false,
    })
}

/// Kramers escape rate (Hz) with the default exponent cap.
pub fn kramers_rate(params: &JunctionParams, env: &ThermalEnvironment, bias: f64) -> Result<f64> {
    Ok(kramers_rate_capped(params, env, bias, DEFAULT_EXPONENT_CAP)?.hertz)
}

/// Analytic derivative d(log10 Γ)/dI (per ampere), including the plasma and
/// prefactor corrections on top of the dominant barrier term.
pub fn kramers_log10_slope(
    params: &JunctionParams,
    env: &ThermalEnvironment,
    bias: f64,
) -> Result<f64> {
    let i = params.reduced_bias(bias)?;
    let ic = params.critical_current;
    let u0 = params.potential_scale();
    let kt = env.thermal_energy();
    let barrier = junction::barrier_height(params, bias)?;
    let omega_p = junction::plasma_frequency(params, bias)?;
    let q = omega_p * params.shunt_resistance * params.capacitance;

    // dΔU/dI = U₀·(d/di)2[√(1−i²) − i·arccos i] / I_c = −2U₀ arccos(i)/I_c.
    let d_barrier = u0 * junction::washboard::barrier_slope(i) / ic;
    // d ln ω_p/dI = −i / (2(1−i²)·I_c); Q carries the same derivative.
    let d_ln_omega = -i / (2.0 * (1.0 - i * i) * ic);
    // a_t = 4/(√(1+x)+1)² with x = Q·kT/(1.8ΔU):
    // d ln a_t/dx = −1/(√(1+x)(√(1+x)+1)).
    let x = q * kt / (1.8 * barrier);
    let dx = x * (d_ln_omega - d_barrier / barrier);
    let s = (1.0 + x).sqrt();
    let d_ln_prefactor = -dx / (s * (s + 1.0));

    let d_ln_rate = d_ln_prefactor + d_ln_omega - d_barrier / kt;
    Ok(d_ln_rate / std::f64::consts::LN_10)
}

/// Find the temperature at which the Kramers rate at `bias` equals
/// `target_hz`, by bisection. The rate is strictly increasing in T.
pub fn temperature_for_rate(
    params: &JunctionParams,
    bias: f64,
    target_hz: f64,
) -> Result<ThermalEnvironment> {
    if !(target_hz > 0.0) {
        return Err(Error::Domain {
            name: "target_hz",
            value: target_hz,
            requirement: "> 0",
        });
    }
    let mut lo = 1e-4;
    let mut hi = 100.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let env = ThermalEnvironment::new(mid)?;
        if kramers_rate(params, &env, bias)? < target_hz {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    ThermalEnvironment::new(0.5 * (lo + hi))
}

/// An escape-rate curve over bias, with per-point uncertainties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCurve {
    /// (bias A, rate Hz, rate uncertainty Hz), biases strictly increasing.
    pub points: Vec<RatePoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub bias_current: f64,
    pub rate: f64,
    pub rate_uncertainty: f64,
}

impl RateCurve {
    pub fn new(points: Vec<RatePoint>) -> Result<Self> {
        for pair in points.windows(2) {
            if pair[1].bias_current <= pair[0].bias_current {
                return Err(Error::Config(
                    "rate curve biases must be strictly increasing".into(),
                ));
            }
        }
        for p in &points {
            if !(p.rate > 0.0) || !(p.rate_uncertainty >= 0.0) {
                return Err(Error::Config(
                    "rate curve rates must be positive with nonnegative uncertainty".into(),
                ));
            }
        }
        Ok(Self { points })
    }

    /// Ratio of the largest to the smallest rate.
    pub fn dynamic_range(&self) -> f64 {
        let max = self.points.iter().map(|p| p.rate).fold(0.0, f64::max);
        let min = self
            .points
            .iter()
            .map(|p| p.rate)
            .fold(f64::INFINITY, f64::min);
        max / min
    }
}

/// Model dark-count curve over a bias grid (zero uncertainties).
pub fn dark_rate_curve(
    params: &JunctionParams,
    env: &ThermalEnvironment,
    bias_grid: &[f64],
) -> Result<RateCurve> {
    let points = bias_grid
        .iter()
        .map(|&b| {
            Ok(RatePoint {
                bias_current: b,
                rate: kramers_rate(params, env, b)?,
                rate_uncertainty: 0.0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    for pair in points.windows(2) {
        if pair[1].bias_current <= pair[0].bias_current {
            return Err(Error::Config(
                "bias grid must be strictly increasing".into(),
            ));
        }
    }
    Ok(RateCurve { points })
}

/// Switching probability of a pulse of width ΔT built from independent
/// relaxation-time trials: ε = 1 − (1 − ε_j)^{ΔT/τ_j}.
pub fn poisson_switch_probability(
    eps_j: f64,
    pulse_width: f64,
    relaxation_time: f64,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&eps_j) {
        return Err(Error::Domain {
            name: "eps_j",
            value: eps_j,
            requirement: "in [0, 1]",
        });
    }
    if !(pulse_width > 0.0) || !(relaxation_time > 0.0) {
        return Err(Error::Domain {
            name: "pulse_width/relaxation_time",
            value: pulse_width.min(relaxation_time),
            requirement: "> 0",
        });
    }
    let trials = pulse_width / relaxation_time;
    // 1 − (1−ε_j)^n as −expm1(n·ln1p(−ε_j)) for precision at small ε_j.
    Ok((-(trials * (-eps_j).ln_1p()).exp_m1()).clamp(0.0, 1.0))
}

/// Single-trial switching probability that yields efficiency `eps` for a
/// pulse of `pulse_width`: inverse of `poisson_switch_probability`.
pub fn eps_j_for_efficiency(eps: f64, pulse_width: f64, relaxation_time: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::Domain {
            name: "eps",
            value: eps,
            requirement: "in [0, 1)",
        });
    }
    let trials = pulse_width / relaxation_time;
    Ok(-((1.0 - eps).ln() / trials).exp_m1())
}
