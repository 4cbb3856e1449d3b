//! Closed-form junction physics: tilted washboard potential, plasma
//! frequency, quality factor, and the photon/level bookkeeping used to
//! express drive power and barrier depth in natural units.
//!
//! Everything here is a pure function of immutable inputs. All quantities
//! are SI; dBm, GHz, μA and pF exist only at interface boundaries.

use crate::constants::{BOLTZMANN, FLUX_QUANTUM, HBAR, PLANCK};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Convert a power level in dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Convert a power level in watts to dBm.
pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

/// Junction electrical parameters: critical current, capacitance and the
/// shunt resistance presented by the transmission line feeding the device.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JunctionParams {
    /// Critical current I_c (A).
    pub critical_current: f64,
    /// Junction capacitance C (F).
    pub capacitance: f64,
    /// Shunt resistance R (Ω); the line impedance loading the junction.
    pub shunt_resistance: f64,
}

impl JunctionParams {
    pub fn new(critical_current: f64, capacitance: f64, shunt_resistance: f64) -> Result<Self> {
        if !(critical_current > 0.0) || !critical_current.is_finite() {
            return Err(Error::Domain {
                name: "critical_current",
                value: critical_current,
                requirement: "finite and > 0",
            });
        }
        if !(capacitance > 0.0) || !capacitance.is_finite() {
            return Err(Error::Domain {
                name: "capacitance",
                value: capacitance,
                requirement: "finite and > 0",
            });
        }
        if !(shunt_resistance > 0.0) || !shunt_resistance.is_finite() {
            return Err(Error::Domain {
                name: "shunt_resistance",
                value: shunt_resistance,
                requirement: "finite and > 0",
            });
        }
        Ok(Self {
            critical_current,
            capacitance,
            shunt_resistance,
        })
    }

    /// Energy relaxation time τ_j = R·C (s).
    pub fn relaxation_time(&self) -> f64 {
        self.shunt_resistance * self.capacitance
    }

    /// Josephson energy scale U₀ = I_c ϕ₀ / 2π (J).
    pub fn potential_scale(&self) -> f64 {
        self.critical_current * FLUX_QUANTUM / (2.0 * std::f64::consts::PI)
    }

    /// Zero-bias plasma angular frequency ω_p0 = (2π I_c / ϕ₀ C)^{1/2} (rad/s).
    pub fn plasma_frequency_zero_bias(&self) -> f64 {
        (2.0 * std::f64::consts::PI * self.critical_current
            / (FLUX_QUANTUM * self.capacitance))
            .sqrt()
    }

    /// Reduced bias i = I / I_c; errors outside [0, 1).
    pub fn reduced_bias(&self, bias: f64) -> Result<f64> {
        if !(bias >= 0.0) || bias >= self.critical_current {
            return Err(Error::Domain {
                name: "bias_current",
                value: bias,
                requirement: "0 <= I < I_c",
            });
        }
        Ok(bias / self.critical_current)
    }
}

/// Tilted washboard potential in natural units: u(φ) = −(cos φ + i·φ),
/// energy measured in U₀, tilt i = I/I_c.
pub mod washboard {
    /// Potential u(φ) in units of U₀.
    pub fn potential(phase: f64, tilt: f64) -> f64 {
        -(phase.cos() + tilt * phase)
    }

    /// Phase of the metastable well minimum, arcsin(i) ∈ [0, π/2).
    pub fn well_minimum(tilt: f64) -> f64 {
        tilt.asin()
    }

    /// Phase of the adjacent barrier maximum, π − arcsin(i).
    pub fn barrier_maximum(tilt: f64) -> f64 {
        std::f64::consts::PI - tilt.asin()
    }

    /// Barrier height in units of U₀: 2[√(1−i²) − i·arccos i].
    pub fn barrier(tilt: f64) -> f64 {
        2.0 * ((1.0 - tilt * tilt).sqrt() - tilt * tilt.acos())
    }

    /// d(barrier)/di in units of U₀: −2·arccos(i).
    pub fn barrier_slope(tilt: f64) -> f64 {
        -2.0 * tilt.acos()
    }
}

/// Barrier height ΔU between the well minimum and the adjacent maximum of
/// U(φ) = −U₀(cos φ + iφ) (J). Strictly decreasing in bias, zero at I = I_c.
pub fn barrier_height(params: &JunctionParams, bias: f64) -> Result<f64> {
    let i = params.reduced_bias(bias)?;
    Ok(params.potential_scale() * washboard::barrier(i))
}

/// Bias-dependent plasma angular frequency ω_p = ω_p0 (1 − i²)^{1/4} (rad/s).
pub fn plasma_frequency(params: &JunctionParams, bias: f64) -> Result<f64> {
    let i = params.reduced_bias(bias)?;
    Ok(params.plasma_frequency_zero_bias() * (1.0 - i * i).powf(0.25))
}

/// Quality factor Q = ω_p(I)·R·C (dimensionless).
pub fn quality_factor(params: &JunctionParams, bias: f64) -> Result<f64> {
    Ok(plasma_frequency(params, bias)? * params.shunt_resistance * params.capacitance)
}

/// Well depth expressed as a count of levels spaced ħω_p: ΔU / ħω_p.
pub fn level_count(params: &JunctionParams, bias: f64) -> Result<f64> {
    Ok(barrier_height(params, bias)? / (HBAR * plasma_frequency(params, bias)?))
}

/// Thermal/quantum crossover temperature ħω_p / 2πk_B (K).
pub fn crossover_temperature(params: &JunctionParams, bias: f64) -> Result<f64> {
    Ok(HBAR * plasma_frequency(params, bias)? / (2.0 * std::f64::consts::PI * BOLTZMANN))
}

/// Energy of one photon at `frequency` (J).
pub fn photon_energy(frequency: f64) -> f64 {
    PLANCK * frequency
}

/// Find the bias current at which the well holds `n_level` levels.
///
/// Inverts the strictly decreasing `level_count` by bisection on
/// [0, (1 − 1e−9)·I_c].
pub fn bias_for_level_count(params: &JunctionParams, n_level: f64) -> Result<f64> {
    if !(n_level > 0.0) {
        return Err(Error::Domain {
            name: "n_level",
            value: n_level,
            requirement: "> 0",
        });
    }
    let mut lo = 0.0;
    let mut hi = params.critical_current * (1.0 - 1e-9);
    if level_count(params, lo)? < n_level {
        return Err(Error::Domain {
            name: "n_level",
            value: n_level,
            requirement: "below the zero-bias level count",
        });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if level_count(params, mid)? > n_level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// An RF stimulus: frequency, delivered power, pulse width and arrival time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RfPulse {
    /// Carrier frequency ν_RF (Hz).
    pub frequency: f64,
    /// Power at the device after all line attenuation (dBm).
    pub power_dbm: f64,
    /// Pulse width ΔT (s).
    pub width: f64,
    /// Arrival time relative to the trigger (s).
    pub arrival_time: f64,
}

impl RfPulse {
    pub fn new(frequency: f64, power_dbm: f64, width: f64, arrival_time: f64) -> Result<Self> {
        if !(frequency > 0.0) || !frequency.is_finite() {
            return Err(Error::Domain {
                name: "frequency",
                value: frequency,
                requirement: "finite and > 0",
            });
        }
        if !(width > 0.0) || !width.is_finite() {
            return Err(Error::Domain {
                name: "width",
                value: width,
                requirement: "finite and > 0",
            });
        }
        if !(arrival_time >= 0.0) || !arrival_time.is_finite() {
            return Err(Error::Domain {
                name: "arrival_time",
                value: arrival_time,
                requirement: "finite and >= 0",
            });
        }
        // NEG_INFINITY encodes zero linear power and stays monotone under
        // the dBm map; NaN and +inf are rejected.
        if power_dbm.is_nan() || power_dbm == f64::INFINITY {
            return Err(Error::Domain {
                name: "power_dbm",
                value: power_dbm,
                requirement: "not NaN and < +inf",
            });
        }
        Ok(Self {
            frequency,
            power_dbm,
            width,
            arrival_time,
        })
    }

    /// Linear power at the device (W).
    pub fn power_watts(&self) -> f64 {
        dbm_to_watts(self.power_dbm)
    }
}

/// Mean photon number delivered to the junction within one relaxation time:
/// N_γ = P·τ_j / hν.
pub fn photon_number(pulse: &RfPulse, relaxation_time: f64) -> Result<f64> {
    if !(relaxation_time > 0.0) {
        return Err(Error::Domain {
            name: "relaxation_time",
            value: relaxation_time,
            requirement: "> 0",
        });
    }
    Ok(pulse.power_watts() * relaxation_time / photon_energy(pulse.frequency))
}

/// Power that delivers `n_gamma` photons per relaxation time (W).
pub fn power_for_photon_number(n_gamma: f64, frequency: f64, relaxation_time: f64) -> f64 {
    n_gamma * photon_energy(frequency) / relaxation_time
}

/// Detection-threshold energy and power figures for a pulse that delivers
/// `n_gamma` photons per relaxation time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SensitivitySummary {
    /// Energy of a single photon at the pulse frequency (J).
    pub photon_energy: f64,
    /// Threshold energy accumulated over the full pulse,
    /// N_γ·hν·(ΔT/τ_j) (J).
    pub energy_per_pulse: f64,
    /// Threshold power, energy_per_pulse / ΔT (W).
    pub power: f64,
}

/// Sensitivity bookkeeping at a given photon-number threshold.
pub fn sensitivity_summary(
    pulse: &RfPulse,
    n_gamma: f64,
    relaxation_time: f64,
) -> Result<SensitivitySummary> {
    if !(relaxation_time > 0.0) {
        return Err(Error::Domain {
            name: "relaxation_time",
            value: relaxation_time,
            requirement: "> 0",
        });
    }
    if !(n_gamma >= 0.0) {
        return Err(Error::Domain {
            name: "n_gamma",
            value: n_gamma,
            requirement: ">= 0",
        });
    }
    let e_photon = photon_energy(pulse.frequency);
    let energy_per_pulse = n_gamma * e_photon * (pulse.width / relaxation_time);
    Ok(SensitivitySummary {
        photon_energy: e_photon,
        energy_per_pulse,
        power: energy_per_pulse / pulse.width,
    })
}

/// A bias point with its derived well characteristics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OperatingPoint {
    /// Bias current I (A).
    pub bias_current: f64,
    /// Reduced bias i = I/I_c.
    pub reduced_bias: f64,
    /// Barrier height ΔU (J).
    pub barrier_height: f64,
    /// Plasma angular frequency ω_p (rad/s).
    pub plasma_angular_frequency: f64,
    /// Quality factor Q = ω_p RC.
    pub quality_factor: f64,
    /// Well depth in plasma quanta, ΔU/ħω_p.
    pub level_count: f64,
}

impl OperatingPoint {
    pub fn new(params: &JunctionParams, bias: f64) -> Result<Self> {
        let reduced = params.reduced_bias(bias)?;
        let barrier = barrier_height(params, bias)?;
        let omega_p = plasma_frequency(params, bias)?;
        Ok(Self {
            bias_current: bias,
            reduced_bias: reduced,
            barrier_height: barrier,
            plasma_angular_frequency: omega_p,
            quality_factor: omega_p * params.shunt_resistance * params.capacitance,
            level_count: barrier / (HBAR * omega_p),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    pub(crate) fn paper_params() -> JunctionParams {
        JunctionParams::new(3.156e-6, 1.6e-12, 50.0).unwrap()
    }

    /// Independent oracle: locate the well minimum and adjacent maximum of
    /// u(φ) = −(cos φ + iφ) by golden-section search and return the energy
    /// difference in units of U₀.
    fn barrier_by_extremum_search(tilt: f64) -> f64 {
        let golden = |mut a: f64, mut b: f64, sign: f64| -> f64 {
            let gr = (5f64.sqrt() - 1.0) / 2.0;
            for _ in 0..200 {
                let c = b - gr * (b - a);
                let d = a + gr * (b - a);
                if sign * washboard::potential(c, tilt) < sign * washboard::potential(d, tilt) {
                    b = d;
                } else {
                    a = c;
                }
            }
            0.5 * (a + b)
        };
        // Minimum in [-π/2, π/2], maximum in [π/2, 3π/2].
        let phi_min = golden(-std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2, 1.0);
        let phi_max = golden(
            std::f64::consts::FRAC_PI_2,
            1.5 * std::f64::consts::PI,
            -1.0,
        );
        washboard::potential(phi_max, tilt) - washboard::potential(phi_min, tilt)
    }

    #[test]
    fn params_reject_nonpositive_fields() {
        assert!(JunctionParams::new(0.0, 1.6e-12, 50.0).is_err());
        assert!(JunctionParams::new(3.156e-6, -1e-12, 50.0).is_err());
        assert!(JunctionParams::new(3.156e-6, 1.6e-12, 0.0).is_err());
    }

    #[test]
    fn relaxation_time_paper_value() {
        // R = 50 Ω and C = 1.6 pF give an 80 ps relaxation time.
        assert_relative_eq!(paper_params().relaxation_time(), 80e-12, max_relative = 1e-12);
    }

    #[test]
    fn barrier_zero_bias_is_twice_potential_scale() {
        let p = paper_params();
        let du = barrier_height(&p, 0.0).unwrap();
        assert_relative_eq!(du, 2.0 * p.potential_scale(), max_relative = 1e-12);
        assert_relative_eq!(du, 2.077e-21, max_relative = 2e-4);
    }

    #[test]
    fn barrier_vanishes_at_critical_current() {
        let p = paper_params();
        let i = 0.999_999;
        let du = barrier_height(&p, i * p.critical_current).unwrap();
        assert!(du / (2.0 * p.potential_scale()) < 1e-8);
        assert!(barrier_height(&p, p.critical_current).is_err());
        assert!(barrier_height(&p, -1e-9).is_err());
    }

    #[test]
    fn barrier_at_paper_bias_matches_extremum_search() {
        let p = paper_params();
        let bias = 2.899e-6;
        let du = barrier_height(&p, bias).unwrap();
        let oracle = barrier_by_extremum_search(bias / p.critical_current) * p.potential_scale();
        assert_relative_eq!(du, oracle, max_relative = 1e-9);
        // Frozen from the extremum-search oracle above.
        assert_relative_eq!(du, 4.5697e-23, max_relative = 1e-3);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]
        #[test]
        fn barrier_matches_extremum_search_oracle(i in 0.01f64..0.995) {
            let p = paper_params();
            let du = barrier_height(&p, i * p.critical_current).unwrap();
            let oracle = barrier_by_extremum_search(i) * p.potential_scale();
            prop_assert!((du - oracle).abs() <= 1e-6 * oracle.abs().max(1e-30));
        }

        #[test]
        fn dbm_watt_round_trip(dbm in -150.0f64..10.0) {
            let back = watts_to_dbm(dbm_to_watts(dbm));
            prop_assert!((back - dbm).abs() <= 1e-12 * dbm.abs().max(1.0));
        }

        #[test]
        fn photon_number_scales_linearly(
            p_w in 1e-15f64..1e-9,
            freq in 1e9f64..2e10,
            scale in 0.1f64..10.0,
        ) {
            let tau = 80e-12;
            let pulse = RfPulse::new(freq, watts_to_dbm(p_w), 10e-9, 0.0).unwrap();
            let n1 = photon_number(&pulse, tau).unwrap();
            let scaled = RfPulse::new(freq, watts_to_dbm(p_w * scale), 10e-9, 0.0).unwrap();
            let n2 = photon_number(&scaled, tau).unwrap();
            prop_assert!((n2 / n1 - scale).abs() < 1e-9 * scale);
            let shifted = RfPulse::new(freq * scale, watts_to_dbm(p_w), 10e-9, 0.0).unwrap();
            let n3 = photon_number(&shifted, tau).unwrap();
            prop_assert!((n3 * scale / n1 - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn monotonicity_over_bias_grid() {
        let p = paper_params();
        let n = 120;
        let mut prev = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
        for k in 0..=n {
            let bias = p.critical_current * 0.999 * k as f64 / n as f64;
            let du = barrier_height(&p, bias).unwrap();
            let wp = plasma_frequency(&p, bias).unwrap();
            let nl = level_count(&p, bias).unwrap();
            assert!(du < prev.0 && wp < prev.1 && nl < prev.2, "not strictly decreasing at k={k}");
            prev = (du, wp, nl);
        }
    }

    #[test]
    fn limit_identities_near_critical_current() {
        let p = paper_params();
        let bias = 0.999_999 * p.critical_current;
        let scale = 2.0 * p.potential_scale();
        assert!(barrier_height(&p, bias).unwrap() / scale < 1e-8);
        assert!(level_count(&p, bias).unwrap() / level_count(&p, 0.0).unwrap() < 1e-3);
        assert_relative_eq!(
            plasma_frequency(&p, 0.0).unwrap(),
            p.plasma_frequency_zero_bias(),
            max_relative = 1e-9
        );
    }

    #[test]
    fn plasma_frequency_paper_values() {
        let p = paper_params();
        // Frozen arithmetic: ω_p0 = 7.742e10 rad/s (ν_p0 = 12.32 GHz).
        assert_relative_eq!(plasma_frequency(&p, 0.0).unwrap(), 7.742e10, max_relative = 1e-4);
        assert_relative_eq!(
            plasma_frequency(&p, 2.899e-6).unwrap(),
            4.868e10,
            max_relative = 1e-3
        );
    }

    #[test]
    fn quality_factor_paper_values() {
        let p = paper_params();
        assert_relative_eq!(quality_factor(&p, 2.899e-6).unwrap(), 3.89, max_relative = 2e-3);
        assert_relative_eq!(quality_factor(&p, 0.0).unwrap(), 6.19, max_relative = 2e-3);
    }

    #[test]
    fn level_count_paper_biases() {
        let p = paper_params();
        // ΔU/ħω_p from the exact barrier; the device quotes 8 ± 1.4 here.
        let n_high = level_count(&p, 2.899e-6).unwrap();
        assert!((8.0..10.5).contains(&n_high), "n_high = {n_high}");
        let n_low = level_count(&p, 2.65e-6).unwrap();
        assert!((19.0..23.0).contains(&n_low), "n_low = {n_low}");
    }

    #[test]
    fn bias_for_level_count_inverts() {
        let p = paper_params();
        for target in [3.0, 5.0, 8.0, 20.0] {
            let bias = bias_for_level_count(&p, target).unwrap();
            assert_relative_eq!(level_count(&p, bias).unwrap(), target, max_relative = 1e-6);
        }
        assert!(bias_for_level_count(&p, 1e9).is_err());
    }

    #[test]
    fn photon_number_paper_rows() {
        // -90.25 dBm at 7.89 GHz over 80 ps: 14.4 photons per relaxation time.
        let pulse = RfPulse::new(7.89e9, -90.25, 10e-9, 0.0).unwrap();
        assert_relative_eq!(photon_number(&pulse, 80e-12).unwrap(), 14.45, max_relative = 1e-3);
        let pulse = RfPulse::new(8e9, -91.58, 10e-9, 0.0).unwrap();
        assert_relative_eq!(photon_number(&pulse, 80e-12).unwrap(), 10.49, max_relative = 1e-3);
        let silent = RfPulse::new(8e9, f64::NEG_INFINITY, 10e-9, 0.0).unwrap();
        assert_eq!(photon_number(&silent, 80e-12).unwrap(), 0.0);
        assert!(RfPulse::new(8e9, f64::NAN, 10e-9, 0.0).is_err());
    }

    #[test]
    fn power_for_photon_number_inverts() {
        let p_w = power_for_photon_number(14.446, 7.89e9, 80e-12);
        let pulse = RfPulse::new(7.89e9, watts_to_dbm(p_w), 10e-9, 0.0).unwrap();
        assert_relative_eq!(photon_number(&pulse, 80e-12).unwrap(), 14.446, max_relative = 1e-9);
    }

    #[test]
    fn photon_energy_8ghz() {
        let e = photon_energy(8e9);
        assert!((5.2e-24..5.4e-24).contains(&e));
    }

    #[test]
    fn sensitivity_summary_threshold_figures() {
        let pulse = RfPulse::new(8e9, -90.0, 10e-9, 0.0).unwrap();
        let s = sensitivity_summary(&pulse, 10.0, 80e-12).unwrap();
        // Frozen: 10 photons of 5.3009e-24 J over 125 relaxation windows.
        assert_relative_eq!(s.energy_per_pulse, 6.6261e-21, max_relative = 1e-3);
        assert_relative_eq!(s.power, 6.6261e-13, max_relative = 1e-3);
        let s1 = sensitivity_summary(&pulse, 1.0, 80e-12).unwrap();
        assert_relative_eq!(s1.energy_per_pulse, s.energy_per_pulse / 10.0, max_relative = 1e-12);
        let s0 = sensitivity_summary(&pulse, 0.0, 80e-12).unwrap();
        assert_eq!(s0.energy_per_pulse, 0.0);
        assert_eq!(s0.power, 0.0);
    }

    #[test]
    fn crossover_temperature_capacitance_range() {
        // At C = 1.0 pF the zero-bias crossover sits near 120 mK, at
        // C = 1.6 pF near 94 mK.
        let low_c = JunctionParams::new(3.156e-6, 1.0e-12, 50.0).unwrap();
        assert_relative_eq!(crossover_temperature(&low_c, 0.0).unwrap(), 0.119, max_relative = 5e-3);
        let p = paper_params();
        assert_relative_eq!(crossover_temperature(&p, 0.0).unwrap(), 0.0941, max_relative = 5e-3);
        // (1 − i²)^{1/4} decay toward the critical current.
        let near_ic = 0.999_999 * p.critical_current;
        assert!(crossover_temperature(&p, near_ic).unwrap() < 0.05 * 0.0941);
    }

    #[test]
    fn operating_point_bundles_derived_quantities() {
        let p = paper_params();
        let op = OperatingPoint::new(&p, 2.899e-6).unwrap();
        assert_relative_eq!(op.barrier_height, barrier_height(&p, 2.899e-6).unwrap());
        assert_relative_eq!(op.quality_factor, quality_factor(&p, 2.899e-6).unwrap());
        assert_relative_eq!(op.level_count, level_count(&p, 2.899e-6).unwrap());
        assert!(OperatingPoint::new(&p, p.critical_current).is_err());
    }
}
