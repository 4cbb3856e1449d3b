//! Estimation pipeline: switching-time histograms, exponential and
//! RF-modified histogram fits, efficiency extraction, Kramers rate-curve
//! fits and the pulse-duration fit.

mod fits;
pub mod lm;

pub use fits::{
    efficiency_from_fit, efficiency_low_dark, fit_exponential, fit_kramers, fit_pulse_width,
    fit_rf_histogram, EfficiencyEstimate, PulseWidthPoint,
};

use crate::error::{Error, Result};
use crate::protocol::SwitchingDataset;
use serde::Serialize;

/// A switching-time histogram with uniform bins `[origin + kδt, origin + (k+1)δt)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    /// Left edge of the first bin (s).
    pub origin: f64,
    /// Bin width δt (s).
    pub bin_width: f64,
    /// Event counts per bin.
    pub counts: Vec<u64>,
    /// Records known to survive past the binned span (including censored
    /// ones). When present, fits add the matching survivor term to the
    /// likelihood, which both sharpens and calibrates the uncertainties
    /// when the binned span holds a large share of all records.
    pub beyond_span: Option<u64>,
}

impl Histogram {
    pub fn new(origin: f64, bin_width: f64, counts: Vec<u64>) -> Result<Self> {
        if !(bin_width > 0.0) || !bin_width.is_finite() {
            return Err(Error::Domain {
                name: "bin_width",
                value: bin_width,
                requirement: "finite and > 0",
            });
        }
        Ok(Self {
            origin,
            bin_width,
            counts,
            beyond_span: None,
        })
    }

    /// Bin lifetimes into `n_bins` bins; values above the span are tallied
    /// as beyond-span survivors, values below the origin are dropped.
    pub fn from_lifetimes(
        lifetimes: impl IntoIterator<Item = f64>,
        origin: f64,
        bin_width: f64,
        n_bins: usize,
    ) -> Result<Self> {
        let mut counts = vec![0u64; n_bins];
        let mut beyond = 0u64;
        for t in lifetimes {
            let k = (t - origin) / bin_width;
            if k >= 0.0 {
                if (k as usize) < n_bins {
                    counts[k as usize] += 1;
                } else {
                    beyond += 1;
                }
            }
        }
        let mut hist = Self::new(origin, bin_width, counts)?;
        hist.beyond_span = Some(beyond);
        Ok(hist)
    }

    /// Histogram of a dataset's non-censored lifetimes over the first hold
    /// window `[0, hold_duration)`. Censored records never enter.
    pub fn from_dataset(ds: &SwitchingDataset, bin_width: f64) -> Result<Self> {
        let n_bins = (ds.meta.waveform.hold_duration / bin_width).floor() as usize;
        if n_bins == 0 {
            return Err(Error::Domain {
                name: "bin_width",
                value: bin_width,
                requirement: "smaller than the hold window",
            });
        }
        let mut hist = Self::from_lifetimes(
            ds.records
                .iter()
                .filter(|r| !r.censored)
                .map(|r| r.lifetime),
            0.0,
            bin_width,
            n_bins,
        )?;
        // Censored records survived every hold window, hence also the span.
        if let Some(beyond) = &mut hist.beyond_span {
            *beyond += ds.censored_count() as u64;
        }
        Ok(hist)
    }

    /// Histogram in accumulated-exposure time, where the dark decay is one
    /// exponential across cycles. `max_exposure` must stay at or below the
    /// second pulse (hold_duration + rf_delay) when the dataset carries RF,
    /// so a single RF bin describes the data. Censored records never enter
    /// the bins; they count among the beyond-span survivors.
    pub fn from_dataset_exposure(
        ds: &SwitchingDataset,
        bin_width: f64,
        max_exposure: f64,
    ) -> Result<Self> {
        let second_pulse = ds.meta.waveform.hold_duration + ds.meta.rf_delay;
        if ds.meta.rf_efficiency > 0.0 && max_exposure > second_pulse + 1e-12 {
            return Err(Error::Domain {
                name: "max_exposure",
                value: max_exposure,
                requirement: "at or below the second pulse exposure",
            });
        }
        let n_bins = (max_exposure / bin_width).floor() as usize;
        if n_bins == 0 {
            return Err(Error::Domain {
                name: "bin_width",
                value: bin_width,
                requirement: "smaller than the exposure span",
            });
        }
        let mut hist = Self::from_lifetimes(ds.exposure_lifetimes(), 0.0, bin_width, n_bins)?;
        if let Some(beyond) = &mut hist.beyond_span {
            *beyond += ds.censored_count() as u64;
        }
        Ok(hist)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn nonempty_bins(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    /// Left edge of bin `k` (s).
    pub fn left_edge(&self, k: usize) -> f64 {
        self.origin + k as f64 * self.bin_width
    }

    /// Index of the bin whose left edge is `t`, requiring alignment to the
    /// bin grid within 1e−9·δt.
    pub fn aligned_bin(&self, t: f64) -> Result<usize> {
        let x = (t - self.origin) / self.bin_width;
        let k = x.round();
        if (x - k).abs() > 1e-9 || k < 0.0 || (k as usize) >= self.counts.len() {
            return Err(Error::MisalignedRf { t_rf: t });
        }
        Ok(k as usize)
    }
}

/// Per-bin count from the plain exponential decay model,
/// ΔN(t) = (N₀δt/τ)·e^{−t/τ}, evaluated at the bin time `t`.
pub fn decay_model(t: f64, n0: f64, tau: f64, bin_width: f64) -> f64 {
    n0 * bin_width / tau * (-t / tau).exp()
}

/// Per-bin count from the RF-modified decay model: the plain decay, minus
/// the post-pulse depletion (the N_RF events removed at t_rf no longer decay
/// thermally), plus the RF-bin population itself. Steps use θ(0) = 1 so the
/// RF bin includes its left edge.
pub fn rf_model(t: f64, n0: f64, tau: f64, n_rf: f64, t_rf: f64, bin_width: f64) -> f64 {
    let mut v = decay_model(t, n0, tau, bin_width);
    if t >= t_rf {
        v -= n_rf * bin_width / tau * (-(t - t_rf) / tau).exp();
    }
    if t >= t_rf && t < t_rf + bin_width {
        v += n_rf;
    }
    v
}

/// A non-convergence-free fit report: named parameters, uncertainties from
/// the covariance diagonal, reduced χ² and any validity warnings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub names: Vec<&'static str>,
    pub values: Vec<f64>,
    pub uncertainties: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub chi2_reduced: f64,
    pub n_points: usize,
    pub converged: bool,
    pub warnings: Vec<FitWarning>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FitWarning {
    /// The decay constant is effectively unconstrained by the data.
    TauUnconstrained,
    /// The model is locally flat in a parameter; uncertainties are suspect.
    IllConditioned,
    /// Fewer points or less span than the estimator prefers.
    SparseData,
}

impl FitResult {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| *n == name)
            .map(|i| self.values[i])
    }

    pub fn uncertainty(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| *n == name)
            .map(|i| self.uncertainties[i])
    }

    pub(crate) fn from_lm(
        names: Vec<&'static str>,
        fit: lm::LmFit,
        chi2_reduced: f64,
        n_points: usize,
        warnings: Vec<FitWarning>,
    ) -> Self {
        let uncertainties = (0..fit.params.len())
            .map(|i| fit.covariance[i][i].max(0.0).sqrt())
            .collect();
        let mut warnings = warnings;
        if fit.singular && !warnings.contains(&FitWarning::IllConditioned) {
            warnings.push(FitWarning::IllConditioned);
        }
        Self {
            names,
            values: fit.params,
            uncertainties,
            covariance: fit.covariance,
            chi2_reduced,
            n_points,
            converged: fit.converged,
            warnings,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn histogram_binning_and_alignment() {
        let h = Histogram::from_lifetimes(
            [0.05e-3, 0.15e-3, 0.15e-3, 5.0, -1.0],
            0.0,
            0.1e-3,
            70,
        )
        .unwrap();
        assert_eq!(h.counts[0], 1);
        assert_eq!(h.counts[1], 2);
        assert_eq!(h.total(), 3); // out-of-span values dropped
        assert_eq!(h.aligned_bin(7.0e-3 * 0.0).unwrap(), 0);
        assert_eq!(h.aligned_bin(0.5e-3).unwrap(), 5);
        assert!(h.aligned_bin(0.55e-3).is_err());
        assert!(h.aligned_bin(70.0 * 0.1e-3).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn rf_model_reduces_to_decay_when_nrf_zero(
            t in 0.0f64..20e-3,
            tau in 1e-4f64..0.1,
            n0 in 10.0f64..1e5,
        ) {
            let dt = 1e-4;
            let a = rf_model(t, n0, tau, 0.0, 7e-3, dt);
            let b = decay_model(t, n0, tau, dt);
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn decay_model_area_law() {
        // ∫_{t_rf}^∞ of the decay model equals N₀δt·e^{−t_rf/τ}; checked
        // against adaptive Simpson quadrature.
        fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, n: usize) -> f64 {
            let h = (b - a) / n as f64;
            let mut s = f(a) + f(b);
            for k in 1..n {
                let x = a + k as f64 * h;
                s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(x);
            }
            s * h / 3.0
        }
        for (n0, tau, t_rf) in [(5000.0, 5e-3, 7e-3), (120.0, 1.3e-3, 2e-3), (9e4, 40e-3, 7e-3)] {
            let dt = t_rf / 70.0;
            let f = |t: f64| decay_model(t, n0, tau, dt);
            // 60τ tail bound keeps the truncation below 1e-9 relative.
            let integral = simpson(&f, t_rf, t_rf + 60.0 * tau, 1 << 16);
            let closed = n0 * dt * (-t_rf / tau).exp();
            assert_relative_eq!(integral, closed, max_relative = 1e-9);
        }
    }

    #[test]
    fn rf_bin_includes_left_edge_only() {
        let (n0, tau, n_rf, t_rf, dt) = (1000.0, 5e-3, 80.0, 7e-3, 1e-4);
        let at_edge = rf_model(t_rf, n0, tau, n_rf, t_rf, dt);
        let before = rf_model(t_rf - dt, n0, tau, n_rf, t_rf, dt);
        let after = rf_model(t_rf + dt, n0, tau, n_rf, t_rf, dt);
        assert!(at_edge > before + 0.9 * n_rf);
        assert!(after < before);
    }
}
