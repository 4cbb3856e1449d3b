//! Fit operations: Poisson maximum-likelihood histogram fits, the efficiency
//! estimators, the weighted log-rate Kramers fit and the pulse-duration fit.

use super::lm::{self, minimize, LmOptions};
use super::{FitResult, FitWarning, Histogram};
use crate::constants::BOLTZMANN;
use crate::error::{Error, Result};
use crate::escape::{kramers_rate, poisson_switch_probability, RateCurve, ThermalEnvironment};
use crate::junction::{washboard, JunctionParams};
use crate::protocol::SwitchingDataset;
use serde::Serialize;

/// Signed square-root Poisson deviance residual for observed `n`, expected `m`.
/// Minimizing the sum of squares of these is the Poisson MLE.
fn deviance_residual(n: f64, m: f64) -> f64 {
    let m = m.max(1e-300);
    let d = if n > 0.0 {
        2.0 * (m - n + n * (n / m).ln())
    } else {
        2.0 * m
    };
    d.max(0.0).sqrt() * if n < m { -1.0 } else { 1.0 }
}

/// Pearson χ² of a binned model, divided by the degrees of freedom.
fn pearson_chi2_reduced(counts: &[u64], expected: &[f64], n_params: usize) -> f64 {
    let chi2: f64 = counts
        .iter()
        .zip(expected)
        .map(|(&n, &m)| {
            let m = m.max(1e-9);
            let d = n as f64 - m;
            d * d / m
        })
        .sum();
    chi2 / (counts.len().saturating_sub(n_params).max(1)) as f64
}

/// Exact per-bin integral of the exponential decay in bin units:
/// N₀(e^{−k/τ} − e^{−(k+1)/τ}) for the bin starting at `k` bin widths.
fn dark_bin_expectation(n0: f64, tau_bins: f64, k: f64) -> f64 {
    n0 * ((-k / tau_bins).exp() - (-(k + 1.0) / tau_bins).exp())
}

/// Count-weighted mean bin coordinate (bin units, from the origin).
fn mean_bin_of(counts: &[u64], skip_bin: Option<usize>) -> (f64, f64) {
    let mut sum = 0.0;
    let mut n = 0.0;
    for (k, &c) in counts.iter().enumerate() {
        if Some(k) == skip_bin {
            continue;
        }
        sum += c as f64 * (k as f64 + 0.5);
        n += c as f64;
    }
    (if n > 0.0 { sum / n } else { 0.0 }, n)
}

/// Parameter covariance from the expected Poisson information at the fit:
/// I = Σ_k (∂m_k/∂θ)(∂m_k/∂θ)ᵀ / m_k with central-difference derivatives.
/// Sharper than the deviance-residual normal matrix when bins hold only a
/// handful of counts.
fn poisson_fisher_covariance(
    model: impl Fn(&[f64], usize) -> f64,
    params: &[f64],
    n_bins: usize,
) -> (Vec<Vec<f64>>, bool) {
    let n_par = params.len();
    let mut grads = vec![vec![0.0; n_par]; n_bins];
    let mut p = params.to_vec();
    for j in 0..n_par {
        let h = (1e-7 * params[j].abs()).max(1e-12);
        p[j] = params[j] + h;
        let plus: Vec<f64> = (0..n_bins).map(|k| model(&p, k)).collect();
        p[j] = params[j] - h;
        let minus: Vec<f64> = (0..n_bins).map(|k| model(&p, k)).collect();
        p[j] = params[j];
        for k in 0..n_bins {
            grads[k][j] = (plus[k] - minus[k]) / (2.0 * h);
        }
    }
    let mut info = vec![vec![0.0; n_par]; n_par];
    for (k, g) in grads.iter().enumerate() {
        let m = model(params, k).max(1e-12);
        for a in 0..n_par {
            for b in 0..n_par {
                info[a][b] += g[a] * g[b] / m;
            }
        }
    }
    lm::invert(&info)
}

/// Rescale a bin-unit (n0, tau, ...) fit back to seconds: values and
/// covariance rows/columns of the tau parameter pick up the bin width.
fn rescale_tau(fit: &mut lm::LmFit, tau_index: usize, bin_width: f64) {
    fit.params[tau_index] *= bin_width;
    let n = fit.params.len();
    for j in 0..n {
        fit.covariance[tau_index][j] *= bin_width;
        fit.covariance[j][tau_index] *= bin_width;
    }
}

/// Poisson maximum-likelihood fit of the exponential decay law to a
/// switching-time histogram; the escape rate is 1/τ.
///
/// Fitting runs in bin units, making the estimate exactly invariant under
/// a rescaling of the time axis.
pub fn fit_exponential(hist: &Histogram) -> Result<FitResult> {
    if hist.nonempty_bins() < 5 {
        return Err(Error::DegenerateHistogram(format!(
            "{} nonempty bins, need at least 5",
            hist.nonempty_bins()
        )));
    }
    let counts = &hist.counts;
    let (mean_bins, total) = mean_bin_of(counts, None);
    let span = counts.len() as f64;
    let tau0 = mean_bins.max(1.0);
    let n0_0 = total / (1.0 - (-span / tau0).exp()).max(1e-6);
    let residuals = |p: &[f64], out: &mut [f64]| {
        let (n0, tau) = (p[0], p[1]);
        for (k, &n) in counts.iter().enumerate() {
            let m = dark_bin_expectation(n0, tau, k as f64);
            out[k] = deviance_residual(n as f64, m);
        }
    };
    let opts = LmOptions {
        lower_bounds: Some(vec![1e-9, 1e-3]),
        upper_bounds: Some(vec![f64::MAX, 1e3 * span]),
        ..LmOptions::default()
    };
    let mut fit = minimize(residuals, counts.len(), &[n0_0, tau0], &opts)?;
    let expected: Vec<f64> = (0..counts.len())
        .map(|k| dark_bin_expectation(fit.params[0], fit.params[1], k as f64))
        .collect();
    let chi2 = pearson_chi2_reduced(counts, &expected, 2);
    let (cov, singular) = poisson_fisher_covariance(
        |p, k| dark_bin_expectation(p[0], p[1], k as f64),
        &fit.params,
        counts.len(),
    );
    fit.covariance = cov;
    fit.singular |= singular;
    let mut warnings = Vec::new();
    let sigma_tau = fit.covariance[1][1].max(0.0).sqrt();
    if sigma_tau > fit.params[1] {
        warnings.push(FitWarning::TauUnconstrained);
    }
    rescale_tau(&mut fit, 1, hist.bin_width);
    Ok(FitResult::from_lm(
        vec!["n0", "tau"],
        fit,
        chi2,
        counts.len(),
        warnings,
    ))
}

/// Expected counts of the RF-modified decay model with exact bin integrals,
/// in bin units. `n_rf` is the count of pulse-induced events; the post-pulse
/// dark flux is depleted by the same amount through ε = n_rf/(N₀ e^{−k_rf/τ}).
fn rf_bin_expectation(n0: f64, tau_bins: f64, n_rf: f64, k_rf: usize, k: usize) -> f64 {
    let dark = dark_bin_expectation(n0, tau_bins, k as f64);
    if k < k_rf {
        dark
    } else {
        let survivors = n0 * (-(k_rf as f64) / tau_bins).exp();
        let eps = (n_rf / survivors.max(1e-300)).clamp(0.0, 1.0);
        if k == k_rf {
            n_rf + (1.0 - eps) * dark
        } else {
            (1.0 - eps) * dark
        }
    }
}

/// Joint Poisson fit of the RF-modified histogram model: background decay,
/// the RF-bin population, and the matching depletion of the post-pulse tail.
/// Runs in bin units like `fit_exponential`.
pub fn fit_rf_histogram(hist: &Histogram, t_rf: f64) -> Result<FitResult> {
    let k_rf = hist.aligned_bin(t_rf)?;
    if hist.nonempty_bins() < 5 {
        return Err(Error::DegenerateHistogram(format!(
            "{} nonempty bins, need at least 5",
            hist.nonempty_bins()
        )));
    }
    let counts = &hist.counts;
    let span = counts.len() as f64;
    let (mean_bins, pre_total) = mean_bin_of(&counts[..k_rf.max(1)], None);
    let tau0 = mean_bins.max(1.0);
    let n0_0 = pre_total / (1.0 - (-(k_rf.max(1) as f64) / tau0).exp()).max(1e-6);

    // Stage 1: background decay from the pre-pulse bins alone. Bins at and
    // after the pulse are masked: the post-pulse depletion would otherwise
    // bias the starting τ toward the clamp edge of the joint model.
    let stage1 = |p: &[f64], out: &mut [f64]| {
        for (k, &n) in counts.iter().enumerate() {
            out[k] = if k >= k_rf {
                0.0
            } else {
                deviance_residual(n as f64, dark_bin_expectation(p[0], p[1], k as f64))
            };
        }
    };
    let opts2 = LmOptions {
        lower_bounds: Some(vec![1e-9, 1e-3]),
        upper_bounds: Some(vec![f64::MAX, 1e3 * span]),
        ..LmOptions::default()
    };
    // Sparse dark statistics can defeat the background stage; fall back to
    // the moment guesses and let the joint fit sort it out.
    let (bg_n0, bg_tau) = match minimize(stage1, counts.len(), &[n0_0, tau0], &opts2) {
        Ok(bg) => (bg.params[0], bg.params[1]),
        Err(_) => (n0_0.max(1.0), tau0),
    };
    let n_rf0 = (counts[k_rf] as f64 - dark_bin_expectation(bg_n0, bg_tau, k_rf as f64)).max(1.0);

    // Stage 2: joint three-parameter fit.
    let residuals = |p: &[f64], out: &mut [f64]| {
        for (k, &n) in counts.iter().enumerate() {
            let m = rf_bin_expectation(p[0], p[1], p[2], k_rf, k);
            out[k] = deviance_residual(n as f64, m);
        }
    };
    let opts3 = LmOptions {
        lower_bounds: Some(vec![1e-9, 1e-3, 0.0]),
        upper_bounds: Some(vec![f64::MAX, 1e3 * span, f64::MAX]),
        ..LmOptions::default()
    };
    let mut fit = minimize(residuals, counts.len(), &[bg_n0, bg_tau, n_rf0], &opts3)?;
    let expected: Vec<f64> = (0..counts.len())
        .map(|k| rf_bin_expectation(fit.params[0], fit.params[1], fit.params[2], k_rf, k))
        .collect();
    let chi2 = pearson_chi2_reduced(counts, &expected, 3);
    let (cov, singular) = poisson_fisher_covariance(
        |p, k| rf_bin_expectation(p[0], p[1], p[2], k_rf, k),
        &fit.params,
        counts.len(),
    );
    fit.covariance = cov;
    fit.singular |= singular;
    let mut warnings = Vec::new();
    let dark_counts = hist.total() - counts[k_rf];
    let sigma_tau = fit.covariance[1][1].max(0.0).sqrt();
    if dark_counts < 10 || sigma_tau > fit.params[1] {
        warnings.push(FitWarning::TauUnconstrained);
    }
    rescale_tau(&mut fit, 1, hist.bin_width);
    Ok(FitResult::from_lm(
        vec!["n0", "tau", "n_rf"],
        fit,
        chi2,
        counts.len(),
        warnings,
    ))
}

/// An efficiency estimate with its 1σ uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EfficiencyEstimate {
    pub value: f64,
    pub sigma: f64,
    /// The raw estimate exceeded 1 by less than 3σ and was clamped.
    pub clamped: bool,
}

/// Switching efficiency from an RF histogram fit:
/// ε = N_RF / (N₀ e^{−t_rf/τ}), with covariance-propagated uncertainty.
/// Estimates in (1, 1+3σ] clamp to 1; beyond that the fit is rejected.
pub fn efficiency_from_fit(fit: &FitResult, t_rf: f64) -> Result<EfficiencyEstimate> {
    if !fit.converged {
        return Err(Error::InvalidFit("fit did not converge".into()));
    }
    let (n0, tau, n_rf) = match (fit.get("n0"), fit.get("tau"), fit.get("n_rf")) {
        (Some(n0), Some(tau), Some(n_rf)) if tau > 0.0 && n0 > 0.0 => (n0, tau, n_rf),
        _ => {
            return Err(Error::InvalidFit(
                "fit must carry positive n0, tau and an n_rf parameter".into(),
            ))
        }
    };
    let survivors = n0 * (-t_rf / tau).exp();
    let eps = n_rf / survivors;
    // Gradient in the (n0, tau, n_rf) parameter order.
    let grad = [
        -eps / n0,
        -eps * t_rf / (tau * tau),
        1.0 / survivors,
    ];
    let mut var = 0.0;
    for a in 0..3 {
        for b in 0..3 {
            var += grad[a] * fit.covariance[a][b] * grad[b];
        }
    }
    let sigma = var.max(0.0).sqrt();
    if eps > 1.0 {
        if eps <= 1.0 + 3.0 * sigma {
            return Ok(EfficiencyEstimate {
                value: 1.0,
                sigma,
                clamped: true,
            });
        }
        return Err(Error::InvalidFit(format!(
            "efficiency {eps:.3} exceeds 1 by more than 3 sigma ({sigma:.3})"
        )));
    }
    Ok(EfficiencyEstimate {
        value: eps,
        sigma,
        clamped: false,
    })
}

/// Ratio estimator for the low-dark-counts regime: switching events over
/// pulse attempts, with a Wilson-score 1σ interval.
pub fn efficiency_low_dark(ds: &SwitchingDataset) -> Result<EfficiencyEstimate> {
    if ds.records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut successes = 0u64;
    let mut attempts = 0u64;
    for r in &ds.records {
        if r.censored {
            attempts += ds.meta.timeout_cycles as u64;
        } else {
            let in_cycle = r.lifetime - r.cycle_index as f64 * ds.meta.waveform.cycle_period();
            // A switch before the pulse means that cycle's pulse never fired.
            attempts += r.cycle_index as u64 + u64::from(in_cycle >= ds.meta.rf_delay);
            if r.switched_in_rf_window {
                successes += 1;
            }
        }
    }
    if attempts == 0 {
        return Err(Error::EmptyDataset);
    }
    let n = attempts as f64;
    let p = successes as f64 / n;
    let z = 1.0;
    let denom = 1.0 + z * z / n;
    let center = (p + z * z / (2.0 * n)) / denom;
    let half = (z / denom) * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt();
    let sigma = if successes == 0 || successes == attempts {
        // Degenerate corner: quote the one-sided Wilson bound distance.
        (center - p).abs() + half
    } else {
        half
    };
    Ok(EfficiencyEstimate {
        value: p,
        sigma,
        clamped: false,
    })
}

/// Weighted least-squares fit of the thermal-activation rate model to a
/// measured rate curve in log space, with the effective temperature and the
/// critical current free and (C, R) held at their prior values.
pub fn fit_kramers(curve: &RateCurve, params_prior: &JunctionParams) -> Result<FitResult> {
    let pts = &curve.points;
    if pts.len() < 6 {
        return Err(Error::InsufficientSpan(format!(
            "{} rate points, need at least 6",
            pts.len()
        )));
    }
    if curve.dynamic_range() < 100.0 {
        return Err(Error::InsufficientSpan(
            "rate curve must span at least two decades".into(),
        ));
    }
    let max_bias = pts.last().unwrap().bias_current;
    let ln_rates: Vec<f64> = pts.iter().map(|p| p.rate.ln()).collect();
    let sigmas_ln: Vec<f64> = pts
        .iter()
        .map(|p| (p.rate_uncertainty / p.rate).max(1e-12))
        .collect();

    // Two-point slope/intercept bootstrap for the starting temperature.
    let first = pts.first().unwrap();
    let last = pts.last().unwrap();
    let slope = (last.rate.ln() - first.rate.ln()) / (last.bias_current - first.bias_current);
    let i_mid = 0.5 * (first.bias_current + last.bias_current) / params_prior.critical_current;
    let d_barrier = -params_prior.potential_scale() * washboard::barrier_slope(i_mid.min(0.999))
        / params_prior.critical_current;
    let t0 = (d_barrier / (BOLTZMANN * slope)).clamp(1e-3, 10.0);

    let c = params_prior.capacitance;
    let r = params_prior.shunt_resistance;
    let residuals = |p: &[f64], out: &mut [f64]| {
        let (temp, ic) = (p[0], p[1]);
        let usable = temp > 0.0 && ic > max_bias * 1.000_000_1;
        let model = usable
            .then(|| JunctionParams::new(ic, c, r).ok())
            .flatten()
            .zip(ThermalEnvironment::new(temp.max(1e-9)).ok());
        for (k, pt) in pts.iter().enumerate() {
            out[k] = match &model {
                Some((params, env)) => match kramers_rate(params, env, pt.bias_current) {
                    Ok(rate) if rate > 0.0 => (rate.ln() - ln_rates[k]) / sigmas_ln[k],
                    _ => 1e6,
                },
                None => 1e6,
            };
        }
    };
    let fit = minimize(
        residuals,
        pts.len(),
        &[t0, params_prior.critical_current],
        &LmOptions::default(),
    )?;
    let chi2 = fit.cost / (pts.len() - 2) as f64;
    Ok(FitResult::from_lm(
        vec!["t_kelvin", "ic_amps"],
        fit,
        chi2,
        pts.len(),
        Vec::new(),
    ))
}

/// One efficiency measurement at a pulse width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PulseWidthPoint {
    pub width: f64,
    pub efficiency: f64,
    pub sigma: f64,
}

/// One-parameter weighted fit of the independent-trials pulse model
/// ε(ΔT) = 1 − (1 − ε_j)^{ΔT/τ_j} for the per-trial probability ε_j.
pub fn fit_pulse_width(points: &[PulseWidthPoint], relaxation_time: f64) -> Result<FitResult> {
    if points.len() < 2 {
        return Err(Error::InsufficientSpan(format!(
            "{} pulse-width points, need at least 2",
            points.len()
        )));
    }
    let mut warnings = Vec::new();
    let w_min = points.iter().map(|p| p.width).fold(f64::INFINITY, f64::min);
    let w_max = points.iter().map(|p| p.width).fold(0.0, f64::max);
    if points.len() < 4 || w_max / w_min < 10.0 {
        warnings.push(FitWarning::SparseData);
    }
    if points.iter().all(|p| p.efficiency > 0.95) {
        warnings.push(FitWarning::IllConditioned);
    }

    // Invert the first point exactly for the starting value.
    let p1 = points[0];
    let eps0 = (-((1.0 - p1.efficiency.clamp(1e-9, 1.0 - 1e-9)).ln()
        * (relaxation_time / p1.width))
        .exp_m1())
    .clamp(1e-10, 0.9);

    let residuals = |p: &[f64], out: &mut [f64]| {
        let eps_j = p[0].clamp(0.0, 1.0);
        for (k, pt) in points.iter().enumerate() {
            let model = poisson_switch_probability(eps_j, pt.width, relaxation_time)
                .unwrap_or(f64::NAN);
            out[k] = (model - pt.efficiency) / pt.sigma.max(1e-12);
        }
    };
    let opts = LmOptions {
        lower_bounds: Some(vec![0.0]),
        ..LmOptions::default()
    };
    let fit = minimize(residuals, points.len(), &[eps0], &opts)?;
    let chi2 = fit.cost / points.len().saturating_sub(1).max(1) as f64;
    Ok(FitResult::from_lm(
        vec!["eps_j"],
        fit,
        chi2,
        points.len(),
        warnings,
    ))
}
