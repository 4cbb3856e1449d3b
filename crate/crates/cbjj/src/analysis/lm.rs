//! Small dense Levenberg–Marquardt minimizer for sum-of-squares residuals.
//!
//! Jacobians come from central finite differences. Parameter covariance is
//! (JᵀJ)⁻¹ at the optimum, which for σ-scaled residuals (or Poisson deviance
//! residuals) is the usual Fisher estimate. All arithmetic is plain f64 with
//! a fixed evaluation order, so identical inputs give bit-identical fits.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct LmOptions {
    /// Relative/absolute convergence tolerance on the parameter step.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Optional per-parameter lower bounds (projected after each step).
    pub lower_bounds: Option<Vec<f64>>,
    /// Optional per-parameter upper bounds (projected after each step).
    pub upper_bounds: Option<Vec<f64>>,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 500,
            lower_bounds: None,
            upper_bounds: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmFit {
    pub params: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    /// Final sum of squared residuals.
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
    /// The normal matrix needed regularization; uncertainties are suspect.
    pub singular: bool,
}

fn apply_bounds(p: &mut [f64], opts: &LmOptions) {
    if let Some(lb) = &opts.lower_bounds {
        for (v, &b) in p.iter_mut().zip(lb) {
            if *v < b {
                *v = b;
            }
        }
    }
    if let Some(ub) = &opts.upper_bounds {
        for (v, &b) in p.iter_mut().zip(ub) {
            if *v > b {
                *v = b;
            }
        }
    }
}

fn cost_of(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum()
}

/// Solve A·x = b by Gaussian elimination with partial pivoting.
/// Returns the solution and whether a pivot needed regularization.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> (Vec<f64>, bool) {
    let n = b.len();
    let mut singular = false;
    let scale: f64 = a
        .iter()
        .flat_map(|row| row.iter().map(|x| x.abs()))
        .fold(0.0, f64::max)
        .max(1e-300);
    for col in 0..n {
        let (pivot_row, pivot) = (col..n)
            .map(|r| (r, a[r][col].abs()))
            .fold((col, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if pivot < 1e-14 * scale {
            a[pivot_row][col] += 1e-12 * scale;
            singular = true;
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for row in (col + 1)..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut s = b[col];
        for k in (col + 1)..n {
            s -= a[col][k] * x[k];
        }
        x[col] = s / a[col][col];
    }
    (x, singular)
}

/// Invert a symmetric matrix by solving against unit vectors.
pub(crate) fn invert(a: &[Vec<f64>]) -> (Vec<Vec<f64>>, bool) {
    let n = a.len();
    let mut out = vec![vec![0.0; n]; n];
    let mut singular = false;
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let (col, s) = solve(a.to_vec(), e);
        singular |= s;
        for i in 0..n {
            out[i][j] = col[i];
        }
    }
    // Symmetrize against round-off.
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (out[i][j] + out[j][i]);
            out[i][j] = v;
            out[j][i] = v;
        }
    }
    (out, singular)
}

fn jacobian<F>(f: &F, p: &[f64], n_res: usize) -> Vec<Vec<f64>>
where
    F: Fn(&[f64], &mut [f64]),
{
    let n_par = p.len();
    let mut jac = vec![vec![0.0; n_par]; n_res];
    let mut plus = vec![0.0; n_res];
    let mut minus = vec![0.0; n_res];
    let mut pw = p.to_vec();
    for j in 0..n_par {
        let h = (1e-7 * p[j].abs()).max(1e-12);
        pw[j] = p[j] + h;
        f(&pw, &mut plus);
        pw[j] = p[j] - h;
        f(&pw, &mut minus);
        pw[j] = p[j];
        for i in 0..n_res {
            jac[i][j] = (plus[i] - minus[i]) / (2.0 * h);
        }
    }
    jac
}

/// Minimize ||residuals(p)||² starting from `initial`.
pub fn minimize<F>(
    residuals: F,
    n_residuals: usize,
    initial: &[f64],
    opts: &LmOptions,
) -> Result<LmFit>
where
    F: Fn(&[f64], &mut [f64]),
{
    let n_par = initial.len();
    if n_residuals < n_par {
        return Err(Error::InsufficientSpan(format!(
            "{n_residuals} residuals for {n_par} parameters"
        )));
    }
    let mut p = initial.to_vec();
    apply_bounds(&mut p, opts);
    let mut r = vec![0.0; n_residuals];
    residuals(&p, &mut r);
    let mut cost = cost_of(&r);
    if !cost.is_finite() {
        return Err(Error::NonConvergence { iterations: 0 });
    }

    let mut lambda = 1e-3;
    let mut singular_seen = false;
    let mut converged = false;
    let mut iterations = 0;
    let mut stagnant = 0usize;
    let mut jtj_latest: Vec<Vec<f64>> = vec![vec![0.0; n_par]; n_par];

    while iterations < opts.max_iterations {
        iterations += 1;
        let jac = jacobian(&residuals, &p, n_residuals);
        let mut jtj = vec![vec![0.0; n_par]; n_par];
        let mut jtr = vec![0.0; n_par];
        for i in 0..n_residuals {
            for a in 0..n_par {
                jtr[a] += jac[i][a] * r[i];
                for b in a..n_par {
                    jtj[a][b] += jac[i][a] * jac[i][b];
                }
            }
        }
        for a in 0..n_par {
            for b in 0..a {
                jtj[a][b] = jtj[b][a];
            }
        }
        jtj_latest = jtj.clone();

        let mut improved = false;
        for _ in 0..30 {
            let mut damped = jtj.clone();
            for a in 0..n_par {
                damped[a][a] += lambda * jtj[a][a].max(1e-30);
            }
            let (step, sing) = solve(damped, jtr.clone());
            singular_seen |= sing;
            let mut candidate: Vec<f64> = p.iter().zip(&step).map(|(v, s)| v - s).collect();
            apply_bounds(&mut candidate, opts);
            let mut r_new = vec![0.0; n_residuals];
            residuals(&candidate, &mut r_new);
            let cost_new = cost_of(&r_new);
            if cost_new.is_finite() && cost_new <= cost {
                // Converge on the step, not on cost stagnation: near the
                // optimum the cost is flat to second order and stopping
                // there leaves parameters orders of magnitude less precise
                // than the tolerance.
                let step_small = candidate
                    .iter()
                    .zip(&p)
                    .all(|(a, b)| (a - b).abs() <= opts.tolerance * (b.abs() + opts.tolerance));
                // Plateaus only count toward stagnation when near-pure
                // Gauss-Newton steps are the ones failing to improve;
                // heavily damped crawls elsewhere are not convergence.
                if cost - cost_new <= 1e-12 * (cost + 1.0) && lambda <= 1e-6 {
                    stagnant += 1;
                } else if cost - cost_new > 1e-12 * (cost + 1.0) {
                    stagnant = 0;
                }
                p = candidate;
                r = r_new;
                cost = cost_new;
                lambda = (lambda * 0.3).max(1e-14);
                improved = true;
                // A flat valley (an unconstrained parameter) never yields a
                // small step; eight consecutive cost-stagnant accepted steps
                // end the search there as well.
                if step_small || stagnant >= 8 {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
            if lambda > 1e14 {
                break;
            }
        }
        if converged {
            break;
        }
        if !improved {
            // No descent direction left at machine damping: treat the
            // current point as converged if the gradient is tiny.
            let grad_norm: f64 = jtr.iter().map(|g| g * g).sum::<f64>().sqrt();
            converged = grad_norm <= opts.tolerance.sqrt() * (1.0 + cost);
            break;
        }
    }

    if !converged {
        return Err(Error::NonConvergence { iterations });
    }
    // Covariance from the undamped normal matrix at the optimum.
    let jac = jacobian(&residuals, &p, n_residuals);
    let mut jtj = vec![vec![0.0; n_par]; n_par];
    for i in 0..n_residuals {
        for a in 0..n_par {
            for b in a..n_par {
                jtj[a][b] += jac[i][a] * jac[i][b];
            }
        }
    }
    for a in 0..n_par {
        for b in 0..a {
            jtj[a][b] = jtj[b][a];
        }
    }
    let _ = &jtj_latest;
    let (covariance, sing) = invert(&jtj);
    Ok(LmFit {
        params: p,
        covariance,
        cost,
        iterations,
        converged,
        singular: singular_seen | sing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn recovers_linear_least_squares_exactly() {
        // y = 2x + 1 with unit weights.
        let xs: Vec<f64> = (0..10).map(|k| k as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        let res = |p: &[f64], out: &mut [f64]| {
            for (i, (&x, &y)) in xs.iter().zip(&ys).enumerate() {
                out[i] = p[0] * x + p[1] - y;
            }
        };
        let fit = minimize(res, xs.len(), &[0.5, 0.0], &LmOptions::default()).unwrap();
        assert_relative_eq!(fit.params[0], 2.0, max_relative = 1e-8);
        assert_relative_eq!(fit.params[1], 1.0, max_relative = 1e-8);
        assert!(fit.cost < 1e-16);
    }

    #[test]
    fn nonlinear_exponential_recovery() {
        let xs: Vec<f64> = (0..40).map(|k| 0.1 * k as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 5.0 * (-x / 1.7).exp()).collect();
        let res = |p: &[f64], out: &mut [f64]| {
            for (i, (&x, &y)) in xs.iter().zip(&ys).enumerate() {
                out[i] = p[0] * (-x / p[1]).exp() - y;
            }
        };
        let fit = minimize(res, xs.len(), &[1.0, 1.0], &LmOptions::default()).unwrap();
        assert_relative_eq!(fit.params[0], 5.0, max_relative = 1e-7);
        assert_relative_eq!(fit.params[1], 1.7, max_relative = 1e-7);
    }

    #[test]
    fn covariance_matches_weighted_linear_theory() {
        // Single-parameter weighted mean: cov = 1/Σ(1/σ²).
        let ys = [1.1, 0.9, 1.05];
        let sigmas = [0.1, 0.2, 0.05];
        let res = |p: &[f64], out: &mut [f64]| {
            for i in 0..3 {
                out[i] = (p[0] - ys[i]) / sigmas[i];
            }
        };
        let fit = minimize(res, 3, &[0.0], &LmOptions::default()).unwrap();
        let w: f64 = sigmas.iter().map(|s| 1.0 / (s * s)).sum();
        assert_relative_eq!(fit.covariance[0][0], 1.0 / w, max_relative = 1e-6);
    }

    #[test]
    fn lower_bounds_respected() {
        let res = |p: &[f64], out: &mut [f64]| {
            out[0] = p[0] + 2.0; // unconstrained optimum at -2
        };
        let opts = LmOptions {
            lower_bounds: Some(vec![0.0]),
            ..LmOptions::default()
        };
        let fit = minimize(res, 1, &[1.0], &opts).unwrap();
        assert!(fit.params[0] >= 0.0);
        assert!(fit.params[0] < 1e-8);
    }

    #[test]
    fn deterministic_across_runs() {
        let xs: Vec<f64> = (0..25).map(|k| 0.2 * k as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * (-x / 0.9).exp() + 0.01).collect();
        let run = || {
            let res = |p: &[f64], out: &mut [f64]| {
                for (i, (&x, &y)) in xs.iter().zip(&ys).enumerate() {
                    out[i] = p[0] * (-x / p[1]).exp() - y;
                }
            };
            minimize(res, xs.len(), &[1.0, 1.0], &LmOptions::default()).unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.params[0].to_bits(), b.params[0].to_bits());
        assert_eq!(a.params[1].to_bits(), b.params[1].to_bits());
    }
}
