//! Maximum-likelihood logistic regression by IRLS with step-halving.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::design::DesignMatrix;
use crate::error::{LoretError, Result};

/// Intercept used when the response is constant within the fitted rows.
pub const CONSTANT_RESPONSE_INTERCEPT: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Separation {
    None,
    QuasiComplete,
    Complete,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogitOptions {
    pub max_iter: usize,
    /// Convergence threshold on the max-norm of the score vector.
    pub tol: f64,
    /// Divergence bound on coefficients (in units of each column's max |x|).
    pub coef_bound: f64,
    /// Fitted probabilities this close to the label count as perfectly fitted.
    pub perfect_fit_eps: f64,
}

impl Default for LogitOptions {
    fn default() -> Self {
        LogitOptions {
            max_iter: 100,
            tol: 1e-10,
            coef_bound: 15.0,
            perfect_fit_eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogitFit {
    /// One entry per design column; aliased columns hold 0.
    pub coefficients: Vec<f64>,
    /// NaN for aliased columns and for separated fits.
    pub std_errors: Vec<f64>,
    pub aliased: Vec<usize>,
    pub log_likelihood: f64,
    pub n_obs: usize,
    pub converged: bool,
    pub separation: Separation,
    pub iterations: usize,
}

#[inline]
pub fn logistic(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// log(1 + exp(eta)) without overflow.
#[inline]
fn softplus(eta: f64) -> f64 {
    if eta > 0.0 {
        eta + (-eta).exp().ln_1p()
    } else {
        eta.exp().ln_1p()
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Bernoulli log-likelihood of `beta` on the given rows.
pub fn log_likelihood(x: &DesignMatrix, rows: &[usize], y: &[f64], beta: &[f64]) -> Result<f64> {
    check_dims(x, y, beta)?;
    Ok(rows
        .iter()
        .map(|&r| {
            let eta = dot(x.row(r), beta);
            y[r] * eta - softplus(eta)
        })
        .sum())
}

/// Gradient of the log-likelihood: X'(y - pi).
pub fn score(x: &DesignMatrix, rows: &[usize], y: &[f64], beta: &[f64]) -> Result<Vec<f64>> {
    check_dims(x, y, beta)?;
    let mut g = vec![0.0; x.n_cols()];
    for &r in rows {
        let xr = x.row(r);
        let resid = y[r] - logistic(dot(xr, beta));
        for (gj, xj) in g.iter_mut().zip(xr) {
            *gj += resid * xj;
        }
    }
    Ok(g)
}

/// Per-row score contributions (y_i - pi_i) x_i, row-major over `rows`.
pub fn score_contributions(x: &DesignMatrix, rows: &[usize], y: &[f64], beta: &[f64]) -> Vec<f64> {
    let k = x.n_cols();
    let mut out = Vec::with_capacity(rows.len() * k);
    for &r in rows {
        let xr = x.row(r);
        let resid = y[r] - logistic(dot(xr, beta));
        out.extend(xr.iter().map(|v| resid * v));
    }
    out
}

fn check_dims(x: &DesignMatrix, y: &[f64], beta: &[f64]) -> Result<()> {
    if beta.len() != x.n_cols() {
        return Err(LoretError::Dimension(format!(
            "{} coefficients for {} design columns",
            beta.len(),
            x.n_cols()
        )));
    }
    if y.len() != x.n_rows() {
        return Err(LoretError::Dimension(format!(
            "{} labels for {} design rows",
            y.len(),
            x.n_rows()
        )));
    }
    Ok(())
}

/// Greedy column selection in order: a column is aliased when it lies (to
/// relative tolerance) in the span of the earlier kept columns.
#[allow(clippy::needless_range_loop)]
fn find_aliased(x: &DesignMatrix, rows: &[usize]) -> Vec<bool> {
    let k = x.n_cols();
    let mut gram = vec![0.0; k * k];
    for &r in rows {
        let xr = x.row(r);
        for i in 0..k {
            if xr[i] == 0.0 {
                continue;
            }
            for j in i..k {
                gram[i * k + j] += xr[i] * xr[j];
            }
        }
    }
    let g = |i: usize, j: usize| if i <= j { gram[i * k + j] } else { gram[j * k + i] };
    // Rows of the Cholesky factor for kept columns, indexed like `kept`.
    let mut kept: Vec<usize> = Vec::new();
    let mut lrows: Vec<Vec<f64>> = Vec::new();
    let mut aliased = vec![false; k];
    for j in 0..k {
        let gjj = g(j, j);
        if gjj <= 0.0 {
            aliased[j] = true;
            continue;
        }
        let mut w = Vec::with_capacity(kept.len());
        for (a, &ka) in kept.iter().enumerate() {
            let s: f64 = g(ka, j) - (0..a).map(|b| lrows[a][b] * w[b]).sum::<f64>();
            w.push(s / lrows[a][a]);
        }
        let d = gjj - w.iter().map(|v| v * v).sum::<f64>();
        if d <= 1e-10 * gjj {
            aliased[j] = true;
            continue;
        }
        w.push(d.sqrt());
        kept.push(j);
        lrows.push(w);
    }
    aliased
}

struct Eval {
    ll: f64,
    grad: Vec<f64>,
    hess: DMatrix<f64>,
}

fn evaluate(x: &DesignMatrix, rows: &[usize], y: &[f64], active: &[usize], beta: &[f64]) -> Eval {
    let m = active.len();
    let mut ll = 0.0;
    let mut grad = vec![0.0; m];
    let mut hess = DMatrix::<f64>::zeros(m, m);
    let mut xa = vec![0.0; m];
    for &r in rows {
        let xr = x.row(r);
        for (a, &j) in active.iter().enumerate() {
            xa[a] = xr[j];
        }
        let eta = dot(&xa, beta);
        let pi = logistic(eta);
        ll += y[r] * eta - softplus(eta);
        let resid = y[r] - pi;
        let w = pi * (1.0 - pi);
        for a in 0..m {
            grad[a] += resid * xa[a];
            let wa = w * xa[a];
            if wa == 0.0 {
                continue;
            }
            for b in a..m {
                hess[(a, b)] += wa * xa[b];
            }
        }
    }
    for a in 0..m {
        for b in 0..a {
            hess[(a, b)] = hess[(b, a)];
        }
    }
    Eval { ll, grad, hess }
}

fn loglik_only(x: &DesignMatrix, rows: &[usize], y: &[f64], active: &[usize], beta: &[f64]) -> f64 {
    rows.iter()
        .map(|&r| {
            let xr = x.row(r);
            let eta: f64 = active.iter().zip(beta).map(|(&j, b)| xr[j] * b).sum();
            y[r] * eta - softplus(eta)
        })
        .sum()
}

/// Solves H d = g with Jacobi scaling; returns None if H is not positive definite.
fn solve_scaled(hess: &DMatrix<f64>, grad: &[f64]) -> Option<(Vec<f64>, DMatrix<f64>)> {
    let m = grad.len();
    let d: Vec<f64> = (0..m)
        .map(|i| {
            let h = hess[(i, i)];
            if h > 0.0 {
                1.0 / h.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    let hs = DMatrix::from_fn(m, m, |i, j| hess[(i, j)] * d[i] * d[j]);
    let chol = hs.cholesky()?;
    let gs = DVector::from_iterator(m, grad.iter().zip(&d).map(|(g, s)| g * s));
    let step = chol.solve(&gs);
    let inv_s = chol.inverse();
    let inv = DMatrix::from_fn(m, m, |i, j| inv_s[(i, j)] * d[i] * d[j]);
    Some(((0..m).map(|i| step[i] * d[i]).collect(), inv))
}

/// Fits a logistic regression on `rows` of `x`, with labels `y` indexed by
/// design row. The design must contain an intercept in column 0.
pub fn fit_logit(
    x: &DesignMatrix,
    rows: &[usize],
    y: &[f64],
    opts: &LogitOptions,
    start: Option<&[f64]>,
) -> Result<LogitFit> {
    let k = x.n_cols();
    if rows.is_empty() {
        return Err(LoretError::EmptyData);
    }
    if k == 0 {
        return Err(LoretError::Dimension("design has no columns".into()));
    }
    if y.len() != x.n_rows() {
        return Err(LoretError::Dimension(format!(
            "{} labels for {} design rows",
            y.len(),
            x.n_rows()
        )));
    }
    if let Some(s) = start {
        if s.len() != k {
            return Err(LoretError::Dimension("start vector length".into()));
        }
    }
    let n = rows.len();
    let aliased_mask = find_aliased(x, rows);
    let active: Vec<usize> = (0..k).filter(|&j| !aliased_mask[j]).collect();
    let aliased: Vec<usize> = (0..k).filter(|&j| aliased_mask[j]).collect();
    let ones: f64 = rows.iter().map(|&r| y[r]).sum();

    let expand = |beta: &[f64]| {
        let mut full = vec![0.0; k];
        for (a, &j) in active.iter().enumerate() {
            full[j] = beta[a];
        }
        full
    };

    if ones == 0.0 || ones == n as f64 {
        // Constant response: the likelihood supremum is at an infinite
        // intercept. Report a saturated surrogate with zero slopes.
        let mut full = vec![0.0; k];
        full[0] = if ones == 0.0 {
            -CONSTANT_RESPONSE_INTERCEPT
        } else {
            CONSTANT_RESPONSE_INTERCEPT
        };
        let ll = log_likelihood(x, rows, y, &full)?;
        return Ok(LogitFit {
            coefficients: full,
            std_errors: vec![f64::NAN; k],
            aliased,
            log_likelihood: ll,
            n_obs: n,
            converged: false,
            separation: Separation::Complete,
            iterations: 0,
        });
    }

    // Column scales for the divergence bound.
    let scale: Vec<f64> = active
        .iter()
        .map(|&j| {
            rows.iter()
                .map(|&r| x.row(r)[j].abs())
                .fold(0.0_f64, f64::max)
                .max(f64::MIN_POSITIVE)
        })
        .collect();

    let mut beta: Vec<f64> = match start {
        Some(s) => active.iter().map(|&j| s[j]).collect(),
        None => {
            let mut b = vec![0.0; active.len()];
            if active.first() == Some(&0) {
                let p = ones / n as f64;
                b[0] = (p / (1.0 - p)).ln();
            }
            b
        }
    };

    let mut ev = evaluate(x, rows, y, &active, &beta);
    let mut converged = false;
    let mut separation = Separation::None;
    let mut iterations = 0;
    let mut inverse: Option<DMatrix<f64>> = None;

    for it in 0..opts.max_iter {
        iterations = it;
        let gmax = ev.grad.iter().fold(0.0_f64, |m, g| m.max(g.abs()));
        if gmax < opts.tol {
            converged = true;
            break;
        }
        let Some((step, inv)) = solve_scaled(&ev.hess, &ev.grad) else {
            // Hessian lost definiteness: only happens when weights vanish,
            // i.e. the fit is running off to infinity.
            separation = classify_separation(x, rows, y, &active, &beta, opts.perfect_fit_eps);
            if separation == Separation::None {
                return Err(LoretError::Numerical("singular information matrix".into()));
            }
            break;
        };
        inverse = Some(inv);

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let cand: Vec<f64> = beta.iter().zip(&step).map(|(b, s)| b + t * s).collect();
            let ll = loglik_only(x, rows, y, &active, &cand);
            if ll >= ev.ll - 1e-12 * (1.0 + ev.ll.abs()) {
                accepted = Some(cand);
                break;
            }
            t *= 0.5;
        }
        let Some(cand) = accepted else {
            // No ascent direction at machine precision: numerically stationary.
            converged = true;
            break;
        };
        let stationary = step
            .iter()
            .zip(&beta)
            .all(|(s, b)| (t * s).abs() <= 1e-13 * (1.0 + b.abs()));
        beta = cand;
        ev = evaluate(x, rows, y, &active, &beta);
        iterations = it + 1;

        let diverged = beta
            .iter()
            .zip(&scale)
            .any(|(b, s)| (b * s).abs() > opts.coef_bound);
        if diverged {
            let sep = classify_separation(x, rows, y, &active, &beta, opts.perfect_fit_eps);
            if sep != Separation::None {
                separation = sep;
                break;
            }
        }
        if stationary {
            converged = true;
            break;
        }
    }

    let coefficients = expand(&beta);
    let std_errors = if separation == Separation::None {
        let inv = match solve_scaled(&ev.hess, &ev.grad) {
            Some((_, inv)) => Some(inv),
            None => inverse,
        };
        let mut se = vec![f64::NAN; k];
        if let Some(inv) = inv {
            for (a, &j) in active.iter().enumerate() {
                se[j] = inv[(a, a)].max(0.0).sqrt();
            }
        }
        se
    } else {
        vec![f64::NAN; k]
    };
    Ok(LogitFit {
        coefficients,
        std_errors,
        aliased,
        log_likelihood: ev.ll,
        n_obs: n,
        converged: converged && separation == Separation::None,
        separation,
        iterations,
    })
}

fn classify_separation(
    x: &DesignMatrix,
    rows: &[usize],
    y: &[f64],
    active: &[usize],
    beta: &[f64],
    eps: f64,
) -> Separation {
    let perfect = rows
        .iter()
        .filter(|&&r| {
            let xr = x.row(r);
            let eta: f64 = active.iter().zip(beta).map(|(&j, b)| xr[j] * b).sum();
            (y[r] - logistic(eta)).abs() < eps
        })
        .count();
    if perfect == rows.len() {
        Separation::Complete
    } else if perfect > 0 {
        Separation::QuasiComplete
    } else {
        Separation::None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn design(cols: &[&[f64]]) -> DesignMatrix {
        let n = cols[0].len();
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| std::iter::once(1.0).chain(cols.iter().map(|c| c[i])).collect())
            .collect();
        DesignMatrix::from_rows(&rows).unwrap()
    }

    fn all(n: usize) -> Vec<usize> {
        (0..n).collect()
    }

    #[test]
    fn intercept_only_matches_prevalence() {
        let y = [1., 1., 1., 1., 1., 1., 1., 0., 0., 0.];
        let x = DesignMatrix::from_rows(&vec![vec![1.0]; 10]).unwrap();
        let f = fit_logit(&x, &all(10), &y, &LogitOptions::default(), None).unwrap();
        assert!((f.coefficients[0] - (7.0f64 / 3.0).ln()).abs() < 1e-12);
        assert!((logistic(f.coefficients[0]) - 0.7).abs() < 1e-12);
        assert!(f.converged);
        assert_eq!(f.separation, Separation::None);
        assert!(f.std_errors[0] > 0.0);
    }

    #[test]
    fn saturated_binary_matches_cell_prevalence() {
        let xv = [0., 0., 0., 0., 1., 1., 1., 1., 1.];
        let y = [1., 0., 0., 0., 1., 1., 1., 0., 1.];
        let x = design(&[&xv]);
        let f = fit_logit(&x, &all(9), &y, &LogitOptions::default(), None).unwrap();
        assert!((logistic(f.coefficients[0]) - 0.25).abs() < 1e-10);
        assert!((logistic(f.coefficients[0] + f.coefficients[1]) - 0.8).abs() < 1e-10);
    }

    #[test]
    fn perfect_prediction_is_complete_separation() {
        let xv = [0., 0., 0., 1., 1., 1., 0., 1.];
        let x = design(&[&xv]);
        let f = fit_logit(&x, &all(8), &xv, &LogitOptions::default(), None).unwrap();
        assert_eq!(f.separation, Separation::Complete);
        assert!(!f.converged);
        for (i, &yi) in xv.iter().enumerate() {
            let p = logistic(dot(x.row(i), &f.coefficients));
            assert!((p - yi).abs() < 1e-6);
        }
    }

    #[test]
    fn quasi_complete_separation_is_flagged() {
        // x = 1 always has y = 1; x = 0 is mixed.
        let xv = [0., 0., 0., 0., 1., 1., 1.];
        let y = [0., 1., 0., 1., 1., 1., 1.];
        let f = fit_logit(&design(&[&xv]), &all(7), &y, &LogitOptions::default(), None).unwrap();
        assert_eq!(f.separation, Separation::QuasiComplete);
        assert!((logistic(f.coefficients[0]) - 0.5).abs() < 1e-6);
    }

    #[test]
    fn constant_response_uses_surrogate_intercept() {
        let xv = [0.3, 1.2, -0.4, 2.0];
        let f = fit_logit(&design(&[&xv]), &all(4), &[0.; 4], &LogitOptions::default(), None).unwrap();
        assert_eq!(f.coefficients, vec![-CONSTANT_RESPONSE_INTERCEPT, 0.0]);
        assert_eq!(f.separation, Separation::Complete);
        assert!(logistic(f.coefficients[0]) < 1e-12);
    }

    #[test]
    fn aliased_columns_are_dropped_in_order() {
        let a = [1., 2., 3., 4., 5., 6., 7., 8.];
        let b: Vec<f64> = a.iter().map(|v| 2.0 * v).collect();
        let c = [1., 0., 1., 1., 0., 0., 1., 0.];
        let y = [0., 0., 1., 0., 1., 1., 0., 1.];
        let x = design(&[&a, &b, &c]);
        let f = fit_logit(&x, &all(8), &y, &LogitOptions::default(), None).unwrap();
        assert_eq!(f.aliased, vec![2]);
        assert_eq!(f.coefficients[2], 0.0);
        assert!(f.std_errors[2].is_nan());
        assert!(f.converged);
    }

    #[test]
    fn zero_beta_log_likelihood() {
        let x = design(&[&[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0]]);
        let y = [0., 1., 0., 1., 0., 1., 0., 1., 0., 1.];
        let ll = log_likelihood(&x, &all(10), &y, &[0.0, 0.0]).unwrap();
        assert!((ll - 10.0 * 0.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let x = design(&[&[0.1, 0.2]]);
        assert!(log_likelihood(&x, &all(2), &[0.0, 1.0], &[0.0]).is_err());
        assert!(score(&x, &all(2), &[0.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn empty_rows_is_an_error() {
        let x = design(&[&[0.1]]);
        assert!(matches!(
            fit_logit(&x, &[], &[1.0], &LogitOptions::default(), None),
            Err(LoretError::EmptyData)
        ));
    }
}
