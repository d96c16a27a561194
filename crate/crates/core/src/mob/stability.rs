//! Score-based parameter stability tests for a node logit.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::gamma::ln_gamma;

use crate::data::ColumnKind;
use crate::error::{LoretError, Result};
use crate::glm::{LogitModel, Separation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TestKind {
    SupLmOrdered,
    LmCategorical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityTestResult {
    pub variable: String,
    pub statistic: f64,
    pub p_value: f64,
    /// Number of parameters tested (supLM) or chi-square degrees of freedom (LM).
    pub df: usize,
    pub kind: TestKind,
}

impl StabilityTestResult {
    pub fn adjusted(&self, tests: usize) -> f64 {
        (self.p_value * tests as f64).min(1.0)
    }
}

/// Pseudo-inverse of the outer-product-of-gradients matrix of the active columns.
fn opg_inverse(scores: &[f64], n: usize, k: usize, active: &[usize]) -> DMatrix<f64> {
    let a = active.len();
    let mut j = DMatrix::<f64>::zeros(a, a);
    for i in 0..n {
        let row = &scores[i * k..(i + 1) * k];
        for (p, &cp) in active.iter().enumerate() {
            let sp = row[cp];
            for (q, &cq) in active.iter().enumerate().skip(p) {
                j[(p, q)] += sp * row[cq];
            }
        }
    }
    for p in 0..a {
        for q in 0..p {
            j[(p, q)] = j[(q, p)];
        }
    }
    j /= n as f64;
    let eig = j.symmetric_eigen();
    let max = eig.eigenvalues.iter().fold(0.0f64, |m, &v| m.max(v));
    let mut inv = DMatrix::<f64>::zeros(a, a);
    for (e, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam > max * 1e-12 && lam > 0.0 {
            let v = eig.eigenvectors.column(e);
            inv += (v * v.transpose()) / lam;
        }
    }
    inv
}

fn quad(inv: &DMatrix<f64>, s: &[f64]) -> f64 {
    let v = DVector::from_column_slice(s);
    (v.transpose() * inv * &v)[(0, 0)]
}

/// Asymptotic p-value of the supLM statistic for `k` parameters over the
/// trimmed interval `[trim, 1 - trim]`.
///
/// Uses the closed-form tail approximation for the supremum of a squared
/// tied-down Bessel process,
/// `c^{k/2} e^{-c/2} / (2^{k/2} Γ(k/2)) * ((1 - k/c) ln λ + 4/c)` with
/// `λ = ((1 - trim) / trim)^2`. Below the approximation's mode the value is
/// held at its peak, and it is never allowed under the chi-square(k) tail of
/// a single fixed break, so the result is monotone in `c` and conservative.
pub fn suplm_p_value(stat: f64, k: usize, trim: f64) -> f64 {
    if stat.is_nan() || stat <= 0.0 || k == 0 {
        return 1.0;
    }
    let kf = k as f64;
    let ln_lambda = 2.0 * ((1.0 - trim) / trim).ln();
    let approx = |c: f64| -> f64 {
        let bracket = (1.0 - kf / c) * ln_lambda + 4.0 / c;
        if bracket <= 0.0 {
            return 0.0;
        }
        let ln_f = 0.5 * kf * c.ln() - 0.5 * c - 0.5 * kf * std::f64::consts::LN_2 - ln_gamma(0.5 * kf)
            + bracket.ln();
        ln_f.exp()
    };
    // The approximation is unimodal in c; locate its mode on a fine grid.
    let hi = 4.0 * kf + 60.0;
    let steps = 4000;
    let (mut mode, mut peak) = (0.0, 0.0);
    for s in 1..=steps {
        let c = hi * s as f64 / steps as f64;
        let v = approx(c);
        if v > peak {
            peak = v;
            mode = c;
        }
    }
    let p = if stat < mode { peak } else { approx(stat) };
    let chi = ChiSquared::new(kf).map(|d| d.sf(stat)).unwrap_or(1.0);
    p.max(chi).min(1.0)
}

fn chi2_sf(stat: f64, df: usize) -> f64 {
    if stat.is_nan() || stat <= 0.0 || df == 0 {
        return 1.0;
    }
    ChiSquared::new(df as f64).map(|d| d.sf(stat)).unwrap_or(1.0)
}

/// Tests the node model's parameters for instability along `z`.
///
/// `scores` holds the per-row score contributions (row-major, one row per
/// entry of `z`, `model.n_coefficients()` columns). Ordered and numeric
/// variables use the supLM statistic over breaks between distinct values
/// with `t` in `[trim, 1 - trim]`; categorical and binary variables use the
/// LM statistic on per-level score sums.
pub fn stability_test(
    model: &LogitModel,
    scores: &[f64],
    z: &[f64],
    kind: &ColumnKind,
    variable: &str,
    trim: f64,
) -> Result<StabilityTestResult> {
    if model.separation != Separation::None || !model.converged {
        return Err(LoretError::Numerical(
            "stability tests need a converged, non-separated node model".into(),
        ));
    }
    if !(trim > 0.0 && trim < 0.5) {
        return Err(LoretError::InvalidArgument(format!("trim {trim} outside (0, 0.5)")));
    }
    let k = model.n_coefficients();
    let n = z.len();
    if scores.len() != n * k {
        return Err(LoretError::Dimension("score matrix does not match z".into()));
    }
    let active: Vec<usize> = (0..k).filter(|j| !model.aliased.contains(j)).collect();
    let a = active.len();
    let ordered = matches!(kind, ColumnKind::Numeric | ColumnKind::Ordinal(_));
    let test_kind = if ordered {
        TestKind::SupLmOrdered
    } else {
        TestKind::LmCategorical
    };
    let degenerate = |df| StabilityTestResult {
        variable: variable.to_string(),
        statistic: 0.0,
        p_value: 1.0,
        df,
        kind: test_kind,
    };
    if n < 2 || z.iter().all(|&v| v == z[0]) {
        return Ok(degenerate(a));
    }
    let inv = opg_inverse(scores, n, k, &active);
    let pick = |i: usize, acc: &mut [f64]| {
        for (p, &c) in active.iter().enumerate() {
            acc[p] += scores[i * k + c];
        }
    };

    if ordered {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&x, &y| z[x].total_cmp(&z[y]));
        let nf = n as f64;
        let lo = (trim * nf).ceil() as usize;
        let hi = ((1.0 - trim) * nf).floor() as usize;
        let mut cum = vec![0.0; a];
        let mut best = 0.0f64;
        for (pos, &i) in order.iter().enumerate().take(n - 1) {
            pick(i, &mut cum);
            let m = pos + 1;
            if m < lo || m > hi || z[i] == z[order[pos + 1]] {
                continue;
            }
            let t = m as f64 / nf;
            best = best.max(quad(&inv, &cum) / (nf * t * (1.0 - t)));
        }
        if best <= 0.0 {
            return Ok(degenerate(a));
        }
        return Ok(StabilityTestResult {
            variable: variable.to_string(),
            statistic: best,
            p_value: suplm_p_value(best, a, trim),
            df: a,
            kind: test_kind,
        });
    }

    let levels = kind.levels().map_or(2, <[String]>::len);
    let mut sums = vec![vec![0.0; a]; levels];
    let mut counts = vec![0usize; levels];
    for (i, &zi) in z.iter().enumerate().take(n) {
        let c = zi as usize;
        counts[c] += 1;
        pick(i, &mut sums[c]);
    }
    let present: Vec<usize> = (0..levels).filter(|&c| counts[c] > 0).collect();
    let df = (present.len() - 1) * a;
    let stat: f64 = present.iter().map(|&c| quad(&inv, &sums[c]) / counts[c] as f64).sum();
    Ok(StabilityTestResult {
        variable: variable.to_string(),
        statistic: stat,
        p_value: chi2_sf(stat, df),
        df,
        kind: test_kind,
    })
}
