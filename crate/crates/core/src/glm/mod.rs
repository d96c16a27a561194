//! Logistic regression node model, prediction and cutoff classification.

mod design;
mod fit;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub use design::{DesignMatrix, DesignSpec, Term};
pub use fit::{
    fit_logit, log_likelihood, logistic, score, score_contributions, LogitFit, LogitOptions,
    Separation, CONSTANT_RESPONSE_INTERCEPT,
};

use crate::data::Dataset;
use crate::error::{LoretError, Result};

/// A fitted logistic regression together with its design encoding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogitModel {
    pub design: DesignSpec,
    pub coefficients: Vec<f64>,
    #[serde(with = "crate::serde_nan")]
    pub std_errors: Vec<f64>,
    pub aliased: Vec<usize>,
    pub log_likelihood: f64,
    pub n_obs: usize,
    pub converged: bool,
    pub separation: Separation,
}

impl LogitModel {
    pub fn from_fit(design: DesignSpec, fit: LogitFit) -> Self {
        LogitModel {
            design,
            coefficients: fit.coefficients,
            std_errors: fit.std_errors,
            aliased: fit.aliased,
            log_likelihood: fit.log_likelihood,
            n_obs: fit.n_obs,
            converged: fit.converged,
            separation: fit.separation,
        }
    }

    /// Fits `design` on `rows` of `ds` using the dataset's response.
    pub fn fit(ds: &Dataset, design: DesignSpec, rows: &[usize], opts: &LogitOptions) -> Result<Self> {
        let x = design.build(ds)?;
        let f = fit_logit(&x, rows, ds.response(), opts, None)?;
        Ok(Self::from_fit(design, f))
    }

    pub fn n_coefficients(&self) -> usize {
        self.coefficients.len()
    }

    pub fn linear_predictor(&self, x_row: &[f64]) -> f64 {
        x_row.iter().zip(&self.coefficients).map(|(a, b)| a * b).sum()
    }

    /// Predicted probability for one design row.
    pub fn predict_design_row(&self, x_row: &[f64]) -> f64 {
        logistic(self.linear_predictor(x_row))
    }

    /// Predicted probabilities for every row of `ds`.
    pub fn predict_dataset(&self, ds: &Dataset) -> Result<Vec<f64>> {
        let x = self.design.build(ds)?;
        if x.n_cols() != self.coefficients.len() {
            return Err(LoretError::Dimension("design does not match model".into()));
        }
        Ok((0..x.n_rows()).map(|i| self.predict_design_row(x.row(i))).collect())
    }

    /// Coefficient table: name, estimate, standard error, flags.
    pub fn coefficient_table(&self) -> String {
        let mut out = String::new();
        let flag = match self.separation {
            Separation::None => "",
            Separation::QuasiComplete => " quasi-complete-separation",
            Separation::Complete => " complete-separation",
        };
        let _ = writeln!(
            out,
            "# n={} loglik={:.6} converged={}{}",
            self.n_obs, self.log_likelihood, self.converged, flag
        );
        let _ = writeln!(out, "term\testimate\tstd_error\taliased");
        for (j, name) in self.design.names().iter().enumerate() {
            let _ = writeln!(
                out,
                "{name}\t{:.6}\t{}\t{}",
                self.coefficients[j],
                fmt_se(self.std_errors[j]),
                self.aliased.contains(&j)
            );
        }
        out
    }
}

pub(crate) fn fmt_se(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.6}")
    } else {
        "NA".to_string()
    }
}

/// Cutoff for turning probabilities into class labels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationConfig {
    cutoff: f64,
}

impl ClassificationConfig {
    pub fn new(cutoff: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&cutoff) {
            return Err(LoretError::InvalidArgument(format!("cutoff {cutoff} outside [0, 1]")));
        }
        Ok(ClassificationConfig { cutoff })
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }
}

impl Default for ClassificationConfig {
    fn default() -> Self {
        ClassificationConfig { cutoff: 0.5 }
    }
}

/// 1 iff `prob >= cutoff`.
pub fn classify(prob: f64, cfg: &ClassificationConfig) -> u8 {
    u8::from(prob >= cfg.cutoff)
}
