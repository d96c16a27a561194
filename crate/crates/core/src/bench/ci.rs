//! Simultaneous confidence intervals for all pairwise differences of
//! fold-level performance between models.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{LoretError, Result};
use crate::par;

/// Monte Carlo draws used for the max-|t| critical value.
pub const DEFAULT_DRAWS: usize = 100_000;
const CHUNK: usize = 2_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseInterval {
    pub first: usize,
    pub second: usize,
    /// Mean of `first` minus mean of `second`.
    pub estimate: f64,
    pub std_error: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseCi {
    pub level: f64,
    pub critical: f64,
    /// Every contrast had zero variance, so all intervals have zero width.
    pub degenerate: bool,
    pub intervals: Vec<PairwiseInterval>,
}

/// Subtracts each fold's mean across models from every model's value.
pub fn center_folds(values: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let m = values.len();
    let f = values.first().map_or(0, Vec::len);
    let means: Vec<f64> = (0..f)
        .map(|j| values.iter().map(|v| v[j]).sum::<f64>() / m as f64)
        .collect();
    values
        .iter()
        .map(|v| v.iter().zip(&means).map(|(a, b)| a - b).collect())
        .collect()
}

/// Tukey all-pairwise intervals for `values` (models x folds).
///
/// Folds are centered first, then every contrast is studentized with the
/// pooled model x fold residual variance on (M - 1)(F - 1) degrees of
/// freedom. The max-|t| quantile of the contrast family is estimated from
/// `draws` Monte Carlo samples in fixed-size chunks, each with its own
/// stream, so the result does not depend on the thread count. For two
/// models this is the paired t interval.
pub fn pairwise_ci(values: &[Vec<f64>], level: f64, draws: usize, seed: u64) -> Result<PairwiseCi> {
    let m = values.len();
    if m < 2 {
        return Err(LoretError::InvalidArgument("need at least two models".into()));
    }
    let f = values[0].len();
    if f < 2 || values.iter().any(|v| v.len() != f) {
        return Err(LoretError::InvalidArgument("need at least two folds for every model".into()));
    }
    if !(level > 0.0 && level < 1.0) || draws == 0 {
        return Err(LoretError::InvalidArgument(format!("bad level {level} or draws {draws}")));
    }
    let centered = center_folds(values);
    let means: Vec<f64> = centered.iter().map(|v| v.iter().sum::<f64>() / f as f64).collect();
    // Model x fold residuals of the additive two-way fit; after centering the
    // fold effects are gone, so what remains is the interaction.
    let ss: f64 = centered
        .iter()
        .zip(&means)
        .map(|(v, mu)| v.iter().map(|a| (a - mu).powi(2)).sum::<f64>())
        .sum();
    let df = ((m - 1) * (f - 1)) as f64;
    let sigma2 = ss / df;
    let se = (2.0 * sigma2 / f as f64).sqrt();
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|a| (a + 1..m).map(move |b| (a, b))).collect();
    let degenerate = se.is_nan() || se <= 0.0;
    let critical = if degenerate {
        0.0
    } else {
        let chunks = draws.div_ceil(CHUNK);
        let per_chunk = par::map_indexed(chunks, |c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let chi = ChiSquared::new(df).expect("df > 0");
            let len = CHUNK.min(draws - c * CHUNK);
            let mut z = vec![0.0; m];
            (0..len)
                .map(|_| {
                    for zi in z.iter_mut() {
                        *zi = rng.sample(StandardNormal);
                    }
                    let root = (chi.sample(&mut rng) / df).sqrt();
                    // The studentized range over sqrt(2): max |z_a - z_b| / sqrt(2 s^2).
                    let (lo, hi) = z.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
                    (hi - lo) / std::f64::consts::SQRT_2 / root
                })
                .collect::<Vec<f64>>()
        });
        let mut all: Vec<f64> = per_chunk.into_iter().flatten().collect();
        all.sort_by(f64::total_cmp);
        let k = ((level * draws as f64).ceil() as usize).clamp(1, draws);
        all[k - 1]
    };
    let intervals = pairs
        .iter()
        .map(|&(a, b)| {
            let estimate = means[a] - means[b];
            PairwiseInterval {
                first: a,
                second: b,
                estimate,
                std_error: se,
                lower: estimate - critical * se,
                upper: estimate + critical * se,
            }
        })
        .collect();
    Ok(PairwiseCi {
        level,
        critical,
        degenerate,
        intervals,
    })
}
