//! Accuracy, Wilcoxon AUC and ROC curves.

use serde::{Deserialize, Serialize};

use crate::error::{LoretError, Result};

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(LoretError::Dimension(format!("{a} predictions for {b} labels")));
    }
    if a == 0 {
        return Err(LoretError::EmptyData);
    }
    Ok(())
}

/// Fraction of predictions equal to the labels.
pub fn accuracy(predictions: &[u8], labels: &[f64]) -> Result<f64> {
    check_lengths(predictions.len(), labels.len())?;
    let hits = predictions
        .iter()
        .zip(labels)
        .filter(|(p, y)| f64::from(**p) == **y)
        .count();
    Ok(hits as f64 / labels.len() as f64)
}

/// Accuracy of classifying `score >= cutoff` as 1.
pub fn accuracy_at(scores: &[f64], labels: &[f64], cutoff: f64) -> Result<f64> {
    check_lengths(scores.len(), labels.len())?;
    let hits = scores
        .iter()
        .zip(labels)
        .filter(|(s, y)| f64::from(u8::from(**s >= cutoff)) == **y)
        .count();
    Ok(hits as f64 / labels.len() as f64)
}

/// Accuracy at each cutoff in `cutoffs`.
pub fn accuracy_curve(scores: &[f64], labels: &[f64], cutoffs: &[f64]) -> Result<Vec<f64>> {
    check_lengths(scores.len(), labels.len())?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| scores[i]).collect();
    // Prefix count of positives among the lowest-scored rows.
    let mut pos_below = vec![0usize; sorted.len() + 1];
    for (k, &i) in order.iter().enumerate() {
        pos_below[k + 1] = pos_below[k] + usize::from(labels[i] == 1.0);
    }
    let n = scores.len();
    let n1 = pos_below[n];
    Ok(cutoffs
        .iter()
        .map(|&c| {
            let below = sorted.partition_point(|&s| s < c);
            // Below the cutoff predicted 0, the rest predicted 1.
            let correct = (below - pos_below[below]) + (n1 - pos_below[below]);
            correct as f64 / n as f64
        })
        .collect())
}

fn class_counts(labels: &[f64]) -> (usize, usize) {
    let n1 = labels.iter().filter(|&&y| y == 1.0).count();
    (n1, labels.len() - n1)
}

/// Area under the ROC curve via the Mann-Whitney statistic with half credit
/// for tied pairs, computed from midranks in exact integer arithmetic.
pub fn auc_wilcoxon(scores: &[f64], labels: &[f64]) -> Result<f64> {
    check_lengths(scores.len(), labels.len())?;
    let (n1, n0) = class_counts(labels);
    if n1 == 0 || n0 == 0 {
        return Err(LoretError::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Twice the positive rank sum; a tie block spanning ranks lo+1..=hi has
    // doubled midrank lo + hi + 1.
    let mut twice_rank_sum: u128 = 0;
    let mut lo = 0;
    while lo < order.len() {
        let mut hi = lo + 1;
        while hi < order.len() && scores[order[hi]] == scores[order[lo]] {
            hi += 1;
        }
        let pos = order[lo..hi].iter().filter(|&&i| labels[i] == 1.0).count() as u128;
        twice_rank_sum += pos * (lo as u128 + hi as u128 + 1);
        lo = hi;
    }
    let (n1, n0) = (n1 as u128, n0 as u128);
    let twice_u = twice_rank_sum - n1 * (n1 + 1);
    Ok(twice_u as f64 / (2 * n1 * n0) as f64)
}

/// ROC points ordered by decreasing threshold; a row is positive iff its
/// score is at least the threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub thresholds: Vec<f64>,
    pub fpr: Vec<f64>,
    pub tpr: Vec<f64>,
}

impl RocCurve {
    pub fn len(&self) -> usize {
        self.thresholds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thresholds.is_empty()
    }

    /// Trapezoidal area under the curve.
    pub fn area(&self) -> f64 {
        let mut a = 0.0;
        for i in 1..self.len() {
            a += (self.fpr[i] - self.fpr[i - 1]) * (self.tpr[i] + self.tpr[i - 1]) * 0.5;
        }
        a
    }
}

/// `count` equally spaced thresholds on [0, 1].
pub fn default_grid(count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.5],
        _ => (0..count).map(|i| i as f64 / (count - 1) as f64).collect(),
    }
}

/// ROC on a threshold grid (any order; output sorted by decreasing threshold).
pub fn roc_curve(scores: &[f64], labels: &[f64], grid: &[f64]) -> Result<RocCurve> {
    check_lengths(scores.len(), labels.len())?;
    if grid.is_empty() {
        return Err(LoretError::InvalidArgument("empty threshold grid".into()));
    }
    let (n1, n0) = class_counts(labels);
    if n1 == 0 || n0 == 0 {
        return Err(LoretError::SingleClass);
    }
    let mut pos: Vec<f64> = Vec::with_capacity(n1);
    let mut neg: Vec<f64> = Vec::with_capacity(n0);
    for (&s, &y) in scores.iter().zip(labels) {
        if y == 1.0 {
            pos.push(s);
        } else {
            neg.push(s);
        }
    }
    pos.sort_by(f64::total_cmp);
    neg.sort_by(f64::total_cmp);
    let mut thresholds = grid.to_vec();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    let at_least = |v: &[f64], t: f64| v.len() - v.partition_point(|&s| s < t);
    let fpr = thresholds.iter().map(|&t| at_least(&neg, t) as f64 / n0 as f64).collect();
    let tpr = thresholds.iter().map(|&t| at_least(&pos, t) as f64 / n1 as f64).collect();
    Ok(RocCurve { thresholds, fpr, tpr })
}

/// ROC at every distinct score, anchored at (0, 0) by a leading +inf threshold.
pub fn roc_full(scores: &[f64], labels: &[f64]) -> Result<RocCurve> {
    check_lengths(scores.len(), labels.len())?;
    let mut grid: Vec<f64> = scores.to_vec();
    grid.sort_by(|a, b| b.total_cmp(a));
    grid.dedup();
    grid.insert(0, f64::INFINITY);
    roc_curve(scores, labels, &grid)
}

/// Pointwise mean of curves sharing a threshold grid.
pub fn threshold_average(curves: &[RocCurve]) -> Result<RocCurve> {
    let first = curves
        .first()
        .ok_or_else(|| LoretError::InvalidArgument("no curves to average".into()))?;
    if curves.iter().any(|c| c.thresholds != first.thresholds) {
        return Err(LoretError::InvalidArgument("curves use different threshold grids".into()));
    }
    let m = curves.len() as f64;
    let mean = |get: fn(&RocCurve) -> &Vec<f64>| -> Vec<f64> {
        (0..first.len())
            .map(|i| curves.iter().map(|c| get(c)[i]).sum::<f64>() / m)
            .collect()
    };
    Ok(RocCurve {
        thresholds: first.thresholds.clone(),
        fpr: mean(|c| &c.fpr),
        tpr: mean(|c| &c.tpr),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accuracy_counts() {
        assert_eq!(accuracy(&[1, 0, 1], &[1., 0., 1.]).unwrap(), 1.0);
        assert_eq!(accuracy(&[1, 1, 1, 1], &[1., 0., 1., 0.]).unwrap(), 0.5);
        assert!(accuracy(&[], &[]).is_err());
        assert!(accuracy(&[1], &[1., 0.]).is_err());
    }

    #[test]
    fn small_auc() {
        let s = [0.9, 0.4, 0.5, 0.1];
        let y = [1., 1., 0., 0.];
        assert_eq!(auc_wilcoxon(&s, &y).unwrap(), 0.75);
        assert_eq!(auc_wilcoxon(&[0.3; 4], &y).unwrap(), 0.5);
        assert_eq!(auc_wilcoxon(&[0.9, 0.8, 0.2, 0.1], &y).unwrap(), 1.0);
        assert!(matches!(auc_wilcoxon(&[0.1, 0.2], &[1., 1.]), Err(LoretError::SingleClass)));
    }

    #[test]
    fn roc_anchors_and_area() {
        let s = [0.9, 0.4, 0.5, 0.1, 0.4];
        let y = [1., 1., 0., 0., 0.];
        let g = roc_curve(&s, &y, &[0.0, 0.95]).unwrap();
        assert_eq!(g.thresholds, vec![0.95, 0.0]);
        assert_eq!((g.fpr[0], g.tpr[0]), (0.0, 0.0));
        assert_eq!((g.fpr[1], g.tpr[1]), (1.0, 1.0));
        let f = roc_full(&s, &y).unwrap();
        assert!((f.area() - auc_wilcoxon(&s, &y).unwrap()).abs() < 1e-15);
        let avg = threshold_average(std::slice::from_ref(&f)).unwrap();
        assert_eq!(avg, f);
    }

    #[test]
    fn accuracy_curve_matches_pointwise() {
        let s = [0.9, 0.4, 0.5, 0.1, 0.4, 0.7];
        let y = [1., 1., 0., 0., 0., 1.];
        let grid = default_grid(21);
        let c = accuracy_curve(&s, &y, &grid).unwrap();
        for (i, &t) in grid.iter().enumerate() {
            assert_eq!(c[i], accuracy_at(&s, &y, t).unwrap());
        }
        assert_eq!(c[0], 0.5);
    }
}
