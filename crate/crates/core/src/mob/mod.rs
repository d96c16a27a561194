//! Model-based recursive partitioning with logistic node models.
//!
//! Each node fits a logit on the regressor design, tests every partitioning
//! variable for parameter instability, and splits on the most significant
//! one (Bonferroni-adjusted across variables) at the cutpoint minimizing the
//! children's total negative log-likelihood.

mod stability;

use serde::{Deserialize, Serialize};

pub use stability::{stability_test, suplm_p_value, StabilityTestResult, TestKind};

use crate::data::{select_roles, ColumnKind, Dataset, ModelSchema};
use crate::error::{LoretError, Result};
use crate::glm::{fit_logit, score_contributions, DesignMatrix, DesignSpec, LogitFit, LogitModel, LogitOptions, Separation};
use crate::par;
use crate::tree::{Algorithm, LoretTree, Node, NodeKind, Side, SplitEvidence, SplitKind, SplitRule, Surrogate};

/// Categorical variables with at most this many levels get an exhaustive
/// bipartition search; larger ones are ordered by mean residual.
pub const EXHAUSTIVE_LEVELS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MobMetaparams {
    pub alpha: f64,
    /// Minimum training rows per child; `None` means 10 per coefficient.
    pub minsplit: Option<usize>,
    pub max_depth: Option<usize>,
    pub trim: f64,
    /// Upper bound on numeric cutpoints evaluated per split (quantile spaced).
    pub max_cutpoints: usize,
}

impl Default for MobMetaparams {
    fn default() -> Self {
        MobMetaparams {
            alpha: 0.05,
            minsplit: None,
            max_depth: None,
            trim: 0.1,
            max_cutpoints: 100,
        }
    }
}

impl MobMetaparams {
    pub fn new(alpha: f64, minsplit: usize) -> Self {
        MobMetaparams {
            alpha,
            minsplit: Some(minsplit),
            ..Default::default()
        }
    }

    pub fn effective_minsplit(&self, n_coefficients: usize) -> usize {
        self.minsplit.unwrap_or(10 * n_coefficients)
    }

    pub fn validate(&self, n_coefficients: usize) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(LoretError::InvalidArgument(format!("alpha {} outside (0, 1]", self.alpha)));
        }
        if !(self.trim > 0.0 && self.trim < 0.5) {
            return Err(LoretError::InvalidArgument(format!("trim {} outside (0, 0.5)", self.trim)));
        }
        if self.max_cutpoints < 1 {
            return Err(LoretError::InvalidArgument("max_cutpoints must be positive".into()));
        }
        let m = self.effective_minsplit(n_coefficients);
        if m < 10 * n_coefficients {
            return Err(LoretError::InvalidArgument(format!(
                "minsplit {m} too small for {n_coefficients} coefficients (need at least {})",
                10 * n_coefficients
            )));
        }
        Ok(())
    }
}

/// Chosen split of a node on one variable.
#[derive(Debug, Clone, PartialEq)]
pub struct Cutpoint {
    pub kind: SplitKind,
    /// Sum of the children's negative log-likelihoods.
    pub objective: f64,
    pub left: Vec<usize>,
    pub right: Vec<usize>,
}

fn child_nll(x: &DesignMatrix, rows: &[usize], y: &[f64], opts: &LogitOptions, start: &[f64]) -> Option<f64> {
    let f = fit_logit(x, rows, y, opts, Some(start)).ok()?;
    f.log_likelihood.is_finite().then_some(-f.log_likelihood)
}

fn better(a: f64, b: f64) -> bool {
    a < b - 1e-10 * b.abs().max(1e-10)
}

/// Best binary cutpoint of `column` within `rows`, or `None` when no
/// candidate leaves at least `minsplit` rows on both sides with estimable
/// child models.
#[allow(clippy::too_many_arguments)]
pub fn best_cutpoint(
    ds: &Dataset,
    x: &DesignMatrix,
    rows: &[usize],
    column: usize,
    parent: &[f64],
    minsplit: usize,
    max_cutpoints: usize,
    opts: &LogitOptions,
) -> Option<Cutpoint> {
    let y = ds.response();
    let z = ds.values(column);
    let n = rows.len();
    if n < 2 * minsplit {
        return None;
    }
    let candidates: Vec<SplitKind> = match &ds.spec(column).kind {
        ColumnKind::Numeric | ColumnKind::Ordinal(_) => {
            let mut vals: Vec<f64> = rows.iter().map(|&r| z[r]).collect();
            vals.sort_by(f64::total_cmp);
            let mut cuts = Vec::new();
            for i in minsplit..=n - minsplit {
                if vals[i - 1] < vals[i] {
                    cuts.push(0.5 * (vals[i - 1] + vals[i]));
                }
            }
            if cuts.len() > max_cutpoints {
                let m = cuts.len();
                let picked: Vec<f64> = (0..max_cutpoints)
                    .map(|j| {
                        let pos = if max_cutpoints == 1 {
                            (m - 1) / 2
                        } else {
                            (j as f64 * (m - 1) as f64 / (max_cutpoints - 1) as f64).round() as usize
                        };
                        cuts[pos]
                    })
                    .collect();
                cuts = picked;
                cuts.dedup();
            }
            cuts.into_iter().map(SplitKind::Threshold).collect()
        }
        kind => {
            let levels = kind.levels().map_or(2, <[String]>::len);
            let mut counts = vec![0usize; levels];
            let mut resid = vec![0.0; levels];
            for &r in rows {
                let c = z[r] as usize;
                counts[c] += 1;
                resid[c] += y[r] - crate::glm::logistic(dot(x.row(r), parent));
            }
            let present: Vec<usize> = (0..levels).filter(|&c| counts[c] > 0).collect();
            let c = present.len();
            let mut subsets: Vec<Vec<usize>> = Vec::new();
            if c <= EXHAUSTIVE_LEVELS {
                // Fixing the last level on the right enumerates each bipartition once.
                for mask in 1u32..(1 << (c - 1)) {
                    subsets.push((0..c - 1).filter(|&i| mask & (1 << i) != 0).map(|i| present[i]).collect());
                }
            } else {
                let mut ord = present.clone();
                ord.sort_by(|&a, &b| {
                    (resid[a] / counts[a] as f64)
                        .total_cmp(&(resid[b] / counts[b] as f64))
                        .then(a.cmp(&b))
                });
                for cut in 1..c {
                    let mut s = ord[..cut].to_vec();
                    s.sort_unstable();
                    subsets.push(s);
                }
            }
            subsets
                .into_iter()
                .filter_map(|left| {
                    let nl: usize = left.iter().map(|&l| counts[l]).sum();
                    (nl >= minsplit && n - nl >= minsplit).then(|| {
                        let right = present.iter().copied().filter(|l| !left.contains(l)).collect();
                        SplitKind::Subset { left, right }
                    })
                })
                .collect()
        }
    };
    let rule = |kind: &SplitKind| SplitRule {
        variable: String::new(),
        kind: kind.clone(),
        surrogate: Surrogate::RouteMajority,
        majority: Side::Left,
    };
    let objectives = par::map_slice(&candidates, |kind| {
        let r = rule(kind);
        let (left, right): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| r.side(z[i]) == Side::Left);
        let l = child_nll(x, &left, y, opts, parent)?;
        let rr = child_nll(x, &right, y, opts, parent)?;
        Some(l + rr)
    });
    let mut best: Option<(usize, f64)> = None;
    for (i, obj) in objectives.iter().enumerate() {
        let Some(obj) = *obj else { continue };
        if best.is_none_or(|(_, b)| better(obj, b)) {
            best = Some((i, obj));
        }
    }
    let (i, objective) = best?;
    let kind = candidates[i].clone();
    let r = rule(&kind);
    let (left, right) = rows.iter().partition(|&&i| r.side(z[i]) == Side::Left);
    Some(Cutpoint {
        kind,
        objective,
        left,
        right,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

struct Grower<'a> {
    ds: &'a Dataset,
    x: DesignMatrix,
    design: DesignSpec,
    z: Vec<usize>,
    mp: MobMetaparams,
    minsplit: usize,
    opts: LogitOptions,
}

impl Grower<'_> {
    fn tests(&self, fit: &LogitFit, model: &LogitModel, rows: &[usize]) -> Result<Vec<StabilityTestResult>> {
        let y = self.ds.response();
        let scores = score_contributions(&self.x, rows, y, &fit.coefficients);
        let out = par::map_indexed(self.z.len(), |j| {
            let col = self.z[j];
            let vals: Vec<f64> = rows.iter().map(|&r| self.ds.value(col, r)).collect();
            let spec = self.ds.spec(col);
            stability_test(model, &scores, &vals, &spec.kind, &spec.name, self.mp.trim)
        });
        out.into_iter().collect()
    }

    fn grow(&self, rows: Vec<usize>, depth: usize, start: Option<&[f64]>, nodes: &mut Vec<Node>) -> Result<usize> {
        let idx = nodes.len();
        let y = self.ds.response();
        let n = rows.len();
        let prevalence = rows.iter().map(|&r| y[r]).sum::<f64>() / n as f64;
        let fit = fit_logit(&self.x, &rows, y, &self.opts, start)?;
        let model = LogitModel::from_fit(self.design.clone(), fit.clone());
        nodes.push(Node {
            id: idx + 1,
            depth,
            n,
            prevalence,
            kind: NodeKind::Terminal {
                model: model.clone(),
                reason: String::new(),
            },
            rows: Vec::new(),
        });
        let stop = |nodes: &mut Vec<Node>, rows: Vec<usize>, why: String| {
            if let NodeKind::Terminal { reason, .. } = &mut nodes[idx].kind {
                *reason = why;
            }
            nodes[idx].rows = rows;
            Ok(idx)
        };
        if self.z.is_empty() {
            return stop(nodes, rows, "no partitioning variables".into());
        }
        if n < 2 * self.minsplit {
            return stop(nodes, rows, "minsplit".into());
        }
        if self.mp.max_depth.is_some_and(|d| depth >= d) {
            return stop(nodes, rows, "max_depth".into());
        }
        if fit.separation != Separation::None {
            return stop(nodes, rows, "separation".into());
        }
        if !fit.converged {
            return stop(nodes, rows, "not converged".into());
        }
        let tests = self.tests(&fit, &model, &rows)?;
        let m = tests.len();
        let mut sel = 0;
        for (j, t) in tests.iter().enumerate() {
            if t.p_value < tests[sel].p_value {
                sel = j;
            }
        }
        let adjusted = tests[sel].adjusted(m);
        if adjusted > self.mp.alpha {
            return stop(nodes, rows, format!("not significant (p={adjusted:.3e})"));
        }
        let column = self.z[sel];
        let Some(cut) = best_cutpoint(
            self.ds,
            &self.x,
            &rows,
            column,
            &fit.coefficients,
            self.minsplit,
            self.mp.max_cutpoints,
            &self.opts,
        ) else {
            return stop(nodes, rows, "no admissible cutpoint".into());
        };
        let before = -fit.log_likelihood;
        if cut.objective.is_nan() || cut.objective >= before {
            return stop(nodes, rows, "no likelihood gain".into());
        }
        let majority = if cut.left.len() >= cut.right.len() {
            Side::Left
        } else {
            Side::Right
        };
        let rule = SplitRule {
            variable: self.ds.spec(column).name.clone(),
            kind: cut.kind,
            surrogate: Surrogate::RouteMajority,
            majority,
        };
        let left = self.grow(cut.left, depth + 1, Some(&fit.coefficients), nodes)?;
        let right = self.grow(cut.right, depth + 1, Some(&fit.coefficients), nodes)?;
        nodes[idx].kind = NodeKind::Internal {
            rule,
            left,
            right,
            evidence: SplitEvidence {
                statistic: tests[sel].statistic,
                adjusted_p: Some(adjusted),
                objective_before: before,
                objective_after: cut.objective,
            },
        };
        Ok(idx)
    }
}

/// Fits a model tree for a `y ~ x | z` schema on `rows` of `ds`. With no
/// partitioning variables the result is the single global logit.
pub fn fit_mob(ds: &Dataset, rows: &[usize], spec: &ModelSchema, mp: &MobMetaparams) -> Result<LoretTree> {
    if rows.is_empty() {
        return Err(LoretError::EmptyData);
    }
    let views = select_roles(ds, spec)?;
    let design = DesignSpec::new(ds, &views.x);
    // Without partitioning variables nothing splits, so minsplit is moot.
    if !views.z.is_empty() {
        mp.validate(design.len())?;
    }
    let x = design.build(ds)?;
    let minsplit = mp.effective_minsplit(design.len());
    let grower = Grower {
        ds,
        x,
        design: design.clone(),
        z: views.z,
        mp: *mp,
        minsplit,
        opts: LogitOptions::default(),
    };
    let mut nodes = Vec::new();
    grower.grow(rows.to_vec(), 0, None, &mut nodes)?;
    let depth = mp.max_depth.map_or("inf".to_string(), |d| d.to_string());
    Ok(LoretTree {
        model_schema: spec.clone(),
        algorithm: if spec.partitioning.is_empty() {
            Algorithm::Logistic
        } else {
            Algorithm::Mob
        },
        design,
        fit_meta: format!(
            "alpha={:e} minsplit={minsplit} max_depth={depth} trim={} max_cutpoints={}",
            mp.alpha, mp.trim, mp.max_cutpoints
        ),
        nodes,
    })
}
