//! Classification-tree induction (`y ~ 1 | z`): exhaustive Gini search
//! (CART-style) or two-stage test-based selection (CTree-style).

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::{Algorithm, LoretTree, Node, NodeKind, Side, SplitEvidence, SplitKind, SplitRule, Surrogate};
use crate::data::{select_roles, ColumnKind, Dataset, ModelSchema};
use crate::error::{LoretError, Result};
use crate::glm::{fit_logit, DesignMatrix, DesignSpec, LogitModel, LogitOptions};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Strategy {
    Cart,
    Ctree,
}

/// How CTree computes per-variable association p-values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CtreeTest {
    Asymptotic,
    /// Monte Carlo permutation p-values with `resamples` draws.
    Permutation { resamples: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeMetaparams {
    pub max_depth: usize,
    pub minsplit: usize,
    /// Significance level (CTree only).
    pub alpha: f64,
    pub strategy: Strategy,
    pub test: CtreeTest,
    pub seed: u64,
}

impl TreeMetaparams {
    pub fn cart() -> Self {
        TreeMetaparams {
            max_depth: 7,
            minsplit: 100,
            alpha: 1.0,
            strategy: Strategy::Cart,
            test: CtreeTest::Asymptotic,
            seed: 0,
        }
    }

    pub fn ctree() -> Self {
        TreeMetaparams {
            max_depth: usize::MAX,
            minsplit: 100,
            alpha: 1e-6,
            strategy: Strategy::Ctree,
            test: CtreeTest::Asymptotic,
            seed: 0,
        }
    }

    /// Smallest admissible child: floor(minsplit / 3), at least 1.
    pub fn min_leaf(&self) -> usize {
        (self.minsplit / 3).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.minsplit < 2 {
            return Err(LoretError::InvalidArgument("minsplit must be at least 2".into()));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(LoretError::InvalidArgument(format!("alpha {} outside (0, 1]", self.alpha)));
        }
        if let CtreeTest::Permutation { resamples } = self.test {
            if resamples == 0 {
                return Err(LoretError::InvalidArgument("permutation test needs resamples".into()));
            }
        }
        Ok(())
    }

    fn describe(&self) -> String {
        let depth = if self.max_depth == usize::MAX {
            "inf".to_string()
        } else {
            self.max_depth.to_string()
        };
        match self.strategy {
            Strategy::Cart => format!("strategy=cart max_depth={depth} minsplit={}", self.minsplit),
            Strategy::Ctree => format!(
                "strategy=ctree max_depth={depth} minsplit={} alpha={:e}",
                self.minsplit, self.alpha
            ),
        }
    }
}

/// A gini impurity: 2 p (1 - p) for class counts `(zeros, ones)`.
pub fn gini(counts: (usize, usize)) -> Result<f64> {
    let (n0, n1) = counts;
    let n = n0 + n1;
    if n == 0 {
        return Err(LoretError::InvalidArgument("gini of an empty node".into()));
    }
    let p = n1 as f64 / n as f64;
    Ok(2.0 * p * (1.0 - p))
}

fn gini_unchecked(n: usize, ones: usize) -> f64 {
    let p = ones as f64 / n as f64;
    2.0 * p * (1.0 - p)
}

/// Weighted impurity decrease of a split given left and total counts.
pub(crate) fn gini_decrease(nl: usize, onesl: usize, n: usize, ones: usize) -> f64 {
    let nr = n - nl;
    let onesr = ones - onesl;
    gini_unchecked(n, ones)
        - (nl as f64 / n as f64) * gini_unchecked(nl, onesl)
        - (nr as f64 / n as f64) * gini_unchecked(nr, onesr)
}

/// Standardized two-sample statistic of the 2x2 table (left/right x class).
pub(crate) fn two_sample_stat(nl: usize, onesl: usize, n: usize, ones: usize) -> f64 {
    let (nf, nlf, of) = (n as f64, nl as f64, ones as f64);
    let var = nlf * (nf - nlf) * of * (nf - of) / (nf * nf * (nf - 1.0));
    if var <= 0.0 {
        return 0.0;
    }
    let d = onesl as f64 - nlf * of / nf;
    d * d / var
}

/// `a` beats `b` by more than rounding noise.
pub(crate) fn strictly_better(a: f64, b: f64) -> bool {
    a > b + 1e-12 * b.abs().max(1e-12)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitCandidate {
    /// Dataset column.
    pub column: usize,
    /// Position within the candidate list (tie-break order).
    pub position: usize,
    pub kind: SplitKind,
    pub score: f64,
    pub n_left: usize,
    pub n_right: usize,
}

/// Categorical variables with at most this many observed levels are split
/// by full enumeration; larger ones use the prevalence-ordered prefixes.
const EXHAUSTIVE_LEVELS: usize = 10;

/// Best binary split of one variable under a count-based score.
fn search_variable(
    ds: &Dataset,
    rows: &[usize],
    column: usize,
    position: usize,
    min_leaf: usize,
    score: impl Fn(usize, usize, usize, usize) -> f64,
) -> Option<SplitCandidate> {
    let y = ds.response();
    let n = rows.len();
    let ones = rows.iter().filter(|&&r| y[r] == 1.0).count();
    let vals = ds.values(column);
    let mut best: Option<SplitCandidate> = None;
    let mut consider = |kind: SplitKind, nl: usize, onesl: usize| {
        if nl < min_leaf || n - nl < min_leaf {
            return;
        }
        let s = score(nl, onesl, n, ones);
        if best.as_ref().is_none_or(|b| strictly_better(s, b.score)) {
            best = Some(SplitCandidate {
                column,
                position,
                kind,
                score: s,
                n_left: nl,
                n_right: n - nl,
            });
        }
    };
    match &ds.spec(column).kind {
        ColumnKind::Categorical(levels) => {
            let mut cnt = vec![(0usize, 0usize); levels.len()];
            for &r in rows {
                let c = &mut cnt[vals[r] as usize];
                c.0 += 1;
                c.1 += usize::from(y[r] == 1.0);
            }
            let mut present: Vec<usize> = (0..levels.len()).filter(|&l| cnt[l].0 > 0).collect();
            if present.len() <= EXHAUSTIVE_LEVELS {
                // Every bipartition, last present level always on the right;
                // needed because a leaf-size bound can rule out the best prefix.
                let l = present.len();
                for mask in 1u32..(1u32 << (l - 1)) {
                    let (mut left, mut right) = (Vec::new(), Vec::new());
                    let (mut nl, mut onesl) = (0, 0);
                    for (i, &lev) in present.iter().enumerate() {
                        if mask >> i & 1 == 1 {
                            left.push(lev);
                            nl += cnt[lev].0;
                            onesl += cnt[lev].1;
                        } else {
                            right.push(lev);
                        }
                    }
                    consider(SplitKind::Subset { left, right }, nl, onesl);
                }
                return best;
            }
            // Ordering by class-1 prevalence makes the optimal subset a prefix.
            present.sort_by(|&a, &b| {
                let pa = cnt[a].1 as f64 / cnt[a].0 as f64;
                let pb = cnt[b].1 as f64 / cnt[b].0 as f64;
                pa.total_cmp(&pb).then(a.cmp(&b))
            });
            let (mut nl, mut onesl) = (0, 0);
            for cut in 1..present.len() {
                let l = present[cut - 1];
                nl += cnt[l].0;
                onesl += cnt[l].1;
                let mut left: Vec<usize> = present[..cut].to_vec();
                let mut right: Vec<usize> = present[cut..].to_vec();
                left.sort_unstable();
                right.sort_unstable();
                consider(SplitKind::Subset { left, right }, nl, onesl);
            }
        }
        _ => {
            let mut sorted: Vec<(f64, bool)> = rows.iter().map(|&r| (vals[r], y[r] == 1.0)).collect();
            sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
            let (mut nl, mut onesl) = (0, 0);
            for i in 0..n.saturating_sub(1) {
                nl += 1;
                onesl += usize::from(sorted[i].1);
                if sorted[i].0 < sorted[i + 1].0 {
                    let t = 0.5 * (sorted[i].0 + sorted[i + 1].0);
                    consider(SplitKind::Threshold(t), nl, onesl);
                }
            }
        }
    }
    best
}

fn pick_best(cands: Vec<Option<SplitCandidate>>) -> Option<SplitCandidate> {
    let mut best: Option<SplitCandidate> = None;
    for c in cands.into_iter().flatten() {
        if best.as_ref().is_none_or(|b| strictly_better(c.score, b.score)) {
            best = Some(c);
        }
    }
    best
}

/// Split maximizing the weighted Gini decrease over all candidate columns,
/// or `None` when no admissible split decreases impurity.
pub fn best_split_cart(
    ds: &Dataset,
    rows: &[usize],
    candidates: &[usize],
    min_leaf: usize,
) -> Option<SplitCandidate> {
    let per_var = par::map_indexed(candidates.len(), |pos| {
        search_variable(ds, rows, candidates[pos], pos, min_leaf, gini_decrease)
    });
    pick_best(per_var).filter(|c| c.score > 1e-12)
}

/// Association statistic and degrees of freedom of y versus one variable.
fn association(ds: &Dataset, rows: &[usize], column: usize, y: &[f64]) -> (f64, f64) {
    let n = rows.len();
    let vals = ds.values(column);
    let ones = rows.iter().filter(|&&r| y[r] == 1.0).count();
    if ones == 0 || ones == n || n < 2 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let of = ones as f64;
    match &ds.spec(column).kind {
        ColumnKind::Categorical(levels) => {
            let mut cnt = vec![(0usize, 0usize); levels.len()];
            for &r in rows {
                let c = &mut cnt[vals[r] as usize];
                c.0 += 1;
                c.1 += usize::from(y[r] == 1.0);
            }
            let present: Vec<_> = cnt.iter().filter(|c| c.0 > 0).collect();
            if present.len() < 2 {
                return (0.0, 1.0);
            }
            let mut chi = 0.0;
            for &&(nl, ol) in &present {
                let e1 = nl as f64 * of / nf;
                let e0 = nl as f64 * (nf - of) / nf;
                chi += (ol as f64 - e1).powi(2) / e1 + ((nl - ol) as f64 - e0).powi(2) / e0;
            }
            (chi * (nf - 1.0) / nf, (present.len() - 1) as f64)
        }
        _ => {
            let mean = rows.iter().map(|&r| vals[r]).sum::<f64>() / nf;
            let ss: f64 = rows.iter().map(|&r| (vals[r] - mean).powi(2)).sum();
            let var = of * (nf - of) / (nf * (nf - 1.0)) * ss;
            if var <= 1e-300 {
                return (0.0, 1.0);
            }
            let t: f64 = rows.iter().filter(|&&r| y[r] == 1.0).map(|&r| vals[r]).sum();
            let d = t - of * mean;
            (d * d / var, 1.0)
        }
    }
}

fn chi2_sf(stat: f64, df: f64) -> f64 {
    if stat <= 0.0 {
        return 1.0;
    }
    ChiSquared::new(df).map(|d| d.sf(stat)).unwrap_or(1.0)
}

/// Outcome of the CTree variable-selection stage for one variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssociationTest {
    pub position: usize,
    pub statistic: f64,
    pub p_value: f64,
    pub adjusted_p: f64,
}

/// Per-variable association tests at a node, Bonferroni-adjusted.
pub(crate) fn ctree_tests(
    ds: &Dataset,
    rows: &[usize],
    candidates: &[usize],
    test: CtreeTest,
    seed: u64,
) -> Vec<AssociationTest> {
    let y = ds.response();
    let m = candidates.len() as f64;
    let observed = par::map_indexed(candidates.len(), |pos| association(ds, rows, candidates[pos], y));
    let p_values: Vec<f64> = match test {
        CtreeTest::Asymptotic => observed.iter().map(|&(s, df)| chi2_sf(s, df)).collect(),
        CtreeTest::Permutation { resamples } => {
            // Permuted labels are written back into a scratch response vector so
            // the same statistic code applies.
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let labels: Vec<f64> = rows.iter().map(|&r| y[r]).collect();
            let mut exceed = vec![0usize; candidates.len()];
            let mut scratch = y.to_vec();
            let mut perm = labels.clone();
            for _ in 0..resamples {
                perm.shuffle(&mut rng);
                for (&r, &v) in rows.iter().zip(&perm) {
                    scratch[r] = v;
                }
                let stats = par::map_indexed(candidates.len(), |pos| {
                    association(ds, rows, candidates[pos], &scratch).0
                });
                for (e, (s, o)) in exceed.iter_mut().zip(stats.iter().zip(&observed)) {
                    if *s >= o.0 - 1e-12 * o.0.abs() {
                        *e += 1;
                    }
                }
            }
            exceed
                .iter()
                .map(|&e| (e + 1) as f64 / (resamples + 1) as f64)
                .collect()
        }
    };
    observed
        .iter()
        .zip(p_values)
        .enumerate()
        .map(|(position, (&(statistic, _), p))| AssociationTest {
            position,
            statistic,
            p_value: p,
            adjusted_p: (m * p).min(1.0),
        })
        .collect()
}

/// Two-stage CTree split: select the variable with the smallest adjusted
/// association p-value, stop if it exceeds `alpha`, else split it at the
/// cut maximizing the two-sample statistic.
pub fn best_split_ctree(
    ds: &Dataset,
    rows: &[usize],
    candidates: &[usize],
    alpha: f64,
    min_leaf: usize,
    test: CtreeTest,
    seed: u64,
) -> (Option<SplitCandidate>, Option<AssociationTest>) {
    let tests = ctree_tests(ds, rows, candidates, test, seed);
    let Some(sel) = tests
        .iter()
        .copied()
        .reduce(|a, b| if b.adjusted_p < a.adjusted_p { b } else { a })
    else {
        return (None, None);
    };
    if sel.adjusted_p > alpha {
        return (None, Some(sel));
    }
    let cand = search_variable(ds, rows, candidates[sel.position], sel.position, min_leaf, two_sample_stat);
    (cand, Some(sel))
}

struct Grower<'a> {
    ds: &'a Dataset,
    z: Vec<usize>,
    mp: TreeMetaparams,
    ones_design: DesignMatrix,
    opts: LogitOptions,
}

impl Grower<'_> {
    fn terminal_model(&self, rows: &[usize]) -> Result<LogitModel> {
        let f = fit_logit(&self.ones_design, rows, self.ds.response(), &self.opts, None)?;
        Ok(LogitModel::from_fit(DesignSpec::intercept_only(), f))
    }

    fn grow(&self, rows: Vec<usize>, depth: usize, nodes: &mut Vec<Node>) -> Result<usize> {
        let idx = nodes.len();
        let y = self.ds.response();
        let n = rows.len();
        let ones = rows.iter().filter(|&&r| y[r] == 1.0).count();
        let prevalence = ones as f64 / n as f64;
        nodes.push(Node {
            id: idx + 1,
            depth,
            n,
            prevalence,
            kind: NodeKind::Terminal {
                model: self.terminal_model(&rows)?,
                reason: String::new(),
            },
            rows: Vec::new(),
        });

        let stop = |nodes: &mut Vec<Node>, rows: Vec<usize>, why: &str| {
            if let NodeKind::Terminal { reason, .. } = &mut nodes[idx].kind {
                *reason = why.to_string();
            }
            nodes[idx].rows = rows;
            Ok(idx)
        };
        if n < self.mp.minsplit {
            return stop(nodes, rows, "minsplit");
        }
        if depth >= self.mp.max_depth {
            return stop(nodes, rows, "max_depth");
        }
        if ones == 0 || ones == n {
            return stop(nodes, rows, "pure");
        }

        let min_leaf = self.mp.min_leaf();
        let (cand, adjusted_p) = match self.mp.strategy {
            Strategy::Cart => (best_split_cart(self.ds, &rows, &self.z, min_leaf), None),
            Strategy::Ctree => {
                let seed = self.mp.seed ^ ((idx as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
                let (c, t) = best_split_ctree(self.ds, &rows, &self.z, self.mp.alpha, min_leaf, self.mp.test, seed);
                (c, t.map(|t| t.adjusted_p))
            }
        };
        let Some(cand) = cand else {
            let why = match adjusted_p {
                Some(p) if p > self.mp.alpha => "not significant",
                _ => "no admissible split",
            };
            return stop(nodes, rows, why);
        };

        let column = cand.column;
        let majority = if cand.n_left >= cand.n_right { Side::Left } else { Side::Right };
        let rule = SplitRule {
            variable: self.ds.spec(column).name.clone(),
            kind: cand.kind.clone(),
            surrogate: Surrogate::RouteMajority,
            majority,
        };
        let vals = self.ds.values(column);
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&r| rule.side(vals[r]) == Side::Left);
        let before = gini_unchecked(n, ones);
        let after = before - gini_decrease(left_rows.len(), left_rows.iter().filter(|&&r| y[r] == 1.0).count(), n, ones);
        let left = self.grow(left_rows, depth + 1, nodes)?;
        let right = self.grow(right_rows, depth + 1, nodes)?;
        nodes[idx].kind = NodeKind::Internal {
            rule,
            left,
            right,
            evidence: SplitEvidence {
                statistic: cand.score,
                adjusted_p,
                objective_before: before,
                objective_after: after,
            },
        };
        Ok(idx)
    }
}

/// Induces a classification tree for a `y ~ 1 | z` schema on `rows` of `ds`.
pub fn fit_tree(ds: &Dataset, rows: &[usize], spec: &ModelSchema, mp: &TreeMetaparams) -> Result<LoretTree> {
    mp.validate()?;
    if rows.is_empty() {
        return Err(LoretError::EmptyData);
    }
    if !spec.regressors.is_empty() {
        return Err(LoretError::ModelSchema {
            input: spec.to_string(),
            message: "classification trees take no regressors (use a model tree)".into(),
        });
    }
    if spec.partitioning.is_empty() {
        return Err(LoretError::ModelSchema {
            input: spec.to_string(),
            message: "classification trees need partitioning variables".into(),
        });
    }
    let views = select_roles(ds, spec)?;
    let grower = Grower {
        ds,
        z: views.z,
        mp: *mp,
        ones_design: DesignMatrix::from_rows(&vec![vec![1.0]; ds.n_rows()])?,
        opts: LogitOptions::default(),
    };
    let mut nodes = Vec::new();
    grower.grow(rows.to_vec(), 0, &mut nodes)?;
    Ok(LoretTree {
        model_schema: spec.clone(),
        algorithm: match mp.strategy {
            Strategy::Cart => Algorithm::Cart,
            Strategy::Ctree => Algorithm::Ctree,
        },
        design: DesignSpec::intercept_only(),
        fit_meta: format!("{} seed={}", mp.describe(), mp.seed),
        nodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{ColumnSpec, Role, Schema, SetTag};

    fn dataset(y: &[f64], z: &[Vec<f64>], cat_levels: Option<usize>) -> Dataset {
        let mut cols = vec![ColumnSpec::new("y", ColumnKind::Binary, Role::Response, SetTag::None)];
        for (j, _) in z.iter().enumerate() {
            let kind = match (j, cat_levels) {
                (0, Some(l)) => ColumnKind::Categorical((0..l).map(|i| format!("L{i}")).collect()),
                _ => ColumnKind::Numeric,
            };
            cols.push(ColumnSpec::new(format!("z{}", j + 1), kind, Role::Regressor, SetTag::Extended));
        }
        let schema = Schema::new(cols, vec![]).unwrap();
        let mut data = vec![y.to_vec()];
        data.extend(z.iter().cloned());
        let ids = (0..y.len()).map(|i| i.to_string()).collect();
        Dataset::from_columns(schema, data, ids).unwrap()
    }

    #[test]
    fn gini_values() {
        assert_eq!(gini((5, 5)).unwrap(), 0.5);
        assert_eq!(gini((10, 0)).unwrap(), 0.0);
        assert!((gini((1, 3)).unwrap() - 0.375).abs() < 1e-15);
        assert!(gini((0, 0)).is_err());
    }

    #[test]
    fn perfect_threshold_split() {
        let z1 = vec![1., 2., 3., 3., 5., 6., 7., 8.];
        let y = [0., 0., 0., 0., 1., 1., 1., 1.];
        let ds = dataset(&y, &[z1], None);
        let rows: Vec<usize> = (0..8).collect();
        let c = best_split_cart(&ds, &rows, &[1], 1).unwrap();
        assert_eq!(c.kind, SplitKind::Threshold(4.0));
        assert!((c.score - 0.5).abs() < 1e-15);
    }

    #[test]
    fn constant_response_has_no_split() {
        let ds = dataset(&[1.; 6], &[vec![1., 2., 3., 4., 5., 6.]], None);
        assert!(best_split_cart(&ds, &(0..6).collect::<Vec<_>>(), &[1], 1).is_none());
    }

    #[test]
    fn categorical_subset_by_prevalence() {
        // L0 and L2 are all ones, L1 all zeros.
        let z = vec![0., 1., 2., 0., 1., 2., 1., 0.];
        let y = [1., 0., 1., 1., 0., 1., 0., 1.];
        let ds = dataset(&y, &[z], Some(3));
        let c = best_split_cart(&ds, &(0..8).collect::<Vec<_>>(), &[1], 1).unwrap();
        assert_eq!(
            c.kind,
            SplitKind::Subset {
                left: vec![1],
                right: vec![0, 2]
            }
        );
    }

    #[test]
    fn ctree_picks_the_step_variable() {
        let n = 200;
        let noise: Vec<f64> = (0..n).map(|i| ((i * 7919) % 101) as f64).collect();
        let step: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
        let y: Vec<f64> = step.iter().map(|&v| f64::from(u8::from(v > 0.4))).collect();
        let ds = dataset(&y, &[noise, step], None);
        let rows: Vec<usize> = (0..n).collect();
        let (c, t) = best_split_ctree(&ds, &rows, &[1, 2], 0.05, 7, CtreeTest::Asymptotic, 0);
        let c = c.unwrap();
        assert_eq!(c.column, 2);
        assert!(t.unwrap().adjusted_p < 1e-10);
        match c.kind {
            SplitKind::Threshold(t) => assert!((0.39..0.41).contains(&t)),
            _ => panic!(),
        }
    }

    #[test]
    fn fit_tree_refuses_intercept_only_schema() {
        let ds = dataset(&[0., 1., 0., 1.], &[vec![1., 2., 3., 4.]], None);
        let spec: ModelSchema = "y~1|1".parse().unwrap();
        assert!(fit_tree(&ds, &[0, 1, 2, 3], &spec, &TreeMetaparams::cart()).is_err());
        let spec: ModelSchema = "y~s|e".parse().unwrap();
        assert!(fit_tree(&ds, &[0, 1, 2, 3], &spec, &TreeMetaparams::cart()).is_err());
    }

    #[test]
    fn fit_tree_root_only_and_membership() {
        let z1: Vec<f64> = (0..300).map(|i| (i % 17) as f64).collect();
        let y: Vec<f64> = (0..300).map(|i| f64::from(u8::from(i % 17 > 8 || i % 5 == 0))).collect();
        let ds = dataset(&y, &[z1], None);
        let rows: Vec<usize> = (0..300).collect();
        let spec: ModelSchema = "y~1|e".parse().unwrap();
        let mut mp = TreeMetaparams::cart();
        mp.max_depth = 0;
        let t = fit_tree(&ds, &rows, &spec, &mp).unwrap();
        assert_eq!(t.n_segments(), 1);
        assert_eq!(t.route(&ds, 5).unwrap(), 1);

        mp.max_depth = 4;
        mp.minsplit = 30;
        let t = fit_tree(&ds, &rows, &spec, &mp).unwrap();
        let total: usize = t.terminals().map(|n| n.n).sum();
        assert_eq!(total, 300);
        for r in 0..300 {
            let id = t.route(&ds, r).unwrap();
            assert!(t.node_by_id(id).unwrap().rows.contains(&r));
        }
        for n in &t.nodes {
            if let NodeKind::Internal { left, right, .. } = n.kind {
                assert!(n.n >= mp.minsplit);
                assert!(t.nodes[left].n >= mp.min_leaf() && t.nodes[right].n >= mp.min_leaf());
            }
        }
        // Terminal prediction equals training prevalence.
        for term in t.terminals() {
            let p = term.model().unwrap().predict_design_row(&[1.0]);
            assert!((p - term.prevalence).abs() < 1e-12);
        }
    }
}
