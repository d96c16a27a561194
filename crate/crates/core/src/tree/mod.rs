//! Recursive partitions whose terminal nodes hold logistic models.
//!
//! Both classification trees (`y ~ 1 | z`, see [`fit_tree`]) and model trees
//! (`y ~ x | z`, see [`crate::mob`]) produce a [`LoretTree`]. Global models
//! are root-only trees.

mod classify;
mod report;

use serde::{Deserialize, Serialize};

pub use classify::{best_split_cart, best_split_ctree, fit_tree, gini, CtreeTest, SplitCandidate, Strategy, TreeMetaparams};
pub use report::{rule_dump, terminal_table};

use crate::data::{ColumnKind, Dataset, ModelSchema};
use crate::error::{LoretError, Result};
use crate::glm::{DesignSpec, LogitModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

/// What to do with a categorical level not seen in the node's training data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Surrogate {
    RouteLeft,
    RouteRight,
    /// Follow the child with more training rows.
    RouteMajority,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SplitKind {
    /// Left iff value <= threshold.
    Threshold(f64),
    /// Left iff level code is in `left`; `right` lists the other levels seen in training.
    Subset { left: Vec<usize>, right: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitRule {
    pub variable: String,
    pub kind: SplitKind,
    pub surrogate: Surrogate,
    /// Child holding the larger share of training rows.
    pub majority: Side,
}

impl SplitRule {
    /// Side for a raw column value.
    pub fn side(&self, value: f64) -> Side {
        match &self.kind {
            SplitKind::Threshold(t) => {
                if value <= *t {
                    Side::Left
                } else {
                    Side::Right
                }
            }
            SplitKind::Subset { left, right } => {
                let code = value as usize;
                if left.contains(&code) {
                    Side::Left
                } else if right.contains(&code) {
                    Side::Right
                } else {
                    match self.surrogate {
                        Surrogate::RouteLeft => Side::Left,
                        Surrogate::RouteRight => Side::Right,
                        Surrogate::RouteMajority => self.majority,
                    }
                }
            }
        }
    }
}

/// Evidence recorded for an executed split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitEvidence {
    /// Test statistic (stability / association) or impurity decrease.
    pub statistic: f64,
    /// Multiplicity-adjusted p-value of the selected variable, when a test was used.
    pub adjusted_p: Option<f64>,
    /// Training objective before and after the split (impurity or negative log-likelihood).
    pub objective_before: f64,
    pub objective_after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum NodeKind {
    Internal {
        rule: SplitRule,
        left: usize,
        right: usize,
        evidence: SplitEvidence,
    },
    Terminal {
        model: LogitModel,
        /// Why the node was not split further.
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    /// Preorder number, root = 1.
    pub id: usize,
    pub depth: usize,
    pub n: usize,
    pub prevalence: f64,
    pub kind: NodeKind,
    /// Training rows that reached this node (terminals only; not serialized).
    #[serde(skip)]
    pub rows: Vec<usize>,
}

impl Node {
    pub fn is_terminal(&self) -> bool {
        matches!(self.kind, NodeKind::Terminal { .. })
    }

    pub fn model(&self) -> Option<&LogitModel> {
        match &self.kind {
            NodeKind::Terminal { model, .. } => Some(model),
            NodeKind::Internal { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Algorithm {
    MajorityVote,
    Logistic,
    Cart,
    Ctree,
    Mob,
}

impl Algorithm {
    pub fn label(self) -> &'static str {
        match self {
            Algorithm::MajorityVote => "majority",
            Algorithm::Logistic => "logistic",
            Algorithm::Cart => "CART",
            Algorithm::Ctree => "CTree",
            Algorithm::Mob => "MOB",
        }
    }
}

/// A fitted LORET: a binary partition with a logistic model per terminal node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoretTree {
    pub model_schema: ModelSchema,
    pub algorithm: Algorithm,
    /// Regressor design shared by all terminal models.
    pub design: DesignSpec,
    /// Human-readable metaparameter summary.
    pub fit_meta: String,
    pub nodes: Vec<Node>,
}

impl LoretTree {
    pub fn root_only(
        model_schema: ModelSchema,
        algorithm: Algorithm,
        model: LogitModel,
        rows: Vec<usize>,
        prevalence: f64,
        fit_meta: String,
    ) -> Self {
        LoretTree {
            model_schema,
            algorithm,
            design: model.design.clone(),
            fit_meta,
            nodes: vec![Node {
                id: 1,
                depth: 0,
                n: rows.len(),
                prevalence,
                kind: NodeKind::Terminal {
                    model,
                    reason: "root".into(),
                },
                rows,
            }],
        }
    }

    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    pub fn node_by_id(&self, id: usize) -> Option<&Node> {
        self.nodes.get(id.checked_sub(1)?)
    }

    pub fn terminals(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(|n| n.is_terminal())
    }

    /// Number of terminal nodes (segments).
    pub fn n_segments(&self) -> usize {
        self.terminals().count()
    }

    pub fn depth(&self) -> usize {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    /// Coefficients per segment (design width including intercept).
    pub fn n_coefficients(&self) -> usize {
        self.design.len()
    }

    /// Column index for every node's split variable in `ds`.
    fn bind(&self, ds: &Dataset) -> Result<Vec<Option<usize>>> {
        self.nodes
            .iter()
            .map(|n| match &n.kind {
                NodeKind::Internal { rule, .. } => ds.require_column(&rule.variable).map(Some),
                NodeKind::Terminal { .. } => Ok(None),
            })
            .collect()
    }

    fn route_bound(&self, cols: &[Option<usize>], ds: &Dataset, row: usize) -> usize {
        let mut i = 0;
        loop {
            match &self.nodes[i].kind {
                NodeKind::Terminal { .. } => return i,
                NodeKind::Internal {
                    rule, left, right, ..
                } => {
                    let v = ds.value(cols[i].expect("bound"), row);
                    i = match rule.side(v) {
                        Side::Left => *left,
                        Side::Right => *right,
                    };
                }
            }
        }
    }

    /// Terminal node id for one row of `ds`.
    pub fn route(&self, ds: &Dataset, row: usize) -> Result<usize> {
        let cols = self.bind(ds)?;
        Ok(self.nodes[self.route_bound(&cols, ds, row)].id)
    }

    /// Terminal node id for every row.
    pub fn route_all(&self, ds: &Dataset) -> Result<Vec<usize>> {
        let cols = self.bind(ds)?;
        Ok((0..ds.n_rows())
            .map(|r| self.nodes[self.route_bound(&cols, ds, r)].id)
            .collect())
    }

    /// Predicted probability and segment id for every row.
    pub fn predict_with_segments(&self, ds: &Dataset) -> Result<(Vec<f64>, Vec<usize>)> {
        let cols = self.bind(ds)?;
        let x = self.design.build(ds)?;
        let mut probs = Vec::with_capacity(ds.n_rows());
        let mut segs = Vec::with_capacity(ds.n_rows());
        for r in 0..ds.n_rows() {
            let i = self.route_bound(&cols, ds, r);
            let model = self.nodes[i].model().expect("terminal");
            probs.push(model.predict_design_row(x.row(r)));
            segs.push(self.nodes[i].id);
        }
        Ok((probs, segs))
    }

    pub fn predict(&self, ds: &Dataset) -> Result<Vec<f64>> {
        Ok(self.predict_with_segments(ds)?.0)
    }

    pub fn predict_row(&self, ds: &Dataset, row: usize) -> Result<f64> {
        let cols = self.bind(ds)?;
        let i = self.route_bound(&cols, ds, row);
        let x = self.design.build(&ds.select_rows(&[row]))?;
        Ok(self.nodes[i].model().expect("terminal").predict_design_row(x.row(0)))
    }

    /// Conditions on the path from the root to node index `idx`.
    pub fn path(&self, idx: usize) -> Vec<(&SplitRule, Side)> {
        let mut parent = vec![None; self.nodes.len()];
        for (i, n) in self.nodes.iter().enumerate() {
            if let NodeKind::Internal { left, right, .. } = n.kind {
                parent[left] = Some((i, Side::Left));
                parent[right] = Some((i, Side::Right));
            }
        }
        let mut out = Vec::new();
        let mut cur = idx;
        while let Some((p, side)) = parent[cur] {
            if let NodeKind::Internal { rule, .. } = &self.nodes[p].kind {
                out.push((rule, side));
            }
            cur = p;
        }
        out.reverse();
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let t: LoretTree = serde_json::from_str(s)?;
        if t.nodes.is_empty() {
            return Err(LoretError::InvalidArgument("tree has no nodes".into()));
        }
        Ok(t)
    }
}

/// Describes one side of a split in readable form, e.g. `age <= 30.5` or `party in {D,R}`.
pub fn describe_condition(rule: &SplitRule, side: Side, kind: &ColumnKind) -> String {
    match (&rule.kind, kind.levels()) {
        (SplitKind::Threshold(t), Some(levels)) => {
            let set: Vec<&str> = levels
                .iter()
                .enumerate()
                .filter(|(i, _)| ((*i as f64) <= *t) == (side == Side::Left))
                .map(|(_, l)| l.as_str())
                .collect();
            format!("{} in {{{}}}", rule.variable, set.join(","))
        }
        (SplitKind::Threshold(t), None) => match side {
            Side::Left => format!("{} <= {}", rule.variable, fmt_threshold(*t)),
            Side::Right => format!("{} > {}", rule.variable, fmt_threshold(*t)),
        },
        (SplitKind::Subset { left, right }, levels) => {
            let codes = if side == Side::Left { left } else { right };
            let names: Vec<String> = codes
                .iter()
                .map(|&c| levels.and_then(|l| l.get(c)).cloned().unwrap_or_else(|| c.to_string()))
                .collect();
            format!("{} in {{{}}}", rule.variable, names.join(","))
        }
    }
}

pub(crate) fn fmt_threshold(t: f64) -> String {
    let s = format!("{t:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}
