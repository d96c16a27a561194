//! Segment profiles, targeting lists and turnout/support quadrants.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{ColumnKind, Dataset};
use crate::error::{LoretError, Result};
use crate::tree::{describe_condition, LoretTree, NodeKind};

/// Vote-likelihood category of a predicted probability:
/// likely (0.7, 1], undecided (0.3, 0.7], unlikely [0, 0.3].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Likelihood {
    Likely,
    Undecided,
    Unlikely,
}

impl Likelihood {
    pub fn of(p: f64) -> Self {
        if p > 0.7 {
            Likelihood::Likely
        } else if p > 0.3 {
            Likelihood::Undecided
        } else {
            Likelihood::Unlikely
        }
    }
}

/// A variable whose distribution is reported per segment. Numeric variables
/// are binned by `edges` into `<= e0`, `(e0, e1]`, ..., `> e_last`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileVariable {
    pub column: String,
    pub edges: Vec<f64>,
}

impl ProfileVariable {
    pub fn categorical(column: impl Into<String>) -> Self {
        ProfileVariable {
            column: column.into(),
            edges: Vec::new(),
        }
    }

    pub fn binned(column: impl Into<String>, edges: Vec<f64>) -> Self {
        ProfileVariable {
            column: column.into(),
            edges,
        }
    }

    /// Age categories <= 26, (26, 36], (36, 46], (46, 55], > 55.
    pub fn age(column: impl Into<String>) -> Self {
        Self::binned(column, vec![26.0, 36.0, 46.0, 55.0])
    }
}

fn fmt_edge(v: f64) -> String {
    crate::tree::fmt_threshold(v)
}

fn bin_labels(edges: &[f64]) -> Vec<String> {
    let mut out = vec![format!("<={}", fmt_edge(edges[0]))];
    for w in edges.windows(2) {
        out.push(format!("({},{}]", fmt_edge(w[0]), fmt_edge(w[1])));
    }
    out.push(format!(">{}", fmt_edge(edges[edges.len() - 1])));
    out
}

/// Categories and per-row category index for a profile variable.
fn categorize(ds: &Dataset, var: &ProfileVariable) -> Result<(Vec<String>, Vec<usize>)> {
    let col = ds
        .column_index(&var.column)
        .ok_or_else(|| LoretError::UnknownColumn(var.column.clone()))?;
    let vals = ds.values(col);
    match &ds.spec(col).kind {
        ColumnKind::Categorical(l) | ColumnKind::Ordinal(l) if var.edges.is_empty() => {
            Ok((l.clone(), vals.iter().map(|&v| v as usize).collect()))
        }
        ColumnKind::Binary if var.edges.is_empty() => {
            Ok((vec!["0".into(), "1".into()], vals.iter().map(|&v| v as usize).collect()))
        }
        _ => {
            if var.edges.is_empty() || var.edges.windows(2).any(|w| w[0] >= w[1]) {
                return Err(LoretError::InvalidArgument(format!(
                    "profile variable `{}` needs increasing bin edges",
                    var.column
                )));
            }
            let idx = vals.iter().map(|&v| var.edges.partition_point(|&e| e < v)).collect();
            Ok((bin_labels(&var.edges), idx))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Marginal {
    pub variable: String,
    /// (category, share) in declared order.
    pub shares: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentProfile {
    pub segment: usize,
    pub rules: String,
    pub n: usize,
    pub mean_prob: f64,
    pub median_prob: f64,
    pub likely: f64,
    pub undecided: f64,
    pub unlikely: f64,
    pub marginals: Vec<Marginal>,
}

fn median(v: &mut [f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Readable conjunction of the conditions leading to every terminal node.
pub fn segment_rules(tree: &LoretTree, ds: &Dataset) -> BTreeMap<usize, String> {
    let kind = |name: &str| {
        ds.column_index(name)
            .map(|c| ds.spec(c).kind.clone())
            .unwrap_or(ColumnKind::Numeric)
    };
    tree.nodes
        .iter()
        .enumerate()
        .filter(|(_, n)| matches!(n.kind, NodeKind::Terminal { .. }))
        .map(|(i, n)| {
            let parts: Vec<String> = tree
                .path(i)
                .into_iter()
                .map(|(rule, side)| describe_condition(rule, side, &kind(&rule.variable)))
                .collect();
            let text = if parts.is_empty() { "all".to_string() } else { parts.join(" & ") };
            (n.id, text)
        })
        .collect()
}

/// Profiles from per-row segment ids and predicted probabilities. Every
/// segment listed in `rules` gets a profile, in ascending id order.
pub fn build_profiles_from(
    ds: &Dataset,
    segments: &[usize],
    probs: &[f64],
    rules: &BTreeMap<usize, String>,
    vars: &[ProfileVariable],
) -> Result<Vec<SegmentProfile>> {
    if segments.len() != ds.n_rows() || probs.len() != ds.n_rows() {
        return Err(LoretError::Dimension("segments/probabilities do not match rows".into()));
    }
    let cats: Vec<(Vec<String>, Vec<usize>)> = vars.iter().map(|v| categorize(ds, v)).collect::<Result<_>>()?;
    let mut members: BTreeMap<usize, Vec<usize>> = rules.keys().map(|&k| (k, Vec::new())).collect();
    for (r, &s) in segments.iter().enumerate() {
        members.entry(s).or_default().push(r);
    }
    Ok(members
        .into_iter()
        .map(|(segment, rows)| {
            let n = rows.len();
            let mut p: Vec<f64> = rows.iter().map(|&r| probs[r]).collect();
            let share = |c: Likelihood| {
                if n == 0 {
                    0.0
                } else {
                    p.iter().filter(|&&x| Likelihood::of(x) == c).count() as f64 / n as f64
                }
            };
            let (likely, undecided, unlikely) =
                (share(Likelihood::Likely), share(Likelihood::Undecided), share(Likelihood::Unlikely));
            let mean_prob = if n == 0 { f64::NAN } else { p.iter().sum::<f64>() / n as f64 };
            let median_prob = median(&mut p);
            let marginals = vars
                .iter()
                .zip(&cats)
                .map(|(v, (labels, idx))| {
                    let mut counts = vec![0usize; labels.len()];
                    for &r in &rows {
                        counts[idx[r]] += 1;
                    }
                    Marginal {
                        variable: v.column.clone(),
                        shares: labels
                            .iter()
                            .zip(counts)
                            .map(|(l, c)| (l.clone(), if n == 0 { 0.0 } else { c as f64 / n as f64 }))
                            .collect(),
                    }
                })
                .collect();
            SegmentProfile {
                segment,
                rules: rules.get(&segment).cloned().unwrap_or_default(),
                n,
                mean_prob,
                median_prob,
                likely,
                undecided,
                unlikely,
                marginals,
            }
        })
        .collect())
}

/// One profile per terminal node of `tree`, computed on `ds`.
pub fn build_profiles(tree: &LoretTree, ds: &Dataset, vars: &[ProfileVariable]) -> Result<Vec<SegmentProfile>> {
    let (probs, segs) = tree.predict_with_segments(ds)?;
    build_profiles_from(ds, &segs, &probs, &segment_rules(tree, ds), vars)
}

pub fn profiles_text(profiles: &[SegmentProfile]) -> String {
    let mut out = String::new();
    for p in profiles {
        let _ = writeln!(out, "segment {}: {}", p.segment, p.rules);
        let _ = writeln!(
            out,
            "  n={} mean={:.3} median={:.3} likely={:.3} undecided={:.3} unlikely={:.3}",
            p.n, p.mean_prob, p.median_prob, p.likely, p.undecided, p.unlikely
        );
        for m in &p.marginals {
            let cells: Vec<String> = m.shares.iter().map(|(c, s)| format!("{c}:{s:.3}")).collect();
            let _ = writeln!(out, "  {}: {}", m.variable, cells.join(" "));
        }
    }
    out
}

/// Long-format marginals: segment, variable, category, share.
pub fn marginals_csv(profiles: &[SegmentProfile]) -> String {
    let mut out = String::from("segment,variable,category,share\n");
    for p in profiles {
        let _ = writeln!(out, "{},likelihood,likely,{:.6}", p.segment, p.likely);
        let _ = writeln!(out, "{},likelihood,undecided,{:.6}", p.segment, p.undecided);
        let _ = writeln!(out, "{},likelihood,unlikely,{:.6}", p.segment, p.unlikely);
        for m in &p.marginals {
            for (c, s) in &m.shares {
                let _ = writeln!(out, "{},{},{},{s:.6}", p.segment, m.variable, quote(c));
            }
        }
    }
    out
}

fn quote(s: &str) -> String {
    if s.contains([',', '"']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FilterOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

/// Attribute predicate such as `age<30` or `party=D`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Filter {
    pub column: String,
    pub op: FilterOp,
    pub value: String,
}

impl FromStr for Filter {
    type Err = LoretError;

    fn from_str(s: &str) -> Result<Self> {
        for (tok, op) in [
            ("<=", FilterOp::Le),
            (">=", FilterOp::Ge),
            ("!=", FilterOp::Ne),
            ("<", FilterOp::Lt),
            (">", FilterOp::Gt),
            ("=", FilterOp::Eq),
        ] {
            if let Some((c, v)) = s.split_once(tok) {
                let (c, v) = (c.trim(), v.trim());
                if c.is_empty() || v.is_empty() {
                    break;
                }
                return Ok(Filter {
                    column: c.to_string(),
                    op,
                    value: v.to_string(),
                });
            }
        }
        Err(LoretError::InvalidArgument(format!("cannot parse filter `{s}`")))
    }
}

impl Filter {
    /// Row predicate bound to `ds`. Categorical values compare by level code.
    fn bind<'a>(&self, ds: &'a Dataset) -> Result<impl Fn(usize) -> bool + 'a> {
        let col = ds
            .column_index(&self.column)
            .ok_or_else(|| LoretError::UnknownColumn(self.column.clone()))?;
        let target = match ds.spec(col).kind.levels() {
            Some(levels) => levels.iter().position(|l| *l == self.value).map(|p| p as f64),
            None => self.value.parse::<f64>().ok(),
        }
        .ok_or_else(|| {
            LoretError::InvalidArgument(format!("`{}` is not a value of `{}`", self.value, self.column))
        })?;
        let vals = ds.values(col);
        let op = self.op;
        Ok(move |r: usize| {
            let v = vals[r];
            match op {
                FilterOp::Lt => v < target,
                FilterOp::Le => v <= target,
                FilterOp::Gt => v > target,
                FilterOp::Ge => v >= target,
                FilterOp::Eq => v == target,
                FilterOp::Ne => v != target,
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetingConfig {
    pub lo: f64,
    pub hi: f64,
    pub filters: Vec<Filter>,
}

impl TargetingConfig {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(0.0 <= lo && lo < hi && hi <= 1.0) {
            return Err(LoretError::InvalidArgument(format!("targeting range [{lo}, {hi}] invalid")));
        }
        Ok(TargetingConfig {
            lo,
            hi,
            filters: Vec::new(),
        })
    }

    pub fn with_filter(mut self, f: Filter) -> Self {
        self.filters.push(f);
        self
    }

    pub fn in_range(&self, p: f64) -> bool {
        self.lo <= p && p <= self.hi
    }
}

impl Default for TargetingConfig {
    fn default() -> Self {
        TargetingConfig {
            lo: 0.3,
            hi: 0.7,
            filters: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetRecord {
    pub row: usize,
    pub row_id: String,
    pub prob: f64,
    pub segment: Option<usize>,
    pub in_range: bool,
    pub passes_filters: bool,
    pub targeted: bool,
}

/// Numeric ids compare numerically, others lexicographically.
fn cmp_ids(a: &str, b: &str) -> Ordering {
    match (a.parse::<u64>(), b.parse::<u64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y),
        _ => a.cmp(b),
    }
}

/// Ranks rows by descending probability (ties by row id) and flags those in
/// the targeting range; filters then narrow the targeted set.
pub fn targeting_list_from_scores(
    ds: &Dataset,
    probs: &[f64],
    segments: Option<&[usize]>,
    cfg: &TargetingConfig,
) -> Result<Vec<TargetRecord>> {
    if probs.len() != ds.n_rows() || segments.is_some_and(|s| s.len() != ds.n_rows()) {
        return Err(LoretError::Dimension("scores do not match rows".into()));
    }
    let preds = cfg.filters.iter().map(|f| f.bind(ds)).collect::<Result<Vec<_>>>()?;
    let ids = ds.row_ids();
    let mut out: Vec<TargetRecord> = (0..ds.n_rows())
        .map(|r| {
            let in_range = cfg.in_range(probs[r]);
            let passes_filters = preds.iter().all(|p| p(r));
            TargetRecord {
                row: r,
                row_id: ids[r].clone(),
                prob: probs[r],
                segment: segments.map(|s| s[r]),
                in_range,
                passes_filters,
                targeted: in_range && passes_filters,
            }
        })
        .collect();
    out.sort_by(|a, b| b.prob.total_cmp(&a.prob).then_with(|| cmp_ids(&a.row_id, &b.row_id)));
    Ok(out)
}

pub fn targeting_list(tree: &LoretTree, ds: &Dataset, cfg: &TargetingConfig) -> Result<Vec<TargetRecord>> {
    let (probs, segs) = tree.predict_with_segments(ds)?;
    targeting_list_from_scores(ds, &probs, Some(&segs), cfg)
}

/// CSV of a ranked list with the named descriptive columns appended.
pub fn targeting_csv(ds: &Dataset, list: &[TargetRecord], columns: &[String]) -> Result<String> {
    let cols = columns
        .iter()
        .map(|c| ds.column_index(c).ok_or_else(|| LoretError::UnknownColumn(c.clone())))
        .collect::<Result<Vec<_>>>()?;
    let mut out = String::from("rank,row_id,prob,segment,targeted,in_range");
    for c in columns {
        out.push(',');
        out.push_str(&quote(c));
    }
    out.push('\n');
    for (rank, t) in list.iter().enumerate() {
        let _ = write!(
            out,
            "{},{},{:.6},{},{},{}",
            rank + 1,
            quote(&t.row_id),
            t.prob,
            t.segment.map_or("NA".into(), |s| s.to_string()),
            u8::from(t.targeted),
            u8::from(t.in_range)
        );
        for &c in &cols {
            out.push(',');
            out.push_str(&quote(&ds.label(c, t.row)));
        }
        out.push('\n');
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadrantConfig {
    pub turnout_cutoff: f64,
    pub support_cutoff: f64,
}

impl QuadrantConfig {
    pub fn new(turnout_cutoff: f64, support_cutoff: f64) -> Result<Self> {
        for c in [turnout_cutoff, support_cutoff] {
            if !(0.0..=1.0).contains(&c) {
                return Err(LoretError::InvalidArgument(format!("cutoff {c} outside [0, 1]")));
            }
        }
        Ok(QuadrantConfig {
            turnout_cutoff,
            support_cutoff,
        })
    }
}

impl Default for QuadrantConfig {
    fn default() -> Self {
        QuadrantConfig {
            turnout_cutoff: 0.5,
            support_cutoff: 0.5,
        }
    }
}

/// 1: likely to vote and support; 2: vote, not support; 3: support, not
/// vote; 4: neither. "Likely" is at or above the cutoff.
pub fn quadrant_assign(p_turnout: f64, p_support: f64, cfg: &QuadrantConfig) -> u8 {
    match (p_turnout >= cfg.turnout_cutoff, p_support >= cfg.support_cutoff) {
        (true, true) => 1,
        (true, false) => 2,
        (false, true) => 3,
        (false, false) => 4,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{ColumnSpec, Role, Schema, SetTag};

    const PI: [f64; 10] = [1.00, 0.95, 0.93, 0.92, 0.88, 0.52, 0.44, 0.41, 0.18, 0.00];
    const AGE: [f64; 10] = [60.02, 44.54, 63.42, 51.30, 22.97, 27.03, 30.24, 25.64, 23.69, 47.39];

    fn table() -> Dataset {
        let schema = Schema::new(
            vec![
                ColumnSpec::new("id", ColumnKind::Numeric, Role::Identifier, SetTag::None),
                ColumnSpec::new("y", ColumnKind::Binary, Role::Response, SetTag::None),
                ColumnSpec::new("age", ColumnKind::Numeric, Role::Regressor, SetTag::Standard),
                ColumnSpec::new(
                    "party",
                    ColumnKind::Categorical(vec!["D".into(), "R".into()]),
                    Role::Partitioning,
                    SetTag::Extended,
                ),
            ],
            vec![],
        )
        .unwrap();
        let ids: Vec<f64> = (1..=10).map(f64::from).collect();
        let y = vec![1., 1., 1., 1., 1., 0., 1., 0., 0., 0.];
        let party = vec![0., 1., 0., 1., 0., 1., 0., 1., 0., 1.];
        let rid = (1..=10).map(|i| i.to_string()).collect();
        Dataset::from_columns(schema, vec![ids, y, AGE.to_vec(), party], rid).unwrap()
    }

    #[test]
    fn targeting_range_and_filter() {
        let ds = table();
        let cfg = TargetingConfig::default();
        let l = targeting_list_from_scores(&ds, &PI, None, &cfg).unwrap();
        let t: Vec<f64> = l.iter().filter(|r| r.targeted).map(|r| r.prob).collect();
        assert_eq!(t, vec![0.52, 0.44, 0.41]);
        let cfg = cfg.with_filter("age<30".parse().unwrap());
        let l = targeting_list_from_scores(&ds, &PI, None, &cfg).unwrap();
        let ages: Vec<f64> = l.iter().filter(|r| r.targeted).map(|r| AGE[r.row]).collect();
        assert_eq!(ages, vec![27.03, 25.64]);
        let all = TargetingConfig::new(0.0, 1.0).unwrap();
        assert!(targeting_list_from_scores(&ds, &PI, None, &all).unwrap().iter().all(|r| r.targeted));
        assert!(TargetingConfig::new(0.7, 0.3).is_err());
    }

    #[test]
    fn ties_break_by_row_id() {
        let ds = table();
        let l = targeting_list_from_scores(&ds, &[0.5; 10], None, &TargetingConfig::default()).unwrap();
        let ids: Vec<&str> = l.iter().map(|r| r.row_id.as_str()).collect();
        assert_eq!(ids, ["1", "2", "3", "4", "5", "6", "7", "8", "9", "10"]);
    }

    #[test]
    fn filter_parsing() {
        let f: Filter = "party = R".parse().unwrap();
        assert_eq!(f.op, FilterOp::Eq);
        assert_eq!(f.value, "R");
        assert_eq!("age<=30".parse::<Filter>().unwrap().op, FilterOp::Le);
        assert!("age".parse::<Filter>().is_err());
        assert!("<3".parse::<Filter>().is_err());
        let ds = table();
        let bad = TargetingConfig::default().with_filter("party=X".parse().unwrap());
        assert!(targeting_list_from_scores(&ds, &PI, None, &bad).is_err());
    }

    #[test]
    fn profiles_shares_and_bins() {
        let ds = table();
        let segs = [2, 2, 2, 2, 2, 3, 3, 3, 3, 3];
        let rules: BTreeMap<usize, String> = [(2, "a".to_string()), (3, "b".to_string())].into();
        let vars = [ProfileVariable::age("age"), ProfileVariable::categorical("party")];
        let p = build_profiles_from(&ds, &segs, &PI, &rules, &vars).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p[0].likely, 1.0);
        assert_eq!((p[1].undecided, p[1].unlikely), (0.6, 0.4));
        for s in &p {
            assert!((s.likely + s.undecided + s.unlikely - 1.0).abs() < 1e-12);
            for m in &s.marginals {
                assert!((m.shares.iter().map(|x| x.1).sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
        let age = &p[0].marginals[0].shares;
        assert_eq!(age[0].0, "<=26");
        assert_eq!(age[4], (">55".to_string(), 0.4));
        assert!(build_profiles_from(&ds, &segs, &PI, &rules, &[ProfileVariable::categorical("zz")]).is_err());
        assert!(marginals_csv(&p).starts_with("segment,variable,category,share\n2,likelihood,likely,1.000000"));
    }

    #[test]
    fn quadrants() {
        let c = QuadrantConfig::default();
        assert_eq!(quadrant_assign(0.9, 0.9, &c), 1);
        assert_eq!(quadrant_assign(0.9, 0.1, &c), 2);
        assert_eq!(quadrant_assign(0.1, 0.9, &c), 3);
        assert_eq!(quadrant_assign(0.1, 0.1, &c), 4);
        assert_eq!(quadrant_assign(0.5, 0.5, &c), 1);
        assert!(QuadrantConfig::new(1.5, 0.5).is_err());
    }

    #[test]
    fn likelihood_boundaries() {
        assert_eq!(Likelihood::of(0.7), Likelihood::Undecided);
        assert_eq!(Likelihood::of(0.7000001), Likelihood::Likely);
        assert_eq!(Likelihood::of(0.3), Likelihood::Unlikely);
        assert_eq!(Likelihood::of(0.0), Likelihood::Unlikely);
    }
}
