//! Text renderings of fitted trees.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{describe_condition, fmt_threshold, LoretTree, NodeKind, Side, SplitKind, SplitRule};
use crate::data::{ColumnKind, DerivationOp, Schema};
use crate::glm::{LogitModel, Separation, Term, CONSTANT_RESPONSE_INTERCEPT};

fn kind_of(schema: &Schema, name: &str) -> ColumnKind {
    schema
        .column(name)
        .map(|c| c.kind.clone())
        .unwrap_or(ColumnKind::Numeric)
}

/// One line per node, indented by depth, with the condition leading to it.
pub fn rule_dump(tree: &LoretTree, schema: &Schema) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {} {} {}", tree.algorithm.label(), tree.model_schema, tree.fit_meta);
    let mut cond = vec![String::from("root"); tree.nodes.len()];
    for n in &tree.nodes {
        if let NodeKind::Internal { rule, left, right, .. } = &n.kind {
            let kind = kind_of(schema, &rule.variable);
            cond[*left] = describe_condition(rule, Side::Left, &kind);
            cond[*right] = describe_condition(rule, Side::Right, &kind);
        }
    }
    for (i, n) in tree.nodes.iter().enumerate() {
        let indent = "  ".repeat(n.depth);
        let tail = match &n.kind {
            NodeKind::Terminal { reason, .. } => format!(" *segment* ({reason})"),
            NodeKind::Internal { evidence, .. } => match evidence.adjusted_p {
                Some(p) => format!(" stat={:.4} p={:.3e}", evidence.statistic, p),
                None => format!(" stat={:.6}", evidence.statistic),
            },
        };
        let _ = writeln!(
            out,
            "{indent}[{}] {} n={} prevalence={:.4}{tail}",
            n.id, cond[i], n.n, n.prevalence
        );
    }
    out
}

/// Condition on one variable accumulated along a root-to-node path.
enum Constraint {
    Levels(Vec<bool>),
    Interval(f64, f64),
}

fn constrain(c: &mut Constraint, rule: &SplitRule, side: Side) {
    match c {
        Constraint::Levels(allowed) => {
            for (code, ok) in allowed.iter_mut().enumerate() {
                *ok &= rule.side(code as f64) == side;
            }
        }
        Constraint::Interval(lo, hi) => {
            if let SplitKind::Threshold(t) = rule.kind {
                match side {
                    Side::Left => *hi = hi.min(t),
                    Side::Right => *lo = lo.max(t),
                }
            }
        }
    }
}

fn render(c: &Constraint, levels: Option<&[String]>) -> String {
    match c {
        Constraint::Levels(allowed) => {
            let names: Vec<&str> = allowed
                .iter()
                .enumerate()
                .filter(|(_, ok)| **ok)
                .map(|(i, _)| levels.map_or("?", |l| l[i].as_str()))
                .collect();
            names.join(",")
        }
        Constraint::Interval(lo, hi) => match (lo.is_finite(), hi.is_finite()) {
            (false, true) => format!("<= {}", fmt_threshold(*hi)),
            (true, false) => format!("> {}", fmt_threshold(*lo)),
            (true, true) => format!("({}, {}]", fmt_threshold(*lo), fmt_threshold(*hi)),
            (false, false) => "-".into(),
        },
    }
}

/// Whether the model is the constant-response surrogate.
fn is_surrogate(m: &LogitModel) -> bool {
    m.separation == Separation::Complete
        && m.coefficients[0].abs() == CONSTANT_RESPONSE_INTERCEPT
        && m.coefficients[1..].iter().all(|&b| b == 0.0)
}

/// Segment table: one block of two lines per terminal node. The first line
/// holds the segment id, the partitioning conditions defining it and the
/// coefficient estimates; the second the standard errors in parentheses.
/// Coefficients of squared derived terms are reported multiplied by 100.
pub fn terminal_table(tree: &LoretTree, schema: &Schema) -> String {
    let mut vars: Vec<String> = Vec::new();
    for n in &tree.nodes {
        if let NodeKind::Internal { rule, .. } = &n.kind {
            if !vars.contains(&rule.variable) {
                vars.push(rule.variable.clone());
            }
        }
    }
    let squared: Vec<&str> = schema
        .derived
        .iter()
        .filter(|d| matches!(d.op, DerivationOp::Square { .. }))
        .map(|d| d.target.as_str())
        .collect();
    let scale: Vec<f64> = tree
        .design
        .terms()
        .iter()
        .map(|t| match t {
            Term::Value { column } if squared.contains(&column.as_str()) => 100.0,
            _ => 1.0,
        })
        .collect();
    let names: Vec<String> = tree
        .design
        .names()
        .into_iter()
        .zip(&scale)
        .map(|(n, &s)| if s != 1.0 { format!("{n}*100") } else { n })
        .collect();

    let mut out = String::new();
    let mut header = vec!["segment".to_string(), "n".to_string(), "prevalence".to_string()];
    header.extend(vars.iter().cloned());
    header.extend(names);
    let _ = writeln!(out, "{}", header.join("\t"));

    for (idx, node) in tree.nodes.iter().enumerate() {
        let Some(model) = node.model() else { continue };
        let mut cons: BTreeMap<&str, Constraint> = BTreeMap::new();
        for (rule, side) in tree.path(idx) {
            let kind = kind_of(schema, &rule.variable);
            let c = cons.entry(rule.variable.as_str()).or_insert_with(|| match kind.levels() {
                Some(l) => Constraint::Levels(vec![true; l.len()]),
                None => Constraint::Interval(f64::NEG_INFINITY, f64::INFINITY),
            });
            constrain(c, rule, side);
        }
        let mut est = vec![node.id.to_string(), node.n.to_string(), format!("{:.4}", node.prevalence)];
        let mut se = vec![String::new(); 3];
        for v in &vars {
            let kind = kind_of(schema, v);
            est.push(cons.get(v.as_str()).map_or("-".into(), |c| render(c, kind.levels())));
            se.push(String::new());
        }
        let surrogate = is_surrogate(model);
        let separated = model.separation != Separation::None;
        for (j, (&b, &s)) in model.coefficients.iter().zip(&model.std_errors).enumerate() {
            if surrogate && j == 0 {
                est.push(if b > 0.0 { "+Inf".into() } else { "-Inf".into() });
            } else {
                est.push(format!("{:.3}", b * scale[j]));
            }
            if separated || !s.is_finite() {
                se.push("(--.--)".into());
            } else {
                se.push(format!("({:.3})", s * scale[j]));
            }
        }
        let _ = writeln!(out, "{}", est.join("\t"));
        let _ = writeln!(out, "{}", se.join("\t"));
    }
    out
}
