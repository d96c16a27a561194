use super::dataset::Dataset;
use super::schema::{ColumnKind, DerivationOp};
use crate::error::{LoretError, Result};

/// Appends (or overwrites) every derived column declared in the schema.
///
/// Sources are read from the current dataset, so applying twice gives the
/// same result as applying once.
pub fn apply_derivations(ds: &Dataset) -> Result<Dataset> {
    let mut out = ds.clone();
    for rule in &ds.schema().derived {
        let err = |m: String| LoretError::Derivation {
            target: rule.target.clone(),
            message: m,
        };
        let col = |name: &str, allowed: &[&str]| -> Result<usize> {
            let i = out
                .column_index(name)
                .ok_or_else(|| err(format!("unknown source `{name}`")))?;
            let kind = match out.spec(i).kind {
                ColumnKind::Binary => "binary",
                ColumnKind::Numeric => "numeric",
                ColumnKind::Categorical(_) => "categorical",
                ColumnKind::Ordinal(_) => "ordinal",
            };
            if !allowed.contains(&kind) {
                return Err(err(format!("source `{name}` is {kind}, expected {}", allowed.join("/"))));
            }
            Ok(i)
        };
        let n = out.n_rows();
        let mut flagged = Vec::new();
        let values: Vec<f64> = match &rule.op {
            DerivationOp::CountTrue { sources } => {
                let idx = sources
                    .iter()
                    .map(|s| col(s, &["binary"]))
                    .collect::<Result<Vec<_>>>()?;
                (0..n)
                    .map(|r| idx.iter().map(|&c| out.value(c, r)).sum())
                    .collect()
            }
            DerivationOp::CountTrueSince { sources, anchor }
            | DerivationOp::EligibleSince { sources, anchor } => {
                let idx = sources
                    .iter()
                    .map(|s| col(s, &["binary"]))
                    .collect::<Result<Vec<_>>>()?;
                let a = col(anchor, &["numeric"])?;
                let count_true = matches!(rule.op, DerivationOp::CountTrueSince { .. });
                (0..n)
                    .map(|r| {
                        let start = (out.value(a, r).max(0.0).floor() as usize).min(idx.len());
                        if count_true {
                            idx[start..].iter().map(|&c| out.value(c, r)).sum()
                        } else {
                            (idx.len() - start) as f64
                        }
                    })
                    .collect()
            }
            DerivationOp::Ratio {
                numerator,
                denominator,
            } => {
                let a = col(numerator, &["numeric", "binary"])?;
                let b = col(denominator, &["numeric", "binary"])?;
                (0..n)
                    .map(|r| {
                        let d = out.value(b, r);
                        if d == 0.0 {
                            flagged.push(r);
                            0.0
                        } else {
                            out.value(a, r) / d
                        }
                    })
                    .collect()
            }
            DerivationOp::Square { source } => {
                let a = col(source, &["numeric"])?;
                out.values(a).iter().map(|v| v * v).collect()
            }
        };
        out.set_derived(rule.spec(), values, flagged);
    }
    Ok(out)
}
