use serde::{Deserialize, Serialize};

use crate::data::{ColumnKind, Dataset};
use crate::error::{LoretError, Result};

/// A term's source column and, for indicators, its level index.
type Resolved = Option<(usize, Option<usize>)>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Term {
    Intercept,
    /// Numeric or binary column entering as is.
    Value { column: String },
    /// Indicator for one non-reference level of a categorical/ordinal column.
    Indicator { column: String, level: usize, label: String },
}

/// Mapping from dataset columns to design-matrix columns.
///
/// Categorical and ordinal columns use reference-level indicator coding with
/// the first declared level as reference, so the same schema always yields
/// the same column order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignSpec {
    terms: Vec<Term>,
}

impl DesignSpec {
    pub fn intercept_only() -> Self {
        DesignSpec {
            terms: vec![Term::Intercept],
        }
    }

    pub fn new(ds: &Dataset, columns: &[usize]) -> Self {
        let mut terms = vec![Term::Intercept];
        for &c in columns {
            let spec = ds.spec(c);
            match &spec.kind {
                ColumnKind::Binary | ColumnKind::Numeric => terms.push(Term::Value {
                    column: spec.name.clone(),
                }),
                ColumnKind::Categorical(levels) | ColumnKind::Ordinal(levels) => {
                    for (i, l) in levels.iter().enumerate().skip(1) {
                        terms.push(Term::Indicator {
                            column: spec.name.clone(),
                            level: i,
                            label: l.clone(),
                        });
                    }
                }
            }
        }
        DesignSpec { terms }
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.terms
            .iter()
            .map(|t| match t {
                Term::Intercept => "(Intercept)".to_string(),
                Term::Value { column } => column.clone(),
                Term::Indicator { column, label, .. } => format!("{column}={label}"),
            })
            .collect()
    }

    fn resolve(&self, ds: &Dataset) -> Result<Vec<Resolved>> {
        self.terms
            .iter()
            .map(|t| match t {
                Term::Intercept => Ok(None),
                Term::Value { column } => Ok(Some((ds.require_column(column)?, None))),
                Term::Indicator { column, level, .. } => {
                    let c = ds.require_column(column)?;
                    let n_levels = ds.spec(c).kind.levels().map_or(0, <[String]>::len);
                    if *level >= n_levels {
                        return Err(LoretError::Dimension(format!(
                            "level {level} of `{column}` not in schema"
                        )));
                    }
                    Ok(Some((c, Some(*level))))
                }
            })
            .collect()
    }

    /// Materializes the design for every row of `ds`.
    pub fn build(&self, ds: &Dataset) -> Result<DesignMatrix> {
        let cols = self.resolve(ds)?;
        let n = ds.n_rows();
        let k = self.terms.len();
        let mut data = vec![0.0; n * k];
        for (j, c) in cols.iter().enumerate() {
            match c {
                None => (0..n).for_each(|r| data[r * k + j] = 1.0),
                Some((col, None)) => {
                    for (r, v) in ds.values(*col).iter().enumerate() {
                        data[r * k + j] = *v;
                    }
                }
                Some((col, Some(level))) => {
                    for (r, v) in ds.values(*col).iter().enumerate() {
                        data[r * k + j] = if *v as usize == *level { 1.0 } else { 0.0 };
                    }
                }
            }
        }
        Ok(DesignMatrix { n, k, data })
    }
}

/// Dense row-major design matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    n: usize,
    k: usize,
    data: Vec<f64>,
}

impl DesignMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != k) {
            return Err(LoretError::Dimension("ragged design rows".into()));
        }
        Ok(DesignMatrix {
            n: rows.len(),
            k,
            data: rows.concat(),
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n
    }

    pub fn n_cols(&self) -> usize {
        self.k
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.k..(i + 1) * self.k]
    }
}
