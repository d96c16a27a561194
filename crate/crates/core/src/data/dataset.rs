use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::schema::{ColumnKind, ColumnSpec, Role, Schema};
use crate::error::{LoretError, Result};

/// Immutable columnar table of validated records.
///
/// Every column is stored as `f64`: binary as 0/1, categorical and ordinal as
/// the 0-based level code, numeric as is. Identifier columns hold the row
/// index; their string values live in `row_ids`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    schema: Schema,
    specs: Vec<ColumnSpec>,
    columns: Vec<Vec<f64>>,
    row_ids: Vec<String>,
    /// Rows whose derivation hit a degenerate case (zero denominator), per target.
    derivation_flags: BTreeMap<String, Vec<usize>>,
}

impl Dataset {
    /// Builds a dataset from already-validated source columns (one per schema column).
    pub fn from_columns(schema: Schema, columns: Vec<Vec<f64>>, row_ids: Vec<String>) -> Result<Self> {
        if columns.len() != schema.columns.len() {
            return Err(LoretError::Dimension(format!(
                "{} columns for {} schema entries",
                columns.len(),
                schema.columns.len()
            )));
        }
        let n = row_ids.len();
        for (spec, col) in schema.columns.iter().zip(&columns) {
            if col.len() != n {
                return Err(LoretError::Dimension(format!(
                    "column `{}` has {} values, expected {n}",
                    spec.name,
                    col.len()
                )));
            }
            if spec.role != Role::Identifier {
                if let Some(bad) = col.iter().find(|v| !value_is_valid(&spec.kind, **v)) {
                    return Err(LoretError::InvalidArgument(format!(
                        "column `{}` holds invalid value {bad}",
                        spec.name
                    )));
                }
            }
        }
        Ok(Dataset {
            specs: schema.columns.clone(),
            schema,
            columns,
            row_ids,
            derivation_flags: BTreeMap::new(),
        })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn n_rows(&self) -> usize {
        self.row_ids.len()
    }

    pub fn n_columns(&self) -> usize {
        self.specs.len()
    }

    pub fn specs(&self) -> &[ColumnSpec] {
        &self.specs
    }

    pub fn spec(&self, col: usize) -> &ColumnSpec {
        &self.specs[col]
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.specs.iter().position(|c| c.name == name)
    }

    pub fn require_column(&self, name: &str) -> Result<usize> {
        self.column_index(name)
            .ok_or_else(|| LoretError::UnknownColumn(name.to_string()))
    }

    pub fn values(&self, col: usize) -> &[f64] {
        &self.columns[col]
    }

    pub fn value(&self, col: usize, row: usize) -> f64 {
        self.columns[col][row]
    }

    pub fn response_index(&self) -> usize {
        self.specs
            .iter()
            .position(|c| c.role == Role::Response)
            .expect("schema has a response")
    }

    pub fn response(&self) -> &[f64] {
        &self.columns[self.response_index()]
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn derivation_flags(&self) -> &BTreeMap<String, Vec<usize>> {
        &self.derivation_flags
    }

    /// Whether column `col` is the target of a squaring derivation.
    pub fn is_regressor_only(&self, col: usize) -> bool {
        let name = &self.specs[col].name;
        self.schema
            .derived
            .iter()
            .any(|d| &d.target == name && d.is_regressor_only())
    }

    /// Human-readable cell value: level label for categorical columns.
    pub fn label(&self, col: usize, row: usize) -> String {
        let spec = &self.specs[col];
        if spec.role == Role::Identifier {
            return self.row_ids[row].clone();
        }
        let v = self.columns[col][row];
        match &spec.kind {
            ColumnKind::Categorical(l) | ColumnKind::Ordinal(l) => l[v as usize].clone(),
            ColumnKind::Binary => format!("{}", v as u8),
            ColumnKind::Numeric => format!("{v}"),
        }
    }

    /// Row subset (duplicates allowed, order preserved).
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            specs: self.specs.clone(),
            columns: self
                .columns
                .iter()
                .map(|c| rows.iter().map(|&r| c[r]).collect())
                .collect(),
            row_ids: rows.iter().map(|&r| self.row_ids[r].clone()).collect(),
            derivation_flags: BTreeMap::new(),
        }
    }

    pub(crate) fn set_derived(&mut self, spec: ColumnSpec, values: Vec<f64>, flagged: Vec<usize>) {
        let name = spec.name.clone();
        match self.column_index(&name) {
            Some(i) => {
                self.specs[i] = spec;
                self.columns[i] = values;
            }
            None => {
                self.specs.push(spec);
                self.columns.push(values);
            }
        }
        if flagged.is_empty() {
            self.derivation_flags.remove(&name);
        } else {
            self.derivation_flags.insert(name, flagged);
        }
    }

    /// Writes the source columns (not derived ones) as CSV in schema order.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let n_src = self.schema.columns.len();
        w.write_record(self.specs[..n_src].iter().map(|s| s.name.as_str()))?;
        for row in 0..self.n_rows() {
            w.write_record((0..n_src).map(|c| self.label(c, row)))?;
        }
        w.flush().map_err(|e| LoretError::io("<csv writer>", e))?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = std::fs::File::create(path).map_err(|e| LoretError::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f))
    }
}

pub(crate) fn value_is_valid(kind: &ColumnKind, v: f64) -> bool {
    match kind {
        ColumnKind::Binary => v == 0.0 || v == 1.0,
        ColumnKind::Numeric => v.is_finite(),
        ColumnKind::Categorical(l) | ColumnKind::Ordinal(l) => {
            v >= 0.0 && v.fract() == 0.0 && (v as usize) < l.len()
        }
    }
}
