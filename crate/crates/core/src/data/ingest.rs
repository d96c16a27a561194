use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::path::Path;

use super::dataset::Dataset;
use super::schema::{ColumnKind, Role, Schema};
use crate::error::{LoretError, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ColumnViolations {
    pub missing: usize,
    pub invalid: usize,
}

/// Summary of what ingestion kept and dropped.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestReport {
    pub rows_read: usize,
    pub rows_kept: usize,
    pub dropped: usize,
    pub violations: BTreeMap<String, ColumnViolations>,
}

impl fmt::Display for IngestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "rows_read\t{}", self.rows_read)?;
        writeln!(f, "rows_kept\t{}", self.rows_kept)?;
        writeln!(f, "rows_dropped\t{}", self.dropped)?;
        for (name, v) in &self.violations {
            if v.missing + v.invalid > 0 {
                writeln!(f, "column\t{name}\tmissing={}\tinvalid={}", v.missing, v.invalid)?;
            }
        }
        Ok(())
    }
}

pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<(Dataset, IngestReport)> {
    let path = path.as_ref();
    let f = std::fs::File::open(path).map_err(|e| LoretError::io(path, e))?;
    read_csv(std::io::BufReader::new(f), schema)
}

enum Cell {
    Ok(f64),
    Missing,
    Invalid,
}

fn parse_cell(kind: &ColumnKind, raw: &str) -> Cell {
    let s = raw.trim();
    if s.is_empty() || s == "NA" {
        return Cell::Missing;
    }
    match kind {
        ColumnKind::Binary => match s {
            "0" => Cell::Ok(0.0),
            "1" => Cell::Ok(1.0),
            _ => Cell::Invalid,
        },
        ColumnKind::Numeric => match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Cell::Ok(v),
            _ => Cell::Invalid,
        },
        ColumnKind::Categorical(levels) | ColumnKind::Ordinal(levels) => {
            match levels.iter().position(|l| l == s) {
                Some(i) => Cell::Ok(i as f64),
                None => Cell::Invalid,
            }
        }
    }
}

/// Reads a headered, comma-separated file; rows with any missing or invalid
/// cell in a schema column are dropped and counted.
pub fn read_csv<R: Read>(reader: R, schema: &Schema) -> Result<(Dataset, IngestReport)> {
    schema.validate()?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr.headers()?.clone();
    let mut positions = Vec::with_capacity(schema.columns.len());
    for c in &schema.columns {
        match header.iter().position(|h| h.trim() == c.name) {
            Some(p) => positions.push(p),
            None if c.role == Role::Response => {
                return Err(LoretError::MissingColumn(format!("{} (response)", c.name)))
            }
            None => return Err(LoretError::MissingColumn(c.name.clone())),
        }
    }

    let mut report = IngestReport::default();
    let mut counts = vec![ColumnViolations::default(); schema.columns.len()];
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); schema.columns.len()];
    let mut row_ids = Vec::new();
    let id_col = schema.columns.iter().position(|c| c.role == Role::Identifier);
    let mut cells = vec![0.0; schema.columns.len()];

    for record in rdr.records() {
        let record = record?;
        report.rows_read += 1;
        let mut ok = true;
        for (j, (spec, &p)) in schema.columns.iter().zip(&positions).enumerate() {
            let raw = record.get(p).unwrap_or("");
            if spec.role == Role::Identifier {
                if raw.trim().is_empty() {
                    counts[j].missing += 1;
                    ok = false;
                }
                continue;
            }
            match parse_cell(&spec.kind, raw) {
                Cell::Ok(v) => cells[j] = v,
                Cell::Missing => {
                    counts[j].missing += 1;
                    ok = false;
                }
                Cell::Invalid => {
                    counts[j].invalid += 1;
                    ok = false;
                }
            }
        }
        if !ok {
            report.dropped += 1;
            continue;
        }
        let row = row_ids.len();
        let id = match id_col {
            Some(j) => record.get(positions[j]).unwrap_or("").trim().to_string(),
            None => (report.rows_read).to_string(),
        };
        row_ids.push(id);
        for (j, col) in columns.iter_mut().enumerate() {
            col.push(if Some(j) == id_col { row as f64 } else { cells[j] });
        }
    }
    report.rows_kept = row_ids.len();
    report.violations = schema
        .columns
        .iter()
        .zip(counts)
        .map(|(c, v)| (c.name.clone(), v))
        .collect();
    let ds = Dataset::from_columns(schema.clone(), columns, row_ids)?;
    Ok((ds, report))
}
