//! Columnar dataset, schema, CSV ingestion and derived variables.

mod dataset;
mod derive;
mod ingest;
mod model_schema;
mod schema;

pub use dataset::Dataset;
pub use derive::apply_derivations;
pub use ingest::{load_csv, read_csv, ColumnViolations, IngestReport};
pub use model_schema::{select_roles, ModelSchema, RoleViews, TermSet};
pub use schema::{ColumnKind, ColumnSpec, DerivationOp, DerivationRule, Role, Schema, SetTag};
