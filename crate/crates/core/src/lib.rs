//! Logistic regression trees: data model, node logits, classification and
//! model-based trees, benchmarking, segment profiles and synthetic data.

pub mod bench;
pub mod data;
pub mod error;
pub mod glm;
pub mod mob;
pub mod par;
pub mod synth;
pub mod targeting;
pub mod tree;

mod serde_nan;

pub use error::{LoretError, Result};
