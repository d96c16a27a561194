//! The `y ~ x | z` model notation and the role views it selects.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::schema::{Role, SetTag};
use crate::error::{LoretError, Result};

/// A set of variable groups; empty means the constant term `1` only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TermSet {
    pub standard: bool,
    pub extended: bool,
}

impl TermSet {
    pub const ONE: TermSet = TermSet {
        standard: false,
        extended: false,
    };

    pub fn is_empty(self) -> bool {
        !self.standard && !self.extended
    }

    pub fn contains(self, tag: SetTag) -> bool {
        match tag {
            SetTag::Standard => self.standard,
            SetTag::Extended => self.extended,
            SetTag::None => false,
        }
    }

    fn overlaps(self, other: TermSet) -> bool {
        (self.standard && other.standard) || (self.extended && other.extended)
    }
}

impl fmt::Display for TermSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.standard, self.extended) {
            (false, false) => write!(f, "1"),
            (true, false) => write!(f, "s"),
            (false, true) => write!(f, "e"),
            (true, true) => write!(f, "s+e"),
        }
    }
}

impl FromStr for TermSet {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let mut t = TermSet::default();
        let mut saw_one = false;
        for term in s.split('+').map(str::trim) {
            match term {
                "1" => saw_one = true,
                "s" if !t.standard => t.standard = true,
                "e" if !t.extended => t.extended = true,
                "s" | "e" => return Err(format!("term `{term}` repeated")),
                "" => return Err("empty term".into()),
                other => return Err(format!("unknown term `{other}` (expected 1, s or e)")),
            }
        }
        if saw_one && !t.is_empty() {
            return Err("`1` cannot be combined with other terms".into());
        }
        Ok(t)
    }
}

/// Parsed `y ~ <regressors> | <partitioning>` model schema.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSchema {
    pub response: String,
    pub regressors: TermSet,
    pub partitioning: TermSet,
}

impl ModelSchema {
    pub fn new(regressors: TermSet, partitioning: TermSet) -> Self {
        ModelSchema {
            response: "y".into(),
            regressors,
            partitioning,
        }
    }
}

impl fmt::Display for ModelSchema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}~{}|{}", self.response, self.regressors, self.partitioning)
    }
}

impl FromStr for ModelSchema {
    type Err = LoretError;

    fn from_str(s: &str) -> Result<Self> {
        let err = |m: String| LoretError::ModelSchema {
            input: s.to_string(),
            message: m,
        };
        let (lhs, rhs) = s.split_once('~').ok_or_else(|| err("missing `~`".into()))?;
        let response = lhs.trim();
        if response.is_empty() || !response.chars().all(|c| c.is_alphanumeric() || c == '_') {
            return Err(err("response must be an identifier".into()));
        }
        let (x, z) = rhs.split_once('|').ok_or_else(|| err("missing `|`".into()))?;
        let regressors: TermSet = x.trim().parse().map_err(err)?;
        let partitioning: TermSet = z.trim().parse().map_err(err)?;
        if regressors.overlaps(partitioning) {
            return Err(err("a variable group cannot be both regressor and partitioning".into()));
        }
        Ok(ModelSchema {
            response: response.to_string(),
            regressors,
            partitioning,
        })
    }
}

/// Column indices selected by a model schema.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoleViews {
    pub response: usize,
    /// Regressor columns; the intercept is implicit.
    pub x: Vec<usize>,
    pub z: Vec<usize>,
}

pub fn select_roles(ds: &Dataset, spec: &ModelSchema) -> Result<RoleViews> {
    let response = ds.response_index();
    let resp_name = &ds.spec(response).name;
    if spec.response != "y" && &spec.response != resp_name {
        return Err(LoretError::ModelSchema {
            input: spec.to_string(),
            message: format!("response `{}` is not `{resp_name}`", spec.response),
        });
    }
    if ds.n_rows() == 0 {
        return Err(LoretError::EmptyData);
    }
    let mut x = Vec::new();
    let mut z = Vec::new();
    for (i, c) in ds.specs().iter().enumerate() {
        if spec.regressors.contains(c.set_tag) && c.role == Role::Regressor {
            x.push(i);
        }
        if spec.partitioning.contains(c.set_tag) && c.role.is_predictor() && !ds.is_regressor_only(i) {
            z.push(i);
        }
    }
    let empty = |which: &str, t: TermSet| LoretError::ModelSchema {
        input: spec.to_string(),
        message: format!("{which} set `{t}` selects no columns"),
    };
    if !spec.regressors.is_empty() && x.is_empty() {
        return Err(empty("regressor", spec.regressors));
    }
    if !spec.partitioning.is_empty() && z.is_empty() {
        return Err(empty("partitioning", spec.partitioning));
    }
    Ok(RoleViews { response, x, z })
}
