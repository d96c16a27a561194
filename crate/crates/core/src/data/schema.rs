//! Column schema with roles and set tags, plus the line-oriented schema file format.
//!
//! ```text
//! # comment
//! <name> <kind> <role> <set_tag> [levels...]
//! derive <target> <role> <set_tag> <op> <args...>
//! ```
//!
//! `kind` is one of `binary`, `numeric`, `categorical`, `ordinal`; the last two
//! take their level list as trailing tokens (ordinal levels in order). `role` is
//! one of `response`, `regressor`, `partitioning`, `identifier`, `ignored`, and
//! `set_tag` is `s`, `e` or `none`. Derivation ops are
//! `count_true a,b,c`, `count_true_since a,b,c anchor`,
//! `eligible_since a,b,c anchor`, `ratio numerator denominator` and
//! `square source`. Derived columns are always numeric.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{LoretError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColumnKind {
    Binary,
    Numeric,
    Categorical(Vec<String>),
    Ordinal(Vec<String>),
}

impl ColumnKind {
    pub fn levels(&self) -> Option<&[String]> {
        match self {
            ColumnKind::Categorical(l) | ColumnKind::Ordinal(l) => Some(l),
            _ => None,
        }
    }

    pub fn is_ordered(&self) -> bool {
        matches!(self, ColumnKind::Numeric | ColumnKind::Ordinal(_))
    }

    fn keyword(&self) -> &'static str {
        match self {
            ColumnKind::Binary => "binary",
            ColumnKind::Numeric => "numeric",
            ColumnKind::Categorical(_) => "categorical",
            ColumnKind::Ordinal(_) => "ordinal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Role {
    Response,
    /// Usable as a regressor and as a partitioning variable.
    Regressor,
    /// Usable only as a partitioning variable.
    Partitioning,
    Identifier,
    Ignored,
}

impl Role {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "response" => Role::Response,
            "regressor" => Role::Regressor,
            "partitioning" => Role::Partitioning,
            "identifier" => Role::Identifier,
            "ignored" => Role::Ignored,
            _ => return None,
        })
    }

    fn keyword(self) -> &'static str {
        match self {
            Role::Response => "response",
            Role::Regressor => "regressor",
            Role::Partitioning => "partitioning",
            Role::Identifier => "identifier",
            Role::Ignored => "ignored",
        }
    }

    pub fn is_predictor(self) -> bool {
        matches!(self, Role::Regressor | Role::Partitioning)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SetTag {
    Standard,
    Extended,
    None,
}

impl SetTag {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "s" => SetTag::Standard,
            "e" => SetTag::Extended,
            "none" => SetTag::None,
            _ => return None,
        })
    }

    fn keyword(self) -> &'static str {
        match self {
            SetTag::Standard => "s",
            SetTag::Extended => "e",
            SetTag::None => "none",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
    pub role: Role,
    pub set_tag: SetTag,
}

impl ColumnSpec {
    pub fn new(name: impl Into<String>, kind: ColumnKind, role: Role, set_tag: SetTag) -> Self {
        ColumnSpec {
            name: name.into(),
            kind,
            role,
            set_tag,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum DerivationOp {
    CountTrue { sources: Vec<String> },
    /// Counts true sources from position `anchor` (0-based, read per row) onwards.
    CountTrueSince { sources: Vec<String>, anchor: String },
    /// Number of sources from position `anchor` onwards.
    EligibleSince { sources: Vec<String>, anchor: String },
    Ratio { numerator: String, denominator: String },
    Square { source: String },
}

impl DerivationOp {
    pub fn inputs(&self) -> Vec<&str> {
        match self {
            DerivationOp::CountTrue { sources } => sources.iter().map(String::as_str).collect(),
            DerivationOp::CountTrueSince { sources, anchor }
            | DerivationOp::EligibleSince { sources, anchor } => sources
                .iter()
                .map(String::as_str)
                .chain(std::iter::once(anchor.as_str()))
                .collect(),
            DerivationOp::Ratio {
                numerator,
                denominator,
            } => vec![numerator, denominator],
            DerivationOp::Square { source } => vec![source],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DerivationRule {
    pub target: String,
    pub role: Role,
    pub set_tag: SetTag,
    pub op: DerivationOp,
}

impl DerivationRule {
    pub fn spec(&self) -> ColumnSpec {
        ColumnSpec::new(self.target.clone(), ColumnKind::Numeric, self.role, self.set_tag)
    }

    /// Squared terms only ever enter the regressor design.
    pub fn is_regressor_only(&self) -> bool {
        matches!(self.op, DerivationOp::Square { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Schema {
    pub columns: Vec<ColumnSpec>,
    pub derived: Vec<DerivationRule>,
}

impl Schema {
    pub fn new(columns: Vec<ColumnSpec>, derived: Vec<DerivationRule>) -> Result<Self> {
        let s = Schema { columns, derived };
        s.validate()?;
        Ok(s)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| LoretError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut columns = Vec::new();
        let mut derived = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            let err = |m: &str| LoretError::SchemaParse {
                line: line_no,
                message: m.to_string(),
            };
            if toks[0] == "derive" {
                if toks.len() < 6 {
                    return Err(err("expected `derive <target> <role> <set_tag> <op> <args...>`"));
                }
                let role = Role::parse(toks[2]).ok_or_else(|| err("unknown role"))?;
                let set_tag = SetTag::parse(toks[3]).ok_or_else(|| err("unknown set tag"))?;
                let list = |s: &str| s.split(',').map(str::to_string).collect::<Vec<_>>();
                let op = match (toks[4], &toks[5..]) {
                    ("count_true", [src]) => DerivationOp::CountTrue { sources: list(src) },
                    ("count_true_since", [src, anchor]) => DerivationOp::CountTrueSince {
                        sources: list(src),
                        anchor: anchor.to_string(),
                    },
                    ("eligible_since", [src, anchor]) => DerivationOp::EligibleSince {
                        sources: list(src),
                        anchor: anchor.to_string(),
                    },
                    ("ratio", [num, den]) => DerivationOp::Ratio {
                        numerator: num.to_string(),
                        denominator: den.to_string(),
                    },
                    ("square", [src]) => DerivationOp::Square {
                        source: src.to_string(),
                    },
                    _ => return Err(err("unknown derivation op or wrong argument count")),
                };
                derived.push(DerivationRule {
                    target: toks[1].to_string(),
                    role,
                    set_tag,
                    op,
                });
                continue;
            }
            if toks.len() < 4 {
                return Err(err("expected `<name> <kind> <role> <set_tag> [levels...]`"));
            }
            let levels: Vec<String> = toks[4..].iter().map(|s| s.to_string()).collect();
            let kind = match toks[1] {
                "binary" => ColumnKind::Binary,
                "numeric" => ColumnKind::Numeric,
                "categorical" => ColumnKind::Categorical(levels.clone()),
                "ordinal" => ColumnKind::Ordinal(levels.clone()),
                _ => return Err(err("unknown kind")),
            };
            if kind.levels().is_none() && !levels.is_empty() {
                return Err(err("levels given for a non-categorical column"));
            }
            let role = Role::parse(toks[2]).ok_or_else(|| err("unknown role"))?;
            let set_tag = SetTag::parse(toks[3]).ok_or_else(|| err("unknown set tag"))?;
            columns.push(ColumnSpec::new(toks[0], kind, role, set_tag));
        }
        Schema::new(columns, derived)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(LoretError::Schema(m));
        let mut names = BTreeSet::new();
        for c in &self.columns {
            if c.name == "derive" {
                return bad("`derive` is reserved".into());
            }
            if !names.insert(c.name.as_str()) {
                return bad(format!("duplicate column `{}`", c.name));
            }
            if let Some(levels) = c.kind.levels() {
                if levels.is_empty() {
                    return bad(format!("`{}` has no levels", c.name));
                }
                let uniq: BTreeSet<_> = levels.iter().collect();
                if uniq.len() != levels.len() {
                    return bad(format!("`{}` has duplicate levels", c.name));
                }
            }
            if c.role.is_predictor() && c.set_tag == SetTag::None {
                return bad(format!("predictor `{}` needs set tag s or e", c.name));
            }
        }
        let responses: Vec<_> = self
            .columns
            .iter()
            .filter(|c| c.role == Role::Response)
            .collect();
        match responses.as_slice() {
            [] => return Err(LoretError::NoResponse),
            [r] if r.kind != ColumnKind::Binary => {
                return bad(format!("response `{}` must be binary", r.name))
            }
            [_] => {}
            _ => return bad("more than one response column".into()),
        }
        if self
            .columns
            .iter()
            .filter(|c| c.role == Role::Identifier)
            .count()
            > 1
        {
            return bad("more than one identifier column".into());
        }
        let sources: BTreeSet<&str> = self.columns.iter().map(|c| c.name.as_str()).collect();
        let mut known = sources.clone();
        let mut targets = BTreeSet::new();
        for d in &self.derived {
            if sources.contains(d.target.as_str()) {
                return bad(format!("derived `{}` collides with a source column", d.target));
            }
            if !targets.insert(d.target.as_str()) {
                return bad(format!("derived `{}` declared twice", d.target));
            }
            if matches!(d.role, Role::Response | Role::Identifier) {
                return bad(format!("derived `{}` cannot be {}", d.target, d.role.keyword()));
            }
            if d.role.is_predictor() && d.set_tag == SetTag::None {
                return bad(format!("predictor `{}` needs set tag s or e", d.target));
            }
            for input in d.op.inputs() {
                if !known.contains(input) {
                    return bad(format!("derived `{}` refers to unknown `{input}`", d.target));
                }
            }
            known.insert(d.target.as_str());
        }
        Ok(())
    }

    pub fn response(&self) -> &ColumnSpec {
        self.columns
            .iter()
            .find(|c| c.role == Role::Response)
            .expect("validated schema has a response")
    }

    pub fn column(&self, name: &str) -> Option<&ColumnSpec> {
        self.columns.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.columns {
            write!(
                f,
                "{} {} {} {}",
                c.name,
                c.kind.keyword(),
                c.role.keyword(),
                c.set_tag.keyword()
            )?;
            if let Some(levels) = c.kind.levels() {
                for l in levels {
                    write!(f, " {l}")?;
                }
            }
            writeln!(f)?;
        }
        for d in &self.derived {
            write!(
                f,
                "derive {} {} {} ",
                d.target,
                d.role.keyword(),
                d.set_tag.keyword()
            )?;
            match &d.op {
                DerivationOp::CountTrue { sources } => writeln!(f, "count_true {}", sources.join(","))?,
                DerivationOp::CountTrueSince { sources, anchor } => {
                    writeln!(f, "count_true_since {} {anchor}", sources.join(","))?
                }
                DerivationOp::EligibleSince { sources, anchor } => {
                    writeln!(f, "eligible_since {} {anchor}", sources.join(","))?
                }
                DerivationOp::Ratio {
                    numerator,
                    denominator,
                } => writeln!(f, "ratio {numerator} {denominator}")?,
                DerivationOp::Square { source } => writeln!(f, "square {source}")?,
            }
        }
        Ok(())
    }
}
