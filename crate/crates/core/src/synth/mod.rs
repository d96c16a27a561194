//! Synthetic voter files drawn from a planted segmented logistic model.

mod preset;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Normal};
use serde::{Deserialize, Serialize};

pub use preset::{null_config, table4_config, HISTORY, REGRESSORS};

use crate::data::{apply_derivations, ColumnKind, ColumnSpec, Dataset, DerivationRule, Role, Schema, SetTag};
use crate::error::{LoretError, Result};
use crate::glm::logistic;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum VarDist {
    /// Level index drawn with the given probabilities.
    Categorical(Vec<f64>),
    Bernoulli(f64),
    Beta { a: f64, b: f64 },
    /// Normal draw clamped to `[lo, hi]`.
    Normal { mean: f64, sd: f64, lo: f64, hi: f64 },
    Uniform { lo: f64, hi: f64 },
    Mixture(Vec<(f64, VarDist)>),
}

impl VarDist {
    // Negated comparisons so NaN parameters are rejected too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    fn validate(&self) -> std::result::Result<(), String> {
        let probs_ok = |p: &[f64]| {
            p.iter().all(|&x| (0.0..=1.0).contains(&x)) && (p.iter().sum::<f64>() - 1.0).abs() < 1e-9
        };
        match self {
            VarDist::Categorical(p) if !probs_ok(p) => Err("category probabilities must sum to 1".into()),
            VarDist::Bernoulli(p) if !(0.0..=1.0).contains(p) => Err(format!("rate {p} outside [0, 1]")),
            VarDist::Beta { a, b } if !(*a > 0.0 && *b > 0.0) => Err("beta shapes must be positive".into()),
            VarDist::Normal { sd, lo, hi, .. } if !(*sd > 0.0 && lo <= hi) => Err("bad normal parameters".into()),
            VarDist::Uniform { lo, hi } if !(lo < hi) => Err("uniform needs lo < hi".into()),
            VarDist::Mixture(parts) => {
                let w: Vec<f64> = parts.iter().map(|p| p.0).collect();
                if !probs_ok(&w) {
                    return Err("mixture weights must sum to 1".into());
                }
                parts.iter().try_for_each(|p| p.1.validate())
            }
            _ => Ok(()),
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            VarDist::Categorical(p) => pick(p, rng.random()) as f64,
            VarDist::Bernoulli(p) => f64::from(u8::from(rng.random::<f64>() < *p)),
            VarDist::Beta { a, b } => Beta::new(*a, *b).expect("validated").sample(rng),
            VarDist::Normal { mean, sd, lo, hi } => {
                Normal::new(*mean, *sd).expect("validated").sample(rng).clamp(*lo, *hi)
            }
            VarDist::Uniform { lo, hi } => rng.random_range(*lo..*hi),
            VarDist::Mixture(parts) => {
                let w: Vec<f64> = parts.iter().map(|p| p.0).collect();
                parts[pick(&w, rng.random())].1.sample(rng)
            }
        }
    }
}

fn pick(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Condition over previously drawn variables, stated with level labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Predicate {
    Always,
    In { var: String, levels: Vec<String> },
    Le { var: String, value: f64 },
    Gt { var: String, value: f64 },
    And(Vec<Predicate>),
}

impl Predicate {
    pub fn is_in(var: &str, levels: &[&str]) -> Self {
        Predicate::In {
            var: var.to_string(),
            levels: levels.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Predicate::Always => write!(f, "all"),
            Predicate::In { var, levels } => write!(f, "{var} in {{{}}}", levels.join(",")),
            Predicate::Le { var, value } => write!(f, "{var} <= {value}"),
            Predicate::Gt { var, value } => write!(f, "{var} > {value}"),
            Predicate::And(ps) => {
                let parts: Vec<String> = ps.iter().map(ToString::to_string).collect();
                write!(f, "{}", parts.join(" & "))
            }
        }
    }
}

/// Predicate resolved to variable positions and level codes.
enum Bound {
    Always,
    In(usize, Vec<usize>),
    Le(usize, f64),
    Gt(usize, f64),
    And(Vec<Bound>),
}

impl Bound {
    fn eval(&self, row: &[f64]) -> bool {
        match self {
            Bound::Always => true,
            Bound::In(v, codes) => codes.contains(&(row[*v] as usize)),
            Bound::Le(v, t) => row[*v] <= *t,
            Bound::Gt(v, t) => row[*v] > *t,
            Bound::And(ps) => ps.iter().all(|p| p.eval(row)),
        }
    }
}

fn bind(p: &Predicate, vars: &[VarSpec], before: usize) -> Result<Bound> {
    let find = |name: &str| -> Result<usize> {
        vars[..before]
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| LoretError::InvalidArgument(format!("predicate on unknown or later variable `{name}`")))
    };
    Ok(match p {
        Predicate::Always => Bound::Always,
        Predicate::In { var, levels } => {
            let i = find(var)?;
            let declared = vars[i]
                .kind
                .levels()
                .ok_or_else(|| LoretError::InvalidArgument(format!("`{var}` has no levels")))?;
            let codes = levels
                .iter()
                .map(|l| {
                    declared
                        .iter()
                        .position(|d| d == l)
                        .ok_or_else(|| LoretError::InvalidArgument(format!("`{l}` is not a level of `{var}`")))
                })
                .collect::<Result<_>>()?;
            Bound::In(i, codes)
        }
        Predicate::Le { var, value } => Bound::Le(find(var)?, *value),
        Predicate::Gt { var, value } => Bound::Gt(find(var)?, *value),
        Predicate::And(ps) => Bound::And(ps.iter().map(|q| bind(q, vars, before)).collect::<Result<_>>()?),
    })
}

/// A generated covariate. The first matching `conditional` entry replaces
/// `dist`; conditions may only refer to earlier variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarSpec {
    pub name: String,
    pub kind: ColumnKind,
    pub role: Role,
    pub set_tag: SetTag,
    pub dist: VarDist,
    pub conditional: Vec<(Predicate, VarDist)>,
}

impl VarSpec {
    pub fn new(name: &str, kind: ColumnKind, role: Role, set_tag: SetTag, dist: VarDist) -> Self {
        VarSpec {
            name: name.to_string(),
            kind,
            role,
            set_tag,
            dist,
            conditional: Vec::new(),
        }
    }

    pub fn when(mut self, p: Predicate, dist: VarDist) -> Self {
        self.conditional.push((p, dist));
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentSpec {
    pub id: usize,
    pub predicate: Predicate,
    /// Intercept followed by one coefficient per configured regressor.
    pub beta: Vec<f64>,
    /// Overrides the logistic model with a constant probability.
    pub fixed_probability: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub n: usize,
    pub seed: u64,
    pub response: String,
    pub vars: Vec<VarSpec>,
    pub derived: Vec<DerivationRule>,
    /// Regressor columns (raw or derived) the segment coefficients refer to.
    pub regressors: Vec<String>,
    pub segments: Vec<SegmentSpec>,
}

/// Per-row planted segment and true probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub segment: Vec<usize>,
    pub pi: Vec<f64>,
}

impl GenConfig {
    pub fn schema(&self) -> Result<Schema> {
        let mut cols = vec![
            ColumnSpec::new("id", ColumnKind::Numeric, Role::Identifier, SetTag::None),
            ColumnSpec::new(self.response.clone(), ColumnKind::Binary, Role::Response, SetTag::None),
        ];
        cols.extend(
            self.vars
                .iter()
                .map(|v| ColumnSpec::new(v.name.clone(), v.kind.clone(), v.role, v.set_tag)),
        );
        Schema::new(cols, self.derived.clone())
    }

    fn validate(&self) -> Result<()> {
        for v in &self.vars {
            for d in std::iter::once(&v.dist).chain(v.conditional.iter().map(|c| &c.1)) {
                d.validate()
                    .map_err(|m| LoretError::InvalidArgument(format!("variable `{}`: {m}", v.name)))?;
                let levels = v.kind.levels().map(<[String]>::len);
                let fits = match (d, levels) {
                    (VarDist::Categorical(p), Some(l)) => p.len() == l,
                    (VarDist::Categorical(_), None) => false,
                    (VarDist::Bernoulli(_), _) => v.kind == ColumnKind::Binary,
                    (_, None) => v.kind == ColumnKind::Numeric,
                    (_, Some(_)) => false,
                };
                if !fits {
                    return Err(LoretError::InvalidArgument(format!(
                        "distribution of `{}` does not match its kind",
                        v.name
                    )));
                }
            }
        }
        if self.segments.is_empty() {
            return Err(LoretError::InvalidArgument("no segments".into()));
        }
        for s in &self.segments {
            if s.fixed_probability.is_none() && s.beta.len() != self.regressors.len() + 1 {
                return Err(LoretError::InvalidArgument(format!(
                    "segment {} has {} coefficients, expected {}",
                    s.id,
                    s.beta.len(),
                    self.regressors.len() + 1
                )));
            }
            if s.fixed_probability.is_some_and(|p| !(0.0..=1.0).contains(&p)) {
                return Err(LoretError::InvalidArgument(format!("segment {} probability outside [0, 1]", s.id)));
            }
        }
        Ok(())
    }
}

/// Draws a dataset and its ground truth. Deterministic for a fixed config.
pub fn generate(cfg: &GenConfig) -> Result<(Dataset, GroundTruth)> {
    cfg.validate()?;
    let schema = cfg.schema()?;
    let nv = cfg.vars.len();
    let conds: Vec<Vec<(Bound, &VarDist)>> = cfg
        .vars
        .iter()
        .enumerate()
        .map(|(j, v)| {
            v.conditional
                .iter()
                .map(|(p, d)| Ok((bind(p, &cfg.vars, j)?, d)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let segs: Vec<Bound> = cfg
        .segments
        .iter()
        .map(|s| bind(&s.predicate, &cfg.vars, nv))
        .collect::<Result<_>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut raw = vec![Vec::with_capacity(cfg.n); nv];
    let mut uniforms = Vec::with_capacity(cfg.n);
    let mut segment = Vec::with_capacity(cfg.n);
    let mut row = vec![0.0; nv];
    for r in 0..cfg.n {
        for j in 0..nv {
            let dist = conds[j]
                .iter()
                .find(|(b, _)| b.eval(&row))
                .map_or(&cfg.vars[j].dist, |(_, d)| *d);
            row[j] = dist.sample(&mut rng);
            raw[j].push(row[j]);
        }
        let hits: Vec<usize> = (0..segs.len()).filter(|&s| segs[s].eval(&row)).collect();
        match hits.as_slice() {
            [s] => segment.push(*s),
            [] => return Err(LoretError::InvalidArgument(format!("row {r} matches no segment"))),
            _ => return Err(LoretError::InvalidArgument(format!("row {r} matches several segments"))),
        }
        uniforms.push(rng.random::<f64>());
    }

    let ids: Vec<String> = (1..=cfg.n).map(|i| i.to_string()).collect();
    let id_col: Vec<f64> = (1..=cfg.n).map(|i| i as f64).collect();
    let build = |y: Vec<f64>| -> Result<Dataset> {
        let mut cols = vec![id_col.clone(), y];
        cols.extend(raw.iter().cloned());
        apply_derivations(&Dataset::from_columns(schema.clone(), cols, ids.clone())?)
    };
    let draft = build(vec![0.0; cfg.n])?;
    let reg = cfg
        .regressors
        .iter()
        .map(|name| draft.require_column(name))
        .collect::<Result<Vec<_>>>()?;
    let pi: Vec<f64> = (0..cfg.n)
        .map(|r| {
            let s = &cfg.segments[segment[r]];
            s.fixed_probability.unwrap_or_else(|| {
                let eta = s.beta[0] + reg.iter().zip(&s.beta[1..]).map(|(&c, b)| b * draft.value(c, r)).sum::<f64>();
                logistic(eta)
            })
        })
        .collect();
    let y = pi.iter().zip(&uniforms).map(|(p, u)| f64::from(u8::from(u < p))).collect();
    let ds = build(y)?;
    let segment = segment.into_iter().map(|s| cfg.segments[s].id).collect();
    Ok((ds, GroundTruth { segment, pi }))
}

/// Segment id for each row of a dataset with the generator's variables.
pub fn assign_segments(cfg: &GenConfig, ds: &Dataset) -> Result<Vec<usize>> {
    let cols = cfg
        .vars
        .iter()
        .map(|v| ds.require_column(&v.name))
        .collect::<Result<Vec<_>>>()?;
    let segs: Vec<Bound> = cfg
        .segments
        .iter()
        .map(|s| bind(&s.predicate, &cfg.vars, cfg.vars.len()))
        .collect::<Result<_>>()?;
    (0..ds.n_rows())
        .map(|r| {
            let row: Vec<f64> = cols.iter().map(|&c| ds.value(c, r)).collect();
            segs.iter()
                .position(|b| b.eval(&row))
                .map(|s| cfg.segments[s].id)
                .ok_or_else(|| LoretError::InvalidArgument(format!("row {r} matches no segment")))
        })
        .collect()
}

/// Writes `<stem>.csv`, `<stem>.schema` and `<stem>.truth.csv` into `dir`.
pub fn write_outputs(ds: &Dataset, truth: &GroundTruth, dir: impl AsRef<Path>, stem: &str) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| LoretError::io(dir, e))?;
    let data = dir.join(format!("{stem}.csv"));
    ds.write_csv_file(&data)?;
    let schema = dir.join(format!("{stem}.schema"));
    fs::write(&schema, ds.schema().to_string()).map_err(|e| LoretError::io(&schema, e))?;
    let truth_path = dir.join(format!("{stem}.truth.csv"));
    let mut w = csv::Writer::from_path(&truth_path)?;
    w.write_record(["id", "segment", "pi"])?;
    for (r, id) in ds.row_ids().iter().enumerate() {
        w.write_record([id.clone(), truth.segment[r].to_string(), format!("{}", truth.pi[r])])?;
    }
    w.flush().map_err(|e| LoretError::io(&truth_path, e))?;
    Ok(vec![data, schema, truth_path])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_and_deterministic() {
        let (ds, t) = generate(&table4_config(0, 1)).unwrap();
        assert_eq!(ds.n_rows(), 0);
        assert!(t.pi.is_empty());
        let a = generate(&table4_config(300, 7)).unwrap();
        let b = generate(&table4_config(300, 7)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.0, generate(&table4_config(300, 8)).unwrap().0);
    }

    #[test]
    fn planted_segments_are_reproducible_and_consistent() {
        let cfg = table4_config(20_000, 3);
        let (ds, truth) = generate(&cfg).unwrap();
        assert_eq!(assign_segments(&cfg, &ds).unwrap(), truth.segment);
        let ybar = ds.response().iter().sum::<f64>() / 20_000.0;
        let pibar = truth.pi.iter().sum::<f64>() / 20_000.0;
        assert!((ybar - pibar).abs() < 0.02, "{ybar} {pibar}");
        let pm = ds.require_column("partyMix").unwrap();
        for r in 0..ds.n_rows() {
            assert!((0.0..=1.0).contains(&truth.pi[r]));
            if ds.value(pm, r) == 0.0 {
                assert_eq!(truth.pi[r], 0.0);
                assert_eq!(ds.response()[r], 0.0);
            }
        }
        let age = ds.require_column("age").unwrap();
        let age2 = ds.require_column("age2").unwrap();
        assert_eq!(ds.value(age2, 5), ds.value(age, 5).powi(2));
    }

    #[test]
    fn null_prevalence() {
        let (ds, _) = generate(&null_config(20_000, 1, &[0.0; 8])).unwrap();
        let p = ds.response().iter().sum::<f64>() / 20_000.0;
        assert!((p - 0.5).abs() < 0.015, "{p}");
        let mut beta = [0.0; 8];
        beta[0] = (0.703f64 / 0.297).ln();
        let (ds, _) = generate(&null_config(20_000, 2, &beta)).unwrap();
        let p = ds.response().iter().sum::<f64>() / 20_000.0;
        assert!((p - 0.703).abs() < 0.01, "{p}");
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = table4_config(500, 1);
        cfg.segments.pop();
        assert!(generate(&cfg).is_err());
        let mut cfg = table4_config(10, 1);
        cfg.vars[0].dist = VarDist::Categorical(vec![0.5, 0.6]);
        assert!(generate(&cfg).is_err());
        let mut cfg = table4_config(10, 1);
        cfg.segments[1].beta.pop();
        assert!(generate(&cfg).is_err());
    }

    #[test]
    fn outputs_round_trip() {
        let (ds, truth) = generate(&table4_config(50, 2)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let files = write_outputs(&ds, &truth, dir.path(), "voters").unwrap();
        let schema = Schema::from_file(&files[1]).unwrap();
        let (back, _) = crate::data::load_csv(&files[0], &schema).unwrap();
        let back = apply_derivations(&back).unwrap();
        assert_eq!(back.response(), ds.response());
        let c = ds.require_column("attendance").unwrap();
        assert_eq!(back.values(back.require_column("attendance").unwrap()), ds.values(c));
    }
}
