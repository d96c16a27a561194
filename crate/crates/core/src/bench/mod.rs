//! Out-of-bag benchmarking of LORET model specifications.

mod ci;
mod folds;
mod metrics;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use ci::{center_folds, pairwise_ci, PairwiseCi, PairwiseInterval, DEFAULT_DRAWS};
pub use folds::{make_folds, Fold, FoldPlan};
pub use metrics::{
    accuracy, accuracy_at, accuracy_curve, auc_wilcoxon, default_grid, roc_curve, roc_full, threshold_average,
    RocCurve,
};

use crate::data::{Dataset, ModelSchema};
use crate::error::{LoretError, Result};
use crate::glm::{DesignSpec, LogitModel, LogitOptions};
use crate::mob::{fit_mob, MobMetaparams};
use crate::par;
use crate::tree::{fit_tree, Algorithm, LoretTree, Strategy, TreeMetaparams};

/// How a model specification is fitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Fitter {
    /// Intercept-only model: predicts the learning-sample prevalence.
    Constant,
    Tree(TreeMetaparams),
    /// Model tree; a global logit when the schema has no partitioning set.
    Mob(MobMetaparams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub label: String,
    pub schema: ModelSchema,
    pub fitter: Fitter,
}

impl ModelSpec {
    /// Picks the fitter implied by the schema shape, with default
    /// metaparameters: CART depth 7 / minsplit 100, CTree alpha 1e-6 /
    /// minsplit 100, model trees alpha 1e-6 / minsplit 1000.
    pub fn infer(schema: ModelSchema, strategy: Option<Strategy>) -> Result<Self> {
        let has_x = !schema.regressors.is_empty();
        let has_z = !schema.partitioning.is_empty();
        if strategy.is_some() && (has_x || !has_z) {
            return Err(LoretError::ModelSchema {
                input: schema.to_string(),
                message: "a tree strategy applies only to y ~ 1 | z".into(),
            });
        }
        let (fitter, tag) = match (has_x, has_z) {
            (false, false) => (Fitter::Constant, String::new()),
            (true, false) => (Fitter::Mob(MobMetaparams::default()), String::new()),
            (true, true) => (Fitter::Mob(MobMetaparams::new(1e-6, 1000)), " (MOB)".into()),
            (false, true) => match strategy.unwrap_or(Strategy::Cart) {
                Strategy::Cart => (Fitter::Tree(TreeMetaparams::cart()), " (CART)".into()),
                Strategy::Ctree => (Fitter::Tree(TreeMetaparams::ctree()), " (CTree)".into()),
            },
        };
        Ok(ModelSpec {
            label: format!("{schema}{tag}"),
            schema,
            fitter,
        })
    }

    pub fn fit(&self, ds: &Dataset, rows: &[usize]) -> Result<LoretTree> {
        match &self.fitter {
            Fitter::Constant => {
                if rows.is_empty() {
                    return Err(LoretError::EmptyData);
                }
                let model = LogitModel::fit(ds, DesignSpec::intercept_only(), rows, &LogitOptions::default())?;
                let y = ds.response();
                let prevalence = rows.iter().map(|&r| y[r]).sum::<f64>() / rows.len() as f64;
                Ok(LoretTree::root_only(
                    self.schema.clone(),
                    Algorithm::MajorityVote,
                    model,
                    rows.to_vec(),
                    prevalence,
                    String::new(),
                ))
            }
            Fitter::Tree(mp) => fit_tree(ds, rows, &self.schema, mp),
            Fitter::Mob(mp) => fit_mob(ds, rows, &self.schema, mp),
        }
    }
}

/// The eight reference model specifications with their default metaparameters.
pub fn reference_specs() -> Vec<ModelSpec> {
    let s = |t: &str, st| ModelSpec::infer(t.parse().expect("valid schema"), st).expect("valid spec");
    vec![
        s("y~1|1", None),
        s("y~s|1", None),
        s("y~s+e|1", None),
        s("y~1|s", Some(Strategy::Cart)),
        s("y~1|s", Some(Strategy::Ctree)),
        s("y~1|s+e", Some(Strategy::Cart)),
        s("y~1|s+e", Some(Strategy::Ctree)),
        s("y~s|e", None),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub folds: usize,
    pub seed: u64,
    pub cutoff: f64,
    pub grid_points: usize,
    pub ci_level: f64,
    pub ci_draws: usize,
    /// Also fit and evaluate every model on the full sample.
    pub full_sample: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            folds: 10,
            seed: 0,
            cutoff: 0.5,
            grid_points: 201,
            ci_level: 0.95,
            ci_draws: DEFAULT_DRAWS,
            full_sample: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldOutcome {
    pub accuracy: f64,
    /// `None` when the test set holds a single class.
    pub auc: Option<f64>,
    pub segments: usize,
    pub roc: Option<RocCurve>,
    pub accuracy_curve: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FullSample {
    pub accuracy: f64,
    pub auc: Option<f64>,
    pub segments: usize,
    pub n_coefficients: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelResult {
    pub label: String,
    pub algorithm: Option<Algorithm>,
    /// One entry per fold; failures hold the error text.
    pub folds: Vec<std::result::Result<FoldOutcome, String>>,
    pub n_coefficients: Option<usize>,
    pub full: Option<std::result::Result<FullSample, String>>,
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (m, f64::NAN);
    }
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

impl ModelResult {
    fn ok_folds(&self) -> impl Iterator<Item = &FoldOutcome> {
        self.folds.iter().filter_map(|f| f.as_ref().ok())
    }

    pub fn accuracies(&self) -> Vec<f64> {
        self.ok_folds().map(|f| f.accuracy).collect()
    }

    pub fn aucs(&self) -> Vec<f64> {
        self.ok_folds().filter_map(|f| f.auc).collect()
    }

    /// Mean accuracy over successful folds and its standard error.
    pub fn accuracy_summary(&self) -> (f64, f64) {
        mean_se(&self.accuracies())
    }

    pub fn auc_summary(&self) -> (f64, f64) {
        mean_se(&self.aucs())
    }

    /// Median number of segments over successful folds.
    pub fn median_segments(&self) -> f64 {
        median(self.ok_folds().map(|f| f.segments as f64).collect())
    }

    pub fn failures(&self) -> Vec<(usize, &str)> {
        self.folds
            .iter()
            .enumerate()
            .filter_map(|(i, f)| f.as_ref().err().map(|e| (i, e.as_str())))
            .collect()
    }

    /// Threshold-averaged ROC over folds with a defined curve.
    pub fn average_roc(&self) -> Option<RocCurve> {
        let curves: Vec<RocCurve> = self.ok_folds().filter_map(|f| f.roc.clone()).collect();
        threshold_average(&curves).ok()
    }

    pub fn average_accuracy_curve(&self) -> Vec<f64> {
        let curves: Vec<&Vec<f64>> = self.ok_folds().map(|f| &f.accuracy_curve).collect();
        let Some(first) = curves.first() else {
            return Vec::new();
        };
        (0..first.len())
            .map(|i| curves.iter().map(|c| c[i]).sum::<f64>() / curves.len() as f64)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub config: BenchConfig,
    pub n: usize,
    pub grid: Vec<f64>,
    pub models: Vec<ModelResult>,
    pub ci_accuracy: Option<PairwiseCi>,
    pub ci_auc: Option<PairwiseCi>,
}

fn evaluate(tree: &LoretTree, ds: &Dataset, rows: &[usize], cutoff: f64, grid: &[f64]) -> Result<FoldOutcome> {
    let probs = tree.predict(ds)?;
    let y = ds.response();
    let scores: Vec<f64> = rows.iter().map(|&r| probs[r]).collect();
    let labels: Vec<f64> = rows.iter().map(|&r| y[r]).collect();
    let auc = match auc_wilcoxon(&scores, &labels) {
        Ok(a) => Some(a),
        Err(LoretError::SingleClass) => None,
        Err(e) => return Err(e),
    };
    Ok(FoldOutcome {
        accuracy: accuracy_at(&scores, &labels, cutoff)?,
        auc,
        segments: tree.n_segments(),
        roc: auc.and_then(|_| roc_curve(&scores, &labels, grid).ok()),
        accuracy_curve: accuracy_curve(&scores, &labels, grid)?,
    })
}

/// Fits every model on every bootstrap sample, evaluates it on the
/// out-of-bag rows, and summarizes. Fold failures are recorded, not fatal.
pub fn run_benchmark(ds: &Dataset, specs: &[ModelSpec], cfg: &BenchConfig) -> Result<BenchResult> {
    if specs.is_empty() {
        return Err(LoretError::InvalidArgument("no model specifications".into()));
    }
    if !(0.0..=1.0).contains(&cfg.cutoff) {
        return Err(LoretError::InvalidArgument(format!("cutoff {} outside [0, 1]", cfg.cutoff)));
    }
    let plan = make_folds(ds.n_rows(), cfg.folds, cfg.seed)?;
    let grid = default_grid(cfg.grid_points);
    let per_model = cfg.folds + usize::from(cfg.full_sample);
    let all_rows: Vec<usize> = (0..ds.n_rows()).collect();

    enum Task {
        Fold(std::result::Result<FoldOutcome, String>, Option<usize>),
        Full(std::result::Result<FullSample, String>),
    }
    let tasks = par::map_indexed(specs.len() * per_model, |t| {
        let spec = &specs[t / per_model];
        let f = t % per_model;
        if f < cfg.folds {
            let fold = &plan.folds[f];
            let fitted = spec.fit(ds, &fold.in_bag);
            let k = fitted.as_ref().ok().map(LoretTree::n_coefficients);
            let out = fitted
                .and_then(|tree| evaluate(&tree, ds, &fold.oob, cfg.cutoff, &grid))
                .map_err(|e| e.to_string());
            Task::Fold(out, k)
        } else {
            let out = spec
                .fit(ds, &all_rows)
                .and_then(|tree| {
                    let e = evaluate(&tree, ds, &all_rows, cfg.cutoff, &grid)?;
                    Ok(FullSample {
                        accuracy: e.accuracy,
                        auc: e.auc,
                        segments: e.segments,
                        n_coefficients: tree.n_coefficients(),
                    })
                })
                .map_err(|e| e.to_string());
            Task::Full(out)
        }
    });

    let mut models: Vec<ModelResult> = specs
        .iter()
        .map(|s| ModelResult {
            label: s.label.clone(),
            algorithm: None,
            folds: Vec::with_capacity(cfg.folds),
            n_coefficients: None,
            full: None,
        })
        .collect();
    for (t, task) in tasks.into_iter().enumerate() {
        let m = &mut models[t / per_model];
        match task {
            Task::Fold(out, k) => {
                if m.n_coefficients.is_none() {
                    m.n_coefficients = k;
                }
                m.folds.push(out);
            }
            Task::Full(out) => m.full = Some(out),
        }
    }
    for (m, s) in models.iter_mut().zip(specs) {
        m.algorithm = Some(match &s.fitter {
            Fitter::Constant => Algorithm::MajorityVote,
            Fitter::Tree(mp) => match mp.strategy {
                Strategy::Cart => Algorithm::Cart,
                Strategy::Ctree => Algorithm::Ctree,
            },
            Fitter::Mob(_) if s.schema.partitioning.is_empty() => Algorithm::Logistic,
            Fitter::Mob(_) => Algorithm::Mob,
        });
    }

    // Intervals use the folds on which every model has a value.
    let joint = |get: fn(&FoldOutcome) -> Option<f64>| -> Option<Vec<Vec<f64>>> {
        let keep: Vec<usize> = (0..cfg.folds)
            .filter(|&f| models.iter().all(|m| m.folds[f].as_ref().ok().and_then(get).is_some()))
            .collect();
        (keep.len() >= 2 && models.len() >= 2).then(|| {
            models
                .iter()
                .map(|m| keep.iter().map(|&f| get(m.folds[f].as_ref().unwrap()).unwrap()).collect())
                .collect()
        })
    };
    let ci_accuracy = joint(|f| Some(f.accuracy))
        .map(|v| pairwise_ci(&v, cfg.ci_level, cfg.ci_draws, cfg.seed))
        .transpose()?;
    let ci_auc = joint(|f| f.auc)
        .map(|v| pairwise_ci(&v, cfg.ci_level, cfg.ci_draws, cfg.seed ^ 0x5bd1_e995))
        .transpose()?;
    Ok(BenchResult {
        config: cfg.clone(),
        n: ds.n_rows(),
        grid,
        models,
        ci_accuracy,
        ci_auc,
    })
}

fn num(v: f64, digits: usize) -> String {
    if v.is_finite() {
        format!("{v:.digits$}")
    } else {
        "NA".into()
    }
}

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map_or("NA".into(), |x| num(x, digits))
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl BenchResult {
    /// Summary table: bootstrap means and full-sample values per model.
    pub fn summary_table(&self) -> String {
        let mut out = String::from("model\tacc\tse_acc\tauc\tp+1\tr_median\tacc0\tauc0\tp0+1\tr0\tfailed_folds\n");
        for m in &self.models {
            let (acc, se) = m.accuracy_summary();
            let (auc, _) = m.auc_summary();
            let (acc0, auc0, p0, r0) = match &m.full {
                Some(Ok(f)) => (
                    num(f.accuracy, 4),
                    opt(f.auc, 3),
                    f.n_coefficients.to_string(),
                    f.segments.to_string(),
                ),
                _ => ("NA".into(), "NA".into(), "NA".into(), "NA".into()),
            };
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{acc0}\t{auc0}\t{p0}\t{r0}\t{}",
                m.label,
                num(acc, 4),
                num(se, 4),
                num(auc, 3),
                m.n_coefficients.map_or("NA".into(), |k| k.to_string()),
                num(m.median_segments(), 1),
                m.failures().len()
            );
        }
        out
    }

    pub fn folds_csv(&self) -> String {
        let mut out = String::from("model,fold,accuracy,auc,segments,error\n");
        for m in &self.models {
            for (f, r) in m.folds.iter().enumerate() {
                let line = match r {
                    Ok(o) => format!("{},{f},{},{},{},", csv_field(&m.label), num(o.accuracy, 6), opt(o.auc, 6), o.segments),
                    Err(e) => format!("{},{f},NA,NA,NA,{}", csv_field(&m.label), csv_field(e)),
                };
                let _ = writeln!(out, "{line}");
            }
        }
        out
    }

    /// Threshold-averaged ROC points per model.
    pub fn roc_csv(&self) -> String {
        let mut out = String::from("model,threshold,fpr,tpr\n");
        for m in &self.models {
            if let Some(c) = m.average_roc() {
                for i in 0..c.len() {
                    let _ = writeln!(
                        out,
                        "{},{},{},{}",
                        csv_field(&m.label),
                        num(c.thresholds[i], 3),
                        num(c.fpr[i], 6),
                        num(c.tpr[i], 6)
                    );
                }
            }
        }
        out
    }

    /// Mean out-of-bag accuracy over folds at every cutoff of the grid.
    pub fn accuracy_cutoff_csv(&self) -> String {
        let mut out = String::from("model,cutoff,accuracy\n");
        for m in &self.models {
            for (c, a) in self.grid.iter().zip(m.average_accuracy_curve()) {
                let _ = writeln!(out, "{},{},{}", csv_field(&m.label), num(*c, 3), num(a, 6));
            }
        }
        out
    }

    pub fn ci_csv(&self, ci: &PairwiseCi) -> String {
        let mut out = String::from("first,second,estimate,std_error,lower,upper,critical,degenerate\n");
        for i in &ci.intervals {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                csv_field(&self.models[i.first].label),
                csv_field(&self.models[i.second].label),
                num(i.estimate, 6),
                num(i.std_error, 6),
                num(i.lower, 6),
                num(i.upper, 6),
                num(ci.critical, 6),
                ci.degenerate
            );
        }
        out
    }

    /// Writes all report files into `dir` and returns their paths.
    pub fn write_reports(&self, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| LoretError::io(dir, e))?;
        let mut files = vec![
            ("benchmark.tsv", self.summary_table()),
            ("folds.csv", self.folds_csv()),
            ("roc.csv", self.roc_csv()),
            ("accuracy_cutoff.csv", self.accuracy_cutoff_csv()),
        ];
        if let Some(ci) = &self.ci_accuracy {
            files.push(("ci_accuracy.csv", self.ci_csv(ci)));
        }
        if let Some(ci) = &self.ci_auc {
            files.push(("ci_auc.csv", self.ci_csv(ci)));
        }
        let mut written = Vec::new();
        for (name, body) in files {
            let p = dir.join(name);
            fs::write(&p, body).map_err(|e| LoretError::io(&p, e))?;
            written.push(p);
        }
        Ok(written)
    }
}
