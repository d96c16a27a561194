//! `loret` command-line tool.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use loret::bench::{reference_specs, run_benchmark, BenchConfig, Fitter, ModelSpec};
use loret::data::{apply_derivations, load_csv, Dataset, ModelSchema, Schema};
use loret::glm::{classify, ClassificationConfig};
use loret::synth::{generate, null_config, table4_config, write_outputs};
use loret::targeting::{
    build_profiles, marginals_csv, profiles_text, quadrant_assign, targeting_csv, targeting_list, Filter,
    ProfileVariable, QuadrantConfig, TargetingConfig,
};
use loret::tree::{rule_dump, terminal_table, CtreeTest, LoretTree, Strategy};
use loret::{par, LoretError};

#[derive(Parser)]
#[command(name = "loret", version, about = "Logistic regression trees for voter targeting")]
struct Cli {
    /// Worker threads (0 = all cores). Results do not depend on this.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct DataArgs {
    /// Input CSV file.
    #[arg(long)]
    data: PathBuf,
    /// Schema file describing the CSV columns.
    #[arg(long)]
    schema: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Cart,
    Ctree,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Cart => Strategy::Cart,
            StrategyArg::Ctree => Strategy::Ctree,
        }
    }
}

#[derive(Args, Default)]
struct Metaparams {
    /// Maximum tree depth.
    #[arg(long)]
    max_depth: Option<usize>,
    /// Minimum node size to split (trees) or minimum child size (model trees).
    #[arg(long)]
    minsplit: Option<usize>,
    /// Significance level of the split tests.
    #[arg(long)]
    alpha: Option<f64>,
    /// Boundary trimming of the supLM test.
    #[arg(long)]
    trim: Option<f64>,
    /// Cap on evaluated numeric cutpoints per model-tree split.
    #[arg(long)]
    max_cutpoints: Option<usize>,
    /// Use permutation p-values with this many resamples (CTree only).
    #[arg(long)]
    permutations: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one model and write it with a report.
    Fit {
        #[command(flatten)]
        input: DataArgs,
        /// Model schema, e.g. "y~s|e".
        #[arg(long)]
        model: ModelSchema,
        /// Strategy for classification trees (y~1|z).
        #[arg(long, value_enum)]
        strategy: Option<StrategyArg>,
        #[command(flatten)]
        mp: Metaparams,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Predict with a fitted model.
    Predict {
        #[command(flatten)]
        input: DataArgs,
        /// Model file written by `fit`.
        #[arg(long)]
        model_file: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        cutoff: f64,
        /// Output CSV file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Bootstrap benchmark of several models.
    Benchmark {
        #[command(flatten)]
        input: DataArgs,
        /// Model spec `schema[:cart|:ctree]`, repeatable. Default: the eight reference specs.
        #[arg(long = "model")]
        models: Vec<String>,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 0.5)]
        cutoff: f64,
        /// Monte Carlo draws for the simultaneous intervals.
        #[arg(long, default_value_t = loret::bench::DEFAULT_DRAWS)]
        ci_draws: usize,
        #[arg(long)]
        cart_depth: Option<usize>,
        #[arg(long)]
        cart_minsplit: Option<usize>,
        #[arg(long)]
        ctree_alpha: Option<f64>,
        #[arg(long)]
        ctree_minsplit: Option<usize>,
        #[arg(long)]
        mob_alpha: Option<f64>,
        #[arg(long)]
        mob_minsplit: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Ranked targeting list.
    Target {
        #[command(flatten)]
        input: DataArgs,
        #[arg(long)]
        model_file: PathBuf,
        /// Targeting range LO HI.
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], default_values_t = [0.3, 0.7])]
        range: Vec<f64>,
        /// Attribute filter such as `age<30`, repeatable.
        #[arg(long = "filter")]
        filters: Vec<String>,
        /// Descriptive columns to include (comma separated).
        #[arg(long, value_delimiter = ',')]
        columns: Vec<String>,
        /// Optional support model; adds quadrant assignments.
        #[arg(long)]
        support_model: Option<PathBuf>,
        #[arg(long, default_value_t = 0.5)]
        turnout_cutoff: f64,
        #[arg(long, default_value_t = 0.5)]
        support_cutoff: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Segment profiles of a fitted tree.
    Profile {
        #[command(flatten)]
        input: DataArgs,
        #[arg(long)]
        model_file: PathBuf,
        /// Categorical profile variables (comma separated).
        #[arg(long, value_delimiter = ',')]
        vars: Vec<String>,
        /// Binned numeric variable `name:e1,e2,...`, repeatable.
        #[arg(long = "bins")]
        bins: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic voter file.
    Simulate {
        #[arg(long, value_enum, default_value = "table4")]
        preset: Preset,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        /// Prevalence of the single-model preset.
        #[arg(long, default_value_t = 0.703)]
        prevalence: f64,
        #[arg(long, default_value = "voters")]
        stem: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Table4,
    Null,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(LoretError),
}

impl From<LoretError> for Failure {
    fn from(e: LoretError) -> Self {
        Failure::Runtime(e)
    }
}

type Outcome = Result<(), Failure>;

fn load(args: &DataArgs) -> Result<Dataset, LoretError> {
    let schema = Schema::from_file(&args.schema)?;
    let (ds, report) = load_csv(&args.data, &schema)?;
    if report.rows_kept < report.rows_read {
        eprint!("{report}");
    }
    apply_derivations(&ds)
}

fn write(path: &Path, body: &str) -> Result<(), LoretError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| LoretError::Io {
            path: dir.to_path_buf(),
            source: e,
        })?;
    }
    fs::write(path, body).map_err(|e| LoretError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn load_tree(path: &Path) -> Result<LoretTree, LoretError> {
    let text = fs::read_to_string(path).map_err(|e| LoretError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    LoretTree::from_json(&text)
}

fn apply_metaparams(spec: &mut ModelSpec, mp: &Metaparams, seed: u64) -> Outcome {
    match &mut spec.fitter {
        Fitter::Constant => {}
        Fitter::Tree(t) => {
            if let Some(d) = mp.max_depth {
                t.max_depth = d;
            }
            if let Some(m) = mp.minsplit {
                t.minsplit = m;
            }
            if let Some(a) = mp.alpha {
                t.alpha = a;
            }
            if let Some(b) = mp.permutations {
                t.test = CtreeTest::Permutation { resamples: b };
            }
            t.seed = seed;
        }
        Fitter::Mob(m) => {
            if mp.permutations.is_some() {
                return Err(Failure::Usage("--permutations applies to classification trees only".into()));
            }
            m.max_depth = mp.max_depth.or(m.max_depth);
            m.minsplit = mp.minsplit.or(m.minsplit);
            if let Some(a) = mp.alpha {
                m.alpha = a;
            }
            if let Some(t) = mp.trim {
                m.trim = t;
            }
            if let Some(c) = mp.max_cutpoints {
                m.max_cutpoints = c;
            }
        }
    }
    Ok(())
}

fn parse_spec(text: &str) -> Result<ModelSpec, Failure> {
    let (schema, strategy) = match text.rsplit_once(':') {
        Some((s, "cart")) => (s, Some(Strategy::Cart)),
        Some((s, "ctree")) => (s, Some(Strategy::Ctree)),
        Some((s, "mob")) => (s, None),
        Some(_) => return Err(Failure::Usage(format!("unknown strategy in `{text}`"))),
        None => (text, None),
    };
    let schema: ModelSchema = schema.parse().map_err(|e: LoretError| Failure::Usage(e.to_string()))?;
    ModelSpec::infer(schema, strategy).map_err(|e| Failure::Usage(e.to_string()))
}

fn run(cmd: Command) -> Outcome {
    match cmd {
        Command::Fit {
            input,
            model,
            strategy,
            mp,
            seed,
            out,
        } => {
            let ds = load(&input)?;
            let mut spec =
                ModelSpec::infer(model, strategy.map(Into::into)).map_err(|e| Failure::Usage(e.to_string()))?;
            apply_metaparams(&mut spec, &mp, seed)?;
            let rows: Vec<usize> = (0..ds.n_rows()).collect();
            let tree = spec.fit(&ds, &rows)?;
            write(&out.join("model.json"), &tree.to_json()?)?;
            let mut report = rule_dump(&tree, ds.schema());
            report.push('\n');
            report.push_str(&terminal_table(&tree, ds.schema()));
            write(&out.join("report.txt"), &report)?;
            println!(
                "{}: {} segment(s), {} coefficient(s) per segment, prevalence {:.4}",
                spec.label,
                tree.n_segments(),
                tree.n_coefficients(),
                tree.root().prevalence
            );
            Ok(())
        }
        Command::Predict {
            input,
            model_file,
            cutoff,
            out,
        } => {
            let cfg = ClassificationConfig::new(cutoff).map_err(|e| Failure::Usage(e.to_string()))?;
            let ds = load(&input)?;
            let tree = load_tree(&model_file)?;
            let (probs, segs) = tree.predict_with_segments(&ds)?;
            let mut body = String::from("row_id,prob,segment,class\n");
            for (r, id) in ds.row_ids().iter().enumerate() {
                body.push_str(&format!("{id},{:.6},{},{}\n", probs[r], segs[r], classify(probs[r], &cfg)));
            }
            write(&out, &body)?;
            Ok(())
        }
        Command::Benchmark {
            input,
            models,
            folds,
            seed,
            cutoff,
            ci_draws,
            cart_depth,
            cart_minsplit,
            ctree_alpha,
            ctree_minsplit,
            mob_alpha,
            mob_minsplit,
            out,
        } => {
            let mut specs = if models.is_empty() {
                reference_specs()
            } else {
                models.iter().map(|m| parse_spec(m)).collect::<Result<Vec<_>, _>>()?
            };
            for s in &mut specs {
                match &mut s.fitter {
                    Fitter::Tree(t) if t.strategy == Strategy::Cart => {
                        t.max_depth = cart_depth.unwrap_or(t.max_depth);
                        t.minsplit = cart_minsplit.unwrap_or(t.minsplit);
                        t.seed = seed;
                    }
                    Fitter::Tree(t) => {
                        t.alpha = ctree_alpha.unwrap_or(t.alpha);
                        t.minsplit = ctree_minsplit.unwrap_or(t.minsplit);
                        t.seed = seed;
                    }
                    Fitter::Mob(m) if !s.schema.partitioning.is_empty() => {
                        m.alpha = mob_alpha.unwrap_or(m.alpha);
                        m.minsplit = mob_minsplit.or(m.minsplit);
                    }
                    _ => {}
                }
            }
            let ds = load(&input)?;
            let cfg = BenchConfig {
                folds,
                seed,
                cutoff,
                ci_draws,
                ..Default::default()
            };
            let result = run_benchmark(&ds, &specs, &cfg)?;
            result.write_reports(&out)?;
            print!("{}", result.summary_table());
            for m in &result.models {
                for (f, e) in m.failures() {
                    eprintln!("warning: {} fold {f}: {e}", m.label);
                }
            }
            Ok(())
        }
        Command::Target {
            input,
            model_file,
            range,
            filters,
            columns,
            support_model,
            turnout_cutoff,
            support_cutoff,
            out,
        } => {
            let mut cfg = TargetingConfig::new(range[0], range[1]).map_err(|e| Failure::Usage(e.to_string()))?;
            for f in &filters {
                cfg = cfg.with_filter(f.parse::<Filter>().map_err(|e| Failure::Usage(e.to_string()))?);
            }
            let qcfg =
                QuadrantConfig::new(turnout_cutoff, support_cutoff).map_err(|e| Failure::Usage(e.to_string()))?;
            let ds = load(&input)?;
            let tree = load_tree(&model_file)?;
            let list = targeting_list(&tree, &ds, &cfg)?;
            let mut body = targeting_csv(&ds, &list, &columns)?;
            if let Some(path) = support_model {
                let support = load_tree(&path)?.predict(&ds)?;
                let mut lines: Vec<String> = body.lines().map(str::to_string).collect();
                lines[0].push_str(",support,quadrant");
                for (line, rec) in lines.iter_mut().skip(1).zip(&list) {
                    let s = support[rec.row];
                    line.push_str(&format!(",{s:.6},{}", quadrant_assign(rec.prob, s, &qcfg)));
                }
                body = lines.join("\n") + "\n";
            }
            write(&out, &body)?;
            println!("{} of {} records targeted", list.iter().filter(|r| r.targeted).count(), list.len());
            Ok(())
        }
        Command::Profile {
            input,
            model_file,
            vars,
            bins,
            out,
        } => {
            let mut pv: Vec<ProfileVariable> = vars.iter().map(ProfileVariable::categorical).collect();
            for b in &bins {
                let (name, edges) = b
                    .split_once(':')
                    .ok_or_else(|| Failure::Usage(format!("bins `{b}` must look like name:e1,e2")))?;
                let edges = edges
                    .split(',')
                    .map(|e| e.trim().parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| Failure::Usage(format!("bad bin edges in `{b}`")))?;
                pv.push(ProfileVariable::binned(name, edges));
            }
            let ds = load(&input)?;
            let tree = load_tree(&model_file)?;
            let profiles = build_profiles(&tree, &ds, &pv)?;
            write(&out.join("profiles.txt"), &profiles_text(&profiles))?;
            write(&out.join("marginals.csv"), &marginals_csv(&profiles))?;
            println!("{} segment profile(s)", profiles.len());
            Ok(())
        }
        Command::Simulate {
            preset,
            n,
            seed,
            prevalence,
            stem,
            out,
        } => {
            let cfg = match preset {
                Preset::Table4 => table4_config(n, seed),
                Preset::Null => {
                    if !(prevalence > 0.0 && prevalence < 1.0) {
                        return Err(Failure::Usage(format!("prevalence {prevalence} outside (0, 1)")));
                    }
                    let mut beta = [0.0; 8];
                    beta[0] = (prevalence / (1.0 - prevalence)).ln();
                    null_config(n, seed, &beta)
                }
            };
            let (ds, truth) = generate(&cfg)?;
            for p in write_outputs(&ds, &truth, &out, &stem)? {
                println!("{}", p.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match par::with_jobs(cli.jobs, || run(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
