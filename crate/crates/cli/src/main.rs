mod config;
mod report;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hdc_core::data::{
    calibrate_quantizer, export_sample_hypervectors, generate_motivational, load_dataset_csv, load_model,
    save_model, write_atomic, write_dataset_csv,
};
use hdc_core::evolve::{run_optimization, FrontMember};
use hdc_core::hv::build_level_table;
use hdc_core::{Dataset, HdcError, Quantizer, Split, TrainedModel};
use log::info;
use serde::Serialize;

use config::{CommonArgs, FileConfig, GaArgs, GaSettings, Resolved};
use report::{measure, metrics_text, ModelSummary};

#[derive(Debug, Parser)]
#[command(name = "hdc", version, about = "Hyperdimensional classifiers with optimized level hypervectors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a baseline model (uniform flip budgets) and report its metrics.
    Train {
        /// Training CSV.
        #[arg(long)]
        train: PathBuf,
        /// Optional test CSV, reported separately.
        #[arg(long)]
        test: Option<PathBuf>,
        /// Model file to write.
        #[arg(long)]
        out: PathBuf,
        /// Also write the report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Search flip budgets with NSGA-II and write the Pareto front as CSV.
    Optimize {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: Option<PathBuf>,
        /// Pareto front CSV to write.
        #[arg(long)]
        out: PathBuf,
        /// Write the highest-wAcc member as a model file.
        #[arg(long)]
        best_model: Option<PathBuf>,
        /// Write the most robust (lowest avgSim) member as a model file.
        #[arg(long)]
        robust_model: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        ga: GaArgs,
    },
    /// Train baseline models over a list of dimensions.
    Sweep {
        #[arg(long)]
        train: PathBuf,
        /// Metrics are computed on this split when given, else on training data.
        #[arg(long)]
        test: Option<PathBuf>,
        /// Comma-separated even dimensions, e.g. 128,256,512.
        #[arg(long, value_delimiter = ',')]
        dims: Option<Vec<usize>>,
        /// CSV with columns D,wAcc,totalAcc,avgSim,modelBytes.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Evaluate a saved model on a labelled CSV.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        json: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Generate the two-feature, four-class synthetic grid dataset.
    Synth {
        /// Points per axis (at least 20).
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Write one integer sample hypervector per row, for external embedding tools.
    ExportEmbeddings {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
}

/// A failed run with the stage that failed and its exit code.
#[derive(Debug)]
pub struct Failure {
    stage: &'static str,
    message: String,
    code: u8,
}

impl Failure {
    /// Bad user input exits with code 2.
    pub fn input(stage: &'static str, message: String) -> Self {
        Self { stage, message, code: 2 }
    }
}

trait Stage<T> {
    fn stage(self, stage: &'static str) -> Result<T, Failure>;
}

impl<T> Stage<T> for hdc_core::Result<T> {
    fn stage(self, stage: &'static str) -> Result<T, Failure> {
        self.map_err(|e| {
            let code = match e {
                HdcError::Io { .. }
                | HdcError::Parse { .. }
                | HdcError::Data(_)
                | HdcError::Shape(_)
                | HdcError::Format(_) => 2,
                _ => 1,
            };
            Failure { stage, message: e.to_string(), code }
        })
    }
}

fn log_config<T: Serialize>(command: &str, value: &T) {
    info!("{command} config {}", serde_json::to_string(value).unwrap());
}

fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<(), Failure> {
    if let Some(path) = path {
        let text = serde_json::to_string_pretty(value).unwrap() + "\n";
        write_atomic(path, text.as_bytes()).stage("write json report")?;
    }
    Ok(())
}

/// Training data plus optional test data sharing its label mapping.
fn load_splits(cfg: &Resolved, train: &Path, test: Option<&Path>) -> Result<(Dataset, Option<Dataset>), Failure> {
    let train = load_dataset_csv(train, &cfg.label(), None, Split::Train).stage("load training data")?;
    let test = test
        .map(|p| load_dataset_csv(p, &cfg.label(), Some(train.label_names()), Split::Test))
        .transpose()
        .stage("load test data")?;
    Ok((train, test))
}

fn summarize(model: &TrainedModel, train: &Dataset, test: Option<&Dataset>) -> Result<ModelSummary, Failure> {
    let mut metrics = vec![measure(model, train, "train").stage("evaluate")?];
    if let Some(test) = test {
        metrics.push(measure(model, test, "test").stage("evaluate")?);
    }
    ModelSummary::new(model, metrics).stage("evaluate")
}

fn calibrate(train: &Dataset, levels: usize) -> Result<Quantizer, Failure> {
    calibrate_quantizer(train, levels).stage("calibrate quantizer")
}

#[derive(Serialize)]
struct TrainConfig<'a> {
    #[serde(flatten)]
    base: &'a Resolved,
    train: &'a Path,
    test: Option<&'a Path>,
    out: &'a Path,
}

#[derive(Serialize)]
struct OptimizeConfig<'a> {
    #[serde(flatten)]
    base: &'a Resolved,
    #[serde(flatten)]
    ga: &'a GaSettings,
    train: &'a Path,
    test: Option<&'a Path>,
    out: &'a Path,
}

#[derive(Serialize)]
struct FrontReport {
    members: usize,
    hypervolume: f64,
    best_accuracy: ModelSummary,
    best_robustness: ModelSummary,
}

fn member_model(member: &FrontMember, seed: u64, train: &Dataset, q: &Quantizer) -> Result<TrainedModel, Failure> {
    let table = build_level_table(seed, &member.budget).stage("materialize model")?;
    TrainedModel::train(train, q.clone(), table).stage("materialize model")
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Train { train, test, out, json, common } => {
            let file = FileConfig::load(common.config.as_deref())?;
            let cfg = Resolved::new(&common, &file);
            log_config("train", &TrainConfig { base: &cfg, train: &train, test: test.as_deref(), out: &out });
            let (train, test) = load_splits(&cfg, &train, test.as_deref())?;
            let q = calibrate(&train, cfg.levels)?;
            let model = TrainedModel::train_baseline(&train, q, cfg.dim, cfg.seed).stage("train")?;
            save_model(&model, &out).stage("save model")?;
            let summary = summarize(&model, &train, test.as_ref())?;
            print!("{}", summary.text(model.labels()));
            write_json(json.as_deref(), &summary)
        }
        Command::Optimize { train, test, out, best_model, robust_model, json, common, ga } => {
            let file = FileConfig::load(common.config.as_deref())?;
            let cfg = Resolved::new(&common, &file);
            let ga = GaSettings::new(&ga, &file);
            log_config(
                "optimize",
                &OptimizeConfig { base: &cfg, ga: &ga, train: &train, test: test.as_deref(), out: &out },
            );
            let (train, test) = load_splits(&cfg, &train, test.as_deref())?;
            let q = calibrate(&train, cfg.levels)?;
            let front = run_optimization(&train, &q, &ga.to_config(&cfg)).stage("optimize")?;
            front.write_csv(&out).stage("write front")?;

            let best = member_model(front.best_accuracy().unwrap(), cfg.seed, &train, &q)?;
            let robust = member_model(front.best_robustness().unwrap(), cfg.seed, &train, &q)?;
            if let Some(p) = &best_model {
                save_model(&best, p).stage("save model")?;
            }
            if let Some(p) = &robust_model {
                save_model(&robust, p).stage("save model")?;
            }
            let report = FrontReport {
                members: front.members.len(),
                hypervolume: front.hypervolume_history.last().copied().unwrap_or(0.0),
                best_accuracy: summarize(&best, &train, test.as_ref())?,
                best_robustness: summarize(&robust, &train, test.as_ref())?,
            };
            println!("Pareto front: {} members, hypervolume {:.6}", report.members, report.hypervolume);
            println!("-- highest wAcc member --");
            print!("{}", report.best_accuracy.text(best.labels()));
            println!("-- most robust member --");
            print!("{}", report.best_robustness.text(robust.labels()));
            write_json(json.as_deref(), &report)
        }
        Command::Sweep { train, test, dims, out, common } => {
            let file = FileConfig::load(common.config.as_deref())?;
            let cfg = Resolved::new(&common, &file);
            let dims = dims
                .or(file.dims)
                .unwrap_or_else(|| vec![128, 256, 512, 1024, 2048, 4096, 8192]);
            if dims.is_empty() || dims.iter().any(|d| *d == 0 || d % 2 != 0) {
                return Err(Failure::input("parse arguments", format!("dims must be nonempty and even, got {dims:?}")));
            }
            #[derive(Serialize)]
            struct SweepConfig<'a> {
                #[serde(flatten)]
                base: &'a Resolved,
                dims: &'a [usize],
                train: &'a Path,
                test: Option<&'a Path>,
                out: &'a Path,
            }
            log_config(
                "sweep",
                &SweepConfig { base: &cfg, dims: &dims, train: &train, test: test.as_deref(), out: &out },
            );
            let (train, test) = load_splits(&cfg, &train, test.as_deref())?;
            let q = calibrate(&train, cfg.levels)?;
            let (eval, split) = match &test {
                Some(t) => (t, "test"),
                None => (&train, "train"),
            };
            let mut csv = String::from("D,wAcc,totalAcc,avgSim,modelBytes\n");
            for &dim in &dims {
                let model = TrainedModel::train_baseline(&train, q.clone(), dim, cfg.seed).stage("train")?;
                let s = ModelSummary::new(&model, vec![measure(&model, eval, split).stage("evaluate")?])
                    .stage("evaluate")?;
                let m = &s.metrics[0];
                writeln!(csv, "{dim},{},{},{},{}", m.w_acc, m.total_accuracy, s.avg_sim, s.model_bytes).unwrap();
                println!(
                    "D = {dim:>6}  {split} wAcc = {:.6}  total = {:.6}  avgSim = {:.6}  bytes = {}",
                    m.w_acc, m.total_accuracy, s.avg_sim, s.model_bytes
                );
            }
            write_atomic(&out, csv.as_bytes()).stage("write sweep")
        }
        Command::Eval { model, data, json, common } => {
            let file = FileConfig::load(common.config.as_deref())?;
            let cfg = Resolved::new(&common, &file);
            log_config("eval", &serde_json::json!({ "label_column": cfg.label_column, "model": model, "data": data }));
            let model = load_model(&model).stage("load model")?;
            let data = load_dataset_csv(&data, &cfg.label(), Some(model.labels()), Split::Test).stage("load data")?;
            if data.features() != model.table().features() {
                return Err(Failure::input(
                    "check shapes",
                    format!("model expects {} features, data has {}", model.table().features(), data.features()),
                ));
            }
            let metrics = measure(&model, &data, "eval").stage("evaluate")?;
            print!("{}", metrics_text(&metrics, model.labels()));
            write_json(json.as_deref(), &metrics)
        }
        Command::Synth { grid, out, common } => {
            let file = FileConfig::load(common.config.as_deref())?;
            let cfg = Resolved::new(&common, &file);
            let grid = grid.or(file.grid).unwrap_or(40);
            log_config("synth", &serde_json::json!({ "seed": cfg.seed, "grid": grid, "out": out }));
            let data = generate_motivational(grid, cfg.seed).stage("generate")?;
            write_dataset_csv(&data, &out).stage("write dataset")?;
            println!("wrote {} samples, {} classes to {}", data.samples(), data.classes(), out.display());
            Ok(())
        }
        Command::ExportEmbeddings { model, data, out, common } => {
            let file = FileConfig::load(common.config.as_deref())?;
            let cfg = Resolved::new(&common, &file);
            log_config(
                "export-embeddings",
                &serde_json::json!({ "label_column": cfg.label_column, "model": model, "data": data, "out": out }),
            );
            let model = load_model(&model).stage("load model")?;
            let data = load_dataset_csv(&data, &cfg.label(), Some(model.labels()), Split::Test).stage("load data")?;
            export_sample_hypervectors(&model, &data, &out).stage("export")?;
            println!("wrote {} sample hypervectors of dimension {} to {}", data.samples(), model.dim(), out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error [{}]: {}", f.stage, f.message);
            ExitCode::from(f.code)
        }
    }
}
