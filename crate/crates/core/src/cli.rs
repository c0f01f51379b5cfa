//! Command-line front end: `train`, `predict`, `print`, `benchmark` and
//! `make-synthetic`.
//!
//! Exit codes: 0 success, 2 usage error, 3 data error (unreadable or
//! malformed CSV, bad model file, task mismatch), 4 fit failure,
//! 5 malformed configuration file.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::boost::{self, FitTrace, LltConfig};
use crate::data::{self, Dataset};
use crate::error::Error;
use crate::eval::{self, ProtocolConfig};
use crate::loss::LossKind;
use crate::model_file::{self, FitMetadata, ModelFile};
use crate::rules::Task;
use crate::synthetic::{self, SyntheticKind};
use crate::tgb::{self, TgbConfig};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_FIT: i32 = 4;
pub const EXIT_CONFIG: i32 = 5;

#[derive(Debug, Parser)]
#[command(
    name = "lltboost",
    version,
    about = "Rule ensembles with sparse linear-threshold conditions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one learner on a CSV file and write a model file.
    Train(TrainArgs),
    /// Score a CSV file with a model file.
    Predict(PredictArgs),
    /// Print the rules of a model file.
    Print(PrintArgs),
    /// Run the bootstrap risk/complexity benchmark.
    Benchmark(BenchmarkArgs),
    /// Write a synthetic dataset as CSV.
    MakeSynthetic(SyntheticArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Lltboost,
    Tgb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TaskArg {
    #[value(alias = "classification")]
    Clf,
    #[value(alias = "regression")]
    Reg,
}

impl From<TaskArg> for Task {
    fn from(t: TaskArg) -> Task {
        match t {
            TaskArg::Clf => Task::Classification,
            TaskArg::Reg => Task::Regression,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, value_enum, default_value = "lltboost")]
    pub method: MethodArg,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "y")]
    pub target: String,
    #[arg(long, value_enum)]
    pub task: TaskArg,
    /// Maximum number of rules.
    #[arg(long)]
    pub rules: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// JSON learner configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Baseline regularisation strength (tgb only).
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, default_value = "model.json")]
    pub out: PathBuf,
    /// Also write the per-stage risks and complexities as JSON.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Expected task; an error if the model disagrees.
    #[arg(long, value_enum)]
    pub task: Option<TaskArg>,
    /// Output CSV (score, prediction); standard output if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PrintArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub precision: usize,
    /// Express propositions over raw instead of standardised features.
    #[arg(long)]
    pub raw: bool,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// JSON file with optional `protocol` and `datasets` members.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Single CSV dataset (in addition to those in the config).
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, default_value = "y")]
    pub target: String,
    #[arg(long, value_enum)]
    pub task: Option<TaskArg>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub repetitions: Option<usize>,
    #[arg(long)]
    pub rules: Option<usize>,
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long, default_value = "report")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SyntheticArgs {
    /// oblique, rotated-box or staircase.
    #[arg(long, default_value = "oblique")]
    pub kind: String,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 6)]
    pub d: usize,
    #[arg(long, default_value_t = 0.05)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Dataset entry of a benchmark configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSpec {
    Csv {
        path: PathBuf,
        target: String,
        task: Task,
        #[serde(default)]
        name: Option<String>,
    },
    Synthetic {
        kind: SyntheticKind,
        n: usize,
        d: usize,
        noise: f64,
        #[serde(default)]
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkFile {
    pub protocol: ProtocolConfig,
    pub datasets: Vec<DatasetSpec>,
}

#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidArgument(_) | Error::UnsupportedLoss(_) => EXIT_USAGE,
            Error::Fit(_) => EXIT_FIT,
            _ => EXIT_DATA,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Error::from(e).into()
    }
}

fn config_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure {
        code: EXIT_CONFIG,
        message: format!("{}: {e}", path.display()),
    }
}

fn read_config<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| config_failure(path, e))?;
    serde_json::from_str(&text).map_err(|e| config_failure(path, e))
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match execute(cli.command, &mut out) {
        Ok(()) => 0,
        Err(f) => {
            let _ = out.flush();
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

pub fn execute(command: Command, out: &mut dyn Write) -> Result<(), Failure> {
    match command {
        Command::Train(a) => train(a, out),
        Command::Predict(a) => predict(a, out),
        Command::Print(a) => print(a, out),
        Command::Benchmark(a) => benchmark(a, out),
        Command::MakeSynthetic(a) => make_synthetic(a, out),
    }
}

fn loss_for(task: Task) -> LossKind {
    match task {
        Task::Classification => LossKind::Logistic,
        Task::Regression => LossKind::Squared,
    }
}

#[derive(Serialize)]
struct TraceSummary<'a> {
    method: &'a str,
    wall_time_seconds: f64,
    validation_rows: usize,
    stages: Vec<StageSummary>,
}

#[derive(Serialize)]
struct StageSummary {
    rules: usize,
    complexity: usize,
    train_risk: f64,
}

fn write_stage_table(trace: &FitTrace, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(
        out,
        "{:>5} {:>10} {:>14}",
        "rules", "complexity", "train_risk"
    )?;
    for s in &trace.stages {
        writeln!(
            out,
            "{:>5} {:>10} {:>14.6}",
            s.ensemble.rules.len(),
            s.complexity,
            s.train_risk
        )?;
    }
    Ok(())
}

fn train(a: TrainArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let task = Task::from(a.task);
    let (dataset, summary) = data::load_csv(&a.data, &a.target, task)?;
    if summary.skipped_rows > 0 {
        eprintln!("skipped {} rows with missing values", summary.skipped_rows);
    }
    let (trace, method, seed, config) = match a.method {
        MethodArg::Lltboost => {
            let mut cfg: LltConfig = match &a.config {
                Some(p) => read_config(p)?,
                None => LltConfig::default(),
            };
            cfg.loss = loss_for(task);
            if let Some(r) = a.rules {
                cfg.max_rules = r;
            }
            if let Some(s) = a.seed {
                cfg.seed = s;
            }
            if a.lambda.is_some() {
                return Err(Failure {
                    code: EXIT_USAGE,
                    message: "--lambda applies to --method tgb only".into(),
                });
            }
            let trace = boost::fit(dataset.x.view(), &dataset.y, &cfg)?;
            (
                trace,
                "lltboost",
                cfg.seed,
                serde_json::to_value(&cfg).map_err(Error::from)?,
            )
        }
        MethodArg::Tgb => {
            let mut cfg: TgbConfig = match &a.config {
                Some(p) => read_config(p)?,
                None => TgbConfig::default(),
            };
            cfg.loss = loss_for(task);
            if let Some(r) = a.rules {
                cfg.max_rules = r;
            }
            if let Some(s) = a.seed {
                cfg.seed = s;
            }
            if let Some(l) = a.lambda {
                cfg.reg_strength = l;
            }
            let trace = tgb::fit_tgb(dataset.x.view(), &dataset.y, &cfg)?;
            (
                trace,
                "tgb",
                cfg.seed,
                serde_json::to_value(&cfg).map_err(Error::from)?,
            )
        }
    };
    let metadata = FitMetadata {
        method: method.to_string(),
        seed,
        library_version: env!("CARGO_PKG_VERSION").to_string(),
        config,
    };
    let model = ModelFile::from_ensemble(
        trace.final_ensemble(),
        &dataset.feature_names,
        &dataset.target_name,
        dataset.class_labels.clone(),
        metadata,
    )?;
    model.save(&a.out)?;
    write_stage_table(&trace, out)?;
    if let Some(path) = &a.trace {
        let summary = TraceSummary {
            method,
            wall_time_seconds: trace.wall_time_seconds,
            validation_rows: trace.validation_rows.len(),
            stages: trace
                .stages
                .iter()
                .map(|s| StageSummary {
                    rules: s.ensemble.rules.len(),
                    complexity: s.complexity,
                    train_risk: s.train_risk,
                })
                .collect(),
        };
        std::fs::write(
            path,
            serde_json::to_string_pretty(&summary).map_err(Error::from)? + "\n",
        )?;
    }
    writeln!(out, "model written to {}", a.out.display())?;
    Ok(())
}

struct ScoringData {
    rows: Vec<Vec<f64>>,
    targets: Option<Vec<f64>>,
}

fn parse_target(cell: &str, model: &ModelFile) -> Option<f64> {
    match (&model.class_labels, model.task) {
        (Some(labels), _) => labels.iter().position(|l| l == cell).map(|k| k as f64),
        (None, Task::Classification) => match cell.parse::<f64>().ok()? {
            v if v == 0.0 || v == 1.0 => Some(v),
            _ => None,
        },
        (None, Task::Regression) => cell.parse::<f64>().ok().filter(|v| v.is_finite()),
    }
}

/// Reads the model's feature columns by name; the target column is optional.
fn read_scoring_data(path: &Path, model: &ModelFile) -> Result<ScoringData, Failure> {
    let display = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(Error::from)?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(Error::from)?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let mut columns = Vec::with_capacity(model.feature_names.len());
    for name in &model.feature_names {
        let j = headers.iter().position(|h| h == name).ok_or_else(|| {
            Failure::from(Error::Parse {
                path: display.clone(),
                line: 1,
                message: format!("missing feature column {name:?}"),
            })
        })?;
        columns.push(j);
    }
    let target = headers.iter().position(|h| *h == model.target_name);
    let mut rows = Vec::new();
    let mut targets = target.map(|_| Vec::new());
    for record in reader.records() {
        let record = record.map_err(Error::from)?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let bad = |message: String| {
            Failure::from(Error::Parse {
                path: display.clone(),
                line,
                message,
            })
        };
        let mut row = Vec::with_capacity(columns.len());
        for (&j, name) in columns.iter().zip(&model.feature_names) {
            let cell = record.get(j).unwrap_or("").trim();
            let v: f64 = cell
                .parse()
                .map_err(|_| bad(format!("column {name:?}: {cell:?} is not a number")))?;
            row.push(v);
        }
        rows.push(row);
        if let (Some(j), Some(t)) = (target, targets.as_mut()) {
            let cell = record.get(j).unwrap_or("").trim();
            t.push(
                parse_target(cell, model)
                    .ok_or_else(|| bad(format!("target {cell:?} is not a valid label")))?,
            );
        }
    }
    Ok(ScoringData { rows, targets })
}

fn predict(a: PredictArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let model = ModelFile::load(&a.model)?;
    if let Some(t) = a.task {
        if Task::from(t) != model.task {
            return Err(Error::TaskMismatch {
                model: model.task,
                data: t.into(),
            }
            .into());
        }
    }
    let ensemble = model.to_ensemble()?;
    let data = read_scoring_data(&a.data, &model)?;
    let mut scores = Vec::with_capacity(data.rows.len());
    let mut csv_out = csv::Writer::from_writer(Vec::new());
    csv_out
        .write_record(["score", "prediction"])
        .map_err(Error::from)?;
    for row in &data.rows {
        let score = ensemble.predict_score(row)?;
        let prediction = match (&model.class_labels, model.task) {
            (Some(labels), Task::Classification) => labels[usize::from(score >= 0.0)].clone(),
            (None, Task::Classification) => u8::from(score >= 0.0).to_string(),
            (_, Task::Regression) => score.to_string(),
        };
        csv_out
            .write_record([score.to_string(), prediction])
            .map_err(Error::from)?;
        scores.push(score);
    }
    let bytes = csv_out
        .into_inner()
        .map_err(|e| Error::Io(e.into_error()))?;
    let mut summary = Vec::new();
    if let Some(y) = &data.targets {
        let risk = loss_for(model.task).risk(y, &scores)?;
        summary.push(format!("risk: {risk}"));
        if model.task == Task::Classification {
            summary.push(format!("zero_one: {}", LossKind::ZeroOne.risk(y, &scores)?));
        }
    }
    match &a.out {
        Some(path) => {
            std::fs::write(path, bytes)?;
            writeln!(out, "rows: {}", scores.len())?;
            for line in &summary {
                writeln!(out, "{line}")?;
            }
        }
        None => {
            out.write_all(&bytes)?;
            for line in &summary {
                eprintln!("{line}");
            }
        }
    }
    Ok(())
}

fn print(a: PrintArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let model = ModelFile::load(&a.model)?;
    model.to_ensemble()?;
    let text = if a.raw {
        model_file::print_rules_raw(&model, a.precision)
    } else {
        model_file::print_rules(&model, a.precision)
    };
    out.write_all(text.as_bytes())?;
    Ok(())
}

fn load_spec(spec: &DatasetSpec, base: &Path) -> Result<Dataset, Failure> {
    match spec {
        DatasetSpec::Csv {
            path,
            target,
            task,
            name,
        } => {
            let path = if path.is_relative() {
                base.join(path)
            } else {
                path.clone()
            };
            let (mut d, _) = data::load_csv(&path, target, *task)?;
            if let Some(n) = name {
                d.name = n.clone();
            }
            Ok(d)
        }
        DatasetSpec::Synthetic {
            kind,
            n,
            d,
            noise,
            seed,
        } => {
            if *d < 2 || *n < 2 {
                return Err(Failure {
                    code: EXIT_CONFIG,
                    message: "synthetic datasets need n ≥ 2 and d ≥ 2".into(),
                });
            }
            Ok(synthetic::generate(*kind, *n, *d, *noise, *seed))
        }
    }
}

fn benchmark(a: BenchmarkArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let (mut file, base) = match &a.config {
        Some(p) => (
            read_config::<BenchmarkFile>(p)?,
            p.parent().map(Path::to_path_buf).unwrap_or_default(),
        ),
        None => (BenchmarkFile::default(), PathBuf::new()),
    };
    if let Some(path) = &a.data {
        let task = a.task.ok_or_else(|| Failure {
            code: EXIT_USAGE,
            message: "--data needs --task".into(),
        })?;
        file.datasets.push(DatasetSpec::Csv {
            path: std::path::absolute(path)?,
            target: a.target.clone(),
            task: task.into(),
            name: None,
        });
    }
    if file.datasets.is_empty() {
        return Err(Failure {
            code: EXIT_USAGE,
            message: "no datasets: give --data or list them in --config".into(),
        });
    }
    let protocol = &mut file.protocol;
    if let Some(s) = a.seed {
        protocol.master_seed = s;
    }
    if let Some(r) = a.repetitions {
        protocol.repetitions = r;
    }
    if let Some(r) = a.rules {
        protocol.max_rules = r;
    }
    if let Some(j) = a.jobs {
        protocol.jobs = j;
    }
    let datasets = file
        .datasets
        .iter()
        .map(|s| load_spec(s, &base))
        .collect::<Result<Vec<_>, _>>()?;
    let report = eval::run_benchmark(&datasets, &file.protocol)?;
    eval::write_report(&report, &a.out)?;
    for d in &report.datasets {
        for m in &d.metrics {
            writeln!(out, "{} [{}]", d.name, m.metric.name())?;
            if let Some(t) = &m.targets {
                writeln!(
                    out,
                    "  risk target {:.6} ({}), complexity target {}",
                    t.risk_target, t.selected_hyper, t.complexity_target
                )?;
            }
            for row in &m.complexity_table {
                let g = &row.aggregate;
                writeln!(
                    out,
                    "  min complexity  {:<9} {} [{}, {}]",
                    row.method, g.median, g.ci_low, g.ci_high
                )?;
            }
            for row in &m.risk_table {
                let g = &row.aggregate;
                let f = |v: eval::ExtendedValue| {
                    v.finite().map_or("inf".to_string(), |x| format!("{x:.4}"))
                };
                writeln!(
                    out,
                    "  risk at target  {:<9} {} [{}, {}]",
                    row.method,
                    f(g.median),
                    f(g.ci_low),
                    f(g.ci_high)
                )?;
            }
            for note in &m.notes {
                writeln!(out, "  note: {note}")?;
            }
        }
    }
    writeln!(out, "report written to {}", a.out.display())?;
    Ok(())
}

fn make_synthetic(a: SyntheticArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let kind: SyntheticKind = a.kind.parse()?;
    if a.n < 2 || a.d < 2 || !(0.0..=1.0).contains(&a.noise) && kind != SyntheticKind::AxisStaircase
    {
        return Err(Failure {
            code: EXIT_USAGE,
            message: "need n ≥ 2, d ≥ 2 and a noise rate in [0, 1]".into(),
        });
    }
    let dataset = synthetic::generate(kind, a.n, a.d, a.noise, a.seed);
    data::write_csv(&dataset, &a.out)?;
    writeln!(
        out,
        "wrote {} rows × {} features to {}",
        dataset.n(),
        dataset.dim(),
        a.out.display()
    )?;
    Ok(())
}
