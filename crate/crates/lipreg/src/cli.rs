//! Command-line interface.
//!
//! Exit codes: 0 success, 1 input or solver failure (a JSON diagnostic goes to
//! stderr), 2 usage error, 3 experiment finished but failed its acceptance
//! check.

use std::ffi::OsString;
use std::fmt::Display;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use lipreg_core::baseline::{default_bandwidth_grid, nw_tune_bandwidth, NwModel};
use lipreg_core::robokin::{GeneratorConfig, ARC_SAMPLES, EE_TOL};
use lipreg_core::selection::{cross_validate, default_candidate_grid, srm_select};
use lipreg_core::{
    empirical_risk, smooth, smooth_auto, squared_loss, ExtensionConfig, GraphPolicy,
    LabeledDataset, Points, SmoothingConfig,
};
use serde::{Serialize, Serializer};
use serde_json::{json, Value};
use thiserror::Error;

use crate::io::{self, Format, IoError};
use crate::manifest::RunManifest;
use crate::pipeline::{self, ExperimentConfig, TEST_INDEX_OFFSET};
use crate::report::{
    EvaluateReport, GenerationMeta, GraphDump, NwReport, PredictReport, QueryReport, SmoothReport,
    TuneReport,
};

pub fn display<T: Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "lipreg",
    version,
    about = "Lipschitz regression between Euclidean spaces"
)]
pub struct Cli {
    /// Relative slack of the solvers, in (0, 1/2).
    #[arg(long, global = true, default_value_t = 0.1, value_parser = parse_epsilon)]
    pub epsilon: f64,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Print one JSON document on stdout instead of writing files.
    #[arg(long, global = true)]
    pub stdout: bool,
    /// Where to write the run manifest.
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Generate expert/learner pose pairs.
    GenerateData(GenerateArgs),
    /// Project labels onto L-Lipschitz labelings.
    Smooth(SmoothArgs),
    /// Predict labels at query points by Lipschitz extension.
    Predict(PredictArgs),
    /// Choose L by structural risk minimization or cross-validation.
    Tune(TuneArgs),
    /// Nadaraya-Watson kernel regression baseline.
    BaselineNw(NwArgs),
    /// Loss of predictions against true labels.
    Evaluate(EvaluateArgs),
    /// Compare both methods across training sizes on generated pose data.
    Experiment(ExperimentArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct GenerateArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 100)]
    pub test_n: usize,
    /// Output directory for train.json, test.json and metadata.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "0.6,0.6,0.6,0.6,0.6")]
    pub expert_lengths: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "1,1,1")]
    pub learner_lengths: Vec<f64>,
    /// Expert angles are uniform on (-range, range].
    #[arg(long, default_value_t = std::f64::consts::PI)]
    pub angle_range: f64,
    #[arg(long, value_enum, default_value_t = FileFormat::Json)]
    pub format: FileFormat,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FileFormat {
    Json,
    Csv,
}

impl From<FileFormat> for Format {
    fn from(f: FileFormat) -> Self {
        match f {
            FileFormat::Json => Format::Json,
            FileFormat::Csv => Format::Csv,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct SmoothArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Input dimension of a CSV file without a `# a=` line.
    #[arg(long)]
    pub input_dim: Option<usize>,
    #[arg(long, value_parser = parse_positive)]
    pub lipschitz: f64,
    /// complete | knn:<k> | spanner:<eps>
    #[arg(long, default_value = "knn:16")]
    #[serde(serialize_with = "display")]
    pub graph: GraphPolicy,
    /// Distortion budget; searched by bisection when omitted.
    #[arg(long, value_parser = parse_positive)]
    pub phi0: Option<f64>,
    #[arg(long, default_value_t = 8.0, value_parser = parse_positive)]
    pub c1: f64,
    #[arg(long, default_value_t = 0.125, value_parser = parse_positive)]
    pub c2: f64,
    /// Smoothed dataset.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Write the constraint graph as a JSON edge list.
    #[arg(long)]
    pub dump_graph: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct PredictArgs {
    /// Smoothed training dataset.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub input_dim: Option<usize>,
    #[arg(long, value_parser = parse_positive)]
    pub lipschitz: f64,
    /// A points or dataset file, or inline rows like `0.1,0.2;0.3,0.4`.
    #[arg(long)]
    pub query: String,
    /// Stop a query once its running average is feasible.
    #[arg(long)]
    pub early_stop: bool,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Srm,
    Cv,
}

#[derive(Debug, Args, Serialize)]
pub struct TuneArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub input_dim: Option<usize>,
    #[arg(long, value_enum, default_value_t = Method::Cv)]
    pub method: Method,
    /// Candidate budgets; default is ten points over [ρ/10, 10ρ].
    #[arg(long, value_delimiter = ',')]
    pub candidates: Vec<f64>,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    /// Constant of the SRM complexity term.
    #[arg(long, default_value_t = 1.0, value_parser = parse_positive)]
    pub constant: f64,
    #[arg(long, default_value = "knn:16")]
    #[serde(serialize_with = "display")]
    pub graph: GraphPolicy,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Also write `lipschitz,score` rows.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct NwArgs {
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub input_dim: Option<usize>,
    /// Kernel bandwidth; tuned by cross-validation when omitted.
    #[arg(long, value_parser = parse_positive)]
    pub bandwidth: Option<f64>,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 12)]
    pub grid_size: usize,
    /// Query points, as for `predict`.
    #[arg(long, conflicts_with = "test")]
    pub query: Option<String>,
    /// Labeled test set: predict its inputs and report the squared loss.
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Loss {
    Squared,
    Distance,
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    /// Output of `predict` / `baseline-nw`, or a dataset whose labels are the
    /// predictions.
    #[arg(long)]
    pub predictions: PathBuf,
    /// Dataset with the true labels.
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long)]
    pub input_dim: Option<usize>,
    #[arg(long, value_enum, default_value_t = Loss::Squared)]
    pub loss: Loss,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ExperimentArgs {
    #[arg(long, value_delimiter = ',', default_value = "100,1000,10000")]
    pub train_sizes: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    pub test_size: usize,
    #[arg(long, default_value = "knn:16")]
    #[serde(serialize_with = "display")]
    pub graph: GraphPolicy,
    #[arg(long, default_value_t = 3)]
    pub folds: usize,
    #[arg(long, default_value_t = 300)]
    pub cv_subsample: usize,
    #[arg(long, default_value_t = 6)]
    pub candidates: usize,
    #[arg(long, default_value_t = 5)]
    pub nw_folds: usize,
    #[arg(long, default_value_t = 12)]
    pub nw_grid: usize,
    /// Directory for results.csv and results.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ReplayArgs {
    pub manifest_path: PathBuf,
}

fn parse_epsilon(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v > 0.0 && v < 0.5 {
        Ok(v)
    } else {
        Err(format!("must lie in (0, 0.5), got {v}"))
    }
}

fn parse_positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be positive and finite, got {v}"))
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Solver(#[from] lipreg_core::Error),
    #[error("acceptance check failed: {0}")]
    Acceptance(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Acceptance(_) => 3,
            _ => 1,
        }
    }

    fn kind(&self) -> String {
        match self {
            CliError::Usage(_) => "usage".into(),
            CliError::Io(_) => "input".into(),
            CliError::Solver(e) => {
                let dbg = format!("{e:?}");
                dbg.split(|c: char| !c.is_alphanumeric())
                    .next()
                    .unwrap_or("solver")
                    .to_owned()
            }
            CliError::Acceptance(_) => "acceptance".into(),
        }
    }

    fn diagnostic(&self) -> Value {
        json!({ "error": { "kind": self.kind(), "message": self.to_string() } })
    }
}

type CliResult<T> = Result<T, CliError>;

/// What a finished command hands back for printing.
struct Outcome {
    stdout: Value,
    acceptance: Option<String>,
}

impl Outcome {
    fn new(stdout: Value) -> Self {
        Self {
            stdout,
            acceptance: None,
        }
    }
}

struct Run {
    manifest: RunManifest,
    manifest_path: Option<PathBuf>,
    stdout: bool,
}

impl Run {
    fn timed<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.manifest
            .timing(stage, start.elapsed().as_secs_f64() * 1e3);
        out
    }

    /// Writes `text` unless the run prints to stdout.
    fn emit(&mut self, path: &Path, text: &str) -> CliResult<()> {
        if !self.stdout {
            io::write_text(path, text)?;
            self.manifest.output(path);
        }
        Ok(())
    }

    fn emit_dataset(&mut self, path: &Path, data: &LabeledDataset) -> CliResult<()> {
        if !self.stdout {
            io::save_dataset(path, data, Format::from_path(path))?;
            self.manifest.output(path);
        }
        Ok(())
    }

    fn load(&mut self, path: &Path, input_dim: Option<usize>) -> CliResult<LabeledDataset> {
        self.manifest.input(path);
        Ok(io::load_dataset(path, Format::from_path(path), input_dim)?)
    }

    fn query(&mut self, spec: &str, input_dim: Option<usize>) -> CliResult<Points> {
        let path = Path::new(spec);
        if path.exists() {
            self.manifest.input(path);
            Ok(io::load_points(path, Format::from_path(path), input_dim)?)
        } else {
            Ok(io::parse_inline_points(spec)?)
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the exit
/// code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let recorded: Vec<String> = args
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    execute(cli, recorded)
}

fn usage(kind: ErrorKind, msg: impl Display) -> i32 {
    let e = Cli::command().error(kind, msg);
    let _ = e.print();
    e.exit_code()
}

fn missing_output(cli: &Cli) -> Option<&'static str> {
    if cli.stdout {
        return None;
    }
    match &cli.command {
        Command::GenerateData(a) if a.out.is_none() => Some("--out"),
        Command::Experiment(a) if a.out.is_none() => Some("--out"),
        Command::Smooth(a) if a.output.is_none() => Some("--output"),
        Command::Predict(a) if a.output.is_none() => Some("--output"),
        Command::Tune(a) if a.output.is_none() => Some("--output"),
        Command::BaselineNw(a) if a.output.is_none() => Some("--output"),
        Command::Evaluate(a) if a.output.is_none() => Some("--output"),
        _ => None,
    }
}

fn default_manifest(cli: &Cli) -> Option<PathBuf> {
    if let Some(p) = &cli.manifest {
        return Some(p.clone());
    }
    if cli.stdout {
        return None;
    }
    let beside = |p: &Option<PathBuf>| {
        p.as_ref()
            .map(|p| PathBuf::from(format!("{}.manifest.json", p.display())))
    };
    match &cli.command {
        Command::GenerateData(a) => a.out.as_ref().map(|d| d.join("manifest.json")),
        Command::Experiment(a) => a.out.as_ref().map(|d| d.join("manifest.json")),
        Command::Smooth(a) => beside(&a.output),
        Command::Predict(a) => beside(&a.output),
        Command::Tune(a) => beside(&a.output),
        Command::BaselineNw(a) => beside(&a.output),
        Command::Evaluate(a) => beside(&a.output),
        Command::Replay(_) => None,
    }
}

fn execute(cli: Cli, recorded: Vec<String>) -> i32 {
    if let Command::Replay(r) = &cli.command {
        return match RunManifest::read(&r.manifest_path) {
            Ok(m) => run(std::iter::once("lipreg".to_owned()).chain(m.args)),
            Err(e) => fail(&CliError::Io(e), None),
        };
    }
    if let Some(flag) = missing_output(&cli) {
        return usage(
            ErrorKind::MissingRequiredArgument,
            format!("{flag} is required unless --stdout is given"),
        );
    }
    if let Some(t) = cli.threads {
        if t == 0 {
            return usage(ErrorKind::InvalidValue, "--threads must be at least 1");
        }
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global();
    }

    let name = subcommand_name(&cli.command);
    let mut manifest = RunManifest::new(name, recorded);
    if let Ok(Value::Object(map)) = serde_json::to_value(&cli) {
        for (k, v) in map {
            if k == "command" {
                if let Value::Object(sub) = v {
                    for (_, fields) in sub {
                        if let Value::Object(fields) = fields {
                            manifest.parameters.extend(fields);
                        }
                    }
                }
            } else {
                manifest.parameters.insert(k, v);
            }
        }
    }
    let mut run = Run {
        manifest,
        manifest_path: default_manifest(&cli),
        stdout: cli.stdout,
    };

    let result = dispatch(&cli, &mut run);
    match result {
        Ok(outcome) => {
            run.manifest.status = if outcome.acceptance.is_some() {
                "acceptance-failed"
            } else {
                "ok"
            }
            .to_owned();
            if let Some(p) = &run.manifest_path {
                if let Err(e) = run.manifest.write(p) {
                    return fail(&CliError::Io(e), None);
                }
            }
            if cli.stdout {
                let text = serde_json::to_string_pretty(&outcome.stdout).unwrap_or_default();
                let _ = writeln!(std::io::stdout().lock(), "{text}");
            }
            match outcome.acceptance {
                Some(msg) => {
                    let err = CliError::Acceptance(msg);
                    eprintln!("{}", err.diagnostic());
                    err.exit_code()
                }
                None => 0,
            }
        }
        Err(CliError::Usage(msg)) => usage(ErrorKind::ValueValidation, msg),
        Err(e) => {
            run.manifest.status = "failed".to_owned();
            run.manifest.error = Some(e.diagnostic()["error"].clone());
            fail(&e, run.manifest_path.as_deref().map(|p| (p, &run.manifest)))
        }
    }
}

fn fail(e: &CliError, manifest: Option<(&Path, &RunManifest)>) -> i32 {
    if let Some((p, m)) = manifest {
        let _ = m.write(p);
    }
    eprintln!("{}", e.diagnostic());
    e.exit_code()
}

fn subcommand_name(c: &Command) -> &'static str {
    match c {
        Command::GenerateData(_) => "generate-data",
        Command::Smooth(_) => "smooth",
        Command::Predict(_) => "predict",
        Command::Tune(_) => "tune",
        Command::BaselineNw(_) => "baseline-nw",
        Command::Evaluate(_) => "evaluate",
        Command::Experiment(_) => "experiment",
        Command::Replay(_) => "replay",
    }
}

fn dispatch(cli: &Cli, run: &mut Run) -> CliResult<Outcome> {
    match &cli.command {
        Command::GenerateData(a) => cmd_generate(cli, a, run),
        Command::Smooth(a) => cmd_smooth(cli, a, run),
        Command::Predict(a) => cmd_predict(cli, a, run),
        Command::Tune(a) => cmd_tune(cli, a, run),
        Command::BaselineNw(a) => cmd_nw(cli, a, run),
        Command::Evaluate(a) => cmd_evaluate(a, run),
        Command::Experiment(a) => cmd_experiment(cli, a, run),
        Command::Replay(_) => unreachable!("handled before dispatch"),
    }
}

fn cmd_generate(cli: &Cli, a: &GenerateArgs, run: &mut Run) -> CliResult<Outcome> {
    if a.n == 0 {
        return Err(CliError::Usage("--n must be positive".into()));
    }
    let cfg = GeneratorConfig {
        expert_lengths: a.expert_lengths.clone(),
        learner_lengths: a.learner_lengths.clone(),
        angle_range: a.angle_range,
        ..GeneratorConfig::default()
    };
    let train = run.timed("train", || pipeline::generate_range(0, a.n, cli.seed, &cfg))?;
    let test = if a.test_n > 0 {
        Some(run.timed("test", || {
            pipeline::generate_range(TEST_INDEX_OFFSET, a.test_n, cli.seed, &cfg)
        })?)
    } else {
        None
    };
    let train_set = train.to_dataset()?;
    let test_set = test.as_ref().map(|t| t.to_dataset()).transpose()?;
    let reports: Vec<_> = std::iter::once(&train).chain(test.as_ref()).collect();
    let attempts: usize = reports.iter().map(|r| r.attempts).sum();
    let produced: usize = reports.iter().map(|r| r.samples.len()).sum();
    let ee_err = reports
        .iter()
        .flat_map(|r| r.samples.iter())
        .map(|s| {
            let learner = lipreg_core::robokin::ArmConfig::new(
                cfg.learner_lengths.clone(),
                s.learner_angles.clone(),
            );
            learner.map_or(f64::INFINITY, |l| {
                let e = l.end_effector();
                ((e[0] - s.end_effector[0]).powi(2) + (e[1] - s.end_effector[1]).powi(2)).sqrt()
            })
        })
        .fold(0.0, f64::max);
    let meta = GenerationMeta {
        train_n: a.n,
        test_n: a.test_n,
        seed: cli.seed,
        test_index_offset: TEST_INDEX_OFFSET,
        expert_lengths: cfg.expert_lengths.clone(),
        learner_lengths: cfg.learner_lengths.clone(),
        angle_convention: "relative joint angles in radians, normalized to (-pi, pi]",
        angle_range: cfg.angle_range,
        arc_samples: ARC_SAMPLES,
        optimizer_starts: 8,
        ee_tol: EE_TOL,
        attempts,
        failure_rate: if attempts == 0 {
            0.0
        } else {
            (attempts - produced) as f64 / attempts as f64
        },
        max_fit_residual: GenerationMeta::max_fit(&reports),
        max_end_effector_error: ee_err,
    };
    run.manifest.param("test_index_offset", TEST_INDEX_OFFSET);
    if let Some(dir) = &a.out {
        let ext = match a.format {
            FileFormat::Json => "json",
            FileFormat::Csv => "csv",
        };
        run.emit_dataset(&dir.join(format!("train.{ext}")), &train_set)?;
        if let Some(t) = &test_set {
            run.emit_dataset(&dir.join(format!("test.{ext}")), t)?;
        }
        run.emit(&dir.join("metadata.json"), &pretty(&meta))?;
    }
    Ok(Outcome::new(json!({
        "train": io::to_value(&train_set),
        "test": test_set.as_ref().map(io::to_value),
        "metadata": meta,
    })))
}

fn pretty<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("report serializes")
}

fn smoothing_config(epsilon: f64, c1: f64, c2: f64) -> SmoothingConfig {
    SmoothingConfig {
        c1,
        c2,
        ..SmoothingConfig::new(epsilon)
    }
}

fn cmd_smooth(cli: &Cli, a: &SmoothArgs, run: &mut Run) -> CliResult<Outcome> {
    let data = run.load(&a.input, a.input_dim)?;
    let cfg = smoothing_config(cli.epsilon, a.c1, a.c2);
    run.manifest.param("solver_tol", cfg.solver_tol);
    run.manifest.param("dual_solves", cfg.dual_solves);
    let graph = run.timed("graph", || a.graph.build(data.inputs(), a.lipschitz))?;
    let result = run.timed("smooth", || match a.phi0 {
        Some(phi0) => smooth(&data, &graph, phi0, &cfg),
        None => smooth_auto(&data, &graph, &cfg),
    })?;
    let smoothed = data.with_labels(result.smoothed_labels.clone())?;
    let report = SmoothReport::new(&result, &graph, &a.graph.to_string(), cli.epsilon);
    run.manifest.param("phi0_used", result.phi0_used);
    if let Some(p) = &a.output {
        run.emit_dataset(p, &smoothed)?;
    }
    if let Some(p) = &a.report {
        run.emit(p, &pretty(&report))?;
    }
    let dump = a.dump_graph.as_ref().map(|_| GraphDump::from(&graph));
    if let (Some(p), Some(d)) = (&a.dump_graph, &dump) {
        run.emit(p, &pretty(d))?;
    }
    Ok(Outcome::new(
        json!({ "smoothed": io::to_value(&smoothed), "report": report, "graph": dump }),
    ))
}

fn cmd_predict(cli: &Cli, a: &PredictArgs, run: &mut Run) -> CliResult<Outcome> {
    let model = run.load(&a.model, a.input_dim)?;
    let queries = run.query(&a.query, a.input_dim)?;
    if queries.dim() != model.input_dim() {
        return Err(lipreg_core::Error::DimensionMismatch {
            expected: model.input_dim(),
            found: queries.dim(),
        }
        .into());
    }
    let cfg = ExtensionConfig {
        early_stop: a.early_stop,
        ..ExtensionConfig::new(cli.epsilon)
    };
    let results = run.timed("extend", || {
        pipeline::extend_all(&model, a.lipschitz, &queries, &cfg)
    })?;
    let report = PredictReport {
        lipschitz: a.lipschitz,
        epsilon: cli.epsilon,
        queries: results.len(),
        infeasible: results
            .iter()
            .filter(|r| r.max_slack > 1.0 + cli.epsilon)
            .count(),
        per_query: results.iter().map(QueryReport::new).collect(),
    };
    let predictions: Vec<&[f64]> = results.iter().map(|r| r.y_star.as_slice()).collect();
    let doc = json!({ "predictions": predictions, "report": report });
    if let Some(p) = &a.output {
        run.emit(p, &pretty(&doc))?;
    }
    Ok(Outcome::new(doc))
}

fn cmd_tune(cli: &Cli, a: &TuneArgs, run: &mut Run) -> CliResult<Outcome> {
    let data = run.load(&a.input, a.input_dim)?;
    let cfg = SmoothingConfig::new(cli.epsilon);
    let candidates = if a.candidates.is_empty() {
        default_candidate_grid(&data, a.graph)?
    } else {
        a.candidates.clone()
    };
    run.manifest.param("resolved_candidates", &candidates);
    let policy = a.graph.to_string();
    let report = match a.method {
        Method::Srm => {
            let p = run.timed("srm", || {
                srm_select(&data, &candidates, &cfg, a.constant, a.graph)
            })?;
            TuneReport::srm(&p, a.constant, &policy)
        }
        Method::Cv => {
            if a.folds < 2 || a.folds > data.len() {
                return Err(CliError::Usage(format!(
                    "--folds must lie in [2, {}]",
                    data.len()
                )));
            }
            let p = run.timed("cv", || {
                cross_validate(&data, &candidates, a.folds, &cfg, a.graph, cli.seed)
            })?;
            TuneReport::cv(&p, a.folds, &policy)
        }
    };
    run.manifest.param("chosen_lipschitz", report.chosen());
    if let Some(p) = &a.output {
        run.emit(p, &pretty(&report))?;
    }
    if let Some(p) = &a.csv {
        run.emit(p, &report.to_csv())?;
    }
    Ok(Outcome::new(
        serde_json::to_value(&report).expect("report serializes"),
    ))
}

fn cmd_nw(cli: &Cli, a: &NwArgs, run: &mut Run) -> CliResult<Outcome> {
    let train = run.load(&a.train, a.input_dim)?;
    let (queries, truth) = match (&a.query, &a.test) {
        (Some(q), None) => (run.query(q, a.input_dim)?, None),
        (None, Some(t)) => {
            let test = run.load(t, a.input_dim)?;
            let (x, y) = test.into_parts();
            (x, Some(y))
        }
        _ => {
            return Err(CliError::Usage(
                "exactly one of --query or --test is required".into(),
            ))
        }
    };
    let nw = match a.bandwidth {
        Some(h) => NwReport {
            bandwidth: h,
            tuned: false,
            grid: vec![h],
            mean_losses: Vec::new(),
        },
        None => {
            if a.folds < 2 || a.folds > train.len() {
                return Err(CliError::Usage(format!(
                    "--folds must lie in [2, {}]",
                    train.len()
                )));
            }
            let grid = default_bandwidth_grid(&train, a.grid_size.max(1));
            let t = run.timed("tune", || {
                nw_tune_bandwidth(&train, a.folds, &grid, cli.seed)
            })?;
            NwReport {
                bandwidth: t.bandwidth,
                tuned: true,
                grid: t.grid,
                mean_losses: t.mean_losses,
            }
        }
    };
    run.manifest.param("chosen_bandwidth", nw.bandwidth);
    let model = NwModel::new(&train, nw.bandwidth)?;
    let preds = run.timed("predict", || pipeline::nw_predict_all(&model, &queries))?;
    let loss = truth
        .as_ref()
        .map(|y| squared_loss(&preds, y))
        .transpose()?
        .map(|r| r.empirical_risk);
    let rows: Vec<&[f64]> = preds.rows().collect();
    let doc = json!({ "predictions": rows, "baseline": nw, "squared_loss": loss });
    if let Some(p) = &a.output {
        run.emit(p, &pretty(&doc))?;
    }
    Ok(Outcome::new(doc))
}

fn cmd_evaluate(a: &EvaluateArgs, run: &mut Run) -> CliResult<Outcome> {
    run.manifest.input(&a.predictions);
    let preds = io::load_predictions(
        &a.predictions,
        Format::from_path(&a.predictions),
        a.input_dim,
    )?;
    let truth = run.load(&a.truth, a.input_dim)?;
    let r = match a.loss {
        Loss::Squared => squared_loss(&preds, truth.labels())?,
        Loss::Distance => empirical_risk(&preds, truth.labels())?,
    };
    let report = EvaluateReport {
        loss: match a.loss {
            Loss::Squared => "squared",
            Loss::Distance => "distance",
        },
        n: r.per_point_losses.len(),
        mean: r.empirical_risk,
        per_point: r.per_point_losses,
    };
    if let Some(p) = &a.output {
        run.emit(p, &pretty(&report))?;
    }
    Ok(Outcome::new(
        serde_json::to_value(&report).expect("report serializes"),
    ))
}

fn cmd_experiment(cli: &Cli, a: &ExperimentArgs, run: &mut Run) -> CliResult<Outcome> {
    let cfg = ExperimentConfig {
        train_sizes: a.train_sizes.clone(),
        test_size: a.test_size,
        seed: cli.seed,
        epsilon: cli.epsilon,
        graph: a.graph,
        folds: a.folds,
        cv_subsample: a.cv_subsample,
        candidates: a.candidates,
        nw_folds: a.nw_folds,
        nw_grid: a.nw_grid,
        ..ExperimentConfig::default()
    };
    let quiet = cli.stdout;
    let outcome = run.timed("experiment", || {
        pipeline::run_experiment(&cfg, |line| {
            if !quiet {
                eprintln!("{line}");
            }
        })
    })?;
    if let Some(dir) = &a.out {
        run.emit(&dir.join("results.csv"), &outcome.to_csv())?;
        run.emit(&dir.join("results.json"), &pretty(&outcome))?;
    }
    let acc = &outcome.acceptance;
    let failed = (!acc.passed).then(|| {
        format!(
            "mwu/nw ratio {:.4} at n={} (threshold {}), monotone: {}",
            acc.gap_ratio, acc.gap_size, acc.gap_threshold, acc.monotone_ok
        )
    });
    Ok(Outcome {
        stdout: serde_json::to_value(&outcome).expect("report serializes"),
        acceptance: failed,
    })
}
