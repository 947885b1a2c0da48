//! The `miss` command line: binarize, train, cv, predict, evaluate, export.
//!
//! Exit codes: 0 on success, 1 on runtime failure, 2 on usage errors
//! (bad flags, unknown columns, invalid settings).

use std::collections::HashMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::data::{
    apply_binarizer, apply_features, fit_binarizer, load_csv, load_unlabeled_csv,
    BinarizationSchema, BinarizerConfig, ColumnKind, FeatureSpec, RawTable, Strategy,
};
use crate::error::Error;
use crate::eval::{cross_validate, ece, train_pipeline, weighted_f1, weighted_ovr_auc, PipelineConfig};
use crate::model::{MissModel, ScorecardFormat};
use crate::solver::{root_lp_text, SolverConfig};

#[derive(Debug, Parser)]
#[command(name = "miss", version, about = "Multiclass integer scoring systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a binarizer and write the binary feature matrix as CSV.
    Binarize(BinarizeArgs),
    /// Train a scoring system.
    Train(TrainArgs),
    /// Stratified k-fold cross-validation.
    Cv(CvArgs),
    /// Predict classes (and optionally probabilities) for a CSV.
    Predict(PredictArgs),
    /// Score a model on a labeled CSV.
    Evaluate(EvaluateArgs),
    /// Render a saved model.
    Export(ExportArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Discretizer {
    Uniform,
    Quantile,
    Kmeans,
}

impl From<Discretizer> for Strategy {
    fn from(d: Discretizer) -> Self {
        match d {
            Discretizer::Uniform => Strategy::Uniform,
            Discretizer::Quantile => Strategy::Quantile,
            Discretizer::Kmeans => Strategy::Kmeans,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Markdown,
    Json,
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    data: PathBuf,
    /// Name of the class label column.
    #[arg(long)]
    label: String,
    /// Columns to treat as categorical even if they look numeric.
    #[arg(long, value_delimiter = ',')]
    categorical: Vec<String>,
    #[arg(long, value_enum, default_value = "quantile")]
    discretizer: Discretizer,
    #[arg(long, default_value_t = 3)]
    n_bins: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Coefficients range over [-max-coef, max-coef].
    #[arg(long, default_value_t = 5)]
    max_coef: i64,
    /// Biases range over [-max-bias, max-bias].
    #[arg(long, default_value_t = 20)]
    max_bias: i64,
    /// Maximum number of features used.
    #[arg(long, default_value_t = 5)]
    max_size: usize,
    #[arg(long, default_value_t = 0)]
    min_size: usize,
    /// Penalty per used feature.
    #[arg(long, default_value_t = 1e-6)]
    c0: f64,
    /// Solver time limit in seconds.
    #[arg(long, default_value_t = 5400.0)]
    timeout: f64,
    /// Stop once the optimality gap is at most this.
    #[arg(long, default_value_t = 0.0)]
    gap_tol: f64,
    /// Stop after this many branch-and-bound nodes.
    #[arg(long)]
    node_limit: Option<usize>,
    /// Pre-select this many features by recursive feature aggregation.
    #[arg(long)]
    rfa: Option<usize>,
    /// Time budget for feature aggregation (defaults to --timeout).
    #[arg(long)]
    rfa_timeout: Option<f64>,
    /// Binary feature names that must be used.
    #[arg(long, value_delimiter = ',')]
    force_include: Vec<String>,
    /// Binary feature names (or raw column names) that must not be used.
    #[arg(long, value_delimiter = ',')]
    force_exclude: Vec<String>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Debug, Args)]
struct BinarizeArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Output CSV (stdout if absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the fitted schema as JSON.
    #[arg(long)]
    schema: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    /// Scorecard format printed to stdout (json prints the model document).
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Where to write the model JSON.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the root LP relaxation in LP text format (diagnostics).
    #[arg(long)]
    dump_lp: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CvArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    /// Where to write the JSON report.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Append one probability column per class.
    #[arg(long)]
    proba: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Label column (defaults to the one the model was trained with).
    #[arg(long)]
    label: Option<String>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Debug, Args)]
struct ExportArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::UnknownColumn(_) | Error::InvalidConfig(_) => Failure::Usage(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type CliResult = std::result::Result<(), Failure>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(stdout, "{text}")
            } else {
                write!(stderr, "{text}")
            };
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Binarize(a) => binarize(a, stdout),
        Command::Train(a) => train(a, stdout, stderr),
        Command::Cv(a) => cv(a, stdout),
        Command::Predict(a) => predict(a, stdout),
        Command::Evaluate(a) => evaluate(a, stdout),
        Command::Export(a) => export(a, stdout),
    };
    match outcome {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            2
        }
        Err(Failure::Runtime(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            1
        }
    }
}

fn write_file(path: &Path, text: &str) -> CliResult {
    fs::write(path, text).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

fn emit(out: &Option<PathBuf>, stdout: &mut dyn Write, text: &str) -> CliResult {
    match out {
        Some(path) => write_file(path, text),
        None => Ok(stdout.write_all(text.as_bytes())?),
    }
}

fn kinds_from(names: &[String]) -> HashMap<String, ColumnKind> {
    names
        .iter()
        .map(|n| (n.clone(), ColumnKind::Categorical))
        .collect()
}

fn kinds_from_schema(schema: &BinarizationSchema) -> HashMap<String, ColumnKind> {
    schema
        .features
        .iter()
        .map(|f| {
            let kind = match f {
                FeatureSpec::Categorical { .. } => ColumnKind::Categorical,
                FeatureSpec::Numeric { .. } => ColumnKind::Numeric,
            };
            (f.name().to_string(), kind)
        })
        .collect()
}

fn load_table(a: &DataArgs) -> Result<RawTable, Failure> {
    Ok(load_csv(&a.data, &a.label, &kinds_from(&a.categorical))?)
}

fn binarizer_config(a: &DataArgs) -> BinarizerConfig {
    BinarizerConfig {
        strategy: a.discretizer.into(),
        n_bins: a.n_bins,
        seed: a.seed,
    }
}

fn pipeline_config(d: &DataArgs, m: &ModelArgs) -> Result<PipelineConfig, Failure> {
    if m.max_coef < 0 || m.max_bias < 0 {
        return Err(Failure::Usage("--max-coef and --max-bias must be non-negative".into()));
    }
    if m.threads == 0 {
        return Err(Failure::Usage("--threads must be at least 1".into()));
    }
    Ok(PipelineConfig {
        binarizer: binarizer_config(d),
        solver: SolverConfig {
            c0: m.c0,
            lambda_min: -m.max_coef,
            lambda_max: m.max_coef,
            bias_min: -m.max_bias,
            bias_max: m.max_bias,
            r_min: m.min_size,
            r_max: m.max_size,
            gap_tolerance: m.gap_tol,
            time_limit_seconds: m.timeout,
            node_limit: m.node_limit,
            seed: d.seed,
            ..SolverConfig::default()
        },
        force_include: m.force_include.clone(),
        force_exclude: m.force_exclude.clone(),
        rfa: m.rfa,
        rfa_time_seconds: m.rfa_timeout,
        oversample: true,
        seed: d.seed,
    })
}

fn binarize(a: BinarizeArgs, stdout: &mut dyn Write) -> CliResult {
    let table = load_table(&a.data)?;
    let schema = fit_binarizer(&table, &binarizer_config(&a.data))?;
    let ds = apply_binarizer(&table, &schema)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = ds.feature_names().to_vec();
    header.push(a.data.label.clone());
    w.write_record(&header).map_err(Error::from)?;
    for i in 0..ds.n_samples() {
        let mut rec: Vec<String> = ds.row(i).iter().map(u8::to_string).collect();
        rec.push(ds.class_names()[ds.label(i)].clone());
        w.write_record(&rec).map_err(Error::from)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::Runtime(e.to_string()))?;
    emit(&a.out, stdout, &String::from_utf8_lossy(&bytes))?;
    if let Some(path) = &a.schema {
        write_file(path, &schema.to_json()?)?;
    }
    Ok(())
}

fn render(model: &MissModel, format: Format) -> Result<String, Failure> {
    Ok(match format {
        Format::Text => model.render_scorecard(ScorecardFormat::Text),
        Format::Markdown => model.render_scorecard(ScorecardFormat::Markdown),
        Format::Json => model.to_json()?,
    })
}

fn train(a: TrainArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult {
    let table = load_table(&a.data)?;
    let cfg = pipeline_config(&a.data, &a.model)?;
    if let Some(path) = &a.dump_lp {
        let schema = fit_binarizer(&table, &cfg.binarizer)?;
        let ds = apply_binarizer(&table, &schema)?;
        write_file(path, &root_lp_text(&ds, &cfg.solver)?)?;
    }
    let trained = train_pipeline(&table, &cfg)?;
    let d = trained.model.n_features();
    if let Some(sel) = &trained.selected {
        writeln!(stderr, "RFA selected {}/{d} features", sel.len())?;
    }
    if let Some(path) = &a.out {
        write_file(path, &trained.model.to_json()?)?;
    }
    let text = render(&trained.model, a.format)?;
    stdout.write_all(text.as_bytes())?;
    let r = &trained.result;
    let loss = trained.model.meta.loss.unwrap_or(f64::NAN);
    writeln!(
        stderr,
        "objective={:.9} loss={:.9} gap={:.6} B={} status={} nodes={} wall_time={:.3}s",
        r.v_max,
        loss,
        r.gap,
        trained.model.size(),
        r.status,
        r.stats.nodes_processed,
        r.stats.wall_time_seconds
    )?;
    Ok(())
}

fn cv(a: CvArgs, stdout: &mut dyn Write) -> CliResult {
    if a.folds < 2 {
        return Err(Failure::Usage(format!("--folds must be at least 2, got {}", a.folds)));
    }
    let table = load_table(&a.data)?;
    let cfg = pipeline_config(&a.data, &a.model)?;
    let report = cross_validate(&table, &cfg, a.folds, a.model.threads)?;
    let json = report.to_json()?;
    if let Some(path) = &a.out {
        write_file(path, &json)?;
    }
    match a.format {
        Format::Json => stdout.write_all(json.as_bytes())?,
        _ => stdout.write_all(report.to_table().as_bytes())?,
    }
    Ok(())
}

fn load_model(path: &Path) -> Result<MissModel, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    Ok(MissModel::from_json(&text)?)
}

/// Binary feature rows for `path`, from raw columns through the model's
/// binarizer when it has one, else from 0/1 columns named like the features.
fn feature_rows(model: &MissModel, path: &Path, ignore: &[&str]) -> Result<(RawTable, Vec<Vec<u8>>), Failure> {
    match &model.binarizer {
        Some(schema) => {
            let mut skip = ignore.to_vec();
            skip.push(&schema.label_column);
            let table = load_unlabeled_csv(path, &skip, &kinds_from_schema(schema))?;
            if table.n_rows() == 0 {
                return Ok((table, Vec::new()));
            }
            let rows = apply_features(&table, schema)?;
            Ok((table, rows))
        }
        None => {
            let kinds = model
                .feature_names()
                .iter()
                .map(|n| (n.clone(), ColumnKind::Numeric))
                .collect();
            let table = load_unlabeled_csv(path, ignore, &kinds)?;
            let mut rows = vec![Vec::with_capacity(model.n_features()); table.n_rows()];
            for name in model.feature_names() {
                let col = table
                    .column(name)
                    .ok_or_else(|| Error::UnknownColumn(name.clone()))?;
                let crate::data::ColumnValues::Numeric(values) = &col.values else {
                    return Err(Error::InvalidData(format!("column `{name}` is not 0/1")).into());
                };
                for (row, v) in rows.iter_mut().zip(values) {
                    match v {
                        Some(x) if *x == 0.0 || *x == 1.0 => row.push(*x as u8),
                        _ => {
                            return Err(Error::InvalidData(format!(
                                "column `{name}` must hold 0 or 1"
                            ))
                            .into())
                        }
                    }
                }
            }
            Ok((table, rows))
        }
    }
}

fn predict(a: PredictArgs, stdout: &mut dyn Write) -> CliResult {
    let model = load_model(&a.model)?;
    let (_, rows) = feature_rows(&model, &a.data, &[])?;
    if rows.is_empty() {
        return emit(&a.out, stdout, "");
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["prediction".to_string()];
    if a.proba {
        header.extend(model.class_names().iter().map(|c| format!("p_{c}")));
    }
    w.write_record(&header).map_err(Error::from)?;
    for x in &rows {
        let mut rec = vec![model.class_names()[model.predict(x)?].clone()];
        if a.proba {
            rec.extend(model.predict_proba(x)?.iter().map(|p| format!("{p}")));
        }
        w.write_record(&rec).map_err(Error::from)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::Runtime(e.to_string()))?;
    emit(&a.out, stdout, &String::from_utf8_lossy(&bytes))
}

fn evaluate(a: EvaluateArgs, stdout: &mut dyn Write) -> CliResult {
    let model = load_model(&a.model)?;
    let label = match (&a.label, &model.binarizer) {
        (Some(l), _) => l.clone(),
        (None, Some(s)) => s.label_column.clone(),
        (None, None) => return Err(Failure::Usage("--label is required for this model".into())),
    };
    let kinds = model
        .binarizer
        .as_ref()
        .map(kinds_from_schema)
        .unwrap_or_default();
    let labeled = load_csv(&a.data, &label, &kinds)?;
    let labels = labeled.labels().expect("loaded with a label column");
    let y: Vec<usize> = labels
        .values
        .iter()
        .map(|&v| {
            let name = &labels.classes[v];
            model
                .class_names()
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| Failure::Runtime(format!("class `{name}` unknown to the model")))
        })
        .collect::<Result<_, _>>()?;
    let (_, rows) = feature_rows(&model, &a.data, &[label.as_str()])?;
    let k = model.n_classes();
    let pred: Vec<usize> = rows.iter().map(|x| model.predict(x)).collect::<Result<_, _>>()?;
    let probs: Vec<Vec<f64>> = rows
        .iter()
        .map(|x| model.predict_proba(x))
        .collect::<Result<_, _>>()?;
    let f1 = weighted_f1(&y, &pred, k)?;
    let auc = weighted_ovr_auc(&y, &probs, k)?;
    let e = ece(&y, &probs, k, 10)?;
    let text = match a.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&serde_json::json!({
                "n": y.len(), "f1": f1, "auc": auc, "ece": e
            }))
            .map_err(Error::from)?;
            s.push('\n');
            s
        }
        _ => format!("n={} f1={f1:.6} auc={auc:.6} ece={e:.6}\n", y.len()),
    };
    stdout.write_all(text.as_bytes())?;
    Ok(())
}

fn export(a: ExportArgs, stdout: &mut dyn Write) -> CliResult {
    let model = load_model(&a.model)?;
    emit(&a.out, stdout, &render(&model, a.format)?)
}
