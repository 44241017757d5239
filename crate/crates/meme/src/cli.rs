//! The `meme` command line.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use meme_core::automaton::{classify_dataset, classify_sequence};
use meme_core::concepts::sweep_granularity;
use meme_core::data::LabelSource;
use meme_core::eval::{evaluate, sweep_window, ApproximationReport, Granularity, WindowSweepResult};
use meme_core::explain::{
    concept_graph_dot, explain_step, permutation_importance, tree_to_dot, FeatureImportanceReport, LocalExplanation,
    SurrogateConfig,
};
use meme_core::pipeline::extract_with_artifacts;
use meme_core::rnn::{forward_trace, ForwardTraceConfig};
use meme_core::synthetic::{generate, Preset};
use meme_core::transitions::build_transition_table;
use meme_core::{
    ClassifierKind, ConceptId, EmitOrder, ExtractedModel, Label, SplitTag, TraceDataset, TransitionClassifier,
};

use crate::config::{ConfigFile, KSetting, Manifest};
use crate::error::{CliError, Result};
use crate::fsutil::{sidecar, write_atomic, write_json};
use crate::model_file::{load_model, save_model};
use crate::occupancy::{load_occupancy, load_weights};
use crate::traces::{load_traces, save_traces, TraceFormat};

#[derive(Debug, Parser)]
#[command(name = "meme", version, about = "Extract concept automata from recurrent-model traces")]
pub struct Cli {
    /// Random seed (default 0).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file for the command's main artifact.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// File format of the output: binary | jsonl for traces, csv | json for reports.
    #[arg(long, global = true)]
    pub format: Option<String>,
    /// Print reports as JSON on stdout.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an LSTM over an Occupancy CSV and write traces.
    Trace(TraceArgs),
    /// Generate traces from a planted automaton.
    Synth(SynthArgs),
    /// Extract a concept automaton from training traces.
    Extract(ExtractArgs),
    /// Show concept names for a range of cluster counts.
    Granularity(GranularityArgs),
    /// Label traces with an extracted model.
    Classify(ClassifyArgs),
    /// Compare an extracted model with the source predictions.
    Eval(EvalArgs),
    /// Permutation feature importance of one concept's transition classifier.
    Explain(ExplainArgs),
    /// Explain a single classification step.
    ExplainStep(ExplainStepArgs),
    /// Re-run extraction for a range of window sizes and seeds.
    SweepWindow(SweepArgs),
    /// Write a transition tree or the concept graph as DOT.
    ExportDot(ExportDotArgs),
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    #[arg(long)]
    pub weights: PathBuf,
    #[arg(long)]
    pub csv: PathBuf,
    /// Feature column to remove before tracing (repeatable).
    #[arg(long = "drop-feature")]
    pub drop_features: Vec<String>,
    /// Cut the recording into sequences of this many rows, each traced from a zero state.
    #[arg(long)]
    pub chunk: Option<usize>,
    /// `last` or a 0-based layer index.
    #[arg(long, default_value = "last")]
    pub capture_layer: String,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    /// Label every step with the final prediction.
    #[arg(long)]
    pub whole_sequence: bool,
    #[arg(long, default_value = "train")]
    pub split: String,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub preset: String,
    #[arg(long, default_value_t = 500)]
    pub sequences: usize,
    #[arg(long, default_value_t = 50)]
    pub length: usize,
    /// Also write the planted state paths as JSON.
    #[arg(long)]
    pub states: Option<PathBuf>,
}

#[derive(Debug, Default, Args)]
pub struct PipelineArgs {
    /// TOML config, or a manifest from an earlier run.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Number of concepts, or `auto`.
    #[arg(long)]
    pub k: Option<String>,
    #[arg(long)]
    pub k_max: Option<usize>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub window: Option<usize>,
    /// `dt` or `mlp`.
    #[arg(long)]
    pub classifier: Option<String>,
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub min_leaf: Option<usize>,
    /// Comma-separated hidden layer widths.
    #[arg(long, value_delimiter = ',')]
    pub mlp_hidden: Option<Vec<usize>>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub no_balance: bool,
    /// `predicted` or `truth`.
    #[arg(long)]
    pub label_source: Option<String>,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Training traces (overrides `train` in the config).
    #[arg(long)]
    pub traces: Option<PathBuf>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Args)]
pub struct GranularityArgs {
    #[arg(long)]
    pub traces: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub k_max: usize,
    #[arg(long, default_value_t = meme_core::DEFAULT_THETA)]
    pub theta: f64,
    #[arg(long, default_value = "predicted")]
    pub label_source: String,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub traces: PathBuf,
    /// `post` (label of the concept reached) or `pre` (label of the concept left).
    #[arg(long, default_value = "post")]
    pub emit: String,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub traces: PathBuf,
    /// `timestep` or `sequence`.
    #[arg(long, default_value = "timestep")]
    pub granularity: String,
    #[arg(long, default_value_t = 1)]
    pub positive: u8,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Concept name or id.
    #[arg(long)]
    pub concept: String,
    /// Traces the transition data is rebuilt from.
    #[arg(long)]
    pub traces: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub top: usize,
    #[arg(long, default_value_t = 10)]
    pub repeats: usize,
}

#[derive(Debug, Args)]
pub struct ExplainStepArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub traces: PathBuf,
    /// 0-based sequence index.
    #[arg(long)]
    pub seq: usize,
    /// 1-based timestep of the consumed input.
    #[arg(long)]
    pub t: usize,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub kernel_width: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Training traces (overrides `train` in the config).
    #[arg(long)]
    pub train: Option<PathBuf>,
    /// Evaluation traces; defaults to the training traces.
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    pub wmax: usize,
    /// Number of seeds, counting up from `--seed`.
    #[arg(long, default_value_t = 5)]
    pub seeds: usize,
    #[arg(long, default_value = "timestep")]
    pub granularity: String,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Args)]
pub struct ExportDotArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Render this concept's transition tree instead of the concept graph.
    #[arg(long)]
    pub concept: Option<String>,
    /// Traces used to weight concept-graph edges by observed transitions.
    #[arg(long)]
    pub traces: Option<PathBuf>,
}

/// Parses `argv` (including the program name) and runs the command.
/// Returns the process exit status.
pub fn run_command<I, S>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match run(&cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn usage<T: std::str::FromStr>(what: &str, s: &str) -> Result<T> {
    s.parse().map_err(|_| CliError::Usage(format!("invalid {what} `{s}`")))
}

fn need<'a>(what: &str, v: Option<&'a PathBuf>) -> Result<&'a PathBuf> {
    v.ok_or_else(|| CliError::Usage(format!("missing {what}")))
}

fn trace_format(cli: &Cli) -> Result<Option<TraceFormat>> {
    cli.format.as_deref().map(str::parse).transpose()
}

#[derive(Copy, Clone, PartialEq, Eq)]
enum ReportFormat {
    Json,
    Csv,
}

fn report_format(cli: &Cli, path: &Path) -> Result<ReportFormat> {
    match cli.format.as_deref() {
        Some("json") => Ok(ReportFormat::Json),
        Some("csv") => Ok(ReportFormat::Csv),
        Some(other) => Err(CliError::Usage(format!("report format must be csv or json, got `{other}`"))),
        None if path.extension().is_some_and(|e| e == "csv") => Ok(ReportFormat::Csv),
        None => Ok(ReportFormat::Json),
    }
}

fn write_manifest(out: &Path, manifest: &mut Manifest) -> Result<()> {
    manifest.outputs.push(out.to_path_buf());
    write_json(&sidecar(out, ".manifest.json"), manifest)
}

fn emit_json<T: serde::Serialize>(stdout: &mut dyn Write, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    writeln!(stdout, "{text}").map_err(|e| CliError::io("<stdout>", e))
}

fn emit_text(stdout: &mut dyn Write, text: &str) -> Result<()> {
    stdout.write_all(text.as_bytes()).map_err(|e| CliError::io("<stdout>", e))
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv");
    for r in rows {
        w.write_record(&r).expect("in-memory csv");
    }
    w.into_inner().expect("in-memory csv")
}

fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<()> {
    let seed = cli.seed.unwrap_or(0);
    match &cli.command {
        Command::Trace(a) => cmd_trace(cli, a, seed, stdout),
        Command::Synth(a) => cmd_synth(cli, a, seed, stdout),
        Command::Extract(a) => cmd_extract(cli, a, stdout),
        Command::Granularity(a) => cmd_granularity(cli, a, seed, stdout),
        Command::Classify(a) => cmd_classify(cli, a, stdout),
        Command::Eval(a) => cmd_eval(cli, a, stdout),
        Command::Explain(a) => cmd_explain(cli, a, seed, stdout),
        Command::ExplainStep(a) => cmd_explain_step(cli, a, seed, stdout),
        Command::SweepWindow(a) => cmd_sweep(cli, a, stdout),
        Command::ExportDot(a) => cmd_export_dot(cli, a, stdout),
    }
}

fn cmd_trace(cli: &Cli, a: &TraceArgs, seed: u64, stdout: &mut dyn Write) -> Result<()> {
    let out = need("--out", cli.out.as_ref())?;
    let weights = load_weights(&a.weights)?;
    let mut rec = load_occupancy(&a.csv)?;
    for name in &a.drop_features {
        rec = rec.drop_feature(name)?;
    }
    let capture_layer = match a.capture_layer.as_str() {
        "last" => weights.layers.len() - 1,
        s => usage("capture layer", s)?,
    };
    let cfg = ForwardTraceConfig {
        capture_layer,
        emit_per_timestep_labels: !a.whole_sequence,
        decision_threshold: a.threshold,
    };
    let split: SplitTag = match a.split.as_str() {
        "train" => SplitTag::Train,
        "val" => SplitTag::Val,
        "test" => SplitTag::Test,
        s => return Err(CliError::Usage(format!("invalid split `{s}`"))),
    };
    let pieces = match a.chunk {
        Some(0) => return Err(CliError::Usage("--chunk must be positive".into())),
        Some(n) => rec.chunks(n),
        None => vec![(rec.inputs.clone(), rec.labels.clone())],
    };
    let mut sequences = Vec::with_capacity(pieces.len());
    for (inputs, labels) in pieces {
        let mut seq = forward_trace(&weights, &inputs, &cfg)?;
        seq.true_labels = Some(labels);
        sequences.push(seq);
    }
    let ds = TraceDataset::new(rec.schema, sequences, split)?;
    save_traces(out, &ds, trace_format(cli)?)?;
    let mut m = Manifest::new("trace", seed);
    m.inputs = vec![a.weights.clone(), a.csv.clone()];
    m.extra.insert("capture_layer".into(), capture_layer.into());
    m.extra.insert("chunk".into(), a.chunk.into());
    m.extra.insert("threshold".into(), a.threshold.into());
    m.extra.insert("drop_features".into(), a.drop_features.clone().into());
    write_manifest(out, &mut m)?;
    emit_text(
        stdout,
        &format!("wrote {} sequences ({} timesteps) to {}\n", ds.len(), ds.total_timesteps(), out.display()),
    )
}

fn cmd_synth(cli: &Cli, a: &SynthArgs, seed: u64, stdout: &mut dyn Write) -> Result<()> {
    let out = need("--out", cli.out.as_ref())?;
    let preset: Preset = a.preset.parse().map_err(|e: meme_core::Error| {
        let names: Vec<&str> = Preset::ALL.iter().map(|p| p.name()).collect();
        CliError::Usage(format!("{e}; available: {}", names.join(", ")))
    })?;
    let pa = preset.automaton();
    let tr = generate(&pa, a.sequences, a.length, seed)?;
    save_traces(out, &tr.dataset, trace_format(cli)?)?;
    if let Some(p) = &a.states {
        write_json(p, &tr.states)?;
    }
    let mut m = Manifest::new("synth", seed);
    m.extra.insert("preset".into(), preset.name().into());
    m.extra.insert("sequences".into(), a.sequences.into());
    m.extra.insert("length".into(), a.length.into());
    write_manifest(out, &mut m)?;
    emit_text(stdout, &format!("wrote {} sequences of length {} to {}\n", a.sequences, a.length, out.display()))
}

impl PipelineArgs {
    fn overrides(&self) -> Result<ConfigFile> {
        Ok(ConfigFile {
            k: self.k.as_deref().map(str::parse::<KSetting>).transpose()?,
            k_max: self.k_max,
            theta: self.theta,
            window: self.window,
            classifier: self
                .classifier
                .as_deref()
                .map(|s| usage::<ClassifierKind>("classifier", s))
                .transpose()?,
            dt_max_depth: self.depth,
            dt_min_leaf: self.min_leaf,
            mlp_hidden: self.mlp_hidden.clone(),
            mlp_epochs: self.epochs,
            mlp_learning_rate: self.learning_rate,
            mlp_batch_size: self.batch_size,
            balance: self.no_balance.then_some(false),
            label_source: self.label_source.as_deref().map(parse_label_source).transpose()?,
            ..ConfigFile::default()
        })
    }

    /// File config merged with flags; flags win.
    fn resolve(&self, cli: &Cli, extra: ConfigFile) -> Result<ConfigFile> {
        let file = match &self.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        let mut over = self.overrides()?.merge(extra);
        over.seed = cli.seed;
        over.out = cli.out.clone();
        Ok(file.merge(over))
    }
}

fn parse_label_source(s: &str) -> Result<LabelSource> {
    match s {
        "predicted" => Ok(LabelSource::Predicted),
        "truth" => Ok(LabelSource::Truth),
        other => Err(CliError::Usage(format!("label source must be predicted or truth, got `{other}`"))),
    }
}

fn render_concepts(model: &ExtractedModel) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:>3}  {:<16} {:>5} {:>6} {:>8}  targets", "id", "name", "label", "MaLR", "size");
    for c in &model.concepts.concepts {
        let targets: Vec<&str> = model.transitions[c.id.0]
            .targets()
            .iter()
            .map(|t| model.concepts.name(*t))
            .collect();
        let start = if c.id == model.start_concept { " (start)" } else { "" };
        let _ = writeln!(
            s,
            "{:>3}  {:<16} {:>5} {:>6.3} {:>8}  {}{start}",
            c.id.0,
            c.name,
            c.majority_label.value(),
            c.majority_ratio,
            c.size,
            targets.join(", ")
        );
    }
    s
}

fn cmd_extract(cli: &Cli, a: &ExtractArgs, stdout: &mut dyn Write) -> Result<()> {
    let extra = ConfigFile {
        train: a.traces.clone(),
        ..ConfigFile::default()
    };
    let resolved = a.pipeline.resolve(cli, extra)?;
    let cfg = resolved.to_pipeline()?;
    let train_path = need("--traces (or `train` in the config)", resolved.train.as_ref())?;
    let out = need("--out (or `out` in the config)", resolved.out.as_ref())?;
    let train = load_traces(train_path, None)?;
    let ex = extract_with_artifacts(&cfg, &train)?;
    save_model(out, &ex.model)?;
    let mut m = Manifest::new("extract", cfg.seed);
    m.inputs.push(train_path.clone());
    m.config = resolved.clone();
    m.pipeline = Some(cfg);
    write_manifest(out, &mut m)?;
    if cli.json {
        #[derive(serde::Serialize)]
        struct Summary<'a> {
            model: &'a Path,
            k: usize,
            concepts: &'a [meme_core::concepts::Concept],
            start_concept: ConceptId,
            granularity: Option<&'a meme_core::concepts::GranularityReport>,
        }
        return emit_json(
            stdout,
            &Summary {
                model: out,
                k: ex.model.k(),
                concepts: &ex.model.concepts.concepts,
                start_concept: ex.model.start_concept,
                granularity: ex.granularity.as_ref(),
            },
        );
    }
    let mut text = String::new();
    if let Some(g) = &ex.granularity {
        text.push_str(&g.render_table());
        let _ = writeln!(text, "chose k={}", ex.model.k());
    }
    text.push_str(&render_concepts(&ex.model));
    let _ = writeln!(text, "wrote {}", out.display());
    emit_text(stdout, &text)
}

fn cmd_granularity(cli: &Cli, a: &GranularityArgs, seed: u64, stdout: &mut dyn Write) -> Result<()> {
    let ds = load_traces(&a.traces, None)?;
    let ks: Vec<usize> = (1..=a.k_max).collect();
    let report = sweep_granularity(
        &ds,
        &ks,
        a.theta,
        seed,
        Default::default(),
        parse_label_source(&a.label_source)?,
    )?;
    if let Some(out) = &cli.out {
        match report_format(cli, out)? {
            ReportFormat::Json => write_json(out, &report)?,
            ReportFormat::Csv => {
                let rows = report.rows.iter().flat_map(|r| {
                    r.names.iter().zip(&r.ratios).enumerate().map(move |(i, (n, ratio))| {
                        vec![r.k.to_string(), i.to_string(), n.clone(), ratio.to_string()]
                    })
                });
                let bytes = csv_bytes(&["k", "concept", "name", "majority_ratio"], rows);
                write_atomic(out, |w| w.write_all(&bytes))?;
            }
        }
        let mut m = Manifest::new("granularity", seed);
        m.inputs.push(a.traces.clone());
        write_manifest(out, &mut m)?;
    }
    if cli.json {
        return emit_json(stdout, &report);
    }
    let mut text = report.render_table();
    if let Some(k) = report.most_granular_distinct() {
        let _ = writeln!(text, "most granular distinct names: k={k}");
    }
    emit_text(stdout, &text)
}

fn cmd_classify(cli: &Cli, a: &ClassifyArgs, stdout: &mut dyn Write) -> Result<()> {
    let emit = match a.emit.as_str() {
        "post" => EmitOrder::PostTransition,
        "pre" => EmitOrder::PreTransition,
        s => return Err(CliError::Usage(format!("--emit must be post or pre, got `{s}`"))),
    };
    let model = load_model(&a.model)?;
    let ds = load_traces(&a.traces, None)?;
    let trajectories = classify_dataset(&model, &ds, emit)?;
    let rows = trajectories.iter().enumerate().flat_map(|(i, tr)| {
        let model = &model;
        tr.labels.iter().zip(&tr.concepts).enumerate().map(move |(j, (l, c))| {
            vec![
                i.to_string(),
                (model.window + 1 + j).to_string(),
                l.value().to_string(),
                model.concepts.name(*c).to_string(),
            ]
        })
    });
    let bytes = csv_bytes(&["sequence_index", "timestep", "label", "concept"], rows);
    match &cli.out {
        Some(out) => {
            write_atomic(out, |w| w.write_all(&bytes))?;
            let mut m = Manifest::new("classify", 0);
            m.inputs = vec![a.model.clone(), a.traces.clone()];
            m.extra.insert("emit".into(), a.emit.clone().into());
            write_manifest(out, &mut m)
        }
        None => stdout.write_all(&bytes).map_err(|e| CliError::io("<stdout>", e)),
    }
}

fn parse_granularity(s: &str) -> Result<Granularity> {
    s.parse()
        .map_err(|_| CliError::Usage(format!("granularity must be timestep or sequence, got `{s}`")))
}

fn report_rows(r: &ApproximationReport) -> Vec<(&'static str, String)> {
    let mut rows = vec![
        ("granularity", format!("{:?}", r.granularity)),
        ("compared", r.confusion.total().to_string()),
        ("fidelity", format!("{:.4}", r.fidelity)),
        ("precision", format!("{:.4}", r.precision)),
        ("recall", format!("{:.4}", r.recall)),
        ("f1", format!("{:.4}", r.f1)),
    ];
    if let Some(acc) = r.accuracy_vs_truth {
        rows.push(("accuracy_vs_truth", format!("{acc:.4}")));
    }
    if r.no_positive {
        rows.push(("note", "no positives on one side; precision/recall set to 0".into()));
    }
    rows
}

fn cmd_eval(cli: &Cli, a: &EvalArgs, stdout: &mut dyn Write) -> Result<()> {
    let granularity = parse_granularity(&a.granularity)?;
    let positive = Label::new(a.positive).map_err(|e| CliError::Usage(e.to_string()))?;
    let model = load_model(&a.model)?;
    let ds = load_traces(&a.traces, None)?;
    let report = evaluate(&model, &ds, granularity, positive)?;
    if let Some(out) = &cli.out {
        match report_format(cli, out)? {
            ReportFormat::Json => write_json(out, &report)?,
            ReportFormat::Csv => {
                let c = report.confusion;
                let row = vec![
                    format!("{:?}", report.granularity),
                    report.fidelity.to_string(),
                    report.precision.to_string(),
                    report.recall.to_string(),
                    report.f1.to_string(),
                    report.accuracy_vs_truth.map_or(String::new(), |v| v.to_string()),
                    c.tp.to_string(),
                    c.fp.to_string(),
                    c.tn.to_string(),
                    c.fn_.to_string(),
                ];
                let header = [
                    "granularity",
                    "fidelity",
                    "precision",
                    "recall",
                    "f1",
                    "accuracy_vs_truth",
                    "tp",
                    "fp",
                    "tn",
                    "fn",
                ];
                let bytes = csv_bytes(&header, [row]);
                write_atomic(out, |w| w.write_all(&bytes))?;
            }
        }
        let mut m = Manifest::new("eval", 0);
        m.inputs = vec![a.model.clone(), a.traces.clone()];
        write_manifest(out, &mut m)?;
    }
    if cli.json {
        return emit_json(stdout, &report);
    }
    let mut text = String::new();
    for (k, v) in report_rows(&report) {
        let _ = writeln!(text, "{k:<18} {v}");
    }
    emit_text(stdout, &text)
}

fn find_concept(model: &ExtractedModel, s: &str) -> Result<ConceptId> {
    if let Some(id) = model.concepts.find(s) {
        return Ok(id);
    }
    match s.parse::<usize>() {
        Ok(i) if i < model.k() => Ok(ConceptId(i)),
        _ => {
            let names: Vec<&str> = model.concepts.concepts.iter().map(|c| c.name.as_str()).collect();
            Err(CliError::Usage(format!("no concept `{s}`; known: {}", names.join(", "))))
        }
    }
}

#[derive(serde::Serialize)]
struct Bar<'a> {
    feature: &'a str,
    value: f64,
}

#[derive(serde::Serialize)]
struct ImportanceChart<'a> {
    concept: &'a str,
    baseline_accuracy: f64,
    bars: Vec<Bar<'a>>,
    report: &'a FeatureImportanceReport,
}

fn cmd_explain(cli: &Cli, a: &ExplainArgs, seed: u64, stdout: &mut dyn Write) -> Result<()> {
    let model = load_model(&a.model)?;
    let id = find_concept(&model, &a.concept)?;
    let ds = load_traces(&a.traces, None)?;
    let table = build_transition_table(&ds, &model.concepts, &model.clustering, model.window)?;
    let data = table.dataset(id);
    if data.is_empty() {
        return Err(CliError::Usage(format!(
            "concept `{}` has no outgoing transitions in these traces",
            model.concepts.name(id)
        )));
    }
    let names = model.schema.windowed_names(model.window);
    let report = permutation_importance(&model.transitions[id.0], data, a.repeats, seed, &names)?;
    let top = report.top(a.top);
    let chart = ImportanceChart {
        concept: model.concepts.name(id),
        baseline_accuracy: report.baseline_accuracy,
        bars: top
            .iter()
            .map(|f| Bar {
                feature: &f.name,
                value: f.normalized,
            })
            .collect(),
        report: &report,
    };
    if let Some(out) = &cli.out {
        match report_format(cli, out)? {
            ReportFormat::Json => write_json(out, &chart)?,
            ReportFormat::Csv => {
                let rows = report
                    .features
                    .iter()
                    .map(|f| vec![f.name.clone(), f.raw.to_string(), f.normalized.to_string()]);
                let bytes = csv_bytes(&["feature", "raw", "normalized"], rows);
                write_atomic(out, |w| w.write_all(&bytes))?;
            }
        }
        let mut m = Manifest::new("explain", seed);
        m.inputs = vec![a.model.clone(), a.traces.clone()];
        m.extra.insert("concept".into(), a.concept.clone().into());
        m.extra.insert("repeats".into(), a.repeats.into());
        write_manifest(out, &mut m)?;
    }
    if cli.json {
        return emit_json(stdout, &chart);
    }
    let mut text = format!(
        "concept {} ({} transitions, baseline accuracy {:.4})\n",
        model.concepts.name(id),
        data.len(),
        report.baseline_accuracy
    );
    for f in top {
        let bar = "#".repeat((f.normalized * 40.0).round() as usize);
        let _ = writeln!(text, "{:<24} {:>7.4} {bar}", f.name, f.normalized);
    }
    emit_text(stdout, &text)
}

fn cmd_explain_step(cli: &Cli, a: &ExplainStepArgs, seed: u64, stdout: &mut dyn Write) -> Result<()> {
    let model = load_model(&a.model)?;
    let ds = load_traces(&a.traces, None)?;
    let seq = ds
        .sequences
        .get(a.seq)
        .ok_or_else(|| CliError::Usage(format!("--seq {} out of range ({} sequences)", a.seq, ds.len())))?;
    let classification = classify_sequence(&model, &seq.inputs, EmitOrder::PostTransition)?;
    let step = classification.steps.iter().find(|s| s.t == a.t).ok_or_else(|| {
        CliError::Usage(format!(
            "--t must lie in {}..={} for this sequence",
            model.window + 1,
            seq.len()
        ))
    })?;
    let f = &model.transitions[step.previous.0];
    let scales = match f {
        TransitionClassifier::Mlp(net) => net.scale.clone(),
        TransitionClassifier::Dt(_) => vec![1.0; f.input_width()],
    };
    let cfg = SurrogateConfig {
        samples: a.samples,
        kernel_width: a.kernel_width,
        seed,
    };
    let explanation = explain_step(&model, step, &scales, &cfg)?;
    let names = model.schema.windowed_names(model.window);
    if cli.json {
        #[derive(serde::Serialize)]
        struct Out<'a> {
            sequence: usize,
            t: usize,
            previous: &'a str,
            next: &'a str,
            label: Label,
            window: Vec<(&'a str, f64)>,
            explanation: &'a LocalExplanation,
        }
        return emit_json(
            stdout,
            &Out {
                sequence: a.seq,
                t: step.t,
                previous: model.concepts.name(step.previous),
                next: model.concepts.name(step.next),
                label: step.label,
                window: names.iter().map(String::as_str).zip(step.window.iter().copied()).collect(),
                explanation: &explanation,
            },
        );
    }
    let mut text = format!(
        "sequence {} t={}: {} -> {} (label {})\n",
        a.seq,
        step.t,
        model.concepts.name(step.previous),
        model.concepts.name(step.next),
        step.label.value()
    );
    match &explanation {
        LocalExplanation::DecisionPath(p) => {
            if p.steps.is_empty() {
                text.push_str("single-leaf classifier: always predicts this concept\n");
            }
            text.push_str(&p.render(&names));
        }
        LocalExplanation::LinearSurrogate(s) => {
            let _ = writeln!(
                text,
                "local surrogate ({} samples, kernel width {:.3}, R² {}){}",
                s.samples,
                s.kernel_width,
                s.r2.map_or("n/a".into(), |r| format!("{r:.3}")),
                if s.ridge_fallback { ", ridge fallback" } else { "" }
            );
            for w in &s.weights {
                let _ = writeln!(text, "{:<24} {:+.4}", names[w.feature], w.weight);
            }
        }
    }
    emit_text(stdout, &text)
}

fn render_sweep(r: &WindowSweepResult) -> String {
    let mut s = format!("classifier {:?}\n{:>3}  {:>15}  {:>15}\n", r.kind, "w", "F1", "fidelity");
    for c in &r.cells {
        let _ = writeln!(
            s,
            "{:>3}  {:>7.4} ± {:<6.4}  {:>7.4} ± {:<6.4}",
            c.window, c.summary.f1.mean, c.summary.f1.std, c.summary.fidelity.mean, c.summary.fidelity.std
        );
    }
    s.push_str("(mean ± population std over seeds)\n");
    s
}

fn cmd_sweep(cli: &Cli, a: &SweepArgs, stdout: &mut dyn Write) -> Result<()> {
    if a.seeds == 0 {
        return Err(CliError::Usage("--seeds must be at least 1".into()));
    }
    let granularity = parse_granularity(&a.granularity)?;
    let extra = ConfigFile {
        train: a.train.clone(),
        test: a.test.clone(),
        ..ConfigFile::default()
    };
    let resolved = a.pipeline.resolve(cli, extra)?;
    let cfg = resolved.to_pipeline()?;
    let train_path = need("--train (or `train` in the config)", resolved.train.as_ref())?;
    let train = load_traces(train_path, None)?;
    let test = match &resolved.test {
        Some(p) => load_traces(p, None)?,
        None => train.clone(),
    };
    let windows: Vec<usize> = (0..=a.wmax).collect();
    let seeds: Vec<u64> = (0..a.seeds as u64).map(|i| cfg.seed + i).collect();
    let result = sweep_window(&train, &test, &cfg, &windows, &seeds, granularity)?;
    if let Some(out) = &resolved.out {
        match report_format(cli, out)? {
            ReportFormat::Json => write_json(out, &result)?,
            ReportFormat::Csv => {
                let rows = result.cells.iter().flat_map(|c| {
                    c.summary.runs.iter().zip(&c.summary.seeds).map(move |(r, s)| {
                        vec![
                            c.window.to_string(),
                            s.to_string(),
                            r.f1.to_string(),
                            r.fidelity.to_string(),
                            r.precision.to_string(),
                            r.recall.to_string(),
                        ]
                    })
                });
                let bytes = csv_bytes(&["window", "seed", "f1", "fidelity", "precision", "recall"], rows);
                write_atomic(out, |w| w.write_all(&bytes))?;
            }
        }
        let mut m = Manifest::new("sweep-window", cfg.seed);
        m.inputs.push(train_path.clone());
        m.inputs.extend(resolved.test.clone());
        m.config = resolved.clone();
        m.pipeline = Some(cfg);
        m.extra.insert("wmax".into(), a.wmax.into());
        m.extra.insert("seeds".into(), a.seeds.into());
        write_manifest(out, &mut m)?;
    }
    if cli.json {
        return emit_json(stdout, &result);
    }
    emit_text(stdout, &render_sweep(&result))
}

fn cmd_export_dot(cli: &Cli, a: &ExportDotArgs, stdout: &mut dyn Write) -> Result<()> {
    let model = load_model(&a.model)?;
    let dot = match &a.concept {
        Some(c) => {
            let id = find_concept(&model, c)?;
            match &model.transitions[id.0] {
                TransitionClassifier::Dt(tree) => {
                    tree_to_dot(tree, &model.schema.windowed_names(model.window), &model.concepts)
                }
                TransitionClassifier::Mlp(_) => {
                    return Err(CliError::Usage("only decision-tree transitions can be drawn".into()))
                }
            }
        }
        None => {
            let counts = match &a.traces {
                Some(p) => {
                    let ds = load_traces(p, None)?;
                    build_transition_table(&ds, &model.concepts, &model.clustering, model.window)?
                        .transition_counts()
                }
                None => {
                    // without traces, draw each classifier's reachable targets with unit weight
                    let mut counts = vec![vec![0usize; model.k()]; model.k()];
                    for (i, f) in model.transitions.iter().enumerate() {
                        for t in f.targets() {
                            counts[i][t.0] = 1;
                        }
                    }
                    counts
                }
            };
            concept_graph_dot(&model, &counts)
        }
    };
    match &cli.out {
        Some(out) => {
            write_atomic(out, |w| w.write_all(dot.as_bytes()))?;
            let mut m = Manifest::new("export-dot", 0);
            m.inputs.push(a.model.clone());
            m.inputs.extend(a.traces.clone());
            write_manifest(out, &mut m)
        }
        None => emit_text(stdout, &dot),
    }
}
