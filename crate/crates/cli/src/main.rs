use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::OnceLock;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use proedit_core::bleu::BleuConfig;
use proedit_core::corpus::{load_instances, load_outputs};
use proedit_core::parent::{Execution, LambdaMode, ParentConfig};
use proedit_core::pipeline::{DatasetSummary, Pipeline, PipelineSettings};
use proedit_core::proedit::{extract_parts, DEFAULT_SEP};
use proedit_core::report::{
    evaluate, EvalReport, ScoreOptions, METRIC_CONVENTIONS, TOOLKIT_VERSION,
};
use proedit_core::split::ManySepSecond;
use proedit_core::textcore::Tokenizer;

fn long_version() -> &'static str {
    static TEXT: OnceLock<String> = OnceLock::new();
    TEXT.get_or_init(|| format!("{TOOLKIT_VERSION}\nmetric conventions: {METRIC_CONVENTIONS}"))
}

#[derive(Parser)]
#[command(name = "proedit", version = TOOLKIT_VERSION, long_version = long_version())]
#[command(
    about = "PARENT/BLEU scoring and progressive-edit dataset construction for table-to-text"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score model outputs against a corpus with BLEU and PARENT.
    Score(ScoreArgs),
    /// Split model outputs into first and second parts.
    Split(SplitArgs),
    /// Drive the progressive-edit stages.
    #[command(subcommand)]
    Pipeline(PipelineCommand),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Tsv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum TokenizerArg {
    Whitespace,
    Punct,
}

impl From<TokenizerArg> for Tokenizer {
    fn from(t: TokenizerArg) -> Self {
        match t {
            TokenizerArg::Whitespace => Tokenizer::Whitespace,
            TokenizerArg::Punct => Tokenizer::Punct,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ManySepArg {
    First,
    Second,
}

impl From<ManySepArg> for ManySepSecond {
    fn from(m: ManySepArg) -> Self {
        match m {
            ManySepArg::First => ManySepSecond::First,
            ManySepArg::Second => ManySepSecond::Second,
        }
    }
}

/// `None` selects the per-instance heuristic.
#[derive(Clone, Copy)]
struct LambdaArg(Option<f64>);

fn parse_lambda(s: &str) -> Result<LambdaArg, String> {
    if s == "auto" {
        return Ok(LambdaArg(None));
    }
    let v: f64 = s
        .parse()
        .map_err(|_| format!("expected `auto` or a number in [0, 1], got {s:?}"))?;
    if !(0.0..=1.0).contains(&v) {
        return Err(format!("lambda {v} is outside [0, 1]"));
    }
    Ok(LambdaArg(Some(v)))
}

/// Scoring knobs shared by `score` and `pipeline init`.
#[derive(Args)]
struct ScoringArgs {
    /// Highest n-gram order for PARENT.
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..))]
    n_max: u64,
    /// `auto` for the per-instance heuristic, or a fixed value in [0, 1].
    #[arg(long, default_value = "auto", value_parser = parse_lambda)]
    lambda: LambdaArg,
    /// Second part to use when the separator occurs more than once.
    #[arg(long, value_enum, default_value = "first")]
    many_sep_second: ManySepArg,
    #[arg(long, value_enum, default_value = "off")]
    smooth_bleu: Switch,
    #[arg(long, value_enum, default_value = "whitespace")]
    tokenizer: TokenizerArg,
}

#[derive(Args)]
struct ScoreArgs {
    /// Corpus JSONL: {"id", "table" | "linearized_table", "target"} per line.
    #[arg(long)]
    instances: PathBuf,
    /// Outputs JSONL: {"id", "output"} per line.
    #[arg(long)]
    generations: PathBuf,
    /// Split outputs on this separator and score first and second parts.
    #[arg(long)]
    sep: Option<String>,
    #[command(flatten)]
    scoring: ScoringArgs,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Report label; defaults to the generations file name.
    #[arg(long)]
    label: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SplitArgs {
    /// Outputs JSONL: {"id", "output"} per line.
    #[arg(long)]
    outputs: PathBuf,
    #[arg(long, default_value = DEFAULT_SEP)]
    sep: String,
    #[arg(long, value_enum, default_value = "first")]
    many_sep_second: ManySepArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum PipelineCommand {
    /// Create a pipeline directory and the stage-0 repeated-target dataset.
    Init {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        instances: PathBuf,
        #[arg(long, default_value = DEFAULT_SEP)]
        sep: String,
        #[command(flatten)]
        scoring: ScoringArgs,
    },
    /// Build the next stage's dataset from the previous stage's outputs.
    MakeDataset {
        #[arg(long)]
        dir: PathBuf,
        /// Defaults to the next stage.
        #[arg(long)]
        stage: Option<usize>,
    },
    /// Register a model-outputs file for a stage.
    IngestOutputs {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        stage: usize,
        #[arg(long)]
        outputs: PathBuf,
    },
    /// Score the first and second parts of a stage's outputs.
    ScoreStage {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        stage: usize,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the first-part F1 history and whether to run another stage.
    Status {
        #[arg(long)]
        dir: PathBuf,
    },
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => io::stdout()
            .write_all(text.as_bytes())
            .context("writing to stdout"),
    }
}

fn render(report: &EvalReport, format: Format) -> String {
    match format {
        Format::Json => report.to_json(),
        Format::Tsv => report.to_tsv(),
    }
}

fn parent_config(s: &ScoringArgs) -> ParentConfig {
    ParentConfig {
        n_max: s.n_max as usize,
        lambda: s.lambda.0.map_or(LambdaMode::Auto, LambdaMode::Fixed),
        order_weights: None,
    }
}

fn score(args: ScoreArgs) -> Result<()> {
    let tokenizer = args.scoring.tokenizer.into();
    let rows = load_instances(&args.instances, tokenizer)?;
    let outputs = load_outputs(&args.generations)?;
    let label = args.label.unwrap_or_else(|| {
        args.generations
            .file_stem()
            .map_or_else(|| "corpus".into(), |s| s.to_string_lossy().into_owned())
    });
    let opts = ScoreOptions {
        label,
        tokenizer,
        parent: parent_config(&args.scoring),
        bleu: match args.scoring.smooth_bleu {
            Switch::On => BleuConfig::smoothed(),
            Switch::Off => BleuConfig::default(),
        },
        sep: args.sep,
        many_sep_second: args.scoring.many_sep_second.into(),
        execution: Execution::Parallel,
    };
    let report = evaluate(&rows, &outputs, &opts)?;
    emit(&render(&report, args.format), args.out.as_deref())
}

fn split(args: SplitArgs) -> Result<()> {
    if args.sep.is_empty() {
        return Err(
            proedit_core::Error::InvalidConfig("separator must be non-empty".into()).into(),
        );
    }
    let outputs = load_outputs(&args.outputs)?;
    let (parts, hist) = extract_parts(&outputs, &args.sep, args.many_sep_second.into());
    let mut text = String::new();
    for (id, part) in &parts {
        let row = serde_json::json!({
            "id": id,
            "first": part.first,
            "second": part.second,
            "sep_count": part.sep_count,
        });
        text.push_str(&row.to_string());
        text.push('\n');
    }
    eprintln!(
        "separators per output: 0 -> {}, 1 -> {}, 2+ -> {}",
        hist.zero, hist.one, hist.many
    );
    emit(&text, args.out.as_deref())
}

fn print_summary(summary: &DatasetSummary) {
    println!(
        "stage {}: wrote {} rows to {}",
        summary.stage_index,
        summary.rows,
        summary.dataset.display()
    );
    if !summary.skipped.is_empty() {
        println!("skipped {} rows:", summary.skipped.len());
        for s in &summary.skipped {
            println!("  {}: {}", s.id, s.reason);
        }
    }
}

fn pipeline(cmd: PipelineCommand) -> Result<()> {
    match cmd {
        PipelineCommand::Init {
            dir,
            instances,
            sep,
            scoring,
        } => {
            let instances = fs::canonicalize(&instances).map_err(|e| proedit_core::Error::Io {
                path: instances.clone(),
                source: e,
            })?;
            let settings = PipelineSettings {
                instances,
                sep,
                many_sep_second: scoring.many_sep_second.into(),
                tokenizer: scoring.tokenizer.into(),
                n_max: scoring.n_max as usize,
                lambda: scoring.lambda.0,
                smooth_bleu: matches!(scoring.smooth_bleu, Switch::On),
            };
            let (_, summary) = Pipeline::init(&dir, settings)?;
            print_summary(&summary);
        }
        PipelineCommand::MakeDataset { dir, stage } => {
            let p = Pipeline::open(&dir)?;
            let stage = match stage {
                Some(k) => k,
                None => p.stages()?.len(),
            };
            print_summary(&p.make_dataset(stage)?);
        }
        PipelineCommand::IngestOutputs {
            dir,
            stage,
            outputs,
        } => {
            let dest = Pipeline::open(&dir)?.ingest_outputs(stage, &outputs)?;
            println!("stage {stage}: outputs stored at {}", dest.display());
        }
        PipelineCommand::ScoreStage {
            dir,
            stage,
            format,
            out,
        } => {
            let report = Pipeline::open(&dir)?.score_stage(stage)?;
            emit(&render(&report, format), out.as_deref())?;
        }
        PipelineCommand::Status { dir } => {
            let status = Pipeline::open(&dir)?.status()?;
            println!("stages: {}", status.stages);
            let history: Vec<String> = status
                .first_part_f1
                .iter()
                .map(|f| format!("{f:.6}"))
                .collect();
            println!("first-part F1: [{}]", history.join(", "));
            if let Some(pending) = &status.pending {
                println!("pending: {pending}");
            }
            match &status.decision {
                Some(d) => {
                    println!("decision: {}", if d.proceed { "continue" } else { "stop" });
                    println!("reason: {}", d.reason);
                }
                None => println!("decision: none (no scored stages)"),
            }
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<proedit_core::Error>() {
            return if e.is_io() { 2 } else { 1 };
        }
        if cause.is::<io::Error>() {
            return 2;
        }
    }
    1
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Score(args) => score(args),
        Command::Split(args) => split(args),
        Command::Pipeline(cmd) => pipeline(cmd),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
