//! `cnest`: train, run and evaluate nested compound parsers.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "cnest", version, about = "Nested compound analysis as labeled dependency parsing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Mode {
    Coarse,
    Fine,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Spans,
    Brackets,
    Conll,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    Brackets,
    Conll,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Average {
    Micro,
    Macro,
}

#[derive(Args)]
pub struct TrainArgs {
    /// Training corpus.
    #[arg(long)]
    data: PathBuf,
    /// Development corpus used to select the best epoch.
    #[arg(long)]
    dev: Option<PathBuf>,
    /// Label inventory; collected from the training data when absent.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "fine")]
    mode: Mode,
    /// `key=value` configuration file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Extra `key=value` configuration overrides.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Where to write the model.
    #[arg(long)]
    out: PathBuf,
    /// Training log; defaults to the model path with `.log` appended.
    #[arg(long)]
    log: Option<PathBuf>,
    /// Treat every compound as a sentence of its own.
    #[arg(long)]
    no_context: bool,
    #[arg(long)]
    no_span_encoding: bool,
    #[arg(long)]
    no_pretrained: bool,
    /// Pretrained word vectors in `.vec` text format.
    #[arg(long)]
    vectors: Option<PathBuf>,
    /// Contextual vectors for the training corpus; replaces word embeddings.
    #[arg(long)]
    contextual: Option<PathBuf>,
    /// Contextual vectors for the development corpus.
    #[arg(long)]
    dev_contextual: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
pub struct ParseArgs {
    #[arg(long)]
    model: PathBuf,
    /// Corpus to analyse; annotation lines, if any, are ignored.
    #[arg(long)]
    input: PathBuf,
    /// Output file; standard output when absent.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "brackets")]
    format: OutputFormat,
    #[arg(long)]
    contextual: Option<PathBuf>,
}

#[derive(Args)]
pub struct EvalArgs {
    /// Gold corpus.
    #[arg(long, required_unless_present = "data", conflicts_with = "data")]
    gold: Option<PathBuf>,
    /// Predicted corpus in bracket format.
    #[arg(long, requires = "gold")]
    pred: Option<PathBuf>,
    /// Model to run over `--data`.
    #[arg(long, requires = "data")]
    model: Option<PathBuf>,
    /// Gold corpus to parse with `--model`.
    #[arg(long, requires = "model")]
    data: Option<PathBuf>,
    #[arg(long)]
    contextual: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "micro")]
    average: Average,
    /// Write per-component-count scores as CSV.
    #[arg(long)]
    buckets: Option<PathBuf>,
    /// Write `key<TAB>value` metrics.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
pub struct EnumerateArgs {
    /// Comma-separated component names.
    #[arg(long, value_delimiter = ',', conflicts_with = "n", required_unless_present = "n")]
    components: Vec<String>,
    /// Number of components.
    #[arg(long)]
    n: Option<usize>,
    /// Print only the number of bracketings.
    #[arg(long)]
    count_only: bool,
}

#[derive(Args)]
pub struct ConvertArgs {
    #[arg(long, value_enum)]
    from: InputFormat,
    #[arg(long, value_enum)]
    to: OutputFormat,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Label inventory with head rules; every label gets the default
    /// rule when absent.
    #[arg(long)]
    rules: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "fine")]
    mode: Mode,
}

#[derive(Args)]
pub struct StatsArgs {
    #[arg(long)]
    data: PathBuf,
    /// Write histogram and label counts as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
pub struct BenchArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Timed passes after one warm-up pass (at least 3).
    #[arg(long, default_value_t = 5)]
    passes: usize,
    #[arg(long)]
    contextual: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Train a parser.
    Train(TrainArgs),
    /// Analyse the compounds of a corpus.
    Parse(ParseArgs),
    /// Score predictions against gold analyses.
    Eval(EvalArgs),
    /// List every bracketing of a compound.
    Enumerate(EnumerateArgs),
    /// Convert between bracket, dependency and span formats.
    Convert(ConvertArgs),
    /// Corpus statistics.
    Stats(StatsArgs),
    /// Measure parsing throughput.
    Bench(BenchArgs),
}

/// Invalid flag values; reported like argument errors.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn one_line(text: &str) -> String {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with("Usage:") && !l.starts_with("For more information"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{}", e);
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = one_line(&e.render().to_string());
            eprintln!("{}", if msg.starts_with("error:") { msg } else { format!("error: {}", msg) });
            return ExitCode::from(2);
        }
    };
    let result = match cli.command {
        Command::Train(a) => commands::train(a),
        Command::Parse(a) => commands::parse(a),
        Command::Eval(a) => commands::eval(a),
        Command::Enumerate(a) => commands::enumerate(a),
        Command::Convert(a) => commands::convert(a),
        Command::Stats(a) => commands::stats(a),
        Command::Bench(a) => commands::bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", one_line(&format!("{:#}", e)));
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
