mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Task-supervised windowing of dynamic networks.
#[derive(Debug, Parser)]
#[command(name = "winscale", version)]
struct Cli {
    /// Worker threads; defaults to the number of logical cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse an edge stream, bin it and write an archive.
    Ingest(IngestArgs),
    /// Score every uniform window size on every interval.
    Sweep(SweepArgs),
    /// Print the windowing a selector picks for one test interval.
    Select(SelectArgs),
    /// Run the train/test protocol described by a config file.
    Evaluate(EvaluateArgs),
    /// Cross-task matrix, Spearman and stability tables from score curves.
    Analyze(AnalyzeArgs),
    /// Tabulate report aggregates, optionally next to reference values.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Edge list with one `u,v,t` contact per line.
    #[arg(long)]
    pub edges: PathBuf,
    /// Bin width in timestamp units.
    #[arg(long)]
    pub resolution: u64,
    /// Start of the first bin; defaults to the earliest timestamp.
    #[arg(long)]
    pub origin: Option<u64>,
    /// Field delimiter, or `ws` for any whitespace.
    #[arg(long, default_value = ",")]
    pub delimiter: String,
    #[arg(long, default_value_t = 0)]
    pub src_col: usize,
    #[arg(long, default_value_t = 1)]
    pub dst_col: usize,
    #[arg(long, default_value_t = 2)]
    pub time_col: usize,
    /// Vertex attribute table; needs `--target`.
    #[arg(long, requires = "target")]
    pub attributes: Option<PathBuf>,
    /// Binary attribute to predict.
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long, default_value = ",")]
    pub attr_delimiter: String,
    /// Column kinds as `name=categorical|continuous`, repeatable.
    #[arg(long = "kind")]
    pub kinds: Vec<String>,
    /// Ground-truth change points, one 1-based step per line.
    #[arg(long)]
    pub change_points: Option<PathBuf>,
    /// Archive directory to create.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Task to sweep instead of the config's.
    #[arg(long)]
    pub task: Option<String>,
    /// Output JSON; a CSV with the same stem is written next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[arg(long)]
    pub archive: PathBuf,
    #[arg(long)]
    pub selector: String,
    #[arg(long)]
    pub task: String,
    /// Training steps as `start:end`, 1-based inclusive.
    #[arg(long)]
    pub train: Option<String>,
    /// Test steps as `start:end`, 1-based inclusive.
    #[arg(long)]
    pub test: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Task parameters as a JSON file.
    #[arg(long)]
    pub params: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Score-curve files written by `sweep`.
    #[arg(required = true)]
    pub curves: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Report files written by `evaluate`.
    #[arg(required = true)]
    pub reports: Vec<PathBuf>,
    /// CSV with columns `dataset,task,selector,value` to show side by side.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Write the table here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
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
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Ingest(a) => commands::ingest(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Select(a) => commands::select(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Analyze(a) => commands::analyze(a),
        Command::Report(a) => commands::report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            for line in e.messages() {
                eprintln!("error: {line}");
            }
            ExitCode::from(e.code())
        }
    }
}
