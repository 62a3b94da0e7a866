use std::path::PathBuf;

use anaphora_core::prompt::Strategy;
use anaphora_core::report::Format;
use anaphora_core::Split;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "anaphora",
    version,
    about = "Czech pronominal anaphora resolution toolkit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Load dataset files, check every record and print split statistics.
    Validate(ValidateArgs),
    /// Write fine-tuning input/target pairs for one split.
    Export(ExportArgs),
    /// Rule-based baseline over external dependency parses.
    #[command(subcommand)]
    Baseline(BaselineCmd),
    /// Render prompts.
    #[command(subcommand)]
    Prompt(PromptCmd),
    /// Render, complete, parse, score and report one prompting experiment.
    Run(RunArgs),
    /// Parse raw model responses into scorable form.
    Parse(ParseArgs),
    /// Score a predictions file and write a report.
    Score(ScoreArgs),
    /// Aggregate a scores file into stratified reports.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DataArgs {
    /// Dataset files (JSON lines, CSV or TSV), typically one per split.
    #[arg(long = "data", required = true, num_args = 1..)]
    pub data: Vec<PathBuf>,
    /// Fail if any record is rejected.
    #[arg(long)]
    pub strict: bool,
    /// JSON object mapping source column names to canonical field names.
    #[arg(long)]
    pub aliases: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Exit with status 1 unless passage counts equal the published ones.
    #[arg(long)]
    pub expect_published: bool,
    /// Also write the summary as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ExportArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value = "train")]
    pub split: Split,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FallbackArg {
    Nearest,
    Abstain,
    Both,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineCmd {
    /// Write passage texts as blank-line separated paragraphs for an external
    /// parser, plus the matching id order (`<out>.ids`).
    Prepare {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value = "test")]
        split: Split,
        #[arg(long)]
        out: PathBuf,
    },
    /// Resolve every passage of a split from its CoNLL-U parse and score it.
    Run {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value = "test")]
        split: Split,
        #[arg(long)]
        conllu: PathBuf,
        /// Id order written by `baseline prepare`; maps `# newpar`
        /// paragraphs to passages.
        #[arg(long)]
        ids: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "both")]
        fallback: FallbackArg,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptCmd {
    /// Render prompts for one split as JSON lines.
    Render {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value = "test")]
        split: Split,
        #[arg(long)]
        strategy: Strategy,
        #[arg(long, default_value_t = 0)]
        shots: usize,
        #[arg(long, default_value_t = 13)]
        seed: u64,
        /// Share of Yes/No items that get a distractor candidate.
        #[arg(long, default_value_t = 0.0)]
        negative_ratio: f64,
        #[arg(long)]
        limit: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MockArg {
    /// Answer every prompt with its gold answer.
    EchoGold,
    /// Answer every prompt with the empty string.
    Empty,
}

#[derive(Debug, Default, Args, Serialize)]
pub struct RunArgs {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, num_args = 1..)]
    pub data: Vec<PathBuf>,
    #[arg(long)]
    pub strict: bool,
    #[arg(long)]
    pub aliases: Option<PathBuf>,
    #[arg(long)]
    pub split: Option<Split>,
    #[arg(long)]
    pub strategy: Option<Strategy>,
    #[arg(long)]
    pub shots: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub negative_ratio: Option<f64>,
    #[arg(long)]
    pub limit: Option<usize>,
    /// Parse responses strictly (exact YES/NO, bracketed answers only).
    #[arg(long)]
    pub strict_parse: bool,
    #[arg(long)]
    pub run_dir: Option<PathBuf>,
    /// Use an in-process mock instead of an HTTP endpoint.
    #[arg(long, value_enum)]
    pub mock: Option<MockArg>,
    #[arg(long)]
    pub base_url: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long)]
    pub max_tokens: Option<u32>,
    /// Per-request timeout in seconds.
    #[arg(long)]
    pub timeout: Option<f64>,
    #[arg(long)]
    pub max_retries: Option<u32>,
    #[arg(long)]
    pub max_in_flight: Option<usize>,
    /// Environment variable holding the API key.
    #[arg(long)]
    pub api_key_env: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct ParseArgs {
    #[arg(long)]
    pub strategy: Strategy,
    /// JSON lines with `id` and `raw`.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub strict: bool,
    /// Rendered prompts; supplies Yes/No expected labels.
    #[arg(long)]
    pub prompts: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// JSON lines with `id` and one of `answer`, `tagged`, `span`.
    #[arg(long)]
    pub predictions: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// JSON lines with `id`, `verdict` and optional `failure`.
    #[arg(long)]
    pub scores: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "json,csv,markdown")]
    pub formats: Vec<Format>,
    /// `key=value` lines for the report header.
    #[arg(long = "meta")]
    pub meta: Vec<String>,
}
