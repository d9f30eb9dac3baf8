//! The `soliclone` pipeline: ingest → dedup → extract → embed → pairs →
//! sample → review → report, plus the LLM documentation stages.
//!
//! Every stage reads and writes files under `--out-dir`; each artifact gets
//! a `.meta.json` sidecar with the config hash and each stage a run
//! manifest under `runs/`.

pub mod artifacts;
pub mod config;
pub mod error;
mod stages;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use chrono::{DateTime, TimeZone, Utc};
use clap::{Args, Parser, Subcommand, ValueEnum};

use soliclone_core::llmdoc::{PromptStyle, ProviderKind};
use soliclone_core::pairs::{PairingPolicy, SetLabel};
use soliclone_core::review::SessionMode;
use soliclone_core::Execution;

pub use config::PipelineConfig;
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "soliclone",
    version,
    about = "Type-4 clone detection for Solidity functions"
)]
pub struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Run data-parallel stages on one thread.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse an address export, keep active contracts and store their sources.
    Ingest(IngestArgs),
    /// Collapse whitespace-variant duplicate sources.
    Dedup(CorpusArg),
    /// Dataset statistics and compiler-version distribution.
    Stats(StatsArgs),
    /// Extract functions into JSONL.
    Extract(ExtractArgs),
    /// Embed function code and header comments.
    Embed(EmbedArgs),
    /// Score and classify function pairs.
    Pairs(PairsArgs),
    /// Stratified sample of one pair set.
    Sample(SampleArgs),
    #[command(subcommand)]
    Review(ReviewCommand),
    #[command(subcommand)]
    Llm(LlmCommand),
    /// Render the result tables as JSON and Markdown.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub addresses: Option<PathBuf>,
    /// Directory holding `<address>.sol` files or `<address>/` folders.
    #[arg(long)]
    pub sources: Option<PathBuf>,
    #[arg(long)]
    pub min_tx: Option<u64>,
    #[arg(long)]
    pub cutoff: Option<String>,
    /// Corpus directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CorpusArg {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Table,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Keep every function, not only documented public/external ones.
    #[arg(long)]
    pub keep_all_visibilities: bool,
    #[arg(long)]
    pub min_comment_tokens: Option<usize>,
    /// Also write a CSV with the same columns.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[arg(long)]
    pub functions: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PairsArgs {
    #[arg(long)]
    pub functions: Option<PathBuf>,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long)]
    pub policy: Option<PairingPolicy>,
    #[arg(long)]
    pub code_threshold: Option<f64>,
    #[arg(long)]
    pub comment_threshold: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub stripe_report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    #[arg(long)]
    pub set: Option<SetLabel>,
    /// `auto` or a fixed size.
    #[arg(long)]
    pub n: Option<String>,
    #[arg(long)]
    pub confidence: Option<f64>,
    #[arg(long)]
    pub margin: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum ReviewCommand {
    /// Serve the review HTTP API (and the UI, if built).
    Serve(ServeArgs),
    /// Create a session from sample files.
    Create(CreateArgs),
    /// Append judgments and resolutions from JSONL files.
    Import(ImportArgs),
    /// Write a session's judgments, verdicts, agreement and metrics.
    Export(ExportArgs),
}

#[derive(Debug, Args)]
pub struct StoreArg {
    /// Review store directory.
    #[arg(long)]
    pub store: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub store: StoreArg,
    #[arg(long)]
    pub port: Option<u16>,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long)]
    pub static_dir: Option<PathBuf>,
    #[arg(long)]
    pub token_env: Option<String>,
}

#[derive(Debug, Args)]
pub struct CreateArgs {
    #[command(flatten)]
    pub store: StoreArg,
    #[arg(long)]
    pub name: String,
    /// Sample files; defaults to every `sample-*.jsonl` in the output directory.
    #[arg(long = "sample")]
    pub samples: Vec<PathBuf>,
    /// Functions shown to raters; defaults to the extracted functions.
    #[arg(long)]
    pub functions: Option<PathBuf>,
    /// Comma-separated rater ids.
    #[arg(long, value_delimiter = ',')]
    pub raters: Vec<String>,
    #[arg(long, value_enum, default_value = "full")]
    pub mode: Mode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Pilot,
    Full,
}

impl From<Mode> for SessionMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Pilot => SessionMode::Pilot,
            Mode::Full => SessionMode::Full,
        }
    }
}

#[derive(Debug, Args)]
pub struct ImportArgs {
    #[command(flatten)]
    pub store: StoreArg,
    #[arg(long)]
    pub session: String,
    #[arg(long)]
    pub judgments: Option<PathBuf>,
    #[arg(long)]
    pub resolutions: Option<PathBuf>,
    #[arg(long)]
    pub close: bool,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub store: StoreArg,
    #[arg(long)]
    pub session: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum LlmCommand {
    /// Generate summaries for functions.
    Summarize(SummarizeArgs),
    /// Look for hidden clones among uncommented homonymous functions.
    Scan(ScanArgs),
}

#[derive(Debug, Args)]
pub struct ProviderArgs {
    #[arg(long)]
    pub provider: Option<ProviderKind>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub endpoint: Option<String>,
    /// Recorded exchanges for the replay provider.
    #[arg(long)]
    pub replay: Option<PathBuf>,
    #[arg(long)]
    pub style: Option<PromptStyle>,
}

#[derive(Debug, Args)]
pub struct SummarizeArgs {
    #[arg(long)]
    pub functions: Option<PathBuf>,
    #[command(flatten)]
    pub provider: ProviderArgs,
    /// Only functions without a header comment.
    #[arg(long)]
    pub only_uncommented: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    /// Corpus to scan; all functions are extracted from it.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Use these functions instead of extracting the corpus.
    #[arg(long)]
    pub functions: Option<PathBuf>,
    #[arg(long)]
    pub top_contracts: Option<usize>,
    #[arg(long)]
    pub min_words: Option<usize>,
    /// Generated-summary similarity threshold.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub code_threshold: Option<f64>,
    #[command(flatten)]
    pub provider: ProviderArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    /// Review session whose verdicts feed the validation tables.
    #[arg(long)]
    pub session: Option<String>,
    #[command(flatten)]
    pub store: StoreArg,
}

/// Resolved configuration and execution strategy shared by the stages.
pub struct Ctx {
    pub config: PipelineConfig,
    pub exec: Execution,
}

impl Ctx {
    pub fn out(&self, name: &str) -> PathBuf {
        self.config.paths.out_dir.join(name)
    }

    pub fn or_out(&self, given: &Option<PathBuf>, name: &str) -> PathBuf {
        given.clone().unwrap_or_else(|| self.out(name))
    }

    pub fn corpus_dir(&self, given: &Option<PathBuf>) -> PathBuf {
        self.or_out(given, "corpus")
    }

    pub fn store_dir(&self, given: &StoreArg) -> PathBuf {
        self.or_out(&given.store, "review")
    }
}

/// Timestamp source: `SOURCE_DATE_EPOCH` when set, for reproducible output.
pub fn now() -> DateTime<Utc> {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse::<i64>().ok())
        .and_then(|secs| Utc.timestamp_opt(secs, 0).single())
        .unwrap_or_else(Utc::now)
}

fn apply_overrides(cli: &Cli, config: &mut PipelineConfig) {
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(dir) = &cli.out_dir {
        config.paths.out_dir = dir.clone();
    }
    let provider = |config: &mut PipelineConfig, p: &ProviderArgs| {
        if let Some(kind) = p.provider {
            config.llm.provider.kind = kind;
        }
        if let Some(m) = &p.model {
            config.llm.provider.model_id = m.clone();
        }
        if let Some(e) = &p.endpoint {
            config.llm.provider.endpoint = Some(e.clone());
        }
        if let Some(r) = &p.replay {
            config.llm.provider.replay_path = Some(r.clone());
        }
        if let Some(s) = p.style {
            config.llm.style = s;
        }
    };
    match &cli.command {
        Command::Ingest(a) => {
            if let Some(v) = a.min_tx {
                config.corpus.min_tx = v;
            }
            if let Some(v) = &a.cutoff {
                config.corpus.cutoff = v.clone();
            }
            if let Some(v) = &a.addresses {
                config.paths.addresses = Some(v.clone());
            }
            if let Some(v) = &a.sources {
                config.paths.sources = Some(v.clone());
            }
        }
        Command::Extract(a) => {
            if a.keep_all_visibilities {
                config.extract.keep_all_visibilities = true;
            }
            if let Some(v) = a.min_comment_tokens {
                config.extract.min_comment_tokens = v;
            }
        }
        Command::Pairs(a) => {
            if let Some(v) = a.policy {
                config.pairs.policy = v;
            }
            if let Some(v) = a.code_threshold {
                config.pairs.code_threshold = v;
            }
            if let Some(v) = a.comment_threshold {
                config.pairs.comment_threshold = v;
            }
        }
        Command::Sample(a) => {
            if let Some(v) = a.set {
                config.sample.set = v;
            }
            if let Some(v) = &a.n {
                config.sample.n = v.clone();
            }
            if let Some(v) = a.confidence {
                config.sample.confidence = v;
            }
            if let Some(v) = a.margin {
                config.sample.margin = v;
            }
        }
        Command::Review(ReviewCommand::Serve(a)) => {
            if let Some(v) = a.port {
                config.review.port = v;
            }
            if let Some(v) = &a.static_dir {
                config.review.static_dir = Some(v.clone());
            }
            if let Some(v) = &a.token_env {
                config.review.token_env = Some(v.clone());
            }
        }
        Command::Review(ReviewCommand::Create(a)) if !a.raters.is_empty() => {
            config.review.raters = a.raters.clone();
        }
        Command::Llm(LlmCommand::Summarize(a)) => provider(config, &a.provider),
        Command::Llm(LlmCommand::Scan(a)) => {
            provider(config, &a.provider);
            if let Some(v) = a.top_contracts {
                config.llm.top_contracts = v;
            }
            if let Some(v) = a.min_words {
                config.llm.min_words = v;
            }
            if let Some(v) = a.threshold {
                config.llm.threshold = v;
            }
            if let Some(v) = a.code_threshold {
                config.llm.code_threshold = v;
            }
        }
        _ => {}
    }
}

/// Resolves the configuration (defaults < file < flags) and runs the command.
pub fn run(cli: Cli) -> Result<(), CliError> {
    let mut config = PipelineConfig::load(cli.config.as_deref())?;
    apply_overrides(&cli, &mut config);
    config.validate()?;
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    let ctx = Ctx { config, exec };
    log::debug!(
        "config hash {} ({} execution)",
        ctx.config.hash(),
        ctx.exec.name()
    );
    match &cli.command {
        Command::Ingest(a) => stages::corpus::ingest(&ctx, a),
        Command::Dedup(a) => stages::corpus::dedup(&ctx, a),
        Command::Stats(a) => stages::corpus::stats(&ctx, a),
        Command::Extract(a) => stages::corpus::extract(&ctx, a),
        Command::Embed(a) => stages::scoring::embed(&ctx, a),
        Command::Pairs(a) => stages::scoring::pairs(&ctx, a),
        Command::Sample(a) => stages::scoring::sample(&ctx, a),
        Command::Review(c) => stages::review::dispatch(&ctx, c),
        Command::Llm(c) => stages::llm::dispatch(&ctx, c),
        Command::Report(a) => stages::report::report(&ctx, a),
    }
}

/// Parses `args` (program name first) and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                error::EXIT_CONFIG
            } else {
                error::EXIT_OK
            };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => error::EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub(crate) fn require(path: &Path, stage: &str) -> Result<(), CliError> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::missing(path, stage))
    }
}
