use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use scriptrate_core::analyzer::{Analyzer, AnalyzerConfig, AnalyzerKind, MockBackend, TcpBackend, MODEL_ADDR_ENV};
use scriptrate_core::lexicon::Lexicon;
use scriptrate_core::par::Parallelism;

use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "scriptrate", version, about = "Age-rating analysis for screenplays")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rate one or more scripts and write a JSON report per input.
    Analyze(AnalyzeArgs),
    /// Print the scenes found in a script.
    Segment(SegmentArgs),
    /// Score rating predictions or scene boundaries against ground truth.
    Eval(EvalArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
    Lines,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Rules,
    Model,
    Mock,
}

impl From<KindArg> for AnalyzerKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Rules => AnalyzerKind::Rules,
            KindArg::Model => AnalyzerKind::Model,
            KindArg::Mock => AnalyzerKind::Mock,
        }
    }
}

#[derive(Debug, Args)]
pub struct AnalyzerArgs {
    #[arg(long, value_enum, default_value = "rules")]
    pub analyzer: KindArg,
    /// JSON map from window-text sha256 to canned completion (mock analyzer).
    #[arg(long)]
    pub mock_fixture: Option<PathBuf>,
    /// host:port of the model adapter.
    #[arg(long, env = MODEL_ADDR_ENV)]
    pub model_addr: Option<String>,
    /// Lexicon file replacing the built-in rules.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Worker threads; 0 uses every core, 1 runs sequentially.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    #[arg(long, default_value_t = 1800)]
    pub max_window: usize,
    #[arg(long, default_value_t = 200)]
    pub overlap: usize,
}

impl AnalyzerArgs {
    pub fn lexicon(&self) -> Result<Lexicon, CliError> {
        match &self.lexicon {
            None => Ok(Lexicon::default_rules()),
            Some(path) => {
                let src = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Config(format!("cannot read lexicon {}: {e}", path.display())))?;
                Lexicon::parse(&src).map_err(|e| CliError::Config(format!("lexicon {}: {e}", path.display())))
            }
        }
    }

    pub fn analyzer_config(&self) -> Result<AnalyzerConfig, CliError> {
        let cfg = AnalyzerConfig {
            kind: self.analyzer.into(),
            max_window_tokens: self.max_window,
            overlap_tokens: self.overlap,
            ..AnalyzerConfig::default()
        };
        cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn mock_backend(&self) -> Result<Option<MockBackend>, CliError> {
        self.mock_fixture
            .as_deref()
            .map(|p| {
                MockBackend::from_path(p).map_err(|e| CliError::Config(format!("mock fixture {}: {e}", p.display())))
            })
            .transpose()
    }

    pub fn parallelism(&self) -> Parallelism {
        Parallelism::from_workers(self.workers)
    }

    /// Builds the analyzer, checking every flag before any input is read.
    pub fn build(&self) -> Result<Analyzer, CliError> {
        let lexicon = self.lexicon()?;
        let cfg = self.analyzer_config()?;
        let built = match self.analyzer {
            KindArg::Rules => Analyzer::rules(lexicon, cfg),
            KindArg::Mock => {
                let mock = self
                    .mock_backend()?
                    .ok_or_else(|| CliError::Config("--analyzer mock needs --mock-fixture".into()))?;
                Analyzer::with_backend(lexicon, cfg, Box::new(mock))
            }
            KindArg::Model => {
                let addr = self.model_addr.clone().ok_or_else(|| {
                    CliError::Config(format!("--analyzer model needs --model-addr or {MODEL_ADDR_ENV}"))
                })?;
                Analyzer::with_backend(lexicon, cfg, Box::new(TcpBackend::new(addr)))
            }
        };
        built.map_err(|e| CliError::Config(e.to_string()))
    }
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Report path for a single input, or a directory for several. Defaults
    /// to <stem>.report.json next to each input.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
    #[command(flatten)]
    pub analyzer: AnalyzerArgs,
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
    /// Print only heading line indices, comma-separated, as read by `eval --seg-truth`.
    #[arg(long)]
    pub boundaries: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Predictions (`doc_id<TAB>true<TAB>predicted`), or predicted boundaries with --seg-truth.
    pub predictions: PathBuf,
    /// Separate truth file (`doc_id<TAB>rating`); overrides the true column.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Score scene boundaries against this truth file instead of ratings.
    #[arg(long, conflicts_with_all = ["truth", "bootstrap"])]
    pub seg_truth: Option<PathBuf>,
    /// Boundary match tolerance in lines, with --seg-truth.
    #[arg(long, default_value_t = 0, requires = "seg_truth")]
    pub tolerance: usize,
    /// Bootstrap iterations for confidence intervals.
    #[arg(long)]
    pub bootstrap: Option<usize>,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "SCRIPTRATE_HOST", default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, env = "SCRIPTRATE_PORT", default_value_t = 8000)]
    pub port: u16,
    /// Hours an unsaved session is kept.
    #[arg(long, env = "SCRIPTRATE_RETENTION_HOURS", default_value_t = 24)]
    pub retention_hours: u64,
    /// SQLite file; sessions are kept in memory when omitted.
    #[arg(long, env = "SCRIPTRATE_DB")]
    pub db: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    pub max_upload_mb: usize,
    #[arg(long, default_value_t = 4)]
    pub max_concurrent_uploads: usize,
    #[command(flatten)]
    pub analyzer: AnalyzerArgs,
}
