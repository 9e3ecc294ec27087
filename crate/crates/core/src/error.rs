use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("document is empty")]
    EmptyDocument,

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("malformed docx: {0}")]
    MalformedDocx(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("lexicon line {line}: {message}")]
    LexiconParse { line: usize, message: String },

    #[error("unknown rating {0:?}")]
    UnknownRating(String),

    #[error("unknown label {0:?}")]
    UnknownLabel(String),

    #[error("unknown severity {0:?}")]
    UnknownSeverity(String),

    #[error("could not parse verdict: {reason}")]
    VerdictParse { reason: String, raw: String },

    #[error("analyzer unavailable: {0}")]
    AnalyzerUnavailable(String),

    #[error("no verdicts to aggregate")]
    EmptyAnalysis,

    #[error("percentages undefined for zero analysed units")]
    DivisionDomain,

    #[error("no pairs to evaluate")]
    EmptyEval,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("line {line}: {message}")]
    InputFormat { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable code, used in service error bodies.
    pub fn code(&self) -> &'static str {
        match self {
            Error::EmptyDocument => "empty_document",
            Error::UnsupportedFormat(_) => "unsupported_format",
            Error::MalformedDocx(_) => "malformed_docx",
            Error::Config(_) => "config_error",
            Error::LexiconParse { .. } => "lexicon_parse_error",
            Error::UnknownRating(_) => "unknown_rating",
            Error::UnknownLabel(_) => "unknown_label",
            Error::UnknownSeverity(_) => "unknown_severity",
            Error::VerdictParse { .. } => "verdict_parse_error",
            Error::AnalyzerUnavailable(_) => "analyzer_unavailable",
            Error::EmptyAnalysis => "empty_analysis",
            Error::DivisionDomain => "division_domain",
            Error::EmptyEval => "empty_eval",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::InputFormat { .. } => "input_format",
            Error::Io(_) => "io_error",
        }
    }
}
