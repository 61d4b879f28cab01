use thiserror::Error;

/// Errors raised while loading or validating a corpus.
#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: parse error: {message}")]
    Parse { line: usize, message: String },
    #[error("query {qid}: {message}")]
    Invalid { qid: String, message: String },
    #[error("corpus file is empty")]
    Empty,
}

impl CorpusError {
    pub(crate) fn invalid(qid: &str, message: impl Into<String>) -> Self {
        CorpusError::Invalid {
            qid: qid.to_string(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DetectorError {
    #[error("invalid detector configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FairRankError {
    /// One of the groups is empty or has zero total utility.
    #[error("fairness constraint unavailable: {0}")]
    FairnessUnavailable(String),
    #[error("linear program is unbounded; the ranking program was built incorrectly")]
    Unbounded,
    #[error("inconsistent problem dimensions: {0}")]
    Dimension(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BvnError {
    #[error("no perfect matching on the support; input deviates from doubly stochastic by {max_deviation:e}")]
    NoPerfectMatching { max_deviation: f64 },
    #[error("invalid input matrix: {0}")]
    InvalidInput(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("no policy for query {0}")]
    MissingPolicy(String),
    #[error("no outlier vector for query {0}")]
    MissingOutliers(String),
    #[error("query {qid}: {message}")]
    Mismatch { qid: String, message: String },
}
