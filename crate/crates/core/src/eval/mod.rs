//! Scoring of generated contradictions and solutions against case
//! references, batch runs over collections, statistics, keyword projection
//! and report artifacts.

pub mod export;
pub mod metrics;
pub mod oracle;
pub mod plot;
pub mod project;
pub mod report;
pub mod runner;
pub mod vectors;

use std::path::PathBuf;

pub use metrics::{cosine_similarity, match_counts, matched, mean, precision, recall, sample_sd, MatchCounts, MatchMode, PairSet};
pub use report::{Aggregate, Aggregation, CaseScore, EvalFinding, EvalKind, EvalReport, SolutionScore};
pub use runner::{
    parameter_count_stats, run_contradiction_eval, run_solution_eval, solution_similarity, ContradictionEvalOptions, CountSample, CountStats, SolutionEvalOptions,
};

use crate::gateway::GatewayError;
use crate::prompts::PromptError;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),
    #[error("vector dimensions differ or are empty ({left} vs {right})")]
    Shape { left: usize, right: usize },
    #[error("({0}, {1}) is not a valid contradiction pair")]
    InvalidPair(u8, u8),
    #[error("{0}")]
    Precondition(String),
    #[error("no case could be scored ({0})")]
    NothingScored(String),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },
    #[error("report aggregates do not match its scores: {0}")]
    Inconsistent(String),
    #[error("word vectors {}: {message}", path.display())]
    WordVectors { path: PathBuf, message: String },
}
