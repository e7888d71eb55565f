use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::metrics::{mean, sample_sd, MatchCounts, MatchMode, PairSet};
use super::EvalError;
use crate::prompts::PromptStrategy;

pub const REPORT_FORMAT: &str = "triz-eval/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalKind {
    Contradiction,
    Solution,
}

/// Macro averages per-case scores; micro pools the hit and total counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    #[default]
    Macro,
    Micro,
}

impl EvalKind {
    pub fn slug(self) -> &'static str {
        match self {
            Self::Contradiction => "contradiction",
            Self::Solution => "solution",
        }
    }
}

impl Aggregation {
    pub fn slug(self) -> &'static str {
        match self {
            Self::Macro => "macro",
            Self::Micro => "micro",
        }
    }
}

impl std::str::FromStr for Aggregation {
    type Err = EvalError;
    fn from_str(s: &str) -> Result<Self, EvalError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "macro" => Ok(Self::Macro),
            "micro" => Ok(Self::Micro),
            _ => Err(EvalError::Precondition(format!("unknown aggregation {s:?} (macro, micro)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseScore {
    pub case_id: String,
    pub strategy: PromptStrategy,
    pub model_id: String,
    pub recall: f64,
    pub precision: f64,
    #[serde(flatten)]
    pub counts: MatchCounts,
    pub generated_count: usize,
    /// Distinct parameters mentioned by the generated pairs.
    pub parameter_count: usize,
    /// Relations the parser could not resolve to two parameter numbers.
    pub incomplete_count: usize,
    pub generated: PairSet,
    pub matched: PairSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionScore {
    pub case_id: String,
    pub strategy: PromptStrategy,
    pub model_id: String,
    pub principle: u8,
    /// Mean of `scores`.
    pub similarity: f64,
    pub scores: Vec<f64>,
    #[serde(default)]
    pub solutions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub strategy: PromptStrategy,
    pub model_id: String,
    pub cases: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recall: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_pair_count: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_parameter_count: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub similarity_mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub similarity_sd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalFinding {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub case_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<PromptStrategy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_id: Option<String>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub format: String,
    pub id: String,
    pub kind: EvalKind,
    pub collection: String,
    pub step: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub match_mode: Option<MatchMode>,
    pub aggregation: Aggregation,
    pub created_at: String,
    #[serde(default)]
    pub case_scores: Vec<CaseScore>,
    #[serde(default)]
    pub solution_scores: Vec<SolutionScore>,
    pub aggregates: Vec<Aggregate>,
    #[serde(default)]
    pub findings: Vec<EvalFinding>,
}

fn group_key(strategy: PromptStrategy, model: &str) -> (String, PromptStrategy) {
    (model.to_owned(), strategy)
}

fn ratio(hits: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    }
}

pub fn compute_aggregates(kind: EvalKind, aggregation: Aggregation, case_scores: &[CaseScore], solution_scores: &[SolutionScore]) -> Vec<Aggregate> {
    let mut out = Vec::new();
    match kind {
        EvalKind::Contradiction => {
            let mut groups: BTreeMap<(String, PromptStrategy), Vec<&CaseScore>> = BTreeMap::new();
            for s in case_scores {
                groups.entry(group_key(s.strategy, &s.model_id)).or_default().push(s);
            }
            for ((model_id, strategy), scores) in groups {
                let (recall, precision) = match aggregation {
                    Aggregation::Macro => (
                        mean(&scores.iter().map(|s| s.recall).collect::<Vec<_>>()),
                        mean(&scores.iter().map(|s| s.precision).collect::<Vec<_>>()),
                    ),
                    Aggregation::Micro => {
                        let sum = |f: fn(&MatchCounts) -> usize| scores.iter().map(|s| f(&s.counts)).sum::<usize>();
                        (
                            Some(ratio(sum(|c| c.recall_hits), sum(|c| c.recall_total))),
                            Some(ratio(sum(|c| c.precision_hits), sum(|c| c.precision_total))),
                        )
                    }
                };
                out.push(Aggregate {
                    strategy,
                    model_id,
                    cases: scores.len(),
                    recall,
                    precision,
                    mean_pair_count: mean(&scores.iter().map(|s| s.generated_count as f64).collect::<Vec<_>>()),
                    mean_parameter_count: mean(&scores.iter().map(|s| s.parameter_count as f64).collect::<Vec<_>>()),
                    similarity_mean: None,
                    similarity_sd: None,
                });
            }
        }
        EvalKind::Solution => {
            let mut groups: BTreeMap<(String, PromptStrategy), Vec<f64>> = BTreeMap::new();
            for s in solution_scores {
                groups.entry(group_key(s.strategy, &s.model_id)).or_default().push(s.similarity);
            }
            for ((model_id, strategy), sims) in groups {
                out.push(Aggregate {
                    strategy,
                    model_id,
                    cases: sims.len(),
                    recall: None,
                    precision: None,
                    mean_pair_count: None,
                    mean_parameter_count: None,
                    similarity_mean: mean(&sims),
                    similarity_sd: sample_sd(&sims),
                });
            }
        }
    }
    out
}

impl EvalReport {
    pub fn new(kind: EvalKind, collection: &str, match_mode: Option<MatchMode>, aggregation: Aggregation) -> Self {
        Self {
            format: REPORT_FORMAT.into(),
            id: String::new(),
            kind,
            collection: collection.to_owned(),
            step: if kind == EvalKind::Contradiction { 3 } else { 4 },
            match_mode,
            aggregation,
            created_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            case_scores: Vec::new(),
            solution_scores: Vec::new(),
            aggregates: Vec::new(),
            findings: Vec::new(),
        }
    }

    /// Recomputes aggregates and derives the id from the content.
    pub fn finalize(&mut self) {
        self.aggregates = compute_aggregates(self.kind, self.aggregation, &self.case_scores, &self.solution_scores);
        self.id.clear();
        let body = serde_json::to_string(self).expect("reports serialize");
        self.id = format!("r-{}", &hex::encode(Sha256::digest(body.as_bytes()))[..12]);
    }

    /// Confirms the stored aggregates equal a recomputation from the scores.
    pub fn check_aggregates(&self) -> Result<(), EvalError> {
        let fresh = compute_aggregates(self.kind, self.aggregation, &self.case_scores, &self.solution_scores);
        if fresh.len() != self.aggregates.len() {
            return Err(EvalError::Inconsistent(format!("{} aggregate rows stored, {} recomputed", self.aggregates.len(), fresh.len())));
        }
        for (a, b) in self.aggregates.iter().zip(&fresh) {
            let close = |x: Option<f64>, y: Option<f64>| match (x, y) {
                (Some(x), Some(y)) => (x - y).abs() <= 1e-12,
                (None, None) => true,
                _ => false,
            };
            let same = a.strategy == b.strategy
                && a.model_id == b.model_id
                && a.cases == b.cases
                && close(a.recall, b.recall)
                && close(a.precision, b.precision)
                && close(a.mean_pair_count, b.mean_pair_count)
                && close(a.mean_parameter_count, b.mean_parameter_count)
                && close(a.similarity_mean, b.similarity_mean)
                && close(a.similarity_sd, b.similarity_sd);
            if !same {
                return Err(EvalError::Inconsistent(format!("{} / {}", a.model_id, a.strategy.slug())));
            }
        }
        Ok(())
    }

    pub fn aggregate(&self, model_id: &str, strategy: PromptStrategy) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.model_id == model_id && a.strategy == strategy)
    }

    /// Plain-text summary: one block per model, one column per strategy,
    /// one row per measure.
    pub fn table(&self) -> String {
        let mut out = format!("report {} ({}, collection {}", self.id, self.kind.slug(), self.collection);
        if let Some(m) = self.match_mode {
            out.push_str(&format!(", {m}"));
        }
        out.push_str(&format!(", {})\n", self.aggregation.slug()));
        let f = |x: Option<f64>| x.map_or_else(|| "-".to_owned(), |v| format!("{v:.3}"));
        let mut models: Vec<&str> = Vec::new();
        for a in &self.aggregates {
            if !models.contains(&a.model_id.as_str()) {
                models.push(&a.model_id);
            }
        }
        for model in models {
            let cols: Vec<&Aggregate> = self.aggregates.iter().filter(|a| a.model_id == model).collect();
            out.push_str(&format!("\n{:<12}", model));
            for a in &cols {
                out.push_str(&format!(" {:>13}", a.strategy.title()));
            }
            out.push('\n');
            let rows: Vec<(&str, Box<dyn Fn(&Aggregate) -> String>)> = match self.kind {
                EvalKind::Contradiction => vec![
                    ("Recall", Box::new(|a: &Aggregate| f(a.recall))),
                    ("Precision", Box::new(|a: &Aggregate| f(a.precision))),
                    ("Pairs", Box::new(|a: &Aggregate| f(a.mean_pair_count))),
                    ("Parameters", Box::new(|a: &Aggregate| f(a.mean_parameter_count))),
                    ("Cases", Box::new(|a: &Aggregate| a.cases.to_string())),
                ],
                EvalKind::Solution => vec![
                    ("Similarity", Box::new(|a: &Aggregate| f(a.similarity_mean))),
                    ("SD", Box::new(|a: &Aggregate| f(a.similarity_sd))),
                    ("Scores", Box::new(|a: &Aggregate| a.cases.to_string())),
                ],
            };
            for (name, cell) in rows {
                out.push_str(&format!("{name:<12}"));
                for a in &cols {
                    out.push_str(&format!(" {:>13}", cell(a)));
                }
                out.push('\n');
            }
        }
        for finding in &self.findings {
            out.push_str(&format!("note: {}{}\n", finding.case_id.as_deref().map(|c| format!("{c}: ")).unwrap_or_default(), finding.message));
        }
        out
    }
}
