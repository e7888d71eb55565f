//! Report files.
//!
//! CSV columns, one row per case score (contradiction reports) or per case
//! and principle (solution reports):
//!
//! | column | meaning |
//! |---|---|
//! | kind | `contradiction` or `solution` |
//! | collection | collection name |
//! | match_mode | contradiction reports only |
//! | aggregation | `macro` or `micro` |
//! | model_id, strategy, case_id | row dimensions |
//! | principle | solution reports only |
//! | recall, precision | per-case scores |
//! | recall_hits, recall_total, precision_hits, precision_total | counts behind them |
//! | generated_count, parameter_count, incomplete_count | generated pairs, distinct parameters, unparsed relations |
//! | generated, matched | pairs as `i>w` separated by spaces |
//! | similarity | mean cosine similarity (solution reports) |
//! | scores | individual similarities separated by spaces |
//!
//! JSON is the full serialized report.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::metrics::{MatchCounts, MatchMode, PairSet};
use super::report::{Aggregation, CaseScore, EvalKind, EvalReport, SolutionScore};
use super::EvalError;
use crate::prompts::PromptStrategy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Csv,
    Json,
}

impl ExportFormat {
    /// `.csv` means CSV; anything else JSON.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => Self::Csv,
            _ => Self::Json,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Row {
    kind: EvalKind,
    collection: String,
    match_mode: Option<MatchMode>,
    aggregation: Aggregation,
    model_id: String,
    strategy: PromptStrategy,
    case_id: String,
    principle: Option<u8>,
    recall: Option<f64>,
    precision: Option<f64>,
    recall_hits: Option<usize>,
    recall_total: Option<usize>,
    precision_hits: Option<usize>,
    precision_total: Option<usize>,
    generated_count: Option<usize>,
    parameter_count: Option<usize>,
    incomplete_count: Option<usize>,
    generated: String,
    matched: String,
    similarity: Option<f64>,
    scores: String,
}

fn pairs_text(p: &PairSet) -> String {
    p.to_string()
}

fn parse_pairs(text: &str) -> Result<PairSet, String> {
    let mut set = PairSet::new();
    for item in text.split_whitespace() {
        let (i, w) = item.split_once('>').ok_or_else(|| format!("bad pair {item:?}"))?;
        let parse = |s: &str| s.parse::<u8>().map_err(|_| format!("bad pair {item:?}"));
        set.insert(parse(i)?, parse(w)?).map_err(|e| e.to_string())?;
    }
    Ok(set)
}

fn rows(report: &EvalReport) -> Vec<Row> {
    let base = |model_id: &str, strategy: PromptStrategy, case_id: &str| Row {
        kind: report.kind,
        collection: report.collection.clone(),
        match_mode: report.match_mode,
        aggregation: report.aggregation,
        model_id: model_id.to_owned(),
        strategy,
        case_id: case_id.to_owned(),
        principle: None,
        recall: None,
        precision: None,
        recall_hits: None,
        recall_total: None,
        precision_hits: None,
        precision_total: None,
        generated_count: None,
        parameter_count: None,
        incomplete_count: None,
        generated: String::new(),
        matched: String::new(),
        similarity: None,
        scores: String::new(),
    };
    let mut out = Vec::new();
    for s in &report.case_scores {
        out.push(Row {
            recall: Some(s.recall),
            precision: Some(s.precision),
            recall_hits: Some(s.counts.recall_hits),
            recall_total: Some(s.counts.recall_total),
            precision_hits: Some(s.counts.precision_hits),
            precision_total: Some(s.counts.precision_total),
            generated_count: Some(s.generated_count),
            parameter_count: Some(s.parameter_count),
            incomplete_count: Some(s.incomplete_count),
            generated: pairs_text(&s.generated),
            matched: pairs_text(&s.matched),
            ..base(&s.model_id, s.strategy, &s.case_id)
        });
    }
    for s in &report.solution_scores {
        out.push(Row {
            principle: Some(s.principle),
            similarity: Some(s.similarity),
            scores: s.scores.iter().map(f64::to_string).collect::<Vec<_>>().join(" "),
            ..base(&s.model_id, s.strategy, &s.case_id)
        });
    }
    out
}

/// Writes the report after confirming its aggregates are consistent.
pub fn export_report(report: &EvalReport, format: ExportFormat, path: &Path) -> Result<(), EvalError> {
    report.check_aggregates()?;
    let io = |source| EvalError::Io { path: path.to_owned(), source };
    let text = match format {
        ExportFormat::Json => serde_json::to_string_pretty(report).expect("reports serialize") + "\n",
        ExportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for row in rows(report) {
                w.serialize(row).map_err(|e| EvalError::Format { path: path.to_owned(), message: e.to_string() })?;
            }
            String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv is utf-8")
        }
    };
    std::fs::write(path, text).map_err(io)
}

/// Reads a JSON report, or rebuilds one from CSV rows with recomputed
/// aggregates and no findings.
pub fn import_report(path: &Path) -> Result<EvalReport, EvalError> {
    let bad = |message: String| EvalError::Format { path: path.to_owned(), message };
    let text = std::fs::read_to_string(path).map_err(|source| EvalError::Io { path: path.to_owned(), source })?;
    if ExportFormat::from_path(path) == ExportFormat::Json {
        let report: EvalReport = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
        report.check_aggregates()?;
        return Ok(report);
    }
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut report: Option<EvalReport> = None;
    for (n, row) in reader.deserialize::<Row>().enumerate() {
        let row = row.map_err(|e| bad(e.to_string()))?;
        let line = n + 2;
        let r = report.get_or_insert_with(|| {
            let mut r = EvalReport::new(row.kind, &row.collection, row.match_mode, row.aggregation);
            r.created_at.clear();
            r
        });
        let need = |v: Option<usize>, col: &str| v.ok_or_else(|| bad(format!("line {line}: {col} is empty")));
        match row.kind {
            EvalKind::Contradiction => r.case_scores.push(CaseScore {
                case_id: row.case_id,
                strategy: row.strategy,
                model_id: row.model_id,
                recall: row.recall.ok_or_else(|| bad(format!("line {line}: recall is empty")))?,
                precision: row.precision.ok_or_else(|| bad(format!("line {line}: precision is empty")))?,
                counts: MatchCounts {
                    recall_hits: need(row.recall_hits, "recall_hits")?,
                    recall_total: need(row.recall_total, "recall_total")?,
                    precision_hits: need(row.precision_hits, "precision_hits")?,
                    precision_total: need(row.precision_total, "precision_total")?,
                },
                generated_count: need(row.generated_count, "generated_count")?,
                parameter_count: need(row.parameter_count, "parameter_count")?,
                incomplete_count: need(row.incomplete_count, "incomplete_count")?,
                generated: parse_pairs(&row.generated).map_err(|m| bad(format!("line {line}: {m}")))?,
                matched: parse_pairs(&row.matched).map_err(|m| bad(format!("line {line}: {m}")))?,
            }),
            EvalKind::Solution => r.solution_scores.push(SolutionScore {
                case_id: row.case_id,
                strategy: row.strategy,
                model_id: row.model_id,
                principle: row.principle.ok_or_else(|| bad(format!("line {line}: principle is empty")))?,
                similarity: row.similarity.ok_or_else(|| bad(format!("line {line}: similarity is empty")))?,
                scores: row.scores.split_whitespace().map(|s| s.parse::<f64>().map_err(|_| bad(format!("line {line}: bad score {s:?}")))).collect::<Result<_, _>>()?,
                solutions: Vec::new(),
            }),
        }
    }
    let mut report = report.ok_or_else(|| bad("no rows".into()))?;
    report.finalize();
    Ok(report)
}

/// Writes `<stem>.json` and `<stem>.csv` into `dir`.
pub fn export_both(report: &EvalReport, dir: &Path, stem: &str) -> Result<Vec<PathBuf>, EvalError> {
    std::fs::create_dir_all(dir).map_err(|source| EvalError::Io { path: dir.to_owned(), source })?;
    let mut out = Vec::new();
    for (ext, format) in [("json", ExportFormat::Json), ("csv", ExportFormat::Csv)] {
        let path = dir.join(format!("{stem}.{ext}"));
        export_report(report, format, &path)?;
        out.push(path);
    }
    Ok(out)
}
