//! Case collections: schema, validation, persistence and the built-in seeds.
//!
//! A collection file is TOML with a version header:
//!
//! ```toml
//! format = "triz-cases/1"
//! name = "A"
//! few_shot_case_ids = ["submarine"]
//!
//! [[cases]]
//! id = "submarine"
//! # ...
//! ```
//!
//! [`import_dir`] reads a directory where every `*.toml` file holds one bare
//! case (the fields of a `[[cases]]` entry at top level).

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::knowledge::{PARAMETER_COUNT, PRINCIPLE_COUNT};

pub const FORMAT: &str = "triz-cases/1";
/// Collection name that requires every case to post-date the model cutoff.
pub const POST_CUTOFF_COLLECTION: &str = "B";

const SEED: &str = include_str!("../data/seed_cases.toml");

#[derive(Debug, thiserror::Error)]
pub enum CaseError {
    #[error("{}:{line}: {message}", path.display())]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("collection failed validation:\n{}", render_findings(.0))]
    Invalid(Vec<CaseFinding>),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn render_findings(findings: &[CaseFinding]) -> String {
    findings.iter().map(|f| format!("  {f}")).collect::<Vec<_>>().join("\n")
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemDescription {
    pub scenario: String,
    pub current_state: String,
    pub pain_point: String,
    pub requirement: String,
}

impl ProblemDescription {
    /// Names of the fields that are blank.
    pub fn blank_fields(&self) -> Vec<&'static str> {
        [
            ("scenario", &self.scenario),
            ("current_state", &self.current_state),
            ("pain_point", &self.pain_point),
            ("requirement", &self.requirement),
        ]
        .into_iter()
        .filter(|(_, v)| v.trim().is_empty())
        .map(|(k, _)| k)
        .collect()
    }

    /// The four-part framing the prompts consume.
    pub fn render(&self) -> String {
        format!(
            "Problem Scenario: {}\nCurrent State: {}\nPain Point: {}\nRequirement: {}",
            self.scenario.trim(),
            self.current_state.trim(),
            self.pain_point.trim(),
            self.requirement.trim()
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceContradiction {
    pub improving: u8,
    pub worsening: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explanation: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruthSolution {
    pub principle: u8,
    pub text: String,
}

/// A manually coded keyword. `source` is `ground-truth` or a model id such
/// as `gpt-4`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordAnnotation {
    pub source: String,
    pub keyword: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Case {
    pub id: String,
    pub title: String,
    pub domain_tag: String,
    #[serde(default)]
    pub published_after_cutoff: bool,
    pub problem: ProblemDescription,
    #[serde(default)]
    pub reference_contradictions: Vec<ReferenceContradiction>,
    #[serde(default)]
    pub reference_principles: Vec<u8>,
    #[serde(default)]
    pub ground_truth_solutions: Vec<GroundTruthSolution>,
    #[serde(default)]
    pub solution_keywords: Vec<KeywordAnnotation>,
    #[serde(default)]
    pub source_citation: String,
}

impl Case {
    pub fn reference_pairs(&self) -> BTreeSet<(u8, u8)> {
        self.reference_contradictions.iter().map(|c| (c.improving, c.worsening)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseCollection {
    pub format: String,
    pub name: String,
    #[serde(default)]
    pub few_shot_case_ids: Vec<String>,
    pub cases: Vec<Case>,
}

impl CaseCollection {
    pub fn new(name: impl Into<String>, cases: Vec<Case>, few_shot_case_ids: Vec<String>) -> Self {
        Self { format: FORMAT.to_owned(), name: name.into(), few_shot_case_ids, cases }
    }

    pub fn get(&self, id: &str) -> Option<&Case> {
        self.cases.iter().find(|c| c.id == id)
    }

    pub fn is_few_shot(&self, id: &str) -> bool {
        self.few_shot_case_ids.iter().any(|f| f == id)
    }

    /// Cases that may be scored: everything not reserved for few-shot use.
    pub fn eval_cases(&self) -> impl Iterator<Item = &Case> {
        self.cases.iter().filter(|c| !self.is_few_shot(&c.id))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseRule {
    EmptyField,
    OutOfRange,
    SelfPair,
    DuplicateId,
    SolutionPrincipleNotReferenced,
    CutoffFlag,
    UnknownFewShotId,
    EmptyCollection,
    NotEvaluable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseFinding {
    pub case_id: Option<String>,
    pub field: String,
    pub rule: CaseRule,
    pub message: String,
}

impl std::fmt::Display for CaseFinding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.case_id {
            Some(id) => write!(f, "[{id}] {}: {}", self.field, self.message),
            None => write!(f, "{}: {}", self.field, self.message),
        }
    }
}

fn finding(case: &Case, field: impl Into<String>, rule: CaseRule, message: impl Into<String>) -> CaseFinding {
    CaseFinding { case_id: Some(case.id.clone()), field: field.into(), rule, message: message.into() }
}

/// Checks every case invariant. Empty output means the case is valid.
pub fn validate_case(case: &Case) -> Vec<CaseFinding> {
    let mut out = Vec::new();
    for (field, value) in [("id", &case.id), ("title", &case.title), ("domain_tag", &case.domain_tag)] {
        if value.trim().is_empty() {
            out.push(finding(case, field, CaseRule::EmptyField, format!("{field} is empty")));
        }
    }
    for field in case.problem.blank_fields() {
        out.push(finding(case, format!("problem.{field}"), CaseRule::EmptyField, format!("problem.{field} is empty")));
    }
    let param_ok = |n: u8| (1..=PARAMETER_COUNT).contains(&n);
    let principle_ok = |n: u8| (1..=PRINCIPLE_COUNT).contains(&n);
    for (i, c) in case.reference_contradictions.iter().enumerate() {
        let field = format!("reference_contradictions[{i}]");
        for (side, n) in [("improving", c.improving), ("worsening", c.worsening)] {
            if !param_ok(n) {
                out.push(finding(case, format!("{field}.{side}"), CaseRule::OutOfRange, format!("parameter {n} outside 1..=39")));
            }
        }
        if c.improving == c.worsening {
            out.push(finding(case, &field, CaseRule::SelfPair, format!("improving and worsening are both {}", c.improving)));
        }
    }
    for (i, &p) in case.reference_principles.iter().enumerate() {
        if !principle_ok(p) {
            out.push(finding(case, format!("reference_principles[{i}]"), CaseRule::OutOfRange, format!("principle {p} outside 1..=40")));
        }
    }
    for (i, s) in case.ground_truth_solutions.iter().enumerate() {
        let field = format!("ground_truth_solutions[{i}]");
        if !principle_ok(s.principle) {
            out.push(finding(case, format!("{field}.principle"), CaseRule::OutOfRange, format!("principle {} outside 1..=40", s.principle)));
        } else if !case.reference_principles.contains(&s.principle) {
            out.push(finding(
                case,
                format!("{field}.principle"),
                CaseRule::SolutionPrincipleNotReferenced,
                format!("principle {} is not listed in reference_principles", s.principle),
            ));
        }
        if s.text.trim().is_empty() {
            out.push(finding(case, format!("{field}.text"), CaseRule::EmptyField, "solution text is empty"));
        }
    }
    for (i, k) in case.solution_keywords.iter().enumerate() {
        if k.source.trim().is_empty() || k.keyword.trim().is_empty() {
            out.push(finding(case, format!("solution_keywords[{i}]"), CaseRule::EmptyField, "keyword annotation has an empty field"));
        }
    }
    out
}

/// Findings that keep a valid case out of contradiction scoring. Such cases
/// still drive the interactive workflow.
pub fn evaluation_readiness(case: &Case) -> Vec<CaseFinding> {
    let mut out = Vec::new();
    if case.reference_contradictions.is_empty() {
        out.push(finding(case, "reference_contradictions", CaseRule::NotEvaluable, "no reference contradictions; excluded from contradiction evaluation"));
    }
    out
}

pub fn validate_collection(collection: &CaseCollection) -> Vec<CaseFinding> {
    let mut out = Vec::new();
    let top = |field: &str, rule, message: String| CaseFinding { case_id: None, field: field.to_owned(), rule, message };
    if collection.cases.is_empty() {
        out.push(top("cases", CaseRule::EmptyCollection, "collection has no cases".into()));
    }
    if collection.name.trim().is_empty() {
        out.push(top("name", CaseRule::EmptyField, "collection name is empty".into()));
    }
    let mut ids = BTreeSet::new();
    for case in &collection.cases {
        if !ids.insert(case.id.as_str()) {
            out.push(finding(case, "id", CaseRule::DuplicateId, format!("case id {:?} appears more than once", case.id)));
        }
        out.extend(validate_case(case));
        if collection.name == POST_CUTOFF_COLLECTION && !case.published_after_cutoff {
            out.push(finding(
                case,
                "published_after_cutoff",
                CaseRule::CutoffFlag,
                "collection B only admits cases published after the model cutoff",
            ));
        }
    }
    for id in &collection.few_shot_case_ids {
        if !ids.contains(id.as_str()) {
            out.push(top("few_shot_case_ids", CaseRule::UnknownFewShotId, format!("few-shot id {id:?} is not a case in the collection")));
        }
    }
    out
}

fn parse_error(path: &Path, text: &str, err: toml::de::Error) -> CaseError {
    let line = err.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1).unwrap_or(0);
    CaseError::Parse { path: path.to_owned(), line, message: err.message().to_owned() }
}

/// Parses and validates collection text. `path` is only used in messages.
pub fn parse_collection(text: &str, path: &Path) -> Result<CaseCollection, CaseError> {
    if text.trim().is_empty() {
        return Err(CaseError::Parse { path: path.to_owned(), line: 1, message: "file is empty".into() });
    }
    let collection: CaseCollection = toml::from_str(text).map_err(|e| parse_error(path, text, e))?;
    if collection.format != FORMAT {
        return Err(CaseError::Parse {
            path: path.to_owned(),
            line: 0,
            message: format!("unsupported format {:?} (expected {FORMAT:?})", collection.format),
        });
    }
    let findings = validate_collection(&collection);
    if findings.is_empty() {
        Ok(collection)
    } else {
        Err(CaseError::Invalid(findings))
    }
}

pub fn load_collection(path: &Path) -> Result<CaseCollection, CaseError> {
    let text = std::fs::read_to_string(path).map_err(|source| CaseError::Io { path: path.to_owned(), source })?;
    parse_collection(&text, path)
}

pub fn to_toml(collection: &CaseCollection) -> String {
    let body = toml::to_string_pretty(collection).expect("case collections always serialize");
    format!("# format: {FORMAT}\n\n{body}")
}

/// Writes a valid collection. Invalid collections are rejected before any
/// file is touched.
pub fn save_collection(collection: &CaseCollection, path: &Path) -> Result<(), CaseError> {
    let findings = validate_collection(collection);
    if !findings.is_empty() {
        return Err(CaseError::Invalid(findings));
    }
    std::fs::write(path, to_toml(collection)).map_err(|source| CaseError::Io { path: path.to_owned(), source })
}

/// Builds a collection from a directory of single-case files, sorted by file
/// name so the result does not depend on directory order.
pub fn import_dir(dir: &Path, name: &str, few_shot_case_ids: Vec<String>) -> Result<CaseCollection, CaseError> {
    let io = |source| CaseError::Io { path: dir.to_owned(), source };
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "toml"))
        .collect();
    files.sort();
    let mut cases = Vec::with_capacity(files.len());
    for path in files {
        let text = std::fs::read_to_string(&path).map_err(|source| CaseError::Io { path: path.clone(), source })?;
        cases.push(toml::from_str::<Case>(&text).map_err(|e| parse_error(&path, &text, e))?);
    }
    let collection = CaseCollection::new(name, cases, few_shot_case_ids);
    let findings = validate_collection(&collection);
    if findings.is_empty() {
        Ok(collection)
    } else {
        Err(CaseError::Invalid(findings))
    }
}

/// Writes each case of a collection as its own file, the inverse of [`import_dir`].
pub fn export_dir(collection: &CaseCollection, dir: &Path) -> Result<(), CaseError> {
    std::fs::create_dir_all(dir).map_err(|source| CaseError::Io { path: dir.to_owned(), source })?;
    for case in &collection.cases {
        let path = dir.join(format!("{}.toml", case.id));
        let body = toml::to_string_pretty(case).expect("cases always serialize");
        std::fs::write(&path, body).map_err(|source| CaseError::Io { path, source })?;
    }
    Ok(())
}

/// The built-in seed collection.
pub fn seed_cases() -> CaseCollection {
    static SEEDS: OnceLock<CaseCollection> = OnceLock::new();
    SEEDS.get_or_init(|| parse_collection(SEED, Path::new("seed_cases.toml")).expect("seed collection is valid")).clone()
}

pub fn seed_toml() -> &'static str {
    SEED
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knowledge::KnowledgeBase;

    fn robot() -> Case {
        seed_cases().get("in-pipe-robot").unwrap().clone()
    }

    #[test]
    fn seeds_cover_the_reference_cases() {
        let seeds = seed_cases();
        assert!(seeds.cases.len() >= 4);
        let sub = seeds.get("submarine").unwrap();
        assert_eq!(sub.reference_pairs().into_iter().collect::<Vec<_>>(), vec![(39, 33)]);

        let robot = robot();
        assert_eq!(robot.reference_principles, vec![1, 11]);
        let p11 = robot.ground_truth_solutions.iter().find(|s| s.principle == 11).unwrap();
        assert!(p11.text.contains("pre-compression spring"));
        assert_eq!(robot.ground_truth_solutions.len(), 2);

        assert_eq!(seeds.get("test-tube-rack").unwrap().reference_principles, vec![35]);
        for id in &seeds.few_shot_case_ids {
            assert!(seeds.get(id).is_some());
        }
    }

    #[test]
    fn seed_contradictions_resolve() {
        let kb = KnowledgeBase::bundled();
        for case in &seed_cases().cases {
            for c in &case.reference_contradictions {
                kb.matrix_lookup(c.improving as i64, c.worsening as i64).unwrap();
            }
        }
    }

    #[test]
    fn robot_is_valid() {
        assert!(validate_case(&robot()).is_empty());
    }

    #[test]
    fn self_pair_is_one_finding() {
        let mut case = robot();
        case.reference_contradictions[0].worsening = case.reference_contradictions[0].improving;
        let f = validate_case(&case);
        assert_eq!(f.len(), 1, "{f:?}");
        assert_eq!(f[0].rule, CaseRule::SelfPair);
    }

    #[test]
    fn unreferenced_solution_principle_is_one_finding() {
        let mut case = robot();
        case.reference_principles = vec![1];
        let f = validate_case(&case);
        assert_eq!(f.len(), 1, "{f:?}");
        assert_eq!(f[0].rule, CaseRule::SolutionPrincipleNotReferenced);
    }

    #[test]
    fn principle_zero_fails_loading() {
        let text = seed_toml().replace("reference_principles = [35]", "reference_principles = [35, 0]");
        match parse_collection(&text, Path::new("x.toml")) {
            Err(CaseError::Invalid(f)) => assert!(f.iter().any(|f| f.rule == CaseRule::OutOfRange && f.case_id.as_deref() == Some("test-tube-rack"))),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_and_malformed_files_are_parse_errors() {
        assert!(matches!(parse_collection("", Path::new("e.toml")), Err(CaseError::Parse { .. })));
        let err = parse_collection("format = \"triz-cases/1\"\nname = 3\n", Path::new("m.toml")).unwrap_err();
        assert!(err.to_string().starts_with("m.toml:2"), "{err}");
    }

    #[test]
    fn collection_b_rejects_precutoff_cases() {
        let mut seeds = seed_cases();
        seeds.name = POST_CUTOFF_COLLECTION.into();
        let f = validate_collection(&seeds);
        let flagged: BTreeSet<_> = f.iter().filter(|f| f.rule == CaseRule::CutoffFlag).filter_map(|f| f.case_id.clone()).collect();
        assert_eq!(flagged, ["beverage-can", "desktop-fan", "submarine"].into_iter().map(String::from).collect());
    }

    #[test]
    fn missing_contradictions_are_an_evaluation_finding_only() {
        let rack = seed_cases().get("test-tube-rack").unwrap().clone();
        assert!(validate_case(&rack).is_empty());
        assert_eq!(evaluation_readiness(&rack)[0].rule, CaseRule::NotEvaluable);
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("seed.toml");
        save_collection(&seed_cases(), &path).unwrap();
        assert_eq!(load_collection(&path).unwrap(), seed_cases());
    }

    #[test]
    fn import_export_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let seeds = seed_cases();
        export_dir(&seeds, dir.path()).unwrap();
        let back = import_dir(dir.path(), &seeds.name, seeds.few_shot_case_ids.clone()).unwrap();
        let mut expected = seeds.cases.clone();
        expected.sort_by(|a, b| a.id.cmp(&b.id));
        assert_eq!(back.cases, expected);
    }

    #[test]
    fn unwritable_target_is_io_error() {
        let err = save_collection(&seed_cases(), Path::new("/nonexistent-dir/seed.toml")).unwrap_err();
        assert!(matches!(err, CaseError::Io { .. }));
    }
}
