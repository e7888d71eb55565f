//! The TRIZ knowledge base: 39 engineering parameters, 40 inventive principles
//! and the classic 39x39 contradiction matrix.
//!
//! The data lives in three versioned files under `data/`:
//!
//! * `parameters.toml`: `[[parameter]]` tables with `number`, `name`, `definition`
//! * `principles.toml`: `[[principle]]` tables with `number`, `name`, `description`
//! * `matrix.txt`: one line per cell, `improving,worsening: p p p` or `-` for empty
//!
//! The bundled copies are compiled in; [`KnowledgeBase::load_dir`] reads an
//! alternative directory with the same layout. Loading is two-phase: files are
//! parsed permissively into [`RawKnowledge`], then [`RawKnowledge::validate`]
//! reports every structural problem. Only a finding-free bundle becomes a
//! [`KnowledgeBase`], which is immutable from then on.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::text::{normalize_name, tokens};

pub const PARAMETER_COUNT: u8 = 39;
pub const PRINCIPLE_COUNT: u8 = 40;
pub const MAX_PRINCIPLES_PER_CELL: usize = 4;

pub const PARAMETERS_FILE: &str = "parameters.toml";
pub const PRINCIPLES_FILE: &str = "principles.toml";
pub const MATRIX_FILE: &str = "matrix.txt";

const BUNDLED_PARAMETERS: &str = include_str!("../data/parameters.toml");
const BUNDLED_PRINCIPLES: &str = include_str!("../data/principles.toml");
const BUNDLED_MATRIX: &str = include_str!("../data/matrix.txt");

#[derive(Debug, thiserror::Error)]
pub enum KnowledgeError {
    #[error("{kind} number {value} is out of range (valid: {min}..={max})")]
    OutOfRange { kind: &'static str, value: i64, min: u8, max: u8 },
    #[error("ambiguous parameter name {query:?}: candidates {candidates:?}")]
    Ambiguous { query: String, candidates: Vec<u8> },
    #[error("parameter name must not be empty")]
    EmptyName,
    #[error("failed to read {path}: {source}")]
    Load {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}:{line}: {message}")]
    Parse { file: String, line: usize, message: String },
    #[error("knowledge base failed validation:\n{0}")]
    Invalid(ValidationReport),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineeringParameter {
    pub number: u8,
    pub name: String,
    pub definition: String,
}

impl EngineeringParameter {
    /// Listing form used in prompts: `33. Ease of operation`.
    pub fn label(&self) -> String {
        format!("{}. {}", self.number, self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InventivePrinciple {
    pub number: u8,
    pub name: String,
    pub description: String,
}

impl InventivePrinciple {
    /// Canonical form, e.g. `1-Segmentation`.
    pub fn label(&self) -> String {
        format!("{}-{}", self.number, self.name)
    }
}

/// Dense 39x39 table; `cells[(improving - 1) * 39 + (worsening - 1)]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContradictionMatrix {
    cells: Vec<Vec<u8>>,
}

impl ContradictionMatrix {
    pub fn cell(&self, improving: u8, worsening: u8) -> Result<&[u8], KnowledgeError> {
        check_parameter(improving as i64)?;
        check_parameter(worsening as i64)?;
        Ok(&self.cells[index(improving, worsening)])
    }

    /// Iterates `(improving, worsening, principles)` in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (u8, u8, &[u8])> {
        self.cells.iter().enumerate().map(|(i, c)| {
            let n = PARAMETER_COUNT as usize;
            ((i / n + 1) as u8, (i % n + 1) as u8, c.as_slice())
        })
    }
}

fn index(improving: u8, worsening: u8) -> usize {
    (improving as usize - 1) * PARAMETER_COUNT as usize + (worsening as usize - 1)
}

fn check_parameter(n: i64) -> Result<u8, KnowledgeError> {
    if (1..=PARAMETER_COUNT as i64).contains(&n) {
        Ok(n as u8)
    } else {
        Err(KnowledgeError::OutOfRange { kind: "parameter", value: n, min: 1, max: PARAMETER_COUNT })
    }
}

fn check_principle(n: i64) -> Result<u8, KnowledgeError> {
    if (1..=PRINCIPLE_COUNT as i64).contains(&n) {
        Ok(n as u8)
    } else {
        Err(KnowledgeError::OutOfRange { kind: "principle", value: n, min: 1, max: PRINCIPLE_COUNT })
    }
}

/// One structural problem found while validating knowledge data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub file: String,
    pub rule: FindingRule,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingRule {
    Count,
    DuplicateNumber,
    OutOfRange,
    EmptyField,
    DiagonalNotEmpty,
    TooManyPrinciples,
    MissingCell,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }

    fn push(&mut self, file: &str, rule: FindingRule, message: impl Into<String>) {
        self.findings.push(Finding { file: file.to_owned(), rule, message: message.into() });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for finding in &self.findings {
            writeln!(f, "{}: {:?}: {}", finding.file, finding.rule, finding.message)?;
        }
        Ok(())
    }
}

#[derive(Debug, Deserialize)]
struct ParameterFile {
    #[serde(default)]
    parameter: Vec<RawParameter>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct RawParameter {
    pub number: i64,
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub definition: String,
}

#[derive(Debug, Deserialize)]
struct PrincipleFile {
    #[serde(default)]
    principle: Vec<RawPrinciple>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct RawPrinciple {
    pub number: i64,
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub description: String,
}

#[derive(Debug, Clone)]
pub struct RawCell {
    pub line: usize,
    pub improving: i64,
    pub worsening: i64,
    pub principles: Vec<i64>,
}

/// Parsed but unvalidated knowledge data.
#[derive(Debug, Clone)]
pub struct RawKnowledge {
    pub parameters: Vec<RawParameter>,
    pub principles: Vec<RawPrinciple>,
    pub cells: Vec<RawCell>,
}

impl RawKnowledge {
    pub fn parse(parameters: &str, principles: &str, matrix: &str) -> Result<Self, KnowledgeError> {
        let parameters: ParameterFile = toml::from_str(parameters).map_err(|e| toml_error(PARAMETERS_FILE, parameters, e))?;
        let principles: PrincipleFile = toml::from_str(principles).map_err(|e| toml_error(PRINCIPLES_FILE, principles, e))?;
        Ok(Self {
            parameters: parameters.parameter,
            principles: principles.principle,
            cells: parse_matrix(matrix)?,
        })
    }

    pub fn bundled() -> Self {
        Self::parse(BUNDLED_PARAMETERS, BUNDLED_PRINCIPLES, BUNDLED_MATRIX).expect("bundled knowledge data parses")
    }

    pub fn read_dir(dir: &Path) -> Result<Self, KnowledgeError> {
        let read = |name: &str| {
            let path = dir.join(name);
            std::fs::read_to_string(&path).map_err(|source| KnowledgeError::Load { path, source })
        };
        Self::parse(&read(PARAMETERS_FILE)?, &read(PRINCIPLES_FILE)?, &read(MATRIX_FILE)?)
    }

    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();

        if self.parameters.len() != PARAMETER_COUNT as usize {
            report.push(
                PARAMETERS_FILE,
                FindingRule::Count,
                format!("expected {PARAMETER_COUNT} parameters, found {}", self.parameters.len()),
            );
        }
        let mut seen = BTreeSet::new();
        for p in &self.parameters {
            if check_parameter(p.number).is_err() {
                report.push(PARAMETERS_FILE, FindingRule::OutOfRange, format!("parameter number {} outside 1..=39", p.number));
            }
            if !seen.insert(p.number) {
                report.push(PARAMETERS_FILE, FindingRule::DuplicateNumber, format!("parameter number {} appears twice", p.number));
            }
            if p.name.trim().is_empty() {
                report.push(PARAMETERS_FILE, FindingRule::EmptyField, format!("parameter {} has no name", p.number));
            }
            if p.definition.trim().is_empty() {
                report.push(PARAMETERS_FILE, FindingRule::EmptyField, format!("parameter {} has no definition", p.number));
            }
        }

        if self.principles.len() != PRINCIPLE_COUNT as usize {
            report.push(
                PRINCIPLES_FILE,
                FindingRule::Count,
                format!("expected {PRINCIPLE_COUNT} principles, found {}", self.principles.len()),
            );
        }
        let mut seen = BTreeSet::new();
        for p in &self.principles {
            if check_principle(p.number).is_err() {
                report.push(PRINCIPLES_FILE, FindingRule::OutOfRange, format!("principle number {} outside 1..=40", p.number));
            }
            if !seen.insert(p.number) {
                report.push(PRINCIPLES_FILE, FindingRule::DuplicateNumber, format!("principle number {} appears twice", p.number));
            }
            if p.name.trim().is_empty() {
                report.push(PRINCIPLES_FILE, FindingRule::EmptyField, format!("principle {} has no name", p.number));
            }
        }

        let mut keys = BTreeSet::new();
        for cell in &self.cells {
            let at = format!("line {}", cell.line);
            if check_parameter(cell.improving).is_err() || check_parameter(cell.worsening).is_err() {
                report.push(
                    MATRIX_FILE,
                    FindingRule::OutOfRange,
                    format!("{at}: cell ({},{}) outside the 39x39 grid", cell.improving, cell.worsening),
                );
                continue;
            }
            if !keys.insert((cell.improving, cell.worsening)) {
                report.push(
                    MATRIX_FILE,
                    FindingRule::DuplicateNumber,
                    format!("{at}: cell ({},{}) listed twice", cell.improving, cell.worsening),
                );
            }
            for &p in &cell.principles {
                if check_principle(p).is_err() {
                    report.push(
                        MATRIX_FILE,
                        FindingRule::OutOfRange,
                        format!("{at}: cell ({},{}) references principle {p}", cell.improving, cell.worsening),
                    );
                }
            }
            if cell.principles.len() > MAX_PRINCIPLES_PER_CELL {
                report.push(
                    MATRIX_FILE,
                    FindingRule::TooManyPrinciples,
                    format!("{at}: cell ({},{}) lists {} principles", cell.improving, cell.worsening, cell.principles.len()),
                );
            }
            if cell.improving == cell.worsening && !cell.principles.is_empty() {
                report.push(MATRIX_FILE, FindingRule::DiagonalNotEmpty, format!("{at}: diagonal cell ({0},{0}) is not empty", cell.improving));
            }
        }
        let expected = PARAMETER_COUNT as usize * PARAMETER_COUNT as usize;
        if keys.len() != expected {
            report.push(MATRIX_FILE, FindingRule::MissingCell, format!("expected {expected} cells, found {}", keys.len()));
        }
        report
    }
}

fn toml_error(file: &str, source: &str, err: toml::de::Error) -> KnowledgeError {
    let line = err
        .span()
        .map(|span| source[..span.start.min(source.len())].matches('\n').count() + 1)
        .unwrap_or(0);
    KnowledgeError::Parse { file: file.to_owned(), line, message: err.message().to_owned() }
}

fn parse_matrix(text: &str) -> Result<Vec<RawCell>, KnowledgeError> {
    let err = |line: usize, message: String| KnowledgeError::Parse { file: MATRIX_FILE.to_owned(), line, message };
    let mut cells = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.trim();
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        let (key, value) = content.split_once(':').ok_or_else(|| err(line, "expected `improving,worsening: principles`".into()))?;
        let (imp, wor) = key.split_once(',').ok_or_else(|| err(line, format!("bad cell key {key:?}")))?;
        let improving = imp.trim().parse::<i64>().map_err(|_| err(line, format!("bad improving index {imp:?}")))?;
        let worsening = wor.trim().parse::<i64>().map_err(|_| err(line, format!("bad worsening index {wor:?}")))?;
        let value = value.trim();
        let principles = if value == "-" || value.is_empty() {
            Vec::new()
        } else {
            value
                .split_whitespace()
                .map(|p| p.parse::<i64>().map_err(|_| err(line, format!("bad principle number {p:?}"))))
                .collect::<Result<_, _>>()?
        };
        cells.push(RawCell { line, improving, worsening, principles });
    }
    if cells.is_empty() {
        return Err(err(0, "matrix file contains no cells".into()));
    }
    Ok(cells)
}

/// Validated, immutable TRIZ knowledge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnowledgeBase {
    parameters: Vec<EngineeringParameter>,
    principles: Vec<InventivePrinciple>,
    matrix: ContradictionMatrix,
}

impl KnowledgeBase {
    /// The compiled-in classic knowledge base.
    pub fn bundled() -> &'static KnowledgeBase {
        static BUNDLED: OnceLock<KnowledgeBase> = OnceLock::new();
        BUNDLED.get_or_init(|| KnowledgeBase::from_raw(RawKnowledge::bundled()).expect("bundled knowledge base is valid"))
    }

    pub fn load_dir(dir: &Path) -> Result<Self, KnowledgeError> {
        Self::from_raw(RawKnowledge::read_dir(dir)?)
    }

    pub fn from_raw(raw: RawKnowledge) -> Result<Self, KnowledgeError> {
        let report = raw.validate();
        if !report.is_empty() {
            return Err(KnowledgeError::Invalid(report));
        }
        let mut parameters: Vec<_> = raw
            .parameters
            .into_iter()
            .map(|p| EngineeringParameter { number: p.number as u8, name: p.name.trim().to_owned(), definition: p.definition.trim().to_owned() })
            .collect();
        parameters.sort_by_key(|p| p.number);
        let mut principles: Vec<_> = raw
            .principles
            .into_iter()
            .map(|p| InventivePrinciple { number: p.number as u8, name: p.name.trim().to_owned(), description: p.description.trim().to_owned() })
            .collect();
        principles.sort_by_key(|p| p.number);
        let mut cells = vec![Vec::new(); PARAMETER_COUNT as usize * PARAMETER_COUNT as usize];
        for cell in raw.cells {
            cells[index(cell.improving as u8, cell.worsening as u8)] = cell.principles.into_iter().map(|p| p as u8).collect();
        }
        Ok(Self { parameters, principles, matrix: ContradictionMatrix { cells } })
    }

    pub fn parameters(&self) -> &[EngineeringParameter] {
        &self.parameters
    }

    pub fn principles(&self) -> &[InventivePrinciple] {
        &self.principles
    }

    pub fn matrix(&self) -> &ContradictionMatrix {
        &self.matrix
    }

    pub fn parameter_by_number(&self, n: i64) -> Result<&EngineeringParameter, KnowledgeError> {
        let n = check_parameter(n)?;
        Ok(&self.parameters[n as usize - 1])
    }

    pub fn principle_by_number(&self, n: i64) -> Result<&InventivePrinciple, KnowledgeError> {
        let n = check_principle(n)?;
        Ok(&self.principles[n as usize - 1])
    }

    /// Looks a parameter up by name.
    ///
    /// Exact mode compares normalized names (case, punctuation and spacing
    /// ignored). Fuzzy mode falls back to token containment: a parameter is a
    /// candidate when all of the query's tokens occur in its name or all of its
    /// tokens occur in the query. Candidates are ranked by token overlap
    /// (Jaccard); a tie at the top is an [`KnowledgeError::Ambiguous`] error.
    pub fn parameter_by_name(&self, name: &str, fuzzy: bool) -> Result<Option<&EngineeringParameter>, KnowledgeError> {
        let query = normalize_name(name);
        if query.is_empty() {
            return Err(KnowledgeError::EmptyName);
        }
        if let Some(p) = self.parameters.iter().find(|p| normalize_name(&p.name) == query) {
            return Ok(Some(p));
        }
        if !fuzzy {
            return Ok(None);
        }
        let q: BTreeSet<String> = tokens(name).into_iter().collect();
        let mut scored: Vec<(f64, &EngineeringParameter)> = self
            .parameters
            .iter()
            .filter_map(|p| {
                let t: BTreeSet<String> = tokens(&p.name).into_iter().collect();
                if q.is_subset(&t) || t.is_subset(&q) {
                    let inter = q.intersection(&t).count() as f64;
                    let union = q.union(&t).count() as f64;
                    Some((inter / union, p))
                } else {
                    None
                }
            })
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.number.cmp(&b.1.number)));
        match scored.as_slice() {
            [] => Ok(None),
            [(best, p), rest @ ..] => {
                let tied: Vec<u8> = rest.iter().filter(|(s, _)| s == best).map(|(_, p)| p.number).collect();
                if tied.is_empty() {
                    Ok(Some(p))
                } else {
                    let mut candidates = vec![p.number];
                    candidates.extend(tied);
                    Err(KnowledgeError::Ambiguous { query: name.to_owned(), candidates })
                }
            }
        }
    }

    /// Recommended principles for an (improving, worsening) pair, in stored order.
    pub fn matrix_lookup(&self, improving: i64, worsening: i64) -> Result<Vec<&InventivePrinciple>, KnowledgeError> {
        let improving = check_parameter(improving)?;
        let worsening = check_parameter(worsening)?;
        Ok(self.matrix.cells[index(improving, worsening)]
            .iter()
            .map(|&p| &self.principles[p as usize - 1])
            .collect())
    }

    /// Principle lookup by display form (`"1-Segmentation"`, `"Segmentation"`,
    /// `"principle 11"`). Used when parsing free text.
    pub fn principle_by_name(&self, name: &str) -> Option<&InventivePrinciple> {
        let query = normalize_name(name);
        self.principles.iter().find(|p| normalize_name(&p.name) == query)
    }

    pub fn principle_numbers(&self) -> BTreeMap<u8, &str> {
        self.principles.iter().map(|p| (p.number, p.name.as_str())).collect()
    }
}

/// Validates a knowledge directory, or the bundle when `dir` is `None`.
/// Unreadable files are errors; content problems are findings.
pub fn validate_knowledge_base(dir: Option<&Path>) -> Result<ValidationReport, KnowledgeError> {
    let raw = match dir {
        Some(dir) => RawKnowledge::read_dir(dir)?,
        None => RawKnowledge::bundled(),
    };
    Ok(raw.validate())
}

/// Writes the bundled data files into `dir`, e.g. to start a customised copy.
pub fn export_bundle(dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(PARAMETERS_FILE), BUNDLED_PARAMETERS)?;
    std::fs::write(dir.join(PRINCIPLES_FILE), BUNDLED_PRINCIPLES)?;
    std::fs::write(dir.join(MATRIX_FILE), BUNDLED_MATRIX)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kb() -> &'static KnowledgeBase {
        KnowledgeBase::bundled()
    }

    #[test]
    fn parameters_by_number() {
        assert_eq!(kb().parameter_by_number(35).unwrap().name, "Adaptability or versatility");
        assert_eq!(kb().parameter_by_number(39).unwrap().name, "Productivity");
        assert_eq!(kb().parameter_by_number(1).unwrap().definition, "The mass of an object that is in motion.");
        let err = kb().parameter_by_number(0).unwrap_err();
        assert!(err.to_string().contains("1..=39"), "{err}");
    }

    #[test]
    fn parameters_by_name() {
        assert_eq!(kb().parameter_by_name("Ease of Operation", false).unwrap().unwrap().number, 33);
        assert_eq!(kb().parameter_by_name("ease of operation", false).unwrap().unwrap().number, 33);
        assert!(kb().parameter_by_name("Flux capacitance", false).unwrap().is_none());
        assert!(kb().parameter_by_name("Flux capacitance", true).unwrap().is_none());
        assert!(matches!(kb().parameter_by_name("  ", false), Err(KnowledgeError::EmptyName)));
    }

    #[test]
    fn fuzzy_lookup_resolves_or_reports_ambiguity() {
        assert_eq!(kb().parameter_by_name("Stability of the Object", true).unwrap().unwrap().number, 13);
        assert_eq!(kb().parameter_by_name("Device Complexity", true).unwrap().unwrap().number, 36);
        assert_eq!(kb().parameter_by_name("difficulty of detecting", true).unwrap().unwrap().number, 37);
        match kb().parameter_by_name("weight", true) {
            Err(KnowledgeError::Ambiguous { candidates, .. }) => assert_eq!(candidates, vec![1, 2]),
            other => panic!("expected ambiguity, got {other:?}"),
        }
        assert!(kb().parameter_by_name("Object-Affected Harmful", true).unwrap().is_none());
    }

    #[test]
    fn principles_by_number() {
        assert_eq!(kb().principle_by_number(1).unwrap().name, "Segmentation");
        assert_eq!(kb().principle_by_number(11).unwrap().name, "Beforehand cushioning");
        assert_eq!(kb().principle_by_number(28).unwrap().label(), "28-Mechanics substitution");
        assert!(kb().principle_by_number(41).is_err());
    }

    #[test]
    fn matrix_cells() {
        let nums = |i, w| kb().matrix_lookup(i, w).unwrap().iter().map(|p| p.number).collect::<Vec<_>>();
        assert_eq!(nums(39, 33), vec![1, 28, 7, 10]);
        assert!(nums(37, 35).contains(&1));
        assert!(nums(37, 32).contains(&11));
        for n in 1..=39 {
            assert!(nums(n, n).is_empty());
        }
        assert!(kb().matrix_lookup(0, 3).is_err());
        assert!(kb().matrix_lookup(3, 40).is_err());
    }

    #[test]
    fn bundle_is_clean_and_stable() {
        assert!(validate_knowledge_base(None).unwrap().is_empty());
        let again = KnowledgeBase::from_raw(RawKnowledge::bundled()).unwrap();
        assert_eq!(&again, kb());
    }

    #[test]
    fn injected_faults_are_reported() {
        let mut raw = RawKnowledge::bundled();
        raw.cells.iter_mut().find(|c| c.improving == 39 && c.worsening == 33).unwrap().principles.push(41);
        let report = raw.validate();
        assert_eq!(report.findings.len(), 2, "{report}");
        assert!(report.findings.iter().any(|f| f.rule == FindingRule::OutOfRange));
        // five principles in one cell trips the width check too
        assert!(report.findings.iter().any(|f| f.rule == FindingRule::TooManyPrinciples));

        let mut raw = RawKnowledge::bundled();
        raw.cells.iter_mut().find(|c| c.improving == 3 && c.worsening == 1).unwrap().principles = vec![41];
        let report = raw.validate();
        assert_eq!(report.findings.len(), 1, "{report}");
        assert_eq!(report.findings[0].rule, FindingRule::OutOfRange);

        let mut raw = RawKnowledge::bundled();
        raw.parameters.pop();
        let report = raw.validate();
        assert_eq!(report.findings.len(), 1, "{report}");
        assert_eq!(report.findings[0].rule, FindingRule::Count);

        let mut raw = RawKnowledge::bundled();
        raw.cells.iter_mut().find(|c| c.improving == 5 && c.worsening == 5).unwrap().principles = vec![1];
        assert_eq!(raw.validate().findings[0].rule, FindingRule::DiagonalNotEmpty);
    }

    #[test]
    fn missing_directory_is_a_load_error() {
        let err = validate_knowledge_base(Some(Path::new("/nonexistent/kb"))).unwrap_err();
        match err {
            KnowledgeError::Load { path, .. } => assert!(path.ends_with(PARAMETERS_FILE)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_matrix_line_reports_position() {
        let err = RawKnowledge::parse(BUNDLED_PARAMETERS, BUNDLED_PRINCIPLES, "# c\n1,2: 3 x\n").unwrap_err();
        assert!(err.to_string().contains("matrix.txt:2"), "{err}");
    }
}
