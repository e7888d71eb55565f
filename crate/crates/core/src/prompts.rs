//! Prompt templates for the four workflow steps.
//!
//! Templates are plain text files under `templates/`:
//!
//! ```text
//! step1/default.txt  step2/default.txt
//! step3/{basic,cot,few-shot,cot-few-shot}.txt
//! step4/{basic,cot,few-shot,cot-few-shot}.txt
//! shots/3/{1,2,3}.toml  shots/4/{1,2,3}.toml
//! ```
//!
//! Lines starting with `%%` are comments and are removed on load, as is the
//! final newline. Placeholders are `[UPPER_SNAKE]` tokens from a closed set;
//! `[FEW_SHOT_EXAMPLES]` is reserved and filled from the shot files.
//! Substitution is a single left-to-right pass, so bound text is never
//! re-scanned for placeholders.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::cases::ProblemDescription;
use crate::knowledge::KnowledgeBase;

pub const CASE_DESCRIPTION: &str = "CASE_DESCRIPTION";
pub const TRIZ_PARAMETERS: &str = "TRIZ_PARAMETERS";
pub const PROBLEM_PARAMETERS_SELECTED: &str = "PROBLEM_PARAMETERS_SELECTED";
pub const INVENTIVE_PRINCIPLES: &str = "INVENTIVE_PRINCIPLES";
pub const FEW_SHOT_EXAMPLES: &str = "FEW_SHOT_EXAMPLES";

pub const PLACEHOLDERS: [&str; 5] = [CASE_DESCRIPTION, TRIZ_PARAMETERS, PROBLEM_PARAMETERS_SELECTED, INVENTIVE_PRINCIPLES, FEW_SHOT_EXAMPLES];

pub const SHOTS_PER_STEP: usize = 3;

macro_rules! bundled {
    ($($path:literal),* $(,)?) => {
        &[$(($path, include_str!(concat!("../templates/", $path)))),*]
    };
}

const BUNDLED: &[(&str, &str)] = bundled!(
    "step1/default.txt",
    "step2/default.txt",
    "step3/basic.txt",
    "step3/cot.txt",
    "step3/few-shot.txt",
    "step3/cot-few-shot.txt",
    "step4/basic.txt",
    "step4/cot.txt",
    "step4/few-shot.txt",
    "step4/cot-few-shot.txt",
    "shots/3/1.toml",
    "shots/3/2.toml",
    "shots/3/3.toml",
    "shots/4/1.toml",
    "shots/4/2.toml",
    "shots/4/3.toml",
);

#[derive(Debug, thiserror::Error)]
pub enum PromptError {
    #[error("unknown step {0} (expected 1..=4)")]
    UnknownStep(u8),
    #[error("step {0} needs a prompt strategy")]
    StrategyRequired(u8),
    #[error("step {0} has a single template and takes no strategy")]
    StrategyNotAllowed(u8),
    #[error("placeholder [{0}] is not bound")]
    Unbound(String),
    #[error("placeholder [{0}] is bound to empty text")]
    EmptyBinding(String),
    #[error("placeholder [{0}] is reserved for the engine")]
    Reserved(String),
    #[error("unknown prompt strategy {0:?} (expected basic, cot, few-shot or cot-few-shot)")]
    UnknownStrategy(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}: {message}")]
    Invalid { file: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PromptStrategy {
    #[serde(rename = "basic")]
    Basic,
    #[serde(rename = "cot")]
    ChainOfThought,
    #[serde(rename = "few-shot")]
    FewShot,
    #[serde(rename = "cot-few-shot")]
    ChainOfThoughtFewShot,
}

impl PromptStrategy {
    pub const ALL: [PromptStrategy; 4] = [Self::Basic, Self::ChainOfThought, Self::FewShot, Self::ChainOfThoughtFewShot];

    pub fn slug(self) -> &'static str {
        match self {
            Self::Basic => "basic",
            Self::ChainOfThought => "cot",
            Self::FewShot => "few-shot",
            Self::ChainOfThoughtFewShot => "cot-few-shot",
        }
    }

    /// Column heading used in report tables.
    pub fn title(self) -> &'static str {
        match self {
            Self::Basic => "Basic",
            Self::ChainOfThought => "CoT",
            Self::FewShot => "Few-shot",
            Self::ChainOfThoughtFewShot => "CoT&Few-shot",
        }
    }

    pub fn uses_shots(self) -> bool {
        matches!(self, Self::FewShot | Self::ChainOfThoughtFewShot)
    }
}

impl fmt::Display for PromptStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

impl FromStr for PromptStrategy {
    type Err = PromptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s.trim().to_ascii_lowercase().chars().filter(|c| c.is_ascii_alphanumeric()).collect();
        match key.as_str() {
            "basic" | "base" => Ok(Self::Basic),
            "cot" | "chainofthought" => Ok(Self::ChainOfThought),
            "fewshot" => Ok(Self::FewShot),
            "cotfewshot" | "chainofthoughtfewshot" => Ok(Self::ChainOfThoughtFewShot),
            _ => Err(PromptError::UnknownStrategy(s.to_owned())),
        }
    }
}

/// The strategy the workflow uses when the designer picks none.
pub fn default_strategy(step: u8) -> Result<PromptStrategy, PromptError> {
    match step {
        3 => Ok(PromptStrategy::ChainOfThought),
        4 => Ok(PromptStrategy::FewShot),
        1 | 2 => Err(PromptError::StrategyNotAllowed(step)),
        _ => Err(PromptError::UnknownStep(step)),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotRelation {
    pub improving: u8,
    pub improving_name: String,
    pub worsening: u8,
    pub worsening_name: String,
    pub explanation: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotSolution {
    pub principle: u8,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShotPayload {
    Relation(ShotRelation),
    Solution(ShotSolution),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FewShotExample {
    pub case_id: String,
    /// True when the shot text was written here rather than taken from its source.
    pub reconstruction: bool,
    pub problem: ProblemDescription,
    pub payload: ShotPayload,
}

#[derive(Deserialize)]
struct ShotFile {
    case_id: String,
    #[serde(default)]
    reconstruction: bool,
    problem: ProblemDescription,
    relation: Option<ShotRelation>,
    solution: Option<ShotSolution>,
}

impl FewShotExample {
    fn render(&self, kb: &KnowledgeBase) -> String {
        let mut out = self.problem.render();
        match &self.payload {
            ShotPayload::Relation(r) => {
                out.push_str(&format!(
                    "\nContradictory Relations:\nImproving: {}. {}\nWorsening: {}. {}\nExplanation: {}",
                    r.improving, r.improving_name, r.worsening, r.worsening_name, r.explanation
                ));
            }
            ShotPayload::Solution(s) => {
                let label = kb.principle_by_number(s.principle as i64).map(|p| p.label()).unwrap_or_else(|_| s.principle.to_string());
                out.push_str(&format!("\nInventive Principle: {label}\nConcrete Solutions: {}", s.text));
            }
        }
        out
    }
}

pub type Bindings = BTreeMap<String, String>;

fn placeholder_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\[([A-Z][A-Z0-9_]*)\]").unwrap())
}

/// Placeholder names in order of first appearance.
pub fn placeholders_in(body: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for c in placeholder_re().captures_iter(body) {
        let name = &c[1];
        if !out.iter().any(|n| n == name) {
            out.push(name.to_owned());
        }
    }
    out
}

/// Single-pass substitution. Text outside placeholder spans is copied as is.
pub fn substitute<'a>(body: &str, lookup: impl Fn(&str) -> Option<&'a str>) -> Result<String, PromptError> {
    let mut out = String::with_capacity(body.len());
    let mut last = 0;
    for c in placeholder_re().captures_iter(body) {
        let whole = c.get(0).unwrap();
        let name = &c[1];
        let value = lookup(name).ok_or_else(|| PromptError::Unbound(name.to_owned()))?;
        if value.trim().is_empty() {
            return Err(PromptError::EmptyBinding(name.to_owned()));
        }
        out.push_str(&body[last..whole.start()]);
        out.push_str(value);
        last = whole.end();
    }
    out.push_str(&body[last..]);
    Ok(out)
}

fn strip_comments(text: &str) -> String {
    let body: Vec<&str> = text.lines().filter(|l| !l.starts_with("%%")).collect();
    body.join("\n")
}

pub fn template_path(step: u8, strategy: Option<PromptStrategy>) -> Result<String, PromptError> {
    match (step, strategy) {
        (1 | 2, None) => Ok(format!("step{step}/default.txt")),
        (1 | 2, Some(_)) => Err(PromptError::StrategyNotAllowed(step)),
        (3 | 4, Some(s)) => Ok(format!("step{step}/{}.txt", s.slug())),
        (3 | 4, None) => Err(PromptError::StrategyRequired(step)),
        _ => Err(PromptError::UnknownStep(step)),
    }
}

fn all_template_paths() -> Vec<String> {
    let mut paths = vec![template_path(1, None).unwrap(), template_path(2, None).unwrap()];
    for step in [3, 4] {
        for s in PromptStrategy::ALL {
            paths.push(template_path(step, Some(s)).unwrap());
        }
    }
    paths
}

#[derive(Debug, Clone)]
pub struct PromptEngine {
    templates: BTreeMap<String, String>,
    shots: BTreeMap<u8, Vec<FewShotExample>>,
    rendered_shots: BTreeMap<u8, String>,
}

impl PromptEngine {
    pub fn bundled() -> &'static PromptEngine {
        static ENGINE: OnceLock<PromptEngine> = OnceLock::new();
        ENGINE.get_or_init(|| {
            let files = BUNDLED.iter().map(|(p, t)| (p.to_string(), t.to_string())).collect();
            PromptEngine::from_files(files, KnowledgeBase::bundled()).expect("bundled templates are valid")
        })
    }

    /// Loads a template directory with the bundled layout.
    pub fn load_dir(dir: &Path, kb: &KnowledgeBase) -> Result<Self, PromptError> {
        let mut files = BTreeMap::new();
        for (rel, _) in BUNDLED {
            let path = dir.join(rel);
            let text = std::fs::read_to_string(&path).map_err(|source| PromptError::Io { path, source })?;
            files.insert(rel.to_string(), text);
        }
        Self::from_files(files, kb)
    }

    /// Writes the bundled templates to `dir` for editing.
    pub fn export_bundled(dir: &Path) -> Result<(), PromptError> {
        for (rel, text) in BUNDLED {
            let path = dir.join(rel);
            let parent = path.parent().unwrap().to_owned();
            std::fs::create_dir_all(&parent).map_err(|source| PromptError::Io { path: parent, source })?;
            std::fs::write(&path, text).map_err(|source| PromptError::Io { path, source })?;
        }
        Ok(())
    }

    fn from_files(files: BTreeMap<String, String>, kb: &KnowledgeBase) -> Result<Self, PromptError> {
        let invalid = |file: &str, message: String| PromptError::Invalid { file: file.to_owned(), message };
        let mut templates = BTreeMap::new();
        for path in all_template_paths() {
            let raw = files.get(&path).ok_or_else(|| invalid(&path, "missing template".into()))?;
            let body = strip_comments(raw);
            for name in placeholders_in(&body) {
                if !PLACEHOLDERS.contains(&name.as_str()) {
                    return Err(invalid(&path, format!("undeclared placeholder [{name}]")));
                }
            }
            let wants_shots = placeholders_in(&body).iter().any(|n| n == FEW_SHOT_EXAMPLES);
            let is_shot_variant = path.ends_with("few-shot.txt");
            if wants_shots != is_shot_variant {
                return Err(invalid(&path, "[FEW_SHOT_EXAMPLES] must appear exactly in the few-shot variants".into()));
            }
            templates.insert(path, body);
        }

        let mut shots = BTreeMap::new();
        let mut rendered_shots = BTreeMap::new();
        for step in [3u8, 4] {
            let mut list = Vec::new();
            for i in 1..=SHOTS_PER_STEP {
                let path = format!("shots/{step}/{i}.toml");
                let raw = files.get(&path).ok_or_else(|| invalid(&path, "missing shot".into()))?;
                let file: ShotFile = toml::from_str(raw).map_err(|e| invalid(&path, e.message().to_owned()))?;
                let shot = validate_shot(step, file, kb).map_err(|m| invalid(&path, m))?;
                list.push(shot);
            }
            let text = list.iter().map(|s| s.render(kb)).collect::<Vec<_>>().join("\n\n");
            rendered_shots.insert(step, text);
            shots.insert(step, list);
        }
        Ok(Self { templates, shots, rendered_shots })
    }

    /// Template body after comment removal.
    pub fn template(&self, step: u8, strategy: Option<PromptStrategy>) -> Result<&str, PromptError> {
        let path = template_path(step, strategy)?;
        Ok(self.templates[&path].as_str())
    }

    /// Placeholders the caller must bind for this template.
    pub fn required_bindings(&self, step: u8, strategy: Option<PromptStrategy>) -> Result<Vec<String>, PromptError> {
        Ok(placeholders_in(self.template(step, strategy)?).into_iter().filter(|n| n != FEW_SHOT_EXAMPLES).collect())
    }

    pub fn render(&self, step: u8, strategy: Option<PromptStrategy>, bindings: &Bindings) -> Result<String, PromptError> {
        let body = self.template(step, strategy)?;
        if bindings.contains_key(FEW_SHOT_EXAMPLES) {
            return Err(PromptError::Reserved(FEW_SHOT_EXAMPLES.to_owned()));
        }
        let shots = self.rendered_shots.get(&step).map(String::as_str);
        substitute(body, |name| if name == FEW_SHOT_EXAMPLES { shots } else { bindings.get(name).map(String::as_str) })
    }

    pub fn list_shots(&self, step: u8) -> Result<&[FewShotExample], PromptError> {
        match step {
            3 | 4 => Ok(&self.shots[&step]),
            1 | 2 => Err(PromptError::StrategyNotAllowed(step)),
            _ => Err(PromptError::UnknownStep(step)),
        }
    }
}

fn validate_shot(step: u8, file: ShotFile, kb: &KnowledgeBase) -> Result<FewShotExample, String> {
    if let Some(field) = file.problem.blank_fields().first() {
        return Err(format!("problem.{field} is empty"));
    }
    let payload = match (step, file.relation, file.solution) {
        (3, Some(r), None) => {
            for (n, name) in [(r.improving, &r.improving_name), (r.worsening, &r.worsening_name)] {
                let p = kb.parameter_by_number(n as i64).map_err(|e| e.to_string())?;
                match kb.parameter_by_name(name, false) {
                    Ok(Some(found)) if found.number == p.number => {}
                    _ => return Err(format!("parameter name {name:?} does not match parameter {n} ({})", p.name)),
                }
            }
            if r.improving == r.worsening {
                return Err("improving and worsening must differ".into());
            }
            ShotPayload::Relation(r)
        }
        (4, None, Some(s)) => {
            kb.principle_by_number(s.principle as i64).map_err(|e| e.to_string())?;
            if s.text.trim().is_empty() {
                return Err("solution text is empty".into());
            }
            ShotPayload::Solution(s)
        }
        _ => return Err(format!("step {step} shots need exactly one [{}] table", if step == 3 { "relation" } else { "solution" })),
    };
    Ok(FewShotExample { case_id: file.case_id, reconstruction: file.reconstruction, problem: file.problem, payload })
}

/// `[TRIZ_PARAMETERS]` text: one `N. Name` line per parameter.
pub fn bind_triz_parameters(kb: &KnowledgeBase, numbers: &[u8]) -> String {
    numbers
        .iter()
        .filter_map(|&n| kb.parameter_by_number(n as i64).ok())
        .map(|p| p.label())
        .collect::<Vec<_>>()
        .join("\n")
}

/// `[INVENTIVE_PRINCIPLES]` text: one `Inventive Principle: N-Name` line per principle.
pub fn bind_principles(kb: &KnowledgeBase, numbers: &[u8]) -> String {
    numbers
        .iter()
        .filter_map(|&n| kb.principle_by_number(n as i64).ok())
        .map(|p| format!("Inventive Principle: {}", p.label()))
        .collect::<Vec<_>>()
        .join("\n")
}
