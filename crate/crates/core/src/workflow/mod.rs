//! The four-step problem-solving session with designer checkpoints.
//!
//! ```text
//! ProblemEntered --step1--> ParametersExtracted --step2--> ParametersMapped
//!   --step3--> ContradictionsAnalyzed --confirm--> PrinciplesChosen --step4--> SolutionsGenerated
//! ```
//!
//! `recommend_principles` may be called again from the last two states; it
//! loops the session back to `ContradictionsAnalyzed` so another pair can be
//! addressed. Every operation works on a copy and only commits on success,
//! so a failed call leaves the session untouched.

pub mod auto;
pub mod parse;
pub mod store;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cases::ProblemDescription;
use crate::gateway::{ChatRequest, Gateway, GatewayError, RequestTag};
use crate::knowledge::{KnowledgeBase, PARAMETER_COUNT, PRINCIPLE_COUNT};
use crate::prompts::{self, Bindings, PromptEngine, PromptError, PromptStrategy};

pub use parse::{parse_contradictions, parse_mappings, parse_problem_parameters};
pub use store::{SessionStore, SessionSummary};

pub const SESSION_FORMAT: &str = "triz-session/1";
pub const DEFAULT_SOLUTION_COUNT: u32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum WorkflowError {
    #[error("{op} is not allowed in state {state} (allowed: {allowed})")]
    InvalidState { op: &'static str, state: SessionState, allowed: String },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("the model reply contained no usable {0}; retry or change the prompt strategy")]
    EmptyResult(&'static str),
    #[error("relation {0} is missing a parameter number; resolve both numbers first")]
    IncompleteRelation(usize),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("session {0} not found")]
    NotFound(String),
    #[error("session version {expected} is stale (stored version is {found})")]
    StaleVersion { expected: u64, found: u64 },
    #[error("{}: {source}", path.display())]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {message}", path.display())]
    Corrupt { path: std::path::PathBuf, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionState {
    ProblemEntered,
    ParametersExtracted,
    ParametersMapped,
    ContradictionsAnalyzed,
    PrinciplesChosen,
    SolutionsGenerated,
}

impl SessionState {
    pub const ALL: [SessionState; 6] = [
        Self::ProblemEntered,
        Self::ParametersExtracted,
        Self::ParametersMapped,
        Self::ContradictionsAnalyzed,
        Self::PrinciplesChosen,
        Self::SolutionsGenerated,
    ];
}

impl fmt::Display for SessionState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default();
        f.write_str(&s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemParameter {
    pub ordinal: u32,
    pub name: String,
    #[serde(default)]
    pub explanation: String,
    /// True when the line could not be parsed and is kept verbatim.
    #[serde(default)]
    pub raw: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrizMapping {
    /// Ordinal of the problem parameter this mapping came from, if known.
    pub source: Option<u32>,
    pub triz_number: Option<u8>,
    pub triz_name: String,
    pub resolved: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContradictionRelation {
    pub improving_number: Option<u8>,
    pub improving_name: String,
    pub worsening_number: Option<u8>,
    pub worsening_name: String,
    pub explanation: String,
    pub complete: bool,
}

impl ContradictionRelation {
    pub fn new(improving_number: Option<u8>, improving_name: String, worsening_number: Option<u8>, worsening_name: String, explanation: String) -> Self {
        let valid = |n: Option<u8>| n.is_some_and(|n| (1..=PARAMETER_COUNT).contains(&n));
        let complete = valid(improving_number) && valid(worsening_number) && improving_number != worsening_number;
        Self { improving_number, improving_name, worsening_number, worsening_name, explanation, complete }
    }

    pub fn pair(&self) -> Option<(u8, u8)> {
        if self.complete {
            Some((self.improving_number?, self.worsening_number?))
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Solution {
    pub principle_number: u8,
    pub text: String,
    pub generation_index: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub keywords: Option<Vec<String>>,
    pub transcript_id: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyChoices {
    pub step3: Option<PromptStrategy>,
    pub step4: Option<PromptStrategy>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub format: String,
    pub id: String,
    pub version: u64,
    pub problem: ProblemDescription,
    pub state: SessionState,
    pub model_id: String,
    pub step1_output: Vec<ProblemParameter>,
    pub selected_problem_parameters: Vec<u32>,
    pub step2_output: Vec<TrizMapping>,
    pub selected_triz_parameters: Vec<u8>,
    pub step3_output: Vec<ContradictionRelation>,
    pub selected_contradiction: Option<ContradictionRelation>,
    pub recommended_principles: Vec<u8>,
    pub selected_principles: Vec<u8>,
    pub solutions: Vec<Solution>,
    pub strategy_choices: StrategyChoices,
    pub transcript_ids: Vec<String>,
}

impl Session {
    pub fn new(problem: ProblemDescription, model_id: &str) -> Result<Self, WorkflowError> {
        let blank = problem.blank_fields();
        if !blank.is_empty() {
            return Err(WorkflowError::InvalidInput(format!("problem fields must not be empty: {}", blank.join(", "))));
        }
        if model_id.trim().is_empty() {
            return Err(WorkflowError::InvalidInput("model id is empty".into()));
        }
        Ok(Self {
            format: SESSION_FORMAT.into(),
            id: String::new(),
            version: 0,
            problem,
            state: SessionState::ProblemEntered,
            model_id: model_id.to_owned(),
            step1_output: Vec::new(),
            selected_problem_parameters: Vec::new(),
            step2_output: Vec::new(),
            selected_triz_parameters: Vec::new(),
            step3_output: Vec::new(),
            selected_contradiction: None,
            recommended_principles: Vec::new(),
            selected_principles: Vec::new(),
            solutions: Vec::new(),
            strategy_choices: StrategyChoices::default(),
            transcript_ids: Vec::new(),
        })
    }

    /// Resolved TRIZ numbers from Step 2, in output order.
    pub fn mapped_numbers(&self) -> Vec<u8> {
        self.step2_output.iter().filter_map(|m| m.triz_number).collect()
    }
}

/// A Step-4 call that failed while others succeeded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallFailure {
    pub generation_index: u32,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step4Outcome {
    pub solutions: Vec<Solution>,
    pub failures: Vec<CallFailure>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct WorkflowConfig {
    /// Temperatures for steps 1..=4.
    pub temperatures: [f64; 4],
    /// `None` leaves the output length to the provider.
    pub max_output_tokens: Option<u32>,
}

impl Default for WorkflowConfig {
    fn default() -> Self {
        Self { temperatures: [0.0, 0.0, 0.0, 1.0], max_output_tokens: None }
    }
}

fn require(op: &'static str, session: &Session, allowed: &[SessionState]) -> Result<(), WorkflowError> {
    if allowed.contains(&session.state) {
        Ok(())
    } else {
        Err(WorkflowError::InvalidState {
            op,
            state: session.state,
            allowed: allowed.iter().map(ToString::to_string).collect::<Vec<_>>().join(", "),
        })
    }
}

const AFTER_STEP3: [SessionState; 3] = [SessionState::ContradictionsAnalyzed, SessionState::PrinciplesChosen, SessionState::SolutionsGenerated];
const AFTER_CONFIRM: [SessionState; 2] = [SessionState::PrinciplesChosen, SessionState::SolutionsGenerated];

pub struct Workflow<'a> {
    pub kb: &'a KnowledgeBase,
    pub prompts: &'a PromptEngine,
    pub gateway: &'a Gateway,
    pub config: WorkflowConfig,
}

impl<'a> Workflow<'a> {
    pub fn new(gateway: &'a Gateway) -> Self {
        Self { kb: KnowledgeBase::bundled(), prompts: PromptEngine::bundled(), gateway, config: WorkflowConfig::default() }
    }

    fn request(&self, session: &Session, step: u8, strategy: Option<PromptStrategy>, generation: u32, message: String) -> ChatRequest {
        ChatRequest {
            model_id: session.model_id.clone(),
            preamble: String::new(),
            user_message: message,
            temperature: self.config.temperatures[step as usize - 1],
            max_output_tokens: self.config.max_output_tokens,
            tag: RequestTag {
                session: session.id.clone(),
                step,
                strategy: strategy.map(|s| s.slug().to_owned()),
                model: session.model_id.clone(),
                generation,
            },
        }
    }

    fn bindings(&self, session: &Session) -> Bindings {
        let mut b = Bindings::new();
        b.insert(prompts::CASE_DESCRIPTION.into(), session.problem.render());
        b
    }

    /// Step 1: extract problem parameters from the description.
    pub fn run_step1(&self, session: &mut Session) -> Result<Vec<ProblemParameter>, WorkflowError> {
        require("step1", session, &[SessionState::ProblemEntered])?;
        let prompt = self.prompts.render(1, None, &self.bindings(session))?;
        let reply = self.gateway.chat(&self.request(session, 1, None, 0, prompt))?;
        let params = parse_problem_parameters(&reply.text);
        if params.is_empty() {
            return Err(WorkflowError::EmptyResult("problem parameters"));
        }
        session.step1_output = params.clone();
        session.transcript_ids.push(reply.transcript_id);
        session.state = SessionState::ParametersExtracted;
        Ok(params)
    }

    /// Step 2: map the selected problem parameters (by ordinal) to TRIZ parameters.
    pub fn run_step2(&self, session: &mut Session, selected: &[u32]) -> Result<Vec<TrizMapping>, WorkflowError> {
        require("step2", session, &[SessionState::ParametersExtracted])?;
        if selected.is_empty() {
            return Err(WorkflowError::InvalidInput("select at least one problem parameter".into()));
        }
        let mut chosen = Vec::new();
        for ordinal in selected {
            let p = session
                .step1_output
                .iter()
                .find(|p| p.ordinal == *ordinal)
                .ok_or_else(|| WorkflowError::InvalidInput(format!("problem parameter {ordinal} is not in the step 1 output")))?;
            if !chosen.contains(p) {
                chosen.push(p.clone());
            }
        }
        let listing = chosen
            .iter()
            .map(|p| if p.explanation.is_empty() { format!("{}. {}", p.ordinal, p.name) } else { format!("{}. {}: {}", p.ordinal, p.name, p.explanation) })
            .collect::<Vec<_>>()
            .join("\n");
        let mut b = self.bindings(session);
        b.insert(prompts::PROBLEM_PARAMETERS_SELECTED.into(), listing);
        let prompt = self.prompts.render(2, None, &b)?;
        let reply = self.gateway.chat(&self.request(session, 2, None, 0, prompt))?;
        let mappings = parse_mappings(&reply.text, self.kb, &chosen);
        if mappings.is_empty() {
            return Err(WorkflowError::EmptyResult("parameter mappings"));
        }
        session.selected_problem_parameters = chosen.iter().map(|p| p.ordinal).collect();
        session.step2_output = mappings.clone();
        session.transcript_ids.push(reply.transcript_id);
        session.state = SessionState::ParametersMapped;
        Ok(mappings)
    }

    /// Step 3: contradiction analysis over at least two mapped TRIZ parameters.
    pub fn run_step3(&self, session: &mut Session, selected: &[u8], strategy: Option<PromptStrategy>) -> Result<Vec<ContradictionRelation>, WorkflowError> {
        require("step3", session, &[SessionState::ParametersMapped])?;
        let mut numbers: Vec<u8> = Vec::new();
        for &n in selected {
            if !numbers.contains(&n) {
                numbers.push(n);
            }
        }
        if numbers.len() < 2 {
            return Err(WorkflowError::InvalidInput("select at least two TRIZ parameters".into()));
        }
        let mapped = session.mapped_numbers();
        if let Some(n) = numbers.iter().find(|n| !mapped.contains(n)) {
            return Err(WorkflowError::InvalidInput(format!("TRIZ parameter {n} is not in the step 2 output")));
        }
        let strategy = match strategy {
            Some(s) => s,
            None => prompts::default_strategy(3)?,
        };
        let mut b = self.bindings(session);
        b.insert(prompts::TRIZ_PARAMETERS.into(), prompts::bind_triz_parameters(self.kb, &numbers));
        let prompt = self.prompts.render(3, Some(strategy), &b)?;
        let reply = self.gateway.chat(&self.request(session, 3, Some(strategy), 0, prompt))?;
        let relations = parse_contradictions(&reply.text, self.kb);
        if relations.is_empty() {
            return Err(WorkflowError::EmptyResult("contradiction relations"));
        }
        session.selected_triz_parameters = numbers;
        session.step3_output = relations.clone();
        session.strategy_choices.step3 = Some(strategy);
        session.transcript_ids.push(reply.transcript_id);
        session.state = SessionState::ContradictionsAnalyzed;
        Ok(relations)
    }

    /// Sets the parameter numbers of a Step-3 relation by hand, e.g. when the
    /// model gave names only.
    pub fn amend_relation(&self, session: &mut Session, index: usize, improving: u8, worsening: u8) -> Result<ContradictionRelation, WorkflowError> {
        require("amend_relation", session, &AFTER_STEP3)?;
        let name = |n: u8| self.kb.parameter_by_number(n as i64).map(|p| p.name.clone()).map_err(|e| WorkflowError::InvalidInput(e.to_string()));
        let (improving_name, worsening_name) = (name(improving)?, name(worsening)?);
        if improving == worsening {
            return Err(WorkflowError::InvalidInput("improving and worsening parameters must differ".into()));
        }
        let old = session.step3_output.get(index).ok_or_else(|| WorkflowError::InvalidInput(format!("no relation at index {index}")))?;
        // a renumbered side takes the catalogue name
        let keep = |number: Option<u8>, n: u8, old: &str, fresh: String| if number == Some(n) { old.to_owned() } else { fresh };
        let amended = ContradictionRelation::new(
            Some(improving),
            keep(old.improving_number, improving, &old.improving_name, improving_name),
            Some(worsening),
            keep(old.worsening_number, worsening, &old.worsening_name, worsening_name),
            old.explanation.clone(),
        );
        if session.step3_output.iter().enumerate().any(|(i, r)| i != index && r.pair() == amended.pair()) {
            return Err(WorkflowError::InvalidInput(format!("pair ({improving}, {worsening}) is already listed")));
        }
        session.step3_output[index] = amended.clone();
        Ok(amended)
    }

    /// Picks one relation and looks its principles up in the matrix. The
    /// session returns to `ContradictionsAnalyzed` until principles are confirmed.
    pub fn recommend_principles(&self, session: &mut Session, index: usize) -> Result<Vec<u8>, WorkflowError> {
        require("recommend_principles", session, &AFTER_STEP3)?;
        let chosen = session.step3_output.get(index).ok_or_else(|| WorkflowError::InvalidInput(format!("no relation at index {index}")))?;
        let (i, w) = chosen.pair().ok_or(WorkflowError::IncompleteRelation(index))?;
        let recommended: Vec<u8> = self.kb.matrix_lookup(i as i64, w as i64).map_err(|e| WorkflowError::InvalidInput(e.to_string()))?.iter().map(|p| p.number).collect();
        session.selected_contradiction = Some(chosen.clone());
        session.recommended_principles = recommended.clone();
        session.selected_principles.clear();
        session.state = SessionState::ContradictionsAnalyzed;
        Ok(recommended)
    }

    /// Designer checkpoint: any valid principles, recommended or entered by hand.
    pub fn confirm_principles(&self, session: &mut Session, principles: &[u8]) -> Result<Vec<u8>, WorkflowError> {
        require("confirm_principles", session, &AFTER_STEP3)?;
        if session.selected_contradiction.is_none() {
            return Err(WorkflowError::InvalidInput("choose a contradiction before confirming principles".into()));
        }
        if principles.is_empty() {
            return Err(WorkflowError::InvalidInput("select at least one principle".into()));
        }
        let mut chosen = Vec::new();
        for &p in principles {
            if !(1..=PRINCIPLE_COUNT).contains(&p) {
                return Err(WorkflowError::InvalidInput(format!("principle {p} is outside 1..=40")));
            }
            if !chosen.contains(&p) {
                chosen.push(p);
            }
        }
        session.selected_principles = chosen.clone();
        session.state = SessionState::PrinciplesChosen;
        Ok(chosen)
    }

    /// Step 4: `count` independent generations for one selected principle.
    /// Calls run concurrently within the gateway's in-flight bound. If some
    /// calls fail the successes are kept and the failures reported; if all
    /// fail the session is unchanged and the first error is returned.
    pub fn run_step4(&self, session: &mut Session, principle: u8, strategy: Option<PromptStrategy>, count: u32) -> Result<Step4Outcome, WorkflowError> {
        require("step4", session, &AFTER_CONFIRM)?;
        if count == 0 {
            return Err(WorkflowError::InvalidInput("count must be at least 1".into()));
        }
        if !session.selected_principles.contains(&principle) {
            return Err(WorkflowError::InvalidInput(format!("principle {principle} is not among the selected principles")));
        }
        let strategy = match strategy {
            Some(s) => s,
            None => prompts::default_strategy(4)?,
        };
        let first = session.solutions.iter().filter(|s| s.principle_number == principle).map(|s| s.generation_index + 1).max().unwrap_or(0);
        let results = self.generate_solutions(session, principle, strategy, first..first + count)?;

        let mut solutions = Vec::new();
        let mut failures = Vec::new();
        let mut first_error = None;
        for r in results {
            match r {
                Ok(s) => solutions.push(s),
                Err((g, e)) => {
                    failures.push(CallFailure { generation_index: g, message: e.to_string() });
                    first_error.get_or_insert(e);
                }
            }
        }
        if solutions.is_empty() {
            return Err(first_error.expect("count >= 1"));
        }
        for s in &solutions {
            session.transcript_ids.push(s.transcript_id.clone());
        }
        session.solutions.extend(solutions.iter().cloned());
        session.strategy_choices.step4 = Some(strategy);
        session.state = SessionState::SolutionsGenerated;
        Ok(Step4Outcome { solutions, failures })
    }

    /// Renders the Step-4 prompt once and runs one call per generation index
    /// concurrently. Does not touch the session.
    pub fn generate_solutions(
        &self,
        session: &Session,
        principle: u8,
        strategy: PromptStrategy,
        generations: std::ops::Range<u32>,
    ) -> Result<Vec<Result<Solution, (u32, WorkflowError)>>, WorkflowError> {
        let mut b = self.bindings(session);
        b.insert(prompts::INVENTIVE_PRINCIPLES.into(), prompts::bind_principles(self.kb, &[principle]));
        let prompt = self.prompts.render(4, Some(strategy), &b)?;
        let requests: Vec<ChatRequest> = generations.map(|g| self.request(session, 4, Some(strategy), g, prompt.clone())).collect();
        Ok(std::thread::scope(|scope| {
            let handles: Vec<_> = requests
                .iter()
                .map(|req| {
                    scope.spawn(move || {
                        let g = req.tag.generation;
                        let reply = self.gateway.chat(req).map_err(|e| (g, e.into()))?;
                        let text = parse::parse_solution(&reply.text).ok_or((g, WorkflowError::EmptyResult("solution text")))?;
                        Ok(Solution { principle_number: principle, text, generation_index: g, keywords: None, transcript_id: reply.transcript_id })
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("step 4 worker panicked")).collect()
        }))
    }

    /// Runs `op` on a copy of the session and commits it only on success.
    pub fn apply<T>(&self, session: &mut Session, op: impl FnOnce(&Self, &mut Session) -> Result<T, WorkflowError>) -> Result<T, WorkflowError> {
        let mut work = session.clone();
        let out = op(self, &mut work)?;
        *session = work;
        Ok(out)
    }
}

/// Plain-text report of a session for humans.
pub fn session_report(session: &Session, kb: &KnowledgeBase) -> String {
    let mut out = String::new();
    let param = |n: u8| kb.parameter_by_number(n as i64).map(|p| p.label()).unwrap_or_else(|_| n.to_string());
    let principle = |n: u8| kb.principle_by_number(n as i64).map(|p| p.label()).unwrap_or_else(|_| n.to_string());
    out.push_str(&format!("# Session {}\n\nstate: {}\nmodel: {}\n\n## Problem\n\n{}\n", session.id, session.state, session.model_id, session.problem.render()));
    if !session.step1_output.is_empty() {
        out.push_str("\n## Problem parameters\n\n");
        for p in &session.step1_output {
            let mark = if session.selected_problem_parameters.contains(&p.ordinal) { "*" } else { " " };
            out.push_str(&format!("{mark} {}. {}{}\n", p.ordinal, p.name, if p.explanation.is_empty() { String::new() } else { format!(": {}", p.explanation) }));
        }
    }
    if !session.step2_output.is_empty() {
        out.push_str("\n## TRIZ parameters\n\n");
        for m in &session.step2_output {
            match m.triz_number {
                Some(n) => {
                    let mark = if session.selected_triz_parameters.contains(&n) { "*" } else { " " };
                    out.push_str(&format!("{mark} {}\n", param(n)));
                }
                None => out.push_str(&format!("  ? {} (unresolved)\n", m.triz_name)),
            }
        }
    }
    if !session.step3_output.is_empty() {
        out.push_str("\n## Contradictions\n\n");
        for (i, r) in session.step3_output.iter().enumerate() {
            let side = |n: Option<u8>, name: &str| n.map(param).unwrap_or_else(|| format!("{name} (unresolved)"));
            let mark = if session.selected_contradiction.as_ref() == Some(r) { "*" } else { " " };
            out.push_str(&format!(
                "{mark} {}. improving {} / worsening {}\n     {}\n",
                i + 1,
                side(r.improving_number, &r.improving_name),
                side(r.worsening_number, &r.worsening_name),
                r.explanation
            ));
        }
    }
    if !session.recommended_principles.is_empty() || !session.selected_principles.is_empty() {
        let list = |v: &[u8]| v.iter().map(|&n| principle(n)).collect::<Vec<_>>().join(", ");
        out.push_str(&format!("\n## Principles\n\nrecommended: {}\nselected: {}\n", list(&session.recommended_principles), list(&session.selected_principles)));
    }
    if !session.solutions.is_empty() {
        out.push_str("\n## Solutions\n");
        for s in &session.solutions {
            out.push_str(&format!("\n### {} (generation {})\n\n{}\n", principle(s.principle_number), s.generation_index, s.text));
        }
    }
    out
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::cases::seed_cases;
    use crate::gateway::{FnBackend, GatewayConfig};
    use std::sync::atomic::{AtomicBool, Ordering};
    use std::sync::Arc;

    pub(crate) fn scripted(req: &ChatRequest) -> Result<String, GatewayError> {
        Ok(match req.tag.step {
            1 => "1. Number of motors: three motors drive body and legs.\n2. Pipe diameter adaptability: legs cannot follow diameter changes.\n3. Leg support: legs clamp the wall.".into(),
            2 => "1. Number of motors: Device complexity (36)\n2. Pipe diameter adaptability: Adaptability or versatility (35)\n3. Leg support: Difficulty of detecting and measuring (37); Ease of manufacture (32)".into(),
            3 => "1. Improved Parameter: Difficulty of detecting and measuring (37)\nWorsened Parameter: Adaptability or versatility (35)\nExplanation: a\n2. Improved Parameter: Difficulty of detecting and measuring (37)\nWorsened Parameter: Ease of manufacture (32)\nExplanation: b\n3. Improved Parameter: Leg grip\nWorsened Parameter: Ease of manufacture (32)\nExplanation: c".into(),
            _ => format!("Solution {} for {}", req.tag.generation, req.user_message.lines().last().unwrap_or("")),
        })
    }

    fn gateway() -> Gateway {
        let mut config = GatewayConfig::default();
        config.requests_per_minute = None;
        Gateway::new(Box::new(FnBackend::new(scripted)), config)
    }

    fn fresh() -> Session {
        let mut s = Session::new(seed_cases().get("in-pipe-robot").unwrap().problem.clone(), "gpt-4").unwrap();
        s.id = "s-test".into();
        s
    }

    fn drive(wf: &Workflow, s: &mut Session, until: SessionState) {
        let steps: [&dyn Fn(&mut Session); 5] = [
            &|s| drop(wf.run_step1(s).unwrap()),
            &|s| drop(wf.run_step2(s, &[1, 2, 3]).unwrap()),
            &|s| drop(wf.run_step3(s, &[37, 35, 32], None).unwrap()),
            &|s| {
                wf.recommend_principles(s, 0).unwrap();
                wf.confirm_principles(s, &[1, 15]).unwrap();
            },
            &|s| drop(wf.run_step4(s, 1, None, 3).unwrap()),
        ];
        let pos = |st: SessionState| SessionState::ALL.iter().position(|x| *x == st).unwrap();
        while pos(s.state) < pos(until) {
            let step = steps[pos(s.state)];
            step(s);
        }
    }

    #[test]
    fn full_run_reaches_solutions() {
        let gw = gateway();
        let wf = Workflow::new(&gw);
        let mut s = fresh();
        drive(&wf, &mut s, SessionState::SolutionsGenerated);
        assert_eq!(s.state, SessionState::SolutionsGenerated);
        assert!(s.step1_output.len() >= 2);
        assert_eq!(s.mapped_numbers(), vec![36, 35, 37, 32]);
        assert_eq!(s.step3_output.len(), 3);
        assert!(!s.step3_output[2].complete);
        assert!(s.recommended_principles.contains(&1));
        assert_eq!(s.solutions.len(), 3);
        assert_eq!(s.solutions.iter().map(|x| x.generation_index).collect::<Vec<_>>(), [0, 1, 2]);
        assert_eq!(s.strategy_choices.step4, Some(PromptStrategy::FewShot));
        assert_eq!(s.transcript_ids.len(), 6);

        // re-entrant: more generations continue the index
        let more = wf.run_step4(&mut s, 1, None, 2).unwrap();
        assert_eq!(more.solutions.iter().map(|x| x.generation_index).collect::<Vec<_>>(), [3, 4]);
    }

    #[test]
    fn preconditions() {
        let gw = gateway();
        let wf = Workflow::new(&gw);
        let mut s = fresh();
        drive(&wf, &mut s, SessionState::ParametersExtracted);
        assert!(matches!(wf.run_step2(&mut s, &[]), Err(WorkflowError::InvalidInput(_))));
        assert!(matches!(wf.run_step2(&mut s, &[9]), Err(WorkflowError::InvalidInput(_))));
        drive(&wf, &mut s, SessionState::ParametersMapped);
        assert!(matches!(wf.run_step3(&mut s, &[37], None), Err(WorkflowError::InvalidInput(_))));
        assert!(matches!(wf.run_step3(&mut s, &[37, 37], None), Err(WorkflowError::InvalidInput(_))));
        assert!(matches!(wf.run_step3(&mut s, &[37, 1], None), Err(WorkflowError::InvalidInput(_))));
        drive(&wf, &mut s, SessionState::ContradictionsAnalyzed);
        assert!(matches!(wf.recommend_principles(&mut s, 2), Err(WorkflowError::IncompleteRelation(2))));
        assert!(matches!(wf.confirm_principles(&mut s, &[1]), Err(WorkflowError::InvalidInput(_))));
        wf.recommend_principles(&mut s, 1).unwrap();
        assert!(matches!(wf.confirm_principles(&mut s, &[41]), Err(WorkflowError::InvalidInput(_))));
        wf.confirm_principles(&mut s, &[11]).unwrap();
        assert!(matches!(wf.run_step4(&mut s, 11, None, 0), Err(WorkflowError::InvalidInput(_))));
        assert!(matches!(wf.run_step4(&mut s, 1, None, 1), Err(WorkflowError::InvalidInput(_))));
    }

    #[test]
    fn amending_completes_a_relation() {
        let gw = gateway();
        let wf = Workflow::new(&gw);
        let mut s = fresh();
        drive(&wf, &mut s, SessionState::ContradictionsAnalyzed);
        assert!(wf.amend_relation(&mut s, 2, 32, 32).is_err());
        assert!(wf.amend_relation(&mut s, 2, 37, 32).is_err(), "duplicate of relation 1");
        let before = s.step3_output[2].clone();
        let r = wf.amend_relation(&mut s, 2, 27, 9).unwrap();
        assert!(r.complete);
        assert_eq!(r.improving_name, KnowledgeBase::bundled().parameter_by_number(27).unwrap().name);
        assert_eq!(r.worsening_name, KnowledgeBase::bundled().parameter_by_number(9).unwrap().name);
        assert_eq!(r.explanation, before.explanation);
        // an unchanged side keeps the model's wording
        let r = wf.amend_relation(&mut s, 2, before.improving_number.unwrap_or(27), 9).unwrap();
        if before.improving_number.is_some() {
            assert_eq!(r.improving_name, before.improving_name);
        }
        assert!(!wf.recommend_principles(&mut s, 2).unwrap().is_empty());
    }

    #[test]
    fn empty_matrix_cell_still_allows_manual_principles() {
        let gw = gateway();
        let wf = Workflow::new(&gw);
        let mut s = fresh();
        drive(&wf, &mut s, SessionState::ContradictionsAnalyzed);
        // (39, 9) is an empty cell in the classic matrix
        wf.amend_relation(&mut s, 2, 39, 9).unwrap();
        assert!(wf.recommend_principles(&mut s, 2).unwrap().is_empty());
        assert_eq!(wf.confirm_principles(&mut s, &[28]).unwrap(), vec![28]);
    }

    #[test]
    fn partial_step4_failure_keeps_successes() {
        let fail_next = Arc::new(AtomicBool::new(true));
        let flag = fail_next.clone();
        let backend = FnBackend::new(move |req| {
            if req.tag.step == 4 && req.tag.generation == 1 && flag.load(Ordering::SeqCst) {
                return Err(GatewayError::Transport { attempts: 1, message: "boom".into() });
            }
            scripted(req)
        });
        let mut config = GatewayConfig::default();
        config.requests_per_minute = None;
        let gw = Gateway::new(Box::new(backend), config);
        let wf = Workflow::new(&gw);
        let mut s = fresh();
        drive(&wf, &mut s, SessionState::PrinciplesChosen);
        let out = wf.run_step4(&mut s, 1, None, 3).unwrap();
        assert_eq!(out.solutions.len(), 2);
        assert_eq!(out.failures.len(), 1);
        assert_eq!(out.failures[0].generation_index, 1);
        assert_eq!(s.state, SessionState::SolutionsGenerated);
    }

    #[test]
    fn gateway_failure_leaves_session_unchanged() {
        let backend = FnBackend::new(|_| Err(GatewayError::Transport { attempts: 1, message: "down".into() }));
        let mut config = GatewayConfig::default();
        config.requests_per_minute = None;
        let gw = Gateway::new(Box::new(backend), config);
        let wf = Workflow::new(&gw);
        let mut s = fresh();
        let before = s.clone();
        assert!(matches!(wf.apply(&mut s, |wf, s| wf.run_step1(s)), Err(WorkflowError::Gateway(_))));
        assert_eq!(s, before);
    }

    #[test]
    fn invalid_problem_is_rejected() {
        let mut p = seed_cases().get("in-pipe-robot").unwrap().problem.clone();
        p.requirement = " ".into();
        assert!(matches!(Session::new(p, "gpt-4"), Err(WorkflowError::InvalidInput(_))));
    }

    #[test]
    fn report_mentions_each_stage() {
        let gw = gateway();
        let wf = Workflow::new(&gw);
        let mut s = fresh();
        drive(&wf, &mut s, SessionState::SolutionsGenerated);
        let r = session_report(&s, KnowledgeBase::bundled());
        for needle in ["## Problem parameters", "37. Difficulty of detecting and measuring", "1-Segmentation", "## Solutions"] {
            assert!(r.contains(needle), "{needle}");
        }
    }

    #[test]
    fn store_round_trip_and_versions() {
        let dir = tempfile::tempdir().unwrap();
        let store = SessionStore::open(dir.path()).unwrap();
        let a = store.create(fresh()).unwrap();
        let b = store.create(fresh()).unwrap();
        assert_ne!(a.id, b.id);
        assert_eq!(a.version, 1);
        assert_eq!(store.load(&a.id).unwrap(), a);

        let gw = gateway();
        let wf = Workflow::new(&gw);
        let mut work = a.clone();
        wf.run_step1(&mut work).unwrap();
        let saved = store.save(&work).unwrap();
        assert_eq!(saved.version, 2);
        assert_eq!(store.load(&a.id).unwrap(), saved);
        // the stale copy cannot overwrite
        assert!(matches!(store.save(&work), Err(WorkflowError::StaleVersion { expected: 1, found: 2 })));
        assert!(matches!(store.load("s-missing"), Err(WorkflowError::NotFound(_))));
        assert!(matches!(store.load("../etc/passwd"), Err(WorkflowError::NotFound(_))));
        assert_eq!(store.list().unwrap().len(), 2);
    }
}
