//! Batch runs over a case collection. Cases are processed by a small worker
//! pool sized to the gateway's in-flight limit; results are assembled in
//! collection order so reports do not depend on scheduling.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::metrics::{cosine_similarity, match_counts, matched, mean, MatchMode, PairSet};
use super::report::{Aggregation, CaseScore, EvalFinding, EvalKind, EvalReport, SolutionScore};
use super::EvalError;
use crate::cases::{validate_collection, Case, CaseCollection};
use crate::gateway::{Gateway, RequestTag};
use crate::prompts::PromptStrategy;
use crate::workflow::{ContradictionRelation, Session, Workflow, WorkflowConfig, WorkflowError};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContradictionEvalOptions {
    pub strategies: Vec<PromptStrategy>,
    pub models: Vec<String>,
    pub mode: MatchMode,
    pub aggregation: Aggregation,
}

impl Default for ContradictionEvalOptions {
    fn default() -> Self {
        Self { strategies: PromptStrategy::ALL.to_vec(), models: vec!["gpt-4".into()], mode: MatchMode::default(), aggregation: Aggregation::default() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionEvalOptions {
    pub strategies: Vec<PromptStrategy>,
    pub models: Vec<String>,
    pub per_principle_count: u32,
    pub aggregation: Aggregation,
}

impl Default for SolutionEvalOptions {
    fn default() -> Self {
        Self { strategies: PromptStrategy::ALL.to_vec(), models: vec!["gpt-4".into()], per_principle_count: 3, aggregation: Aggregation::default() }
    }
}

fn check_common(collection: &CaseCollection, strategies: &[PromptStrategy], models: &[String]) -> Result<(), EvalError> {
    if strategies.is_empty() {
        return Err(EvalError::Precondition("select at least one strategy".into()));
    }
    if models.is_empty() || models.iter().any(|m| m.trim().is_empty()) {
        return Err(EvalError::Precondition("select at least one non-empty model id".into()));
    }
    let findings = validate_collection(collection);
    if !findings.is_empty() {
        let first = &findings[0];
        return Err(EvalError::Precondition(format!("collection {} has {} validation finding(s); first: {}", collection.name, findings.len(), first.message)));
    }
    Ok(())
}

/// Runs `work` over `items` with at most `workers` threads and returns the
/// results in item order.
fn pool<T: Sync, R: Send>(items: &[T], workers: usize, work: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers.clamp(1, items.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(item) = items.get(i) else { break };
                let r = work(item);
                slots.lock().unwrap()[i] = Some(r);
            });
        }
    });
    slots.into_inner().unwrap().into_iter().map(|r| r.expect("every item processed")).collect()
}

fn finding(case: &Case, strategy: Option<PromptStrategy>, model: &str, message: impl Into<String>) -> EvalFinding {
    EvalFinding { case_id: Some(case.id.clone()), strategy, model_id: Some(model.to_owned()), message: message.into() }
}

fn eval_session(case: &Case, model: &str) -> Result<Session, WorkflowError> {
    let mut s = Session::new(case.problem.clone(), model)?;
    s.id = format!("eval-{}", case.id);
    Ok(s)
}

fn scoped_workflow<'a>(wf: &Workflow<'a>, temperatures: [f64; 4]) -> Workflow<'a> {
    Workflow { kb: wf.kb, prompts: wf.prompts, gateway: wf.gateway, config: WorkflowConfig { temperatures, ..wf.config.clone() } }
}

type CaseOutcome = (Vec<CaseScore>, Vec<EvalFinding>);

fn score_case(wf: &Workflow, case: &Case, model: &str, opts: &ContradictionEvalOptions) -> CaseOutcome {
    let mut scores = Vec::new();
    let mut findings = Vec::new();
    let reference = match PairSet::from_pairs(case.reference_pairs()) {
        Ok(r) => r,
        Err(e) => return (scores, vec![finding(case, None, model, e.to_string())]),
    };
    // steps 1 and 2 once per case and model; all resolved parameters go forward
    let prepared = (|| {
        let mut s = eval_session(case, model)?;
        let params = wf.run_step1(&mut s)?;
        let ordinals: Vec<u32> = params.iter().map(|p| p.ordinal).collect();
        wf.run_step2(&mut s, &ordinals)?;
        Ok::<_, WorkflowError>(s)
    })();
    let session = match prepared {
        Ok(s) => s,
        Err(e) => return (scores, vec![finding(case, None, model, format!("steps 1-2 failed: {e}"))]),
    };
    let mut numbers = session.mapped_numbers();
    numbers.dedup();
    if numbers.len() < 2 {
        return (scores, vec![finding(case, None, model, format!("only {} TRIZ parameter(s) mapped; contradiction analysis needs two", numbers.len()))]);
    }
    for &strategy in &opts.strategies {
        let mut s = session.clone();
        let relations: Vec<ContradictionRelation> = match wf.run_step3(&mut s, &numbers, Some(strategy)) {
            Ok(r) => r,
            Err(WorkflowError::EmptyResult(_)) => Vec::new(),
            Err(e) => {
                findings.push(finding(case, Some(strategy), model, format!("step 3 failed: {e}")));
                continue;
            }
        };
        let generated = PairSet::from_pairs(relations.iter().filter_map(ContradictionRelation::pair)).expect("complete relations hold valid pairs");
        let incomplete_count = relations.iter().filter(|r| !r.complete).count();
        if generated.is_empty() {
            findings.push(finding(case, Some(strategy), model, "no complete contradiction pair generated; precision scored as 0"));
        }
        let counts = match_counts(&generated, &reference, opts.mode);
        scores.push(CaseScore {
            case_id: case.id.clone(),
            strategy,
            model_id: model.to_owned(),
            recall: counts.recall().expect("reference is non-empty"),
            precision: counts.precision().unwrap_or(0.0),
            counts,
            generated_count: generated.len(),
            parameter_count: generated.parameters().len(),
            incomplete_count,
            matched: matched(&generated, &reference, opts.mode),
            generated,
        });
    }
    (scores, findings)
}

/// A run without a single score; the first finding usually names the cause.
fn nothing_scored(report: &EvalReport) -> EvalError {
    let skipped = |m: &str| m.ends_with("; skipped");
    let first = report.findings.iter().find(|f| !skipped(&f.message)).or(report.findings.first()).map(|f| match &f.case_id {
        Some(id) => format!("{id}: {}", f.message),
        None => f.message.clone(),
    });
    EvalError::NothingScored(first.unwrap_or_else(|| "no case was attempted".into()))
}

/// Scores Step-3 output against each case's reference contradictions for
/// every strategy and model. Few-shot cases and cases without references
/// are excluded; per-case failures become findings and the run continues.
pub fn run_contradiction_eval(wf: &Workflow, collection: &CaseCollection, opts: &ContradictionEvalOptions) -> Result<EvalReport, EvalError> {
    check_common(collection, &opts.strategies, &opts.models)?;
    let wf = scoped_workflow(wf, [0.0, 0.0, 0.0, wf.config.temperatures[3]]);
    let mut report = EvalReport::new(EvalKind::Contradiction, &collection.name, Some(opts.mode), opts.aggregation);
    let mut items = Vec::new();
    for model in &opts.models {
        for case in collection.eval_cases() {
            if case.reference_contradictions.is_empty() {
                report.findings.push(finding(case, None, model, "no reference contradictions; skipped"));
            } else {
                items.push((model.as_str(), case));
            }
        }
    }
    for (scores, findings) in pool(&items, wf.gateway.config().max_in_flight, |(model, case)| score_case(&wf, case, model, opts)) {
        report.case_scores.extend(scores);
        report.findings.extend(findings);
    }
    if report.case_scores.is_empty() {
        return Err(nothing_scored(&report));
    }
    report.finalize();
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Similarity {
    pub mean: f64,
    pub scores: Vec<f64>,
}

/// Embeds the ground truth and each generation and averages their cosine
/// similarities with the ground truth.
pub fn solution_similarity(gateway: &Gateway, ground_truth: &str, generated: &[String], tag: &RequestTag) -> Result<Similarity, EvalError> {
    if generated.is_empty() {
        return Err(EvalError::Precondition("no generated solutions to score".into()));
    }
    let mut texts = vec![ground_truth.to_owned()];
    texts.extend(generated.iter().cloned());
    let batch = gateway.embed(&texts, tag)?;
    let reference = &batch.vectors[0];
    let scores = batch.vectors[1..].iter().map(|v| cosine_similarity(reference, v)).collect::<Result<Vec<_>, _>>()?;
    Ok(Similarity { mean: mean(&scores).expect("non-empty"), scores })
}

fn score_solutions(wf: &Workflow, case: &Case, model: &str, opts: &SolutionEvalOptions) -> (Vec<SolutionScore>, Vec<EvalFinding>) {
    let mut scores = Vec::new();
    let mut findings = Vec::new();
    let session = match eval_session(case, model) {
        Ok(s) => s,
        Err(e) => return (scores, vec![finding(case, None, model, e.to_string())]),
    };
    for &strategy in &opts.strategies {
        for truth in &case.ground_truth_solutions {
            let results = match wf.generate_solutions(&session, truth.principle, strategy, 0..opts.per_principle_count) {
                Ok(r) => r,
                Err(e) => {
                    findings.push(finding(case, Some(strategy), model, format!("principle {}: {e}", truth.principle)));
                    continue;
                }
            };
            let mut texts = Vec::new();
            for r in results {
                match r {
                    Ok(s) => texts.push(s.text),
                    Err((g, e)) => findings.push(finding(case, Some(strategy), model, format!("principle {} generation {g}: {e}", truth.principle))),
                }
            }
            if texts.is_empty() {
                continue;
            }
            let tag = RequestTag { session: session.id.clone(), step: 4, strategy: Some(strategy.slug().into()), model: model.to_owned(), generation: 0 };
            match solution_similarity(wf.gateway, &truth.text, &texts, &tag) {
                Ok(sim) => scores.push(SolutionScore {
                    case_id: case.id.clone(),
                    strategy,
                    model_id: model.to_owned(),
                    principle: truth.principle,
                    similarity: sim.mean,
                    scores: sim.scores,
                    solutions: texts,
                }),
                Err(e) => findings.push(finding(case, Some(strategy), model, format!("principle {} embedding: {e}", truth.principle))),
            }
        }
    }
    (scores, findings)
}

/// Generates solutions for each ground-truth principle at temperature 1 and
/// scores them by embedding similarity to the original solution.
pub fn run_solution_eval(wf: &Workflow, collection: &CaseCollection, opts: &SolutionEvalOptions) -> Result<EvalReport, EvalError> {
    check_common(collection, &opts.strategies, &opts.models)?;
    if opts.per_principle_count == 0 {
        return Err(EvalError::Precondition("per-principle count must be at least 1".into()));
    }
    let t = wf.config.temperatures;
    let wf = scoped_workflow(wf, [t[0], t[1], t[2], 1.0]);
    let mut report = EvalReport::new(EvalKind::Solution, &collection.name, None, opts.aggregation);
    let mut items = Vec::new();
    for model in &opts.models {
        for case in collection.eval_cases() {
            if case.ground_truth_solutions.is_empty() {
                report.findings.push(finding(case, None, model, "no ground-truth solution; skipped"));
            } else {
                items.push((model.as_str(), case));
            }
        }
    }
    for (scores, findings) in pool(&items, wf.gateway.config().max_in_flight, |(model, case)| score_solutions(&wf, case, model, opts)) {
        report.solution_scores.extend(scores);
        report.findings.extend(findings);
    }
    if report.solution_scores.is_empty() {
        return Err(nothing_scored(&report));
    }
    report.finalize();
    Ok(report)
}

/// Generated pair and parameter counts for one analysis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountSample {
    pub model_id: String,
    pub strategy: PromptStrategy,
    pub pairs: usize,
    pub parameters: usize,
}

impl CountSample {
    pub fn from_relations(model_id: &str, strategy: PromptStrategy, relations: &[ContradictionRelation]) -> Self {
        let set = PairSet::from_pairs(relations.iter().filter_map(ContradictionRelation::pair)).expect("complete relations hold valid pairs");
        Self { model_id: model_id.to_owned(), strategy, pairs: set.len(), parameters: set.parameters().len() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountStats {
    pub model_id: String,
    pub strategy: PromptStrategy,
    pub cases: usize,
    pub mean_pairs: f64,
    pub mean_parameters: f64,
}

/// Mean generated pairs and distinct parameters per model and strategy.
pub fn parameter_count_stats(samples: impl IntoIterator<Item = CountSample>) -> Vec<CountStats> {
    let mut groups: BTreeMap<(String, PromptStrategy), Vec<CountSample>> = BTreeMap::new();
    for s in samples {
        groups.entry((s.model_id.clone(), s.strategy)).or_default().push(s);
    }
    groups
        .into_iter()
        .map(|((model_id, strategy), v)| CountStats {
            model_id,
            strategy,
            cases: v.len(),
            mean_pairs: mean(&v.iter().map(|s| s.pairs as f64).collect::<Vec<_>>()).unwrap_or(0.0),
            mean_parameters: mean(&v.iter().map(|s| s.parameters as f64).collect::<Vec<_>>()).unwrap_or(0.0),
        })
        .collect()
}

impl EvalReport {
    pub fn count_samples(&self) -> Vec<CountSample> {
        self.case_scores
            .iter()
            .map(|s| CountSample { model_id: s.model_id.clone(), strategy: s.strategy, pairs: s.generated_count, parameters: s.parameter_count })
            .collect()
    }
}
