#![allow(dead_code)]

use std::path::PathBuf;

use triz_core::cases::seed_cases;
use triz_core::gateway::{Gateway, GatewayConfig, ReplayBackend};
use triz_core::knowledge::KnowledgeBase;
use triz_core::prompts::{self, Bindings, PromptEngine, PromptStrategy};

pub fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn replay_dir() -> PathBuf {
    manifest_dir().join("fixtures/replay")
}

pub fn golden_dir() -> PathBuf {
    manifest_dir().join("tests/golden")
}

pub fn replay_gateway() -> Gateway {
    let backend = ReplayBackend::from_path(&replay_dir()).expect("replay fixtures load");
    Gateway::new(Box::new(backend), GatewayConfig { requests_per_minute: None, ..GatewayConfig::default() })
}

/// Bindings drawn from the in-pipe robot seed case.
pub fn robot_bindings() -> Bindings {
    let kb = KnowledgeBase::bundled();
    let case = seed_cases().get("in-pipe-robot").cloned().expect("seed case");
    let mut b = Bindings::new();
    b.insert(prompts::CASE_DESCRIPTION.into(), case.problem.render());
    b.insert(
        prompts::PROBLEM_PARAMETERS_SELECTED.into(),
        "1. Number of motors: three motors drive the body and the legs.\n2. Adaptability to pipe diameter: rigid legs cannot follow diameter changes.".into(),
    );
    b.insert(prompts::TRIZ_PARAMETERS.into(), prompts::bind_triz_parameters(kb, &[37, 35, 32]));
    b.insert(prompts::INVENTIVE_PRINCIPLES.into(), prompts::bind_principles(kb, &[1]));
    b
}

/// Every (file name, rendered prompt) pair covered by the golden files.
pub fn rendered_prompts() -> Vec<(String, String)> {
    let engine = PromptEngine::bundled();
    let b = robot_bindings();
    let mut out = Vec::new();
    for step in [1u8, 2] {
        out.push((format!("step{step}.txt"), engine.render(step, None, &b).expect("render")));
    }
    for step in [3u8, 4] {
        for s in PromptStrategy::ALL {
            out.push((format!("step{step}-{}.txt", s.slug()), engine.render(step, Some(s), &b).expect("render")));
        }
    }
    out
}

/// Compares rendered prompts with the golden files; `UPDATE_GOLDEN=1`
/// rewrites them instead. Returns the names that differ.
pub fn check_golden() -> Vec<String> {
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    let mut bad = Vec::new();
    for (name, text) in rendered_prompts() {
        let path = golden_dir().join(&name);
        if update {
            std::fs::write(&path, &text).expect("write golden");
            continue;
        }
        match std::fs::read_to_string(&path) {
            Ok(expected) if expected == text => {}
            _ => bad.push(name),
        }
    }
    bad
}

pub use triz_core::prompts::PromptStrategy as S;
use triz_core::workflow::{Session, SessionState, Workflow, WorkflowError};

pub const OPS: [&str; 7] = ["step1", "step2", "step3", "recommend", "amend", "confirm", "step4"];

/// States each operation is accepted in.
pub fn allowed(op: &str) -> &'static [SessionState] {
    use SessionState::*;
    match op {
        "step1" => &[ProblemEntered],
        "step2" => &[ParametersExtracted],
        "step3" => &[ParametersMapped],
        "recommend" | "amend" | "confirm" => &[ContradictionsAnalyzed, PrinciplesChosen, SolutionsGenerated],
        "step4" => &[PrinciplesChosen, SolutionsGenerated],
        _ => unreachable!(),
    }
}

pub fn robot_session() -> Session {
    let mut s = Session::new(seed_cases().get("in-pipe-robot").unwrap().problem.clone(), "gpt-4").unwrap();
    s.id = "matrix".into();
    s
}

pub fn apply_op(wf: &Workflow, s: &mut Session, op: &str) -> Result<(), WorkflowError> {
    let all_ordinals: Vec<u32> = s.step1_output.iter().map(|p| p.ordinal).collect();
    let mut mapped = s.mapped_numbers();
    mapped.dedup();
    match op {
        "step1" => wf.apply(s, |wf, s| wf.run_step1(s)).map(drop),
        "step2" => wf.apply(s, |wf, s| wf.run_step2(s, &all_ordinals)).map(drop),
        "step3" => wf.apply(s, |wf, s| wf.run_step3(s, &mapped, Some(S::ChainOfThought))).map(drop),
        "recommend" => wf.apply(s, |wf, s| wf.recommend_principles(s, 0)).map(drop),
        "amend" => wf.apply(s, |wf, s| wf.amend_relation(s, 0, 37, 35)).map(drop),
        "confirm" => wf.apply(s, |wf, s| wf.confirm_principles(s, &[1, 15])).map(drop),
        "step4" => wf.apply(s, |wf, s| wf.run_step4(s, 1, Some(S::FewShot), 1)).map(drop),
        _ => unreachable!(),
    }
}

/// A session advanced to `target` through the replay fixtures.
pub fn session_in(wf: &Workflow, target: SessionState) -> Session {
    let mut s = robot_session();
    let path = ["step1", "step2", "step3", "recommend+confirm", "step4"];
    let pos = |st: SessionState| SessionState::ALL.iter().position(|x| *x == st).unwrap();
    while pos(s.state) < pos(target) {
        match path[pos(s.state)] {
            "recommend+confirm" => {
                apply_op(wf, &mut s, "recommend").unwrap();
                apply_op(wf, &mut s, "confirm").unwrap();
            }
            op => apply_op(wf, &mut s, op).unwrap(),
        }
    }
    s
}

/// One row per (state, operation): whether the state gate let it through
/// as expected, and whether a rejected call left the session unchanged.
pub struct MatrixRow {
    pub state: SessionState,
    pub op: &'static str,
    pub expected: bool,
    pub accepted: bool,
    pub untouched_on_error: bool,
}

pub fn state_matrix(wf: &Workflow) -> Vec<MatrixRow> {
    let mut rows = Vec::new();
    for state in SessionState::ALL {
        let base = session_in(wf, state);
        assert_eq!(base.state, state);
        for op in OPS {
            let mut s = base.clone();
            let r = apply_op(wf, &mut s, op);
            rows.push(MatrixRow {
                state,
                op,
                expected: allowed(op).contains(&state),
                accepted: !matches!(r, Err(WorkflowError::InvalidState { .. })),
                untouched_on_error: r.is_ok() || s == base,
            });
        }
    }
    rows
}

use triz_core::eval::{run_contradiction_eval, ContradictionEvalOptions, EvalReport, MatchMode};
use triz_core::workflow::auto::{self, RunOptions, SolvePlan};
use triz_core::workflow::SessionStore;

/// (model, strategy, recall, precision, mean pairs, mean parameters),
/// scored by hand from the scripted replies in the replay fixtures.
pub const EXPECTED_ORDERED: [(&str, S, f64, f64, f64, f64); 8] = [
    ("gpt-4", S::Basic, 0.75, 1.0 / 3.0, 3.0, 5.0),
    ("gpt-4", S::ChainOfThought, 1.0, 0.5, 3.0, 4.5),
    ("gpt-4", S::FewShot, 0.5, 1.0 / 6.0, 2.0, 3.5),
    ("gpt-4", S::ChainOfThoughtFewShot, 0.75, 2.0 / 3.0, 2.0, 3.5),
    ("gpt-3.5-turbo", S::Basic, 0.25, 0.5, 0.5, 1.0),
    ("gpt-3.5-turbo", S::ChainOfThought, 0.25, 0.5, 0.5, 1.0),
    ("gpt-3.5-turbo", S::FewShot, 0.25, 0.5, 0.5, 1.0),
    ("gpt-3.5-turbo", S::ChainOfThoughtFewShot, 0.25, 0.5, 0.5, 1.0),
];

pub fn replay_contradiction_report(mode: MatchMode) -> EvalReport {
    let gw = replay_gateway();
    let wf = Workflow::new(&gw);
    let opts = ContradictionEvalOptions { models: vec!["gpt-4".into(), "gpt-3.5-turbo".into()], mode, ..Default::default() };
    run_contradiction_eval(&wf, &seed_cases(), &opts).expect("replay eval")
}

/// Differences between the report's aggregates and [`EXPECTED_ORDERED`].
pub fn aggregate_mismatches(report: &EvalReport) -> Vec<String> {
    let mut out = Vec::new();
    if report.aggregates.len() != EXPECTED_ORDERED.len() {
        out.push(format!("{} aggregates, expected {}", report.aggregates.len(), EXPECTED_ORDERED.len()));
    }
    for (model, strategy, recall, precision, pairs, params) in EXPECTED_ORDERED {
        let Some(a) = report.aggregate(model, strategy) else {
            out.push(format!("{model}/{strategy}: missing"));
            continue;
        };
        let got = [a.recall, a.precision, a.mean_pair_count, a.mean_parameter_count];
        let want = [recall, precision, pairs, params];
        for (name, (g, w)) in ["recall", "precision", "pairs", "parameters"].iter().zip(got.iter().zip(want)) {
            if g.is_none_or(|g| (g - w).abs() > 1e-12) {
                out.push(format!("{model}/{strategy} {name}: got {g:?}, expected {w}"));
            }
        }
    }
    out
}

/// Solves the robot case from the replay fixtures into `dir` and returns
/// the saved session file.
pub fn replay_solve(dir: &std::path::Path) -> (Session, Vec<u8>) {
    let gw = replay_gateway();
    let wf = Workflow::new(&gw);
    let store = SessionStore::open(dir).expect("store");
    let session = Session::new(seed_cases().get("in-pipe-robot").unwrap().problem.clone(), "gpt-4").unwrap();
    let done = auto::run(&wf, Some(&store), session, &mut SolvePlan::default(), &RunOptions::default(), |_| {}).expect("replay solve");
    let bytes = std::fs::read(store.path_of(&done.id)).expect("session file");
    (done, bytes)
}

/// A real GPT-4 Step-3 reply for the virtual exhibition case.
pub const EXHIBITION_STEP3_GPT4: &str = "1. Improved Parameter: Ease of Operation (33)

   Worsened Parameter: Device Complexity (36)

   Explanation: By improving the ease of operation, the user interface becomes more intuitive and user-friendly...

2. Improved Parameter: Adaptability or Versatility (35)

   Worsened Parameter: Stability of the Object (13)

   Explanation: By improving the adaptability or versatility, the virtual exhibition can cater to a wider range of user preferences and needs...

3. Improved Parameter: Illumination Intensity (18)

   Worsened Parameter: Stability of the Object (13)

   Explanation: By improving the illumination intensity, the virtual exhibition can create a more immersive and engaging environment...
";

/// The GPT-3.5 reply for the same case, which omits parameter numbers.
pub const EXHIBITION_STEP3_GPT35: &str = "1. Improved Parameter: Ease of Operation
Worsened Parameter: Object-Affected Harmful

Explanation: By improving the ease of operation, the virtual exhibition interface and experience will become more user-friendly and intuitive...
";
