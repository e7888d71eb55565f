//! Drives a session through all four steps, asking a [`Checkpoints`]
//! implementation at each designer decision. Flag-driven selection is
//! [`SolvePlan`]; the CLI supplies an interactive one.

use serde::{Deserialize, Serialize};

use super::{ContradictionRelation, ProblemParameter, Session, SessionStore, Solution, TrizMapping, Workflow, WorkflowError};
use crate::prompts::PromptStrategy;

pub trait Checkpoints {
    /// Ordinals of the Step-1 parameters to carry into Step 2.
    fn problem_parameters(&mut self, params: &[ProblemParameter]) -> Result<Vec<u32>, WorkflowError>;
    /// TRIZ parameter numbers for contradiction analysis.
    fn triz_parameters(&mut self, mappings: &[TrizMapping]) -> Result<Vec<u8>, WorkflowError>;
    /// Index of the relation to resolve.
    fn contradiction(&mut self, relations: &[ContradictionRelation]) -> Result<usize, WorkflowError>;
    /// Principles to generate solutions for.
    fn principles(&mut self, recommended: &[u8]) -> Result<Vec<u8>, WorkflowError>;
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Selection {
    #[default]
    All,
    Only(Vec<u32>),
}

/// Scripted answers. `None` fields fall back to: every resolved mapping,
/// the first complete relation, and the recommended principles.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SolvePlan {
    pub select: Selection,
    pub triz: Option<Vec<u8>>,
    pub contradiction: Option<usize>,
    pub principles: Option<Vec<u8>>,
}

impl Checkpoints for SolvePlan {
    fn problem_parameters(&mut self, params: &[ProblemParameter]) -> Result<Vec<u32>, WorkflowError> {
        Ok(match &self.select {
            Selection::All => params.iter().map(|p| p.ordinal).collect(),
            Selection::Only(v) => v.clone(),
        })
    }

    fn triz_parameters(&mut self, mappings: &[TrizMapping]) -> Result<Vec<u8>, WorkflowError> {
        Ok(match &self.triz {
            Some(v) => v.clone(),
            None => {
                let mut out: Vec<u8> = Vec::new();
                for n in mappings.iter().filter_map(|m| m.triz_number) {
                    if !out.contains(&n) {
                        out.push(n);
                    }
                }
                out
            }
        })
    }

    fn contradiction(&mut self, relations: &[ContradictionRelation]) -> Result<usize, WorkflowError> {
        match self.contradiction {
            Some(i) => Ok(i),
            None => relations.iter().position(|r| r.complete).ok_or(WorkflowError::EmptyResult("complete contradiction relations")),
        }
    }

    fn principles(&mut self, recommended: &[u8]) -> Result<Vec<u8>, WorkflowError> {
        match &self.principles {
            Some(v) => Ok(v.clone()),
            None if recommended.is_empty() => Err(WorkflowError::InvalidInput("the matrix cell is empty; choose principles explicitly".into())),
            None => Ok(recommended.to_vec()),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunOptions {
    pub step3: Option<PromptStrategy>,
    pub step4: Option<PromptStrategy>,
    pub count: u32,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { step3: None, step4: None, count: super::DEFAULT_SOLUTION_COUNT }
    }
}

/// Progress notifications for display.
pub enum Event<'a> {
    Saved(&'a Session),
    Solutions(u8, &'a [Solution]),
    Failure(u8, u32, &'a str),
}

/// Runs every step, persisting after each one when a store is given.
pub fn run(
    wf: &Workflow,
    store: Option<&SessionStore>,
    session: Session,
    checkpoints: &mut dyn Checkpoints,
    options: &RunOptions,
    mut notify: impl FnMut(Event),
) -> Result<Session, WorkflowError> {
    let mut s = match store {
        Some(st) => st.create(session)?,
        None => session,
    };
    let commit = |s: &mut Session, notify: &mut dyn FnMut(Event)| -> Result<(), WorkflowError> {
        if let Some(st) = store {
            *s = st.save(s)?;
        }
        notify(Event::Saved(s));
        Ok(())
    };

    let params = wf.apply(&mut s, |wf, s| wf.run_step1(s))?;
    commit(&mut s, &mut notify)?;
    let chosen = checkpoints.problem_parameters(&params)?;
    let mappings = wf.apply(&mut s, |wf, s| wf.run_step2(s, &chosen))?;
    commit(&mut s, &mut notify)?;
    let numbers = checkpoints.triz_parameters(&mappings)?;
    let relations = wf.apply(&mut s, |wf, s| wf.run_step3(s, &numbers, options.step3))?;
    commit(&mut s, &mut notify)?;
    let index = checkpoints.contradiction(&relations)?;
    let recommended = wf.apply(&mut s, |wf, s| wf.recommend_principles(s, index))?;
    let principles = checkpoints.principles(&recommended)?;
    wf.apply(&mut s, |wf, s| wf.confirm_principles(s, &principles))?;
    commit(&mut s, &mut notify)?;
    for p in principles {
        let outcome = wf.apply(&mut s, |wf, s| wf.run_step4(s, p, options.step4, options.count))?;
        for f in &outcome.failures {
            notify(Event::Failure(p, f.generation_index, &f.message));
        }
        notify(Event::Solutions(p, &outcome.solutions));
        commit(&mut s, &mut notify)?;
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases::seed_cases;
    use crate::gateway::{FnBackend, Gateway, GatewayConfig};
    use crate::workflow::SessionState;

    #[test]
    fn plan_runs_to_solutions_and_persists() {
        let gw = Gateway::new(Box::new(FnBackend::new(crate::workflow::tests::scripted)), GatewayConfig { requests_per_minute: None, ..GatewayConfig::default() });
        let wf = Workflow::new(&gw);
        let dir = tempfile::tempdir().unwrap();
        let store = SessionStore::open(dir.path()).unwrap();
        let session = Session::new(seed_cases().get("in-pipe-robot").unwrap().problem.clone(), "gpt-4").unwrap();
        let mut saves = 0;
        let done = run(&wf, Some(&store), session, &mut SolvePlan::default(), &RunOptions { count: 2, ..Default::default() }, |e| {
            if let Event::Saved(_) = e {
                saves += 1;
            }
        })
        .unwrap();
        assert_eq!(done.state, SessionState::SolutionsGenerated);
        assert_eq!(store.load(&done.id).unwrap(), done);
        // (37, 35) recommends 1 and 15
        assert_eq!(done.selected_principles, vec![1, 15]);
        assert_eq!(done.solutions.len(), 4);
        assert_eq!(saves, 6);
    }

    #[test]
    fn empty_cell_needs_explicit_principles() {
        let mut plan = SolvePlan::default();
        assert!(plan.principles(&[]).is_err());
        plan.principles = Some(vec![28]);
        assert_eq!(plan.principles(&[]).unwrap(), vec![28]);
    }
}
