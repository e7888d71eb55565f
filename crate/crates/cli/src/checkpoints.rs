//! Terminal prompts at the designer checkpoints. Answers given as flags
//! are used without asking; the rest are asked for, or defaulted when
//! prompting is off.

use std::io::{BufRead, Write};

use triz_core::knowledge::KnowledgeBase;
use triz_core::workflow::auto::{Checkpoints, Selection, SolvePlan};
use triz_core::workflow::{ContradictionRelation, ProblemParameter, TrizMapping, WorkflowError};

pub struct Prompter<R, W> {
    pub plan: SolvePlan,
    /// Which plan fields came from flags.
    pub select_given: bool,
    pub ask: bool,
    pub input: R,
    pub out: W,
}

/// Parses `1,3 5` style lists; `all` and empty input return `None`.
pub fn parse_list<T: std::str::FromStr>(text: &str) -> Result<Option<Vec<T>>, String> {
    let t = text.trim();
    if t.is_empty() || t.eq_ignore_ascii_case("all") {
        return Ok(None);
    }
    t.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|_| format!("{s:?} is not a number")))
        .collect::<Result<Vec<_>, _>>()
        .map(Some)
}

fn closed() -> WorkflowError {
    WorkflowError::InvalidInput("input ended before a selection was made".into())
}

impl<R: BufRead, W: Write> Prompter<R, W> {
    fn ask_line(&mut self, prompt: &str) -> Result<String, WorkflowError> {
        write!(self.out, "{prompt}").and_then(|_| self.out.flush()).map_err(|_| closed())?;
        let mut line = String::new();
        match self.input.read_line(&mut line) {
            Ok(0) | Err(_) => Err(closed()),
            Ok(_) => Ok(line),
        }
    }

    fn say(&mut self, text: &str) {
        let _ = writeln!(self.out, "{text}");
    }

    /// Asks until `accept` takes the answer.
    fn ask_until<T>(&mut self, prompt: &str, mut accept: impl FnMut(&str) -> Result<T, String>) -> Result<T, WorkflowError> {
        loop {
            let line = self.ask_line(prompt)?;
            match accept(&line) {
                Ok(v) => return Ok(v),
                Err(why) => self.say(&format!("  {why}")),
            }
        }
    }
}

fn relation_line(kb: &KnowledgeBase, r: &ContradictionRelation) -> String {
    let side = |n: Option<u8>, name: &str| match n.and_then(|n| kb.parameter_by_number(n as i64).ok()) {
        Some(p) => p.label(),
        None => format!("{name} (unresolved)"),
    };
    let mut s = format!("improving {} / worsening {}", side(r.improving_number, &r.improving_name), side(r.worsening_number, &r.worsening_name));
    if !r.complete {
        s.push_str("  [incomplete]");
    }
    s
}

impl<R: BufRead, W: Write> Checkpoints for Prompter<R, W> {
    fn problem_parameters(&mut self, params: &[ProblemParameter]) -> Result<Vec<u32>, WorkflowError> {
        if self.select_given || !self.ask {
            return self.plan.problem_parameters(params);
        }
        self.say("\nProblem parameters:");
        for p in params {
            let text = if p.explanation.is_empty() { p.name.clone() } else { format!("{}: {}", p.name, p.explanation) };
            self.say(&format!("  {}. {text}", p.ordinal));
        }
        let known: Vec<u32> = params.iter().map(|p| p.ordinal).collect();
        let chosen = self.ask_until("Select parameters (e.g. 1,3; empty for all): ", |line| match parse_list::<u32>(line)? {
            None => Ok(known.clone()),
            Some(v) if v.iter().all(|n| known.contains(n)) && !v.is_empty() => Ok(v),
            Some(_) => Err(format!("choose from {known:?}")),
        })?;
        self.plan.select = Selection::Only(chosen.clone());
        Ok(chosen)
    }

    fn triz_parameters(&mut self, mappings: &[TrizMapping]) -> Result<Vec<u8>, WorkflowError> {
        let defaults = self.plan.triz_parameters(mappings)?;
        if self.plan.triz.is_some() || !self.ask {
            return Ok(defaults);
        }
        self.say("\nTRIZ parameters:");
        let kb = KnowledgeBase::bundled();
        for m in mappings {
            let label = m.triz_number.and_then(|n| kb.parameter_by_number(n as i64).ok()).map(|p| p.label()).unwrap_or_else(|| format!("{} (unresolved)", m.triz_name));
            let from = m.source.map(|s| format!("  (from {s})")).unwrap_or_default();
            self.say(&format!("  {label}{from}"));
        }
        self.ask_until("Parameters to analyse (numbers; empty for all mapped): ", |line| match parse_list::<u8>(line)? {
            None => Ok(defaults.clone()),
            Some(v) if v.len() >= 2 && v.iter().all(|n| (1..=39).contains(n)) => Ok(v),
            Some(_) => Err("give at least two numbers between 1 and 39".into()),
        })
    }

    fn contradiction(&mut self, relations: &[ContradictionRelation]) -> Result<usize, WorkflowError> {
        if self.plan.contradiction.is_some() || !self.ask {
            return self.plan.contradiction(relations);
        }
        self.say("\nContradictions:");
        let kb = KnowledgeBase::bundled();
        for (i, r) in relations.iter().enumerate() {
            self.say(&format!("  {}. {}", i + 1, relation_line(kb, r)));
            if !r.explanation.is_empty() {
                self.say(&format!("     {}", r.explanation));
            }
        }
        let first = relations.iter().position(|r| r.complete);
        self.ask_until("Contradiction to resolve (number; empty for the first complete one): ", |line| {
            let pick = match line.trim() {
                "" => first.ok_or_else(|| "no relation is complete".to_owned())?,
                t => t.parse::<usize>().ok().filter(|n| (1..=relations.len()).contains(n)).ok_or_else(|| format!("choose 1..={}", relations.len()))? - 1,
            };
            if relations[pick].complete {
                Ok(pick)
            } else {
                Err("that relation lacks a parameter number; choose another".into())
            }
        })
    }

    fn principles(&mut self, recommended: &[u8]) -> Result<Vec<u8>, WorkflowError> {
        if self.plan.principles.is_some() || !self.ask {
            return self.plan.principles(recommended);
        }
        let kb = KnowledgeBase::bundled();
        if recommended.is_empty() {
            self.say("\nThe matrix cell for this pair is empty.");
        } else {
            self.say("\nRecommended principles:");
            for n in recommended {
                if let Ok(p) = kb.principle_by_number(*n as i64) {
                    self.say(&format!("  {}", p.label()));
                }
            }
        }
        let rec = recommended.to_vec();
        self.ask_until("Principles to apply (numbers; empty for the recommended ones): ", |line| match parse_list::<u8>(line)? {
            None if rec.is_empty() => Err("choose at least one principle (1..=40)".into()),
            None => Ok(rec.clone()),
            Some(v) if !v.is_empty() && v.iter().all(|n| (1..=40).contains(n)) => Ok(v),
            Some(_) => Err("principles are numbered 1..=40".into()),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prompter(input: &str) -> Prompter<&[u8], Vec<u8>> {
        Prompter { plan: SolvePlan::default(), select_given: false, ask: true, input: input.as_bytes(), out: Vec::new() }
    }

    fn params() -> Vec<ProblemParameter> {
        (1..=3).map(|n| ProblemParameter { ordinal: n, name: format!("p{n}"), explanation: String::new(), raw: false }).collect()
    }

    #[test]
    fn lists_parse() {
        assert_eq!(parse_list::<u8>(" 1, 3 5\n").unwrap(), Some(vec![1, 3, 5]));
        assert_eq!(parse_list::<u8>("all").unwrap(), None);
        assert!(parse_list::<u8>("1,x").is_err());
    }

    #[test]
    fn reprompts_until_valid() {
        let mut p = prompter("9\n1,3\n");
        assert_eq!(p.problem_parameters(&params()).unwrap(), vec![1, 3]);
        let shown = String::from_utf8(p.out).unwrap();
        assert!(shown.contains("choose from [1, 2, 3]"));
    }

    #[test]
    fn empty_answer_takes_default_and_eof_errors() {
        assert_eq!(prompter("\n").problem_parameters(&params()).unwrap(), vec![1, 2, 3]);
        assert!(prompter("").problem_parameters(&params()).is_err());
    }

    #[test]
    fn incomplete_relations_are_refused() {
        let rels = vec![
            ContradictionRelation::new(Some(33), "a".into(), None, "b".into(), String::new()),
            ContradictionRelation::new(Some(37), "a".into(), Some(35), "b".into(), String::new()),
        ];
        let mut p = prompter("1\n2\n");
        assert_eq!(p.contradiction(&rels).unwrap(), 1);
        assert_eq!(prompter("\n").contradiction(&rels).unwrap(), 1);
    }

    #[test]
    fn empty_cell_needs_a_choice() {
        let mut p = prompter("\n28\n");
        assert_eq!(p.principles(&[]).unwrap(), vec![28]);
    }

    #[test]
    fn flags_skip_prompts() {
        let mut p = prompter("");
        p.select_given = true;
        p.plan.select = Selection::Only(vec![2]);
        assert_eq!(p.problem_parameters(&params()).unwrap(), vec![2]);
    }
}
