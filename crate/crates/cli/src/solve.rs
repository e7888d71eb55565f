use std::io::IsTerminal;
use std::path::PathBuf;

use anyhow::Context as _;
use clap::Args;
use triz_core::cases::{load_collection, seed_cases, ProblemDescription};
use triz_core::knowledge::KnowledgeBase;
use triz_core::prompts::PromptStrategy;
use triz_core::workflow::auto::{self, Event, RunOptions, Selection, SolvePlan};
use triz_core::workflow::{session_report, Session, SessionStore, Workflow, DEFAULT_SOLUTION_COUNT};

use crate::checkpoints::Prompter;
use crate::{Context, Usage};

#[derive(Args)]
#[command(group = clap::ArgGroup::new("input").required(true).args(["case", "problem"]))]
pub struct SolveArgs {
    /// Case id from the collection.
    #[arg(long)]
    case: Option<String>,
    /// Collection file to take `--case` from; the seed cases by default.
    #[arg(long, requires = "case")]
    collection: Option<PathBuf>,
    /// Problem file (TOML with scenario, current_state, pain_point, requirement).
    #[arg(long)]
    problem: Option<PathBuf>,
    /// Step-1 parameters to carry forward, e.g. `1,3`.
    #[arg(long, value_delimiter = ',', conflicts_with = "select_all")]
    select: Option<Vec<u32>>,
    /// Carry every Step-1 parameter forward (non-interactive default).
    #[arg(long)]
    select_all: bool,
    /// TRIZ parameter numbers for contradiction analysis.
    #[arg(long, value_delimiter = ',')]
    triz: Option<Vec<u8>>,
    /// 1-based index of the contradiction to resolve.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    contradiction: Option<u32>,
    /// Principles to apply instead of the matrix recommendation.
    #[arg(long, value_delimiter = ',')]
    principles: Option<Vec<u8>>,
    /// Prompt strategy for contradiction analysis: basic, cot, few-shot or cot-few-shot
    #[arg(long, value_parser = strategy)]
    strategy_step3: Option<PromptStrategy>,
    /// Prompt strategy for solution generation
    #[arg(long, value_parser = strategy)]
    strategy_step4: Option<PromptStrategy>,
    /// Solutions per principle.
    #[arg(long, default_value_t = DEFAULT_SOLUTION_COUNT, value_parser = clap::value_parser!(u32).range(1..=20))]
    count: u32,
    /// Chat model id; the configured model by default
    #[arg(long)]
    model: Option<String>,
    /// Write the session and a Markdown report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn strategy(s: &str) -> Result<PromptStrategy, String> {
    s.parse().map_err(|_| format!("unknown strategy {s:?} (basic, cot, few-shot, cot-few-shot)"))
}

fn load_problem(ctx_case: Option<&str>, collection: Option<&PathBuf>, problem: Option<&PathBuf>) -> anyhow::Result<ProblemDescription> {
    if let Some(path) = problem {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        return toml::from_str(&text).map_err(|e| Usage(format!("{}: {e}", path.display())).into());
    }
    let id = ctx_case.expect("clap requires --case or --problem");
    let cases = match collection {
        Some(p) => load_collection(p)?,
        None => seed_cases(),
    };
    let case = cases.get(id).ok_or_else(|| Usage(format!("no case {id:?} in collection {}", cases.name)))?;
    Ok(case.problem.clone())
}

pub fn run(ctx: &Context, args: SolveArgs) -> anyhow::Result<()> {
    let interactive = std::io::stdin().is_terminal();
    if !interactive && args.select.is_none() && !args.select_all {
        return Err(Usage("stdin is not a terminal: pass --select or --select-all".into()).into());
    }
    let problem = load_problem(args.case.as_deref(), args.collection.as_ref(), args.problem.as_ref())?;
    let model = args.model.clone().unwrap_or_else(|| ctx.config.model.clone());
    let session = Session::new(problem, &model)?;
    let gateway = ctx.gateway()?;
    let wf = Workflow::new(&gateway);
    let store = SessionStore::open(&ctx.store_dir())?;
    let plan = SolvePlan {
        select: args.select.clone().map_or(Selection::All, Selection::Only),
        triz: args.triz.clone(),
        contradiction: args.contradiction.map(|n| n as usize - 1),
        principles: args.principles.clone(),
    };
    let mut prompter = Prompter {
        plan,
        select_given: args.select.is_some() || args.select_all,
        ask: interactive,
        input: std::io::stdin().lock(),
        out: std::io::stdout(),
    };
    let options = RunOptions {
        step3: args.strategy_step3.or(ctx.config.defaults.step3),
        step4: args.strategy_step4.or(ctx.config.defaults.step4),
        count: args.count,
    };
    let kb = KnowledgeBase::bundled();
    let mut saved_id = String::new();
    let result = auto::run(&wf, Some(&store), session, &mut prompter, &options, |event| match event {
        Event::Saved(s) => {
            saved_id = s.id.clone();
            log::info!("session {} saved at {} (version {})", s.id, s.state, s.version);
        }
        Event::Solutions(p, solutions) => {
            let name = kb.principle_by_number(p as i64).map(|p| p.label()).unwrap_or_else(|_| p.to_string());
            println!("\nInventive Principle: {name}");
            for s in solutions {
                println!("  [{}] {}", s.generation_index + 1, s.text);
            }
        }
        Event::Failure(p, g, message) => eprintln!("warning: principle {p}, generation {}: {message}", g + 1),
    });
    let done = match result {
        Ok(s) => s,
        Err(e) if !saved_id.is_empty() => return Err(anyhow::Error::new(e).context(format!("session {saved_id} stopped; its last completed step is saved"))),
        Err(e) => return Err(e.into()),
    };
    println!("\nsession {} saved to {}", done.id, store.path_of(&done.id).display());
    if let Some(out) = &args.out {
        std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
        let json = out.join(format!("{}.json", done.id));
        std::fs::copy(store.path_of(&done.id), &json).with_context(|| format!("writing {}", json.display()))?;
        let md = out.join(format!("{}.md", done.id));
        std::fs::write(&md, session_report(&done, kb)).with_context(|| format!("writing {}", md.display()))?;
        println!("wrote {} and {}", json.display(), md.display());
    }
    Ok(())
}
