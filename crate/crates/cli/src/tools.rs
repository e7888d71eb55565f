use std::path::{Path, PathBuf};

use anyhow::Context as _;
use clap::Subcommand;
use triz_core::cases::{export_dir, import_dir, load_collection, parse_collection, save_collection, seed_toml, validate_case, Case, CaseError, CaseFinding};
use triz_core::knowledge::{export_bundle, validate_knowledge_base, KnowledgeBase, KnowledgeError};
use triz_core::workflow::{session_report, SessionStore};

use crate::{Context, Findings, Usage};

#[derive(Subcommand)]
pub enum CasesCommand {
    /// Check a collection file, a single-case file or a directory of case files.
    Validate { path: PathBuf },
    /// Build a collection file from a directory of single-case files.
    Import {
        dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "imported")]
        name: String,
        /// Case ids reserved as few-shot demonstrations.
        #[arg(long, value_delimiter = ',')]
        few_shot: Vec<String>,
    },
    /// Write each case of a collection to its own file.
    Export {
        collection: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the bundled seed collection.
    Seed {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
pub enum MatrixCommand {
    /// Principles recommended for an improving/worsening pair.
    Lookup { improving: i64, worsening: i64 },
}

#[derive(Subcommand)]
pub enum ParamsCommand {
    /// Find a parameter by name.
    Find {
        name: String,
        /// Require the exact name instead of token containment.
        #[arg(long)]
        exact: bool,
    },
    Show { number: i64 },
    List,
}

#[derive(Subcommand)]
pub enum PrinciplesCommand {
    Show { number: i64 },
    /// List principles, optionally those whose name contains `query`.
    List { query: Option<String> },
}

#[derive(Subcommand)]
pub enum KbCommand {
    /// Check the bundled data, or a directory of replacement files.
    Validate {
        #[arg(long)]
        dir: Option<PathBuf>,
    },
    /// Write the bundled data files to start a custom copy.
    Export {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
pub enum SessionsCommand {
    List,
    /// Print a session as JSON.
    Show { id: String },
    /// Print a session as a Markdown report.
    Report { id: String },
}

fn print_findings(findings: &[CaseFinding]) -> anyhow::Result<()> {
    for f in findings {
        println!("{f}");
    }
    if findings.is_empty() {
        Ok(())
    } else {
        Err(Findings(findings.len()).into())
    }
}

/// Case errors that describe the input rather than the environment exit 3.
fn case_result<T>(r: Result<T, CaseError>) -> anyhow::Result<T> {
    match r {
        Ok(v) => Ok(v),
        Err(CaseError::Invalid(findings)) => {
            print_findings(&findings)?;
            unreachable!("findings are never empty here")
        }
        Err(e @ CaseError::Parse { .. }) => {
            println!("{e}");
            Err(Findings(1).into())
        }
        Err(e) => Err(e.into()),
    }
}

fn validate_path(path: &Path) -> anyhow::Result<()> {
    if path.is_dir() {
        let c = case_result(import_dir(path, "directory", Vec::new()))?;
        println!("{}: {} case(s), no findings", path.display(), c.cases.len());
        return Ok(());
    }
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let is_collection = text.lines().any(|l| l.trim_start().starts_with("[[cases]]"));
    if is_collection {
        let c = case_result(parse_collection(&text, path))?;
        println!("{}: {} case(s), no findings", path.display(), c.cases.len());
        return Ok(());
    }
    let case: Case = match toml::from_str(&text) {
        Ok(c) => c,
        Err(e) => {
            println!("{}: {}", path.display(), e.message());
            return Err(Findings(1).into());
        }
    };
    print_findings(&validate_case(&case))?;
    println!("{}: case {} has no findings", path.display(), case.id);
    Ok(())
}

pub fn cases(_ctx: &Context, command: CasesCommand) -> anyhow::Result<()> {
    match command {
        CasesCommand::Validate { path } => validate_path(&path),
        CasesCommand::Import { dir, out, name, few_shot } => {
            let c = case_result(import_dir(&dir, &name, few_shot))?;
            save_collection(&c, &out)?;
            println!("wrote {} case(s) to {}", c.cases.len(), out.display());
            Ok(())
        }
        CasesCommand::Export { collection, out } => {
            let c = case_result(load_collection(&collection))?;
            export_dir(&c, &out)?;
            println!("wrote {} case file(s) to {}", c.cases.len(), out.display());
            Ok(())
        }
        CasesCommand::Seed { out } => {
            std::fs::write(&out, seed_toml()).with_context(|| format!("writing {}", out.display()))?;
            println!("wrote {}", out.display());
            Ok(())
        }
    }
}

fn usage_on_input(e: KnowledgeError) -> anyhow::Error {
    match e {
        KnowledgeError::OutOfRange { .. } | KnowledgeError::Ambiguous { .. } | KnowledgeError::EmptyName => Usage(e.to_string()).into(),
        e => e.into(),
    }
}

pub fn matrix(command: MatrixCommand) -> anyhow::Result<()> {
    let kb = KnowledgeBase::bundled();
    let MatrixCommand::Lookup { improving, worsening } = command;
    let principles = kb.matrix_lookup(improving, worsening).map_err(usage_on_input)?;
    println!("improving: {}", kb.parameter_by_number(improving).map_err(usage_on_input)?.label());
    println!("worsening: {}", kb.parameter_by_number(worsening).map_err(usage_on_input)?.label());
    if principles.is_empty() {
        println!("(empty cell: no principles recommended)");
    }
    for p in principles {
        println!("{}", p.label());
    }
    Ok(())
}

pub fn params(command: ParamsCommand) -> anyhow::Result<()> {
    let kb = KnowledgeBase::bundled();
    match command {
        ParamsCommand::Find { name, exact } => match kb.parameter_by_name(&name, !exact).map_err(usage_on_input)? {
            Some(p) => println!("{}", p.label()),
            None => anyhow::bail!("no parameter matches {name:?}"),
        },
        ParamsCommand::Show { number } => {
            let p = kb.parameter_by_number(number).map_err(usage_on_input)?;
            println!("{}\n{}", p.label(), p.definition);
        }
        ParamsCommand::List => {
            for p in kb.parameters() {
                println!("{}", p.label());
            }
        }
    }
    Ok(())
}

pub fn principles(command: PrinciplesCommand) -> anyhow::Result<()> {
    let kb = KnowledgeBase::bundled();
    match command {
        PrinciplesCommand::Show { number } => {
            let p = kb.principle_by_number(number).map_err(usage_on_input)?;
            println!("{}\n{}", p.label(), p.description);
        }
        PrinciplesCommand::List { query } => {
            let q = query.unwrap_or_default().to_lowercase();
            for p in kb.principles().iter().filter(|p| p.name.to_lowercase().contains(q.trim())) {
                println!("{}", p.label());
            }
        }
    }
    Ok(())
}

pub fn kb(command: KbCommand) -> anyhow::Result<()> {
    match command {
        KbCommand::Validate { dir } => {
            let report = validate_knowledge_base(dir.as_deref())?;
            for f in &report.findings {
                println!("{}: {:?}: {}", f.file, f.rule, f.message);
            }
            if !report.is_empty() {
                return Err(Findings(report.findings.len()).into());
            }
            println!("knowledge base: no findings");
            Ok(())
        }
        KbCommand::Export { out } => {
            export_bundle(&out).with_context(|| format!("writing {}", out.display()))?;
            println!("wrote knowledge files to {}", out.display());
            Ok(())
        }
    }
}

pub fn sessions(ctx: &Context, command: SessionsCommand) -> anyhow::Result<()> {
    let store = SessionStore::open(&ctx.store_dir())?;
    match command {
        SessionsCommand::List => {
            for s in store.list()? {
                println!("{}  v{}  {:<24} {}  {}", s.id, s.version, s.state.to_string(), s.model_id, s.scenario.chars().take(60).collect::<String>());
            }
        }
        SessionsCommand::Show { id } => println!("{}", serde_json::to_string_pretty(&store.load(&id)?)?),
        SessionsCommand::Report { id } => print!("{}", session_report(&store.load(&id)?, KnowledgeBase::bundled())),
    }
    Ok(())
}
