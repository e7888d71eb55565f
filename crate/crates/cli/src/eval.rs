use std::path::{Path, PathBuf};

use anyhow::Context as _;
use clap::{Args, Subcommand};
use triz_core::cases::{load_collection, seed_cases, CaseCollection};
use triz_core::eval::export::{export_both, import_report};
use triz_core::eval::plot::{projection_plot_data, render_svg, report_plot_data, PlotData};
use triz_core::eval::project::{project_keywords, GatewayPhrases, PhraseEmbedder, ProjectionMethod, UmapParams};
use triz_core::eval::vectors::{VectorFormat, WordVectors};
use triz_core::eval::{run_contradiction_eval, run_solution_eval, Aggregation, ContradictionEvalOptions, EvalReport, MatchMode, SolutionEvalOptions};
use triz_core::gateway::RequestTag;
use triz_core::prompts::PromptStrategy;
use triz_core::workflow::Workflow;

use crate::solve::strategy;
use crate::{Context, Usage};

#[derive(Subcommand)]
pub enum EvalCommand {
    /// Score a collection and write report files.
    Run(RunArgs),
    /// Print a saved report and optionally re-export it.
    Report {
        report: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write plot data (JSON) and SVG charts for a saved report.
    Plot {
        report: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Project a case's solution keywords to 2D.
    Project(ProjectArgs),
}

#[derive(Args)]
pub struct RunArgs {
    /// Collection file; the seed cases by default.
    #[arg(long)]
    collection: Option<PathBuf>,
    /// 3 scores contradictions, 4 scores solutions.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u8).range(3..=4))]
    step: u8,
    /// Comma-separated strategies.
    #[arg(long, value_delimiter = ',', value_parser = strategy)]
    strategies: Option<Vec<PromptStrategy>>,
    /// Comma-separated model ids.
    #[arg(long, value_delimiter = ',')]
    models: Option<Vec<String>>,
    /// ordered-pair, unordered-pair or parameter-level (step 3 only)
    #[arg(long, value_parser = |s: &str| s.parse::<MatchMode>().map_err(|e| e.to_string()))]
    match_mode: Option<MatchMode>,
    /// macro (mean of per-case scores) or micro (pooled counts)
    #[arg(long, value_parser = |s: &str| s.parse::<Aggregation>().map_err(|e| e.to_string()))]
    aggregation: Option<Aggregation>,
    /// Solutions generated per ground-truth principle (step 4).
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
    count: u32,
    /// Directory for the report files
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
pub struct ProjectArgs {
    #[arg(long)]
    case: String,
    #[arg(long)]
    collection: Option<PathBuf>,
    #[arg(long, default_value = "umap", value_parser = |s: &str| s.parse::<ProjectionMethod>().map_err(|e| e.to_string()))]
    method: ProjectionMethod,
    /// Word vectors (word2vec text or binary); the embedding API otherwise.
    #[arg(long)]
    word_vectors: Option<PathBuf>,
    /// Read at most this many vectors.
    #[arg(long)]
    vector_limit: Option<usize>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn collection(path: Option<&Path>) -> anyhow::Result<CaseCollection> {
    Ok(match path {
        Some(p) => load_collection(p)?,
        None => seed_cases(),
    })
}

pub fn run(ctx: &Context, command: EvalCommand) -> anyhow::Result<()> {
    match command {
        EvalCommand::Run(a) => run_eval(ctx, a),
        EvalCommand::Report { report, out } => {
            let r = import_report(&report)?;
            print!("{}", r.table());
            if let Some(out) = out {
                for p in export_both(&r, &out, &r.id)? {
                    println!("wrote {}", p.display());
                }
            }
            Ok(())
        }
        EvalCommand::Plot { report, out } => {
            let r = import_report(&report)?;
            write_plots(&report_plot_data(&r), &out)
        }
        EvalCommand::Project(a) => project(ctx, a),
    }
}

fn run_eval(ctx: &Context, a: RunArgs) -> anyhow::Result<()> {
    let cases = collection(a.collection.as_deref())?;
    let d = &ctx.config.defaults;
    let strategies = a.strategies.unwrap_or_else(|| d.strategies.clone());
    let models = a.models.unwrap_or_else(|| d.models.clone());
    let aggregation = a.aggregation.unwrap_or(d.aggregation);
    if strategies.is_empty() || models.is_empty() {
        return Err(Usage("select at least one strategy and one model".into()).into());
    }
    let gateway = ctx.gateway()?;
    let wf = Workflow::new(&gateway);
    let mut report: EvalReport = if a.step == 3 {
        run_contradiction_eval(&wf, &cases, &ContradictionEvalOptions { strategies, models, mode: a.match_mode.unwrap_or(d.match_mode), aggregation })?
    } else {
        if a.match_mode.is_some() {
            return Err(Usage("--match-mode only applies to step 3".into()).into());
        }
        run_solution_eval(&wf, &cases, &SolutionEvalOptions { strategies, models, per_principle_count: a.count, aggregation })?
    };
    if ctx.is_replay() {
        // replayed runs must produce identical files
        report.created_at.clear();
        report.finalize();
    }
    print!("{}", report.table());
    for p in export_both(&report, &a.out, &report.id)? {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn write_plots(plots: &[PlotData], out: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    for plot in plots {
        let json = out.join(format!("{}.json", plot.name));
        std::fs::write(&json, serde_json::to_string_pretty(plot)? + "\n").with_context(|| format!("writing {}", json.display()))?;
        let svg = out.join(format!("{}.svg", plot.name));
        std::fs::write(&svg, render_svg(plot)).with_context(|| format!("writing {}", svg.display()))?;
        println!("wrote {} and {}", json.display(), svg.display());
    }
    Ok(())
}

fn project(ctx: &Context, a: ProjectArgs) -> anyhow::Result<()> {
    let cases = collection(a.collection.as_deref())?;
    let case = cases.get(&a.case).ok_or_else(|| Usage(format!("no case {:?} in collection {}", a.case, cases.name)))?;
    if case.solution_keywords.len() < 3 {
        return Err(Usage(format!("case {} has {} solution keyword(s); projection needs at least 3", case.id, case.solution_keywords.len())).into());
    }
    let params = UmapParams { seed: a.seed, ..UmapParams::default() };
    let gateway;
    let vectors;
    let embedder: &dyn PhraseEmbedder = match &a.word_vectors {
        Some(path) => {
            vectors = WordVectors::load(path, Some(VectorFormat::from_path(path)), a.vector_limit)?;
            &vectors
        }
        None => {
            gateway = ctx.gateway()?;
            let tag = RequestTag { session: format!("keywords-{}", case.id), model: gateway.config().embedding_model.clone(), ..RequestTag::default() };
            &GatewayPhrases { gateway: &gateway, tag }
        }
    };
    let projection = project_keywords(&case.solution_keywords, embedder, a.method, &params)?;
    for f in &projection.findings {
        eprintln!("note: {f}");
    }
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let path = a.out.join(format!("keywords-{}-{}.json", case.id, a.method));
    std::fs::write(&path, serde_json::to_string_pretty(&projection)? + "\n").with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    write_plots(&[projection_plot_data(&projection)], &a.out)
}
