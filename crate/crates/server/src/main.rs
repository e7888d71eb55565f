use std::net::SocketAddr;
use std::path::PathBuf;

use clap::Parser;
use triz_core::gateway::{BackendMode, Gateway, GatewayConfig};
use triz_server::{app, ServerConfig};

/// Serves the TRIZ workbench API.
#[derive(Parser)]
#[command(version)]
struct Args {
    #[arg(long, default_value = "127.0.0.1:8080")]
    listen: SocketAddr,
    /// Session store directory.
    #[arg(long, default_value = "sessions")]
    store: PathBuf,
    /// Case collection file (TOML); defaults to the bundled seed cases.
    #[arg(long)]
    cases: Option<PathBuf>,
    #[arg(long, default_value = "reports")]
    reports: PathBuf,
    /// Serve recorded transcripts from this directory instead of calling the provider.
    #[arg(long, conflicts_with = "record")]
    replay: Option<PathBuf>,
    /// Record live exchanges into this directory.
    #[arg(long)]
    record: Option<PathBuf>,
    /// Shared bearer token; unset disables authentication.
    #[arg(long, env = "TRIZ_API_TOKEN", hide_env_values = true)]
    token: Option<String>,
    /// Allowed browser origin; repeat for several.
    #[arg(long = "cors-origin")]
    cors_origins: Vec<String>,
    /// Built web UI assets to serve.
    #[arg(long)]
    static_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    eval_workers: usize,
}

#[tokio::main]
async fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    if let Err(e) = serve(args).await {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

async fn serve(args: Args) -> Result<(), Box<dyn std::error::Error>> {
    let mode = match (args.replay, args.record) {
        (Some(dir), _) => BackendMode::Replay(dir),
        (None, Some(dir)) => BackendMode::Record(dir),
        (None, None) => BackendMode::Live,
    };
    let gateway = Gateway::open(&mode, GatewayConfig::default())?;
    let config = ServerConfig {
        store_dir: args.store,
        cases_path: args.cases,
        reports_dir: Some(args.reports),
        token: args.token,
        cors_origins: args.cors_origins,
        static_dir: args.static_dir,
        eval_workers: args.eval_workers,
    };
    if config.token.is_none() {
        log::warn!("no API token set; every request is accepted");
    }
    let router = app(&config, gateway)?;
    let listener = tokio::net::TcpListener::bind(args.listen).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router).with_graceful_shutdown(async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await?;
    Ok(())
}
