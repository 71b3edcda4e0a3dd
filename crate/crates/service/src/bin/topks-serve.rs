use std::path::PathBuf;
use std::sync::Arc;

use clap::Parser;
use topks_service::{load_dataset, serve, AppState, ServiceConfig};

/// Serves as-you-type search sessions over HTTP.
#[derive(Parser)]
struct Args {
    /// key = value config file naming the triple and edge files.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the port from the config file.
    #[arg(long)]
    port: Option<u16>,
}

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .init();
    let args = Args::parse();
    let mut cfg = ServiceConfig::load(&args.config)?;
    if let Some(p) = args.port {
        cfg.port = p;
    }
    let ds = load_dataset(&cfg)?;
    tracing::info!(
        triples = ds.corpus().num_triples(),
        users = ds.graph().num_users(),
        edges = ds.graph().num_edges(),
        "dataset loaded"
    );
    let listener = tokio::net::TcpListener::bind((cfg.bind.as_str(), cfg.port)).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    serve(listener, AppState::new(Arc::new(ds), cfg)).await?;
    Ok(())
}
