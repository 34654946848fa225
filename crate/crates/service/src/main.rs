use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use actsearch_core::dataset::{append_bias, load_csv, unit_normalize, CsvOptions};
use actsearch_core::synthetic::TwoGaussians;
use actsearch_core::Dataset;
use actsearch_service::{router, AppState};
use anyhow::{anyhow, Context};
use clap::Parser;

/// Serve labeling sessions over HTTP.
#[derive(Debug, Parser)]
#[command(name = "actsearch-service", version)]
struct Cli {
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
    /// CSV dataset as NAME=PATH; repeatable.
    #[arg(long = "dataset", value_name = "NAME=PATH")]
    datasets: Vec<String>,
    /// CSV files start with a header row.
    #[arg(long)]
    header: bool,
    /// Zero-based column holding 0/1 ground truth, excluded from features.
    #[arg(long)]
    label_column: Option<usize>,
    /// Unit-normalize CSV points and append a bias feature.
    #[arg(long)]
    normalize: bool,
    /// Two-Gaussian surrogate as NAME:N (20 dimensions, 1% positives).
    #[arg(long = "surrogate", value_name = "NAME:N")]
    surrogates: Vec<String>,
    /// Session log to replay at startup and append to.
    #[arg(long)]
    log: Option<PathBuf>,
}

fn load(cli: &Cli) -> anyhow::Result<Vec<(String, Dataset)>> {
    let mut out = Vec::new();
    let opts = CsvOptions {
        has_header: cli.header,
        label_column: cli.label_column,
        categorical: Vec::new(),
    };
    for arg in &cli.datasets {
        let (name, path) = arg
            .split_once('=')
            .ok_or_else(|| anyhow!("--dataset expects NAME=PATH, got `{arg}`"))?;
        let mut d = load_csv(path, &opts).with_context(|| format!("loading {path}"))?;
        if cli.normalize {
            d = append_bias(&unit_normalize(&d).0);
        }
        out.push((name.to_string(), d));
    }
    for arg in &cli.surrogates {
        let (name, n) = arg
            .split_once(':')
            .ok_or_else(|| anyhow!("--surrogate expects NAME:N, got `{arg}`"))?;
        let n: usize = n.parse().with_context(|| format!("bad size in `{arg}`"))?;
        out.push((name.to_string(), TwoGaussians::new(n, 20, 0.01, 0).surrogate()?));
    }
    if out.is_empty() {
        anyhow::bail!("register at least one --dataset or --surrogate");
    }
    Ok(out)
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let state = AppState::new(load(&cli)?, cli.log.as_deref())?;
    let listener = tokio::net::TcpListener::bind(cli.addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(state)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
