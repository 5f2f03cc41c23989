use std::path::PathBuf;

use alforge_cli::commands::{self, Overrides};
use alforge_cli::server::{router, AppState};
use alforge_core::Session;
use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "alforge", version, about = "Pool-based active learning with a fallible expert oracle")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulated session to completion and write its metric history.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// History CSV destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also save the final session state here.
        #[arg(long)]
        session_out: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Serve the HTTP API, optionally starting one session from a config.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: String,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Restore a saved session instead of starting from a config.
        #[arg(long, conflicts_with = "config")]
        session: Option<PathBuf>,
    },
    /// Re-derive a saved session from its config and labels and check that
    /// the history and label log come out identical.
    Replay {
        #[arg(long)]
        session: PathBuf,
        /// Write the replayed history CSV here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the canonical JSON form of a config after applying overrides.
    Config {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run {
            config,
            out,
            session_out,
            overrides,
        } => {
            let config = commands::load_config(&config, &overrides)?;
            let session = commands::run(config, out.as_deref(), session_out.as_deref())?;
            eprintln!("{}", commands::summary(&session));
        }
        Command::Serve { bind, config, session } => {
            let state = AppState::new();
            if let Some(path) = config {
                let config = commands::load_config(&path, &Overrides::default())?;
                let id = state.insert(Session::init(config)?);
                eprintln!("started session {id}");
            }
            if let Some(path) = session {
                let id = state.insert(Session::load(&path)?);
                eprintln!("restored session {id} from {}", path.display());
            }
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(async move {
                let listener = tokio::net::TcpListener::bind(&bind)
                    .await
                    .with_context(|| format!("binding {bind}"))?;
                eprintln!("listening on {}", listener.local_addr()?);
                axum::serve(listener, router(state))
                    .with_graceful_shutdown(async {
                        let _ = tokio::signal::ctrl_c().await;
                    })
                    .await?;
                anyhow::Ok(())
            })?;
        }
        Command::Replay { session, out } => {
            let (fresh, report) = commands::replay(&session)?;
            if let Some(path) = out {
                std::fs::write(&path, fresh.history_csv())?;
            }
            eprintln!("{}", commands::summary(&fresh));
            if !(report.history_matches && report.log_matches) {
                bail!(
                    "replay diverged after {} queries (history matches: {}, label log matches: {})",
                    report.queries,
                    report.history_matches,
                    report.log_matches
                );
            }
            eprintln!("replay reproduced {} queries exactly", report.queries);
        }
        Command::Config { config, overrides } => {
            println!("{}", commands::load_config(&config, &overrides)?.to_json());
        }
    }
    Ok(())
}
