//! The `run` and `replay` subcommands.

use std::path::{Path, PathBuf};

use alforge_core::oracle::FusionStrategy;
use alforge_core::session::OracleMode;
use alforge_core::strategies::{StrategySpec, SwitchMode};
use alforge_core::{Metric, RunConfig, Session, SessionStatus};
use anyhow::{bail, Context, Result};
use clap::Args;

/// Command-line adjustments applied on top of a config file.
#[derive(Debug, Default, Clone, Args)]
pub struct Overrides {
    /// Run a single strategy, e.g. `us`, `us:margin`, `qbc`, `dwm:entropy:cosine`.
    #[arg(long, conflicts_with = "schedule")]
    pub strategy: Option<String>,
    /// Comma-separated strategy schedule, e.g. `us,qbc`.
    #[arg(long)]
    pub schedule: Option<String>,
    /// Switch at these query counts (comma-separated) instead of on metric signals.
    #[arg(long)]
    pub switch_at: Option<String>,
    #[arg(long)]
    pub switch_metric: Option<String>,
    #[arg(long)]
    pub switch_window: Option<usize>,
    #[arg(long)]
    pub switch_eps: Option<f64>,
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub stop_threshold: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// expert-always-right, optimistic or conservative.
    #[arg(long)]
    pub fusion: Option<String>,
    #[arg(long)]
    pub knn_k: Option<usize>,
    #[arg(long)]
    pub snapshot_every: Option<usize>,
    /// Cluster count for the cold start, skipping the elbow search.
    #[arg(long)]
    pub clusters: Option<usize>,
    /// Seeds per cluster instead of a fraction of the pool.
    #[arg(long)]
    pub per_cluster_quota: Option<usize>,
}

fn parse_list<T>(text: &str, what: &str, f: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| f(s).with_context(|| format!("bad {what} {s:?}")))
        .collect()
}

impl Overrides {
    pub fn apply(&self, config: &mut RunConfig) -> Result<()> {
        let policy = &mut config.policy;
        if let Some(s) = &self.strategy {
            policy.schedule = vec![s.parse::<StrategySpec>()?];
        }
        if let Some(s) = &self.schedule {
            policy.schedule = parse_list(s, "strategy", |t| Ok(t.parse::<StrategySpec>()?))?;
        }
        if let Some(s) = &self.switch_at {
            policy.mode = SwitchMode::Fixed {
                at: parse_list(s, "switch point", |t| Ok(t.parse::<usize>()?))?,
            };
        }
        if let Some(m) = &self.switch_metric {
            policy.monitored_metric = m.parse::<Metric>()?;
        }
        if let Some(w) = self.switch_window {
            policy.window = w;
        }
        if let Some(e) = self.switch_eps {
            policy.stall_epsilon = e;
        }
        if let Some(b) = self.budget {
            policy.budget = b;
        }
        if let Some(t) = self.stop_threshold {
            policy.stop_threshold = Some(t);
        }
        if let Some(s) = self.seed {
            config.seed = s;
        }
        if let Some(f) = &self.fusion {
            config.fusion = f.parse::<FusionStrategy>()?;
        }
        if let Some(k) = self.knn_k {
            config.knn_k = k;
        }
        if let Some(n) = self.snapshot_every {
            config.snapshot_every = n;
        }
        if let Some(k) = self.clusters {
            config.coldstart.clusters = Some(k);
        }
        if let Some(q) = self.per_cluster_quota {
            config.coldstart.per_cluster_quota = Some(q);
        }
        config.validate()?;
        Ok(())
    }
}

pub fn load_config(path: &Path, overrides: &Overrides) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut config: RunConfig = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    overrides.apply(&mut config)?;
    Ok(config)
}

/// Runs a simulated session to completion, writing the history CSV and
/// optionally the final session file. Returns the finished session.
pub fn run(config: RunConfig, out: Option<&Path>, session_out: Option<&Path>) -> Result<Session> {
    if matches!(config.oracle, OracleMode::Interactive) {
        bail!("interactive configs need a human oracle; use `alforge serve`");
    }
    let mut session = Session::init(config)?;
    session.run_to_completion()?;
    let csv = session.history_csv();
    match out {
        Some(path) => std::fs::write(path, &csv).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{csv}"),
    }
    if let Some(path) = session_out {
        session.save(path)?;
    }
    Ok(session)
}

/// One-line summary of a finished or in-flight session.
pub fn summary(session: &Session) -> String {
    let last = session.history().last();
    format!(
        "queries {} | strategy switches at {:?} | final accuracy {} | S_AL {}",
        session.queries_made(),
        session.switch_points(),
        last.and_then(|s| s.accuracy)
            .map_or("n/a".into(), |a| format!("{a:.4}")),
        last.map_or("n/a".into(), |s| format!("{:.3}", s.s_al)),
    )
}

/// Outcome of re-deriving a saved session from its own config and labels.
#[derive(Debug, PartialEq, Eq)]
pub struct ReplayReport {
    pub queries: usize,
    pub history_matches: bool,
    pub log_matches: bool,
}

/// Rebuilds a saved session from scratch: simulated runs are re-stepped to
/// the same query count, interactive runs are fed their recorded labels.
pub fn replay(saved_path: &PathBuf) -> Result<(Session, ReplayReport)> {
    let saved = Session::load(saved_path)?;
    let mut fresh = Session::init(saved.config().clone())?;
    match saved.config().oracle {
        OracleMode::Simulated(_) => {
            while fresh.queries_made() < saved.queries_made() && fresh.status() != SessionStatus::Stopped {
                fresh.step()?;
            }
        }
        OracleMode::Interactive => {
            for e in saved.seed_log().iter().chain(saved.query_log()) {
                let input = alforge_core::ExpertInput {
                    label: e.class_index,
                    z1: e.z1,
                    z2: e.z2,
                };
                fresh
                    .submit_label(e.instance_id, input, e.timestamp)
                    .with_context(|| format!("replaying label for instance {}", e.instance_id))?;
            }
        }
    }
    if saved.status() == SessionStatus::Stopped {
        fresh.stop();
    }
    let report = ReplayReport {
        queries: fresh.queries_made(),
        history_matches: fresh.history_csv() == saved.history_csv(),
        log_matches: fresh.query_log() == saved.query_log() && fresh.seed_log() == saved.seed_log(),
    };
    Ok((fresh, report))
}
