//! The active learning loop: cold start, query, fuse, retrain, snapshot,
//! switch and stop, with JSON persistence of the full state.
//!
//! Simulated and interactive runs share one code path. A query is split at
//! the oracle call: [`Session::begin_query`] picks the instance and parks it
//! as pending, [`Session::submit_label`] completes the step once the expert
//! answers. [`Session::step`] does both with the simulated oracle.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coldstart::{
    bootstrap_labels, elbow_select_with, kmeans_best_of, seed_events, select_random_seed, select_seed_instances,
    select_seed_with_quota, SeedSelection, DEFAULT_RESTARTS, DEFAULT_SEED_FRACTION,
};
use crate::dataset::{Dataset, LabelEvent, LoadOptions};
use crate::error::{Error, Result};
use crate::metrics::{self, MetricSnapshot};
use crate::models::{
    build_committee, train_knn, Committee, KnnModel, ModelRecord, PosteriorVector, DEFAULT_COMMITTEE_SIZE, DEFAULT_K,
};
use crate::oracle::{
    overall_confidence, scale_model_confidence, ConfidenceRecord, ExpertInput, FusionStrategy, Oracle, OracleDraw,
    RuleBase, SimulatedOracle, SimulatedOracleConfig,
};
use crate::rng::derive_seed;
use crate::strategies::{next_strategy, select, should_stop, should_switch, StrategySpec, SwitchPolicy};
use crate::synthetic::gaussian_blobs;

pub const SCHEMA_VERSION: u32 = 1;

const COLDSTART_STREAM: u64 = 1;
const COMMITTEE_STREAM: u64 = 2;
const ORACLE_STREAM: u64 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DatasetSource {
    Csv {
        path: PathBuf,
        #[serde(default)]
        load: LoadOptions,
    },
    Blobs {
        centers: Vec<Vec<f64>>,
        per_blob: usize,
        std: f64,
        seed: u64,
        #[serde(default = "default_true")]
        standardize: bool,
    },
}

fn default_true() -> bool {
    true
}

impl DatasetSource {
    pub fn load(&self) -> Result<Dataset> {
        match self {
            DatasetSource::Csv { path, load } => Dataset::load_csv(path, load),
            DatasetSource::Blobs {
                centers,
                per_blob,
                std,
                seed,
                standardize,
            } => {
                let mut ds = gaussian_blobs(centers, *per_blob, *std, *seed)?;
                if *standardize {
                    ds.standardize();
                }
                Ok(ds)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedMode {
    /// k-means pre-clustering with centroid-proximity seeds.
    #[default]
    Clustered,
    /// Uniform random seeds of the same budget.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColdStartConfig {
    pub mode: SeedMode,
    pub fraction: f64,
    pub k_max: usize,
    pub restarts: usize,
    /// Skips the elbow search and clusters with this k.
    pub clusters: Option<usize>,
    /// Takes this many seeds from every cluster instead of a pool fraction.
    pub per_cluster_quota: Option<usize>,
}

impl Default for ColdStartConfig {
    fn default() -> Self {
        Self {
            mode: SeedMode::Clustered,
            fraction: DEFAULT_SEED_FRACTION,
            k_max: 10,
            restarts: DEFAULT_RESTARTS,
            clusters: None,
            per_cluster_quota: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum OracleMode {
    Simulated(SimulatedOracleConfig),
    Interactive,
}

impl Default for OracleMode {
    fn default() -> Self {
        OracleMode::Simulated(SimulatedOracleConfig::default())
    }
}

/// Which queried instances carry a fused score after a retrain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FusionScope {
    /// Only the instance queried in the latest step; earlier queries fall
    /// back to the refreshed model score.
    #[default]
    Latest,
    /// Every queried instance keeps its expert score in the fusion.
    AllQueried,
}

/// Everything that determines a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub dataset: DatasetSource,
    #[serde(default = "default_k")]
    pub knn_k: usize,
    #[serde(default = "default_committee")]
    pub committee_size: usize,
    #[serde(default)]
    pub coldstart: ColdStartConfig,
    #[serde(default)]
    pub policy: SwitchPolicy,
    #[serde(default = "default_fusion")]
    pub fusion: FusionStrategy,
    #[serde(default)]
    pub fusion_scope: FusionScope,
    #[serde(default)]
    pub oracle: OracleMode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_snapshot_every")]
    pub snapshot_every: usize,
    /// Optional external copy of the expert rule base, verified at start.
    #[serde(default)]
    pub rule_base_path: Option<PathBuf>,
}

fn default_k() -> usize {
    DEFAULT_K
}
fn default_committee() -> usize {
    DEFAULT_COMMITTEE_SIZE
}
fn default_fusion() -> FusionStrategy {
    FusionStrategy::ExpertAlwaysRight
}
fn default_snapshot_every() -> usize {
    1
}

impl RunConfig {
    pub fn new(dataset: DatasetSource) -> Self {
        Self {
            dataset,
            knn_k: DEFAULT_K,
            committee_size: DEFAULT_COMMITTEE_SIZE,
            coldstart: ColdStartConfig::default(),
            policy: SwitchPolicy::default(),
            fusion: default_fusion(),
            fusion_scope: FusionScope::default(),
            oracle: OracleMode::default(),
            seed: 0,
            snapshot_every: 1,
            rule_base_path: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.policy.validate()?;
        if self.knn_k == 0 {
            return Err(Error::InvalidConfig("knn_k must be at least 1".into()));
        }
        if self.committee_size < 2 {
            return Err(Error::InvalidConfig("committee_size must be at least 2".into()));
        }
        if self.snapshot_every == 0 {
            return Err(Error::InvalidConfig("snapshot_every must be at least 1".into()));
        }
        if self.policy.budget > 0 && self.snapshot_every > self.policy.budget {
            return Err(Error::InvalidConfig("snapshot_every exceeds the query budget".into()));
        }
        let f = self.coldstart.fraction;
        if !(f > 0.0 && f <= 1.0) {
            return Err(Error::InvalidConfig(format!("cold-start fraction {f} not in (0, 1]")));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    AwaitingLabel,
    Running,
    Stopped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryPhase {
    /// Labeling the cold-start seed set.
    Seed,
    Query,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PendingQuery {
    pub instance_id: usize,
    pub phase: QueryPhase,
    /// Queries made before this one (0-based index of the query).
    pub query_index: usize,
    pub strategy_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counters {
    pub model_trainings: usize,
    pub committee_builds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColdStartSummary {
    pub clusters: Option<usize>,
    pub selection: SeedSelection,
}

/// On-disk form of a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SessionFile {
    schema_version: u32,
    config: RunConfig,
    dataset: Dataset,
    cold_start: ColdStartSummary,
    model: Option<ModelRecord>,
    committee: Option<Vec<ModelRecord>>,
    confidence: Vec<ConfidenceRecord>,
    history: Vec<MetricSnapshot>,
    seed_log: Vec<LabelEvent>,
    query_log: Vec<LabelEvent>,
    seed_queue: Vec<usize>,
    strategy_index: usize,
    switch_points: Vec<usize>,
    last_switch_snapshot: usize,
    status: SessionStatus,
    pending: Option<PendingQuery>,
    counters: Counters,
}

/// Full state of one active learning run.
#[derive(Debug, Clone)]
pub struct Session {
    config: RunConfig,
    dataset: Dataset,
    cold_start: ColdStartSummary,
    model: Option<KnnModel>,
    /// Committee for the current labeled set; `None` once stale.
    committee: Option<Committee>,
    confidence: Vec<ConfidenceRecord>,
    history: Vec<MetricSnapshot>,
    seed_log: Vec<LabelEvent>,
    query_log: Vec<LabelEvent>,
    seed_queue: Vec<usize>,
    strategy_index: usize,
    switch_points: Vec<usize>,
    last_switch_snapshot: usize,
    status: SessionStatus,
    pending: Option<PendingQuery>,
    counters: Counters,
}

impl Session {
    /// Loads the configured dataset and runs the cold start.
    pub fn init(config: RunConfig) -> Result<Self> {
        let dataset = config.dataset.load()?;
        Self::init_with_dataset(config, dataset)
    }

    /// Cold start on an already loaded dataset: elbow search, clustering,
    /// seed selection, then bootstrap labels. Simulated runs finish with the
    /// initial model and snapshot 0; interactive runs park the first seed as
    /// the pending query.
    pub fn init_with_dataset(config: RunConfig, dataset: Dataset) -> Result<Self> {
        config.validate()?;
        if let Some(path) = &config.rule_base_path {
            RuleBase::load(path)?;
        }
        if dataset.n_classes() < 2 {
            return Err(Error::InvalidConfig("need at least two classes".into()));
        }
        if !dataset.labeled().is_empty() {
            return Err(Error::InvalidConfig("dataset must start fully unlabeled".into()));
        }
        if matches!(config.oracle, OracleMode::Simulated(_)) && dataset.ground_truth().is_none() {
            return Err(Error::InvalidConfig("simulated oracle needs a label column".into()));
        }

        let cold_start = plan_cold_start(&config, &dataset)?;
        let mut session = Self {
            seed_queue: cold_start.selection.selected.clone(),
            config,
            dataset,
            cold_start,
            model: None,
            committee: None,
            confidence: Vec::new(),
            history: Vec::new(),
            seed_log: Vec::new(),
            query_log: Vec::new(),
            strategy_index: 0,
            switch_points: Vec::new(),
            last_switch_snapshot: 0,
            status: SessionStatus::Running,
            pending: None,
            counters: Counters::default(),
        };
        if session.seed_queue.is_empty() {
            return Err(Error::EmptyTrainingSet);
        }

        match session.simulated_oracle() {
            Some(mut oracle) => {
                let selection = session.cold_start.selection.clone();
                let inputs = bootstrap_labels(&mut session.dataset, &selection, &mut oracle)?;
                session.seed_log = seed_events(&inputs);
                session.seed_queue.clear();
                session.finish_bootstrap()?;
            }
            None => {
                session.status = SessionStatus::AwaitingLabel;
                session.pending = Some(PendingQuery {
                    instance_id: session.seed_queue[0],
                    phase: QueryPhase::Seed,
                    query_index: 0,
                    strategy_index: 0,
                });
            }
        }
        Ok(session)
    }

    fn simulated_oracle(&self) -> Option<SimulatedOracle> {
        match &self.config.oracle {
            OracleMode::Simulated(cfg) => {
                let mut cfg = cfg.clone();
                cfg.rng_seed = derive_seed(self.config.seed, &[ORACLE_STREAM, cfg.rng_seed]);
                Some(SimulatedOracle::new(cfg))
            }
            OracleMode::Interactive => None,
        }
    }

    /// Seeds are labeled: train, take snapshot 0 and decide whether to go on.
    fn finish_bootstrap(&mut self) -> Result<()> {
        self.retrain()?;
        self.take_snapshot()?;
        if self.should_stop_now() {
            self.status = SessionStatus::Stopped;
            return Ok(());
        }
        self.status = SessionStatus::Running;
        if self.is_interactive() {
            self.begin_query()?;
        }
        Ok(())
    }

    fn is_interactive(&self) -> bool {
        matches!(self.config.oracle, OracleMode::Interactive)
    }

    fn retrain(&mut self) -> Result<()> {
        let model = train_knn(&self.dataset, self.config.knn_k)?;
        self.counters.model_trainings += 1;
        self.model = Some(model);
        self.committee = None;
        self.refresh_confidence()
    }

    fn ensure_committee(&mut self) -> Result<&Committee> {
        if self.committee.is_none() {
            let seed = derive_seed(self.config.seed, &[COMMITTEE_STREAM, self.queries_made() as u64]);
            let committee = build_committee(&self.dataset, self.config.committee_size, self.config.knn_k, seed)?;
            self.counters.committee_builds += 1;
            self.committee = Some(committee);
        }
        Ok(self.committee.as_ref().expect("just built"))
    }

    /// Model scores for every instance, fused with the expert score for the
    /// queried instances in the configured scope.
    fn refresh_confidence(&mut self) -> Result<()> {
        let model = self.model.as_ref().ok_or(Error::EmptyTrainingSet)?;
        let fused_events = match self.config.fusion_scope {
            FusionScope::Latest => self.query_log.len().saturating_sub(1),
            FusionScope::AllQueried => 0,
        };
        let expert: BTreeMap<usize, u8> = self.query_log[fused_events..]
            .iter()
            .map(|e| Ok((e.instance_id, crate::oracle::expert_score(e.z1, e.z2)?)))
            .collect::<Result<_>>()?;
        let strategy = self.config.fusion;
        let dataset = &self.dataset;
        self.confidence = (0..dataset.len())
            .into_par_iter()
            .map(|id| {
                let p = model.predict_proba(dataset.features(id))?;
                let score = scale_model_confidence(p.max_prob())?;
                ConfidenceRecord::new(id, score, expert.get(&id).copied(), strategy)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(())
    }

    pub fn overall_confidence(&self) -> Result<f64> {
        overall_confidence(self.confidence.iter().map(|r| r.fused_score))
    }

    fn take_snapshot(&mut self) -> Result<()> {
        if self.dataset.unlabeled().is_empty() {
            return Ok(());
        }
        let queries = self.queries_made();
        if self.history.last().is_some_and(|s| s.query_index == queries) {
            return Ok(());
        }
        let s_al = self.overall_confidence()?;
        self.ensure_committee()?;
        let model = self.model.as_ref().ok_or(Error::EmptyTrainingSet)?;
        let committee = self.committee.as_ref().expect("ensured above");
        let snap = metrics::snapshot(&self.dataset, model, committee, queries, s_al)?;
        self.history.push(snap);
        Ok(())
    }

    /// Monitored metric since the last strategy switch.
    fn monitored_series(&self) -> Vec<f64> {
        let metric = self.config.policy.monitored_metric;
        self.history[self.last_switch_snapshot.min(self.history.len())..]
            .iter()
            .filter_map(|s| s.get(metric))
            .collect()
    }

    fn should_stop_now(&self) -> bool {
        self.dataset.unlabeled().is_empty()
            || should_stop(
                &self.monitored_series(),
                &self.config.policy,
                self.queries_made(),
                self.strategy_index,
            )
    }

    pub fn current_strategy(&self) -> &StrategySpec {
        &self.config.policy.schedule[self.strategy_index]
    }

    /// Picks the next query instance and parks it as pending.
    pub fn begin_query(&mut self) -> Result<usize> {
        if let Some(p) = self.pending {
            return Ok(p.instance_id);
        }
        if self.status == SessionStatus::Stopped {
            return Err(Error::Stopped);
        }
        if self.dataset.unlabeled().is_empty() {
            self.status = SessionStatus::Stopped;
            return Err(Error::EmptyPool);
        }
        let spec = *self.current_strategy();
        if spec.needs_committee() {
            self.ensure_committee()?;
        }
        let model = self.model.as_ref().ok_or(Error::EmptyTrainingSet)?;
        let id = select(&spec, model, self.committee.as_ref(), &self.dataset)?;
        self.pending = Some(PendingQuery {
            instance_id: id,
            phase: QueryPhase::Query,
            query_index: self.queries_made(),
            strategy_index: self.strategy_index,
        });
        if self.is_interactive() {
            self.status = SessionStatus::AwaitingLabel;
        }
        Ok(id)
    }

    /// Applies an expert answer to the pending query. `instance_id` must
    /// match the pending instance.
    pub fn submit_label(&mut self, instance_id: usize, input: ExpertInput, timestamp: Option<u64>) -> Result<()> {
        let pending = self.pending.ok_or(Error::NotPending {
            pending: None,
            got: instance_id,
        })?;
        if pending.instance_id != instance_id {
            return Err(Error::NotPending {
                pending: Some(pending.instance_id),
                got: instance_id,
            });
        }
        input.validate(self.dataset.n_classes())?;
        let event = LabelEvent {
            instance_id,
            class_index: input.label,
            z1: input.z1,
            z2: input.z2,
            timestamp,
            query_index: pending.query_index,
        };
        self.dataset.mark_labeled(instance_id, input.label)?;
        self.pending = None;

        match pending.phase {
            QueryPhase::Seed => {
                self.seed_log.push(event);
                self.seed_queue.retain(|&id| id != instance_id);
                match self.seed_queue.first() {
                    Some(&next) => {
                        self.pending = Some(PendingQuery {
                            instance_id: next,
                            ..pending
                        });
                    }
                    None => self.finish_bootstrap()?,
                }
            }
            QueryPhase::Query => {
                self.query_log.push(event);
                self.after_query()?;
                if self.is_interactive() && self.status != SessionStatus::Stopped {
                    self.begin_query()?;
                }
            }
        }
        Ok(())
    }

    /// Retrain, snapshot, then evaluate the switch and stop rules.
    fn after_query(&mut self) -> Result<()> {
        self.retrain()?;
        let queries = self.queries_made();
        let due = queries % self.config.snapshot_every == 0;
        if due {
            self.take_snapshot()?;
        }
        let stop = self.should_stop_now();
        if stop {
            // always close a run with a snapshot of the final model
            self.take_snapshot()?;
            self.status = SessionStatus::Stopped;
            return Ok(());
        }
        self.status = SessionStatus::Running;

        let policy = &self.config.policy;
        let signal = due && should_switch(&self.monitored_series(), policy);
        let next = next_strategy(policy, self.strategy_index, signal, queries);
        if next != self.strategy_index {
            self.strategy_index = next;
            self.switch_points.push(queries);
            self.last_switch_snapshot = self.history.len();
        }
        Ok(())
    }

    /// One full simulated query. A stopped session or an exhausted pool
    /// leaves the state unchanged apart from the status.
    pub fn step(&mut self) -> Result<()> {
        if self.status == SessionStatus::Stopped {
            return Ok(());
        }
        let Some(mut oracle) = self.simulated_oracle() else {
            return Err(Error::OracleUnavailable(
                self.pending.map_or(usize::MAX, |p| p.instance_id),
            ));
        };
        if self.dataset.unlabeled().is_empty() {
            self.status = SessionStatus::Stopped;
            return Ok(());
        }
        let id = self.begin_query()?;
        let query_index = self.queries_made() as u64;
        let input = oracle.query(&self.dataset, id, OracleDraw::Query(query_index))?;
        self.submit_label(id, input, None)
    }

    /// Steps until the run stops. Simulated mode only.
    pub fn run_to_completion(&mut self) -> Result<&[MetricSnapshot]> {
        if self.is_interactive() {
            return Err(Error::InvalidConfig("interactive sessions cannot run unattended".into()));
        }
        while self.status != SessionStatus::Stopped {
            self.step()?;
        }
        Ok(&self.history)
    }

    /// Stops the run; a pending query is dropped.
    pub fn stop(&mut self) {
        self.pending = None;
        self.status = SessionStatus::Stopped;
    }

    pub fn queries_made(&self) -> usize {
        self.query_log.len()
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn model(&self) -> Option<&KnnModel> {
        self.model.as_ref()
    }

    pub fn history(&self) -> &[MetricSnapshot] {
        &self.history
    }

    pub fn query_log(&self) -> &[LabelEvent] {
        &self.query_log
    }

    pub fn seed_log(&self) -> &[LabelEvent] {
        &self.seed_log
    }

    pub fn confidence(&self) -> &[ConfidenceRecord] {
        &self.confidence
    }

    pub fn status(&self) -> SessionStatus {
        self.status
    }

    pub fn pending(&self) -> Option<PendingQuery> {
        self.pending
    }

    pub fn strategy_index(&self) -> usize {
        self.strategy_index
    }

    pub fn switch_points(&self) -> &[usize] {
        &self.switch_points
    }

    pub fn counters(&self) -> Counters {
        self.counters
    }

    pub fn cold_start(&self) -> &ColdStartSummary {
        &self.cold_start
    }

    /// Current model posterior for an instance, if a model exists yet.
    pub fn posterior(&self, id: usize) -> Result<Option<PosteriorVector>> {
        match &self.model {
            Some(m) => Ok(Some(m.predict_proba(self.dataset.features(id))?)),
            None => Ok(None),
        }
    }

    pub fn history_csv(&self) -> String {
        metrics::history_csv_string(&self.history)
    }

    fn to_file(&self) -> SessionFile {
        SessionFile {
            schema_version: SCHEMA_VERSION,
            config: self.config.clone(),
            dataset: self.dataset.clone(),
            cold_start: self.cold_start.clone(),
            model: self.model.as_ref().map(KnnModel::record),
            committee: self.committee.as_ref().map(Committee::records),
            confidence: self.confidence.clone(),
            history: self.history.clone(),
            seed_log: self.seed_log.clone(),
            query_log: self.query_log.clone(),
            seed_queue: self.seed_queue.clone(),
            strategy_index: self.strategy_index,
            switch_points: self.switch_points.clone(),
            last_switch_snapshot: self.last_switch_snapshot,
            status: self.status,
            pending: self.pending,
            counters: self.counters,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("session serializes")
    }

    /// Restores a session. The schema version is checked before anything
    /// else is read.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let found = value
            .get("schema_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or(Error::SchemaVersionMismatch {
                found: 0,
                expected: SCHEMA_VERSION,
            })?;
        if found != u64::from(SCHEMA_VERSION) {
            return Err(Error::SchemaVersionMismatch {
                found: u32::try_from(found).unwrap_or(u32::MAX),
                expected: SCHEMA_VERSION,
            });
        }
        let file: SessionFile = serde_json::from_value(value)?;
        file.dataset.validate()?;
        file.config.validate()?;
        let model = file
            .model
            .as_ref()
            .map(|r| KnnModel::from_record(&file.dataset, r))
            .transpose()?;
        let committee = file
            .committee
            .as_ref()
            .map(|r| Committee::from_records(&file.dataset, r))
            .transpose()?;
        if file.strategy_index >= file.config.policy.schedule.len() {
            return Err(Error::InvalidConfig("strategy index out of range".into()));
        }
        Ok(Self {
            config: file.config,
            dataset: file.dataset,
            cold_start: file.cold_start,
            model,
            committee,
            confidence: file.confidence,
            history: file.history,
            seed_log: file.seed_log,
            query_log: file.query_log,
            seed_queue: file.seed_queue,
            strategy_index: file.strategy_index,
            switch_points: file.switch_points,
            last_switch_snapshot: file.last_switch_snapshot,
            status: file.status,
            pending: file.pending,
            counters: file.counters,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Chooses the seed set for a fresh dataset.
fn plan_cold_start(config: &RunConfig, dataset: &Dataset) -> Result<ColdStartSummary> {
    let cs = &config.coldstart;
    let seed = derive_seed(config.seed, &[COLDSTART_STREAM]);
    match cs.mode {
        SeedMode::Random => Ok(ColdStartSummary {
            clusters: None,
            selection: select_random_seed(dataset, cs.fraction, seed)?,
        }),
        SeedMode::Clustered => {
            let k = match cs.clusters {
                Some(k) => k,
                None => elbow_select_with(dataset, cs.k_max.min(dataset.len()), seed, cs.restarts)?,
            };
            let clustering = kmeans_best_of(dataset, k, seed, cs.restarts)?;
            let selection = match cs.per_cluster_quota {
                Some(q) => select_seed_with_quota(dataset, &clustering, q)?,
                None => select_seed_instances(dataset, &clustering, cs.fraction)?,
            };
            Ok(ColdStartSummary {
                clusters: Some(k),
                selection,
            })
        }
    }
}
