//! Pool-based active learning engine.
//!
//! Starts from a fully unlabeled pool ([`coldstart`]), queries a fallible
//! oracle whose answers are fused with model confidence ([`oracle`]),
//! tracks label-free heuristics ([`metrics`]) and switches query strategies
//! mid-run ([`strategies`]). [`session`] ties the loop together and persists
//! it.

pub mod benchmark;
pub mod coldstart;
pub mod dataset;
pub mod error;
pub mod metrics;
pub mod models;
pub mod oracle;
pub mod rng;
pub mod session;
pub mod strategies;
pub mod synthetic;

pub use dataset::{Dataset, Instance, LabelEvent, LoadOptions};
pub use error::{Error, Result};
pub use metrics::{Metric, MetricSnapshot};
pub use models::{Committee, KnnModel, PosteriorVector};
pub use oracle::{ConfidenceRecord, ExpertInput, FusionStrategy, SimulatedOracleConfig};
pub use session::{RunConfig, Session, SessionStatus};
pub use strategies::{StrategySpec, SwitchPolicy};
