//! Fallible oracle: expert rule base, model-confidence scaling, score
//! fusion, overall learner confidence and a simulated expert.

use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng::stream_rng;

/// Checked-in copy of the expert rule base.
pub const RULE_BASE_CSV: &str = include_str!("../data/rule_base.csv");

/// Expert score by confidence level (rows: not provided, 1..=5) and grade
/// (columns: 1..=5).
const RULE_TABLE: [[u8; 5]; 6] = [
    [1, 1, 2, 2, 3],
    [1, 1, 1, 1, 1],
    [1, 1, 1, 2, 2],
    [1, 1, 2, 3, 3],
    [1, 2, 2, 4, 4],
    [1, 2, 3, 4, 5],
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RuleBase {
    table: [[u8; 5]; 6],
}

impl Default for RuleBase {
    fn default() -> Self {
        Self { table: RULE_TABLE }
    }
}

impl RuleBase {
    /// Parses the 6x5 integer CSV form and checks it against the compiled-in
    /// table.
    pub fn from_csv(text: &str) -> Result<Self> {
        let rows: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
        if rows.len() != 6 {
            return Err(Error::Parse {
                row: rows.len(),
                message: "rule base needs 6 rows".into(),
            });
        }
        let mut table = [[0u8; 5]; 6];
        for (r, line) in rows.iter().enumerate() {
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            if cells.len() != 5 {
                return Err(Error::Parse {
                    row: r + 1,
                    message: "rule base needs 5 columns".into(),
                });
            }
            for (c, cell) in cells.iter().enumerate() {
                table[r][c] = cell.parse().map_err(|_| Error::Parse {
                    row: r + 1,
                    message: format!("bad rule base cell {cell:?}"),
                })?;
            }
        }
        for r in 0..6 {
            for c in 0..5 {
                if table[r][c] != RULE_TABLE[r][c] {
                    return Err(Error::RuleBaseMismatch { row: r, col: c });
                }
            }
        }
        Ok(Self { table })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }

    pub fn score(&self, z1: u8, z2: Option<u8>) -> Result<u8> {
        if !(1..=5).contains(&z1) {
            return Err(Error::Domain(format!("grade z1={z1} not in 1..=5")));
        }
        let row = match z2 {
            None => 0,
            Some(v @ 1..=5) => v as usize,
            Some(v) => return Err(Error::Domain(format!("confidence z2={v} not in 1..=5"))),
        };
        Ok(self.table[row][z1 as usize - 1])
    }
}

/// Expert confidence from grade `z1` and stated confidence `z2`.
pub fn expert_score(z1: u8, z2: Option<u8>) -> Result<u8> {
    RuleBase::default().score(z1, z2)
}

/// Maps the top posterior probability onto 1..=5 with equal-width bins whose
/// upper edges (0.2, 0.4, 0.6, 0.8) belong to the lower bin.
pub fn scale_model_confidence(p_max: f64) -> Result<u8> {
    if !(0.0..=1.0).contains(&p_max) {
        return Err(Error::OutOfRange(p_max));
    }
    // vote fractions such as 4/5 must land on their bin edge despite rounding
    let scaled = (5.0 * p_max - 1e-9).ceil();
    Ok(scaled.clamp(1.0, 5.0) as u8)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FusionStrategy {
    ExpertAlwaysRight,
    Optimistic,
    Conservative,
}

impl FusionStrategy {
    pub const ALL: [FusionStrategy; 3] = [Self::ExpertAlwaysRight, Self::Optimistic, Self::Conservative];
}

impl std::str::FromStr for FusionStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "expert-always-right" | "expert" => Ok(Self::ExpertAlwaysRight),
            "optimistic" => Ok(Self::Optimistic),
            "conservative" => Ok(Self::Conservative),
            other => Err(Error::InvalidConfig(format!("unknown fusion strategy {other:?}"))),
        }
    }
}

pub fn fuse(model_score: u8, expert_score: u8, strategy: FusionStrategy) -> Result<u8> {
    for s in [model_score, expert_score] {
        if !(1..=5).contains(&s) {
            return Err(Error::Domain(format!("score {s} not in 1..=5")));
        }
    }
    Ok(match strategy {
        FusionStrategy::ExpertAlwaysRight => expert_score,
        FusionStrategy::Optimistic => model_score.max(expert_score),
        FusionStrategy::Conservative => model_score.min(expert_score),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfidenceRecord {
    pub instance_id: usize,
    pub model_score: u8,
    pub expert_score: Option<u8>,
    pub fused_score: u8,
    pub strategy: FusionStrategy,
}

impl ConfidenceRecord {
    pub fn new(instance_id: usize, model_score: u8, expert_score: Option<u8>, strategy: FusionStrategy) -> Result<Self> {
        let fused_score = match expert_score {
            Some(e) => fuse(model_score, e, strategy)?,
            None => model_score,
        };
        Ok(Self {
            instance_id,
            model_score,
            expert_score,
            fused_score,
            strategy,
        })
    }
}

/// Overall learner confidence: the count-weighted average over score buckets
/// 1..=5.
pub fn overall_confidence<I: IntoIterator<Item = u8>>(scores: I) -> Result<f64> {
    let mut counts = [0u64; 5];
    for s in scores {
        if !(1..=5).contains(&s) {
            return Err(Error::Domain(format!("score {s} not in 1..=5")));
        }
        counts[s as usize - 1] += 1;
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::EmptySet);
    }
    let weighted: u64 = counts.iter().enumerate().map(|(i, n)| (i as u64 + 1) * n).sum();
    Ok(weighted as f64 / total as f64)
}

/// What an expert returns for one query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpertInput {
    pub label: usize,
    pub z1: u8,
    pub z2: Option<u8>,
}

impl ExpertInput {
    pub fn validate(&self, n_classes: usize) -> Result<()> {
        if self.label >= n_classes {
            return Err(Error::UnknownClass {
                index: self.label,
                classes: n_classes,
            });
        }
        expert_score(self.z1, self.z2).map(|_| ())
    }

    pub fn score(&self) -> Result<u8> {
        expert_score(self.z1, self.z2)
    }
}

/// Probability that the simulated expert answers with a wrong class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LabelNoise {
    /// `intercept + slope * z2`, clamped to [0, 1]. A missing `z2` counts as 1.
    Linear { intercept: f64, slope: f64 },
    Constant { probability: f64 },
    /// Flip probability for z2 = 1..=5; index 0 is used when z2 is missing.
    Table { by_confidence: [f64; 6] },
}

impl Default for LabelNoise {
    fn default() -> Self {
        Self::Linear {
            intercept: 0.30,
            slope: -0.05,
        }
    }
}

impl LabelNoise {
    pub fn flip_probability(&self, z2: Option<u8>) -> f64 {
        let p = match self {
            Self::Linear { intercept, slope } => intercept + slope * f64::from(z2.unwrap_or(1)),
            Self::Constant { probability } => *probability,
            Self::Table { by_confidence } => by_confidence[z2.map_or(0, usize::from).min(5)],
        };
        p.clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulatedOracleConfig {
    pub grade_mean: f64,
    pub grade_std: f64,
    pub confidence_mean: f64,
    pub confidence_std: f64,
    /// Chance that the expert leaves `z2` blank.
    pub not_provided_rate: f64,
    pub label_noise: LabelNoise,
    pub rng_seed: u64,
}

impl Default for SimulatedOracleConfig {
    fn default() -> Self {
        Self {
            grade_mean: 3.5,
            grade_std: 1.0,
            confidence_mean: 3.5,
            confidence_std: 1.0,
            not_provided_rate: 0.0,
            label_noise: LabelNoise::default(),
            rng_seed: 0,
        }
    }
}

impl SimulatedOracleConfig {
    /// Noise-free expert.
    pub fn perfect() -> Self {
        Self {
            label_noise: LabelNoise::Constant { probability: 0.0 },
            ..Self::default()
        }
    }
}

/// Which oracle call a random draw belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleDraw {
    /// n-th bootstrap label of the cold-start seed set.
    Seed(u64),
    /// Query with this 0-based query index.
    Query(u64),
}

impl OracleDraw {
    fn stream(self) -> [u64; 2] {
        match self {
            Self::Seed(i) => [1, i],
            Self::Query(i) => [2, i],
        }
    }
}

fn sample_level(rng: &mut impl Rng, mean: f64, std: f64) -> u8 {
    let z: f64 = rng.sample(StandardNormal);
    (mean + std * z).round().clamp(1.0, 5.0) as u8
}

/// Draws one simulated expert answer. Fully determined by the config seed,
/// the draw and the ground truth.
pub fn simulate_expert(config: &SimulatedOracleConfig, true_label: usize, n_classes: usize, draw: OracleDraw) -> ExpertInput {
    let mut rng = stream_rng(config.rng_seed, &draw.stream());
    let z1 = sample_level(&mut rng, config.grade_mean, config.grade_std);
    let z2_level = sample_level(&mut rng, config.confidence_mean, config.confidence_std);
    let z2 = if rng.random::<f64>() < config.not_provided_rate {
        None
    } else {
        Some(z2_level)
    };
    let mut label = true_label;
    if n_classes > 1 && rng.random::<f64>() < config.label_noise.flip_probability(z2) {
        let other = rng.random_range(0..n_classes - 1);
        label = if other >= true_label { other + 1 } else { other };
    }
    ExpertInput { label, z1, z2 }
}

/// A source of labels.
pub trait Oracle {
    fn query(&mut self, dataset: &Dataset, instance_id: usize, draw: OracleDraw) -> Result<ExpertInput>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedOracle {
    pub config: SimulatedOracleConfig,
}

impl SimulatedOracle {
    pub fn new(config: SimulatedOracleConfig) -> Self {
        Self { config }
    }
}

impl Oracle for SimulatedOracle {
    fn query(&mut self, dataset: &Dataset, instance_id: usize, draw: OracleDraw) -> Result<ExpertInput> {
        let truth = dataset
            .true_class(instance_id)
            .ok_or(Error::GroundTruthMissing(instance_id))?;
        Ok(simulate_expert(&self.config, truth, dataset.n_classes(), draw))
    }
}
