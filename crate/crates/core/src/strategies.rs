//! Query selection (US, QBC, DWM) and the hybrid switch/stop controller.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::metrics::{
    classifier_uncertainty, consensus_entropy, entropy_of_classes, info_density_cosine, info_density_euclidean,
    margin_uncertainty, Metric,
};
use crate::models::{Committee, KnnModel, PosteriorVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UsMeasure {
    #[default]
    ClassifierUncertainty,
    Margin,
    Entropy,
}

impl UsMeasure {
    /// Informativeness, larger meaning more worth querying. Margin is
    /// reported as `1 - margin`.
    pub fn informativeness(self, p: &PosteriorVector) -> Result<f64> {
        Ok(match self {
            UsMeasure::ClassifierUncertainty => classifier_uncertainty(p),
            UsMeasure::Margin => 1.0 - margin_uncertainty(p)?,
            UsMeasure::Entropy => entropy_of_classes(p),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Similarity {
    Euclidean,
    #[default]
    Cosine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StrategySpec {
    Us {
        #[serde(default)]
        measure: UsMeasure,
    },
    Qbc,
    Dwm {
        #[serde(default)]
        measure: UsMeasure,
        #[serde(default)]
        similarity: Similarity,
    },
}

impl StrategySpec {
    pub fn us() -> Self {
        Self::Us {
            measure: UsMeasure::default(),
        }
    }

    pub fn needs_committee(&self) -> bool {
        matches!(self, StrategySpec::Qbc)
    }

    pub fn name(&self) -> &'static str {
        match self {
            StrategySpec::Us { .. } => "us",
            StrategySpec::Qbc => "qbc",
            StrategySpec::Dwm { .. } => "dwm",
        }
    }
}

impl std::str::FromStr for StrategySpec {
    type Err = Error;

    /// `us`, `us:margin`, `qbc`, `dwm`, `dwm:entropy:euclidean`, ...
    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split(':');
        let measure = |p: Option<&str>| -> Result<UsMeasure> {
            Ok(match p {
                None | Some("cu") | Some("classifier-uncertainty") => UsMeasure::ClassifierUncertainty,
                Some("margin") | Some("mu") => UsMeasure::Margin,
                Some("entropy") | Some("ec") => UsMeasure::Entropy,
                Some(other) => return Err(Error::InvalidConfig(format!("unknown US measure {other:?}"))),
            })
        };
        match parts.next().unwrap_or("") {
            "us" => Ok(StrategySpec::Us {
                measure: measure(parts.next())?,
            }),
            "qbc" => Ok(StrategySpec::Qbc),
            "dwm" => {
                let m = measure(parts.next())?;
                let similarity = match parts.next() {
                    None | Some("cosine") => Similarity::Cosine,
                    Some("euclidean") => Similarity::Euclidean,
                    Some(other) => return Err(Error::InvalidConfig(format!("unknown similarity {other:?}"))),
                };
                Ok(StrategySpec::Dwm { measure: m, similarity })
            }
            other => Err(Error::InvalidConfig(format!("unknown strategy {other:?}"))),
        }
    }
}

/// Relative gap below which two selection scores count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Id with the largest score. Scores within [`TIE_TOLERANCE`] of the best
/// are ties and go to the lowest id, so summation-order noise between
/// duplicate points cannot decide a selection.
fn argmax(ids: &[usize], scores: &[f64]) -> Result<usize> {
    let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let floor = best - TIE_TOLERANCE * best.abs().max(1.0);
    ids.iter()
        .zip(scores)
        .filter(|(_, &s)| s >= floor)
        .map(|(&id, _)| id)
        .min()
        .ok_or(Error::EmptyPool)
}

fn pool_of(dataset: &Dataset) -> Result<Vec<usize>> {
    let pool = dataset.unlabeled_ids();
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    Ok(pool)
}

/// Uncertainty sampling over the unlabeled pool.
pub fn select_us(model: &KnnModel, dataset: &Dataset, measure: UsMeasure) -> Result<usize> {
    let pool = pool_of(dataset)?;
    let scores = pool
        .par_iter()
        .map(|&id| measure.informativeness(&model.predict_proba(dataset.features(id))?))
        .collect::<Result<Vec<_>>>()?;
    argmax(&pool, &scores)
}

/// Query-by-committee: the pool instance with the highest consensus entropy.
pub fn select_qbc(committee: &Committee, dataset: &Dataset) -> Result<usize> {
    let pool = pool_of(dataset)?;
    let scores = pool
        .par_iter()
        .map(|&id| consensus_entropy(committee, dataset.features(id)))
        .collect::<Result<Vec<_>>>()?;
    argmax(&pool, &scores)
}

/// Density weight of `id` against the rest of the pool.
pub fn dwm_density(dataset: &Dataset, pool: &[usize], id: usize, similarity: Similarity) -> Result<f64> {
    let x = dataset.features(id);
    let others = move || {
        pool.iter()
            .filter(move |&&j| j != id || pool.len() == 1)
            .map(|&j| dataset.features(j))
    };
    Ok(match similarity {
        Similarity::Cosine => info_density_cosine(x, others())?,
        Similarity::Euclidean => 1.0 / (1.0 + info_density_euclidean(x, others())?),
    })
}

/// Density-weighted selection: informativeness times density.
pub fn select_dwm(model: &KnnModel, dataset: &Dataset, measure: UsMeasure, similarity: Similarity) -> Result<usize> {
    let pool = pool_of(dataset)?;
    let scores = pool
        .par_iter()
        .map(|&id| {
            let info = measure.informativeness(&model.predict_proba(dataset.features(id))?)?;
            Ok(info * dwm_density(dataset, &pool, id, similarity)?)
        })
        .collect::<Result<Vec<_>>>()?;
    argmax(&pool, &scores)
}

/// Dispatches on the strategy kind. `committee` is required for QBC.
pub fn select(
    spec: &StrategySpec,
    model: &KnnModel,
    committee: Option<&Committee>,
    dataset: &Dataset,
) -> Result<usize> {
    match *spec {
        StrategySpec::Us { measure } => select_us(model, dataset, measure),
        StrategySpec::Qbc => select_qbc(
            committee.ok_or_else(|| Error::InvalidConfig("QBC needs a committee".into()))?,
            dataset,
        ),
        StrategySpec::Dwm { measure, similarity } => select_dwm(model, dataset, measure, similarity),
    }
}

/// When the controller moves to the next schedule entry.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SwitchMode {
    /// Switch on a stall or oscillation of the monitored metric.
    #[default]
    Signal,
    /// Switch when the number of queries made reaches each listed count.
    Fixed { at: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SwitchPolicy {
    pub monitored_metric: Metric,
    pub window: usize,
    pub stall_epsilon: f64,
    pub oscillation_threshold: f64,
    pub schedule: Vec<StrategySpec>,
    pub mode: SwitchMode,
    pub stop_threshold: Option<f64>,
    pub budget: usize,
}

impl Default for SwitchPolicy {
    fn default() -> Self {
        Self {
            monitored_metric: Metric::Ce,
            window: 25,
            stall_epsilon: 0.01,
            oscillation_threshold: 0.1,
            schedule: vec![StrategySpec::us()],
            mode: SwitchMode::Signal,
            stop_threshold: None,
            budget: 100,
        }
    }
}

impl SwitchPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.schedule.is_empty() {
            return Err(Error::InvalidConfig("schedule is empty".into()));
        }
        if self.window < 2 {
            return Err(Error::InvalidConfig("switch window must be at least 2".into()));
        }
        if !(self.stall_epsilon > 0.0) || !(self.oscillation_threshold > 0.0) {
            return Err(Error::InvalidConfig("switch thresholds must be positive".into()));
        }
        if !matches!(
            self.monitored_metric,
            Metric::Ec | Metric::Mu | Metric::Cu | Metric::Ce
        ) {
            return Err(Error::InvalidConfig("monitored metric must be ec, mu, cu or ce".into()));
        }
        if let SwitchMode::Fixed { at } = &self.mode {
            if at.windows(2).any(|w| w[0] > w[1]) {
                return Err(Error::InvalidConfig("switch points must be ascending".into()));
            }
        }
        Ok(())
    }

    /// Fixed schedule switching once, at the given query count.
    pub fn fixed_split(schedule: Vec<StrategySpec>, switch_at: usize, budget: usize) -> Self {
        Self {
            schedule,
            mode: SwitchMode::Fixed { at: vec![switch_at] },
            budget,
            ..Self::default()
        }
    }
}

fn stalled(window: &[f64], epsilon: f64) -> bool {
    let (lo, hi) = window
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let mean = window.iter().sum::<f64>() / window.len() as f64;
    (hi - lo) / mean.abs().max(1e-12) < epsilon
}

fn oscillating(window: &[f64], threshold: f64) -> bool {
    let signs: Vec<f64> = window
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|d| *d != 0.0)
        .map(f64::signum)
        .collect();
    let changes = signs.windows(2).filter(|s| s[0] != s[1]).count();
    let (lo, hi) = window
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    2 * changes >= window.len() && hi - lo > threshold
}

/// Stall or oscillation over the last `window` values of the monitored
/// metric. Always false while fewer than `window` values exist.
pub fn should_switch(history: &[f64], policy: &SwitchPolicy) -> bool {
    let w = policy.window;
    if w < 2 || history.len() < w {
        return false;
    }
    let tail = &history[history.len() - w..];
    stalled(tail, policy.stall_epsilon) || oscillating(tail, policy.oscillation_threshold)
}

/// Budget exhausted, stop threshold reached by the latest value, or a stall
/// on the final schedule entry.
pub fn should_stop(history: &[f64], policy: &SwitchPolicy, queries_made: usize, current_index: usize) -> bool {
    if queries_made >= policy.budget {
        return true;
    }
    if let (Some(threshold), Some(&last)) = (policy.stop_threshold, history.last()) {
        let crossed = if policy.monitored_metric.decreases_with_progress() {
            last <= threshold
        } else {
            last >= threshold
        };
        if crossed {
            return true;
        }
    }
    let on_last = current_index + 1 >= policy.schedule.len();
    let w = policy.window;
    on_last && w >= 2 && history.len() >= w && stalled(&history[history.len() - w..], policy.stall_epsilon)
}

/// Schedule index for the next query. In fixed mode the index is the number
/// of switch points already reached; in signal mode it advances by one on a
/// switch signal. Never moves past the last entry.
pub fn next_strategy(policy: &SwitchPolicy, current_index: usize, switch_signal: bool, queries_made: usize) -> usize {
    let last = policy.schedule.len().saturating_sub(1);
    match &policy.mode {
        SwitchMode::Fixed { at } => at.iter().filter(|&&p| queries_made >= p).count().min(last),
        SwitchMode::Signal if switch_signal => (current_index + 1).min(last),
        SwitchMode::Signal => current_index.min(last),
    }
}
