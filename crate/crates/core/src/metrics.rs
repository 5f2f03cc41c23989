//! Label-free performance heuristics.
//!
//! EC, MU and CU are uncertainty measures of the current model, CE is the
//! disagreement of the committee, and IE/IC are information densities of an
//! instance relative to the unlabeled pool. Pool-level values are arithmetic
//! means over the unlabeled pool.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::models::{Committee, KnnModel, PosteriorVector};

pub fn classifier_uncertainty(p: &PosteriorVector) -> f64 {
    1.0 - p.max_prob()
}

/// Top-1 minus top-2 probability.
pub fn margin_uncertainty(p: &PosteriorVector) -> Result<f64> {
    let probs = p.probs();
    if probs.len() < 2 {
        return Err(Error::SingleClass);
    }
    let (mut first, mut second) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &v in probs {
        if v > first {
            second = first;
            first = v;
        } else if v > second {
            second = v;
        }
    }
    Ok(first - second)
}

/// Shannon entropy in nats with 0 ln 0 = 0.
pub fn entropy_of_classes(p: &PosteriorVector) -> f64 {
    entropy(p.probs())
}

pub(crate) fn entropy(probs: &[f64]) -> f64 {
    -probs
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| v * v.ln())
        .sum::<f64>()
}

pub fn consensus_entropy(committee: &Committee, x: &[f64]) -> Result<f64> {
    Ok(entropy_of_classes(&committee.consensus_proba(x)?))
}

/// Mean Euclidean distance from `x` to the pool members.
pub fn info_density_euclidean<'a, I>(x: &[f64], pool: I) -> Result<f64>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    mean_over(pool, |y| euclidean(x, y))
}

/// Mean cosine similarity from `x` to the pool members. Similarity with a
/// zero vector is 0.
pub fn info_density_cosine<'a, I>(x: &[f64], pool: I) -> Result<f64>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let nx = norm(x);
    mean_over(pool, |y| cosine_with_norm(x, nx, y))
}

fn mean_over<'a, I, F>(pool: I, f: F) -> Result<f64>
where
    I: IntoIterator<Item = &'a [f64]>,
    F: Fn(&[f64]) -> f64,
{
    let (sum, n) = pool.into_iter().fold((0.0, 0usize), |(s, n), y| (s + f(y), n + 1));
    if n == 0 {
        return Err(Error::EmptyPool);
    }
    Ok(sum / n as f64)
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    crate::models::squared_euclidean(a, b).sqrt()
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn cosine_with_norm(x: &[f64], nx: f64, y: &[f64]) -> f64 {
    let ny = norm(y);
    if nx == 0.0 || ny == 0.0 {
        return 0.0;
    }
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    dot / (nx * ny)
}

pub fn cosine_similarity(x: &[f64], y: &[f64]) -> f64 {
    cosine_with_norm(x, norm(x), y)
}

/// Which pool-level quantity a series tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Ec,
    Mu,
    Cu,
    Ce,
    Ie,
    Ic,
    SAl,
    Accuracy,
}

impl Metric {
    /// Whether the metric shrinks as the learner improves.
    pub fn decreases_with_progress(self) -> bool {
        matches!(self, Metric::Ec | Metric::Cu | Metric::Ce)
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "ec" => Metric::Ec,
            "mu" => Metric::Mu,
            "cu" => Metric::Cu,
            "ce" => Metric::Ce,
            "ie" => Metric::Ie,
            "ic" => Metric::Ic,
            "s_al" | "sal" => Metric::SAl,
            "accuracy" => Metric::Accuracy,
            other => return Err(Error::InvalidConfig(format!("unknown metric {other:?}"))),
        })
    }
}

/// Pool-level metrics after `query_index` queries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSnapshot {
    pub query_index: usize,
    pub ec: f64,
    pub mu: f64,
    pub cu: f64,
    pub ce: f64,
    pub ie: f64,
    pub ic: f64,
    pub s_al: f64,
    pub accuracy: Option<f64>,
}

impl MetricSnapshot {
    pub fn get(&self, metric: Metric) -> Option<f64> {
        Some(match metric {
            Metric::Ec => self.ec,
            Metric::Mu => self.mu,
            Metric::Cu => self.cu,
            Metric::Ce => self.ce,
            Metric::Ie => self.ie,
            Metric::Ic => self.ic,
            Metric::SAl => self.s_al,
            Metric::Accuracy => return self.accuracy,
        })
    }
}

struct PerInstance {
    ec: f64,
    mu: f64,
    cu: f64,
    ce: f64,
    ie: f64,
    ic: f64,
}

/// Computes every pool metric for the current model and committee.
///
/// Each instance's density is taken against the rest of the unlabeled pool;
/// a lone unlabeled instance is compared with itself. Per-instance values are
/// computed in parallel and summed in id order, so results are bit-stable.
pub fn snapshot(
    dataset: &Dataset,
    model: &KnnModel,
    committee: &Committee,
    query_index: usize,
    s_al: f64,
) -> Result<MetricSnapshot> {
    let pool_ids = dataset.unlabeled_ids();
    let pool: &[usize] = &pool_ids;
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    if dataset.n_classes() < 2 {
        return Err(Error::SingleClass);
    }
    let per: Vec<PerInstance> = pool
        .par_iter()
        .map(|&id| {
            let x = dataset.features(id);
            let p = model.predict_proba(x)?;
            let ce = consensus_entropy(committee, x)?;
            let others = move || {
                pool.iter()
                    .filter(move |&&j| j != id || pool.len() == 1)
                    .map(|&j| dataset.features(j))
            };
            Ok(PerInstance {
                ec: entropy_of_classes(&p),
                mu: margin_uncertainty(&p)?,
                cu: classifier_uncertainty(&p),
                ce,
                ie: info_density_euclidean(x, others())?,
                ic: info_density_cosine(x, others())?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let n = per.len() as f64;
    let mean = |f: fn(&PerInstance) -> f64| per.iter().map(f).sum::<f64>() / n;
    let accuracy = match dataset.ground_truth() {
        Some(gt) => Some(whole_pool_accuracy(dataset, model, gt)?),
        None => None,
    };
    Ok(MetricSnapshot {
        query_index,
        ec: mean(|p| p.ec),
        mu: mean(|p| p.mu),
        cu: mean(|p| p.cu),
        ce: mean(|p| p.ce),
        ie: mean(|p| p.ie),
        ic: mean(|p| p.ic),
        s_al,
        accuracy,
    })
}

/// Fraction of all instances whose current label matches ground truth:
/// assigned labels for the labeled set, model predictions elsewhere.
pub fn whole_pool_accuracy(dataset: &Dataset, model: &KnnModel, ground_truth: &[usize]) -> Result<f64> {
    let correct = (0..dataset.len())
        .into_par_iter()
        .map(|id| {
            let predicted = match dataset.label_of(id) {
                Some(c) => c,
                None => model.predict_proba(dataset.features(id))?.predicted(),
            };
            Ok(usize::from(predicted == ground_truth[id]))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(correct.iter().sum::<usize>() as f64 / dataset.len() as f64)
}

pub const HISTORY_CSV_HEADER: &str = "query_index,ec,mu,cu,ce,ie,ic,s_al,accuracy";

/// Writes the history as CSV. Floats use the shortest round-trip form, so
/// equal histories produce equal bytes.
pub fn write_history_csv<W: Write>(mut w: W, history: &[MetricSnapshot]) -> std::io::Result<()> {
    writeln!(w, "{HISTORY_CSV_HEADER}")?;
    for s in history {
        let acc = s.accuracy.map(|a| a.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            s.query_index, s.ec, s.mu, s.cu, s.ce, s.ie, s.ic, s.s_al, acc
        )?;
    }
    Ok(())
}

pub fn history_csv_string(history: &[MetricSnapshot]) -> String {
    let mut buf = Vec::new();
    write_history_csv(&mut buf, history).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("CSV output is ASCII")
}
