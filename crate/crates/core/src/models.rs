//! Brute-force kNN classifier and bagged kNN committees.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng::stream_rng;

pub const DEFAULT_K: usize = 5;
pub const DEFAULT_COMMITTEE_SIZE: usize = 5;

/// Class-probability distribution for one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorVector {
    probs: Vec<f64>,
    predicted: usize,
}

impl PosteriorVector {
    /// Wraps a probability vector; `predicted` is the first maximal entry.
    ///
    /// Panics on an empty vector.
    pub fn new(probs: Vec<f64>) -> Self {
        assert!(!probs.is_empty(), "posterior needs at least one class");
        let mut predicted = 0;
        for (c, &p) in probs.iter().enumerate() {
            if p > probs[predicted] {
                predicted = c;
            }
        }
        Self { probs, predicted }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn predicted(&self) -> usize {
        self.predicted
    }

    pub fn max_prob(&self) -> f64 {
        self.probs[self.predicted]
    }

    pub fn n_classes(&self) -> usize {
        self.probs.len()
    }
}

/// A training point resolved against a dataset.
#[derive(Debug, Clone, PartialEq)]
struct TrainingPoint {
    id: usize,
    label: usize,
    features: Vec<f64>,
}

/// k-nearest-neighbour classifier. Training is storage of the labeled points.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel {
    k: usize,
    n_classes: usize,
    points: Vec<TrainingPoint>,
}

/// Serialized form of a model: `k` plus training ids, re-resolved on load.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelRecord {
    pub k: usize,
    pub training_ids: Vec<usize>,
}

impl KnnModel {
    /// Trains on the given ids, taking each label from the dataset's labeled
    /// set. Ids may repeat (bootstrap resamples).
    pub fn fit(dataset: &Dataset, ids: &[usize], k: usize) -> Result<Self> {
        if ids.is_empty() {
            return Err(Error::EmptyTrainingSet);
        }
        if k == 0 {
            return Err(Error::Domain("k must be at least 1".into()));
        }
        let points = ids
            .iter()
            .map(|&id| {
                let label = dataset.label_of(id).ok_or(Error::UnknownId(id))?;
                Ok(TrainingPoint {
                    id,
                    label,
                    features: dataset.features(id).to_vec(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            k,
            n_classes: dataset.n_classes(),
            points,
        })
    }

    pub fn from_record(dataset: &Dataset, record: &ModelRecord) -> Result<Self> {
        Self::fit(dataset, &record.training_ids, record.k)
    }

    pub fn record(&self) -> ModelRecord {
        ModelRecord {
            k: self.k,
            training_ids: self.training_ids(),
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn effective_k(&self) -> usize {
        self.k.min(self.points.len())
    }

    pub fn training_ids(&self) -> Vec<usize> {
        self.points.iter().map(|p| p.id).collect()
    }

    pub fn dim(&self) -> usize {
        self.points[0].features.len()
    }

    /// Vote fractions among the `effective_k` nearest training points.
    /// Equal distances are resolved toward the lower instance id.
    pub fn predict_proba(&self, x: &[f64]) -> Result<PosteriorVector> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let mut dists: Vec<(f64, usize, usize)> = self
            .points
            .iter()
            .enumerate()
            .map(|(pos, p)| (squared_euclidean(x, &p.features), p.id, pos))
            .collect();
        let k = self.effective_k();
        let key = |a: &(f64, usize, usize), b: &(f64, usize, usize)| {
            a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2))
        };
        if k < dists.len() {
            dists.select_nth_unstable_by(k - 1, key);
        }
        let mut votes = vec![0usize; self.n_classes];
        for &(_, _, pos) in &dists[..k] {
            votes[self.points[pos].label] += 1;
        }
        let probs = votes.iter().map(|&v| v as f64 / k as f64).collect();
        Ok(PosteriorVector::new(probs))
    }
}

/// Trains a kNN model on the dataset's current labeled set.
pub fn train_knn(dataset: &Dataset, k: usize) -> Result<KnnModel> {
    let ids: Vec<usize> = dataset.labeled().keys().copied().collect();
    KnnModel::fit(dataset, &ids, k)
}

pub fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Bagged ensemble of kNN models used for query-by-committee.
#[derive(Debug, Clone, PartialEq)]
pub struct Committee {
    members: Vec<KnnModel>,
}

impl Committee {
    pub fn from_members(members: Vec<KnnModel>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::EmptyTrainingSet);
        }
        Ok(Self { members })
    }

    pub fn from_records(dataset: &Dataset, records: &[ModelRecord]) -> Result<Self> {
        let members = records
            .iter()
            .map(|r| KnnModel::from_record(dataset, r))
            .collect::<Result<Vec<_>>>()?;
        Self::from_members(members)
    }

    pub fn records(&self) -> Vec<ModelRecord> {
        self.members.iter().map(KnnModel::record).collect()
    }

    pub fn members(&self) -> &[KnnModel] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn member_posteriors(&self, x: &[f64]) -> Result<Vec<PosteriorVector>> {
        self.members.iter().map(|m| m.predict_proba(x)).collect()
    }

    /// Element-wise mean of the member posteriors.
    pub fn consensus_proba(&self, x: &[f64]) -> Result<PosteriorVector> {
        mean_posterior(&self.member_posteriors(x)?)
    }
}

/// Averages already-computed posteriors. Exposed for oracle tests and for
/// committees assembled outside [`build_committee`].
pub fn mean_posterior(members: &[PosteriorVector]) -> Result<PosteriorVector> {
    let first = members.first().ok_or(Error::EmptyTrainingSet)?;
    let mut acc = vec![0.0; first.n_classes()];
    for p in members {
        if p.n_classes() != acc.len() {
            return Err(Error::DimensionMismatch {
                expected: acc.len(),
                got: p.n_classes(),
            });
        }
        for (a, v) in acc.iter_mut().zip(p.probs()) {
            *a += v;
        }
    }
    let m = members.len() as f64;
    Ok(PosteriorVector::new(acc.into_iter().map(|a| a / m).collect()))
}

/// Builds `size` kNN members, each on a bootstrap resample of the labeled
/// set drawn from the stream `(seed, member)`.
pub fn build_committee(dataset: &Dataset, size: usize, base_k: usize, seed: u64) -> Result<Committee> {
    if size < 2 {
        return Err(Error::Domain("committee needs at least two members".into()));
    }
    let labeled: Vec<usize> = dataset.labeled().keys().copied().collect();
    if labeled.len() < 2 {
        return Err(Error::EmptyTrainingSet);
    }
    let members = (0..size)
        .map(|m| {
            let mut rng = stream_rng(seed, &[m as u64]);
            let sample: Vec<usize> = (0..labeled.len())
                .map(|_| labeled[rng.random_range(0..labeled.len())])
                .collect();
            KnnModel::fit(dataset, &sample, base_k)
        })
        .collect::<Result<Vec<_>>>()?;
    Committee::from_members(members)
}
