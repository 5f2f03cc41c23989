//! Initial labeled set from an unlabeled pool: k-means pre-clustering,
//! elbow selection of the cluster count, and centroid-proximity seeding.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, LabelEvent};
use crate::error::{Error, Result};
use crate::models::squared_euclidean;
use crate::oracle::{ExpertInput, Oracle, OracleDraw};
use crate::rng::stream_rng;

pub const DEFAULT_SEED_FRACTION: f64 = 0.02;
pub const DEFAULT_RESTARTS: usize = 5;
pub const DEFAULT_MAX_ITER: usize = 300;
pub const DEFAULT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringResult {
    pub k: usize,
    pub centroids: Vec<Vec<f64>>,
    /// Cluster of each instance, indexed by instance id.
    pub assignment: Vec<usize>,
    pub wcss: f64,
    pub iterations: usize,
    /// WCSS after the initial assignment and after every Lloyd iteration.
    pub wcss_trace: Vec<f64>,
}

impl ClusteringResult {
    pub fn members(&self, cluster: usize) -> impl Iterator<Item = usize> + '_ {
        self.assignment
            .iter()
            .enumerate()
            .filter(move |(_, &c)| c == cluster)
            .map(|(id, _)| id)
    }
}

fn nearest_centroid(x: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, mu) in centroids.iter().enumerate() {
        let d = squared_euclidean(x, mu);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn assign(points: &[&[f64]], centroids: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let mut wcss = 0.0;
    let assignment = points
        .iter()
        .map(|x| {
            let (c, d) = nearest_centroid(x, centroids);
            wcss += d;
            c
        })
        .collect();
    (assignment, wcss)
}

fn kmeans_plus_plus(points: &[&[f64]], k: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centroids = vec![points[rng.random_range(0..n)].to_vec()];
    let mut d2: Vec<f64> = points.iter().map(|x| squared_euclidean(x, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if acc > target && w > 0.0 {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            // every point coincides with a chosen centroid
            rng.random_range(0..n)
        };
        let c = points[next].to_vec();
        for (d, x) in d2.iter_mut().zip(points) {
            *d = d.min(squared_euclidean(x, &c));
        }
        centroids.push(c);
    }
    centroids
}

/// Lloyd's algorithm from a k-means++ start.
///
/// Stops once the largest centroid displacement falls below `tol` or after
/// `max_iter` iterations. Empty clusters keep their previous centroid.
pub fn kmeans(dataset: &Dataset, k: usize, seed: u64, max_iter: usize, tol: f64) -> Result<ClusteringResult> {
    let points: Vec<&[f64]> = dataset.instances().iter().map(|i| i.features.as_slice()).collect();
    kmeans_points(&points, k, seed, max_iter, tol)
}

pub fn kmeans_points(points: &[&[f64]], k: usize, seed: u64, max_iter: usize, tol: f64) -> Result<ClusteringResult> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(Error::InvalidK { k, n });
    }
    let dim = points[0].len();
    let mut rng = stream_rng(seed, &[k as u64]);
    let mut centroids = kmeans_plus_plus(points, k, &mut rng);
    let (mut assignment, mut wcss) = assign(points, &centroids);
    let mut trace = vec![wcss];
    let mut iterations = 0;

    while iterations < max_iter {
        iterations += 1;
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (x, &c) in points.iter().zip(&assignment) {
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(x.iter()) {
                *s += v;
            }
        }
        let mut shift: f64 = 0.0;
        for c in 0..k {
            if counts[c] == 0 {
                continue;
            }
            let updated: Vec<f64> = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            shift = shift.max(squared_euclidean(&updated, &centroids[c]).sqrt());
            centroids[c] = updated;
        }
        (assignment, wcss) = assign(points, &centroids);
        trace.push(wcss);
        if shift < tol {
            break;
        }
    }

    Ok(ClusteringResult {
        k,
        centroids,
        assignment,
        wcss,
        iterations,
        wcss_trace: trace,
    })
}

/// Best (lowest WCSS) of `restarts` k-means runs; earlier restarts win ties.
pub fn kmeans_best_of(dataset: &Dataset, k: usize, seed: u64, restarts: usize) -> Result<ClusteringResult> {
    let mut best: Option<ClusteringResult> = None;
    for r in 0..restarts.max(1) {
        let run = kmeans(dataset, k, crate::rng::derive_seed(seed, &[r as u64]), DEFAULT_MAX_ITER, DEFAULT_TOL)?;
        if best.as_ref().is_none_or(|b| run.wcss < b.wcss) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// WCSS for k = 1..=k_max, each the best of `restarts` runs.
pub fn wcss_curve(dataset: &Dataset, k_max: usize, seed: u64, restarts: usize) -> Result<Vec<f64>> {
    if k_max < 2 || k_max > dataset.len() {
        return Err(Error::InvalidK {
            k: k_max,
            n: dataset.len(),
        });
    }
    (1..=k_max)
        .map(|k| kmeans_best_of(dataset, k, seed, restarts).map(|r| r.wcss))
        .collect()
}

/// Picks the elbow of a WCSS curve whose first entry is k = 1: the point
/// farthest from the chord joining the two endpoints. Near-equal distances
/// resolve to the smaller k.
pub fn elbow_from_curve(wcss: &[f64]) -> usize {
    let n = wcss.len();
    if n < 3 {
        return 1;
    }
    let (x1, y1) = (1.0, wcss[0]);
    let (x2, y2) = (n as f64, wcss[n - 1]);
    let norm = ((y2 - y1).powi(2) + (x2 - x1).powi(2)).sqrt();
    let scale = wcss.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let mut best = (1, 0.0);
    for (i, &y) in wcss.iter().enumerate() {
        let x = (i + 1) as f64;
        let dist = ((y2 - y1) * x - (x2 - x1) * y + x2 * y1 - y2 * x1).abs() / norm;
        if dist > best.1 + 1e-9 * scale {
            best = (i + 1, dist);
        }
    }
    best.0
}

pub fn elbow_select(dataset: &Dataset, k_max: usize, seed: u64) -> Result<usize> {
    elbow_select_with(dataset, k_max, seed, DEFAULT_RESTARTS)
}

pub fn elbow_select_with(dataset: &Dataset, k_max: usize, seed: u64, restarts: usize) -> Result<usize> {
    Ok(elbow_from_curve(&wcss_curve(dataset, k_max, seed, restarts)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSelection {
    pub selected: Vec<usize>,
    pub per_cluster_quota: BTreeMap<usize, usize>,
    pub fraction: f64,
}

/// Seed budget `ceil(fraction * n)`, capped at `n`.
pub fn seed_budget(n: usize, fraction: f64) -> usize {
    // tolerance keeps products like 0.02 * 800 from rounding up past 16
    ((fraction * n as f64 - 1e-9).ceil().max(0.0) as usize).min(n)
}

/// Cluster members sorted by distance to their centroid, then by id.
fn ranked_members(dataset: &Dataset, clustering: &ClusteringResult) -> Vec<Vec<usize>> {
    let mut ranked: Vec<Vec<(f64, usize)>> = vec![Vec::new(); clustering.k];
    for (id, &c) in clustering.assignment.iter().enumerate() {
        ranked[c].push((squared_euclidean(dataset.features(id), &clustering.centroids[c]), id));
    }
    ranked
        .into_iter()
        .map(|mut v| {
            v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            v.into_iter().map(|(_, id)| id).collect()
        })
        .collect()
}

/// Round-robin over clusters in index order, each turn taking the cluster's
/// next-closest point to its centroid, until the budget is met. Exhausted
/// clusters are skipped.
pub fn select_seed_instances(dataset: &Dataset, clustering: &ClusteringResult, fraction: f64) -> Result<SeedSelection> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Domain(format!("seed fraction {fraction} not in (0, 1]")));
    }
    if clustering.assignment.len() != dataset.len() {
        return Err(Error::InvalidConfig("clustering does not cover the dataset".into()));
    }
    let budget = seed_budget(dataset.len(), fraction);
    let ranked = ranked_members(dataset, clustering);
    let mut cursors = vec![0usize; ranked.len()];
    let mut selected = Vec::with_capacity(budget);
    let mut quota = BTreeMap::new();
    while selected.len() < budget {
        let mut progressed = false;
        for (c, members) in ranked.iter().enumerate() {
            if selected.len() == budget {
                break;
            }
            if let Some(&id) = members.get(cursors[c]) {
                cursors[c] += 1;
                selected.push(id);
                *quota.entry(c).or_insert(0) += 1;
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }
    Ok(SeedSelection {
        selected,
        per_cluster_quota: quota,
        fraction,
    })
}

/// Takes exactly `quota` closest points from every cluster (fewer if the
/// cluster is smaller), in cluster order.
pub fn select_seed_with_quota(dataset: &Dataset, clustering: &ClusteringResult, quota: usize) -> Result<SeedSelection> {
    if clustering.assignment.len() != dataset.len() {
        return Err(Error::InvalidConfig("clustering does not cover the dataset".into()));
    }
    let ranked = ranked_members(dataset, clustering);
    let mut selected = Vec::new();
    let mut per_cluster = BTreeMap::new();
    for (c, members) in ranked.iter().enumerate() {
        let take = quota.min(members.len());
        selected.extend_from_slice(&members[..take]);
        if take > 0 {
            per_cluster.insert(c, take);
        }
    }
    let fraction = selected.len() as f64 / dataset.len() as f64;
    Ok(SeedSelection {
        selected,
        per_cluster_quota: per_cluster,
        fraction,
    })
}

/// Uniform random seed set of the same budget; the baseline for measuring
/// what pre-clustering buys.
pub fn select_random_seed(dataset: &Dataset, fraction: f64, seed: u64) -> Result<SeedSelection> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Domain(format!("seed fraction {fraction} not in (0, 1]")));
    }
    let mut ids: Vec<usize> = (0..dataset.len()).collect();
    ids.shuffle(&mut stream_rng(seed, &[0x5EED]));
    ids.truncate(seed_budget(dataset.len(), fraction));
    Ok(SeedSelection {
        selected: ids,
        per_cluster_quota: BTreeMap::new(),
        fraction,
    })
}

/// Labels every selected instance with one oracle call each.
pub fn bootstrap_labels(
    dataset: &mut Dataset,
    selection: &SeedSelection,
    oracle: &mut dyn Oracle,
) -> Result<Vec<(usize, ExpertInput)>> {
    if let Some(&id) = selection.selected.iter().find(|id| !dataset.unlabeled().contains(id)) {
        return Err(if id >= dataset.len() {
            Error::UnknownId(id)
        } else {
            Error::AlreadyLabeled(id)
        });
    }
    let mut inputs = Vec::with_capacity(selection.selected.len());
    for (ordinal, &id) in selection.selected.iter().enumerate() {
        let input = oracle.query(dataset, id, OracleDraw::Seed(ordinal as u64))?;
        dataset.mark_labeled(id, input.label)?;
        inputs.push((id, input));
    }
    Ok(inputs)
}

/// Converts bootstrap oracle answers to log entries.
pub fn seed_events(inputs: &[(usize, ExpertInput)]) -> Vec<LabelEvent> {
    inputs
        .iter()
        .map(|(id, e)| LabelEvent {
            instance_id: *id,
            class_index: e.label,
            z1: e.z1,
            z2: e.z2,
            timestamp: None,
            query_index: 0,
        })
        .collect()
}
