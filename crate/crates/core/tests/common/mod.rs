//! Random fixtures and brute-force reference implementations shared by the
//! integration tests. Nothing here calls into the library's math.

#![allow(dead_code)]

use alforge_core::models::{Committee, KnnModel};
use alforge_core::Dataset;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub struct World {
    pub dataset: Dataset,
    pub model: KnnModel,
    pub committee: Committee,
}

/// Feature rows drawn either from a coarse integer grid (duplicates, ties,
/// zero vectors) or from a continuous box.
pub fn random_rows(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
    let coarse = rng.random_bool(0.5);
    (0..n)
        .map(|_| {
            (0..dim)
                .map(|_| {
                    if coarse {
                        rng.random_range(-2i32..=2) as f64
                    } else {
                        rng.random_range(-5.0..5.0)
                    }
                })
                .collect()
        })
        .collect()
}

/// A small labeled/unlabeled pool with a trained model and committee.
/// At least one instance stays unlabeled.
pub fn random_world(rng: &mut ChaCha8Rng, max_n: usize, max_classes: usize) -> World {
    let n = rng.random_range(3..=max_n);
    let classes = rng.random_range(2..=max_classes);
    let dim = rng.random_range(1..=3);
    let rows = random_rows(rng, n, dim);
    let truth: Vec<usize> = (0..n).map(|_| rng.random_range(0..classes)).collect();
    let names = (0..classes).map(|c| format!("c{c}")).collect();
    let mut dataset = Dataset::new(rows, names, Some(truth.clone())).unwrap();
    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(rng);
    let n_labeled = rng.random_range(1..n);
    for &id in &ids[..n_labeled] {
        dataset.mark_labeled(id, truth[id]).unwrap();
    }
    let labeled: Vec<usize> = dataset.labeled().keys().copied().collect();
    let model = KnnModel::fit(&dataset, &labeled, rng.random_range(1..=7)).unwrap();
    let members = (0..rng.random_range(2..=5))
        .map(|_| {
            let sample: Vec<usize> = (0..labeled.len())
                .map(|_| labeled[rng.random_range(0..labeled.len())])
                .collect();
            KnnModel::fit(&dataset, &sample, rng.random_range(1..=7)).unwrap()
        })
        .collect();
    let committee = Committee::from_members(members).unwrap();
    World {
        dataset,
        model,
        committee,
    }
}

/// Random probability vector over `c` classes, sometimes with exact ties or
/// zero entries.
pub fn random_posterior(rng: &mut ChaCha8Rng, c: usize) -> Vec<f64> {
    match rng.random_range(0..4) {
        0 => vec![1.0 / c as f64; c],
        1 => {
            let k = rng.random_range(1..=10);
            let mut votes = vec![0usize; c];
            for _ in 0..k {
                votes[rng.random_range(0..c)] += 1;
            }
            votes.iter().map(|&v| v as f64 / k as f64).collect()
        }
        _ => {
            let raw: Vec<f64> = (0..c).map(|_| rng.random::<f64>()).collect();
            let s: f64 = raw.iter().sum();
            raw.iter().map(|v| v / s).collect()
        }
    }
}

pub fn bf_sq_dist(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += (a[i] - b[i]) * (a[i] - b[i]);
    }
    s
}

/// Exhaustive kNN: sort every training point by (distance, id), take the
/// first k, and count votes.
pub fn bf_knn(dataset: &Dataset, training_ids: &[usize], k: usize, x: &[f64]) -> Vec<f64> {
    let mut all: Vec<(f64, usize)> = training_ids
        .iter()
        .map(|&id| (bf_sq_dist(x, dataset.features(id)), id))
        .collect();
    all.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let k = k.min(all.len());
    let mut votes = vec![0.0; dataset.n_classes()];
    for &(_, id) in &all[..k] {
        votes[dataset.label_of(id).unwrap()] += 1.0;
    }
    votes.iter().map(|v| v / k as f64).collect()
}

pub fn bf_committee_mean(dataset: &Dataset, committee: &Committee, x: &[f64]) -> Vec<f64> {
    let mut acc = vec![0.0; dataset.n_classes()];
    for m in committee.members() {
        let p = bf_knn(dataset, &m.training_ids(), m.k(), x);
        for (a, v) in acc.iter_mut().zip(p) {
            *a += v;
        }
    }
    acc.iter().map(|a| a / committee.len() as f64).collect()
}

pub fn bf_entropy(p: &[f64]) -> f64 {
    let mut h = 0.0;
    for &v in p {
        if v > 0.0 {
            h -= v * v.ln();
        }
    }
    h
}

pub fn bf_cu(p: &[f64]) -> f64 {
    1.0 - p.iter().cloned().fold(f64::MIN, f64::max)
}

pub fn bf_mu(p: &[f64]) -> f64 {
    let mut s = p.to_vec();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s[0] - s[1]
}

pub fn bf_euclid(a: &[f64], b: &[f64]) -> f64 {
    bf_sq_dist(a, b).sqrt()
}

pub fn bf_cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// The other pool members of `id`, or the pool itself when `id` is alone.
pub fn bf_others(pool: &[usize], id: usize) -> Vec<usize> {
    if pool.len() == 1 {
        pool.to_vec()
    } else {
        pool.iter().copied().filter(|&j| j != id).collect()
    }
}

pub fn bf_ie(dataset: &Dataset, pool: &[usize], id: usize) -> f64 {
    let others = bf_others(pool, id);
    others
        .iter()
        .map(|&j| bf_euclid(dataset.features(id), dataset.features(j)))
        .sum::<f64>()
        / others.len() as f64
}

pub fn bf_ic(dataset: &Dataset, pool: &[usize], id: usize) -> f64 {
    let others = bf_others(pool, id);
    others
        .iter()
        .map(|&j| bf_cosine(dataset.features(id), dataset.features(j)))
        .sum::<f64>()
        / others.len() as f64
}

/// Ids whose score is within `tol` of the best, in ascending order.
pub fn near_best(ids: &[usize], scores: &[f64], tol: f64) -> Vec<usize> {
    let best = scores.iter().cloned().fold(f64::MIN, f64::max);
    let mut out: Vec<usize> = ids
        .iter()
        .zip(scores)
        .filter(|(_, &s)| s >= best - tol)
        .map(|(&id, _)| id)
        .collect();
    out.sort();
    out
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}
