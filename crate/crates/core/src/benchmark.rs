//! Simulated-oracle benchmark harness: synthetic blob configs, multi-seed
//! runs and trend statistics.

use rayon::prelude::*;

use crate::error::Result;
use crate::metrics::{Metric, MetricSnapshot};
use crate::oracle::SimulatedOracleConfig;
use crate::session::{DatasetSource, OracleMode, RunConfig, Session};
use crate::strategies::{StrategySpec, SwitchPolicy};
use crate::synthetic::grid_centers;

/// Gaussian blobs on a square grid, `spacing` standard deviations apart.
#[derive(Debug, Clone, PartialEq)]
pub struct BlobBenchmark {
    pub blobs: usize,
    pub per_blob: usize,
    pub spacing: f64,
    pub std: f64,
    /// Below 9 the four seeds per blob already classify the default pool
    /// perfectly and there is nothing left to learn.
    pub knn_k: usize,
    pub budget: usize,
}

impl Default for BlobBenchmark {
    fn default() -> Self {
        Self {
            blobs: 4,
            per_blob: 200,
            spacing: 8.0,
            std: 1.0,
            knn_k: 9,
            budget: 100,
        }
    }
}

impl BlobBenchmark {
    /// Run config for one seed: perfect oracle, pure US for exactly `budget`
    /// queries, data drawn with the same seed.
    pub fn config(&self, seed: u64) -> RunConfig {
        let mut config = RunConfig::new(DatasetSource::Blobs {
            centers: grid_centers(self.blobs, self.spacing * self.std),
            per_blob: self.per_blob,
            std: self.std,
            seed,
            standardize: true,
        });
        config.seed = seed;
        config.knn_k = self.knn_k;
        config.oracle = OracleMode::Simulated(SimulatedOracleConfig::perfect());
        config.policy = SwitchPolicy {
            schedule: vec![StrategySpec::us()],
            budget: self.budget,
            // fixed-budget runs: the stall rule must not end them early
            window: usize::MAX,
            ..SwitchPolicy::default()
        };
        config
    }
}

/// Runs every config to completion, in parallel.
pub fn run_all(configs: &[RunConfig]) -> Result<Vec<Session>> {
    configs
        .par_iter()
        .map(|c| {
            let mut s = Session::init(c.clone())?;
            s.run_to_completion()?;
            Ok(s)
        })
        .collect()
}

/// Average ranks (1-based); ties share the mean of their positions.
pub fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            out[o] = rank;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation. Zero when either side is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "series lengths differ");
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

/// Spearman correlation between query index and a metric over a history.
pub fn trend(history: &[MetricSnapshot], metric: Metric) -> f64 {
    let (x, y): (Vec<f64>, Vec<f64>) = history
        .iter()
        .filter_map(|s| s.get(metric).map(|v| (s.query_index as f64, v)))
        .unzip();
    spearman(&x, &y)
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Trailing-window means; the first `window - 1` positions are omitted.
pub fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    values.windows(window).map(mean).collect()
}
