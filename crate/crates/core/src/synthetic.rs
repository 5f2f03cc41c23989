//! Synthetic Gaussian-blob pools for benchmarks and tests.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng::stream_rng;

/// Isotropic Gaussian blobs, `per_blob` points each, in shuffled order so
/// that instance ids carry no class information. Class `c` is blob `c`.
pub fn gaussian_blobs(centers: &[Vec<f64>], per_blob: usize, std: f64, seed: u64) -> Result<Dataset> {
    if centers.is_empty() || per_blob == 0 {
        return Err(Error::EmptyDataset);
    }
    let dim = centers[0].len();
    if centers.iter().any(|c| c.len() != dim) {
        return Err(Error::InvalidConfig("blob centers differ in dimension".into()));
    }
    let mut rng = stream_rng(seed, &[0xB10B]);
    let mut rows: Vec<(Vec<f64>, usize)> = Vec::with_capacity(centers.len() * per_blob);
    for (c, center) in centers.iter().enumerate() {
        for _ in 0..per_blob {
            let x = center
                .iter()
                .map(|m| m + std * rng.sample::<f64, _>(StandardNormal))
                .collect();
            rows.push((x, c));
        }
    }
    rows.shuffle(&mut rng);
    let (features, labels): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    let names = (0..centers.len()).map(|c| format!("blob{c}")).collect();
    Dataset::new(features, names, Some(labels))
}

/// Centers of a square grid with the given spacing.
pub fn grid_centers(count: usize, spacing: f64) -> Vec<Vec<f64>> {
    let side = (count as f64).sqrt().ceil() as usize;
    (0..count)
        .map(|i| vec![(i % side) as f64 * spacing, (i / side) as f64 * spacing])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blob_shapes() {
        let ds = gaussian_blobs(&grid_centers(4, 8.0), 5, 1.0, 1).unwrap();
        assert_eq!(ds.len(), 20);
        assert_eq!(ds.n_classes(), 4);
        let gt = ds.ground_truth().unwrap();
        for c in 0..4 {
            assert_eq!(gt.iter().filter(|&&g| g == c).count(), 5);
        }
        assert_eq!(grid_centers(4, 8.0)[3], vec![8.0, 8.0]);
    }
}
