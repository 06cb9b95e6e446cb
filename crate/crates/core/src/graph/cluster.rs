use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

use super::GraphError;
use crate::embed::l2_distance;

pub const MAX_KMEANS_ITERS: usize = 100;
pub const KMEANS_TOLERANCE: f64 = 1e-6;

/// Nearest-centroid classifier over latent vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub centroids: Vec<Vec<f64>>,
}

impl ClusterModel {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    pub fn dim(&self) -> usize {
        self.centroids.first().map_or(0, Vec::len)
    }

    /// Index of the nearest centroid; ties go to the lowest index.
    pub fn assign(&self, z: &[f64]) -> usize {
        let mut best = (0, f64::INFINITY);
        for (i, c) in self.centroids.iter().enumerate() {
            let d = l2_distance(c, z);
            if d < best.1 {
                best = (i, d);
            }
        }
        best.0
    }

    /// Cluster ids ordered by centroid distance from `z`, nearest first.
    pub fn by_distance(&self, z: &[f64]) -> Vec<usize> {
        let d: Vec<f64> = self.centroids.iter().map(|c| l2_distance(c, z)).collect();
        let mut ids: Vec<usize> = (0..self.k()).collect();
        ids.sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
        ids
    }
}

/// k-means with greedy farthest-point seeding. The first seed is a point
/// drawn with `seed`; each further seed is the point farthest from those
/// already chosen (lowest index on ties). Lloyd iterations stop after
/// [`MAX_KMEANS_ITERS`] or once no centroid moves more than [`KMEANS_TOLERANCE`].
pub fn fit_clusters(latents: &[Vec<f64>], k: usize, seed: u64) -> Result<ClusterModel, GraphError> {
    if k < 2 {
        return Err(GraphError::InvalidK(k));
    }
    let dim = latents.first().map_or(0, Vec::len);
    if let Some(z) = latents.iter().find(|z| z.len() != dim) {
        return Err(GraphError::DimensionMismatch {
            expected: dim,
            found: z.len(),
        });
    }
    let distinct = latents
        .iter()
        .map(|z| z.iter().map(|x| x.to_bits()).collect::<Vec<_>>())
        .collect::<HashSet<_>>()
        .len();
    if distinct < k {
        return Err(GraphError::TooFewPoints { k, distinct });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first = rng.gen_range(0..latents.len());
    let mut centroids = vec![latents[first].clone()];
    let mut nearest: Vec<f64> = latents.iter().map(|z| l2_distance(z, &latents[first])).collect();
    while centroids.len() < k {
        let mut far = 0;
        for (i, &d) in nearest.iter().enumerate() {
            if d > nearest[far] {
                far = i;
            }
        }
        centroids.push(latents[far].clone());
        for (d, z) in nearest.iter_mut().zip(latents) {
            *d = d.min(l2_distance(z, &latents[far]));
        }
    }

    let mut model = ClusterModel { centroids };
    for _ in 0..MAX_KMEANS_ITERS {
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for z in latents {
            let c = model.assign(z);
            counts[c] += 1;
            for (s, x) in sums[c].iter_mut().zip(z) {
                *s += x;
            }
        }
        let mut moved: f64 = 0.0;
        for c in 0..k {
            if counts[c] == 0 {
                continue;
            }
            let mean: Vec<f64> = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            moved = moved.max(l2_distance(&mean, &model.centroids[c]));
            model.centroids[c] = mean;
        }
        if moved < KMEANS_TOLERANCE {
            break;
        }
    }
    Ok(model)
}

/// Fraction of items whose label is the most common label of their cluster.
pub fn cluster_purity(clusters: &[usize], labels: &[usize]) -> f64 {
    if clusters.is_empty() {
        return 0.0;
    }
    let mut table = std::collections::BTreeMap::<(usize, usize), usize>::new();
    for (&c, &l) in clusters.iter().zip(labels) {
        *table.entry((c, l)).or_default() += 1;
    }
    let mut best = std::collections::BTreeMap::<usize, usize>::new();
    for (&(c, _), &n) in &table {
        let b = best.entry(c).or_default();
        *b = (*b).max(n);
    }
    best.values().sum::<usize>() as f64 / clusters.len() as f64
}
