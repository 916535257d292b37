//! Ensemble-base generation: repeated seeded k-means with a randomized
//! cluster count per run, plus a Gaussian-blob generator for synthetic data.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::diffusion::floor_sqrt;
use crate::ensemble::EnsembleBase;
use crate::error::{Error, Result};

/// Row-major `n × d` matrix of finite coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Points {
    n: usize,
    d: usize,
    data: Vec<f64>,
}

impl Points {
    pub fn new(n: usize, d: usize, data: Vec<f64>) -> Result<Self> {
        if d == 0 || data.len() != n * d {
            return Err(Error::InvalidPoints(format!(
                "expected {n}×{d} values, got {}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidPoints(format!(
                "non-finite coordinate in row {}",
                i / d
            )));
        }
        Ok(Self { n, d, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != d) {
            return Err(Error::InvalidPoints(format!(
                "row {i} has {} columns, expected {d}",
                rows[i].len()
            )));
        }
        Self::new(rows.len(), d, rows.concat())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    /// Per-dimension z-scores. Constant dimensions become all zero.
    pub fn standardized(&self) -> Self {
        let n = self.n as f64;
        let mut out = self.data.clone();
        for j in 0..self.d {
            let mean = (0..self.n).map(|i| self.data[i * self.d + j]).sum::<f64>() / n;
            let var = (0..self.n)
                .map(|i| (self.data[i * self.d + j] - mean).powi(2))
                .sum::<f64>()
                / n;
            let sd = var.sqrt();
            for i in 0..self.n {
                let v = &mut out[i * self.d + j];
                *v = if sd > 0.0 { (*v - mean) / sd } else { 0.0 };
            }
        }
        Self {
            n: self.n,
            d: self.d,
            data: out,
        }
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub const KMEANS_MAX_ITERS: usize = 300;

/// Lloyd's k-means from `k` distinct points drawn uniformly as initial
/// centers. Stops at an assignment fixed point or after
/// [`KMEANS_MAX_ITERS`] iterations. A cluster that empties is re-seeded with
/// the point farthest from its current center.
pub fn kmeans(points: &Points, k: usize, seed: u64) -> Result<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    kmeans_with(points, k, &mut rng)
}

fn kmeans_with<R: Rng>(points: &Points, k: usize, rng: &mut R) -> Result<Vec<usize>> {
    let (n, d) = (points.n(), points.d());
    if k == 0 || k > n {
        return Err(Error::InvalidClusterCount { k, n });
    }
    let mut centers: Vec<f64> = sample(rng, n, k)
        .into_iter()
        .flat_map(|i| points.row(i).to_vec())
        .collect();
    let mut labels = vec![usize::MAX; n];

    for _ in 0..KMEANS_MAX_ITERS {
        let mut changed = false;
        for (i, label) in labels.iter_mut().enumerate() {
            let p = points.row(i);
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for c in 0..k {
                let dist = sq_dist(p, &centers[c * d..(c + 1) * d]);
                if dist < best_d {
                    best_d = dist;
                    best = c;
                }
            }
            if *label != best {
                *label = best;
                changed = true;
            }
        }

        // Re-seed empty clusters before updating centers.
        let mut counts = vec![0usize; k];
        for &c in &labels {
            counts[c] += 1;
        }
        while let Some(empty) = counts.iter().position(|&c| c == 0) {
            let far = (0..n)
                .filter(|&i| counts[labels[i]] > 1)
                .max_by(|&a, &b| {
                    let da = sq_dist(points.row(a), &centers[labels[a] * d..(labels[a] + 1) * d]);
                    let db = sq_dist(points.row(b), &centers[labels[b] * d..(labels[b] + 1) * d]);
                    da.total_cmp(&db).then(b.cmp(&a))
                })
                .expect("k ≤ n leaves a cluster with two or more points");
            counts[labels[far]] -= 1;
            labels[far] = empty;
            counts[empty] += 1;
            changed = true;
        }

        let mut sums = vec![0.0; k * d];
        for (i, &c) in labels.iter().enumerate() {
            for (s, v) in sums[c * d..(c + 1) * d].iter_mut().zip(points.row(i)) {
                *s += v;
            }
        }
        for c in 0..k {
            for j in 0..d {
                centers[c * d + j] = sums[c * d + j] / counts[c] as f64;
            }
        }
        if !changed {
            break;
        }
    }
    Ok(labels)
}

/// Sum of squared distances from each point to its cluster mean.
pub fn within_cluster_sse(points: &Points, labels: &[usize]) -> f64 {
    let k = labels.iter().max().map_or(0, |&m| m + 1);
    let d = points.d();
    let mut sums = vec![0.0; k * d];
    let mut counts = vec![0usize; k];
    for (i, &c) in labels.iter().enumerate() {
        counts[c] += 1;
        for (s, v) in sums[c * d..(c + 1) * d].iter_mut().zip(points.row(i)) {
            *s += v;
        }
    }
    labels
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let mean: Vec<f64> = sums[c * d..(c + 1) * d]
                .iter()
                .map(|s| s / counts[c] as f64)
                .collect();
            sq_dist(points.row(i), &mean)
        })
        .sum()
}

/// Inclusive range of per-run cluster counts:
/// `[k, max(min(⌊√n⌋, 50), ⌈3k/2⌉)]`.
pub fn cluster_count_range(n: usize, k_true: usize) -> (usize, usize) {
    let upper = floor_sqrt(n).min(50).max((3 * k_true).div_ceil(2));
    (k_true, upper)
}

/// Per-column RNG stream, independent of the order columns are computed in.
fn column_rng(seed: u64, column: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(column as u64 + 1);
    rng
}

/// Builds an `l`-column base by k-means on z-scored points, each column with
/// a cluster count drawn uniformly from [`cluster_count_range`]. Counts above
/// `n` are clamped to `n`.
pub fn generate_base(points: &Points, k_true: usize, l: usize, seed: u64) -> Result<EnsembleBase> {
    if k_true < 2 {
        return Err(Error::InvalidArgument(format!(
            "the true cluster count must be at least 2, got {k_true}"
        )));
    }
    let (lo, hi) = cluster_count_range(points.n(), k_true);
    generate_base_in_range(points, lo, hi, l, seed)
}

/// [`generate_base`] with an explicit inclusive cluster-count range.
pub fn generate_base_in_range(
    points: &Points,
    lo: usize,
    hi: usize,
    l: usize,
    seed: u64,
) -> Result<EnsembleBase> {
    if l == 0 {
        return Err(Error::InvalidArgument(
            "need at least one base clustering".into(),
        ));
    }
    if lo == 0 || lo > hi {
        return Err(Error::InvalidArgument(format!(
            "invalid cluster-count range [{lo}, {hi}]"
        )));
    }
    if lo > points.n() {
        return Err(Error::InvalidClusterCount {
            k: lo,
            n: points.n(),
        });
    }
    let scaled = points.standardized();
    let columns: Vec<Vec<u64>> = (0..l)
        .into_par_iter()
        .map(|j| {
            let mut rng = column_rng(seed, j);
            let k = rng.random_range(lo..=hi).min(points.n());
            kmeans_with(&scaled, k, &mut rng)
                .map(|labels| labels.into_iter().map(|v| v as u64).collect())
        })
        .collect::<Result<_>>()?;
    EnsembleBase::from_columns(&columns)
}

/// `n` points in `k` isotropic Gaussian clusters of standard deviation
/// `spread`, with centers on a unit-spaced grid scaled by 10. Cluster sizes
/// differ by at most one. Returns the points and the true labels.
pub fn gaussian_blobs(
    n: usize,
    k: usize,
    d: usize,
    spread: f64,
    seed: u64,
) -> Result<(Points, Vec<usize>)> {
    if k == 0 || k > n || d == 0 {
        return Err(Error::InvalidArgument(format!(
            "blobs need n ≥ k ≥ 1 and d ≥ 1 (n = {n}, k = {k}, d = {d})"
        )));
    }
    if !(spread.is_finite() && spread >= 0.0) {
        return Err(Error::InvalidArgument(format!("invalid spread {spread}")));
    }
    // Smallest grid side g with g^d ≥ k.
    let mut side = 1usize;
    while side.checked_pow(d as u32).is_some_and(|cells| cells < k) {
        side += 1;
    }
    let centers: Vec<Vec<f64>> = (0..k)
        .map(|c| {
            let mut rest = c;
            (0..d)
                .map(|_| {
                    let digit = rest % side;
                    rest /= side;
                    10.0 * digit as f64
                })
                .collect()
        })
        .collect();
    let noise = Normal::new(0.0, spread).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth: Vec<usize> = (0..n).map(|i| i * k / n).collect();
    let mut data = Vec::with_capacity(n * d);
    for &c in &truth {
        for &center in &centers[c] {
            data.push(center + noise.sample(&mut rng));
        }
    }
    Ok((Points::new(n, d, data)?, truth))
}
