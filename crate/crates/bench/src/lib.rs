//! Shared fixtures for the benchmarks.

use khem_core::basegen::{gaussian_blobs, generate_base_in_range};
use khem_core::{ClusterSet, EnsembleBase};

/// Ensemble base over `n` Gaussian-blob points with `k` blobs, `l` columns
/// and per-column cluster counts drawn from `[lo, hi]`.
pub fn blob_base(n: usize, k: usize, l: usize, lo: usize, hi: usize, seed: u64) -> EnsembleBase {
    let (points, _) = gaussian_blobs(n, k, 2, 1.0, seed).expect("valid blob parameters");
    generate_base_in_range(&points, lo, hi, l, seed).expect("valid base parameters")
}

pub fn blob_clusters(n: usize, seed: u64) -> ClusterSet {
    ClusterSet::from_base(&blob_base(n, 4, 20, 4, 8, seed))
}
