//! End-to-end consensus: initialization, diffusion, adjustment, labels.

use serde::{Deserialize, Serialize};

use crate::adjust::{adjust, StopReason, DEFAULT_MAX_ITERS};
use crate::diffusion::{diffuse, DiffusionMode};
use crate::ensemble::{ClusterSet, EnsembleBase, HyperEdgeSet};
use crate::error::{Error, Result};
use crate::init::initialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Config {
    pub max_iters: usize,
    /// Recorded in the result; every stage is deterministic.
    pub seed: u64,
    pub diffusion_mode: DiffusionMode,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            max_iters: DEFAULT_MAX_ITERS,
            seed: 0,
            diffusion_mode: DiffusionMode::Rebuild,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsensusResult {
    /// Edge index of every sample.
    pub labels: Vec<usize>,
    pub n: usize,
    pub l: usize,
    pub n_clusters: usize,
    pub k: usize,
    /// Base-cluster ids chosen as medoids.
    pub medoids: Vec<usize>,
    /// Initialization loss at the chosen medoids.
    pub init_loss: f64,
    /// Overlap removal emptied every medoid and the claim fallback was used.
    pub init_fallback: bool,
    pub diffusion_rounds: usize,
    pub diffusion_loss_trace: Vec<f64>,
    pub refilled_edges: usize,
    /// Loss of the diffused edge set, then after every adjustment step.
    pub adjust_loss_trace: Vec<f64>,
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub rescued_edges: usize,
    pub seed: u64,
}

impl ConsensusResult {
    pub fn final_loss(&self) -> f64 {
        *self
            .adjust_loss_trace
            .last()
            .expect("the adjustment trace always holds the starting loss")
    }

    pub fn edges(&self) -> HyperEdgeSet {
        HyperEdgeSet::from_labels(&self.labels, self.k).expect("labels lie in 0..k")
    }
}

/// Runs the full consensus pipeline for `k` output clusters.
pub fn cehm(base: &EnsembleBase, k: usize, config: &Config) -> Result<ConsensusResult> {
    let cs = ClusterSet::from_base(base);
    cehm_clusters(&cs, k, config)
}

/// [`cehm`] on an already flattened cluster set.
pub fn cehm_clusters(cs: &ClusterSet, k: usize, config: &Config) -> Result<ConsensusResult> {
    if k == 0 || k > cs.n_clusters() {
        return Err(Error::InvalidK {
            k,
            n_clusters: cs.n_clusters(),
        });
    }
    let init = initialize(cs, k, config.seed)?;
    let diffused = diffuse(cs, &init.edges, config.diffusion_mode)?;
    let adjusted = adjust(cs, &diffused.edges, config.max_iters)?;
    let labels = adjusted.edges.labels()?;

    Ok(ConsensusResult {
        labels,
        n: cs.n(),
        l: cs.l(),
        n_clusters: cs.n_clusters(),
        k,
        medoids: init.medoids.indices,
        init_loss: init.medoids.loss,
        init_fallback: init.fallback,
        diffusion_rounds: diffused.rounds,
        diffusion_loss_trace: diffused.loss_trace,
        refilled_edges: diffused.refilled,
        adjust_loss_trace: adjusted.loss_trace,
        iterations: adjusted.iterations,
        stop_reason: adjusted.stop,
        rescued_edges: adjusted.rescued,
        seed: config.seed,
    })
}
