//! Consensus clustering by k-HyperEdge Medoids.
//!
//! A set of base clusterings is viewed as a hypergraph whose hyperedges are
//! the base clusters. The consensus partition is a set of `k` disjoint,
//! covering hyperedges found in three stages:
//!
//! 1. [`init`]: k-medoids over the base clusters, then overlap removal.
//! 2. [`diffusion`]: staged, confidence-ranked assignment until every sample
//!    belongs to an edge.
//! 3. [`adjust`]: synchronous reassignment of every sample to its
//!    highest-belonging edge until the edge-set loss stops decreasing.
//!
//! [`pipeline::cehm`] chains the stages. [`metrics`] provides NMI and ARI,
//! [`basegen`] builds ensemble bases from point data, and [`theory`] holds
//! brute-force checks of the loss geometry used by the test suites.

pub mod adjust;
pub mod basegen;
pub mod datasets;
pub mod diffusion;
pub mod ensemble;
mod error;
pub mod init;
pub mod metrics;
pub mod pipeline;
pub mod theory;

pub use adjust::{adjust, adjust_step, Adjustment, StopReason, DEFAULT_MAX_ITERS};
pub use diffusion::{diffuse, diffusion_round, Diffusion, DiffusionMode};
pub use ensemble::{
    adjust_loss, belonging, best_edge, confidence, edge_set_loss, BelongingTable, ClusterSet,
    EnsembleBase, HyperEdgeSet,
};
pub use error::{Error, Result};
pub use init::{
    claim_disjoint, initialize, kmedoids, pairwise_cost_matrix, remove_overlaps, CostMatrix,
    Medoids,
};
pub use pipeline::{cehm, Config, ConsensusResult};
