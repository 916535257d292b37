use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("ensemble base has no samples or no base clusterings")]
    EmptyBase,

    #[error("row {row} has {found} labels, expected {expected}")]
    RaggedRow {
        row: usize,
        found: usize,
        expected: usize,
    },

    #[error("k must satisfy 1 ≤ k ≤ n_c (got k = {k}, n_c = {n_clusters})")]
    InvalidK { k: usize, n_clusters: usize },

    #[error("sample index {index} is out of range for {n} samples")]
    SampleOutOfRange { index: usize, n: usize },

    #[error("sample {sample} appears in more than one edge")]
    OverlappingEdges { sample: usize },

    #[error("edge set leaves {uncovered} of {n} samples unassigned")]
    IncompleteCover { uncovered: usize, n: usize },

    #[error("every initial edge is empty; diffusion has nothing to grow from")]
    DegenerateInitialization,

    #[error("label vectors differ in length ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },

    #[error("need at least {needed} samples, got {found}")]
    TooFewSamples { needed: usize, found: usize },

    #[error("k-means needs 1 ≤ k ≤ n (got k = {k}, n = {n})")]
    InvalidClusterCount { k: usize, n: usize },

    #[error("point data is malformed: {0}")]
    InvalidPoints(String),

    #[error("exhaustive check is limited to n ≤ {limit} samples, got {n}")]
    OracleTooLarge { n: usize, limit: usize },

    #[error("{0}")]
    InvalidArgument(String),
}
