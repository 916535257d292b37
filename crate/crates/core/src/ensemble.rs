//! Ensemble bases, their hypergraph view and the belonging primitives shared
//! by every stage.
//!
//! Belonging degrees are kept as integers internally: the raw score of sample
//! `x` towards edge `e` is `Σ_{c ∋ x} |c ∩ e|` over the `l` base clusters that
//! contain `x`. The public real-valued degree divides by `l`, which bounds it
//! by `n` and leaves every argmax unchanged. Working on the raw integers keeps
//! ties and loss comparisons exact.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `n × l` label matrix, one column per base clustering.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleBase {
    n: usize,
    l: usize,
    labels: Vec<u64>,
}

impl EnsembleBase {
    /// Builds a base from sample-major rows. All rows must have the same
    /// length.
    pub fn from_rows<R: AsRef<[u64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let l = rows.first().map_or(0, |r| r.as_ref().len());
        if n == 0 || l == 0 {
            return Err(Error::EmptyBase);
        }
        let mut labels = Vec::with_capacity(n * l);
        for (row, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != l {
                return Err(Error::RaggedRow {
                    row,
                    found: r.len(),
                    expected: l,
                });
            }
            labels.extend_from_slice(r);
        }
        Ok(Self { n, l, labels })
    }

    /// Builds a base from label columns (one vector per base clustering).
    pub fn from_columns<C: AsRef<[u64]>>(columns: &[C]) -> Result<Self> {
        let l = columns.len();
        let n = columns.first().map_or(0, |c| c.as_ref().len());
        if n == 0 || l == 0 {
            return Err(Error::EmptyBase);
        }
        let mut labels = vec![0; n * l];
        for (j, col) in columns.iter().enumerate() {
            let col = col.as_ref();
            if col.len() != n {
                return Err(Error::LengthMismatch {
                    left: n,
                    right: col.len(),
                });
            }
            for (x, &label) in col.iter().enumerate() {
                labels[x * l + j] = label;
            }
        }
        Ok(Self { n, l, labels })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn row(&self, x: usize) -> &[u64] {
        &self.labels[x * self.l..(x + 1) * self.l]
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = u64> + '_ {
        (0..self.n).map(move |x| self.labels[x * self.l + j])
    }
}

/// The base clusters of an ensemble, flattened column-major, together with
/// the per-sample membership lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterSet {
    n: usize,
    l: usize,
    clusters: Vec<Vec<usize>>,
    /// Source column of each cluster.
    source: Vec<usize>,
    /// `n × l`, row `x` lists the cluster from each column containing `x`.
    membership: Vec<usize>,
}

impl ClusterSet {
    /// Flattens every base clustering into its clusters. Clusters of column 0
    /// come first, each column ordered by ascending label.
    pub fn from_base(base: &EnsembleBase) -> Self {
        let (n, l) = (base.n(), base.l());
        let mut clusters = Vec::new();
        let mut source = Vec::new();
        let mut membership = vec![0; n * l];
        for j in 0..l {
            let mut by_label: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
            for (x, label) in base.column(j).enumerate() {
                by_label.entry(label).or_default().push(x);
            }
            for members in by_label.into_values() {
                let id = clusters.len();
                for &x in &members {
                    membership[x * l + j] = id;
                }
                clusters.push(members);
                source.push(j);
            }
        }
        Self {
            n,
            l,
            clusters,
            source,
            membership,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l(&self) -> usize {
        self.l
    }

    /// Total number of base clusters, `n_c`.
    pub fn n_clusters(&self) -> usize {
        self.clusters.len()
    }

    pub fn clusters(&self) -> &[Vec<usize>] {
        &self.clusters
    }

    pub fn cluster(&self, c: usize) -> &[usize] {
        &self.clusters[c]
    }

    /// Base clustering that cluster `c` came from.
    pub fn source(&self, c: usize) -> usize {
        self.source[c]
    }

    /// The `l` clusters containing sample `x`, in column order.
    pub fn membership(&self, x: usize) -> &[usize] {
        &self.membership[x * self.l..(x + 1) * self.l]
    }

    /// Labels of column `j` re-derived from the clusters; label values are
    /// the cluster ids.
    pub fn column_partition(&self, j: usize) -> Vec<usize> {
        (0..self.n).map(|x| self.membership(x)[j]).collect()
    }
}

/// Convenience for `ClusterSet::from_base`.
pub fn build_cluster_set(base: &EnsembleBase) -> ClusterSet {
    ClusterSet::from_base(base)
}

/// `k` pairwise-disjoint sets of sample indices over `n` samples.
///
/// Edges are stored sorted. The set may be a partial cover (during
/// initialization and diffusion) and may contain empty edges.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HyperEdgeSet {
    n: usize,
    edges: Vec<Vec<usize>>,
}

impl HyperEdgeSet {
    /// Validates range and disjointness. Duplicates inside one edge collapse.
    pub fn new(n: usize, edges: Vec<Vec<usize>>) -> Result<Self> {
        let mut owner = vec![false; n];
        let mut edges = edges;
        for edge in &mut edges {
            edge.sort_unstable();
            edge.dedup();
            for &x in edge.iter() {
                if x >= n {
                    return Err(Error::SampleOutOfRange { index: x, n });
                }
                if owner[x] {
                    return Err(Error::OverlappingEdges { sample: x });
                }
                owner[x] = true;
            }
        }
        Ok(Self { n, edges })
    }

    /// Builds `k` edges from a per-sample edge assignment.
    pub fn from_assignment(assignment: &[Option<usize>], k: usize) -> Self {
        let mut edges = vec![Vec::new(); k];
        for (x, a) in assignment.iter().enumerate() {
            if let Some(e) = *a {
                edges[e].push(x);
            }
        }
        Self {
            n: assignment.len(),
            edges,
        }
    }

    /// Full-cover edge set from a label vector with values in `0..k`.
    pub fn from_labels(labels: &[usize], k: usize) -> Result<Self> {
        if let Some(&bad) = labels.iter().find(|&&e| e >= k) {
            return Err(Error::InvalidArgument(format!(
                "edge label {bad} is out of range for k = {k}"
            )));
        }
        let assignment: Vec<_> = labels.iter().map(|&e| Some(e)).collect();
        Ok(Self::from_assignment(&assignment, k))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Vec<usize>] {
        &self.edges
    }

    pub fn edge(&self, i: usize) -> &[usize] {
        &self.edges[i]
    }

    pub fn assignment(&self) -> Vec<Option<usize>> {
        let mut out = vec![None; self.n];
        for (e, edge) in self.edges.iter().enumerate() {
            for &x in edge {
                out[x] = Some(e);
            }
        }
        out
    }

    /// Size of the union of all edges.
    pub fn assigned_count(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }

    pub fn is_full_cover(&self) -> bool {
        self.assigned_count() == self.n
    }

    pub fn empty_edges(&self) -> usize {
        self.edges.iter().filter(|e| e.is_empty()).count()
    }

    /// Edge index of every sample; fails unless the set covers all samples.
    pub fn labels(&self) -> Result<Vec<usize>> {
        let assignment = self.assignment();
        let uncovered = assignment.iter().filter(|a| a.is_none()).count();
        if uncovered > 0 {
            return Err(Error::IncompleteCover {
                uncovered,
                n: self.n,
            });
        }
        Ok(assignment.into_iter().flatten().collect())
    }
}

/// Best edge of one sample together with its runner-up score.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Assessment {
    pub best: usize,
    pub best_raw: u64,
    /// Largest score among the other edges; 0 when `k = 1`.
    pub runner_up_raw: u64,
}

impl Assessment {
    /// Confidence margin in raw (`l`-scaled) units.
    pub fn margin_raw(&self) -> u64 {
        self.best_raw - self.runner_up_raw
    }
}

/// Per-edge intersection counts `|c ∩ e|` for every base cluster `c`, from
/// which any belonging degree is a lookup over the sample's `l` clusters.
#[derive(Debug, Clone)]
pub struct BelongingTable<'a> {
    cs: &'a ClusterSet,
    k: usize,
    counts: Vec<u32>,
}

/// Parallel passes below this size are not worth the scheduling overhead.
const PAR_MIN_LEN: usize = 512;

impl<'a> BelongingTable<'a> {
    pub fn new(cs: &'a ClusterSet, edges: &HyperEdgeSet) -> Self {
        let k = edges.k();
        let mut counts = vec![0u32; cs.n_clusters() * k];
        for (e, edge) in edges.edges().iter().enumerate() {
            for &x in edge {
                for &c in cs.membership(x) {
                    counts[c * k + e] += 1;
                }
            }
        }
        Self { cs, k, counts }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `Σ_{c ∋ x} |c ∩ e|`, the belonging degree scaled by `l`.
    pub fn raw(&self, x: usize, e: usize) -> u64 {
        self.cs
            .membership(x)
            .iter()
            .map(|&c| u64::from(self.counts[c * self.k + e]))
            .sum()
    }

    pub fn degree(&self, x: usize, e: usize) -> f64 {
        self.raw(x, e) as f64 / self.cs.l() as f64
    }

    /// Best edge (lowest index on ties) and runner-up score of sample `x`.
    pub fn assess(&self, x: usize) -> Assessment {
        let mut best = 0;
        let mut best_raw = 0;
        let mut runner_up_raw = 0;
        for e in 0..self.k {
            let s = self.raw(x, e);
            if e == 0 || s > best_raw {
                if e > 0 {
                    runner_up_raw = best_raw;
                }
                best = e;
                best_raw = s;
            } else if s > runner_up_raw {
                runner_up_raw = s;
            }
        }
        Assessment {
            best,
            best_raw,
            runner_up_raw,
        }
    }

    /// Assessments for all samples, in sample order.
    pub fn assess_all(&self) -> Vec<Assessment> {
        (0..self.cs.n())
            .into_par_iter()
            .with_min_len(PAR_MIN_LEN)
            .map(|x| self.assess(x))
            .collect()
    }
}

/// Belonging degree of sample `x` to an arbitrary sample set:
/// `(1/l) Σ_{c ∋ x} |c ∩ edge|`.
pub fn belonging(x: usize, edge: &[usize], cs: &ClusterSet) -> f64 {
    let mut mask = vec![false; cs.n()];
    for &y in edge {
        mask[y] = true;
    }
    let raw: usize = cs
        .membership(x)
        .iter()
        .map(|&c| cs.cluster(c).iter().filter(|&&y| mask[y]).count())
        .sum();
    raw as f64 / cs.l() as f64
}

/// Edge with the largest belonging degree for `x`; ties go to the lowest
/// index.
pub fn best_edge(x: usize, edges: &HyperEdgeSet, cs: &ClusterSet) -> usize {
    BelongingTable::new(cs, edges).assess(x).best
}

/// Gap between the largest and second-largest belonging degree of `x`. With
/// a single edge the second largest is taken as 0.
pub fn confidence(x: usize, edges: &HyperEdgeSet, cs: &ClusterSet) -> f64 {
    let a = BelongingTable::new(cs, edges).assess(x);
    a.margin_raw() as f64 / cs.l() as f64
}

/// Sum of each sample's `l`-scaled belonging to the edge that holds it.
pub(crate) fn held_raw_total(table: &BelongingTable<'_>, edges: &HyperEdgeSet) -> u64 {
    edges
        .edges()
        .iter()
        .enumerate()
        .map(|(e, edge)| edge.iter().map(|&x| table.raw(x, e)).sum::<u64>())
        .sum()
}

/// Adjustment loss `Σ_x (n − b(x, edge holding x))` of a covering edge set.
pub fn adjust_loss(edges: &HyperEdgeSet, cs: &ClusterSet) -> Result<f64> {
    if !edges.is_full_cover() {
        return Err(Error::IncompleteCover {
            uncovered: edges.n() - edges.assigned_count(),
            n: edges.n(),
        });
    }
    let table = BelongingTable::new(cs, edges);
    Ok(scaled_loss(
        cs,
        edges.assigned_count(),
        held_raw_total(&table, edges),
    ))
}

/// `Σ_{x assigned} n − raw_total / l`, evaluated as one rounding.
pub(crate) fn scaled_loss(cs: &ClusterSet, assigned: usize, raw_total: u64) -> f64 {
    let l = cs.l() as u64;
    let numerator = (cs.n() as u64) * (assigned as u64) * l - raw_total;
    numerator as f64 / l as f64
}

/// Quality of one edge, `Σ_{x ∈ e} b(x, e)`, via the identity
/// `Q(e) = (1/l) Σ_c |c ∩ e|²`.
pub fn edge_quality(edge: &[usize], cs: &ClusterSet) -> f64 {
    let mut counts = vec![0u64; cs.n_clusters()];
    for &x in edge {
        for &c in cs.membership(x) {
            counts[c] += 1;
        }
    }
    let sq: u64 = counts.iter().map(|v| v * v).sum();
    sq as f64 / cs.l() as f64
}

/// Per-edge form of the loss, `Σ_i (n |e_i| − Q(e_i))`. Defined for partial
/// covers too, where it sums over the assigned samples only.
pub fn edge_set_loss(edges: &HyperEdgeSet, cs: &ClusterSet) -> f64 {
    let n = cs.n() as f64;
    edges
        .edges()
        .iter()
        .map(|e| n * e.len() as f64 - edge_quality(e, cs))
        .sum()
}
