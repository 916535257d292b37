//! k-HyperEdge diffusion: grow a partial, disjoint edge set into a full cover
//! by admitting the most confident samples first.

use serde::{Deserialize, Serialize};

use crate::ensemble::{edge_set_loss, Assessment, BelongingTable, ClusterSet, HyperEdgeSet};
use crate::error::{Error, Result};

/// How each diffusion round treats samples that are already assigned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiffusionMode {
    /// Every round ranks all samples and rebuilds the edges from the top
    /// `n_s`, so assigned samples may move or drop out.
    #[default]
    Rebuild,
    /// Assigned samples keep their edge; each round only admits the most
    /// confident unassigned samples.
    Grow,
}

impl std::str::FromStr for DiffusionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rebuild" => Ok(Self::Rebuild),
            "grow" => Ok(Self::Grow),
            other => Err(Error::InvalidArgument(format!(
                "unknown diffusion mode {other:?} (expected rebuild or grow)"
            ))),
        }
    }
}

/// Number of samples held by the edges.
pub fn assigned_count(edges: &HyperEdgeSet) -> usize {
    edges.assigned_count()
}

/// Target coverage of the next round:
/// `min(n_a + max(⌈(n − n_a)/k⌉, ⌈√n⌉), n)`.
pub fn selection_size(assigned: usize, n: usize, k: usize) -> usize {
    debug_assert!(assigned <= n && k >= 1);
    let remaining = n - assigned;
    let step = remaining.div_ceil(k).max(ceil_sqrt(n));
    (assigned + step).min(n)
}

/// Smallest integer `r` with `r² ≥ n`.
pub(crate) fn ceil_sqrt(n: usize) -> usize {
    let r = floor_sqrt(n);
    if r * r == n {
        r
    } else {
        r + 1
    }
}

/// Largest integer `r` with `r² ≤ n`.
pub(crate) fn floor_sqrt(n: usize) -> usize {
    let mut r = (n as f64).sqrt() as usize;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// Outcome of the diffusion stage.
#[derive(Debug, Clone, PartialEq)]
pub struct Diffusion {
    pub edges: HyperEdgeSet,
    pub rounds: usize,
    /// Per-edge loss of the edge set after each round (partial covers count
    /// assigned samples only).
    pub loss_trace: Vec<f64>,
    /// Coverage after each round.
    pub coverage_trace: Vec<usize>,
    /// Empty edges refilled after full coverage was reached.
    pub refilled: usize,
}

/// Samples ordered by descending confidence, ascending index on ties.
fn confidence_order(assessments: &[Assessment]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..assessments.len()).collect();
    order.sort_by(|&a, &b| {
        assessments[b]
            .margin_raw()
            .cmp(&assessments[a].margin_raw())
            .then(a.cmp(&b))
    });
    order
}

/// Diffuses `initial` until every sample is assigned.
///
/// Each round recomputes the best edge and confidence of every sample against
/// the current edges, then admits samples in confidence order up to the
/// target coverage. Once covered, edges left empty are each given the least
/// confident sample of a multi-member edge, so that `k ≤ n` always yields `k`
/// non-empty edges.
pub fn diffuse(cs: &ClusterSet, initial: &HyperEdgeSet, mode: DiffusionMode) -> Result<Diffusion> {
    let n = cs.n();
    let k = initial.k();
    if initial.n() != n {
        return Err(Error::InvalidArgument(format!(
            "edge set spans {} samples, cluster set has {n}",
            initial.n()
        )));
    }
    if k == 0 {
        return Err(Error::InvalidK {
            k,
            n_clusters: cs.n_clusters(),
        });
    }

    let mut assignment = initial.assignment();
    let mut edges = initial.clone();
    let mut assigned = edges.assigned_count();
    let mut rounds = 0;
    let mut loss_trace = Vec::new();
    let mut coverage_trace = Vec::new();

    if assigned == 0 && n > 0 {
        return Err(Error::DegenerateInitialization);
    }

    while assigned < n {
        edges = diffusion_round(cs, &edges, mode);
        assignment = edges.assignment();
        let now = edges.assigned_count();
        // n_s > n_a whenever n_a < n, and both modes place exactly n_s samples.
        debug_assert!(now > assigned);
        assigned = now;
        rounds += 1;
        loss_trace.push(edge_set_loss(&edges, cs));
        coverage_trace.push(assigned);
    }

    let refilled = refill_empty_edges(cs, &mut assignment, k);
    if refilled > 0 {
        edges = HyperEdgeSet::from_assignment(&assignment, k);
    }

    Ok(Diffusion {
        edges,
        rounds,
        loss_trace,
        coverage_trace,
        refilled,
    })
}

/// One diffusion round: ranks samples by confidence against `edges` and
/// places the top [`selection_size`] of them at their best edge.
pub fn diffusion_round(cs: &ClusterSet, edges: &HyperEdgeSet, mode: DiffusionMode) -> HyperEdgeSet {
    let k = edges.k();
    let assigned = edges.assigned_count();
    let mut assignment = edges.assignment();
    let table = BelongingTable::new(cs, edges);
    let assessments = table.assess_all();
    let target = selection_size(assigned, cs.n(), k);
    let order = confidence_order(&assessments);

    match mode {
        DiffusionMode::Rebuild => {
            assignment.iter_mut().for_each(|a| *a = None);
            for &x in order.iter().take(target) {
                assignment[x] = Some(assessments[x].best);
            }
        }
        DiffusionMode::Grow => {
            let admit: Vec<usize> = order
                .into_iter()
                .filter(|&x| assignment[x].is_none())
                .take(target - assigned)
                .collect();
            for x in admit {
                assignment[x] = Some(assessments[x].best);
            }
        }
    }
    HyperEdgeSet::from_assignment(&assignment, k)
}

/// Moves one sample into each empty edge, taking the least confident sample
/// among edges with at least two members (lowest index on ties). Returns how
/// many edges were filled; stops early when no donor edge exists.
fn refill_empty_edges(cs: &ClusterSet, assignment: &mut [Option<usize>], k: usize) -> usize {
    let mut filled = 0;
    loop {
        let edges = HyperEdgeSet::from_assignment(assignment, k);
        let Some(empty) = edges.edges().iter().position(Vec::is_empty) else {
            break;
        };
        let sizes: Vec<usize> = edges.edges().iter().map(Vec::len).collect();
        let table = BelongingTable::new(cs, &edges);
        let donor = (0..assignment.len())
            .filter(|&x| assignment[x].is_some_and(|e| sizes[e] >= 2))
            .min_by_key(|&x| (table.assess(x).margin_raw(), x));
        let Some(x) = donor else { break };
        assignment[x] = Some(empty);
        filled += 1;
    }
    filled
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::EnsembleBase;

    fn t1() -> ClusterSet {
        let base =
            EnsembleBase::from_rows(&[[1, 1], [1, 1], [1, 2], [2, 2], [2, 2], [2, 1]]).unwrap();
        ClusterSet::from_base(&base)
    }

    #[test]
    fn selection_size_examples() {
        assert_eq!(selection_size(40, 100, 3), 60);
        assert_eq!(selection_size(9, 10, 2), 10);
        assert_eq!(selection_size(10, 10, 4), 10);
        assert_eq!(selection_size(0, 1, 1), 1);
    }

    #[test]
    fn integer_square_roots() {
        for n in 0..2000 {
            let f = floor_sqrt(n);
            assert!(f * f <= n && (f + 1) * (f + 1) > n);
            let c = ceil_sqrt(n);
            assert!(c * c >= n && (c == 0 || (c - 1) * (c - 1) < n));
        }
    }

    #[test]
    fn assigned_count_examples() {
        let e = HyperEdgeSet::new(6, vec![vec![0, 1], vec![3, 4]]).unwrap();
        assert_eq!(assigned_count(&e), 4);
        let e = HyperEdgeSet::new(6, vec![vec![], vec![]]).unwrap();
        assert_eq!(assigned_count(&e), 0);
        let e = HyperEdgeSet::new(6, vec![vec![0, 1, 2], vec![3, 4, 5]]).unwrap();
        assert_eq!(assigned_count(&e), 6);
    }

    #[test]
    fn t1_single_round() {
        let cs = t1();
        let init = HyperEdgeSet::new(6, vec![vec![0, 1], vec![3, 4]]).unwrap();
        for mode in [DiffusionMode::Rebuild, DiffusionMode::Grow] {
            let d = diffuse(&cs, &init, mode).unwrap();
            assert_eq!(d.rounds, 1);
            assert_eq!(d.edges.edges(), &[vec![0, 1, 2, 5], vec![3, 4]]);
            assert_eq!(d.coverage_trace, vec![6]);
        }
    }

    #[test]
    fn full_cover_is_untouched() {
        let cs = t1();
        let init = HyperEdgeSet::new(6, vec![vec![0, 1, 2], vec![3, 4, 5]]).unwrap();
        let d = diffuse(&cs, &init, DiffusionMode::Rebuild).unwrap();
        assert_eq!(d.rounds, 0);
        assert_eq!(d.edges, init);
    }

    #[test]
    fn consensus_clusters_are_a_fixed_point() {
        let col = [0u64, 0, 0, 1, 1, 2, 2, 2, 2];
        let base = EnsembleBase::from_columns(&[col; 3]).unwrap();
        let cs = ClusterSet::from_base(&base);
        let init = HyperEdgeSet::new(9, vec![vec![0, 1, 2], vec![3, 4], vec![5, 6, 7, 8]]).unwrap();
        let d = diffuse(&cs, &init, DiffusionMode::Rebuild).unwrap();
        assert_eq!(d.edges, init);
    }

    #[test]
    fn all_empty_edges_are_rejected() {
        let cs = t1();
        let init = HyperEdgeSet::new(6, vec![vec![], vec![]]).unwrap();
        assert_eq!(
            diffuse(&cs, &init, DiffusionMode::Rebuild),
            Err(Error::DegenerateInitialization)
        );
    }

    #[test]
    fn empty_edge_is_refilled() {
        let cs = t1();
        let init = HyperEdgeSet::new(6, vec![vec![0, 1], vec![]]).unwrap();
        let d = diffuse(&cs, &init, DiffusionMode::Rebuild).unwrap();
        assert!(d.edges.is_full_cover());
        assert_eq!(d.edges.empty_edges(), 0);
        assert_eq!(d.refilled, 1);
    }

    #[test]
    fn rebuild_can_move_assigned_samples() {
        // One column splits {0..3} | {4..7}; sample 3 starts in the wrong
        // edge and leaves it on the first rebuild.
        let base = EnsembleBase::from_columns(&[[0u64, 0, 0, 0, 1, 1, 1, 1]]).unwrap();
        let cs = ClusterSet::from_base(&base);
        let init = HyperEdgeSet::new(8, vec![vec![0, 1], vec![3, 4, 5]]).unwrap();
        let d = diffuse(&cs, &init, DiffusionMode::Rebuild).unwrap();
        assert_eq!(d.edges.edges(), &[vec![0, 1, 2, 3], vec![4, 5, 6, 7]]);
        let g = diffuse(&cs, &init, DiffusionMode::Grow).unwrap();
        assert!(g.edges.edge(1).contains(&3));
    }
}
