//! k-HyperEdge adjustment: synchronous reassignment of every sample to its
//! highest-belonging edge, repeated until the loss settles.
//!
//! With `F(E) = Σ_e Σ_c |c ∩ e|²` the loss is `n² − F(E)/l` for a full
//! cover. `F` is a convex quadratic in the sample-to-edge indicator matrix
//! whose gradient entry for `(x, e)` is twice the raw belonging of `x` to `e`.
//! Moving every sample to an argmax edge (or leaving it where it was) can
//! only raise the linearization of `F`, hence never raises the loss. The
//! empty-edge rescue below keeps that property because a rescued sample goes
//! back to the edge it held in the previous step.

use serde::Serialize;

use crate::ensemble::{held_raw_total, scaled_loss, BelongingTable, ClusterSet, HyperEdgeSet};
use crate::error::{Error, Result};

pub const DEFAULT_MAX_ITERS: usize = 100;

/// Losses closer than this are treated as equal.
pub const LOSS_TOLERANCE: f64 = 1e-9;

/// Why the adjustment loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// A step reproduced the previous edge set.
    Stable,
    /// The loss did not change although some samples moved.
    LossConverged,
    MaxIters,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adjustment {
    pub edges: HyperEdgeSet,
    /// Loss of the starting edge set followed by the loss after every step.
    pub loss_trace: Vec<f64>,
    pub iterations: usize,
    pub stop: StopReason,
    /// Edges that a step would have emptied and that were rescued.
    pub rescued: usize,
}

fn check_cover(cs: &ClusterSet, edges: &HyperEdgeSet) -> Result<()> {
    if edges.n() != cs.n() {
        return Err(Error::InvalidArgument(format!(
            "edge set spans {} samples, cluster set has {}",
            edges.n(),
            cs.n()
        )));
    }
    if !edges.is_full_cover() {
        return Err(Error::IncompleteCover {
            uncovered: edges.n() - edges.assigned_count(),
            n: edges.n(),
        });
    }
    Ok(())
}

/// One synchronous reassignment step with empty-edge rescue.
pub fn adjust_step(cs: &ClusterSet, current: &HyperEdgeSet) -> Result<HyperEdgeSet> {
    check_cover(cs, current)?;
    let table = BelongingTable::new(cs, current);
    Ok(step(&table, current).0)
}

/// Next edge set and the number of rescued edges.
fn step(table: &BelongingTable<'_>, current: &HyperEdgeSet) -> (HyperEdgeSet, usize) {
    let k = current.k();
    let previous = current.assignment();
    let assessments = table.assess_all();
    let mut next: Vec<usize> = assessments.iter().map(|a| a.best).collect();

    let mut sizes = vec![0usize; k];
    for &e in &next {
        sizes[e] += 1;
    }
    let mut pinned = vec![false; next.len()];
    let mut rescued = 0;
    // An edge emptied by the step gets back the former member whose best
    // score is closest to its score for that edge. Pinned samples return to
    // their previous edge, which may empty another edge in turn.
    while let Some(empty) = (0..k).find(|&e| sizes[e] == 0 && !current.edge(e).is_empty()) {
        let pick = current
            .edge(empty)
            .iter()
            .copied()
            .filter(|&x| !pinned[x])
            .min_by_key(|&x| (assessments[x].best_raw - table.raw(x, empty), x))
            .expect("an emptied edge has former members that have not been pinned");
        sizes[next[pick]] -= 1;
        next[pick] = empty;
        sizes[empty] += 1;
        pinned[pick] = true;
        rescued += 1;
        debug_assert_eq!(previous[pick], Some(empty));
    }

    let assignment: Vec<_> = next.into_iter().map(Some).collect();
    (HyperEdgeSet::from_assignment(&assignment, k), rescued)
}

/// Iterates [`adjust_step`] from a covering edge set.
///
/// Stops when a step reproduces the previous edge set, when two consecutive
/// losses agree within [`LOSS_TOLERANCE`], or after `max_iters` steps.
pub fn adjust(cs: &ClusterSet, start: &HyperEdgeSet, max_iters: usize) -> Result<Adjustment> {
    check_cover(cs, start)?;
    if max_iters == 0 {
        return Err(Error::InvalidArgument(
            "max_iters must be at least 1".into(),
        ));
    }
    let n = cs.n();
    let loss_of = |table: &BelongingTable<'_>, edges: &HyperEdgeSet| {
        scaled_loss(cs, n, held_raw_total(table, edges))
    };

    let mut edges = start.clone();
    let mut table = BelongingTable::new(cs, &edges);
    let mut loss = loss_of(&table, &edges);
    let mut loss_trace = vec![loss];
    let mut rescued = 0;
    let mut iterations = 0;
    let stop = loop {
        if iterations == max_iters {
            break StopReason::MaxIters;
        }
        let (next, r) = step(&table, &edges);
        iterations += 1;
        rescued += r;
        let next_table = BelongingTable::new(cs, &next);
        let next_loss = loss_of(&next_table, &next);
        loss_trace.push(next_loss);
        let same = next == edges;
        let flat = (next_loss - loss).abs() <= LOSS_TOLERANCE;
        edges = next;
        table = next_table;
        loss = next_loss;
        if same {
            break StopReason::Stable;
        }
        if flat {
            break StopReason::LossConverged;
        }
    };

    Ok(Adjustment {
        edges,
        loss_trace,
        iterations,
        stop,
        rescued,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{adjust_loss, EnsembleBase};

    fn t1() -> ClusterSet {
        let base =
            EnsembleBase::from_rows(&[[1, 1], [1, 1], [1, 2], [2, 2], [2, 2], [2, 1]]).unwrap();
        ClusterSet::from_base(&base)
    }

    #[test]
    fn t1_diffused_set_is_a_fixed_point() {
        let cs = t1();
        let e = HyperEdgeSet::new(6, vec![vec![0, 1, 2, 5], vec![3, 4]]).unwrap();
        assert_eq!(adjust_step(&cs, &e).unwrap(), e);
        let a = adjust(&cs, &e, 100).unwrap();
        assert_eq!(a.edges, e);
        assert_eq!(a.loss_trace, vec![22.0, 22.0]);
        assert_eq!(a.iterations, 1);
        assert_eq!(a.stop, StopReason::Stable);
    }

    #[test]
    fn consensus_instance() {
        let base = EnsembleBase::from_rows(&[[0, 0], [0, 0], [1, 1], [1, 1]]).unwrap();
        let cs = ClusterSet::from_base(&base);
        let e = HyperEdgeSet::new(4, vec![vec![0, 1], vec![2, 3]]).unwrap();
        let a = adjust(&cs, &e, 100).unwrap();
        assert_eq!(a.edges, e);
        assert_eq!(a.loss_trace, vec![8.0, 8.0]);
    }

    #[test]
    fn misplaced_sample_moves_back_and_loss_drops() {
        let cs = t1();
        // Sample 0 swapped out of the converged solution.
        let e = HyperEdgeSet::new(6, vec![vec![1, 2, 5], vec![0, 3, 4]]).unwrap();
        let next = adjust_step(&cs, &e).unwrap();
        assert_eq!(next.edges(), &[vec![0, 1, 2, 5], vec![3, 4]]);
        assert!(adjust_loss(&next, &cs).unwrap() < adjust_loss(&e, &cs).unwrap());
    }

    #[test]
    fn single_edge_is_immediately_stable() {
        let cs = t1();
        let e = HyperEdgeSet::new(6, vec![(0..6).collect()]).unwrap();
        let a = adjust(&cs, &e, 100).unwrap();
        assert!(a.loss_trace.len() <= 2);
        assert!(a.loss_trace.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn rescue_keeps_every_edge_populated() {
        // One cluster spans everything: every sample ties across the two
        // edges and the plain argmax would empty edge 1.
        let base = EnsembleBase::from_columns(&[[0u64, 0, 0, 0]]).unwrap();
        let cs = ClusterSet::from_base(&base);
        let e = HyperEdgeSet::new(4, vec![vec![0, 1], vec![2, 3]]).unwrap();
        let a = adjust(&cs, &e, 100).unwrap();
        assert_eq!(a.edges.empty_edges(), 0);
        assert!(a.rescued >= 1);
        assert!(a
            .loss_trace
            .windows(2)
            .all(|w| w[1] <= w[0] + LOSS_TOLERANCE));
    }

    #[test]
    fn partial_cover_is_rejected() {
        let cs = t1();
        let e = HyperEdgeSet::new(6, vec![vec![0, 1], vec![3, 4]]).unwrap();
        assert!(matches!(
            adjust(&cs, &e, 10),
            Err(Error::IncompleteCover { .. })
        ));
        let full = HyperEdgeSet::new(6, vec![(0..6).collect()]).unwrap();
        assert!(adjust(&cs, &full, 0).is_err());
    }
}
