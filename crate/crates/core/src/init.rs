//! k-HyperEdge initialization: pick `k` medoid clusters among the base
//! clusters, then strip their pairwise overlaps.

use serde::Serialize;

use crate::ensemble::{ClusterSet, HyperEdgeSet};
use crate::error::{Error, Result};

/// Asymmetric dissimilarity between base clusters:
/// `cost(m, j) = 1 − |c_m ∩ c_j| / |c_j|`.
///
/// Row `m` is the candidate medoid, column `j` the cluster it represents.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    size: usize,
    cost: Vec<f64>,
}

impl CostMatrix {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, medoid: usize, cluster: usize) -> f64 {
        self.cost[medoid * self.size + cluster]
    }

    /// Builds a matrix from explicit rows. Used by tests and callers that
    /// bring their own dissimilarities.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let size = rows.len();
        let mut cost = Vec::with_capacity(size * size);
        for r in rows {
            if r.len() != size {
                return Err(Error::InvalidArgument("cost matrix must be square".into()));
            }
            cost.extend_from_slice(r);
        }
        Ok(Self { size, cost })
    }

    /// Initialization loss of a medoid set: every cluster is charged the cost
    /// of its cheapest medoid.
    pub fn loss(&self, medoids: &[usize]) -> f64 {
        (0..self.size)
            .map(|j| {
                medoids
                    .iter()
                    .map(|&m| self.get(m, j))
                    .fold(f64::INFINITY, f64::min)
            })
            .sum()
    }
}

/// Cost matrix of a cluster set. Pairwise intersections are accumulated per
/// sample over its `l` memberships, `O(n·l²)` in total.
pub fn pairwise_cost_matrix(cs: &ClusterSet) -> CostMatrix {
    let size = cs.n_clusters();
    let mut inter = vec![0u32; size * size];
    for x in 0..cs.n() {
        let mem = cs.membership(x);
        for &a in mem {
            for &b in mem {
                inter[a * size + b] += 1;
            }
        }
    }
    let mut cost = vec![0.0; size * size];
    for m in 0..size {
        for j in 0..size {
            cost[m * size + j] = if m == j {
                0.0
            } else {
                1.0 - f64::from(inter[m * size + j]) / cs.cluster(j).len() as f64
            };
        }
    }
    CostMatrix { size, cost }
}

/// Outcome of the medoid search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Medoids {
    /// Medoid cluster ids, in selection order.
    pub indices: Vec<usize>,
    pub loss: f64,
    /// Loss after the greedy BUILD phase, before any swap.
    pub build_loss: f64,
    pub swaps: usize,
}

const SWAP_EPS: f64 = 1e-12;

/// PAM k-medoids: greedy BUILD followed by first-improvement SWAP.
///
/// Both phases are deterministic (ties go to the lowest index), so `seed` is
/// accepted for interface stability only.
pub fn kmedoids(costs: &CostMatrix, k: usize, _seed: u64) -> Result<Medoids> {
    let size = costs.size();
    if k == 0 || k > size {
        return Err(Error::InvalidK {
            k,
            n_clusters: size,
        });
    }

    // BUILD
    let mut medoids = Vec::with_capacity(k);
    let mut is_medoid = vec![false; size];
    let mut nearest = vec![f64::INFINITY; size];
    for _ in 0..k {
        let mut best = None;
        let mut best_loss = f64::INFINITY;
        for cand in (0..size).filter(|&c| !is_medoid[c]) {
            let loss: f64 = (0..size).map(|j| nearest[j].min(costs.get(cand, j))).sum();
            if loss < best_loss - SWAP_EPS || best.is_none() {
                best = Some(cand);
                best_loss = loss;
            }
        }
        let chosen = best.expect("k ≤ size leaves a candidate");
        is_medoid[chosen] = true;
        medoids.push(chosen);
        for (j, d) in nearest.iter_mut().enumerate() {
            *d = d.min(costs.get(chosen, j));
        }
    }
    let build_loss = costs.loss(&medoids);

    // SWAP
    let mut loss = build_loss;
    let mut swaps = 0;
    let mut improved = true;
    while improved {
        improved = false;
        let (near_slot, near_d, second_d) = nearest_two(costs, &medoids);
        'slots: for slot in 0..k {
            for cand in 0..size {
                if is_medoid[cand] {
                    continue;
                }
                let trial: f64 = (0..size)
                    .map(|j| {
                        let keep = if near_slot[j] == slot {
                            second_d[j]
                        } else {
                            near_d[j]
                        };
                        keep.min(costs.get(cand, j))
                    })
                    .sum();
                if trial < loss - SWAP_EPS {
                    is_medoid[medoids[slot]] = false;
                    is_medoid[cand] = true;
                    medoids[slot] = cand;
                    loss = costs.loss(&medoids);
                    swaps += 1;
                    improved = true;
                    break 'slots;
                }
            }
        }
    }

    Ok(Medoids {
        indices: medoids,
        loss,
        build_loss,
        swaps,
    })
}

/// Per cluster: slot of the nearest medoid, its cost, and the cost of the
/// second nearest (infinite when `k = 1`).
fn nearest_two(costs: &CostMatrix, medoids: &[usize]) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
    let size = costs.size();
    let mut slot = vec![0; size];
    let mut first = vec![f64::INFINITY; size];
    let mut second = vec![f64::INFINITY; size];
    for j in 0..size {
        for (s, &m) in medoids.iter().enumerate() {
            let d = costs.get(m, j);
            if d < first[j] {
                second[j] = first[j];
                first[j] = d;
                slot[j] = s;
            } else if d < second[j] {
                second[j] = d;
            }
        }
    }
    (slot, first, second)
}

/// Removes every pairwise intersection from both edges involved.
///
/// Pairs are visited in ascending `(i, j)`, `i < j`, against the edges as
/// already shrunk by earlier pairs. Edges emptied this way are kept.
pub fn remove_overlaps(n: usize, edges: &[Vec<usize>]) -> Result<HyperEdgeSet> {
    let mut sets: Vec<Vec<bool>> = edges
        .iter()
        .map(|e| {
            let mut mask = vec![false; n];
            for &x in e {
                if x >= n {
                    return Err(Error::SampleOutOfRange { index: x, n });
                }
                mask[x] = true;
            }
            Ok(mask)
        })
        .collect::<Result<_>>()?;
    for i in 0..sets.len() {
        let (head, tail) = sets.split_at_mut(i + 1);
        let a = &mut head[i];
        for b in tail {
            for (p, q) in a.iter_mut().zip(b.iter_mut()) {
                if *p && *q {
                    *p = false;
                    *q = false;
                }
            }
        }
    }
    let out = sets
        .into_iter()
        .map(|mask| (0..n).filter(|&x| mask[x]).collect())
        .collect();
    HyperEdgeSet::new(n, out)
}

/// Makes `edges` disjoint by letting them claim samples smallest first (ties
/// in input order); each keeps only samples no earlier edge claimed. Output
/// edges stay in input order.
pub fn claim_disjoint(n: usize, edges: &[Vec<usize>]) -> Result<HyperEdgeSet> {
    let mut order: Vec<usize> = (0..edges.len()).collect();
    order.sort_by_key(|&i| (edges[i].len(), i));
    let mut claimed = vec![false; n];
    let mut out = vec![Vec::new(); edges.len()];
    for i in order {
        for &x in &edges[i] {
            if x >= n {
                return Err(Error::SampleOutOfRange { index: x, n });
            }
            if !claimed[x] {
                claimed[x] = true;
                out[i].push(x);
            }
        }
    }
    HyperEdgeSet::new(n, out)
}

/// Result of the initialization stage.
#[derive(Debug, Clone, PartialEq)]
pub struct Initialization {
    pub medoids: Medoids,
    pub edges: HyperEdgeSet,
    /// Pairwise removal left every edge empty, so the edges were rebuilt by
    /// [`claim_disjoint`].
    pub fallback: bool,
}

/// Runs k-medoids on the base clusters and turns the chosen medoids into
/// disjoint initial edges.
pub fn initialize(cs: &ClusterSet, k: usize, seed: u64) -> Result<Initialization> {
    if k == 0 || k > cs.n_clusters() {
        return Err(Error::InvalidK {
            k,
            n_clusters: cs.n_clusters(),
        });
    }
    let costs = pairwise_cost_matrix(cs);
    let medoids = kmedoids(&costs, k, seed)?;
    let chosen: Vec<Vec<usize>> = medoids
        .indices
        .iter()
        .map(|&m| cs.cluster(m).to_vec())
        .collect();
    let mut edges = remove_overlaps(cs.n(), &chosen)?;
    // Happens when every sample lies in two or more medoids, e.g. medoids
    // drawn from two complete base partitions.
    let fallback = edges.assigned_count() == 0 && cs.n() > 0;
    if fallback {
        edges = claim_disjoint(cs.n(), &chosen)?;
    }
    Ok(Initialization {
        medoids,
        edges,
        fallback,
    })
}
