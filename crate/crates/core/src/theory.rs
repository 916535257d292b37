//! Executable checks of the loss geometry: the edge distance and potential
//! used in the approximation argument, the single-move property of argmax
//! assignment, and a brute-force local-optimum oracle.
//!
//! Single-sample moves have a closed form. Moving `x` from edge `i` to edge
//! `j` changes the adjustment loss by
//!
//! ```text
//! ΔL = 2 (b(x, e_i) − b(x, e_j) − 1)
//! ```
//!
//! with both degrees measured before the move (`x ∈ e_i`). The `− 1` is the
//! contribution of `x` to its own edge. A sample at its plain argmax
//! ([`ArgmaxRule::InPlace`]) therefore can still lower the loss by moving
//! whenever its best and runner-up degrees are less than 1 apart. Measuring
//! the argmax with `x` taken out of its edge ([`ArgmaxRule::LeaveOneOut`])
//! makes every such move non-improving.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::adjust::{adjust, StopReason, LOSS_TOLERANCE};
use crate::ensemble::{adjust_loss, BelongingTable, ClusterSet, EnsembleBase, HyperEdgeSet};
use crate::error::{Error, Result};
use crate::pipeline::{cehm_clusters, Config};

/// Largest instance [`local_optimum_oracle`] accepts.
pub const ORACLE_MAX_N: usize = 20;

/// `n − |e_i ∩ e_j|`.
pub fn edge_dist(e_i: &[usize], e_j: &[usize], n: usize) -> f64 {
    let mut mask = vec![false; n];
    for &x in e_i {
        mask[x] = true;
    }
    let common = e_j.iter().filter(|&&x| mask[x]).count();
    (n - common) as f64
}

/// `φ(e_i; e_j) = Σ_{x ∈ e_j} (n − b(x, e_i))`.
pub fn phi(e_i: &[usize], e_j: &[usize], cs: &ClusterSet) -> f64 {
    let mut counts = vec![0u64; cs.n_clusters()];
    for &x in e_i {
        for &c in cs.membership(x) {
            counts[c] += 1;
        }
    }
    let l = cs.l() as f64;
    let n = cs.n() as f64;
    e_j.iter()
        .map(|&x| {
            let raw: u64 = cs.membership(x).iter().map(|&c| counts[c]).sum();
            n - raw as f64 / l
        })
        .sum()
}

/// Which argmax a sample must sit at for a move to be checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArgmaxRule {
    /// Belonging measured on the edge set as is, the rule used by the
    /// diffusion and adjustment stages.
    #[default]
    InPlace,
    /// Belonging measured with the sample removed from its own edge.
    LeaveOneOut,
}

impl std::str::FromStr for ArgmaxRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "in-place" => Ok(Self::InPlace),
            "leave-one-out" => Ok(Self::LeaveOneOut),
            other => Err(Error::InvalidArgument(format!(
                "unknown argmax rule {other:?} (expected in-place or leave-one-out)"
            ))),
        }
    }
}

/// Raw scores of `x` against every edge under `rule`. Under leave-one-out the
/// sample's own contribution (`l`) is taken off its current edge.
fn scores(
    table: &BelongingTable<'_>,
    cs: &ClusterSet,
    x: usize,
    own: usize,
    rule: ArgmaxRule,
) -> Vec<u64> {
    (0..table.k())
        .map(|e| {
            let s = table.raw(x, e);
            if rule == ArgmaxRule::LeaveOneOut && e == own {
                s - cs.l() as u64
            } else {
                s
            }
        })
        .collect()
}

fn is_at_argmax(scores: &[u64], own: usize, rule: ArgmaxRule) -> bool {
    match rule {
        // Lowest index wins ties, matching `best_edge`.
        ArgmaxRule::InPlace => scores
            .iter()
            .enumerate()
            .all(|(e, &s)| s < scores[own] || (s == scores[own] && e >= own)),
        ArgmaxRule::LeaveOneOut => scores.iter().all(|&s| s <= scores[own]),
    }
}

/// Edge set with sample `x` moved to edge `to`.
pub fn move_sample(edges: &HyperEdgeSet, x: usize, to: usize) -> HyperEdgeSet {
    let mut assignment = edges.assignment();
    assignment[x] = Some(to);
    HyperEdgeSet::from_assignment(&assignment, edges.k())
}

/// A single-sample move that strictly lowered the loss.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MoveWitness {
    pub sample: usize,
    pub from: usize,
    pub to: usize,
    pub loss_before: f64,
    pub loss_after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub holds: bool,
    pub witness: Option<MoveWitness>,
}

/// Exhaustively tries every move of every sample that sits at its argmax
/// edge (under `rule`) to every other edge. Holds iff none strictly lowers
/// the adjustment loss. Samples off their argmax are skipped.
pub fn local_optimum_oracle(
    cs: &ClusterSet,
    edges: &HyperEdgeSet,
    rule: ArgmaxRule,
) -> Result<OracleReport> {
    if cs.n() > ORACLE_MAX_N {
        return Err(Error::OracleTooLarge {
            n: cs.n(),
            limit: ORACLE_MAX_N,
        });
    }
    let before = adjust_loss(edges, cs)?;
    let table = BelongingTable::new(cs, edges);
    let assignment = edges.assignment();
    for (x, own) in assignment.iter().enumerate() {
        let own = own.expect("full cover checked by adjust_loss");
        if !is_at_argmax(&scores(&table, cs, x, own, rule), own, rule) {
            continue;
        }
        for to in (0..edges.k()).filter(|&e| e != own) {
            let after = adjust_loss(&move_sample(edges, x, to), cs)?;
            if after < before - LOSS_TOLERANCE {
                return Ok(OracleReport {
                    holds: false,
                    witness: Some(MoveWitness {
                        sample: x,
                        from: own,
                        to,
                        loss_before: before,
                        loss_after: after,
                    }),
                });
            }
        }
    }
    Ok(OracleReport {
        holds: true,
        witness: None,
    })
}

/// Random label matrix: `l ∈ [2, 5]` columns, each with labels drawn
/// uniformly from `m ∈ [2, 4]` values.
pub fn random_base<R: Rng>(rng: &mut R, n: usize) -> EnsembleBase {
    let l = rng.random_range(2..=5);
    let columns: Vec<Vec<u64>> = (0..l)
        .map(|_| {
            let m = rng.random_range(2..=4u64);
            (0..n).map(|_| rng.random_range(0..m)).collect()
        })
        .collect();
    EnsembleBase::from_columns(&columns).expect("n ≥ 1 and l ≥ 2")
}

/// Subset of `0..n` with each element included with probability 1/2.
pub fn random_edge<R: Rng>(rng: &mut R, n: usize) -> Vec<usize> {
    (0..n).filter(|_| rng.random_bool(0.5)).collect()
}

/// Full cover with each sample assigned to a uniformly random edge.
pub fn random_cover<R: Rng>(rng: &mut R, n: usize, k: usize) -> HyperEdgeSet {
    let assignment: Vec<_> = (0..n).map(|_| Some(rng.random_range(0..k))).collect();
    HyperEdgeSet::from_assignment(&assignment, k)
}

/// Outcome of one randomized property suite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub trials: usize,
    pub violations: usize,
    /// Up to [`MAX_WITNESSES`] descriptions of violating trials.
    pub witnesses: Vec<String>,
}

pub const MAX_WITNESSES: usize = 5;

impl SuiteReport {
    fn new(name: &str, trials: usize) -> Self {
        Self {
            name: name.to_owned(),
            trials,
            violations: 0,
            witnesses: Vec::new(),
        }
    }

    fn record(&mut self, ok: bool, witness: impl FnOnce() -> String) {
        if !ok {
            self.violations += 1;
            if self.witnesses.len() < MAX_WITNESSES {
                self.witnesses.push(witness());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

fn suite_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// The three distance/potential inequalities, `trials` draws each:
/// the triangle inequality, its reverse form, and
/// `φ(a; b) ≥ |b|·dist(a, b) − φ(b; b)`.
pub fn inequality_suites(trials: usize, seed: u64) -> [SuiteReport; 3] {
    let mut triangle = SuiteReport::new("dist-triangle", trials);
    let mut reverse = SuiteReport::new("dist-reverse-triangle", trials);
    let mut bound = SuiteReport::new("phi-lower-bound", trials);
    let mut rng = suite_rng(seed, 1);
    for t in 0..trials {
        let n = rng.random_range(1..=40);
        let cs = ClusterSet::from_base(&random_base(&mut rng, n));
        let a = random_edge(&mut rng, n);
        let b = random_edge(&mut rng, n);
        let c = random_edge(&mut rng, n);
        let (ab, bc, ac) = (
            edge_dist(&a, &b, n),
            edge_dist(&b, &c, n),
            edge_dist(&a, &c, n),
        );
        triangle.record(ab + bc >= ac, || {
            format!(
                "trial {t}: dist(a,b)+dist(b,c) = {} < dist(a,c) = {ac}",
                ab + bc
            )
        });
        reverse.record(ab - bc <= ac, || {
            format!(
                "trial {t}: dist(a,b)-dist(b,c) = {} > dist(a,c) = {ac}",
                ab - bc
            )
        });
        let lhs = phi(&a, &b, &cs);
        let rhs = b.len() as f64 * ab - phi(&b, &b, &cs);
        bound.record(lhs >= rhs - LOSS_TOLERANCE, || {
            format!("trial {t}: phi(a;b) = {lhs} < |b|dist(a,b) - phi(b;b) = {rhs}")
        });
    }
    [triangle, reverse, bound]
}

/// Moving a sample away from its argmax edge never lowers the loss.
///
/// Each trial draws an instance with `n ≤ 50` and `k ∈ [2, 4]`, a random
/// cover, and a sample; places the sample at its argmax edge under `rule`;
/// then moves it to a random other edge and compares losses.
pub fn single_move_suite(trials: usize, seed: u64, rule: ArgmaxRule) -> SuiteReport {
    let name = match rule {
        ArgmaxRule::InPlace => "argmax-move-in-place",
        ArgmaxRule::LeaveOneOut => "argmax-move-leave-one-out",
    };
    let mut report = SuiteReport::new(name, trials);
    let mut rng = suite_rng(seed, 2);
    for t in 0..trials {
        let n = rng.random_range(2..=50);
        let cs = ClusterSet::from_base(&random_base(&mut rng, n));
        let k = rng.random_range(2..=4);
        let cover = random_cover(&mut rng, n, k);
        let x = rng.random_range(0..n);
        let own = cover.assignment()[x].expect("random cover is full");

        let table = BelongingTable::new(&cs, &cover);
        let s = scores(&table, &cs, x, own, rule);
        let best = (0..k).fold(0, |b, e| if s[e] > s[b] { e } else { b });
        let start = move_sample(&cover, x, best);

        let to = {
            let r = rng.random_range(0..k - 1);
            if r >= best {
                r + 1
            } else {
                r
            }
        };
        let moved = move_sample(&start, x, to);
        let before = adjust_loss(&start, &cs).expect("full cover");
        let after = adjust_loss(&moved, &cs).expect("full cover");
        report.record(before <= after + LOSS_TOLERANCE, || {
            format!(
                "trial {t}: n={n} l={} k={k} sample {x} edge {best}->{to}: loss {before} -> {after}",
                cs.l()
            )
        });
    }
    report
}

/// Runs the full pipeline on random instances with `n ≤ 12` and checks every
/// fixed point reached by adjustment with [`local_optimum_oracle`]. Runs that
/// stop for another reason are redrawn.
pub fn fixed_point_suite(instances: usize, seed: u64, rule: ArgmaxRule) -> SuiteReport {
    let name = match rule {
        ArgmaxRule::InPlace => "fixed-point-local-optimum-in-place",
        ArgmaxRule::LeaveOneOut => "fixed-point-local-optimum-leave-one-out",
    };
    let mut report = SuiteReport::new(name, instances);
    let mut rng = suite_rng(seed, 3);
    let mut done = 0;
    let mut t = 0;
    while done < instances {
        t += 1;
        let n = rng.random_range(4..=12);
        let cs = ClusterSet::from_base(&random_base(&mut rng, n));
        let k = rng.random_range(2..=3usize).min(cs.n_clusters());
        let Ok(result) = cehm_clusters(&cs, k, &Config::default()) else {
            continue;
        };
        if result.stop_reason != StopReason::Stable {
            continue;
        }
        done += 1;
        let oracle = local_optimum_oracle(&cs, &result.edges(), rule).expect("n ≤ 12, full cover");
        report.record(oracle.holds, || {
            let w = oracle
                .witness
                .as_ref()
                .expect("failed oracle carries a witness");
            format!(
                "draw {t}: n={n} l={} k={k} sample {} edge {}->{}: loss {} -> {}",
                cs.l(),
                w.sample,
                w.from,
                w.to,
                w.loss_before,
                w.loss_after
            )
        });
    }
    report
}

/// Adjustment from random covers never raises the loss between steps.
pub fn monotonicity_suite(trials: usize, seed: u64) -> SuiteReport {
    let mut report = SuiteReport::new("adjust-loss-monotone", trials);
    let mut rng = suite_rng(seed, 4);
    for t in 0..trials {
        let n = rng.random_range(2..=60);
        let cs = ClusterSet::from_base(&random_base(&mut rng, n));
        let k = rng.random_range(1..=5);
        let cover = random_cover(&mut rng, n, k);
        let a = adjust(&cs, &cover, 100).expect("full cover");
        let bad = a
            .loss_trace
            .windows(2)
            .position(|w| w[1] > w[0] + LOSS_TOLERANCE);
        report.record(bad.is_none(), || {
            format!("trial {t}: trace {:?}", a.loss_trace)
        });
    }
    report
}
