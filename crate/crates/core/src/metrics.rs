//! External validity indices: NMI (geometric-mean normalization) and ARI.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Dense contingency table of two labelings.
#[derive(Debug, Clone)]
struct Contingency {
    n: usize,
    rows: Vec<usize>,
    cols: Vec<usize>,
    cells: Vec<usize>,
}

fn dense<T: Ord + Copy>(labels: &[T]) -> (Vec<usize>, usize) {
    let mut ids = BTreeMap::new();
    for &v in labels {
        let next = ids.len();
        ids.entry(v).or_insert(next);
    }
    (labels.iter().map(|v| ids[v]).collect(), ids.len())
}

impl Contingency {
    fn new<A: Ord + Copy, B: Ord + Copy>(a: &[A], b: &[B]) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::LengthMismatch {
                left: a.len(),
                right: b.len(),
            });
        }
        let (da, ka) = dense(a);
        let (db, kb) = dense(b);
        let mut rows = vec![0; ka];
        let mut cols = vec![0; kb];
        let mut cells = vec![0; ka * kb];
        for (&i, &j) in da.iter().zip(&db) {
            rows[i] += 1;
            cols[j] += 1;
            cells[i * kb + j] += 1;
        }
        Ok(Self {
            n: a.len(),
            rows,
            cols,
            cells,
        })
    }
}

fn entropy(counts: &[usize], n: f64) -> f64 {
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Normalized mutual information `I(a; b) / sqrt(H(a) H(b))`.
///
/// Labelings that agree up to relabeling score exactly 1 (including two
/// single-cluster labelings); a single-cluster labeling against a non-trivial
/// one scores 0.
pub fn nmi<A: Ord + Copy, B: Ord + Copy>(a: &[A], b: &[B]) -> Result<f64> {
    let t = Contingency::new(a, b)?;
    if t.n == 0 {
        return Err(Error::TooFewSamples {
            needed: 1,
            found: 0,
        });
    }
    let n = t.n as f64;
    let ha = entropy(&t.rows, n);
    let hb = entropy(&t.cols, n);
    // Equal partitions up to relabeling: one non-empty cell per row and
    // column. Exact, rather than a ratio of separately rounded logs.
    let nonzero = t.cells.iter().filter(|&&c| c > 0).count();
    if nonzero == t.rows.len() && nonzero == t.cols.len() {
        return Ok(1.0);
    }
    if ha == 0.0 || hb == 0.0 {
        return Ok(0.0);
    }
    let kb = t.cols.len();
    let mut mi = 0.0;
    for (i, &ri) in t.rows.iter().enumerate() {
        for (j, &cj) in t.cols.iter().enumerate() {
            let nij = t.cells[i * kb + j];
            if nij > 0 {
                let nij = nij as f64;
                mi += nij / n * (n * nij / (ri as f64 * cj as f64)).ln();
            }
        }
    }
    Ok((mi / (ha * hb).sqrt()).clamp(0.0, 1.0))
}

fn pairs(c: usize) -> i128 {
    let c = c as i128;
    c * (c - 1) / 2
}

/// Adjusted Rand index under the permutation model.
///
/// Evaluated as one ratio of exact integer pair counts. When the expected and
/// maximal index coincide (both labelings are all one cluster or all
/// singletons) the labelings are identical and score 1.
pub fn ari<A: Ord + Copy, B: Ord + Copy>(a: &[A], b: &[B]) -> Result<f64> {
    let t = Contingency::new(a, b)?;
    if t.n < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            found: t.n,
        });
    }
    let index: i128 = t.cells.iter().map(|&c| pairs(c)).sum();
    let sum_a: i128 = t.rows.iter().map(|&c| pairs(c)).sum();
    let sum_b: i128 = t.cols.iter().map(|&c| pairs(c)).sum();
    let total = pairs(t.n);
    // (index - E) / (max - E) with E = sum_a sum_b / total, max = (sum_a + sum_b) / 2
    let numerator = 2 * (index * total - sum_a * sum_b);
    let denominator = (sum_a + sum_b) * total - 2 * sum_a * sum_b;
    if denominator == 0 {
        return Ok(1.0);
    }
    Ok(numerator as f64 / denominator as f64)
}
