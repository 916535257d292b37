use std::collections::BTreeMap;

use khem_core::metrics::{ari, nmi};
use khem_core::theory::{inequality_suites, monotonicity_suite};
use khem_core::*;
use proptest::prelude::*;

/// Label matrix with `n ∈ [1, max_n]`, `l ∈ [1, 5]`, labels in `0..m`.
fn base_strategy(max_n: usize) -> impl Strategy<Value = EnsembleBase> {
    (1..=max_n, 1..=5usize, 1..=4u64).prop_flat_map(|(n, l, m)| {
        prop::collection::vec(prop::collection::vec(0..m, n), l)
            .prop_map(|cols| EnsembleBase::from_columns(&cols).unwrap())
    })
}

fn base_and_cover(max_n: usize) -> impl Strategy<Value = (EnsembleBase, HyperEdgeSet)> {
    base_strategy(max_n).prop_flat_map(|base| {
        let n = base.n();
        (1..=4usize).prop_flat_map(move |k| {
            let base = base.clone();
            prop::collection::vec(0..k, n).prop_map(move |labels| {
                (base.clone(), HyperEdgeSet::from_labels(&labels, k).unwrap())
            })
        })
    })
}

/// Belonging straight from the label matrix.
fn belonging_oracle(base: &EnsembleBase, x: usize, edge: &[usize]) -> f64 {
    let hits: usize = (0..base.l())
        .map(|j| {
            edge.iter()
                .filter(|&&y| base.row(y)[j] == base.row(x)[j])
                .count()
        })
        .sum();
    hits as f64 / base.l() as f64
}

fn per_sample_loss(base: &EnsembleBase, edges: &HyperEdgeSet) -> f64 {
    let n = base.n() as f64;
    edges
        .edges()
        .iter()
        .flat_map(|e| e.iter().map(move |&x| n - belonging_oracle(base, x, e)))
        .sum()
}

fn same_partition(a: &[usize], b: &[u64]) -> bool {
    let mut ab = BTreeMap::new();
    let mut ba = BTreeMap::new();
    a.iter()
        .zip(b)
        .all(|(x, y)| *ab.entry(x).or_insert(y) == y && *ba.entry(y).or_insert(x) == x)
}

fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

fn entropy_oracle(labels: &[u8]) -> f64 {
    let n = labels.len() as f64;
    let mut counts = BTreeMap::new();
    for l in labels {
        *counts.entry(l).or_insert(0usize) += 1;
    }
    counts
        .values()
        .map(|&c| -(c as f64 / n) * (c as f64 / n).ln())
        .sum()
}

fn nmi_oracle(a: &[u8], b: &[u8]) -> f64 {
    let n = a.len() as f64;
    let (ha, hb) = (entropy_oracle(a), entropy_oracle(b));
    if ha == 0.0 && hb == 0.0 {
        return 1.0;
    }
    if ha == 0.0 || hb == 0.0 {
        return 0.0;
    }
    let mut joint = BTreeMap::new();
    for (x, y) in a.iter().zip(b) {
        *joint.entry((x, y)).or_insert(0usize) += 1;
    }
    let count = |v: &[u8], t: u8| v.iter().filter(|&&z| z == t).count() as f64;
    let mi: f64 = joint
        .iter()
        .map(|(&(x, y), &c)| {
            let pxy = c as f64 / n;
            pxy * (pxy / (count(a, *x) / n * count(b, *y) / n)).ln()
        })
        .sum();
    mi / (ha * hb).sqrt()
}

/// ARI from all `C(n, 2)` sample pairs.
fn ari_oracle(a: &[u8], b: &[u8]) -> f64 {
    let n = a.len();
    let (mut both, mut only_a, mut only_b, mut total) = (0f64, 0f64, 0f64, 0f64);
    for i in 0..n {
        for j in i + 1..n {
            let sa = a[i] == a[j];
            let sb = b[i] == b[j];
            both += (sa && sb) as u8 as f64;
            only_a += sa as u8 as f64;
            only_b += sb as u8 as f64;
            total += 1.0;
        }
    }
    let expected = only_a * only_b / total;
    let max = (only_a + only_b) / 2.0;
    if max == expected {
        1.0
    } else {
        (both - expected) / (max - expected)
    }
}

fn relabel(v: &[u8], perm: &[u8]) -> Vec<u8> {
    v.iter().map(|&x| perm[x as usize]).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn belonging_matches_label_matrix((base, edges) in base_and_cover(30)) {
        let cs = ClusterSet::from_base(&base);
        let table = BelongingTable::new(&cs, &edges);
        for x in 0..base.n() {
            for e in 0..edges.k() {
                let want = belonging_oracle(&base, x, edges.edge(e));
                prop_assert!((belonging(x, edges.edge(e), &cs) - want).abs() < 1e-12);
                prop_assert!((table.degree(x, e) - want).abs() < 1e-12);
                prop_assert!(want >= 0.0 && want <= base.n() as f64);
            }
        }
    }

    #[test]
    fn belonging_is_additive_over_disjoint_edges((base, edges) in base_and_cover(30)) {
        let cs = ClusterSet::from_base(&base);
        let union: Vec<usize> = edges.edges().iter().flatten().copied().collect();
        for x in 0..base.n() {
            let parts: f64 = edges.edges().iter().map(|e| belonging(x, e, &cs)).sum();
            prop_assert!((belonging(x, &union, &cs) - parts).abs() < 1e-9);
        }
    }

    #[test]
    fn argmax_ignores_scaling((base, edges) in base_and_cover(30)) {
        let cs = ClusterSet::from_base(&base);
        let table = BelongingTable::new(&cs, &edges);
        for x in 0..base.n() {
            // First maximum of the unnormalized counts.
            let raw: Vec<u64> = (0..edges.k()).map(|e| table.raw(x, e)).collect();
            let want = (0..raw.len()).fold(0, |b, e| if raw[e] > raw[b] { e } else { b });
            prop_assert_eq!(best_edge(x, &edges, &cs), want);
            prop_assert!(confidence(x, &edges, &cs) >= 0.0);
        }
    }

    #[test]
    fn loss_forms_agree((base, edges) in base_and_cover(30)) {
        let cs = ClusterSet::from_base(&base);
        let direct = per_sample_loss(&base, &edges);
        let loss = adjust_loss(&edges, &cs).unwrap();
        prop_assert!((loss - direct).abs() < 1e-9);
        prop_assert!((edge_set_loss(&edges, &cs) - direct).abs() < 1e-9);
        prop_assert!(loss >= 0.0);
    }

    #[test]
    fn cluster_set_reproduces_columns(base in base_strategy(40)) {
        let cs = ClusterSet::from_base(&base);
        for j in 0..base.l() {
            let col: Vec<u64> = base.column(j).collect();
            prop_assert!(same_partition(&cs.column_partition(j), &col));
        }
        for x in 0..base.n() {
            prop_assert_eq!(cs.membership(x).len(), base.l());
        }
    }

    #[test]
    fn remove_overlaps_output_is_disjoint(
        n in 1..30usize,
        raw in prop::collection::vec(prop::collection::vec(0..30usize, 0..20), 1..6),
    ) {
        let edges: Vec<Vec<usize>> = raw
            .into_iter()
            .map(|e| e.into_iter().filter(|&x| x < n).collect())
            .collect();
        let out = remove_overlaps(n, &edges).unwrap();
        let mut seen = vec![false; n];
        for (e, orig) in out.edges().iter().zip(&edges) {
            for &x in e {
                prop_assert!(!seen[x]);
                prop_assert!(orig.contains(&x));
                seen[x] = true;
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn diffusion_covers_and_ranks(
        base in base_strategy(60),
        k in 1..=5usize,
        grow in any::<bool>(),
    ) {
        let cs = ClusterSet::from_base(&base);
        let k = k.min(cs.n_clusters());
        let init = init::initialize(&cs, k, 0).unwrap();
        let mode = if grow { DiffusionMode::Grow } else { DiffusionMode::Rebuild };
        prop_assert!(init.edges.assigned_count() > 0);
        let d = diffuse(&cs, &init.edges, mode).unwrap();
        prop_assert!(d.edges.is_full_cover());
        let mut count = vec![0; base.n()];
        for &x in d.edges.edges().iter().flatten() {
            count[x] += 1;
        }
        prop_assert!(count.iter().all(|&c| c == 1));
        let start = init.edges.assigned_count();
        let mut prev = start;
        for &c in &d.coverage_trace {
            prop_assert!(c > prev);
            prev = c;
        }
        prop_assert_eq!(diffuse(&cs, &init.edges, mode).unwrap(), d);
    }

    #[test]
    fn first_rebuild_round_takes_the_most_confident((base, edges) in base_and_cover(40)) {
        // Drop the second half of the samples so the round has a choice.
        let n = base.n();
        let cs = ClusterSet::from_base(&base);
        let partial: Vec<Option<usize>> = edges
            .assignment()
            .into_iter()
            .enumerate()
            .map(|(x, a)| if x < n / 2 { a } else { None })
            .collect();
        let partial = HyperEdgeSet::from_assignment(&partial, edges.k());
        prop_assume!(partial.assigned_count() > 0 && partial.assigned_count() < n);
        let margins: Vec<f64> = (0..n).map(|x| confidence(x, &partial, &cs)).collect();
        let round = diffusion::diffusion_round(&cs, &partial, DiffusionMode::Rebuild);
        let target = diffusion::selection_size(partial.assigned_count(), n, edges.k());
        prop_assert_eq!(round.assigned_count(), target);
        let selected = round.assignment();
        let low = (0..n)
            .filter(|&x| selected[x].is_some())
            .map(|x| margins[x])
            .fold(f64::INFINITY, f64::min);
        for x in 0..n {
            match selected[x] {
                Some(e) => prop_assert_eq!(e, best_edge(x, &partial, &cs)),
                None => prop_assert!(margins[x] <= low),
            }
        }
        let d = diffuse(&cs, &partial, DiffusionMode::Rebuild).unwrap();
        prop_assert_eq!(d.coverage_trace[0], target);
    }

    #[test]
    fn adjustment_never_raises_loss((base, edges) in base_and_cover(60)) {
        let cs = ClusterSet::from_base(&base);
        let a = adjust(&cs, &edges, 100).unwrap();
        for w in a.loss_trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9);
        }
        prop_assert!(a.edges.is_full_cover());
        prop_assert_eq!(a.edges.k(), edges.k());
        prop_assert!(a.iterations <= 100);
    }

    #[test]
    fn kmedoids_is_a_swap_local_optimum(
        base in base_strategy(12),
        k in 1..=6usize,
    ) {
        let cs = ClusterSet::from_base(&base);
        prop_assume!(cs.n_clusters() <= 12);
        let k = k.min(cs.n_clusters());
        let costs = pairwise_cost_matrix(&cs);
        let m = kmedoids(&costs, k, 0).unwrap();
        prop_assert!(m.loss >= exhaustive_optimum(&costs, k) - 1e-9);
        prop_assert!((costs.loss(&m.indices) - m.loss).abs() < 1e-12);
        for (slot, _) in m.indices.iter().enumerate() {
            for c in (0..costs.size()).filter(|c| !m.indices.contains(c)) {
                let mut swapped = m.indices.clone();
                swapped[slot] = c;
                prop_assert!(costs.loss(&swapped) >= m.loss - 1e-9);
            }
        }
        prop_assert_eq!(kmedoids(&costs, k, 99).unwrap(), m);
    }

    #[test]
    fn pipeline_is_deterministic(base in base_strategy(60), k in 1..=4usize) {
        let k = k.min(ClusterSet::from_base(&base).n_clusters());
        let a = cehm(&base, k, &Config::default());
        let b = cehm(&base, k, &Config::default());
        prop_assert_eq!(&a, &b);
        if let Ok(r) = a {
            prop_assert_eq!(r.labels.len(), base.n());
            prop_assert!(r.labels.iter().all(|&l| l < k));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn metrics_match_oracles(
        pair in (2..=200usize).prop_flat_map(|n| (
            prop::collection::vec(0..6u8, n),
            prop::collection::vec(0..6u8, n),
        )),
        perm in Just([0u8, 1, 2, 3, 4, 5]).prop_shuffle(),
    ) {
        let (a, b) = pair;
        let got_nmi = nmi(&a, &b).unwrap();
        let got_ari = ari(&a, &b).unwrap();
        prop_assert!((got_nmi - nmi_oracle(&a, &b)).abs() < 1e-9);
        prop_assert!((got_ari - ari_oracle(&a, &b)).abs() < 1e-9);
        let ra = relabel(&a, &perm);
        prop_assert!((nmi(&ra, &b).unwrap() - got_nmi).abs() < 1e-12);
        prop_assert!((ari(&ra, &b).unwrap() - got_ari).abs() < 1e-12);
        prop_assert!((nmi(&a, &relabel(&b, &perm)).unwrap() - got_nmi).abs() < 1e-12);
    }
}

fn exhaustive_optimum(costs: &CostMatrix, k: usize) -> f64 {
    k_subsets(costs.size(), k)
        .iter()
        .map(|s| costs.loss(s))
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn kmedoids_optimum_on_dense_overlaps() {
    // Several overlapping columns keep n_c near 12.
    let cols: Vec<Vec<u64>> = vec![
        vec![0, 0, 1, 1, 2, 2, 3, 3],
        vec![0, 1, 1, 2, 2, 3, 3, 0],
        vec![0, 0, 0, 1, 1, 1, 2, 2],
    ];
    let cs = ClusterSet::from_base(&EnsembleBase::from_columns(&cols).unwrap());
    let costs = pairwise_cost_matrix(&cs);
    for k in 1..=cs.n_clusters() {
        let m = kmedoids(&costs, k, 0).unwrap();
        let best = exhaustive_optimum(&costs, k);
        assert!((m.loss - best).abs() < 1e-9, "k={k}: {} vs {best}", m.loss);
    }
}

#[test]
fn kmedoids_can_stop_above_the_optimum() {
    // BUILD then single swaps settle at 7/6 while the best 3-subset costs 1.
    let rows = [
        [2u64, 2, 1, 0],
        [2, 2, 0, 1],
        [2, 0, 1, 2],
        [0, 2, 1, 0],
        [1, 0, 0, 0],
    ];
    let cs = ClusterSet::from_base(&EnsembleBase::from_rows(&rows).unwrap());
    let costs = pairwise_cost_matrix(&cs);
    let m = kmedoids(&costs, 3, 0).unwrap();
    assert!((exhaustive_optimum(&costs, 3) - 1.0).abs() < 1e-12);
    assert!((m.loss - 7.0 / 6.0).abs() < 1e-12);
}

#[test]
fn distance_inequalities_hold() {
    for report in inequality_suites(1000, 7) {
        assert!(report.passed(), "{report:?}");
    }
}

#[test]
fn monotone_on_a_thousand_instances() {
    let r = monotonicity_suite(1000, 11);
    assert!(r.passed(), "{r:?}");
}

#[test]
fn generated_columns_are_partitions() {
    let (points, _) = basegen::gaussian_blobs(120, 3, 2, 1.0, 5).unwrap();
    let base = basegen::generate_base(&points, 3, 8, 2).unwrap();
    let again = basegen::generate_base(&points, 3, 8, 2).unwrap();
    assert_eq!(base, again);
    assert_ne!(base, basegen::generate_base(&points, 3, 8, 3).unwrap());
    let cs = ClusterSet::from_base(&base);
    let (lo, hi) = basegen::cluster_count_range(120, 3);
    for j in 0..base.l() {
        let part = cs.column_partition(j);
        let k = part.iter().collect::<std::collections::BTreeSet<_>>().len();
        assert!((lo..=hi).contains(&k), "column {j} has {k} clusters");
    }
}
