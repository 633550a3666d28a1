use std::collections::{BTreeMap, BTreeSet};

use qbp::bridge::*;
use qbp::builders::{build_mws_qbp, mws_eval_joint, random_regular_qrobp, random_two_order_qrobp};
use qbp::graph::NodeKind;
use qbp::{NodeId, QbpGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Every source-to-sink path of a DAG, by brute force.
fn all_paths(g: &QbpGraph) -> Vec<Vec<NodeId>> {
    let mut out_edges: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
    for e in &g.edges {
        if e.amp.norm() > 0.0 {
            out_edges.entry(e.from).or_default().insert(e.to);
        }
    }
    let mut paths = Vec::new();
    let mut stack = vec![vec![g.start]];
    while let Some(p) = stack.pop() {
        let last = *p.last().unwrap();
        match out_edges.get(&last) {
            Some(next) => {
                for &w in next {
                    let mut q = p.clone();
                    q.push(w);
                    stack.push(q);
                }
            }
            None => paths.push(p),
        }
    }
    paths
}

fn sink_depth(g: &QbpGraph) -> BTreeSet<usize> {
    all_paths(g).iter().map(|p| p.len() - 1).collect()
}

fn restricted_mws2() -> QbpGraph {
    build_mws_qbp(2, true).unwrap().restrict(&BTreeMap::from([(2, 0), (4, 0)])).unwrap()
}

/// n = 3, pair 2: the x1 = 0 branch reads x2 first, the x1 = 1 branch y2.
fn restricted_mws3() -> QbpGraph {
    build_mws_qbp(3, true).unwrap().restrict(&BTreeMap::from([(1, 1), (4, 0), (3, 1), (6, 0)])).unwrap()
}

#[test]
fn pair_one_is_single_sided() {
    let dec = decompose(&restricted_mws2(), 1, 3).unwrap();
    assert!(dec.degenerate && dec.s_y.is_empty());
}

#[test]
fn cuts_hold_on_every_path() {
    let g = restricted_mws3();
    let dec = decompose(&g, 2, 5).unwrap();
    let s: BTreeSet<NodeId> = dec.s_x.iter().chain(&dec.s_y).copied().collect();
    let t: BTreeSet<NodeId> = dec.t_x.iter().chain(&dec.t_y).copied().collect();
    for p in all_paths(&g) {
        assert_eq!(p.iter().filter(|v| s.contains(v)).count(), 1, "{p:?}");
        assert_eq!(p.iter().filter(|v| t.contains(v)).count(), 1, "{p:?}");
    }
    assert!(dec.s_x.iter().all(|v| !dec.s_y.contains(v)));
    assert!(dec.t_x.iter().all(|v| !dec.t_y.contains(v)));
    assert!(!dec.degenerate);
}

#[test]
fn parts_partition_the_nodes() {
    let g = restricted_mws2();
    let dec = decompose(&g, 1, 3).unwrap();
    let mut seen = BTreeSet::new();
    let t: Vec<NodeId> = dec.t_x.iter().chain(&dec.t_y).copied().collect();
    for part in [&dec.top, &dec.middle_x, &dec.middle_y, &dec.bottom, &t] {
        for v in part {
            assert!(seen.insert(*v), "node {v} in two parts");
        }
    }
    let reachable: BTreeSet<NodeId> = all_paths(&g).into_iter().flatten().collect();
    assert_eq!(seen, reachable);
}

#[test]
fn entry_and_exit_amplitudes_by_path_sums() {
    let g = restricted_mws2();
    let dec = decompose(&g, 1, 3).unwrap();
    assert!((dec.entry_mass() - 1.0).abs() < 1e-9);
    // Exit amplitudes of an unlabeled bottom are the products of its edges.
    let amp: BTreeMap<(NodeId, NodeId), qbp::C64> = g.edges.iter().map(|e| ((e.from, e.to), e.amp)).collect();
    for (&(t, w), &b) in &dec.exit_amplitudes {
        if dec.d_sinks[&t] == 1 {
            assert!((amp[&(t, w)] - b).norm() < 1e-12);
        }
    }
}

#[test]
fn dummy_graph_is_legal_and_one_step_longer() {
    let g = restricted_mws2();
    let dec = decompose(&g, 1, 3).unwrap();
    let dc = insert_dummy_chains(&g, &dec).unwrap();
    let rep = dc.graph.validate(1e-9).unwrap();
    assert!(rep.well_formed && rep.unidirectional);
    let before = sink_depth(&g);
    let after = sink_depth(&dc.graph);
    assert_eq!(before.len(), 1);
    assert_eq!(after, before.iter().map(|d| d + 1).collect());
    let extra: usize = dec.d_source.values().chain(dec.d_sinks.values()).sum();
    assert!(dc.graph.size() <= g.size() + extra + 2);
}

#[test]
fn dummy_graph_final_states_agree() {
    let g = restricted_mws2();
    let dec = decompose(&g, 1, 3).unwrap();
    let dc = insert_dummy_chains(&g, &dec).unwrap();
    let sinks = sink_ids(&g);
    for m in 0..4u8 {
        let z = [m & 1, 0, m >> 1, 0];
        let a = sink_amplitudes(&g, &z, &sinks, 1e-9).unwrap();
        let b = sink_amplitudes(&dc.graph, &z, &sinks, 1e-9).unwrap();
        assert!((a - b).norm() < 1e-9);
    }
}

#[test]
fn mws_protocol_matches_full_graph() {
    let g = build_mws_qbp(2, true).unwrap();
    for i in 1..=2u32 {
        let other = 3 - i;
        for bg in zero_and_backgrounds(&[(other, other + 2)]) {
            let chk = bridge_check(&g, i, i + 2, &bg, &mws_eval_joint, 1e-9).unwrap();
            assert!(chk.pass(1e-9), "{chk:?}");
            assert!(chk.protocol_error <= 1e-9);
        }
    }
}

#[test]
fn extracted_protocol_shape() {
    let g = restricted_mws3();
    let dc = insert_dummy_chains(&g, &decompose(&g, 2, 5).unwrap()).unwrap();
    let ex = extract_protocol(&dc).unwrap();
    let p = &ex.protocol;
    assert_eq!(p.subprotocols.len(), 2);
    assert!(p.coins.len() == 1 && p.validate(1e-9).is_ok());
    let q: f64 = p.amplitudes.iter().map(|a| a.norm_sqr()).sum();
    assert!((q - 1.0).abs() < 1e-9);
    assert_eq!(p.subprotocols[0].partition.alice_vars, vec![1]);
    assert_eq!(p.subprotocols[1].partition.alice_vars, vec![2]);
    for m in 0..4u8 {
        let z = [1, m & 1, 1, 0, m >> 1, 0];
        let want = sink_amplitudes(&build_mws_qbp(3, true).unwrap(), &z, &ex.sinks, 1e-9).unwrap();
        assert!((p.pure_result(0, &[m & 1, m >> 1]) - want).norm() < 1e-9);
    }
    // Alice's part maps the initial superposition to a unit vector.
    for sp in &p.subprotocols {
        for c in 0..2 {
            assert!(((&sp.alice_ops[0][c] * &sp.initial).norm() - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn random_graph_with_random_background() {
    let g = random_regular_qrobp(3, 4, 7).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..4 {
        let bg = BTreeMap::from([(1u32, rng.random_range(0..2u8))]);
        let chk = bridge_check(&g, 2, 3, &bg, &|_| false, 1e-9).unwrap();
        assert!(chk.max_deviation < 1e-9 && chk.pass(1e-9), "{chk:?}");
    }
}

#[test]
fn two_order_graphs_give_two_sided_protocols() {
    let mut two_sided = 0;
    for seed in 0..20 {
        let g = random_two_order_qrobp(4, 3, seed).unwrap();
        for bg in zero_and_backgrounds(&[(2, 4)]) {
            let chk = bridge_check(&g, 1, 3, &bg, &|_| false, 1e-9).unwrap();
            assert!(chk.pass(1e-9), "seed {seed}: {chk:?}");
            two_sided += usize::from(!chk.degenerate);
        }
    }
    assert!(two_sided > 0);
}

#[test]
fn orthogonality_sees_every_level() {
    let g = restricted_mws3();
    let dc = insert_dummy_chains(&g, &decompose(&g, 2, 5).unwrap()).unwrap();
    let rep = subspace_orthogonality_check(&dc, 1e-9).unwrap();
    assert!(rep.pass && rep.comparisons > 0);
}

#[test]
fn rejects_unrestricted_and_repeated_reads() {
    let g = build_mws_qbp(2, true).unwrap();
    assert!(matches!(decompose(&g, 1, 3), Err(BridgeError::UnfixedVariable(_))));
    let mut looped = restricted_mws2();
    for n in &mut looped.nodes {
        if n.kind == NodeKind::Var(3) {
            n.kind = NodeKind::Var(1);
        }
    }
    assert!(decompose(&looped, 1, 3).is_err());
}

#[test]
fn zero_and_backgrounds_enumerate_three_per_pair() {
    let all = zero_and_backgrounds(&[(1, 4), (2, 5), (3, 6)]);
    assert_eq!(all.len(), 27);
    let distinct: BTreeSet<Vec<(u32, u8)>> = all.iter().map(|m| m.iter().map(|(k, v)| (*k, *v)).collect()).collect();
    assert_eq!(distinct.len(), 27);
}
