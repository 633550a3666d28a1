use qbp::builders::*;
use qbp::graph::NodeKind;
use qbp::sim::{Simulator, VerifyMode};
use qbp::{index_bits, QbpGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn strict(n: usize) -> QbpGraph {
    build_mws_qbp(n, true).unwrap()
}

#[test]
fn strict_mws_exact_up_to_six() {
    for n in 2..=6 {
        let g = strict(n);
        assert!(g.validate(1e-9).unwrap().ok());
        let info = g.classify().unwrap();
        assert!(info.regular_read_once && info.obdd_order.is_none(), "n={n}");
        let sim = Simulator::new(&g, 1e-9).unwrap();
        let rep = sim.verify_function(mws_eval_joint, VerifyMode::Exact, 1e-9);
        assert!(rep.pass && rep.worst_error <= 1e-9, "n={n} {rep:?}");
    }
}

#[test]
fn strict_and_grid_distributions_match() {
    for n in 2..=6 {
        let (a, b) = (strict(n), build_mws_qbp(n, false).unwrap());
        let (sa, sb) = (Simulator::new(&a, 1e-9).unwrap(), Simulator::new(&b, 1e-9).unwrap());
        for m in 0..1u64 << (2 * n) {
            let z = index_bits(m, 2 * n);
            let da = sa.run(&z, sa.default_steps()).unwrap();
            let db = sb.run(&z, sb.default_steps()).unwrap();
            assert!((da.p1 - db.p1).abs() < 1e-12, "n={n} z={z:?}");
        }
    }
}

#[test]
fn strict_size_bound_and_blowup() {
    let mut pts = Vec::new();
    for n in [4usize, 8, 16, 32] {
        let p = smallest_prime_after(n).unwrap();
        let g = strict(n);
        let grid = build_mws_qbp(n, false).unwrap();
        assert!(g.size() as f64 <= MWS_SIZE_CONSTANT * ((2 * n + 3) * p * p) as f64);
        assert!(g.size() <= 4 * grid.size());
        pts.push(((n as f64).ln(), (g.size() as f64).ln()));
    }
    let k = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / k, pts.iter().map(|p| p.1).sum::<f64>() / k);
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!(slope <= 3.2, "slope {slope}");
}

#[test]
fn grid_body_within_formula() {
    let g = build_mws_qbp(2, false).unwrap();
    let body = g.nodes.iter().filter(|v| matches!(v.kind, NodeKind::Var(_))).count();
    assert!(body <= 5 * 4 * 9);
    assert!(g.nodes.iter().filter(|v| v.kind == NodeKind::Unlabeled).count() <= 1 + 4 * 3);
}

fn paths_read_every_var_once(g: &QbpGraph) -> bool {
    let adj = qbp::graph::Adjacency::new(g).unwrap();
    fn walk(adj: &qbp::graph::Adjacency, v: usize, seen: &mut Vec<u32>, n: usize) -> bool {
        match adj.kinds[v] {
            NodeKind::Sink(_) => {
                let mut s = seen.clone();
                s.sort_unstable();
                s == (1..=n as u32).collect::<Vec<_>>()
            }
            NodeKind::Var(i) => {
                seen.push(i);
                let mut ok = true;
                for bit in 0..2 {
                    for &(w, _) in &adj.out[v][bit] {
                        ok &= walk(adj, w, seen, n);
                    }
                }
                seen.pop();
                ok
            }
            NodeKind::Unlabeled => false,
        }
    }
    walk(&adj, adj.start, &mut Vec::new(), g.num_vars)
}

#[test]
fn strict_paths_are_regular() {
    for n in 2..=3 {
        assert!(paths_read_every_var_once(&strict(n)));
    }
}

#[test]
fn disj_obdd_exact_and_complement() {
    for n in 1..=8 {
        let g = build_disj_obdd(n).unwrap();
        assert_eq!(g.size(), 2 * n + 2);
        let order: Vec<u32> = (1..=n as u32).flat_map(|k| [k, n as u32 + k]).collect();
        assert_eq!(g.classify().unwrap().obdd_order, Some(order));
        let sim = Simulator::new(&g, 1e-9).unwrap();
        assert!(sim.classical);
        let f = |z: &[u8]| disj_eval(&z[..z.len() / 2], &z[z.len() / 2..]);
        assert!(sim.verify_function(f, VerifyMode::Exact, 1e-9).pass, "n={n}");
        let h = complement_sinks(&g);
        let sh = Simulator::new(&h, 1e-9).unwrap();
        let f = |z: &[u8]| nd_eval(&z[..z.len() / 2], &z[z.len() / 2..]);
        assert!(sh.verify_function(f, VerifyMode::Exact, 1e-9).pass, "n={n}");
    }
}

#[test]
fn disj_obdd_sampled_at_twelve() {
    let g = build_disj_obdd(12).unwrap();
    let sim = Simulator::new(&g, 1e-9).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..100_000 {
        let z: Vec<u8> = (0..24).map(|_| rng.random_bool(0.8) as u8).collect();
        let d = sim.run(&z, sim.default_steps()).unwrap();
        assert_eq!(d.p1 == 1.0, disj_eval(&z[..12], &z[12..]));
    }
}

#[test]
fn disj_two_on_example() {
    let g = build_disj_obdd(2).unwrap();
    let sim = Simulator::new(&g, 1e-9).unwrap();
    let d = sim.run(&[1, 1, 1, 0], sim.default_steps()).unwrap();
    assert_eq!((d.p0, d.p1), (1.0, 0.0));
}

#[test]
fn mws_half_obdd_matches_evaluator() {
    for n in 2..=5 {
        let g = build_mws_half_obdd(n).unwrap();
        assert!(g.classify().unwrap().obdd_order.is_some());
        let sim = Simulator::new(&g, 1e-9).unwrap();
        assert!(sim.verify_function(mws_half_eval, VerifyMode::Exact, 1e-9).pass);
    }
}

#[test]
fn random_graphs_conserve_norm() {
    for seed in 0..10 {
        let g = random_regular_qrobp(4, 3, seed).unwrap();
        let h = random_two_order_qrobp(4, 2, seed).unwrap();
        for g in [g, h] {
            let sim = Simulator::new(&g, 1e-9).unwrap();
            for m in 0..16 {
                let d = sim.run(&index_bits(m, 4), sim.default_steps()).unwrap();
                assert!((d.p0 + d.p1 - 1.0).abs() < 1e-9 && d.residual.abs() < 1e-9);
            }
        }
    }
}
