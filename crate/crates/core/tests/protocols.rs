use qbp::protocols::*;
use qbp::qinfo::{self, random};
use qbp::C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const ALL: [[u8; 2]; 4] = [[0, 0], [1, 0], [0, 1], [1, 1]];

/// I(P(Z):Z|D) from per-d ensembles: Σ_d Pr(d)·I(ρ(Z|d) : Z | D = d).
fn ic_oracle(p: &MultiPartitionProtocol, dist: &InputDistribution) -> f64 {
    let mut total = 0.0;
    for (&pd, table) in dist.d_probs.iter().zip(&dist.tables) {
        let items: Vec<_> = table
            .iter()
            .enumerate()
            .filter(|(_, &q)| q > 0.0)
            .map(|(z, &q)| (q, z, p.result_state(&bits(z, 2)).unwrap()))
            .collect();
        total += pd * qinfo::CqEnsemble::new(items).unwrap().mutual_info();
    }
    total
}

#[test]
fn information_cost_matches_per_d_oracle() {
    let dist = and_input_distribution();
    let mut lib = and_test_library();
    lib.truncate(60);
    lib.push(("xor".into(), build_xor_protocol()));
    for (name, p) in &lib {
        let ic = p.information_cost(&dist).unwrap();
        assert!((ic - ic_oracle(p, &dist)).abs() < 1e-9, "{name}");
    }
}

#[test]
fn classical_copy_costs_one_bit() {
    let p = classical_copy_and();
    assert!(p.error_probability(and_eval) < 1e-12);
    assert!((p.information_cost(&and_input_distribution()).unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn information_cost_invariant_under_output_relabeling() {
    let dist = and_input_distribution();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (name, p) in and_test_library().iter().step_by(9) {
        let v = random::unitary(&mut rng, p.output_dim());
        let q = p.relabel_output(&v);
        q.validate(1e-9).unwrap();
        let (a, b) = (p.information_cost(&dist).unwrap(), q.information_cost(&dist).unwrap());
        assert!((a - b).abs() < 1e-9, "{name}: {a} vs {b}");
        for z in ALL {
            let (x, y) = (p.output_distribution(&z).unwrap(), q.output_distribution(&z).unwrap());
            assert!((x[0] - y[0]).abs() < 1e-9);
        }
    }
}

#[test]
fn output_law_on_library() {
    for (name, p) in and_test_library().iter().step_by(5) {
        assert!(p.output_law_gap() < 1e-9, "{name}");
    }
}

#[test]
fn result_states_have_unit_trace_and_purity() {
    for (name, p) in and_test_library().iter().step_by(7) {
        for z in ALL {
            let rho = p.result_state(&z).unwrap();
            assert!((rho.matrix().trace().re - 1.0).abs() < 1e-9, "{name}");
            if p.coins.len() == 1 {
                let (vals, _) = rho.eigh();
                assert!((vals.last().unwrap() - 1.0).abs() < 1e-9, "{name}");
            }
        }
    }
}

#[test]
fn realification_keeps_information_cost_of_real_protocols() {
    let dist = and_input_distribution();
    for p in [build_xor_protocol(), classical_copy_and()] {
        let r = realify_protocol(&p);
        r.validate(1e-9).unwrap();
        let (a, b) = (p.information_cost(&dist).unwrap(), r.information_cost(&dist).unwrap());
        assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn realification_reproduces_phase_gate_statistics() {
    let p = phase_gate_protocol();
    let r = realify_protocol(&p);
    for z in ALL {
        let (a, b) = (p.output_distribution(&z).unwrap(), r.output_distribution(&z).unwrap());
        assert!((a[1] - b[1]).abs() < 1e-9);
    }
    assert!(r.subprotocols.iter().all(|s| s.bob_ops.iter().flatten().all(|m| is_real(m, 1e-15))));
}

#[test]
fn merge_of_a_two_block_protocol_is_identity() {
    let p = classical_copy_and();
    let m = merge_to_two_partitions(&p).unwrap();
    for z in ALL {
        assert!((p.pure_result(0, &z) - m.pure_result(0, &z)).norm() < 1e-12);
    }
}

#[test]
fn merge_drops_empty_group() {
    let mut p = build_xor_protocol();
    p.amplitudes = vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
    let m = merge_to_two_partitions(&p).unwrap();
    assert_eq!(m.subprotocols.len(), 1);
}

#[test]
fn phase_family_reaches_both_regimes() {
    let pts: Vec<AndPoint> = phase_family_points().iter().map(|&phi| and_point("phase", &phase_family_and(phi))).collect();
    assert!(pts.len() >= 20);
    assert!(pts.iter().any(|p| p.applies) && pts.iter().any(|p| !p.applies));
    assert!(pts.iter().all(|p| p.ok));
}
