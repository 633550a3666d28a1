use std::collections::BTreeMap;

use num_traits::ToPrimitive;
use qbp::builders::{build_disj_obdd, build_mws_half_obdd, disj_eval, mws_half_eval};
use qbp::rectlab::*;
use qbp::{index_bits, Ratio};

fn brute_residues(q: usize, coeffs: &[usize]) -> Vec<u64> {
    let mut counts = vec![0u64; q];
    for m in 0..1u64 << coeffs.len() {
        let s: usize = coeffs.iter().enumerate().filter(|(k, _)| m >> k & 1 == 1).map(|(_, &a)| a).sum();
        counts[s % q] += 1;
    }
    counts
}

#[test]
fn weighted_sum_example() {
    let d: Vec<Ratio> = weighted_sum_distribution(5, &[1, 2, 3, 4]).unwrap();
    assert_eq!(d[1], Ratio::new(3.into(), 16.into()));
    assert_eq!(brute_residues(5, &[1, 2, 3, 4])[1], 3);
    let half: Vec<Ratio> = weighted_sum_distribution(2, &[1]).unwrap();
    assert_eq!(half, vec![Ratio::new(1.into(), 2.into()); 2]);
}

#[test]
fn weighted_sum_rejects_bad_hypotheses() {
    assert!(weighted_sum_distribution::<f64>(6, &[1, 2]).is_err());
    assert!(weighted_sum_distribution::<f64>(5, &[1, 1]).is_err());
    assert!(weighted_sum_distribution::<f64>(5, &[0, 2]).is_err());
}

#[test]
fn residue_dp_agrees_with_counting_for_small_primes() {
    for q in [2usize, 3, 5, 7, 11, 13] {
        for n in [1usize, 4, 9, 16] {
            let coeffs: Vec<usize> = (1..=n).map(|i| i % q).collect();
            let counts = brute_residues(q, &coeffs);
            let dp: Vec<Ratio> = residue_distribution(q, &coeffs);
            for (c, p) in counts.iter().zip(&dp) {
                assert_eq!(Ratio::new((*c).into(), (1u64 << n).into()), *p, "q={q} n={n}");
            }
            let total: Ratio = dp.iter().cloned().sum();
            assert_eq!(total, Ratio::from_integer(1.into()));
        }
    }
}

#[test]
fn entropy_and_ball_examples() {
    assert_eq!(binary_entropy(0.5), 1.0);
    assert_eq!(binary_entropy(0.0), 0.0);
    assert_eq!(binary_entropy(1.0), 0.0);
    assert_eq!(hamming_ball_size(12, 1), 13);
    let bound = (binary_entropy(1.0 / 12.0) * 12.0).exp2();
    assert!((bound - 31.3).abs() < 0.05 && 13.0 <= bound);
    for n in 1..=24u32 {
        for eps in [0.125, 0.25, 0.375] {
            let r = (eps * n as f64).floor() as u32;
            assert!(hamming_ball_size(n, r) as f64 <= (binary_entropy(eps) * n as f64).exp2() + 1e-9);
        }
    }
}

#[test]
fn difficult_distribution_small_case() {
    let d = difficult_distribution(2).unwrap();
    assert_eq!(d.p, 3);
    assert_eq!(d.residue_counts, vec![2, 1, 1]);
    assert_eq!(d.support.len(), 6);
    assert_eq!(d.total_mass(), Ratio::from_integer(1.into()));
}

#[test]
fn difficult_distribution_measure_is_sum_of_squares() {
    for n in 1..=8 {
        let d = difficult_distribution(n).unwrap();
        let w: Vec<usize> = (1..=n).collect();
        let counts = brute_residues(d.p, &w);
        let want: Ratio = counts.iter().map(|&c| Ratio::new((c * c).into(), (1u64 << (2 * n)).into())).sum();
        assert_eq!(d.uniform_measure(), want);
        assert!(d.support.iter().all(|&(x, y)| x < 1 << n && y < 1 << n && d.contains(x, y)));
    }
}

/// Largest subset of the cube with a common row within distance ⌊εn⌋, by
/// enumerating every subset.
fn subset_oracle(n: usize, eps: f64) -> usize {
    let r = (eps * n as f64).floor() as u32;
    let pts = 1usize << n;
    let mut best = 0;
    for set in 1u32..1 << pts {
        let size = set.count_ones() as usize;
        if size <= best {
            continue;
        }
        let ok = (0..pts as u32).any(|c| (0..pts as u32).all(|a| set >> a & 1 == 0 || (a ^ c).count_ones() <= r));
        if ok {
            best = size;
        }
    }
    best
}

#[test]
fn ind_rectangles_match_subset_enumeration() {
    for n in 1..=3 {
        for eps in [0.0, 0.2, 0.34, 0.5] {
            let rect = best_ind_rectangle(n, eps).unwrap();
            assert_eq!(rect.max_size, subset_oracle(n, eps), "n={n} eps={eps}");
            assert!(rect.within_bound());
        }
    }
    assert_eq!(best_ind_rectangle(2, 0.0).unwrap().max_size, 1);
    let r = best_ind_rectangle(4, 0.25).unwrap();
    assert_eq!(r.max_size, 5);
    assert!(r.max_size as f64 <= r.bound && (r.bound - 9.5).abs() < 0.05);
}

fn check_partition(n: usize, ell: usize, rects: &[Rectangle], g: impl Fn(&[u8]) -> bool, size: usize) {
    assert!(rects.len() <= 2 * n * size);
    let mut hits = vec![0u32; 1 << (2 * n)];
    for (m, h) in hits.iter_mut().enumerate() {
        let z = index_bits(m as u64, 2 * n);
        *h = rects.iter().filter(|r| r.contains(&z)).count() as u32;
    }
    assert!(hits.iter().all(|&h| h == 1), "n={n} ell={ell}");
    for r in rects {
        assert!(r.is_ell_rectangle(n));
        // g depends on the row only through the rectangle: fixed second part,
        // every row gives the same value.
        let mut by_second: BTreeMap<Vec<u8>, bool> = BTreeMap::new();
        for m in 0..1u64 << (2 * n) {
            let z = index_bits(m, 2 * n);
            if !r.contains(&z) {
                continue;
            }
            let b: Vec<u8> = r.partition.bob_vars.iter().map(|&v| z[v as usize - 1]).collect();
            let val = g(&z);
            assert_eq!(*by_second.entry(b).or_insert(val), val);
        }
    }
}

#[test]
fn brs_partitions_of_disjointness() {
    for n in 2..=5 {
        let g = build_disj_obdd(n).unwrap();
        for ell in 1..n {
            let rects = brs_partition(&g, ell).unwrap();
            check_partition(n, ell, &rects, |z| disj_eval(&z[..n], &z[n..]), g.size());
            assert!(verify_partition(&g, &rects).unwrap().pass());
        }
    }
    let two = brs_partition(&build_disj_obdd(2).unwrap(), 1).unwrap();
    let covered: usize = two.iter().map(|r| r.rows.len() << r.partition.bob_vars.len()).sum();
    assert_eq!(covered, 16);
}

#[test]
fn brs_partitions_of_restricted_weighted_sum() {
    for n in 2..=4 {
        let g = build_mws_half_obdd(n).unwrap();
        for ell in 1..n {
            let rects = brs_partition(&g, ell).unwrap();
            check_partition(n, ell, &rects, mws_half_eval, g.size());
        }
    }
}

#[test]
fn brs_rejects_quantum_graphs_and_bad_ell() {
    let g = qbp::builders::random_regular_qrobp(4, 3, 1).unwrap();
    assert!(brs_partition(&g, 1).is_err());
    let d = build_disj_obdd(3).unwrap();
    assert!(brs_partition(&d, 0).is_err() && brs_partition(&d, 3).is_err());
}

#[test]
fn max_deviation_is_small_at_large_n() {
    let q = 13;
    let coeffs: Vec<usize> = (1..=200).map(|i| i % q).collect();
    let d: Vec<f64> = residue_distribution(q, &coeffs);
    assert!(max_deviation(&d) < 1e-6);
    let exact: Vec<Ratio> = residue_distribution(q, &coeffs[..12]);
    assert!(exact.iter().all(|p| p.to_f64().unwrap() > 0.0));
}
