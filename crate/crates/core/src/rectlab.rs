//! Classical rectangle toolkit: equidistribution of weighted sums, the
//! difficult-input distribution, index-function rectangles and the
//! rectangle partition of a deterministic read-once BP.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{Num, ToPrimitive};
use rayon::prelude::*;

use crate::builders::{is_prime, smallest_prime_after, weighted_sum};
use crate::graph::{Adjacency, GraphError, NodeKind, QbpGraph};
use crate::protocols::PartitionSpec;
use crate::{NodeId, Ratio};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum RectError {
    #[error("modulus {0} is not prime")]
    NotPrime(usize),
    #[error("coefficient {0} is zero mod q")]
    ZeroCoefficient(usize),
    #[error("coefficients {0} and {1} coincide mod q")]
    RepeatedCoefficient(usize, usize),
    #[error("parameter out of range: {0}")]
    OutOfRange(&'static str),
    #[error("branching program is not deterministic")]
    NotDeterministic,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

pub fn binary_entropy(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
}

fn binomial(n: u32, k: u32) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Number of points within Hamming distance r of a point in {0,1}^n.
pub fn hamming_ball_size(n: u32, r: u32) -> u128 {
    (0..=r.min(n)).map(|k| binomial(n, k)).sum()
}

/// Distribution of Σ a_i x_i mod q over uniform x ∈ {0,1}^n, any coefficients.
pub fn residue_distribution<T: Num + Clone>(q: usize, coeffs: &[usize]) -> Vec<T> {
    let half = T::one() / (T::one() + T::one());
    let mut dist = vec![T::zero(); q];
    dist[0] = T::one();
    for &a in coeffs {
        let mut next = vec![T::zero(); q];
        for (r, p) in dist.iter().enumerate() {
            let w = p.clone() * half.clone();
            next[r] = next[r].clone() + w.clone();
            let s = (r + a) % q;
            next[s] = next[s].clone() + w;
        }
        dist = next;
    }
    dist
}

/// Checked form of [`residue_distribution`]: q prime, coefficients nonzero
/// and pairwise distinct mod q.
pub fn weighted_sum_distribution<T: Num + Clone>(q: usize, coeffs: &[usize]) -> Result<Vec<T>, RectError> {
    if !is_prime(q) {
        return Err(RectError::NotPrime(q));
    }
    if coeffs.len() > 10_000 {
        return Err(RectError::OutOfRange("at most 10^4 coefficients"));
    }
    let mut seen: BTreeMap<usize, usize> = BTreeMap::new();
    for (k, &a) in coeffs.iter().enumerate() {
        if a % q == 0 {
            return Err(RectError::ZeroCoefficient(k));
        }
        if let Some(j) = seen.insert(a % q, k) {
            return Err(RectError::RepeatedCoefficient(j, k));
        }
    }
    Ok(residue_distribution(q, coeffs))
}

/// max_b |Pr[≡ b] − 1/q|.
pub fn max_deviation<T: ToPrimitive>(dist: &[T]) -> f64 {
    let u = 1.0 / dist.len() as f64;
    dist.iter().map(|p| (p.to_f64().unwrap_or(f64::NAN) - u).abs()).fold(0.0, f64::max)
}

/// Exhaustive counterpart of [`residue_distribution`] in exact arithmetic.
pub fn enumerate_residues(q: usize, coeffs: &[usize]) -> Vec<Ratio> {
    let n = coeffs.len();
    let mut counts = vec![0u64; q];
    for m in 0..1u64 << n {
        let s: usize = coeffs.iter().enumerate().filter(|(k, _)| m >> k & 1 == 1).map(|(_, &a)| a).sum();
        counts[s % q] += 1;
    }
    counts.into_iter().map(|c| Ratio::new(c.into(), (1u64 << n).into())).collect()
}

/// Uniform distribution on {(x, y) : s(x) = s(y)} with s the weighted sum
/// mod the smallest prime above n. Vectors are bitmasks, bit k = x_{k+1}.
#[derive(Clone, Debug, PartialEq)]
pub struct DifficultDistribution {
    pub n: usize,
    pub p: usize,
    pub residue_counts: Vec<u64>,
    pub support: Vec<(u32, u32)>,
    pub mass: Ratio,
}

impl DifficultDistribution {
    pub fn total_mass(&self) -> Ratio {
        self.mass.clone() * Ratio::from_integer((self.support.len() as u64).into())
    }

    /// Uniform measure |D| / 4^n of the support.
    pub fn uniform_measure(&self) -> Ratio {
        Ratio::new((self.support.len() as u64).into(), (1u64 << (2 * self.n)).into())
    }

    pub fn contains(&self, x: u32, y: u32) -> bool {
        self.support.binary_search(&(x, y)).is_ok()
    }
}

fn mask_bits(m: u32, n: usize) -> Vec<u8> {
    (0..n).map(|k| (m >> k & 1) as u8).collect()
}

pub fn difficult_distribution(n: usize) -> Result<DifficultDistribution, RectError> {
    if n == 0 || n > 12 {
        return Err(RectError::OutOfRange("1 <= n <= 12"));
    }
    let p = smallest_prime_after(n).map_err(|_| RectError::OutOfRange("prime search"))?;
    let sums: Vec<usize> = (0..1u32 << n).map(|m| weighted_sum(&mask_bits(m, n), p)).collect();
    let mut residue_counts = vec![0u64; p];
    for &s in &sums {
        residue_counts[s] += 1;
    }
    let mut support = Vec::new();
    for (x, &sx) in sums.iter().enumerate() {
        for (y, &sy) in sums.iter().enumerate() {
            if sx == sy {
                support.push((x as u32, y as u32));
            }
        }
    }
    let mass = Ratio::new(1.into(), (support.len() as u64).into());
    Ok(DifficultDistribution { n, p, residue_counts, support, mass })
}

/// Largest set of rows that all lie within Hamming distance ⌊εn⌋ of one row r.
#[derive(Clone, Debug, PartialEq)]
pub struct IndRectangle {
    pub n: usize,
    pub epsilon: f64,
    pub max_size: usize,
    pub center: u32,
    pub members: Vec<u32>,
    pub bound: f64,
}

impl IndRectangle {
    pub fn within_bound(&self) -> bool {
        self.epsilon > 0.5 || self.max_size as f64 <= self.bound + 1e-9
    }
}

pub fn best_ind_rectangle(n: usize, epsilon: f64) -> Result<IndRectangle, RectError> {
    if n == 0 || n > 4 || !(0.0..=1.0).contains(&epsilon) {
        return Err(RectError::OutOfRange("1 <= n <= 4, 0 <= epsilon <= 1"));
    }
    let radius = (epsilon * n as f64 + 1e-12).floor() as u32;
    let cube = 1u32 << n;
    let mut best = (0usize, 0u32, Vec::new());
    if n <= 3 {
        for subset in 1u64..1 << cube {
            let members: Vec<u32> = (0..cube).filter(|a| subset >> a & 1 == 1).collect();
            if members.len() <= best.0 {
                continue;
            }
            if let Some(r) = (0..cube).find(|r| members.iter().all(|a| (a ^ r).count_ones() <= radius)) {
                best = (members.len(), r, members);
            }
        }
    } else {
        for r in 0..cube {
            let members: Vec<u32> = (0..cube).filter(|a| (a ^ r).count_ones() <= radius).collect();
            if members.len() > best.0 {
                best = (members.len(), r, members);
            }
        }
    }
    Ok(IndRectangle {
        n,
        epsilon,
        max_size: best.0,
        center: best.1,
        members: best.2,
        bound: (binary_entropy(epsilon) * n as f64).exp2(),
    })
}

/// One-way rectangle: every assignment in `rows` to the first part, combined
/// with every assignment to the second part.
#[derive(Clone, Debug, PartialEq)]
pub struct Rectangle {
    pub partition: PartitionSpec,
    /// Assignments to `partition.alice_vars`, in that order.
    pub rows: BTreeSet<Vec<u8>>,
    pub ell: usize,
    pub cut_node: NodeId,
    /// First part holds ℓ X-variables (true) or ℓ Y-variables (false).
    pub x_side: bool,
}

impl Rectangle {
    pub fn contains(&self, z: &[u8]) -> bool {
        let a: Vec<u8> = self.partition.alice_vars.iter().map(|&v| z[v as usize - 1]).collect();
        self.rows.contains(&a)
    }

    /// ℓ variables of one side and at most ℓ−1 of the other in the first part.
    pub fn is_ell_rectangle(&self, n: usize) -> bool {
        let xs = self.partition.alice_vars.iter().filter(|&&v| v as usize <= n).count();
        let ys = self.partition.alice_vars.len() - xs;
        (xs == self.ell && ys < self.ell) || (ys == self.ell && xs < self.ell)
    }
}

fn trace(adj: &Adjacency, z: &[u8]) -> Vec<usize> {
    let mut path = vec![adj.start];
    let mut v = adj.start;
    loop {
        let bit = match adj.kinds[v] {
            NodeKind::Sink(_) => return path,
            NodeKind::Var(i) => z[i as usize - 1] as usize,
            NodeKind::Unlabeled => 0,
        };
        v = adj.out[v][bit][0].0;
        path.push(v);
    }
}

fn eval(adj: &Adjacency, z: &[u8]) -> u8 {
    match adj.kinds[*trace(adj, z).last().expect("nonempty path")] {
        NodeKind::Sink(r) => r,
        _ => unreachable!("paths end in sinks"),
    }
}

/// Partition of the input cube of a deterministic read-once BP over
/// X = vars 1..n, Y = vars n+1..2n. Each input is followed to the first node
/// at which ℓ variables of one side have been read; inputs are grouped by
/// that node and the set of variables read. Paths that end before the
/// threshold are padded with unread X-variables, on which g is constant.
pub fn brs_partition(g: &QbpGraph, ell: usize) -> Result<Vec<Rectangle>, RectError> {
    if !crate::sim::is_deterministic(g) {
        return Err(RectError::NotDeterministic);
    }
    let nv = g.num_vars;
    let n = nv / 2;
    if nv % 2 != 0 || n > 12 || ell == 0 || ell >= n {
        return Err(RectError::OutOfRange("2n variables, n <= 12, 1 <= ell <= n-1"));
    }
    let adj = Adjacency::new(g)?;
    let mut groups: BTreeMap<(usize, Vec<u32>), (bool, BTreeSet<Vec<u8>>)> = BTreeMap::new();
    for m in 0..1u64 << nv {
        let z: Vec<u8> = (0..nv).map(|k| (m >> k & 1) as u8).collect();
        let path = trace(&adj, &z);
        let mut read = Vec::new();
        let (mut xs, mut ys) = (0, 0);
        let mut cut = *path.last().expect("nonempty path");
        for &v in &path {
            if xs == ell || ys == ell {
                cut = v;
                break;
            }
            if let NodeKind::Var(i) = adj.kinds[v] {
                read.push(i);
                if i as usize <= n {
                    xs += 1;
                } else {
                    ys += 1;
                }
            }
        }
        let x_side = ys < ell;
        let unread: Vec<u32> = (1..=n as u32).filter(|i| !read.contains(i)).collect();
        let mut pad = unread.into_iter();
        while read.iter().filter(|&&i| i as usize <= n).count() < ell && x_side {
            read.push(pad.next().expect("fewer than n X-variables read"));
        }
        read.sort_unstable();
        let row: Vec<u8> = read.iter().map(|&v| z[v as usize - 1]).collect();
        groups.entry((cut, read)).or_insert_with(|| (x_side, BTreeSet::new())).1.insert(row);
    }
    groups
        .into_iter()
        .map(|((cut, read), (x_side, rows))| {
            let rest: Vec<u32> = (1..=nv as u32).filter(|v| !read.contains(v)).collect();
            let partition = PartitionSpec::new(read, rest, nv).map_err(|_| RectError::OutOfRange("partition"))?;
            Ok(Rectangle { partition, rows, ell, cut_node: adj.ids[cut], x_side })
        })
        .collect()
}

/// Exhaustive check of the partition postconditions.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionReport {
    pub rectangles: usize,
    pub size_bound: usize,
    pub uncovered: usize,
    pub overlapping: usize,
    pub non_uniform: usize,
    pub non_ell: usize,
}

impl PartitionReport {
    pub fn pass(&self) -> bool {
        self.rectangles <= self.size_bound && self.uncovered + self.overlapping + self.non_uniform + self.non_ell == 0
    }
}

pub fn verify_partition(g: &QbpGraph, rects: &[Rectangle]) -> Result<PartitionReport, RectError> {
    let adj = Adjacency::new(g)?;
    let nv = g.num_vars;
    let n = nv / 2;
    let (uncovered, overlapping) = (0..1u64 << nv)
        .into_par_iter()
        .map(|m| {
            let z: Vec<u8> = (0..nv).map(|k| (m >> k & 1) as u8).collect();
            match rects.iter().filter(|r| r.contains(&z)).count() {
                0 => (1usize, 0usize),
                1 => (0, 0),
                _ => (0, 1),
            }
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let non_uniform = rects
        .par_iter()
        .filter(|r| {
            let bob = &r.partition.bob_vars;
            (0..1u64 << bob.len()).any(|bm| {
                let mut z = vec![0u8; nv];
                for (k, &v) in bob.iter().enumerate() {
                    z[v as usize - 1] = (bm >> k & 1) as u8;
                }
                let mut values = r.rows.iter().map(|a| {
                    for (k, &v) in r.partition.alice_vars.iter().enumerate() {
                        z[v as usize - 1] = a[k];
                    }
                    eval(&adj, &z)
                });
                let first = values.next();
                values.any(|v| Some(v) != first)
            })
        })
        .count();
    let non_ell = rects.iter().filter(|r| !r.is_ell_rectangle(n)).count();
    Ok(PartitionReport { rectangles: rects.len(), size_bound: 2 * n * g.size(), uncovered, overlapping, non_uniform, non_ell })
}
