//! Quantum multi-partition one-way protocols: semantics, error, information
//! cost, merging, realification, and the XOR / AND test protocols.
//!
//! A protocol is a weighted coherent sum of one-way subprotocols. Subprotocol
//! i works on its own block space: the initial vector s_i is acted on by
//! Alice's unitary (chosen by her input bits), then Bob's (chosen by his), and
//! the block is mapped into the shared output space W by the embedding E_i.
//! With public coin c the result state for input z is
//!
//!   Σ_c Pr(c) |Ψ_c(z)⟩⟨Ψ_c(z)|,   Ψ_c(z) = Σ_i α_i E_i B_i[c][y] A_i[c][x] s_i,
//!
//! and the output is read by a two-outcome POVM (M0, M1) on W. Inputs only
//! select operators, so input registers are never touched after the start.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::qinfo::{self, random, CMat, CVec};
use crate::{DensityMatrix, C64};

pub type Mat = CMat<f64>;
pub type Vector = CVec<f64>;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ProtocolError {
    #[error("partition must split variables 1..={0} into two nonempty disjoint parts")]
    BadPartition(usize),
    #[error("input has {got} bits, expected {expected}")]
    Arity { expected: usize, got: usize },
    #[error("amplitudes have squared norm {0}")]
    AmplitudeNorm(f64),
    #[error("coin probabilities sum to {0}")]
    Coins(f64),
    #[error("subprotocol {0}: {1}")]
    Block(usize, String),
    #[error("measurement is not complete (defect {0})")]
    Measurement(f64),
    #[error("blocks {0} and {1} are not orthogonal (overlap {2})")]
    Overlap(usize, usize, f64),
    #[error("result state norm {0} on input {1:?}")]
    ResultNorm(f64, Vec<u8>),
    #[error("expected at most two distinct partitions, found {0}")]
    TooManyPartitions(usize),
    #[error("distribution does not match protocol arity")]
    Distribution,
}

fn r(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Split of variables 1..=n between Alice and Bob.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionSpec {
    pub alice_vars: Vec<u32>,
    pub bob_vars: Vec<u32>,
}

impl PartitionSpec {
    pub fn new(alice_vars: Vec<u32>, bob_vars: Vec<u32>, num_vars: usize) -> Result<Self, ProtocolError> {
        let mut all: Vec<u32> = alice_vars.iter().chain(&bob_vars).copied().collect();
        all.sort_unstable();
        if alice_vars.is_empty() || bob_vars.is_empty() || all != (1..=num_vars as u32).collect::<Vec<_>>() {
            return Err(ProtocolError::BadPartition(num_vars));
        }
        Ok(PartitionSpec { alice_vars, bob_vars })
    }

    fn index(vars: &[u32], z: &[u8]) -> usize {
        vars.iter().enumerate().map(|(k, &v)| (z[v as usize - 1] as usize) << k).sum()
    }

    pub fn alice_index(&self, z: &[u8]) -> usize {
        Self::index(&self.alice_vars, z)
    }

    pub fn bob_index(&self, z: &[u8]) -> usize {
        Self::index(&self.bob_vars, z)
    }

    /// Same split up to ordering within each side.
    pub fn same_split(&self, other: &PartitionSpec) -> bool {
        let sorted = |v: &[u32]| {
            let mut v = v.to_vec();
            v.sort_unstable();
            v
        };
        sorted(&self.alice_vars) == sorted(&other.alice_vars)
    }
}

#[derive(Clone, Debug)]
pub struct Subprotocol {
    pub partition: PartitionSpec,
    pub initial: Vector,
    /// alice_ops[coin][alice input index]
    pub alice_ops: Vec<Vec<Mat>>,
    /// bob_ops[coin][bob input index]
    pub bob_ops: Vec<Vec<Mat>>,
    /// Map from the block space into the output space W.
    pub embedding: Mat,
    /// Dimension of the part of the block that Alice hands to Bob.
    pub message_dim: usize,
}

impl Subprotocol {
    pub fn dim(&self) -> usize {
        self.initial.len()
    }

    /// Coin-free subprotocol.
    pub fn plain(partition: PartitionSpec, initial: Vector, alice: Vec<Mat>, bob: Vec<Mat>, embedding: Mat) -> Self {
        let message_dim = initial.len();
        Subprotocol { partition, initial, alice_ops: vec![alice], bob_ops: vec![bob], embedding, message_dim }
    }

    /// Block vector B[c][y] A[c][x] s before embedding.
    pub fn block_state(&self, coin: usize, z: &[u8]) -> Vector {
        let a = &self.alice_ops[coin][self.partition.alice_index(z)];
        let b = &self.bob_ops[coin][self.partition.bob_index(z)];
        b * (a * &self.initial)
    }
}

#[derive(Clone, Debug)]
pub struct MultiPartitionProtocol {
    pub num_vars: usize,
    pub subprotocols: Vec<Subprotocol>,
    pub amplitudes: Vec<C64>,
    pub coins: Vec<f64>,
    /// (M0, M1) on W.
    pub measurement: [Mat; 2],
}

/// D-conditioned input law: Pr(D = d) and per-d tables Pr(z | d) over z
/// indexed least significant bit first.
#[derive(Clone, Debug, PartialEq)]
pub struct InputDistribution {
    pub num_vars: usize,
    pub d_probs: Vec<f64>,
    pub tables: Vec<Vec<f64>>,
}

impl InputDistribution {
    /// (Pr(d)·Pr(z|d), z, d) for every positive entry.
    pub fn support(&self) -> Vec<(f64, usize, usize)> {
        let mut out = Vec::new();
        for (d, (&pd, table)) in self.d_probs.iter().zip(&self.tables).enumerate() {
            for (z, &pz) in table.iter().enumerate() {
                if pd * pz > 0.0 {
                    out.push((pd * pz, z, d));
                }
            }
        }
        out
    }

    pub fn joint_prob(&self, z: usize) -> f64 {
        self.d_probs.iter().zip(&self.tables).map(|(pd, t)| pd * t[z]).sum()
    }
}

/// D uniform on {1, 2}; given D = i, Z_i is a fair bit and Z_{3-i} = 0.
pub fn and_input_distribution() -> InputDistribution {
    InputDistribution {
        num_vars: 2,
        d_probs: vec![0.5, 0.5],
        tables: vec![vec![0.5, 0.5, 0.0, 0.0], vec![0.5, 0.0, 0.5, 0.0]],
    }
}

pub fn xor_input_distribution() -> InputDistribution {
    and_input_distribution()
}

pub fn bits(index: usize, n: usize) -> Vec<u8> {
    crate::index_bits(index as u64, n)
}

fn unitarity_defect(u: &Mat) -> f64 {
    (u.adjoint() * u - Mat::identity(u.ncols(), u.ncols())).norm()
}

impl MultiPartitionProtocol {
    pub fn output_dim(&self) -> usize {
        self.measurement[0].nrows()
    }

    pub fn validate(&self, tol: f64) -> Result<(), ProtocolError> {
        let k = self.subprotocols.len();
        let norm: f64 = self.amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if self.amplitudes.len() != k || (norm - 1.0).abs() > tol {
            return Err(ProtocolError::AmplitudeNorm(norm));
        }
        let total: f64 = self.coins.iter().sum();
        if self.coins.is_empty() || (total - 1.0).abs() > tol || self.coins.iter().any(|&p| p < 0.0) {
            return Err(ProtocolError::Coins(total));
        }
        let w = self.output_dim();
        let [m0, m1] = &self.measurement;
        let povm = (m0.adjoint() * m0 + m1.adjoint() * m1 - Mat::identity(w, w)).norm();
        if povm > tol {
            return Err(ProtocolError::Measurement(povm));
        }
        for (i, sp) in self.subprotocols.iter().enumerate() {
            let fail = |msg: String| Err(ProtocolError::Block(i, msg));
            let d = sp.dim();
            if (sp.initial.norm() - 1.0).abs() > tol {
                return fail(format!("initial vector norm {}", sp.initial.norm()));
            }
            if sp.embedding.nrows() != w || sp.embedding.ncols() != d {
                return fail("embedding shape".into());
            }
            let na = 1usize << sp.partition.alice_vars.len();
            let nb = 1usize << sp.partition.bob_vars.len();
            for (ops, count) in [(&sp.alice_ops, na), (&sp.bob_ops, nb)] {
                if ops.len() != self.coins.len() {
                    return fail("operator table does not match coins".into());
                }
                for u in ops.iter().flatten() {
                    if u.nrows() != d || u.ncols() != d {
                        return fail("operator shape".into());
                    }
                    let defect = unitarity_defect(u);
                    if defect > tol {
                        return fail(format!("operator not unitary (defect {defect})"));
                    }
                }
                if ops.iter().any(|row| row.len() != count) {
                    return fail("operator table does not cover all inputs".into());
                }
            }
        }
        let inputs: Vec<Vec<u8>> = (0..1usize << self.num_vars).map(|m| bits(m, self.num_vars)).collect();
        for c in 0..self.coins.len() {
            let embedded: Vec<Vec<Vector>> = self
                .subprotocols
                .iter()
                .map(|sp| inputs.iter().map(|z| &sp.embedding * sp.block_state(c, z)).collect())
                .collect();
            for i in 0..k {
                for j in i + 1..k {
                    for u in &embedded[i] {
                        for v in &embedded[j] {
                            let o = u.dotc(v).norm();
                            if o > tol {
                                return Err(ProtocolError::Overlap(i, j, o));
                            }
                        }
                    }
                }
            }
            for z in &inputs {
                let n = self.pure_result(c, z).norm();
                if (n - 1.0).abs() > tol {
                    return Err(ProtocolError::ResultNorm(n, z.clone()));
                }
            }
        }
        Ok(())
    }

    fn check_arity(&self, z: &[u8]) -> Result<(), ProtocolError> {
        if z.len() != self.num_vars {
            return Err(ProtocolError::Arity { expected: self.num_vars, got: z.len() });
        }
        Ok(())
    }

    /// Ψ_c(z) in W.
    pub fn pure_result(&self, coin: usize, z: &[u8]) -> Vector {
        let mut psi = Vector::zeros(self.output_dim());
        for (sp, a) in self.subprotocols.iter().zip(&self.amplitudes) {
            psi += (&sp.embedding * sp.block_state(coin, z)) * *a;
        }
        psi
    }

    pub fn result_state(&self, z: &[u8]) -> Result<DensityMatrix, ProtocolError> {
        self.check_arity(z)?;
        let w = self.output_dim();
        let mut m = Mat::zeros(w, w);
        for (c, &p) in self.coins.iter().enumerate() {
            let psi = self.pure_result(c, z);
            m += (&psi * psi.adjoint()) * r(p);
        }
        Ok(DensityMatrix::from_matrix_unchecked(m))
    }

    pub fn output_distribution(&self, z: &[u8]) -> Result<[f64; 2], ProtocolError> {
        self.check_arity(z)?;
        let mut p = [0.0; 2];
        for (c, &q) in self.coins.iter().enumerate() {
            let psi = self.pure_result(c, z);
            for (out, m) in p.iter_mut().zip(&self.measurement) {
                *out += q * (m * &psi).norm_squared();
            }
        }
        Ok(p)
    }

    /// Output distribution of subprotocol i alone, measured with the POVM
    /// pulled back through its embedding.
    pub fn block_output_distribution(&self, i: usize, z: &[u8]) -> [f64; 2] {
        let sp = &self.subprotocols[i];
        let mut p = [0.0; 2];
        for (c, &q) in self.coins.iter().enumerate() {
            let v = &sp.embedding * sp.block_state(c, z);
            for (out, m) in p.iter_mut().zip(&self.measurement) {
                *out += q * (m * &v).norm_squared();
            }
        }
        p
    }

    /// max over inputs of Pr[output ≠ f(z)].
    pub fn error_probability(&self, f: impl Fn(&[u8]) -> bool) -> f64 {
        (0..1usize << self.num_vars)
            .map(|m| {
                let z = bits(m, self.num_vars);
                let p = self.output_distribution(&z).expect("arity");
                1.0 - p[f(&z) as usize]
            })
            .fold(0.0, f64::max)
    }

    /// max over inputs and r of |Pr{O=r} − Σ_i |α_i|² Pr{O_i=r}|.
    pub fn output_law_gap(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for m in 0..1usize << self.num_vars {
            let z = bits(m, self.num_vars);
            let p = self.output_distribution(&z).expect("arity");
            let mut q = [0.0; 2];
            for (i, a) in self.amplitudes.iter().enumerate() {
                let pi = self.block_output_distribution(i, &z);
                q[0] += a.norm_sqr() * pi[0];
                q[1] += a.norm_sqr() * pi[1];
            }
            worst = worst.max((p[0] - q[0]).abs()).max((p[1] - q[1]).abs());
        }
        worst
    }

    /// IC(P; Z | D) in bits.
    pub fn information_cost(&self, dist: &InputDistribution) -> Result<f64, ProtocolError> {
        if dist.num_vars != self.num_vars {
            return Err(ProtocolError::Distribution);
        }
        let items: Vec<_> = dist
            .support()
            .into_iter()
            .map(|(p, z, d)| (p, z, d, self.result_state(&bits(z, self.num_vars)).expect("arity")))
            .collect();
        Ok(qinfo::cq_conditional_mutual_info(&items))
    }

    /// IC of subprotocol i run on its own (block coordinates).
    pub fn block_information_cost(&self, i: usize, dist: &InputDistribution) -> f64 {
        let sp = &self.subprotocols[i];
        let items: Vec<_> = dist
            .support()
            .into_iter()
            .map(|(p, z, d)| {
                let zb = bits(z, self.num_vars);
                let mut m = Mat::zeros(sp.dim(), sp.dim());
                for (c, &q) in self.coins.iter().enumerate() {
                    let v = sp.block_state(c, &zb);
                    m += (&v * v.adjoint()) * r(q);
                }
                (p, z, d, DensityMatrix::from_matrix_unchecked(m))
            })
            .collect();
        qinfo::cq_conditional_mutual_info(&items)
    }

    /// IC(P) − Σ_i |α_i|² IC(P_i).
    pub fn decomposition_gap(&self, dist: &InputDistribution) -> Result<f64, ProtocolError> {
        let total = self.information_cost(dist)?;
        let parts: f64 = (0..self.subprotocols.len())
            .map(|i| self.amplitudes[i].norm_sqr() * self.block_information_cost(i, dist))
            .sum();
        Ok(total - parts)
    }

    /// Conjugates the output space by `v`: embeddings become V·E, POVM V·M·V†.
    pub fn relabel_output(&self, v: &Mat) -> Self {
        let mut out = self.clone();
        for sp in &mut out.subprotocols {
            sp.embedding = v * &sp.embedding;
        }
        out.measurement = self.measurement.clone().map(|m| v * m * v.adjoint());
        out
    }
}

fn block_diag(blocks: &[&Mat]) -> Mat {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut m = Mat::zeros(n, n);
    let mut off = 0;
    for b in blocks {
        m.view_mut((off, off), (b.nrows(), b.ncols())).copy_from(b);
        off += b.nrows();
    }
    m
}

/// Groups subprotocols by partition (at most two groups) and merges each
/// group into one block: direct-sum space, initial vector ⊕ (α_ij/√q_i) s_ij,
/// amplitude √q_i, block-diagonal operators. Empty groups are dropped.
pub fn merge_to_two_partitions(p: &MultiPartitionProtocol) -> Result<MultiPartitionProtocol, ProtocolError> {
    let mut groups: Vec<(PartitionSpec, Vec<usize>)> = Vec::new();
    for (i, sp) in p.subprotocols.iter().enumerate() {
        match groups.iter_mut().find(|(part, _)| part.same_split(&sp.partition)) {
            Some((_, members)) => members.push(i),
            None => groups.push((sp.partition.clone(), vec![i])),
        }
    }
    if groups.len() > 2 {
        return Err(ProtocolError::TooManyPartitions(groups.len()));
    }
    let coins = p.coins.len();
    let mut subprotocols = Vec::new();
    let mut amplitudes = Vec::new();
    for (partition, members) in groups {
        let q: f64 = members.iter().map(|&i| p.amplitudes[i].norm_sqr()).sum();
        if q == 0.0 {
            continue;
        }
        let parts: Vec<&Subprotocol> = members.iter().map(|&i| &p.subprotocols[i]).collect();
        let dim: usize = parts.iter().map(|s| s.dim()).sum();
        let mut initial = Vector::zeros(dim);
        let mut embedding = Mat::zeros(p.output_dim(), dim);
        let mut off = 0;
        for (&i, sp) in members.iter().zip(&parts) {
            let scaled = &sp.initial * (p.amplitudes[i] / q.sqrt());
            initial.rows_mut(off, sp.dim()).copy_from(&scaled);
            embedding.columns_mut(off, sp.dim()).copy_from(&sp.embedding);
            off += sp.dim();
        }
        // Operators are re-indexed onto this group's own variable order.
        let reindex = |sp: &Subprotocol, alice: bool, coin: usize, idx: usize| -> Mat {
            let (mine, theirs) = if alice {
                (&partition.alice_vars, &sp.partition.alice_vars)
            } else {
                (&partition.bob_vars, &sp.partition.bob_vars)
            };
            let local: usize = theirs
                .iter()
                .enumerate()
                .map(|(k, v)| {
                    let pos = mine.iter().position(|w| w == v).expect("same split");
                    ((idx >> pos) & 1) << k
                })
                .sum();
            if alice {
                sp.alice_ops[coin][local].clone()
            } else {
                sp.bob_ops[coin][local].clone()
            }
        };
        let table = |alice: bool| -> Vec<Vec<Mat>> {
            let count = 1usize << if alice { partition.alice_vars.len() } else { partition.bob_vars.len() };
            (0..coins)
                .map(|c| {
                    (0..count)
                        .map(|idx| {
                            let mats: Vec<Mat> = parts.iter().map(|sp| reindex(sp, alice, c, idx)).collect();
                            block_diag(&mats.iter().collect::<Vec<_>>())
                        })
                        .collect()
                })
                .collect()
        };
        let (alice_ops, bob_ops) = (table(true), table(false));
        let message_dim = parts.iter().map(|s| s.message_dim).sum();
        subprotocols.push(Subprotocol { partition, initial, alice_ops, bob_ops, embedding, message_dim });
        amplitudes.push(r(q.sqrt()));
    }
    Ok(MultiPartitionProtocol {
        num_vars: p.num_vars,
        subprotocols,
        amplitudes,
        coins: p.coins.clone(),
        measurement: p.measurement.clone(),
    })
}

/// Replaces every vector and matrix by its realification. Amplitude phases
/// are moved into the initial vectors first so that the weights stay real.
pub fn realify_protocol(p: &MultiPartitionProtocol) -> MultiPartitionProtocol {
    let mut out = p.clone();
    for (sp, a) in out.subprotocols.iter_mut().zip(out.amplitudes.iter_mut()) {
        let phase = if a.norm() > 0.0 { *a / a.norm() } else { r(1.0) };
        sp.initial = qinfo::realify_vector(&(&sp.initial * phase));
        *a = r(a.norm());
        for op in sp.alice_ops.iter_mut().chain(sp.bob_ops.iter_mut()).flatten() {
            *op = qinfo::realify_matrix(op);
        }
        sp.embedding = qinfo::realify_matrix(&sp.embedding);
        sp.message_dim *= 2;
    }
    out.measurement = p.measurement.clone().map(|m| qinfo::realify_matrix(&m));
    out
}

// ---------------------------------------------------------------------------
// Test protocols. Qubit k of a register is bit k of the basis index.

fn perm(d: usize, f: impl Fn(usize) -> usize) -> Mat {
    let mut m = Mat::zeros(d, d);
    for k in 0..d {
        m[(f(k), k)] = r(1.0);
    }
    m
}

fn flip(d: usize, qubit: usize) -> Mat {
    perm(d, |k| k ^ (1 << qubit))
}

fn controlled_not(d: usize, controls: &[usize], target: usize) -> Mat {
    perm(d, |k| if controls.iter().all(|&c| k >> c & 1 == 1) { k ^ (1 << target) } else { k })
}

/// Single-qubit gate g on `qubit` of a d-dimensional register.
fn on_qubit(d: usize, qubit: usize, g: &Mat) -> Mat {
    let mut m = Mat::zeros(d, d);
    for k in 0..d {
        let b = k >> qubit & 1;
        for b2 in 0..2 {
            let k2 = (k & !(1 << qubit)) | (b2 << qubit);
            m[(k2, k)] = g[(b2, b)];
        }
    }
    m
}

fn hadamard() -> Mat {
    Mat::from_row_slice(2, 2, &[r(FRAC_1_SQRT_2), r(FRAC_1_SQRT_2), r(FRAC_1_SQRT_2), r(-FRAC_1_SQRT_2)])
}

fn basis(d: usize, k: usize) -> Vector {
    let mut v = Vector::zeros(d);
    v[k] = r(1.0);
    v
}

/// Projectors onto a qubit being 0 / 1.
fn qubit_measurement(d: usize, qubit: usize) -> [Mat; 2] {
    let diag = |val: usize| Mat::from_diagonal(&DVector::from_fn(d, |k, _| r(((k >> qubit & 1) == val) as u8 as f64)));
    [diag(0), diag(1)]
}

/// Error-free XOR protocol: block i starts in |i−1⟩|−⟩ on two shared work
/// qubits, Bob (holding z_i) multiplies by (−1)^{z_i}, and the first work
/// qubit is measured in the Hadamard basis.
pub fn build_xor_protocol() -> MultiPartitionProtocol {
    let d = 4;
    // Basis index = 2·q1 + q2; q1 is the first work qubit.
    let minus = |q1: usize| {
        let mut v = Vector::zeros(d);
        v[2 * q1] = r(FRAC_1_SQRT_2);
        v[2 * q1 + 1] = r(-FRAC_1_SQRT_2);
        v
    };
    let id = Mat::identity(d, d);
    let block = |holder: u32, q1: usize| {
        let partition = PartitionSpec::new(vec![3 - holder], vec![holder], 2).expect("valid split");
        Subprotocol::plain(partition, minus(q1), vec![id.clone(), id.clone()], vec![id.clone(), -id.clone()], id.clone())
    };
    let h = on_qubit(d, 1, &hadamard());
    let [p0, p1] = qubit_measurement(d, 1);
    MultiPartitionProtocol {
        num_vars: 2,
        subprotocols: vec![block(1, 0), block(2, 1)],
        amplitudes: vec![r(FRAC_1_SQRT_2); 2],
        coins: vec![1.0],
        measurement: [&h * p0 * &h, &h * p1 * &h],
    }
}

pub fn xor_eval(z: &[u8]) -> bool {
    z[0] ^ z[1] == 1
}

pub fn and_eval(z: &[u8]) -> bool {
    z[0] & z[1] == 1
}

/// AND block on qubits (m, b, o): Alice writes her bit into m, Bob copies
/// his bit into b and computes m∧b into o. `alice_var` is Alice's variable.
fn copy_block(alice_var: u32) -> Subprotocol {
    let d = 8;
    let partition = PartitionSpec::new(vec![alice_var], vec![3 - alice_var], 2).expect("valid split");
    let id = Mat::identity(d, d);
    let alice = vec![id.clone(), flip(d, 0)];
    let toffoli = controlled_not(d, &[0, 1], 2);
    let bob = vec![toffoli.clone(), toffoli * flip(d, 1)];
    Subprotocol { partition, initial: basis(d, 0), alice_ops: vec![alice], bob_ops: vec![bob], embedding: id, message_dim: 2 }
}

fn direct_sum(num_vars: usize, blocks: Vec<Subprotocol>, amplitudes: Vec<C64>, coins: Vec<f64>, measure: impl Fn(usize) -> [Mat; 2]) -> MultiPartitionProtocol {
    let w: usize = blocks.iter().map(|b| b.dim()).sum();
    let mut m0 = Mat::zeros(w, w);
    let mut m1 = Mat::zeros(w, w);
    let mut out = Vec::new();
    let mut off = 0;
    for (i, mut b) in blocks.into_iter().enumerate() {
        let d = b.dim();
        let [a0, a1] = measure(i);
        m0.view_mut((off, off), (d, d)).copy_from(&a0);
        m1.view_mut((off, off), (d, d)).copy_from(&a1);
        let mut e = Mat::zeros(w, d);
        e.view_mut((off, 0), (d, d)).copy_from(&b.embedding);
        b.embedding = e;
        out.push(b);
        off += d;
    }
    MultiPartitionProtocol { num_vars, subprotocols: out, amplitudes, coins, measurement: [m0, m1] }
}

/// Alice sends her bit as a basis state; Bob keeps a copy of his bit and
/// computes the AND into an output qubit.
pub fn classical_copy_and() -> MultiPartitionProtocol {
    direct_sum(2, vec![copy_block(1)], vec![r(1.0)], vec![1.0], |_| qubit_measurement(8, 2))
}

/// Phase-encoded AND block: Alice sends (|0⟩ + e^{iφx}|1⟩)/√2, Bob copies
/// his bit and, if it is 1, applies H to the message and copies it into the
/// output qubit. Errs only on (1,1), with probability cos²(φ/2).
fn phase_block(alice_var: u32, phi: f64) -> Subprotocol {
    let d = 8;
    let partition = PartitionSpec::new(vec![alice_var], vec![3 - alice_var], 2).expect("valid split");
    let mut initial = Vector::zeros(d);
    initial[0] = r(FRAC_1_SQRT_2);
    initial[1] = r(FRAC_1_SQRT_2);
    let phase = Mat::from_diagonal(&DVector::from_fn(d, |k, _| if k & 1 == 1 { C64::from_polar(1.0, phi) } else { r(1.0) }));
    let id = Mat::identity(d, d);
    let bob1 = controlled_not(d, &[0], 2) * on_qubit(d, 0, &hadamard()) * flip(d, 1);
    Subprotocol {
        partition,
        initial,
        alice_ops: vec![vec![id.clone(), phase]],
        bob_ops: vec![vec![id.clone(), bob1]],
        embedding: id,
        message_dim: 2,
    }
}

/// Two mirrored phase blocks with equal weight; ε = cos²(φ/2).
pub fn phase_family_and(phi: f64) -> MultiPartitionProtocol {
    direct_sum(
        2,
        vec![phase_block(1, phi), phase_block(2, phi)],
        vec![r(FRAC_1_SQRT_2); 2],
        vec![1.0],
        |_| qubit_measurement(8, 2),
    )
}

/// φ_k = π − (π/2)(k/23)², k = 0..24, so ε runs from 0 to 1/2 with extra
/// points at small error.
pub fn phase_family_points() -> Vec<f64> {
    (0..24).map(|k| PI - (PI / 2.0) * (k as f64 / 23.0).powi(2)).collect()
}

fn random_hermitian(rng: &mut impl Rng, d: usize) -> Mat {
    let g = random::ginibre(rng, d, d);
    (&g + g.adjoint()) * r(0.5)
}

/// exp(iH) for Hermitian H.
pub fn exp_i_hermitian(h: &Mat) -> Mat {
    let (vals, vecs) = qinfo::eigh(h);
    let phases = DVector::from_iterator(vals.len(), vals.iter().map(|&l| C64::from_polar(1.0, l)));
    &vecs * Mat::from_diagonal(&phases) * vecs.adjoint()
}

/// Seeded random AND protocol: one or two blocks of dimension 2 or 4, the
/// output read from qubit 0 of each block, optionally two public coins.
pub fn random_and_protocol(seed: u64) -> MultiPartitionProtocol {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rng.random_range(1..=2);
    let coins = if rng.random_bool(0.3) { random::probabilities(&mut rng, 2) } else { vec![1.0] };
    let mut blocks = Vec::new();
    let mut dims = Vec::new();
    for i in 0..k {
        let d = if rng.random_bool(0.5) { 2 } else { 4 };
        let alice_var = if k == 2 { i as u32 + 1 } else { rng.random_range(1..=2) };
        let partition = PartitionSpec::new(vec![alice_var], vec![3 - alice_var], 2).expect("valid split");
        let mut table = || -> Vec<Vec<Mat>> {
            (0..coins.len()).map(|_| (0..2).map(|_| random::unitary(&mut rng, d)).collect()).collect()
        };
        let (alice_ops, bob_ops) = (table(), table());
        let initial = random::pure_vector(&mut rng, d);
        blocks.push(Subprotocol { partition, initial, alice_ops, bob_ops, embedding: Mat::identity(d, d), message_dim: d });
        dims.push(d);
    }
    let amps: Vec<C64> = random::pure_vector(&mut rng, k).iter().copied().collect();
    direct_sum(2, blocks, amps, coins, |i| qubit_measurement(dims[i], 0))
}

/// Two mirrored classical-copy blocks with random weights whose operators
/// are multiplied by exp(iηH) for small random η and Hermitian H.
pub fn perturbed_copy_protocol(seed: u64) -> MultiPartitionProtocol {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_c0de);
    let eta = 0.06 * rng.random::<f64>();
    let mut blocks = vec![copy_block(1), copy_block(2)];
    for b in &mut blocks {
        for op in b.alice_ops.iter_mut().chain(b.bob_ops.iter_mut()).flatten() {
            let h = random_hermitian(&mut rng, 8);
            let n = h.norm();
            *op = exp_i_hermitian(&(h * r(eta / n))) * &*op;
        }
    }
    let w = rng.random::<f64>();
    direct_sum(2, blocks, vec![r(w.sqrt()), r((1.0 - w).sqrt())], vec![1.0], |_| qubit_measurement(8, 2))
}

/// The AND test library: classical copy, the 24-point phase family, 100
/// random and 100 perturbed-copy protocols.
pub fn and_test_library() -> Vec<(String, MultiPartitionProtocol)> {
    let mut lib = vec![("classical-copy".to_string(), classical_copy_and())];
    for (k, phi) in phase_family_points().into_iter().enumerate() {
        lib.push((format!("phase-{k}"), phase_family_and(phi)));
    }
    for s in 0..100 {
        lib.push((format!("random-{s}"), random_and_protocol(s)));
    }
    for s in 0..100 {
        lib.push((format!("perturbed-{s}"), perturbed_copy_protocol(s)));
    }
    lib
}

/// δ = 2√(ε(1−ε)).
pub fn delta_of(eps: f64) -> f64 {
    2.0 * (eps * (1.0 - eps)).max(0.0).sqrt()
}

/// 1/28 − δ/4.
pub fn and_ic_bound(delta: f64) -> f64 {
    1.0 / 28.0 - delta / 4.0
}

/// The bound is claimed for ε ≤ 1/2 with δ ≤ 1/7.
pub fn and_bound_applies(eps: f64) -> bool {
    eps <= 0.5 && delta_of(eps) <= 1.0 / 7.0
}

#[derive(Clone, Debug, PartialEq)]
pub struct AndPoint {
    pub name: String,
    pub epsilon: f64,
    pub delta: f64,
    pub ic: f64,
    pub bound: f64,
    pub applies: bool,
    pub ok: bool,
}

pub fn and_point(name: &str, p: &MultiPartitionProtocol) -> AndPoint {
    let epsilon = p.error_probability(and_eval);
    let delta = delta_of(epsilon);
    let ic = p.information_cost(&and_input_distribution()).expect("two-variable protocol");
    let bound = and_ic_bound(delta);
    let applies = and_bound_applies(epsilon);
    AndPoint { name: name.into(), epsilon, delta, ic, bound, applies, ok: !applies || ic >= bound - 1e-6 }
}

/// Real 0/1 check used by tests on realified protocols.
pub fn is_real(m: &Mat, tol: f64) -> bool {
    m.iter().all(|z| z.im.abs() <= tol)
}

/// Phase gate diag(1, i) on the message of a one-block protocol; used as a
/// complex test case for realification.
pub fn phase_gate_protocol() -> MultiPartitionProtocol {
    let d = 2;
    let partition = PartitionSpec::new(vec![1], vec![2], 2).expect("valid split");
    let s = Mat::from_diagonal(&DVector::from_vec(vec![r(1.0), C64::new(0.0, 1.0)]));
    let h = hadamard();
    let initial = DVector::from_vec(vec![r(FRAC_1_SQRT_2), r(FRAC_1_SQRT_2)]);
    let sp = Subprotocol::plain(partition, initial, vec![Mat::identity(d, d), s.clone()], vec![h.clone(), &h * &s], Mat::identity(d, d));
    direct_sum(2, vec![sp], vec![r(1.0)], vec![1.0], |_| qubit_measurement(2, 0))
}
