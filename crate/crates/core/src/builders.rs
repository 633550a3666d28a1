//! Number-theoretic helpers, reference evaluators and the explicit graph
//! constructions: the error-free read-once QBP for MWS_n (with and without
//! unlabeled nodes), the DISJ_n OBDD, and seeded random regular read-once QBPs.
//!
//! Variables are numbered x_k = k and y_k = n + k (1-based).

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::graph::{Edge, Node, NodeId, NodeKind, QbpGraph};
use crate::qinfo::random;
use crate::C64;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum BuildError {
    #[error("n = {0} is outside the supported range {1}")]
    OutOfRange(usize, &'static str),
    #[error("index {0} is outside 1..={1}")]
    BadIndex(usize, usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MwsParams {
    pub n: usize,
    pub p: usize,
}

impl MwsParams {
    pub fn new(n: usize) -> Result<Self, BuildError> {
        Ok(MwsParams { n, p: smallest_prime_after(n)? })
    }
}

pub fn is_prime(q: usize) -> bool {
    q >= 2 && (2..).take_while(|d| d * d <= q).all(|d| q % d != 0)
}

/// Smallest prime strictly greater than `n`, for 1 ≤ n ≤ 10^6.
pub fn smallest_prime_after(n: usize) -> Result<usize, BuildError> {
    if !(1..=1_000_000).contains(&n) {
        return Err(BuildError::OutOfRange(n, "1..=1000000"));
    }
    Ok((n + 1..).find(|&q| is_prime(q)).expect("Bertrand"))
}

/// (Σ_i i·x_i) mod q with 1-based weights.
pub fn weighted_sum(x: &[u8], q: usize) -> usize {
    x.iter().enumerate().map(|(k, &b)| (k + 1) * b as usize).sum::<usize>() % q
}

/// σ over a partial assignment given as (1-based index, bit) pairs.
pub fn sigma_subset(assigned: &[(usize, u8)], q: usize) -> usize {
    assigned.iter().map(|&(i, b)| i * b as usize).sum::<usize>() % q
}

pub fn ws_eval(x: &[u8]) -> bool {
    let n = x.len();
    let s = weighted_sum(x, smallest_prime_after(n).expect("n in range"));
    (1..=n).contains(&s) && x[s - 1] == 1
}

pub fn mws_eval(x: &[u8], y: &[u8]) -> bool {
    let n = x.len();
    let p = smallest_prime_after(n).expect("n in range");
    let (sx, sy) = (weighted_sum(x, p), weighted_sum(y, p));
    sx == sy && (1..=n).contains(&sx) && (x[sx - 1] ^ y[sx - 1]) == 1
}

/// MWS on a concatenated input (x_1..x_n, y_1..y_n).
pub fn mws_eval_joint(z: &[u8]) -> bool {
    let (x, y) = z.split_at(z.len() / 2);
    mws_eval(x, y)
}

pub fn disj_eval(x: &[u8], y: &[u8]) -> bool {
    !x.iter().zip(y).any(|(&a, &b)| a & b == 1)
}

pub fn nd_eval(x: &[u8], y: &[u8]) -> bool {
    !disj_eval(x, y)
}

/// IND_n(u, v) = u_v for v ∈ 1..=n.
pub fn ind_eval(u: &[u8], v: usize) -> Result<bool, BuildError> {
    if !(1..=u.len()).contains(&v) {
        return Err(BuildError::BadIndex(v, u.len()));
    }
    Ok(u[v - 1] == 1)
}

fn r(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Collects nodes and edges keyed by construction states.
struct Assembler<K: Ord + Clone> {
    ids: BTreeMap<K, NodeId>,
    nodes: Vec<Node>,
    edges: Vec<Edge>,
}

impl<K: Ord + Clone> Assembler<K> {
    fn new() -> Self {
        Assembler { ids: BTreeMap::new(), nodes: Vec::new(), edges: Vec::new() }
    }

    fn node(&mut self, key: K, kind: NodeKind) -> NodeId {
        if let Some(&id) = self.ids.get(&key) {
            return id;
        }
        let id = self.nodes.len() as NodeId;
        self.ids.insert(key, id);
        self.nodes.push(Node { id, kind });
        id
    }

    fn edge(&mut self, from: NodeId, to: NodeId, bit: Option<u8>, amp: C64) {
        self.edges.push(Edge { from, to, bit, amp });
    }

    fn finish(self, num_vars: usize, start: NodeId) -> QbpGraph {
        QbpGraph { num_vars, nodes: self.nodes, edges: self.edges, start }
    }
}

/// Construction states of the MWS graphs. Branch a = 0 reads x before y,
/// branch a = 1 reads y before x; `e` is the remembered value of x_1.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum MwsKey {
    Source,
    Body { level: usize, a: u8, b: u8, i: usize, j: usize, e: u8 },
    Hadamard { b: u8, k: usize },
    ZeroSink { a: u8, b: u8, i: usize, j: usize, e: u8 },
    OutSink { c: u8, b: u8, k: usize, e: u8 },
}

/// Exact read-once QBP for MWS_n, 2 ≤ n ≤ 32.
///
/// `strict = false`: unlabeled source, grid rows 1..=2n, unlabeled Hadamard
/// level, sinks. `strict = true`: no unlabeled nodes; x_1 is read first and
/// y_n last by both branches.
pub fn build_mws_qbp(n: usize, strict: bool) -> Result<QbpGraph, BuildError> {
    if !(2..=32).contains(&n) {
        return Err(BuildError::OutOfRange(n, "2..=32"));
    }
    let params = MwsParams::new(n)?;
    Ok(if strict { mws_strict(params) } else { mws_grid(params) })
}

fn hadamard_sinks(asm: &mut Assembler<MwsKey>, from: NodeId, bit: Option<u8>, a: u8, b: u8, k: usize, e: u8) {
    for c in 0..2u8 {
        let sink = asm.node(MwsKey::OutSink { c, b, k, e }, NodeKind::Sink(c));
        let sign = if a & c == 1 { -1.0 } else { 1.0 };
        asm.edge(from, sink, bit, r(sign * FRAC_1_SQRT_2));
    }
}

fn mws_grid(MwsParams { n, p }: MwsParams) -> QbpGraph {
    let mut asm = Assembler::new();
    let source = asm.node(MwsKey::Source, NodeKind::Unlabeled);
    // Row r reads, in branch a: a = 0 → x_1..x_n, y_1..y_n; a = 1 → y_1..y_n, x_1..x_n.
    let var_at = |a: u8, row: usize| -> usize {
        match (a, row <= n) {
            (0, _) => row,
            (_, true) => n + row,
            (_, false) => row - n,
        }
    };
    let mut frontier = BTreeSet::new();
    for a in 0..2u8 {
        for b in 0..2u8 {
            let key = MwsKey::Body { level: 1, a, b, i: 0, j: 0, e: 0 };
            let id = asm.node(key.clone(), NodeKind::Var(var_at(a, 1) as u32));
            let sign = if b == 1 { -0.5 } else { 0.5 };
            asm.edge(source, id, None, r(sign));
            frontier.insert(key);
        }
    }
    for row in 1..=2 * n {
        let mut next = BTreeSet::new();
        for key in &frontier {
            let MwsKey::Body { a, b, i, j, .. } = *key else { unreachable!() };
            let from = asm.ids[key];
            let var = var_at(a, row);
            for bit in 0..2u8 {
                let (mut b2, mut i2, mut j2) = (b, i, j);
                let beta = bit as usize;
                if var <= n {
                    i2 = (i + var * beta) % p;
                    if a == 1 && var == j {
                        b2 ^= bit;
                    }
                } else {
                    let k = var - n;
                    j2 = (j + k * beta) % p;
                    if a == 0 && k == i {
                        b2 ^= bit;
                    }
                }
                if row < 2 * n {
                    let key2 = MwsKey::Body { level: row + 1, a, b: b2, i: i2, j: j2, e: 0 };
                    let to = asm.node(key2.clone(), NodeKind::Var(var_at(a, row + 1) as u32));
                    asm.edge(from, to, Some(bit), r(1.0));
                    next.insert(key2);
                } else if i2 != j2 {
                    let to = asm.node(MwsKey::ZeroSink { a, b: b2, i: i2, j: j2, e: 0 }, NodeKind::Sink(0));
                    asm.edge(from, to, Some(bit), r(1.0));
                } else {
                    let key2 = MwsKey::Body { level: row + 1, a, b: b2, i: i2, j: j2, e: 0 };
                    let to = asm.node(key2.clone(), NodeKind::Unlabeled);
                    asm.edge(from, to, Some(bit), r(1.0));
                    next.insert(key2);
                }
            }
        }
        frontier = next;
    }
    for key in &frontier {
        let MwsKey::Body { a, b, i, .. } = *key else { unreachable!() };
        let from = asm.ids[key];
        hadamard_sinks(&mut asm, from, None, a, b, i, 0);
    }
    let _ = MwsKey::Hadamard { b: 0, k: 0 };
    asm.finish(2 * n, source)
}

/// Reading plan of the x-phase in the y-first branch once the partial sum
/// j' = Σ_{k<n} k·y_k is known. The two candidates for s(y) are j' and j'+n;
/// candidates in 2..=n are read last so that each flip can be decided from
/// the partial sum at read time.
#[derive(Clone, Debug, PartialEq, Eq)]
struct XPlan {
    order: Vec<usize>,
    /// (v, u): v read second-to-last, u last, v ≢ 2u (mod p).
    pair: Option<(usize, usize)>,
    single: Option<usize>,
    one_needed: bool,
}

fn x_plan(n: usize, p: usize, jp: usize) -> XPlan {
    let cands = [jp % p, (jp + n) % p];
    let needed: Vec<usize> = cands.iter().copied().filter(|m| (1..=n).contains(m)).collect();
    let w: Vec<usize> = needed.iter().copied().filter(|&m| m >= 2).collect();
    let mut order: Vec<usize> = (2..=n).filter(|k| !w.contains(k)).collect();
    let (pair, single) = match w.as_slice() {
        [m0, m1] => {
            let (v, u) = if *m0 == (2 * m1) % p { (*m1, *m0) } else { (*m0, *m1) };
            debug_assert_ne!(v, (2 * u) % p);
            order.extend([v, u]);
            (Some((v, u)), None)
        }
        [m] => {
            order.push(*m);
            (None, Some(*m))
        }
        _ => (None, None),
    };
    XPlan { order, pair, single, one_needed: needed.contains(&1) }
}

fn mws_strict(MwsParams { n, p }: MwsParams) -> QbpGraph {
    let mut asm = Assembler::new();
    let start = asm.node(MwsKey::Source, NodeKind::Var(1));
    let plans: Vec<XPlan> = (0..p).map(|jp| x_plan(n, p, jp)).collect();
    let y = |k: usize| n + k;
    // Variable read at `level` (1..=2n-1) by branch `a` in state with partial y-sum `j`.
    let var_at = |a: u8, level: usize, j: usize| -> usize {
        match (a, level) {
            (0, l) if l < n => l + 1,
            (0, l) => y(l - n + 1),
            (1, l) if l < n => y(l),
            (1, l) if l < 2 * n - 1 => plans[j].order[l - n],
            _ => y(n),
        }
    };

    let mut frontier = BTreeSet::new();
    for bit in 0..2u8 {
        for a in 0..2u8 {
            for b in 0..2u8 {
                let key = MwsKey::Body { level: 1, a, b, i: bit as usize, j: 0, e: bit };
                let id = asm.node(key.clone(), NodeKind::Var(var_at(a, 1, 0) as u32));
                asm.edge(start, id, Some(bit), r(if b == 1 { -0.5 } else { 0.5 }));
                frontier.insert(key);
            }
        }
    }
    for level in 1..2 * n {
        let mut next = BTreeSet::new();
        for key in &frontier {
            let MwsKey::Body { a, b, i, j, e, .. } = *key else { unreachable!() };
            let from = asm.ids[key];
            let var = var_at(a, level, j);
            for bit in 0..2u8 {
                let beta = bit as usize;
                let (mut b2, mut i2, mut j2) = (b, i, j);
                if var <= n && a == 0 {
                    i2 = (i + var * beta) % p;
                } else if var <= n {
                    let k = var;
                    let plan = &plans[j];
                    i2 = (i + k * beta) % p;
                    if let Some((v, u)) = plan.pair {
                        if k == v && bit == 1 && (i2 == v || i2 == (v + p - u) % p) {
                            b2 ^= 1;
                        }
                    }
                    if plan.order.last() == Some(&k) {
                        if plan.pair.map(|(_, u)| u) == Some(k) || plan.single == Some(k) {
                            if bit == 1 && i2 == k {
                                b2 ^= 1;
                            }
                        }
                        if plan.one_needed && i2 == 1 {
                            b2 ^= e;
                        }
                    }
                } else {
                    let k = var - n;
                    j2 = (j + k * beta) % p;
                    if a == 0 && k == i {
                        b2 ^= bit;
                    }
                }
                if level < 2 * n - 1 {
                    let key2 = MwsKey::Body { level: level + 1, a, b: b2, i: i2, j: j2, e };
                    let to = asm.node(key2.clone(), NodeKind::Var(var_at(a, level + 1, j2) as u32));
                    asm.edge(from, to, Some(bit), r(1.0));
                    next.insert(key2);
                } else if i2 != j2 {
                    let to = asm.node(MwsKey::ZeroSink { a, b: b2, i: i2, j: j2, e }, NodeKind::Sink(0));
                    asm.edge(from, to, Some(bit), r(1.0));
                } else {
                    hadamard_sinks(&mut asm, from, Some(bit), a, b2, i2, e);
                }
            }
        }
        frontier = next;
    }
    asm.finish(2 * n, start)
}

/// Node-count constant C in |G| ≤ C·(2n+3)·p(n)² for the strict builder.
pub const MWS_SIZE_CONSTANT: f64 = 8.0;

/// Deterministic OBDD for DISJ_n with order x1, y1, ..., xn, yn:
/// 2n chain nodes plus two sinks.
pub fn build_disj_obdd(n: usize) -> Result<QbpGraph, BuildError> {
    if n == 0 {
        return Err(BuildError::OutOfRange(n, "n >= 1"));
    }
    let id_x = |k: usize| (2 * (k - 1)) as NodeId;
    let id_y = |k: usize| (2 * (k - 1) + 1) as NodeId;
    let (sink0, sink1) = ((2 * n) as NodeId, (2 * n + 1) as NodeId);
    let mut nodes = Vec::with_capacity(2 * n + 2);
    let mut edges = Vec::with_capacity(4 * n);
    for k in 1..=n {
        nodes.push(Node { id: id_x(k), kind: NodeKind::Var(k as u32) });
        nodes.push(Node { id: id_y(k), kind: NodeKind::Var((n + k) as u32) });
        let next = if k < n { id_x(k + 1) } else { sink1 };
        edges.push(Edge { from: id_x(k), to: next, bit: Some(0), amp: r(1.0) });
        edges.push(Edge { from: id_x(k), to: id_y(k), bit: Some(1), amp: r(1.0) });
        edges.push(Edge { from: id_y(k), to: next, bit: Some(0), amp: r(1.0) });
        edges.push(Edge { from: id_y(k), to: sink0, bit: Some(1), amp: r(1.0) });
    }
    nodes.push(Node { id: sink0, kind: NodeKind::Sink(0) });
    nodes.push(Node { id: sink1, kind: NodeKind::Sink(1) });
    Ok(QbpGraph { num_vars: 2 * n, nodes, edges, start: id_x(1) })
}

/// Same graph with complemented sink labels.
pub fn complement_sinks(g: &QbpGraph) -> QbpGraph {
    let mut out = g.clone();
    for node in &mut out.nodes {
        if let NodeKind::Sink(l) = node.kind {
            node.kind = NodeKind::Sink(1 - l);
        }
    }
    out
}

/// Deterministic OBDD (order x1..xn, y1..yn) for [s(x) = s(y) ∈ 1..n]·y_{s(x)},
/// the function computed by the x-first branch of the MWS construction.
pub fn build_mws_half_obdd(n: usize) -> Result<QbpGraph, BuildError> {
    let MwsParams { p, .. } = MwsParams::new(n)?;
    let mut asm: Assembler<(usize, usize, usize, u8)> = Assembler::new();
    let sink0 = asm.node((usize::MAX, 0, 0, 0), NodeKind::Sink(0));
    let sink1 = asm.node((usize::MAX, 0, 0, 1), NodeKind::Sink(1));
    let start = asm.node((1, 0, 0, 0), NodeKind::Var(1));
    let mut frontier = BTreeSet::from([(1usize, 0usize, 0usize, 0u8)]);
    for level in 1..=2 * n {
        let mut next = BTreeSet::new();
        for &(lv, i, j, b) in &frontier {
            let from = asm.ids[&(lv, i, j, b)];
            for bit in 0..2u8 {
                let beta = bit as usize;
                let (mut i2, mut j2, mut b2) = (i, j, b);
                if level <= n {
                    i2 = (i + level * beta) % p;
                } else {
                    let k = level - n;
                    j2 = (j + k * beta) % p;
                    if k == i {
                        b2 = bit;
                    }
                }
                let to = if level < 2 * n {
                    let key = (level + 1, i2, j2, b2);
                    next.insert(key);
                    asm.node(key, NodeKind::Var((level + 1) as u32))
                } else if i2 == j2 && (1..=n).contains(&i2) && b2 == 1 {
                    sink1
                } else {
                    sink0
                };
                asm.edge(from, to, Some(bit), r(1.0));
            }
        }
        frontier = next;
    }
    Ok(asm.finish(2 * n, start))
}

pub fn mws_half_eval(z: &[u8]) -> bool {
    let n = z.len() / 2;
    let p = smallest_prime_after(n).expect("n in range");
    let (x, y) = z.split_at(n);
    let (sx, sy) = (weighted_sum(x, p), weighted_sum(y, p));
    sx == sy && (1..=n).contains(&sx) && y[sx - 1] == 1
}

fn unitary_block(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<C64> {
    random::unitary(rng, d)
}

/// Leveled regular read-once QBP with order x_1..x_n: the start node fans out
/// by the first column of a random unitary, each further level applies a
/// random width×width unitary per bit, and the last level feeds `width`
/// sinks with alternating labels.
pub fn random_regular_qrobp(n: usize, width: usize, seed: u64) -> Result<QbpGraph, BuildError> {
    if n == 0 || width < 2 {
        return Err(BuildError::OutOfRange(n, "n >= 1, width >= 2"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nodes = vec![Node { id: 0, kind: NodeKind::Var(1) }];
    let mut edges = Vec::new();
    // Level ℓ ∈ 1..n holds nodes reading var ℓ+1; level n holds the sinks.
    let id = |level: usize, s: usize| (1 + (level - 1) * width + s) as NodeId;
    for level in 1..=n {
        for s in 0..width {
            let kind = if level < n { NodeKind::Var(level as u32 + 1) } else { NodeKind::Sink((s % 2) as u8) };
            nodes.push(Node { id: id(level, s), kind });
        }
    }
    for bit in 0..2u8 {
        let u = unitary_block(&mut rng, width);
        for s in 0..width {
            edges.push(Edge { from: 0, to: id(1, s), bit: Some(bit), amp: u[(s, 0)] });
        }
    }
    for level in 1..n {
        for bit in 0..2u8 {
            let u = unitary_block(&mut rng, width);
            for src in 0..width {
                for dst in 0..width {
                    edges.push(Edge { from: id(level, src), to: id(level + 1, dst), bit: Some(bit), amp: u[(dst, src)] });
                }
            }
        }
    }
    Ok(QbpGraph { num_vars: n, nodes, edges, start: 0 })
}

/// Regular read-once QBP whose start node reads `first_var` and splits into
/// two random branches with independent variable orders and separate sinks.
/// Both branches have `width` nodes per level.
pub fn random_two_order_qrobp(n: usize, width: usize, seed: u64) -> Result<QbpGraph, BuildError> {
    use rand::seq::SliceRandom;
    if n < 2 || width < 1 {
        return Err(BuildError::OutOfRange(n, "n >= 2, width >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vars: Vec<usize> = (1..=n).collect();
    vars.shuffle(&mut rng);
    let first = vars[0];
    let rest: Vec<usize> = vars[1..].to_vec();
    let mut orders = [rest.clone(), rest];
    orders[0].shuffle(&mut rng);
    orders[1].shuffle(&mut rng);

    let mut nodes = vec![Node { id: 0, kind: NodeKind::Var(first as u32) }];
    let mut edges = Vec::new();
    // Branch t, level ℓ ∈ 1..n (ℓ = n are sinks), slot s.
    let id = |t: usize, level: usize, s: usize| (1 + (t * n + level - 1) * width + s) as NodeId;
    for (t, order) in orders.iter().enumerate() {
        for level in 1..=n {
            for s in 0..width {
                let kind = if level < n {
                    NodeKind::Var(order[level - 1] as u32)
                } else {
                    NodeKind::Sink(((s + t) % 2) as u8)
                };
                nodes.push(Node { id: id(t, level, s), kind });
            }
        }
    }
    for bit in 0..2u8 {
        let u = unitary_block(&mut rng, 2 * width);
        for t in 0..2 {
            for s in 0..width {
                edges.push(Edge { from: 0, to: id(t, 1, s), bit: Some(bit), amp: u[(t * width + s, 0)] });
            }
        }
    }
    for t in 0..2 {
        for level in 1..n {
            for bit in 0..2u8 {
                let u = unitary_block(&mut rng, width);
                for src in 0..width {
                    for dst in 0..width {
                        edges.push(Edge {
                            from: id(t, level, src),
                            to: id(t, level + 1, dst),
                            bit: Some(bit),
                            amp: u[(dst, src)],
                        });
                    }
                }
            }
        }
    }
    Ok(QbpGraph { num_vars: n, nodes, edges, start: 0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index_bits;
    use crate::sim::{Simulator, VerifyMode};

    #[test]
    fn primes() {
        assert_eq!(smallest_prime_after(1), Ok(2));
        assert_eq!(smallest_prime_after(4), Ok(5));
        assert_eq!(smallest_prime_after(10), Ok(11));
        assert!(smallest_prime_after(0).is_err());
        assert!(smallest_prime_after(1_000_001).is_err());
        for n in 1..200 {
            let p = smallest_prime_after(n).unwrap();
            assert!(p > n && p <= 2 * n.max(1) + 1 && is_prime(p));
            assert!((n + 1..p).all(|q| !is_prime(q)));
        }
    }

    #[test]
    fn weighted_sums() {
        assert_eq!(weighted_sum(&[1, 0, 1, 0], 5), 4);
        assert_eq!(weighted_sum(&[0, 0, 0, 0], 5), 0);
        assert_eq!(sigma_subset(&[(2, 1), (4, 1)], 5), 1);
    }

    #[test]
    fn evaluators() {
        assert!(mws_eval(&[1, 0, 1, 0], &[0, 0, 0, 1]));
        assert!(!mws_eval(&[1, 0, 0, 0], &[0, 1, 0, 0]));
        assert!(!mws_eval(&[1, 0], &[1, 0]));
        assert!(disj_eval(&[1, 0], &[0, 1]));
        assert!(nd_eval(&[1, 1], &[0, 1]));
        assert_eq!(ind_eval(&[1, 0, 1], 3), Ok(true));
        assert!(ind_eval(&[1, 0, 1], 4).is_err());
        assert!(ws_eval(&[1, 0, 1, 0]) == false && ws_eval(&[0, 0, 0, 1]));
    }

    #[test]
    fn x_plan_puts_candidates_last() {
        for n in 2..=12 {
            let p = smallest_prime_after(n).unwrap();
            for jp in 0..p {
                let plan = x_plan(n, p, jp);
                let mut sorted = plan.order.clone();
                sorted.sort_unstable();
                assert_eq!(sorted, (2..=n).collect::<Vec<_>>());
                if let Some((v, u)) = plan.pair {
                    assert_eq!(&plan.order[plan.order.len() - 2..], &[v, u]);
                    assert_ne!(v, 2 * u % p);
                }
            }
        }
    }

    #[test]
    fn strict_mws_n2_is_exact_and_classified() {
        let g = build_mws_qbp(2, true).unwrap();
        let report = g.validate(1e-9).unwrap();
        assert!(report.ok(), "{:?}", &report.violations[..report.violations.len().min(5)]);
        let info = g.classify().unwrap();
        assert!(info.read_once && info.regular_read_once && info.leveled);
        assert_eq!(info.obdd_order, None);
        assert!(!g.nodes.iter().any(|v| v.kind == NodeKind::Unlabeled));
        let sim = Simulator::new(&g, 1e-9).unwrap();
        let d = sim.run(&[1, 0, 1, 0], sim.default_steps()).unwrap();
        assert!((d.p0 - 1.0).abs() < 1e-12);
        assert!(sim.verify_function(mws_eval_joint, VerifyMode::Exact, 1e-9).pass);
        for m in 0..16 {
            let s = sim.final_state(&index_bits(m, 4)).unwrap();
            assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_mws_is_exact_and_bounded() {
        for n in 2..=5 {
            let g = build_mws_qbp(n, false).unwrap();
            assert!(g.validate(1e-9).unwrap().ok());
            let sim = Simulator::new(&g, 1e-9).unwrap();
            assert!(sim.verify_function(mws_eval_joint, VerifyMode::Exact, 1e-9).pass, "n={n}");
        }
        let g = build_mws_qbp(2, false).unwrap();
        let body = g.nodes.iter().filter(|v| matches!(v.kind, NodeKind::Var(_))).count();
        assert!(body <= 5 * 36);
    }

    #[test]
    fn strict_and_grid_agree() {
        for n in 2..=4 {
            let (a, b) = (build_mws_qbp(n, true).unwrap(), build_mws_qbp(n, false).unwrap());
            let (sa, sb) = (Simulator::new(&a, 1e-9).unwrap(), Simulator::new(&b, 1e-9).unwrap());
            for m in 0..1u64 << (2 * n) {
                let z = index_bits(m, 2 * n);
                let (da, db) = (sa.run(&z, sa.default_steps()).unwrap(), sb.run(&z, sb.default_steps()).unwrap());
                assert!((da.p0 - db.p0).abs() < 1e-12 && (da.p1 - db.p1).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn disj_obdd_shape() {
        let g = build_disj_obdd(1).unwrap();
        assert_eq!(g.size(), 4);
        let g = build_disj_obdd(2).unwrap();
        assert_eq!(g.size(), 6);
        let info = g.classify().unwrap();
        assert!(info.read_once);
        assert_eq!(info.obdd_order, Some(vec![1, 3, 2, 4]));
    }

    #[test]
    fn random_generators_are_seeded_and_valid() {
        let g = random_regular_qrobp(3, 4, 7).unwrap();
        assert_eq!(g, random_regular_qrobp(3, 4, 7).unwrap());
        assert!(g.validate(1e-9).unwrap().ok());
        let info = g.classify().unwrap();
        assert!(info.regular_read_once && info.obdd_order.is_some());
        let sim = Simulator::new(&g, 1e-9).unwrap();
        for m in 0..8 {
            let d = sim.run(&index_bits(m, 3), 5).unwrap();
            assert!((d.p0 + d.p1 - 1.0).abs() < 1e-9);
        }
        let h = random_two_order_qrobp(4, 3, 11).unwrap();
        assert!(h.validate(1e-9).unwrap().ok());
        assert!(h.classify().unwrap().regular_read_once);
    }
}
