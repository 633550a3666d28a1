//! From a regular read-once QBP to a 2-partition protocol.
//!
//! After fixing every variable except one pair (x, y), each path reads x and
//! y exactly once. The restricted graph splits into a top part (unlabeled,
//! before the first read), two middle parts (x read first / y read first),
//! and a bottom part (after the second read). The top and bottom parts are
//! replaced by dummy chains, and each middle part becomes a one-way protocol:
//! the player holding the first-read variable runs it up to the first level
//! where the other variable appears, the other player finishes.

use std::collections::{BTreeMap, BTreeSet};

use crate::graph::{Adjacency, Edge, GraphError, Node, NodeKind, QbpGraph};
use crate::protocols::{self, Mat, MultiPartitionProtocol, PartitionSpec, ProtocolError, Subprotocol, Vector};
use crate::qinfo;
use crate::sim::{SimError, Simulator};
use crate::{NodeId, C64};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum BridgeError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("graph contains a cycle")]
    Cyclic,
    #[error("node {0} lies on paths of different lengths")]
    NotLeveled(NodeId),
    #[error("node {0} reads a variable other than the chosen pair")]
    UnfixedVariable(NodeId),
    #[error("node {0} is reached by paths that read different variables")]
    Irregular(NodeId),
    #[error("a path through node {0} reads a variable twice")]
    ReadTwice(NodeId),
    #[error("sink {0} is reached by a path that misses a variable")]
    NonRegular(NodeId),
    #[error("columns are not orthonormal (defect {0})")]
    NotIsometry(f64),
    #[error("no node reads either variable")]
    Empty,
}

const X: u8 = 1;
const Y: u8 = 2;

/// Four-part split of a restricted graph around the pair (x_var, y_var).
#[derive(Clone, Debug, PartialEq)]
pub struct PartDecomposition {
    pub x_var: u32,
    pub y_var: u32,
    pub s_x: Vec<NodeId>,
    pub s_y: Vec<NodeId>,
    /// Successors of second-read x nodes (reached from S_y).
    pub t_x: Vec<NodeId>,
    /// Successors of second-read y nodes (reached from S_x).
    pub t_y: Vec<NodeId>,
    pub top: Vec<NodeId>,
    pub middle_x: Vec<NodeId>,
    pub middle_y: Vec<NodeId>,
    pub bottom: Vec<NodeId>,
    pub entry_amplitudes: BTreeMap<NodeId, C64>,
    pub exit_amplitudes: BTreeMap<(NodeId, NodeId), C64>,
    pub d_source: BTreeMap<NodeId, usize>,
    pub d_sinks: BTreeMap<NodeId, usize>,
    /// Only one of S_x, S_y is nonempty.
    pub degenerate: bool,
}

impl PartDecomposition {
    pub fn entry_mass(&self) -> f64 {
        self.entry_amplitudes.values().map(|a| a.norm_sqr()).sum()
    }
}

/// Depth of every reachable node, checking that it is unique.
fn depths(adj: &Adjacency) -> Result<Vec<Option<usize>>, BridgeError> {
    let order = adj.topo_order().ok_or(BridgeError::Cyclic)?;
    let mut depth: Vec<Option<usize>> = vec![None; adj.len()];
    depth[adj.start] = Some(0);
    for &v in &order {
        let dv = depth[v].expect("topological order");
        for w in adj.successors(v) {
            match depth[w] {
                None => depth[w] = Some(dv + 1),
                Some(dw) if dw != dv + 1 => return Err(BridgeError::NotLeveled(adj.ids[w])),
                _ => {}
            }
        }
    }
    Ok(depth)
}

/// Outgoing edges of an unlabeled node, or of a labeled node for `bit`.
fn edges_for<'a>(adj: &'a Adjacency, v: usize, input: &BTreeMap<u32, u8>) -> &'a [(usize, C64)] {
    match adj.kinds[v] {
        NodeKind::Var(i) => &adj.out[v][*input.get(&i).unwrap_or(&0) as usize],
        _ => &adj.out[v][0],
    }
}

/// Applies `steps` transitions to a sparse state; sinks keep their amplitude.
fn propagate(adj: &Adjacency, init: &[(usize, C64)], input: &BTreeMap<u32, u8>, steps: usize) -> BTreeMap<usize, C64> {
    let mut state: BTreeMap<usize, C64> = BTreeMap::new();
    for &(v, a) in init {
        *state.entry(v).or_default() += a;
    }
    for _ in 0..steps {
        let mut next: BTreeMap<usize, C64> = BTreeMap::new();
        for (&v, &a) in &state {
            if matches!(adj.kinds[v], NodeKind::Sink(_)) {
                *next.entry(v).or_default() += a;
                continue;
            }
            for &(w, d) in edges_for(adj, v, input) {
                *next.entry(w).or_default() += a * d;
            }
        }
        state = next;
    }
    state
}

/// Splits a restricted graph in which only `x_var` and `y_var` remain.
pub fn decompose(g: &QbpGraph, x_var: u32, y_var: u32) -> Result<PartDecomposition, BridgeError> {
    let adj = Adjacency::new(g)?;
    let depth = depths(&adj)?;
    let order = adj.topo_order().ok_or(BridgeError::Cyclic)?;
    let label = |v: usize| match adj.kinds[v] {
        NodeKind::Var(i) if i == x_var => Ok(X),
        NodeKind::Var(i) if i == y_var => Ok(Y),
        NodeKind::Var(_) => Err(BridgeError::UnfixedVariable(adj.ids[v])),
        _ => Ok(0),
    };
    // Set of variables read strictly before each node; must be path-independent.
    let mut before: Vec<Option<u8>> = vec![None; adj.len()];
    before[adj.start] = Some(0);
    for &v in &order {
        let seen = before[v].expect("topological order");
        let l = label(v)?;
        if seen & l != 0 {
            return Err(BridgeError::ReadTwice(adj.ids[v]));
        }
        for w in adj.successors(v) {
            match before[w] {
                None => before[w] = Some(seen | l),
                Some(p) if p != seen | l => return Err(BridgeError::Irregular(adj.ids[w])),
                _ => {}
            }
        }
    }
    let sink_depth = order.iter().filter(|&&v| matches!(adj.kinds[v], NodeKind::Sink(_))).map(|&v| depth[v].unwrap()).max();
    let sink_depth = sink_depth.ok_or(BridgeError::Empty)?;
    let id = |v: usize| adj.ids[v];
    let mut dec = PartDecomposition {
        x_var,
        y_var,
        s_x: vec![],
        s_y: vec![],
        t_x: vec![],
        t_y: vec![],
        top: vec![],
        middle_x: vec![],
        middle_y: vec![],
        bottom: vec![],
        entry_amplitudes: BTreeMap::new(),
        exit_amplitudes: BTreeMap::new(),
        d_source: BTreeMap::new(),
        d_sinks: BTreeMap::new(),
        degenerate: false,
    };
    let mut t_set = BTreeSet::new();
    for &v in &order {
        let (seen, l) = (before[v].unwrap(), label(v)?);
        if matches!(adj.kinds[v], NodeKind::Sink(_)) && seen != X | Y {
            return Err(BridgeError::NonRegular(id(v)));
        }
        if matches!(adj.kinds[v], NodeKind::Sink(_)) && depth[v] != Some(sink_depth) {
            return Err(BridgeError::NotLeveled(id(v)));
        }
        match (seen, l) {
            (0, X) => dec.s_x.push(id(v)),
            (0, Y) => dec.s_y.push(id(v)),
            (0, _) => dec.top.push(id(v)),
            (s, _) if s == X => dec.middle_x.push(id(v)),
            (s, _) if s == Y => dec.middle_y.push(id(v)),
            _ => {}
        }
        if seen != 0 && l != 0 {
            for w in adj.successors(v) {
                if l == X {
                    dec.t_x.push(id(w));
                } else {
                    dec.t_y.push(id(w));
                }
                t_set.insert(w);
            }
        }
    }
    for list in [&mut dec.t_x, &mut dec.t_y] {
        list.sort_unstable();
        list.dedup();
    }
    if dec.t_x.iter().any(|v| dec.t_y.contains(v)) {
        return Err(BridgeError::Irregular(dec.t_x[0]));
    }
    for &v in &order {
        if before[v] == Some(X | Y) && !t_set.contains(&v) {
            dec.bottom.push(id(v));
        }
    }
    dec.middle_x.extend(dec.s_x.iter().copied());
    dec.middle_y.extend(dec.s_y.iter().copied());
    if dec.s_x.is_empty() && dec.s_y.is_empty() {
        return Err(BridgeError::Empty);
    }
    dec.degenerate = dec.s_x.is_empty() || dec.s_y.is_empty();

    let top: BTreeSet<usize> = order.iter().copied().filter(|&v| before[v] == Some(0) && label(v) == Ok(0)).collect();
    let mut amp = vec![C64::default(); adj.len()];
    amp[adj.start] = C64::new(1.0, 0.0);
    for &v in &order {
        if top.contains(&v) {
            let av = amp[v];
            for &(w, a) in &adj.out[v][0] {
                amp[w] += av * a;
            }
        }
    }
    for &s in dec.s_x.iter().chain(&dec.s_y) {
        let v = adj.pos[&s];
        dec.entry_amplitudes.insert(s, amp[v]);
        dec.d_source.insert(s, depth[v].unwrap());
    }
    for &t in &t_set {
        let d = sink_depth - depth[t].unwrap();
        dec.d_sinks.insert(id(t), d);
        let out = propagate(&adj, &[(t, C64::new(1.0, 0.0))], &BTreeMap::new(), d);
        for (w, a) in out {
            dec.exit_amplitudes.insert((id(t), id(w)), a);
        }
    }
    Ok(dec)
}

/// G'' together with the node bookkeeping used by the extraction.
#[derive(Clone, Debug)]
pub struct DummyChainGraph {
    pub graph: QbpGraph,
    pub x_var: u32,
    pub y_var: u32,
    /// First chain node below the new source for each entry node.
    pub heads: BTreeMap<NodeId, NodeId>,
    pub entry_amplitudes: BTreeMap<NodeId, C64>,
    pub s_x: Vec<NodeId>,
    pub s_y: Vec<NodeId>,
    pub degenerate: bool,
}

/// Replaces the top part by per-entry-node chains hanging off a new source
/// and the bottom part by per-exit-node chains ending in the exit amplitudes.
pub fn insert_dummy_chains(g: &QbpGraph, dec: &PartDecomposition) -> Result<DummyChainGraph, BridgeError> {
    let adj = Adjacency::new(g)?;
    let mut next_id = g.nodes.iter().map(|n| n.id).max().unwrap_or(0) + 1;
    let mut fresh = || {
        let id = next_id;
        next_id += 1;
        id
    };
    let t_all: BTreeSet<NodeId> = dec.t_x.iter().chain(&dec.t_y).copied().collect();
    let keep: BTreeSet<NodeId> = dec.middle_x.iter().chain(&dec.middle_y).copied().collect();
    let mut nodes: Vec<Node> = Vec::new();
    let mut edges: Vec<Edge> = Vec::new();
    let one = C64::new(1.0, 0.0);
    let unlabeled = |id| Node { id, kind: NodeKind::Unlabeled };

    let mut heads = BTreeMap::new();
    let s_all: Vec<NodeId> = dec.s_x.iter().chain(&dec.s_y).copied().collect();
    let start = if s_all.len() == 1 && dec.d_source[&s_all[0]] == 0 {
        heads.insert(s_all[0], s_all[0]);
        s_all[0]
    } else {
        let source = fresh();
        nodes.push(unlabeled(source));
        for &v in &s_all {
            let len = dec.d_source[&v] - 1;
            let chain: Vec<NodeId> = (0..len).map(|_| fresh()).collect();
            let mut prev = source;
            let mut amp = dec.entry_amplitudes[&v];
            for &c in chain.iter().chain(std::iter::once(&v)) {
                if c != v {
                    nodes.push(unlabeled(c));
                }
                edges.push(Edge { from: prev, to: c, bit: None, amp });
                heads.entry(v).or_insert(c);
                prev = c;
                amp = one;
            }
        }
        source
    };

    let mut t_head = BTreeMap::new();
    for &t in &t_all {
        let len = dec.d_sinks[&t] + 1;
        let chain: Vec<NodeId> = (0..len).map(|_| fresh()).collect();
        for w in chain.windows(2) {
            edges.push(Edge { from: w[0], to: w[1], bit: None, amp: one });
        }
        let last = *chain.last().expect("nonempty chain");
        for (&(from, sink), &amp) in dec.exit_amplitudes.range((t, 0)..=(t, NodeId::MAX)) {
            debug_assert_eq!(from, t);
            if amp.norm() > 0.0 {
                edges.push(Edge { from: last, to: sink, bit: None, amp });
            }
        }
        nodes.extend(chain.iter().map(|&c| unlabeled(c)));
        t_head.insert(t, chain[0]);
    }

    for &v in &keep {
        let node = g.node(v).expect("decomposed node");
        nodes.push(*node);
    }
    for e in &g.edges {
        if keep.contains(&e.from) {
            let to = t_head.get(&e.to).copied().unwrap_or(e.to);
            edges.push(Edge { to, ..*e });
        }
    }
    for n in g.sinks() {
        nodes.push(*n);
    }
    let _ = adj;
    Ok(DummyChainGraph {
        graph: QbpGraph { num_vars: g.num_vars, nodes, edges, start },
        x_var: dec.x_var,
        y_var: dec.y_var,
        heads,
        entry_amplitudes: dec.entry_amplitudes.clone(),
        s_x: dec.s_x.clone(),
        s_y: dec.s_y.clone(),
        degenerate: dec.degenerate,
    })
}

/// Unitary whose column j equals the given vector for each assigned j; the
/// remaining columns span the orthogonal complement.
pub fn complete_to_unitary(d: usize, assigned: &[(usize, Vector)]) -> Result<Mat, BridgeError> {
    let k = assigned.len();
    let v = Mat::from_fn(d, k, |r, c| assigned[c].1[r]);
    let defect = (v.adjoint() * &v - Mat::identity(k, k)).norm();
    if defect > 1e-8 {
        return Err(BridgeError::NotIsometry(defect));
    }
    let proj = Mat::identity(d, d) - &v * v.adjoint();
    let (_, vecs) = qinfo::eigh(&proj);
    let mut u = Mat::zeros(d, d);
    let taken: BTreeSet<usize> = assigned.iter().map(|(j, _)| *j).collect();
    for (j, col) in assigned {
        u.set_column(*j, col);
    }
    let free: Vec<usize> = (0..d).filter(|j| !taken.contains(j)).collect();
    for (n, &j) in free.iter().enumerate() {
        u.set_column(j, &vecs.column(d - free.len() + n));
    }
    Ok(u)
}

/// Sinks of the graph in id order: the output space of extracted protocols.
pub fn sink_ids(g: &QbpGraph) -> Vec<NodeId> {
    let mut s: Vec<NodeId> = g.sinks().map(|n| n.id).collect();
    s.sort_unstable();
    s
}

/// Extracted protocol on variables (1 = x, 2 = y), output space = sinks.
#[derive(Clone, Debug)]
pub struct Extraction {
    pub protocol: MultiPartitionProtocol,
    /// Sub-blocks (side, level) before merging, with their weights.
    pub sub_blocks: Vec<(u8, usize, f64)>,
    pub degenerate: bool,
    pub sinks: Vec<NodeId>,
}

pub fn extract_protocol(dc: &DummyChainGraph) -> Result<Extraction, BridgeError> {
    let g = &dc.graph;
    let adj = Adjacency::new(g)?;
    let depth = depths(&adj)?;
    let sinks = sink_ids(g);
    let sink_pos: BTreeMap<usize, usize> = sinks.iter().enumerate().map(|(k, s)| (adj.pos[s], k)).collect();
    let w_dim = sinks.len();
    let sink_level = sink_pos.keys().filter_map(|&v| depth[v]).max().ok_or(BridgeError::Empty)?;

    let mut subs = Vec::new();
    let mut amps = Vec::new();
    let mut meta = Vec::new();
    for (side, entries) in [(X, &dc.s_x), (Y, &dc.s_y)] {
        let (first, second) = if side == X { (dc.x_var, dc.y_var) } else { (dc.y_var, dc.x_var) };
        // Level of the first opposite-variable read reachable from each entry node.
        let mut by_level: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &v in entries.iter() {
            let pv = adj.pos[&v];
            let mut stack = vec![pv];
            let mut seen = BTreeSet::from([pv]);
            let mut m = usize::MAX;
            while let Some(u) = stack.pop() {
                if adj.kinds[u] == NodeKind::Var(second) {
                    m = m.min(depth[u].unwrap());
                    continue;
                }
                for w in adj.successors(u) {
                    if seen.insert(w) {
                        stack.push(w);
                    }
                }
            }
            by_level.entry(m).or_default().push(pv);
        }
        let partition = if side == X {
            PartitionSpec::new(vec![1], vec![2], 2)?
        } else {
            PartitionSpec::new(vec![2], vec![1], 2)?
        };
        for (&m, heads) in &by_level {
            let q: f64 = heads.iter().map(|v| dc.entry_amplitudes[&adj.ids[*v]].norm_sqr()).sum();
            let run = |bit: u8, init: &[(usize, C64)], steps: usize, var: u32| {
                propagate(&adj, init, &BTreeMap::from([(var, bit)]), steps)
            };
            let mut level_nodes = BTreeSet::new();
            let mut alice_images = Vec::new();
            for c in 0..2u8 {
                let imgs: Vec<BTreeMap<usize, C64>> = heads
                    .iter()
                    .map(|&v| run(c, &[(v, C64::new(1.0, 0.0))], m - depth[v].unwrap(), first))
                    .collect();
                for img in &imgs {
                    level_nodes.extend(img.keys().copied());
                }
                alice_images.push(imgs);
            }
            let level_nodes: Vec<usize> = level_nodes.into_iter().collect();
            let (k, l) = (heads.len(), level_nodes.len());
            let dim = k + l + w_dim;
            let lpos: BTreeMap<usize, usize> = level_nodes.iter().enumerate().map(|(j, &u)| (u, k + j)).collect();
            let alice: Vec<Mat> = alice_images
                .iter()
                .map(|imgs| {
                    let cols: Vec<(usize, Vector)> = imgs
                        .iter()
                        .enumerate()
                        .map(|(j, img)| {
                            let mut col = Vector::zeros(dim);
                            for (u, a) in img {
                                col[lpos[u]] = *a;
                            }
                            (j, col)
                        })
                        .collect();
                    complete_to_unitary(dim, &cols)
                })
                .collect::<Result<_, _>>()?;
            let bob: Vec<Mat> = (0..2u8)
                .map(|d| {
                    let cols: Vec<(usize, Vector)> = level_nodes
                        .iter()
                        .map(|&u| {
                            let img = run(d, &[(u, C64::new(1.0, 0.0))], sink_level - m, second);
                            let mut col = Vector::zeros(dim);
                            for (w, a) in img {
                                col[k + l + sink_pos[&w]] = a;
                            }
                            (lpos[&u], col)
                        })
                        .collect();
                    complete_to_unitary(dim, &cols)
                })
                .collect::<Result<_, _>>()?;
            let mut initial = Vector::zeros(dim);
            if q > 0.0 {
                for (j, v) in heads.iter().enumerate() {
                    initial[j] = dc.entry_amplitudes[&adj.ids[*v]] / q.sqrt();
                }
            } else {
                initial[0] = C64::new(1.0, 0.0);
            }
            let mut embedding = Mat::zeros(w_dim, dim);
            for s in 0..w_dim {
                embedding[(s, k + l + s)] = C64::new(1.0, 0.0);
            }
            subs.push(Subprotocol {
                partition: partition.clone(),
                initial,
                alice_ops: vec![alice],
                bob_ops: vec![bob],
                embedding,
                message_dim: l,
            });
            amps.push(C64::new(q.sqrt(), 0.0));
            meta.push((side, m, q));
        }
    }
    let labels: Vec<f64> = sinks
        .iter()
        .map(|s| match g.node(*s).map(|n| n.kind) {
            Some(NodeKind::Sink(1)) => 1.0,
            _ => 0.0,
        })
        .collect();
    let proj = |val: f64| {
        Mat::from_diagonal(&Vector::from_iterator(w_dim, labels.iter().map(|&l| C64::new((l == val) as u8 as f64, 0.0))))
    };
    let raw = MultiPartitionProtocol { num_vars: 2, subprotocols: subs, amplitudes: amps, coins: vec![1.0], measurement: [proj(0.0), proj(1.0)] };
    let protocol = protocols::merge_to_two_partitions(&raw)?;
    Ok(Extraction { protocol, sub_blocks: meta, degenerate: dc.degenerate, sinks })
}

/// Largest |⟨ψ_{v1,ℓ}(z1)|ψ_{v2,ℓ}(z2)⟩| over chain heads v1 (x side),
/// v2 (y side), inputs z1, z2 and all levels from the heads to the sinks.
#[derive(Clone, Debug, PartialEq)]
pub struct OrthogonalityReport {
    pub max_overlap: f64,
    pub comparisons: usize,
    pub pass: bool,
}

pub fn subspace_orthogonality_check(dc: &DummyChainGraph, tol: f64) -> Result<OrthogonalityReport, BridgeError> {
    let adj = Adjacency::new(&dc.graph)?;
    let depth = depths(&adj)?;
    let sink_level = (0..adj.len()).filter(|&v| matches!(adj.kinds[v], NodeKind::Sink(_))).filter_map(|v| depth[v]).max().unwrap_or(0);
    let inputs: Vec<BTreeMap<u32, u8>> =
        (0..4u8).map(|m| BTreeMap::from([(dc.x_var, m & 1), (dc.y_var, m >> 1)])).collect();
    let mut max_overlap: f64 = 0.0;
    let mut comparisons = 0;
    for &v1 in &dc.s_x {
        for &v2 in &dc.s_y {
            let (h1, h2) = (adj.pos[&dc.heads[&v1]], adj.pos[&dc.heads[&v2]]);
            let base = depth[h1].unwrap();
            for z1 in &inputs {
                for z2 in &inputs {
                    let mut a = BTreeMap::from([(h1, C64::new(1.0, 0.0))]);
                    let mut b = BTreeMap::from([(h2, C64::new(1.0, 0.0))]);
                    for _ in base..=sink_level {
                        let dot: C64 = a.iter().filter_map(|(k, x)| b.get(k).map(|y| x.conj() * y)).sum();
                        max_overlap = max_overlap.max(dot.norm());
                        comparisons += 1;
                        a = propagate(&adj, &a.into_iter().collect::<Vec<_>>(), z1, 1);
                        b = propagate(&adj, &b.into_iter().collect::<Vec<_>>(), z2, 1);
                    }
                }
            }
        }
    }
    Ok(OrthogonalityReport { max_overlap, comparisons, pass: max_overlap <= tol })
}

/// Sink amplitudes (in `sinks` order) of a graph's final state.
pub fn sink_amplitudes(g: &QbpGraph, input: &[u8], sinks: &[NodeId], tol: f64) -> Result<Vector, BridgeError> {
    let sim = Simulator::new(g, tol)?;
    let state = sim.evolve_to_sinks(input)?;
    Ok(Vector::from_iterator(sinks.len(), sinks.iter().map(|&s| state.amp(s))))
}

/// Outcome of running the whole pipeline on one (graph, pair, background).
#[derive(Clone, Debug)]
pub struct BridgeCheck {
    pub max_deviation: f64,
    pub dummy_deviation: f64,
    pub orthogonality: OrthogonalityReport,
    pub protocol_valid: bool,
    pub degenerate: bool,
    pub entry_mass: f64,
    pub protocol_error: f64,
    pub node_bound_ok: bool,
}

impl BridgeCheck {
    pub fn pass(&self, tol: f64) -> bool {
        self.max_deviation <= tol
            && self.dummy_deviation <= tol
            && self.orthogonality.pass
            && self.protocol_valid
            && (self.entry_mass - 1.0).abs() <= tol
            && self.node_bound_ok
    }
}

/// Restricts `g` to `background` (every variable except x_var and y_var),
/// builds G'', extracts the protocol and compares its result states with the
/// final states of `g` on all four completions. `f` is the reference
/// function of `g`, used for the restricted protocol error.
pub fn bridge_check(
    g: &QbpGraph,
    x_var: u32,
    y_var: u32,
    background: &BTreeMap<u32, u8>,
    f: &dyn Fn(&[u8]) -> bool,
    tol: f64,
) -> Result<BridgeCheck, BridgeError> {
    let restricted = g.restrict(background)?;
    let dec = decompose(&restricted, x_var, y_var)?;
    let dc = insert_dummy_chains(&restricted, &dec)?;
    let ex = extract_protocol(&dc)?;
    let protocol_valid = ex.protocol.validate(tol).is_ok();
    let orthogonality = subspace_orthogonality_check(&dc, tol)?;
    let sim = Simulator::new(g, tol)?;
    let full = |c: u8, d: u8| {
        let mut z = vec![0u8; g.num_vars];
        for (&v, &b) in background {
            z[v as usize - 1] = b;
        }
        z[x_var as usize - 1] = c;
        z[y_var as usize - 1] = d;
        z
    };
    let mut max_deviation: f64 = 0.0;
    let mut dummy_deviation: f64 = 0.0;
    let mut protocol_error: f64 = 0.0;
    for m in 0..4u8 {
        let (c, d) = (m & 1, m >> 1);
        let z = full(c, d);
        let state = sim.final_state(&z)?;
        let expect = Vector::from_iterator(ex.sinks.len(), ex.sinks.iter().map(|&s| state.amp(s)));
        let got = ex.protocol.pure_result(0, &[c, d]);
        max_deviation = max_deviation.max((&got - &expect).norm());
        let gpp = sink_amplitudes(&dc.graph, &z, &ex.sinks, tol)?;
        dummy_deviation = dummy_deviation.max((&gpp - &expect).norm());
        let p = ex.protocol.output_distribution(&[c, d])?;
        protocol_error = protocol_error.max(1.0 - p[f(&z) as usize]);
    }
    let extra: usize = dec.d_source.values().sum::<usize>() + dec.d_sinks.values().map(|d| d + 1).sum::<usize>();
    let node_bound_ok = dc.graph.size() <= restricted.size() + extra + 2;
    Ok(BridgeCheck {
        max_deviation,
        dummy_deviation,
        orthogonality,
        protocol_valid,
        degenerate: dc.degenerate,
        entry_mass: dec.entry_mass(),
        protocol_error,
        node_bound_ok,
    })
}

/// All 3^k assignments to the pairs (x_j, y_j), j ≠ i, with x_j ∧ y_j = 0.
pub fn zero_and_backgrounds(pairs: &[(u32, u32)]) -> Vec<BTreeMap<u32, u8>> {
    let mut out = vec![BTreeMap::new()];
    for &(x, y) in pairs {
        let mut next = Vec::with_capacity(out.len() * 3);
        for base in &out {
            for (a, b) in [(0u8, 0u8), (1, 0), (0, 1)] {
                let mut m = base.clone();
                m.insert(x, a);
                m.insert(y, b);
                next.push(m);
            }
        }
        out = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::{build_mws_qbp, mws_eval_joint, random_regular_qrobp};

    fn mws_background(n: usize, i: usize) -> Vec<BTreeMap<u32, u8>> {
        let pairs: Vec<(u32, u32)> = (1..=n).filter(|&j| j != i).map(|j| (j as u32, (n + j) as u32)).collect();
        zero_and_backgrounds(&pairs)
    }

    #[test]
    fn backgrounds_count() {
        assert_eq!(zero_and_backgrounds(&[(1, 3), (2, 4)]).len(), 9);
        assert!(zero_and_backgrounds(&[(1, 3)]).iter().all(|m| m[&1] & m[&3] == 0));
    }

    #[test]
    fn unitary_completion() {
        let v = Vector::from_vec(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8), C64::default()]);
        let u = complete_to_unitary(3, &[(1, v.clone())]).unwrap();
        assert!((u.adjoint() * &u - Mat::identity(3, 3)).norm() < 1e-12);
        assert!((u.column(1) - v).norm() < 1e-15);
        assert!(complete_to_unitary(2, &[(0, Vector::from_vec(vec![C64::new(2.0, 0.0), C64::default()]))]).is_err());
    }

    #[test]
    fn mws_two_decomposes() {
        let g = build_mws_qbp(2, true).unwrap();
        let bg = BTreeMap::from([(2u32, 0u8), (4, 0)]);
        let restricted = g.restrict(&bg).unwrap();
        assert_eq!(restricted.size(), g.size());
        let dec = decompose(&restricted, 1, 3).unwrap();
        assert!((dec.entry_mass() - 1.0).abs() < 1e-9);
        assert!(dec.s_x.iter().all(|v| !dec.s_y.contains(v)));
        assert!(dec.middle_x.iter().all(|v| !dec.middle_y.contains(v)));
        let dc = insert_dummy_chains(&restricted, &dec).unwrap();
        assert!(dc.graph.validate(1e-9).unwrap().ok());
        assert!(subspace_orthogonality_check(&dc, 1e-9).unwrap().pass);
    }

    #[test]
    fn mws_pipeline_matches_final_states() {
        let n = 2;
        let g = build_mws_qbp(n, true).unwrap();
        for i in 1..=n {
            for bg in mws_background(n, i) {
                let chk = bridge_check(&g, i as u32, (n + i) as u32, &bg, &mws_eval_joint, 1e-9).unwrap();
                assert!(chk.pass(1e-9), "{chk:?}");
                assert!(chk.protocol_error <= 1e-9);
            }
        }
    }

    #[test]
    fn random_pipeline_matches_final_states() {
        let g = random_regular_qrobp(3, 4, 7).unwrap();
        let bg = BTreeMap::from([(1u32, 1u8)]);
        let chk = bridge_check(&g, 2, 3, &bg, &|_| false, 1e-9).unwrap();
        assert!(chk.max_deviation <= 1e-9 && chk.dummy_deviation <= 1e-9, "{chk:?}");
        assert!(chk.degenerate);
    }

    #[test]
    fn single_sided_is_degenerate() {
        let g = random_regular_qrobp(2, 2, 3).unwrap();
        let dec = decompose(&g, 1, 2).unwrap();
        assert!(dec.degenerate && dec.s_y.is_empty());
        let dc = insert_dummy_chains(&g, &dec).unwrap();
        let ex = extract_protocol(&dc).unwrap();
        assert_eq!(ex.protocol.subprotocols.len(), 1);
    }
}
