//! QBP data model: nodes, amplitude edges, validation, classification,
//! restriction and the JSON/DOT formats.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::C64;

pub type NodeId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NodeKind {
    /// Reads variable `i` (1-based).
    Var(u32),
    Sink(u8),
    Unlabeled,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub from: NodeId,
    pub to: NodeId,
    /// `None` exactly when `from` is unlabeled.
    pub bit: Option<u8>,
    pub amp: C64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QbpGraph {
    pub num_vars: usize,
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    pub start: NodeId,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GraphError {
    #[error("duplicate node id {0}")]
    DuplicateNode(NodeId),
    #[error("start node {0} does not exist")]
    MissingStart(NodeId),
    #[error("edge {from}->{to} references unknown node {missing}")]
    DanglingEdge { from: NodeId, to: NodeId, missing: NodeId },
    #[error("node {node} reads variable {var} outside 1..={num_vars}")]
    VarOutOfRange { node: NodeId, var: u32, num_vars: usize },
    #[error("sink {node} has label {label}, expected 0 or 1")]
    BadSinkLabel { node: NodeId, label: u8 },
    #[error("sink {0} has an outgoing edge")]
    SinkWithEdge(NodeId),
    #[error("edge {from}->{to}: bit {bit:?} does not match the kind of its source")]
    BitMismatch { from: NodeId, to: NodeId, bit: Option<u8> },
    #[error("duplicate edge {from}->{to} with bit {bit:?}")]
    DuplicateEdge { from: NodeId, to: NodeId, bit: Option<u8> },
    #[error("edge {from}->{to} has a non-finite amplitude")]
    NonFinite { from: NodeId, to: NodeId },
    #[error("assignment mentions unknown variable {0}")]
    UnknownVariable(u32),
    #[error("parse error: {0}")]
    Parse(String),
}

/// Dense indexing of a graph: node positions and per-bit outgoing edges.
#[derive(Clone, Debug)]
pub struct Adjacency {
    pub pos: HashMap<NodeId, usize>,
    pub kinds: Vec<NodeKind>,
    pub ids: Vec<NodeId>,
    /// `out[v][b]`; unlabeled nodes store their edges under both bits.
    pub out: Vec<[Vec<(usize, C64)>; 2]>,
    pub start: usize,
}

impl Adjacency {
    pub fn new(g: &QbpGraph) -> Result<Self, GraphError> {
        g.check_structure()?;
        let pos: HashMap<NodeId, usize> =
            g.nodes.iter().enumerate().map(|(k, n)| (n.id, k)).collect();
        let mut out = vec![[Vec::new(), Vec::new()]; g.nodes.len()];
        for e in &g.edges {
            let (u, w) = (pos[&e.from], pos[&e.to]);
            match e.bit {
                Some(b) => out[u][b as usize].push((w, e.amp)),
                None => {
                    out[u][0].push((w, e.amp));
                    out[u][1].push((w, e.amp));
                }
            }
        }
        Ok(Adjacency {
            start: pos[&g.start],
            kinds: g.nodes.iter().map(|n| n.kind).collect(),
            ids: g.nodes.iter().map(|n| n.id).collect(),
            pos,
            out,
        })
    }

    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    /// Distinct successors of `v`, in first-seen order.
    pub fn successors(&self, v: usize) -> Vec<usize> {
        let mut seen = Vec::new();
        for b in 0..2 {
            for &(w, _) in &self.out[v][b] {
                if !seen.contains(&w) {
                    seen.push(w);
                }
            }
        }
        seen
    }

    /// Reachable nodes in topological order, or `None` if a cycle is reachable.
    pub fn topo_order(&self) -> Option<Vec<usize>> {
        let n = self.len();
        let mut reach = vec![false; n];
        let mut stack = vec![self.start];
        reach[self.start] = true;
        while let Some(v) = stack.pop() {
            for w in self.successors(v) {
                if !reach[w] {
                    reach[w] = true;
                    stack.push(w);
                }
            }
        }
        let mut indeg = vec![0usize; n];
        for v in (0..n).filter(|&v| reach[v]) {
            for w in self.successors(v) {
                indeg[w] += 1;
            }
        }
        let mut order = Vec::new();
        let mut ready = vec![self.start];
        while let Some(v) = ready.pop() {
            order.push(v);
            for w in self.successors(v) {
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    ready.push(w);
                }
            }
        }
        (order.len() == reach.iter().filter(|&&r| r).count()).then_some(order)
    }

    /// Predecessor lists (distinct nodes) over all edges.
    pub fn predecessors(&self) -> Vec<Vec<usize>> {
        let mut pred = vec![Vec::new(); self.len()];
        for v in 0..self.len() {
            for w in self.successors(v) {
                pred[w].push(v);
            }
        }
        pred
    }
}

/// Orthonormality defect between two transition rows.
#[derive(Clone, Debug, PartialEq)]
pub struct RowViolation {
    pub u: NodeId,
    pub bit_u: Option<u8>,
    pub v: NodeId,
    pub bit_v: Option<u8>,
    /// |Σ_w δ*(u,w,b_u) δ(v,w,b_v) − [u=v]|.
    pub defect: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub well_formed: bool,
    pub unidirectional: bool,
    pub violations: Vec<RowViolation>,
    /// Nodes whose nonzero-amplitude predecessors carry more than one label.
    pub direction_violations: Vec<NodeId>,
    pub tol: f64,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.well_formed && self.unidirectional
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassInfo {
    pub acyclic: bool,
    pub leveled: bool,
    pub read_once: bool,
    pub regular_read_once: bool,
    pub obdd_order: Option<Vec<u32>>,
    pub reversible_classical: bool,
    pub width: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
enum Label {
    Var(u32),
    Dummy,
}

fn label_of(kind: NodeKind) -> Option<Label> {
    match kind {
        NodeKind::Var(i) => Some(Label::Var(i)),
        NodeKind::Unlabeled => Some(Label::Dummy),
        NodeKind::Sink(_) => None,
    }
}

/// Bit set over variable indices 0..=num_vars.
#[derive(Clone, PartialEq, Eq)]
struct VarSet(Vec<u64>);

impl VarSet {
    fn new(n: usize) -> Self {
        VarSet(vec![0; n / 64 + 1])
    }
    fn insert(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }
    fn contains(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }
    fn union_with(&mut self, other: &VarSet) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a |= *b;
        }
    }
    fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.0.len() * 64).filter(|&i| self.contains(i))
    }
}

impl QbpGraph {
    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn size(&self) -> usize {
        self.nodes.len()
    }

    pub fn sinks(&self) -> impl Iterator<Item = &Node> {
        self.nodes
            .iter()
            .filter(|n| matches!(n.kind, NodeKind::Sink(_)))
    }

    /// Checks that ids resolve and the per-node/per-edge invariants hold.
    pub fn check_structure(&self) -> Result<(), GraphError> {
        let mut kinds = HashMap::with_capacity(self.nodes.len());
        for n in &self.nodes {
            if kinds.insert(n.id, n.kind).is_some() {
                return Err(GraphError::DuplicateNode(n.id));
            }
            match n.kind {
                NodeKind::Var(i) if i == 0 || i as usize > self.num_vars => {
                    return Err(GraphError::VarOutOfRange {
                        node: n.id,
                        var: i,
                        num_vars: self.num_vars,
                    })
                }
                NodeKind::Sink(l) if l > 1 => {
                    return Err(GraphError::BadSinkLabel { node: n.id, label: l })
                }
                _ => {}
            }
        }
        if !kinds.contains_key(&self.start) {
            return Err(GraphError::MissingStart(self.start));
        }
        let mut seen = HashSet::with_capacity(self.edges.len());
        for e in &self.edges {
            let (from, to) = (e.from, e.to);
            for id in [from, to] {
                if !kinds.contains_key(&id) {
                    return Err(GraphError::DanglingEdge { from, to, missing: id });
                }
            }
            let ok_bit = match (kinds[&from], e.bit) {
                (NodeKind::Sink(_), _) => return Err(GraphError::SinkWithEdge(from)),
                (NodeKind::Var(_), Some(b)) => b <= 1,
                (NodeKind::Unlabeled, None) => true,
                _ => false,
            };
            if !ok_bit {
                return Err(GraphError::BitMismatch { from, to, bit: e.bit });
            }
            if !(e.amp.re.is_finite() && e.amp.im.is_finite()) {
                return Err(GraphError::NonFinite { from, to });
            }
            if !seen.insert((from, to, e.bit)) {
                return Err(GraphError::DuplicateEdge { from, to, bit: e.bit });
            }
        }
        Ok(())
    }

    /// Well-formedness (orthonormal transition rows) and unidirectionality.
    pub fn validate(&self, tol: f64) -> Result<ValidationReport, GraphError> {
        let adj = Adjacency::new(self)?;
        let n = adj.len();
        let bits_of = |v: usize| -> &'static [Option<u8>] {
            match adj.kinds[v] {
                NodeKind::Var(_) => &[Some(0), Some(1)],
                NodeKind::Unlabeled => &[None],
                NodeKind::Sink(_) => &[],
            }
        };
        // incoming[w] = (u, bit, amp); unlabeled sources use bit None.
        let mut incoming: Vec<Vec<(usize, Option<u8>, C64)>> = vec![Vec::new(); n];
        for e in &self.edges {
            incoming[adj.pos[&e.to]].push((adj.pos[&e.from], e.bit, e.amp));
        }
        let mut gram: HashMap<(usize, Option<u8>, usize, Option<u8>), C64> = HashMap::new();
        for inc in &incoming {
            for &(u, bu, au) in inc {
                for &(v, bv, av) in inc {
                    if u > v {
                        continue;
                    }
                    let same_var = matches!(
                        (adj.kinds[u], adj.kinds[v]),
                        (NodeKind::Var(a), NodeKind::Var(b)) if a == b
                    );
                    if (same_var || u == v) && bu != bv {
                        continue;
                    }
                    *gram.entry((u, bu, v, bv)).or_default() += au.conj() * av;
                }
            }
        }
        let mut violations = Vec::new();
        for u in 0..n {
            for &b in bits_of(u) {
                let norm = gram.get(&(u, b, u, b)).copied().unwrap_or_default();
                let defect = (norm - C64::new(1.0, 0.0)).norm();
                if defect > tol {
                    violations.push(RowViolation {
                        u: adj.ids[u],
                        bit_u: b,
                        v: adj.ids[u],
                        bit_v: b,
                        defect,
                    });
                }
            }
        }
        let mut off: Vec<_> = gram
            .iter()
            .filter(|(&(u, _, v, _), val)| u != v && val.norm() > tol)
            .map(|(&(u, bu, v, bv), val)| RowViolation {
                u: adj.ids[u],
                bit_u: bu,
                v: adj.ids[v],
                bit_v: bv,
                defect: val.norm(),
            })
            .collect();
        off.sort_by(|a, b| (a.u, a.bit_u, a.v, a.bit_v).cmp(&(b.u, b.bit_u, b.v, b.bit_v)));
        violations.extend(off);

        let mut direction_violations = Vec::new();
        for (w, inc) in incoming.iter().enumerate() {
            let labels: BTreeSet<Label> = inc
                .iter()
                .filter(|(_, _, a)| *a != C64::default())
                .filter_map(|&(u, _, _)| label_of(adj.kinds[u]))
                .collect();
            if labels.len() > 1 {
                direction_violations.push(adj.ids[w]);
            }
        }
        direction_violations.sort_unstable();
        Ok(ValidationReport {
            well_formed: violations.is_empty(),
            unidirectional: direction_violations.is_empty(),
            violations,
            direction_violations,
            tol,
        })
    }

    /// Structural classification by exhaustive level and path analysis over
    /// the part reachable from the start node.
    pub fn classify(&self) -> Result<ClassInfo, GraphError> {
        let adj = Adjacency::new(self)?;
        let Some(order) = adj.topo_order() else {
            return Ok(ClassInfo {
                acyclic: false,
                leveled: false,
                read_once: false,
                regular_read_once: false,
                obdd_order: None,
                reversible_classical: false,
                width: None,
            });
        };
        let n = adj.len();
        let nv = self.num_vars;
        let var_of = |v: usize| match adj.kinds[v] {
            NodeKind::Var(i) => Some(i as usize),
            _ => None,
        };

        // Distances, variables above each node, read counts along paths.
        let mut dmin = vec![usize::MAX; n];
        let mut dmax = vec![0usize; n];
        let mut above = vec![VarSet::new(nv); n];
        let mut reads_min = vec![usize::MAX; n];
        let mut reads_max = vec![0usize; n];
        dmin[adj.start] = 0;
        reads_min[adj.start] = 0;
        for &v in &order {
            let r = usize::from(var_of(v).is_some());
            let mut here = above[v].clone();
            if let Some(i) = var_of(v) {
                here.insert(i);
            }
            for w in adj.successors(v) {
                dmin[w] = dmin[w].min(dmin[v] + 1);
                dmax[w] = dmax[w].max(dmax[v] + 1);
                reads_min[w] = reads_min[w].min(reads_min[v] + r);
                reads_max[w] = reads_max[w].max(reads_max[v] + r);
                above[w].union_with(&here);
            }
        }
        let leveled = order.iter().all(|&v| dmin[v] == dmax[v]);
        let read_once = order
            .iter()
            .all(|&v| var_of(v).is_none_or(|i| !above[v].contains(i)));
        let terminals: Vec<usize> = order
            .iter()
            .copied()
            .filter(|&v| adj.successors(v).is_empty())
            .collect();
        let regular_read_once = read_once
            && terminals.iter().all(|&v| {
                let extra = usize::from(var_of(v).is_some());
                reads_min[v] + extra == nv && reads_max[v] + extra == nv
            });

        let obdd_order = if read_once {
            let mut before: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
            for &v in &order {
                if let Some(j) = var_of(v) {
                    before.entry(j).or_default().extend(above[v].iter());
                }
            }
            variable_order(nv, &before).map(|o| o.into_iter().map(|i| i as u32).collect())
        } else {
            None
        };

        let reversible_classical = self.is_reversible_classical(&adj, &order);

        let width = leveled.then(|| {
            let mut count: HashMap<usize, usize> = HashMap::new();
            for &v in &order {
                *count.entry(dmin[v]).or_default() += 1;
            }
            count.values().copied().max().unwrap_or(0)
        });

        Ok(ClassInfo {
            acyclic: true,
            leveled,
            read_once,
            regular_read_once,
            obdd_order,
            reversible_classical,
            width,
        })
    }

    fn is_reversible_classical(&self, adj: &Adjacency, order: &[usize]) -> bool {
        let one = C64::new(1.0, 0.0);
        let mut preds: HashMap<(usize, u8), Vec<usize>> = HashMap::new();
        for &v in order {
            if matches!(adj.kinds[v], NodeKind::Sink(_)) {
                continue;
            }
            for b in 0..2u8 {
                let out = &adj.out[v][b as usize];
                if out.len() != 1 || out[0].1 != one {
                    return false;
                }
                preds.entry((out[0].0, b)).or_default().push(v);
            }
        }
        let label = |v: usize| label_of(adj.kinds[v]);
        for &w in order {
            let p0 = preds.get(&(w, 0)).map(Vec::as_slice).unwrap_or(&[]);
            let p1 = preds.get(&(w, 1)).map(Vec::as_slice).unwrap_or(&[]);
            if p0.len() > 1 || p1.len() > 1 {
                return false;
            }
            if let (Some(&a), Some(&b)) = (p0.first(), p1.first()) {
                if label(a) != label(b) {
                    return false;
                }
            }
        }
        true
    }

    /// Replaces every unlabeled node by a node reading a fresh dummy variable
    /// whose two edges both carry the original amplitude.
    pub fn expand_unlabeled(&self) -> QbpGraph {
        if !self.nodes.iter().any(|n| n.kind == NodeKind::Unlabeled) {
            return self.clone();
        }
        let dummy = self.num_vars as u32 + 1;
        let nodes = self
            .nodes
            .iter()
            .map(|n| Node {
                id: n.id,
                kind: if n.kind == NodeKind::Unlabeled { NodeKind::Var(dummy) } else { n.kind },
            })
            .collect();
        let mut edges = Vec::with_capacity(self.edges.len());
        for e in &self.edges {
            match e.bit {
                Some(_) => edges.push(*e),
                None => {
                    edges.push(Edge { bit: Some(0), ..*e });
                    edges.push(Edge { bit: Some(1), ..*e });
                }
            }
        }
        QbpGraph { num_vars: self.num_vars + 1, nodes, edges, start: self.start }
    }

    /// Fixes variables to constants: their nodes become unlabeled and keep only
    /// the consistent outgoing edges. Node count is unchanged.
    pub fn restrict(&self, assignment: &BTreeMap<u32, u8>) -> Result<QbpGraph, GraphError> {
        for &i in assignment.keys() {
            if i == 0 || i as usize > self.num_vars {
                return Err(GraphError::UnknownVariable(i));
            }
        }
        let fixed: HashMap<NodeId, u8> = self
            .nodes
            .iter()
            .filter_map(|n| match n.kind {
                NodeKind::Var(i) => assignment.get(&i).map(|&b| (n.id, b)),
                _ => None,
            })
            .collect();
        let nodes = self
            .nodes
            .iter()
            .map(|n| Node {
                id: n.id,
                kind: if fixed.contains_key(&n.id) { NodeKind::Unlabeled } else { n.kind },
            })
            .collect();
        let edges = self
            .edges
            .iter()
            .filter_map(|e| match fixed.get(&e.from) {
                Some(&b) if e.bit == Some(b) => Some(Edge { bit: None, ..*e }),
                Some(_) => None,
                None => Some(*e),
            })
            .collect();
        Ok(QbpGraph { num_vars: self.num_vars, nodes, edges, start: self.start })
    }

    /// Serializes to the version-1 JSON format.
    pub fn save(&self) -> Vec<u8> {
        let file = FileGraph {
            version: 1,
            num_vars: self.num_vars,
            start: self.start,
            nodes: self
                .nodes
                .iter()
                .map(|n| match n.kind {
                    NodeKind::Var(i) => FileNode { id: n.id, kind: "var".into(), var: Some(i), label: None },
                    NodeKind::Sink(l) => FileNode { id: n.id, kind: "sink".into(), var: None, label: Some(l) },
                    NodeKind::Unlabeled => FileNode { id: n.id, kind: "unlabeled".into(), var: None, label: None },
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| FileEdge { from: e.from, to: e.to, bit: e.bit, amp: [e.amp.re, e.amp.im] })
                .collect(),
        };
        let mut out = serde_json::to_vec_pretty(&file).expect("graph serialization");
        out.push(b'\n');
        out
    }

    pub fn load(bytes: &[u8]) -> Result<QbpGraph, GraphError> {
        let file: FileGraph =
            serde_json::from_slice(bytes).map_err(|e| GraphError::Parse(e.to_string()))?;
        if file.version != 1 {
            return Err(GraphError::Parse(format!("unsupported version {}", file.version)));
        }
        let mut nodes = Vec::with_capacity(file.nodes.len());
        for (k, n) in file.nodes.iter().enumerate() {
            let kind = match (n.kind.as_str(), n.var, n.label) {
                ("var", Some(i), None) => NodeKind::Var(i),
                ("sink", None, Some(l)) => NodeKind::Sink(l),
                ("unlabeled", None, None) => NodeKind::Unlabeled,
                _ => {
                    return Err(GraphError::Parse(format!(
                        "nodes[{k}] (id {}): kind {:?} with var {:?} and label {:?}",
                        n.id, n.kind, n.var, n.label
                    )))
                }
            };
            nodes.push(Node { id: n.id, kind });
        }
        let edges = file
            .edges
            .iter()
            .map(|e| Edge { from: e.from, to: e.to, bit: e.bit, amp: C64::new(e.amp[0], e.amp[1]) })
            .collect();
        let g = QbpGraph { num_vars: file.num_vars, nodes, edges, start: file.start };
        g.check_structure()?;
        Ok(g)
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph qbp {\n  rankdir=TB;\n");
        for n in &self.nodes {
            let (label, shape) = match n.kind {
                NodeKind::Var(i) => (format!("x{i}"), "ellipse"),
                NodeKind::Sink(l) => (format!("{l}"), "box"),
                NodeKind::Unlabeled => (String::new(), "point"),
            };
            let extra = if n.id == self.start { ", penwidth=2" } else { "" };
            let _ = writeln!(s, "  n{} [label=\"{label}\", shape={shape}{extra}];", n.id);
        }
        for e in &self.edges {
            let amp = fmt_amp(e.amp);
            let label = match e.bit {
                Some(b) => format!("{b}:{amp}"),
                None => amp,
            };
            let _ = writeln!(s, "  n{} -> n{} [label=\"{label}\"];", e.from, e.to);
        }
        s.push_str("}\n");
        s
    }
}

fn fmt_amp(a: C64) -> String {
    if a.im == 0.0 {
        format!("{}", a.re)
    } else if a.re == 0.0 {
        format!("{}i", a.im)
    } else {
        format!("{}{:+}i", a.re, a.im)
    }
}

/// A total order of 1..=n consistent with `before[j]` (variables that must
/// precede j), smallest index first among ready variables.
fn variable_order(n: usize, before: &BTreeMap<usize, BTreeSet<usize>>) -> Option<Vec<usize>> {
    let mut remaining: BTreeSet<usize> = (1..=n).collect();
    let mut placed = BTreeSet::new();
    let mut order = Vec::with_capacity(n);
    while !remaining.is_empty() {
        let next = remaining.iter().copied().find(|j| {
            before
                .get(j)
                .is_none_or(|b| b.iter().all(|i| placed.contains(i) || !(1..=n).contains(i)))
        })?;
        remaining.remove(&next);
        placed.insert(next);
        order.push(next);
    }
    Some(order)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileGraph {
    version: u32,
    num_vars: usize,
    start: NodeId,
    nodes: Vec<FileNode>,
    edges: Vec<FileEdge>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileNode {
    id: NodeId,
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    var: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    label: Option<u8>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileEdge {
    from: NodeId,
    to: NodeId,
    bit: Option<u8>,
    amp: [f64; 2],
}
