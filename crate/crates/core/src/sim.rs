//! Measurement-interleaved QBP semantics on an unnormalized sparse state.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::graph::{Adjacency, ClassInfo, GraphError, NodeKind, QbpGraph};
use crate::qinfo;
use crate::{index_bits, NodeId, C64};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("graph failed validation (well_formed={well_formed}, unidirectional={unidirectional})")]
    NotValid { well_formed: bool, unidirectional: bool },
    #[error("graph is not regular read-once")]
    NotRegular,
    #[error("input has {got} bits, graph has {expected} variables")]
    Arity { expected: usize, got: usize },
    #[error("amplitude mass remains off the sinks after {0} steps")]
    Unsettled(usize),
    #[error("I(G(Z):Z) = {value} exceeds log2|G| = {bound}")]
    EntropyBound { value: f64, bound: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OutputDistribution {
    pub p0: f64,
    pub p1: f64,
    pub residual: f64,
}

impl OutputDistribution {
    pub fn prob(&self, r: bool) -> f64 {
        if r {
            self.p1
        } else {
            self.p0
        }
    }

    /// Components clamped to [0, 1] for reporting.
    pub fn clamped(self) -> Self {
        let c = |x: f64| x.clamp(0.0, 1.0);
        OutputDistribution { p0: c(self.p0), p1: c(self.p1), residual: c(self.residual) }
    }
}

/// Sparse unnormalized state: sorted `(dense node index, amplitude)` pairs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StateVector {
    pub entries: Vec<(usize, C64)>,
}

impl StateVector {
    pub fn basis(v: usize) -> Self {
        StateVector { entries: vec![(v, C64::new(1.0, 0.0))] }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.entries.iter().map(|(_, a)| a.norm_sqr()).sum()
    }

    fn from_unsorted(mut raw: Vec<(usize, C64)>) -> Self {
        raw.sort_by_key(|e| e.0);
        let mut entries: Vec<(usize, C64)> = Vec::with_capacity(raw.len());
        for (v, a) in raw {
            match entries.last_mut() {
                Some((w, b)) if *w == v => *b += a,
                _ => entries.push((v, a)),
            }
        }
        entries.retain(|(_, a)| *a != C64::default());
        StateVector { entries }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum VerifyMode {
    Exact,
    TwoSided(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerificationReport {
    pub mode: VerifyMode,
    pub worst_input: Vec<u8>,
    pub worst_error: f64,
    pub pass: bool,
}

/// Dense final state over all graph nodes (in graph node order).
#[derive(Clone, Debug, PartialEq)]
pub struct NodeState {
    pub ids: Vec<NodeId>,
    pub amps: Vec<C64>,
}

impl NodeState {
    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn amp(&self, id: NodeId) -> C64 {
        self.ids.iter().position(|&i| i == id).map(|k| self.amps[k]).unwrap_or_default()
    }
}

/// A validated graph with its dense index, ready for repeated simulation.
pub struct Simulator<'g> {
    pub graph: &'g QbpGraph,
    pub adj: Adjacency,
    /// Set when the graph was admitted as a deterministic branching program
    /// rather than as a well-formed QBP.
    pub classical: bool,
}

/// Every internal node reads a variable and has exactly one outgoing edge
/// per bit, with amplitude exactly 1.
pub fn is_deterministic(graph: &QbpGraph) -> bool {
    let mut out: BTreeMap<NodeId, [u32; 2]> = BTreeMap::new();
    for e in &graph.edges {
        let Some(bit) = e.bit else { return false };
        if e.amp != C64::new(1.0, 0.0) || bit > 1 {
            return false;
        }
        out.entry(e.from).or_default()[bit as usize] += 1;
    }
    graph.nodes.iter().all(|v| match v.kind {
        NodeKind::Var(_) => out.get(&v.id) == Some(&[1, 1]),
        NodeKind::Sink(_) => !out.contains_key(&v.id),
        NodeKind::Unlabeled => false,
    })
}

impl<'g> Simulator<'g> {
    /// Validates with tolerance `tol`; refuses graphs that are neither
    /// well-formed and unidirectional nor deterministic.
    pub fn new(graph: &'g QbpGraph, tol: f64) -> Result<Self, SimError> {
        let report = graph.validate(tol)?;
        let mut classical = false;
        if !report.ok() {
            if !is_deterministic(graph) {
                return Err(SimError::NotValid {
                    well_formed: report.well_formed,
                    unidirectional: report.unidirectional,
                });
            }
            classical = true;
        }
        Ok(Simulator { graph, adj: Adjacency::new(graph)?, classical })
    }

    fn check_input(&self, input: &[u8]) -> Result<(), SimError> {
        if input.len() != self.graph.num_vars {
            return Err(SimError::Arity { expected: self.graph.num_vars, got: input.len() });
        }
        Ok(())
    }

    fn sink_label(&self, v: usize) -> Option<u8> {
        match self.adj.kinds[v] {
            NodeKind::Sink(l) => Some(l),
            _ => None,
        }
    }

    fn bit_at(&self, v: usize, input: &[u8]) -> usize {
        match self.adj.kinds[v] {
            NodeKind::Var(i) => input[i as usize - 1] as usize,
            _ => 0,
        }
    }

    pub fn start_state(&self) -> StateVector {
        StateVector::basis(self.adj.start)
    }

    /// Measures the sinks, zeroes them, and applies one transition.
    pub fn step(&self, state: &StateVector, input: &[u8]) -> (StateVector, [f64; 2]) {
        let mut halted = [0.0; 2];
        let mut next = Vec::new();
        for &(v, a) in &state.entries {
            if let Some(l) = self.sink_label(v) {
                halted[l as usize] += a.norm_sqr();
                continue;
            }
            for &(w, d) in &self.adj.out[v][self.bit_at(v, input)] {
                next.push((w, a * d));
            }
        }
        (StateVector::from_unsorted(next), halted)
    }

    fn measure(&self, state: &StateVector) -> [f64; 2] {
        let mut m = [0.0; 2];
        for &(v, a) in &state.entries {
            if let Some(l) = self.sink_label(v) {
                m[l as usize] += a.norm_sqr();
            }
        }
        m
    }

    /// Output distribution after at most `max_steps` transitions.
    pub fn run(&self, input: &[u8], max_steps: usize) -> Result<OutputDistribution, SimError> {
        self.check_input(input)?;
        let mut p = [0.0; 2];
        let mut state = self.start_state();
        for _ in 0..max_steps {
            if state.entries.is_empty() {
                break;
            }
            let (next, halted) = self.step(&state, input);
            p[0] += halted[0];
            p[1] += halted[1];
            state = next;
        }
        let last = self.measure(&state);
        p[0] += last[0];
        p[1] += last[1];
        state.entries.retain(|&(v, _)| self.sink_label(v).is_none());
        Ok(OutputDistribution { p0: p[0], p1: p[1], residual: state.norm_sqr() })
    }

    pub fn default_steps(&self) -> usize {
        self.graph.num_vars + 2
    }

    /// Evolves without measurement; sinks absorb and keep their amplitude.
    /// Stops once all mass sits on sinks.
    pub fn evolve_to_sinks(&self, input: &[u8]) -> Result<NodeState, SimError> {
        self.check_input(input)?;
        let cap = self.adj.len() + 1;
        let mut state = self.start_state();
        for _ in 0..=cap {
            if state.entries.iter().all(|&(v, _)| self.sink_label(v).is_some()) {
                let mut amps = vec![C64::default(); self.adj.len()];
                for (v, a) in state.entries {
                    amps[v] = a;
                }
                return Ok(NodeState { ids: self.adj.ids.clone(), amps });
            }
            let mut next = Vec::new();
            for &(v, a) in &state.entries {
                if self.sink_label(v).is_some() {
                    next.push((v, a));
                    continue;
                }
                for &(w, d) in &self.adj.out[v][self.bit_at(v, input)] {
                    next.push((w, a * d));
                }
            }
            state = StateVector::from_unsorted(next);
        }
        Err(SimError::Unsettled(cap))
    }

    /// Final state of a regular read-once graph before the sink measurement.
    pub fn final_state(&self, input: &[u8]) -> Result<NodeState, SimError> {
        let info: ClassInfo = self.graph.classify()?;
        if !info.regular_read_once {
            return Err(SimError::NotRegular);
        }
        self.evolve_to_sinks(input)
    }

    /// Exhaustive sweep over all 2^n inputs.
    pub fn verify_function<F>(&self, reference: F, mode: VerifyMode, tol: f64) -> VerificationReport
    where
        F: Fn(&[u8]) -> bool + Sync,
    {
        let n = self.graph.num_vars;
        let steps = self.default_steps();
        let (worst_index, worst_error) = (0..1u64 << n)
            .into_par_iter()
            .map(|m| {
                let bits = index_bits(m, n);
                let d = self.run(&bits, steps).expect("arity matches");
                (m, 1.0 - d.prob(reference(&bits)))
            })
            .reduce(
                || (u64::MAX, f64::NEG_INFINITY),
                |a, b| {
                    if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) {
                        b
                    } else {
                        a
                    }
                },
            );
        let eps = match mode {
            VerifyMode::Exact => 0.0,
            VerifyMode::TwoSided(e) => e,
        };
        VerificationReport {
            mode,
            worst_input: index_bits(worst_index, n),
            worst_error,
            pass: worst_error <= eps + tol,
        }
    }

    /// I(G(Z):Z) = S(Σ_z Pr(z)|G(z)⟩⟨G(z)|), computed from whichever of the
    /// state Gram matrix and the sink density matrix is smaller.
    pub fn final_state_info(&self, distribution: &[(Vec<u8>, f64)], tol: f64) -> Result<f64, SimError> {
        let states = self.weighted_sink_states(distribution)?;
        let value = qinfo::mixture_entropy_from_columns(&states);
        let bound = (self.graph.size() as f64).log2();
        if value > bound + tol {
            return Err(SimError::EntropyBound { value, bound });
        }
        Ok(value)
    }

    /// Columns √Pr(z)·G(z) restricted to sink coordinates.
    pub fn weighted_sink_states(&self, distribution: &[(Vec<u8>, f64)]) -> Result<Vec<Vec<C64>>, SimError> {
        let sinks: Vec<usize> = (0..self.adj.len()).filter(|&v| self.sink_label(v).is_some()).collect();
        distribution
            .iter()
            .filter(|(_, p)| *p > 0.0)
            .map(|(z, p)| {
                let s = self.final_state(z)?;
                Ok(sinks.iter().map(|&v| s.amps[v] * p.sqrt()).collect())
            })
            .collect()
    }
}
