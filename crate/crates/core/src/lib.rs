//! Verification workbench for quantum branching programs (QBPs) and quantum
//! multi-partition one-way communication protocols.
//!
//! The graph, simulation, construction, protocol and bridge layers work over
//! double-precision complex amplitudes (the file format stores bit-identical
//! doubles). The information kernel in [`qinfo`] is generic over the real
//! scalar, and the exact weighted-sum DP in [`rectlab`] is generic over any
//! numeric type, defaulting to big rationals.

pub mod bridge;
pub mod builders;
pub mod experiments;
pub mod graph;
pub mod protocols;
pub mod qinfo;
pub mod rectlab;
pub mod sim;

pub use num_complex::Complex;

/// Real scalar used by the graph and protocol layers.
pub type Real = f64;
/// Complex amplitude used by the graph and protocol layers.
pub type C64 = Complex<f64>;
/// Density matrix at the working precision.
pub type DensityMatrix = qinfo::DensityMatrix<f64>;
/// Pure state at the working precision.
pub type PureState = qinfo::PureState<f64>;
/// Exact probability type for the weighted-sum DP.
pub type Ratio = num_rational::BigRational;

pub use graph::{Edge, GraphError, Node, NodeId, NodeKind, QbpGraph};
pub use sim::{OutputDistribution, Simulator};

/// Default numerical tolerance for validation and comparisons.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Bits of `index` as a 0/1 vector of length `n`, least significant bit first.
pub fn index_bits(index: u64, n: usize) -> Vec<u8> {
    (0..n).map(|k| ((index >> k) & 1) as u8).collect()
}
