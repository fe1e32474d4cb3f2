//! Distributed algorithms as gate-circuit round functions.

mod circuit;
mod decompose;
pub mod examples;
mod spec;

pub use circuit::{CircuitBuilder, Gate, GateCircuit, Op, Sig};
pub use decompose::gate_decompose;
pub use spec::{certify, AlgorithmSpec, NaturalityCertificate, RoundFn};
