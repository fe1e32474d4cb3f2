//! Round-accurate CONGEST simulation and a compiler that turns natural
//! distributed algorithms into perfectly private ones.
//!
//! The crate is organized bottom-up:
//!
//! * [`graph`]: graphs, connectivity predicates, generators and the edge-list format.
//! * [`cycle_cover`]: short cycle covers of bridgeless graphs.
//! * [`private_trees`]: for every node `u` a tree in `G - u` spanning the neighbors of `u`.
//! * [`sim`]: the synchronous round engine, framing and multicast scheduling.
//! * [`algo`]: gate circuits, round functions, gate decomposition and example algorithms.
//! * [`psm`]: XOR sharing, one-time pads, branching programs and the PSM protocol.
//! * [`compiler`]: the secure compiler and its distributed execution.
//! * [`privacy`]: views, simulators and exact / statistical privacy checks.

pub mod algo;
pub mod bits;
pub mod compiler;
pub mod cycle_cover;
pub mod error;
pub mod graph;
pub mod privacy;
pub mod private_trees;
pub mod psm;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};
pub use graph::{Graph, NodeId};
