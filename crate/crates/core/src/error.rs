use thiserror::Error;

use crate::graph::NodeId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("graph is disconnected: node {unreachable} is unreachable")]
    Disconnected { unreachable: NodeId },

    #[error("graph is not 2-vertex connected")]
    NotTwoVertexConnected,

    #[error("bridge ({0}, {1}) has no covering cycle")]
    Bridge(NodeId, NodeId),

    #[error("structural error: {0}")]
    Structural(String),

    #[error("phase {phase}: {msg}")]
    Construction { phase: usize, msg: String },

    #[error("bandwidth violation in round {round} on edge ({src}, {dst}): {bits} bits > {beta}")]
    Bandwidth {
        round: usize,
        src: NodeId,
        dst: NodeId,
        bits: usize,
        beta: usize,
    },

    #[error("scheduling failed after {attempts} attempts: max overload {overload} bits")]
    Scheduling { attempts: usize, overload: usize },

    #[error("circuit validation: {0}")]
    Circuit(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    Length { expected: usize, got: usize },

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("compile error: {0}")]
    Compile(String),

    #[error("exact enumeration refused: {bits} tape bits exceed budget {budget}")]
    Budget { bits: usize, budget: usize },

    #[error("refused: {0}")]
    Refused(String),
}
