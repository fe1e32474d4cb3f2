use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::bits::{zeros, Bits};
use crate::error::{Error, Result};
use crate::graph::Graph;

use super::circuit::{GateCircuit, Sig};

/// One round function `f_i` for a fixed number of neighbor slots.
///
/// Input wires: `[state][inbound slots][randomness]`, where the inbound block
/// (one `[presence, payload]` field per slot) exists only when the previous
/// round sends. Output wires: `[state][outbound slots]`, the outbound block
/// only when this round sends.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundFn {
    pub circuit: GateCircuit,
    pub rand_bits: usize,
    pub sends: bool,
    /// Round index in the algorithm's randomness labels; sub-rounds produced
    /// by gate decomposition keep the label of the round they came from.
    pub rand_label: usize,
}

/// An `r`-round algorithm with one list of round functions per degree.
/// Slot `k` of a node is its `k`-th neighbor in ascending id order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlgorithmSpec {
    pub name: String,
    /// Width of a node's input; `σ_0` is the input zero-padded to `state_bits`.
    pub input_bits: usize,
    pub state_bits: usize,
    pub msg_bits: usize,
    /// The output is the prefix of the final state of this width.
    pub output_bits: usize,
    pub rounds: usize,
    pub by_degree: BTreeMap<usize, Vec<RoundFn>>,
}

impl AlgorithmSpec {
    pub fn degrees(g: &Graph) -> BTreeSet<usize> {
        g.nodes().map(|u| g.degree(u)).collect()
    }

    pub fn field_bits(&self) -> usize {
        1 + self.msg_bits
    }

    fn any_variant(&self) -> Option<&[RoundFn]> {
        self.by_degree.values().next().map(Vec::as_slice)
    }

    /// Whether round `i` (0-based) sends.
    pub fn sends(&self, i: usize) -> bool {
        self.any_variant().map(|v| v[i].sends).unwrap_or(false)
    }

    /// Whether round `i` reads inbound messages.
    pub fn has_inbound(&self, i: usize) -> bool {
        i > 0 && self.sends(i - 1)
    }

    pub fn rand_bits(&self, i: usize) -> usize {
        self.any_variant().map(|v| v[i].rand_bits).unwrap_or(0)
    }

    pub fn input_width(&self, degree: usize, i: usize) -> usize {
        self.state_bits
            + if self.has_inbound(i) { degree * self.field_bits() } else { 0 }
            + self.rand_bits(i)
    }

    pub fn output_width(&self, degree: usize, i: usize) -> usize {
        self.state_bits + if self.sends(i) { degree * self.field_bits() } else { 0 }
    }

    pub fn variant(&self, degree: usize) -> Result<&[RoundFn]> {
        self.by_degree
            .get(&degree)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::InvalidInput(format!("{}: no round functions for degree {degree}", self.name)))
    }

    pub fn covers(&self, g: &Graph) -> Result<()> {
        for d in Self::degrees(g) {
            self.variant(d)?;
        }
        Ok(())
    }

    pub fn max_circuit_size(&self) -> usize {
        self.by_degree
            .values()
            .flatten()
            .map(|f| f.circuit.size())
            .max()
            .unwrap_or(0)
    }

    /// Per round, the largest circuit over all degrees.
    pub fn circuit_sizes(&self) -> Vec<usize> {
        (0..self.rounds)
            .map(|i| self.by_degree.values().map(|v| v[i].circuit.size()).max().unwrap_or(0))
            .collect()
    }

    pub fn initial_state(&self, input: &[bool]) -> Result<Bits> {
        if input.len() != self.input_bits {
            return Err(Error::Length {
                expected: self.input_bits,
                got: input.len(),
            });
        }
        let mut s = input.to_vec();
        s.resize(self.state_bits, false);
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(format!("{}: {m}", self.name)));
        if self.input_bits > self.state_bits || self.output_bits > self.state_bits {
            return bad("input and output must fit in the state".into());
        }
        for (&d, fns) in &self.by_degree {
            if fns.len() != self.rounds {
                return bad(format!("degree {d} has {} round functions, expected {}", fns.len(), self.rounds));
            }
            for (i, f) in fns.iter().enumerate() {
                f.circuit.validate()?;
                if f.sends != self.sends(i) || f.rand_bits != self.rand_bits(i) {
                    return bad(format!("round {i} differs across degrees"));
                }
                if f.circuit.inputs != self.input_width(d, i) {
                    return bad(format!(
                        "round {i}, degree {d}: circuit has {} inputs, layout needs {}",
                        f.circuit.inputs,
                        self.input_width(d, i)
                    ));
                }
                if f.circuit.outputs.len() != self.output_width(d, i) {
                    return bad(format!(
                        "round {i}, degree {d}: circuit has {} outputs, layout needs {}",
                        f.circuit.outputs.len(),
                        self.output_width(d, i)
                    ));
                }
            }
            if let Some(last) = fns.last() {
                if last.sends {
                    return bad("the last round must not send".into());
                }
                if last.circuit.outputs[self.output_bits..self.state_bits]
                    .iter()
                    .any(|s| *s != Sig::Const(false))
                {
                    return bad("final state bits beyond the output must be constant 0".into());
                }
            }
        }
        Ok(())
    }

    /// Applies round `i` at a node of the given degree.
    /// `inbound[k]` is the payload from slot `k`, if any.
    pub fn step(
        &self,
        degree: usize,
        i: usize,
        state: &[bool],
        inbound: &[Option<Bits>],
        rand: &[bool],
    ) -> Result<(Bits, Vec<Option<Bits>>)> {
        let f = &self.variant(degree)?[i];
        let mut input = Vec::with_capacity(f.circuit.inputs);
        input.extend_from_slice(state);
        if self.has_inbound(i) {
            for k in 0..degree {
                match inbound.get(k).and_then(Option::as_ref) {
                    Some(p) => {
                        input.push(true);
                        input.extend_from_slice(p);
                    }
                    None => {
                        input.push(false);
                        input.extend(zeros(self.msg_bits));
                    }
                }
            }
        }
        input.extend_from_slice(rand);
        let out = f.circuit.eval(&input)?;
        let next = out[..self.state_bits].to_vec();
        let mut outbound = vec![None; degree];
        if f.sends {
            for (k, slot) in outbound.iter_mut().enumerate() {
                let at = self.state_bits + k * self.field_bits();
                if out[at] {
                    *slot = Some(out[at + 1..at + self.field_bits()].to_vec());
                }
            }
        }
        Ok((next, outbound))
    }
}

/// Witness that an algorithm is natural: state within `Δ·(log₂ n)^c` bits and
/// polynomial-size round circuits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NaturalityCertificate {
    pub state_bits: usize,
    pub max_degree: usize,
    pub exponent: u32,
    pub state_bound: f64,
    pub max_circuit_size: usize,
    pub natural: bool,
}

pub fn certify(spec: &AlgorithmSpec, g: &Graph, exponent: u32) -> NaturalityCertificate {
    let log_n = (g.node_count().max(2) as f64).log2();
    let state_bound = g.max_degree() as f64 * log_n.powi(exponent as i32);
    NaturalityCertificate {
        state_bits: spec.state_bits,
        max_degree: g.max_degree(),
        exponent,
        state_bound,
        max_circuit_size: spec.max_circuit_size(),
        natural: spec.state_bits as f64 <= state_bound,
    }
}
