//! Views, the simulator, and exact and statistical privacy checks.
//!
//! The simulator builds a node's view from its input and output alone:
//! every one-time-padded item is replaced by fresh uniform bits, each
//! round's PSM encodings are produced by the PSM simulator from a uniform
//! round output, and the final key is forced by the output.

mod check;

use serde::{Deserialize, Serialize};

use crate::bits::{xor, Bits};
use crate::compiler::{Backend, CompiledAlgorithm, Execution};
use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::rng::{Label, Purpose, SeededTape, Tape};
use crate::sim::{Delivery, Kind, PlainRun};

pub use check::{check_nodes, check_perfect_privacy, chi_square_homogeneity, ChiSquareChunk, Mode, StatParams, Verdict};

/// Everything one node observes in an execution.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct View {
    pub node: NodeId,
    pub input: Bits,
    /// The node's own tape draws, in draw order.
    pub draws: Vec<(Label, Bits)>,
    /// Deliveries to the node, in transcript order.
    pub received: Vec<Delivery>,
    /// Per round, the PSM output the node decoded.
    pub memory: Vec<Bits>,
    pub output: Bits,
}

/// Structural position of one view field, independent of its contents.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Slot {
    Input(usize),
    Draw(Label, usize),
    Received { round: usize, src: NodeId, kind: Kind, subject: NodeId, at: usize, len: usize },
    Memory(usize),
    Output(usize),
}

impl View {
    pub fn bit_len(&self) -> usize {
        self.input.len()
            + self.draws.iter().map(|(_, b)| b.len()).sum::<usize>()
            + self.received.iter().map(|d| d.payload.len()).sum::<usize>()
            + self.memory.iter().map(Vec::len).sum::<usize>()
            + self.output.len()
    }

    /// All bits of the view in a fixed order; two views with equal
    /// [`View::layout`] are equal iff their canonical forms are.
    pub fn canonical(&self) -> Bits {
        let mut out = Vec::with_capacity(self.bit_len());
        out.extend_from_slice(&self.input);
        for (_, b) in &self.draws {
            out.extend_from_slice(b);
        }
        for d in &self.received {
            out.extend_from_slice(&d.payload);
        }
        for m in &self.memory {
            out.extend_from_slice(m);
        }
        out.extend_from_slice(&self.output);
        out
    }

    pub fn layout(&self) -> Vec<Slot> {
        let mut s = vec![Slot::Input(self.input.len())];
        s.extend(self.draws.iter().map(|(l, b)| Slot::Draw(*l, b.len())));
        s.extend(self.received.iter().map(|d| Slot::Received {
            round: d.tag.round,
            src: d.src,
            kind: d.tag.kind,
            subject: d.tag.subject,
            at: d.round,
            len: d.payload.len(),
        }));
        s.extend(self.memory.iter().map(|m| Slot::Memory(m.len())));
        s.push(Slot::Output(self.output.len()));
        s
    }
}

fn not_recorded() -> Error {
    Error::InvalidInput("the execution was run without recording".into())
}

pub fn capture_view(e: &Execution, u: NodeId) -> Result<View> {
    if !e.recorded {
        return Err(not_recorded());
    }
    if u >= e.inputs.len() {
        return Err(Error::InvalidInput(format!("no node {u}")));
    }
    Ok(View {
        node: u,
        input: e.inputs[u].clone(),
        draws: e.draws.iter().filter(|(l, _)| l.owner == u).cloned().collect(),
        received: e.transcript.iter().filter(|d| d.dst == u).cloned().collect(),
        memory: e.memory[u].clone(),
        output: e.outputs[u].clone(),
    })
}

/// View of an uncompiled run (run with transcript recording); the state is
/// kept locally and so is not part of the memory field.
pub fn capture_plain_view(run: &PlainRun, inputs: &[Bits], u: NodeId, recorded: bool) -> Result<View> {
    if !recorded {
        return Err(not_recorded());
    }
    Ok(View {
        node: u,
        input: inputs[u].clone(),
        draws: Vec::new(),
        received: run.transcript.iter().filter(|d| d.dst == u).cloned().collect(),
        memory: Vec::new(),
        output: run.outputs[u].clone(),
    })
}

/// Samples views of one node from its input and output.
#[derive(Clone, Debug)]
pub struct Simulator<'c> {
    compiled: &'c CompiledAlgorithm,
    node: NodeId,
    template: View,
}

/// The layout is taken from a run on all-zero inputs; only lengths and
/// positions are read from it.
pub fn build_simulator(c: &CompiledAlgorithm, u: NodeId) -> Result<Simulator<'_>> {
    if c.options.backend == Backend::Passthrough {
        return Err(Error::Refused(
            "the passthrough backend sends inputs in the clear; there is nothing to simulate".into(),
        ));
    }
    if u >= c.graph.node_count() {
        return Err(Error::InvalidInput(format!("no node {u}")));
    }
    let zeros = vec![vec![false; c.spec.input_bits]; c.graph.node_count()];
    let e = c.run(&zeros, 0, true)?;
    Ok(Simulator {
        compiled: c,
        node: u,
        template: capture_view(&e, u)?,
    })
}

impl Simulator<'_> {
    pub fn node(&self) -> NodeId {
        self.node
    }

    pub fn template(&self) -> &View {
        &self.template
    }

    pub fn sample(&self, input: &[bool], output: &[bool], tape: &mut dyn Tape) -> Result<View> {
        let c = self.compiled;
        let u = self.node;
        let t = &self.template;
        if input.len() != t.input.len() || output.len() != t.output.len() {
            return Err(Error::Length {
                expected: t.input.len() + t.output.len(),
                got: input.len() + output.len(),
            });
        }
        let mut fresh = |kind: usize, index: usize, len: usize| -> Bits {
            if len == 0 {
                Vec::new()
            } else {
                tape.draw(Label::new(u, Purpose::Simulator, u, kind, index), len)
            }
        };
        let draws = t
            .draws
            .iter()
            .enumerate()
            .map(|(k, (l, b))| (*l, fresh(0, k, b.len())))
            .collect();
        let memory: Vec<Bits> = t.memory.iter().enumerate().map(|(i, m)| fresh(1, i, m.len())).collect();
        let mut encodings: Vec<Vec<Bits>> = Vec::with_capacity(memory.len());
        for (i, m) in memory.iter().enumerate() {
            let psm = c.plan(u, i).psm.as_ref().expect("PSM backend");
            let r = fresh(2, i, psm.simulator_randomness_len());
            encodings.push(psm.simulate(m, &r)?);
        }
        let s = c.spec.state_bits;
        let mut received = Vec::with_capacity(t.received.len());
        for (k, d) in t.received.iter().enumerate() {
            let payload = match d.tag.kind {
                Kind::Encoding if d.tag.subject == u => {
                    let j = c.graph.slot_of(u, d.src).expect("edge");
                    encodings[d.tag.round][j].clone()
                }
                Kind::FinalKey if d.tag.subject == u => {
                    let last = memory.last().ok_or_else(|| Error::Protocol("final key without rounds".into()))?;
                    let mut y = output.to_vec();
                    y.resize(s, false);
                    xor(&last[..s], &y)
                }
                _ => fresh(3, k, d.payload.len()),
            };
            received.push(Delivery {
                payload,
                provenance: Vec::new(),
                ..d.clone()
            });
        }
        Ok(View {
            node: u,
            input: input.to_vec(),
            draws,
            received,
            memory,
            output: output.to_vec(),
        })
    }

    pub fn sample_seeded(&self, input: &[bool], output: &[bool], seed: u64) -> Result<View> {
        self.sample(input, output, &mut SeededTape::new(seed))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algo::examples::*;
    use crate::algo::AlgorithmSpec;
    use crate::bits::from_u64;
    use crate::compiler::{compile, CompileOptions, Mutation};
    use crate::graph::Graph;
    use crate::private_trees::build_private_trees;
    use crate::psm::PsmMutation;
    use crate::sim::{run, NetConfig};

    fn compiled(g: &Graph, algo: &AlgorithmSpec, mutation: Mutation, backend: Backend) -> CompiledAlgorithm {
        let trees = build_private_trees(g).unwrap();
        let opts = CompileOptions {
            backend,
            mutation,
            ..CompileOptions::default()
        };
        compile(algo, g, &trees, opts).unwrap()
    }

    fn bits(n: usize, code: u64) -> Vec<Bits> {
        (0..n).map(|u| from_u64(code >> u & 1, 1)).collect()
    }

    #[test]
    fn plain_echo_view_has_one_message_per_neighbor() {
        let g = Graph::cycle(4);
        let algo = echo_ids(&g).unwrap();
        let x = echo_inputs(&g);
        let cfg = NetConfig {
            record: true,
            ..NetConfig::new(&g)
        };
        let r = run(&g, &algo, &x, 0, cfg).unwrap();
        let v = capture_plain_view(&r, &x, 0, true).unwrap();
        assert_eq!(v.received.len(), 2);
        assert_eq!(v.output, r.outputs[0]);
    }

    #[test]
    fn compiled_view_layout_matches_the_simulator() {
        let g = Graph::cycle(5);
        let c = compiled(&g, &verify_coloring(&g, 1).unwrap(), Mutation::None, Backend::Psm);
        let x = bits(5, 0b01010);
        let e = c.run(&x, 7, true).unwrap();
        let v = capture_view(&e, 0).unwrap();
        let sim = build_simulator(&c, 0).unwrap();
        assert_eq!(v.layout(), sim.template().layout());
        assert_eq!(v.canonical().len(), v.bit_len());
        let s = sim.sample_seeded(&x[0], &e.outputs[0], 1).unwrap();
        assert_eq!(s.bit_len(), v.bit_len());
    }

    #[test]
    fn zero_round_view_has_no_messages() {
        let g = Graph::cycle(4);
        let mut algo = not_gate(&g).unwrap();
        algo.rounds = 0;
        for fns in algo.by_degree.values_mut() {
            fns.clear();
        }
        let x = bits(4, 0b0110);
        let cfg = NetConfig {
            record: true,
            ..NetConfig::new(&g)
        };
        let r = run(&g, &algo, &x, 0, cfg).unwrap();
        let v = capture_plain_view(&r, &x, 1, true).unwrap();
        assert!(v.received.is_empty());
        let c = compiled(&g, &algo, Mutation::None, Backend::Psm);
        let e = c.run(&x, 0, true).unwrap();
        assert!(capture_view(&e, 1).unwrap().received.is_empty());
    }

    #[test]
    fn not_is_exactly_private_everywhere() {
        let g = Graph::cycle(4);
        let c = compiled(&g, &not_gate(&g).unwrap(), Mutation::None, Backend::Psm);
        let nodes: Vec<_> = g.nodes().collect();
        for code in [0b0000, 0b1011] {
            for v in check_nodes(&c, &bits(4, code), &nodes, Mode::exact()).unwrap() {
                assert!(v.pass, "{v:?}");
                assert_eq!(v.distance, 0.0);
                assert!(v.real_support > 1);
            }
        }
    }

    #[test]
    fn simulated_final_key_reproduces_the_output() {
        let g = Graph::cycle(4);
        let c = compiled(&g, &not_gate(&g).unwrap(), Mutation::None, Backend::Psm);
        let sim = build_simulator(&c, 2).unwrap();
        for seed in 0..8 {
            let view = sim.sample_seeded(&[false], &[true], seed).unwrap();
            let key = view.received.iter().find(|d| d.tag.kind == Kind::FinalKey).unwrap();
            let last = view.memory.last().unwrap();
            assert_eq!(xor(&last[..key.payload.len()], &key.payload)[0], true);
        }
    }

    #[test]
    fn leaked_key_bit_breaks_joint_privacy() {
        let g = Graph::cycle(4);
        let c = compiled(&g, &not_gate(&g).unwrap(), Mutation::LeakKeyBit, Backend::Psm);
        let nodes: Vec<_> = g.nodes().collect();
        let verdicts = check_nodes(&c, &bits(4, 0b0110), &nodes, Mode::exact()).unwrap();
        assert!(verdicts.iter().any(|v| !v.pass && v.distance > 0.0));
    }

    #[test]
    fn instances_are_private_and_identity_r1_is_caught() {
        let g = Graph::cycle(4);
        let algo = verify_coloring(&g, 1).unwrap();
        let x = coloring_inputs(&[0, 1, 1, 0], 1);
        let mode = Mode::PerInstance { budget: 20, runs: 2 };
        let honest = compiled(&g, &algo, Mutation::None, Backend::Psm);
        let v = check_perfect_privacy(&honest, &x, 0, mode).unwrap();
        assert!(v.pass, "{v:?}");
        assert!(v.tapes_enumerated > 0);
        for m in [PsmMutation::IdentityR1, PsmMutation::ReusedPad] {
            let broken = compiled(&g, &algo, Mutation::Psm(m), Backend::Psm);
            let v = check_perfect_privacy(&broken, &x, 0, mode).unwrap();
            assert!(!v.pass && v.distance > 0.0, "{m:?}");
        }
    }

    #[test]
    fn reused_state_key_leaks_across_rounds() {
        let g = Graph::cycle(4);
        let algo = xor_gossip(&g, 2).unwrap();
        let c = compiled(&g, &algo, Mutation::ReuseStateKey, Backend::Psm);
        let x = bits(4, 0b0001);
        let p = StatParams {
            samples: 4000,
            ..StatParams::default()
        };
        let verdicts = check_nodes(&c, &x, &[0, 1, 2, 3], Mode::Statistical(p)).unwrap();
        assert!(verdicts.iter().any(|v| !v.pass), "{verdicts:?}");
    }

    #[test]
    fn statistical_mode_accepts_the_honest_compiler() {
        let g = Graph::cycle(4);
        let c = compiled(&g, &xor_coin(&g).unwrap(), Mutation::None, Backend::Psm);
        let p = StatParams {
            samples: 4000,
            tv_threshold: 0.05,
            ..StatParams::default()
        };
        let v = check_perfect_privacy(&c, &bits(4, 0b1100), 1, Mode::Statistical(p)).unwrap();
        assert!(v.pass, "{v:?}");
    }

    #[test]
    fn refusals() {
        let g = Graph::cycle(4);
        let algo = xor_gossip(&g, 2).unwrap();
        let pass = compiled(&g, &algo, Mutation::None, Backend::Passthrough);
        assert!(matches!(build_simulator(&pass, 0), Err(Error::Refused(_))));
        let c = compiled(&g, &algo, Mutation::None, Backend::Psm);
        let r = check_perfect_privacy(&c, &bits(4, 0), 0, Mode::Exact { budget: 8 });
        assert!(matches!(r, Err(Error::Budget { budget: 8, .. })));
        let e = c.run(&bits(4, 0), 0, false).unwrap();
        assert!(capture_view(&e, 0).is_err());
    }
}
