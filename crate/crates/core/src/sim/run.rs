//! Plain execution of an algorithm on the round engine.

use crate::algo::AlgorithmSpec;
use crate::bits::Bits;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::{Label, Purpose, SeededTape, Tape};

use super::{Delivery, Kind, Message, NetConfig, Network, RoundReport, Tag};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlainRun {
    pub outputs: Vec<Bits>,
    pub report: RoundReport,
    /// Empty unless recording was requested.
    pub transcript: Vec<Delivery>,
    /// Messages emitted by the final round; always empty for valid specs.
    pub dropped: Vec<Message>,
}

pub fn run(g: &Graph, algo: &AlgorithmSpec, inputs: &[Bits], seed: u64, cfg: NetConfig) -> Result<PlainRun> {
    run_with_tape(g, algo, inputs, &mut SeededTape::new(seed), cfg)
}

/// Node `u` draws round `i` randomness under
/// `Label(u, Algorithm, u, rand_label, 0)`.
pub fn run_with_tape(
    g: &Graph,
    algo: &AlgorithmSpec,
    inputs: &[Bits],
    tape: &mut dyn Tape,
    cfg: NetConfig,
) -> Result<PlainRun> {
    algo.validate()?;
    algo.covers(g)?;
    if inputs.len() != g.node_count() {
        return Err(Error::Length {
            expected: g.node_count(),
            got: inputs.len(),
        });
    }
    let mut state: Vec<Bits> = inputs
        .iter()
        .map(|x| algo.initial_state(x))
        .collect::<Result<_>>()?;
    let mut inbox: Vec<Vec<Option<Bits>>> = g.nodes().map(|u| vec![None; g.degree(u)]).collect();
    let mut net = Network::new(g, cfg);
    let mut dropped = Vec::new();
    for i in 0..algo.rounds {
        let mut outgoing = Vec::new();
        for u in g.nodes() {
            let d = g.degree(u);
            let f = &algo.variant(d)?[i];
            let rand = if f.rand_bits > 0 {
                tape.draw(Label::new(u, Purpose::Algorithm, u, f.rand_label, 0), f.rand_bits)
            } else {
                Vec::new()
            };
            let (next, out) = algo.step(d, i, &state[u], &inbox[u], &rand)?;
            state[u] = next;
            for (k, m) in out.into_iter().enumerate() {
                if let Some(payload) = m {
                    outgoing.push(Message {
                        src: u,
                        dst: g.neighbors(u)[k],
                        tag: Tag::new(Kind::Algorithm, u, i),
                        payload,
                        provenance: Vec::new(),
                    });
                }
            }
        }
        for slots in inbox.iter_mut() {
            slots.iter_mut().for_each(|s| *s = None);
        }
        if i + 1 == algo.rounds {
            dropped.extend(outgoing);
            break;
        }
        for d in net.exchange(outgoing)? {
            let k = g.slot_of(d.dst, d.src).expect("edge");
            inbox[d.dst][k] = Some(d.payload);
        }
    }
    let outputs = state.into_iter().map(|s| s[..algo.output_bits].to_vec()).collect();
    Ok(PlainRun {
        outputs,
        report: net.report(),
        transcript: net.take_transcript(),
        dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algo::examples::*;
    use crate::bits::{from_u64, to_u64};

    #[test]
    fn echo_on_c4() {
        let g = Graph::cycle(4);
        let algo = echo_ids(&g).unwrap();
        let cfg = NetConfig {
            beta: 64,
            record: true,
            ..NetConfig::new(&g)
        };
        let r = run(&g, &algo, &echo_inputs(&g), 0, cfg).unwrap();
        assert_eq!(r.report.rounds, 1);
        assert!(r.dropped.is_empty());
        for u in g.nodes() {
            let ids: Vec<u64> = r.outputs[u].chunks(2).map(to_u64).collect();
            let want: Vec<u64> = g.neighbors(u).iter().map(|&v| v as u64).collect();
            assert_eq!(ids, want);
        }
        assert_eq!(r.transcript.iter().filter(|d| d.dst == 0).count(), 2);
    }

    #[test]
    fn verify_coloring_examples() {
        let g = Graph::cycle(4);
        let algo = verify_coloring(&g, 1).unwrap();
        for colors in [[0, 1, 0, 1], [0, 0, 1, 1]] {
            let r = run(&g, &algo, &coloring_inputs(&colors, 1), 0, NetConfig::new(&g)).unwrap();
            let got: Vec<bool> = r.outputs.iter().map(|o| o[0]).collect();
            assert_eq!(got, coloring_oracle(&g, &colors));
        }
    }

    #[test]
    fn sum_to_root_on_c4() {
        let g = Graph::cycle(4);
        let algo = sum_to_root(&g, 4).unwrap();
        for values in [[1, 2, 3, 4], [0, 0, 0, 0]] {
            let x = sum_to_root_inputs(&g, 4, &values).unwrap();
            let r = run(&g, &algo, &x, 0, NetConfig::new(&g)).unwrap();
            assert_eq!(to_u64(&r.outputs[0]), values.iter().sum::<u64>());
        }
    }

    #[test]
    fn luby_on_triangle_and_c4() {
        for g in [Graph::cycle(3), Graph::cycle(4), Graph::complete(5)] {
            let algo = luby_mis(&g, 4).unwrap();
            let x = vec![Vec::new(); g.node_count()];
            for seed in 0..50 {
                let r = run(&g, &algo, &x, seed, NetConfig::new(&g)).unwrap();
                let c = check_mis(&g, &r.outputs);
                assert!(c.independent && c.dominated, "seed {seed}");
                if g.node_count() == 3 && c.undecided == 0 {
                    assert_eq!(r.outputs.iter().filter(|o| o[0]).count(), 1);
                }
            }
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let g = Graph::cycle(5);
        let algo = luby_mis(&g, 3).unwrap();
        let x = vec![Vec::new(); 5];
        let cfg = NetConfig {
            record: true,
            ..NetConfig::new(&g)
        };
        assert_eq!(run(&g, &algo, &x, 9, cfg).unwrap(), run(&g, &algo, &x, 9, cfg).unwrap());
    }

    #[test]
    fn gossip_parity() {
        let g = Graph::complete(4);
        let algo = xor_gossip(&g, 2).unwrap();
        let x: Vec<Bits> = [1, 0, 0, 0].iter().map(|&b| from_u64(b, 1)).collect();
        let r = run(&g, &algo, &x, 0, NetConfig::new(&g)).unwrap();
        assert_eq!(r.outputs.iter().map(|o| o[0]).collect::<Vec<_>>(), vec![true, true, true, true]);
    }
}
