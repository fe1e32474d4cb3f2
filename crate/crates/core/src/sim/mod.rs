//! Synchronous CONGEST engine: per-direction bandwidth `β`, framing of long
//! payloads, bit accounting per directed edge, and multicast scheduling.

mod run;
mod schedule;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bits::Bits;
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::private_trees::ceil_log2;
use crate::rng::Label;

pub use run::{run, run_with_tape, PlainRun};
pub use schedule::{schedule_multicasts, MulticastJob, MulticastOutcome, Strategy};

/// Bits of the sequence header carried by each packet of a framed payload.
pub const HEADER_BITS: usize = 16;

/// Default bandwidth: `4·⌈log₂ n⌉`, raised to 32 so that framed packets keep
/// at least half their bits for payload.
pub fn default_beta(n: usize) -> usize {
    (4 * ceil_log2(n)).max(2 * HEADER_BITS)
}

/// Packet sizes (header included) for a payload of `len` bits. Payloads that
/// fit in one round travel unframed.
pub fn packet_sizes(len: usize, beta: usize) -> Vec<usize> {
    if len == 0 {
        Vec::new()
    } else if len <= beta {
        vec![len]
    } else {
        assert!(beta > HEADER_BITS, "β must exceed the framing header");
        let chunk = beta - HEADER_BITS;
        (0..len.div_ceil(chunk))
            .map(|i| HEADER_BITS + chunk.min(len - i * chunk))
            .collect()
    }
}

/// Multiplexing label of a logical message.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    /// A message of an uncompiled algorithm.
    Algorithm,
    /// Encrypted state handed to the state holder.
    EncryptedState,
    /// Initial state mask handed to the key holder.
    InitialMask,
    /// A message key forwarded to the party that feeds it into a PSM.
    KeyForward,
    /// Shared PSM randomness travelling along a private tree.
    Randomness,
    /// A PSM encoding sent to the server.
    Encoding,
    /// The last state key, sent to its owner after the final round.
    FinalKey,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Tag {
    pub kind: Kind,
    /// Node the message is about (the server, for compiled traffic).
    pub subject: NodeId,
    pub round: usize,
}

impl Tag {
    pub fn new(kind: Kind, subject: NodeId, round: usize) -> Self {
        Tag {
            kind,
            subject,
            round,
        }
    }
}

/// A single-hop logical message. `provenance` lists tape draws whose bits the
/// payload contains verbatim.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Message {
    pub src: NodeId,
    pub dst: NodeId,
    pub tag: Tag,
    pub payload: Bits,
    pub provenance: Vec<Label>,
}

/// A delivered message; `round` is the physical round of arrival.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Delivery {
    pub round: usize,
    pub src: NodeId,
    pub dst: NodeId,
    pub tag: Tag,
    #[serde(with = "bitstring")]
    pub payload: Bits,
    pub provenance: Vec<Label>,
}

mod bitstring {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(b: &[bool], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&crate::bits::render(b))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<bool>, D::Error> {
        let text = String::deserialize(d)?;
        crate::bits::parse(&text).ok_or_else(|| serde::de::Error::custom("not a bit string"))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RoundReport {
    pub rounds: usize,
    pub max_edge_load: u64,
    /// Bits per directed edge, keyed `"u->v"`; zero entries omitted.
    pub per_edge_bits: BTreeMap<String, u64>,
}

/// Directed edge index: `2·edge_index + (src > dst)`.
pub fn arc(g: &Graph, src: NodeId, dst: NodeId) -> Option<usize> {
    g.edge_index(src, dst).map(|e| 2 * e + usize::from(src > dst))
}

pub fn arc_ends(g: &Graph, a: usize) -> (NodeId, NodeId) {
    let (u, v) = g.edges()[a / 2];
    if a % 2 == 0 {
        (u, v)
    } else {
        (v, u)
    }
}

pub fn report_from_load(g: &Graph, rounds: usize, load: &[u64]) -> RoundReport {
    let per_edge_bits = load
        .iter()
        .enumerate()
        .filter(|(_, &b)| b > 0)
        .map(|(a, &b)| {
            let (s, d) = arc_ends(g, a);
            (format!("{s}->{d}"), b)
        })
        .collect();
    RoundReport {
        rounds,
        max_edge_load: load.iter().copied().max().unwrap_or(0),
        per_edge_bits,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NetConfig {
    pub beta: usize,
    /// Split long payloads into packets; without it an oversized message is a
    /// bandwidth violation.
    pub framing: bool,
    /// Keep every delivery in the transcript.
    pub record: bool,
}

impl NetConfig {
    pub fn new(g: &Graph) -> Self {
        NetConfig {
            beta: default_beta(g.node_count()),
            framing: true,
            record: false,
        }
    }
}

/// The round engine. Time advances by whole synchronous rounds; every bit
/// crossing an edge is accounted to its direction.
#[derive(Clone, Debug)]
pub struct Network<'g> {
    g: &'g Graph,
    cfg: NetConfig,
    rounds: usize,
    load: Vec<u64>,
    transcript: Vec<Delivery>,
}

impl<'g> Network<'g> {
    pub fn new(g: &'g Graph, cfg: NetConfig) -> Self {
        Network {
            g,
            cfg,
            rounds: 0,
            load: vec![0; 2 * g.edge_count()],
            transcript: Vec::new(),
        }
    }

    pub fn graph(&self) -> &'g Graph {
        self.g
    }

    pub fn config(&self) -> NetConfig {
        self.cfg
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn transcript(&self) -> &[Delivery] {
        &self.transcript
    }

    pub fn take_transcript(&mut self) -> Vec<Delivery> {
        std::mem::take(&mut self.transcript)
    }

    pub fn report(&self) -> RoundReport {
        report_from_load(self.g, self.rounds, &self.load)
    }

    /// Sends a batch of single-hop messages concurrently. Messages sharing a
    /// direction are streamed back to back; the step lasts as many rounds as
    /// the busiest direction needs.
    pub fn exchange(&mut self, msgs: Vec<Message>) -> Result<Vec<Delivery>> {
        let mut stream: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, m) in msgs.iter().enumerate() {
            let a = arc(self.g, m.src, m.dst).ok_or_else(|| {
                Error::InvalidInput(format!("message {} -> {} is not on an edge", m.src, m.dst))
            })?;
            stream.entry(a).or_default().push(i);
        }
        let beta = self.cfg.beta;
        let mut arrival = vec![0usize; msgs.len()];
        let mut span = 0;
        for (&a, idx) in &stream {
            let total: usize = idx.iter().map(|&i| msgs[i].payload.len()).sum();
            if total == 0 {
                continue;
            }
            if !self.cfg.framing && total > beta {
                let (src, dst) = arc_ends(self.g, a);
                return Err(Error::Bandwidth {
                    round: self.rounds + 1,
                    src,
                    dst,
                    bits: total,
                    beta,
                });
            }
            let packets = packet_sizes(total, beta);
            self.load[a] += packets.iter().sum::<usize>() as u64;
            span = span.max(packets.len());
            let per_packet = if packets.len() == 1 { total } else { beta - HEADER_BITS };
            let mut sent = 0;
            for &i in idx {
                sent += msgs[i].payload.len();
                arrival[i] = self.rounds + sent.div_ceil(per_packet).max(1);
            }
        }
        self.rounds += span;
        let out: Vec<Delivery> = msgs
            .into_iter()
            .zip(arrival)
            .map(|(m, round)| Delivery {
                round,
                src: m.src,
                dst: m.dst,
                tag: m.tag,
                payload: m.payload,
                provenance: m.provenance,
            })
            .collect();
        if self.cfg.record {
            self.transcript.extend(out.iter().cloned());
        }
        Ok(out)
    }

    /// Runs all jobs concurrently under a precomputed schedule; returns one
    /// delivery per tree hop, carrying `payloads[j]`.
    pub fn multicast(
        &mut self,
        outcome: &MulticastOutcome,
        payloads: Vec<(Tag, Bits, Vec<Label>)>,
    ) -> Vec<Delivery> {
        assert_eq!(outcome.hops.len(), payloads.len(), "one payload per job");
        for (a, &b) in outcome.load.iter().enumerate() {
            self.load[a] += b;
        }
        let base = self.rounds;
        self.rounds += outcome.rounds;
        let mut out = Vec::new();
        for (hops, (tag, payload, provenance)) in outcome.hops.iter().zip(payloads) {
            for h in hops {
                out.push(Delivery {
                    round: base + h.arrival,
                    src: h.src,
                    dst: h.dst,
                    tag,
                    payload: payload.clone(),
                    provenance: provenance.clone(),
                });
            }
        }
        if self.cfg.record {
            self.transcript.extend(out.iter().cloned());
        }
        out
    }
}
