//! Compiles an algorithm into one whose every round is a PSM evaluation.
//!
//! Per node `u` with neighbors `v_1 < … < v_d`: `v_1` holds the state key,
//! `v_2` the encrypted state, and every neighbor feeds its part of the
//! wrapped round into a PSM whose server is `u`. The PSM randomness is drawn
//! by the root of the private tree `T(u)` and multicast along it, so it never
//! reaches `u`. After the last round `v_1` hands `u` the final state key.
//!
//! Message keys: the key of a message `a → b` is drawn by its receiver `b`,
//! which inputs it into `a`'s PSM as the output key and forwards it to the
//! lowest neighbor of `b` other than `a`; that node inputs it into `b`'s next
//! PSM. The encrypted message itself stays with `a`, which inputs it into
//! `b`'s next PSM. The initial state is masked by a key `u` draws itself and
//! hands to `v_1`.

mod cost;
mod hygiene;
mod wrap;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::algo::{gate_decompose, AlgorithmSpec};
use crate::bits::{xor, xor_in_place, Bits};
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::private_trees::{verify_private_trees, PrivateTrees};
use crate::psm::{PsmInstance, PsmMutation};
use crate::rng::{Label, Purpose, SeededTape, Tape};
use crate::sim::{
    schedule_multicasts, Delivery, Kind, Message, MulticastJob, MulticastOutcome, NetConfig, Network, RoundReport,
    Strategy, Tag,
};

pub use cost::{bound_shape, fit_constant, round_cost, RoundCost, DEFAULT_CONSTANT};
pub use hygiene::{scan_key_hygiene, HygieneReport, PROTECTED};
pub use wrap::{build_round_wrapper, PartyInput, WrapLayout, WrappedRound};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    #[default]
    Psm,
    /// Parties send their inputs in the clear. For differential testing only.
    Passthrough,
}

impl Backend {
    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "psm" => Ok(Backend::Psm),
            "passthrough" => Ok(Backend::Passthrough),
            other => Err(Error::InvalidInput(format!("unknown backend {other:?}"))),
        }
    }
}

/// Deliberate protocol faults for testing the testers.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mutation {
    #[default]
    None,
    Psm(PsmMutation),
    /// The key holder keeps the previous state key instead of drawing one.
    ReuseStateKey,
    /// `u` also sends the first bit of its initial mask to `v_2`.
    LeakKeyBit,
    /// Before every round but the first, `v_1` sends the previous state key to `u`.
    LeakStateKey,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CompileOptions {
    pub backend: Backend,
    pub mutation: Mutation,
    pub strategy: Strategy,
    /// Bandwidth; `None` selects the default for the graph.
    pub beta: Option<usize>,
    /// Gate-decompose the algorithm first.
    pub decompose: bool,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions {
            backend: Backend::Psm,
            mutation: Mutation::None,
            strategy: Strategy::FifoPipeline,
            beta: None,
            decompose: true,
        }
    }
}

/// Fixed role assignment derived from the neighbor order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Roles {
    /// `v_1(u)`: holds the state key.
    pub key_holder: Vec<NodeId>,
    /// `v_2(u)`: holds the encrypted state.
    pub state_holder: Vec<NodeId>,
    /// Root of `T(u)`: draws the PSM randomness.
    pub randomness_root: Vec<NodeId>,
}

impl Roles {
    pub fn new(g: &Graph, trees: &PrivateTrees) -> Result<Self> {
        let mut r = Roles {
            key_holder: Vec::new(),
            state_holder: Vec::new(),
            randomness_root: Vec::new(),
        };
        for u in g.nodes() {
            let nb = g.neighbors(u);
            if nb.len() < 2 {
                return Err(Error::Compile(format!("node {u} has fewer than two neighbors")));
            }
            r.key_holder.push(nb[0]);
            r.state_holder.push(nb[1]);
            r.randomness_root.push(trees.tree(u).root);
        }
        Ok(r)
    }

    /// Where `b` forwards the key of the message it receives from `a`.
    pub fn forward_target(g: &Graph, b: NodeId, a: NodeId) -> NodeId {
        let nb = g.neighbors(b);
        if nb[0] != a {
            nb[0]
        } else {
            nb[1]
        }
    }
}

/// Everything a node of one degree needs for one compiled round.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoundPlan {
    pub wrapped: WrappedRound,
    pub psm: Option<PsmInstance>,
}

impl RoundPlan {
    pub fn randomness_len(&self) -> usize {
        self.psm.as_ref().map_or(0, PsmInstance::randomness_len)
    }

    pub fn encoding_len(&self) -> usize {
        match &self.psm {
            Some(p) => p.message_len(),
            None => 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CompiledAlgorithm {
    pub source: AlgorithmSpec,
    /// The algorithm actually executed (gate-decomposed unless disabled).
    pub spec: AlgorithmSpec,
    pub graph: Graph,
    pub trees: PrivateTrees,
    pub roles: Roles,
    pub options: CompileOptions,
    pub beta: usize,
    /// `plans[i][d]`: round `i` at nodes of degree `d`.
    pub plans: Vec<BTreeMap<usize, RoundPlan>>,
    /// Per round, index into `waves`.
    pub wave_of: Vec<usize>,
    pub waves: Vec<MulticastOutcome>,
}

pub fn compile(algo: &AlgorithmSpec, g: &Graph, trees: &PrivateTrees, options: CompileOptions) -> Result<CompiledAlgorithm> {
    algo.validate()?;
    algo.covers(g)?;
    if !g.is_two_vertex_connected()? {
        return Err(Error::NotTwoVertexConnected);
    }
    let report = verify_private_trees(g, trees);
    if !report.valid {
        return Err(Error::Compile(format!(
            "private trees are invalid: {}",
            report.violations.first().cloned().unwrap_or_default()
        )));
    }
    let spec = if options.decompose {
        gate_decompose(algo)?
    } else {
        algo.clone()
    };
    let roles = Roles::new(g, trees)?;
    let beta = options.beta.unwrap_or_else(|| NetConfig::new(g).beta);
    let degrees = AlgorithmSpec::degrees(g);
    let mut plans = Vec::with_capacity(spec.rounds);
    for i in 0..spec.rounds {
        let mut by_degree = BTreeMap::new();
        for &d in &degrees {
            let layout = WrapLayout::of(&spec, d, i);
            let wrapped = build_round_wrapper(&spec.variant(d)?[i].circuit, layout)?;
            let psm = match options.backend {
                Backend::Psm => Some(PsmInstance::from_circuit(&wrapped.circuit, &layout.party_widths())?),
                Backend::Passthrough => None,
            };
            by_degree.insert(d, RoundPlan { wrapped, psm });
        }
        plans.push(by_degree);
    }
    let mut waves = Vec::new();
    let mut wave_of = Vec::with_capacity(spec.rounds);
    let mut seen: HashMap<Vec<usize>, usize> = HashMap::new();
    for plan in &plans {
        let demand: Vec<usize> = g.nodes().map(|u| plan[&g.degree(u)].randomness_len()).collect();
        let idx = match seen.get(&demand) {
            Some(&k) => k,
            None => {
                let outcome = schedule_multicasts(g, &randomness_jobs(g, trees, &demand), beta, options.strategy)?;
                waves.push(outcome);
                seen.insert(demand, waves.len() - 1);
                waves.len() - 1
            }
        };
        wave_of.push(idx);
    }
    Ok(CompiledAlgorithm {
        source: algo.clone(),
        spec,
        graph: g.clone(),
        trees: trees.clone(),
        roles,
        options,
        beta,
        plans,
        wave_of,
        waves,
    })
}

/// One multicast per node: `T(u)`'s root ships `demand[u]` bits to `Γ(u)`.
pub fn randomness_jobs(g: &Graph, trees: &PrivateTrees, demand: &[usize]) -> Vec<MulticastJob> {
    g.nodes()
        .map(|u| {
            let tree = trees.tree(u);
            MulticastJob {
                tree: tree.clone(),
                payload_bits: demand[u],
                recipients: g.neighbors(u).iter().copied().filter(|&v| v != tree.root).collect(),
            }
        })
        .collect()
}

/// Result of [`distribute_randomness`].
#[derive(Clone, Debug)]
pub struct SharedRandomness {
    /// `shared[u]`: the string `R_u` as held by each neighbor of `u`.
    pub shared: Vec<BTreeMap<NodeId, Bits>>,
    pub report: RoundReport,
    pub deliveries: Vec<Delivery>,
}

/// Every root of `T(u)` draws `R_u` of `demand[u]` bits and multicasts it to
/// `Γ(u)` along `T(u)`, all trees at once.
pub fn distribute_randomness(
    g: &Graph,
    trees: &PrivateTrees,
    demand: &[usize],
    seed: u64,
    beta: usize,
    strategy: Strategy,
) -> Result<SharedRandomness> {
    let outcome = schedule_multicasts(g, &randomness_jobs(g, trees, demand), beta, strategy)?;
    let cfg = NetConfig {
        beta,
        framing: true,
        record: true,
    };
    let mut net = Network::new(g, cfg);
    let mut tape = SeededTape::new(seed);
    let mut draws = Draws::new(&mut tape, false);
    let shared = wave(g, trees, &mut net, &outcome, demand, 0, &mut draws)?;
    Ok(SharedRandomness {
        shared,
        report: net.report(),
        deliveries: net.take_transcript(),
    })
}

struct Draws<'t> {
    tape: &'t mut dyn Tape,
    log: Option<Vec<(Label, Bits)>>,
}

impl<'t> Draws<'t> {
    fn new(tape: &'t mut dyn Tape, record: bool) -> Self {
        Draws {
            tape,
            log: record.then(Vec::new),
        }
    }

    fn draw(&mut self, label: Label, len: usize) -> Bits {
        if len == 0 {
            return Vec::new();
        }
        let b = self.tape.draw(label, len);
        if let Some(log) = &mut self.log {
            log.push((label, b.clone()));
        }
        b
    }
}

fn wave(
    g: &Graph,
    trees: &PrivateTrees,
    net: &mut Network,
    outcome: &MulticastOutcome,
    demand: &[usize],
    round: usize,
    draws: &mut Draws,
) -> Result<Vec<BTreeMap<NodeId, Bits>>> {
    let mut payloads = Vec::with_capacity(g.node_count());
    let mut shared: Vec<BTreeMap<NodeId, Bits>> = vec![BTreeMap::new(); g.node_count()];
    for u in g.nodes() {
        let root = trees.tree(u).root;
        let label = Label::new(root, Purpose::PsmRandomness, u, round, 0);
        let r = draws.draw(label, demand[u]);
        shared[u].insert(root, r.clone());
        payloads.push((Tag::new(Kind::Randomness, u, round), r, vec![label]));
    }
    for d in net.multicast(outcome, payloads) {
        if g.has_edge(d.dst, d.tag.subject) {
            shared[d.tag.subject].insert(d.dst, d.payload);
        }
    }
    for u in g.nodes() {
        if let Some(&v) = g.neighbors(u).iter().find(|v| !shared[u].contains_key(v)) {
            if demand[u] > 0 {
                return Err(Error::Protocol(format!("neighbor {v} of {u} missed R_{u}")));
            }
            shared[u].insert(v, Vec::new());
        }
    }
    Ok(shared)
}

/// Runs one PSM with server `u`: every neighbor encodes its block under the
/// shared string and sends it over its edge; `u` decodes.
pub fn run_psm_round(
    net: &mut Network,
    u: NodeId,
    psm: &PsmInstance,
    inputs: &[Bits],
    shared: &[bool],
    round: usize,
) -> Result<Bits> {
    let g = net.graph();
    let nb = g.neighbors(u);
    if inputs.len() != nb.len() {
        return Err(Error::Protocol(format!("{} inputs for {} neighbors", inputs.len(), nb.len())));
    }
    let mut msgs = Vec::with_capacity(nb.len());
    for (j, &v) in nb.iter().enumerate() {
        msgs.push(Message {
            src: v,
            dst: u,
            tag: Tag::new(Kind::Encoding, u, round),
            payload: psm.encode(j, &inputs[j], shared)?,
            provenance: Vec::new(),
        });
    }
    let got = net.exchange(msgs)?;
    let ordered: Vec<Bits> = got.into_iter().map(|d| d.payload).collect();
    psm.decode(&ordered)
}

/// Outcome of one compiled execution.
#[derive(Clone, Debug, Default)]
pub struct Execution {
    pub inputs: Vec<Bits>,
    pub outputs: Vec<Bits>,
    pub report: RoundReport,
    pub recorded: bool,
    pub transcript: Vec<Delivery>,
    /// Every tape draw with its label, in draw order.
    pub draws: Vec<(Label, Bits)>,
    /// `memory[u][i]`: the PSM output `u` learned in round `i`.
    pub memory: Vec<Vec<Bits>>,
    /// `psm_inputs[u][i]`: the party blocks of `u`'s round-`i` instance.
    pub psm_inputs: Vec<Vec<Vec<Bits>>>,
    /// Network rounds spent on (hand-offs, randomness waves, encodings, final keys).
    pub phase_rounds: [usize; 4],
}

impl CompiledAlgorithm {
    pub fn plan(&self, u: NodeId, round: usize) -> &RoundPlan {
        &self.plans[round][&self.graph.degree(u)]
    }

    fn net_config(&self, record: bool) -> NetConfig {
        NetConfig {
            beta: self.beta,
            framing: true,
            record,
        }
    }

    pub fn run(&self, inputs: &[Bits], seed: u64, record: bool) -> Result<Execution> {
        self.execute(inputs, &mut SeededTape::new(seed), record)
    }

    pub fn execute(&self, inputs: &[Bits], tape: &mut dyn Tape, record: bool) -> Result<Execution> {
        let g = &self.graph;
        let n = g.node_count();
        if inputs.len() != n {
            return Err(Error::Length {
                expected: n,
                got: inputs.len(),
            });
        }
        let spec = &self.spec;
        let s = spec.state_bits;
        let fb = spec.field_bits();
        let mutation = self.options.mutation;
        let psm_mutation = match mutation {
            Mutation::Psm(m) => m,
            _ => PsmMutation::None,
        };
        let mut draws = Draws::new(tape, record);
        let mut net = Network::new(g, self.net_config(record));
        let mut phase_rounds = [0usize; 4];
        let mut memory = vec![Vec::with_capacity(spec.rounds); n];
        let mut psm_inputs: Vec<Vec<Vec<Bits>>> = vec![Vec::new(); n];

        // u's encrypted state, and the key its key holder keeps for it
        let mut sealed: Vec<Bits> = Vec::with_capacity(n);
        let mut masks: Vec<Bits> = Vec::with_capacity(n);
        for (u, x) in inputs.iter().enumerate() {
            let sigma = spec.initial_state(x)?;
            let m = draws.draw(Label::new(u, Purpose::InitialMask, u, 0, 0), s);
            let m = if m.len() == s { m } else { vec![false; s] };
            sealed.push(xor(&sigma, &m));
            masks.push(m);
        }
        if spec.rounds == 0 {
            let outputs = sealed
                .iter()
                .zip(&masks)
                .map(|(c, m)| xor(c, m)[..spec.output_bits].to_vec())
                .collect();
            return Ok(Execution {
                inputs: inputs.to_vec(),
                outputs,
                report: net.report(),
                recorded: record,
                draws: draws.log.unwrap_or_default(),
                memory,
                ..Execution::default()
            });
        }
        let mut held_key: Vec<Bits> = vec![Vec::new(); n];
        let mut held_key_label: Vec<Label> = g
            .nodes()
            .map(|u| Label::new(self.roles.key_holder[u], Purpose::StateKey, u, 0, 0))
            .collect();
        // (a, b) -> m̂_{a→b} at a; (a, b) -> K_{a→b} at b before forwarding
        let mut sealed_msgs: HashMap<(NodeId, NodeId), Bits> = HashMap::new();
        let mut fresh_keys: HashMap<(NodeId, NodeId), (Bits, Label)> = HashMap::new();

        for i in 0..spec.rounds {
            // hand-offs
            let mut msgs = Vec::new();
            for u in g.nodes() {
                let (v1, v2) = (self.roles.key_holder[u], self.roles.state_holder[u]);
                msgs.push(Message {
                    src: u,
                    dst: v2,
                    tag: Tag::new(Kind::EncryptedState, u, i),
                    payload: sealed[u].clone(),
                    provenance: Vec::new(),
                });
                if i == 0 {
                    let label = Label::new(u, Purpose::InitialMask, u, 0, 0);
                    msgs.push(Message {
                        src: u,
                        dst: v1,
                        tag: Tag::new(Kind::InitialMask, u, 0),
                        payload: masks[u].clone(),
                        provenance: vec![label],
                    });
                    if mutation == Mutation::LeakKeyBit {
                        msgs.push(Message {
                            src: u,
                            dst: v2,
                            tag: Tag::new(Kind::InitialMask, u, 0),
                            payload: masks[u][..1.min(s)].to_vec(),
                            provenance: vec![label],
                        });
                    }
                } else if mutation == Mutation::LeakStateKey {
                    msgs.push(Message {
                        src: v1,
                        dst: u,
                        tag: Tag::new(Kind::KeyForward, u, i),
                        payload: held_key[u].clone(),
                        provenance: vec![held_key_label[u]],
                    });
                }
            }
            let mut keys: Vec<_> = fresh_keys.drain().collect();
            keys.sort_by_key(|((a, b), _)| (*a, *b));
            for ((a, b), (k, label)) in keys {
                msgs.push(Message {
                    src: b,
                    dst: Roles::forward_target(g, b, a),
                    tag: Tag::new(Kind::KeyForward, a, i),
                    payload: k,
                    provenance: vec![label],
                });
            }
            let before = net.rounds();
            let delivered = net.exchange(msgs)?;
            phase_rounds[0] += net.rounds() - before;
            let mut held_sealed: Vec<Bits> = vec![Vec::new(); n];
            let mut forwarded: HashMap<(NodeId, NodeId), Bits> = HashMap::new();
            for d in delivered {
                match d.tag.kind {
                    Kind::EncryptedState => held_sealed[d.tag.subject] = d.payload,
                    Kind::InitialMask if d.dst == self.roles.key_holder[d.src] => {
                        held_key[d.src] = d.payload;
                        held_key_label[d.src] = d.provenance[0];
                    }
                    // key of the message subject → src, now at dst
                    Kind::KeyForward if d.tag.subject != d.dst => {
                        forwarded.insert((d.tag.subject, d.src), d.payload);
                    }
                    _ => {}
                }
            }

            // randomness wave
            let demand: Vec<usize> = g.nodes().map(|u| self.plan(u, i).randomness_len()).collect();
            let before = net.rounds();
            let shared = wave(g, &self.trees, &mut net, &self.waves[self.wave_of[i]], &demand, i, &mut draws)?;
            phase_rounds[1] += net.rounds() - before;

            // neighbors prepare and send encodings
            let mut enc = Vec::new();
            let mut new_keys: Vec<Bits> = vec![Vec::new(); n];
            let mut out_keys: HashMap<(NodeId, NodeId), (Bits, Label)> = HashMap::new();
            for u in g.nodes() {
                let plan = self.plan(u, i);
                let layout = plan.wrapped.layout;
                if record {
                    psm_inputs[u].push(Vec::with_capacity(layout.degree));
                }
                let nb = g.neighbors(u);
                let v1 = nb[0];
                let label = Label::new(v1, Purpose::StateKey, u, i, 0);
                new_keys[u] = if mutation == Mutation::ReuseStateKey {
                    held_key[u].clone()
                } else {
                    draws.draw(label, s)
                };
                if new_keys[u].len() != s {
                    new_keys[u] = vec![false; s];
                }
                for (j, &v) in nb.iter().enumerate() {
                    let mut p = PartyInput::default();
                    if j == 0 {
                        p.old_key = held_key[u].clone();
                        p.new_key = new_keys[u].clone();
                    }
                    if j == 1 {
                        p.sealed_state = held_sealed[u].clone();
                    }
                    if layout.inbound {
                        p.sealed_message = sealed_msgs.remove(&(v, u)).unwrap_or_else(|| vec![false; fb]);
                        for k in layout.forwarded(j) {
                            let a = nb[k];
                            let key = forwarded.remove(&(a, u)).ok_or_else(|| {
                                Error::Protocol(format!("round {i}: key of {a} -> {u} missing at {v}"))
                            })?;
                            p.forwarded_keys.push(key);
                        }
                    }
                    p.share = draws.draw(Label::new(v, Purpose::RandomShare, u, i, 0), layout.rand_bits);
                    if layout.sends {
                        let label = Label::new(v, Purpose::MessageKey, u, i, 0);
                        let k = draws.draw(label, fb);
                        p.outbound_key = k.clone();
                        out_keys.insert((u, v), (k, label));
                    }
                    let block = p.assemble(&layout, j)?;
                    if record {
                        psm_inputs[u][i].push(block.clone());
                    }
                    let payload = match &plan.psm {
                        Some(psm) => psm.encode_with(j, &block, &shared[u][&v], psm_mutation)?,
                        None => block,
                    };
                    enc.push(Message {
                        src: v,
                        dst: u,
                        tag: Tag::new(Kind::Encoding, u, i),
                        payload,
                        provenance: Vec::new(),
                    });
                }
            }
            let before = net.rounds();
            let delivered = net.exchange(enc)?;
            phase_rounds[2] += net.rounds() - before;
            let mut inbox: Vec<Vec<Bits>> = g.nodes().map(|u| vec![Vec::new(); g.degree(u)]).collect();
            for d in delivered {
                let k = g.slot_of(d.dst, d.src).expect("edge");
                inbox[d.dst][k] = d.payload;
            }

            // servers decode
            sealed_msgs.clear();
            for u in g.nodes() {
                let plan = self.plan(u, i);
                let out = match &plan.psm {
                    Some(psm) => psm.decode(&inbox[u])?,
                    None => plan.wrapped.eval(&inbox[u])?,
                };
                sealed[u] = out[..s].to_vec();
                if plan.wrapped.layout.sends {
                    for (k, &v) in g.neighbors(u).iter().enumerate() {
                        sealed_msgs.insert((u, v), out[s + k * fb..s + (k + 1) * fb].to_vec());
                    }
                }
                if record {
                    memory[u].push(out);
                }
                held_key[u] = std::mem::take(&mut new_keys[u]);
                if mutation != Mutation::ReuseStateKey {
                    held_key_label[u] = Label::new(g.neighbors(u)[0], Purpose::StateKey, u, i, 0);
                }
            }
            // each receiver b now holds K_{a→b}; forwarded next round
            fresh_keys = out_keys;
        }

        let mut msgs = Vec::with_capacity(n);
        for u in g.nodes() {
            msgs.push(Message {
                src: self.roles.key_holder[u],
                dst: u,
                tag: Tag::new(Kind::FinalKey, u, spec.rounds),
                payload: held_key[u].clone(),
                provenance: vec![held_key_label[u]],
            });
        }
        let before = net.rounds();
        let delivered = net.exchange(msgs)?;
        phase_rounds[3] += net.rounds() - before;
        let mut outputs = vec![Vec::new(); n];
        for d in delivered {
            let mut y = sealed[d.dst].clone();
            xor_in_place(&mut y, &d.payload);
            y.truncate(spec.output_bits);
            outputs[d.dst] = y;
        }
        Ok(Execution {
            inputs: inputs.to_vec(),
            outputs,
            report: net.report(),
            recorded: record,
            transcript: net.take_transcript(),
            draws: draws.log.unwrap_or_default(),
            memory,
            psm_inputs,
            phase_rounds,
        })
    }

    /// Network rounds of an execution on all-zero inputs.
    pub fn measure_rounds(&self) -> Result<usize> {
        let zeros = vec![vec![false; self.spec.input_bits]; self.graph.node_count()];
        Ok(self.run(&zeros, 0, false)?.report.rounds)
    }

    /// PSM instances executed per run (one per node per round).
    pub fn psm_instances(&self) -> usize {
        match self.options.backend {
            Backend::Psm => self.spec.rounds * self.graph.node_count(),
            Backend::Passthrough => 0,
        }
    }

    /// Per round, the shared randomness bits drawn across all nodes.
    pub fn randomness_bits_per_round(&self) -> Vec<usize> {
        (0..self.spec.rounds)
            .map(|i| self.graph.nodes().map(|u| self.plan(u, i).randomness_len()).sum())
            .collect()
    }

    pub fn summary(&self) -> Result<serde_json::Value> {
        let cost = round_cost(self)?;
        Ok(serde_json::json!({
            "rounds": cost.measured,
            "psmInstances": self.psm_instances(),
            "randomnessBitsPerRound": self.randomness_bits_per_round(),
            "predictedBound": cost.predicted,
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algo::examples::*;
    use crate::bits::{from_u64, to_u64};
    use crate::private_trees::build_private_trees;
    use crate::sim::run;

    fn compiled(g: &Graph, algo: &AlgorithmSpec, backend: Backend) -> CompiledAlgorithm {
        let trees = build_private_trees(g).unwrap();
        let opts = CompileOptions {
            backend,
            ..CompileOptions::default()
        };
        compile(algo, g, &trees, opts).unwrap()
    }

    fn plain(g: &Graph, algo: &AlgorithmSpec, inputs: &[Bits]) -> Vec<Bits> {
        run(g, algo, inputs, 0, NetConfig::new(g)).unwrap().outputs
    }

    #[test]
    fn coloring_on_c4_matches_plain() {
        let g = Graph::cycle(4);
        let algo = verify_coloring(&g, 2).unwrap();
        let c = compiled(&g, &algo, Backend::Psm);
        for colors in [[0u64, 1, 0, 1], [0, 0, 1, 2], [3, 1, 2, 1]] {
            let x = coloring_inputs(&colors, 2);
            let e = c.run(&x, 5, false).unwrap();
            assert_eq!(e.outputs, plain(&g, &algo, &x), "{colors:?}");
        }
        let e = c.run(&coloring_inputs(&[0, 1, 0, 1], 2), 9, false).unwrap();
        assert!(e.outputs.iter().all(|y| y == &vec![true]));
    }

    #[test]
    fn sum_on_c4_reaches_ten() {
        let g = Graph::cycle(4);
        let algo = sum_to_root(&g, 4).unwrap();
        let x = sum_to_root_inputs(&g, 4, &[1, 2, 3, 4]).unwrap();
        let e = compiled(&g, &algo, Backend::Psm).run(&x, 1, false).unwrap();
        assert_eq!(to_u64(&e.outputs[0]), 10);
    }

    #[test]
    fn backends_agree() {
        let g = Graph::complete(4);
        let algo = xor_gossip(&g, 2).unwrap();
        let a = compiled(&g, &algo, Backend::Psm);
        let b = compiled(&g, &algo, Backend::Passthrough);
        for seed in 0..4 {
            let x: Vec<Bits> = (0..4).map(|u| from_u64((seed * 7 + u) % 2, 1)).collect();
            assert_eq!(a.run(&x, seed, false).unwrap().outputs, b.run(&x, seed, false).unwrap().outputs);
        }
    }

    #[test]
    fn randomness_reaches_neighbors_only() {
        let g = Graph::cycle(4);
        let trees = build_private_trees(&g).unwrap();
        let r = distribute_randomness(&g, &trees, &[8, 8, 8, 8], 3, 32, Strategy::FifoPipeline).unwrap();
        assert_eq!(r.shared[0].keys().copied().collect::<Vec<_>>(), vec![1, 3]);
        assert_eq!(r.shared[0][&1], r.shared[0][&3]);
        assert!(r
            .deliveries
            .iter()
            .all(|d| d.tag.subject != d.dst && d.tag.subject != d.src));
        let none = distribute_randomness(&g, &trees, &[0; 4], 3, 32, Strategy::FifoPipeline).unwrap();
        assert_eq!(none.report.rounds, 0);
    }

    #[test]
    fn single_psm_round_decodes_the_wrapped_output() {
        let g = Graph::cycle(4);
        let c = compiled(&g, &not_gate(&g).unwrap(), Backend::Psm);
        let plan = c.plan(0, 0);
        let psm = plan.psm.as_ref().unwrap();
        let blocks: Vec<Bits> = plan
            .wrapped
            .layout
            .party_widths()
            .iter()
            .map(|&w| (0..w).map(|b| b % 2 == 0).collect())
            .collect();
        let mut net = Network::new(&g, NetConfig::new(&g));
        let r = vec![true; psm.randomness_len()];
        let y = run_psm_round(&mut net, 0, psm, &blocks, &r, 0).unwrap();
        assert_eq!(y, plan.wrapped.eval(&blocks).unwrap());
        assert_eq!(net.rounds(), 1);
    }

    #[test]
    fn preconditions_are_checked() {
        let g = Graph::path(4);
        let algo = not_gate(&g).unwrap();
        let trees = PrivateTrees::from_trees(&g, Vec::new());
        assert!(compile(&algo, &g, &trees, CompileOptions::default()).is_err());
    }

    #[test]
    fn luby_on_c5_yields_an_mis() {
        let g = Graph::cycle(5);
        let algo = luby_mis(&g, 3).unwrap();
        let c = compiled(&g, &algo, Backend::Psm);
        let x = vec![Vec::new(); 5];
        for seed in 0..3 {
            let e = c.run(&x, seed, true).unwrap();
            let check = check_mis(&g, &e.outputs);
            assert!(check.independent && check.dominated, "seed {seed}: {check:?}");
            assert!(scan_key_hygiene(&e.transcript).clean());
        }
    }

    #[test]
    fn zero_round_spec_needs_no_communication() {
        let g = Graph::cycle(4);
        let mut algo = not_gate(&g).unwrap();
        algo.rounds = 0;
        for fns in algo.by_degree.values_mut() {
            fns.clear();
        }
        let c = compiled(&g, &algo, Backend::Psm);
        let x: Vec<Bits> = (0..4).map(|u| from_u64(u % 2, 1)).collect();
        let e = c.run(&x, 3, true).unwrap();
        assert_eq!(e.outputs, x);
        assert_eq!(e.report.rounds, 0);
        assert!(e.transcript.is_empty());
    }

    #[test]
    fn leaked_state_key_is_flagged() {
        let g = Graph::cycle(4);
        let algo = xor_gossip(&g, 2).unwrap();
        let x = vec![vec![true]; 4];
        let honest = compiled(&g, &algo, Backend::Psm).run(&x, 0, true).unwrap();
        assert!(scan_key_hygiene(&honest.transcript).clean());
        let trees = build_private_trees(&g).unwrap();
        let opts = CompileOptions {
            mutation: Mutation::LeakStateKey,
            ..CompileOptions::default()
        };
        let leaky = compile(&algo, &g, &trees, opts).unwrap().run(&x, 0, true).unwrap();
        let report = scan_key_hygiene(&leaky.transcript);
        assert!(!report.clean());
        assert_eq!(leaky.outputs, honest.outputs);
    }
}
