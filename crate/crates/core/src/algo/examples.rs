//! Example algorithms, each built for every degree of a given graph.

use std::collections::BTreeMap;

use rand::Rng;

use crate::bits::{from_u64, Bits};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::private_trees::ceil_log2;
use crate::rng::seeded_rng;

use super::circuit::{CircuitBuilder, Sig};
use super::spec::{AlgorithmSpec, RoundFn};

struct Shape {
    name: String,
    input_bits: usize,
    state_bits: usize,
    msg_bits: usize,
    output_bits: usize,
    rounds: usize,
}

/// Round context handed to circuit builders.
struct Ctx<'a> {
    b: CircuitBuilder,
    shape: &'a Shape,
    degree: usize,
    inbound: bool,
    rand_bits: usize,
}

impl Ctx<'_> {
    fn state(&self, range: std::ops::Range<usize>) -> Vec<Sig> {
        self.b.inputs(range)
    }
    fn presence(&self, k: usize) -> Sig {
        assert!(self.inbound);
        self.b.input(self.shape.state_bits + k * (1 + self.shape.msg_bits))
    }
    fn payload(&self, k: usize) -> Vec<Sig> {
        let at = self.shape.state_bits + k * (1 + self.shape.msg_bits) + 1;
        self.b.inputs(at..at + self.shape.msg_bits)
    }
    fn rand(&self) -> Vec<Sig> {
        let at = self.shape.state_bits
            + if self.inbound { self.degree * (1 + self.shape.msg_bits) } else { 0 };
        self.b.inputs(at..at + self.rand_bits)
    }
}

/// What a round function returns: the new state and, if it sends, one
/// `(presence, payload)` pair per slot.
type RoundOut = (Vec<Sig>, Option<Vec<(Sig, Vec<Sig>)>>);

/// `rounds[i] = (rand_bits, sends)`; `body(ctx, i)` builds round `i`.
fn assemble(
    g: &Graph,
    shape: Shape,
    rounds: &[(usize, bool)],
    body: impl Fn(&mut Ctx, usize) -> RoundOut,
) -> Result<AlgorithmSpec> {
    let mut by_degree = BTreeMap::new();
    for d in AlgorithmSpec::degrees(g) {
        let mut fns = Vec::with_capacity(rounds.len());
        for (i, &(rand_bits, sends)) in rounds.iter().enumerate() {
            let inbound = i > 0 && rounds[i - 1].1;
            let inputs = shape.state_bits + if inbound { d * (1 + shape.msg_bits) } else { 0 } + rand_bits;
            let mut ctx = Ctx {
                b: CircuitBuilder::new(inputs),
                shape: &shape,
                degree: d,
                inbound,
                rand_bits,
            };
            let (mut state, msgs) = body(&mut ctx, i);
            state.resize(shape.state_bits, Sig::Const(false));
            let mut outputs = state;
            match (sends, msgs) {
                (true, Some(m)) => {
                    assert_eq!(m.len(), d);
                    for (p, mut payload) in m {
                        payload.resize(shape.msg_bits, Sig::Const(false));
                        // a null message carries an all-zero payload
                        let masked = ctx.b.mask(&payload, p);
                        outputs.push(p);
                        outputs.extend(masked);
                    }
                }
                (false, None) => {}
                _ => return Err(Error::InvalidInput(format!("{}: round {i} send mismatch", shape.name))),
            }
            fns.push(RoundFn {
                circuit: ctx.b.finish(outputs),
                rand_bits,
                sends,
                rand_label: i,
            });
        }
        by_degree.insert(d, fns);
    }
    let spec = AlgorithmSpec {
        name: shape.name,
        input_bits: shape.input_bits,
        state_bits: shape.state_bits,
        msg_bits: shape.msg_bits,
        output_bits: shape.output_bits,
        rounds: shape.rounds,
        by_degree,
    };
    spec.validate()?;
    Ok(spec)
}

pub fn id_bits(g: &Graph) -> usize {
    ceil_log2(g.node_count()).max(1)
}

/// Every node sends its id to all neighbors and outputs the received ids in
/// slot order (`Δ` fields of `id_bits`, unused slots zero).
pub fn echo_ids(g: &Graph) -> Result<AlgorithmSpec> {
    let b = id_bits(g);
    let delta = g.max_degree();
    let shape = Shape {
        name: "echo-ids".into(),
        input_bits: b,
        state_bits: delta * b,
        msg_bits: b,
        output_bits: delta * b,
        rounds: 2,
    };
    assemble(g, shape, &[(0, true), (0, false)], |c, i| {
        if i == 0 {
            let id = c.state(0..b);
            let st = c.state(0..c.shape.state_bits);
            let msgs = (0..c.degree).map(|_| (Sig::Const(true), id.clone())).collect();
            (st, Some(msgs))
        } else {
            let st = (0..c.degree).flat_map(|k| c.payload(k)).collect();
            (st, None)
        }
    })
}

pub fn echo_inputs(g: &Graph) -> Vec<Bits> {
    g.nodes().map(|u| from_u64(u as u64, id_bits(g))).collect()
}

/// Colors are exchanged once; a node outputs 1 iff no neighbor shares its
/// color. State `[ok][color]`; the input color is moved behind `ok` in the
/// first round.
pub fn verify_coloring(g: &Graph, color_bits: usize) -> Result<AlgorithmSpec> {
    if color_bits == 0 {
        return Err(Error::InvalidInput("color width must be positive".into()));
    }
    let c_bits = color_bits;
    let shape = Shape {
        name: "verify-coloring".into(),
        input_bits: c_bits,
        state_bits: c_bits + 1,
        msg_bits: c_bits,
        output_bits: 1,
        rounds: 2,
    };
    assemble(g, shape, &[(0, true), (0, false)], |c, i| {
        if i == 0 {
            let color = c.state(0..c_bits);
            let mut st = vec![Sig::Const(false)];
            st.extend(color.iter().copied());
            let msgs = (0..c.degree).map(|_| (Sig::Const(true), color.clone())).collect();
            (st, Some(msgs))
        } else {
            let own = c.state(1..c_bits + 1);
            let mut conflicts = Vec::new();
            for k in 0..c.degree {
                let (p, theirs) = (c.presence(k), c.payload(k));
                let same = c.b.eq(&own, &theirs);
                conflicts.push(c.b.and(p, same));
            }
            let any = c.b.or_all(conflicts);
            let ok = c.b.not(any);
            (vec![ok], None)
        }
    })
}

pub fn coloring_inputs(colors: &[u64], color_bits: usize) -> Vec<Bits> {
    colors.iter().map(|&c| from_u64(c, color_bits)).collect()
}

/// Direct evaluation of the coloring predicate.
pub fn coloring_oracle(g: &Graph, colors: &[u64]) -> Vec<bool> {
    g.nodes()
        .map(|u| g.neighbors(u).iter().all(|&v| colors[v] != colors[u]))
        .collect()
}

/// Convergecast of a sum on the BFS tree rooted at node 0. A node at depth
/// `d` adds its children's partial sums and forwards at round `H - d + 1`.
///
/// State `[acc W][parent slot one-hot Δ][send round one-hot H]`; the static
/// part is provided as input by [`sum_to_root_inputs`].
pub fn sum_to_root(g: &Graph, width: usize) -> Result<AlgorithmSpec> {
    let tree = g.bfs_tree(0)?;
    let h = tree.max_depth();
    let delta = g.max_degree();
    let shape = Shape {
        name: "sum-to-root".into(),
        input_bits: width + delta + h,
        state_bits: width + delta + h,
        msg_bits: width,
        output_bits: width,
        rounds: h + 1,
    };
    let mut rounds = vec![(0, true); h];
    rounds.push((0, false));
    assemble(g, shape, &rounds, |c, i| {
        let mut acc = c.state(0..width);
        if c.inbound {
            for k in 0..c.degree {
                let p = c.payload(k);
                acc = c.b.add(&acc, &p);
            }
        }
        if i == h {
            return (acc, None);
        }
        let parent = c.state(width..width + c.degree);
        let now = c.b.input(width + delta + i);
        let mut st = acc.clone();
        st.extend(c.state(width..width + delta + h));
        let msgs = (0..c.degree)
            .map(|k| (c.b.and(now, parent[k]), acc.clone()))
            .collect();
        (st, Some(msgs))
    })
}

pub fn sum_to_root_inputs(g: &Graph, width: usize, values: &[u64]) -> Result<Vec<Bits>> {
    if values.len() != g.node_count() {
        return Err(Error::Length {
            expected: g.node_count(),
            got: values.len(),
        });
    }
    let tree = g.bfs_tree(0)?;
    let h = tree.max_depth();
    let delta = g.max_degree();
    Ok(g.nodes()
        .map(|u| {
            let mut x = from_u64(values[u], width);
            let mut parent = vec![false; delta];
            let mut when = vec![false; h];
            if u != tree.root {
                parent[g.slot_of(u, tree.parent[u]).expect("tree edge")] = true;
                when[h - tree.depth[u]] = true;
            }
            x.extend(parent);
            x.extend(when);
            x
        })
        .collect())
}

/// Randomized MIS with `phases` phases of Luby's random-priority rule: an
/// undecided node joins when its fresh value is strictly below every
/// undecided neighbor's value; neighbors of joiners drop out.
/// State `[in_mis][decided][value]`; output `[in_mis, decided]`.
pub fn luby_mis(g: &Graph, phases: usize) -> Result<AlgorithmSpec> {
    if phases == 0 {
        return Err(Error::InvalidInput("Luby needs at least one phase".into()));
    }
    let vb = luby_value_bits(g);
    let shape = Shape {
        name: "luby-mis".into(),
        input_bits: 0,
        state_bits: 2 + vb,
        msg_bits: vb,
        output_bits: 2,
        rounds: 2 * phases + 1,
    };
    // round 0: A; odd rounds: B; even rounds > 0: C merged with the next A; last: C
    let last = 2 * phases;
    let rounds: Vec<(usize, bool)> = (0..=last)
        .map(|i| if i % 2 == 0 && i < last { (vb, true) } else { (0, i < last) })
        .collect();
    assemble(g, shape, &rounds, |c, i| {
        let in_mis = c.b.input(0);
        let mut decided = c.b.input(1);
        if i % 2 == 0 {
            if c.inbound {
                let joined: Vec<Sig> = (0..c.degree).map(|k| c.presence(k)).collect();
                let any = c.b.or_all(joined);
                decided = c.b.or(decided, any);
            }
            if i == last {
                return (vec![in_mis, decided], None);
            }
            let undecided = c.b.not(decided);
            let value = c.rand();
            let mut st = vec![in_mis, decided];
            st.extend(value.iter().copied());
            let msgs = (0..c.degree).map(|_| (undecided, value.clone())).collect();
            (st, Some(msgs))
        } else {
            let undecided = c.b.not(decided);
            let mine = c.state(2..2 + vb);
            let mut wins = vec![undecided];
            for k in 0..c.degree {
                let (p, theirs) = (c.presence(k), c.payload(k));
                let below = c.b.less_than(&mine, &theirs);
                let absent = c.b.not(p);
                wins.push(c.b.or(absent, below));
            }
            let join = c.b.and_all(wins);
            let st = vec![c.b.or(in_mis, join), c.b.or(decided, join)];
            let msgs = (0..c.degree).map(|_| (join, Vec::new())).collect();
            (st, Some(msgs))
        }
    })
}

pub fn luby_value_bits(g: &Graph) -> usize {
    2 * ceil_log2(g.node_count()) + 2
}

/// Summary of one MIS run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MisCheck {
    pub independent: bool,
    /// Every decided non-member has a member neighbor.
    pub dominated: bool,
    pub undecided: usize,
}

pub fn check_mis(g: &Graph, outputs: &[Bits]) -> MisCheck {
    let in_mis = |u: usize| outputs[u][0];
    MisCheck {
        independent: g.edges().iter().all(|&(u, v)| !(in_mis(u) && in_mis(v))),
        dominated: g
            .nodes()
            .filter(|&u| outputs[u][1] && !in_mis(u))
            .all(|u| g.neighbors(u).iter().any(|&v| in_mis(v))),
        undecided: g.nodes().filter(|&u| !outputs[u][1]).count(),
    }
}

fn one_gate(
    g: &Graph,
    name: &str,
    rand_bits: usize,
    f: impl Fn(&mut CircuitBuilder, Sig, Vec<Sig>) -> Sig,
) -> Result<AlgorithmSpec> {
    let shape = Shape {
        name: name.into(),
        input_bits: 1,
        state_bits: 1,
        msg_bits: 0,
        output_bits: 1,
        rounds: 1,
    };
    assemble(g, shape, &[(rand_bits, false)], |c, _| {
        let s = c.b.input(0);
        let r = c.rand();
        (vec![f(&mut c.b, s, r)], None)
    })
}

/// `σ ← ¬σ`: one gate, no messages, no randomness.
pub fn not_gate(g: &Graph) -> Result<AlgorithmSpec> {
    one_gate(g, "not", 0, |b, s, _| b.not(s))
}

/// `σ ← σ ⊕ s` for one random bit `s`.
pub fn xor_coin(g: &Graph) -> Result<AlgorithmSpec> {
    one_gate(g, "xor-coin", 1, |b, s, r| b.xor(s, r[0]))
}

/// `σ ← σ ∧ s` for one random bit `s`.
pub fn and_coin(g: &Graph) -> Result<AlgorithmSpec> {
    one_gate(g, "and-coin", 1, |b, s, r| b.and(s, r[0]))
}

/// `rounds` rounds of parity gossip: each round a node XORs the bits received
/// from its neighbors into its state and forwards the result.
pub fn xor_gossip(g: &Graph, rounds: usize) -> Result<AlgorithmSpec> {
    if rounds == 0 {
        return Err(Error::InvalidInput("gossip needs at least one round".into()));
    }
    let shape = Shape {
        name: format!("xor-gossip-{rounds}"),
        input_bits: 1,
        state_bits: 1,
        msg_bits: 1,
        output_bits: 1,
        rounds,
    };
    let mut plan = vec![(0, true); rounds - 1];
    plan.push((0, false));
    assemble(g, shape, &plan, |c, i| {
        let mut s = c.b.input(0);
        if c.inbound {
            for k in 0..c.degree {
                let p = c.payload(k)[0];
                s = c.b.xor(s, p);
            }
        }
        if i + 1 == rounds {
            return (vec![s], None);
        }
        let msgs = (0..c.degree).map(|_| (Sig::Const(true), vec![s])).collect();
        (vec![s], Some(msgs))
    })
}

/// Looks up an example by name with default parameters.
pub fn by_name(g: &Graph, name: &str) -> Result<AlgorithmSpec> {
    match name {
        "echo-ids" => echo_ids(g),
        "verify-coloring" => verify_coloring(g, 1),
        "sum-to-root" => sum_to_root(g, ceil_log2(g.node_count() + 1).max(1)),
        "luby-mis" => luby_mis(g, 3),
        "not" => not_gate(g),
        "xor-coin" => xor_coin(g),
        "and-coin" => and_coin(g),
        "xor-gossip" => xor_gossip(g, 4),
        other => Err(Error::InvalidInput(format!("unknown algorithm {other:?}"))),
    }
}

/// Seeded inputs for the algorithm [`by_name`] returns.
pub fn sample_inputs(g: &Graph, name: &str, seed: u64) -> Result<Vec<Bits>> {
    let mut rng = seeded_rng(seed, "inputs", &[]);
    let n = g.node_count();
    match name {
        "echo-ids" => Ok(echo_inputs(g)),
        "verify-coloring" => Ok(coloring_inputs(&(0..n).map(|_| rng.gen_range(0..2)).collect::<Vec<_>>(), 1)),
        "sum-to-root" => {
            let w = ceil_log2(n + 1).max(1);
            let values: Vec<u64> = (0..n).map(|_| rng.gen_range(0..1 << w)).collect();
            sum_to_root_inputs(g, w, &values)
        }
        "luby-mis" => Ok(vec![Vec::new(); n]),
        "not" | "xor-coin" | "and-coin" | "xor-gossip" => Ok((0..n).map(|_| vec![rng.gen()]).collect()),
        other => Err(Error::InvalidInput(format!("unknown algorithm {other:?}"))),
    }
}

pub const NAMES: &[&str] = &[
    "echo-ids",
    "verify-coloring",
    "sum-to-root",
    "luby-mis",
    "not",
    "xor-coin",
    "and-coin",
    "xor-gossip",
];
