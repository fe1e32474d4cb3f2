//! Concurrent tree multicasts with store-and-forward pipelining.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::private_trees::{ceil_log2, RootedTree};
use crate::rng::seeded_rng;

use super::{arc, packet_sizes};

/// Ships `payload_bits` from the tree root to every recipient.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MulticastJob {
    pub tree: RootedTree,
    pub payload_bits: usize,
    pub recipients: Vec<NodeId>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "strategy")]
pub enum Strategy {
    /// Greedy store-and-forward; each direction forwards the oldest waiting
    /// packet, ties broken by job then sequence number.
    FifoPipeline,
    /// Each job runs its solo pipeline from a random start step; a step lasts
    /// `⌈log₂ n⌉` rounds, and steps that would overload an edge trigger a
    /// retry with fresh offsets.
    RandomDelay { seed: u64, max_attempts: usize },
}

impl Strategy {
    pub fn parse(text: &str, seed: u64) -> Result<Self> {
        match text {
            "fifo" | "fifo-pipeline" => Ok(Strategy::FifoPipeline),
            "random-delay" => Ok(Strategy::RandomDelay {
                seed,
                max_attempts: 16,
            }),
            other => Err(Error::InvalidInput(format!("unknown strategy {other:?}"))),
        }
    }
}

/// One tree edge used by a job; `arrival` is the round its last packet lands.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Hop {
    pub src: NodeId,
    pub dst: NodeId,
    pub arrival: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MulticastOutcome {
    pub rounds: usize,
    /// Bits per directed edge (see [`super::arc`]).
    pub load: Vec<u64>,
    /// Per job, its hops in breadth-first order.
    pub hops: Vec<Vec<Hop>>,
    /// Largest number of packets crossing one directed edge.
    pub congestion: usize,
    /// Depth of the deepest pruned tree.
    pub dilation: usize,
    pub attempts: usize,
}

impl MulticastOutcome {
    /// Round at which `node` holds the whole payload of job `j`.
    pub fn arrival(&self, j: usize, node: NodeId) -> Option<usize> {
        self.hops[j].iter().find(|h| h.dst == node).map(|h| h.arrival)
    }

    pub fn report(&self, g: &Graph) -> super::RoundReport {
        super::report_from_load(g, self.rounds, &self.load)
    }
}

struct Prepared {
    /// Per job: arcs in BFS order with (src, dst, child depth).
    arcs: Vec<Vec<(usize, NodeId, NodeId, usize)>>,
    packets: Vec<Vec<usize>>,
    congestion: usize,
    dilation: usize,
}

fn prepare(g: &Graph, jobs: &[MulticastJob], beta: usize) -> Result<Prepared> {
    let mut arcs = Vec::with_capacity(jobs.len());
    let mut packets = Vec::with_capacity(jobs.len());
    let mut per_arc: HashMap<usize, usize> = HashMap::new();
    let mut dilation = 0;
    for (j, job) in jobs.iter().enumerate() {
        if let Some(&r) = job.recipients.iter().find(|&&r| !job.tree.contains(r)) {
            return Err(Error::InvalidInput(format!("job {j}: recipient {r} is not in the tree")));
        }
        let tree = job.tree.pruned_to(job.recipients.iter().copied());
        let depth = tree
            .depths()
            .ok_or_else(|| Error::InvalidInput(format!("job {j}: malformed tree")))?;
        let p = if job.recipients.iter().all(|&r| r == tree.root) {
            Vec::new()
        } else {
            packet_sizes(job.payload_bits, beta)
        };
        let mut list = Vec::new();
        let mut order: Vec<NodeId> = tree.members().filter(|&v| v != tree.root).collect();
        order.sort_by_key(|v| (depth[v], *v));
        for v in order {
            let parent = tree.parent[&v];
            let a = arc(g, parent, v).ok_or_else(|| {
                Error::InvalidInput(format!("job {j}: tree edge ({parent}, {v}) is not a graph edge"))
            })?;
            if !p.is_empty() {
                *per_arc.entry(a).or_insert(0) += p.len();
                dilation = dilation.max(depth[&v]);
            }
            list.push((a, parent, v, depth[&v]));
        }
        if p.is_empty() {
            list.clear();
        }
        arcs.push(list);
        packets.push(p);
    }
    Ok(Prepared {
        arcs,
        packets,
        congestion: per_arc.values().copied().max().unwrap_or(0),
        dilation,
    })
}

/// Schedules all jobs concurrently and reports rounds and per-edge bits.
pub fn schedule_multicasts(
    g: &Graph,
    jobs: &[MulticastJob],
    beta: usize,
    strategy: Strategy,
) -> Result<MulticastOutcome> {
    let prep = prepare(g, jobs, beta)?;
    match strategy {
        Strategy::FifoPipeline => Ok(fifo(g, &prep)),
        Strategy::RandomDelay { seed, max_attempts } => random_delay(g, &prep, beta, seed, max_attempts),
    }
}

fn fifo(g: &Graph, prep: &Prepared) -> MulticastOutcome {
    let mut load = vec![0u64; 2 * g.edge_count()];
    // per job: node -> outgoing arcs
    let children: Vec<BTreeMap<NodeId, Vec<usize>>> = prep
        .arcs
        .iter()
        .map(|list| {
            let mut m: BTreeMap<NodeId, Vec<usize>> = BTreeMap::new();
            for (i, &(_, src, _, _)) in list.iter().enumerate() {
                m.entry(src).or_default().push(i);
            }
            m
        })
        .collect();
    let mut queues: HashMap<usize, BinaryHeap<Reverse<(usize, usize, usize, usize)>>> = HashMap::new();
    let mut active: BTreeSet<usize> = BTreeSet::new();
    let enqueue = |queues: &mut HashMap<usize, BinaryHeap<_>>, active: &mut BTreeSet<usize>, a, item| {
        queues.entry(a).or_default().push(Reverse(item));
        active.insert(a);
    };
    for (j, list) in prep.arcs.iter().enumerate() {
        let Some(&(_, root, _, _)) = list.first() else { continue };
        for &i in children[j].get(&root).into_iter().flatten() {
            for seq in 0..prep.packets[j].len() {
                enqueue(&mut queues, &mut active, list[i].0, (0, j, seq, i));
            }
        }
    }
    let mut arrival: Vec<Vec<usize>> = prep.arcs.iter().map(|l| vec![0; l.len()]).collect();
    let mut t = 0;
    while !active.is_empty() {
        t += 1;
        let mut landed = Vec::new();
        for &a in &active {
            let q = queues.get_mut(&a).expect("active queue");
            if let Some(&Reverse((ready, j, seq, i))) = q.peek() {
                if ready < t {
                    q.pop();
                    load[a] += prep.packets[j][seq] as u64;
                    arrival[j][i] = t;
                    landed.push((j, seq, i));
                }
            }
        }
        for (j, seq, i) in landed {
            let dst = prep.arcs[j][i].2;
            for &c in children[j].get(&dst).into_iter().flatten() {
                enqueue(&mut queues, &mut active, prep.arcs[j][c].0, (t, j, seq, c));
            }
        }
        active.retain(|a| !queues[a].is_empty());
    }
    finish(prep, load, arrival, 1)
}

fn finish(prep: &Prepared, load: Vec<u64>, arrival: Vec<Vec<usize>>, attempts: usize) -> MulticastOutcome {
    let hops: Vec<Vec<Hop>> = prep
        .arcs
        .iter()
        .zip(&arrival)
        .map(|(list, arr)| {
            list.iter()
                .zip(arr)
                .map(|(&(_, src, dst, _), &arrival)| Hop { src, dst, arrival })
                .collect()
        })
        .collect();
    MulticastOutcome {
        rounds: arrival.iter().flatten().copied().max().unwrap_or(0),
        load,
        hops,
        congestion: prep.congestion,
        dilation: prep.dilation,
        attempts,
    }
}

fn random_delay(
    g: &Graph,
    prep: &Prepared,
    beta: usize,
    seed: u64,
    max_attempts: usize,
) -> Result<MulticastOutcome> {
    let phase = ceil_log2(g.node_count()).max(1);
    let spread = prep.congestion.div_ceil(phase);
    let mut worst = 0;
    for attempt in 0..max_attempts.max(1) {
        let mut rng = seeded_rng(seed, "random-delay", &[attempt as u64]);
        let offsets: Vec<usize> = (0..prep.arcs.len()).map(|_| rng.gen_range(0..=spread)).collect();
        // (arc, step) -> packets as (job, seq, arc position)
        let mut slots: BTreeMap<(usize, usize), Vec<(usize, usize, usize)>> = BTreeMap::new();
        for (j, list) in prep.arcs.iter().enumerate() {
            for (i, &(a, _, _, depth)) in list.iter().enumerate() {
                for seq in 0..prep.packets[j].len() {
                    slots
                        .entry((a, offsets[j] + seq + depth - 1))
                        .or_default()
                        .push((j, seq, i));
                }
            }
        }
        let overload = slots
            .values()
            .map(|v| v.iter().map(|&(j, s, _)| prep.packets[j][s]).sum::<usize>())
            .max()
            .unwrap_or(0)
            .saturating_sub(phase * beta);
        let crowded = slots.values().any(|v| v.len() > phase);
        if crowded {
            worst = worst.max(overload.max(1));
            continue;
        }
        let mut load = vec![0u64; 2 * g.edge_count()];
        let mut arrival: Vec<Vec<usize>> = prep.arcs.iter().map(|l| vec![0; l.len()]).collect();
        for (&(a, step), items) in &slots {
            for (pos, &(j, seq, i)) in items.iter().enumerate() {
                load[a] += prep.packets[j][seq] as u64;
                let t = step * phase + pos + 1;
                arrival[j][i] = arrival[j][i].max(t);
            }
        }
        return Ok(finish(prep, load, arrival, attempt + 1));
    }
    Err(Error::Scheduling {
        attempts: max_attempts.max(1),
        overload: worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::HEADER_BITS;

    fn path_tree(nodes: &[NodeId]) -> RootedTree {
        let mut parent = BTreeMap::from([(nodes[0], nodes[0])]);
        for w in nodes.windows(2) {
            parent.insert(w[1], w[0]);
        }
        RootedTree {
            root: nodes[0],
            parent,
        }
    }

    #[test]
    fn single_path_pipelines() {
        let g = Graph::path(3);
        let beta = 32;
        let job = MulticastJob {
            tree: path_tree(&[0, 1, 2]),
            payload_bits: 3 * (beta - HEADER_BITS),
            recipients: vec![2],
        };
        let out = schedule_multicasts(&g, &[job], beta, Strategy::FifoPipeline).unwrap();
        assert_eq!(out.rounds, 2 + 3 - 1);
        assert_eq!(out.arrival(0, 1), Some(3));
        assert_eq!(out.load[arc(&g, 0, 1).unwrap()], 3 * beta as u64);
        for d in 1..6 {
            for p in 1..5 {
                let g = Graph::path(d + 1);
                let nodes: Vec<NodeId> = (0..=d).collect();
                let job = MulticastJob {
                    tree: path_tree(&nodes),
                    payload_bits: p * 16,
                    recipients: vec![d],
                };
                let out = schedule_multicasts(&g, &[job], 32, Strategy::FifoPipeline).unwrap();
                let expect = if p * 16 <= 32 { d } else { d + p - 1 };
                assert_eq!(out.rounds, expect, "d={d} p={p}");
            }
        }
    }

    #[test]
    fn disjoint_trees_do_not_interfere() {
        let g = Graph::cycle(8);
        let jobs: Vec<MulticastJob> = [[0, 1, 2], [4, 5, 6]]
            .iter()
            .map(|n| MulticastJob {
                tree: path_tree(n),
                payload_bits: 64,
                recipients: vec![n[2]],
            })
            .collect();
        let out = schedule_multicasts(&g, &jobs, 32, Strategy::FifoPipeline).unwrap();
        assert_eq!(out.rounds, 2 + 4 - 1);
    }

    #[test]
    fn pruning_skips_branches_without_recipients() {
        let g = Graph::complete(4);
        let tree = RootedTree {
            root: 0,
            parent: BTreeMap::from([(0, 0), (1, 0), (2, 1), (3, 0)]),
        };
        let job = MulticastJob {
            tree,
            payload_bits: 8,
            recipients: vec![3],
        };
        let out = schedule_multicasts(&g, &[job], 32, Strategy::FifoPipeline).unwrap();
        assert_eq!(out.hops[0].len(), 1);
        assert_eq!(out.rounds, 1);
    }

    #[test]
    fn random_delay_respects_bandwidth() {
        let g = Graph::complete(6);
        let jobs: Vec<MulticastJob> = (0..6)
            .map(|r| {
                let mut parent = BTreeMap::from([(r, r)]);
                for v in 0..6 {
                    if v != r {
                        parent.insert(v, r);
                    }
                }
                MulticastJob {
                    tree: RootedTree { root: r, parent },
                    payload_bits: 100,
                    recipients: (0..6).filter(|&v| v != r).collect(),
                }
            })
            .collect();
        let strat = Strategy::RandomDelay {
            seed: 3,
            max_attempts: 8,
        };
        let a = schedule_multicasts(&g, &jobs, 32, strat).unwrap();
        let b = schedule_multicasts(&g, &jobs, 32, strat).unwrap();
        assert_eq!(a, b);
        assert!(a.rounds >= a.congestion);
        let too_tight = Strategy::RandomDelay {
            seed: 3,
            max_attempts: 0,
        };
        // a zero budget still makes one attempt
        assert!(schedule_multicasts(&g, &jobs, 32, too_tight).is_ok());
    }

    #[test]
    fn recipient_outside_tree_is_rejected() {
        let g = Graph::cycle(4);
        let job = MulticastJob {
            tree: path_tree(&[1, 2, 3]),
            payload_bits: 4,
            recipients: vec![0],
        };
        assert!(schedule_multicasts(&g, &[job], 32, Strategy::FifoPipeline).is_err());
    }
}
