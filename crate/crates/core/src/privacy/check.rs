//! View-versus-simulator comparisons.

use std::collections::{HashMap, HashSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::bits::{from_u64, Bits};
use crate::compiler::{CompiledAlgorithm, Mutation};
use crate::psm::PsmMutation;
use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::rng::{derive_seed, Catalog, EnumTape, RecordingTape, SeededTape};
use crate::sim::{run_with_tape, NetConfig};

use super::{build_simulator, capture_view, Simulator, View};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StatParams {
    pub samples: usize,
    pub alpha: f64,
    pub tv_threshold: f64,
    /// Views are compared on consecutive chunks of this many bits.
    pub chunk_bits: usize,
    pub seed: u64,
}

impl Default for StatParams {
    fn default() -> Self {
        StatParams {
            samples: 100_000,
            alpha: 0.01,
            tv_threshold: 0.02,
            chunk_bits: 4,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum Mode {
    /// Enumerate every tape; refuses when a tape exceeds `budget` bits.
    Exact { budget: usize },
    Statistical(StatParams),
    /// Enumerates the randomness of each PSM instance the node serves, on
    /// the party inputs of `runs` seeded executions, and compares the
    /// encodings with the PSM simulator on the decoded output.
    PerInstance { budget: usize, runs: usize },
}

impl Mode {
    pub const DEFAULT_BUDGET: usize = 24;

    pub fn exact() -> Self {
        Mode::Exact {
            budget: Self::DEFAULT_BUDGET,
        }
    }
}

/// The least-fitting chunk of a statistical comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ChiSquareChunk {
    pub chunk: usize,
    pub statistic: f64,
    pub p_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Verdict {
    pub mode: String,
    pub node: NodeId,
    pub pass: bool,
    /// Total variation distance (exact mode) or the largest per-chunk
    /// estimate (statistical mode).
    pub distance: f64,
    /// The exact distance as a reduced fraction, in exact mode.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_distance: Option<String>,
    pub real_support: usize,
    pub sim_support: usize,
    pub tapes_enumerated: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_chunk: Option<ChiSquareChunk>,
}

pub fn check_perfect_privacy(c: &CompiledAlgorithm, inputs: &[Bits], u: NodeId, mode: Mode) -> Result<Verdict> {
    Ok(check_nodes(c, inputs, &[u], mode)?.remove(0))
}

/// Checks several nodes, sharing the real executions.
pub fn check_nodes(c: &CompiledAlgorithm, inputs: &[Bits], nodes: &[NodeId], mode: Mode) -> Result<Vec<Verdict>> {
    let sims: Vec<Simulator> = nodes.iter().map(|&u| build_simulator(c, u)).collect::<Result<_>>()?;
    match mode {
        Mode::Exact { budget } => exact(c, inputs, &sims, budget),
        Mode::Statistical(p) => statistical(c, inputs, &sims, p),
        Mode::PerInstance { budget, runs } => per_instance(c, inputs, &sims, budget, runs),
    }
}

fn catalog_of(run: impl FnOnce(&mut RecordingTape<SeededTape>) -> Result<()>) -> Result<Catalog> {
    let mut tape = RecordingTape::new(SeededTape::new(0));
    run(&mut tape)?;
    Ok(tape.catalog)
}

fn check_budget(cat: &Catalog, budget: usize) -> Result<usize> {
    let bits = cat.total_bits();
    if bits > budget || bits >= 63 {
        return Err(Error::Budget { bits, budget });
    }
    Ok(bits)
}

type Histogram = HashMap<Bits, u64>;

/// Runs `f` on every assignment of the catalog's bits and merges the
/// per-worker histograms.
fn enumerate<F>(cat: &Catalog, slots: usize, f: F) -> Result<Vec<Histogram>>
where
    F: Fn(&mut EnumTape) -> Result<Vec<Bits>> + Sync,
{
    let total = 1u64 << cat.total_bits();
    let chunks = rayon::current_num_threads().max(1) as u64 * 4;
    let per = total.div_ceil(chunks).max(1);
    let parts: Vec<Result<Vec<Histogram>>> = (0..total.div_ceil(per))
        .into_par_iter()
        .map(|k| {
            let mut tape = EnumTape::new(cat);
            let mut h = vec![Histogram::new(); slots];
            for idx in k * per..((k + 1) * per).min(total) {
                tape.set_index(idx);
                for (slot, key) in f(&mut tape)?.into_iter().enumerate() {
                    *h[slot].entry(key).or_insert(0) += 1;
                }
            }
            Ok(h)
        })
        .collect();
    let mut out = vec![Histogram::new(); slots];
    for part in parts {
        for (slot, h) in part?.into_iter().enumerate() {
            for (k, v) in h {
                *out[slot].entry(k).or_insert(0) += v;
            }
        }
    }
    Ok(out)
}

fn check_layout(view: &View, sim: &Simulator) -> Result<()> {
    if view.layout() != sim.template().layout() {
        return Err(Error::Protocol(format!(
            "view of node {} depends on the inputs in its layout",
            view.node
        )));
    }
    Ok(())
}

fn exact(c: &CompiledAlgorithm, inputs: &[Bits], sims: &[Simulator], budget: usize) -> Result<Vec<Verdict>> {
    let real_cat = catalog_of(|t| c.execute(inputs, t, false).map(|_| ()))?;
    let real_bits = check_budget(&real_cat, budget)?;
    let real = enumerate(&real_cat, sims.len(), |tape| {
        let e = c.execute(inputs, tape, true)?;
        sims.iter()
            .map(|s| {
                let v = capture_view(&e, s.node())?;
                check_layout(&v, s)?;
                Ok(v.canonical())
            })
            .collect()
    })?;

    // output distribution of the uncompiled algorithm
    let g = &c.graph;
    let cfg = NetConfig::new(g);
    let plain_cat = catalog_of(|t| run_with_tape(g, &c.source, inputs, t, cfg).map(|_| ()))?;
    let plain_bits = check_budget(&plain_cat, budget)?;
    let outputs = enumerate(&plain_cat, sims.len(), |tape| {
        let r = run_with_tape(g, &c.source, inputs, tape, cfg)?;
        Ok(sims.iter().map(|s| r.outputs[s.node()].clone()).collect())
    })?;

    let mut verdicts = Vec::with_capacity(sims.len());
    for (k, sim) in sims.iter().enumerate() {
        let u = sim.node();
        let sim_cat = catalog_of(|t| sim.sample(&inputs[u], &outputs[k].keys().next().cloned().unwrap_or_default(), t).map(|_| ()))?;
        let sim_bits = check_budget(&sim_cat, budget)?;
        let mut sim_hist = Histogram::new();
        let mut tapes = (1u64 << real_bits) + (1u64 << plain_bits);
        for (y, &weight) in &outputs[k] {
            let h = enumerate(&sim_cat, 1, |tape| Ok(vec![sim.sample(&inputs[u], y, tape)?.canonical()]))?;
            tapes += 1u64 << sim_bits;
            for (key, v) in h.into_iter().next().unwrap_or_default() {
                *sim_hist.entry(key).or_insert(0) += v * weight;
            }
        }
        let tv = total_variation(&real[k], real_bits, &sim_hist, plain_bits + sim_bits);
        verdicts.push(Verdict {
            mode: "exact".into(),
            node: u,
            pass: tv.is_zero(),
            distance: tv.to_f64().unwrap_or(f64::NAN),
            exact_distance: Some(tv.to_string()),
            real_support: real[k].len(),
            sim_support: sim_hist.len(),
            tapes_enumerated: tapes,
            worst_chunk: None,
        });
    }
    Ok(verdicts)
}

/// Exact distance between histograms whose counts sum to `2^p` and `2^q`.
fn total_variation(p: &Histogram, p_bits: usize, q: &Histogram, q_bits: usize) -> BigRational {
    let mass = |n: u64, bits: usize| BigRational::new(BigInt::from(n), BigInt::from(1u8) << bits);
    let mut tv = BigRational::zero();
    for (key, &n) in p {
        tv += (mass(n, p_bits) - mass(q.get(key).copied().unwrap_or(0), q_bits)).abs();
    }
    for (key, &m) in q {
        if !p.contains_key(key) {
            tv += mass(m, q_bits);
        }
    }
    tv / BigRational::from_integer(BigInt::from(2))
}

/// Histogram of `f` over every `bits`-bit string.
fn sweep<F>(bits: usize, f: F) -> Result<Histogram>
where
    F: Fn(&[bool]) -> Result<Bits> + Sync,
{
    (0..1u64 << bits)
        .into_par_iter()
        .try_fold(Histogram::new, |mut h, idx| {
            *h.entry(f(&from_u64(idx, bits))?).or_insert(0) += 1;
            Ok(h)
        })
        .try_reduce(Histogram::new, |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_insert(0) += v;
            }
            Ok(a)
        })
}

fn per_instance(c: &CompiledAlgorithm, inputs: &[Bits], sims: &[Simulator], budget: usize, runs: usize) -> Result<Vec<Verdict>> {
    let mutation = match c.options.mutation {
        Mutation::Psm(m) => m,
        _ => PsmMutation::None,
    };
    let executions: Vec<_> = (0..runs.max(1) as u64)
        .map(|i| c.run(inputs, derive_seed(0, "privacy-instance", &[i]), true))
        .collect::<Result<_>>()?;
    let mut verdicts = Vec::with_capacity(sims.len());
    for sim in sims {
        let u = sim.node();
        let mut worst = BigRational::zero();
        let (mut real_support, mut sim_support, mut tapes) = (0, 0, 0u64);
        for e in &executions {
            for (i, blocks) in e.psm_inputs[u].iter().enumerate() {
                let Some(psm) = &c.plan(u, i).psm else {
                    return Err(Error::Refused("instance check needs the PSM backend".into()));
                };
                let (rb, sb) = (psm.randomness_len(), psm.simulator_randomness_len());
                if rb.max(sb) > budget {
                    return Err(Error::Budget {
                        bits: rb.max(sb),
                        budget,
                    });
                }
                let y = &e.memory[u][i];
                let real = sweep(rb, |r| Ok(psm.encode_all(blocks, r, mutation)?.concat()))?;
                let simulated = sweep(sb, |r| Ok(psm.simulate(y, r)?.concat()))?;
                tapes += (1u64 << rb) + (1u64 << sb);
                real_support = real_support.max(real.len());
                sim_support = sim_support.max(simulated.len());
                let tv = total_variation(&real, rb, &simulated, sb);
                if tv > worst {
                    worst = tv;
                }
            }
        }
        verdicts.push(Verdict {
            mode: "per-instance".into(),
            node: u,
            pass: worst.is_zero(),
            distance: worst.to_f64().unwrap_or(f64::NAN),
            exact_distance: Some(worst.to_string()),
            real_support,
            sim_support,
            tapes_enumerated: tapes,
            worst_chunk: None,
        });
    }
    Ok(verdicts)
}

struct ChunkCounts {
    len: usize,
    chunk_bits: usize,
    counts: Vec<[Vec<u64>; 2]>,
    distinct: [HashSet<u64>; 2],
}

impl ChunkCounts {
    fn new(len: usize, chunk_bits: usize) -> Self {
        let chunks = len.div_ceil(chunk_bits);
        ChunkCounts {
            len,
            chunk_bits,
            counts: (0..chunks)
                .map(|_| [vec![0; 1 << chunk_bits], vec![0; 1 << chunk_bits]])
                .collect(),
            distinct: [HashSet::new(), HashSet::new()],
        }
    }

    fn add(&mut self, side: usize, bits: &[bool]) -> Result<()> {
        if bits.len() != self.len {
            return Err(Error::Protocol("views differ in length".into()));
        }
        for (c, chunk) in bits.chunks(self.chunk_bits).enumerate() {
            let v = chunk.iter().enumerate().fold(0usize, |a, (i, &b)| a | (b as usize) << i);
            self.counts[c][side][v] += 1;
        }
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        bits.hash(&mut h);
        self.distinct[side].insert(h.finish());
        Ok(())
    }
}

/// Chi-square homogeneity test of two samples over the same categories:
/// returns the statistic and its p-value.
pub fn chi_square_homogeneity(real: &[u64], sim: &[u64]) -> (f64, f64) {
    let (nr, ns) = (real.iter().sum::<u64>() as f64, sim.iter().sum::<u64>() as f64);
    let mut stat = 0.0;
    let mut categories = 0;
    for (&r, &s) in real.iter().zip(sim) {
        let total = (r + s) as f64;
        if total == 0.0 {
            continue;
        }
        categories += 1;
        let (er, es) = (total * nr / (nr + ns), total * ns / (nr + ns));
        stat += (r as f64 - er).powi(2) / er + (s as f64 - es).powi(2) / es;
    }
    if categories < 2 {
        return (0.0, 1.0);
    }
    let dist = ChiSquared::new((categories - 1) as f64).expect("positive degrees of freedom");
    (stat, 1.0 - dist.cdf(stat))
}

fn statistical(c: &CompiledAlgorithm, inputs: &[Bits], sims: &[Simulator], p: StatParams) -> Result<Vec<Verdict>> {
    if p.chunk_bits == 0 || p.chunk_bits > 16 || p.samples == 0 {
        return Err(Error::InvalidInput("chunks need 1..=16 bits and at least one sample".into()));
    }
    let len = |s: &Simulator| s.template().bit_len();
    let mut counts: Vec<ChunkCounts> = sims.iter().map(|s| ChunkCounts::new(len(s), p.chunk_bits)).collect();
    let randomized = (0..c.source.rounds).any(|i| c.source.rand_bits(i) > 0);
    let g = &c.graph;
    let cfg = NetConfig::new(g);
    let fixed = if randomized {
        None
    } else {
        Some(run_with_tape(g, &c.source, inputs, &mut SeededTape::new(p.seed), cfg)?.outputs)
    };
    for i in 0..p.samples as u64 {
        let e = c.run(inputs, derive_seed(p.seed, "privacy-real", &[i]), true)?;
        let ys = match &fixed {
            Some(y) => y.clone(),
            None => {
                let seed = derive_seed(p.seed, "privacy-plain", &[i]);
                run_with_tape(g, &c.source, inputs, &mut SeededTape::new(seed), cfg)?.outputs
            }
        };
        for (k, sim) in sims.iter().enumerate() {
            let u = sim.node();
            let v = capture_view(&e, u)?;
            check_layout(&v, sim)?;
            counts[k].add(0, &v.canonical())?;
            let seed = derive_seed(p.seed, "privacy-sim", &[i, u as u64]);
            counts[k].add(1, &sim.sample_seeded(&inputs[u], &ys[u], seed)?.canonical())?;
        }
    }
    let n = p.samples as f64;
    Ok(sims
        .iter()
        .zip(counts)
        .map(|(sim, cc)| {
            let tests: Vec<(f64, f64, f64)> = cc
                .counts
                .iter()
                .map(|[r, s]| {
                    let tv = r.iter().zip(s).map(|(&a, &b)| (a as f64 - b as f64).abs()).sum::<f64>() / (2.0 * n);
                    let (stat, pv) = chi_square_homogeneity(r, s);
                    (tv, stat, pv)
                })
                .collect();
            let distance = tests.iter().map(|t| t.0).fold(0.0, f64::max);
            let worst = tests
                .iter()
                .enumerate()
                .min_by(|a, b| a.1 .2.total_cmp(&b.1 .2))
                .map(|(chunk, t)| ChiSquareChunk {
                    chunk,
                    statistic: t.1,
                    p_value: t.2,
                });
            let corrected = p.alpha / tests.len().max(1) as f64;
            let chi_ok = worst.as_ref().map_or(true, |w| w.p_value >= corrected);
            Verdict {
                mode: "statistical".into(),
                node: sim.node(),
                pass: chi_ok && distance <= p.tv_threshold,
                distance,
                exact_distance: None,
                real_support: cc.distinct[0].len(),
                sim_support: cc.distinct[1].len(),
                tapes_enumerated: 0,
                worst_chunk: worst,
            }
        })
        .collect())
}
