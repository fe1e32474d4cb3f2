//! Counter-based randomness. Every random draw carries a [`Label`]; a seeded
//! tape derives the bits for a label from `(seed, label)` alone, so draws never
//! share generator state and their order does not matter. The same labels let
//! the privacy harness enumerate tapes exhaustively.

use std::collections::BTreeMap;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bits::Bits;
use crate::graph::NodeId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Purpose {
    /// Randomness of an uncompiled algorithm's round function.
    Algorithm,
    /// Mask the server places on its initial state before handing it out.
    InitialMask,
    /// `R_sigma_i`, drawn by the key holder of the server.
    StateKey,
    /// Key for a message sent by `subject`, drawn by the message's receiver.
    MessageKey,
    /// A neighbor's share of the round-function randomness.
    RandomShare,
    /// PSM randomness drawn by the root of the server's private tree.
    PsmRandomness,
    /// Randomness consumed by a simulator.
    Simulator,
    /// Scheduler offsets.
    Schedule,
}

impl Purpose {
    fn code(self) -> u64 {
        self as u64 + 1
    }
}

/// Identifies one random draw: who draws it, for which purpose, on behalf of
/// which node (`subject`), in which round, and an index within that scope.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Label {
    pub owner: NodeId,
    pub purpose: Purpose,
    pub subject: NodeId,
    pub round: usize,
    pub index: usize,
}

impl Label {
    pub fn new(owner: NodeId, purpose: Purpose, subject: NodeId, round: usize, index: usize) -> Self {
        Label {
            owner,
            purpose,
            subject,
            round,
            index,
        }
    }
}

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Mixes a seed, a purpose tag and indices into one 64-bit key.
pub fn derive_seed(seed: u64, tag: &str, indices: &[u64]) -> u64 {
    let mut h = splitmix64(seed ^ 0x5EED);
    for b in tag.bytes() {
        h = splitmix64(h ^ b as u64);
    }
    for &i in indices {
        h = splitmix64(h ^ i);
    }
    h
}

/// A deterministic generator for a given purpose.
pub fn seeded_rng(seed: u64, tag: &str, indices: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, tag, indices))
}

pub trait Tape {
    fn draw(&mut self, label: Label, len: usize) -> Bits;
}

#[derive(Clone, Debug)]
pub struct SeededTape {
    seed: u64,
}

impl SeededTape {
    pub fn new(seed: u64) -> Self {
        SeededTape { seed }
    }
}

impl Tape for SeededTape {
    fn draw(&mut self, label: Label, len: usize) -> Bits {
        if len == 0 {
            return Vec::new();
        }
        let mut rng = seeded_rng(
            self.seed,
            "tape",
            &[
                label.owner as u64,
                label.purpose.code(),
                label.subject as u64,
                label.round as u64,
                label.index as u64,
            ],
        );
        let mut out = Vec::with_capacity(len);
        while out.len() < len {
            let word = rng.next_u64();
            for i in 0..64.min(len - out.len()) {
                out.push((word >> i) & 1 == 1);
            }
        }
        out
    }
}

/// Wraps a tape and records every draw, producing the catalog used for
/// enumeration.
pub struct RecordingTape<T> {
    inner: T,
    pub catalog: Catalog,
}

impl<T: Tape> RecordingTape<T> {
    pub fn new(inner: T) -> Self {
        RecordingTape {
            inner,
            catalog: Catalog::default(),
        }
    }
}

impl<T: Tape> Tape for RecordingTape<T> {
    fn draw(&mut self, label: Label, len: usize) -> Bits {
        self.catalog.insert(label, len);
        self.inner.draw(label, len)
    }
}

/// The set of labelled draws an execution makes, in canonical (label) order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Catalog {
    entries: BTreeMap<Label, usize>,
}

impl Catalog {
    pub fn insert(&mut self, label: Label, len: usize) {
        let prev = self.entries.insert(label, len);
        assert!(
            prev.is_none() || prev == Some(len),
            "label {label:?} drawn twice with different lengths"
        );
    }

    pub fn total_bits(&self) -> usize {
        self.entries.values().sum()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Label, &usize)> {
        self.entries.iter()
    }

    pub fn bits_owned_by(&self, node: NodeId) -> usize {
        self.entries
            .iter()
            .filter(|(l, _)| l.owner == node)
            .map(|(_, &n)| n)
            .sum()
    }

    /// Offsets of each label in the flat assignment.
    fn layout(&self) -> BTreeMap<Label, (usize, usize)> {
        let mut off = 0;
        self.entries
            .iter()
            .map(|(&l, &n)| {
                let e = (l, (off, n));
                off += n;
                e
            })
            .collect()
    }
}

/// Serves draws from a flat bit assignment laid out according to a catalog.
pub struct EnumTape {
    layout: BTreeMap<Label, (usize, usize)>,
    assignment: Bits,
}

impl EnumTape {
    pub fn new(catalog: &Catalog) -> Self {
        EnumTape {
            layout: catalog.layout(),
            assignment: vec![false; catalog.total_bits()],
        }
    }

    /// Sets the assignment from the low bits of `index`.
    pub fn set_index(&mut self, index: u64) {
        for (i, b) in self.assignment.iter_mut().enumerate() {
            *b = (index >> i) & 1 == 1;
        }
    }
}

impl Tape for EnumTape {
    fn draw(&mut self, label: Label, len: usize) -> Bits {
        let &(off, n) = self
            .layout
            .get(&label)
            .unwrap_or_else(|| panic!("label {label:?} missing from enumeration catalog"));
        assert_eq!(n, len, "label {label:?} drawn with a different length");
        self.assignment[off..off + n].to_vec()
    }
}
