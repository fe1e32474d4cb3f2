//! PSM for circuits: one branching program, and one independent block of
//! randomness, per output bit.
//!
//! For a program of size `s` let `M(x)` be `A(x) + I` with the first column
//! and last row removed, an `(s-1)×(s-1)` matrix with ones on the
//! subdiagonal, zeros below it, and `det M(x)` equal to the program's value.
//! `M = Σ_j M_j` where `M_j` collects the terms of party `j` (party 0 also
//! takes the constants and the subdiagonal). Party `j` sends the entries on
//! or above the diagonal of `R1·M_j·R2 ⊕ Z_j`; `R1` is upper unitriangular,
//! `R2` is the identity with a random last column, and the masks `Z_j` sum
//! to zero. The server sums the messages, restores the subdiagonal and takes
//! the determinant.

use serde::{Deserialize, Serialize};

use crate::algo::GateCircuit;
use crate::bits::{xor_in_place, Bits};
use crate::error::{Error, Result};

use super::bp::{bps_from_circuit, BranchingProgram};
use super::gf2::{det, Matrix};

/// Deliberate weakenings, used to show the privacy tests have teeth.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PsmMutation {
    #[default]
    None,
    /// `R1` fixed to the identity.
    IdentityR1,
    /// Each party masks every entry of every output bit with its first mask bit.
    ReusedPad,
}

/// One matrix entry `(row, col)` split by party: local input positions and,
/// for party 0, the constant.
#[derive(Clone, Debug, PartialEq, Eq)]
struct EntryShare {
    row: usize,
    col: usize,
    terms: Vec<Vec<usize>>,
    constant: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct BitProgram {
    bp: BranchingProgram,
    dim: usize,
    entries: Vec<EntryShare>,
    rand_offset: usize,
}

impl BitProgram {
    fn upper(&self) -> usize {
        self.dim * (self.dim + 1) / 2
    }
    fn r1_bits(&self) -> usize {
        self.dim * self.dim.saturating_sub(1) / 2
    }
    fn r2_bits(&self) -> usize {
        self.dim.saturating_sub(1)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PsmInstance {
    widths: Vec<usize>,
    offsets: Vec<usize>,
    programs: Vec<BitProgram>,
    rand_len: usize,
    msg_len: usize,
    circuit: GateCircuit,
}

fn randomize(r1: &Matrix, m: &Matrix, column: u64) -> Matrix {
    let mut y = r1.mul(m);
    y.mul_last_column(column);
    y
}

impl PsmInstance {
    /// `widths[j]` inputs of the circuit, taken in order, belong to party `j`.
    pub fn from_circuit(circuit: &GateCircuit, widths: &[usize]) -> Result<Self> {
        circuit.validate()?;
        if widths.is_empty() {
            return Err(Error::InvalidInput("PSM needs at least one party".into()));
        }
        let total: usize = widths.iter().sum();
        if total != circuit.inputs {
            return Err(Error::Length {
                expected: circuit.inputs,
                got: total,
            });
        }
        let mut offsets = Vec::with_capacity(widths.len());
        let mut acc = 0;
        for &w in widths {
            offsets.push(acc);
            acc += w;
        }
        let party_of = |v: usize| offsets.partition_point(|&o| o <= v) - 1;
        let k = widths.len();
        let mut programs = Vec::with_capacity(circuit.outputs.len());
        let mut rand_len = 0;
        let mut msg_len = 0;
        for bp in bps_from_circuit(circuit)? {
            let dim = bp.size - 1;
            let entries = bp
                .entries
                .iter()
                .map(|e| {
                    let mut terms = vec![Vec::new(); k];
                    for &v in &e.form.vars {
                        let p = party_of(v);
                        terms[p].push(v - offsets[p]);
                    }
                    EntryShare {
                        row: e.from,
                        col: e.to - 1,
                        terms,
                        constant: e.form.constant,
                    }
                })
                .collect();
            let prog = BitProgram {
                bp,
                dim,
                entries,
                rand_offset: rand_len,
            };
            rand_len += prog.r1_bits() + prog.r2_bits() + (k - 1) * prog.upper();
            msg_len += prog.upper();
            programs.push(prog);
        }
        Ok(PsmInstance {
            widths: widths.to_vec(),
            offsets,
            programs,
            rand_len,
            msg_len,
            circuit: circuit.clone(),
        })
    }

    pub fn parties(&self) -> usize {
        self.widths.len()
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn output_bits(&self) -> usize {
        self.programs.len()
    }

    pub fn circuit(&self) -> &GateCircuit {
        &self.circuit
    }

    /// Sizes `s` of the per-bit programs.
    pub fn program_sizes(&self) -> Vec<usize> {
        self.programs.iter().map(|p| p.bp.size).collect()
    }

    pub fn program(&self, bit: usize) -> &BranchingProgram {
        &self.programs[bit].bp
    }

    /// `Σ_bits (s-1)(s-2)/2 + (s-2) + (k-1)·s(s-1)/2`.
    pub fn randomness_len(&self) -> usize {
        self.rand_len
    }

    /// `Σ_bits s(s-1)/2` per party.
    pub fn message_len(&self) -> usize {
        self.msg_len
    }

    /// Evaluates the function directly (for oracles).
    pub fn eval(&self, inputs: &[Bits]) -> Result<Bits> {
        self.circuit.eval(&inputs.concat())
    }

    /// `R1` and the random last column of `R2`, then the offset of the masks.
    fn randomizers(&self, p: &BitProgram, rand: &[bool], mutation: PsmMutation) -> (Matrix, u64, usize) {
        let d = p.dim;
        let mut at = p.rand_offset;
        let mut r1 = Matrix::identity(d);
        for i in 0..d {
            for j in i + 1..d {
                if rand[at] && mutation != PsmMutation::IdentityR1 {
                    r1.flip(i, j);
                }
                at += 1;
            }
        }
        let mut column = 0u64;
        for i in 0..d.saturating_sub(1) {
            if rand[at] {
                column |= 1 << i;
            }
            at += 1;
        }
        (r1, column, at)
    }

    fn push_upper(m: &Matrix, out: &mut Bits) {
        for i in 0..m.dim {
            for j in i..m.dim {
                out.push(m.get(i, j));
            }
        }
    }

    pub fn encode(&self, party: usize, x: &[bool], rand: &[bool]) -> Result<Bits> {
        self.encode_with(party, x, rand, PsmMutation::None)
    }

    pub fn encode_with(&self, party: usize, x: &[bool], rand: &[bool], mutation: PsmMutation) -> Result<Bits> {
        let k = self.parties();
        if party >= k {
            return Err(Error::InvalidInput(format!("party {party} of {k}")));
        }
        if x.len() != self.widths[party] {
            return Err(Error::Length {
                expected: self.widths[party],
                got: x.len(),
            });
        }
        if rand.len() != self.rand_len {
            return Err(Error::Length {
                expected: self.rand_len,
                got: rand.len(),
            });
        }
        let mut out = Vec::with_capacity(self.msg_len);
        let mut first_mask: Option<bool> = None;
        for p in &self.programs {
            let mut m = Matrix::zero(p.dim);
            if party == 0 {
                for r in 1..p.dim {
                    m.set(r, r - 1, true);
                }
            }
            for e in &p.entries {
                let mut v = party == 0 && e.constant;
                for &t in &e.terms[party] {
                    v ^= x[t];
                }
                if v {
                    m.flip(e.row, e.col);
                }
            }
            let (r1, column, mask_at) = self.randomizers(p, rand, mutation);
            let y = if p.dim == 1 { m } else { randomize(&r1, &m, column) };
            let u = p.upper();
            let mask_bit = |idx: usize| -> bool {
                if party + 1 < k {
                    rand[mask_at + party * u + idx]
                } else {
                    (0..k - 1).fold(false, |acc, q| acc ^ rand[mask_at + q * u + idx])
                }
            };
            let pad = *first_mask.get_or_insert_with(|| mask_bit(0));
            let mut idx = 0;
            for i in 0..p.dim {
                for j in i..p.dim {
                    let z = if mutation == PsmMutation::ReusedPad { pad } else { mask_bit(idx) };
                    out.push(y.get(i, j) ^ z);
                    idx += 1;
                }
            }
        }
        Ok(out)
    }

    /// Encodings of all parties under shared randomness `rand`.
    pub fn encode_all(&self, inputs: &[Bits], rand: &[bool], mutation: PsmMutation) -> Result<Vec<Bits>> {
        inputs
            .iter()
            .enumerate()
            .map(|(j, x)| self.encode_with(j, x, rand, mutation))
            .collect()
    }

    pub fn decode(&self, messages: &[Bits]) -> Result<Bits> {
        if messages.len() != self.parties() {
            return Err(Error::Protocol(format!(
                "expected {} messages, got {}",
                self.parties(),
                messages.len()
            )));
        }
        if let Some(m) = messages.iter().find(|m| m.len() != self.msg_len) {
            return Err(Error::Protocol(format!(
                "encoding of {} bits, expected {}",
                m.len(),
                self.msg_len
            )));
        }
        let mut at = 0;
        let mut out = Vec::with_capacity(self.programs.len());
        for p in &self.programs {
            let mut m = Matrix::zero(p.dim);
            for r in 1..p.dim {
                m.set(r, r - 1, true);
            }
            for i in 0..p.dim {
                for j in i..p.dim {
                    let v = messages.iter().fold(false, |acc, msg| acc ^ msg[at]);
                    m.set(i, j, v);
                    at += 1;
                }
            }
            out.push(det(&m));
        }
        Ok(out)
    }

    /// Randomness consumed by [`PsmInstance::simulate`]; equal to the
    /// protocol's.
    pub fn simulator_randomness_len(&self) -> usize {
        self.rand_len
    }

    /// Samples encodings distributed as the real ones given output `y`: a
    /// canonical matrix with determinant `y_b` is randomized and split into
    /// zero-sum shares.
    pub fn simulate(&self, y: &[bool], rand: &[bool]) -> Result<Vec<Bits>> {
        if y.len() != self.programs.len() {
            return Err(Error::Length {
                expected: self.programs.len(),
                got: y.len(),
            });
        }
        if rand.len() != self.rand_len {
            return Err(Error::Length {
                expected: self.rand_len,
                got: rand.len(),
            });
        }
        let k = self.parties();
        let mut msgs = vec![Vec::with_capacity(self.msg_len); k];
        for (p, &yb) in self.programs.iter().zip(y) {
            let mut c = Matrix::zero(p.dim);
            for r in 1..p.dim {
                c.set(r, r - 1, true);
            }
            c.set(0, p.dim - 1, yb);
            let (r1, column, mask_at) = self.randomizers(p, rand, PsmMutation::None);
            let x = if p.dim == 1 { c } else { randomize(&r1, &c, column) };
            let mut total = Vec::with_capacity(p.upper());
            Self::push_upper(&x, &mut total);
            let u = p.upper();
            for (q, msg) in msgs.iter_mut().enumerate().take(k - 1) {
                let share = &rand[mask_at + q * u..mask_at + (q + 1) * u];
                xor_in_place(&mut total, share);
                msg.extend_from_slice(share);
            }
            msgs[k - 1].extend(total);
        }
        Ok(msgs)
    }

    /// Input layout helper: splits a flat input into party blocks.
    pub fn split(&self, flat: &[bool]) -> Vec<Bits> {
        self.offsets
            .iter()
            .zip(&self.widths)
            .map(|(&o, &w)| flat[o..o + w].to_vec())
            .collect()
    }
}

/// Non-private backend for differential testing: parties send their inputs
/// in the clear and the server evaluates the function. Never use it where
/// privacy matters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InsecurePassthrough {
    circuit: GateCircuit,
    widths: Vec<usize>,
}

impl InsecurePassthrough {
    pub const INSECURE: bool = true;

    pub fn new(circuit: &GateCircuit, widths: &[usize]) -> Result<Self> {
        circuit.validate()?;
        if widths.iter().sum::<usize>() != circuit.inputs {
            return Err(Error::Length {
                expected: circuit.inputs,
                got: widths.iter().sum(),
            });
        }
        Ok(InsecurePassthrough {
            circuit: circuit.clone(),
            widths: widths.to_vec(),
        })
    }

    pub fn encode(&self, party: usize, x: &[bool]) -> Result<Bits> {
        if x.len() != self.widths[party] {
            return Err(Error::Length {
                expected: self.widths[party],
                got: x.len(),
            });
        }
        Ok(x.to_vec())
    }

    pub fn decode(&self, messages: &[Bits]) -> Result<Bits> {
        self.circuit.eval(&messages.concat())
    }
}

/// A serialized PSM run, used for golden tests.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestVector {
    pub f: GateCircuit,
    pub widths: Vec<usize>,
    pub x: Vec<String>,
    #[serde(rename = "R")]
    pub r: String,
    pub messages: Vec<String>,
    pub y: String,
}

impl TestVector {
    pub fn record(inst: &PsmInstance, inputs: &[Bits], rand: &[bool]) -> Result<Self> {
        use crate::bits::render;
        let msgs = inst.encode_all(inputs, rand, PsmMutation::None)?;
        Ok(TestVector {
            f: inst.circuit.clone(),
            widths: inst.widths.clone(),
            x: inputs.iter().map(|b| render(b)).collect(),
            r: render(rand),
            messages: msgs.iter().map(|b| render(b)).collect(),
            y: render(&inst.decode(&msgs)?),
        })
    }

    /// Re-encodes and re-decodes; true iff both reproduce the stored values.
    pub fn replay(&self) -> Result<bool> {
        use crate::bits::{parse, render};
        let bad = || Error::InvalidInput("test vector holds a malformed bit string".into());
        let inst = PsmInstance::from_circuit(&self.f, &self.widths)?;
        let inputs: Vec<Bits> = self.x.iter().map(|s| parse(s).ok_or_else(bad)).collect::<Result<_>>()?;
        let rand = parse(&self.r).ok_or_else(bad)?;
        let msgs = inst.encode_all(&inputs, &rand, PsmMutation::None)?;
        let same_msgs = msgs.iter().map(|m| render(m)).collect::<Vec<_>>() == self.messages;
        Ok(same_msgs && render(&inst.decode(&msgs)?) == self.y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algo::{CircuitBuilder, Sig};
    use crate::bits::from_u64;
    use std::collections::BTreeMap;

    fn and2() -> PsmInstance {
        let mut b = CircuitBuilder::new(2);
        let (x, y) = (b.input(0), b.input(1));
        let a = b.and(x, y);
        PsmInstance::from_circuit(&b.finish(vec![a]), &[1, 1]).unwrap()
    }

    fn histogram(f: impl Fn(&[bool]) -> Vec<Bits>, rand_len: usize) -> BTreeMap<Vec<Bits>, usize> {
        let mut h = BTreeMap::new();
        for r in 0..(1u64 << rand_len) {
            *h.entry(f(&from_u64(r, rand_len))).or_insert(0) += 1;
        }
        h
    }

    #[test]
    fn and_lengths_match_formula() {
        let inst = and2();
        // s = 3, k = 2: R1 1 bit, R2 1 bit, one mask of 3 bits
        assert_eq!(inst.program_sizes(), vec![3]);
        assert_eq!(inst.randomness_len(), 1 + 1 + 3);
        assert_eq!(inst.message_len(), 3);
    }

    #[test]
    fn and_correct_and_private() {
        let inst = and2();
        let n = inst.randomness_len();
        let sim = |y: bool| histogram(|r| inst.simulate(&[y], r).unwrap(), n);
        for x in 0..4u64 {
            let xs = vec![vec![x & 1 == 1], vec![x & 2 == 2]];
            let real = histogram(|r| inst.encode_all(&xs, r, PsmMutation::None).unwrap(), n);
            let y = xs[0][0] & xs[1][0];
            for msgs in real.keys() {
                assert_eq!(inst.decode(msgs).unwrap(), vec![y]);
            }
            assert_eq!(real, sim(y), "x = {x}");
        }
    }

    fn exhaustive_private(inst: &PsmInstance) {
        let n = inst.randomness_len();
        assert!(n <= 20, "{n} random bits is too many to enumerate");
        let width: usize = inst.widths().iter().sum();
        for x in 0..(1u64 << width) {
            let xs = inst.split(&from_u64(x, width));
            let y = inst.eval(&xs).unwrap();
            let real = histogram(|r| inst.encode_all(&xs, r, PsmMutation::None).unwrap(), n);
            assert!(real.keys().all(|m| inst.decode(m).unwrap() == y));
            assert_eq!(real, histogram(|r| inst.simulate(&y, r).unwrap(), n), "x = {x:b}");
        }
    }

    #[test]
    fn small_functions_exhaustively_private() {
        let mut b = CircuitBuilder::new(2);
        let (x, y) = (b.input(0), b.input(1));
        let o = b.xor(x, y);
        exhaustive_private(&PsmInstance::from_circuit(&b.finish(vec![o]), &[1, 1]).unwrap());

        let mut b = CircuitBuilder::new(3);
        let (s, t, f) = (b.input(0), b.input(1), b.input(2));
        let o = b.mux(s, t, f);
        exhaustive_private(&PsmInstance::from_circuit(&b.finish(vec![o]), &[1, 1, 1]).unwrap());

        let mut b = CircuitBuilder::new(2);
        let (x, y) = (b.input(0), b.input(1));
        let (a, o) = (b.and(x, y), b.xor(x, y));
        exhaustive_private(&PsmInstance::from_circuit(&b.finish(vec![a, o]), &[1, 1]).unwrap());

        let mut b = CircuitBuilder::new(3);
        let (x, y, z) = (b.input(0), b.input(1), b.input(2));
        let o = b.or(x, y);
        let o = b.xor(o, z);
        exhaustive_private(&PsmInstance::from_circuit(&b.finish(vec![o]), &[2, 1]).unwrap());
    }

    #[test]
    fn mutations_break_privacy() {
        let inst = and2();
        let n = inst.randomness_len();
        for mutation in [PsmMutation::IdentityR1, PsmMutation::ReusedPad] {
            let differs = (0..4u64).any(|x| {
                let xs = vec![vec![x & 1 == 1], vec![x & 2 == 2]];
                let real = histogram(|r| inst.encode_all(&xs, r, mutation).unwrap(), n);
                real != histogram(|r| inst.simulate(&[xs[0][0] & xs[1][0]], r).unwrap(), n)
            });
            assert!(differs, "{mutation:?} went unnoticed");
        }
    }

    #[test]
    fn projection_and_single_party() {
        let b = CircuitBuilder::new(2);
        let x1 = b.input(1);
        let proj = PsmInstance::from_circuit(&b.finish(vec![x1]), &[1, 1]).unwrap();
        for x in 0..4u64 {
            let xs = vec![vec![x & 1 == 1], vec![x & 2 == 2]];
            for r in 0..2u64 {
                let m = proj.encode_all(&xs, &from_u64(r, 1), PsmMutation::None).unwrap();
                assert_eq!(proj.decode(&m).unwrap(), vec![xs[1][0]]);
            }
        }
        let mut b = CircuitBuilder::new(2);
        let (x, y) = (b.input(0), b.input(1));
        let o = b.or(x, y);
        let solo = PsmInstance::from_circuit(&b.finish(vec![o]), &[2]).unwrap();
        for x in 0..4u64 {
            let xs = vec![from_u64(x, 2)];
            let r = vec![false; solo.randomness_len()];
            let m = solo.encode_all(&xs, &r, PsmMutation::None).unwrap();
            assert_eq!(solo.decode(&m).unwrap(), solo.eval(&xs).unwrap());
        }
    }

    #[test]
    fn masks_cancel_in_the_sum() {
        let inst = and2();
        let xs = vec![vec![true], vec![false]];
        let sums: Vec<Bits> = (0..8u64)
            .map(|z| {
                let mut r = from_u64(0b01, 2);
                r.extend(from_u64(z, 3));
                let m = inst.encode_all(&xs, &r, PsmMutation::None).unwrap();
                crate::psm::reconstruct(&m)
            })
            .collect();
        assert!(sums.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn degenerate_cases() {
        let c = GateCircuit {
            inputs: 1,
            gates: vec![],
            outputs: vec![],
        };
        let inst = PsmInstance::from_circuit(&c, &[1]).unwrap();
        assert_eq!(inst.randomness_len(), 0);
        assert_eq!(inst.simulate(&[], &[]).unwrap(), vec![Vec::<bool>::new()]);
        let zero = GateCircuit {
            inputs: 2,
            gates: vec![],
            outputs: vec![Sig::Const(false)],
        };
        let inst = PsmInstance::from_circuit(&zero, &[1, 1]).unwrap();
        assert_eq!(inst.decode(&[vec![false], vec![false]]).unwrap(), vec![false]);
        assert!(inst.decode(&[vec![false]]).is_err());
    }

    #[test]
    fn test_vector_replays() {
        let inst = and2();
        let v = TestVector::record(&inst, &[vec![true], vec![true]], &from_u64(0b10110, 5)).unwrap();
        let text = serde_json::to_string(&v).unwrap();
        let back: TestVector = serde_json::from_str(&text).unwrap();
        assert!(back.replay().unwrap());
        assert_eq!(back.y, "1");
    }
}
