//! The wrapped round function `f′`: decrypt, run `f`, re-encrypt.

use serde::{Deserialize, Serialize};

use crate::algo::{AlgorithmSpec, CircuitBuilder, GateCircuit, Sig};
use crate::bits::Bits;
use crate::error::{Error, Result};

/// Shape of one round at a node of a given degree.
///
/// Party `j` is the neighbor in slot `j` (ascending id). Its input block is,
/// in order:
/// - party 0 only: the old state key, then the new state key (`S` bits each);
/// - party 1 only: the encrypted state `σ̂` (`S` bits);
/// - if the round has inbound messages: the encrypted message it sent to the
///   server last round (`F` bits), then the keys of the inbound messages it
///   was forwarded (`F` bits each, see [`WrapLayout::forwarded`]);
/// - its share of the round's randomness (`Q` bits);
/// - if the round sends: the key for the server's message to it (`F` bits).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WrapLayout {
    pub degree: usize,
    pub state_bits: usize,
    pub field_bits: usize,
    pub inbound: bool,
    pub rand_bits: usize,
    pub sends: bool,
}

impl WrapLayout {
    pub fn of(spec: &AlgorithmSpec, degree: usize, round: usize) -> Self {
        WrapLayout {
            degree,
            state_bits: spec.state_bits,
            field_bits: spec.field_bits(),
            inbound: spec.has_inbound(round),
            rand_bits: spec.rand_bits(round),
            sends: spec.sends(round),
        }
    }

    pub fn base_inputs(&self) -> usize {
        self.state_bits + if self.inbound { self.degree * self.field_bits } else { 0 } + self.rand_bits
    }

    pub fn base_outputs(&self) -> usize {
        self.state_bits + if self.sends { self.degree * self.field_bits } else { 0 }
    }

    /// Slots whose inbound-message keys party `j` supplies. The key of the
    /// message from slot `k` sits with the lowest other neighbor: party 1
    /// for `k = 0`, party 0 otherwise.
    pub fn forwarded(&self, j: usize) -> Vec<usize> {
        if !self.inbound {
            return Vec::new();
        }
        match j {
            0 => (1..self.degree).collect(),
            1 => vec![0],
            _ => Vec::new(),
        }
    }

    /// Party that receives the key of the message from slot `k`.
    pub fn key_holder(k: usize) -> usize {
        if k == 0 {
            1
        } else {
            0
        }
    }

    pub fn party_width(&self, j: usize) -> usize {
        let (s, f) = (self.state_bits, self.field_bits);
        let mut w = match j {
            0 => 2 * s,
            1 => s,
            _ => 0,
        };
        if self.inbound {
            w += f * (1 + self.forwarded(j).len());
        }
        w += self.rand_bits;
        if self.sends {
            w += f;
        }
        w
    }

    pub fn party_widths(&self) -> Vec<usize> {
        (0..self.degree).map(|j| self.party_width(j)).collect()
    }
}

/// One party's input to `f′`; fields absent from the layout stay empty.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PartyInput {
    pub old_key: Bits,
    pub new_key: Bits,
    pub sealed_state: Bits,
    pub sealed_message: Bits,
    pub forwarded_keys: Vec<Bits>,
    pub share: Bits,
    pub outbound_key: Bits,
}

impl PartyInput {
    pub fn assemble(&self, layout: &WrapLayout, j: usize) -> Result<Bits> {
        let mut out = Vec::with_capacity(layout.party_width(j));
        let mut put = |b: &[bool], want: usize| -> Result<()> {
            if b.len() != want {
                return Err(Error::Length {
                    expected: want,
                    got: b.len(),
                });
            }
            out.extend_from_slice(b);
            Ok(())
        };
        let (s, f) = (layout.state_bits, layout.field_bits);
        if j == 0 {
            put(&self.old_key, s)?;
            put(&self.new_key, s)?;
        }
        if j == 1 {
            put(&self.sealed_state, s)?;
        }
        if layout.inbound {
            put(&self.sealed_message, f)?;
            let want = layout.forwarded(j).len();
            if self.forwarded_keys.len() != want {
                return Err(Error::Length {
                    expected: want,
                    got: self.forwarded_keys.len(),
                });
            }
            for k in &self.forwarded_keys {
                put(k, f)?;
            }
        }
        put(&self.share, layout.rand_bits)?;
        if layout.sends {
            put(&self.outbound_key, f)?;
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WrappedRound {
    pub layout: WrapLayout,
    pub base: GateCircuit,
    /// Inputs are the party blocks concatenated in slot order; outputs are
    /// `σ̂_i` followed, if the round sends, by one encrypted field per slot.
    pub circuit: GateCircuit,
}

impl WrappedRound {
    pub fn eval(&self, parties: &[Bits]) -> Result<Bits> {
        self.circuit.eval(&parties.concat())
    }
}

/// Builds `f′` for one round. Outbound fields whose presence bit is 0 are
/// zeroed before encryption, so absent messages decrypt to the null message.
pub fn build_round_wrapper(base: &GateCircuit, layout: WrapLayout) -> Result<WrappedRound> {
    base.validate()?;
    if layout.degree < 2 {
        return Err(Error::Compile(format!(
            "wrapping needs two distinct neighbors, degree is {}",
            layout.degree
        )));
    }
    if base.inputs != layout.base_inputs() || base.outputs.len() != layout.base_outputs() {
        return Err(Error::Compile(format!(
            "round circuit has {} inputs and {} outputs, layout needs {} and {}",
            base.inputs,
            base.outputs.len(),
            layout.base_inputs(),
            layout.base_outputs()
        )));
    }
    let (s, f, d) = (layout.state_bits, layout.field_bits, layout.degree);
    let widths = layout.party_widths();
    let total: usize = widths.iter().sum();
    let mut b = CircuitBuilder::new(total);
    let mut at = 0;
    let mut next = |n: usize| {
        let r = at..at + n;
        at += n;
        r
    };
    let mut old_key = Vec::new();
    let mut new_key = Vec::new();
    let mut sealed_state = Vec::new();
    let mut sealed_msg = vec![Vec::new(); d];
    let mut msg_key = vec![Vec::new(); d];
    let mut shares = Vec::new();
    let mut out_key = vec![Vec::new(); d];
    for j in 0..d {
        if j == 0 {
            old_key = b.inputs(next(s));
            new_key = b.inputs(next(s));
        }
        if j == 1 {
            sealed_state = b.inputs(next(s));
        }
        if layout.inbound {
            sealed_msg[j] = b.inputs(next(f));
            for k in layout.forwarded(j) {
                msg_key[k] = b.inputs(next(f));
            }
        }
        shares.push(b.inputs(next(layout.rand_bits)));
        if layout.sends {
            out_key[j] = b.inputs(next(f));
        }
    }
    let mut x = Vec::with_capacity(layout.base_inputs());
    for q in 0..s {
        x.push(b.xor(sealed_state[q], old_key[q]));
    }
    if layout.inbound {
        for k in 0..d {
            for q in 0..f {
                x.push(b.xor(sealed_msg[k][q], msg_key[k][q]));
            }
        }
    }
    for q in 0..layout.rand_bits {
        let mut acc = Sig::Const(false);
        for sh in &shares {
            acc = b.xor(acc, sh[q]);
        }
        x.push(acc);
    }
    let y = b.inline(base, &x)?;
    let mut out = Vec::with_capacity(layout.base_outputs());
    for q in 0..s {
        out.push(b.xor(y[q], new_key[q]));
    }
    if layout.sends {
        for k in 0..d {
            let field = &y[s + k * f..s + (k + 1) * f];
            let present = field[0];
            out.push(b.xor(present, out_key[k][0]));
            for q in 1..f {
                let v = b.and(field[q], present);
                out.push(b.xor(v, out_key[k][q]));
            }
        }
    }
    Ok(WrappedRound {
        layout,
        base: base.clone(),
        circuit: b.finish(out),
    })
}
