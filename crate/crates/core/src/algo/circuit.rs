//! Gate circuits over AND / XOR / NOT / CONST and a folding builder.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::bits::Bits;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Op {
    And,
    Xor,
    Not,
    /// Constant; `in1` holds the value (0 or 1).
    Const,
}

/// One gate writing wire `out`. Wires `0..inputs` are circuit inputs and gate
/// `j` writes wire `inputs + j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gate {
    pub op: Op,
    pub in1: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub in2: Option<usize>,
    pub out: usize,
}

/// A signal: a wire or a constant. Serialized as a number or a boolean.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Sig {
    Wire(usize),
    Const(bool),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateCircuit {
    pub inputs: usize,
    pub gates: Vec<Gate>,
    pub outputs: Vec<Sig>,
}

impl GateCircuit {
    /// The circuit copying its inputs to its outputs.
    pub fn identity(width: usize) -> Self {
        GateCircuit {
            inputs: width,
            gates: Vec::new(),
            outputs: (0..width).map(Sig::Wire).collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.gates.len()
    }

    pub fn wire_count(&self) -> usize {
        self.inputs + self.gates.len()
    }

    pub fn validate(&self) -> Result<()> {
        for (j, g) in self.gates.iter().enumerate() {
            let out = self.inputs + j;
            if g.out != out {
                return Err(Error::Circuit(format!(
                    "gate {j} writes wire {} but must write {out}",
                    g.out
                )));
            }
            let defined = |w: usize| -> Result<()> {
                if w < out {
                    Ok(())
                } else {
                    Err(Error::Circuit(format!("gate {j} reads undefined wire {w}")))
                }
            };
            match (g.op, g.in2) {
                (Op::And | Op::Xor, Some(b)) => {
                    defined(g.in1)?;
                    defined(b)?;
                }
                (Op::Not, None) => defined(g.in1)?,
                (Op::Const, None) if g.in1 <= 1 => {}
                _ => return Err(Error::Circuit(format!("gate {j} has malformed operands"))),
            }
        }
        for s in &self.outputs {
            if let Sig::Wire(w) = *s {
                if w >= self.wire_count() {
                    return Err(Error::Circuit(format!("output reads undefined wire {w}")));
                }
            }
        }
        Ok(())
    }

    /// Evaluates a validated circuit.
    pub fn eval(&self, input: &[bool]) -> Result<Bits> {
        if input.len() != self.inputs {
            return Err(Error::Length {
                expected: self.inputs,
                got: input.len(),
            });
        }
        let mut w: Bits = Vec::with_capacity(self.wire_count());
        w.extend_from_slice(input);
        for g in &self.gates {
            let v = match g.op {
                Op::And => w[g.in1] & w[g.in2.unwrap_or(g.in1)],
                Op::Xor => w[g.in1] ^ w[g.in2.unwrap_or(g.in1)],
                Op::Not => !w[g.in1],
                Op::Const => g.in1 == 1,
            };
            w.push(v);
        }
        Ok(self
            .outputs
            .iter()
            .map(|s| match *s {
                Sig::Wire(i) => w[i],
                Sig::Const(b) => b,
            })
            .collect())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("circuit serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: GateCircuit = serde_json::from_str(text)
            .map_err(|e| Error::InvalidInput(format!("circuit JSON: {e}")))?;
        c.validate()?;
        Ok(c)
    }
}

/// Builds circuits gate by gate, folding constants, cancelling double
/// negations and sharing structurally equal gates.
#[derive(Clone, Debug)]
pub struct CircuitBuilder {
    inputs: usize,
    gates: Vec<Gate>,
    memo: HashMap<(Op, usize, usize), usize>,
    negation_of: HashMap<usize, usize>,
}

impl CircuitBuilder {
    pub fn new(inputs: usize) -> Self {
        CircuitBuilder {
            inputs,
            gates: Vec::new(),
            memo: HashMap::new(),
            negation_of: HashMap::new(),
        }
    }

    pub fn input(&self, i: usize) -> Sig {
        assert!(i < self.inputs, "input {i} out of range");
        Sig::Wire(i)
    }

    pub fn inputs(&self, range: std::ops::Range<usize>) -> Vec<Sig> {
        range.map(|i| self.input(i)).collect()
    }

    pub fn gate_count(&self) -> usize {
        self.gates.len()
    }

    fn emit(&mut self, op: Op, a: usize, b: Option<usize>) -> Sig {
        let key = (op, a, b.unwrap_or(usize::MAX));
        if let Some(&w) = self.memo.get(&key) {
            return Sig::Wire(w);
        }
        let out = self.inputs + self.gates.len();
        self.gates.push(Gate {
            op,
            in1: a,
            in2: b,
            out,
        });
        self.memo.insert(key, out);
        Sig::Wire(out)
    }

    pub fn not(&mut self, a: Sig) -> Sig {
        match a {
            Sig::Const(b) => Sig::Const(!b),
            Sig::Wire(w) => {
                if let Some(&x) = self.negation_of.get(&w) {
                    return Sig::Wire(x);
                }
                let Sig::Wire(n) = self.emit(Op::Not, w, None) else {
                    unreachable!()
                };
                self.negation_of.insert(n, w);
                self.negation_of.insert(w, n);
                Sig::Wire(n)
            }
        }
    }

    pub fn and(&mut self, a: Sig, b: Sig) -> Sig {
        match (a, b) {
            (Sig::Const(false), _) | (_, Sig::Const(false)) => Sig::Const(false),
            (Sig::Const(true), x) | (x, Sig::Const(true)) => x,
            (Sig::Wire(x), Sig::Wire(y)) if x == y => a,
            (Sig::Wire(x), Sig::Wire(y)) if self.negation_of.get(&x) == Some(&y) => Sig::Const(false),
            (Sig::Wire(x), Sig::Wire(y)) => self.emit(Op::And, x.min(y), Some(x.max(y))),
        }
    }

    pub fn xor(&mut self, a: Sig, b: Sig) -> Sig {
        match (a, b) {
            (Sig::Const(false), x) | (x, Sig::Const(false)) => x,
            (Sig::Const(true), x) | (x, Sig::Const(true)) => self.not(x),
            (Sig::Wire(x), Sig::Wire(y)) if x == y => Sig::Const(false),
            (Sig::Wire(x), Sig::Wire(y)) if self.negation_of.get(&x) == Some(&y) => Sig::Const(true),
            (Sig::Wire(x), Sig::Wire(y)) => self.emit(Op::Xor, x.min(y), Some(x.max(y))),
        }
    }

    pub fn or(&mut self, a: Sig, b: Sig) -> Sig {
        let (na, nb) = (self.not(a), self.not(b));
        let both = self.and(na, nb);
        self.not(both)
    }

    /// `if sel { if_set } else { if_clear }`.
    pub fn mux(&mut self, sel: Sig, if_set: Sig, if_clear: Sig) -> Sig {
        let diff = self.xor(if_set, if_clear);
        let pick = self.and(sel, diff);
        self.xor(if_clear, pick)
    }

    pub fn and_all(&mut self, sigs: impl IntoIterator<Item = Sig>) -> Sig {
        sigs.into_iter().fold(Sig::Const(true), |acc, s| self.and(acc, s))
    }

    pub fn or_all(&mut self, sigs: impl IntoIterator<Item = Sig>) -> Sig {
        sigs.into_iter().fold(Sig::Const(false), |acc, s| self.or(acc, s))
    }

    pub fn eq(&mut self, a: &[Sig], b: &[Sig]) -> Sig {
        assert_eq!(a.len(), b.len());
        let same: Vec<Sig> = a
            .iter()
            .zip(b)
            .map(|(&x, &y)| {
                let d = self.xor(x, y);
                self.not(d)
            })
            .collect();
        self.and_all(same)
    }

    /// Unsigned `a < b`, little-endian.
    pub fn less_than(&mut self, a: &[Sig], b: &[Sig]) -> Sig {
        assert_eq!(a.len(), b.len());
        let mut lt = Sig::Const(false);
        for (&x, &y) in a.iter().zip(b) {
            let differ = self.xor(x, y);
            lt = self.mux(differ, y, lt);
        }
        lt
    }

    /// Little-endian addition modulo `2^width`.
    pub fn add(&mut self, a: &[Sig], b: &[Sig]) -> Vec<Sig> {
        assert_eq!(a.len(), b.len());
        let mut carry = Sig::Const(false);
        let mut sum = Vec::with_capacity(a.len());
        for (i, (&x, &y)) in a.iter().zip(b).enumerate() {
            let p = self.xor(x, y);
            sum.push(self.xor(p, carry));
            if i + 1 < a.len() {
                let g = self.and(x, y);
                let c = self.and(carry, p);
                carry = self.xor(g, c);
            }
        }
        sum
    }

    pub fn mask(&mut self, bits: &[Sig], enable: Sig) -> Vec<Sig> {
        bits.iter().map(|&b| self.and(b, enable)).collect()
    }

    /// Instantiates `c` on the given input signals and returns its outputs.
    pub fn inline(&mut self, c: &GateCircuit, inputs: &[Sig]) -> Result<Vec<Sig>> {
        c.validate()?;
        if inputs.len() != c.inputs {
            return Err(Error::Length {
                expected: c.inputs,
                got: inputs.len(),
            });
        }
        let mut w: Vec<Sig> = inputs.to_vec();
        for g in &c.gates {
            let v = match g.op {
                Op::Const => Sig::Const(g.in1 == 1),
                Op::Not => self.not(w[g.in1]),
                Op::And => self.and(w[g.in1], w[g.in2.expect("validated")]),
                Op::Xor => self.xor(w[g.in1], w[g.in2.expect("validated")]),
            };
            w.push(v);
        }
        Ok(c.outputs
            .iter()
            .map(|s| match *s {
                Sig::Wire(i) => w[i],
                Sig::Const(b) => Sig::Const(b),
            })
            .collect())
    }

    pub fn finish(self, outputs: Vec<Sig>) -> GateCircuit {
        GateCircuit {
            inputs: self.inputs,
            gates: self.gates,
            outputs,
        }
    }
}
