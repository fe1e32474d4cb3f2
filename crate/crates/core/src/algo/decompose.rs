//! Gate decomposition: every round becomes a sequence of sub-rounds that each
//! evaluate at most one gate, so every output bit of a sub-round depends on at
//! most two input bits.
//!
//! The extended state is `[σ][buffer][registers]`. The first sub-round of a
//! round copies inbound messages and randomness into the buffer, gate values
//! live in registers (reused once a value is dead), and the last sub-round
//! writes the new `σ`, emits messages and clears buffer and registers.

use std::collections::BTreeMap;

use crate::error::Result;

use super::circuit::{CircuitBuilder, GateCircuit, Op, Sig};
use super::spec::{AlgorithmSpec, RoundFn};

struct Plan {
    /// Sub-rounds per original round (same for every degree).
    subrounds: Vec<usize>,
    buffer: usize,
    registers: usize,
    /// (degree, round) -> register of each gate.
    regs: BTreeMap<(usize, usize), Vec<usize>>,
}

fn loaded_width(spec: &AlgorithmSpec, d: usize, i: usize) -> usize {
    spec.input_width(d, i) - spec.state_bits
}

/// Greedy register assignment: gate `j` is computed in sub-round `j` and
/// stays live through the sub-round of its last reader.
fn allocate(c: &GateCircuit, last_subround: usize) -> Vec<usize> {
    let t = c.gates.len();
    let mut last = (0..t).collect::<Vec<_>>();
    let gate_of = |w: usize| w.checked_sub(c.inputs);
    for (j, g) in c.gates.iter().enumerate() {
        let reads = [Some(g.in1), g.in2];
        if matches!(g.op, Op::Const) {
            continue;
        }
        for w in reads.into_iter().flatten() {
            if let Some(src) = gate_of(w) {
                last[src] = last[src].max(j);
            }
        }
    }
    for s in &c.outputs {
        if let Sig::Wire(w) = *s {
            if let Some(src) = gate_of(w) {
                last[src] = last_subround;
            }
        }
    }
    let mut reg = vec![0; t];
    let mut owner: Vec<Option<usize>> = Vec::new();
    for j in 0..t {
        let free = owner
            .iter()
            .position(|o| o.map_or(true, |g| last[g] <= j));
        let r = match free {
            Some(r) => r,
            None => {
                owner.push(None);
                owner.len() - 1
            }
        };
        owner[r] = Some(j);
        reg[j] = r;
    }
    reg
}

fn plan(spec: &AlgorithmSpec) -> Plan {
    let subrounds: Vec<usize> = (0..spec.rounds)
        .map(|i| {
            spec.by_degree
                .values()
                .map(|v| v[i].circuit.size().max(1))
                .max()
                .unwrap_or(1)
        })
        .collect();
    let mut buffer = 0;
    let mut registers = 0;
    let mut regs = BTreeMap::new();
    for (&d, fns) in &spec.by_degree {
        for (i, f) in fns.iter().enumerate() {
            if subrounds[i] >= 2 {
                buffer = buffer.max(loaded_width(spec, d, i));
            }
            let r = allocate(&f.circuit, subrounds[i] - 1);
            // a single sub-round outputs its gate directly
            if subrounds[i] >= 2 {
                registers = registers.max(r.iter().map(|x| x + 1).max().unwrap_or(0));
            }
            regs.insert((d, i), r);
        }
    }
    Plan {
        subrounds,
        buffer,
        registers,
        regs,
    }
}

/// Rewrites `spec` into an equivalent algorithm whose round functions have at
/// most one gate each. Round `i` becomes `max(t_i, 1)` sub-rounds where `t_i`
/// is the largest gate count of round `i` across degrees.
pub fn gate_decompose(spec: &AlgorithmSpec) -> Result<AlgorithmSpec> {
    spec.validate()?;
    let p = plan(spec);
    let s = spec.state_bits;
    let ext = s + p.buffer + p.registers;
    let field = spec.field_bits();
    let mut by_degree = BTreeMap::new();
    for (&d, fns) in &spec.by_degree {
        let mut out = Vec::new();
        for (i, f) in fns.iter().enumerate() {
            let c = &f.circuit;
            let t_sub = p.subrounds[i];
            let loaded = loaded_width(spec, d, i);
            let reg = &p.regs[&(d, i)];
            for k in 0..t_sub {
                let first = k == 0;
                let last = k + 1 == t_sub;
                let sends = last && f.sends;
                let inputs = ext + if first { loaded } else { 0 };
                let mut b = CircuitBuilder::new(inputs);
                let mut computed = None;
                let loc = |w: usize, computed: Option<Sig>| -> Sig {
                    if w < s {
                        Sig::Wire(w)
                    } else if w < s + loaded {
                        if first {
                            Sig::Wire(ext + (w - s))
                        } else {
                            Sig::Wire(w)
                        }
                    } else {
                        let g = w - c.inputs;
                        if g == k {
                            computed.expect("gate computed this sub-round")
                        } else {
                            Sig::Wire(s + p.buffer + reg[g])
                        }
                    }
                };
                if let Some(g) = c.gates.get(k) {
                    let v = match g.op {
                        Op::Const => Sig::Const(g.in1 == 1),
                        Op::Not => {
                            let a = loc(g.in1, None);
                            b.not(a)
                        }
                        Op::And | Op::Xor => {
                            let x = loc(g.in1, None);
                            let y = loc(g.in2.expect("validated"), None);
                            if g.op == Op::And {
                                b.and(x, y)
                            } else {
                                b.xor(x, y)
                            }
                        }
                    };
                    computed = Some(v);
                }
                let map_out = |sig: Sig| match sig {
                    Sig::Const(v) => Sig::Const(v),
                    Sig::Wire(w) => loc(w, computed),
                };
                let mut outputs = Vec::with_capacity(ext + if sends { d * field } else { 0 });
                if last {
                    outputs.extend(c.outputs[..s].iter().map(|&o| map_out(o)));
                    outputs.extend(std::iter::repeat(Sig::Const(false)).take(p.buffer + p.registers));
                    if sends {
                        outputs.extend(c.outputs[s..].iter().map(|&o| map_out(o)));
                    }
                } else {
                    outputs.extend((0..s).map(Sig::Wire));
                    for q in 0..p.buffer {
                        outputs.push(if first {
                            if q < loaded {
                                Sig::Wire(ext + q)
                            } else {
                                Sig::Const(false)
                            }
                        } else {
                            Sig::Wire(s + q)
                        });
                    }
                    for r in 0..p.registers {
                        let here = s + p.buffer + r;
                        match computed {
                            Some(v) if k < c.gates.len() && reg[k] == r => outputs.push(v),
                            _ => outputs.push(Sig::Wire(here)),
                        }
                    }
                }
                out.push(RoundFn {
                    circuit: b.finish(outputs),
                    rand_bits: if first { f.rand_bits } else { 0 },
                    sends,
                    rand_label: f.rand_label,
                });
            }
        }
        by_degree.insert(d, out);
    }
    let decomposed = AlgorithmSpec {
        name: format!("{}/gates", spec.name),
        input_bits: spec.input_bits,
        state_bits: ext,
        msg_bits: spec.msg_bits,
        output_bits: spec.output_bits,
        rounds: p.subrounds.iter().sum(),
        by_degree,
    };
    decomposed.validate()?;
    Ok(decomposed)
}
