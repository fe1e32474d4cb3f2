//! Mod-2 branching programs from gate circuits.
//!
//! An output bit is split into an affine part and a nonlinear core. The core
//! is a function of its atoms (the affine forms feeding its nonlinear gates);
//! we build its reduced ordered decision diagram over the atoms and label
//! every edge with an affine form: `atom` on the high edge, `atom ⊕ 1` on the
//! low edge. Each input selects exactly one root-to-terminal path, so the
//! number of start→accept paths with all labels set is the core's value. The
//! affine part is added to the start→accept entry.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::algo::{GateCircuit, Op, Sig};

/// `const ⊕ x_{vars[0]} ⊕ ...`, with `vars` sorted and distinct.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Affine {
    pub vars: Vec<usize>,
    pub constant: bool,
}

impl Affine {
    pub fn constant(c: bool) -> Self {
        Affine {
            vars: Vec::new(),
            constant: c,
        }
    }

    pub fn var(v: usize) -> Self {
        Affine {
            vars: vec![v],
            constant: false,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn add(&self, other: &Affine) -> Affine {
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.vars, &other.vars);
        let mut vars = Vec::with_capacity(a.len() + b.len());
        while i < a.len() || j < b.len() {
            match (a.get(i), b.get(j)) {
                (Some(x), Some(y)) if x == y => {
                    i += 1;
                    j += 1;
                }
                (Some(x), Some(y)) if x < y => {
                    vars.push(*x);
                    i += 1;
                }
                (Some(_), Some(y)) => {
                    vars.push(*y);
                    j += 1;
                }
                (Some(x), None) => {
                    vars.push(*x);
                    i += 1;
                }
                (None, Some(y)) => {
                    vars.push(*y);
                    j += 1;
                }
                (None, None) => unreachable!(),
            }
        }
        Affine {
            vars,
            constant: self.constant ^ other.constant,
        }
    }

    pub fn negate(&self) -> Affine {
        Affine {
            vars: self.vars.clone(),
            constant: !self.constant,
        }
    }

    pub fn eval(&self, x: &[bool]) -> bool {
        self.vars.iter().fold(self.constant, |acc, &v| acc ^ x[v])
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BpEntry {
    pub from: usize,
    pub to: usize,
    pub form: Affine,
}

/// A layered DAG on nodes `0..size`; node 0 is the start and `size - 1` the
/// accept node; every entry goes from a lower to a higher node.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchingProgram {
    pub inputs: usize,
    pub size: usize,
    pub entries: Vec<BpEntry>,
}

/// Largest supported program: its matrix has `size - 1 <= 64` columns.
pub const MAX_BP_SIZE: usize = 65;
const MAX_ATOMS: usize = 16;

impl BranchingProgram {
    /// Parity of start→accept paths whose entries all evaluate to 1.
    pub fn eval(&self, x: &[bool]) -> bool {
        let mut reach = vec![false; self.size];
        reach[0] = true;
        for e in &self.entries {
            if reach[e.from] && e.form.eval(x) {
                reach[e.to] ^= true;
            }
        }
        reach[self.size - 1]
    }

    fn affine(inputs: usize, form: Affine) -> Self {
        BranchingProgram {
            inputs,
            size: 2,
            entries: if form == Affine::constant(false) {
                Vec::new()
            } else {
                vec![BpEntry { from: 0, to: 1, form }]
            },
        }
    }
}

/// Symbolic view of a circuit: affine wires get their form.
struct Symbolic<'c> {
    c: &'c GateCircuit,
    lin: Vec<Option<Affine>>,
}

impl<'c> Symbolic<'c> {
    fn new(c: &'c GateCircuit) -> Self {
        let mut lin: Vec<Option<Affine>> = (0..c.inputs).map(|i| Some(Affine::var(i))).collect();
        for g in &c.gates {
            let v = match g.op {
                Op::Const => Some(Affine::constant(g.in1 == 1)),
                Op::Not => lin[g.in1].as_ref().map(Affine::negate),
                Op::Xor => match (&lin[g.in1], &lin[g.in2.expect("validated")]) {
                    (Some(a), Some(b)) => Some(a.add(b)),
                    _ => None,
                },
                Op::And => match (&lin[g.in1], &lin[g.in2.expect("validated")]) {
                    (Some(a), Some(b)) if a.is_constant() => Some(if a.constant { b.clone() } else { Affine::constant(false) }),
                    (Some(a), Some(b)) if b.is_constant() => Some(if b.constant { a.clone() } else { Affine::constant(false) }),
                    _ => None,
                },
            };
            lin.push(v);
        }
        Symbolic { c, lin }
    }

    fn gate(&self, w: usize) -> &crate::algo::Gate {
        &self.c.gates[w - self.c.inputs]
    }

    /// Splits a nonlinear wire into its affine summands and nonlinear roots.
    fn peel(&self, w: usize, affine: &mut Affine, roots: &mut Vec<usize>) {
        if let Some(a) = &self.lin[w] {
            *affine = affine.add(a);
            return;
        }
        let g = self.gate(w);
        match g.op {
            Op::Xor => {
                self.peel(g.in1, affine, roots);
                self.peel(g.in2.expect("validated"), affine, roots);
            }
            Op::Not => {
                affine.constant ^= true;
                self.peel(g.in1, affine, roots);
            }
            _ => roots.push(w),
        }
    }

    /// Collects the affine leaves under nonlinear wires.
    fn atoms(&self, w: usize, leaves: &mut BTreeMap<usize, Affine>, seen: &mut Vec<bool>) {
        if seen[w] {
            return;
        }
        seen[w] = true;
        if let Some(a) = &self.lin[w] {
            leaves.insert(w, a.clone());
            return;
        }
        let g = self.gate(w);
        self.atoms(g.in1, leaves, seen);
        if let Some(b) = g.in2 {
            self.atoms(b, leaves, seen);
        }
    }

    fn eval_core(&self, w: usize, leaf: &HashMap<usize, bool>, memo: &mut HashMap<usize, bool>) -> bool {
        if let Some(&v) = leaf.get(&w) {
            return v;
        }
        if let Some(&v) = memo.get(&w) {
            return v;
        }
        let g = *self.gate(w);
        let a = self.eval_core(g.in1, leaf, memo);
        let v = match g.op {
            Op::Not => !a,
            Op::Const => g.in1 == 1,
            Op::And => a & self.eval_core(g.in2.expect("validated"), leaf, memo),
            Op::Xor => a ^ self.eval_core(g.in2.expect("validated"), leaf, memo),
        };
        memo.insert(w, v);
        v
    }
}

/// Builds a branching program whose path parity equals output bit `out`.
pub fn bp_from_circuit(c: &GateCircuit, out: usize) -> Result<BranchingProgram> {
    c.validate()?;
    if out >= c.outputs.len() {
        return Err(Error::InvalidInput(format!("output {out} out of range")));
    }
    program_for(&Symbolic::new(c), out)
}

/// One program per output bit, sharing the symbolic pass.
pub fn bps_from_circuit(c: &GateCircuit) -> Result<Vec<BranchingProgram>> {
    c.validate()?;
    let sym = Symbolic::new(c);
    (0..c.outputs.len()).map(|o| program_for(&sym, o)).collect()
}

fn program_for(sym: &Symbolic, out: usize) -> Result<BranchingProgram> {
    let c = sym.c;
    let w = match c.outputs[out] {
        Sig::Const(b) => return Ok(BranchingProgram::affine(c.inputs, Affine::constant(b))),
        Sig::Wire(w) => w,
    };
    let mut affine = Affine::constant(false);
    let mut roots = Vec::new();
    sym.peel(w, &mut affine, &mut roots);
    if roots.is_empty() {
        return Ok(BranchingProgram::affine(c.inputs, affine));
    }

    let mut leaves = BTreeMap::new();
    let mut seen = vec![false; c.wire_count()];
    for &r in &roots {
        let g = sym.gate(r);
        sym.atoms(g.in1, &mut leaves, &mut seen);
        if let Some(b) = g.in2 {
            sym.atoms(b, &mut leaves, &mut seen);
        }
    }
    // atoms are leaf forms normalized to a zero constant, in canonical order
    let mut atoms: Vec<Affine> = leaves
        .values()
        .filter(|a| !a.is_constant())
        .map(|a| Affine {
            vars: a.vars.clone(),
            constant: false,
        })
        .collect();
    atoms.sort();
    atoms.dedup();
    if atoms.len() > MAX_ATOMS {
        return Err(Error::Circuit(format!(
            "output {out} has {} atoms; at most {MAX_ATOMS} supported",
            atoms.len()
        )));
    }

    let n = atoms.len();
    let mut table = Vec::with_capacity(1 << n);
    for assignment in 0u32..(1 << n) {
        let value_of = |a: &Affine| -> bool {
            if a.is_constant() {
                return a.constant;
            }
            let key = Affine {
                vars: a.vars.clone(),
                constant: false,
            };
            let idx = atoms.binary_search(&key).expect("atom");
            ((assignment >> idx) & 1 == 1) ^ a.constant
        };
        let leaf: HashMap<usize, bool> = leaves.iter().map(|(&w, a)| (w, value_of(a))).collect();
        let mut memo = HashMap::new();
        let v = roots
            .iter()
            .fold(false, |acc, &r| acc ^ sym.eval_core(r, &leaf, &mut memo));
        table.push(v);
    }

    let dd = Obdd::build(&table, n);
    if let Some(c0) = dd.constant() {
        let mut a = affine;
        a.constant ^= c0;
        return Ok(BranchingProgram::affine(c.inputs, a));
    }
    let bp = dd.to_bp(c.inputs, &atoms, affine);
    if bp.size > MAX_BP_SIZE {
        return Err(Error::Circuit(format!(
            "output {out} needs a branching program of size {}; at most {MAX_BP_SIZE}",
            bp.size
        )));
    }
    Ok(bp)
}

/// Reduced ordered decision diagram over variables `0..n` (variable 0 tested
/// first). Nodes 0 and 1 are the terminals.
struct Obdd {
    /// (level, low, high) of internal nodes, indexed from 2.
    nodes: Vec<(usize, usize, usize)>,
    root: usize,
}

impl Obdd {
    fn build(table: &[bool], n: usize) -> Self {
        let mut dd = Obdd {
            nodes: Vec::new(),
            root: 0,
        };
        let mut unique = HashMap::new();
        dd.root = dd.make(table, 0, n, &mut unique);
        dd
    }

    fn make(&mut self, table: &[bool], level: usize, n: usize, unique: &mut HashMap<(usize, usize, usize), usize>) -> usize {
        if level == n {
            return usize::from(table[0]);
        }
        // entries alternate on the lowest remaining variable
        let lo: Vec<bool> = table.iter().step_by(2).copied().collect();
        let hi: Vec<bool> = table.iter().skip(1).step_by(2).copied().collect();
        let l = self.make(&lo, level + 1, n, unique);
        let h = self.make(&hi, level + 1, n, unique);
        if l == h {
            return l;
        }
        *unique.entry((level, l, h)).or_insert_with(|| {
            self.nodes.push((level, l, h));
            self.nodes.len() + 1
        })
    }

    fn constant(&self) -> Option<bool> {
        (self.root < 2).then_some(self.root == 1)
    }

    fn to_bp(&self, inputs: usize, atoms: &[Affine], affine: Affine) -> BranchingProgram {
        let mut internal: Vec<usize> = (2..self.nodes.len() + 2).collect();
        internal.sort_by_key(|&id| (self.nodes[id - 2].0, id));
        // the root has the lowest level and comes first
        debug_assert_eq!(internal[0], self.root);
        let mut pos: HashMap<usize, usize> = internal.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        let accept = internal.len();
        pos.insert(1, accept);
        let mut entries = Vec::new();
        for &id in &internal {
            let (level, lo, hi) = self.nodes[id - 2];
            let from = pos[&id];
            if lo != 0 {
                entries.push(BpEntry {
                    from,
                    to: pos[&lo],
                    form: atoms[level].negate(),
                });
            }
            if hi != 0 {
                entries.push(BpEntry {
                    from,
                    to: pos[&hi],
                    form: atoms[level].clone(),
                });
            }
        }
        if affine != Affine::constant(false) {
            match entries.iter_mut().find(|e| e.from == 0 && e.to == accept) {
                Some(e) => e.form = e.form.add(&affine),
                None => entries.push(BpEntry {
                    from: 0,
                    to: accept,
                    form: affine,
                }),
            }
        }
        entries.sort_by_key(|e| (e.from, e.to));
        BranchingProgram {
            inputs,
            size: accept + 1,
            entries,
        }
    }
}
