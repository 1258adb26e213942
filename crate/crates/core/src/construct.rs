//! Compiling NAND circuits into PR-box wiring protocols.
//!
//! Every wire value `w` is held as XOR shares, one bit per party. An input
//! bit is shared trivially (its owner holds it, everyone else 0); a constant
//! is held by party 0. A NAND gate with operand shares `β` and `γ` consumes
//! one fresh PR instance per ordered pair `(i, j)`, `i ≠ j`: party `i` feeds
//! `β_i` into side 0, party `j` feeds `γ_j` into side 1. Party `i` then sets
//! its share of the gate output to the XOR of everything it received, plus
//! `β_i γ_i` and its flag bit (1 for party 0 only). The shares of the output
//! wire are the parties' final outputs.

use std::sync::Arc;

use num_traits::One;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::boxcore::{BlackBox, BoxError, CellDifference};
use crate::circuit::{CircuitError, NandCircuit, Wire};
use crate::rational::{dyadic, Rational};
use crate::wiring::{self, BankInstance, Move, State, Strategy, Template, ValidatedProtocol, WiringError, WiringProtocol};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConstructError {
    #[error("input bit {name} belongs to party {party}, but there are only {parties} parties")]
    UnownedInputBit { name: String, party: usize, parties: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error(transparent)]
    Wiring(#[from] WiringError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Box(#[from] BoxError),
}

/// Per-gate resources: one PR instance per ordered pair of parties and a
/// flag bit per party.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NandBlockLayout {
    pub parties: usize,
    /// `flags[i]` is added to party `i`'s output share.
    pub flags: Vec<bool>,
}

impl NandBlockLayout {
    pub fn standard(parties: usize) -> Self {
        Self {
            parties,
            flags: (0..parties).map(|i| i == 0).collect(),
        }
    }

    pub fn boxes(&self) -> usize {
        self.parties * self.parties.saturating_sub(1)
    }

    /// Offset of the instance for ordered pair `(i, j)` within a gate.
    pub fn pair_index(&self, i: usize, j: usize) -> usize {
        debug_assert_ne!(i, j);
        i * (self.parties - 1) + if j < i { j } else { j - 1 }
    }

    pub fn pair(&self, index: usize) -> (usize, usize) {
        let i = index / (self.parties - 1);
        let r = index % (self.parties - 1);
        (i, if r < i { r } else { r + 1 })
    }
}

/// One joint outcome of the PR instances of a single block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockBranch {
    /// `b[p]`: side-0 output of the instance for pair index `p`.
    pub b: Vec<bool>,
    /// `c[p]`: side-1 output of the same instance.
    pub c: Vec<bool>,
    pub outputs: Vec<bool>,
}

/// Every branch of one NAND block, each of probability `1/2^{n(n−1)}`.
pub fn nand_block(beta: &[bool], gamma: &[bool], layout: &NandBlockLayout) -> Result<Vec<BlockBranch>, ConstructError> {
    let n = layout.parties;
    if beta.len() != n || gamma.len() != n || layout.flags.len() != n {
        return Err(ConstructError::ShapeMismatch(format!(
            "{n} parties but {} β shares, {} γ shares, {} flags",
            beta.len(),
            gamma.len(),
            layout.flags.len()
        )));
    }
    let m = layout.boxes();
    let mut out = Vec::with_capacity(1 << m);
    for bits in 0..1u64 << m {
        let mut b = vec![false; m];
        let mut c = vec![false; m];
        let mut outputs: Vec<bool> = (0..n).map(|i| (beta[i] & gamma[i]) ^ layout.flags[i]).collect();
        for p in 0..m {
            let (i, j) = layout.pair(p);
            b[p] = bits >> p & 1 == 1;
            c[p] = b[p] ^ (beta[i] & gamma[j]);
            outputs[i] ^= b[p];
            outputs[j] ^= c[p];
        }
        out.push(BlockBranch { b, c, outputs });
    }
    Ok(out)
}

#[derive(Debug, Clone, Default)]
pub struct CompileOptions {
    /// Replaces the standard flag bits; used to build corrupted protocols.
    pub flags: Option<Vec<bool>>,
}

#[derive(Debug)]
struct Plan {
    circuit: NandCircuit,
    /// Per input variable: owner and bit position within the owner's input.
    vars: Vec<(usize, usize)>,
    layout: NandBlockLayout,
    /// Share slot written by each gate.
    slot_of: Vec<usize>,
    slots: usize,
    /// Slots whose wire is dead once the gate is done.
    clear_after: Vec<Vec<usize>>,
    /// Per party: `(offset within the gate's instances, side)`, in offset order.
    uses: Vec<Vec<(usize, usize)>>,
    /// Whether the output wire is re-randomized with an even-parity λ.
    masked: bool,
}

// State layout for compiled strategies.
const GATE: usize = 0;
const STEP: usize = 1;
const ACC: usize = 2;
const INPUT: usize = 3;
const LAMBDA: usize = 4;
const SLOTS: usize = 5;

impl Plan {
    fn new(circuit: &NandCircuit, parties: usize, flags: Vec<bool>) -> Self {
        let gates = circuit.gates();
        let mut seen = vec![0; parties];
        let vars = circuit
            .inputs()
            .iter()
            .map(|b| {
                let pos = seen[b.party];
                seen[b.party] += 1;
                (b.party, pos)
            })
            .collect();

        // Last gate reading each gate's output; the circuit output lives forever.
        let mut last_use = vec![0usize; gates.len()];
        for (g, ops) in gates.iter().enumerate() {
            for w in ops {
                if let Wire::Gate(h) = w {
                    last_use[*h] = g;
                }
            }
        }
        if let Wire::Gate(h) = circuit.output() {
            last_use[h] = usize::MAX;
        }
        let mut slot_of = vec![0; gates.len()];
        let mut free: Vec<usize> = Vec::new();
        let mut slots = 0;
        let mut clear_after = vec![Vec::new(); gates.len()];
        for g in 0..gates.len() {
            // Operands are read during gate g, so release them only afterwards.
            let s = free.pop().unwrap_or_else(|| {
                slots += 1;
                slots - 1
            });
            slot_of[g] = s;
            let mut dying: Vec<usize> = (0..g).filter(|&h| last_use[h] == g).map(|h| slot_of[h]).collect();
            dying.sort_unstable();
            dying.dedup();
            free.extend(dying.iter().rev());
            clear_after[g] = dying;
        }
        let layout = NandBlockLayout { parties, flags };
        let uses = (0..parties)
            .map(|i| {
                let mut u: Vec<(usize, usize)> = Vec::new();
                for j in 0..parties {
                    if j != i {
                        u.push((layout.pair_index(i, j), 0));
                        u.push((layout.pair_index(j, i), 1));
                    }
                }
                u.sort_unstable();
                u
            })
            .collect();
        Self {
            circuit: circuit.clone(),
            vars,
            layout,
            slot_of,
            slots,
            clear_after,
            uses,
            masked: !matches!(circuit.output(), Wire::Gate(_)),
        }
    }

    fn share(&self, party: usize, state: &[u32], w: Wire) -> u32 {
        match w {
            Wire::Const(c) => (c && party == 0) as u32,
            Wire::Input(v) => {
                let (owner, pos) = self.vars[v];
                if owner == party {
                    state[INPUT] >> pos & 1
                } else {
                    0
                }
            }
            Wire::Gate(h) => state[SLOTS + self.slot_of[h]],
        }
    }

    /// Completes every gate whose box uses are all done.
    fn settle(&self, party: usize, state: &mut State) {
        let steps = self.uses[party].len();
        let gates = self.circuit.gates();
        while (state[GATE] as usize) < gates.len() && state[STEP] as usize == steps {
            let g = state[GATE] as usize;
            let [l, r] = gates[g];
            let beta = self.share(party, state, l);
            let gamma = self.share(party, state, r);
            let a = state[ACC] ^ (beta & gamma) ^ self.layout.flags[party] as u32;
            state[SLOTS + self.slot_of[g]] = a;
            for &s in &self.clear_after[g] {
                if s != self.slot_of[g] {
                    state[SLOTS + s] = 0;
                }
            }
            state[GATE] += 1;
            state[STEP] = 0;
            state[ACC] = 0;
        }
    }
}

/// Party `party`'s side of a compiled protocol, computed on demand.
#[derive(Debug, Clone)]
pub struct CompiledStrategy {
    plan: Arc<Plan>,
    party: usize,
}

impl Strategy for CompiledStrategy {
    fn start(&self, lambda: u32, input: usize) -> State {
        let mut s = vec![0; SLOTS + self.plan.slots];
        s[INPUT] = input as u32;
        s[LAMBDA] = lambda;
        self.plan.settle(self.party, &mut s);
        s
    }

    fn next_move(&self, state: &[u32]) -> Move {
        let p = &self.plan;
        let g = state[GATE] as usize;
        if g == p.circuit.gates().len() {
            return Move::Stop;
        }
        let (offset, side) = p.uses[self.party][state[STEP] as usize];
        let operand = p.circuit.gates()[g][side];
        Move::Use {
            instance: g * p.layout.boxes() + offset,
            input: p.share(self.party, state, operand) as usize,
        }
    }

    fn observe(&self, state: &[u32], output: usize) -> State {
        let mut s = state.to_vec();
        s[ACC] ^= output as u32;
        s[STEP] += 1;
        self.plan.settle(self.party, &mut s);
        s
    }

    fn output(&self, state: &[u32]) -> Option<usize> {
        let p = &self.plan;
        if state[GATE] as usize != p.circuit.gates().len() {
            return None;
        }
        let mut a = p.share(self.party, state, p.circuit.output());
        if p.masked {
            a ^= state[LAMBDA] >> self.party & 1;
        }
        Some(a as usize)
    }
}

#[derive(Debug, Clone)]
pub struct CompiledProtocol {
    pub protocol: ValidatedProtocol,
    pub circuit: NandCircuit,
    pub layout: NandBlockLayout,
}

impl CompiledProtocol {
    /// Live NAND gates (an upper bound on the minimum circuit size).
    pub fn gates(&self) -> usize {
        self.circuit.gate_count()
    }

    pub fn pr_boxes(&self) -> usize {
        self.protocol.bank.len()
    }

    pub fn parties(&self) -> usize {
        self.layout.parties
    }
}

/// Compiles `circuit` for `parties` parties. Input ownership comes from the
/// circuit's input bits; each party's input integer holds its bits in the
/// order they appear among the circuit inputs.
pub fn compile(circuit: &NandCircuit, parties: usize, options: &CompileOptions) -> Result<CompiledProtocol, ConstructError> {
    if parties == 0 {
        return Err(ConstructError::ShapeMismatch("at least one party is needed".into()));
    }
    if let Some(b) = circuit.inputs().iter().find(|b| b.party >= parties) {
        return Err(ConstructError::UnownedInputBit {
            name: b.name.clone(),
            party: b.party + 1,
            parties,
        });
    }
    let flags = match &options.flags {
        Some(f) if f.len() != parties => return Err(ConstructError::ShapeMismatch(format!("{} flags for {parties} parties", f.len()))),
        Some(f) => f.clone(),
        None => NandBlockLayout::standard(parties).flags,
    };
    let plan = Arc::new(Plan::new(circuit, parties, flags));
    let template = Arc::new(Template::pr());
    let mut bank = Vec::with_capacity(circuit.gate_count() * plan.layout.boxes());
    for _ in 0..circuit.gate_count() {
        for p in 0..plan.layout.boxes() {
            let (i, j) = plan.layout.pair(p);
            bank.push(BankInstance {
                template: template.clone(),
                owners: vec![i, j],
            });
        }
    }
    // Without a gate the output shares are deterministic; an even-parity λ
    // spreads them uniformly without changing their parity.
    let lambda = if plan.masked {
        let w = dyadic(parties as u32 - 1);
        (0..1u32 << parties).filter(|v| v.count_ones() % 2 == 0).map(|v| (v, w.clone())).collect()
    } else {
        vec![(0, Rational::one())]
    };
    let bits = circuit.input_bits();
    let mut input_sizes = vec![1usize; parties];
    for (p, &b) in bits.iter().enumerate() {
        input_sizes[p] = 1 << b;
    }
    let strategies = (0..parties)
        .map(|party| Arc::new(CompiledStrategy { plan: plan.clone(), party }) as Arc<dyn Strategy>)
        .collect();
    let protocol = WiringProtocol {
        input_sizes,
        output_sizes: vec![2; parties],
        lambda,
        bank,
        strategies,
    }
    .validate()?;
    Ok(CompiledProtocol {
        protocol,
        circuit: circuit.clone(),
        layout: plan.layout.clone(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Match,
    Mismatch(CellDifference),
}

impl Verdict {
    pub fn is_match(&self) -> bool {
        matches!(self, Verdict::Match)
    }
}

/// Exact comparison of the protocol's induced box with `target`.
pub fn verify_simulation(protocol: &ValidatedProtocol, target: &BlackBox) -> Result<Verdict, ConstructError> {
    if protocol.input_sizes != target.input_sizes() || protocol.output_sizes != target.output_sizes() {
        return Err(ConstructError::ShapeMismatch(format!(
            "protocol alphabets {:?}/{:?} vs target {:?}/{:?}",
            protocol.input_sizes,
            protocol.output_sizes,
            target.input_sizes(),
            target.output_sizes()
        )));
    }
    let induced = wiring::induced_box(protocol)?;
    Ok(match induced.first_difference(target)? {
        None => Verdict::Match,
        Some(d) => Verdict::Mismatch(d),
    })
}

/// A message in a communication transcript; parties numbered from 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Message {
    pub from: usize,
    pub to: usize,
    pub bit: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CcRun {
    pub value: bool,
    pub transcript: Vec<Message>,
    pub boxes_consumed: usize,
}

/// One run of the communication protocol: everyone runs the compiled
/// protocol on their own input, parties 2..n send their output bit to party
/// 1, and party 1 outputs the parity of all outputs. `seed` picks the box
/// outcomes; the value does not depend on it.
pub fn solve_cc(compiled: &CompiledProtocol, x: &[usize], seed: u64) -> Result<CcRun, ConstructError> {
    let exec = wiring::Executor::new(&compiled.protocol, x)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let run = exec.sample_run(&mut rng);
    let transcript: Vec<Message> = (1..compiled.parties())
        .map(|i| Message {
            from: i + 1,
            to: 1,
            bit: run.outputs[i] as u8,
        })
        .collect();
    let value = run.outputs.iter().fold(false, |acc, &a| acc ^ (a == 1));
    Ok(CcRun {
        value,
        transcript,
        boxes_consumed: run.instances_used.len(),
    })
}

/// CLI-facing summary of a compilation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CompileReport {
    pub f: String,
    pub n: usize,
    pub k: usize,
    pub pr_boxes: usize,
    pub verified: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boxcore::{check_no_signaling, full_correlation_box, marginal, pr_box};
    use crate::circuit::{default_inputs, synthesize_nand, TruthTable};
    use crate::rational::rat;
    use num_traits::Zero;

    fn nand_circuit() -> NandCircuit {
        NandCircuit::new(2, default_inputs(&[0, 1]), vec![[Wire::Input(0), Wire::Input(1)]], Wire::Gate(0)).unwrap()
    }

    fn parity(bits: &[bool]) -> bool {
        bits.iter().fold(false, |a, &b| a ^ b)
    }

    #[test]
    fn block_parity_on_every_branch() {
        let l2 = NandBlockLayout::standard(2);
        for branch in nand_block(&[true, false], &[true, false], &l2).unwrap() {
            assert!(!parity(&branch.outputs));
        }
        let l3 = NandBlockLayout::standard(3);
        let branches = nand_block(&[false; 3], &[false; 3], &l3).unwrap();
        assert_eq!(branches.len(), 64);
        let mut counts = std::collections::HashMap::new();
        for br in &branches {
            assert!(parity(&br.outputs));
            *counts.entry(br.outputs.clone()).or_insert(0) += 1;
        }
        // Uniform over the four odd-parity triples.
        assert_eq!(counts.len(), 4);
        assert!(counts.values().all(|&c| c == 16));
    }

    #[test]
    fn block_identities_for_all_splittings() {
        let l = NandBlockLayout::standard(2);
        for bits in 0..16u32 {
            let beta = [bits & 1 == 1, bits & 2 == 2];
            let gamma = [bits & 4 == 4, bits & 8 == 8];
            let want = !(parity(&beta) & parity(&gamma));
            for br in nand_block(&beta, &gamma, &l).unwrap() {
                assert_eq!(parity(&br.outputs), want);
                for p in 0..l.boxes() {
                    let (i, j) = l.pair(p);
                    assert_eq!(br.b[p] ^ br.c[p], beta[i] & gamma[j]);
                }
            }
        }
        assert!(matches!(nand_block(&[true], &[true, false], &l), Err(ConstructError::ShapeMismatch(_))));
    }

    #[test]
    fn pair_indexing_round_trips() {
        for n in 2..5 {
            let l = NandBlockLayout::standard(n);
            for p in 0..l.boxes() {
                let (i, j) = l.pair(p);
                assert_ne!(i, j);
                assert_eq!(l.pair_index(i, j), p);
            }
        }
    }

    #[test]
    fn single_nand_gate() {
        let c = compile(&nand_circuit(), 2, &CompileOptions::default()).unwrap();
        assert_eq!(c.pr_boxes(), 2);
        let target = full_correlation_box(&[1, 1], |x| !(x[0] == 1 && x[1] == 1));
        assert!(verify_simulation(&c.protocol, &target).unwrap().is_match());
    }

    #[test]
    fn and_gives_the_pr_box() {
        let t = TruthTable::uniform(2, 1, vec![false, false, false, true]).unwrap();
        let c = compile(&synthesize_nand(&t), 2, &CompileOptions::default()).unwrap();
        assert_eq!(c.gates(), 2);
        assert_eq!(c.pr_boxes(), 4);
        assert!(verify_simulation(&c.protocol, &pr_box()).unwrap().is_match());
    }

    #[test]
    fn corrupted_flag_is_caught() {
        let opts = CompileOptions {
            flags: Some(vec![true, true]),
        };
        let c = compile(&nand_circuit(), 2, &opts).unwrap();
        let target = full_correlation_box(&[1, 1], |x| !(x[0] == 1 && x[1] == 1));
        match verify_simulation(&c.protocol, &target).unwrap() {
            Verdict::Mismatch(d) => {
                assert!(d.left.is_zero() != d.right.is_zero());
            }
            Verdict::Match => panic!("corrupted protocol verified"),
        }
    }

    #[test]
    fn constants_use_no_boxes() {
        for value in [false, true] {
            let t = TruthTable::uniform(3, 1, vec![value; 8]).unwrap();
            let c = compile(&synthesize_nand(&t), 3, &CompileOptions::default()).unwrap();
            assert_eq!(c.pr_boxes(), 0);
            let b = wiring::induced_box(&c.protocol).unwrap();
            assert_eq!(b, t.full_correlation_box());
            let run = solve_cc(&c, &[1, 0, 1], 3).unwrap();
            assert_eq!(run.value, value);
            assert_eq!(run.transcript.len(), 2);
            assert_eq!(run.boxes_consumed, 0);
        }
    }

    #[test]
    fn identity_output_wire() {
        // f = x₂'s bit, no gates: shares re-randomized by λ.
        let circuit = NandCircuit::new(2, default_inputs(&[1]), vec![], Wire::Input(0)).unwrap();
        let c = compile(&circuit, 2, &CompileOptions::default()).unwrap();
        let b = wiring::induced_box(&c.protocol).unwrap();
        assert_eq!(b, full_correlation_box(&[0, 1], |x| x[1] == 1));
        assert_eq!(b.prob(&[0, 1], &[1, 0]), &rat(1, 2));
    }

    #[test]
    fn majority_of_three() {
        let t = TruthTable::from_fn(3, vec![0, 1, 2], |b| (b[0] as u8 + b[1] as u8 + b[2] as u8) >= 2).unwrap();
        let circuit = synthesize_nand(&t);
        let c = compile(&circuit, 3, &CompileOptions::default()).unwrap();
        assert_eq!(c.pr_boxes(), circuit.gate_count() * 6);
        let b = wiring::induced_box(&c.protocol).unwrap();
        assert_eq!(b, t.full_correlation_box());
        assert!(check_no_signaling(&b).is_ok());
        let m = marginal(&b, &[0, 2], None).unwrap();
        assert!(m.table.table().iter().all(|p| *p == rat(1, 4)));
        for x in c.protocol.input_radix().iter() {
            let run = solve_cc(&c, &x, 11).unwrap();
            assert_eq!(run.value, t.eval_party_inputs(&x));
            assert_eq!(run.transcript.len(), 2);
            assert_eq!(run.boxes_consumed, c.pr_boxes());
        }
    }

    #[test]
    fn unowned_input_bit() {
        let circuit = NandCircuit::new(3, default_inputs(&[0, 2]), vec![[Wire::Input(0), Wire::Input(1)]], Wire::Gate(0)).unwrap();
        assert!(matches!(
            compile(&circuit, 2, &CompileOptions::default()),
            Err(ConstructError::UnownedInputBit { party: 3, .. })
        ));
    }
}
