//! Boolean functions as truth tables and as NAND circuits.
//!
//! Variable `v` of a truth table is bit `v` of the row index. Each variable is
//! owned by a party; a party's input integer collects its variables in
//! increasing order, little-endian, so with party-major variable order the
//! row index coincides with the flattened box input index.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::boxcore::{self, BlackBox};

/// Largest truth table [`NandCircuit::truth_table`] will build.
pub const MAX_TABLE_VARS: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CircuitError {
    #[error("assignment has {got} bits, circuit has {expected} inputs")]
    MissingAssignment { expected: usize, got: usize },
    #[error("bad reference: {0}")]
    BadReference(String),
    #[error("{vars} variables exceeds the truth-table cap of {cap}")]
    TooLarge { vars: usize, cap: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid circuit document: {0}")]
    Format(String),
}

// ---------------------------------------------------------------------------
// Truth tables

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TruthTable {
    parties: usize,
    owners: Vec<usize>,
    values: Vec<bool>,
}

impl TruthTable {
    pub fn new(parties: usize, owners: Vec<usize>, values: Vec<bool>) -> Result<Self, CircuitError> {
        if owners.len() > MAX_TABLE_VARS {
            return Err(CircuitError::TooLarge {
                vars: owners.len(),
                cap: MAX_TABLE_VARS,
            });
        }
        if values.len() != 1usize << owners.len() {
            return Err(CircuitError::DimensionMismatch(format!(
                "{} values for {} variables",
                values.len(),
                owners.len()
            )));
        }
        if let Some(&p) = owners.iter().find(|&&p| p >= parties) {
            return Err(CircuitError::DimensionMismatch(format!("variable owned by party {} of {parties}", p + 1)));
        }
        Ok(Self { parties, owners, values })
    }

    /// `n` parties with `m` bits each, variables in party-major order.
    pub fn uniform(n: usize, m: usize, values: Vec<bool>) -> Result<Self, CircuitError> {
        Self::new(n, (0..n * m).map(|v| v / m.max(1)).collect(), values)
    }

    pub fn from_fn<F: Fn(&[bool]) -> bool>(parties: usize, owners: Vec<usize>, f: F) -> Result<Self, CircuitError> {
        let nv = owners.len();
        let values = (0..1usize << nv)
            .map(|i| {
                let bits: Vec<bool> = (0..nv).map(|v| i >> v & 1 == 1).collect();
                f(&bits)
            })
            .collect();
        Self::new(parties, owners, values)
    }

    /// Parses a `0`/`1` string, row 0 first.
    pub fn from_bit_string(parties: usize, owners: Vec<usize>, bits: &str) -> Result<Self, CircuitError> {
        let values = bits
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(CircuitError::Format(format!("unexpected character {other:?} in truth table"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(parties, owners, values)
    }

    pub fn to_bit_string(&self) -> String {
        self.values.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    pub fn parties(&self) -> usize {
        self.parties
    }

    pub fn n_vars(&self) -> usize {
        self.owners.len()
    }

    pub fn owners(&self) -> &[usize] {
        &self.owners
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    pub fn get(&self, row: usize) -> bool {
        self.values[row]
    }

    /// Number of input bits each party owns.
    pub fn input_bits(&self) -> Vec<usize> {
        input_bits_of(self.parties, &self.owners)
    }

    /// Row index for per-party input integers.
    pub fn row_of_party_inputs(&self, x: &[usize]) -> usize {
        row_of_party_inputs(&self.owners, x)
    }

    pub fn eval_party_inputs(&self, x: &[usize]) -> bool {
        self.values[self.row_of_party_inputs(x)]
    }

    pub fn is_constant(&self) -> Option<bool> {
        let first = self.values[0];
        self.values.iter().all(|&v| v == first).then_some(first)
    }

    /// The full-correlation box whose output parity is this function.
    pub fn full_correlation_box(&self) -> BlackBox {
        boxcore::full_correlation_box(&self.input_bits(), |x| self.eval_party_inputs(x))
    }
}

pub(crate) fn input_bits_of(parties: usize, owners: &[usize]) -> Vec<usize> {
    let mut bits = vec![0; parties];
    for &p in owners {
        bits[p] += 1;
    }
    bits
}

pub(crate) fn row_of_party_inputs(owners: &[usize], x: &[usize]) -> usize {
    let mut seen = vec![0usize; x.len()];
    let mut row = 0;
    for (v, &p) in owners.iter().enumerate() {
        if x[p] >> seen[p] & 1 == 1 {
            row |= 1 << v;
        }
        seen[p] += 1;
    }
    row
}

// ---------------------------------------------------------------------------
// Circuits

/// Operand of a NAND gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Wire {
    Const(bool),
    Input(usize),
    Gate(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct InputBit {
    pub name: String,
    /// 0-based party index.
    pub party: usize,
}

/// A NAND circuit in topological order with every gate live.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NandCircuit {
    parties: usize,
    inputs: Vec<InputBit>,
    gates: Vec<[Wire; 2]>,
    output: Wire,
}

impl NandCircuit {
    /// Checks references and removes gates the output does not depend on.
    pub fn new(parties: usize, inputs: Vec<InputBit>, gates: Vec<[Wire; 2]>, output: Wire) -> Result<Self, CircuitError> {
        if let Some(i) = inputs.iter().find(|i| i.party >= parties) {
            return Err(CircuitError::DimensionMismatch(format!("input {} owned by party {} of {parties}", i.name, i.party + 1)));
        }
        let check = |w: &Wire, limit: usize| -> Result<(), CircuitError> {
            match *w {
                Wire::Input(i) if i >= inputs.len() => Err(CircuitError::BadReference(format!("input #{i}"))),
                Wire::Gate(g) if g >= limit => Err(CircuitError::BadReference(format!("g{g} used before definition"))),
                _ => Ok(()),
            }
        };
        for (g, ops) in gates.iter().enumerate() {
            check(&ops[0], g)?;
            check(&ops[1], g)?;
        }
        check(&output, gates.len())?;
        let mut c = Self {
            parties,
            inputs,
            gates,
            output,
        };
        c.prune();
        Ok(c)
    }

    fn prune(&mut self) {
        let mut live = vec![false; self.gates.len()];
        if let Wire::Gate(g) = self.output {
            live[g] = true;
        }
        for g in (0..self.gates.len()).rev() {
            if live[g] {
                for w in self.gates[g] {
                    if let Wire::Gate(h) = w {
                        live[h] = true;
                    }
                }
            }
        }
        let mut remap = vec![usize::MAX; self.gates.len()];
        let mut kept = Vec::new();
        let map = |w: Wire, remap: &[usize]| match w {
            Wire::Gate(h) => Wire::Gate(remap[h]),
            other => other,
        };
        for (g, ops) in self.gates.iter().enumerate() {
            if live[g] {
                remap[g] = kept.len();
                kept.push([map(ops[0], &remap), map(ops[1], &remap)]);
            }
        }
        self.output = map(self.output, &remap);
        self.gates = kept;
    }

    pub fn parties(&self) -> usize {
        self.parties
    }

    pub fn inputs(&self) -> &[InputBit] {
        &self.inputs
    }

    pub fn gates(&self) -> &[[Wire; 2]] {
        &self.gates
    }

    pub fn output(&self) -> Wire {
        self.output
    }

    /// Live NAND gates (dead gates are pruned at construction).
    pub fn gate_count(&self) -> usize {
        self.gates.len()
    }

    pub fn owners(&self) -> Vec<usize> {
        self.inputs.iter().map(|i| i.party).collect()
    }

    pub fn input_bits(&self) -> Vec<usize> {
        input_bits_of(self.parties, &self.owners())
    }

    /// Evaluates gate by gate with `NAND(q, r) = q·r ⊕ 1`.
    pub fn eval(&self, assignment: &[bool]) -> Result<bool, CircuitError> {
        if assignment.len() != self.inputs.len() {
            return Err(CircuitError::MissingAssignment {
                expected: self.inputs.len(),
                got: assignment.len(),
            });
        }
        let mut values = Vec::with_capacity(self.gates.len());
        let read = |w: Wire, values: &[bool]| match w {
            Wire::Const(c) => c,
            Wire::Input(i) => assignment[i],
            Wire::Gate(g) => values[g],
        };
        for &[l, r] in &self.gates {
            let v = !(read(l, &values) & read(r, &values));
            values.push(v);
        }
        Ok(read(self.output, &values))
    }

    /// Evaluates on per-party input integers.
    pub fn eval_party_inputs(&self, x: &[usize]) -> bool {
        let row = row_of_party_inputs(&self.owners(), x);
        let bits: Vec<bool> = (0..self.inputs.len()).map(|v| row >> v & 1 == 1).collect();
        self.eval(&bits).expect("assignment length matches")
    }

    /// Exhaustive evaluation, 64 rows at a time.
    pub fn truth_table(&self) -> Result<TruthTable, CircuitError> {
        let nv = self.inputs.len();
        if nv > MAX_TABLE_VARS {
            return Err(CircuitError::TooLarge {
                vars: nv,
                cap: MAX_TABLE_VARS,
            });
        }
        const PATTERNS: [u64; 6] = [
            0xAAAA_AAAA_AAAA_AAAA,
            0xCCCC_CCCC_CCCC_CCCC,
            0xF0F0_F0F0_F0F0_F0F0,
            0xFF00_FF00_FF00_FF00,
            0xFFFF_0000_FFFF_0000,
            0xFFFF_FFFF_0000_0000,
        ];
        let rows = 1usize << nv;
        let mut values = Vec::with_capacity(rows);
        let mut gate_words = vec![0u64; self.gates.len()];
        for chunk in 0..rows.div_ceil(64) {
            let input_word = |i: usize| -> u64 {
                if i < 6 {
                    PATTERNS[i]
                } else if (chunk * 64) >> i & 1 == 1 {
                    u64::MAX
                } else {
                    0
                }
            };
            let read = |w: Wire, gw: &[u64]| match w {
                Wire::Const(true) => u64::MAX,
                Wire::Const(false) => 0,
                Wire::Input(i) => input_word(i),
                Wire::Gate(g) => gw[g],
            };
            for g in 0..self.gates.len() {
                let [l, r] = self.gates[g];
                gate_words[g] = !(read(l, &gate_words) & read(r, &gate_words));
            }
            let out = read(self.output, &gate_words);
            for k in 0..64.min(rows - chunk * 64) {
                values.push(out >> k & 1 == 1);
            }
        }
        TruthTable::new(self.parties, self.owners(), values)
    }

    pub fn to_document(&self) -> CircuitDocument {
        let mut constants = BTreeMap::new();
        let name = |w: Wire, constants: &mut BTreeMap<String, u8>| match w {
            Wire::Const(c) => {
                let n = format!("c{}", c as u8);
                constants.insert(n.clone(), c as u8);
                n
            }
            Wire::Input(i) => self.inputs[i].name.clone(),
            Wire::Gate(g) => format!("g{g}"),
        };
        let gates = self
            .gates
            .iter()
            .map(|&[l, r]| GateDoc {
                l: name(l, &mut constants),
                r: name(r, &mut constants),
            })
            .collect();
        let output = name(self.output, &mut constants);
        CircuitDocument {
            inputs: self
                .inputs
                .iter()
                .map(|i| InputDoc {
                    name: i.name.clone(),
                    party: i.party + 1,
                })
                .collect(),
            gates,
            output,
            constants,
        }
    }

    /// `parties` defaults to the largest party named by an input.
    pub fn from_document(doc: &CircuitDocument, parties: Option<usize>) -> Result<Self, CircuitError> {
        let mut names: HashMap<&str, Wire> = HashMap::new();
        let mut inputs = Vec::new();
        for (i, inp) in doc.inputs.iter().enumerate() {
            if inp.party == 0 {
                return Err(CircuitError::Format(format!("input {} has party 0; parties are numbered from 1", inp.name)));
            }
            if names.insert(&inp.name, Wire::Input(i)).is_some() {
                return Err(CircuitError::Format(format!("duplicate input name {}", inp.name)));
            }
            inputs.push(InputBit {
                name: inp.name.clone(),
                party: inp.party - 1,
            });
        }
        for (n, &v) in &doc.constants {
            if v > 1 {
                return Err(CircuitError::Format(format!("constant {n} must be 0 or 1")));
            }
            if names.insert(n, Wire::Const(v == 1)).is_some() {
                return Err(CircuitError::Format(format!("constant {n} shadows another name")));
            }
        }
        let resolve = |s: &str, defined: usize, names: &HashMap<&str, Wire>| -> Result<Wire, CircuitError> {
            if let Some(w) = names.get(s) {
                return Ok(*w);
            }
            match gate_index(s) {
                Some(g) if g < defined => Ok(Wire::Gate(g)),
                Some(g) => Err(CircuitError::BadReference(format!("g{g} used before definition"))),
                None => Err(CircuitError::BadReference(s.to_string())),
            }
        };
        let mut gates = Vec::with_capacity(doc.gates.len());
        for (g, gd) in doc.gates.iter().enumerate() {
            gates.push([resolve(&gd.l, g, &names)?, resolve(&gd.r, g, &names)?]);
        }
        let output = resolve(&doc.output, gates.len(), &names)?;
        let parties = parties.unwrap_or_else(|| inputs.iter().map(|i| i.party + 1).max().unwrap_or(1));
        Self::new(parties, inputs, gates, output)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_document()).expect("circuit documents serialize")
    }

    pub fn from_json(text: &str, parties: Option<usize>) -> Result<Self, CircuitError> {
        let doc: CircuitDocument = serde_json::from_str(text).map_err(|e| CircuitError::Format(e.to_string()))?;
        Self::from_document(&doc, parties)
    }

    /// Parses the plain-text netlist form:
    ///
    /// ```text
    /// # comments and blank lines are ignored
    /// g0 = NAND(x1_0, x2_0)
    /// g1 = NAND(g0, 1)
    /// output = g1
    /// ```
    ///
    /// Inputs are named `x<party>_<bit>` (party from 1) and may also be
    /// declared up front with `input <name> <party>`; `0` and `1` are
    /// constants. Without an `output` line the last gate is the output.
    pub fn parse_netlist(text: &str, parties: Option<usize>) -> Result<Self, CircuitError> {
        let mut declared: Vec<(String, usize)> = Vec::new();
        let mut gate_lines: Vec<(usize, String, String, String)> = Vec::new();
        let mut output: Option<(usize, String)> = None;
        for (ln, raw) in text.lines().enumerate() {
            let line_no = ln + 1;
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let perr = |message: &str| CircuitError::Parse {
                line: line_no,
                message: message.to_string(),
            };
            if let Some(rest) = line.strip_prefix("input ") {
                let mut it = rest.split_whitespace();
                let (Some(name), Some(party), None) = (it.next(), it.next(), it.next()) else {
                    return Err(perr("expected `input <name> <party>`"));
                };
                let party: usize = party.parse().map_err(|_| perr("party must be a positive integer"))?;
                if party == 0 {
                    return Err(perr("parties are numbered from 1"));
                }
                declared.push((name.to_string(), party - 1));
                continue;
            }
            let Some((lhs, rhs)) = line.split_once('=') else {
                return Err(perr("expected `<gate> = NAND(<a>, <b>)` or `output = <ref>`"));
            };
            let (lhs, rhs) = (lhs.trim(), rhs.trim());
            if lhs == "output" {
                output = Some((line_no, rhs.to_string()));
                continue;
            }
            let args = rhs
                .strip_prefix("NAND(")
                .and_then(|r| r.strip_suffix(')'))
                .ok_or_else(|| perr("expected NAND(<a>, <b>)"))?;
            let Some((a, b)) = args.split_once(',') else {
                return Err(perr("NAND takes two operands"));
            };
            gate_lines.push((line_no, lhs.to_string(), a.trim().to_string(), b.trim().to_string()));
        }

        // Inputs: declared ones first, then x<party>_<bit> names in (party, bit) order.
        let mut implicit: Vec<(usize, usize, String)> = Vec::new();
        let gate_names: Vec<&str> = gate_lines.iter().map(|g| g.1.as_str()).collect();
        for (_, _, a, b) in &gate_lines {
            for op in [a, b] {
                if op == "0" || op == "1" || gate_names.contains(&op.as_str()) || declared.iter().any(|d| &d.0 == op) {
                    continue;
                }
                if let Some((p, bit)) = parse_input_name(op) {
                    if !implicit.iter().any(|i| &i.2 == op) {
                        implicit.push((p, bit, op.clone()));
                    }
                }
            }
        }
        implicit.sort();
        let mut inputs: Vec<InputBit> = declared.into_iter().map(|(name, party)| InputBit { name, party }).collect();
        inputs.extend(implicit.into_iter().map(|(p, _, name)| InputBit { name, party: p }));

        let mut names: HashMap<String, Wire> = inputs.iter().enumerate().map(|(i, b)| (b.name.clone(), Wire::Input(i))).collect();
        names.insert("0".into(), Wire::Const(false));
        names.insert("1".into(), Wire::Const(true));
        let mut gates = Vec::new();
        for (line, name, a, b) in &gate_lines {
            let look = |s: &str| {
                names.get(s).copied().ok_or_else(|| CircuitError::Parse {
                    line: *line,
                    message: format!("unknown operand {s}"),
                })
            };
            let ops = [look(a)?, look(b)?];
            if names.insert(name.clone(), Wire::Gate(gates.len())).is_some() {
                return Err(CircuitError::Parse {
                    line: *line,
                    message: format!("{name} defined twice"),
                });
            }
            gates.push(ops);
        }
        let output = match output {
            Some((line, r)) => names.get(&r).copied().ok_or(CircuitError::Parse {
                line,
                message: format!("unknown output {r}"),
            })?,
            None if !gates.is_empty() => Wire::Gate(gates.len() - 1),
            None => return Err(CircuitError::Format("empty netlist".into())),
        };
        let parties = parties.unwrap_or_else(|| inputs.iter().map(|i| i.party + 1).max().unwrap_or(1));
        Self::new(parties, inputs, gates, output)
    }

    pub fn to_netlist(&self) -> String {
        let name = |w: Wire| match w {
            Wire::Const(c) => (c as u8).to_string(),
            Wire::Input(i) => self.inputs[i].name.clone(),
            Wire::Gate(g) => format!("g{g}"),
        };
        let mut s = String::new();
        for i in &self.inputs {
            let _ = writeln!(s, "input {} {}", i.name, i.party + 1);
        }
        for (g, &[l, r]) in self.gates.iter().enumerate() {
            let _ = writeln!(s, "g{g} = NAND({}, {})", name(l), name(r));
        }
        let _ = writeln!(s, "output = {}", name(self.output));
        s
    }
}

fn gate_index(s: &str) -> Option<usize> {
    s.strip_prefix('g')?.parse().ok()
}

fn parse_input_name(s: &str) -> Option<(usize, usize)> {
    let (p, b) = s.strip_prefix('x')?.split_once('_')?;
    let p: usize = p.parse().ok()?;
    let b: usize = b.parse().ok()?;
    (p >= 1).then_some((p - 1, b))
}

/// Default input names `x<party>_<bit>` (party from 1).
pub fn default_inputs(owners: &[usize]) -> Vec<InputBit> {
    let mut seen = HashMap::new();
    owners
        .iter()
        .map(|&p| {
            let b = seen.entry(p).or_insert(0usize);
            let name = format!("x{}_{}", p + 1, *b);
            *b += 1;
            InputBit { name, party: p }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitDocument {
    pub inputs: Vec<InputDoc>,
    pub gates: Vec<GateDoc>,
    pub output: String,
    #[serde(default)]
    pub constants: BTreeMap<String, u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDoc {
    pub name: String,
    pub party: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateDoc {
    pub l: String,
    pub r: String,
}

// ---------------------------------------------------------------------------
// Synthesis

struct Builder {
    gates: Vec<[Wire; 2]>,
    hashed: HashMap<[Wire; 2], Wire>,
    memo: HashMap<Vec<bool>, Wire>,
}

impl Builder {
    fn nand(&mut self, a: Wire, b: Wire) -> Wire {
        match (a, b) {
            (Wire::Const(false), _) | (_, Wire::Const(false)) => return Wire::Const(true),
            (Wire::Const(true), w) | (w, Wire::Const(true)) => return self.not(w),
            _ => {}
        }
        let key = if a <= b { [a, b] } else { [b, a] };
        if let Some(&w) = self.hashed.get(&key) {
            return w;
        }
        let w = Wire::Gate(self.gates.len());
        self.gates.push(key);
        self.hashed.insert(key, w);
        w
    }

    fn not(&mut self, a: Wire) -> Wire {
        match a {
            Wire::Const(c) => Wire::Const(!c),
            Wire::Gate(g) if self.gates[g][0] == self.gates[g][1] => self.gates[g][0],
            _ => self.nand(a, a),
        }
    }

    fn xor(&mut self, a: Wire, b: Wire) -> Wire {
        let t = self.nand(a, b);
        let l = self.nand(a, t);
        let r = self.nand(b, t);
        self.nand(l, r)
    }

    /// Shannon expansion on the highest variable of `table`.
    fn build(&mut self, table: &[bool]) -> Wire {
        if table.iter().all(|&b| b == table[0]) {
            return Wire::Const(table[0]);
        }
        if let Some(&w) = self.memo.get(table) {
            return w;
        }
        let half = table.len() / 2;
        let var = Wire::Input(half.trailing_zeros() as usize);
        let (f0, f1) = table.split_at(half);
        let w = if f0 == f1 {
            self.build(f0)
        } else if f0.iter().zip(f1).all(|(a, b)| a != b) {
            let g = self.build(f0);
            self.xor(var, g)
        } else {
            let c0 = constant(f0);
            let c1 = constant(f1);
            match (c0, c1) {
                (Some(false), Some(true)) => var,
                (Some(true), Some(false)) => self.not(var),
                (_, Some(true)) => {
                    // x ∨ f0
                    let g = self.build(f0);
                    let nx = self.not(var);
                    let ng = self.not(g);
                    self.nand(nx, ng)
                }
                (_, Some(false)) => {
                    // ¬x ∧ f0
                    let g = self.build(f0);
                    let nx = self.not(var);
                    let t = self.nand(nx, g);
                    self.not(t)
                }
                (Some(true), _) => {
                    // ¬x ∨ f1
                    let g = self.build(f1);
                    let ng = self.not(g);
                    self.nand(var, ng)
                }
                (Some(false), _) => {
                    // x ∧ f1
                    let g = self.build(f1);
                    let t = self.nand(var, g);
                    self.not(t)
                }
                (None, None) => {
                    let g1 = self.build(f1);
                    let g0 = self.build(f0);
                    let nx = self.not(var);
                    let hi = self.nand(var, g1);
                    let lo = self.nand(nx, g0);
                    self.nand(hi, lo)
                }
            }
        };
        self.memo.insert(table.to_vec(), w);
        w
    }
}

fn constant(t: &[bool]) -> Option<bool> {
    t.iter().all(|&b| b == t[0]).then_some(t[0])
}

/// Synthesizes a NAND circuit computing `table`: Shannon expansion into
/// multiplexers written directly in NAND form, with structural hashing and
/// double-negation elimination. Constant functions become a constant output
/// with no gates.
pub fn synthesize_nand(table: &TruthTable) -> NandCircuit {
    let mut b = Builder {
        gates: Vec::new(),
        hashed: HashMap::new(),
        memo: HashMap::new(),
    };
    let output = b.build(table.values());
    let circuit = NandCircuit::new(table.parties(), default_inputs(table.owners()), b.gates, output)
        .expect("synthesized circuits reference only earlier gates");
    assert_eq!(
        circuit.truth_table().expect("table size already bounded").values(),
        table.values(),
        "synthesized circuit disagrees with its truth table"
    );
    circuit
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_nand() -> NandCircuit {
        NandCircuit::new(
            2,
            default_inputs(&[0, 1]),
            vec![[Wire::Input(0), Wire::Input(1)]],
            Wire::Gate(0),
        )
        .unwrap()
    }

    fn or_circuit() -> NandCircuit {
        NandCircuit::parse_netlist("g0 = NAND(x1_0, x1_0)\ng1 = NAND(x2_0, x2_0)\ng2 = NAND(g0, g1)\n", None).unwrap()
    }

    #[test]
    fn nand_gate_semantics() {
        let c = single_nand();
        assert!(c.eval(&[false, false]).unwrap());
        assert!(!c.eval(&[true, true]).unwrap());
        assert_eq!(c.truth_table().unwrap().to_bit_string(), "1110");
        assert_eq!(c.gate_count(), 1);
        assert_eq!(
            c.eval(&[true]),
            Err(CircuitError::MissingAssignment { expected: 2, got: 1 })
        );
    }

    #[test]
    fn or_from_three_nands() {
        let c = or_circuit();
        assert_eq!(c.gate_count(), 3);
        for row in 0..4usize {
            let (x, y) = (row & 1 == 1, row & 2 == 2);
            assert_eq!(c.eval(&[x, y]).unwrap(), x | y);
        }
        assert!(c.eval(&[false, true]).unwrap());
    }

    #[test]
    fn identity_wire_table() {
        let c = NandCircuit::new(1, default_inputs(&[0]), vec![], Wire::Input(0)).unwrap();
        assert_eq!(c.truth_table().unwrap().to_bit_string(), "01");
        assert_eq!(c.gate_count(), 0);
    }

    #[test]
    fn constant_zero_chain_is_counted_after_pruning() {
        let c = NandCircuit::parse_netlist(
            "g0 = NAND(x1_0, x1_0)\ng1 = NAND(x1_0, g0)\ng2 = NAND(g1, g1)\ng3 = NAND(x1_0, x1_0)\noutput = g2\n",
            None,
        )
        .unwrap();
        // g3 is dead.
        assert_eq!(c.gate_count(), 3);
        assert_eq!(c.truth_table().unwrap().to_bit_string(), "00");
    }

    #[test]
    fn synthesis_small_functions() {
        let and = TruthTable::uniform(2, 1, vec![false, false, false, true]).unwrap();
        let c = synthesize_nand(&and);
        assert_eq!(c.truth_table().unwrap(), and);
        assert_eq!(c.gate_count(), 2);

        let zero = TruthTable::uniform(2, 1, vec![false; 4]).unwrap();
        let c = synthesize_nand(&zero);
        assert_eq!(c.output(), Wire::Const(false));
        assert_eq!(c.gate_count(), 0);

        let parity = TruthTable::from_fn(3, vec![0, 1, 2], |b| b[0] ^ b[1] ^ b[2]).unwrap();
        let c = synthesize_nand(&parity);
        assert_eq!(c.truth_table().unwrap(), parity);
        assert_eq!(c.gate_count(), 8);
    }

    #[test]
    fn synthesis_is_exhaustively_correct_on_three_vars() {
        for bits in 0u32..256 {
            let values: Vec<bool> = (0..8).map(|i| bits >> i & 1 == 1).collect();
            let t = TruthTable::new(2, vec![0, 0, 1], values).unwrap();
            assert_eq!(synthesize_nand(&t).truth_table().unwrap(), t);
        }
    }

    #[test]
    fn document_and_netlist_round_trip() {
        let c = or_circuit();
        let back = NandCircuit::from_json(&c.to_json(), None).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.gate_count(), c.gate_count());
        let back = NandCircuit::parse_netlist(&c.to_netlist(), None).unwrap();
        assert_eq!(back, c);
        let with_const = NandCircuit::new(1, default_inputs(&[0]), vec![[Wire::Input(0), Wire::Const(true)]], Wire::Gate(0)).unwrap();
        let doc = with_const.to_document();
        assert_eq!(doc.constants.get("c1"), Some(&1));
        assert_eq!(NandCircuit::from_document(&doc, None).unwrap(), with_const);
    }

    #[test]
    fn bad_references_are_rejected() {
        assert!(matches!(
            NandCircuit::new(1, default_inputs(&[0]), vec![[Wire::Gate(0), Wire::Input(0)]], Wire::Gate(0)),
            Err(CircuitError::BadReference(_))
        ));
        assert!(matches!(
            NandCircuit::parse_netlist("g0 = NAND(x1_0, g5)", None),
            Err(CircuitError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            NandCircuit::parse_netlist("g0 = AND(x1_0, x1_0)", None),
            Err(CircuitError::Parse { .. })
        ));
    }

    #[test]
    fn party_inputs_map_to_rows() {
        // Party 0 owns vars 0 and 2, party 1 owns var 1.
        let owners = vec![0, 1, 0];
        assert_eq!(row_of_party_inputs(&owners, &[0b10, 1]), 0b110);
        assert_eq!(row_of_party_inputs(&owners, &[0b01, 0]), 0b001);
        assert_eq!(input_bits_of(2, &owners), vec![2, 1]);
    }
}
