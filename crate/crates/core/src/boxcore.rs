//! n-party boxes as exact conditional distributions `P(a⃗|x⃗)`.
//!
//! Tables are dense. Input and output tuples are flattened little-endian
//! (party 0 varies fastest), and an `m`-bit input is the integer whose bit `b`
//! is the party's `b`-th input bit.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::lp::{self, Feasibility};
use crate::radix::Radix;
use crate::rational::{self, dyadic, format_rational, Rational};

/// Default cap on the number of global deterministic strategies `is_local`
/// will enumerate.
pub const DEFAULT_LOCAL_CAP: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BoxError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("row for inputs {x:?} sums to {} instead of 1", format_rational(.sum))]
    NotNormalized { x: Vec<usize>, sum: Rational },
    #[error("negative probability {} at inputs {x:?}, outputs {a:?}", format_rational(.p))]
    NegativeProbability { x: Vec<usize>, a: Vec<usize>, p: Rational },
    #[error("no entry for inputs {x:?}, outputs {a:?} in a dense table")]
    MissingEntry { x: Vec<usize>, a: Vec<usize> },
    #[error("duplicate entry for inputs {x:?}, outputs {a:?}")]
    DuplicateEntry { x: Vec<usize>, a: Vec<usize> },
    #[error("wrong shape: {0}")]
    WrongShape(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("marginal on parties {parties:?} depends on the other parties' inputs; supply them explicitly")]
    SignalingAmbiguity { parties: Vec<usize> },
    #[error("{count} deterministic strategies exceeds the cap of {cap}")]
    TooLarge { count: u128, cap: u128 },
    #[error("invalid box document: {0}")]
    Format(String),
}

/// An n-party box with exact rational entries.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BlackBox {
    inputs: Radix,
    outputs: Radix,
    table: Vec<Rational>,
}

impl BlackBox {
    /// Validating constructor from a dense table indexed
    /// `x_index * outputs_total + a_index`.
    pub fn new(input_sizes: &[usize], output_sizes: &[usize], table: Vec<Rational>) -> Result<Self, BoxError> {
        if input_sizes.is_empty() || input_sizes.len() != output_sizes.len() {
            return Err(BoxError::DimensionMismatch(format!(
                "{} input alphabets vs {} output alphabets",
                input_sizes.len(),
                output_sizes.len()
            )));
        }
        if input_sizes.iter().chain(output_sizes).any(|&s| s == 0) {
            return Err(BoxError::DimensionMismatch("alphabet of size 0".into()));
        }
        let inputs = Radix::new(input_sizes);
        let outputs = Radix::new(output_sizes);
        if table.len() != inputs.total() * outputs.total() {
            return Err(BoxError::DimensionMismatch(format!(
                "table has {} cells, expected {}",
                table.len(),
                inputs.total() * outputs.total()
            )));
        }
        let b = Self { inputs, outputs, table };
        b.validate()?;
        Ok(b)
    }

    /// Builds a box from `(x⃗, a⃗, p)` entries. Unless `sparse` is set, every
    /// cell must be listed; with `sparse`, omitted cells are 0.
    pub fn from_entries<I>(input_sizes: &[usize], output_sizes: &[usize], entries: I, sparse: bool) -> Result<Self, BoxError>
    where
        I: IntoIterator<Item = (Vec<usize>, Vec<usize>, Rational)>,
    {
        let inputs = Radix::new(input_sizes);
        let outputs = Radix::new(output_sizes);
        let cells = inputs.total() * outputs.total();
        let mut table: Vec<Option<Rational>> = vec![None; cells];
        for (x, a, p) in entries {
            if !inputs.contains(&x) || !outputs.contains(&a) {
                return Err(BoxError::DimensionMismatch(format!("entry x={x:?} a={a:?} out of range")));
            }
            let i = inputs.index(&x) * outputs.total() + outputs.index(&a);
            if table[i].replace(p).is_some() {
                return Err(BoxError::DuplicateEntry { x, a });
            }
        }
        let mut dense = Vec::with_capacity(cells);
        for (i, cell) in table.into_iter().enumerate() {
            match cell {
                Some(p) => dense.push(p),
                None if sparse => dense.push(Rational::zero()),
                None => {
                    return Err(BoxError::MissingEntry {
                        x: inputs.digits(i / outputs.total()),
                        a: outputs.digits(i % outputs.total()),
                    })
                }
            }
        }
        Self::new(input_sizes, output_sizes, dense)
    }

    pub fn from_fn<F>(input_sizes: &[usize], output_sizes: &[usize], mut f: F) -> Result<Self, BoxError>
    where
        F: FnMut(&[usize], &[usize]) -> Rational,
    {
        let inputs = Radix::new(input_sizes);
        let outputs = Radix::new(output_sizes);
        let mut table = Vec::with_capacity(inputs.total() * outputs.total());
        for x in inputs.iter() {
            for a in outputs.iter() {
                table.push(f(&x, &a));
            }
        }
        Self::new(input_sizes, output_sizes, table)
    }

    fn validate(&self) -> Result<(), BoxError> {
        let nout = self.outputs.total();
        for (xi, row) in self.table.chunks(nout).enumerate() {
            for (ai, p) in row.iter().enumerate() {
                if p.is_negative() {
                    return Err(BoxError::NegativeProbability {
                        x: self.inputs.digits(xi),
                        a: self.outputs.digits(ai),
                        p: p.clone(),
                    });
                }
            }
            let sum: Rational = row.iter().sum();
            if !sum.is_one() {
                return Err(BoxError::NotNormalized {
                    x: self.inputs.digits(xi),
                    sum,
                });
            }
        }
        Ok(())
    }

    pub fn parties(&self) -> usize {
        self.inputs.sizes().len()
    }

    pub fn input_sizes(&self) -> &[usize] {
        self.inputs.sizes()
    }

    pub fn output_sizes(&self) -> &[usize] {
        self.outputs.sizes()
    }

    pub fn input_radix(&self) -> &Radix {
        &self.inputs
    }

    pub fn output_radix(&self) -> &Radix {
        &self.outputs
    }

    pub fn table(&self) -> &[Rational] {
        &self.table
    }

    pub fn cell_index(&self, x: &[usize], a: &[usize]) -> usize {
        self.inputs.index(x) * self.outputs.total() + self.outputs.index(a)
    }

    pub fn prob(&self, x: &[usize], a: &[usize]) -> &Rational {
        &self.table[self.cell_index(x, a)]
    }

    /// The conditional distribution over output indices for input index `x`.
    pub fn row(&self, x_index: usize) -> &[Rational] {
        let n = self.outputs.total();
        &self.table[x_index * n..(x_index + 1) * n]
    }

    pub fn same_shape(&self, other: &BlackBox) -> bool {
        self.input_sizes() == other.input_sizes() && self.output_sizes() == other.output_sizes()
    }

    /// First cell where the two tables differ, as `(x⃗, a⃗, self, other)`.
    pub fn first_difference(&self, other: &BlackBox) -> Result<Option<CellDifference>, BoxError> {
        if !self.same_shape(other) {
            return Err(BoxError::ShapeMismatch("boxes have different alphabets".into()));
        }
        let nout = self.outputs.total();
        Ok(self
            .table
            .iter()
            .zip(&other.table)
            .position(|(p, q)| p != q)
            .map(|i| CellDifference {
                x: self.inputs.digits(i / nout),
                a: self.outputs.digits(i % nout),
                left: self.table[i].clone(),
                right: other.table[i].clone(),
            }))
    }

    /// `weight * self + (1 - weight) * other`.
    pub fn mix(&self, other: &BlackBox, weight: &Rational) -> Result<BlackBox, BoxError> {
        if !self.same_shape(other) {
            return Err(BoxError::ShapeMismatch("cannot mix boxes of different shapes".into()));
        }
        let rest = Rational::one() - weight;
        let table = self
            .table
            .iter()
            .zip(&other.table)
            .map(|(p, q)| p * weight + q * &rest)
            .collect();
        BlackBox::new(self.input_sizes(), self.output_sizes(), table)
    }

    /// Marginal over `parties` (in the given order) with every other party's
    /// input pinned to `others` (indexed by party; entries for `parties` are
    /// ignored).
    fn marginal_at(&self, parties: &[usize], others: &[usize]) -> BlackBox {
        let sub_in: Vec<usize> = parties.iter().map(|&p| self.input_sizes()[p]).collect();
        let sub_out: Vec<usize> = parties.iter().map(|&p| self.output_sizes()[p]).collect();
        let sub_in_r = Radix::new(&sub_in);
        let sub_out_r = Radix::new(&sub_out);
        let mut table = vec![Rational::zero(); sub_in_r.total() * sub_out_r.total()];
        let mut x = others.to_vec();
        let mut a = vec![0; self.parties()];
        for (sxi, sx) in sub_in_r.iter().enumerate() {
            for (k, &p) in parties.iter().enumerate() {
                x[p] = sx[k];
            }
            let xi = self.inputs.index(&x);
            for (ai, prob) in self.row(xi).iter().enumerate() {
                if prob.is_zero() {
                    continue;
                }
                self.outputs.decode_into(ai, &mut a);
                let sa: Vec<usize> = parties.iter().map(|&p| a[p]).collect();
                table[sxi * sub_out_r.total() + sub_out_r.index(&sa)] += prob;
            }
        }
        BlackBox {
            inputs: sub_in_r,
            outputs: sub_out_r,
            table,
        }
    }

    pub fn to_document(&self) -> BoxDocument {
        let nout = self.outputs.total();
        let table = self
            .table
            .iter()
            .enumerate()
            .filter(|(_, p)| !p.is_zero())
            .map(|(i, p)| BoxEntry {
                x: self.inputs.digits(i / nout),
                a: self.outputs.digits(i % nout),
                p: p.clone(),
            })
            .collect();
        BoxDocument {
            parties: self.parties(),
            inputs: self.input_sizes().to_vec(),
            outputs: self.output_sizes().to_vec(),
            table,
        }
    }

    pub fn from_document(doc: &BoxDocument) -> Result<Self, BoxError> {
        if doc.inputs.len() != doc.parties || doc.outputs.len() != doc.parties {
            return Err(BoxError::DimensionMismatch(format!(
                "\"parties\" is {} but alphabets list {} inputs / {} outputs",
                doc.parties,
                doc.inputs.len(),
                doc.outputs.len()
            )));
        }
        Self::from_entries(
            &doc.inputs,
            &doc.outputs,
            doc.table.iter().map(|e| (e.x.clone(), e.a.clone(), e.p.clone())),
            true,
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_document()).expect("box documents serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, BoxError> {
        let doc: BoxDocument = serde_json::from_str(text).map_err(|e| BoxError::Format(e.to_string()))?;
        Self::from_document(&doc)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellDifference {
    pub x: Vec<usize>,
    pub a: Vec<usize>,
    #[serde(with = "rational::serde_text")]
    pub left: Rational,
    #[serde(with = "rational::serde_text")]
    pub right: Rational,
}

/// JSON form of a box; omitted entries have probability 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDocument {
    pub parties: usize,
    pub inputs: Vec<usize>,
    pub outputs: Vec<usize>,
    pub table: Vec<BoxEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxEntry {
    pub x: Vec<usize>,
    pub a: Vec<usize>,
    #[serde(with = "rational::serde_text")]
    pub p: Rational,
}

// ---------------------------------------------------------------------------
// Constructors

/// `P(a₁a₂|x₁x₂) = 1/2` when `a₁ ⊕ a₂ = x₁x₂`, else 0.
pub fn pr_box() -> BlackBox {
    full_correlation_box(&[1, 1], |x| x[0] & x[1] == 1)
}

/// Full-correlation box: party `i` has `input_bits[i]` input bits and a binary
/// output; for each input tuple the outputs are uniform over the `2^{n-1}`
/// tuples whose parity equals `f(x⃗)`. `f` receives per-party inputs.
pub fn full_correlation_box<F>(input_bits: &[usize], f: F) -> BlackBox
where
    F: Fn(&[usize]) -> bool,
{
    let n = input_bits.len();
    let input_sizes: Vec<usize> = input_bits.iter().map(|&m| 1usize << m).collect();
    let output_sizes = vec![2; n];
    let weight = dyadic(n as u32 - 1);
    BlackBox::from_fn(&input_sizes, &output_sizes, |x, a| {
        let parity = a.iter().fold(0, |acc, &b| acc ^ b) == 1;
        if parity == f(x) {
            weight.clone()
        } else {
            Rational::zero()
        }
    })
    .expect("full-correlation tables are normalized")
}

/// `P(a⃗|x⃗) = 1 / Π|A_i|` everywhere.
pub fn uniform_box(input_sizes: &[usize], output_sizes: &[usize]) -> Result<BlackBox, BoxError> {
    let total: usize = output_sizes.iter().product();
    let p = rational::rat(1, total as i64);
    BlackBox::from_fn(input_sizes, output_sizes, |_, _| p.clone())
}

/// A local deterministic response: `outputs[i][x_i]` is party `i`'s output.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DeterministicStrategy(pub Vec<Vec<usize>>);

pub fn deterministic_box(input_sizes: &[usize], output_sizes: &[usize], strategy: &DeterministicStrategy) -> Result<BlackBox, BoxError> {
    let s = &strategy.0;
    if s.len() != input_sizes.len() || s.iter().zip(input_sizes).any(|(f, &n)| f.len() != n) {
        return Err(BoxError::ShapeMismatch("strategy does not match the input alphabets".into()));
    }
    if s.iter().zip(output_sizes).any(|(f, &m)| f.iter().any(|&o| o >= m)) {
        return Err(BoxError::ShapeMismatch("strategy output outside the alphabet".into()));
    }
    BlackBox::from_fn(input_sizes, output_sizes, |x, a| {
        if x.iter().zip(a).enumerate().all(|(i, (&xi, &ai))| s[i][xi] == ai) {
            Rational::one()
        } else {
            Rational::zero()
        }
    })
}

// ---------------------------------------------------------------------------
// No-signaling and marginals

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignalingWitness {
    /// The party whose input change is visible to the others.
    pub party: usize,
    pub input: usize,
    pub other_input: usize,
    /// Full input tuple with `party`'s entry set to `input`.
    pub context: Vec<usize>,
    /// Outputs of the remaining parties (in party order) whose probability differs.
    pub others_outputs: Vec<usize>,
    #[serde(with = "rational::serde_text")]
    pub probability: Rational,
    #[serde(with = "rational::serde_text")]
    pub other_probability: Rational,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NoSignaling {
    Ok,
    Violation(SignalingWitness),
}

impl NoSignaling {
    pub fn is_ok(&self) -> bool {
        matches!(self, NoSignaling::Ok)
    }
}

/// For every party `i`, the joint distribution of everyone else's outputs
/// must not depend on `x_i`.
pub fn check_no_signaling(b: &BlackBox) -> NoSignaling {
    let n = b.parties();
    if n == 1 {
        return NoSignaling::Ok;
    }
    for i in 0..n {
        let rest: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        let rest_in = Radix::new(&rest.iter().map(|&j| b.input_sizes()[j]).collect::<Vec<_>>());
        let mut x = vec![0; n];
        for ctx in rest_in.iter() {
            for (k, &j) in rest.iter().enumerate() {
                x[j] = ctx[k];
            }
            x[i] = 0;
            let base = b.marginal_at(&rest, &x);
            for xi in 1..b.input_sizes()[i] {
                x[i] = xi;
                let other = b.marginal_at(&rest, &x);
                if let Some(pos) = base.table.iter().zip(&other.table).position(|(p, q)| p != q) {
                    let nout = base.outputs.total();
                    let mut context = x.clone();
                    context[i] = 0;
                    return NoSignaling::Violation(SignalingWitness {
                        party: i,
                        input: 0,
                        other_input: xi,
                        context,
                        others_outputs: base.outputs.digits(pos % nout),
                        probability: base.table[pos].clone(),
                        other_probability: other.table[pos].clone(),
                    });
                }
            }
        }
    }
    NoSignaling::Ok
}

/// The distribution of a subset of parties' outputs given their inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct PartyMarginal {
    pub parties: Vec<usize>,
    /// A box over just `parties`, in that order.
    pub table: BlackBox,
}

/// Marginal over `parties`. When the subset's marginal depends on the other
/// parties' inputs, `complement_inputs` (indexed by party) must be given.
pub fn marginal(b: &BlackBox, parties: &[usize], complement_inputs: Option<&[usize]>) -> Result<PartyMarginal, BoxError> {
    let n = b.parties();
    let mut seen = vec![false; n];
    for &p in parties {
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return Err(BoxError::DimensionMismatch(format!("invalid party subset {parties:?}")));
        }
    }
    if parties.is_empty() {
        return Err(BoxError::DimensionMismatch("empty party subset".into()));
    }
    if let Some(c) = complement_inputs {
        if c.len() != n || !b.input_radix().contains(c) {
            return Err(BoxError::DimensionMismatch("complement inputs must list one valid input per party".into()));
        }
        return Ok(PartyMarginal {
            parties: parties.to_vec(),
            table: b.marginal_at(parties, c),
        });
    }
    let rest: Vec<usize> = (0..n).filter(|j| !seen[*j]).collect();
    let rest_in = Radix::new(&rest.iter().map(|&j| b.input_sizes()[j]).collect::<Vec<_>>());
    let mut x = vec![0; n];
    let first = b.marginal_at(parties, &x);
    for ctx in rest_in.iter().skip(1) {
        for (k, &j) in rest.iter().enumerate() {
            x[j] = ctx[k];
        }
        if b.marginal_at(parties, &x) != first {
            return Err(BoxError::SignalingAmbiguity {
                parties: parties.to_vec(),
            });
        }
    }
    Ok(PartyMarginal {
        parties: parties.to_vec(),
        table: first,
    })
}

// ---------------------------------------------------------------------------
// Locality

/// A linear functional `Σ c(x⃗,a⃗) P(a⃗|x⃗)` that is `<= bound` on every local
/// box and equals `value > bound` on the box under test.
#[derive(Debug, Clone, PartialEq)]
pub struct BellWitness {
    /// One coefficient per cell, in table order.
    pub coefficients: Vec<Rational>,
    pub bound: Rational,
    pub value: Rational,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Locality {
    Local {
        weights: Vec<(DeterministicStrategy, Rational)>,
    },
    Nonlocal {
        witness: BellWitness,
    },
}

impl Locality {
    pub fn is_local(&self) -> bool {
        matches!(self, Locality::Local { .. })
    }
}

/// Number of global deterministic strategies, `Π_i |A_i|^{|X_i|}`, or `None`
/// on overflow.
pub fn strategy_count(input_sizes: &[usize], output_sizes: &[usize]) -> Option<u128> {
    input_sizes.iter().zip(output_sizes).try_fold(1u128, |acc, (&x, &a)| {
        let per = (a as u128).checked_pow(x as u32)?;
        acc.checked_mul(per)
    })
}

struct StrategySpace {
    /// Flattened `(party, input)` slots with output alphabet sizes.
    slots: Radix,
    offsets: Vec<usize>,
}

impl StrategySpace {
    fn new(input_sizes: &[usize], output_sizes: &[usize]) -> Self {
        let mut sizes = Vec::new();
        let mut offsets = Vec::new();
        for (&x, &a) in input_sizes.iter().zip(output_sizes) {
            offsets.push(sizes.len());
            sizes.extend(std::iter::repeat_n(a, x));
        }
        Self {
            slots: Radix::new(&sizes),
            offsets,
        }
    }

    fn decode(&self, index: usize, input_sizes: &[usize]) -> DeterministicStrategy {
        let flat = self.slots.digits(index);
        DeterministicStrategy(
            self.offsets
                .iter()
                .zip(input_sizes)
                .map(|(&o, &n)| flat[o..o + n].to_vec())
                .collect(),
        )
    }
}

/// Decides whether `b` is a convex mixture of local deterministic strategies,
/// by exact linear feasibility over all strategies.
pub fn is_local(b: &BlackBox, cap: u128) -> Result<Locality, BoxError> {
    let count = strategy_count(b.input_sizes(), b.output_sizes()).unwrap_or(u128::MAX);
    if count > cap {
        return Err(BoxError::TooLarge { count, cap });
    }
    let count = count as usize;
    let n = b.parties();
    let nout = b.outputs.total();
    let space = StrategySpace::new(b.input_sizes(), b.output_sizes());

    // Rows are the cells with positive probability; strategies touching a
    // zero cell can never appear in a decomposition and are dropped.
    let mut row_of = vec![usize::MAX; b.table.len()];
    let mut rhs = Vec::new();
    for (i, p) in b.table.iter().enumerate() {
        if !p.is_zero() {
            row_of[i] = rhs.len();
            rhs.push(p.clone());
        }
    }
    let x_tuples: Vec<Vec<usize>> = b.inputs.iter().collect();
    let cells_of = |s: &DeterministicStrategy| -> Vec<usize> {
        x_tuples
            .iter()
            .enumerate()
            .map(|(xi, x)| {
                let a: Vec<usize> = (0..n).map(|p| s.0[p][x[p]]).collect();
                xi * nout + b.outputs.index(&a)
            })
            .collect()
    };

    let mut kept = Vec::new();
    let mut columns = Vec::new();
    for k in 0..count {
        let s = space.decode(k, b.input_sizes());
        let cells = cells_of(&s);
        if cells.iter().all(|&c| row_of[c] != usize::MAX) {
            columns.push(cells.iter().map(|&c| (row_of[c], Rational::one())).collect());
            kept.push(s);
        }
    }

    match lp::feasibility(&columns, &rhs) {
        Feasibility::Feasible(w) => {
            let weights = kept
                .into_iter()
                .zip(w)
                .filter(|(_, w)| !w.is_zero())
                .collect();
            Ok(Locality::Local { weights })
        }
        Feasibility::Infeasible(y) => {
            // Extend the certificate to zero cells with a penalty large enough
            // that every dropped strategy also scores <= 0.
            let mut coefficients = vec![Rational::zero(); b.table.len()];
            for (c, &r) in row_of.iter().enumerate() {
                if r != usize::MAX {
                    coefficients[c] = y[r].clone();
                }
            }
            let mut penalty = Rational::zero();
            for k in 0..count {
                let cells = cells_of(&space.decode(k, b.input_sizes()));
                if cells.iter().any(|&c| row_of[c] == usize::MAX) {
                    let s: Rational = cells.iter().filter(|&&c| row_of[c] != usize::MAX).map(|&c| &coefficients[c]).sum();
                    if s > penalty {
                        penalty = s;
                    }
                }
            }
            for (c, &r) in row_of.iter().enumerate() {
                if r == usize::MAX {
                    coefficients[c] = -penalty.clone();
                }
            }
            let value: Rational = coefficients.iter().zip(&b.table).map(|(c, p)| c * p).sum();
            let witness = BellWitness {
                coefficients,
                bound: Rational::zero(),
                value,
            };
            debug_assert!(witness_holds(b, &witness));
            Ok(Locality::Nonlocal { witness })
        }
    }
}

/// Re-checks a Bell witness: every deterministic strategy scores at most the
/// bound and `b` scores strictly above it.
pub fn witness_holds(b: &BlackBox, w: &BellWitness) -> bool {
    let Some(count) = strategy_count(b.input_sizes(), b.output_sizes()) else {
        return false;
    };
    let value: Rational = w.coefficients.iter().zip(&b.table).map(|(c, p)| c * p).sum();
    if value != w.value || value <= w.bound {
        return false;
    }
    let space = StrategySpace::new(b.input_sizes(), b.output_sizes());
    let nout = b.outputs.total();
    (0..count as usize).all(|k| {
        let s = space.decode(k, b.input_sizes());
        let score: Rational = b
            .inputs
            .iter()
            .enumerate()
            .map(|(xi, x)| {
                let a: Vec<usize> = x.iter().enumerate().map(|(p, &xp)| s.0[p][xp]).collect();
                &w.coefficients[xi * nout + b.outputs.index(&a)]
            })
            .sum();
        score <= w.bound
    })
}

/// Re-expands a local decomposition into a table.
pub fn expand_local(b: &BlackBox, weights: &[(DeterministicStrategy, Rational)]) -> Result<BlackBox, BoxError> {
    let mut table = vec![Rational::zero(); b.table.len()];
    for (s, w) in weights {
        let d = deterministic_box(b.input_sizes(), b.output_sizes(), s)?;
        for (t, p) in table.iter_mut().zip(&d.table) {
            if !p.is_zero() {
                *t += p * w;
            }
        }
    }
    BlackBox::new(b.input_sizes(), b.output_sizes(), table)
}

// ---------------------------------------------------------------------------
// CHSH

/// `Σ_{x₁,x₂} (-1)^{x₁x₂} E(x₁,x₂)` with `E = Σ_a (-1)^{a₁+a₂} P(a|x)`.
pub fn chsh_value(b: &BlackBox) -> Result<Rational, BoxError> {
    if b.input_sizes() != [2, 2] || b.output_sizes() != [2, 2] {
        return Err(BoxError::WrongShape(format!(
            "CHSH needs a 2-party box with 2 inputs and 2 outputs each, got inputs {:?} outputs {:?}",
            b.input_sizes(),
            b.output_sizes()
        )));
    }
    let mut total = Rational::zero();
    for x1 in 0..2 {
        for x2 in 0..2 {
            let mut e = Rational::zero();
            for a1 in 0..2 {
                for a2 in 0..2 {
                    let p = b.prob(&[x1, x2], &[a1, a2]);
                    if (a1 + a2) % 2 == 0 {
                        e += p;
                    } else {
                        e -= p;
                    }
                }
            }
            if x1 * x2 == 1 {
                total -= e;
            } else {
                total += e;
            }
        }
    }
    Ok(total)
}

/// Largest `|CHSH|` over the four sign patterns `(-1)^{x₁x₂ ⊕ s₁x₁ ⊕ s₂x₂}`,
/// i.e. over the relabeling orbit of the CHSH functional.
pub fn chsh_max(b: &BlackBox) -> Result<Rational, BoxError> {
    chsh_value(b)?;
    let mut best = Rational::zero();
    for s in 0..4usize {
        let mut total = Rational::zero();
        for x1 in 0..2 {
            for x2 in 0..2 {
                let mut e = Rational::zero();
                for a1 in 0..2 {
                    for a2 in 0..2 {
                        let p = b.prob(&[x1, x2], &[a1, a2]);
                        if (a1 + a2) % 2 == 0 {
                            e += p;
                        } else {
                            e -= p;
                        }
                    }
                }
                if (x1 * x2 + (s & 1) * x1 + (s >> 1) * x2) % 2 == 1 {
                    total -= e;
                } else {
                    total += e;
                }
            }
        }
        best = best.max(total.abs());
    }
    Ok(best)
}

// ---------------------------------------------------------------------------
// Relabelings

/// A local relabeling. Party `i` of the source box becomes party
/// `party_perm[i]`; its input `x` becomes `input_perms[i][x]` and, under
/// input `x`, its output `a` becomes `output_perms[i][x][a]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Relabeling {
    pub party_perm: Vec<usize>,
    pub input_perms: Vec<Vec<usize>>,
    pub output_perms: Vec<Vec<Vec<usize>>>,
}

fn is_permutation(p: &[usize]) -> bool {
    let mut seen = vec![false; p.len()];
    p.iter().all(|&v| v < p.len() && !std::mem::replace(&mut seen[v], true))
}

impl Relabeling {
    pub fn identity(input_sizes: &[usize], output_sizes: &[usize]) -> Self {
        Self {
            party_perm: (0..input_sizes.len()).collect(),
            input_perms: input_sizes.iter().map(|&n| (0..n).collect()).collect(),
            output_perms: input_sizes
                .iter()
                .zip(output_sizes)
                .map(|(&n, &m)| vec![(0..m).collect(); n])
                .collect(),
        }
    }

    pub fn is_identity(&self) -> bool {
        is_sorted_identity(&self.party_perm)
            && self.input_perms.iter().all(|p| is_sorted_identity(p))
            && self.output_perms.iter().flatten().all(|p| is_sorted_identity(p))
    }

    fn check(&self, b: &BlackBox) -> Result<(), BoxError> {
        let n = b.parties();
        let ok = self.party_perm.len() == n
            && is_permutation(&self.party_perm)
            && self.input_perms.len() == n
            && self.output_perms.len() == n
            && (0..n).all(|i| {
                self.input_perms[i].len() == b.input_sizes()[i]
                    && is_permutation(&self.input_perms[i])
                    && self.output_perms[i].len() == b.input_sizes()[i]
                    && self.output_perms[i]
                        .iter()
                        .all(|p| p.len() == b.output_sizes()[i] && is_permutation(p))
            });
        if ok {
            Ok(())
        } else {
            Err(BoxError::ShapeMismatch("relabeling does not match the box's alphabets".into()))
        }
    }
}

fn is_sorted_identity(p: &[usize]) -> bool {
    p.iter().enumerate().all(|(i, &v)| i == v)
}

pub fn relabel(b: &BlackBox, r: &Relabeling) -> Result<BlackBox, BoxError> {
    r.check(b)?;
    let n = b.parties();
    let mut new_in = vec![0; n];
    let mut new_out = vec![0; n];
    for i in 0..n {
        new_in[r.party_perm[i]] = b.input_sizes()[i];
        new_out[r.party_perm[i]] = b.output_sizes()[i];
    }
    let in_r = Radix::new(&new_in);
    let out_r = Radix::new(&new_out);
    let mut table = vec![Rational::zero(); b.table.len()];
    let mut a = vec![0; n];
    let mut nx = vec![0; n];
    let mut na = vec![0; n];
    for (xi, x) in b.inputs.iter().enumerate() {
        for i in 0..n {
            nx[r.party_perm[i]] = r.input_perms[i][x[i]];
        }
        let base = in_r.index(&nx) * out_r.total();
        for (ai, p) in b.row(xi).iter().enumerate() {
            b.outputs.decode_into(ai, &mut a);
            for i in 0..n {
                na[r.party_perm[i]] = r.output_perms[i][x[i]][a[i]];
            }
            table[base + out_r.index(&na)] = p.clone();
        }
    }
    Ok(BlackBox {
        inputs: in_r,
        outputs: out_r,
        table,
    })
}

/// Every local relabeling of boxes with the given alphabets, identity first.
/// Party permutations are restricted to those preserving the alphabets.
pub fn all_relabelings(input_sizes: &[usize], output_sizes: &[usize]) -> Vec<Relabeling> {
    let n = input_sizes.len();
    let party_perms: Vec<Vec<usize>> = permutations(n)
        .into_iter()
        .filter(|p| (0..n).all(|i| input_sizes[p[i]] == input_sizes[i] && output_sizes[p[i]] == output_sizes[i]))
        .collect();
    // Per party: every (input permutation, output permutation per input).
    let per_party: Vec<Vec<(Vec<usize>, Vec<Vec<usize>>)>> = (0..n)
        .map(|i| {
            let in_perms = permutations(input_sizes[i]);
            let out_perms = permutations(output_sizes[i]);
            let combos = Radix::new(&vec![out_perms.len(); input_sizes[i]]);
            let mut v = Vec::new();
            for ip in &in_perms {
                for c in combos.iter() {
                    v.push((ip.clone(), c.iter().map(|&k| out_perms[k].clone()).collect()));
                }
            }
            v
        })
        .collect();
    let choice = Radix::new(&per_party.iter().map(Vec::len).collect::<Vec<_>>());
    let mut out = Vec::new();
    for pp in &party_perms {
        for c in choice.iter() {
            out.push(Relabeling {
                party_perm: pp.clone(),
                input_perms: (0..n).map(|i| per_party[i][c[i]].0.clone()).collect(),
                output_perms: (0..n).map(|i| per_party[i][c[i]].1.clone()).collect(),
            });
        }
    }
    out
}

/// Permutations of `0..n` in lexicographic order.
pub(crate) fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    loop {
        out.push(cur.clone());
        // next lexicographic permutation
        let Some(i) = (1..n).rev().find(|&i| cur[i - 1] < cur[i]) else {
            break;
        };
        let j = (i..n).rev().find(|&j| cur[j] > cur[i - 1]).unwrap();
        cur.swap(i - 1, j);
        cur[i..].reverse();
    }
    out
}

/// Distribution over joint outputs as an ordered map (used for display).
pub fn row_distribution(b: &BlackBox, x: &[usize]) -> BTreeMap<Vec<usize>, Rational> {
    let xi = b.inputs.index(x);
    b.row(xi)
        .iter()
        .enumerate()
        .filter(|(_, p)| !p.is_zero())
        .map(|(ai, p)| (b.outputs.digits(ai), p.clone()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    #[test]
    fn uniform_coin_is_valid() {
        let b = BlackBox::from_entries(&[1], &[2], vec![(vec![0], vec![0], rat(1, 2)), (vec![0], vec![1], rat(1, 2))], false).unwrap();
        assert_eq!(b.parties(), 1);
        assert_eq!(b.prob(&[0], &[1]), &rat(1, 2));
    }

    #[test]
    fn normalization_and_sign_errors() {
        let err = BlackBox::from_entries(&[1], &[2], vec![(vec![0], vec![0], rat(1, 2)), (vec![0], vec![1], rat(1, 4))], false).unwrap_err();
        assert_eq!(err, BoxError::NotNormalized { x: vec![0], sum: rat(3, 4) });
        let err = BlackBox::new(&[1], &[2], vec![rat(3, 2), rat(-1, 2)]).unwrap_err();
        assert!(matches!(err, BoxError::NegativeProbability { .. }));
        let err = BlackBox::from_entries(&[1], &[2], vec![(vec![0], vec![0], int(1))], false).unwrap_err();
        assert!(matches!(err, BoxError::MissingEntry { .. }));
        let sparse = BlackBox::from_entries(&[1], &[2], vec![(vec![0], vec![0], int(1))], true).unwrap();
        assert_eq!(sparse.prob(&[0], &[1]), &Rational::zero());
        assert!(matches!(BlackBox::new(&[2], &[2, 2], vec![]), Err(BoxError::DimensionMismatch(_))));
    }

    #[test]
    fn pr_box_entries() {
        let pr = pr_box();
        assert_eq!(pr.prob(&[1, 1], &[0, 0]), &Rational::zero());
        assert_eq!(pr.prob(&[1, 1], &[0, 1]), &rat(1, 2));
        assert_eq!(pr.prob(&[1, 1], &[1, 0]), &rat(1, 2));
        assert_eq!(pr.prob(&[0, 0], &[0, 0]), &rat(1, 2));
        assert_eq!(pr.prob(&[0, 0], &[0, 1]), &Rational::zero());
    }

    #[test]
    fn signaling_box_has_witness_at_party_two() {
        // a1 = x2, a2 = 0: party 2's input is visible to party 1.
        let b = BlackBox::from_fn(&[2, 2], &[2, 2], |x, a| if a[0] == x[1] && a[1] == 0 { int(1) } else { int(0) }).unwrap();
        match check_no_signaling(&b) {
            NoSignaling::Violation(w) => {
                assert_eq!(w.party, 1);
                assert_ne!(w.probability, w.other_probability);
            }
            NoSignaling::Ok => panic!("expected a violation"),
        }
        assert!(matches!(marginal(&b, &[0], None), Err(BoxError::SignalingAmbiguity { .. })));
        let m = marginal(&b, &[0], Some(&[0, 1])).unwrap();
        assert_eq!(m.table.prob(&[0], &[1]), &int(1));
    }

    #[test]
    fn pr_marginals_are_uniform() {
        assert!(check_no_signaling(&pr_box()).is_ok());
        let m = marginal(&pr_box(), &[0], None).unwrap();
        for x in 0..2 {
            assert_eq!(m.table.prob(&[x], &[0]), &rat(1, 2));
            assert_eq!(m.table.prob(&[x], &[1]), &rat(1, 2));
        }
    }

    #[test]
    fn local_identity_marginal_is_point_mass() {
        let b = deterministic_box(&[2, 2], &[2, 2], &DeterministicStrategy(vec![vec![0, 1], vec![0, 1]])).unwrap();
        let m = marginal(&b, &[1], None).unwrap();
        assert_eq!(m.table.prob(&[1], &[1]), &int(1));
        assert_eq!(m.table.prob(&[0], &[0]), &int(1));
    }

    #[test]
    fn chsh_of_pr_uniform_and_deterministic() {
        assert_eq!(chsh_value(&pr_box()).unwrap(), int(4));
        assert_eq!(chsh_value(&uniform_box(&[2, 2], &[2, 2]).unwrap()).unwrap(), int(0));
        let zero = deterministic_box(&[2, 2], &[2, 2], &DeterministicStrategy(vec![vec![0, 0], vec![0, 0]])).unwrap();
        assert_eq!(chsh_value(&zero).unwrap(), int(2));
        assert!(matches!(chsh_value(&uniform_box(&[3, 2], &[2, 2]).unwrap()), Err(BoxError::WrongShape(_))));
    }

    #[test]
    fn locality_verdicts() {
        let u = uniform_box(&[2, 2], &[2, 2]).unwrap();
        match is_local(&u, DEFAULT_LOCAL_CAP).unwrap() {
            Locality::Local { weights } => assert_eq!(expand_local(&u, &weights).unwrap(), u),
            other => panic!("{other:?}"),
        }
        match is_local(&pr_box(), DEFAULT_LOCAL_CAP).unwrap() {
            Locality::Nonlocal { witness } => assert!(witness_holds(&pr_box(), &witness)),
            other => panic!("{other:?}"),
        }
        assert!(matches!(is_local(&pr_box(), 15), Err(BoxError::TooLarge { count: 16, cap: 15 })));
    }

    #[test]
    fn noisy_pr_below_local_threshold_is_local() {
        // (1/4)·PR + (3/4)·uniform has CHSH 1, inside the local polytope.
        let u = uniform_box(&[2, 2], &[2, 2]).unwrap();
        let b = pr_box().mix(&u, &rat(1, 4)).unwrap();
        assert_eq!(chsh_value(&b).unwrap(), int(1));
        match is_local(&b, DEFAULT_LOCAL_CAP).unwrap() {
            Locality::Local { weights } => assert_eq!(expand_local(&b, &weights).unwrap(), b),
            other => panic!("{other:?}"),
        }
        // (3/4)·PR + (1/4)·uniform has CHSH 3 and no zero cells.
        let b = pr_box().mix(&u, &rat(3, 4)).unwrap();
        match is_local(&b, DEFAULT_LOCAL_CAP).unwrap() {
            Locality::Nonlocal { witness } => assert!(witness_holds(&b, &witness)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn relabelings() {
        let pr = pr_box();
        let id = Relabeling::identity(pr.input_sizes(), pr.output_sizes());
        assert!(id.is_identity());
        assert_eq!(relabel(&pr, &id).unwrap(), pr);

        let mut swap = id.clone();
        swap.party_perm = vec![1, 0];
        assert_eq!(relabel(&pr, &swap).unwrap(), pr);

        let mut flip = id.clone();
        flip.output_perms[0][0] = vec![1, 0];
        let half = relabel(&pr, &flip).unwrap();
        // Flipping one input's outputs moves the violation to another CHSH form.
        assert_eq!(chsh_value(&half).unwrap(), int(0));
        assert_eq!(chsh_max(&half).unwrap(), int(4));
        assert!(!is_local(&half, DEFAULT_LOCAL_CAP).unwrap().is_local());
        flip.output_perms[0][1] = vec![1, 0];
        let flipped = relabel(&pr, &flip).unwrap();
        assert_ne!(flipped, pr);
        assert_eq!(chsh_value(&flipped).unwrap().abs(), int(4));
        assert!(!is_local(&flipped, DEFAULT_LOCAL_CAP).unwrap().is_local());

        let mut bad = id;
        bad.input_perms[0] = vec![0, 0];
        assert!(matches!(relabel(&pr, &bad), Err(BoxError::ShapeMismatch(_))));
        assert_eq!(all_relabelings(&[2, 2], &[2, 2]).len(), 2 * 4 * 16);
    }

    #[test]
    fn chsh_orbit_maximum_is_relabeling_invariant() {
        let noisy = pr_box().mix(&uniform_box(&[2, 2], &[2, 2]).unwrap(), &rat(3, 5)).unwrap();
        let skew = BlackBox::from_fn(&[2, 2], &[2, 2], |x, a| {
            let base = if (a[0] ^ a[1]) == (x[0] | x[1]) { rat(3, 8) } else { rat(1, 8) };
            base
        })
        .unwrap();
        for b in [pr_box(), noisy, skew] {
            let m = chsh_max(&b).unwrap();
            for r in all_relabelings(&[2, 2], &[2, 2]) {
                assert_eq!(chsh_max(&relabel(&b, &r).unwrap()).unwrap(), m);
            }
        }
        assert_eq!(chsh_max(&pr_box()).unwrap(), int(4));
    }

    #[test]
    fn json_round_trip_omits_zeros() {
        let pr = pr_box();
        let doc = pr.to_document();
        assert_eq!(doc.table.len(), 8);
        assert_eq!(BlackBox::from_json(&pr.to_json()).unwrap(), pr);
        assert!(pr.to_json().contains("\"p\":\"1/2\""));
    }

    #[test]
    fn permutations_are_lexicographic() {
        assert_eq!(permutations(3).len(), 6);
        assert_eq!(permutations(3)[1], vec![0, 2, 1]);
        assert_eq!(permutations(1), vec![vec![0]]);
    }
}
