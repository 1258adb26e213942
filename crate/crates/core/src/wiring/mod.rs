//! Adaptive wiring protocols over a bank of shared boxes.
//!
//! Each party sees only the shared random value λ, its own input and the
//! outputs it has received so far. From that view it either feeds an input
//! into one side of a bank instance it co-owns or stops and announces an
//! output. No communication.

mod enumerate;
mod exec;
mod json;

use std::collections::HashSet;

use rustc_hash::FxHashSet;
use std::fmt;
use std::sync::Arc;

use num_traits::{One, Signed, Zero};

use crate::boxcore::{self, BlackBox, BoxError};
use crate::radix::Radix;
use crate::rational::Rational;

pub use enumerate::{enumerate_strategies, party_strategy_count, StrategySpace, Tree, TreeStrategy, DEFAULT_STRATEGY_CAP};
pub use exec::{execute_exact, execute_sample, induced_box, Executor, OutcomeDistribution, RunTrace, OutcomeDocument, OutcomeEntry};
pub use json::{tabulate, ProtocolDocument, TableStrategy, DEFAULT_TABLE_CAP};

/// A party's local view, encoded however the strategy likes.
pub type State = Vec<u32>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Move {
    Use { instance: usize, input: usize },
    Stop,
}

/// A party's adaptive rule. `start` builds the initial view from λ and the
/// party's input; `observe` appends a box output to it.
pub trait Strategy: Send + Sync + fmt::Debug {
    fn start(&self, lambda: u32, input: usize) -> State;
    fn next_move(&self, state: &[u32]) -> Move;
    fn observe(&self, state: &[u32], output: usize) -> State;
    /// `None` marks an undefined output, which validation rejects.
    fn output(&self, state: &[u32]) -> Option<usize>;
}

// ---------------------------------------------------------------------------
// Box templates

/// A nonsignaling box used as a bank template. Side `s` of an instance is
/// party `s` of the template.
#[derive(Debug, Clone)]
pub struct Template {
    name: String,
    table: BlackBox,
    /// `marginals[mask]` is the template's table with every side outside
    /// `mask` summed out; only cells with zeros outside `mask` are filled.
    marginals: Vec<Vec<Rational>>,
}

impl Template {
    pub fn pr() -> Self {
        Self::new("PR", boxcore::pr_box()).expect("the PR box is nonsignaling")
    }

    pub fn new(name: &str, table: BlackBox) -> Result<Self, WiringError> {
        if let boxcore::NoSignaling::Violation(w) = boxcore::check_no_signaling(&table) {
            return Err(WiringError::SignalingTemplate(format!("{name}: {w:?}")));
        }
        let sides = table.parties();
        let ins = table.input_radix().clone();
        let outs = table.output_radix().clone();
        let mut marginals = Vec::with_capacity(1 << sides);
        let mut x = vec![0; sides];
        let mut a = vec![0; sides];
        for mask in 0..1usize << sides {
            let mut m = vec![Rational::zero(); ins.total() * outs.total()];
            for xi in 0..ins.total() {
                ins.decode_into(xi, &mut x);
                if (0..sides).any(|s| mask >> s & 1 == 0 && x[s] != 0) {
                    continue;
                }
                for (ai, p) in table.row(xi).iter().enumerate() {
                    if p.is_zero() {
                        continue;
                    }
                    outs.decode_into(ai, &mut a);
                    for (s, v) in a.iter_mut().enumerate() {
                        if mask >> s & 1 == 0 {
                            *v = 0;
                        }
                    }
                    m[xi * outs.total() + outs.index(&a)] += p;
                }
            }
            marginals.push(m);
        }
        Ok(Self {
            name: name.to_string(),
            table,
            marginals,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn table(&self) -> &BlackBox {
        &self.table
    }

    pub fn sides(&self) -> usize {
        self.table.parties()
    }

    pub fn input_size(&self, side: usize) -> usize {
        self.table.input_sizes()[side]
    }

    pub fn output_size(&self, side: usize) -> usize {
        self.table.output_sizes()[side]
    }

    fn marginal(&self, mask: usize, x: &[usize], a: &[usize]) -> &Rational {
        let outs = self.table.output_radix();
        &self.marginals[mask][self.table.input_radix().index(x) * outs.total() + outs.index(a)]
    }

    /// Distribution of side `side`'s output for input `input`, conditioned on
    /// the sides already committed. Zero-probability outputs are omitted.
    pub fn branches(&self, committed: &[Option<(u32, u32)>], side: usize, input: usize) -> Vec<(usize, Rational)> {
        let k = self.sides();
        let mut x = vec![0; k];
        let mut a = vec![0; k];
        let mut mask = 0;
        for (s, c) in committed.iter().enumerate() {
            if let Some((xi, ai)) = c {
                x[s] = *xi as usize;
                a[s] = *ai as usize;
                mask |= 1 << s;
            }
        }
        let den = self.marginal(mask, &x, &a).clone();
        x[side] = input;
        let mut out = Vec::with_capacity(self.output_size(side));
        for o in 0..self.output_size(side) {
            a[side] = o;
            let num = self.marginal(mask | 1 << side, &x, &a);
            if !num.is_zero() {
                out.push((o, num / &den));
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct BankInstance {
    pub template: Arc<Template>,
    /// 0-based parties; `owners[s]` holds side `s`.
    pub owners: Vec<usize>,
}

impl BankInstance {
    pub fn pr(a: usize, b: usize) -> Self {
        Self {
            template: Arc::new(Template::pr()),
            owners: vec![a, b],
        }
    }

    pub fn side_of(&self, party: usize) -> Option<usize> {
        self.owners.iter().position(|&p| p == party)
    }
}

// ---------------------------------------------------------------------------
// Protocols

#[derive(Debug, Clone)]
pub struct WiringProtocol {
    pub input_sizes: Vec<usize>,
    pub output_sizes: Vec<usize>,
    /// Shared randomness: `(value, weight)` pairs.
    pub lambda: Vec<(u32, Rational)>,
    pub bank: Vec<BankInstance>,
    pub strategies: Vec<Arc<dyn Strategy>>,
}

impl WiringProtocol {
    pub fn parties(&self) -> usize {
        self.input_sizes.len()
    }

    pub fn input_radix(&self) -> Radix {
        Radix::new(&self.input_sizes)
    }

    pub fn output_radix(&self) -> Radix {
        Radix::new(&self.output_sizes)
    }

    /// Symbolic walk of every party's strategy over every λ, input and
    /// history of box outputs, without sampling.
    pub fn validate(self) -> Result<ValidatedProtocol, WiringError> {
        let n = self.parties();
        if n == 0 || self.output_sizes.len() != n || self.strategies.len() != n {
            return Err(WiringError::DimensionMismatch(format!(
                "{} input alphabets, {} output alphabets, {} strategies",
                n,
                self.output_sizes.len(),
                self.strategies.len()
            )));
        }
        if self.lambda.is_empty() {
            return Err(WiringError::SharedRandomness("empty support".into()));
        }
        if self.lambda.iter().any(|(_, w)| w.is_negative()) {
            return Err(WiringError::SharedRandomness("negative weight".into()));
        }
        let total: Rational = self.lambda.iter().map(|(_, w)| w).sum();
        if !total.is_one() {
            return Err(WiringError::SharedRandomness(format!(
                "weights sum to {}",
                crate::rational::format_rational(&total)
            )));
        }
        let mut seen = HashSet::new();
        if let Some((v, _)) = self.lambda.iter().find(|(v, _)| !seen.insert(*v)) {
            return Err(WiringError::SharedRandomness(format!("value {v} listed twice")));
        }
        for (k, inst) in self.bank.iter().enumerate() {
            let mut owners = inst.owners.clone();
            owners.sort_unstable();
            owners.dedup();
            if inst.owners.len() != inst.template.sides() || owners.len() != inst.owners.len() || owners.iter().any(|&p| p >= n) {
                return Err(WiringError::DimensionMismatch(format!(
                    "instance {k} needs {} distinct owners among {n} parties, got {:?}",
                    inst.template.sides(),
                    inst.owners
                )));
            }
        }
        for party in 0..n {
            for (lambda, _) in &self.lambda {
                for input in 0..self.input_sizes[party] {
                    let mut walk = Walk {
                        protocol: &self,
                        party,
                        lambda: *lambda,
                        input,
                        visited: FxHashSet::default(),
                    };
                    let s = self.strategies[party].start(*lambda, input);
                    walk.visit(s, vec![0; self.bank.len().div_ceil(64)], 0)?;
                }
            }
        }
        Ok(ValidatedProtocol(Arc::new(self)))
    }
}

struct Walk<'a> {
    protocol: &'a WiringProtocol,
    party: usize,
    lambda: u32,
    input: usize,
    visited: FxHashSet<(State, Vec<u64>)>,
}

impl Walk<'_> {
    fn visit(&mut self, state: State, used: Vec<u64>, step: usize) -> Result<(), WiringError> {
        if !self.visited.insert((state.clone(), used.clone())) {
            return Ok(());
        }
        let strategy = &self.protocol.strategies[self.party];
        let fail = |kind| {
            Err(WiringError::Violation(ProtocolViolation {
                kind,
                lambda: self.lambda,
                party: self.party,
                input: self.input,
                step,
            }))
        };
        match strategy.next_move(&state) {
            Move::Stop => match strategy.output(&state) {
                Some(o) if o < self.protocol.output_sizes[self.party] => Ok(()),
                Some(o) => fail(ViolationKind::BadOutput(o)),
                None => fail(ViolationKind::UndefinedOutput),
            },
            Move::Use { instance, input } => {
                let Some(inst) = self.protocol.bank.get(instance) else {
                    return fail(ViolationKind::UnknownInstance(instance));
                };
                let Some(side) = inst.side_of(self.party) else {
                    return fail(ViolationKind::NotOwner(instance));
                };
                if used[instance / 64] >> (instance % 64) & 1 == 1 {
                    return fail(ViolationKind::DoubleUse(instance));
                }
                if input >= inst.template.input_size(side) {
                    return fail(ViolationKind::BadInput { instance, input });
                }
                let mut used = used;
                used[instance / 64] |= 1 << (instance % 64);
                for o in 0..inst.template.output_size(side) {
                    self.visit(strategy.observe(&state, o), used.clone(), step + 1)?;
                }
                Ok(())
            }
        }
    }
}

/// A protocol that passed [`WiringProtocol::validate`].
#[derive(Debug, Clone)]
pub struct ValidatedProtocol(Arc<WiringProtocol>);

impl ValidatedProtocol {
    pub fn protocol(&self) -> &WiringProtocol {
        &self.0
    }

    /// Skips the walk; for callers whose strategies are valid by construction.
    pub(crate) fn assume_valid(p: WiringProtocol) -> Self {
        Self(Arc::new(p))
    }
}

impl std::ops::Deref for ValidatedProtocol {
    type Target = WiringProtocol;
    fn deref(&self) -> &WiringProtocol {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViolationKind {
    UnknownInstance(usize),
    NotOwner(usize),
    DoubleUse(usize),
    BadInput { instance: usize, input: usize },
    BadOutput(usize),
    UndefinedOutput,
}

/// First failure found by validation. `input` is the party's own input:
/// strategies never see anyone else's.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProtocolViolation {
    pub kind: ViolationKind,
    pub lambda: u32,
    pub party: usize,
    pub input: usize,
    pub step: usize,
}

impl fmt::Display for ProtocolViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:?} by party {} at step {} (lambda {}, input {})",
            self.kind,
            self.party + 1,
            self.step,
            self.lambda,
            self.input
        )
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WiringError {
    #[error("invalid protocol: {0}")]
    Violation(ProtocolViolation),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("shared randomness: {0}")]
    SharedRandomness(String),
    #[error("template is signaling: {0}")]
    SignalingTemplate(String),
    #[error("induced box signals: {0}")]
    Signaling(String),
    #[error("{count} exceeds the cap of {cap}")]
    TooLarge { count: u128, cap: u128 },
    #[error("invalid protocol document: {0}")]
    Format(String),
    #[error(transparent)]
    Box(#[from] BoxError),
}
