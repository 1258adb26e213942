//! Exhaustive enumeration of deterministic adaptive strategies.
//!
//! For a fixed input, a deterministic strategy is a decision tree: a leaf
//! announces an output, an inner node feeds an input into an unused owned
//! instance and branches on its output. A party's strategy picks one tree per
//! input value.

use std::collections::HashMap;
use std::sync::Arc;

use num_traits::One;

use super::{BankInstance, Move, State, Strategy, ValidatedProtocol, WiringError, WiringProtocol};
use crate::radix::Radix;
use crate::rational::Rational;

/// Default cap on the number of strategy profiles.
pub const DEFAULT_STRATEGY_CAP: u128 = 100_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Tree {
    Output(usize),
    Use {
        instance: usize,
        input: usize,
        /// One subtree per possible output of the instance.
        children: Vec<Arc<Tree>>,
    },
}

impl Tree {
    fn at<'a>(&'a self, history: &[u32]) -> &'a Tree {
        let mut t = self;
        for &o in history {
            match t {
                Tree::Use { children, .. } => t = &children[o as usize],
                Tree::Output(_) => unreachable!("history runs past a leaf"),
            }
        }
        t
    }

    pub fn uses(&self) -> usize {
        match self {
            Tree::Output(_) => 0,
            Tree::Use { children, .. } => 1 + children.iter().map(|c| c.uses()).max().unwrap_or(0),
        }
    }
}

/// One decision tree per input value. State: `[input, α₁, α₂, …]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TreeStrategy {
    pub per_input: Vec<Arc<Tree>>,
}

impl Strategy for TreeStrategy {
    fn start(&self, _lambda: u32, input: usize) -> State {
        vec![input as u32]
    }

    fn next_move(&self, state: &[u32]) -> Move {
        match self.per_input[state[0] as usize].at(&state[1..]) {
            Tree::Output(_) => Move::Stop,
            Tree::Use { instance, input, .. } => Move::Use {
                instance: *instance,
                input: *input,
            },
        }
    }

    fn observe(&self, state: &[u32], output: usize) -> State {
        let mut s = state.to_vec();
        s.push(output as u32);
        s
    }

    fn output(&self, state: &[u32]) -> Option<usize> {
        match self.per_input[state[0] as usize].at(&state[1..]) {
            Tree::Output(o) => Some(*o),
            Tree::Use { .. } => None,
        }
    }
}

/// Number of decision trees for one input value, as a closed recursion over
/// the set `U` of owned instances already used:
/// `T(U) = |O| + Σ_{b ∉ U} |Y_b| · T(U ∪ {b})^{|A_b|}`.
fn tree_count(outputs: usize, owned: &[(usize, usize, usize)], used: u64, memo: &mut HashMap<u64, Option<u128>>) -> Option<u128> {
    if let Some(&c) = memo.get(&used) {
        return c;
    }
    let mut total = Some(outputs as u128);
    for (k, &(_, ys, os)) in owned.iter().enumerate() {
        if used >> k & 1 == 1 {
            continue;
        }
        let sub = tree_count(outputs, owned, used | 1 << k, memo);
        let term = sub.and_then(|s| s.checked_pow(os as u32)).and_then(|p| p.checked_mul(ys as u128));
        total = total.zip(term).and_then(|(t, x)| t.checked_add(x));
    }
    memo.insert(used, total);
    total
}

/// `(instance, input size, output size)` for each instance the party owns.
fn owned_sides(bank: &[BankInstance], party: usize) -> Vec<(usize, usize, usize)> {
    bank.iter()
        .enumerate()
        .filter_map(|(b, inst)| {
            inst.side_of(party)
                .map(|s| (b, inst.template.input_size(s), inst.template.output_size(s)))
        })
        .collect()
}

/// Deterministic strategies for one party: `T(∅)^{|X|}`. `None` on overflow.
pub fn party_strategy_count(bank: &[BankInstance], party: usize, inputs: usize, outputs: usize) -> Option<u128> {
    let owned = owned_sides(bank, party);
    if owned.len() > 64 {
        return None;
    }
    tree_count(outputs, &owned, 0, &mut HashMap::new())?.checked_pow(inputs as u32)
}

fn trees(outputs: usize, owned: &[(usize, usize, usize)], used: u64, memo: &mut HashMap<u64, Arc<Vec<Arc<Tree>>>>) -> Arc<Vec<Arc<Tree>>> {
    if let Some(t) = memo.get(&used) {
        return t.clone();
    }
    let mut out: Vec<Arc<Tree>> = (0..outputs).map(|o| Arc::new(Tree::Output(o))).collect();
    for (k, &(b, ys, os)) in owned.iter().enumerate() {
        if used >> k & 1 == 1 {
            continue;
        }
        let sub = trees(outputs, owned, used | 1 << k, memo);
        let combos = Radix::new(&vec![sub.len(); os]);
        for input in 0..ys {
            for c in 0..combos.total() {
                let children = combos.digits(c).into_iter().map(|k| sub[k].clone()).collect();
                out.push(Arc::new(Tree::Use { instance: b, input, children }));
            }
        }
    }
    let out = Arc::new(out);
    memo.insert(used, out.clone());
    out
}

/// Every deterministic strategy profile (single λ) for a bank.
#[derive(Debug, Clone)]
pub struct StrategySpace {
    input_sizes: Vec<usize>,
    output_sizes: Vec<usize>,
    bank: Vec<BankInstance>,
    /// Per party, the trees available for any single input value.
    trees: Vec<Arc<Vec<Arc<Tree>>>>,
    count: u128,
}

impl StrategySpace {
    pub fn count(&self) -> u128 {
        self.count
    }

    pub fn parties(&self) -> usize {
        self.input_sizes.len()
    }

    pub fn bank(&self) -> &[BankInstance] {
        &self.bank
    }

    /// Trees available to `party` for each of its input values.
    pub fn party_trees(&self, party: usize) -> &[Arc<Tree>] {
        &self.trees[party]
    }

    /// Number of strategies for one party.
    pub fn party_count(&self, party: usize) -> usize {
        self.trees[party].len().pow(self.input_sizes[party] as u32)
    }

    /// The `index`-th strategy of `party`: tree choices for each input, little-endian.
    pub fn party_strategy(&self, party: usize, index: usize) -> TreeStrategy {
        let t = &self.trees[party];
        let mut rest = index;
        let per_input = (0..self.input_sizes[party])
            .map(|_| {
                let k = rest % t.len();
                rest /= t.len();
                t[k].clone()
            })
            .collect();
        TreeStrategy { per_input }
    }

    /// Assembles a profile from per-party strategy indices.
    pub fn profile(&self, indices: &[usize]) -> ValidatedProtocol {
        let strategies = indices
            .iter()
            .enumerate()
            .map(|(p, &i)| Arc::new(self.party_strategy(p, i)) as Arc<dyn Strategy>)
            .collect();
        ValidatedProtocol::assume_valid(WiringProtocol {
            input_sizes: self.input_sizes.clone(),
            output_sizes: self.output_sizes.clone(),
            lambda: vec![(0, Rational::one())],
            bank: self.bank.clone(),
            strategies,
        })
    }

    /// Profile number `k` in little-endian party order.
    pub fn nth(&self, k: u128) -> ValidatedProtocol {
        let mut rest = k;
        let indices: Vec<usize> = (0..self.parties())
            .map(|p| {
                let c = self.party_count(p) as u128;
                let i = rest % c;
                rest /= c;
                i as usize
            })
            .collect();
        self.profile(&indices)
    }

    pub fn iter(&self) -> impl Iterator<Item = ValidatedProtocol> + '_ {
        (0..self.count).map(|k| self.nth(k))
    }
}

/// Builds the space of all deterministic strategy profiles, refusing when
/// the number of profiles exceeds `cap`.
pub fn enumerate_strategies(input_sizes: &[usize], output_sizes: &[usize], bank: &[BankInstance], cap: u128) -> Result<StrategySpace, WiringError> {
    let n = input_sizes.len();
    if output_sizes.len() != n {
        return Err(WiringError::DimensionMismatch("alphabet lists differ in length".into()));
    }
    let mut count: Option<u128> = Some(1);
    for p in 0..n {
        count = count
            .zip(party_strategy_count(bank, p, input_sizes[p], output_sizes[p]))
            .and_then(|(c, k)| c.checked_mul(k));
    }
    let count = count.unwrap_or(u128::MAX);
    if count > cap {
        return Err(WiringError::TooLarge { count, cap });
    }
    let trees: Vec<_> = (0..n)
        .map(|p| trees(output_sizes[p], &owned_sides(bank, p), 0, &mut HashMap::new()))
        .collect();
    Ok(StrategySpace {
        input_sizes: input_sizes.to_vec(),
        output_sizes: output_sizes.to_vec(),
        bank: bank.to_vec(),
        trees,
        count,
    })
}
