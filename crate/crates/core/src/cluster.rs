//! Five-party ring parity constraints, the local-assignment paradox, and the
//! exhaustive search for PR-box protocols meeting the constraints.
//!
//! Parties are 0-based in code and 1-based in JSON. Every party has binary
//! input ("setting") and binary output.

use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::wiring::{
    enumerate_strategies, execute_exact, induced_box, party_strategy_count, BankInstance, OutcomeDistribution,
    ProtocolDocument, StrategySpace, Tree, ValidatedProtocol, WiringError, DEFAULT_STRATEGY_CAP, DEFAULT_TABLE_CAP,
};

pub const RING: usize = 5;

/// Why deterministic profiles are enough; repeated in every search report.
pub const DETERMINISTIC_REDUCTION: &str = "a shared-randomness mixture meets a probability-1 parity event iff every \
    deterministic profile in its support does, so refuting all deterministic profiles refutes all randomized protocols";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClusterError {
    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("search space of {count} profiles exceeds the cap of {cap}")]
    TooLarge { count: u128, cap: u128 },
    #[error("fast and generic evaluation disagree on assignment {assignment}, profile {profile}, constraint {constraint}")]
    CrossCheck { assignment: usize, profile: u64, constraint: usize },
    #[error(transparent)]
    Wiring(#[from] WiringError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Term {
    pub party: usize,
    pub setting: usize,
}

/// The outputs of the listed parties, each at its listed setting, sum to
/// `target` mod 2.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ParityConstraint {
    terms: Vec<Term>,
    target: bool,
}

impl ParityConstraint {
    pub fn new(terms: Vec<Term>, target: bool) -> Result<Self, ClusterError> {
        for (k, t) in terms.iter().enumerate() {
            if terms[..k].contains(t) {
                return Err(ClusterError::InvalidConstraint(format!("duplicate term {t:?}")));
            }
            if terms[..k].iter().any(|u| u.party == t.party) {
                return Err(ClusterError::InvalidConstraint(format!("party {} appears at two settings", t.party + 1)));
            }
        }
        Ok(Self { terms, target })
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn target(&self) -> bool {
        self.target
    }

    pub fn parties(&self) -> Vec<usize> {
        self.terms.iter().map(|t| t.party).collect()
    }

    /// Does the local assignment `outputs[party][setting]` meet the constraint?
    pub fn holds_for(&self, outputs: &[[bool; 2]]) -> bool {
        self.terms.iter().fold(false, |acc, t| acc ^ outputs[t.party][t.setting]) == self.target
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintSet {
    parties: usize,
    constraints: Vec<ParityConstraint>,
}

impl ConstraintSet {
    pub fn new(parties: usize, constraints: Vec<ParityConstraint>) -> Result<Self, ClusterError> {
        for c in &constraints {
            if let Some(t) = c.terms.iter().find(|t| t.party >= parties || t.setting > 1) {
                return Err(ClusterError::InvalidConstraint(format!("term {t:?} outside {parties} binary-input parties")));
            }
        }
        Ok(Self { parties, constraints })
    }

    pub fn parties(&self) -> usize {
        self.parties
    }

    pub fn constraints(&self) -> &[ParityConstraint] {
        &self.constraints
    }

    /// Relabels party `p` as `p + shift` (mod the party count).
    pub fn rotate(&self, shift: usize) -> Self {
        let n = self.parties;
        let constraints = self
            .constraints
            .iter()
            .map(|c| ParityConstraint {
                terms: c.terms.iter().map(|t| Term { party: (t.party + shift) % n, setting: t.setting }).collect(),
                target: c.target,
            })
            .collect();
        Self { parties: n, constraints }
    }

    /// Same constraints as a set, ignoring term and constraint order.
    pub fn same_as(&self, other: &Self) -> bool {
        let canon = |s: &Self| {
            let mut v: Vec<(Vec<Term>, bool)> = s
                .constraints
                .iter()
                .map(|c| {
                    let mut t = c.terms.clone();
                    t.sort();
                    (t, c.target)
                })
                .collect();
            v.sort();
            v
        };
        self.parties == other.parties && canon(self) == canon(other)
    }

    /// Copy with one constraint's target flipped.
    pub fn with_flipped_target(&self, index: usize) -> Self {
        let mut s = self.clone();
        s.constraints[index].target = !s.constraints[index].target;
        s
    }

    pub fn to_document(&self) -> ConstraintSetDocument {
        ConstraintSetDocument {
            parties: self.parties,
            constraints: self
                .constraints
                .iter()
                .map(|c| ConstraintDocument {
                    terms: c.terms.iter().map(|t| TermDocument { party: t.party + 1, setting: t.setting }).collect(),
                    target: c.target as u8,
                })
                .collect(),
        }
    }

    pub fn from_document(doc: &ConstraintSetDocument) -> Result<Self, ClusterError> {
        let constraints = doc
            .constraints
            .iter()
            .map(|c| {
                if c.target > 1 {
                    return Err(ClusterError::InvalidConstraint(format!("target {} is not a bit", c.target)));
                }
                let terms = c
                    .terms
                    .iter()
                    .map(|t| match t.party {
                        0 => Err(ClusterError::InvalidConstraint("parties are numbered from 1".into())),
                        p => Ok(Term { party: p - 1, setting: t.setting }),
                    })
                    .collect::<Result<_, _>>()?;
                ParityConstraint::new(terms, c.target == 1)
            })
            .collect::<Result<_, _>>()?;
        Self::new(doc.parties, constraints)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSetDocument {
    pub parties: usize,
    pub constraints: Vec<ConstraintDocument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintDocument {
    pub terms: Vec<TermDocument>,
    pub target: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermDocument {
    pub party: usize,
    pub setting: usize,
}

/// The five ring constraints `a_i + a'_{i+1} + a_{i+2} = 0` (unprimed =
/// setting 0, primed = setting 1) and `Σ a'_i = 1`.
pub fn cluster_constraints() -> ConstraintSet {
    let mut constraints: Vec<ParityConstraint> = (0..RING)
        .map(|i| ParityConstraint {
            terms: vec![
                Term { party: i, setting: 0 },
                Term { party: (i + 1) % RING, setting: 1 },
                Term { party: (i + 2) % RING, setting: 0 },
            ],
            target: false,
        })
        .collect();
    constraints.push(ParityConstraint {
        terms: (0..RING).map(|p| Term { party: p, setting: 1 }).collect(),
        target: true,
    });
    ConstraintSet { parties: RING, constraints }
}

/// Does the parity event hold with probability exactly 1 for every setting
/// of the parties the constraint leaves free? `source` gives the exact
/// output distribution for an input tuple.
pub fn satisfies<F>(source: F, input_sizes: &[usize], constraint: &ParityConstraint) -> Result<bool, ClusterError>
where
    F: Fn(&[usize]) -> Result<OutcomeDistribution, WiringError>,
{
    if let Some(t) = constraint.terms.iter().find(|t| t.party >= input_sizes.len() || t.setting >= input_sizes[t.party]) {
        return Err(ClusterError::ShapeMismatch(format!("term {t:?} outside input alphabets {input_sizes:?}")));
    }
    let parties = constraint.parties();
    let free: Vec<usize> = (0..input_sizes.len()).filter(|p| !parties.contains(p)).collect();
    let completions = crate::radix::Radix::new(&free.iter().map(|&p| input_sizes[p]).collect::<Vec<_>>());
    let mut x = vec![0; input_sizes.len()];
    for t in &constraint.terms {
        x[t.party] = t.setting;
    }
    for c in completions.iter() {
        for (k, &p) in free.iter().enumerate() {
            x[p] = c[k];
        }
        let d = source(&x)?;
        if d.output_radix().sizes().len() != input_sizes.len() {
            return Err(ClusterError::ShapeMismatch("distribution has the wrong number of parties".into()));
        }
        if !d.parity_probability(&parties, constraint.target as usize).is_one() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `satisfies` for a protocol, via the exact executor.
pub fn protocol_satisfies(protocol: &ValidatedProtocol, constraint: &ParityConstraint) -> Result<bool, ClusterError> {
    satisfies(|x| execute_exact(protocol, x), &protocol.input_sizes, constraint)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LocalSearchReport {
    pub satisfying_assignments: u64,
    pub space: u64,
    pub max_satisfiable: usize,
    pub constraints: usize,
}

/// Every deterministic local assignment: bit `2p + s` of the assignment is
/// party `p`'s output at setting `s`.
pub fn local_search(set: &ConstraintSet) -> LocalSearchReport {
    let n = set.parties;
    let space = 1u64 << (2 * n);
    let mut satisfying = 0;
    let mut best = 0;
    let mut outputs = vec![[false; 2]; n];
    for bits in 0..space {
        for (p, o) in outputs.iter_mut().enumerate() {
            *o = [bits >> (2 * p) & 1 == 1, bits >> (2 * p + 1) & 1 == 1];
        }
        let k = set.constraints.iter().filter(|c| c.holds_for(&outputs)).count();
        best = best.max(k);
        if k == set.constraints.len() {
            satisfying += 1;
        }
    }
    LocalSearchReport {
        satisfying_assignments: satisfying,
        space,
        max_satisfiable: best,
        constraints: set.constraints.len(),
    }
}

pub fn ghz_local_search() -> LocalSearchReport {
    local_search(&cluster_constraints())
}

// ---------------------------------------------------------------------------
// Protocol search

#[derive(Debug, Clone)]
pub struct SearchOptions {
    pub cap: u128,
    /// Box placements to try, each a list of owner pairs; `None` means every
    /// multiset of pairs.
    pub assignments: Option<Vec<Vec<(usize, usize)>>>,
    /// Profiles per placement re-evaluated through the generic executor.
    pub cross_checks: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { cap: DEFAULT_STRATEGY_CAP, assignments: None, cross_checks: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counterexample {
    /// 1-based owner pairs, one per box.
    pub assignment: Vec<[usize; 2]>,
    /// Index into the placement's strategy space (party 0 fastest).
    pub profile: u64,
    pub protocol: ProtocolDocument,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchReport {
    pub boxes: usize,
    pub assignments_tested: u64,
    pub strategies_tested: u64,
    pub success: bool,
    pub successful_profiles: u64,
    pub cross_checked: u64,
    pub reduction: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Counterexample>,
}

/// Every multiset of `k` unordered pairs from `n` parties, in lexicographic order.
pub fn pair_multisets(n: usize, k: usize) -> Vec<Vec<(usize, usize)>> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(pairs: &[(usize, usize)], start: usize, k: usize, cur: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..pairs.len() {
            cur.push(pairs[i]);
            rec(pairs, i, k, cur, out);
            cur.pop();
        }
    }
    rec(&pairs, 0, k, &mut cur, &mut out);
    out
}

/// One party's deterministic behaviour with at most one PR box: per input,
/// the box input it feeds (if any) and its output for each box result.
#[derive(Debug, Clone, Copy)]
struct Reaction {
    uses: [Option<u8>; 2],
    out: [[u8; 2]; 2],
}

fn reaction(space: &StrategySpace, party: usize, index: usize) -> Reaction {
    let s = space.party_strategy(party, index);
    let mut r = Reaction { uses: [None; 2], out: [[0; 2]; 2] };
    for x in 0..2 {
        match &*s.per_input[x] {
            Tree::Output(o) => r.out[x] = [*o as u8; 2],
            Tree::Use { input, children, .. } => {
                r.uses[x] = Some(*input as u8);
                for (k, c) in children.iter().enumerate() {
                    let Tree::Output(o) = **c else { unreachable!("one box allows one use") };
                    r.out[x][k] = o as u8;
                }
            }
        }
    }
    r
}

/// Direct evaluation for deterministic profiles over at most one PR box,
/// from the box's defining relation: the two results are `r` and
/// `r ⊕ (u·v)` for a uniform bit `r` when both sides feed inputs `u, v`.
struct FastEvaluator {
    reactions: Vec<Vec<Reaction>>,
    counts: Vec<u64>,
    owners: Option<[usize; 2]>,
}

impl FastEvaluator {
    fn new(space: &StrategySpace) -> Self {
        let n = space.parties();
        Self {
            reactions: (0..n).map(|p| (0..space.party_count(p)).map(|i| reaction(space, p, i)).collect()).collect(),
            counts: (0..n).map(|p| space.party_count(p) as u64).collect(),
            owners: space.bank().first().map(|b| [b.owners[0], b.owners[1]]),
        }
    }

    fn profile(&self, mut k: u64) -> Vec<Reaction> {
        self.counts
            .iter()
            .zip(&self.reactions)
            .map(|(&c, rs)| {
                let r = rs[(k % c) as usize];
                k /= c;
                r
            })
            .collect()
    }

    fn holds(&self, profile: &[Reaction], c: &ParityConstraint) -> bool {
        let n = profile.len();
        let mut fixed_mask = 0usize;
        let mut fixed = 0usize;
        for t in &c.terms {
            fixed_mask |= 1 << t.party;
            fixed |= t.setting << t.party;
        }
        for x in (0..1usize << n).filter(|x| x & fixed_mask == fixed) {
            let bit = |p: usize| x >> p & 1;
            let offset = match self.owners {
                Some([a, b]) => match (profile[a].uses[bit(a)], profile[b].uses[bit(b)]) {
                    (Some(u), Some(v)) => u & v,
                    _ => 0,
                },
                None => 0,
            };
            for r in 0..2u8 {
                let parity = c.terms.iter().fold(0u8, |acc, t| {
                    let result = match self.owners {
                        Some([_, b]) if t.party == b => r ^ offset,
                        _ => r,
                    };
                    acc ^ profile[t.party].out[t.setting][result as usize]
                });
                if (parity == 1) != c.target {
                    return false;
                }
            }
        }
        true
    }
}

/// Searches every deterministic strategy profile over `boxes` PR boxes, for
/// each placement of the boxes, for one meeting every constraint with
/// probability 1.
pub fn theorem2_search(set: &ConstraintSet, boxes: usize, options: &SearchOptions) -> Result<SearchReport, ClusterError> {
    let n = set.parties;
    let assignments = options.assignments.clone().unwrap_or_else(|| pair_multisets(n, boxes));
    if let Some(a) = assignments.iter().find(|a| a.len() != boxes || a.iter().any(|&(p, q)| p == q || p >= n || q >= n)) {
        return Err(ClusterError::InvalidConstraint(format!("bad box placement {a:?}")));
    }
    let banks: Vec<Vec<BankInstance>> = assignments
        .iter()
        .map(|a| a.iter().map(|&(p, q)| BankInstance::pr(p, q)).collect())
        .collect();
    let mut total: Option<u128> = Some(0);
    for bank in &banks {
        let mut c: Option<u128> = Some(1);
        for p in 0..n {
            c = c.zip(party_strategy_count(bank, p, 2, 2)).and_then(|(c, k)| c.checked_mul(k));
        }
        total = total.zip(c).and_then(|(t, c)| t.checked_add(c));
    }
    let total = total.unwrap_or(u128::MAX);
    if total > options.cap || total > u64::MAX as u128 {
        return Err(ClusterError::TooLarge { count: total, cap: options.cap });
    }

    let mut report = SearchReport {
        boxes,
        assignments_tested: 0,
        strategies_tested: 0,
        success: false,
        successful_profiles: 0,
        cross_checked: 0,
        reduction: DETERMINISTIC_REDUCTION,
        counterexample: None,
    };
    for (ai, bank) in banks.iter().enumerate() {
        let space = enumerate_strategies(&vec![2; n], &vec![2; n], bank, options.cap)?;
        let count = space.count() as u64;
        let (hits, first) = if bank.len() <= 1 && bank.iter().all(|b| b.template.name() == "PR") {
            let fast = FastEvaluator::new(&space);
            let (hits, first) = (0..count)
                .into_par_iter()
                .filter(|&k| {
                    let prof = fast.profile(k);
                    set.constraints.iter().all(|c| fast.holds(&prof, c))
                })
                .fold(|| (0u64, u64::MAX), |(h, m), k| (h + 1, m.min(k)))
                .reduce(|| (0, u64::MAX), |a, b| (a.0 + b.0, a.1.min(b.1)));
            report.cross_checked += cross_check(set, &space, &fast, ai, options.cross_checks, first)?;
            (hits, first)
        } else {
            generic_search(set, &space)?
        };
        report.assignments_tested += 1;
        report.strategies_tested += count;
        report.successful_profiles += hits;
        if hits > 0 && report.counterexample.is_none() {
            report.success = true;
            report.counterexample = Some(Counterexample {
                assignment: assignments[ai].iter().map(|&(p, q)| [p + 1, q + 1]).collect(),
                profile: first,
                protocol: space.nth(first as u128).to_document(DEFAULT_TABLE_CAP)?,
            });
        }
    }
    Ok(report)
}

fn generic_verdicts(set: &ConstraintSet, protocol: &ValidatedProtocol) -> Result<Vec<bool>, ClusterError> {
    set.constraints.iter().map(|c| protocol_satisfies(protocol, c)).collect()
}

fn generic_search(set: &ConstraintSet, space: &StrategySpace) -> Result<(u64, u64), ClusterError> {
    (0..space.count() as u64)
        .into_par_iter()
        .map(|k| Ok((k, generic_verdicts(set, &space.nth(k as u128))?.iter().all(|&v| v))))
        .try_fold(|| (0u64, u64::MAX), |(h, m), r: Result<(u64, bool), ClusterError>| {
            let (k, ok) = r?;
            Ok(if ok { (h + 1, m.min(k)) } else { (h, m) })
        })
        .try_reduce(|| (0, u64::MAX), |a, b| Ok((a.0 + b.0, a.1.min(b.1))))
}

/// Re-evaluates a seeded sample of profiles (plus the first success, if any)
/// through the exact executor, constraint by constraint, and checks each
/// induced box is nonsignaling.
fn cross_check(
    set: &ConstraintSet,
    space: &StrategySpace,
    fast: &FastEvaluator,
    assignment: usize,
    samples: usize,
    first: u64,
) -> Result<u64, ClusterError> {
    let count = space.count() as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(assignment as u64);
    let mut picks: Vec<u64> = (0..samples.min(count as usize)).map(|_| rng.gen_range(0..count)).collect();
    if first != u64::MAX {
        picks.push(first);
    }
    picks
        .par_iter()
        .map(|&k| {
            let protocol = space.nth(k as u128);
            let prof = fast.profile(k);
            let generic = generic_verdicts(set, &protocol)?;
            for (ci, c) in set.constraints.iter().enumerate() {
                if fast.holds(&prof, c) != generic[ci] {
                    return Err(ClusterError::CrossCheck { assignment, profile: k, constraint: ci });
                }
            }
            // Fails with a signaling error unless the box is nonsignaling.
            induced_box(&protocol)?;
            Ok(1)
        })
        .sum()
}
