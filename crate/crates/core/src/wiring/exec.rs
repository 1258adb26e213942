//! Exact and sampled execution.
//!
//! The joint state of a run is every party's view plus the inputs and
//! outputs already committed to each partly used instance. Parties take turns
//! by a fixed rule: anyone ready to stop stops; otherwise the party whose
//! next box has the lowest instance index goes (lowest party on ties). The
//! first side of an instance to fire draws from the template's one-side
//! marginal, later sides from the conditional given what is committed. Since
//! templates are nonsignaling, the resulting distribution does not depend on
//! the order. Identical joint states are merged, so the exact run is a
//! dynamic program rather than a tree walk.

use std::cell::RefCell;
use std::rc::Rc;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use super::{Move, State, ValidatedProtocol, WiringError};
use crate::boxcore::{self, BlackBox};
use crate::radix::Radix;
use crate::rational::{self, Rational};

// A joint configuration is one flat word vector, so that merging identical
// configurations is a single hash lookup:
//
//   per party:  len, state[0..len]   (running)
//               DONE, output         (stopped)
//   then per partly used instance, sorted by index:
//               instance, (input, output) per side, FREE for uncommitted
const DONE: u32 = u32::MAX;
const FREE: u32 = u32::MAX;

/// Probability weights: dyadic rationals in machine words while they fit,
/// exact rationals otherwise.
#[derive(Debug, Clone, PartialEq)]
enum Weight {
    /// `num / 2^exp`
    Dyadic { num: u64, exp: u32 },
    Exact(Rational),
}

impl Weight {
    fn from_rational(r: &Rational) -> Self {
        let d = r.denom();
        match (r.numer().to_u64(), d.to_u64()) {
            (Some(num), Some(den)) if den.is_power_of_two() => Weight::Dyadic { num, exp: den.trailing_zeros() }.normalized(),
            _ => Weight::Exact(r.clone()),
        }
    }

    fn normalized(self) -> Self {
        match self {
            Weight::Dyadic { num: 0, .. } => Weight::Dyadic { num: 0, exp: 0 },
            Weight::Dyadic { num, exp } => {
                let k = num.trailing_zeros().min(exp);
                Weight::Dyadic { num: num >> k, exp: exp - k }
            }
            w => w,
        }
    }

    fn to_rational(&self) -> Rational {
        match self {
            Weight::Dyadic { num, exp } => Rational::new(BigInt::from(*num), BigInt::from(1u8) << *exp as usize),
            Weight::Exact(r) => r.clone(),
        }
    }

    fn is_one(&self) -> bool {
        matches!(self, Weight::Dyadic { num: 1, exp: 0 })
    }

    fn mul(&self, other: &Weight) -> Weight {
        if other.is_one() {
            return self.clone();
        }
        if let (Weight::Dyadic { num: a, exp: e }, Weight::Dyadic { num: b, exp: f }) = (self, other) {
            if let (Some(num), Some(exp)) = (a.checked_mul(*b), e.checked_add(*f)) {
                return Weight::Dyadic { num, exp }.normalized();
            }
        }
        Weight::Exact(self.to_rational() * other.to_rational())
    }

    fn add_assign(&mut self, other: &Weight) {
        if let (Weight::Dyadic { num: a, exp: e }, Weight::Dyadic { num: b, exp: f }) = (&*self, other) {
            let (hi, lo, lo_exp, hi_exp) = if e >= f { (*a, *b, *f, *e) } else { (*b, *a, *e, *f) };
            let shift = hi_exp - lo_exp;
            let scaled = if shift < 64 && (lo == 0 || lo.leading_zeros() >= shift) { Some(lo << shift) } else { None };
            if let Some(num) = scaled.and_then(|s| s.checked_add(hi)) {
                *self = Weight::Dyadic { num, exp: hi_exp }.normalized();
                return;
            }
        }
        *self = Weight::Exact(self.to_rational() + other.to_rational());
    }
}

/// Outcome distribution of one side given the committed sides.
struct Branches {
    outputs: Vec<u32>,
    weights: Vec<Weight>,
    floats: Vec<f64>,
}

#[derive(Clone, Copy)]
struct Span {
    start: usize,
    len: usize,
    done: bool,
}

enum Change {
    Running(State),
    Done(u32),
}

enum Decision {
    Finished(Vec<usize>),
    Stop(Vec<u32>),
    Fire(Firing),
}

struct Firing {
    spans: Vec<Span>,
    opens_at: usize,
    instance: usize,
    party: usize,
    side: usize,
    input: usize,
    branches: Rc<Branches>,
}

/// Outputs of one sampled run and the instances it touched, sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunTrace {
    pub outputs: Vec<usize>,
    pub instances_used: Vec<usize>,
}

/// Shared by every run of one protocol: caches conditional branch lists.
struct Engine<'a> {
    protocol: &'a ValidatedProtocol,
    cache: RefCell<FxHashMap<(usize, u32, Vec<u32>), Rc<Branches>>>,
}

impl<'a> Engine<'a> {
    fn new(protocol: &'a ValidatedProtocol) -> Self {
        Self {
            protocol,
            cache: RefCell::new(FxHashMap::default()),
        }
    }

    fn initial(&self, lambda: u32, x: &[usize]) -> Vec<u32> {
        let mut cfg = Vec::new();
        for (s, &xi) in self.protocol.strategies.iter().zip(x) {
            let st = s.start(lambda, xi);
            cfg.push(st.len() as u32);
            cfg.extend_from_slice(&st);
        }
        cfg
    }

    /// Party spans and the offset of the first open record.
    fn parse(&self, cfg: &[u32]) -> (Vec<Span>, usize) {
        let mut spans = Vec::with_capacity(self.protocol.strategies.len());
        let mut pos = 0;
        for _ in 0..self.protocol.strategies.len() {
            if cfg[pos] == DONE {
                spans.push(Span { start: pos + 1, len: 1, done: true });
                pos += 2;
            } else {
                let len = cfg[pos] as usize;
                spans.push(Span { start: pos + 1, len, done: false });
                pos += 1 + len;
            }
        }
        (spans, pos)
    }

    fn branches(&self, instance: usize, side: usize, input: usize, committed: &[u32]) -> Rc<Branches> {
        let key = (instance, (side as u32) << 16 | input as u32, committed.to_vec());
        if let Some(b) = self.cache.borrow().get(&key) {
            return b.clone();
        }
        let sides: Vec<Option<(u32, u32)>> = committed
            .chunks(2)
            .map(|c| if c[0] == FREE { None } else { Some((c[0], c[1])) })
            .collect();
        let list = self.protocol.bank[instance].template.branches(&sides, side, input);
        let b = Rc::new(Branches {
            outputs: list.iter().map(|(o, _)| *o as u32).collect(),
            weights: list.iter().map(|(_, p)| Weight::from_rational(p)).collect(),
            floats: list.iter().map(|(_, p)| p.to_f64().unwrap_or(0.0)).collect(),
        });
        self.cache.borrow_mut().insert(key, b.clone());
        b
    }

    /// Rebuilds `cfg` with the given party changes and, if an instance
    /// fired, its new commitment; drops records nobody can still complete.
    fn successor(&self, cfg: &[u32], spans: &[Span], opens_at: usize, changes: &[(usize, Change)], fired: Option<(usize, usize, u32, u32)>) -> Vec<u32> {
        let bank = &self.protocol.bank;
        let mut out = Vec::with_capacity(cfg.len() + 4);
        let mut running: Vec<bool> = spans.iter().map(|s| !s.done).collect();
        for (i, sp) in spans.iter().enumerate() {
            match changes.iter().find(|(p, _)| *p == i) {
                Some((_, Change::Running(st))) => {
                    out.push(st.len() as u32);
                    out.extend_from_slice(st);
                }
                Some((_, Change::Done(o))) => {
                    running[i] = false;
                    out.push(DONE);
                    out.push(*o);
                }
                None => out.extend_from_slice(&cfg[sp.start - 1..sp.start + sp.len]),
            }
        }
        let keep = |instance: usize, sides: &[u32]| {
            bank[instance]
                .owners
                .iter()
                .enumerate()
                .any(|(s, &p)| sides[2 * s] == FREE && running[p])
        };
        let push_record = |out: &mut Vec<u32>, instance: usize, sides: &[u32]| {
            if keep(instance, sides) {
                out.push(instance as u32);
                out.extend_from_slice(sides);
            }
        };
        let mut pending = fired;
        let mut pos = opens_at;
        let mut scratch = Vec::new();
        while pos < cfg.len() {
            let instance = cfg[pos] as usize;
            let width = 2 * bank[instance].owners.len();
            let sides = &cfg[pos + 1..pos + 1 + width];
            match pending {
                Some((b, side, input, output)) if b <= instance => {
                    scratch.clear();
                    if b == instance {
                        scratch.extend_from_slice(sides);
                        pos += 1 + width;
                    } else {
                        scratch.resize(2 * bank[b].owners.len(), FREE);
                    }
                    scratch[2 * side] = input;
                    scratch[2 * side + 1] = output;
                    push_record(&mut out, b, &scratch);
                    pending = None;
                }
                _ => {
                    push_record(&mut out, instance, sides);
                    pos += 1 + width;
                }
            }
        }
        if let Some((b, side, input, output)) = pending {
            scratch.clear();
            scratch.resize(2 * bank[b].owners.len(), FREE);
            scratch[2 * side] = input;
            scratch[2 * side + 1] = output;
            push_record(&mut out, b, &scratch);
        }
        out
    }

    /// What happens next in `cfg`: everyone finished, some parties stop, or
    /// one side of one instance fires.
    fn decide(&self, cfg: &[u32]) -> Decision {
        let strategies = &self.protocol.strategies;
        let (spans, opens_at) = self.parse(cfg);
        let mut stops: Vec<(usize, Change)> = Vec::new();
        let mut next: Option<(usize, usize, usize)> = None;
        for (i, sp) in spans.iter().enumerate() {
            if sp.done {
                continue;
            }
            let s = &cfg[sp.start..sp.start + sp.len];
            match strategies[i].next_move(s) {
                Move::Stop => {
                    let out = strategies[i].output(s).expect("validated strategies define their outputs");
                    stops.push((i, Change::Done(out as u32)));
                }
                Move::Use { instance, input } => {
                    if next.is_none_or(|(b, _, _)| instance < b) {
                        next = Some((instance, i, input));
                    }
                }
            }
        }
        if !stops.is_empty() {
            return Decision::Stop(self.successor(cfg, &spans, opens_at, &stops, None));
        }
        let Some((instance, party, input)) = next else {
            return Decision::Finished(spans.iter().map(|sp| cfg[sp.start] as usize).collect());
        };
        let inst = &self.protocol.bank[instance];
        let side = inst.side_of(party).expect("validated strategies use their own instances");
        let mut pos = opens_at;
        let mut committed: &[u32] = &[];
        let fresh;
        while pos < cfg.len() {
            let b = cfg[pos] as usize;
            let width = 2 * self.protocol.bank[b].owners.len();
            if b == instance {
                committed = &cfg[pos + 1..pos + 1 + width];
                break;
            }
            pos += 1 + width;
        }
        if committed.is_empty() {
            fresh = vec![FREE; 2 * inst.owners.len()];
            committed = &fresh;
        }
        debug_assert!(committed[2 * side] == FREE, "validated strategies never reuse a side");
        let branches = self.branches(instance, side, input, committed);
        Decision::Fire(Firing { spans, opens_at, instance, party, side, input, branches })
    }

    /// The configuration after branch `k` of a firing.
    fn fire(&self, cfg: &[u32], f: &Firing, k: usize) -> Vec<u32> {
        let sp = f.spans[f.party];
        let state = &cfg[sp.start..sp.start + sp.len];
        let o = f.branches.outputs[k];
        let change = [(f.party, Change::Running(self.protocol.strategies[f.party].observe(state, o as usize)))];
        self.successor(cfg, &f.spans, f.opens_at, &change, Some((f.instance, f.side, f.input as u32, o)))
    }

    fn exact(&self, x: &[usize]) -> OutcomeDistribution {
        let outs = self.protocol.output_radix();
        let mut probs = vec![Weight::Dyadic { num: 0, exp: 0 }; outs.total()];
        let mut frontier: FxHashMap<Vec<u32>, Weight> = FxHashMap::default();
        for (lambda, w) in &self.protocol.lambda {
            if !w.is_zero() {
                frontier
                    .entry(self.initial(*lambda, x))
                    .or_insert(Weight::Dyadic { num: 0, exp: 0 })
                    .add_assign(&Weight::from_rational(w));
            }
        }
        while !frontier.is_empty() {
            let mut next: FxHashMap<Vec<u32>, Weight> = FxHashMap::default();
            next.reserve(frontier.len());
            for (cfg, w) in frontier {
                match self.decide(&cfg) {
                    Decision::Finished(a) => probs[outs.index(&a)].add_assign(&w),
                    Decision::Stop(c) => next.entry(c).or_insert(Weight::Dyadic { num: 0, exp: 0 }).add_assign(&w),
                    Decision::Fire(f) => {
                        for k in 0..f.branches.outputs.len() {
                            let wp = w.mul(&f.branches.weights[k]);
                            next.entry(self.fire(&cfg, &f, k)).or_insert(Weight::Dyadic { num: 0, exp: 0 }).add_assign(&wp);
                        }
                    }
                }
            }
            frontier = next;
        }
        OutcomeDistribution {
            x: x.to_vec(),
            outputs: outs,
            probs: probs.iter().map(Weight::to_rational).collect(),
        }
    }

    fn sample(&self, x: &[usize], rng: &mut ChaCha8Rng, lambda_dist: &WeightedIndex<f64>) -> RunTrace {
        let mut cfg = self.initial(self.protocol.lambda[lambda_dist.sample(rng)].0, x);
        let mut instances_used = Vec::new();
        loop {
            match self.decide(&cfg) {
                Decision::Finished(outputs) => {
                    instances_used.sort_unstable();
                    instances_used.dedup();
                    return RunTrace { outputs, instances_used };
                }
                Decision::Stop(c) => cfg = c,
                Decision::Fire(f) => {
                    instances_used.push(f.instance);
                    let k = match f.branches.floats.len() {
                        1 => 0,
                        2 => (rng.gen::<f64>() >= f.branches.floats[0]) as usize,
                        _ => WeightedIndex::new(&f.branches.floats).expect("branch weights are positive").sample(rng),
                    };
                    cfg = self.fire(&cfg, &f, k);
                }
            }
        }
    }
}

fn lambda_distribution(protocol: &ValidatedProtocol) -> Result<WeightedIndex<f64>, WiringError> {
    let weights: Vec<f64> = protocol.lambda.iter().map(|(_, w)| w.to_f64().unwrap_or(0.0)).collect();
    WeightedIndex::new(&weights).map_err(|e| WiringError::SharedRandomness(e.to_string()))
}

/// Runs one protocol on one input tuple.
pub struct Executor<'a> {
    engine: Engine<'a>,
    x: Vec<usize>,
}

impl<'a> Executor<'a> {
    pub fn new(protocol: &'a ValidatedProtocol, x: &[usize]) -> Result<Self, WiringError> {
        if !protocol.input_radix().contains(x) {
            return Err(WiringError::DimensionMismatch(format!("input {x:?} outside alphabets {:?}", protocol.input_sizes)));
        }
        Ok(Self { engine: Engine::new(protocol), x: x.to_vec() })
    }

    /// Exact output distribution.
    pub fn exact(&self) -> OutcomeDistribution {
        self.engine.exact(&self.x)
    }

    /// One sampled run. Only branches of positive probability are taken.
    pub fn sample_run(&self, rng: &mut ChaCha8Rng) -> RunTrace {
        let lambda_dist = lambda_distribution(self.engine.protocol).expect("validated weights sum to 1");
        self.engine.sample(&self.x, rng, &lambda_dist)
    }
}

/// Exact distribution of the joint output for inputs `x`.
pub fn execute_exact(protocol: &ValidatedProtocol, x: &[usize]) -> Result<OutcomeDistribution, WiringError> {
    Ok(Executor::new(protocol, x)?.exact())
}

/// Output counts over `runs` sampled executions; a pure function of `seed`.
/// Only branches of positive probability are ever taken.
pub fn execute_sample(protocol: &ValidatedProtocol, x: &[usize], seed: u64, runs: u64) -> Result<Vec<u64>, WiringError> {
    let exec = Executor::new(protocol, x)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lambda_dist = lambda_distribution(protocol)?;
    let outs = protocol.output_radix();
    let mut counts = vec![0u64; outs.total()];
    for _ in 0..runs {
        counts[outs.index(&exec.engine.sample(x, &mut rng, &lambda_dist).outputs)] += 1;
    }
    Ok(counts)
}

/// The box a protocol implements, checked nonsignaling before it is returned.
pub fn induced_box(protocol: &ValidatedProtocol) -> Result<BlackBox, WiringError> {
    let ins = protocol.input_radix();
    let engine = Engine::new(protocol);
    let mut table = Vec::with_capacity(ins.total() * protocol.output_radix().total());
    for x in ins.iter() {
        table.extend(engine.exact(&x).probs);
    }
    let b = BlackBox::new(&protocol.input_sizes, &protocol.output_sizes, table)?;
    match boxcore::check_no_signaling(&b) {
        boxcore::NoSignaling::Ok => Ok(b),
        boxcore::NoSignaling::Violation(w) => Err(WiringError::Signaling(format!("{w:?}"))),
    }
}

/// Exact distribution of the joint output for one input tuple.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutcomeDistribution {
    x: Vec<usize>,
    outputs: Radix,
    probs: Vec<Rational>,
}

impl OutcomeDistribution {
    pub fn input(&self) -> &[usize] {
        &self.x
    }

    pub fn output_radix(&self) -> &Radix {
        &self.outputs
    }

    pub fn probs(&self) -> &[Rational] {
        &self.probs
    }

    pub fn prob(&self, a: &[usize]) -> &Rational {
        &self.probs[self.outputs.index(a)]
    }

    pub fn total(&self) -> Rational {
        self.probs.iter().sum()
    }

    /// Probability that the outputs of `parties` have parity `target`.
    pub fn parity_probability(&self, parties: &[usize], target: usize) -> Rational {
        let mut a = vec![0; self.outputs.sizes().len()];
        let mut s = Rational::zero();
        for (i, p) in self.probs.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            self.outputs.decode_into(i, &mut a);
            if parties.iter().map(|&j| a[j]).sum::<usize>() % 2 == target % 2 {
                s += p;
            }
        }
        s
    }

    pub fn to_document(&self) -> OutcomeDocument {
        OutcomeDocument {
            x: self.x.clone(),
            table: self
                .probs
                .iter()
                .enumerate()
                .filter(|(_, p)| !p.is_zero())
                .map(|(i, p)| OutcomeEntry {
                    a: self.outputs.digits(i),
                    p: p.clone(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDocument {
    pub x: Vec<usize>,
    pub table: Vec<OutcomeEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeEntry {
    pub a: Vec<usize>,
    #[serde(with = "rational::serde_text")]
    pub p: Rational,
}
