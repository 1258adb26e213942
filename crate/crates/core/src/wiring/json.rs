//! Lookup-table strategies and the JSON protocol format.
//!
//! Table keys are `"λ:x:α₁,α₂,…"` with an empty history written `"λ:x:"`.
//! A key with a move continues; a key with an output stops there.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{BankInstance, Move, State, Strategy, Template, WiringError, WiringProtocol};
use crate::boxcore::{BlackBox, BoxDocument};
use crate::rational::{self, Rational};

/// Default cap on table entries per party when tabulating a strategy.
pub const DEFAULT_TABLE_CAP: usize = 1 << 20;

/// A strategy given extensionally. State: `[λ, x, α₁, α₂, …]`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TableStrategy {
    moves: HashMap<State, (usize, usize)>,
    outputs: HashMap<State, usize>,
}

impl TableStrategy {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set_move(&mut self, lambda: u32, input: usize, history: &[usize], instance: usize, box_input: usize) {
        self.moves.insert(key_state(lambda, input, history), (instance, box_input));
    }

    pub fn set_output(&mut self, lambda: u32, input: usize, history: &[usize], output: usize) {
        self.outputs.insert(key_state(lambda, input, history), output);
    }

    pub fn len(&self) -> usize {
        self.moves.len() + self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn key_state(lambda: u32, input: usize, history: &[usize]) -> State {
    let mut s = vec![lambda, input as u32];
    s.extend(history.iter().map(|&a| a as u32));
    s
}

impl Strategy for TableStrategy {
    fn start(&self, lambda: u32, input: usize) -> State {
        vec![lambda, input as u32]
    }

    fn next_move(&self, state: &[u32]) -> Move {
        match self.moves.get(state) {
            Some(&(instance, input)) => Move::Use { instance, input },
            None => Move::Stop,
        }
    }

    fn observe(&self, state: &[u32], output: usize) -> State {
        let mut s = state.to_vec();
        s.push(output as u32);
        s
    }

    fn output(&self, state: &[u32]) -> Option<usize> {
        self.outputs.get(state).copied()
    }
}

/// Tabulates any strategy over every λ, input and reachable history.
pub fn tabulate(protocol: &WiringProtocol, party: usize, cap: usize) -> Result<TableStrategy, WiringError> {
    let strategy = &protocol.strategies[party];
    let mut table = TableStrategy::new();
    let mut stack: Vec<(State, Vec<usize>, u32, usize)> = Vec::new();
    for (lambda, _) in &protocol.lambda {
        for x in 0..protocol.input_sizes[party] {
            stack.push((strategy.start(*lambda, x), Vec::new(), *lambda, x));
        }
    }
    while let Some((state, history, lambda, x)) = stack.pop() {
        if table.len() >= cap {
            return Err(WiringError::TooLarge {
                count: table.len() as u128 + 1,
                cap: cap as u128,
            });
        }
        match strategy.next_move(&state) {
            Move::Stop => {
                let o = strategy
                    .output(&state)
                    .ok_or_else(|| WiringError::Format(format!("party {} has no output after {history:?}", party + 1)))?;
                table.set_output(lambda, x, &history, o);
            }
            Move::Use { instance, input } => {
                table.set_move(lambda, x, &history, instance, input);
                let inst = protocol
                    .bank
                    .get(instance)
                    .ok_or_else(|| WiringError::Format(format!("unknown instance {instance}")))?;
                let side = inst
                    .side_of(party)
                    .ok_or_else(|| WiringError::Format(format!("party {} does not own instance {instance}", party + 1)))?;
                if history.len() > protocol.bank.len() {
                    return Err(WiringError::Format(format!("party {} reuses an instance", party + 1)));
                }
                for o in 0..inst.template.output_size(side) {
                    let mut h = history.clone();
                    h.push(o);
                    stack.push((strategy.observe(&state, o), h, lambda, x));
                }
            }
        }
    }
    Ok(table)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolDocument {
    pub parties: usize,
    pub inputs: Vec<usize>,
    pub outputs: Vec<usize>,
    pub lambda: Vec<LambdaEntry>,
    pub bank: Vec<BankEntry>,
    pub strategies: Vec<StrategyDocument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaEntry {
    pub value: u32,
    #[serde(with = "rational::serde_text")]
    pub p: Rational,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BankEntry {
    pub template: String,
    /// Parties numbered from 1.
    pub owners: Vec<usize>,
    /// Table for templates other than `"PR"`.
    #[serde(rename = "box", default, skip_serializing_if = "Option::is_none")]
    pub table: Option<BoxDocument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyDocument {
    /// Numbered from 1.
    pub party: usize,
    pub moves: BTreeMap<String, MoveDocument>,
    pub outputs: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MoveDocument {
    Use {
        #[serde(rename = "box")]
        instance: usize,
        input: usize,
    },
    Stop(String),
}

fn format_key(state: &[u32]) -> String {
    let hist: Vec<String> = state[2..].iter().map(u32::to_string).collect();
    format!("{}:{}:{}", state[0], state[1], hist.join(","))
}

fn parse_key(key: &str) -> Result<State, WiringError> {
    let bad = || WiringError::Format(format!("bad table key {key:?}; expected \"lambda:x:a1,a2,...\""));
    let mut parts = key.splitn(3, ':');
    let (Some(l), Some(x), Some(h)) = (parts.next(), parts.next(), parts.next()) else {
        return Err(bad());
    };
    let mut s = vec![l.trim().parse().map_err(|_| bad())?, x.trim().parse().map_err(|_| bad())?];
    if !h.trim().is_empty() {
        for a in h.split(',') {
            s.push(a.trim().parse().map_err(|_| bad())?);
        }
    }
    Ok(s)
}

impl WiringProtocol {
    /// Serializes, tabulating each strategy (at most `cap` entries per party).
    pub fn to_document(&self, cap: usize) -> Result<ProtocolDocument, WiringError> {
        let mut strategies = Vec::with_capacity(self.parties());
        for party in 0..self.parties() {
            let t = tabulate(self, party, cap)?;
            strategies.push(StrategyDocument {
                party: party + 1,
                moves: t
                    .moves
                    .iter()
                    .map(|(k, &(instance, input))| (format_key(k), MoveDocument::Use { instance, input }))
                    .collect(),
                outputs: t.outputs.iter().map(|(k, &o)| (format_key(k), o)).collect(),
            });
        }
        Ok(ProtocolDocument {
            parties: self.parties(),
            inputs: self.input_sizes.clone(),
            outputs: self.output_sizes.clone(),
            lambda: self.lambda.iter().map(|(v, p)| LambdaEntry { value: *v, p: p.clone() }).collect(),
            bank: self
                .bank
                .iter()
                .map(|b| BankEntry {
                    template: b.template.name().to_string(),
                    owners: b.owners.iter().map(|p| p + 1).collect(),
                    table: (b.template.name() != "PR").then(|| b.template.table().to_document()),
                })
                .collect(),
            strategies,
        })
    }

    /// Parses without validating; call [`WiringProtocol::validate`] next.
    pub fn from_document(doc: &ProtocolDocument) -> Result<Self, WiringError> {
        let n = doc.parties;
        if doc.inputs.len() != n || doc.outputs.len() != n {
            return Err(WiringError::DimensionMismatch(format!("{n} parties but alphabets for {}/{}", doc.inputs.len(), doc.outputs.len())));
        }
        let mut pr: Option<Arc<Template>> = None;
        let mut bank = Vec::with_capacity(doc.bank.len());
        for (k, entry) in doc.bank.iter().enumerate() {
            if entry.owners.iter().any(|&p| p == 0 || p > n) {
                return Err(WiringError::Format(format!("instance {k}: owners are parties 1..={n}")));
            }
            let template = match (&entry.table, entry.template.as_str()) {
                (Some(t), name) => Arc::new(Template::new(name, BlackBox::from_document(t)?)?),
                (None, "PR") => pr.get_or_insert_with(|| Arc::new(Template::pr())).clone(),
                (None, other) => return Err(WiringError::Format(format!("instance {k}: template {other:?} needs a \"box\" table"))),
            };
            bank.push(BankInstance {
                template,
                owners: entry.owners.iter().map(|p| p - 1).collect(),
            });
        }
        let mut strategies: Vec<Option<Arc<dyn Strategy>>> = vec![None; n];
        for s in &doc.strategies {
            if s.party == 0 || s.party > n {
                return Err(WiringError::Format(format!("strategy for party {} of {n}", s.party)));
            }
            let mut t = TableStrategy::new();
            for (k, m) in &s.moves {
                match m {
                    MoveDocument::Use { instance, input } => {
                        t.moves.insert(parse_key(k)?, (*instance, *input));
                    }
                    MoveDocument::Stop(word) if word == "stop" => {}
                    MoveDocument::Stop(word) => return Err(WiringError::Format(format!("unknown move {word:?}"))),
                }
            }
            for (k, &o) in &s.outputs {
                t.outputs.insert(parse_key(k)?, o);
            }
            if strategies[s.party - 1].replace(Arc::new(t)).is_some() {
                return Err(WiringError::Format(format!("two strategies for party {}", s.party)));
            }
        }
        let strategies = strategies
            .into_iter()
            .enumerate()
            .map(|(i, s)| s.ok_or_else(|| WiringError::Format(format!("no strategy for party {}", i + 1))))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(WiringProtocol {
            input_sizes: doc.inputs.clone(),
            output_sizes: doc.outputs.clone(),
            lambda: doc.lambda.iter().map(|l| (l.value, l.p.clone())).collect(),
            bank,
            strategies,
        })
    }

    pub fn to_json(&self, cap: usize) -> Result<String, WiringError> {
        Ok(serde_json::to_string(&self.to_document(cap)?).expect("protocol documents serialize"))
    }

    pub fn from_json(text: &str) -> Result<Self, WiringError> {
        let doc: ProtocolDocument = serde_json::from_str(text).map_err(|e| WiringError::Format(e.to_string()))?;
        Self::from_document(&doc)
    }
}
