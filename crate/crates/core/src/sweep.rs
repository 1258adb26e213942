//! Sweeps over every small Boolean function: synthesize, compile, and check
//! the result exactly.
//!
//! Variables are ordered party-major, so an ownership split is just the
//! number of bits each party holds. A stratum is one (parties, total bits)
//! pair. Sweeps run level by level in total bits, time-sharing between the
//! strata of a level, and stop at a wall-clock budget; coverage is reported,
//! never extrapolated.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use crate::circuit::{synthesize_nand, TruthTable};
use crate::construct::{compile, solve_cc, verify_simulation, CompileOptions, ConstructError};

#[derive(Debug, Clone)]
pub struct Stratum {
    pub parties: usize,
    pub bits: usize,
    /// Owner list per split, party-major.
    pub splits: Vec<Vec<usize>>,
}

impl Stratum {
    pub fn functions(&self) -> u64 {
        1u64 << (1u64 << self.bits)
    }

    pub fn cases(&self) -> u64 {
        self.splits.len() as u64 * self.functions()
    }

    /// Case `k` in a fixed scrambled order, so that any prefix is spread over
    /// splits and functions.
    pub fn case(&self, k: u64) -> TruthTable {
        let k = scramble(k, self.cases());
        let split = &self.splits[(k % self.splits.len() as u64) as usize];
        let f = k / self.splits.len() as u64;
        let values = (0..1usize << self.bits).map(|row| f >> row & 1 == 1).collect();
        TruthTable::new(self.parties, split.clone(), values).expect("strata hold valid tables")
    }
}

/// A bijection on `0..n`: `k ↦ (a·k + c) mod n` with `a` coprime to `n`.
fn scramble(k: u64, n: u64) -> u64 {
    let mut a = 0x9e37_79b9_7f4a_7c15 % n.max(1);
    while gcd(a, n) != 1 {
        a += 1;
    }
    ((a as u128 * k as u128 + 0x2545_f491) % n as u128) as u64
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 { a } else { gcd(b, a % b) }
}

/// Every way to give `bits` variables to `parties` parties, party-major.
pub fn splits(bits: usize, parties: usize) -> Vec<Vec<usize>> {
    fn rec(left: usize, party: usize, parties: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if party + 1 == parties {
            cur.extend(std::iter::repeat_n(party, left));
            out.push(cur.clone());
            cur.truncate(cur.len() - left);
            return;
        }
        for k in 0..=left {
            cur.extend(std::iter::repeat_n(party, k));
            rec(left - k, party + 1, parties, cur, out);
            cur.truncate(cur.len() - k);
        }
    }
    let mut out = Vec::new();
    rec(bits, 0, parties, &mut Vec::new(), &mut out);
    out
}

pub fn strata(max_bits: usize, parties: &[usize]) -> Vec<Stratum> {
    (0..=max_bits)
        .flat_map(|bits| parties.iter().map(move |&n| Stratum { parties: n, bits, splits: splits(bits, n) }))
        .collect()
}

/// Compile `table` and compare the induced box with its full-correlation box.
pub fn check_exactness(table: &TruthTable) -> Result<(), String> {
    let circuit = synthesize_nand(table);
    let compiled = compile(&circuit, table.parties(), &CompileOptions::default()).map_err(|e| e.to_string())?;
    match verify_simulation(&compiled.protocol, &table.full_correlation_box()).map_err(|e| e.to_string())? {
        crate::construct::Verdict::Match => Ok(()),
        crate::construct::Verdict::Mismatch(d) => Err(format!("cell differs: {d:?}")),
    }
}

/// Box count, bits sent, boxes consumed per run and the communicated value,
/// on every input.
pub fn check_resources(table: &TruthTable, seed: u64) -> Result<(), String> {
    let n = table.parties();
    let circuit = synthesize_nand(table);
    let compiled = compile(&circuit, n, &CompileOptions::default()).map_err(|e| e.to_string())?;
    let expect_boxes = circuit.gate_count() * n * (n - 1);
    if compiled.pr_boxes() != expect_boxes || compiled.protocol.bank.len() != expect_boxes {
        return Err(format!("{} boxes for {} gates", compiled.pr_boxes(), circuit.gate_count()));
    }
    let radix = crate::radix::Radix::new(&table.input_bits().iter().map(|&b| 1usize << b).collect::<Vec<_>>());
    for (row, x) in radix.iter().enumerate() {
        let run = solve_cc(&compiled, &x, seed.wrapping_add(row as u64)).map_err(|e: ConstructError| e.to_string())?;
        if run.transcript.len() != n - 1 {
            return Err(format!("{} messages on input {x:?}", run.transcript.len()));
        }
        if run.boxes_consumed != expect_boxes {
            return Err(format!("{} boxes consumed on input {x:?}", run.boxes_consumed));
        }
        if run.value != circuit.eval_party_inputs(&x) || run.value != table.eval_party_inputs(&x) {
            return Err(format!("wrong value on input {x:?}"));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct StratumReport {
    pub parties: usize,
    pub bits: usize,
    pub splits: usize,
    pub cases: u64,
    pub checked: u64,
    pub failures: u64,
    /// Owners, truth table and message of the first failure.
    pub first_failure: Option<String>,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub strata: Vec<StratumReport>,
    pub complete: bool,
    pub seconds: f64,
}

impl SweepReport {
    pub fn checked(&self) -> u64 {
        self.strata.iter().map(|s| s.checked).sum()
    }

    pub fn cases(&self) -> u64 {
        self.strata.iter().map(|s| s.cases).sum()
    }

    pub fn failures(&self) -> u64 {
        self.strata.iter().map(|s| s.failures).sum()
    }

    /// Every case checked and none failed.
    pub fn passed(&self) -> bool {
        self.complete && self.failures() == 0
    }
}

/// Runs `check` over the strata until done or out of time.
pub fn run_sweep<F>(strata: &[Stratum], budget: Duration, check: F) -> SweepReport
where
    F: Fn(&TruthTable) -> Result<(), String> + Sync,
{
    let start = Instant::now();
    let batch = rayon::current_num_threads().max(1) as u64;
    let mut reports: Vec<StratumReport> = strata
        .iter()
        .map(|s| StratumReport {
            parties: s.parties,
            bits: s.bits,
            splits: s.splits.len(),
            cases: s.cases(),
            checked: 0,
            failures: 0,
            first_failure: None,
            seconds: 0.0,
        })
        .collect();
    let mut levels: Vec<usize> = strata.iter().map(|s| s.bits).collect();
    levels.sort_unstable();
    levels.dedup();
    'levels: for level in levels {
        loop {
            // The unfinished stratum of this level that has had least time.
            let Some(i) = (0..strata.len())
                .filter(|&i| strata[i].bits == level && reports[i].checked < reports[i].cases)
                .min_by(|&a, &b| reports[a].seconds.total_cmp(&reports[b].seconds))
            else {
                break;
            };
            if start.elapsed() >= budget {
                break 'levels;
            }
            let r = &mut reports[i];
            let t = Instant::now();
            let end = (r.checked + batch).min(r.cases);
            let results: Vec<(u64, Result<(), String>)> = (r.checked..end)
                .into_par_iter()
                .map(|k| (k, check(&strata[i].case(k))))
                .collect();
            for (k, res) in results {
                if let Err(e) = res {
                    r.failures += 1;
                    if r.first_failure.is_none() {
                        let t = strata[i].case(k);
                        r.first_failure = Some(format!("owners {:?} table {}: {e}", t.owners(), t.to_bit_string()));
                    }
                }
            }
            r.checked = end;
            r.seconds += t.elapsed().as_secs_f64();
        }
    }
    let complete = reports.iter().all(|r| r.checked == r.cases);
    SweepReport { strata: reports, complete, seconds: start.elapsed().as_secs_f64() }
}
