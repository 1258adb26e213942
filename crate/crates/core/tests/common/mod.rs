#![allow(dead_code)]

use std::sync::Arc;

use num_traits::{One, Zero};
use prbox::boxcore::{full_correlation_box, pr_box, uniform_box};
use prbox::circuit::{synthesize_nand, TruthTable};
use prbox::construct::{compile, CompileOptions};
use prbox::rational::rat;
use prbox::wiring::{enumerate_strategies, BankInstance, Strategy, TableStrategy, Template, ValidatedProtocol, WiringProtocol};
use prbox::Rational;

// ---------------------------------------------------------------------------
// Vertex oracle: try every set of `dim` cells as the zero set, solve, keep
// unique nonnegative solutions. Shares no code with the library's polytope
// module.

/// Unique solution of `rows · p = rhs`, if any.
fn solve_unique(mut rows: Vec<Vec<Rational>>, mut rhs: Vec<Rational>, ncols: usize) -> Option<Vec<Rational>> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else { continue };
        rows.swap(r, p);
        rhs.swap(r, p);
        let inv = Rational::one() / &rows[r][c];
        for v in rows[r].iter_mut() {
            *v *= &inv;
        }
        rhs[r] *= &inv;
        for i in 0..rows.len() {
            if i != r && !rows[i][c].is_zero() {
                let f = rows[i][c].clone();
                for k in 0..ncols {
                    let d = &f * &rows[r][k];
                    rows[i][k] -= d;
                }
                let d = &f * &rhs[r];
                rhs[i] -= d;
            }
        }
        pivots.push(c);
        r += 1;
    }
    if rhs[r..].iter().any(|v| !v.is_zero()) || pivots.len() < ncols {
        return None;
    }
    let mut p = vec![Rational::zero(); ncols];
    for (i, &c) in pivots.iter().enumerate() {
        p[c] = rhs[i].clone();
    }
    Some(p)
}

/// Bipartite cells in box-table order: `((x + mx·y)·(da·db)) + a + da·b`.
pub fn oracle_vertices(mx: usize, my: usize, da: usize, db: usize, dim: usize) -> Vec<Vec<Rational>> {
    let outs = da * db;
    let cells = mx * my * outs;
    let cell = |x: usize, y: usize, a: usize, b: usize| (x + mx * y) * outs + a + da * b;
    let mut eqs: Vec<(Vec<Rational>, Rational)> = Vec::new();
    for x in 0..mx {
        for y in 0..my {
            let mut row = vec![Rational::zero(); cells];
            for a in 0..da {
                for b in 0..db {
                    row[cell(x, y, a, b)] = Rational::one();
                }
            }
            eqs.push((row, Rational::one()));
        }
    }
    // Alice's marginal ignores y, Bob's ignores x.
    for x in 0..mx {
        for a in 0..da {
            for y in 1..my {
                let mut row = vec![Rational::zero(); cells];
                for b in 0..db {
                    row[cell(x, y, a, b)] += Rational::one();
                    row[cell(x, 0, a, b)] -= Rational::one();
                }
                eqs.push((row, Rational::zero()));
            }
        }
    }
    for y in 0..my {
        for b in 0..db {
            for x in 1..mx {
                let mut row = vec![Rational::zero(); cells];
                for a in 0..da {
                    row[cell(x, y, a, b)] += Rational::one();
                    row[cell(0, y, a, b)] -= Rational::one();
                }
                eqs.push((row, Rational::zero()));
            }
        }
    }
    let mut found: Vec<Vec<Rational>> = Vec::new();
    let mut subset: Vec<usize> = (0..dim).collect();
    loop {
        let mut rows: Vec<Vec<Rational>> = eqs.iter().map(|(r, _)| r.clone()).collect();
        let mut rhs: Vec<Rational> = eqs.iter().map(|(_, b)| b.clone()).collect();
        for &c in &subset {
            let mut e = vec![Rational::zero(); cells];
            e[c] = Rational::one();
            rows.push(e);
            rhs.push(Rational::zero());
        }
        if let Some(p) = solve_unique(rows, rhs, cells) {
            if p.iter().all(|v| *v >= Rational::zero()) && !found.contains(&p) {
                found.push(p);
            }
        }
        // Next subset in lexicographic order.
        let mut i = dim;
        loop {
            if i == 0 {
                found.sort();
                return found;
            }
            i -= 1;
            if subset[i] < cells - dim + i {
                subset[i] += 1;
                for j in i + 1..dim {
                    subset[j] = subset[j - 1] + 1;
                }
                break;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Protocol corpus

fn table_protocol(input_sizes: Vec<usize>, lambda: Vec<(u32, Rational)>, bank: Vec<BankInstance>, strategies: Vec<TableStrategy>) -> ValidatedProtocol {
    WiringProtocol {
        output_sizes: vec![2; input_sizes.len()],
        input_sizes,
        lambda,
        bank,
        strategies: strategies.into_iter().map(|s| Arc::new(s) as Arc<dyn Strategy>).collect(),
    }
    .validate()
    .expect("corpus protocols are valid")
}

/// Feed the input into instance `b`, output what comes back.
fn relay(lambdas: &[u32], b: usize) -> TableStrategy {
    let mut t = TableStrategy::new();
    for &l in lambdas {
        for x in 0..2 {
            t.set_move(l, x, &[], b, x);
            for o in 0..2 {
                t.set_output(l, x, &[o], o);
            }
        }
    }
    t
}

fn constant(lambdas: &[u32], inputs: usize, f: impl Fn(u32, usize) -> usize) -> TableStrategy {
    let mut t = TableStrategy::new();
    for &l in lambdas {
        for x in 0..inputs {
            t.set_output(l, x, &[], f(l, x));
        }
    }
    t
}

fn compiled(parties: usize, owners: Vec<usize>, f: impl Fn(&[bool]) -> bool) -> ValidatedProtocol {
    let t = TruthTable::from_fn(parties, owners, f).unwrap();
    compile(&synthesize_nand(&t), parties, &CompileOptions::default()).unwrap().protocol
}

/// Twenty protocols of varied shape: hand-written tables, compiled circuits,
/// enumerated profiles, shared randomness, and non-dyadic templates.
pub fn corpus() -> Vec<(String, ValidatedProtocol)> {
    let one = vec![(0u32, Rational::one())];
    let mut out: Vec<(String, ValidatedProtocol)> = Vec::new();

    out.push(("pr relay".into(), table_protocol(vec![2, 2], one.clone(), vec![BankInstance::pr(0, 1)], vec![relay(&[0], 0), relay(&[0], 0)])));
    out.push((
        "shared coin".into(),
        table_protocol(
            vec![2, 2],
            vec![(0, rat(1, 2)), (1, rat(1, 2))],
            vec![],
            vec![constant(&[0, 1], 2, |l, _| l as usize), constant(&[0, 1], 2, |l, _| l as usize)],
        ),
    ));
    out.push((
        "one-sided".into(),
        table_protocol(vec![2, 2], one.clone(), vec![BankInstance::pr(0, 1)], vec![relay(&[0], 0), constant(&[0], 2, |_, x| x)]),
    ));
    {
        let mut a = TableStrategy::new();
        let mut b = TableStrategy::new();
        for x in 0..2 {
            a.set_move(0, x, &[], 1, x);
            b.set_move(0, x, &[], 0, x);
            for o in 0..2 {
                a.set_move(0, x, &[o], 0, o);
                b.set_move(0, x, &[o], 1, 1);
                for o2 in 0..2 {
                    a.set_output(0, x, &[o, o2], o ^ o2);
                    b.set_output(0, x, &[o, o2], o ^ o2);
                }
            }
        }
        out.push(("crossed order".into(), table_protocol(vec![2, 2], one.clone(), vec![BankInstance::pr(0, 1), BankInstance::pr(0, 1)], vec![a, b])));
    }
    out.push(("compiled and".into(), compiled(2, vec![0, 1], |b| b[0] & b[1])));
    out.push(("compiled xor".into(), compiled(2, vec![0, 1], |b| b[0] ^ b[1])));
    out.push(("compiled nand".into(), compiled(2, vec![0, 1], |b| !(b[0] & b[1]))));
    out.push(("compiled majority".into(), compiled(3, vec![0, 1, 2], |b| (b[0] as u8 + b[1] as u8 + b[2] as u8) >= 2)));
    out.push(("compiled parity3".into(), compiled(3, vec![0, 1, 2], |b| b[0] ^ b[1] ^ b[2])));
    out.push(("compiled constant".into(), compiled(2, vec![0, 1], |_| true)));
    out.push(("compiled wire".into(), compiled(2, vec![0, 1], |b| b[0])));
    out.push(("compiled idle third".into(), compiled(3, vec![0, 1], |b| b[0] & b[1])));
    out.push(("compiled 2+1 bits".into(), compiled(2, vec![0, 0, 1], |b| (b[0] | b[1]) & b[2])));
    {
        let ghz = Arc::new(Template::new("GHZ", full_correlation_box(&[1, 1, 1], |x| (x[0] ^ x[1] ^ x[2]) == 1)).unwrap());
        out.push((
            "three-sided".into(),
            table_protocol(
                vec![2, 2, 2],
                one.clone(),
                vec![BankInstance { template: ghz, owners: vec![2, 0, 1] }],
                vec![relay(&[0], 0), relay(&[0], 0), relay(&[0], 0)],
            ),
        ));
    }
    let space = enumerate_strategies(&[2, 2], &[2, 2], &[BankInstance::pr(0, 1)], u128::MAX).unwrap();
    for k in [1234u128, 5678, 9999] {
        out.push((format!("enumerated profile {k}"), space.nth(k)));
    }
    let space2 = enumerate_strategies(&[2, 2], &[2, 2], &[BankInstance::pr(0, 1), BankInstance::pr(1, 0)], u128::MAX).unwrap();
    for k in [31_415_926u128, 2_718_281_828] {
        out.push((format!("two-box profile {k}"), space2.nth(k % space2.count())));
    }
    {
        // Noisy PR box (non-dyadic entries) under non-dyadic shared randomness.
        let noisy = pr_box().mix(&uniform_box(&[2, 2], &[2, 2]).unwrap(), &rat(2, 3)).unwrap();
        let t = Arc::new(Template::new("noisy", noisy).unwrap());
        let mut a = relay(&[0], 0);
        let mut b = relay(&[0], 0);
        for x in 0..2 {
            a.set_output(1, x, &[], x);
            b.set_move(1, x, &[], 0, 1 - x);
            for o in 0..2 {
                b.set_output(1, x, &[o], o);
            }
        }
        out.push((
            "noisy template".into(),
            table_protocol(vec![2, 2], vec![(0, rat(1, 3)), (1, rat(2, 3))], vec![BankInstance { template: t, owners: vec![0, 1] }], vec![a, b]),
        ));
    }
    assert_eq!(out.len(), 20);
    out
}
