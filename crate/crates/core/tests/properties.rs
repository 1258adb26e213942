use num_traits::{One, Zero};
use proptest::prelude::*;

use prbox::boxcore::{
    all_relabelings, check_no_signaling, chsh_max, deterministic_box, full_correlation_box, marginal, pr_box, relabel, BlackBox,
    DeterministicStrategy,
};
use prbox::circuit::{synthesize_nand, TruthTable};
use prbox::rational::{format_rational, parse_rational};
use prbox::wiring::{enumerate_strategies, execute_exact, induced_box, BankInstance};
use prbox::Rational;

fn rational() -> impl Strategy<Value = Rational> {
    (any::<i32>(), 1i32..=i32::MAX).prop_map(|(n, d)| Rational::new(n.into(), d.into()))
}

/// A random mixture of up to four deterministic 2×2×2 boxes and the PR box.
fn mixed_box() -> impl Strategy<Value = BlackBox> {
    let det = prop::collection::vec(0usize..2, 4).prop_map(|o| {
        deterministic_box(&[2, 2], &[2, 2], &DeterministicStrategy(vec![vec![o[0], o[1]], vec![o[2], o[3]]])).unwrap()
    });
    (prop::collection::vec((det, 1u32..9), 1..4), 0u32..9).prop_map(|(parts, pr_weight)| {
        let mut acc = pr_box();
        let mut total = pr_weight.max(1);
        for (b, w) in parts {
            total += w;
            // acc ← (1−t)·acc + t·b keeps acc a convex combination.
            acc = acc.mix(&b, &Rational::new(w.into(), total.into())).unwrap();
        }
        acc
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rational_text_round_trip(r in rational()) {
        let text = format_rational(&r);
        prop_assert!(text.contains('/'));
        prop_assert_eq!(parse_rational(&text).unwrap(), r);
    }

    #[test]
    fn synthesized_circuits_reproduce_their_tables(
        vars in 5usize..=8,
        parties in 1usize..=3,
        seed in any::<u64>(),
        owner_seed in any::<u64>(),
    ) {
        let owners: Vec<usize> = (0..vars).map(|i| (owner_seed >> (2 * i)) as usize % parties).collect();
        let values: Vec<bool> = (0..1usize << vars)
            .map(|r| (seed.rotate_left(r as u32 % 64) ^ (r as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)) >> 63 == 1)
            .collect();
        let t = TruthTable::new(parties, owners, values).unwrap();
        let c = synthesize_nand(&t);
        prop_assert_eq!(c.truth_table().unwrap(), t);
    }

    #[test]
    fn full_correlation_subset_marginals_are_uniform(
        bits in prop::collection::vec(0usize..=2, 2..=4),
        seed in any::<u64>(),
    ) {
        let b = full_correlation_box(&bits, |x| {
            let row = x.iter().zip(&bits).rev().fold(0usize, |acc, (&v, &m)| (acc << m) | v);
            (seed.rotate_left(row as u32 % 64) >> (row % 7)) & 1 == 1
        });
        prop_assert!(check_no_signaling(&b).is_ok());
        let n = bits.len();
        for mask in 1..(1usize << n) - 1 {
            let keep: Vec<usize> = (0..n).filter(|p| mask >> p & 1 == 1).collect();
            let m = marginal(&b, &keep, None).unwrap().table;
            let outs = m.output_radix().total();
            let expect = Rational::new(1.into(), (outs as i64).into());
            prop_assert!(m.table().iter().all(|p| *p == expect));
        }
    }

    #[test]
    fn box_json_round_trip(b in mixed_box()) {
        prop_assert_eq!(BlackBox::from_json(&b.to_json()).unwrap(), b);
    }

    #[test]
    fn chsh_max_is_relabeling_invariant(b in mixed_box(), k in 0usize..128) {
        let r = &all_relabelings(&[2, 2], &[2, 2])[k];
        prop_assert_eq!(chsh_max(&relabel(&b, r).unwrap()).unwrap(), chsh_max(&b).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn enumerated_protocols_are_normalized_and_nonsignaling(k in any::<u64>(), two in any::<bool>()) {
        let bank: Vec<BankInstance> = if two {
            vec![BankInstance::pr(0, 1), BankInstance::pr(1, 0)]
        } else {
            vec![BankInstance::pr(0, 1)]
        };
        let space = enumerate_strategies(&[2, 2], &[2, 2], &bank, u128::MAX).unwrap();
        let p = space.nth(k as u128 % space.count());
        for x in p.input_radix().iter() {
            let d = execute_exact(&p, &x).unwrap();
            prop_assert!(d.total().is_one());
            prop_assert!(d.probs().iter().all(|q| *q >= Rational::zero()));
        }
        prop_assert!(check_no_signaling(&induced_box(&p).unwrap()).is_ok());
    }
}
