//! Library vertex enumeration against the tight-subset brute force in
//! `common`, on every bipartite shape small enough for the oracle.

mod common;

use prbox::boxcore::{all_relabelings, check_no_signaling, pr_box, relabel};
use prbox::polytope::{build_h_rep, enumerate_vertices, DEFAULT_DIMENSION_CAP};
use prbox::Rational;

fn library(inputs: [usize; 2], outputs: [usize; 2]) -> (usize, Vec<Vec<Rational>>) {
    let h = build_h_rep(&inputs, &outputs).unwrap();
    let mut vs: Vec<Vec<Rational>> = enumerate_vertices(&h, DEFAULT_DIMENSION_CAP)
        .unwrap()
        .iter()
        .map(|b| {
            assert!(check_no_signaling(b).is_ok());
            assert!(h.is_vertex(b.table()));
            b.table().to_vec()
        })
        .collect();
    vs.sort();
    (h.dimension(), vs)
}

#[test]
fn shapes_agree_with_oracle() {
    for (inputs, outputs, count) in [
        ([2, 2], [2, 2], 24),
        ([1, 2], [2, 2], 8),
        ([2, 1], [2, 2], 8),
        ([1, 1], [3, 3], 9),
        ([2, 1], [2, 3], 12),
        ([2, 1], [3, 2], 18),
    ] {
        let (dim, lib) = library(inputs, outputs);
        let oracle = common::oracle_vertices(inputs[0], inputs[1], outputs[0], outputs[1], dim);
        assert_eq!(lib, oracle, "inputs {inputs:?} outputs {outputs:?}");
        assert_eq!(lib.len(), count, "inputs {inputs:?} outputs {outputs:?}");
    }
}

#[test]
fn nonlocal_2222_vertices_are_the_pr_orbit() {
    let (_, lib) = library([2, 2], [2, 2]);
    let mut orbit: Vec<Vec<Rational>> = all_relabelings(&[2, 2], &[2, 2])
        .iter()
        .map(|r| relabel(&pr_box(), r).unwrap().table().to_vec())
        .collect();
    orbit.sort();
    orbit.dedup();
    assert_eq!(orbit.len(), 8);
    let fractional: Vec<_> = lib.into_iter().filter(|v| v.iter().any(|p| !p.is_integer())).collect();
    assert_eq!(fractional, orbit);
}
