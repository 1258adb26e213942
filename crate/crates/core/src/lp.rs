//! Exact linear feasibility: does `A w = b, w >= 0` have a solution?
//!
//! Phase-one simplex over the rationals with Bland's rule. Infeasible systems
//! come back with a Farkas vector `y` such that `yᵀA <= 0` column-wise and
//! `yᵀb > 0`, which callers re-check independently.

use num_traits::{One, Signed, Zero};

use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq)]
pub enum Feasibility {
    /// One nonnegative solution (a basic feasible one).
    Feasible(Vec<Rational>),
    /// Farkas certificate, one entry per row of `A`.
    Infeasible(Vec<Rational>),
}

/// `columns[j]` lists the nonzero `(row, value)` entries of column `j`.
pub fn feasibility(columns: &[Vec<(usize, Rational)>], rhs: &[Rational]) -> Feasibility {
    let m = rhs.len();
    let n = columns.len();
    let width = n + m + 1;
    let rhs_col = n + m;

    let sign: Vec<bool> = rhs.iter().map(|b| b.is_negative()).collect();
    let mut tab: Vec<Vec<Rational>> = (0..m)
        .map(|r| {
            let mut row = vec![Rational::zero(); width];
            row[n + r] = Rational::one();
            row[rhs_col] = if sign[r] { -rhs[r].clone() } else { rhs[r].clone() };
            row
        })
        .collect();
    for (j, col) in columns.iter().enumerate() {
        for (r, v) in col {
            tab[*r][j] = if sign[*r] { -v.clone() } else { v.clone() };
        }
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    // Reduced costs of the phase-one objective (sum of artificials).
    let mut cost = vec![Rational::zero(); width];
    for row in &tab {
        for j in 0..n {
            if !row[j].is_zero() {
                cost[j] -= &row[j];
            }
        }
        cost[rhs_col] -= &row[rhs_col];
    }

    loop {
        let Some(enter) = (0..n).find(|&j| cost[j].is_negative()) else {
            break;
        };
        let mut leave: Option<(usize, Rational)> = None;
        for r in 0..m {
            if !tab[r][enter].is_positive() {
                continue;
            }
            let ratio = &tab[r][rhs_col] / &tab[r][enter];
            let better = match &leave {
                None => true,
                Some((lr, best)) => ratio < *best || (ratio == *best && basis[r] < basis[*lr]),
            };
            if better {
                leave = Some((r, ratio));
            }
        }
        // Phase one is bounded below by zero, so an entering column always
        // has a positive entry in some row.
        let (pr, _) = leave.expect("phase-one simplex is bounded");
        pivot(&mut tab, &mut cost, pr, enter);
        basis[pr] = enter;
    }

    let objective = -cost[rhs_col].clone();
    if objective.is_zero() {
        let mut w = vec![Rational::zero(); n];
        for (r, &b) in basis.iter().enumerate() {
            if b < n {
                w[b] = tab[r][rhs_col].clone();
            }
        }
        Feasibility::Feasible(w)
    } else {
        // y = c_Bᵀ B⁻¹; B⁻¹ lives in the artificial columns of the tableau.
        let mut y = vec![Rational::zero(); m];
        for (r, &b) in basis.iter().enumerate() {
            if b >= n {
                for (k, yk) in y.iter_mut().enumerate() {
                    if !tab[r][n + k].is_zero() {
                        *yk += &tab[r][n + k];
                    }
                }
            }
        }
        for (k, yk) in y.iter_mut().enumerate() {
            if sign[k] {
                *yk = -yk.clone();
            }
        }
        Feasibility::Infeasible(y)
    }
}

fn pivot(tab: &mut [Vec<Rational>], cost: &mut [Rational], pr: usize, pc: usize) {
    let inv = Rational::one() / &tab[pr][pc];
    for v in tab[pr].iter_mut() {
        if !v.is_zero() {
            *v *= &inv;
        }
    }
    let prow = tab[pr].clone();
    let nz: Vec<usize> = (0..prow.len()).filter(|&j| !prow[j].is_zero()).collect();
    for (r, row) in tab.iter_mut().enumerate() {
        if r == pr || row[pc].is_zero() {
            continue;
        }
        let f = row[pc].clone();
        for &j in &nz {
            row[j] -= &f * &prow[j];
        }
    }
    if !cost[pc].is_zero() {
        let f = cost[pc].clone();
        for &j in &nz {
            cost[j] -= &f * &prow[j];
        }
    }
}

/// Checks `yᵀA <= 0` for every column and `yᵀb > 0`.
pub fn is_farkas_certificate(columns: &[Vec<(usize, Rational)>], rhs: &[Rational], y: &[Rational]) -> bool {
    let yb: Rational = rhs.iter().zip(y).map(|(b, v)| b * v).sum();
    yb.is_positive()
        && columns.iter().all(|col| {
            let s: Rational = col.iter().map(|(r, v)| v * &y[*r]).sum();
            !s.is_positive()
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn dense(cols: &[&[i64]]) -> Vec<Vec<(usize, Rational)>> {
        cols.iter()
            .map(|c| {
                c.iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0)
                    .map(|(r, v)| (r, int(*v)))
                    .collect()
            })
            .collect()
    }

    #[test]
    fn feasible_mixture() {
        // w0 * (1,0) + w1 * (0,1) + w2 * (1,1) = (1/2, 1/2)
        let cols = dense(&[&[1, 0], &[0, 1], &[1, 1]]);
        let rhs = vec![rat(1, 2), rat(1, 2)];
        match feasibility(&cols, &rhs) {
            Feasibility::Feasible(w) => {
                assert!(w.iter().all(|v| !v.is_negative()));
                for r in 0..2 {
                    let s: Rational = cols
                        .iter()
                        .zip(&w)
                        .map(|(c, wj)| c.iter().filter(|(i, _)| *i == r).map(|(_, v)| v * wj).sum::<Rational>())
                        .sum();
                    assert_eq!(s, rhs[r]);
                }
            }
            other => panic!("expected feasible, got {other:?}"),
        }
    }

    #[test]
    fn infeasible_has_certificate() {
        // w0 * (1,1) = (1, 0) is impossible
        let cols = dense(&[&[1, 1]]);
        let rhs = vec![int(1), int(0)];
        match feasibility(&cols, &rhs) {
            Feasibility::Infeasible(y) => assert!(is_farkas_certificate(&cols, &rhs, &y)),
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn negative_rhs_and_no_columns() {
        let rhs = vec![int(-1)];
        match feasibility(&[], &rhs) {
            Feasibility::Infeasible(y) => assert!(is_farkas_certificate(&[], &rhs, &y)),
            other => panic!("{other:?}"),
        }
        let cols = dense(&[&[-2]]);
        assert_eq!(feasibility(&cols, &rhs), Feasibility::Feasible(vec![rat(1, 2)]));
    }
}
