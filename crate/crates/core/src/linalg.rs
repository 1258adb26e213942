//! Exact Gaussian elimination over the rationals.

use num_traits::{One, Zero};

use crate::rational::Rational;

/// Reduces `rows` (each of width `ncols`, possibly augmented beyond that) to
/// reduced row echelon form in place, considering only the first `ncols`
/// columns for pivots. Zero rows are moved to the bottom. Returns the pivot
/// column of each nonzero row, in order.
pub fn rref(rows: &mut [Vec<Rational>], ncols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == rows.len() {
            break;
        }
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let inv = Rational::one() / &rows[r][c];
        if !inv.is_one() {
            for v in rows[r].iter_mut() {
                if !v.is_zero() {
                    *v *= &inv;
                }
            }
        }
        let pivot_row = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let factor = row[c].clone();
            for (v, p) in row.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *v -= &factor * p;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank(rows: &[Vec<Rational>], ncols: usize) -> usize {
    let mut work = rows.to_vec();
    rref(&mut work, ncols).len()
}

/// Affine parametrization `p = base + Σ_k dirs[k] * t_k` of the solution set
/// of `matrix · p = rhs`, with the free variables as parameters.
#[derive(Debug, Clone)]
pub struct AffineSolution {
    pub base: Vec<Rational>,
    /// `dirs[k]` is the direction attached to `free[k]`.
    pub dirs: Vec<Vec<Rational>>,
    pub free: Vec<usize>,
    pub pivots: Vec<usize>,
}

/// Returns `None` when the system is inconsistent.
pub fn solve_affine(matrix: &[Vec<Rational>], rhs: &[Rational]) -> Option<AffineSolution> {
    let ncols = matrix.first().map_or(0, Vec::len);
    let mut aug: Vec<Vec<Rational>> = matrix
        .iter()
        .zip(rhs)
        .map(|(row, b)| {
            let mut r = row.clone();
            r.push(b.clone());
            r
        })
        .collect();
    let pivots = rref(&mut aug, ncols);
    if aug[pivots.len()..].iter().any(|row| !row[ncols].is_zero()) {
        return None;
    }
    let mut is_pivot = vec![false; ncols];
    for &c in &pivots {
        is_pivot[c] = true;
    }
    let free: Vec<usize> = (0..ncols).filter(|&c| !is_pivot[c]).collect();
    let mut base = vec![Rational::zero(); ncols];
    for (r, &c) in pivots.iter().enumerate() {
        base[c] = aug[r][ncols].clone();
    }
    let dirs = free
        .iter()
        .map(|&f| {
            let mut d = vec![Rational::zero(); ncols];
            d[f] = Rational::one();
            for (r, &c) in pivots.iter().enumerate() {
                d[c] = -aug[r][f].clone();
            }
            d
        })
        .collect();
    Some(AffineSolution {
        base,
        dirs,
        free,
        pivots,
    })
}

/// Inverse of a square nonsingular matrix.
pub fn inverse(matrix: &[Vec<Rational>]) -> Option<Vec<Vec<Rational>>> {
    let n = matrix.len();
    let mut aug: Vec<Vec<Rational>> = matrix
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { Rational::one() } else { Rational::zero() }));
            r
        })
        .collect();
    if rref(&mut aug, n).len() < n {
        return None;
    }
    Some(aug.into_iter().map(|row| row[n..].to_vec()).collect())
}
