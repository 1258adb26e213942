//! No-signaling polytopes: constraints, vertex enumeration and vertex
//! classification.
//!
//! Cells are `(x⃗, a⃗)` pairs in box-table order. Vertices are found by the
//! double-description method on the cone over an affine parametrization of
//! the equality constraints, in exact integer arithmetic.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::boxcore::{self, all_relabelings, pr_box, relabel, BlackBox, BoxError, Relabeling};
use crate::linalg::{self, AffineSolution};
use crate::lp::{self, Feasibility};
use crate::radix::Radix;
use crate::rational::Rational;

/// Default cap on the polytope dimension for vertex enumeration; 15 is the
/// bipartite case with three binary inputs per party.
pub const DEFAULT_DIMENSION_CAP: usize = 15;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PolytopeError {
    #[error("dimension {dimension} exceeds the cap of {cap}")]
    TooLarge { dimension: usize, cap: usize },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("not a vertex: {0}")]
    NotAVertex(String),
    #[error("box lies outside the polytope spanned by the given vertices")]
    Infeasible,
    #[error(transparent)]
    Box(#[from] BoxError),
}

/// Equalities (normalization and no-signaling) over the cells; the
/// inequalities are nonnegativity of every cell.
#[derive(Debug, Clone)]
pub struct HRepresentation {
    input_sizes: Vec<usize>,
    output_sizes: Vec<usize>,
    cells: usize,
    equalities: Vec<Vec<Rational>>,
    rhs: Vec<Rational>,
    rank: usize,
}

impl HRepresentation {
    pub fn input_sizes(&self) -> &[usize] {
        &self.input_sizes
    }

    pub fn output_sizes(&self) -> &[usize] {
        &self.output_sizes
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn equalities(&self) -> &[Vec<Rational>] {
        &self.equalities
    }

    pub fn rhs(&self) -> &[Rational] {
        &self.rhs
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dimension(&self) -> usize {
        self.cells - self.rank
    }

    /// Does `table` satisfy every constraint exactly?
    pub fn contains(&self, table: &[Rational]) -> bool {
        table.len() == self.cells
            && table.iter().all(|p| !p.is_negative())
            && self
                .equalities
                .iter()
                .zip(&self.rhs)
                .all(|(row, b)| row.iter().zip(table).map(|(c, p)| c * p).sum::<Rational>() == *b)
    }

    /// Rank of the constraints tight at `table`: equalities plus the zero cells.
    pub fn tight_rank(&self, table: &[Rational]) -> usize {
        let mut rows = self.equalities.clone();
        for (c, p) in table.iter().enumerate() {
            if p.is_zero() {
                let mut e = vec![Rational::zero(); self.cells];
                e[c] = Rational::one();
                rows.push(e);
            }
        }
        linalg::rank(&rows, self.cells)
    }

    pub fn is_vertex(&self, table: &[Rational]) -> bool {
        self.contains(table) && self.tight_rank(table) == self.cells
    }
}

/// `Π_i (m_i (d_i − 1) + 1) − 1` for `m_i` inputs and `d_i` outputs.
pub fn expected_dimension(input_sizes: &[usize], output_sizes: &[usize]) -> usize {
    input_sizes
        .iter()
        .zip(output_sizes)
        .map(|(&m, &d)| m * (d - 1) + 1)
        .product::<usize>()
        - 1
}

pub fn build_h_rep(input_sizes: &[usize], output_sizes: &[usize]) -> Result<HRepresentation, PolytopeError> {
    let n = input_sizes.len();
    if n == 0 || output_sizes.len() != n {
        return Err(BoxError::DimensionMismatch("alphabet lists must be nonempty and equally long".into()).into());
    }
    if input_sizes.iter().chain(output_sizes).any(|&s| s == 0) {
        return Err(BoxError::DimensionMismatch("alphabets must be nonempty".into()).into());
    }
    let ins = Radix::new(input_sizes);
    let outs = Radix::new(output_sizes);
    let cells = ins.total() * outs.total();
    if cells > 4096 {
        return Err(PolytopeError::TooLarge { dimension: cells, cap: 4096 });
    }
    let cell = |x: &[usize], a: &[usize]| ins.index(x) * outs.total() + outs.index(a);
    let mut equalities = Vec::new();
    let mut rhs = Vec::new();
    for x in ins.iter() {
        let mut row = vec![Rational::zero(); cells];
        for a in outs.iter() {
            row[cell(&x, &a)] = Rational::one();
        }
        equalities.push(row);
        rhs.push(Rational::one());
    }
    // The others' joint marginal must not move when x_i changes from 0.
    for i in 0..n {
        let rest: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        let rest_out = Radix::new(&rest.iter().map(|&j| output_sizes[j]).collect::<Vec<_>>());
        for x in ins.iter().filter(|x| x[i] != 0) {
            let mut x0 = x.clone();
            x0[i] = 0;
            for ar in rest_out.iter() {
                let mut row = vec![Rational::zero(); cells];
                let mut a = vec![0; n];
                for (k, &j) in rest.iter().enumerate() {
                    a[j] = ar[k];
                }
                for ai in 0..output_sizes[i] {
                    a[i] = ai;
                    row[cell(&x, &a)] += Rational::one();
                    row[cell(&x0, &a)] -= Rational::one();
                }
                equalities.push(row);
                rhs.push(Rational::zero());
            }
        }
    }
    let rank = linalg::rank(&equalities, cells);
    let h = HRepresentation {
        input_sizes: input_sizes.to_vec(),
        output_sizes: output_sizes.to_vec(),
        cells,
        equalities,
        rhs,
        rank,
    };
    assert_eq!(
        h.dimension(),
        expected_dimension(input_sizes, output_sizes),
        "no-signaling equalities have unexpected rank"
    );
    Ok(h)
}

// ---------------------------------------------------------------------------
// Double description

type Bits = Vec<u64>;

fn bit_set(b: &mut Bits, i: usize) {
    b[i / 64] |= 1 << (i % 64);
}

fn and_count(a: &Bits, b: &Bits) -> (Bits, u32) {
    let v: Bits = a.iter().zip(b).map(|(x, y)| x & y).collect();
    let c = v.iter().map(|w| w.count_ones()).sum();
    (v, c)
}

fn subset(a: &Bits, b: &Bits) -> bool {
    a.iter().zip(b).all(|(x, y)| x & !y == 0)
}

#[derive(Debug, Clone)]
struct Ray {
    v: Vec<BigInt>,
    zeros: Bits,
}

fn dot(a: &[BigInt], b: &[BigInt]) -> BigInt {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn primitive(mut v: Vec<BigInt>) -> Vec<BigInt> {
    let g = v.iter().fold(BigInt::zero(), |g, x| g.gcd(x));
    if !g.is_zero() && !g.is_one() {
        for x in v.iter_mut() {
            *x /= &g;
        }
    }
    v
}

fn integer_row(row: &[Rational]) -> Vec<BigInt> {
    let l = row.iter().fold(BigInt::one(), |l, r| l.lcm(r.denom()));
    primitive(row.iter().map(|r| r.numer() * (&l / r.denom())).collect())
}

/// Extreme rays of `{y : A y ≥ 0}` for a pointed cone of full dimension.
fn extreme_rays(rows: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    let dim = rows[0].len();
    let words = rows.len().div_ceil(64);
    // Pick `dim` independent rows to start from.
    let mut basis: Vec<usize> = Vec::new();
    let mut work: Vec<Vec<Rational>> = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        let mut trial = work.clone();
        trial.push(r.iter().map(|v| Rational::from_integer(v.clone())).collect());
        if linalg::rank(&trial, dim) > work.len() {
            work = trial;
            basis.push(i);
            if basis.len() == dim {
                break;
            }
        }
    }
    assert_eq!(basis.len(), dim, "cone is not full-dimensional");
    let inv = linalg::inverse(&work).expect("basis rows are independent");
    let mut rays: Vec<Ray> = (0..dim)
        .map(|k| {
            let col: Vec<Rational> = inv.iter().map(|row| row[k].clone()).collect();
            let l = col.iter().fold(BigInt::one(), |l, r| l.lcm(r.denom()));
            let v = primitive(col.iter().map(|r| r.numer() * (&l / r.denom())).collect());
            let mut zeros = vec![0; words];
            for (j, &b) in basis.iter().enumerate() {
                if j != k {
                    bit_set(&mut zeros, b);
                }
            }
            Ray { v, zeros }
        })
        .collect();

    let mut in_basis = vec![false; rows.len()];
    for &b in &basis {
        in_basis[b] = true;
    }
    for (ri, row) in rows.iter().enumerate() {
        if in_basis[ri] {
            continue;
        }
        let vals: Vec<BigInt> = rays.iter().map(|r| dot(row, &r.v)).collect();
        let pos: Vec<usize> = (0..rays.len()).filter(|&k| vals[k].is_positive()).collect();
        let neg: Vec<usize> = (0..rays.len()).filter(|&k| vals[k].is_negative()).collect();
        let mut next: Vec<Ray> = Vec::with_capacity(rays.len());
        for (k, r) in rays.iter().enumerate() {
            if vals[k].is_zero() {
                let mut r = r.clone();
                bit_set(&mut r.zeros, ri);
                next.push(r);
            } else if vals[k].is_positive() {
                next.push(r.clone());
            }
        }
        for &p in &pos {
            for &q in &neg {
                let (common, count) = and_count(&rays[p].zeros, &rays[q].zeros);
                if (count as usize) + 2 < dim {
                    continue;
                }
                let adjacent = rays
                    .iter()
                    .enumerate()
                    .all(|(k, r)| k == p || k == q || !subset(&common, &r.zeros));
                if !adjacent {
                    continue;
                }
                let v: Vec<BigInt> = rays[q]
                    .v
                    .iter()
                    .zip(&rays[p].v)
                    .map(|(a, b)| &vals[p] * a - &vals[q] * b)
                    .collect();
                let mut zeros = common;
                bit_set(&mut zeros, ri);
                next.push(Ray { v: primitive(v), zeros });
            }
        }
        rays = next;
    }
    rays.into_iter().map(|r| r.v).collect()
}

/// Every vertex of a bipartite no-signaling polytope, in a canonical order
/// (lexicographic on the tables).
pub fn enumerate_vertices(h: &HRepresentation, dimension_cap: usize) -> Result<Vec<BlackBox>, PolytopeError> {
    if h.input_sizes.len() != 2 {
        return Err(PolytopeError::Unsupported("vertex enumeration is bipartite only".into()));
    }
    let d = h.dimension();
    if d > dimension_cap {
        return Err(PolytopeError::TooLarge { dimension: d, cap: dimension_cap });
    }
    let AffineSolution { base, dirs, .. } = linalg::solve_affine(&h.equalities, &h.rhs).expect("the uniform box satisfies the equalities");
    // Homogenized cell constraints base_c·t₀ + Σ_k dirs[k]_c·t_k ≥ 0, plus t₀ ≥ 0.
    let mut rows: Vec<Vec<BigInt>> = (0..h.cells)
        .map(|c| {
            let mut r = vec![base[c].clone()];
            r.extend(dirs.iter().map(|dk| dk[c].clone()));
            integer_row(&r)
        })
        .collect();
    let mut t0 = vec![BigInt::zero(); d + 1];
    t0[0] = BigInt::one();
    rows.push(t0);
    let mut out = Vec::new();
    for ray in extreme_rays(&rows) {
        // A bounded polytope has no rays at infinity.
        assert!(ray[0].is_positive(), "unbounded direction in a bounded polytope");
        let t0 = Rational::from_integer(ray[0].clone());
        let table: Vec<Rational> = (0..h.cells)
            .map(|c| {
                let mut p = base[c].clone();
                for (k, dk) in dirs.iter().enumerate() {
                    if !dk[c].is_zero() && !ray[k + 1].is_zero() {
                        p += &dk[c] * Rational::from_integer(ray[k + 1].clone()) / &t0;
                    }
                }
                p
            })
            .collect();
        assert!(h.is_vertex(&table), "double description produced a non-vertex");
        out.push(BlackBox::new(&h.input_sizes, &h.output_sizes, table)?);
    }
    out.sort_by(|a, b| a.table().cmp(b.table()));
    out.dedup();
    Ok(out)
}

// ---------------------------------------------------------------------------
// Classification

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VertexClass {
    LocalDeterministic,
    PrEquivalent,
    FullCorrelation,
    /// Not genuinely two-output: the named input has a fixed output and is
    /// dropped; `inner` classifies what remains.
    Reduced,
    Other,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VertexReport {
    pub vertex: BlackBox,
    pub class: VertexClass,
    /// Output parity per input tuple (row-major over the input radix), for
    /// full-correlation and PR-equivalent vertices.
    pub f: Option<Vec<bool>>,
    /// Maps the vertex onto the canonical PR box, for PR-equivalent vertices.
    pub relabeling: Option<Relabeling>,
    pub reduction: Option<Reduction>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reduction {
    pub party: usize,
    pub input: usize,
    pub output: usize,
    pub inner: Box<VertexReport>,
}

/// Is every output of every party possible for every one of its inputs?
pub fn is_genuine_two_output(b: &BlackBox) -> bool {
    b.output_sizes().iter().all(|&d| d == 2) && fixed_input(b).is_none()
}

/// First `(party, input, output)` whose marginal is a point mass.
fn fixed_input(b: &BlackBox) -> Option<(usize, usize, usize)> {
    let n = b.parties();
    for i in 0..n {
        for xi in 0..b.input_sizes()[i] {
            let mut x = vec![0; n];
            x[i] = xi;
            let row = b.row(b.input_radix().index(&x));
            let mut seen = vec![false; b.output_sizes()[i]];
            let mut a = vec![0; n];
            for (k, p) in row.iter().enumerate() {
                if !p.is_zero() {
                    b.output_radix().decode_into(k, &mut a);
                    seen[a[i]] = true;
                }
            }
            if seen.iter().filter(|&&s| s).count() == 1 {
                return Some((i, xi, seen.iter().position(|&s| s).unwrap()));
            }
        }
    }
    None
}

/// Output parity function if every row is uniform on one parity class.
pub fn full_correlation_function(b: &BlackBox) -> Option<Vec<bool>> {
    if b.output_sizes().iter().any(|&d| d != 2) {
        return None;
    }
    let n = b.parties();
    let weight = crate::rational::dyadic(n as u32 - 1);
    let mut f = Vec::with_capacity(b.input_radix().total());
    let mut a = vec![0; n];
    for xi in 0..b.input_radix().total() {
        let mut parity = None;
        for (k, p) in b.row(xi).iter().enumerate() {
            b.output_radix().decode_into(k, &mut a);
            let odd = a.iter().sum::<usize>() % 2 == 1;
            if p.is_zero() {
                if parity == Some(odd) {
                    return None;
                }
                continue;
            }
            if *p != weight || parity.is_some_and(|q| q != odd) {
                return None;
            }
            parity = Some(odd);
        }
        f.push(parity?);
    }
    // Zero cells of the chosen parity would have broken uniformity above
    // only if seen after it; recheck rows directly.
    for (xi, &odd) in f.iter().enumerate() {
        for (k, p) in b.row(xi).iter().enumerate() {
            b.output_radix().decode_into(k, &mut a);
            if (a.iter().sum::<usize>() % 2 == 1) == odd && *p != weight {
                return None;
            }
        }
    }
    Some(f)
}

fn is_deterministic(b: &BlackBox) -> bool {
    b.table().iter().all(|p| p.is_zero() || p.is_one())
}

/// Classifies a verified vertex: deterministic, then (if genuinely
/// two-output) PR-equivalent or full-correlation, otherwise by dropping an
/// input whose output is fixed and classifying the rest.
pub fn classify_vertex(b: &BlackBox) -> Result<VertexReport, PolytopeError> {
    let h = build_h_rep(b.input_sizes(), b.output_sizes())?;
    if !boxcore::check_no_signaling(b).is_ok() || !h.is_vertex(b.table()) {
        return Err(PolytopeError::NotAVertex(format!(
            "tight constraints have rank {} of {}",
            h.tight_rank(b.table()),
            h.cells()
        )));
    }
    Ok(classify_checked(b))
}

fn classify_checked(b: &BlackBox) -> VertexReport {
    let mut report = VertexReport {
        vertex: b.clone(),
        class: VertexClass::Other,
        f: None,
        relabeling: None,
        reduction: None,
    };
    if is_deterministic(b) {
        report.class = VertexClass::LocalDeterministic;
        return report;
    }
    if is_genuine_two_output(b) {
        if b.input_sizes() == [2, 2] && b.output_sizes() == [2, 2] {
            let pr = pr_box();
            if let Some(r) = all_relabelings(&[2, 2], &[2, 2])
                .into_iter()
                .find(|r| relabel(b, r).is_ok_and(|v| v == pr))
            {
                report.class = VertexClass::PrEquivalent;
                report.relabeling = Some(r);
                report.f = full_correlation_function(b);
                return report;
            }
        }
        if let Some(f) = full_correlation_function(b) {
            report.class = VertexClass::FullCorrelation;
            report.f = Some(f);
        }
        return report;
    }
    if let Some((party, input, output)) = fixed_input(b) {
        if b.input_sizes()[party] > 1 {
            let inner = remove_input(b, party, input);
            report.class = VertexClass::Reduced;
            report.reduction = Some(Reduction {
                party,
                input,
                output,
                inner: Box::new(classify_checked(&inner)),
            });
        }
    }
    report
}

/// The box with one input value of one party deleted.
pub fn remove_input(b: &BlackBox, party: usize, input: usize) -> BlackBox {
    let mut sizes = b.input_sizes().to_vec();
    sizes[party] -= 1;
    BlackBox::from_fn(&sizes, b.output_sizes(), |x, a| {
        let mut old = x.to_vec();
        if old[party] >= input {
            old[party] += 1;
        }
        b.prob(&old, a).clone()
    })
    .expect("deleting an input keeps rows normalized")
}

/// Nonnegative weights over `vertices` reproducing `target` exactly.
pub fn decompose(target: &BlackBox, vertices: &[BlackBox]) -> Result<Vec<Rational>, PolytopeError> {
    if let Some(v) = vertices.iter().find(|v| !v.same_shape(target)) {
        return Err(BoxError::ShapeMismatch(format!(
            "vertex alphabets {:?}/{:?} vs target {:?}/{:?}",
            v.input_sizes(),
            v.output_sizes(),
            target.input_sizes(),
            target.output_sizes()
        ))
        .into());
    }
    // Table cells plus one row forcing the weights to sum to 1.
    let cells = target.table().len();
    let columns: Vec<Vec<(usize, Rational)>> = vertices
        .iter()
        .map(|v| {
            let mut col: Vec<(usize, Rational)> = v
                .table()
                .iter()
                .enumerate()
                .filter(|(_, p)| !p.is_zero())
                .map(|(c, p)| (c, p.clone()))
                .collect();
            col.push((cells, Rational::one()));
            col
        })
        .collect();
    let mut rhs = target.table().to_vec();
    rhs.push(Rational::one());
    match lp::feasibility(&columns, &rhs) {
        Feasibility::Feasible(w) => Ok(w),
        Feasibility::Infeasible(_) => Err(PolytopeError::Infeasible),
    }
}

/// Mixes vertices with the given weights.
pub fn recompose(vertices: &[BlackBox], weights: &[Rational]) -> Result<BlackBox, BoxError> {
    let first = vertices.first().ok_or_else(|| BoxError::DimensionMismatch("no vertices".into()))?;
    let mut table = vec![Rational::zero(); first.table().len()];
    for (v, w) in vertices.iter().zip(weights) {
        if w.is_zero() {
            continue;
        }
        for (t, p) in table.iter_mut().zip(v.table()) {
            *t += p * w;
        }
    }
    BlackBox::new(first.input_sizes(), first.output_sizes(), table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boxcore::{deterministic_box, uniform_box, DeterministicStrategy};
    use crate::rational::rat;

    #[test]
    fn dimensions() {
        assert_eq!(build_h_rep(&[2, 2], &[2, 2]).unwrap().dimension(), 8);
        assert_eq!(build_h_rep(&[2, 2], &[2, 2]).unwrap().cells(), 16);
        assert_eq!(build_h_rep(&[1, 1], &[2, 2]).unwrap().dimension(), 3);
        assert_eq!(build_h_rep(&[3, 3], &[2, 2]).unwrap().dimension(), 15);
        assert_eq!(build_h_rep(&[2, 2, 2], &[2, 2, 2]).unwrap().dimension(), 26);
        assert!(build_h_rep(&[2, 2], &[0, 2]).is_err());
    }

    #[test]
    fn chsh_polytope_vertices() {
        let h = build_h_rep(&[2, 2], &[2, 2]).unwrap();
        let v = enumerate_vertices(&h, DEFAULT_DIMENSION_CAP).unwrap();
        assert_eq!(v.len(), 24);
        let reports: Vec<_> = v.iter().map(|b| classify_vertex(b).unwrap()).collect();
        let local = reports.iter().filter(|r| r.class == VertexClass::LocalDeterministic).count();
        let pr = reports.iter().filter(|r| r.class == VertexClass::PrEquivalent).count();
        assert_eq!((local, pr), (16, 8));
        assert!(v.contains(&pr_box()));
    }

    #[test]
    fn single_input_vertices_are_products() {
        let h = build_h_rep(&[1, 1], &[2, 2]).unwrap();
        let v = enumerate_vertices(&h, DEFAULT_DIMENSION_CAP).unwrap();
        assert_eq!(v.len(), 4);
        assert!(v.iter().all(is_deterministic));
        assert!(matches!(enumerate_vertices(&h, 2), Err(PolytopeError::TooLarge { dimension: 3, cap: 2 })));
    }

    #[test]
    fn classify_known_boxes() {
        let r = classify_vertex(&pr_box()).unwrap();
        assert_eq!(r.class, VertexClass::PrEquivalent);
        assert!(r.relabeling.unwrap().is_identity());
        assert_eq!(r.f, Some(vec![false, false, false, true]));
        let zero = deterministic_box(&[2, 2], &[2, 2], &DeterministicStrategy(vec![vec![0, 0], vec![0, 0]])).unwrap();
        assert_eq!(classify_vertex(&zero).unwrap().class, VertexClass::LocalDeterministic);
        let u = uniform_box(&[2, 2], &[2, 2]).unwrap();
        assert!(matches!(classify_vertex(&u), Err(PolytopeError::NotAVertex(_))));
    }

    #[test]
    fn reduction_of_non_genuine_vertex() {
        // Party 0 has three inputs; input 2 always outputs 0, the rest is a PR box.
        let b = BlackBox::from_fn(&[3, 2], &[2, 2], |x, a| {
            if x[0] == 2 {
                if a[0] == 0 { rat(1, 2) } else { rat(0, 1) }
            } else if (a[0] ^ a[1]) == (x[0] & x[1]) {
                rat(1, 2)
            } else {
                rat(0, 1)
            }
        })
        .unwrap();
        let r = classify_vertex(&b).unwrap();
        assert_eq!(r.class, VertexClass::Reduced);
        let red = r.reduction.unwrap();
        assert_eq!((red.party, red.input, red.output), (0, 2, 0));
        assert_eq!(red.inner.class, VertexClass::PrEquivalent);
    }

    #[test]
    fn decompositions() {
        let h = build_h_rep(&[2, 2], &[2, 2]).unwrap();
        let v = enumerate_vertices(&h, DEFAULT_DIMENSION_CAP).unwrap();
        let u = uniform_box(&[2, 2], &[2, 2]).unwrap();
        let iso = pr_box().mix(&u, &rat(3, 4)).unwrap();
        for target in [u, pr_box(), iso] {
            let w = decompose(&target, &v).unwrap();
            assert!(w.iter().all(|x| !x.is_negative()));
            assert_eq!(recompose(&v, &w).unwrap(), target);
        }
        let w = decompose(&pr_box(), &v).unwrap();
        let k = v.iter().position(|b| *b == pr_box()).unwrap();
        assert!(w[k].is_one());
        // Signaling boxes lie outside.
        let copy = BlackBox::from_fn(&[2, 2], &[2, 2], |x, a| if a[0] == x[1] && a[1] == 0 { rat(1, 1) } else { rat(0, 1) }).unwrap();
        assert_eq!(decompose(&copy, &v), Err(PolytopeError::Infeasible));
    }
}
