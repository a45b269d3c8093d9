//! Exact linear algebra over the integers and over finite products
//! `Z/p^{k_1} x ... x Z/p^{k_n}`.
//!
//! Subgroups of such products are kept in a canonical echelon form. The
//! convention: every coordinate `j` is embedded into `Z/p^K` (with `K` the
//! largest exponent) by multiplication with `p^{K - k_j}`; inside that
//! uniform module the basis is the Howell form: pivots are powers of `p`,
//! columns are processed left to right, entries above a pivot `p^v` lie in
//! `[0, p^v)`, and for every row with pivot `p^v` the multiple
//! `p^{K - v} * row` lies in the span of the rows below it. Two generating
//! sets of the same subgroup therefore give bitwise-identical bases.

use std::fmt;
use std::ops::Index;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinalgError {
    #[error("vector of length {got} does not match ambient rank {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("subgroups live in different ambient groups")]
    AmbientMismatch,
    #[error("subgroup is not contained in the larger subgroup (witness {witness:?})")]
    NotContained { witness: Vec<BigInt> },
}

pub fn big_pow(p: u64, k: u32) -> BigInt {
    num_traits::pow(BigInt::from(p), k as usize)
}

/// `p`-adic valuation of a nonzero integer; `None` for zero.
pub fn valuation(x: &BigInt, p: u64) -> Option<u32> {
    if x.is_zero() {
        return None;
    }
    let p = BigInt::from(p);
    let mut v = 0;
    let mut y = x.abs();
    while (&y % &p).is_zero() {
        y /= &p;
        v += 1;
    }
    Some(v)
}

fn mod_inverse(a: &BigInt, m: &BigInt) -> BigInt {
    let e = a.mod_floor(m).extended_gcd(m);
    debug_assert!(e.gcd.is_one(), "not a unit");
    e.x.mod_floor(m)
}

// ---------------------------------------------------------------------------
// Integer matrices

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix { rows, cols, data: vec![BigInt::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = BigInt::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Self {
        let big: Vec<Vec<BigInt>> =
            rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect();
        Self::from_big_rows(big, rows.first().map_or(0, |r| r.len()))
    }

    /// Builds a matrix from rows; `cols` is needed when there are no rows.
    pub fn from_big_rows(rows: Vec<Vec<BigInt>>, cols: usize) -> Self {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged matrix");
            data.extend(r);
        }
        IntMatrix { rows: n, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[BigInt] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn set(&mut self, r: usize, c: usize, x: BigInt) {
        self.data[r * self.cols + c] = x;
    }

    fn at_mut(&mut self, r: usize, c: usize) -> &mut BigInt {
        &mut self.data[r * self.cols + c]
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = IntMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(k, j)];
                    if !b.is_zero() {
                        *out.at_mut(i, j) += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.rows).all(|i| (0..self.cols).all(|j| i == j || self[(i, j)].is_zero()))
    }

    pub fn diagonal(&self) -> Vec<BigInt> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)].clone()).collect()
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for r in 0..self.rows {
            self.data.swap(r * self.cols + a, r * self.cols + b);
        }
    }

    /// row[dst] += k * row[src]
    fn add_row_multiple(&mut self, dst: usize, src: usize, k: &BigInt) {
        for c in 0..self.cols {
            let s = self.data[src * self.cols + c].clone();
            if !s.is_zero() {
                self.data[dst * self.cols + c] += k * s;
            }
        }
    }

    /// col[dst] += k * col[src]
    fn add_col_multiple(&mut self, dst: usize, src: usize, k: &BigInt) {
        for r in 0..self.rows {
            let s = self.data[r * self.cols + src].clone();
            if !s.is_zero() {
                self.data[r * self.cols + dst] += k * s;
            }
        }
    }

    fn negate_row(&mut self, r: usize) {
        for c in 0..self.cols {
            let x = std::mem::take(&mut self.data[r * self.cols + c]);
            self.data[r * self.cols + c] = -x;
        }
    }
}

impl Index<(usize, usize)> for IntMatrix {
    type Output = BigInt;
    fn index(&self, (r, c): (usize, usize)) -> &BigInt {
        &self.data[r * self.cols + c]
    }
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<Vec<String>> = (0..self.rows)
            .map(|r| self.row(r).iter().map(|x| x.to_string()).collect())
            .collect();
        write!(f, "IntMatrix{rows:?}")
    }
}

/// Smith normal form `D = U * M * V` with `U`, `V` unimodular.
#[derive(Clone, Debug)]
pub struct SmithForm {
    pub d: IntMatrix,
    pub u: IntMatrix,
    pub v: IntMatrix,
}

pub fn smith_normal_form(m: &IntMatrix) -> SmithForm {
    let (rows, cols) = (m.rows, m.cols);
    let mut d = m.clone();
    let mut u = IntMatrix::identity(rows);
    let mut v = IntMatrix::identity(cols);

    for t in 0..rows.min(cols) {
        loop {
            // smallest nonzero entry of the trailing block becomes the pivot
            let mut best: Option<(usize, usize)> = None;
            for i in t..rows {
                for j in t..cols {
                    let x = &d[(i, j)];
                    if !x.is_zero()
                        && best.map_or(true, |(bi, bj)| x.abs() < d[(bi, bj)].abs())
                    {
                        best = Some((i, j));
                    }
                }
            }
            let Some((bi, bj)) = best else {
                return finish_smith(d, u, v);
            };
            d.swap_rows(t, bi);
            u.swap_rows(t, bi);
            d.swap_cols(t, bj);
            v.swap_cols(t, bj);

            let mut dirty = false;
            for i in t + 1..rows {
                if d[(i, t)].is_zero() {
                    continue;
                }
                let q = -d[(i, t)].div_floor(&d[(t, t)]);
                d.add_row_multiple(i, t, &q);
                u.add_row_multiple(i, t, &q);
                dirty |= !d[(i, t)].is_zero();
            }
            for j in t + 1..cols {
                if d[(t, j)].is_zero() {
                    continue;
                }
                let q = -d[(t, j)].div_floor(&d[(t, t)]);
                d.add_col_multiple(j, t, &q);
                v.add_col_multiple(j, t, &q);
                dirty |= !d[(t, j)].is_zero();
            }
            if dirty {
                continue;
            }
            // divisibility: pull an offending row into row t and retry
            let piv = d[(t, t)].clone();
            let offending =
                (t + 1..rows).find(|&i| (t + 1..cols).any(|j| !(&d[(i, j)] % &piv).is_zero()));
            match offending {
                Some(i) => {
                    let one = BigInt::one();
                    d.add_row_multiple(t, i, &one);
                    u.add_row_multiple(t, i, &one);
                }
                None => {
                    if piv.is_negative() {
                        d.negate_row(t);
                        u.negate_row(t);
                    }
                    break;
                }
            }
        }
    }
    finish_smith(d, u, v)
}

fn finish_smith(d: IntMatrix, u: IntMatrix, v: IntMatrix) -> SmithForm {
    SmithForm { d, u, v }
}

/// Nontrivial invariant factors (entries other than 1) of a relation
/// matrix, in divisibility order. A zero entry stands for an infinite cyclic
/// factor; free columns beyond the rank are reported as zeros as well.
pub fn relation_invariants(rel: &IntMatrix) -> Vec<BigInt> {
    let snf = smith_normal_form(rel);
    let diag = snf.d.diagonal();
    let mut out: Vec<BigInt> = diag.into_iter().filter(|x| !x.is_one()).collect();
    for _ in rel.rows.min(rel.cols)..rel.cols {
        out.push(BigInt::zero());
    }
    // zeros sort last, the rest are already a divisibility chain
    out.sort_by(|a, b| match (a.is_zero(), b.is_zero()) {
        (true, true) => std::cmp::Ordering::Equal,
        (true, false) => std::cmp::Ordering::Greater,
        (false, true) => std::cmp::Ordering::Less,
        _ => a.cmp(b),
    });
    out
}

// ---------------------------------------------------------------------------
// Subgroups of Z/p^{k_1} x ... x Z/p^{k_n}

/// Howell-form workspace over `Z/p^top`.
struct Howell {
    p: u64,
    modulus: BigInt,
    rows: Vec<Vec<BigInt>>,
    pivots: Vec<(usize, u32)>,
}

impl Howell {
    fn build(p: u64, top: u32, ncols: usize, pending: Vec<Vec<BigInt>>) -> Howell {
        let modulus = big_pow(p, top);
        let mut pending: Vec<Vec<BigInt>> = pending
            .into_iter()
            .map(|r| r.into_iter().map(|x| x.mod_floor(&modulus)).collect::<Vec<_>>())
            .filter(|r| r.iter().any(|x| !x.is_zero()))
            .collect();
        let mut rows = Vec::new();
        let mut pivots = Vec::new();
        for col in 0..ncols {
            let mut best: Option<(usize, u32)> = None;
            for (idx, r) in pending.iter().enumerate() {
                if let Some(v) = valuation(&r[col], p) {
                    if best.map_or(true, |(_, bv)| v < bv) {
                        best = Some((idx, v));
                    }
                }
            }
            let Some((idx, v)) = best else { continue };
            let mut piv = pending.swap_remove(idx);
            let pv = big_pow(p, v);
            let unit = &piv[col] / &pv;
            let inv = mod_inverse(&unit, &modulus);
            for x in piv.iter_mut() {
                *x = (&*x * &inv).mod_floor(&modulus);
            }
            for r in pending.iter_mut() {
                if r[col].is_zero() {
                    continue;
                }
                let f = &r[col] / &pv;
                for (x, y) in r.iter_mut().zip(&piv) {
                    *x = (&*x - &f * y).mod_floor(&modulus);
                }
            }
            pending.retain(|r| r.iter().any(|x| !x.is_zero()));
            if v > 0 {
                let s = big_pow(p, top - v);
                let extra: Vec<BigInt> = piv.iter().map(|x| (x * &s).mod_floor(&modulus)).collect();
                if extra.iter().any(|x| !x.is_zero()) {
                    pending.push(extra);
                }
            }
            rows.push(piv);
            pivots.push((col, v));
        }
        debug_assert!(pending.is_empty());
        for i in 0..rows.len() {
            let (c, v) = pivots[i];
            let pv = big_pow(p, v);
            for j in 0..i {
                let q = rows[j][c].div_floor(&pv);
                if q.is_zero() {
                    continue;
                }
                let (head, tail) = rows.split_at_mut(i);
                for (x, y) in head[j].iter_mut().zip(&tail[0]) {
                    *x = (&*x - &q * y).mod_floor(&modulus);
                }
            }
        }
        Howell { p, modulus, rows, pivots }
    }

    /// Reduces `x` by the rows whose pivot column is `< limit`; returns the
    /// remainder and the coefficients used.
    fn reduce(&self, x: &[BigInt], limit: usize) -> (Vec<BigInt>, Vec<BigInt>) {
        let mut x: Vec<BigInt> = x.iter().map(|a| a.mod_floor(&self.modulus)).collect();
        let mut coeffs = vec![BigInt::zero(); self.rows.len()];
        for (i, &(c, v)) in self.pivots.iter().enumerate() {
            if c >= limit {
                break;
            }
            if x[c].is_zero() {
                continue;
            }
            let pv = big_pow(self.p, v);
            if !(&x[c] % &pv).is_zero() {
                continue;
            }
            let q = &x[c] / &pv;
            for (a, b) in x.iter_mut().zip(&self.rows[i]) {
                *a = (&*a - &q * b).mod_floor(&self.modulus);
            }
            coeffs[i] = q;
        }
        (x, coeffs)
    }
}

/// A subgroup of `Z/p^{k_1} x ... x Z/p^{k_n}` in canonical echelon form.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ResidueSubgroup {
    p: u64,
    exps: Vec<u32>,
    top: u32,
    /// Howell rows in the uniform embedding.
    rows: Vec<Vec<BigInt>>,
    pivots: Vec<(usize, u32)>,
}

impl fmt::Debug for ResidueSubgroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let basis: Vec<Vec<String>> =
            self.basis().iter().map(|r| r.iter().map(|x| x.to_string()).collect()).collect();
        f.debug_struct("ResidueSubgroup")
            .field("p", &self.p)
            .field("exps", &self.exps)
            .field("basis", &basis)
            .finish()
    }
}

/// Serializable view of a subgroup: moduli exponents plus canonical basis.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubgroupRecord {
    pub p: u64,
    pub exps: Vec<u32>,
    pub basis: Vec<Vec<String>>,
}

impl ResidueSubgroup {
    fn shift(&self, j: usize) -> u32 {
        self.top - self.exps[j]
    }

    fn embed(&self, x: &[BigInt]) -> Vec<BigInt> {
        let m = big_pow(self.p, self.top);
        x.iter()
            .enumerate()
            .map(|(j, a)| (a.mod_floor(&big_pow(self.p, self.exps[j])) * big_pow(self.p, self.shift(j))).mod_floor(&m))
            .collect()
    }

    fn unembed(&self, x: &[BigInt]) -> Vec<BigInt> {
        x.iter().enumerate().map(|(j, a)| a / big_pow(self.p, self.shift(j))).collect()
    }

    fn from_embedded(p: u64, exps: Vec<u32>, top: u32, gens: Vec<Vec<BigInt>>) -> Self {
        let h = Howell::build(p, top, exps.len(), gens);
        ResidueSubgroup { p, exps, top, rows: h.rows, pivots: h.pivots }
    }

    /// Canonical form of the subgroup generated by `gens`.
    pub fn generated(p: u64, exps: &[u32], gens: &[Vec<BigInt>]) -> Result<Self, LinalgError> {
        for g in gens {
            if g.len() != exps.len() {
                return Err(LinalgError::LengthMismatch { expected: exps.len(), got: g.len() });
            }
        }
        let top = exps.iter().copied().max().unwrap_or(0);
        let shell = ResidueSubgroup { p, exps: exps.to_vec(), top, rows: vec![], pivots: vec![] };
        let emb = gens.iter().map(|g| shell.embed(g)).collect();
        Ok(Self::from_embedded(p, exps.to_vec(), top, emb))
    }

    pub fn from_i64(p: u64, exps: &[u32], gens: &[Vec<i64>]) -> Result<Self, LinalgError> {
        let big: Vec<Vec<BigInt>> =
            gens.iter().map(|g| g.iter().map(|&x| BigInt::from(x)).collect()).collect();
        Self::generated(p, exps, &big)
    }

    pub fn trivial(p: u64, exps: &[u32]) -> Self {
        Self::generated(p, exps, &[]).expect("no generators")
    }

    pub fn full(p: u64, exps: &[u32]) -> Self {
        let n = exps.len();
        let gens: Vec<Vec<BigInt>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
            .collect();
        Self::generated(p, exps, &gens).expect("unit vectors")
    }

    /// Elements killed by `p^j`.
    pub fn torsion(p: u64, exps: &[u32], j: u32) -> Self {
        let n = exps.len();
        let gens: Vec<Vec<BigInt>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|c| if i == c { big_pow(p, exps[i].saturating_sub(j)) } else { BigInt::zero() })
                    .collect()
            })
            .collect();
        Self::generated(p, exps, &gens).expect("unit vectors")
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn exps(&self) -> &[u32] {
        &self.exps
    }

    pub fn ambient_rank(&self) -> usize {
        self.exps.len()
    }

    pub fn moduli(&self) -> Vec<BigInt> {
        self.exps.iter().map(|&e| big_pow(self.p, e)).collect()
    }

    /// Canonical basis in the original coordinates.
    pub fn basis(&self) -> Vec<Vec<BigInt>> {
        self.rows.iter().map(|r| self.unembed(r)).collect()
    }

    pub fn record(&self) -> SubgroupRecord {
        SubgroupRecord {
            p: self.p,
            exps: self.exps.clone(),
            basis: self
                .basis()
                .iter()
                .map(|r| r.iter().map(|x| x.to_string()).collect())
                .collect(),
        }
    }

    /// `log_p` of the subgroup order.
    pub fn order_exp(&self) -> u32 {
        self.pivots.iter().map(|&(_, v)| self.top - v).sum()
    }

    pub fn order(&self) -> BigInt {
        big_pow(self.p, self.order_exp())
    }

    pub fn is_trivial(&self) -> bool {
        self.rows.is_empty()
    }

    fn same_ambient(&self, other: &Self) -> Result<(), LinalgError> {
        if self.p != other.p || self.exps != other.exps {
            return Err(LinalgError::AmbientMismatch);
        }
        Ok(())
    }

    fn howell(&self) -> Howell {
        Howell {
            p: self.p,
            modulus: big_pow(self.p, self.top),
            rows: self.rows.clone(),
            pivots: self.pivots.clone(),
        }
    }

    pub fn contains(&self, x: &[BigInt]) -> Result<bool, LinalgError> {
        if x.len() != self.exps.len() {
            return Err(LinalgError::LengthMismatch { expected: self.exps.len(), got: x.len() });
        }
        let (rem, _) = self.howell().reduce(&self.embed(x), usize::MAX);
        Ok(rem.iter().all(|a| a.is_zero()))
    }

    /// First basis vector of `other` lying outside `self`, if any.
    pub fn non_member_of(&self, other: &Self) -> Result<Option<Vec<BigInt>>, LinalgError> {
        self.same_ambient(other)?;
        for b in other.basis() {
            if !self.contains(&b)? {
                return Ok(Some(b));
            }
        }
        Ok(None)
    }

    pub fn contains_subgroup(&self, other: &Self) -> Result<bool, LinalgError> {
        Ok(self.non_member_of(other)?.is_none())
    }

    /// Coefficients of `x` with respect to the canonical basis, or `None`
    /// when `x` is not a member.
    pub fn coefficients(&self, x: &[BigInt]) -> Option<Vec<BigInt>> {
        let (rem, c) = self.howell().reduce(&self.embed(x), usize::MAX);
        rem.iter().all(|a| a.is_zero()).then_some(c)
    }

    pub fn sum(&self, other: &Self) -> Result<Self, LinalgError> {
        self.same_ambient(other)?;
        let gens = self.rows.iter().chain(&other.rows).cloned().collect();
        Ok(Self::from_embedded(self.p, self.exps.clone(), self.top, gens))
    }

    /// The subgroup `p^s * self`.
    pub fn scaled(&self, s: u32) -> Self {
        let f = big_pow(self.p, s);
        let gens = self.rows.iter().map(|r| r.iter().map(|x| x * &f).collect()).collect();
        Self::from_embedded(self.p, self.exps.clone(), self.top, gens)
    }

    pub fn intersection(&self, other: &Self) -> Result<Self, LinalgError> {
        self.same_ambient(other)?;
        let n = self.exps.len();
        let (a, b) = (self.basis(), other.basis());
        // columns of the map (x, y) -> sum x_i a_i - sum y_j b_j
        let mut cols: Vec<Vec<BigInt>> = a.clone();
        cols.extend(b.iter().map(|v| v.iter().map(|x| -x).collect::<Vec<_>>()));
        let src = vec![self.top; cols.len()];
        let ker = kernel_of_columns(self.p, &self.exps, &src, &cols);
        let mut gens = Vec::new();
        for k in ker.basis() {
            let mut v = vec![BigInt::zero(); n];
            for (coef, row) in k.iter().zip(&a) {
                for (t, r) in v.iter_mut().zip(row) {
                    *t += coef * r;
                }
            }
            gens.push(v);
        }
        Self::generated(self.p, &self.exps, &gens)
    }

    /// Relation matrix of this subgroup on its canonical basis: row `i`
    /// encodes `p^{K - v_i} z_i = sum_{j > i} c_j z_j`.
    fn self_relations(&self) -> Vec<Vec<BigInt>> {
        let h = self.howell();
        let s = self.rows.len();
        let mut out = Vec::with_capacity(s);
        for i in 0..s {
            let (_, v) = self.pivots[i];
            let f = big_pow(self.p, self.top - v);
            let mult: Vec<BigInt> = self.rows[i].iter().map(|x| (x * &f).mod_floor(&h.modulus)).collect();
            let (rem, coeffs) = h.reduce(&mult, usize::MAX);
            debug_assert!(rem.iter().all(|x| x.is_zero()), "Howell property violated");
            let mut row: Vec<BigInt> = coeffs.into_iter().map(|c| -c).collect();
            row[i] += &f;
            out.push(row);
        }
        out
    }

    /// Abelian invariants of the subgroup itself.
    pub fn invariants(&self) -> Vec<BigInt> {
        let rel = self.self_relations();
        relation_invariants(&IntMatrix::from_big_rows(rel, self.rows.len()))
    }
}

/// Kernel of the homomorphism `⊕ Z/p^{src_j} -> ⊕ Z/p^{target_i}` whose
/// `j`-th column (image of the `j`-th unit vector) is `cols[j]`.
pub fn kernel_of_columns(
    p: u64,
    target_exps: &[u32],
    src_exps: &[u32],
    cols: &[Vec<BigInt>],
) -> ResidueSubgroup {
    let nt = target_exps.len();
    let mut exps = target_exps.to_vec();
    exps.extend_from_slice(src_exps);
    let mut gens = Vec::with_capacity(cols.len());
    for (j, c) in cols.iter().enumerate() {
        let mut row = c.clone();
        row.extend((0..src_exps.len()).map(|k| if k == j { BigInt::one() } else { BigInt::zero() }));
        gens.push(row);
    }
    let graph = ResidueSubgroup::generated(p, &exps, &gens).expect("consistent lengths");
    let kernel_gens: Vec<Vec<BigInt>> = graph
        .basis()
        .into_iter()
        .zip(&graph.pivots)
        .filter(|(_, &(c, _))| c >= nt)
        .map(|(row, _)| row[nt..].to_vec())
        .collect();
    ResidueSubgroup::generated(p, src_exps, &kernel_gens).expect("consistent lengths")
}

/// Image of the homomorphism described by `cols` (see [`kernel_of_columns`]).
pub fn image_of_columns(p: u64, target_exps: &[u32], cols: &[Vec<BigInt>]) -> ResidueSubgroup {
    ResidueSubgroup::generated(p, target_exps, cols).expect("column length")
}

/// Sorted invariants of `z / b`.
pub fn quotient_invariants(z: &ResidueSubgroup, b: &ResidueSubgroup) -> Result<Vec<BigInt>, LinalgError> {
    z.same_ambient(b)?;
    if let Some(w) = z.non_member_of(b)? {
        return Err(LinalgError::NotContained { witness: w });
    }
    let mut rel = z.self_relations();
    for v in b.basis() {
        rel.push(z.coefficients(&v).expect("checked membership"));
    }
    let m = IntMatrix::from_big_rows(rel, z.rows.len());
    Ok(relation_invariants(&m))
}

/// Solution set of a linear congruence system.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearSolution {
    pub particular: Vec<BigInt>,
    pub kernel: ResidueSubgroup,
}

/// Solves `A x ≡ b` where row `i` is read modulo `p^{row_exps[i]}`. The
/// unknowns live in `Z/p^K` with `K` the largest row exponent. Returns
/// `None` when the system has no solution.
pub fn solve_linear_mod(
    a: &IntMatrix,
    b: &[BigInt],
    p: u64,
    row_exps: &[u32],
) -> Result<Option<LinearSolution>, LinalgError> {
    let top = row_exps.iter().copied().max().unwrap_or(0);
    solve_linear_mod_with(a, b, p, row_exps, &vec![top; a.cols()])
}

/// As [`solve_linear_mod`] with explicit moduli `p^{var_exps[j]}` for the
/// unknowns; the system must be well defined on those residues.
pub fn solve_linear_mod_with(
    a: &IntMatrix,
    b: &[BigInt],
    p: u64,
    row_exps: &[u32],
    var_exps: &[u32],
) -> Result<Option<LinearSolution>, LinalgError> {
    if row_exps.len() != a.rows() {
        return Err(LinalgError::LengthMismatch { expected: a.rows(), got: row_exps.len() });
    }
    if b.len() != a.rows() {
        return Err(LinalgError::LengthMismatch { expected: a.rows(), got: b.len() });
    }
    if var_exps.len() != a.cols() {
        return Err(LinalgError::LengthMismatch { expected: a.cols(), got: var_exps.len() });
    }
    let nt = a.rows();
    let nv = a.cols();
    let cols: Vec<Vec<BigInt>> = (0..nv).map(|j| (0..nt).map(|i| a[(i, j)].clone()).collect()).collect();
    let kernel = kernel_of_columns(p, row_exps, var_exps, &cols);

    let mut exps = row_exps.to_vec();
    exps.extend_from_slice(var_exps);
    let gens: Vec<Vec<BigInt>> = cols
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let mut r = c.clone();
            r.extend((0..nv).map(|k| if k == j { BigInt::one() } else { BigInt::zero() }));
            r
        })
        .collect();
    let graph = ResidueSubgroup::generated(p, &exps, &gens)?;
    let mut target = b.to_vec();
    target.extend(std::iter::repeat(BigInt::zero()).take(nv));
    let (rem, _) = graph.howell().reduce(&graph.embed(&target), nt);
    if rem[..nt].iter().any(|x| !x.is_zero()) {
        return Ok(None);
    }
    let back = graph.unembed(&rem);
    let particular = back[nt..]
        .iter()
        .zip(var_exps)
        .map(|(x, &e)| (-x).mod_floor(&big_pow(p, e)))
        .collect();
    Ok(Some(LinearSolution { particular, kernel }))
}

pub fn to_u64_list(xs: &[BigInt]) -> Vec<u64> {
    xs.iter().map(|x| x.to_u64().expect("invariant fits in u64")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bi(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn snf_small_cases() {
        let m = IntMatrix::from_rows(&[vec![2, 0], vec![0, 3]]);
        let s = smith_normal_form(&m);
        assert_eq!(s.d, IntMatrix::from_rows(&[vec![1, 0], vec![0, 6]]));
        assert_eq!(s.u.mul(&m).mul(&s.v), s.d);

        let z = IntMatrix::from_rows(&[vec![0]]);
        assert_eq!(smith_normal_form(&z).d, z);

        let id = IntMatrix::identity(3);
        assert_eq!(smith_normal_form(&id).d, id);
    }

    #[test]
    fn canonical_basis_ignores_duplicates() {
        let gens = vec![vec![8, 0, 0], vec![0, 0, 8], vec![0, 1, -1]];
        let a = ResidueSubgroup::from_i64(2, &[4, 4, 4], &gens).unwrap();
        let mut doubled = gens.clone();
        doubled.extend(gens.iter().rev().cloned());
        let b = ResidueSubgroup::from_i64(2, &[4, 4, 4], &doubled).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.order_exp(), 1 + 1 + 4);
    }

    #[test]
    fn trivial_subgroup_has_order_one() {
        let t = ResidueSubgroup::from_i64(3, &[2, 2], &[]).unwrap();
        assert!(t.is_trivial());
        assert_eq!(t.order(), BigInt::one());
    }

    #[test]
    fn length_mismatch_is_reported() {
        let e = ResidueSubgroup::from_i64(2, &[2, 2], &[vec![1]]).unwrap_err();
        assert_eq!(e, LinalgError::LengthMismatch { expected: 2, got: 1 });
    }

    #[test]
    fn doubled_z_hat_quotient_is_elementary() {
        // Z-hat_0 of the coclass-1 2-groups and its double
        let z = ResidueSubgroup::from_i64(2, &[4, 4, 4], &[vec![8, 0, 0], vec![0, 0, 8], vec![0, 1, -1]]).unwrap();
        let b = z.scaled(1);
        let b2 = ResidueSubgroup::from_i64(2, &[4, 4, 4], &[vec![16, 0, 0], vec![0, 0, 16], vec![0, 2, -2]]).unwrap();
        assert_eq!(b, b2);
        assert_eq!(to_u64_list(&quotient_invariants(&z, &b).unwrap()), vec![2, 2, 2]);
    }

    #[test]
    fn quotient_edge_cases() {
        let z = ResidueSubgroup::full(2, &[2, 2]);
        assert!(quotient_invariants(&z, &z).unwrap().is_empty());
        let t = ResidueSubgroup::trivial(2, &[2, 2]);
        assert_eq!(to_u64_list(&quotient_invariants(&z, &t).unwrap()), vec![4, 4]);
        match quotient_invariants(&t, &z) {
            Err(LinalgError::NotContained { witness }) => assert!(!witness.is_empty()),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn solve_small_systems() {
        // values enumerated by hand over Z/4
        let a = IntMatrix::from_rows(&[vec![2]]);
        let s = solve_linear_mod(&a, &bi(&[0]), 2, &[2]).unwrap().unwrap();
        assert_eq!(s.particular, bi(&[0]));
        assert_eq!(s.kernel, ResidueSubgroup::from_i64(2, &[2], &[vec![2]]).unwrap());

        let a1 = IntMatrix::from_rows(&[vec![1]]);
        let s = solve_linear_mod(&a1, &bi(&[3]), 2, &[2]).unwrap().unwrap();
        assert_eq!(s.particular, bi(&[3]));
        assert!(s.kernel.is_trivial());

        assert!(solve_linear_mod(&a, &bi(&[1]), 2, &[2]).unwrap().is_none());
    }

    #[test]
    fn intersection_and_sum() {
        let u = ResidueSubgroup::from_i64(2, &[3, 3], &[vec![1, 1]]).unwrap();
        let v = ResidueSubgroup::from_i64(2, &[3, 3], &[vec![2, 0], vec![0, 2]]).unwrap();
        let i = u.intersection(&v).unwrap();
        assert_eq!(i, ResidueSubgroup::from_i64(2, &[3, 3], &[vec![2, 2]]).unwrap());
        assert_eq!(u.sum(&v).unwrap().order_exp(), 5);
    }

    #[test]
    fn mixed_moduli() {
        let s = ResidueSubgroup::from_i64(2, &[2, 1], &[vec![1, 1]]).unwrap();
        assert_eq!(s.order_exp(), 2);
        assert!(s.contains(&bi(&[2, 0])).unwrap());
        assert!(!s.contains(&bi(&[1, 0])).unwrap());
        assert_eq!(to_u64_list(&s.invariants()), vec![4]);
    }
}
