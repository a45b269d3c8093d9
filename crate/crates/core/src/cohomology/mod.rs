//! Second cohomology of a finite p-group acting on a finite abelian p-group,
//! computed with the tails of an extension presentation.
//!
//! Tails are attached to the relations of `R` in a fixed order: for each
//! generator `g_j` its power relation, followed by its conjugates
//! `g_j^{g_1}, ..., g_j^{g_{j-1}}`. A tail vector holds one module element
//! per relation; the relation reads `lhs = rhs * t^{tail}`.

mod brute;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

use crate::pcgroup::{Elem, GroupHandle, InducedSubgroup, PcError, PcPresentation, Word};
use crate::zmod_linalg::{
    big_pow, image_of_columns, kernel_of_columns, quotient_invariants, to_u64_list, LinalgError, ResidueSubgroup,
};

pub use brute::{brute_force_h2, literal_h2_order, BruteError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CohomologyError {
    #[error(transparent)]
    Group(#[from] PcError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("malformed module: {0}")]
    Module(String),
    #[error("module action is incompatible with the relations of R: {0}")]
    ActionIncompatible(String),
    #[error("the presentation of R is inconsistent: {0}")]
    InconsistentQuotient(String),
    #[error("tails do not define a cocycle: {0}")]
    NotCocycle(String),
    #[error("images of cocycles over T did not stabilize")]
    NoStabilization,
    #[error("direct sum certificate failed: {0}")]
    Certificate(String),
}

/// Abelian group `Z/p^{m_1} x ... x Z/p^{m_d}` with a right action of `R`.
/// `action[h][j]` is the exponent vector of `t_j^{g_h}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModuleSpec {
    pub p: u64,
    pub exps: Vec<u32>,
    pub action: Vec<Vec<Vec<i64>>>,
}

fn modulus(p: u64, e: u32) -> i64 {
    (p as i64).checked_pow(e).expect("module exponent too large")
}

impl ModuleSpec {
    pub fn new(p: u64, exps: Vec<u32>, action: Vec<Vec<Vec<i64>>>) -> Result<Self, CohomologyError> {
        let d = exps.len();
        for (h, m) in action.iter().enumerate() {
            if m.len() != d || m.iter().any(|c| c.len() != d) {
                return Err(CohomologyError::Module(format!("action of generator {} is not {d}x{d}", h + 1)));
            }
        }
        let spec = ModuleSpec { p, exps, action };
        for h in 0..spec.action.len() {
            if d > 0 && spec.exps.iter().any(|&e| e > 0) && !spec.invertible_mod_p(h) {
                return Err(CohomologyError::Module(format!("action of generator {} is singular mod p", h + 1)));
            }
        }
        Ok(spec)
    }

    /// `R` with `n` generators acting trivially.
    pub fn trivial(p: u64, exps: Vec<u32>, n: usize) -> Self {
        let d = exps.len();
        let id: Vec<Vec<i64>> = (0..d).map(|j| (0..d).map(|i| (i == j) as i64).collect()).collect();
        ModuleSpec { p, exps, action: vec![id; n] }
    }

    pub fn rank(&self) -> usize {
        self.exps.len()
    }

    pub fn order_exp(&self) -> u32 {
        self.exps.iter().sum()
    }

    /// Same action on a different truncation.
    pub fn with_exps(&self, exps: Vec<u32>) -> Self {
        ModuleSpec { p: self.p, exps, action: self.action.clone() }
    }

    fn invertible_mod_p(&self, h: usize) -> bool {
        let d = self.rank();
        let p = self.p as i64;
        let mut m: Vec<Vec<i64>> = (0..d).map(|i| (0..d).map(|j| self.action[h][j][i].rem_euclid(p)).collect()).collect();
        for col in 0..d {
            let Some(piv) = (col..d).find(|&r| m[r][col] != 0) else { return false };
            m.swap(col, piv);
            let inv = (m[col][col] as i128).extended_gcd(&(p as i128)).x.rem_euclid(p as i128) as i64;
            for r in 0..d {
                if r != col && m[r][col] != 0 {
                    let f = (m[r][col] * inv).rem_euclid(p);
                    for c in 0..d {
                        m[r][c] = (m[r][c] - f * m[col][c]).rem_euclid(p);
                    }
                }
            }
        }
        true
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RelationKind {
    Power { gen: usize },
    Conjugate { gen: usize, by: usize },
}

/// Relations of an `n`-generator presentation in tail order.
pub fn relation_list(n: usize) -> Vec<RelationKind> {
    let mut out = Vec::new();
    for j in 0..n {
        out.push(RelationKind::Power { gen: j });
        for h in 0..j {
            out.push(RelationKind::Conjugate { gen: j, by: h });
        }
    }
    out
}

/// One module element per relation.
pub type TailVector = Vec<Vec<i64>>;

pub fn zero_tails(n: usize, d: usize) -> TailVector {
    vec![vec![0; d]; relation_list(n).len()]
}

fn elem_word(x: &Elem, offset: usize) -> Word {
    x.iter().enumerate().filter(|(_, &e)| e != 0).map(|(g, &e)| (g + offset, e as i64)).collect()
}

/// Presentation of the extension of `A` by `R` with the given tails:
/// generators of `R` followed by `t_1, ..., t_d`.
pub fn extension_presentation(
    r: &PcPresentation,
    a: &ModuleSpec,
    tails: &[Vec<i64>],
) -> Result<PcPresentation, CohomologyError> {
    let n = r.len();
    let d = a.rank();
    let rels = relation_list(n);
    if tails.len() != rels.len() || tails.iter().any(|t| t.len() != d) {
        return Err(CohomologyError::Module(format!("expected {} tails of length {d}", rels.len())));
    }
    if a.action.len() != n {
        return Err(CohomologyError::Module(format!("action given for {} of {n} generators", a.action.len())));
    }
    if n > 0 && a.p != r.prime() {
        return Err(CohomologyError::Module("module and group primes differ".into()));
    }
    let t_word = |v: &[i64]| -> Word {
        v.iter()
            .enumerate()
            .map(|(c, &x)| (n + c, x.rem_euclid(modulus(a.p, a.exps[c]))))
            .filter(|&(_, x)| x != 0)
            .collect()
    };
    let mut orders = r.rel_orders().to_vec();
    orders.extend(a.exps.iter().map(|&e| a.p.pow(e)));
    let mut powers: Vec<Word> = Vec::new();
    let mut conj: Vec<Vec<Word>> = Vec::new();
    let mut idx = 0;
    for j in 0..n {
        let mut w = elem_word(r.power(j), 0);
        w.extend(t_word(&tails[idx]));
        idx += 1;
        powers.push(w);
        let mut row = Vec::new();
        for h in 0..j {
            let mut w = elem_word(r.conjugate(j, h), 0);
            w.extend(t_word(&tails[idx]));
            idx += 1;
            row.push(w);
        }
        conj.push(row);
    }
    for c in 0..d {
        powers.push(vec![]);
        let mut row: Vec<Word> = (0..n).map(|h| t_word(&a.action[h][c])).collect();
        row.extend((0..c).map(|_| vec![(n + c, 1)]));
        conj.push(row);
    }
    Ok(PcPresentation::new(a.p, orders, powers, conj)?)
}

/// Extension group defined by a cocycle; fails when the tails are not a
/// cocycle.
pub fn extension_from_tails(
    r: &PcPresentation,
    a: &ModuleSpec,
    tails: &[Vec<i64>],
) -> Result<GroupHandle, CohomologyError> {
    let pres = extension_presentation(r, a, tails)?;
    if let Some(v) = pres.check_consistency().first() {
        return Err(CohomologyError::NotCocycle(v.to_string()));
    }
    Ok(GroupHandle::new(pres))
}

/// Cocycles `Z`, coboundaries `B` and the invariants of `Z/B`, all inside
/// the tail space `A^m` (flattened relation-major).
#[derive(Clone, Debug)]
pub struct H2Structure {
    pub p: u64,
    pub relations: usize,
    pub module_exps: Vec<u32>,
    pub z: ResidueSubgroup,
    pub b: ResidueSubgroup,
    pub invariants: Vec<u64>,
}

impl H2Structure {
    pub fn tail_exps(&self) -> Vec<u32> {
        tail_exps(&self.module_exps, self.relations)
    }

    pub fn flatten(&self, tails: &[Vec<i64>]) -> Vec<BigInt> {
        flatten(tails)
    }

    pub fn is_cocycle(&self, tails: &[Vec<i64>]) -> bool {
        self.z.contains(&flatten(tails)).unwrap_or(false)
    }

    /// Whether two cocycles define the same class.
    pub fn same_class(&self, x: &[Vec<i64>], y: &[Vec<i64>]) -> bool {
        let diff: Vec<BigInt> = flatten(x).iter().zip(flatten(y)).map(|(a, b)| a - b).collect();
        self.b.contains(&diff).unwrap_or(false)
    }

    /// `log_p |Z/B|`
    pub fn order_exp(&self) -> u32 {
        self.z.order_exp() - self.b.order_exp()
    }
}

fn tail_exps(module_exps: &[u32], m: usize) -> Vec<u32> {
    (0..m).flat_map(|_| module_exps.iter().copied()).collect()
}

pub fn flatten(tails: &[Vec<i64>]) -> Vec<BigInt> {
    tails.iter().flat_map(|t| t.iter().map(|&x| BigInt::from(x))).collect()
}

pub fn unflatten(v: &[BigInt], d: usize) -> TailVector {
    v.chunks(d.max(1)).map(|c| c.iter().map(|x| x.to_i64().expect("tail entry fits in i64")).collect()).collect()
}

/// Module part (coordinates after the first `n`) of an extension element.
fn t_part(x: &Elem, n: usize) -> &[u64] {
    &x[n..]
}

/// Discrepancies of all overlaps of the extension, restricted to the
/// module coordinates. The group parts must agree.
fn discrepancies(pres: &PcPresentation, n: usize, a: &ModuleSpec) -> Result<Vec<i64>, CohomologyError> {
    let mut out = Vec::new();
    for (ov, left, right) in pres.overlaps() {
        if left[..n] != right[..n] {
            return Err(CohomologyError::InconsistentQuotient(format!("{ov}")));
        }
        for (c, (&x, &y)) in t_part(&left, n).iter().zip(t_part(&right, n)).enumerate() {
            let q = modulus(a.p, a.exps[c]);
            out.push((x as i64 - y as i64).rem_euclid(q));
        }
    }
    Ok(out)
}

fn unit_tails(m: usize, d: usize, r: usize, c: usize) -> TailVector {
    let mut t = vec![vec![0; d]; m];
    t[r][c] = 1;
    t
}

/// Cocycles as the solutions of the consistency system with unknown tails.
pub fn cocycles(r: &PcPresentation, a: &ModuleSpec) -> Result<ResidueSubgroup, CohomologyError> {
    let n = r.len();
    let d = a.rank();
    let m = relation_list(n).len();
    let p = a.p;
    let src = tail_exps(&a.exps, m);
    let base_pres = extension_presentation(r, a, &zero_tails(n, d))?;
    let base = discrepancies(&base_pres, n, a)?;
    if let Some(pos) = base.iter().position(|&x| x != 0) {
        let ov = &base_pres.overlaps()[pos / d.max(1)].0;
        return Err(CohomologyError::ActionIncompatible(format!("{ov}")));
    }
    let ncoords = base.len();
    let target_exps: Vec<u32> = (0..ncoords).map(|k| a.exps[k % d]).collect();
    let mut cols = Vec::with_capacity(m * d);
    for rel in 0..m {
        for c in 0..d {
            let pres = extension_presentation(r, a, &unit_tails(m, d, rel, c))?;
            cols.push(discrepancies(&pres, n, a)?);
        }
    }
    // drop coordinates no tail can reach
    let live: Vec<usize> = (0..ncoords).filter(|&k| cols.iter().any(|col| col[k] != 0)).collect();
    let target: Vec<u32> = live.iter().map(|&k| target_exps[k]).collect();
    let cols: Vec<Vec<BigInt>> =
        cols.iter().map(|col| live.iter().map(|&k| BigInt::from(col[k])).collect()).collect();
    Ok(kernel_of_columns(p, &target, &src, &cols))
}

/// Tail change caused by replacing `g_h` with `g_h t^c`, evaluated in the
/// split extension.
fn coboundary(r: &PcPresentation, a: &ModuleSpec, split: &PcPresentation, shift: &[Vec<i64>]) -> TailVector {
    let n = r.len();
    let d = a.rank();
    let hat: Vec<Elem> = (0..n)
        .map(|h| {
            let mut x = split.gen(h);
            for c in 0..d {
                x[n + c] = shift[h][c].rem_euclid(modulus(a.p, a.exps[c])) as u64;
            }
            x
        })
        .collect();
    let eval = |x: &Elem| -> Elem {
        let mut acc = split.identity();
        for (k, &e) in x.iter().enumerate() {
            if e != 0 {
                acc = split.mul(&acc, &split.pow(&hat[k], e));
            }
        }
        acc
    };
    let diff = |lhs: Elem, rhs: Elem| -> Vec<i64> {
        let q = split.mul(&split.inv(&rhs), &lhs);
        debug_assert!(q[..n].iter().all(|&e| e == 0));
        q[n..].iter().map(|&e| e as i64).collect()
    };
    relation_list(n)
        .into_iter()
        .map(|rel| match rel {
            RelationKind::Power { gen } => diff(split.pow(&hat[gen], r.rel_order(gen)), eval(r.power(gen))),
            RelationKind::Conjugate { gen, by } => {
                diff(split.conj(&hat[gen], &hat[by]), eval(r.conjugate(gen, by)))
            }
        })
        .collect()
}

pub fn coboundaries(r: &PcPresentation, a: &ModuleSpec) -> Result<ResidueSubgroup, CohomologyError> {
    let n = r.len();
    let d = a.rank();
    let m = relation_list(n).len();
    let split = extension_presentation(r, a, &zero_tails(n, d))?;
    let mut cols = Vec::new();
    for h in 0..n {
        for c in 0..d {
            let mut shift = vec![vec![0; d]; n];
            shift[h][c] = 1;
            cols.push(flatten(&coboundary(r, a, &split, &shift)));
        }
    }
    Ok(image_of_columns(a.p, &tail_exps(&a.exps, m), &cols))
}

pub fn cocycle_space(r: &PcPresentation, a: &ModuleSpec) -> Result<H2Structure, CohomologyError> {
    let z = cocycles(r, a)?;
    let b = coboundaries(r, a)?;
    let invariants = to_u64_list(&quotient_invariants(&z, &b)?);
    Ok(H2Structure {
        p: a.p,
        relations: relation_list(r.len()).len(),
        module_exps: a.exps.clone(),
        z,
        b,
        invariants,
    })
}

pub fn h2_invariants(h: &H2Structure) -> Vec<u64> {
    h.invariants.clone()
}

/// Image of a subgroup under coordinatewise reduction to smaller moduli.
pub fn reduce_subgroup(s: &ResidueSubgroup, exps: &[u32]) -> Result<ResidueSubgroup, LinalgError> {
    let p = s.prime();
    let gens: Vec<Vec<BigInt>> = s
        .basis()
        .into_iter()
        .map(|v| v.into_iter().zip(exps).map(|(x, &e)| x.mod_floor(&big_pow(p, e))).collect())
        .collect();
    ResidueSubgroup::generated(p, exps, &gens)
}

/// `pi_i`: multiply tails by `p^i`, reading them in `A_i`.
pub fn map_pi(beta: &[Vec<i64>], p: u64, i: u32) -> TailVector {
    let f = (p as i64).pow(i);
    beta.iter().map(|t| t.iter().map(|&x| x * f).collect()).collect()
}

fn matmul_mod(a: &[Vec<i128>], b: &[Vec<i128>], q: i128) -> Vec<Vec<i128>> {
    let d = a.len();
    (0..d)
        .map(|i| (0..d).map(|j| (0..d).map(|k| a[i][k] * b[k][j]).sum::<i128>().rem_euclid(q)).collect())
        .collect()
}

/// Kernel of the action of `R` on the lattice `T`, where the module data
/// are read as integer matrices.
pub fn action_kernel(r: &GroupHandle, a: &ModuleSpec) -> InducedSubgroup {
    let pres = r.pres();
    let d = a.rank();
    let n = pres.len();
    // congruence modulo a large power of p decides equality of the finite-order action
    let mut k = 1u32;
    while (a.p as i128).pow(k + 1) < (1i128 << 40) {
        k += 1;
    }
    let q = (a.p as i128).pow(k);
    // row-major matrices: mats[h][i][j] = coefficient of t_i in t_j^{g_h}
    let mats: Vec<Vec<Vec<i128>>> =
        (0..n).map(|h| (0..d).map(|i| (0..d).map(|j| a.action[h][j][i] as i128).collect()).collect()).collect();
    let id: Vec<Vec<i128>> = (0..d).map(|i| (0..d).map(|j| (i == j) as i128).collect()).collect();
    let mut kernel = Vec::new();
    // action matrix of x = g_1^{x_1} ... g_n^{x_n} is M_n^{x_n} ... M_1^{x_1}
    crate::pcgroup::for_each_normal_form(pres.rel_orders(), |x| {
        let mut m = id.clone();
        for (h, &e) in x.iter().enumerate() {
            for _ in 0..e {
                m = matmul_mod(&mats[h], &m, q);
            }
        }
        if m == id {
            kernel.push(x.clone());
        }
    });
    r.subgroup(&kernel)
}

/// The parameter `a` with `p^a = exp(H/H')` for the action kernel `H`.
pub fn kernel_exponent(r: &GroupHandle, a: &ModuleSpec) -> u32 {
    let h = action_kernel(r, a);
    let hd = h.derived(r.pres());
    let inv = r.section_invariants(&h, &hd).expect("H/H' is abelian");
    inv.iter().map(|&x| crate::pcgroup::log_p(x, a.p)).max().unwrap_or(0)
}

/// `N_i`: image of the cocycles over `T` in `A_i`, plus coboundaries. The
/// cocycles over `T` are approximated over `T/p^K T` for two large `K`
/// whose images must agree.
pub fn compute_ni(r: &PcPresentation, a_i: &ModuleSpec, h2: &H2Structure) -> Result<ResidueSubgroup, CohomologyError> {
    let top = a_i.exps.iter().copied().max().unwrap_or(0);
    let m = h2.relations;
    let target = tail_exps(&a_i.exps, m);
    let mut images = Vec::new();
    for extra in [12u32, 20] {
        let k = top + extra;
        if a_i.p.checked_pow(k).is_none_or(|v| v > 4_000_000_000_000_000_000) {
            return Err(CohomologyError::NoStabilization);
        }
        let big = a_i.with_exps(vec![k; a_i.rank()]);
        let z = cocycles(r, &big)?;
        images.push(reduce_subgroup(&z, &target)?);
    }
    if images[0] != images[1] {
        return Err(CohomologyError::NoStabilization);
    }
    Ok(images.pop().expect("two images").sum(&h2.b)?)
}

/// `M_i`: cocycles with values in `B_i = p^{a+1+i} A_i`, plus coboundaries.
pub fn compute_mi(h2: &H2Structure, a_param: u32, i: u32) -> Result<ResidueSubgroup, CohomologyError> {
    let full = ResidueSubgroup::full(h2.p, &h2.tail_exps());
    let bi = full.scaled(a_param + 1 + i);
    Ok(h2.z.intersection(&bi)?.sum(&h2.b)?)
}

#[derive(Clone, Debug)]
pub struct Decomposition {
    pub n: ResidueSubgroup,
    pub m: ResidueSubgroup,
    /// `log_p |N/B|`
    pub n_exp: u32,
    /// `log_p |M/B|`
    pub m_exp: u32,
    pub m_invariants: Vec<u64>,
}

/// Checks `N + M = Z`, `N ∩ M = B` and `|N/B| |M/B| = |Z/B|`.
pub fn decompose(h2: &H2Structure, n: ResidueSubgroup, m: ResidueSubgroup) -> Result<Decomposition, CohomologyError> {
    let sum = n.sum(&m)?;
    if sum != h2.z {
        return Err(CohomologyError::Certificate("N + M differs from Z".into()));
    }
    if n.intersection(&m)? != h2.b {
        return Err(CohomologyError::Certificate("N ∩ M differs from B".into()));
    }
    let n_exp = n.order_exp() - h2.b.order_exp();
    let m_exp = m.order_exp() - h2.b.order_exp();
    if n_exp + m_exp != h2.order_exp() {
        return Err(CohomologyError::Certificate("orders of N/B and M/B do not multiply to |Z/B|".into()));
    }
    let m_invariants = to_u64_list(&quotient_invariants(&m, &h2.b)?);
    Ok(Decomposition { n, m, n_exp, m_exp, m_invariants })
}

/// True when every entry is zero.
pub fn is_zero_tails(t: &[Vec<i64>]) -> bool {
    t.iter().all(|v| v.iter().all(|x| x.is_zero()))
}
