//! Isomorphism of two extensions of the same module `A` by the same group
//! `R` when `A = gamma_l` in both: decided over coset representatives of
//! `Aut(R)/Inn(R)` by solving for an intertwining map on `A` and a
//! correction of the generator lifts.

use std::collections::HashSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};

use super::{all_automorphisms, IsoVerdict};
use crate::cohomology::{relation_list, RelationKind};
use crate::pcgroup::{for_each_normal_form, Elem, GroupHandle};
use crate::sequences::{ParamPresentation, SequenceError};
use crate::zmod_linalg::kernel_of_columns;

type Mat = Vec<Vec<i64>>;

fn mat_mul(a: &Mat, b: &Mat, q: i64) -> Mat {
    let n = a.len();
    (0..n)
        .map(|x| (0..n).map(|y| (0..n).map(|z| a[x][z] * b[z][y]).sum::<i64>().rem_euclid(q)).collect())
        .collect()
}

fn identity(n: usize) -> Mat {
    (0..n).map(|x| (0..n).map(|y| (x == y) as i64).collect()).collect()
}

fn det_nonzero_mod_p(m: &Mat, p: i64) -> bool {
    let n = m.len();
    let mut a: Mat = m.iter().map(|r| r.iter().map(|x| x.rem_euclid(p)).collect()).collect();
    for c in 0..n {
        let Some(r) = (c..n).find(|&r| a[r][c] != 0) else { return false };
        a.swap(c, r);
        let inv = inverse_mod(a[c][c], p);
        for r in c + 1..n {
            let f = a[r][c] * inv % p;
            for k in c..n {
                a[r][k] = (a[r][k] - f * a[c][k]).rem_euclid(p);
            }
        }
    }
    true
}

fn inverse_mod(a: i64, m: i64) -> i64 {
    let e = a.rem_euclid(m).extended_gcd(&m);
    e.x.rem_euclid(m)
}

/// Shared data of all instantiations of one family at one index.
pub struct ExtensionContext {
    r: GroupHandle,
    p: u64,
    n: usize,
    d: usize,
    s: u32,
    l: usize,
    /// `M_h`: column `j` is the image of `t_j` under `g_h`
    act: Vec<Mat>,
    /// coset representatives of `Aut(R)/Inn(R)`
    outer: Vec<Vec<Elem>>,
}

impl ExtensionContext {
    pub fn new(fam: &ParamPresentation, i: u32, effort: u64) -> Result<Self, SequenceError> {
        let module = fam.module(i)?;
        let s = fam.t_exp(i)?;
        let r = fam.quotient_group().clone();
        let d = fam.d();
        let q = (fam.prime() as i64).pow(s);
        let act: Vec<Mat> = module
            .action
            .iter()
            .map(|cols| (0..d).map(|x| (0..d).map(|y| cols[y][x].rem_euclid(q)).collect()).collect())
            .collect();
        let auts = all_automorphisms(&r, effort).map_err(|e| SequenceError::Malformed(e.to_string()))?;
        let outer = outer_representatives(&r, auts);
        Ok(ExtensionContext { r, p: fam.prime(), n: fam.quotient_group().ngens(), d, s, l: fam.record().l as usize, act, outer })
    }

    /// Number of outer automorphism classes tried per pair.
    pub fn outer_count(&self) -> usize {
        self.outer.len()
    }

    fn q(&self) -> i64 {
        (self.p as i64).pow(self.s)
    }

    /// `rho(x)` for `x` in `R`.
    fn rho(&self, x: &Elem) -> Mat {
        let q = self.q();
        let mut m = identity(self.d);
        for (h, &e) in x.iter().enumerate() {
            for _ in 0..e {
                m = mat_mul(&self.act[h], &m, q);
            }
        }
        m
    }

    /// Whether `g` has the expected layout and `gamma_l(g)` is the module.
    fn applies(&self, g: &GroupHandle) -> bool {
        let pres = g.pres();
        if pres.len() != self.n + self.d || pres.rel_orders()[..self.n] != *self.r.pres().rel_orders() {
            return false;
        }
        let ts: Vec<Elem> = (self.n..self.n + self.d).map(|c| pres.gen(c)).collect();
        let a = g.subgroup(&ts);
        let gl = g.lcs_term(self.l);
        a.order_exp() == self.d as u32 * self.s && gl.order_exp() == a.order_exp() && a.contains_subgroup(pres, &gl)
    }

    /// Module part of an element lying in `A`.
    fn module_part(&self, x: &Elem) -> Option<Vec<i64>> {
        x[..self.n].iter().all(|&e| e == 0).then(|| x[self.n..].iter().map(|&e| e as i64).collect())
    }

    /// Tails of the lifts `ys` of the generators of `R` inside `h`.
    fn tails(&self, h: &GroupHandle, ys: &[Elem]) -> Option<Vec<Vec<i64>>> {
        let hp = h.pres();
        let rp = self.r.pres();
        let eval = |w: &Elem| w.iter().zip(ys).fold(hp.identity(), |acc, (&e, y)| hp.mul(&acc, &hp.pow(y, e)));
        relation_list(self.n)
            .into_iter()
            .map(|rel| {
                let (lhs, w) = match rel {
                    RelationKind::Power { gen } => (hp.pow(&ys[gen], rp.rel_order(gen)), rp.power(gen)),
                    RelationKind::Conjugate { gen, by } => (hp.conj(&ys[gen], &ys[by]), rp.conjugate(gen, by)),
                };
                self.module_part(&hp.mul(&hp.inv(&eval(w)), &lhs))
            })
            .collect()
    }

    /// Decides `g = h` for two instantiations, or `None` when the method
    /// does not apply to them.
    pub fn is_isomorphic(&self, g: &GroupHandle, h: &GroupHandle) -> Option<IsoVerdict> {
        if !self.applies(g) || !self.applies(h) {
            return None;
        }
        let gens_g: Vec<Elem> = (0..self.n).map(|k| g.pres().gen(k)).collect();
        let tau_g = self.tails(g, &gens_g)?;
        for alpha in &self.outer {
            if let Some(images) = self.solve(g, h, &tau_g, alpha) {
                return Some(IsoVerdict::Isomorphic(images));
            }
        }
        Some(IsoVerdict::NonIsomorphic("no compatible pair maps one extension class to the other".into()))
    }

    fn solve(&self, g: &GroupHandle, h: &GroupHandle, tau_g: &[Vec<i64>], alpha: &[Elem]) -> Option<Vec<Elem>> {
        let (n, d, q, p) = (self.n, self.d, self.q(), self.p as i64);
        let hp = h.pres();
        let lift = |x: &Elem| -> Elem { x.iter().copied().chain(std::iter::repeat(0).take(d)).collect() };
        let ys: Vec<Elem> = alpha.iter().map(lift).collect();
        let tau = self.tails(h, &ys)?;
        let m = tau.len();
        let nk: Vec<Mat> = alpha.iter().map(|x| self.rho(x)).collect();
        // columns over unknowns gamma (d*d), a (n*d), lambda
        let flat = |compat: Vec<i64>, tail: Vec<i64>| -> Vec<BigInt> {
            compat.into_iter().chain(tail).map(|x| BigInt::from(x.rem_euclid(q))).collect()
        };
        let mut cols = Vec::new();
        for a in 0..d {
            for b in 0..d {
                let mut compat = Vec::with_capacity(n * d * d);
                for k in 0..n {
                    for x in 0..d {
                        for y in 0..d {
                            let left = if x == a { self.act[k][b][y] } else { 0 };
                            let right = if y == b { nk[k][x][a] } else { 0 };
                            compat.push(left - right);
                        }
                    }
                }
                let tail: Vec<i64> =
                    (0..m).flat_map(|j| (0..d).map(move |x| if x == a { -tau_g[j][b] } else { 0 })).collect();
                cols.push(flat(compat, tail));
            }
        }
        for k in 0..n {
            for c in 0..d {
                let mut shifted = ys.clone();
                let mut t = hp.identity();
                t[n + c] = 1;
                shifted[k] = hp.mul(&ys[k], &t);
                let tau2 = self.tails(h, &shifted)?;
                let tail: Vec<i64> =
                    tau2.iter().zip(&tau).flat_map(|(u, v)| u.iter().zip(v).map(|(x, y)| x - y)).collect();
                cols.push(flat(vec![0; n * d * d], tail));
            }
        }
        cols.push(flat(vec![0; n * d * d], tau.iter().flatten().copied().collect()));
        let target = vec![self.s; n * d * d + m * d];
        let src = vec![self.s; cols.len()];
        let kernel = kernel_of_columns(self.p, &target, &src, &cols);
        let basis = kernel.basis();
        let lam = cols.len() - 1;
        // F_p span of the (gamma, lambda) coordinates, with combinations
        let key: Vec<usize> = (0..d * d).chain([lam]).collect();
        let mut rows: Vec<(Vec<i64>, Vec<i64>)> = Vec::new();
        for (bi, v) in basis.iter().enumerate() {
            let mut vec: Vec<i64> = key.iter().map(|&c| (&v[c] % BigInt::from(p)).to_i64().expect("small")).collect();
            let mut comb = vec![0i64; basis.len()];
            comb[bi] = 1;
            for (rv, rc) in &rows {
                let piv = rv.iter().position(|&x| x != 0).expect("nonzero row");
                if vec[piv] != 0 {
                    let f = vec[piv] * inverse_mod(rv[piv], p) % p;
                    for (x, y) in vec.iter_mut().zip(rv) {
                        *x = (*x - f * y).rem_euclid(p);
                    }
                    for (x, y) in comb.iter_mut().zip(rc) {
                        *x = (*x - f * y).rem_euclid(p);
                    }
                }
            }
            if vec.iter().any(|&x| x != 0) {
                rows.push((vec, comb));
            }
        }
        let mut found = None;
        for_each_normal_form(&vec![self.p; rows.len()], |c| {
            if found.is_some() {
                return;
            }
            let mut v = vec![0i64; key.len()];
            for (&ci, (rv, _)) in c.iter().zip(&rows) {
                for (x, y) in v.iter_mut().zip(rv) {
                    *x = (*x + ci as i64 * y) % p;
                }
            }
            let gamma: Mat = (0..d).map(|a| (0..d).map(|b| v[a * d + b]).collect()).collect();
            if v[d * d] != 0 && det_nonzero_mod_p(&gamma, p) {
                found = Some(c.clone());
            }
        });
        let c = found?;
        // the kernel element with these coordinates mod p
        let qb = BigInt::from(q);
        let mut x = vec![BigInt::zero(); cols.len()];
        for (&ci, (_, comb)) in c.iter().zip(&rows) {
            for (bi, &f) in comb.iter().enumerate() {
                let coef = BigInt::from(ci as i64 * f);
                for (xe, be) in x.iter_mut().zip(&basis[bi]) {
                    *xe = (&*xe + &coef * be).mod_floor(&qb);
                }
            }
        }
        let l = x[lam].to_i64().expect("small");
        let linv = BigInt::from(inverse_mod(l, q));
        let x: Vec<i64> = x.iter().map(|e| (e * &linv).mod_floor(&qb).to_i64().expect("small")).collect();
        debug_assert!(x[lam] == 1 || q == 1);
        let mut images = Vec::with_capacity(n + d);
        for k in 0..n {
            let mut t = hp.identity();
            for cc in 0..d {
                t[n + cc] = x[d * d + k * d + cc] as u64;
            }
            images.push(hp.mul(&ys[k], &t));
        }
        for cc in 0..d {
            let mut t = hp.identity();
            for a in 0..d {
                t[n + a] = x[a * d + cc].rem_euclid(q) as u64;
            }
            images.push(hp.mul(&hp.identity(), &t));
        }
        let ok = super::verify_homomorphism(g, h, &images) && h.subgroup(&images).order_exp() == h.order_exp();
        ok.then_some(images)
    }
}

/// One automorphism per coset of the inner automorphisms.
fn outer_representatives(r: &GroupHandle, auts: Vec<Vec<Elem>>) -> Vec<Vec<Elem>> {
    let pres = r.pres();
    let mut elems = Vec::new();
    for_each_normal_form(pres.rel_orders(), |x| elems.push(x.clone()));
    let mut seen: HashSet<Vec<Elem>> = HashSet::new();
    let mut out = Vec::new();
    for a in auts {
        if seen.contains(&a) {
            continue;
        }
        for s in &elems {
            seen.insert(a.iter().map(|x| pres.conj(x, s)).collect());
        }
        out.push(a);
    }
    out
}

