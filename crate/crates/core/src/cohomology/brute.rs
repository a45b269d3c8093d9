//! `H^2` from inhomogeneous 2-cocycles on the full multiplication table of
//! a small group. Independent of the tails machinery and of the general
//! linear algebra module: the cocycle and coboundary maps are ranked by a
//! local-ring elimination over `Z/q^K` in machine integers.

use std::collections::HashMap;

use thiserror::Error;

use crate::pcgroup::{Elem, GroupHandle};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BruteError {
    #[error("group of order {0} is too large for the bar resolution")]
    TooLarge(u64),
    #[error("matrices do not define an action: {0}")]
    NotAnAction(String),
    #[error("malformed module data: {0}")]
    Shape(String),
}

struct Table {
    elems: Vec<Elem>,
    mul: Vec<Vec<usize>>,
    inv: Vec<usize>,
}

fn table(r: &GroupHandle, bound: u64) -> Result<Table, BruteError> {
    let pres = r.pres();
    let elems: Vec<Elem> = r
        .enumerate_elements(bound)
        .map_err(|_| BruteError::TooLarge(r.prime().saturating_pow(r.order_exp())))?
        .into_iter()
        .map(|(x, _)| x)
        .collect();
    let index: HashMap<Elem, usize> = elems.iter().cloned().enumerate().map(|(i, x)| (x, i)).collect();
    let mul: Vec<Vec<usize>> =
        elems.iter().map(|x| elems.iter().map(|y| index[&pres.mul(x, y)]).collect()).collect();
    let inv = elems.iter().map(|x| index[&pres.inv(x)]).collect();
    Ok(Table { elems, mul, inv })
}

/// Modular arithmetic in `Z/q^K`.
#[derive(Clone, Copy)]
struct Ring {
    q: u64,
    k: u32,
    modulus: u64,
}

impl Ring {
    fn mulm(&self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.modulus as u128) as u64
    }

    fn sub(&self, a: u64, b: u64) -> u64 {
        (a + self.modulus - b) % self.modulus
    }

    fn val(&self, mut a: u64) -> u32 {
        if a == 0 {
            return self.k;
        }
        let mut v = 0;
        while a % self.q == 0 {
            a /= self.q;
            v += 1;
        }
        v
    }

    fn unit_inverse(&self, a: u64) -> u64 {
        // a^{phi(q^K) - 1}
        let phi = self.modulus / self.q * (self.q - 1);
        let mut e = phi - 1;
        let mut base = a % self.modulus;
        let mut acc = 1 % self.modulus;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mulm(acc, base);
            }
            base = self.mulm(base, base);
            e >>= 1;
        }
        acc
    }
}

/// `log_q` of the order of the subgroup of `(Z/q^K)^cols` spanned by the rows.
fn image_order_exp(ring: Ring, mut rows: Vec<Vec<u64>>) -> u32 {
    let ncols = rows.first().map_or(0, |r| r.len());
    let mut total = 0;
    let mut active: Vec<usize> = (0..rows.len()).collect();
    let mut cols: Vec<usize> = (0..ncols).collect();
    loop {
        // pivot of least valuation among the remaining rows and columns
        let mut best: Option<(u32, usize, usize)> = None;
        for &i in &active {
            for &j in &cols {
                let v = ring.val(rows[i][j]);
                if v < ring.k && best.is_none_or(|b| v < b.0) {
                    best = Some((v, i, j));
                    if v == 0 {
                        break;
                    }
                }
            }
            if best.is_some_and(|b| b.0 == 0) {
                break;
            }
        }
        let Some((v, pi, pj)) = best else { break };
        total += ring.k - v;
        let qv = ring.q.pow(v);
        let unit = ring.unit_inverse(rows[pi][pj] / qv);
        // every other entry of the pivot column and row is divisible by q^v
        let pivot_row = rows[pi].clone();
        for &i in &active {
            if i == pi || rows[i][pj] == 0 {
                continue;
            }
            let f = ring.mulm(rows[i][pj] / qv, unit);
            for &j in &cols {
                rows[i][j] = ring.sub(rows[i][j], ring.mulm(f, pivot_row[j]));
            }
        }
        active.retain(|&i| i != pi);
        cols.retain(|&j| j != pj);
    }
    total
}

/// `|H^2(R, A)|` for the right action of the pc generators of `R` on
/// `A = Z/q^{m_1} x ... x Z/q^{m_d}` given by `action[h][j]` = image of
/// `t_j`. The prime `q` need not be the prime of `R`.
pub fn brute_force_h2(r: &GroupHandle, q: u64, exps: &[u32], action: &[Vec<Vec<i64>>]) -> Result<u64, BruteError> {
    let n = r.ngens();
    let d = exps.len();
    if action.len() != n || action.iter().any(|m| m.len() != d || m.iter().any(|c| c.len() != d)) {
        return Err(BruteError::Shape(format!("need {n} matrices of size {d}x{d}")));
    }
    let t = table(r, 64)?;
    let size = t.elems.len();
    if size.pow(3) * d * size.pow(2) * d > 40_000_000 {
        return Err(BruteError::TooLarge(size as u64));
    }
    let k = exps.iter().copied().max().unwrap_or(0).max(1);
    let ring = Ring { q, k, modulus: q.pow(k) };
    let md: Vec<u64> = exps.iter().map(|&e| q.pow(e)).collect();
    for (h, m) in action.iter().enumerate() {
        for j in 0..d {
            for i in 0..d {
                if (m[j][i] as i128 * md[j] as i128).rem_euclid(md[i] as i128) != 0 {
                    return Err(BruteError::NotAnAction(format!("image of t_{} under g_{} has wrong order", j + 1, h + 1)));
                }
            }
        }
    }
    // rows[i][j]: coefficient of t_i in the image of t_j
    let gen_mat: Vec<Vec<Vec<u64>>> = action
        .iter()
        .map(|m| (0..d).map(|i| (0..d).map(|j| m[j][i].rem_euclid(ring.modulus as i64) as u64).collect()).collect())
        .collect();
    let matmul = |a: &Vec<Vec<u64>>, b: &Vec<Vec<u64>>| -> Vec<Vec<u64>> {
        (0..d)
            .map(|i| (0..d).map(|j| (0..d).fold(0, |s, l| (s + ring.mulm(a[i][l], b[l][j])) % ring.modulus)).collect())
            .collect()
    };
    let id: Vec<Vec<u64>> = (0..d).map(|i| (0..d).map(|j| (i == j) as u64).collect()).collect();
    let mats: Vec<Vec<Vec<u64>>> = t
        .elems
        .iter()
        .map(|x| {
            let mut m = id.clone();
            for (h, &e) in x.iter().enumerate() {
                for _ in 0..e {
                    m = matmul(&gen_mat[h], &m);
                }
            }
            m
        })
        .collect();
    let reduce = |v: Vec<u64>| -> Vec<u64> { v.into_iter().zip(&md).map(|(x, &m)| x % m).collect() };
    let apply = |m: &Vec<Vec<u64>>, v: &[u64]| -> Vec<u64> {
        reduce((0..d).map(|i| (0..d).fold(0, |s, j| (s + ring.mulm(m[i][j], v[j])) % ring.modulus)).collect())
    };
    for x in 0..size {
        for y in 0..size {
            let xy = t.mul[x][y];
            for j in 0..d {
                let e: Vec<u64> = (0..d).map(|i| (i == j) as u64).collect();
                if apply(&mats[xy], &e) != apply(&mats[y], &apply(&mats[x], &e)) {
                    return Err(BruteError::NotAnAction(format!(
                        "elements {:?} and {:?} do not compose",
                        t.elems[x], t.elems[y]
                    )));
                }
            }
        }
    }
    // left action r.a = a^{r^{-1}}
    let left: Vec<&Vec<Vec<u64>>> = (0..size).map(|x| &mats[t.inv[x]]).collect();
    // embed a module coordinate into Z/q^K
    let lift: Vec<u64> = exps.iter().map(|&e| q.pow(k - e)).collect();
    let embed = |v: Vec<u64>| -> Vec<u64> { v.iter().zip(&lift).map(|(&x, &l)| ring.mulm(x, l)).collect() };

    // coboundary of the unit 2-cochain at (a, b, c):
    // (df)(x, y, z) = x.f(y, z) - f(xy, z) + f(x, yz) - f(x, y)
    let n2 = size * size;
    let mut rows2 = Vec::with_capacity(n2 * d);
    for a in 0..size {
        for b in 0..size {
            for c in 0..d {
                let mut row = vec![0u64; size.pow(3) * d];
                let e: Vec<u64> = (0..d).map(|i| (i == c) as u64).collect();
                for x in 0..size {
                    let xe = apply(left[x], &e);
                    for y in 0..size {
                        for z in 0..size {
                            let base = ((x * size + y) * size + z) * d;
                            let mut add = |v: &[u64], sign: bool| {
                                for (i, &vi) in v.iter().enumerate() {
                                    let cur = row[base + i];
                                    row[base + i] = if sign { (cur + vi) % md[i] } else { (cur + md[i] - vi) % md[i] };
                                }
                            };
                            if y == a && z == b {
                                add(&xe, true);
                            }
                            if t.mul[x][y] == a && z == b {
                                add(&e, false);
                            }
                            if x == a && t.mul[y][z] == b {
                                add(&e, true);
                            }
                            if x == a && y == b {
                                add(&e, false);
                            }
                        }
                    }
                }
                let row: Vec<u64> = row.chunks(d).flat_map(|ch| embed(ch.to_vec())).collect();
                rows2.push(row);
            }
        }
    }
    let im_d2 = image_order_exp(ring, rows2);
    // coboundary of the unit 1-cochain at (a, c):
    // (dg)(x, y) = x.g(y) - g(xy) + g(x)
    let mut rows1 = Vec::with_capacity(size * d);
    for a in 0..size {
        for c in 0..d {
            let mut row = vec![0u64; n2 * d];
            let e: Vec<u64> = (0..d).map(|i| (i == c) as u64).collect();
            for x in 0..size {
                let xe = apply(left[x], &e);
                for y in 0..size {
                    let base = (x * size + y) * d;
                    for i in 0..d {
                        let mut v = row[base + i];
                        if y == a {
                            v = (v + xe[i]) % md[i];
                        }
                        if t.mul[x][y] == a {
                            v = (v + md[i] - e[i]) % md[i];
                        }
                        if x == a {
                            v = (v + e[i]) % md[i];
                        }
                        row[base + i] = v;
                    }
                }
            }
            let row: Vec<u64> = row.chunks(d).flat_map(|ch| embed(ch.to_vec())).collect();
            rows1.push(row);
        }
    }
    let im_d1 = image_order_exp(ring, rows1);
    let cochains = n2 as u32 * exps.iter().sum::<u32>();
    Ok(q.pow(cochains - im_d2 - im_d1))
}

/// `|H^2|` by listing every function `R x R -> A` for very small cases.
pub fn literal_h2_order(r: &GroupHandle, q: u64, exps: &[u32], action: &[Vec<Vec<i64>>]) -> Result<u64, BruteError> {
    let t = table(r, 8)?;
    let size = t.elems.len();
    let d = exps.len();
    let md: Vec<u64> = exps.iter().map(|&e| q.pow(e)).collect();
    let a_order: u64 = md.iter().product();
    let total = (a_order as u128).checked_pow((size * size) as u32).filter(|&x| x <= 1 << 22);
    let Some(total) = total else { return Err(BruteError::TooLarge(size as u64)) };
    let elems_a: Vec<Vec<u64>> = {
        let mut out = vec![vec![]];
        for &m in &md {
            out = out.into_iter().flat_map(|v| (0..m).map(move |x| [v.clone(), vec![x]].concat())).collect();
        }
        out
    };
    let mats: Vec<Vec<Vec<i64>>> = t
        .elems
        .iter()
        .map(|x| {
            let mut m: Vec<Vec<i64>> = (0..d).map(|i| (0..d).map(|j| (i == j) as i64).collect()).collect();
            for (h, &e) in x.iter().enumerate() {
                for _ in 0..e {
                    m = (0..d)
                        .map(|i| (0..d).map(|j| (0..d).map(|l| action[h][l][i] * m[l][j]).sum::<i64>()).collect())
                        .collect();
                }
            }
            m
        })
        .collect();
    let act = |x: usize, v: &[u64]| -> Vec<u64> {
        let m = &mats[t.inv[x]];
        (0..d)
            .map(|i| ((0..d).map(|j| m[i][j] * v[j] as i64).sum::<i64>()).rem_euclid(md[i] as i64) as u64)
            .collect()
    };
    let add = |a: &[u64], b: &[u64]| -> Vec<u64> { a.iter().zip(b).zip(&md).map(|((x, y), m)| (x + y) % m).collect() };
    let neg = |a: &[u64]| -> Vec<u64> { a.iter().zip(&md).map(|(x, m)| (m - x) % m).collect() };
    let mut cocycles = 0u64;
    for code in 0..total {
        let mut c = code;
        let f: Vec<&Vec<u64>> = (0..size * size)
            .map(|_| {
                let v = &elems_a[(c % a_order as u128) as usize];
                c /= a_order as u128;
                v
            })
            .collect();
        let ok = (0..size).all(|x| {
            (0..size).all(|y| {
                (0..size).all(|z| {
                    let lhs = add(&act(x, f[y * size + z]), f[x * size + t.mul[y][z]]);
                    let rhs = add(f[t.mul[x][y] * size + z], f[x * size + y]);
                    lhs == rhs
                })
            })
        });
        cocycles += ok as u64;
    }
    let mut boundaries = std::collections::HashSet::new();
    let g_total = (a_order as u128).pow(size as u32);
    for code in 0..g_total {
        let mut c = code;
        let g: Vec<&Vec<u64>> = (0..size)
            .map(|_| {
                let v = &elems_a[(c % a_order as u128) as usize];
                c /= a_order as u128;
                v
            })
            .collect();
        let db: Vec<Vec<u64>> = (0..size * size)
            .map(|xy| {
                let (x, y) = (xy / size, xy % size);
                add(&add(&act(x, g[y]), &neg(g[t.mul[x][y]])), g[x])
            })
            .collect();
        boundaries.insert(db);
    }
    Ok(cocycles / boundaries.len() as u64)
}
