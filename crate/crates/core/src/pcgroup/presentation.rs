use std::fmt;

use super::{Elem, PcError, Word};

/// A polycyclic presentation with prime-power relative orders.
///
/// Generators `g_0, ..., g_{n-1}` (zero-based). Each power relation
/// `g_j^{o_j}` and each conjugate relation `g_j^{g_h}` (`h < j`) has a right
/// side in the subgroup generated by the later generators, so
/// `G_k = <g_k, ..., g_{n-1}>` is a subnormal series with cyclic factors.
/// Right sides are normalized by collection when the presentation is built.
#[derive(Clone)]
pub struct PcPresentation {
    prime: u64,
    rel_orders: Vec<u64>,
    /// normal form of `g_j^{o_j}`
    powers: Vec<Elem>,
    /// `conj[h][j]` is the normal form of `g_j^{g_h}`, defined for `j > h`
    conj: Vec<Vec<Elem>>,
    /// `phi[h][b][j]` is `g_j^{g_h^{2^b}}` for `j > h`
    phi: Vec<Vec<Vec<Elem>>>,
    /// conjugation by `g_h` fixes every later generator
    phi_trivial: Vec<bool>,
    inv_powers: Vec<Elem>,
}

impl fmt::Debug for PcPresentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "PcPresentation(p={}, orders={:?})", self.prime, self.rel_orders)?;
        for j in 0..self.len() {
            writeln!(f, "  g{}^{} = {:?}", j + 1, self.rel_orders[j], self.powers[j])?;
            for h in 0..j {
                if !is_unit(&self.conj[h][j], j) {
                    writeln!(f, "  g{}^g{} = {:?}", j + 1, h + 1, self.conj[h][j])?;
                }
            }
        }
        Ok(())
    }
}

/// Equal relative orders and normalized relations.
impl PartialEq for PcPresentation {
    fn eq(&self, other: &Self) -> bool {
        self.prime == other.prime
            && self.rel_orders == other.rel_orders
            && self.powers == other.powers
            && (0..self.len()).all(|h| self.conj[h][h + 1..] == other.conj[h][h + 1..])
    }
}

impl Eq for PcPresentation {}

fn is_unit(x: &Elem, j: usize) -> bool {
    x.iter().enumerate().all(|(i, &e)| if i == j { e == 1 } else { e == 0 })
}

fn is_prime_power(q: u64, p: u64) -> bool {
    if q < p {
        return false;
    }
    let mut q = q;
    while q % p == 0 {
        q /= p;
    }
    q == 1
}

impl PcPresentation {
    /// Builds and normalizes a presentation. `powers[j]` is a word for
    /// `g_j^{o_j}`; `conjugates[j][h]` (for `h < j`) a word for `g_j^{g_h}`.
    /// Negative exponents and out-of-range exponents are collected away.
    pub fn new(
        prime: u64,
        rel_orders: Vec<u64>,
        powers: Vec<Word>,
        conjugates: Vec<Vec<Word>>,
    ) -> Result<Self, PcError> {
        let n = rel_orders.len();
        if prime < 2 || (2..prime).take_while(|d| d * d <= prime).any(|d| prime % d == 0) {
            return Err(PcError::NotPrime(prime));
        }
        for (j, &o) in rel_orders.iter().enumerate() {
            if !is_prime_power(o, prime) {
                return Err(PcError::BadRelativeOrder { gen: j, order: o });
            }
        }
        if powers.len() != n || conjugates.len() != n {
            return Err(PcError::Shape(format!(
                "{} generators but {} power and {} conjugate relation lists",
                n,
                powers.len(),
                conjugates.len()
            )));
        }
        for (j, c) in conjugates.iter().enumerate() {
            if c.len() != j {
                return Err(PcError::Shape(format!(
                    "generator {} needs {} conjugate relations, got {}",
                    j + 1,
                    j,
                    c.len()
                )));
            }
        }
        let mut pres = PcPresentation {
            prime,
            rel_orders,
            powers: vec![Vec::new(); n],
            conj: vec![vec![Vec::new(); n]; n],
            phi: vec![Vec::new(); n],
            phi_trivial: vec![true; n],
            inv_powers: vec![Vec::new(); n],
        };
        // bottom-up: level h only needs the relations among g_{h+1}, ...
        for h in (0..n).rev() {
            let check = |w: &Word, what: String| -> Result<(), PcError> {
                for &(g, _) in w {
                    if g >= n {
                        return Err(PcError::GeneratorOutOfRange { relation: what, gen: g });
                    }
                    if g <= h {
                        return Err(PcError::NotPolycyclic { relation: what, gen: g });
                    }
                }
                Ok(())
            };
            check(&powers[h], format!("g{}^{}", h + 1, pres.rel_orders[h]))?;
            pres.powers[h] = pres.collect(&powers[h]);
            for j in h + 1..n {
                let w = &conjugates[j][h];
                check(w, format!("g{}^g{}", j + 1, h + 1))?;
                pres.conj[h][j] = pres.collect(w);
            }
            pres.phi_trivial[h] = (h + 1..n).all(|j| is_unit(&pres.conj[h][j], j));
            if !pres.phi_trivial[h] {
                let mut tables = vec![pres.conj[h].clone()];
                let mut span = 2u64;
                while span < pres.rel_orders[h] {
                    let b = tables.len() - 1;
                    let mut next = vec![Vec::new(); n];
                    for (j, slot) in next.iter_mut().enumerate().skip(h + 1) {
                        *slot = pres.apply_table(h, &tables[b], &tables[b][j]);
                    }
                    tables.push(next);
                    span *= 2;
                }
                pres.phi[h] = tables;
            }
            pres.inv_powers[h] = pres.inv(&pres.powers[h]);
        }
        Ok(pres)
    }

    /// Builds a presentation from exponent vectors instead of words.
    pub fn from_vectors(
        prime: u64,
        rel_orders: Vec<u64>,
        powers: Vec<Vec<i64>>,
        conjugates: Vec<Vec<Vec<i64>>>,
    ) -> Result<Self, PcError> {
        let to_word = |v: &Vec<i64>| -> Word {
            v.iter().enumerate().filter(|(_, &e)| e != 0).map(|(g, &e)| (g, e)).collect()
        };
        let pw = powers.iter().map(to_word).collect();
        let cw = conjugates.iter().map(|row| row.iter().map(to_word).collect()).collect();
        Self::new(prime, rel_orders, pw, cw)
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    pub fn len(&self) -> usize {
        self.rel_orders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rel_orders.is_empty()
    }

    pub fn rel_orders(&self) -> &[u64] {
        &self.rel_orders
    }

    pub fn rel_order(&self, j: usize) -> u64 {
        self.rel_orders[j]
    }

    /// Normal form of `g_j^{o_j}`.
    pub fn power(&self, j: usize) -> &Elem {
        &self.powers[j]
    }

    /// Normal form of `g_j^{g_h}` for `h < j`.
    pub fn conjugate(&self, j: usize, h: usize) -> &Elem {
        assert!(h < j);
        &self.conj[h][j]
    }

    /// `log_p` of the product of the relative orders.
    pub fn order_exp(&self) -> u32 {
        self.rel_orders.iter().map(|&o| o.trailing_zeros_base(self.prime)).sum()
    }

    pub fn identity(&self) -> Elem {
        vec![0; self.len()]
    }

    pub fn gen(&self, j: usize) -> Elem {
        let mut x = self.identity();
        x[j] = 1;
        x
    }

    pub fn is_identity(x: &Elem) -> bool {
        x.iter().all(|&e| e == 0)
    }

    pub fn depth(x: &Elem) -> Option<usize> {
        x.iter().position(|&e| e != 0)
    }

    fn apply_table(&self, h: usize, table: &[Elem], s: &Elem) -> Elem {
        let mut acc = self.identity();
        for j in h + 1..self.len() {
            let e = s[j];
            if e == 0 {
                continue;
            }
            let img = &table[j];
            if is_unit(img, j) {
                self.mul_gen_pow(&mut acc, j, e);
            } else {
                let t = self.pow(img, e);
                acc = self.mul(&acc, &t);
            }
        }
        acc
    }

    /// `s^{g_h^e}` for `s` in `G_{h+1}`.
    fn conj_by_gen_pow(&self, h: usize, e: u64, s: Elem) -> Elem {
        if self.phi_trivial[h] {
            return s;
        }
        let mut out = s;
        let mut bits = e;
        let mut b = 0;
        while bits > 0 {
            if bits & 1 == 1 {
                out = self.apply_table(h, &self.phi[h][b], &out);
            }
            bits >>= 1;
            b += 1;
        }
        out
    }

    /// `x <- x * g_k^e` with `0 <= e < o_k`.
    pub fn mul_gen_pow(&self, x: &mut Elem, k: usize, e: u64) {
        debug_assert!(e < self.rel_orders[k]);
        if e == 0 {
            return;
        }
        let n = self.len();
        let tail_nonzero = x[k + 1..].iter().any(|&a| a != 0);
        let sum = x[k] + e;
        let wrap = sum >= self.rel_orders[k];
        if !tail_nonzero && !wrap {
            x[k] = sum;
            return;
        }
        let mut s = vec![0; n];
        s[k + 1..].copy_from_slice(&x[k + 1..]);
        let mut t = if tail_nonzero { self.conj_by_gen_pow(k, e, s) } else { s };
        if wrap {
            x[k] = sum - self.rel_orders[k];
            t = self.mul(&self.powers[k], &t);
        } else {
            x[k] = sum;
        }
        x[k + 1..].copy_from_slice(&t[k + 1..]);
    }

    pub fn mul(&self, x: &Elem, y: &Elem) -> Elem {
        let mut out = x.clone();
        for (k, &e) in y.iter().enumerate() {
            if e != 0 {
                self.mul_gen_pow(&mut out, k, e);
            }
        }
        out
    }

    pub fn pow(&self, x: &Elem, m: u64) -> Elem {
        let mut result = self.identity();
        let mut base = x.clone();
        let mut m = m;
        while m > 0 {
            if m & 1 == 1 {
                result = self.mul(&result, &base);
            }
            m >>= 1;
            if m > 0 {
                base = self.mul(&base, &base);
            }
        }
        result
    }

    pub fn inv(&self, x: &Elem) -> Elem {
        let Some(k) = Self::depth(x) else {
            return self.identity();
        };
        let a = x[k];
        let mut s = x.clone();
        s[k] = 0;
        let mut y = self.inv(&s);
        self.mul_gen_pow(&mut y, k, self.rel_orders[k] - a);
        if Self::is_identity(&self.inv_powers[k]) {
            y
        } else {
            self.mul(&y, &self.inv_powers[k])
        }
    }

    /// `y^{-1} x y`
    pub fn conj(&self, x: &Elem, y: &Elem) -> Elem {
        self.mul(&self.inv(y), &self.mul(x, y))
    }

    /// `[x, y] = x^{-1} y^{-1} x y`
    pub fn comm(&self, x: &Elem, y: &Elem) -> Elem {
        let xy = self.mul(x, y);
        let yx = self.mul(y, x);
        self.mul(&self.inv(&yx), &xy)
    }

    /// Collects an arbitrary word to its normal form.
    pub fn collect(&self, w: &Word) -> Elem {
        let mut acc = self.identity();
        for &(g, e) in w {
            let o = self.rel_orders[g];
            if e >= 0 && (e as u64) < o {
                self.mul_gen_pow(&mut acc, g, e as u64);
            } else {
                let base = self.pow(&self.gen(g), e.unsigned_abs());
                let t = if e < 0 { self.inv(&base) } else { base };
                acc = self.mul(&acc, &t);
            }
        }
        acc
    }

    /// Order of an element (a power of `p`).
    pub fn elem_order(&self, x: &Elem) -> u64 {
        let mut order = 1;
        let mut y = x.clone();
        while !Self::is_identity(&y) {
            y = self.pow(&y, self.prime);
            order *= self.prime;
        }
        order
    }

    /// Evaluates both sides of every standard overlap identity.
    pub fn overlaps(&self) -> Vec<(Overlap, Elem, Elem)> {
        let n = self.len();
        let mut out = Vec::new();
        let g = |j: usize| self.gen(j);
        for k in 0..n {
            for j in 0..k {
                for i in 0..j {
                    let left = self.mul(&self.mul(&g(k), &g(j)), &g(i));
                    let right = self.mul(&g(k), &self.mul(&g(j), &g(i)));
                    out.push((Overlap::Triple { k, j, i }, left, right));
                }
            }
        }
        for j in 0..n {
            let mut top_j = self.identity();
            top_j[j] = self.rel_orders[j] - 1;
            for i in 0..j {
                // (g_j^{o-1} g_j) g_i = g_j^{o-1} (g_j g_i)
                let left = self.mul(&self.mul(&top_j, &g(j)), &g(i));
                let right = self.mul(&top_j, &self.mul(&g(j), &g(i)));
                out.push((Overlap::PowerLeft { j, i }, left, right));
                // g_j (g_i^{o-1} g_i) = (g_j g_i^{o-1}) g_i
                let mut top_i = self.identity();
                top_i[i] = self.rel_orders[i] - 1;
                let left = self.mul(&g(j), &self.mul(&top_i, &g(i)));
                let right = self.mul(&self.mul(&g(j), &top_i), &g(i));
                out.push((Overlap::PowerRight { j, i }, left, right));
            }
            // (g_j^{o-1} g_j) g_j = g_j^{o-1} (g_j g_j)
            let left = self.mul(&self.mul(&top_j, &g(j)), &g(j));
            let right = self.mul(&top_j, &self.mul(&g(j), &g(j)));
            out.push((Overlap::PowerSelf { j }, left, right));
        }
        out
    }

    /// Overlap identities that fail. An empty list means the presentation
    /// is consistent.
    pub fn check_consistency(&self) -> Vec<Violation> {
        self.overlaps()
            .into_iter()
            .filter(|(_, l, r)| l != r)
            .map(|(overlap, left, right)| Violation { overlap, left, right })
            .collect()
    }

    pub fn is_consistent(&self) -> bool {
        self.check_consistency().is_empty()
    }

    /// Relators `g_j^{o_j} w^{-1}` and `g_h^{-1} g_j g_h w^{-1}` as words,
    /// in the order power of `g_j` followed by its conjugates.
    pub fn relators(&self) -> Vec<Word> {
        let n = self.len();
        let mut out = Vec::new();
        let inv_word = |x: &Elem| -> Word {
            x.iter().enumerate().rev().filter(|(_, &e)| e != 0).map(|(g, &e)| (g, -(e as i64))).collect()
        };
        for j in 0..n {
            let mut w: Word = vec![(j, self.rel_orders[j] as i64)];
            w.extend(inv_word(&self.powers[j]));
            out.push(w);
            for h in 0..j {
                let mut w: Word = vec![(h, -1), (j, 1), (h, 1)];
                w.extend(inv_word(&self.conj[h][j]));
                out.push(w);
            }
        }
        out
    }

    /// Exponent vector as a word in normal order.
    pub fn elem_word(x: &Elem) -> Word {
        x.iter().enumerate().filter(|(_, &e)| e != 0).map(|(g, &e)| (g, e as i64)).collect()
    }
}

trait BaseLog {
    fn trailing_zeros_base(self, p: u64) -> u32;
}

impl BaseLog for u64 {
    fn trailing_zeros_base(self, p: u64) -> u32 {
        let mut q = self;
        let mut k = 0;
        while q > 1 && q % p == 0 {
            q /= p;
            k += 1;
        }
        k
    }
}

pub fn log_p(q: u64, p: u64) -> u32 {
    q.trailing_zeros_base(p)
}

/// `p^e <= bound`, without overflow.
pub fn pow_within(p: u64, e: u32, bound: u64) -> bool {
    p.checked_pow(e).is_some_and(|v| v <= bound)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Overlap {
    /// `(g_k g_j) g_i` against `g_k (g_j g_i)`
    Triple { k: usize, j: usize, i: usize },
    PowerLeft { j: usize, i: usize },
    PowerRight { j: usize, i: usize },
    PowerSelf { j: usize },
}

impl fmt::Display for Overlap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Overlap::Triple { k, j, i } => write!(f, "(g{} g{}) g{}", k + 1, j + 1, i + 1),
            Overlap::PowerLeft { j, i } => write!(f, "(g{}^o g{}) power/conjugate", j + 1, i + 1),
            Overlap::PowerRight { j, i } => write!(f, "g{} (g{}^o) conjugate/power", j + 1, i + 1),
            Overlap::PowerSelf { j } => write!(f, "g{}^(o+1)", j + 1),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub overlap: Overlap,
    pub left: Elem,
    pub right: Elem,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {:?} != {:?}", self.overlap, self.left, self.right)
    }
}
