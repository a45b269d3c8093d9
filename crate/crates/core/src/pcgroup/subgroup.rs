use num_integer::Integer;

use super::{Elem, PcPresentation};

/// A subgroup given by its canonical induced generating sequence: one
/// element per occupied depth, leading exponent `p^s`, and entries at the
/// other occupied depths reduced below their leading exponents.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct InducedSubgroup {
    gens: Vec<Elem>,
    depths: Vec<usize>,
    lead_exps: Vec<u32>,
    order_exp: u32,
}

struct Slot {
    elem: Elem,
    inv: Elem,
    s: u32,
}

fn val_p(mut a: u64, p: u64) -> u32 {
    let mut v = 0;
    while a % p == 0 {
        a /= p;
        v += 1;
    }
    v
}

fn inverse_mod(a: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let e = (a as i128).extended_gcd(&(m as i128));
    e.x.mod_floor(&(m as i128)) as u64
}

fn sift(pres: &PcPresentation, slots: &[Option<Slot>], mut x: Elem) -> Elem {
    let p = pres.prime();
    while let Some(k) = PcPresentation::depth(&x) {
        let Some(slot) = &slots[k] else { return x };
        let lead = p.pow(slot.s);
        if x[k] % lead != 0 {
            return x;
        }
        let c = x[k] / lead;
        x = pres.mul(&x, &pres.pow(&slot.inv, c));
    }
    x
}

fn close(pres: &PcPresentation, slots: &mut [Option<Slot>], mut queue: Vec<Elem>, conj_by: &[Elem]) {
    let p = pres.prime();
    while let Some(x) = queue.pop() {
        let r = sift(pres, slots, x);
        let Some(k) = PcPresentation::depth(&r) else { continue };
        let o = pres.rel_order(k);
        let s = val_p(r[k], p);
        let unit = r[k] / p.pow(s);
        let m = inverse_mod(unit, o / p.pow(s));
        let r = if m == 1 { r } else { pres.pow(&r, m) };
        debug_assert_eq!(r[k], p.pow(s));
        if let Some(old) = slots[k].take() {
            debug_assert!(s < old.s);
            queue.push(old.elem);
        }
        queue.push(pres.pow(&r, o / p.pow(s)));
        for u in slots.iter().flatten() {
            queue.push(pres.comm(&r, &u.elem));
        }
        for g in conj_by {
            queue.push(pres.conj(&r, g));
        }
        let inv = pres.inv(&r);
        slots[k] = Some(Slot { elem: r, inv, s });
    }
}

impl InducedSubgroup {
    fn from_slots(pres: &PcPresentation, mut slots: Vec<Option<Slot>>) -> Self {
        let p = pres.prime();
        let n = pres.len();
        // reduce every element at the deeper occupied depths
        for k in 0..n {
            let Some(slot) = &slots[k] else { continue };
            let mut x = slot.elem.clone();
            for j in k + 1..n {
                let Some(sj) = &slots[j] else { continue };
                let lead = p.pow(sj.s);
                if x[j] >= lead {
                    x = pres.mul(&x, &pres.pow(&sj.inv, x[j] / lead));
                }
            }
            let inv = pres.inv(&x);
            let s = slot.s;
            slots[k] = Some(Slot { elem: x, inv, s });
        }
        let mut gens = Vec::new();
        let mut depths = Vec::new();
        let mut lead_exps = Vec::new();
        let mut order_exp = 0;
        for (k, slot) in slots.into_iter().enumerate() {
            if let Some(slot) = slot {
                order_exp += super::log_p(pres.rel_order(k), p) - slot.s;
                gens.push(slot.elem);
                depths.push(k);
                lead_exps.push(slot.s);
            }
        }
        InducedSubgroup { gens, depths, lead_exps, order_exp }
    }

    fn slots(&self, pres: &PcPresentation) -> Vec<Option<Slot>> {
        let mut slots: Vec<Option<Slot>> = (0..pres.len()).map(|_| None).collect();
        for ((x, &k), &s) in self.gens.iter().zip(&self.depths).zip(&self.lead_exps) {
            slots[k] = Some(Slot { elem: x.clone(), inv: pres.inv(x), s });
        }
        slots
    }

    pub fn generated(pres: &PcPresentation, gens: &[Elem]) -> Self {
        let mut slots: Vec<Option<Slot>> = (0..pres.len()).map(|_| None).collect();
        close(pres, &mut slots, gens.to_vec(), &[]);
        Self::from_slots(pres, slots)
    }

    pub fn normal_closure(pres: &PcPresentation, gens: &[Elem]) -> Self {
        let all: Vec<Elem> = (0..pres.len()).map(|j| pres.gen(j)).collect();
        Self::closure_under(pres, gens, &all)
    }

    /// Smallest subgroup containing `gens` and closed under conjugation by
    /// the elements of `conj_by`.
    pub fn closure_under(pres: &PcPresentation, gens: &[Elem], conj_by: &[Elem]) -> Self {
        let mut slots: Vec<Option<Slot>> = (0..pres.len()).map(|_| None).collect();
        close(pres, &mut slots, gens.to_vec(), conj_by);
        Self::from_slots(pres, slots)
    }

    /// Subgroup generated by `self` and `extra`.
    pub fn join(&self, pres: &PcPresentation, extra: &[Elem]) -> Self {
        let mut slots = self.slots(pres);
        close(pres, &mut slots, extra.to_vec(), &[]);
        Self::from_slots(pres, slots)
    }

    /// `[U, U]`
    pub fn derived(&self, pres: &PcPresentation) -> Self {
        let mut comms = Vec::new();
        for (a, x) in self.gens.iter().enumerate() {
            for y in &self.gens[..a] {
                comms.push(pres.comm(x, y));
            }
        }
        Self::closure_under(pres, &comms, &self.gens)
    }

    pub fn gens(&self) -> &[Elem] {
        &self.gens
    }

    pub fn depths(&self) -> &[usize] {
        &self.depths
    }

    pub fn lead_exps(&self) -> &[u32] {
        &self.lead_exps
    }

    /// `log_p |U|`
    pub fn order_exp(&self) -> u32 {
        self.order_exp
    }

    pub fn is_trivial(&self) -> bool {
        self.gens.is_empty()
    }

    /// Order of the `a`-th generator modulo the later part of the sequence.
    pub fn relative_order(&self, pres: &PcPresentation, a: usize) -> u64 {
        pres.rel_order(self.depths[a]) / pres.prime().pow(self.lead_exps[a])
    }

    pub fn contains(&self, pres: &PcPresentation, x: &Elem) -> bool {
        self.coords(pres, x).is_some()
    }

    pub fn contains_subgroup(&self, pres: &PcPresentation, other: &InducedSubgroup) -> bool {
        other.gens.iter().all(|x| self.contains(pres, x))
    }

    /// Exponents `c` with `x = u_1^{c_1} u_2^{c_2} ...`, or `None` when
    /// `x` is not in the subgroup.
    pub fn coords(&self, pres: &PcPresentation, x: &Elem) -> Option<Vec<u64>> {
        let p = pres.prime();
        let mut x = x.clone();
        let mut out = vec![0; self.gens.len()];
        for (a, (&k, &s)) in self.depths.iter().zip(&self.lead_exps).enumerate() {
            if let Some(d) = PcPresentation::depth(&x) {
                if d < k {
                    return None;
                }
            } else {
                return Some(out);
            }
            let lead = p.pow(s);
            if x[k] % lead != 0 {
                return None;
            }
            let c = x[k] / lead;
            if c > 0 {
                let u_inv = pres.inv(&self.gens[a]);
                x = pres.mul(&pres.pow(&u_inv, c), &x);
            }
            out[a] = c;
        }
        PcPresentation::is_identity(&x).then_some(out)
    }

    /// Canonical representative of the coset `xU`.
    pub fn coset_rep(&self, pres: &PcPresentation, x: &Elem) -> Elem {
        let p = pres.prime();
        let mut x = x.clone();
        for (a, (&k, &s)) in self.depths.iter().zip(&self.lead_exps).enumerate() {
            let lead = p.pow(s);
            if x[k] >= lead {
                let u_inv = pres.inv(&self.gens[a]);
                x = pres.mul(&x, &pres.pow(&u_inv, x[k] / lead));
            }
        }
        x
    }
}
