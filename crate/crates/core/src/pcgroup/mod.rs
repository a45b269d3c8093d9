//! Finite p-groups given by polycyclic presentations.

mod coset_enum;
pub mod families;
mod presentation;
mod subgroup;

use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};

use num_bigint::BigInt;
use thiserror::Error;

use crate::zmod_linalg::{relation_invariants, to_u64_list, IntMatrix};

pub use coset_enum::coset_enumeration_order;
pub use presentation::{log_p, pow_within, Overlap, PcPresentation, Violation};
pub use subgroup::InducedSubgroup;

/// Exponent vector `(e_1, ..., e_n)` of a normal word.
pub type Elem = Vec<u64>;

/// A word as a list of (generator, exponent) letters.
pub type Word = Vec<(usize, i64)>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PcError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("relative order {order} of generator {} is not a power of the prime", gen + 1)]
    BadRelativeOrder { gen: usize, order: u64 },
    #[error("malformed presentation: {0}")]
    Shape(String),
    #[error("relation {relation} mentions generator {} which does not exist", gen + 1)]
    GeneratorOutOfRange { relation: String, gen: usize },
    #[error("relation {relation} mentions generator {}, which is not later in the series", gen + 1)]
    NotPolycyclic { relation: String, gen: usize },
    #[error("subgroup is not normal")]
    NotNormal,
    #[error("section is not abelian")]
    NotAbelian,
    #[error("group of order p^{order_exp} exceeds the enumeration bound {bound}")]
    TooLarge { order_exp: u32, bound: u64 },
    #[error("presentation is inconsistent: {0}")]
    Inconsistent(String),
}

struct GroupData {
    pres: PcPresentation,
    lcs: OnceLock<Vec<InducedSubgroup>>,
    frattini: OnceLock<InducedSubgroup>,
}

/// Shared, immutable group with lazily computed invariants.
#[derive(Clone)]
pub struct GroupHandle(Arc<GroupData>);

impl std::fmt::Debug for GroupHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.pres.fmt(f)
    }
}

impl GroupHandle {
    pub fn new(pres: PcPresentation) -> Self {
        GroupHandle(Arc::new(GroupData { pres, lcs: OnceLock::new(), frattini: OnceLock::new() }))
    }

    /// Wraps `pres` after checking consistency.
    pub fn checked(pres: PcPresentation) -> Result<Self, PcError> {
        if let Some(v) = pres.check_consistency().first() {
            return Err(PcError::Inconsistent(v.to_string()));
        }
        Ok(Self::new(pres))
    }

    pub fn pres(&self) -> &PcPresentation {
        &self.0.pres
    }

    pub fn prime(&self) -> u64 {
        self.0.pres.prime()
    }

    pub fn ngens(&self) -> usize {
        self.0.pres.len()
    }

    pub fn order_exp(&self) -> u32 {
        self.0.pres.order_exp()
    }

    pub fn order(&self) -> BigInt {
        num_traits::pow(BigInt::from(self.prime()), self.order_exp() as usize)
    }

    pub fn whole(&self) -> InducedSubgroup {
        let gens: Vec<Elem> = (0..self.ngens()).map(|j| self.pres().gen(j)).collect();
        InducedSubgroup::generated(self.pres(), &gens)
    }

    pub fn trivial(&self) -> InducedSubgroup {
        InducedSubgroup::generated(self.pres(), &[])
    }

    pub fn subgroup(&self, gens: &[Elem]) -> InducedSubgroup {
        InducedSubgroup::generated(self.pres(), gens)
    }

    pub fn normal_closure(&self, gens: &[Elem]) -> InducedSubgroup {
        InducedSubgroup::normal_closure(self.pres(), gens)
    }

    /// `[U, G]`
    pub fn commutator_with_group(&self, u: &InducedSubgroup) -> InducedSubgroup {
        let pres = self.pres();
        let mut gens = Vec::new();
        for x in u.gens() {
            for j in 0..self.ngens() {
                let c = pres.comm(x, &pres.gen(j));
                if !PcPresentation::is_identity(&c) {
                    gens.push(c);
                }
            }
        }
        self.normal_closure(&gens)
    }

    /// `gamma_1 = G, gamma_2, ...`, ending with the trivial subgroup.
    pub fn lower_central_series(&self) -> &[InducedSubgroup] {
        self.0.lcs.get_or_init(|| {
            let mut series = vec![self.whole()];
            loop {
                let last = series.last().expect("nonempty");
                if last.is_trivial() {
                    break;
                }
                let next = self.commutator_with_group(last);
                assert!(
                    next.order_exp() < last.order_exp(),
                    "lower central series stalls: group is not nilpotent"
                );
                series.push(next);
            }
            series
        })
    }

    pub fn nilpotency_class(&self) -> usize {
        self.lower_central_series().len() - 1
    }

    pub fn coclass(&self) -> u32 {
        self.order_exp() - self.nilpotency_class() as u32
    }

    /// `gamma_i` with one-based index; the trivial subgroup past the end.
    pub fn lcs_term(&self, i: usize) -> InducedSubgroup {
        let s = self.lower_central_series();
        assert!(i >= 1);
        s.get(i - 1).cloned().unwrap_or_else(|| self.trivial())
    }

    pub fn derived_subgroup(&self) -> InducedSubgroup {
        self.lcs_term(2)
    }

    /// Frattini subgroup `G^p [G, G]`.
    pub fn frattini(&self) -> &InducedSubgroup {
        self.0.frattini.get_or_init(|| {
            let pres = self.pres();
            let n = self.ngens();
            let mut gens = Vec::new();
            for i in 0..n {
                gens.push(pres.pow(&pres.gen(i), self.prime()));
                for j in 0..i {
                    gens.push(pres.comm(&pres.gen(i), &pres.gen(j)));
                }
            }
            self.normal_closure(&gens)
        })
    }

    pub fn is_normal(&self, n: &InducedSubgroup) -> bool {
        let pres = self.pres();
        n.gens().iter().all(|x| (0..self.ngens()).all(|j| n.contains(pres, &pres.conj(x, &pres.gen(j)))))
    }

    /// Presentation of `G/N` together with the projection.
    pub fn quotient(&self, n: &InducedSubgroup) -> Result<(GroupHandle, QuotientMap), PcError> {
        if !self.is_normal(n) {
            return Err(PcError::NotNormal);
        }
        let pres = self.pres();
        let p = self.prime();
        let ng = self.ngens();
        // relative order of the surviving part of each depth
        let mut keep_order = pres.rel_orders().to_vec();
        for (&k, &s) in n.depths().iter().zip(n.lead_exps()) {
            keep_order[k] = p.pow(s);
        }
        let kept: Vec<usize> = (0..ng).filter(|&k| keep_order[k] > 1).collect();
        let map = QuotientMap { kept: kept.clone(), parent_len: ng };
        let project = |x: &Elem| -> Vec<i64> {
            let r = n.coset_rep(pres, x);
            kept.iter().map(|&k| r[k] as i64).collect()
        };
        let orders: Vec<u64> = kept.iter().map(|&k| keep_order[k]).collect();
        let mut powers = Vec::new();
        let mut conjugates = Vec::new();
        for (a, &k) in kept.iter().enumerate() {
            powers.push(project(&pres.pow(&pres.gen(k), keep_order[k])));
            let mut row = Vec::new();
            for &h in &kept[..a] {
                row.push(project(&pres.conj(&pres.gen(k), &pres.gen(h))));
            }
            conjugates.push(row);
        }
        let q = PcPresentation::from_vectors(p, orders, powers, conjugates)?;
        Ok((GroupHandle::new(q), map))
    }

    /// Abelian invariants of the section `U/V`; `V` must be normal in `U`
    /// with abelian quotient.
    pub fn section_invariants(&self, u: &InducedSubgroup, v: &InducedSubgroup) -> Result<Vec<u64>, PcError> {
        let pres = self.pres();
        let m = u.gens().len();
        for a in 0..m {
            for b in 0..a {
                if !v.contains(pres, &pres.comm(&u.gens()[a], &u.gens()[b])) {
                    return Err(PcError::NotAbelian);
                }
            }
        }
        let mut rows: Vec<Vec<BigInt>> = Vec::new();
        for (a, x) in u.gens().iter().enumerate() {
            let ro = u.relative_order(pres, a);
            let c = u.coords(pres, &pres.pow(x, ro)).expect("power lies in subgroup");
            let mut row: Vec<BigInt> = c.iter().map(|&e| -BigInt::from(e)).collect();
            row[a] += BigInt::from(ro);
            rows.push(row);
        }
        for y in v.gens() {
            let c = u.coords(pres, y).ok_or(PcError::NotNormal)?;
            rows.push(c.iter().map(|&e| BigInt::from(e)).collect());
        }
        if m == 0 {
            return Ok(vec![]);
        }
        Ok(to_u64_list(&relation_invariants(&IntMatrix::from_big_rows(rows, m))))
    }

    pub fn abelian_invariants(&self) -> Vec<u64> {
        self.section_invariants(&self.whole(), &self.derived_subgroup()).expect("G/G' is abelian")
    }

    /// Every normal form with its order; refuses groups above `bound`.
    pub fn enumerate_elements(&self, bound: u64) -> Result<Vec<(Elem, u64)>, PcError> {
        let total = self.order_size(bound)?;
        let pres = self.pres();
        let mut out = Vec::with_capacity(total as usize);
        for_each_normal_form(pres.rel_orders(), |x| out.push((x.clone(), pres.elem_order(x))));
        Ok(out)
    }

    pub fn order_histogram(&self, bound: u64) -> Result<BTreeMap<u64, u64>, PcError> {
        self.order_size(bound)?;
        let pres = self.pres();
        let mut hist = BTreeMap::new();
        for_each_normal_form(pres.rel_orders(), |x| *hist.entry(pres.elem_order(x)).or_insert(0) += 1);
        Ok(hist)
    }

    fn order_size(&self, bound: u64) -> Result<u64, PcError> {
        let too_large = PcError::TooLarge { order_exp: self.order_exp(), bound };
        let size = self.prime().checked_pow(self.order_exp()).ok_or(too_large.clone())?;
        if size > bound {
            return Err(too_large);
        }
        Ok(size)
    }
}

/// Calls `f` on every exponent vector below the given relative orders.
pub fn for_each_normal_form(orders: &[u64], mut f: impl FnMut(&Elem)) {
    let n = orders.len();
    let mut x = vec![0u64; n];
    loop {
        f(&x);
        let mut i = n;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            x[i] += 1;
            if x[i] < orders[i] {
                break;
            }
            x[i] = 0;
        }
    }
}

/// Projection from a group onto a quotient built by [`GroupHandle::quotient`].
#[derive(Clone, Debug)]
pub struct QuotientMap {
    kept: Vec<usize>,
    parent_len: usize,
}

impl QuotientMap {
    /// Parent generator index of each quotient generator.
    pub fn kept(&self) -> &[usize] {
        &self.kept
    }

    /// Image of a coset representative already in canonical form.
    pub fn project_rep(&self, rep: &Elem) -> Elem {
        debug_assert_eq!(rep.len(), self.parent_len);
        self.kept.iter().map(|&k| rep[k]).collect()
    }

    /// Image of an arbitrary element of the parent.
    pub fn project(&self, parent: &GroupHandle, n: &InducedSubgroup, x: &Elem) -> Elem {
        self.project_rep(&n.coset_rep(parent.pres(), x))
    }

    /// Canonical preimage (lift) of a quotient element.
    pub fn lift(&self, y: &Elem) -> Elem {
        let mut x = vec![0; self.parent_len];
        for (&k, &e) in self.kept.iter().zip(y) {
            x[k] = e;
        }
        x
    }
}
