//! Isomorphism invariants, isomorphism search, coclass-graph edges and
//! classification of sequences into isomorphism classes.

mod extension;

use std::collections::{BTreeMap, HashMap, VecDeque};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

pub use extension::ExtensionContext;

use crate::pcgroup::families::direct_product;
use crate::sequences::{ParamPresentation, SequenceError};
use crate::pcgroup::{for_each_normal_form, pow_within, Elem, GroupHandle, InducedSubgroup, QuotientMap};

pub const DEFAULT_ENUM_BOUND: u64 = 1 << 20;
pub const DEFAULT_ISO_EFFORT: u64 = 200_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("isomorphism undecided after {0} search nodes")]
    Unknown(u64),
}

/// Invariants of a group that do not depend on its presentation.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Fingerprint {
    pub order_exp: u32,
    pub class: usize,
    pub coclass: u32,
    /// invariants of `gamma_i / gamma_{i+1}`
    pub lcs_factors: Vec<Vec<u64>>,
    pub abelianization: Vec<u64>,
    /// `gamma_2 / gamma_4` when abelian
    pub gamma2_mod_gamma4: Option<Vec<u64>>,
    /// class of the largest lower central quotient within the bound
    pub quotient_class: usize,
    pub quotient_order_exp: u32,
    pub quotient_center: Vec<u64>,
    /// counts of elements of that quotient keyed by lower central weight,
    /// order, conjugacy class size and weight of the `p`-th power
    pub quotient_elements: Vec<(usize, u64, u64, usize, u64)>,
    /// `log_p` of the orders of the quotient's `Omega_1` and `Agemo_1`
    pub omega_agemo: (u32, u32),
    /// abelianization and element order counts of each maximal subgroup
    /// of the quotient, sorted
    pub maximal_subgroups: Vec<(Vec<u64>, Vec<(u64, u64)>)>,
    /// the quotient is the whole group
    pub complete: bool,
}

impl Fingerprint {
    /// Name of the first component on which the two prints differ.
    pub fn first_difference(&self, other: &Fingerprint) -> Option<&'static str> {
        let checks: [(&'static str, bool); 13] = [
            ("order", self.order_exp == other.order_exp),
            ("nilpotency class", self.class == other.class),
            ("coclass", self.coclass == other.coclass),
            ("lower central factors", self.lcs_factors == other.lcs_factors),
            ("abelianization", self.abelianization == other.abelianization),
            ("gamma_2/gamma_4", self.gamma2_mod_gamma4 == other.gamma2_mod_gamma4),
            ("enumerated quotient", self.quotient_class == other.quotient_class),
            ("enumerated quotient order", self.quotient_order_exp == other.quotient_order_exp),
            ("center of quotient", self.quotient_center == other.quotient_center),
            ("element statistics", self.quotient_elements == other.quotient_elements),
            ("omega and agemo", self.omega_agemo == other.omega_agemo),
            ("maximal subgroups", self.maximal_subgroups == other.maximal_subgroups),
            ("completeness", self.complete == other.complete),
        ];
        checks.into_iter().find(|(_, eq)| !eq).map(|(name, _)| name)
    }
}

/// Lower central weight: the largest `i` with `x` in `gamma_i`.
fn weight(g: &GroupHandle, x: &Elem) -> usize {
    let lcs = g.lower_central_series();
    let pres = g.pres();
    let mut w = 0;
    for (i, term) in lcs.iter().enumerate() {
        if term.contains(pres, x) {
            w = i + 1;
        } else {
            break;
        }
    }
    w
}

/// `Z(G)`: successive preimages `U_k` of `Z(G/gamma_{k+1})`, each found
/// from coset representatives of `U_{k-1}/gamma_k`.
pub fn center(g: &GroupHandle) -> InducedSubgroup {
    let pres = g.pres();
    let lcs = g.lower_central_series();
    let gens: Vec<Elem> = (0..g.ngens()).map(|j| pres.gen(j)).collect();
    let mut u = g.whole();
    for k in 1..lcs.len() {
        let next = &lcs[k];
        let reps: Vec<Elem> = section_elements(g, &u, &lcs[k - 1])
            .into_iter()
            .filter(|x| gens.iter().all(|y| next.contains(pres, &pres.comm(x, y))))
            .collect();
        u = lcs[k - 1].join(pres, &reps);
    }
    u
}

/// Size of the conjugacy class of every element, indexed in the order of
/// [`for_each_normal_form`].
fn class_sizes(g: &GroupHandle) -> Vec<u64> {
    let pres = g.pres();
    let orders = pres.rel_orders();
    let total: u64 = orders.iter().product();
    let index = |x: &Elem| x.iter().zip(orders).fold(0u64, |acc, (&e, &o)| acc * o + e) as usize;
    let gens = minimal_generators(g);
    let mut size = vec![0u64; total as usize];
    let mut orbit = Vec::new();
    for_each_normal_form(orders, |x| {
        if size[index(x)] != 0 {
            return;
        }
        orbit.clear();
        orbit.push(x.clone());
        size[index(x)] = 1;
        let mut k = 0;
        while k < orbit.len() {
            for h in &gens {
                let y = pres.conj(&orbit[k], h);
                let iy = index(&y);
                if size[iy] == 0 {
                    size[iy] = 1;
                    orbit.push(y);
                }
            }
            k += 1;
        }
        for y in &orbit {
            size[index(y)] = orbit.len() as u64;
        }
    });
    size
}

pub fn fingerprint(g: &GroupHandle, bound: u64) -> Fingerprint {
    let lcs = g.lower_central_series();
    let class = lcs.len() - 1;
    let lcs_factors: Vec<Vec<u64>> = (0..class)
        .map(|i| g.section_invariants(&lcs[i], &lcs[i + 1]).expect("lower central factors are abelian"))
        .collect();
    let gamma2_mod_gamma4 = g.section_invariants(&g.lcs_term(2), &g.lcs_term(4)).ok();
    // largest j with |G/gamma_{j+1}| within the bound
    let mut j = class;
    while j > 0 && !pow_within(g.prime(), g.order_exp() - lcs[j].order_exp(), bound) {
        j -= 1;
    }
    let (q, _) = g.quotient(&lcs[j]).expect("lower central terms are normal");
    let qp = q.pres();
    let phi = q.frattini().clone();
    let (top, top_map) = q.quotient(&phi).expect("normal");
    let rank = top.ngens();
    let p_int = q.prime();
    // one functional per maximal subgroup: first nonzero entry 1
    let functionals: Vec<Vec<u64>> = {
        let mut out = Vec::new();
        for_each_normal_form(&vec![p_int; rank], |f| {
            if f.iter().find(|&&c| c != 0) == Some(&1) {
                out.push(f.clone());
            }
        });
        out
    };
    let sizes = class_sizes(&q);
    let mut counter = 0usize;
    let mut counts: BTreeMap<(usize, u64, u64, usize), u64> = BTreeMap::new();
    let mut max_counts: Vec<BTreeMap<u64, u64>> = vec![BTreeMap::new(); functionals.len()];
    let mut omega = q.trivial();
    let mut agemo = q.trivial();
    for_each_normal_form(qp.rel_orders(), |x| {
        let o = qp.elem_order(x);
        let y = qp.pow(x, p_int);
        *counts.entry((weight(&q, x), o, sizes[counter], weight(&q, &y))).or_insert(0) += 1;
        counter += 1;
        let v = top_map.project(&q, &phi, x);
        for (f, m) in functionals.iter().zip(max_counts.iter_mut()) {
            if f.iter().zip(&v).map(|(a, b)| a * b).sum::<u64>() % p_int == 0 {
                *m.entry(o).or_insert(0) += 1;
            }
        }
        if o == p_int && !omega.contains(qp, x) {
            omega = omega.join(qp, std::slice::from_ref(x));
        }
        if !agemo.contains(qp, &y) {
            agemo = agemo.join(qp, &[y]);
        }
    });
    let mut maximal_subgroups: Vec<(Vec<u64>, Vec<(u64, u64)>)> = functionals
        .iter()
        .zip(max_counts)
        .map(|(f, m)| {
            // kernel of f: e_a - f_a e_piv for a != piv
            let piv = f.iter().position(|&c| c != 0).expect("nonzero");
            let gens: Vec<Elem> = (0..rank)
                .filter(|&a| a != piv)
                .map(|a| {
                    let mut e = vec![0u64; rank];
                    e[a] = 1;
                    e[piv] = (p_int - f[a]) % p_int;
                    top_map.lift(&e)
                })
                .collect();
            let mx = phi.join(qp, &gens);
            let ab = q.section_invariants(&mx, &mx.derived(qp)).expect("abelian quotient");
            (ab, m.into_iter().collect())
        })
        .collect();
    maximal_subgroups.sort();
    Fingerprint {
        order_exp: g.order_exp(),
        class,
        coclass: g.coclass(),
        lcs_factors,
        abelianization: g.abelian_invariants(),
        gamma2_mod_gamma4,
        quotient_class: j,
        quotient_order_exp: q.order_exp(),
        quotient_center: q.section_invariants(&center(&q), &q.trivial()).expect("center is abelian"),
        quotient_elements: counts.into_iter().map(|((w, o, z, v), c)| (w, o, z, v, c)).collect(),
        omega_agemo: (omega.order_exp(), agemo.order_exp()),
        maximal_subgroups,
        complete: j == class,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum IsoVerdict {
    /// images of the pc generators of the first group
    Isomorphic(Vec<Elem>),
    NonIsomorphic(String),
    Unknown(u64),
}

impl IsoVerdict {
    pub fn is_isomorphic(&self) -> bool {
        matches!(self, IsoVerdict::Isomorphic(_))
    }
}

/// Whether `images` of the pc generators of `g` satisfy every defining
/// relation of `g` in `h`.
pub fn verify_homomorphism(g: &GroupHandle, h: &GroupHandle, images: &[Elem]) -> bool {
    let (gp, hp) = (g.pres(), h.pres());
    if images.len() != gp.len() {
        return false;
    }
    let eval = |x: &Elem| -> Elem {
        x.iter().zip(images).fold(hp.identity(), |acc, (&e, y)| hp.mul(&acc, &hp.pow(y, e)))
    };
    for j in 0..gp.len() {
        if hp.pow(&images[j], gp.rel_order(j)) != eval(gp.power(j)) {
            return false;
        }
        for k in 0..j {
            if hp.conj(&images[j], &images[k]) != eval(gp.conjugate(j, k)) {
                return false;
            }
        }
    }
    true
}

fn minimal_generators(g: &GroupHandle) -> Vec<Elem> {
    let pres = g.pres();
    let phi = g.frattini();
    let mut span = phi.clone();
    let mut out = Vec::new();
    for j in 0..g.ngens() {
        let x = pres.gen(j);
        if !span.contains(pres, &x) {
            span = span.join(pres, std::slice::from_ref(&x));
            out.push(x);
        }
    }
    out
}

/// `G / gamma_{j+1}` for each `j` in `1..=class`.
struct Tower {
    group: GroupHandle,
    levels: Vec<(GroupHandle, QuotientMap, InducedSubgroup)>,
}

impl Tower {
    fn new(g: &GroupHandle) -> Self {
        let lcs = g.lower_central_series();
        let levels = (1..lcs.len())
            .map(|j| {
                let (q, m) = g.quotient(&lcs[j]).expect("normal");
                (q, m, lcs[j].clone())
            })
            .collect();
        Tower { group: g.clone(), levels }
    }

    fn project(&self, level: usize, x: &Elem) -> Elem {
        let (_, m, n) = &self.levels[level];
        m.project(&self.group, n, x)
    }

    /// Element orders in each coset of `gamma_2`, counted in the quotient
    /// at `level`.
    fn coset_signatures(&self, level: usize) -> HashMap<Elem, BTreeMap<u64, u64>> {
        let (q, m, _) = &self.levels[level];
        let qp = q.pres();
        let mut out: HashMap<Elem, BTreeMap<u64, u64>> = HashMap::new();
        for_each_normal_form(qp.rel_orders(), |z| {
            let top = self.project(0, &m.lift(z));
            *out.entry(top).or_default().entry(qp.elem_order(z)).or_insert(0) += 1;
        });
        out
    }
}

/// Largest size of a quotient enumerated for coset signatures.
const SIGNATURE_BOUND: u64 = 65536;

struct Search<'a> {
    tg: &'a Tower,
    th: &'a Tower,
    xs: Vec<Elem>,
    products: Vec<GroupHandle>,
    /// lifts of `gamma_{j+1}(H)` modulo `gamma_{j+2}(H)`
    layers: Vec<Vec<Elem>>,
    effort: u64,
    used: u64,
    /// keep searching after a success, storing every map
    found: Option<Vec<Vec<Elem>>>,
    /// `log_p` of the order of the subgroup generated by the first `k`
    /// generators in each quotient of `G`
    source_orders: Vec<Vec<u32>>,
    /// `top_ok[k][i]`: layer element `i` of the first level has the coset
    /// signature of generator `k`
    top_ok: Vec<Vec<bool>>,
}

enum Outcome {
    Found(Vec<Elem>),
    Exhausted,
    OutOfEffort,
}

impl Search<'_> {
    /// Whether `(x_i, y_i)` for `i < ys.len()` generate the graph of a map
    /// on the quotient at `level`.
    fn well_defined(&mut self, level: usize, ys: &[Elem]) -> bool {
        self.used += 1;
        let k = ys.len();
        let pairs: Vec<Elem> = self.xs[..k]
            .iter()
            .zip(ys)
            .map(|(x, y)| [self.tg.project(level, x), self.th.project(level, y)].concat())
            .collect();
        let graph = self.products[level].subgroup(&pairs);
        graph.order_exp() == self.source_orders[level][k]
    }

    /// On the first level the images must be independent modulo the
    /// Frattini subgroup of `H`.
    fn independent(&self, level: usize, ys: &[Elem]) -> bool {
        if level > 0 {
            return true;
        }
        let h = &self.th.group;
        let phi = h.frattini();
        phi.join(h.pres(), ys).order_exp() == phi.order_exp() + ys.len() as u32
    }

    fn run(&mut self, level: usize, ys: Vec<Elem>) -> Outcome {
        if level == self.tg.levels.len() {
            if let Some(all) = &mut self.found {
                all.push(ys);
                return Outcome::Exhausted;
            }
            return Outcome::Found(ys);
        }
        let mut cand = Vec::with_capacity(ys.len());
        self.assign(level, &ys, &mut cand)
    }

    /// Chooses the image of generator `cand.len()` at `level`.
    fn assign(&mut self, level: usize, base: &[Elem], cand: &mut Vec<Elem>) -> Outcome {
        let k = cand.len();
        if k == base.len() {
            return self.run(level + 1, cand.clone());
        }
        let hp = self.th.group.pres();
        for i in 0..self.layers[level].len() {
            if self.used >= self.effort {
                return Outcome::OutOfEffort;
            }
            if level == 0 && !self.top_ok[k][i] {
                continue;
            }
            cand.push(hp.mul(&base[k], &self.layers[level][i]));
            let ok = self.independent(level, cand) && self.well_defined(level, cand);
            if ok {
                match self.assign(level, base, cand) {
                    Outcome::Exhausted => {}
                    other => return other,
                }
            }
            cand.pop();
        }
        Outcome::Exhausted
    }
}

/// Representatives of `U/V` for `V <= U` normal in `G`.
fn section_elements(g: &GroupHandle, u: &InducedSubgroup, v: &InducedSubgroup) -> Vec<Elem> {
    let (q, map) = g.quotient(v).expect("normal");
    let qp = q.pres();
    let image: Vec<Elem> = u.gens().iter().map(|x| map.project(g, v, x)).collect();
    let ub = q.subgroup(&image);
    let ords: Vec<u64> = (0..ub.gens().len()).map(|a| ub.relative_order(qp, a)).collect();
    let mut out = Vec::new();
    for_each_normal_form(&ords, |c| {
        let x = c.iter().zip(ub.gens()).fold(qp.identity(), |acc, (&e, y)| qp.mul(&acc, &qp.pow(y, e)));
        out.push(map.lift(&x));
    });
    out
}

/// Isomorphism test: fingerprints first, then a search for images of a
/// minimal generating set lifted through the lower central quotients.
pub fn is_isomorphic(g: &GroupHandle, h: &GroupHandle, bound: u64, effort: u64) -> IsoVerdict {
    let (fg, fh) = (fingerprint(g, bound), fingerprint(h, bound));
    is_isomorphic_with(g, h, &fg, &fh, effort)
}

/// Runs the lifting search from a minimal generating set of `g`.
fn lift_search(g: &GroupHandle, h: &GroupHandle, effort: u64, collect: bool) -> (Vec<Elem>, Outcome, Vec<Vec<Elem>>) {
    let (tg, th) = (Tower::new(g), Tower::new(h));
    let xs = minimal_generators(g);
    if tg.levels.len() != th.levels.len() {
        return (xs, Outcome::Exhausted, vec![]);
    }
    let products: Vec<GroupHandle> =
        tg.levels.iter().zip(&th.levels).map(|(a, b)| direct_product(&a.0, &b.0)).collect();
    let hl = h.lower_central_series();
    let layers: Vec<Vec<Elem>> = (0..hl.len() - 1).map(|j| section_elements(h, &hl[j], &hl[j + 1])).collect();
    let found = collect.then(Vec::new);
    let source_orders: Vec<Vec<u32>> = (0..tg.levels.len())
        .map(|l| {
            let q = &tg.levels[l].0;
            let proj: Vec<Elem> = xs.iter().map(|x| tg.project(l, x)).collect();
            (0..=xs.len()).map(|k| q.subgroup(&proj[..k]).order_exp()).collect()
        })
        .collect();
    let sig_level = (0..tg.levels.len())
        .take_while(|&l| pow_within(g.prime(), tg.levels[l].0.order_exp(), SIGNATURE_BOUND))
        .last()
        .unwrap_or(0);
    let (sg, sh) = (tg.coset_signatures(sig_level), th.coset_signatures(sig_level));
    let signatures: Vec<BTreeMap<u64, u64>> = xs.iter().map(|x| sg[&tg.project(0, x)].clone()).collect();
    let top_ok: Vec<Vec<bool>> = signatures
        .iter()
        .map(|want| layers[0].iter().map(|y| sh.get(&th.project(0, y)) == Some(want)).collect())
        .collect();
    let mut search =
        Search { tg: &tg, th: &th, xs: xs.clone(), products, layers, effort, used: 0, found, source_orders, top_ok };
    let start = vec![h.pres().identity(); xs.len()];
    let outcome = search.run(0, start);
    let all = search.found.take().unwrap_or_default();
    (xs, outcome, all)
}

/// Every automorphism of `g`, as images of its pc generators.
pub fn all_automorphisms(g: &GroupHandle, effort: u64) -> Result<Vec<Vec<Elem>>, AnalysisError> {
    if g.order_exp() == 0 {
        return Ok(vec![vec![]; 1]);
    }
    let (xs, outcome, all) = lift_search(g, g, effort, true);
    if let Outcome::OutOfEffort = outcome {
        return Err(AnalysisError::Unknown(effort));
    }
    Ok(all.iter().map(|ys| extend_to_pc_generators(g, g, &xs, ys)).collect())
}

/// As [`is_isomorphic`] with precomputed fingerprints.
pub fn is_isomorphic_with(g: &GroupHandle, h: &GroupHandle, fg: &Fingerprint, fh: &Fingerprint, effort: u64) -> IsoVerdict {
    if g.prime() != h.prime() && g.ngens() > 0 && h.ngens() > 0 {
        return IsoVerdict::NonIsomorphic("prime".into());
    }
    if let Some(what) = fg.first_difference(fh) {
        return IsoVerdict::NonIsomorphic(what.into());
    }
    if g.order_exp() == 0 {
        return IsoVerdict::Isomorphic(vec![vec![]; g.ngens()]);
    }
    let (xs, outcome, _) = lift_search(g, h, effort, false);
    match outcome {
        Outcome::Found(ys) => {
            let images = extend_to_pc_generators(g, h, &xs, &ys);
            assert!(verify_homomorphism(g, h, &images), "isomorphism search returned a non-homomorphism");
            IsoVerdict::Isomorphic(images)
        }
        Outcome::Exhausted => IsoVerdict::NonIsomorphic("no generator images lift through the lower central series".into()),
        Outcome::OutOfEffort => IsoVerdict::Unknown(effort),
    }
}

/// Images of all pc generators of `g` under the isomorphism `xs -> ys`.
fn extend_to_pc_generators(g: &GroupHandle, h: &GroupHandle, xs: &[Elem], ys: &[Elem]) -> Vec<Elem> {
    let prod = direct_product(g, h);
    let pp = prod.pres();
    let n = g.ngens();
    let k = prod.subgroup(&xs.iter().zip(ys).map(|(x, y)| [x.clone(), y.clone()].concat()).collect::<Vec<_>>());
    (0..n)
        .map(|j| {
            let mut e = vec![0; pp.len()];
            e[j] = 1;
            let r = k.coset_rep(pp, &e);
            debug_assert!(r[..n].iter().all(|&x| x == 0));
            h.pres().inv(&r[n..].to_vec())
        })
        .collect()
}

/// Whether `h / gamma(h)` is isomorphic to `g` for the last nontrivial
/// lower central term `gamma(h)`.
pub fn edge_test(g: &GroupHandle, h: &GroupHandle, bound: u64, effort: u64) -> Result<bool, AnalysisError> {
    let lcs = h.lower_central_series();
    if lcs.len() < 2 {
        return Ok(false);
    }
    let last = &lcs[lcs.len() - 2];
    if h.order_exp() != g.order_exp() + last.order_exp() {
        return Ok(false);
    }
    let (q, _) = h.quotient(last).expect("normal");
    match is_isomorphic(g, &q, bound, effort) {
        IsoVerdict::Isomorphic(_) => Ok(true),
        IsoVerdict::NonIsomorphic(_) => Ok(false),
        IsoVerdict::Unknown(n) => Err(AnalysisError::Unknown(n)),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PairVerdict {
    pub a: usize,
    pub b: usize,
    pub verdict: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionStatus {
    /// every pair is decided
    Exact,
    /// some pairs are undecided; classes may still merge
    LowerBound,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Classification {
    /// sorted classes of indices, ordered by their least member
    pub classes: Vec<Vec<usize>>,
    pub status: PartitionStatus,
    /// number of classes proved pairwise non-isomorphic
    pub certified_distinct: usize,
    pub verdicts: Vec<PairVerdict>,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, x: usize) -> usize {
        let p = self.0[x];
        if p == x {
            return x;
        }
        let r = self.find(p);
        self.0[x] = r;
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        let (lo, hi) = (a.min(b), a.max(b));
        self.0[hi] = lo;
    }
}

/// Partitions groups into isomorphism classes. Groups with different
/// fingerprints are distinct; inside a fingerprint bucket each group is
/// tested against the first member of every class found so far.
pub fn classify_groups(groups: &[GroupHandle], bound: u64, effort: u64) -> Classification {
    let prints: Vec<Fingerprint> = groups.par_iter().map(|g| fingerprint(g, bound)).collect();
    let mut buckets: Vec<Vec<usize>> = Vec::new();
    let mut index: HashMap<&Fingerprint, usize> = HashMap::new();
    for (i, f) in prints.iter().enumerate() {
        let b = *index.entry(f).or_insert_with(|| {
            buckets.push(vec![]);
            buckets.len() - 1
        });
        buckets[b].push(i);
    }
    classify_buckets(groups.len(), &buckets, &|a, b| {
        is_isomorphic_with(&groups[a], &groups[b], &prints[a], &prints[b], effort)
    })
}

/// Classes of the members of one family at index `i`, one per coefficient
/// vector. Pairs are decided by comparing extension classes; pairs outside
/// the reach of that test go through [`is_isomorphic`].
pub fn classify_sequences(
    fam: &ParamPresentation,
    i: u32,
    coeffs: &[Vec<i64>],
    bound: u64,
    effort: u64,
) -> Result<Classification, SequenceError> {
    let groups: Vec<GroupHandle> = coeffs.iter().map(|c| fam.instantiate(c, i)).collect::<Result<_, _>>()?;
    let ctx = ExtensionContext::new(fam, i, effort).ok();
    let all: Vec<usize> = (0..groups.len()).collect();
    Ok(classify_buckets(groups.len(), &[all], &|a, b| {
        ctx.as_ref()
            .and_then(|c| c.is_isomorphic(&groups[a], &groups[b]))
            .unwrap_or_else(|| is_isomorphic(&groups[a], &groups[b], bound, effort))
    }))
}

/// Tests each member of a bucket against the class leaders found so far.
fn classify_buckets(n: usize, buckets: &[Vec<usize>], decide: &(dyn Fn(usize, usize) -> IsoVerdict + Sync)) -> Classification {
    let results: Vec<(Vec<PairVerdict>, Vec<(usize, usize)>, usize, bool)> = buckets
        .par_iter()
        .map(|bucket| {
            let mut verdicts = Vec::new();
            let mut merges = Vec::new();
            // class leaders with the undecided relation among them
            let mut leaders: Vec<usize> = Vec::new();
            let mut decided = true;
            let mut distinct_pairs: Vec<(usize, usize)> = Vec::new();
            for &i in bucket {
                let mut merged = false;
                for &l in &leaders {
                    let v = decide(l, i);
                    let text = match &v {
                        IsoVerdict::Isomorphic(_) => "isomorphic".to_string(),
                        IsoVerdict::NonIsomorphic(why) => format!("non-isomorphic: {why}"),
                        IsoVerdict::Unknown(n) => format!("unknown after {n} nodes"),
                    };
                    verdicts.push(PairVerdict { a: l, b: i, verdict: text });
                    match v {
                        IsoVerdict::Isomorphic(_) => {
                            merges.push((l, i));
                            merged = true;
                            break;
                        }
                        IsoVerdict::NonIsomorphic(_) => distinct_pairs.push((l, i)),
                        IsoVerdict::Unknown(_) => decided = false,
                    }
                }
                if !merged {
                    leaders.push(i);
                }
            }
            // greedy set of leaders proved pairwise distinct
            let mut clique: Vec<usize> = Vec::new();
            for &l in &leaders {
                if clique.iter().all(|&c| distinct_pairs.contains(&(c, l))) {
                    clique.push(l);
                }
            }
            (verdicts, merges, clique.len(), decided)
        })
        .collect();
    let mut uf = UnionFind((0..n).collect());
    let mut verdicts = Vec::new();
    let mut certified = 0;
    let mut exact = true;
    for (v, merges, c, decided) in results {
        verdicts.extend(v);
        for (a, b) in merges {
            uf.union(a, b);
        }
        certified += c;
        exact &= decided;
    }
    let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let r = uf.find(i);
        classes.entry(r).or_default().push(i);
    }
    Classification {
        classes: classes.into_values().collect(),
        status: if exact { PartitionStatus::Exact } else { PartitionStatus::LowerBound },
        certified_distinct: certified,
        verdicts,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TreeNode {
    pub label: String,
    pub order_exp: u32,
    /// on the path of the tree (a `W = 0` instantiation)
    pub on_path: bool,
    pub fingerprint: Option<Fingerprint>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TreeFragment {
    pub nodes: Vec<TreeNode>,
    /// parent, child
    pub edges: Vec<(usize, usize)>,
}

impl TreeFragment {
    /// Distance of each node to the path; `None` when unreachable.
    pub fn depths(&self) -> Vec<Option<usize>> {
        let mut depth = vec![None; self.nodes.len()];
        let mut queue = VecDeque::new();
        for (i, n) in self.nodes.iter().enumerate() {
            if n.on_path {
                depth[i] = Some(0);
                queue.push_back(i);
            }
        }
        while let Some(v) = queue.pop_front() {
            for &(a, b) in &self.edges {
                if a == v && depth[b].is_none() {
                    depth[b] = depth[v].map(|d| d + 1);
                    queue.push_back(b);
                }
            }
        }
        depth
    }

    fn keys(&self) -> Vec<String> {
        let depths = self.depths();
        let base: Vec<String> = self
            .nodes
            .iter()
            .zip(&depths)
            .map(|(n, d)| match d {
                Some(d) => format!("o={},d={}", n.order_exp, d),
                None => format!("o={},d=?", n.order_exp),
            })
            .collect();
        let mut seen: HashMap<&str, usize> = HashMap::new();
        base.iter()
            .map(|k| {
                let c = seen.entry(k).or_insert(0);
                *c += 1;
                if *c == 1 {
                    k.clone()
                } else {
                    format!("{k},#{c}")
                }
            })
            .collect()
    }

    pub fn to_dot(&self) -> String {
        let keys = self.keys();
        let mut out = String::from("digraph {\n");
        for (k, n) in keys.iter().zip(&self.nodes) {
            out.push_str(&format!("  \"{k}\" [label=\"{}\"];\n", n.label));
        }
        for &(a, b) in &self.edges {
            out.push_str(&format!("  \"{}\" -> \"{}\";\n", keys[a], keys[b]));
        }
        out.push_str("}\n");
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        let keys = self.keys();
        let depths = self.depths();
        let nodes: Vec<serde_json::Value> = self
            .nodes
            .iter()
            .zip(&keys)
            .zip(&depths)
            .map(|((n, k), d)| {
                serde_json::json!({
                    "key": k,
                    "label": n.label,
                    "order_exp": n.order_exp,
                    "depth": d,
                    "on_path": n.on_path,
                    "fingerprint": n.fingerprint,
                })
            })
            .collect();
        let edges: Vec<serde_json::Value> =
            self.edges.iter().map(|&(a, b)| serde_json::json!({"from": keys[a], "to": keys[b]})).collect();
        serde_json::json!({ "nodes": nodes, "edges": edges })
    }
}

/// Coclass tree fragment of one family: the `W = 0` groups for
/// `i in 0..=i_max` and, for `i >= 1`, one group of every other class at
/// that index, joined by the edges found with [`edge_test`]. Pairs whose
/// edge test is undecided are returned separately.
pub fn tree_fragment(
    fam: &ParamPresentation,
    i_max: u32,
    bound: u64,
    effort: u64,
) -> Result<(TreeFragment, Vec<(usize, usize)>), SequenceError> {
    let reps = fam.representatives();
    let names = fam.record().representative_names.clone();
    let label = |k: usize, i: u32| match &names {
        Some(n) => format!("{} i={i}", n[k]),
        None => format!("W={:?} i={i}", reps[k]),
    };
    let zero = reps.iter().position(|c| c.iter().all(|&x| x == 0));
    let mut groups = Vec::new();
    let mut nodes = Vec::new();
    let mut levels: Vec<Vec<usize>> = Vec::new();
    for i in 0..=i_max {
        let mut level = Vec::new();
        let keep: Vec<usize> = if i == 0 {
            zero.into_iter().collect()
        } else {
            classify_sequences(fam, i, reps, bound, effort)?.classes.iter().map(|c| zero.filter(|z| c.contains(z)).unwrap_or(c[0])).collect()
        };
        for k in keep {
            let g = fam.instantiate(&reps[k], i)?;
            level.push(nodes.len());
            nodes.push(TreeNode {
                label: label(k, i),
                order_exp: g.order_exp(),
                on_path: Some(k) == zero,
                fingerprint: Some(fingerprint(&g, bound)),
            });
            groups.push(g);
        }
        levels.push(level);
    }
    let pairs: Vec<(usize, usize)> =
        levels.windows(2).flat_map(|w| w[0].iter().flat_map(|&a| w[1].iter().map(move |&b| (a, b)))).collect();
    let tests: Vec<Result<bool, AnalysisError>> =
        pairs.par_iter().map(|&(a, b)| edge_test(&groups[a], &groups[b], bound, effort)).collect();
    let mut edges = Vec::new();
    let mut undecided = Vec::new();
    for (&(a, b), t) in pairs.iter().zip(tests) {
        match t {
            Ok(true) => edges.push((a, b)),
            Ok(false) => {}
            Err(_) => undecided.push((a, b)),
        }
    }
    Ok((TreeFragment { nodes, edges }, undecided))
}
