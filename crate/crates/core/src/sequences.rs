//! Infinite sequences of a coclass family: bound formulas, pair sets,
//! parametrised presentations and the shipped catalog.
//!
//! A catalog block describes a pro-p-group `S` as an extension of
//! `T = Z_p^d` by `R = S/gamma_l(S)`. Instantiating it at index `i` with a
//! list of vectors `W` gives the group with relations
//! `r_j = t^{v_j} t^{p^i w_j}`, the action of `R` on `T`, and
//! `t_c^{p^{e/d+i}} = 1`.

use std::collections::BTreeMap;
use std::path::Path;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cohomology::{
    cocycle_space, compute_mi, compute_ni, decompose, kernel_exponent, relation_list, CohomologyError,
    Decomposition, H2Structure, ModuleSpec, RelationKind, TailVector,
};
use crate::pcgroup::{GroupHandle, PcError, PcPresentation, Word};
use crate::zmod_linalg::big_pow;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SequenceError {
    #[error("cannot read catalog {path}: {message}")]
    Io { path: String, message: String },
    #[error("catalog {path} violates the schema: {message}")]
    Schema { path: String, message: String },
    #[error("{0}")]
    Malformed(String),
    #[error("offset {e} is not divisible by the dimension {d}")]
    NotDivisible { d: usize, e: u32 },
    #[error("instantiation is inconsistent: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Group(#[from] PcError),
    #[error(transparent)]
    Cohomology(#[from] CohomologyError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelationKindRecord {
    Power,
    Conjugate,
}

/// One relation as printed: `g-part` exponent vector and `t`-part.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelationRecord {
    pub kind: RelationKindRecord,
    /// one-based
    pub gen: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub by: Option<usize>,
    pub rhs_g: Vec<i64>,
    pub v: Vec<i64>,
    /// generators named in the printed relation that do not exist, as
    /// (one-based index, exponent)
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rhs_extra: Option<Vec<(usize, i64)>>,
    #[serde(default)]
    pub text: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WBasisRecord {
    pub scale_exp: u32,
    /// `null` is a zero vector; missing trailing entries are zero
    pub vectors: Vec<Option<Vec<i64>>>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectedRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h2_invariants: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h3_order: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_sequences: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyRecord {
    pub name: String,
    pub p: u64,
    pub r: u32,
    pub d: usize,
    pub u: u32,
    pub k: u32,
    pub l: u32,
    pub e: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_secondary_root: Option<u32>,
    /// `log_p exp(M(H))` when known
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<u32>,
    pub generators: Vec<String>,
    pub t_rank: usize,
    pub relative_orders: Vec<u64>,
    pub relations: Vec<RelationRecord>,
    /// `action[h][j]`: exponent vector of `t_j^{g_h}`; `null` when not printed
    pub action: Vec<Vec<Option<Vec<i64>>>>,
    #[serde(rename = "W_basis")]
    pub w_basis: Vec<WBasisRecord>,
    pub representatives: Vec<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub representative_names: Option<Vec<String>>,
    #[serde(default)]
    pub expected: ExpectedRecord,
    #[serde(default)]
    pub notes: Vec<String>,
}

impl FamilyRecord {
    /// Display key such as `G(2,2)-S1 (5,12)`.
    pub fn key(&self) -> String {
        format!("{} ({},{})", self.name, self.l, self.e)
    }

    /// Whether `name` refers to this block; punctuation and case are ignored.
    pub fn matches_name(&self, name: &str) -> bool {
        let norm = |s: &str| s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_lowercase();
        norm(&self.name) == norm(name)
    }

    /// Candidate repairs for references to missing generators and missing
    /// action entries: every reference is replaced by each later generator
    /// or dropped, and missing actions become trivial.
    pub fn repair_hypotheses(&self) -> Vec<(String, FamilyRecord)> {
        let n = self.generators.len();
        let d = self.d;
        let mut base = self.clone();
        let mut fixes = Vec::new();
        for (h, row) in base.action.iter_mut().enumerate() {
            for (j, col) in row.iter_mut().enumerate() {
                if col.is_none() {
                    *col = Some((0..d).map(|i| (i == j) as i64).collect());
                    fixes.push(format!("t{}^g{} = t{}", j + 1, h + 1, j + 1));
                }
            }
        }
        let broken: Vec<usize> = base.relations.iter().enumerate().filter(|(_, r)| r.rhs_extra.is_some()).map(|(k, _)| k).collect();
        let mut out = vec![(fixes.join(", "), base.clone())];
        for k in broken {
            let mut next = Vec::new();
            for (label, rec) in out {
                let rel = &rec.relations[k];
                let extra = rel.rhs_extra.clone().unwrap_or_default();
                let mut choices: Vec<(String, Option<usize>)> = vec![("dropped".into(), None)];
                for g in rel.gen + 1..=n {
                    choices.push((format!("g{}", g), Some(g)));
                }
                for (what, target) in choices {
                    let mut r2 = rec.clone();
                    let rel2 = &mut r2.relations[k];
                    rel2.rhs_extra = None;
                    let mut ok = true;
                    if let Some(g) = target {
                        for &(_, ex) in &extra {
                            if rel2.rhs_g[g - 1] != 0 || rel2.rhs_g[g..].iter().any(|&x| x != 0) {
                                ok = false;
                            }
                            rel2.rhs_g[g - 1] += ex;
                        }
                    }
                    if !ok {
                        continue;
                    }
                    let names: Vec<String> = extra.iter().map(|(g, _)| format!("g{g}")).collect();
                    let step = format!("{} in {} read as {}", names.join(","), rel.text, what);
                    let label = if label.is_empty() { step } else { format!("{label}; {step}") };
                    next.push((label, r2));
                }
            }
            out = next;
        }
        out
    }
}

/// Records that differ from `rec` in one exponent of one relation's
/// `g`-part and load cleanly.
pub fn single_edit_repairs(rec: &FamilyRecord) -> Vec<(String, ParamPresentation)> {
    let n = rec.generators.len();
    let mut out = Vec::new();
    for (k, rel) in rec.relations.iter().enumerate() {
        for g in 0..n {
            let o = rec.relative_orders[g] as i64;
            let mut steps = vec![1];
            if o > 2 {
                steps.push(-1);
            }
            for s in steps {
                let mut r = rec.clone();
                let x = &mut r.relations[k].rhs_g[g];
                *x = (*x + s).rem_euclid(o);
                let label = format!("exponent of g{} in {} set to {}", g + 1, rel.text, *x);
                if let Ok(f) = load_block(r) {
                    out.push((label, f));
                }
            }
        }
    }
    out
}

/// `u - 1 + max(p^r, ceil(3(k + d)/2))`
pub fn secondary_root_bound(u: u64, p: u64, r: u32, k: u64, d: u64) -> u64 {
    u - 1 + p.pow(r).max((3 * (k + d)).div_ceil(2))
}

/// `2d(2l + 2r - 1)`
pub fn offset_bound(d: u64, l: u64, r: u64) -> u64 {
    2 * d * (2 * l + 2 * r - 1)
}

/// `max(2d(a + b + 1), d(l + r - 1))`
pub fn offset_from_definition(d: u64, a: u64, b: u64, l: u64, r: u64) -> u64 {
    (2 * d * (a + b + 1)).max(d * (l + r - 1))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairSpec {
    pub l: u32,
    pub e: u32,
}

/// Data of `S` that decide whether pairs are admissible.
#[derive(Clone, Debug, Default)]
pub struct PairContext {
    pub p: u64,
    pub r: u32,
    pub d: usize,
    pub u: u32,
    pub k: u32,
    /// secondary root asserted by the catalog
    pub asserted_root: Option<u32>,
    pub a: Option<u32>,
    pub b: Option<u32>,
    /// accept offsets listed in the catalog when `a` or `b` is unknown
    pub asserted_offsets: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Criterion {
    Bound,
    Definition,
    Asserted,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ValidatedPair {
    pub pair: PairSpec,
    pub root_by: Criterion,
    pub offset_by: Criterion,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PairError {
    #[error("expected {expected} pairs, got {got}")]
    Count { expected: usize, got: usize },
    #[error("l = {l} is not a secondary root: needs l >= {min} ({why})")]
    Root { l: u32, min: u64, why: &'static str },
    #[error("e = {e} is not an offset for l = {l}: needs e >= {min} ({why})")]
    Offset { l: u32, e: u32, min: u64, why: &'static str },
    #[error("pairs {0:?} and {1:?} have the same residue of l + e mod d")]
    Collision(PairSpec, PairSpec),
}

/// Validates a candidate set `P(S, k)`.
pub fn choose_pairs(ctx: &PairContext, candidates: &[PairSpec]) -> Result<Vec<ValidatedPair>, PairError> {
    let d = ctx.d as u64;
    if candidates.len() != ctx.d {
        return Err(PairError::Count { expected: ctx.d, got: candidates.len() });
    }
    let bound = secondary_root_bound(ctx.u as u64, ctx.p, ctx.r, ctx.k as u64, d);
    let mut out = Vec::new();
    for &pair in candidates {
        let l = pair.l as u64;
        let root_by = if l < ctx.u as u64 {
            return Err(PairError::Root { l: pair.l, min: ctx.u as u64, why: "primary root" });
        } else if l >= bound {
            Criterion::Bound
        } else if ctx.asserted_root.is_some_and(|m| pair.l >= m) {
            Criterion::Asserted
        } else {
            return Err(PairError::Root { l: pair.l, min: bound, why: "secondary root bound" });
        };
        let e = pair.e as u64;
        let by_bound = offset_bound(d, l, ctx.r as u64);
        let offset_by = match (ctx.a, ctx.b) {
            (Some(a), Some(b)) => {
                let min = offset_from_definition(d, a as u64, b as u64, l, ctx.r as u64);
                if e < min {
                    return Err(PairError::Offset { l: pair.l, e: pair.e, min, why: "offset definition" });
                }
                Criterion::Definition
            }
            _ if e >= by_bound => Criterion::Bound,
            _ if ctx.asserted_offsets => Criterion::Asserted,
            _ => return Err(PairError::Offset { l: pair.l, e: pair.e, min: by_bound, why: "offset bound" }),
        };
        out.push(ValidatedPair { pair, root_by, offset_by });
    }
    for (x, a) in candidates.iter().enumerate() {
        for b in &candidates[..x] {
            if (a.l + a.e) as u64 % d == (b.l + b.e) as u64 % d {
                return Err(PairError::Collision(*b, *a));
            }
        }
    }
    Ok(out)
}

/// `log_p` of `p^{r-1+l+e+id}`.
pub fn order_exp_formula(r: u32, l: u32, e: u32, d: usize, i: u32) -> u32 {
    r - 1 + l + e + i * d as u32
}

pub fn order_formula(p: u64, r: u32, l: u32, e: u32, d: usize, i: u32) -> BigInt {
    big_pow(p, order_exp_formula(r, l, e, d, i))
}

/// Abelian invariants of `gamma_l(S)/gamma_{l+e+id}(S)`, ascending.
pub fn module_invariants(p: u64, d: usize, e: u32, i: u32) -> Vec<u64> {
    let q = e / d as u32;
    let t = (e % d as u32) as usize;
    let mut out = vec![p.pow(i + q); d - t];
    out.extend(vec![p.pow(i + q + 1); t]);
    out
}

/// Every coefficient vector with `0 <= c_k < moduli[k]`, in lexicographic order.
pub fn enumerate_w_space(moduli: &[u64]) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for &m in moduli {
        out = out.into_iter().flat_map(|v: Vec<i64>| (0..m as i64).map(move |c| [v.clone(), vec![c]].concat())).collect();
    }
    out
}

/// A catalog block with its relations arranged in tail order.
#[derive(Clone, Debug)]
pub struct ParamPresentation {
    record: FamilyRecord,
    r: GroupHandle,
    action: Vec<Vec<Vec<i64>>>,
    rel_g: Vec<Word>,
    rel_v: Vec<Vec<i64>>,
    w_basis: Vec<TailVector>,
}

fn valuation_i64(x: i64, p: u64) -> Option<u32> {
    if x == 0 {
        return None;
    }
    let mut x = x.unsigned_abs();
    let mut v = 0;
    while x % p == 0 {
        x /= p;
        v += 1;
    }
    Some(v)
}

impl ParamPresentation {
    pub fn from_record(record: FamilyRecord) -> Result<Self, SequenceError> {
        let bad = |m: String| SequenceError::Malformed(format!("{}: {m}", record.key()));
        let n = record.generators.len();
        let d = record.d;
        let p = record.p;
        if record.t_rank != d {
            return Err(bad(format!("t_rank {} differs from d = {d}", record.t_rank)));
        }
        if record.relative_orders.len() != n {
            return Err(bad("relative_orders has the wrong length".into()));
        }
        if record.action.len() != n {
            return Err(bad(format!("action given for {} of {n} generators", record.action.len())));
        }
        let mut action = Vec::new();
        for (h, row) in record.action.iter().enumerate() {
            if row.len() != d {
                return Err(bad(format!("action of g{} has {} columns", h + 1, row.len())));
            }
            let mut cols = Vec::new();
            for (j, col) in row.iter().enumerate() {
                match col {
                    None => return Err(bad(format!("action t{}^g{} is not given", j + 1, h + 1))),
                    Some(c) if c.len() != d => return Err(bad(format!("action t{}^g{} has wrong length", j + 1, h + 1))),
                    Some(c) => cols.push(c.clone()),
                }
            }
            action.push(cols);
        }
        let rels = relation_list(n);
        let mut index = BTreeMap::new();
        for (k, rel) in rels.iter().enumerate() {
            index.insert(*rel, k);
        }
        let mut rel_g: Vec<Option<Word>> = vec![None; rels.len()];
        let mut rel_v = vec![vec![0; d]; rels.len()];
        for rec in &record.relations {
            if rec.gen == 0 || rec.gen > n {
                return Err(bad(format!("relation {} names generator g{}", rec.text, rec.gen)));
            }
            let key = match (rec.kind, rec.by) {
                (RelationKindRecord::Power, None) => RelationKind::Power { gen: rec.gen - 1 },
                (RelationKindRecord::Conjugate, Some(h)) if h >= 1 && h < rec.gen => {
                    RelationKind::Conjugate { gen: rec.gen - 1, by: h - 1 }
                }
                _ => return Err(bad(format!("relation {} has an invalid kind or conjugator", rec.text))),
            };
            if let Some(extra) = &rec.rhs_extra {
                let (g, _) = extra[0];
                return Err(SequenceError::Group(PcError::GeneratorOutOfRange { relation: rec.text.clone(), gen: g - 1 }));
            }
            if rec.rhs_g.len() != n || rec.v.len() != d {
                return Err(bad(format!("relation {} has vectors of the wrong length", rec.text)));
            }
            let k = index[&key];
            if rel_g[k].is_some() {
                return Err(bad(format!("relation {} is given twice", rec.text)));
            }
            rel_g[k] = Some(rec.rhs_g.iter().enumerate().filter(|(_, &x)| x != 0).map(|(g, &x)| (g, x)).collect());
            rel_v[k] = rec.v.clone();
        }
        // absent relations are trivial: g_j^{o_j} = 1, g_j^{g_h} = g_j
        let rel_g: Vec<Word> = rels
            .iter()
            .zip(rel_g)
            .map(|(rel, w)| {
                w.unwrap_or_else(|| match *rel {
                    RelationKind::Power { .. } => vec![],
                    RelationKind::Conjugate { gen, .. } => vec![(gen, 1)],
                })
            })
            .collect();
        let m = rels.len();
        let mut w_basis = Vec::new();
        for (b, w) in record.w_basis.iter().enumerate() {
            if w.vectors.len() > m {
                return Err(bad(format!("W_{} has {} entries for {m} relations", b + 1, w.vectors.len())));
            }
            let scale = (p as i64).checked_pow(w.scale_exp).ok_or_else(|| bad("W scale too large".into()))?;
            let mut tails = vec![vec![0i64; d]; m];
            for (j, v) in w.vectors.iter().enumerate() {
                if let Some(v) = v {
                    if v.len() != d {
                        return Err(bad(format!("W_{} entry {} has length {}", b + 1, j + 1, v.len())));
                    }
                    tails[j] = v.iter().map(|&x| x * scale).collect();
                }
            }
            w_basis.push(tails);
        }
        for rep in &record.representatives {
            if rep.len() != w_basis.len() {
                return Err(bad("representative has the wrong number of coefficients".into()));
            }
        }
        let (powers, conj) = split_relations(n, &rel_g);
        let rpres = PcPresentation::new(p, record.relative_orders.clone(), powers, conj)?;
        let r = GroupHandle::checked(rpres)?;
        Ok(ParamPresentation { record, r, action, rel_g, rel_v, w_basis })
    }

    pub fn record(&self) -> &FamilyRecord {
        &self.record
    }

    pub fn key(&self) -> String {
        self.record.key()
    }

    pub fn prime(&self) -> u64 {
        self.record.p
    }

    pub fn d(&self) -> usize {
        self.record.d
    }

    pub fn pair(&self) -> PairSpec {
        PairSpec { l: self.record.l, e: self.record.e }
    }

    /// The quotient `R = S/gamma_l(S)`.
    pub fn quotient_group(&self) -> &GroupHandle {
        &self.r
    }

    pub fn relation_count(&self) -> usize {
        self.rel_g.len()
    }

    /// `e/d + i`
    pub fn t_exp(&self, i: u32) -> Result<u32, SequenceError> {
        let d = self.record.d;
        let e = self.record.e;
        if d == 0 || e % d as u32 != 0 {
            return Err(SequenceError::NotDivisible { d, e });
        }
        Ok(e / d as u32 + i)
    }

    /// The action of `R` on `T` with the given truncation exponents.
    pub fn module_with_exps(&self, exps: Vec<u32>) -> Result<ModuleSpec, SequenceError> {
        Ok(ModuleSpec::new(self.record.p, exps, self.action.clone())?)
    }

    /// `A_i = T / p^{e/d+i} T`
    pub fn module(&self, i: u32) -> Result<ModuleSpec, SequenceError> {
        let s = self.t_exp(i)?;
        self.module_with_exps(vec![s; self.record.d])
    }

    /// Extension presentation with `t`-exponents `tails` appended to the
    /// printed relations and `t` of order `p^s`.
    pub fn extension_with(&self, tails: &[Vec<i64>], s: u32) -> Result<PcPresentation, SequenceError> {
        let n = self.r.ngens();
        let d = self.record.d;
        let q = (self.record.p as i64).checked_pow(s).ok_or_else(|| SequenceError::Malformed("modulus too large".into()))?;
        let words: Vec<Word> = self
            .rel_g
            .iter()
            .zip(tails)
            .map(|(g, t)| {
                let mut w = g.clone();
                w.extend(t.iter().enumerate().map(|(c, &x)| (n + c, x.rem_euclid(q))).filter(|&(_, x)| x != 0));
                w
            })
            .collect();
        let (mut powers, mut conj) = split_relations(n, &words);
        for c in 0..d {
            powers.push(vec![]);
            let mut row: Vec<Word> = (0..n)
                .map(|h| self.action[h][c].iter().enumerate().map(|(i, &x)| (n + i, x.rem_euclid(q))).filter(|&(_, x)| x != 0).collect())
                .collect();
            row.extend((0..c).map(|_| vec![(n + c, 1)]));
            conj.push(row);
        }
        let mut orders = self.r.pres().rel_orders().to_vec();
        orders.extend(vec![self.record.p.pow(s); d]);
        Ok(PcPresentation::new(self.record.p, orders, powers, conj)?)
    }

    /// Integer tails `sum_k c_k W_k`.
    pub fn w_tails(&self, coeffs: &[i64]) -> TailVector {
        let d = self.record.d;
        let mut out = vec![vec![0i64; d]; self.relation_count()];
        for (c, w) in coeffs.iter().zip(&self.w_basis) {
            for (o, x) in out.iter_mut().zip(w) {
                for (a, b) in o.iter_mut().zip(x) {
                    *a += c * b;
                }
            }
        }
        out
    }

    /// Printed tails `v_j + p^i w_j`.
    fn printed_tails(&self, w: &[Vec<i64>], i: u32) -> TailVector {
        let f = (self.record.p as i64).pow(i);
        w.iter().zip(&self.rel_v).map(|(w, v)| w.iter().zip(v).map(|(x, y)| y + f * x).collect()).collect()
    }

    /// Presentation of `G_i` for the sequence with coefficients `coeffs`
    /// over the W basis, without a consistency check.
    pub fn presentation(&self, coeffs: &[i64], i: u32) -> Result<PcPresentation, SequenceError> {
        if coeffs.len() != self.w_basis.len() {
            return Err(SequenceError::Malformed(format!(
                "{} coefficients for {} basis vectors",
                coeffs.len(),
                self.w_basis.len()
            )));
        }
        self.presentation_with_w(&self.w_tails(coeffs), i)
    }

    /// Presentation of `G_i` for an arbitrary list of vectors `w_j`.
    pub fn presentation_with_w(&self, w: &[Vec<i64>], i: u32) -> Result<PcPresentation, SequenceError> {
        let d = self.record.d;
        if w.len() != self.relation_count() || w.iter().any(|x| x.len() != d) {
            return Err(SequenceError::Malformed(format!(
                "expected {} vectors of length {d}",
                self.relation_count()
            )));
        }
        let s = self.t_exp(i)?;
        self.extension_with(&self.printed_tails(w, i), s)
    }

    /// The group `G_i`, checked for consistency.
    pub fn instantiate(&self, coeffs: &[i64], i: u32) -> Result<GroupHandle, SequenceError> {
        let pres = self.presentation(coeffs, i)?;
        if let Some(v) = pres.check_consistency().first() {
            return Err(SequenceError::Inconsistent(format!("{} with W = {coeffs:?}, i = {i}: {v}", self.key())));
        }
        Ok(GroupHandle::new(pres))
    }

    /// As [`Self::instantiate`] for an arbitrary list of vectors `w_j`.
    pub fn instantiate_with_w(&self, w: &[Vec<i64>], i: u32) -> Result<GroupHandle, SequenceError> {
        let pres = self.presentation_with_w(w, i)?;
        if let Some(v) = pres.check_consistency().first() {
            return Err(SequenceError::Inconsistent(format!("{} with w = {w:?}, i = {i}: {v}", self.key())));
        }
        Ok(GroupHandle::new(pres))
    }

    /// Tails of an extension presentation: the `t`-parts of its relations.
    pub fn tails_of(&self, pres: &PcPresentation) -> TailVector {
        let n = self.r.ngens();
        relation_list(n)
            .into_iter()
            .map(|rel| {
                let x = match rel {
                    RelationKind::Power { gen } => pres.power(gen),
                    RelationKind::Conjugate { gen, by } => pres.conjugate(gen, by),
                };
                x[n..].iter().map(|&e| e as i64).collect()
            })
            .collect()
    }

    /// Tails of `S/gamma_{l+e+id}(S)` as an extension of `A_i` by `R`.
    pub fn alpha_tails(&self, i: u32) -> Result<TailVector, SequenceError> {
        let zero = vec![0; self.w_basis.len()];
        Ok(self.tails_of(&self.presentation(&zero, i)?))
    }

    /// Tails `alpha_i + p^i w` of the sequence with coefficients `coeffs`.
    pub fn sequence_tails(&self, coeffs: &[i64], i: u32) -> Result<TailVector, SequenceError> {
        Ok(self.tails_of(&self.presentation(coeffs, i)?))
    }

    pub fn h2(&self, i: u32) -> Result<H2Structure, SequenceError> {
        Ok(cocycle_space(self.r.pres(), &self.module(i)?)?)
    }

    /// The parameter `a` with `p^a = exp(H/H')` for the kernel `H` of the
    /// action on `T`.
    pub fn kernel_exponent(&self) -> Result<u32, SequenceError> {
        let t = self.module_with_exps(vec![1; self.record.d])?;
        Ok(kernel_exponent(&self.r, &t))
    }

    /// `H^2(R, A_i) = N_i + M_i` with its certificate checked.
    pub fn decomposition(&self, h2: &H2Structure, i: u32) -> Result<Decomposition, SequenceError> {
        let a = self.kernel_exponent()?;
        let n = compute_ni(self.r.pres(), &self.module(i)?, h2)?;
        let m = compute_mi(h2, a, i)?;
        Ok(decompose(h2, n, m)?)
    }

    /// Coefficient range of each W basis vector: `p^{e/d - v}` for the
    /// least valuation `v` of its entries.
    pub fn coefficient_moduli(&self) -> Result<Vec<u64>, SequenceError> {
        let top = self.t_exp(0)?;
        let p = self.record.p;
        Ok(self
            .w_basis
            .iter()
            .map(|w| {
                let v = w.iter().flatten().filter_map(|&x| valuation_i64(x, p)).min();
                match v {
                    Some(v) if v < top => p.pow(top - v),
                    _ => 1,
                }
            })
            .collect())
    }

    /// All coefficient vectors of the W space.
    pub fn w_space(&self) -> Result<Vec<Vec<i64>>, SequenceError> {
        Ok(enumerate_w_space(&self.coefficient_moduli()?))
    }

    pub fn representatives(&self) -> &[Vec<i64>] {
        &self.record.representatives
    }

    pub fn pair_context(&self) -> PairContext {
        PairContext {
            p: self.record.p,
            r: self.record.r,
            d: self.record.d,
            u: self.record.u,
            k: self.record.k,
            asserted_root: self.record.min_secondary_root,
            a: self.kernel_exponent().ok(),
            b: self.record.b,
            asserted_offsets: true,
        }
    }
}

/// Splits words in tail order into power and conjugate lists.
fn split_relations(n: usize, words: &[Word]) -> (Vec<Word>, Vec<Vec<Word>>) {
    let mut powers = Vec::with_capacity(n);
    let mut conj = Vec::with_capacity(n);
    let mut it = words.iter();
    for j in 0..n {
        powers.push(it.next().expect("power relation").clone());
        conj.push((0..j).map(|_| it.next().expect("conjugate relation").clone()).collect());
    }
    (powers, conj)
}

/// A block that failed to load.
#[derive(Clone, Debug)]
pub struct Quarantined {
    pub record: FamilyRecord,
    pub reason: String,
}

#[derive(Clone, Debug, Default)]
pub struct Catalog {
    pub families: Vec<ParamPresentation>,
    pub quarantined: Vec<Quarantined>,
}

impl Catalog {
    pub fn from_records(records: Vec<FamilyRecord>) -> Self {
        let mut cat = Catalog::default();
        for rec in records {
            match load_block(rec.clone()) {
                Ok(f) => cat.families.push(f),
                Err(e) => cat.quarantined.push(Quarantined { record: rec, reason: e.to_string() }),
            }
        }
        cat
    }

    /// Blocks whose name matches, in catalog order.
    pub fn find(&self, name: &str) -> Vec<&ParamPresentation> {
        self.families.iter().filter(|f| f.record.matches_name(name)).collect()
    }

    pub fn find_pair(&self, name: &str, l: u32, e: u32) -> Option<&ParamPresentation> {
        self.families.iter().find(|f| f.record.matches_name(name) && f.record.l == l && f.record.e == e)
    }
}

/// Loads a block and checks that the path group at `i = 0` is consistent.
pub fn load_block(rec: FamilyRecord) -> Result<ParamPresentation, SequenceError> {
    let fam = ParamPresentation::from_record(rec)?;
    if fam.t_exp(0).is_ok() {
        fam.instantiate(&vec![0; fam.w_basis.len()], 0)?;
    }
    Ok(fam)
}

pub fn parse_records(text: &str, path: &str) -> Result<Vec<FamilyRecord>, SequenceError> {
    serde_json::from_str(text).map_err(|e| SequenceError::Schema { path: path.into(), message: e.to_string() })
}

/// Reads a catalog file, or every `.json` file of a directory in name
/// order.
pub fn load_catalog(path: &Path) -> Result<Catalog, SequenceError> {
    let io = |e: std::io::Error| SequenceError::Io { path: path.display().to_string(), message: e.to_string() };
    let mut files = Vec::new();
    if path.is_dir() {
        for entry in std::fs::read_dir(path).map_err(io)? {
            let p = entry.map_err(io)?.path();
            if p.extension().is_some_and(|x| x == "json") {
                files.push(p);
            }
        }
        files.sort();
    } else {
        files.push(path.to_path_buf());
    }
    let mut records = Vec::new();
    for f in files {
        let text = std::fs::read_to_string(&f)
            .map_err(|e| SequenceError::Io { path: f.display().to_string(), message: e.to_string() })?;
        records.extend(parse_records(&text, &f.display().to_string())?);
    }
    Ok(Catalog::from_records(records))
}

/// Directory of the catalog shipped with the crate.
pub fn bundled_catalog_dir() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("catalog")
}
