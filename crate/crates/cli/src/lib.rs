//! Commands of the `coclass` tool: verification of the catalog's expected
//! values, cohomology and instantiation queries, classification and graph
//! export.

use std::path::PathBuf;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use coclass_core::analysis::{classify_sequences, tree_fragment, Classification, PartitionStatus};
use coclass_core::pcgroup::{pow_within, GroupHandle};
use coclass_core::sequences::{
    load_block, load_catalog, order_exp_formula, single_edit_repairs, Catalog, ParamPresentation, Quarantined,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Dot,
    Text,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub catalog: PathBuf,
    pub i_max: u32,
    pub enum_bound: u64,
    pub iso_effort: u64,
    pub format: Format,
    pub strict: bool,
    pub parallel: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            catalog: coclass_core::sequences::bundled_catalog_dir(),
            i_max: 2,
            enum_bound: coclass_core::analysis::DEFAULT_ENUM_BOUND,
            iso_effort: coclass_core::analysis::DEFAULT_ISO_EFFORT,
            format: Format::Json,
            strict: false,
            parallel: 0,
        }
    }
}

impl RunConfig {
    /// Runs `f` on a pool of the configured size.
    pub fn install<T: Send>(&self, f: impl FnOnce() -> T + Send) -> Result<T> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(self.parallel).build()?;
        Ok(pool.install(f))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Unknown,
}

#[derive(Clone, Debug, Serialize)]
pub struct Record {
    pub family: String,
    pub claim: String,
    pub i: Option<u32>,
    pub expected: Value,
    pub computed: Value,
    pub status: Status,
    pub detail: String,
    pub runtime_ms: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub records: Vec<Record>,
    pub pass: usize,
    pub fail: usize,
    pub unknown: usize,
}

impl Report {
    pub fn new(records: Vec<Record>) -> Self {
        let count = |s| records.iter().filter(|r| r.status == s).count();
        let (pass, fail, unknown) = (count(Status::Pass), count(Status::Fail), count(Status::Unknown));
        Report { records, pass, fail, unknown }
    }

    pub fn exit_code(&self, strict: bool) -> i32 {
        if self.fail > 0 || (strict && self.unknown > 0) {
            1
        } else {
            0
        }
    }

    /// The report as JSON with every runtime set to zero.
    pub fn without_runtimes(&self) -> Value {
        let mut r = self.clone();
        for rec in &mut r.records {
            rec.runtime_ms = 0;
        }
        serde_json::to_value(r).expect("serializable")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            let at = r.i.map(|i| format!(" i={i}")).unwrap_or_default();
            let status = format!("{:?}", r.status).to_uppercase();
            out.push_str(&format!(
                "{status:<8}{} {}{at}: expected {} computed {}",
                r.family, r.claim, r.expected, r.computed
            ));
            if !r.detail.is_empty() {
                out.push_str(&format!(" ({})", r.detail));
            }
            out.push('\n');
        }
        out.push_str(&format!("{} pass, {} fail, {} unknown\n", self.pass, self.fail, self.unknown));
        out
    }
}

pub fn load(config: &RunConfig) -> Result<Catalog> {
    load_catalog(&config.catalog).with_context(|| format!("loading catalog {}", config.catalog.display()))
}

/// One check of a catalog claim.
type Task<'a> = Box<dyn Fn() -> Record + Send + Sync + 'a>;

fn timed(family: &str, claim: &str, i: Option<u32>, expected: Value, f: impl FnOnce() -> (Value, Status, String)) -> Record {
    let t = Instant::now();
    let (computed, status, detail) = f();
    Record {
        family: family.into(),
        claim: claim.into(),
        i,
        expected,
        computed,
        status,
        detail,
        runtime_ms: t.elapsed().as_millis() as u64,
    }
}

fn compare<T: PartialEq + Serialize>(expected: &T, computed: &T) -> (Value, Status, String) {
    let status = if expected == computed { Status::Pass } else { Status::Fail };
    (json!(computed), status, String::new())
}

fn error(e: impl std::fmt::Display) -> (Value, Status, String) {
    (Value::Null, Status::Fail, e.to_string())
}

/// Status of a classification against a claimed number of classes.
pub fn count_status(c: &Classification, expected: usize) -> Status {
    match c.status {
        PartitionStatus::Exact if c.classes.len() == expected => Status::Pass,
        PartitionStatus::Exact => Status::Fail,
        PartitionStatus::LowerBound if c.certified_distinct <= expected && expected <= c.classes.len() => Status::Unknown,
        PartitionStatus::LowerBound => Status::Fail,
    }
}

fn classification_value(c: &Classification) -> Value {
    json!({
        "classes": c.classes.len(),
        "partition": c.classes,
        "status": c.status,
        "certified_distinct": c.certified_distinct,
        "merges": c.verdicts.iter().filter(|v| v.verdict == "isomorphic").map(|v| (v.a, v.b)).collect::<Vec<_>>(),
    })
}

fn classify_record(f: &ParamPresentation, expected: usize, config: &RunConfig) -> (Value, Status, String) {
    match classify_sequences(f, 0, f.representatives(), config.enum_bound, config.iso_effort) {
        Ok(c) => {
            let status = count_status(&c, expected);
            let detail = match status {
                Status::Fail => describe_merges(f, &c),
                Status::Unknown => "some pairs undecided: lower-bound partition".into(),
                Status::Pass => String::new(),
            };
            (classification_value(&c), status, detail)
        }
        Err(e) => error(e),
    }
}

fn describe_merges(f: &ParamPresentation, c: &Classification) -> String {
    let reps = f.representatives();
    let merged: Vec<String> = c
        .classes
        .iter()
        .filter(|k| k.len() > 1)
        .map(|k| k.iter().map(|&i| format!("{:?}", reps[i])).collect::<Vec<_>>().join(" = "))
        .collect();
    if merged.is_empty() {
        format!("{} classes", c.classes.len())
    } else {
        format!("isomorphic representatives: {}", merged.join("; "))
    }
}

fn family_tasks<'a>(f: &'a ParamPresentation, config: &'a RunConfig) -> Vec<Task<'a>> {
    let key = f.key();
    let exp = &f.record().expected;
    let mut tasks: Vec<Task<'a>> = Vec::new();
    for i in 0..=config.i_max {
        let k = key.clone();
        tasks.push(Box::new(move || {
            let rec = f.record();
            let want = order_exp_formula(rec.r, rec.l, rec.e, rec.d, i);
            timed(&k, "log_p order of the W = 0 group", Some(i), json!(want), || {
                match f.instantiate(&vec![0; f.representatives()[0].len()], i) {
                    Ok(g) => compare(&want, &g.order_exp()),
                    Err(e) => error(e),
                }
            })
        }));
        if let Some(h2) = exp.h2_invariants.clone() {
            let key = key.clone();
            tasks.push(Box::new(move || {
                timed(&key, "H^2(R, A_i) invariants", Some(i), json!(h2), || match f.h2(i) {
                    Ok(h) => compare(&h2, &h.invariants),
                    Err(e) => error(e),
                })
            }));
        }
        if let Some(m) = exp.h3_order {
            let key = key.clone();
            tasks.push(Box::new(move || {
                timed(&key, "|M_i / B|", Some(i), json!(m), || match f.h2(i).and_then(|h| f.decomposition(&h, i)) {
                    Ok(d) => compare(&m, &f.prime().pow(d.m_exp)),
                    Err(e) => error(e),
                })
            }));
        }
    }
    if let Some(a) = exp.a {
        let key = key.clone();
        tasks.push(Box::new(move || {
            timed(&key, "exponent a of H/H'", None, json!(a), || match f.kernel_exponent() {
                Ok(x) => compare(&a, &x),
                Err(e) => error(e),
            })
        }));
    }
    if let Some(n) = exp.n_sequences {
        tasks.push(Box::new(move || {
            timed(&key, "non-isomorphic sequences", Some(0), json!(n), || classify_record(f, n, config))
        }));
    }
    tasks
}

/// Results of the repairs tried for a block that does not load.
fn repair_summary(q: &Quarantined, config: &RunConfig) -> Vec<Value> {
    let mut cands: Vec<(String, ParamPresentation)> = q
        .record
        .repair_hypotheses()
        .into_iter()
        .filter_map(|(label, rec)| load_block(rec).ok().map(|f| (label, f)))
        .collect();
    if cands.is_empty() {
        cands = single_edit_repairs(&q.record);
    }
    cands
        .iter()
        .map(|(label, f)| {
            let h2 = f.h2(0).ok();
            let m = h2.as_ref().and_then(|h| f.decomposition(h, 0).ok()).map(|d| f.prime().pow(d.m_exp));
            let n = classify_sequences(f, 0, f.representatives(), config.enum_bound, config.iso_effort)
                .ok()
                .map(|c| classification_value(&c));
            json!({
                "repair": label,
                "h2_invariants": h2.map(|h| h.invariants),
                "h3_order": m,
                "sequences": n,
            })
        })
        .collect()
}

fn quarantine_tasks<'a>(q: &'a Quarantined, config: &'a RunConfig) -> Vec<Task<'a>> {
    let exp = &q.record.expected;
    let claims: Vec<(&'static str, Value)> = [
        ("H^2(R, A_i) invariants", exp.h2_invariants.as_ref().map(|x| json!(x))),
        ("|M_i / B|", exp.h3_order.map(|x| json!(x))),
        ("non-isomorphic sequences", exp.n_sequences.map(|x| json!(x))),
    ]
    .into_iter()
    .filter_map(|(c, v)| v.map(|v| (c, v)))
    .collect();
    let key = q.record.key();
    vec![Box::new(move || {
        timed(&key, "block loads", None, json!(claims.iter().map(|c| c.0).collect::<Vec<_>>()), || {
            let computed = json!({
                "expected": claims.iter().map(|(c, v)| json!({"claim": c, "value": v})).collect::<Vec<_>>(),
                "repairs": repair_summary(q, config),
            });
            (computed, Status::Fail, format!("quarantined: {}", q.reason))
        })
    })]
}

/// Checks every expected value recorded in the catalog.
pub fn verify_paper(config: &RunConfig) -> Result<Report> {
    let cat = load(config)?;
    let mut tasks: Vec<Task> = Vec::new();
    for f in &cat.families {
        tasks.extend(family_tasks(f, config));
    }
    for q in &cat.quarantined {
        tasks.extend(quarantine_tasks(q, config));
    }
    let records = config.install(|| tasks.par_iter().map(|t| t()).collect::<Vec<_>>())?;
    Ok(Report::new(records))
}

/// Finds a family by name and optional pair.
pub fn find<'a>(cat: &'a Catalog, name: &str, l: Option<u32>, e: Option<u32>) -> Result<&'a ParamPresentation> {
    let hits: Vec<&ParamPresentation> = cat
        .find(name)
        .into_iter()
        .filter(|f| l.is_none_or(|l| f.record().l == l) && e.is_none_or(|e| f.record().e == e))
        .collect();
    match hits.as_slice() {
        [f] => Ok(f),
        [] => {
            if let Some(q) = cat.quarantined.iter().find(|q| {
                q.record.matches_name(name) && l.is_none_or(|l| q.record.l == l) && e.is_none_or(|e| q.record.e == e)
            }) {
                bail!("{} is quarantined: {}", q.record.key(), q.reason)
            }
            bail!("no family {name} with l = {l:?}, e = {e:?} in the catalog")
        }
        many => bail!(
            "{name} is ambiguous: {}",
            many.iter().map(|f| f.key()).collect::<Vec<_>>().join(", ")
        ),
    }
}

pub fn cmd_h2(config: &RunConfig, name: &str, l: Option<u32>, e: Option<u32>, i: u32) -> Result<Value> {
    let cat = load(config)?;
    let f = find(&cat, name, l, e)?;
    let h2 = f.h2(i)?;
    let dec = f.decomposition(&h2, i)?;
    let basis = |s: &coclass_core::zmod_linalg::ResidueSubgroup| -> Vec<Vec<String>> {
        s.basis().iter().map(|v| v.iter().map(|x| x.to_string()).collect()).collect()
    };
    Ok(json!({
        "family": f.key(),
        "i": i,
        "tail_modulus": format!("{}^{}", f.prime(), f.t_exp(i)?),
        "h2_invariants": h2.invariants,
        "z_basis": basis(&h2.z),
        "b_basis": basis(&h2.b),
        "m_basis": basis(&dec.m),
        "m_invariants": dec.m_invariants,
        "m_order": f.prime().pow(dec.m_exp),
        "n_order": f.prime().pow(dec.n_exp),
        "kernel_exponent": f.kernel_exponent()?,
    }))
}

/// Element-structure description of a 2-group of maximal class.
pub fn signature(g: &GroupHandle, bound: u64) -> Result<String> {
    let hist = g.order_histogram(bound)?;
    let inv = hist.get(&2).copied().unwrap_or(0);
    let n = 1u64 << g.order_exp();
    let plural = if inv == 1 { "" } else { "s" };
    let cyclic_index_two = hist.get(&(n / 2)).copied().unwrap_or(0) > 0;
    let name = if g.prime() != 2 || g.coclass() != 1 || g.order_exp() < 3 || !cyclic_index_two {
        None
    } else if inv == 1 {
        Some("quaternion")
    } else if inv == n / 2 + 1 {
        Some("dihedral")
    } else if inv == n / 4 + 1 {
        Some("semidihedral")
    } else {
        None
    };
    Ok(match name {
        Some(name) => format!("{name} signature: {inv} involution{plural}"),
        None => format!("{inv} involution{plural}"),
    })
}

/// How the sequence is chosen for `instantiate`.
pub enum Choice {
    Coefficients(Vec<i64>),
    /// flat list of the vectors `w_j`
    Tails(Vec<i64>),
}

pub fn cmd_instantiate(config: &RunConfig, name: &str, l: Option<u32>, e: Option<u32>, i: u32, w: Choice) -> Result<Value> {
    let cat = load(config)?;
    let f = find(&cat, name, l, e)?;
    let g = match &w {
        Choice::Coefficients(c) => f.instantiate(c, i)?,
        Choice::Tails(flat) => {
            let d = f.d();
            if flat.len() > f.relation_count() * d || flat.len() % d != 0 {
                bail!("{} entries do not form vectors of length {d} for {} relations", flat.len(), f.relation_count());
            }
            let mut vecs: Vec<Vec<i64>> = flat.chunks(d).map(|c| c.to_vec()).collect();
            vecs.resize(f.relation_count(), vec![0; d]);
            f.instantiate_with_w(&vecs, i)?
        }
    };
    let enumerable = pow_within(g.prime(), g.order_exp(), config.enum_bound);
    let sig = if enumerable { Some(signature(&g, config.enum_bound)?) } else { None };
    Ok(json!({
        "family": f.key(),
        "i": i,
        "order": g.order().to_string(),
        "order_exp": g.order_exp(),
        "class": g.nilpotency_class(),
        "coclass": g.coclass(),
        "abelian_invariants": g.abelian_invariants(),
        "signature": sig,
    }))
}

pub fn cmd_classify(config: &RunConfig, name: &str, l: Option<u32>, e: Option<u32>, i: u32, all: bool) -> Result<Value> {
    let cat = load(config)?;
    let f = find(&cat, name, l, e)?;
    let coeffs = if all { f.w_space()? } else { f.representatives().to_vec() };
    let c = config.install(|| classify_sequences(f, i, &coeffs, config.enum_bound, config.iso_effort))??;
    Ok(json!({
        "family": f.key(),
        "i": i,
        "coefficients": coeffs,
        "classification": classification_value(&c),
        "verdicts": c.verdicts,
        "expected": f.record().expected.n_sequences,
    }))
}

pub fn cmd_graph(config: &RunConfig, name: &str, l: Option<u32>, e: Option<u32>) -> Result<String> {
    let cat = load(config)?;
    let f = find(&cat, name, l, e)?;
    let (tree, undecided) =
        config.install(|| tree_fragment(f, config.i_max, config.enum_bound, config.iso_effort))??;
    Ok(match config.format {
        Format::Dot => tree.to_dot(),
        Format::Json => {
            let mut v = tree.to_json();
            v["undecided_edges"] = json!(undecided);
            serde_json::to_string_pretty(&v)? + "\n"
        }
        Format::Text => {
            let mut out = String::new();
            let depths = tree.depths();
            for (n, d) in tree.nodes.iter().zip(depths) {
                let d = d.map(|d| d.to_string()).unwrap_or_else(|| "?".into());
                out.push_str(&format!("{} order p^{} depth {d}\n", n.label, n.order_exp));
            }
            for (a, b) in &tree.edges {
                out.push_str(&format!("{} -> {}\n", tree.nodes[*a].label, tree.nodes[*b].label));
            }
            for (a, b) in &undecided {
                out.push_str(&format!("{} -> {} undecided\n", tree.nodes[*a].label, tree.nodes[*b].label));
            }
            out
        }
    })
}

/// Parses `1,0,-1` or `(1,0,-1)`.
pub fn parse_vector(s: &str) -> Result<Vec<i64>> {
    let t = s.trim().trim_start_matches(['(', '[']).trim_end_matches([')', ']']);
    if t.trim().is_empty() {
        return Ok(vec![]);
    }
    t.split(',').map(|x| x.trim().parse::<i64>().map_err(|e| anyhow!("bad entry {x:?}: {e}"))).collect()
}
