use coclass_core::cohomology::TailVector;
use coclass_core::sequences::*;
use coclass_core::zmod_linalg::ResidueSubgroup;
use num_bigint::BigInt;

fn catalog() -> Catalog {
    load_catalog(&bundled_catalog_dir()).expect("bundled catalog parses")
}

fn zeros(f: &ParamPresentation) -> Vec<i64> {
    vec![0; f.representatives()[0].len()]
}

#[test]
fn bound_formulas() {
    assert_eq!(secondary_root_bound(2, 2, 1, 1, 1), 4);
    assert_eq!(secondary_root_bound(2, 3, 1, 1, 2), 6);
    assert_eq!(secondary_root_bound(5, 2, 2, 2, 2), 10);
    assert_eq!(offset_bound(1, 2, 1), 10);
    assert_eq!(offset_bound(2, 3, 1), 28);
    assert_eq!(offset_from_definition(1, 1, 0, 2, 1), 4);
}

#[test]
fn pair_sets() {
    let cat = catalog();
    let g21 = cat.find("G21")[0];
    let v = choose_pairs(&g21.pair_context(), &[PairSpec { l: 2, e: 4 }]).unwrap();
    assert_eq!(v[0].root_by, Criterion::Asserted);
    assert_eq!(v[0].offset_by, Criterion::Definition);

    let g31 = cat.find("G31")[0];
    let ctx = g31.pair_context();
    assert!(choose_pairs(&ctx, &[PairSpec { l: 3, e: 12 }, PairSpec { l: 4, e: 14 }]).is_ok());
    assert!(matches!(
        choose_pairs(&ctx, &[PairSpec { l: 3, e: 12 }, PairSpec { l: 4, e: 13 }]),
        Err(PairError::Collision(..))
    ));
    assert!(matches!(choose_pairs(&ctx, &[PairSpec { l: 3, e: 12 }]), Err(PairError::Count { .. })));
    let mut strict = ctx.clone();
    strict.asserted_root = None;
    assert!(matches!(choose_pairs(&strict, &[PairSpec { l: 3, e: 12 }, PairSpec { l: 4, e: 14 }]), Err(PairError::Root { .. })));
}

#[test]
fn catalog_contents() {
    let cat = catalog();
    let g22: Vec<_> = cat
        .families
        .iter()
        .map(|f| f.record())
        .chain(cat.quarantined.iter().map(|q| &q.record))
        .filter(|r| r.name.starts_with("G(2,2)"))
        .collect();
    assert_eq!(g22.len(), 7);
    let s3 = cat.find("G22-S3")[0].record();
    assert_eq!(s3.expected.h2_invariants, Some(vec![2, 2, 2, 8]));
    assert_eq!(s3.expected.h3_order, Some(8));
    assert_eq!(s3.expected.n_sequences, Some(6));
    let s5 = cat.find("G22-S5")[0];
    let reps = s5.representatives();
    assert_eq!(reps.len(), 6);
    assert_eq!(reps[5], vec![1, 0, 0, 1]);
    assert_eq!(s5.w_space().unwrap().len(), 16);
    assert_eq!(cat.find("G31").len(), 2);
}

#[test]
fn quarantined_blocks_are_reported() {
    let cat = catalog();
    let keys: Vec<String> = cat.quarantined.iter().map(|q| q.record.key()).collect();
    assert_eq!(keys, ["G(2,2)-S2 (5,12)", "G(2,2)-S2 (6,14)"]);
    let s2 = &cat.quarantined[0];
    assert!(s2.reason.contains("inconsistent"), "{}", s2.reason);
    // exactly one exponent edit makes the printed relations consistent
    let fixes = single_edit_repairs(&s2.record);
    assert_eq!(fixes.len(), 1, "{:?}", fixes.iter().map(|f| &f.0).collect::<Vec<_>>());
    let fixed = &fixes[0].1;
    assert_eq!(fixed.h2(0).unwrap().invariants, vec![2, 2, 2, 2, 2, 2, 4]);
    let h2 = fixed.h2(0).unwrap();
    assert_eq!(fixed.decomposition(&h2, 0).unwrap().m_exp, 5);

    let s2b = &cat.quarantined[1];
    assert!(s2b.reason.contains("not given"), "{}", s2b.reason);
    let loaded: Vec<(String, ParamPresentation)> = s2b
        .record
        .repair_hypotheses()
        .into_iter()
        .filter_map(|(label, rec)| load_block(rec).ok().map(|f| (label, f)))
        .collect();
    assert_eq!(loaded.len(), 1);
    let f = &loaded[0].1;
    let h2 = f.h2(0).unwrap();
    assert_eq!(h2.invariants, vec![2, 2, 2, 8]);
    assert_eq!(f.decomposition(&h2, 0).unwrap().m_exp, 3);
}

#[test]
fn w_space_enumeration() {
    assert_eq!(enumerate_w_space(&[]), vec![Vec::<i64>::new()]);
    assert_eq!(enumerate_w_space(&[3, 3, 3]).len(), 27);
    assert_eq!(enumerate_w_space(&[2, 4]).len(), 8);
    let cat = catalog();
    for f in cat.find("G31") {
        assert_eq!(f.w_space().unwrap().len(), 27);
    }
    assert_eq!(cat.find("G22-S4")[0].coefficient_moduli().unwrap(), vec![2, 4]);
}

fn z_hat(i: u32) -> ResidueSubgroup {
    let q = 1i64 << (3 + i);
    ResidueSubgroup::from_i64(2, &[4 + i; 3], &[vec![q, 0, 0], vec![0, 0, q], vec![0, 1, -1]]).unwrap()
}

#[test]
fn g21_printed_cohomology() {
    let cat = catalog();
    let f = cat.find("G21")[0];
    for i in 0..=4 {
        let h2 = f.h2(i).unwrap();
        assert_eq!(h2.invariants, vec![2, 2, 2], "i = {i}");
        let z = z_hat(i);
        assert_eq!(h2.z, z, "Z at i = {i}");
        assert_eq!(h2.b, z.scaled(1), "B at i = {i}");
        let dec = f.decomposition(&h2, i).unwrap();
        assert_eq!(dec.m_exp, 2, "i = {i}");
        let q = 1i64 << (3 + i);
        let printed_m = ResidueSubgroup::from_i64(2, &[4 + i; 3], &[vec![q, 0, 0], vec![0, 0, q]])
            .unwrap()
            .sum(&h2.b)
            .unwrap();
        assert_eq!(printed_m.order_exp() - h2.b.order_exp(), 2);
        assert_eq!(dec.m, printed_m, "M at i = {i}");
    }
}

#[test]
fn g22_table() {
    let cat = catalog();
    for f in cat.families.iter().filter(|f| f.record().name.starts_with("G(2,2)")) {
        let h2 = f.h2(0).unwrap();
        let rec = f.record();
        assert_eq!(Some(h2.invariants.clone()), rec.expected.h2_invariants, "{}", f.key());
        let dec = f.decomposition(&h2, 0).unwrap();
        assert_eq!(Some(1u64 << dec.m_exp), rec.expected.h3_order, "{}", f.key());
        if let Some(a) = rec.expected.a {
            assert_eq!(f.kernel_exponent().unwrap(), a, "{}", f.key());
        }
    }
}

#[test]
fn direct_sum_and_constant_m() {
    let cat = catalog();
    for f in &cat.families {
        let mut m = None;
        for i in 0..=2 {
            let h2 = f.h2(i).unwrap();
            let dec = f.decomposition(&h2, i).unwrap_or_else(|e| panic!("{} i = {i}: {e}", f.key()));
            assert_eq!(dec.n_exp + dec.m_exp, h2.order_exp(), "{} i = {i}", f.key());
            assert_eq!(*m.get_or_insert(dec.m_exp), dec.m_exp, "{} i = {i}", f.key());
        }
    }
}

#[test]
fn orders_coclass_and_module_invariants() {
    let cat = catalog();
    for f in &cat.families {
        let rec = f.record();
        let mut last = None;
        for i in 0..=2 {
            let g = f.instantiate(&zeros(f), i).unwrap();
            let expect = order_exp_formula(rec.r, rec.l, rec.e, rec.d, i);
            assert_eq!(g.order_exp(), expect, "{} i = {i}", f.key());
            assert_eq!(g.order(), order_formula(rec.p, rec.r, rec.l, rec.e, rec.d, i));
            if let Some(prev) = last {
                assert_eq!(expect, prev + rec.d as u32);
            }
            last = Some(expect);
            assert_eq!(g.coclass(), rec.r, "{} i = {i}", f.key());
            let gl = g.lcs_term(rec.l as usize);
            let inv = g.section_invariants(&gl, &g.trivial()).unwrap();
            assert_eq!(inv, module_invariants(rec.p, rec.d, rec.e, i), "{} i = {i}", f.key());
        }
    }
}

#[test]
fn module_invariant_examples() {
    assert_eq!(module_invariants(3, 2, 12, 0), vec![729, 729]);
    assert_eq!(module_invariants(3, 2, 12, 1), vec![2187, 2187]);
    assert_eq!(module_invariants(2, 1, 4, 2), vec![64]);
    assert_eq!(module_invariants(2, 2, 5, 0), vec![4, 8]);
}

#[test]
fn path_property() {
    let cat = catalog();
    for f in &cat.families {
        let (n, d) = (f.quotient_group().ngens(), f.d());
        for i in 0..=2u32 {
            let next = f.instantiate(&zeros(f), i + 1).unwrap();
            let pres = next.pres();
            let s = f.t_exp(i).unwrap();
            let deep: Vec<_> = (0..d).map(|c| pres.pow(&pres.gen(n + c), f.prime().pow(s))).collect();
            let (q, _) = next.quotient(&next.subgroup(&deep)).unwrap();
            assert_eq!(*q.pres(), f.presentation(&zeros(f), i).unwrap(), "{} i = {i}", f.key());
        }
    }
}

fn flat(t: &TailVector) -> Vec<BigInt> {
    t.iter().flatten().map(|&x| BigInt::from(x)).collect()
}

#[test]
fn w_tails_lie_in_m_plus_b() {
    let cat = catalog();
    for f in &cat.families {
        let h2 = f.h2(0).unwrap();
        let dec = f.decomposition(&h2, 0).unwrap();
        let k = f.representatives()[0].len();
        for j in 0..k {
            let mut c = vec![0; k];
            c[j] = 1;
            let w = f.w_tails(&c);
            assert!(dec.m.contains(&flat(&w)).unwrap(), "{} W{}", f.key(), j + 1);
            let tails = f.sequence_tails(&c, 0).unwrap();
            assert!(h2.is_cocycle(&tails), "{} W{}", f.key(), j + 1);
        }
    }
}

#[test]
fn g31_w_space_instantiates() {
    let cat = catalog();
    for f in cat.find("G31") {
        let rec = f.record();
        for c in f.w_space().unwrap() {
            let g = f.instantiate(&c, 0).unwrap_or_else(|e| panic!("{} {c:?}: {e}", f.key()));
            assert_eq!(g.order_exp(), rec.r + rec.l + rec.e - 1);
            assert_eq!(g.coclass(), 1);
        }
    }
}

#[test]
fn irredundant_pair_residues() {
    let cat = catalog();
    let mut by_name: std::collections::BTreeMap<&str, Vec<u32>> = Default::default();
    for f in &cat.families {
        let r = f.record();
        by_name.entry(&r.name).or_default().push((r.l + r.e) % r.d as u32);
    }
    for (name, mut res) in by_name {
        let n = res.len();
        res.sort();
        res.dedup();
        assert_eq!(res.len(), n, "{name}");
    }
}

#[test]
fn divisibility_is_required() {
    let cat = catalog();
    let mut rec = cat.find("G31")[0].record().clone();
    rec.e = 13;
    let f = ParamPresentation::from_record(rec).unwrap();
    assert!(matches!(f.t_exp(0), Err(SequenceError::NotDivisible { .. })));
}

#[test]
fn g21_named_groups() {
    let cat = catalog();
    let f = cat.find("G21")[0];
    let names = f.record().representative_names.clone().unwrap();
    for i in 0..=3 {
        for (c, name) in f.representatives().iter().zip(&names) {
            let g = f.instantiate(c, i).unwrap();
            let hist = g.order_histogram(1 << 20).unwrap();
            let involutions = hist.get(&2).copied().unwrap_or(0);
            let n = 1u64 << (6 + i);
            let expect = match name.as_str() {
                "dihedral" => n / 2 + 1,
                "quaternion" => 1,
                "semidihedral" => n / 4 + 1,
                _ => unreachable!(),
            };
            assert_eq!(involutions, expect, "{name} at i = {i}");
            assert_eq!(hist.get(&(n / 2)).copied().unwrap_or(0), n / 4, "cyclic index-2 subgroup at i = {i}");
        }
    }
}
