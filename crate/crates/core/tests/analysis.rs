use coclass_core::analysis::*;
use coclass_core::pcgroup::families::{abelian, cyclic, dihedral, direct_product, quaternion, semidihedral};
use coclass_core::pcgroup::{for_each_normal_form, Elem, GroupHandle};
use coclass_core::sequences::{bundled_catalog_dir, load_catalog};
use proptest::prelude::*;

const BOUND: u64 = DEFAULT_ENUM_BOUND;
const EFFORT: u64 = DEFAULT_ISO_EFFORT;

fn eval(h: &GroupHandle, images: &[Elem], x: &Elem) -> Elem {
    let hp = h.pres();
    x.iter().zip(images).fold(hp.identity(), |acc, (&e, y)| hp.mul(&acc, &hp.pow(y, e)))
}

/// Checks `phi(xy) = phi(x) phi(y)` on all pairs and injectivity.
fn is_isomorphism_by_enumeration(g: &GroupHandle, h: &GroupHandle, images: &[Elem]) -> bool {
    let (gp, hp) = (g.pres(), h.pres());
    let mut elems = Vec::new();
    for_each_normal_form(gp.rel_orders(), |x| elems.push(x.clone()));
    let mut seen = std::collections::HashSet::new();
    for x in &elems {
        if !seen.insert(eval(h, images, x)) {
            return false;
        }
        for y in &elems {
            if eval(h, images, &gp.mul(x, y)) != hp.mul(&eval(h, images, x), &eval(h, images, y)) {
                return false;
            }
        }
    }
    seen.len() as u64 == 1 << h.order_exp()
}

#[test]
fn small_pairs() {
    assert!(matches!(is_isomorphic(&dihedral(3), &abelian(2, &[1, 2]), BOUND, EFFORT), IsoVerdict::NonIsomorphic(_)));
    assert!(matches!(is_isomorphic(&dihedral(3), &quaternion(3), BOUND, EFFORT), IsoVerdict::NonIsomorphic(_)));
    assert!(matches!(is_isomorphic(&dihedral(6), &quaternion(6), BOUND, EFFORT), IsoVerdict::NonIsomorphic(_)));
    let g = semidihedral(5);
    match is_isomorphic(&g, &g, BOUND, EFFORT) {
        IsoVerdict::Isomorphic(images) => assert!(is_isomorphism_by_enumeration(&g, &g, &images)),
        v => panic!("{v:?}"),
    }
}

#[test]
fn non_isomorphic_reasons_recompute() {
    let (g, h) = (dihedral(4), quaternion(4));
    let IsoVerdict::NonIsomorphic(why) = is_isomorphic(&g, &h, BOUND, EFFORT) else { panic!() };
    let (fg, fh) = (fingerprint(&g, BOUND), fingerprint(&h, BOUND));
    assert_eq!(fg.first_difference(&fh), Some(why.as_str()));
    let involutions = |x: &GroupHandle| x.order_histogram(BOUND).unwrap()[&2];
    assert_ne!(involutions(&g), involutions(&h));
}

#[test]
fn semidihedral_rows_are_isomorphic() {
    let cat = load_catalog(&bundled_catalog_dir()).unwrap();
    let f = cat.find("G21")[0];
    let reps = f.representatives();
    let g = f.instantiate(&reps[2], 0).unwrap();
    let h = f.instantiate(&reps[3], 0).unwrap();
    match is_isomorphic(&g, &h, BOUND, EFFORT) {
        IsoVerdict::Isomorphic(images) => {
            assert!(verify_homomorphism(&g, &h, &images));
            assert!(is_isomorphism_by_enumeration(&g, &h, &images));
        }
        v => panic!("{v:?}"),
    }
    let d = f.instantiate(&reps[0], 0).unwrap();
    let q = f.instantiate(&reps[1], 0).unwrap();
    assert!(matches!(is_isomorphic(&d, &q, BOUND, EFFORT), IsoVerdict::NonIsomorphic(_)));
    assert!(is_isomorphic(&d, &dihedral(6), BOUND, EFFORT).is_isomorphic());
    assert!(is_isomorphic(&q, &quaternion(6), BOUND, EFFORT).is_isomorphic());
    assert!(is_isomorphic(&g, &semidihedral(6), BOUND, EFFORT).is_isomorphic());
}

#[test]
fn edges() {
    assert!(edge_test(&dihedral(3), &dihedral(4), BOUND, EFFORT).unwrap());
    assert!(!edge_test(&quaternion(3), &dihedral(4), BOUND, EFFORT).unwrap());
    assert!(!edge_test(&dihedral(4), &dihedral(4), BOUND, EFFORT).unwrap());
    assert!(edge_test(&dihedral(3), &quaternion(4), BOUND, EFFORT).unwrap());
    let cat = load_catalog(&bundled_catalog_dir()).unwrap();
    let f = cat.find("G21")[0];
    let d0 = f.instantiate(&[0, 0], 0).unwrap();
    for c in f.representatives() {
        assert!(edge_test(&d0, &f.instantiate(c, 1).unwrap(), BOUND, EFFORT).unwrap());
    }
}

#[test]
fn automorphisms_of_small_groups() {
    assert_eq!(all_automorphisms(&dihedral(3), EFFORT).unwrap().len(), 8);
    assert_eq!(all_automorphisms(&quaternion(3), EFFORT).unwrap().len(), 24);
    assert_eq!(all_automorphisms(&abelian(2, &[1, 1]), EFFORT).unwrap().len(), 6);
    assert_eq!(all_automorphisms(&cyclic(3, 2), EFFORT).unwrap().len(), 6);
    for a in all_automorphisms(&dihedral(4), EFFORT).unwrap() {
        assert!(is_isomorphism_by_enumeration(&dihedral(4), &dihedral(4), &a));
    }
}

#[test]
fn classify_g21() {
    let cat = load_catalog(&bundled_catalog_dir()).unwrap();
    let f = cat.find("G21")[0];
    for i in 0..=3 {
        let c = classify_sequences(f, i, f.representatives(), BOUND, EFFORT).unwrap();
        assert_eq!(c.classes, vec![vec![0], vec![1], vec![2, 3]], "i = {i}");
        assert_eq!(c.status, PartitionStatus::Exact);
        assert_eq!(c.certified_distinct, 3);
        let groups: Vec<_> = f.representatives().iter().map(|r| f.instantiate(r, i).unwrap()).collect();
        assert_eq!(classify_groups(&groups, BOUND, EFFORT).classes, c.classes);
    }
}

#[test]
fn extension_test_agrees_with_search() {
    let cat = load_catalog(&bundled_catalog_dir()).unwrap();
    let f = cat.find("G21")[0];
    let ctx = ExtensionContext::new(f, 0, EFFORT).unwrap();
    let groups: Vec<_> = f.representatives().iter().map(|r| f.instantiate(r, 0).unwrap()).collect();
    for a in 0..groups.len() {
        for b in 0..groups.len() {
            let ext = ctx.is_isomorphic(&groups[a], &groups[b]).expect("applies");
            let search = is_isomorphic(&groups[a], &groups[b], BOUND, EFFORT);
            assert_eq!(ext.is_isomorphic(), search.is_isomorphic(), "{a} {b}");
            if let IsoVerdict::Isomorphic(images) = ext {
                assert!(is_isomorphism_by_enumeration(&groups[a], &groups[b], &images));
            }
        }
    }
    // not an instantiation of the family
    assert!(ctx.is_isomorphic(&groups[0], &dihedral(6)).is_none());
}

#[test]
fn extension_test_on_s1() {
    let cat = load_catalog(&bundled_catalog_dir()).unwrap();
    let f = cat.find("G22-S1")[0];
    let ctx = ExtensionContext::new(f, 0, EFFORT).unwrap();
    let reps = f.representatives();
    let g = f.instantiate(&reps[3], 0).unwrap();
    let h = f.instantiate(&reps[9], 0).unwrap();
    let Some(IsoVerdict::Isomorphic(images)) = ctx.is_isomorphic(&g, &h) else { panic!("W3 and W3+W4") };
    assert!(verify_homomorphism(&g, &h, &images));
    assert_eq!(h.subgroup(&images).order_exp(), h.order_exp());
    let z = f.instantiate(&reps[0], 0).unwrap();
    assert!(matches!(ctx.is_isomorphic(&z, &g), Some(IsoVerdict::NonIsomorphic(_))));
}

#[test]
fn g21_tree() {
    let cat = load_catalog(&bundled_catalog_dir()).unwrap();
    let f = cat.find("G21")[0];
    let (tree, undecided) = tree_fragment(f, 3, BOUND, EFFORT).unwrap();
    assert!(undecided.is_empty());
    let path: Vec<usize> = (0..tree.nodes.len()).filter(|&k| tree.nodes[k].on_path).collect();
    assert_eq!(path.len(), 4);
    for &p in &path[..3] {
        assert_eq!(tree.edges.iter().filter(|e| e.0 == p).count(), 3);
    }
    let depths = tree.depths();
    for (n, d) in tree.nodes.iter().zip(&depths) {
        assert_eq!(*d, Some(if n.on_path { 0 } else { 1 }), "{}", n.label);
    }
    let dot = tree.to_dot();
    assert!(dot.starts_with("digraph {"));
    assert!(dot.contains("\"o=6,d=0\" -> \"o=7,d=0\";"));
    assert!(dot.contains("\"o=6,d=0\" -> \"o=7,d=1\";"));
    let json = tree.to_json();
    assert_eq!(json["nodes"].as_array().unwrap().len(), tree.nodes.len());
}

#[test]
fn single_node_tree() {
    let tree = TreeFragment {
        nodes: vec![TreeNode { label: "C2".into(), order_exp: 1, on_path: true, fingerprint: None }],
        edges: vec![],
    };
    assert_eq!(tree.to_dot(), "digraph {\n  \"o=1,d=0\" [label=\"C2\"];\n}\n");
}

#[test]
fn center_of_known_groups() {
    let cases = [(dihedral(4), 1), (quaternion(5), 1), (abelian(2, &[1, 2]), 3), (direct_product(&dihedral(3), &cyclic(2, 2)), 3)];
    for (g, expect) in cases {
        assert_eq!(center(&g).order_exp(), expect);
    }
}

fn small_group(k: u8) -> GroupHandle {
    match k % 5 {
        0 => cyclic(2, 1),
        1 => cyclic(2, 2),
        2 => dihedral(3),
        3 => quaternion(3),
        _ => abelian(2, &[1, 1]),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Regenerating a product with its factors in another order keeps the
    /// fingerprint.
    #[test]
    fn fingerprint_ignores_factor_order(a in 0u8..5, b in 0u8..5, c in 0u8..5) {
        let (x, y, z) = (small_group(a), small_group(b), small_group(c));
        let g = direct_product(&direct_product(&x, &y), &z);
        let h = direct_product(&z, &direct_product(&y, &x));
        prop_assert_eq!(fingerprint(&g, BOUND), fingerprint(&h, BOUND));
        prop_assert!(is_isomorphic(&g, &h, BOUND, EFFORT).is_isomorphic());
    }

    #[test]
    fn abelian_fingerprint_ignores_factor_order(mut exps in proptest::collection::vec(1usize..4, 1..4), rot in 0usize..4) {
        let g = abelian(2, &exps);
        let k = rot % exps.len();
        exps.rotate_left(k);
        prop_assert_eq!(fingerprint(&g, BOUND), fingerprint(&abelian(2, &exps), BOUND));
    }

    /// Accepted maps are homomorphisms on every pair of elements.
    #[test]
    fn verified_maps_are_homomorphisms(a in 0u8..5, b in 0u8..5, seed in any::<u64>()) {
        let (g, h) = (small_group(a), small_group(b));
        let hp = h.pres();
        let mut elems = Vec::new();
        for_each_normal_form(hp.rel_orders(), |x| elems.push(x.clone()));
        let mut s = seed;
        let images: Vec<Elem> = (0..g.ngens())
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                elems[(s >> 33) as usize % elems.len()].clone()
            })
            .collect();
        if verify_homomorphism(&g, &h, &images) {
            let gp = g.pres();
            let mut all = Vec::new();
            for_each_normal_form(gp.rel_orders(), |x| all.push(x.clone()));
            for x in &all {
                for y in &all {
                    prop_assert_eq!(eval(&h, &images, &gp.mul(x, y)), hp.mul(&eval(&h, &images, x), &eval(&h, &images, y)));
                }
            }
        }
    }
}
