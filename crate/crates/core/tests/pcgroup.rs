use std::collections::{BTreeMap, HashMap};

use coclass_core::pcgroup::families::{abelian, cyclic, dihedral, direct_product, quaternion, semidihedral};
use coclass_core::pcgroup::*;
use proptest::prelude::*;

fn hist(pairs: &[(u64, u64)]) -> BTreeMap<u64, u64> {
    pairs.iter().copied().collect()
}

/// Dihedral group of order 8 as permutations of the square's corners.
fn perm_mul(a: &[usize; 4], b: &[usize; 4]) -> [usize; 4] {
    // apply a first, then b
    let mut out = [0; 4];
    for i in 0..4 {
        out[i] = b[a[i]];
    }
    out
}

#[test]
fn empty_word_collects_to_identity() {
    let g = dihedral(4);
    assert_eq!(g.pres().collect(&vec![]), vec![0; 4]);
}

#[test]
fn dihedral_matches_permutation_model() {
    let g = dihedral(3);
    let pres = g.pres();
    let refl = [0, 3, 2, 1];
    let rot = [1, 2, 3, 0];
    let id = [0, 1, 2, 3];
    // normal word y^a r^b (r^2)^c read left to right
    let to_perm = |x: &Elem| -> [usize; 4] {
        let mut acc = id;
        for _ in 0..x[0] {
            acc = perm_mul(&acc, &refl);
        }
        for _ in 0..x[1] {
            acc = perm_mul(&acc, &rot);
        }
        for _ in 0..2 * x[2] {
            acc = perm_mul(&acc, &rot);
        }
        acc
    };
    let elems = g.enumerate_elements(1 << 10).unwrap();
    let mut seen = HashMap::new();
    for (x, _) in &elems {
        assert!(seen.insert(to_perm(x), x.clone()).is_none(), "normal forms must be distinct elements");
    }
    for (x, _) in &elems {
        for (y, _) in &elems {
            let z = pres.mul(x, y);
            assert_eq!(to_perm(&z), perm_mul(&to_perm(x), &to_perm(y)));
        }
    }
}

#[test]
fn order_histograms_of_small_groups() {
    assert_eq!(cyclic(2, 2).order_histogram(1 << 10).unwrap(), hist(&[(1, 1), (2, 1), (4, 2)]));
    assert_eq!(dihedral(3).order_histogram(1 << 10).unwrap(), hist(&[(1, 1), (2, 5), (4, 2)]));
    assert_eq!(quaternion(3).order_histogram(1 << 10).unwrap(), hist(&[(1, 1), (2, 1), (4, 6)]));
    let sd = semidihedral(4).order_histogram(1 << 10).unwrap();
    assert_eq!(sd, hist(&[(1, 1), (2, 5), (4, 6), (8, 4)]));
    let q64 = quaternion(6).order_histogram(1 << 10).unwrap();
    assert_eq!(q64[&2], 1);
}

#[test]
fn enumeration_refuses_large_groups() {
    let g = cyclic(2, 12);
    assert!(matches!(g.enumerate_elements(1000), Err(PcError::TooLarge { .. })));
}

#[test]
fn standard_families_are_consistent_and_match_coset_enumeration() {
    for g in [dihedral(3), dihedral(5), quaternion(4), semidihedral(5), abelian(3, &[1, 2]), cyclic(2, 5)] {
        assert!(g.pres().is_consistent(), "{g:?}");
        let expect = 1u64 << 0;
        let _ = expect;
        let order = coset_enumeration_order(g.pres(), 100_000).unwrap();
        assert_eq!(num_bigint::BigInt::from(order), g.order());
    }
}

#[test]
fn inconsistent_presentations_are_reported() {
    // conjugation by g1 would square g2, which is no automorphism of C4
    let bad = PcPresentation::new(2, vec![2, 4], vec![vec![], vec![]], vec![vec![], vec![vec![(1, 2)]]]).unwrap();
    let v = bad.check_consistency();
    assert!(!v.is_empty());
    assert!(coset_enumeration_order(&bad, 10_000).unwrap() < 8);

    // g1 commutes with g1^2 = g2, so g2^g1 = g2 g3 forces g3 = 1
    let bad = PcPresentation::new(
        2,
        vec![2, 2, 2],
        vec![vec![(1, 1)], vec![], vec![]],
        vec![vec![], vec![vec![(1, 1), (2, 1)]], vec![vec![(2, 1)], vec![(2, 1)]]],
    )
    .unwrap();
    assert!(!bad.check_consistency().is_empty());
    assert_eq!(coset_enumeration_order(&bad, 10_000), Some(4));
    let msg = bad.check_consistency()[0].to_string();
    assert!(msg.contains("!="));
}

#[test]
fn malformed_relations_are_rejected() {
    let e = PcPresentation::new(2, vec![2, 2], vec![vec![(0, 1)], vec![]], vec![vec![], vec![vec![(1, 1)]]]);
    assert!(matches!(e, Err(PcError::NotPolycyclic { .. })));
    let e = PcPresentation::new(2, vec![2, 6], vec![vec![], vec![]], vec![vec![], vec![vec![(1, 1)]]]);
    assert!(matches!(e, Err(PcError::BadRelativeOrder { .. })));
    let e = PcPresentation::new(2, vec![2], vec![vec![(3, 1)]], vec![vec![]]);
    assert!(matches!(e, Err(PcError::GeneratorOutOfRange { .. })));
}

#[test]
fn lower_central_series_of_standard_groups() {
    let a = abelian(2, &[1, 2]);
    assert_eq!(a.nilpotency_class(), 1);
    assert_eq!(a.coclass(), 2);
    let d16 = dihedral(4);
    assert_eq!(d16.nilpotency_class(), 3);
    assert_eq!(d16.coclass(), 1);
    let d64 = dihedral(6);
    assert_eq!(d64.nilpotency_class(), 5);
    let lcs = d64.lower_central_series();
    for i in 1..lcs.len() - 1 {
        let inv = d64.section_invariants(&lcs[i], &lcs[i + 1]).unwrap();
        assert_eq!(inv, vec![2], "gamma_{}/gamma_{}", i + 1, i + 2);
    }
    assert_eq!(d64.section_invariants(&lcs[0], &lcs[1]).unwrap(), vec![2, 2]);
}

#[test]
fn quotients() {
    let g = semidihedral(5);
    let (q, _) = g.quotient(&g.trivial()).unwrap();
    assert_eq!(q.order_histogram(1 << 10).unwrap(), g.order_histogram(1 << 10).unwrap());
    let (q, _) = g.quotient(&g.whole()).unwrap();
    assert_eq!(q.order_exp(), 0);
    // the last lower central term of D16 gives D8
    let d16 = dihedral(4);
    let last = d16.lcs_term(d16.nilpotency_class());
    let (q, map) = d16.quotient(&last).unwrap();
    assert!(q.pres().is_consistent());
    assert_eq!(q.order_histogram(1 << 10).unwrap(), dihedral(3).order_histogram(1 << 10).unwrap());
    assert_eq!(q.nilpotency_class(), d16.nilpotency_class() - 1);
    // projection is a homomorphism
    let pres = d16.pres();
    for (x, _) in d16.enumerate_elements(1 << 10).unwrap() {
        for j in 0..d16.ngens() {
            let lhs = map.project(&d16, &last, &pres.mul(&x, &pres.gen(j)));
            let rhs = q.pres().mul(&map.project(&d16, &last, &x), &map.project(&d16, &last, &pres.gen(j)));
            assert_eq!(lhs, rhs);
        }
    }
    let nonnormal = d16.subgroup(&[pres.gen(0)]);
    assert!(matches!(d16.quotient(&nonnormal), Err(PcError::NotNormal)));
}

#[test]
fn section_invariants_require_abelian_sections() {
    let g = quaternion(3);
    assert_eq!(g.abelian_invariants(), vec![2, 2]);
    assert!(matches!(g.section_invariants(&g.whole(), &g.trivial()), Err(PcError::NotAbelian)));
    assert!(g.section_invariants(&g.trivial(), &g.trivial()).unwrap().is_empty());
}

#[test]
fn direct_products() {
    let g = direct_product(&dihedral(3), &cyclic(2, 2));
    assert!(g.pres().is_consistent());
    assert_eq!(g.order_exp(), 5);
    assert_eq!(g.abelian_invariants(), vec![2, 2, 4]);
}

/// Subgroup order and membership against closure by enumeration.
#[test]
fn subgroups_match_enumeration() {
    let g = direct_product(&semidihedral(4), &cyclic(2, 1));
    let pres = g.pres();
    let elems: Vec<Elem> = g.enumerate_elements(1 << 12).unwrap().into_iter().map(|(x, _)| x).collect();
    for a in elems.iter().step_by(7) {
        for b in elems.iter().step_by(11) {
            let u = g.subgroup(&[a.clone(), b.clone()]);
            let mut span = std::collections::BTreeSet::new();
            span.insert(pres.identity());
            let mut frontier = vec![pres.identity()];
            while let Some(x) = frontier.pop() {
                for y in [a, b] {
                    let z = pres.mul(&x, y);
                    if span.insert(z.clone()) {
                        frontier.push(z);
                    }
                }
            }
            assert_eq!(1u64 << u.order_exp(), span.len() as u64);
            for x in elems.iter().step_by(3) {
                assert_eq!(u.contains(pres, x), span.contains(x));
            }
            // canonical: generating by the igs gives the same sequence
            assert_eq!(g.subgroup(u.gens()), u);
        }
    }
}

fn random_presentation() -> impl Strategy<Value = (Vec<u64>, Vec<Vec<i64>>, Vec<Vec<Vec<i64>>>)> {
    (2usize..=4).prop_flat_map(|n| {
        let orders = proptest::collection::vec(prop_oneof![Just(2u64), Just(4u64)], n);
        orders.prop_flat_map(move |orders| {
            let o2 = orders.clone();
            let powers: Vec<_> = (0..n)
                .map(|j| {
                    let o = o2.clone();
                    proptest::collection::vec(0i64..4, n).prop_map(move |v| {
                        v.iter().enumerate().map(|(i, &e)| if i > j { e % o[i] as i64 } else { 0 }).collect::<Vec<_>>()
                    })
                })
                .collect();
            let o3 = orders.clone();
            let conj: Vec<_> = (0..n)
                .map(|j| {
                    let o = o3.clone();
                    let rows: Vec<_> = (0..j)
                        .map(|h| {
                            let o = o.clone();
                            (proptest::collection::vec(0i64..4, n), proptest::bool::weighted(0.6)).prop_map(move |(v, keep)| {
                                v.iter()
                                    .enumerate()
                                    .map(|(i, &e)| {
                                        if i == j && keep {
                                            1
                                        } else if i > h && i != j {
                                            e % o[i] as i64
                                        } else if i == j {
                                            1 + 2 * (e % 2)
                                        } else {
                                            0
                                        }
                                    })
                                    .collect::<Vec<_>>()
                            })
                        })
                        .collect();
                    rows
                })
                .collect();
            (Just(orders), powers, conj)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn consistency_agrees_with_coset_enumeration((orders, powers, conj) in random_presentation()) {
        let pres = match PcPresentation::from_vectors(2, orders.clone(), powers, conj) {
            Ok(p) => p,
            Err(_) => return Ok(()),
        };
        let expected: u64 = orders.iter().product();
        let tc = coset_enumeration_order(&pres, 50_000).unwrap();
        prop_assert_eq!(pres.is_consistent(), tc == expected, "{:?}", pres);
        if pres.is_consistent() {
            let g = GroupHandle::new(pres.clone());
            let elems: Vec<Elem> = g.enumerate_elements(1 << 10).unwrap().into_iter().map(|(x, _)| x).collect();
            for x in elems.iter().step_by(3) {
                prop_assert_eq!(pres.mul(x, &pres.inv(x)), pres.identity());
                prop_assert_eq!(pres.collect(&PcPresentation::elem_word(x)), x.clone());
                for y in elems.iter().step_by(5) {
                    for z in elems.iter().step_by(7) {
                        prop_assert_eq!(pres.mul(&pres.mul(x, y), z), pres.mul(x, &pres.mul(y, z)));
                    }
                }
            }
        }
    }
}
