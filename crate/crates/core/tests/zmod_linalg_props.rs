use std::collections::BTreeSet;

use coclass_core::zmod_linalg::*;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use proptest::prelude::*;

fn bi(v: &[i64]) -> Vec<BigInt> {
    v.iter().map(|&x| BigInt::from(x)).collect()
}

/// All elements of the subgroup generated by `gens`, by closure under addition.
fn brute_span(p: u64, exps: &[u32], gens: &[Vec<i64>]) -> BTreeSet<Vec<i64>> {
    let m: Vec<i64> = exps.iter().map(|&e| (p as i64).pow(e)).collect();
    let norm = |v: &[i64]| -> Vec<i64> { v.iter().zip(&m).map(|(x, q)| x.rem_euclid(*q)).collect() };
    let mut seen = BTreeSet::new();
    let zero = vec![0; exps.len()];
    seen.insert(zero.clone());
    let mut frontier = vec![zero];
    while let Some(x) = frontier.pop() {
        for g in gens {
            let y = norm(&x.iter().zip(g).map(|(a, b)| a + b).collect::<Vec<_>>());
            if seen.insert(y.clone()) {
                frontier.push(y);
            }
        }
    }
    seen
}

fn all_elements(p: u64, exps: &[u32]) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for &e in exps {
        let q = (p as i64).pow(e);
        out = out
            .into_iter()
            .flat_map(|v: Vec<i64>| (0..q).map(move |x| {
                let mut w = v.clone();
                w.push(x);
                w
            }))
            .collect();
    }
    out
}

fn setup() -> impl Strategy<Value = (u64, Vec<u32>, Vec<Vec<i64>>, Vec<Vec<i64>>)> {
    (prop_oneof![Just(2u64), Just(3u64)], 1usize..=3).prop_flat_map(|(p, n)| {
        let max_e = if p == 2 { 3 } else { 2 };
        (Just(p), proptest::collection::vec(0u32..=max_e, n)).prop_flat_map(move |(p, exps)| {
            let n = exps.len();
            let gen = proptest::collection::vec(proptest::collection::vec(-30i64..30, n), 0..4);
            (Just(p), Just(exps), gen.clone(), gen)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn snf_is_a_factorization_with_divisibility(
        rows in proptest::collection::vec(proptest::collection::vec(-40i64..40, 3), 1..5)
    ) {
        let m = IntMatrix::from_rows(&rows);
        let s = smith_normal_form(&m);
        prop_assert_eq!(s.u.mul(&m).mul(&s.v), s.d.clone());
        prop_assert!(s.d.is_diagonal());
        let diag = s.d.diagonal();
        for w in diag.windows(2) {
            if w[1].is_zero() { continue; }
            prop_assert!(!w[0].is_zero());
            prop_assert!((&w[1] % &w[0]).is_zero());
        }
        for x in &diag { prop_assert!(*x >= BigInt::zero()); }
    }

    #[test]
    fn canonical_form_is_generator_independent((p, exps, g, h) in setup()) {
        let a = ResidueSubgroup::from_i64(p, &exps, &g).unwrap();
        // reorder, duplicate, and add combinations of generators
        let mut g2: Vec<Vec<i64>> = g.iter().rev().cloned().collect();
        if g.len() >= 2 {
            g2.push(g[0].iter().zip(&g[1]).map(|(x, y)| 3 * x - y).collect());
        }
        g2.extend(g.iter().cloned());
        let b = ResidueSubgroup::from_i64(p, &exps, &g2).unwrap();
        prop_assert_eq!(&a, &b);
        let _ = h;
    }

    #[test]
    fn order_and_membership_match_enumeration((p, exps, g, _h) in setup()) {
        let s = ResidueSubgroup::from_i64(p, &exps, &g).unwrap();
        let span = brute_span(p, &exps, &g);
        prop_assert_eq!(s.order(), BigInt::from(span.len()));
        for x in all_elements(p, &exps) {
            prop_assert_eq!(s.contains(&bi(&x)).unwrap(), span.contains(&x));
        }
        let inv = s.invariants();
        let prod = inv.iter().fold(BigInt::one(), |a, b| a * b);
        prop_assert_eq!(prod, s.order());
    }

    #[test]
    fn intersection_and_sum_match_enumeration((p, exps, g, h) in setup()) {
        let a = ResidueSubgroup::from_i64(p, &exps, &g).unwrap();
        let b = ResidueSubgroup::from_i64(p, &exps, &h).unwrap();
        let sa = brute_span(p, &exps, &g);
        let sb = brute_span(p, &exps, &h);
        let both: usize = sa.intersection(&sb).count();
        prop_assert_eq!(a.intersection(&b).unwrap().order(), BigInt::from(both));
        let mut gh = g.clone();
        gh.extend(h.iter().cloned());
        prop_assert_eq!(a.sum(&b).unwrap().order(), BigInt::from(brute_span(p, &exps, &gh).len()));
    }

    #[test]
    fn quotient_order_is_index((p, exps, g, h) in setup()) {
        let z = ResidueSubgroup::from_i64(p, &exps, &g).unwrap();
        let b = ResidueSubgroup::from_i64(p, &exps, &h).unwrap().intersection(&z).unwrap();
        let inv = quotient_invariants(&z, &b).unwrap();
        let prod = inv.iter().fold(BigInt::one(), |a, b| a * b);
        prop_assert_eq!(prod * b.order(), z.order());
        for w in inv.windows(2) {
            prop_assert!((&w[1] % &w[0]).is_zero());
        }
    }

    #[test]
    fn solver_matches_enumeration(
        p in prop_oneof![Just(2u64), Just(3u64)],
        rows in proptest::collection::vec(proptest::collection::vec(-9i64..9, 2), 1..3),
        rhs_seed in proptest::collection::vec(-9i64..9, 3),
        row_e in proptest::collection::vec(1u32..=2, 3),
    ) {
        let n = rows.len();
        let row_exps = &row_e[..n];
        let b = &rhs_seed[..n];
        let top = *row_exps.iter().max().unwrap();
        let q = (p as i64).pow(top);
        let a = IntMatrix::from_rows(&rows);
        let sol = solve_linear_mod(&a, &bi(b), p, row_exps).unwrap();
        let satisfies = |x: &[i64]| {
            rows.iter().zip(b).zip(row_exps).all(|((r, &bb), &e)| {
                let m = (p as i64).pow(e);
                (r[0] * x[0] + r[1] * x[1] - bb).rem_euclid(m) == 0
            })
        };
        let mut count = 0usize;
        for x0 in 0..q {
            for x1 in 0..q {
                if satisfies(&[x0, x1]) { count += 1; }
            }
        }
        match sol {
            None => prop_assert_eq!(count, 0),
            Some(s) => {
                let x: Vec<i64> = s.particular.iter().map(|v| i64::try_from(v).unwrap()).collect();
                prop_assert!(satisfies(&x));
                prop_assert_eq!(s.kernel.order(), BigInt::from(count));
                for k in s.kernel.basis() {
                    let k: Vec<i64> = k.iter().map(|v| i64::try_from(v.mod_floor(&BigInt::from(q))).unwrap()).collect();
                    let y: Vec<i64> = x.iter().zip(&k).map(|(a, b)| a + b).collect();
                    prop_assert!(satisfies(&y));
                }
            }
        }
    }
}
