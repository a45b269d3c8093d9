//! Presentations of a few standard groups.

use super::{GroupHandle, PcPresentation, Word};

fn build(p: u64, orders: Vec<u64>, powers: Vec<Word>, conj: Vec<Vec<Word>>) -> GroupHandle {
    GroupHandle::new(PcPresentation::new(p, orders, powers, conj).expect("well-formed family"))
}

fn trivial_conj(n: usize) -> Vec<Vec<Word>> {
    (0..n).map(|j| (0..j).map(|_| vec![(j, 1)]).collect()).collect()
}

/// Cyclic group of order `p^k` on generators `x, x^p, x^{p^2}, ...`.
pub fn cyclic(p: u64, k: usize) -> GroupHandle {
    let powers = (0..k).map(|j| if j + 1 < k { vec![(j + 1, 1)] } else { vec![] }).collect();
    build(p, vec![p; k], powers, trivial_conj(k))
}

/// Abelian group with the given prime-power cyclic factors.
pub fn abelian(p: u64, exps: &[usize]) -> GroupHandle {
    exps.iter().fold(cyclic(p, 0), |acc, &e| direct_product(&acc, &cyclic(p, e)))
}

/// Generators `y, r, r^2, r^4, ...` with `r^y = r^{m}` where `m` depends
/// on the family; `y^2` is `1` or the central involution.
fn metacyclic_2group(n: usize, y_square_central: bool, twist: bool) -> GroupHandle {
    assert!(n >= 3);
    let mut powers = vec![if y_square_central { vec![(n - 1, 1)] } else { vec![] }];
    for k in 1..n {
        powers.push(if k + 1 < n { vec![(k + 1, 1)] } else { vec![] });
    }
    let mut conj = trivial_conj(n);
    for k in 1..n {
        conj[k][0] = if twist && k == 1 {
            vec![(1, (1i64 << (n - 2)) - 1)]
        } else {
            vec![(k, -1)]
        };
    }
    build(2, vec![2; n], powers, conj)
}

/// Dihedral group of order `2^n`.
pub fn dihedral(n: usize) -> GroupHandle {
    metacyclic_2group(n, false, false)
}

/// Generalized quaternion group of order `2^n`.
pub fn quaternion(n: usize) -> GroupHandle {
    metacyclic_2group(n, true, false)
}

/// Semidihedral group of order `2^n` (`n >= 4`).
pub fn semidihedral(n: usize) -> GroupHandle {
    assert!(n >= 4);
    metacyclic_2group(n, false, true)
}

/// `G x H`, generators of `G` first.
pub fn direct_product(g: &GroupHandle, h: &GroupHandle) -> GroupHandle {
    assert!(g.ngens() == 0 || h.ngens() == 0 || g.prime() == h.prime());
    let p = if g.ngens() > 0 { g.prime() } else { h.prime() };
    let (gp, hp) = (g.pres(), h.pres());
    let (m, n) = (gp.len(), hp.len());
    let shift = |x: &Vec<u64>, off: usize| -> Word {
        x.iter().enumerate().filter(|(_, &e)| e != 0).map(|(i, &e)| (i + off, e as i64)).collect()
    };
    let mut orders = gp.rel_orders().to_vec();
    orders.extend_from_slice(hp.rel_orders());
    let mut powers = Vec::new();
    let mut conj = Vec::new();
    for j in 0..m {
        powers.push(shift(gp.power(j), 0));
        conj.push((0..j).map(|h| shift(gp.conjugate(j, h), 0)).collect());
    }
    for j in 0..n {
        powers.push(shift(hp.power(j), m));
        let mut row: Vec<Word> = (0..m).map(|_| vec![(j + m, 1)]).collect();
        row.extend((0..j).map(|h| shift(hp.conjugate(j, h), m)));
        conj.push(row);
    }
    build(p, orders, powers, conj)
}
