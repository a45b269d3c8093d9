//! Coset enumeration over the trivial subgroup, used as an oracle for the
//! order of small presentations. It only reads the defining relations and
//! never calls the collector.

use super::PcPresentation;

const NONE: usize = usize::MAX;

struct CosetTable {
    ncols: usize,
    table: Vec<usize>,
    parent: Vec<usize>,
    live: usize,
    limit: usize,
}

impl CosetTable {
    fn get(&self, c: usize, x: usize) -> usize {
        self.table[c * self.ncols + x]
    }

    fn set(&mut self, c: usize, x: usize, d: usize) {
        self.table[c * self.ncols + x] = d;
    }

    fn define(&mut self, c: usize, x: usize) -> bool {
        if self.live >= self.limit {
            return false;
        }
        let d = self.parent.len();
        self.parent.push(d);
        self.table.extend(std::iter::repeat(NONE).take(self.ncols));
        self.live += 1;
        self.set(c, x, d);
        self.set(d, x ^ 1, c);
        true
    }

    fn find(&mut self, mut c: usize) -> usize {
        while self.parent[c] != c {
            let up = self.parent[self.parent[c]];
            self.parent[c] = up;
            c = up;
        }
        c
    }

    fn alive(&self, c: usize) -> bool {
        self.parent[c] == c
    }

    fn merge(&mut self, a: usize, b: usize, queue: &mut Vec<usize>) {
        let (a, b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        let (keep, kill) = if a < b { (a, b) } else { (b, a) };
        self.parent[kill] = keep;
        self.live -= 1;
        queue.push(kill);
    }

    fn coincidence(&mut self, a: usize, b: usize) {
        let mut queue = Vec::new();
        self.merge(a, b, &mut queue);
        let mut i = 0;
        while i < queue.len() {
            let g = queue[i];
            i += 1;
            for x in 0..self.ncols {
                let d = self.get(g, x);
                if d == NONE {
                    continue;
                }
                self.set(d, x ^ 1, NONE);
                let mu = self.find(g);
                let nu = self.find(d);
                let mx = self.get(mu, x);
                if mx != NONE {
                    self.merge(nu, mx, &mut queue);
                    continue;
                }
                let nx = self.get(nu, x ^ 1);
                if nx != NONE {
                    self.merge(mu, nx, &mut queue);
                } else {
                    self.set(mu, x, nu);
                    self.set(nu, x ^ 1, mu);
                }
            }
        }
    }

    /// Scans relator `r` from coset `c`, defining cosets as needed.
    fn scan_and_fill(&mut self, c: usize, r: &[usize]) -> bool {
        let mut f = c;
        let mut b = c;
        let mut i = 0usize;
        let mut j = r.len();
        loop {
            while i < j && self.get(f, r[i]) != NONE {
                f = self.get(f, r[i]);
                i += 1;
            }
            if i == j {
                if f != b {
                    self.coincidence(f, b);
                }
                return true;
            }
            while j > i && self.get(b, r[j - 1] ^ 1) != NONE {
                b = self.get(b, r[j - 1] ^ 1);
                j -= 1;
            }
            if j == i {
                self.coincidence(f, b);
                return true;
            }
            if j == i + 1 {
                self.set(f, r[i], b);
                self.set(b, r[i] ^ 1, f);
                return true;
            }
            if !self.define(f, r[i]) {
                return false;
            }
        }
    }
}

/// Order of the group defined by the relations of `pres`, or `None` when
/// more than `limit` cosets would be live at once.
pub fn coset_enumeration_order(pres: &PcPresentation, limit: usize) -> Option<u64> {
    let ncols = 2 * pres.len();
    let relators: Vec<Vec<usize>> = pres
        .relators()
        .iter()
        .map(|w| {
            let mut cols = Vec::new();
            for &(g, e) in w {
                let col = if e >= 0 { 2 * g } else { 2 * g + 1 };
                cols.extend(std::iter::repeat(col).take(e.unsigned_abs() as usize));
            }
            cols
        })
        .filter(|r| !r.is_empty())
        .collect();
    let mut ct = CosetTable { ncols, table: vec![NONE; ncols], parent: vec![0], live: 1, limit };
    let mut c = 0;
    while c < ct.parent.len() {
        if ct.alive(c) {
            for r in &relators {
                if !ct.scan_and_fill(c, r) {
                    return None;
                }
                if !ct.alive(c) {
                    break;
                }
            }
            if ct.alive(c) {
                for x in 0..ncols {
                    if ct.get(c, x) == NONE && !ct.define(c, x) {
                        return None;
                    }
                }
            }
        }
        c += 1;
    }
    Some(ct.live as u64)
}
