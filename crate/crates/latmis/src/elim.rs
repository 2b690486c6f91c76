//! Exact minimisation of pairwise binary cost models by variable elimination.
//!
//! Tracks, per table entry, the lowest cost, its multiplicity and the next
//! distinct cost, so ground energy, degeneracy and the classical gap come out
//! of one pass. All optimal assignments are recovered by backtracking.

use crate::error::{Error, Result};
use std::collections::BTreeSet;

/// `cost(x) = Σ unary[i][x_i] + Σ pair(i, k)[x_i][x_k]` over `x ∈ {0,1}^n`.
#[derive(Debug, Clone)]
pub struct PairModel {
    pub n: usize,
    pub unary: Vec<[f64; 2]>,
    pub pairs: Vec<(usize, usize, [[f64; 2]; 2])>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minima {
    pub min: f64,
    /// Next distinct cost above `min`, if any.
    pub next: Option<f64>,
    /// Number of optimal assignments (saturating at `u64::MAX`).
    pub count: u64,
    /// Optimal assignments, at most `max_solutions` of them.
    pub solutions: Vec<Vec<u8>>,
    pub width: usize,
}

#[derive(Clone, Copy)]
struct Entry {
    e0: f64,
    e1: f64,
    c0: f64,
}

struct Factor {
    scope: Vec<usize>,
    table: Vec<Entry>,
}

struct Bucket {
    var: usize,
    scope: Vec<usize>,
    best: Vec<f64>,
}

fn merge(a: Entry, b: Entry, tol: f64) -> Entry {
    if (a.e0 - b.e0).abs() <= tol {
        Entry { e0: a.e0.min(b.e0), e1: a.e1.min(b.e1), c0: a.c0 + b.c0 }
    } else if a.e0 < b.e0 {
        Entry { e0: a.e0, e1: a.e1.min(b.e0), c0: a.c0 }
    } else {
        Entry { e0: b.e0, e1: b.e1.min(a.e0), c0: b.c0 }
    }
}

/// Greedy min-degree order (ties broken by fill-in, then index) and its
/// induced width. Stops as soon as the width exceeds `cap`, returning the
/// partial order.
pub fn elimination_order(n: usize, edges: impl IntoIterator<Item = (usize, usize)>, cap: usize) -> (Vec<usize>, usize) {
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for (u, v) in edges {
        adj[u].insert(v);
        adj[v].insert(u);
    }
    let fill = |adj: &[BTreeSet<usize>], v: usize| {
        let nb: Vec<usize> = adj[v].iter().copied().collect();
        let mut f = 0;
        for i in 0..nb.len() {
            for j in i + 1..nb.len() {
                if !adj[nb[i]].contains(&nb[j]) {
                    f += 1;
                }
            }
        }
        f
    };
    let mut key: Vec<(usize, usize)> = (0..n).map(|v| (adj[v].len(), fill(&adj, v))).collect();
    let mut queue: BTreeSet<(usize, usize, usize)> = (0..n).map(|v| (key[v].0, key[v].1, v)).collect();
    let mut order = Vec::with_capacity(n);
    let mut width = 0;
    while let Some((d, _, v)) = queue.pop_first() {
        width = width.max(d);
        order.push(v);
        if width > cap {
            break;
        }
        let nb: Vec<usize> = adj[v].iter().copied().collect();
        for &a in &nb {
            adj[a].remove(&v);
            for &b in &nb {
                if a != b {
                    adj[a].insert(b);
                }
            }
        }
        adj[v].clear();
        // Degrees change on the neighbours, fill-in also one step further out.
        let mut touched: BTreeSet<usize> = nb.iter().copied().collect();
        for &a in &nb {
            touched.extend(adj[a].iter().copied());
        }
        for u in touched {
            let k = (adj[u].len(), fill(&adj, u));
            if k != key[u] {
                queue.remove(&(key[u].0, key[u].1, u));
                queue.insert((k.0, k.1, u));
                key[u] = k;
            }
        }
    }
    (order, width)
}

impl PairModel {
    pub fn cost(&self, x: &[u8]) -> f64 {
        let mut c: f64 = self.unary.iter().zip(x).map(|(u, &b)| u[b as usize]).sum();
        for (i, k, t) in &self.pairs {
            c += t[x[*i] as usize][x[*k] as usize];
        }
        c
    }

    /// Exact minimum, multiplicity, next level and optimal assignments.
    pub fn minimise(&self, max_width: usize, max_solutions: usize, tol: f64) -> Result<Minima> {
        let (order, width) = elimination_order(self.n, self.pairs.iter().map(|p| (p.0, p.1)), max_width);
        if width > max_width {
            return Err(Error::BudgetExceeded { what: "elimination width", size: width, budget: max_width });
        }
        let inf = f64::INFINITY;
        let mut pool: Vec<Option<Factor>> = Vec::new();
        for (i, u) in self.unary.iter().enumerate() {
            let table = u.iter().map(|&e| Entry { e0: e, e1: inf, c0: 1.0 }).collect();
            pool.push(Some(Factor { scope: vec![i], table }));
        }
        for &(i, k, t) in &self.pairs {
            let (a, b, flip) = if i < k { (i, k, false) } else { (k, i, true) };
            let mut table = Vec::with_capacity(4);
            for idx in 0..4 {
                let (xa, xb) = (idx & 1, idx >> 1);
                let e = if flip { t[xb][xa] } else { t[xa][xb] };
                table.push(Entry { e0: e, e1: inf, c0: 1.0 });
            }
            pool.push(Some(Factor { scope: vec![a, b], table }));
        }
        let mut by_var: Vec<Vec<usize>> = vec![Vec::new(); self.n];
        for (fi, f) in pool.iter().enumerate() {
            for &v in &f.as_ref().unwrap().scope {
                by_var[v].push(fi);
            }
        }
        let mut buckets = Vec::with_capacity(self.n);
        let mut constant = Entry { e0: 0.0, e1: inf, c0: 1.0 };
        for &var in &order {
            let ids: Vec<usize> = by_var[var].iter().copied().filter(|&fi| pool[fi].is_some()).collect();
            let factors: Vec<Factor> = ids.iter().map(|&fi| pool[fi].take().unwrap()).collect();
            let mut scope: Vec<usize> = factors.iter().flat_map(|f| f.scope.iter().copied()).collect();
            scope.sort_unstable();
            scope.dedup();
            let maps: Vec<Vec<usize>> = factors
                .iter()
                .map(|f| f.scope.iter().map(|v| scope.binary_search(v).unwrap()).collect())
                .collect();
            let size = 1usize << scope.len();
            let mut joint = Vec::with_capacity(size);
            for a in 0..size {
                let mut e0 = 0.0;
                let mut gap = inf;
                let mut c0 = 1.0;
                for (f, m) in factors.iter().zip(&maps) {
                    let idx = m.iter().enumerate().fold(0, |acc, (bit, &p)| acc | ((a >> p) & 1) << bit);
                    let en = f.table[idx];
                    e0 += en.e0;
                    gap = gap.min(en.e1 - en.e0);
                    c0 *= en.c0;
                }
                joint.push(Entry { e0, e1: e0 + gap, c0 });
            }
            let p = scope.binary_search(&var).unwrap();
            let rest: Vec<usize> = scope.iter().copied().filter(|&v| v != var).collect();
            let mut table = Vec::with_capacity(size / 2);
            for b in 0..size / 2 {
                let lo = b & ((1 << p) - 1);
                let hi = (b >> p) << (p + 1);
                let a0 = hi | lo;
                table.push(merge(joint[a0], joint[a0 | 1 << p], tol));
            }
            buckets.push(Bucket { var, scope, best: joint.iter().map(|e| e.e0).collect() });
            if rest.is_empty() {
                constant = Entry {
                    e0: constant.e0 + table[0].e0,
                    e1: (constant.e1 + table[0].e0).min(constant.e0 + table[0].e1),
                    c0: constant.c0 * table[0].c0,
                };
            } else {
                let fi = pool.len();
                for &v in &rest {
                    by_var[v].push(fi);
                }
                pool.push(Some(Factor { scope: rest, table }));
            }
        }

        let mut x = vec![0u8; self.n];
        let mut solutions = Vec::new();
        backtrack(&buckets, buckets.len(), &mut x, &mut solutions, max_solutions, tol);
        Ok(Minima {
            min: constant.e0,
            next: constant.e1.is_finite().then_some(constant.e1),
            count: if constant.c0 >= u64::MAX as f64 { u64::MAX } else { constant.c0.round() as u64 },
            solutions,
            width,
        })
    }
}

fn backtrack(buckets: &[Bucket], t: usize, x: &mut Vec<u8>, out: &mut Vec<Vec<u8>>, cap: usize, tol: f64) {
    if out.len() >= cap {
        return;
    }
    if t == 0 {
        out.push(x.clone());
        return;
    }
    let b = &buckets[t - 1];
    let mut base = 0;
    let mut vbit = 0;
    for (pos, &v) in b.scope.iter().enumerate() {
        if v == b.var {
            vbit = pos;
        } else {
            base |= (x[v] as usize) << pos;
        }
    }
    let e = [b.best[base], b.best[base | 1 << vbit]];
    let m = e[0].min(e[1]);
    for val in 0..2u8 {
        if e[val as usize] <= m + tol {
            x[b.var] = val;
            backtrack(buckets, t - 1, x, out, cap, tol);
        }
    }
    x[b.var] = 0;
}
