//! Exact classical ground truth: Ising ground states and maximum independent sets.

use crate::elim::PairModel;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::ising::{mask_to_config, IsingInstance, SpinConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    /// Brute-force Ising enumeration limit (spins).
    pub spins: usize,
    /// Branch-and-bound MIS limit (vertices).
    pub vertices: usize,
    /// Exhaustive subset enumeration limit (vertices).
    pub exhaustive: usize,
    /// Largest induced width accepted by variable elimination.
    pub width: usize,
    /// Cap on the number of ground configurations returned.
    pub max_configs: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { spins: 24, vertices: 40, exhaustive: 20, width: 18, max_configs: 1 << 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundSolution {
    pub ground_energy: f64,
    /// Lowest energy strictly above the ground level; `None` when the spectrum is flat.
    pub first_excited: Option<f64>,
    pub configs: Vec<SpinConfig>,
    pub degeneracy: u64,
}

impl GroundSolution {
    pub fn gap(&self) -> Option<f64> {
        self.first_excited.map(|e| e - self.ground_energy)
    }

    pub fn is_complete(&self) -> bool {
        self.configs.len() as u64 == self.degeneracy
    }
}

/// Exhaustive enumeration over all `2^n` configurations.
pub fn ising_ground(inst: &IsingInstance, budget: &Budget) -> Result<GroundSolution> {
    let n = inst.spins;
    if n > budget.spins || n > 40 {
        return Err(Error::BudgetExceeded { what: "spins", size: n, budget: budget.spins });
    }
    let tol = inst.energy_tol();
    let loose = 1e3 * tol;
    let adj = inst.adjacency();
    let high = n.saturating_sub(12).min(12);
    let low = n - high;

    struct Block {
        min: f64,
        cands: Vec<u64>,
        next: Option<(f64, u64)>,
        count: u64,
    }

    let blocks: Vec<Block> = (0..1u64 << high)
        .into_par_iter()
        .map(|top| {
            let base = top << low;
            let mut s: Vec<f64> = (0..n).map(|i| if base >> i & 1 == 1 { -1.0 } else { 1.0 }).collect();
            let mut local: Vec<f64> = (0..n)
                .map(|i| inst.fields[i] + adj[i].iter().map(|&(k, j)| j * s[k]).sum::<f64>())
                .collect();
            let mut e = inst.energy_mask(base);
            let mut mask = base;
            let mut b = Block { min: f64::INFINITY, cands: Vec::new(), next: None, count: 0 };
            let visit = |e: f64, mask: u64, b: &mut Block| {
                if e < b.min - loose {
                    if b.min.is_finite() {
                        b.next = Some((b.min, b.cands[0]));
                    }
                    b.min = e;
                    b.cands.clear();
                    b.cands.push(mask);
                    b.count = 1;
                } else if e <= b.min + loose {
                    b.min = b.min.min(e);
                    b.count += 1;
                    if b.cands.len() < budget.max_configs {
                        b.cands.push(mask);
                    }
                } else if b.next.is_none_or(|(x, _)| e < x) {
                    b.next = Some((e, mask));
                }
            };
            visit(e, mask, &mut b);
            for step in 1u64..1 << low {
                let i = step.trailing_zeros() as usize;
                // flipping spin i changes E by 2 s_i L_i
                e += 2.0 * s[i] * local[i];
                for &(k, j) in &adj[i] {
                    local[k] -= 2.0 * j * s[i];
                }
                s[i] = -s[i];
                mask ^= 1 << i;
                visit(e, mask, &mut b);
            }
            b
        })
        .collect();

    let gmin = blocks.iter().map(|b| b.min).fold(f64::INFINITY, f64::min);
    let mut exact: Vec<(f64, u64)> = Vec::new();
    let mut next: Option<f64> = None;
    let mut count = 0u64;
    for b in &blocks {
        if b.min <= gmin + loose {
            for &m in &b.cands {
                exact.push((inst.energy_mask(m), m));
            }
            count += b.count - b.cands.len() as u64;
        } else {
            next = Some(next.map_or(b.min, |x: f64| x.min(b.min)));
        }
        if let Some((_, m)) = b.next {
            let e = inst.energy_mask(m);
            next = Some(next.map_or(e, |x| x.min(e)));
        }
    }
    let e0 = exact.iter().map(|x| x.0).fold(f64::INFINITY, f64::min);
    let mut configs = Vec::new();
    for &(e, m) in &exact {
        if e <= e0 + tol {
            configs.push(m);
            count += 1;
        } else {
            next = Some(next.map_or(e, |x| x.min(e)));
        }
    }
    configs.sort_unstable();
    configs.truncate(budget.max_configs);
    Ok(GroundSolution {
        ground_energy: e0,
        first_excited: next,
        configs: configs.into_iter().map(|m| mask_to_config(m, n)).collect(),
        degeneracy: count,
    })
}

/// Ising ground states by variable elimination; exact for any size whose
/// coupling graph has small induced width.
pub fn ising_ground_elim(inst: &IsingInstance, budget: &Budget) -> Result<GroundSolution> {
    let model = PairModel {
        n: inst.spins,
        unary: inst.fields.iter().map(|&h| [-h, h]).collect(),
        pairs: inst.couplings.iter().map(|&(i, k, j)| (i, k, [[-j, j], [j, -j]])).collect(),
    };
    let m = model.minimise(budget.width, budget.max_configs, inst.energy_tol() * 1e3)?;
    let mut configs: Vec<SpinConfig> = m
        .solutions
        .iter()
        .map(|x| x.iter().map(|&b| if b == 1 { -1 } else { 1 }).collect())
        .collect();
    configs.sort_by_key(|s| s.iter().rev().map(|&v| v < 0).collect::<Vec<_>>());
    Ok(GroundSolution { ground_energy: m.min, first_excited: m.next, configs, degeneracy: m.count })
}

/// Brute force within the spin budget, variable elimination beyond it.
pub fn ising_ground_auto(inst: &IsingInstance, budget: &Budget) -> Result<GroundSolution> {
    if inst.spins <= budget.spins {
        ising_ground(inst, budget)
    } else {
        ising_ground_elim(inst, budget)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MisResult {
    pub size: usize,
    /// All maximum independent sets, each sorted, in lexicographic order.
    pub sets: Vec<Vec<usize>>,
}

fn masks(g: &Graph) -> Result<Vec<u128>> {
    if g.n() > 128 {
        return Err(Error::BudgetExceeded { what: "vertices", size: g.n(), budget: 128 });
    }
    Ok(g.adjacency_masks())
}

fn bits(mut m: u128) -> Vec<usize> {
    let mut v = Vec::new();
    while m != 0 {
        v.push(m.trailing_zeros() as usize);
        m &= m - 1;
    }
    v
}

/// Greedy clique cover of `p`: an upper bound on its independence number.
fn clique_cover_bound(adj: &[u128], mut p: u128) -> u32 {
    let mut k = 0;
    while p != 0 {
        let v = p.trailing_zeros() as usize;
        let mut clique = adj[v] & p;
        p &= !(1u128 << v);
        while clique != 0 {
            let w = clique.trailing_zeros() as usize;
            p &= !(1u128 << w);
            clique &= adj[w];
        }
        k += 1;
    }
    k
}

/// Independence number by branch and bound.
pub fn mis_size(g: &Graph, budget: &Budget) -> Result<usize> {
    if g.n() > budget.vertices {
        return Err(Error::BudgetExceeded { what: "vertices", size: g.n(), budget: budget.vertices });
    }
    let adj = masks(g)?;
    fn rec(adj: &[u128], p: u128, size: u32, best: &mut u32) {
        if p == 0 {
            *best = (*best).max(size);
            return;
        }
        if size + p.count_ones() <= *best || size + clique_cover_bound(adj, p) <= *best {
            return;
        }
        let mut pick = None;
        let mut maxd = 0;
        for v in bits(p) {
            let d = (adj[v] & p).count_ones();
            if d <= 1 {
                return rec(adj, p & !(1u128 << v) & !adj[v], size + 1, best);
            }
            if d > maxd {
                maxd = d;
                pick = Some(v);
            }
        }
        let v = pick.unwrap();
        rec(adj, p & !(1u128 << v) & !adj[v], size + 1, best);
        rec(adj, p & !(1u128 << v), size, best);
    }
    let mut best = 0;
    let all = if g.n() == 128 { u128::MAX } else { (1u128 << g.n()) - 1 };
    rec(&adj, all, 0, &mut best);
    Ok(best as usize)
}

/// All maximum independent sets by branch and bound.
pub fn mis_sets(g: &Graph, budget: &Budget) -> Result<MisResult> {
    let size = mis_size(g, budget)?;
    let adj = masks(g)?;
    fn rec(adj: &[u128], p: u128, chosen: u128, target: u32, out: &mut Vec<u128>) {
        let have = chosen.count_ones();
        if p == 0 {
            if have == target {
                out.push(chosen);
            }
            return;
        }
        if have + clique_cover_bound(adj, p) < target {
            return;
        }
        let v = p.trailing_zeros() as usize;
        rec(adj, p & !(1u128 << v) & !adj[v], chosen | 1u128 << v, target, out);
        rec(adj, p & !(1u128 << v), chosen, target, out);
    }
    let mut out = Vec::new();
    let all = if g.n() == 128 { u128::MAX } else { (1u128 << g.n()) - 1 };
    rec(&adj, all, 0, size as u32, &mut out);
    let mut sets: Vec<Vec<usize>> = out.into_iter().map(bits).collect();
    sets.sort();
    Ok(MisResult { size, sets })
}

/// All maximum independent sets by checking every subset.
pub fn mis_exhaustive(g: &Graph, budget: &Budget) -> Result<MisResult> {
    let n = g.n();
    if n > budget.exhaustive {
        return Err(Error::BudgetExceeded { what: "vertices", size: n, budget: budget.exhaustive });
    }
    let edges: Vec<u64> = g.edges().iter().map(|&(u, v)| 1u64 << u | 1u64 << v).collect();
    let indep: Vec<u64> = (0..1u64 << n)
        .into_par_iter()
        .filter(|&m| edges.iter().all(|&e| m & e != e))
        .collect();
    let size = indep.iter().map(|m| m.count_ones()).max().unwrap_or(0) as usize;
    let mut sets: Vec<Vec<usize>> = indep
        .into_iter()
        .filter(|m| m.count_ones() as usize == size)
        .map(|m| bits(m as u128))
        .collect();
    sets.sort();
    Ok(MisResult { size, sets })
}

/// Independence number and all maximum sets by variable elimination.
pub fn mis_elim(g: &Graph, budget: &Budget) -> Result<MisResult> {
    let big = g.n() as f64 + 1.0;
    let model = PairModel {
        n: g.n(),
        unary: vec![[0.0, -1.0]; g.n()],
        pairs: g.edges().iter().map(|&(u, v)| (u, v, [[0.0, 0.0], [0.0, big]])).collect(),
    };
    let m = model.minimise(budget.width, budget.max_configs, 0.5)?;
    if m.count as usize != m.solutions.len() {
        return Err(Error::BudgetExceeded { what: "maximum sets", size: m.count as usize, budget: budget.max_configs });
    }
    let mut sets: Vec<Vec<usize>> = m
        .solutions
        .iter()
        .map(|x| x.iter().enumerate().filter(|(_, &b)| b == 1).map(|(i, _)| i).collect())
        .collect();
    sets.sort();
    Ok(MisResult { size: (-m.min).round() as usize, sets })
}

/// Exact MIS with all maximum sets, choosing the method by size.
pub fn mis_exact(g: &Graph, budget: &Budget) -> Result<MisResult> {
    if g.n() <= budget.exhaustive {
        mis_exhaustive(g, budget)
    } else if g.n() <= budget.vertices {
        mis_sets(g, budget)
    } else {
        mis_elim(g, budget)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_spin() {
        let inst = IsingInstance::new(1, vec![], vec![1.0], 1.0).unwrap();
        let gs = ising_ground(&inst, &Budget::default()).unwrap();
        assert_eq!(gs.ground_energy, -1.0);
        assert_eq!(gs.configs, vec![vec![1]]);
        assert_eq!(gs.gap(), Some(2.0));
    }

    #[test]
    fn frustrated_triangle() {
        let inst = IsingInstance::new(3, vec![(0, 1, -1.0), (1, 2, -1.0), (0, 2, -1.0)], vec![0.0; 3], 1.0).unwrap();
        let gs = ising_ground(&inst, &Budget::default()).unwrap();
        assert_eq!(gs.configs.len(), 6);
        assert_eq!(gs.ground_energy, -1.0);
        assert_eq!(gs.gap(), Some(4.0));
        let el = ising_ground_elim(&inst, &Budget::default()).unwrap();
        assert_eq!(el.degeneracy, 6);
        assert_eq!(el.gap(), Some(4.0));
    }

    #[test]
    fn flat_spectrum() {
        let inst = IsingInstance::new(2, vec![], vec![0.0; 2], 1.0).unwrap();
        let gs = ising_ground(&inst, &Budget::default()).unwrap();
        assert_eq!(gs.degeneracy, 4);
        assert_eq!(gs.first_excited, None);
    }

    #[test]
    fn budget() {
        let inst = IsingInstance::new(25, vec![], vec![0.0; 25], 1.0).unwrap();
        assert_eq!(ising_ground(&inst, &Budget::default()).unwrap_err().code(), "BudgetExceeded");
    }

    #[test]
    fn mis_examples() {
        let b = Budget::default();
        let e5 = mis_exact(&Graph::edgeless(5), &b).unwrap();
        assert_eq!((e5.size, e5.sets.len()), (5, 1));
        let k5 = mis_exact(&Graph::complete(5), &b).unwrap();
        assert_eq!((k5.size, k5.sets.len()), (1, 5));
        assert_eq!(mis_exact(&Graph::petersen(), &b).unwrap().size, 4);
        assert_eq!(mis_sets(&Graph::petersen(), &b).unwrap(), mis_exhaustive(&Graph::petersen(), &b).unwrap());
        assert_eq!(mis_elim(&Graph::petersen(), &b).unwrap(), mis_exhaustive(&Graph::petersen(), &b).unwrap());
    }
}
