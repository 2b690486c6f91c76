//! MIS to Ising reductions, plain and clustered.
//!
//! Plain: `E + Σ|J_ik| = Σ_edges |J_ik| (1 - s_i)(1 - s_k) + J Σ s_i`.
//! Clustered: `E + const = H1 + H2 + V` with
//! `H1 = Σ_intra |J| (1 - τ_a s_a τ_b s_b)`,
//! `H2 = Σ_inter |J| (1 - τ_a s_a)(1 - τ_b s_b)` and a small field `V`
//! favouring `S_i = -1`.

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::ising::IsingInstance;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

fn check_couplings(couplings: impl IntoIterator<Item = (usize, usize, f64)> + Clone, threshold: f64) -> Result<()> {
    if !(threshold > 0.0) {
        return Err(Error::Config(format!("threshold must be positive, got {threshold}")));
    }
    for (i, k, j) in couplings.clone() {
        if !(j < 0.0) {
            return Err(Error::SignViolation(i, k));
        }
    }
    let min = couplings.into_iter().map(|c| c.2.abs()).fold(f64::INFINITY, f64::min);
    if threshold > min {
        return Err(Error::ThresholdViolation { threshold, min_coupling: min });
    }
    Ok(())
}

/// Plain reduction. `couplings[e]` is the (negative) coupling of edge `e` of `g`.
pub fn mis_to_ising(g: &Graph, couplings: &[f64], threshold: f64) -> Result<IsingInstance> {
    assert_eq!(couplings.len(), g.m(), "one coupling per edge");
    let list = || g.edges().iter().zip(couplings).map(|(&(u, v), &j)| (u, v, j));
    check_couplings(list(), threshold)?;
    Ok(mis_to_ising_unchecked(g, couplings, threshold))
}

/// Plain reduction without the sign and threshold checks.
pub fn mis_to_ising_unchecked(g: &Graph, couplings: &[f64], threshold: f64) -> IsingInstance {
    let mut fields = vec![-threshold; g.n()];
    let mut constant = 0.0;
    for (&(u, v), &j) in g.edges().iter().zip(couplings) {
        fields[u] -= j;
        fields[v] -= j;
        constant += j.abs();
    }
    let c = g.edges().iter().zip(couplings).map(|(&(u, v), &j)| (u, v, j)).collect();
    let mut inst = IsingInstance::new(g.n(), c, fields, threshold).expect("graph edges are valid");
    inst.constant = constant;
    inst
}

/// Plain reduction with unit couplings and `J = 1`.
pub fn mis_to_ising_unit(g: &Graph) -> IsingInstance {
    mis_to_ising(g, &vec![-1.0; g.m()], 1.0).expect("unit couplings are valid")
}

/// Reduction of a random planar graph on `2..=max_vertices` vertices, with
/// couplings drawn from `{-1, -1.25, -1.5, -1.75}` and threshold `1`.
pub fn random_planar_instance<R: rand::Rng>(max_vertices: usize, rng: &mut R) -> IsingInstance {
    let (g, _) = crate::drawing::random_planar(rng.gen_range(2..=max_vertices.max(2)), 0.5, rng);
    let js: Vec<f64> = (0..g.m()).map(|_| -1.0 - 0.25 * f64::from(rng.gen_range(0..4))).collect();
    mis_to_ising(&g, &js, 1.0).expect("couplings are at least the threshold")
}

/// Selected vertices `{i : s_i = -1}`.
pub fn decode(config: &[i8]) -> Vec<usize> {
    crate::ising::selected(config)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Field `(J/2) τ` on one representative spin per cluster.
    #[default]
    Representative,
    /// Field `(J/2) τ / n_i` on every spin of cluster `i`.
    Distributed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub spins: usize,
    /// Member spins per cluster; the first member is the representative.
    pub clusters: Vec<Vec<usize>>,
    /// Gauge sign per spin.
    pub tau: Vec<i8>,
    pub intra: Vec<(usize, usize, f64)>,
    pub inter: Vec<(usize, usize, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub h1: f64,
    pub h2: f64,
    pub v: f64,
    pub total: f64,
}

impl ClusterModel {
    pub fn cluster_of(&self) -> Vec<usize> {
        let mut c = vec![usize::MAX; self.spins];
        for (i, members) in self.clusters.iter().enumerate() {
            for &s in members {
                c[s] = i;
            }
        }
        c
    }

    /// Structural checks: partition, trees, one link per cluster pair.
    pub fn check_structure(&self) -> Result<()> {
        let of = self.cluster_of();
        let covered: usize = self.clusters.iter().map(Vec::len).sum();
        if covered != self.spins || of.contains(&usize::MAX) || self.tau.len() != self.spins {
            return Err(Error::Config("clusters must partition the spins".into()));
        }
        for &(a, b, _) in &self.intra {
            if of[a] != of[b] || a == b {
                return Err(Error::TreeViolation(of[a]));
            }
        }
        for (ci, members) in self.clusters.iter().enumerate() {
            if members.is_empty() {
                return Err(Error::TreeViolation(ci));
            }
            let edges: Vec<(usize, usize)> =
                self.intra.iter().filter(|e| of[e.0] == ci).map(|e| (e.0, e.1)).collect();
            if edges.len() + 1 != members.len() {
                return Err(Error::TreeViolation(ci));
            }
            let mut reach = BTreeSet::from([members[0]]);
            let mut grew = true;
            while grew {
                grew = false;
                for &(a, b) in &edges {
                    if reach.contains(&a) != reach.contains(&b) {
                        reach.insert(a);
                        reach.insert(b);
                        grew = true;
                    }
                }
            }
            if reach.len() != members.len() {
                return Err(Error::TreeViolation(ci));
            }
        }
        let mut pairs = BTreeSet::new();
        for &(a, b, _) in &self.inter {
            let (x, y) = (of[a].min(of[b]), of[a].max(of[b]));
            if x == y || !pairs.insert((x, y)) {
                return Err(Error::Config(format!("invalid inter-cluster link ({a}, {b})")));
            }
        }
        Ok(())
    }

    /// Gauge inequalities: intra links aligned, inter links anti-aligned.
    pub fn check_gauge(&self) -> Result<()> {
        let t = |i: usize| f64::from(self.tau[i]);
        for &(a, b, j) in &self.intra {
            if !(j * t(a) * t(b) > 0.0) {
                return Err(Error::GaugeViolation(a, b));
            }
        }
        for &(a, b, j) in &self.inter {
            if !(j * t(a) * t(b) < 0.0) {
                return Err(Error::GaugeViolation(a, b));
            }
        }
        Ok(())
    }

    /// Decoded cluster spins `S_i = τ_{i0} s_{i0}`.
    pub fn coarse(&self, config: &[i8]) -> Vec<i8> {
        self.clusters.iter().map(|m| self.tau[m[0]] * config[m[0]]).collect()
    }

    /// Clusters with `S_i = -1`.
    pub fn decode(&self, config: &[i8]) -> Vec<usize> {
        crate::ising::selected(&self.coarse(config))
    }

    /// True when every spin agrees with its cluster's representative in the gauge.
    pub fn aligned(&self, config: &[i8]) -> bool {
        self.clusters.iter().all(|m| {
            let s = self.tau[m[0]] * config[m[0]];
            m.iter().all(|&a| self.tau[a] * config[a] == s)
        })
    }

    /// Graph on clusters induced by the inter links.
    pub fn cluster_graph(&self) -> Graph {
        let of = self.cluster_of();
        Graph::new(self.clusters.len(), self.inter.iter().map(|&(a, b, _)| (of[a], of[b])))
            .expect("one link per cluster pair")
    }

    pub fn breakdown(&self, threshold: f64, variant: Variant, config: &[i8]) -> EnergyBreakdown {
        let ts = |a: usize| f64::from(self.tau[a] * config[a]);
        let h1: f64 = self.intra.iter().map(|&(a, b, j)| j.abs() * (1.0 - ts(a) * ts(b))).sum();
        let h2: f64 = self.inter.iter().map(|&(a, b, j)| j.abs() * (1.0 - ts(a)) * (1.0 - ts(b))).sum();
        let v: f64 = match variant {
            Variant::Representative => self.clusters.iter().map(|m| threshold / 2.0 * ts(m[0])).sum(),
            Variant::Distributed => self
                .clusters
                .iter()
                .map(|m| m.iter().map(|&a| threshold / 2.0 * ts(a) / m.len() as f64).sum::<f64>())
                .sum(),
        };
        EnergyBreakdown { h1, h2, v, total: h1 + h2 + v }
    }
}

/// Propagates τ along each cluster tree from its representative (τ = +1).
pub fn infer_tau(cm: &ClusterModel) -> Result<Vec<i8>> {
    let mut probe = cm.clone();
    probe.tau = vec![1; cm.spins];
    probe.check_structure()?;
    let mut tau = vec![0i8; cm.spins];
    for m in &cm.clusters {
        tau[m[0]] = 1;
        let mut grew = true;
        while grew {
            grew = false;
            for &(a, b, j) in &cm.intra {
                let sign = if j > 0.0 { 1 } else { -1 };
                if tau[a] != 0 && tau[b] == 0 {
                    tau[b] = tau[a] * sign;
                    grew = true;
                } else if tau[b] != 0 && tau[a] == 0 {
                    tau[a] = tau[b] * sign;
                    grew = true;
                }
            }
        }
    }
    for &(a, b, j) in &cm.inter {
        if !(j * f64::from(tau[a] * tau[b]) < 0.0) {
            return Err(Error::InterClusterSignConflict(a, b));
        }
    }
    Ok(tau)
}

/// Ising instance whose energy is `H1 + H2 + V` minus the reported constant.
pub fn build_cluster_hamiltonian(cm: &ClusterModel, threshold: f64, variant: Variant) -> Result<IsingInstance> {
    cm.check_structure()?;
    cm.check_gauge()?;
    let all = cm.intra.iter().chain(&cm.inter).copied();
    let min = all.clone().map(|c| c.2.abs()).fold(f64::INFINITY, f64::min);
    if !(threshold > 0.0) {
        return Err(Error::Config(format!("threshold must be positive, got {threshold}")));
    }
    if threshold > min {
        return Err(Error::ThresholdViolation { threshold, min_coupling: min });
    }
    let t = |a: usize| f64::from(cm.tau[a]);
    let mut fields = vec![0.0; cm.spins];
    let mut constant = 0.0;
    for &(_, _, j) in &cm.intra {
        constant += j.abs();
    }
    for &(a, b, j) in &cm.inter {
        constant += j.abs();
        fields[a] += j.abs() * t(a);
        fields[b] += j.abs() * t(b);
    }
    for m in &cm.clusters {
        match variant {
            Variant::Representative => fields[m[0]] -= threshold / 2.0 * t(m[0]),
            Variant::Distributed => {
                for &a in m {
                    fields[a] -= threshold / 2.0 * t(a) / m.len() as f64;
                }
            }
        }
    }
    let mut inst = IsingInstance::new(cm.spins, all.collect(), fields, threshold)?;
    inst.constant = constant;
    Ok(inst)
}

/// Random gauge-consistent cluster model over `g` with integer coupling
/// magnitudes in `1..=3`, cluster sizes in `1..=max_size` and τ = +1 on
/// every representative.
pub fn random_cluster_model<R: rand::Rng>(g: &Graph, max_size: usize, rng: &mut R) -> ClusterModel {
    let mut clusters = Vec::new();
    let mut intra = Vec::new();
    let mut tau = Vec::new();
    let mut next = 0;
    for _ in 0..g.n() {
        let size = rng.gen_range(1..=max_size);
        let members: Vec<usize> = (next..next + size).collect();
        next += size;
        tau.push(1i8);
        for _ in 1..size {
            tau.push(if rng.gen_bool(0.5) { 1 } else { -1 });
        }
        for k in 1..size {
            let p = members[rng.gen_range(0..k)];
            let mag = f64::from(rng.gen_range(1..=3));
            intra.push((p, members[k], mag * f64::from(tau[p] * tau[members[k]])));
        }
        clusters.push(members);
    }
    let inter = g
        .edges()
        .iter()
        .map(|&(u, v)| {
            let a = clusters[u][rng.gen_range(0..clusters[u].len())];
            let b = clusters[v][rng.gen_range(0..clusters[v].len())];
            let mag = f64::from(rng.gen_range(1..=3));
            (a, b, -mag * f64::from(tau[a] * tau[b]))
        })
        .collect();
    ClusterModel { spins: next, clusters, tau, intra, inter }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{ising_ground, Budget};

    #[test]
    fn single_edge() {
        let inst = mis_to_ising(&Graph::path(2), &[-1.0], 1.0).unwrap();
        let gs = ising_ground(&inst, &Budget::default()).unwrap();
        let sets: Vec<Vec<usize>> = gs.configs.iter().map(|c| decode(c)).collect();
        assert_eq!(sets, vec![vec![0], vec![1]]);
        assert_eq!(gs.gap(), Some(2.0));
        assert_eq!(inst.fields, vec![0.0, 0.0]);
    }

    #[test]
    fn errors() {
        let g = Graph::path(2);
        assert_eq!(mis_to_ising(&g, &[-1.0], 2.0).unwrap_err().code(), "ThresholdViolation");
        assert_eq!(mis_to_ising(&g, &[0.5], 0.5).unwrap_err().code(), "SignViolation");
    }

    #[test]
    fn tau_propagation() {
        let cm = ClusterModel {
            spins: 2,
            clusters: vec![vec![0, 1]],
            tau: vec![],
            intra: vec![(0, 1, -1.0)],
            inter: vec![],
        };
        assert_eq!(infer_tau(&cm).unwrap(), vec![1, -1]);
    }
}
