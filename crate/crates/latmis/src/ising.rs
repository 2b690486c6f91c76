//! Classical Ising instances, `E(s) = -Σ J_ik s_i s_k - Σ h_i s_i`.
//!
//! Spin configurations use `+1`/`-1`; a vertex is selected when its spin is `-1`.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

pub type SpinConfig = Vec<i8>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsingInstance {
    pub spins: usize,
    /// `(i, k, J_ik)` with `i < k`, sorted, no duplicates.
    pub couplings: Vec<(usize, usize, f64)>,
    pub fields: Vec<f64>,
    pub threshold: f64,
    /// Additive constant dropped from the stored Hamiltonian.
    #[serde(default)]
    pub constant: f64,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub deleted: BTreeSet<usize>,
}

impl IsingInstance {
    pub fn new(spins: usize, couplings: Vec<(usize, usize, f64)>, fields: Vec<f64>, threshold: f64) -> Result<Self> {
        if fields.len() != spins {
            return Err(Error::Parse(format!("{} fields for {spins} spins", fields.len())));
        }
        let mut c: Vec<(usize, usize, f64)> = Vec::with_capacity(couplings.len());
        for (i, k, j) in couplings {
            if i == k {
                return Err(Error::SelfLoop(i));
            }
            for v in [i, k] {
                if v >= spins {
                    return Err(Error::VertexOutOfRange { vertex: v, n: spins });
                }
            }
            c.push((i.min(k), i.max(k), j));
        }
        c.sort_by_key(|a| (a.0, a.1));
        for w in c.windows(2) {
            if (w[0].0, w[0].1) == (w[1].0, w[1].1) {
                return Err(Error::DuplicateEdge(w[0].0, w[0].1));
            }
        }
        Ok(IsingInstance { spins, couplings: c, fields, threshold, constant: 0.0, deleted: BTreeSet::new() })
    }

    /// Energy of the stored Hamiltonian (constant excluded).
    pub fn energy(&self, s: &[i8]) -> f64 {
        assert_eq!(s.len(), self.spins, "config length");
        let mut e = 0.0;
        for &(i, k, j) in &self.couplings {
            e -= j * f64::from(s[i] * s[k]);
        }
        for (i, &h) in self.fields.iter().enumerate() {
            e -= h * f64::from(s[i]);
        }
        e
    }

    /// Energy of the configuration whose `-1` spins are the set bits of `mask`.
    pub fn energy_mask(&self, mask: u64) -> f64 {
        let s = |i: usize| if mask >> i & 1 == 1 { -1.0 } else { 1.0 };
        let mut e = 0.0;
        for &(i, k, j) in &self.couplings {
            e -= j * s(i) * s(k);
        }
        for (i, &h) in self.fields.iter().enumerate() {
            e -= h * s(i);
        }
        e
    }

    /// Neighbour lists with coupling values.
    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.spins];
        for &(i, k, j) in &self.couplings {
            adj[i].push((k, j));
            adj[k].push((i, j));
        }
        adj
    }

    pub fn coupling(&self, i: usize, k: usize) -> Option<f64> {
        let key = (i.min(k), i.max(k));
        self.couplings
            .binary_search_by_key(&key, |c| (c.0, c.1))
            .ok()
            .map(|p| self.couplings[p].2)
    }

    /// Largest magnitude among couplings and fields, used to scale tolerances.
    pub fn scale(&self) -> f64 {
        let c = self.couplings.iter().map(|c| c.2.abs()).sum::<f64>();
        let h = self.fields.iter().map(|h| h.abs()).sum::<f64>();
        (c + h).max(1.0)
    }

    /// Tolerance for deciding energy equality.
    pub fn energy_tol(&self) -> f64 {
        1e-12 * self.scale()
    }

    pub fn min_abs_coupling(&self) -> Option<f64> {
        self.couplings.iter().map(|c| c.2.abs()).min_by(f64::total_cmp)
    }
}

pub fn mask_to_config(mask: u64, n: usize) -> SpinConfig {
    (0..n).map(|i| if mask >> i & 1 == 1 { -1 } else { 1 }).collect()
}

pub fn config_to_mask(s: &[i8]) -> u64 {
    assert!(s.len() <= 64);
    s.iter().enumerate().fold(0, |m, (i, &x)| if x < 0 { m | 1 << i } else { m })
}

/// Vertices whose spin is `-1`.
pub fn selected(s: &[i8]) -> Vec<usize> {
    s.iter().enumerate().filter(|(_, &x)| x < 0).map(|(i, _)| i).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn energy_forms_agree() {
        let inst = IsingInstance::new(3, vec![(0, 1, -1.0), (1, 2, 0.5)], vec![0.25, -1.0, 2.0], 0.5).unwrap();
        for m in 0..8u64 {
            let s = mask_to_config(m, 3);
            assert_eq!(inst.energy(&s), inst.energy_mask(m));
            assert_eq!(config_to_mask(&s), m);
        }
    }

    #[test]
    fn json_shape() {
        let inst = IsingInstance::new(2, vec![(1, 0, -1.0)], vec![0.0, 0.0], 1.0).unwrap();
        let s = serde_json::to_string(&inst).unwrap();
        assert_eq!(s, r#"{"spins":2,"couplings":[[0,1,-1.0]],"fields":[0.0,0.0],"threshold":1.0,"constant":0.0}"#);
    }
}
