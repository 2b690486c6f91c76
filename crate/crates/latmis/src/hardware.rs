//! Fixed-coupling lattices programmed only through local fields.
//!
//! A qubit is taken out of a lattice by polarizing it with a strong field and
//! shifting the fields of its neighbours. Patterned square lattices built
//! this way simulate lattices with switchable couplings, or host a cluster
//! layout directly.

use crate::embedder::{embed_planar, ClusterLayout, LayoutLink};
use crate::graph::Graph;
use crate::route::{window, Components, Fabric};
use crate::error::{Error, Result};
use crate::ising::IsingInstance;
use crate::reduction::{build_cluster_hamiltonian, ClusterModel, Variant};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

/// Version of the sign patterns below, recorded in every program.
pub const PATTERN_VERSION: u32 = 1;

/// Lattice site `[x, y]`; square lattices use plain grid coordinates,
/// triangular ones axial coordinates.
pub type Coord = [i32; 2];

fn polarization_margin(inst: &IsingInstance) -> f64 {
    if inst.threshold > 0.0 {
        inst.threshold
    } else {
        inst.min_abs_coupling().unwrap_or(1.0)
    }
}

/// Removes spin `i` by polarization: `h_i = J + Σ|J_ik|` and `h_k -= J_ik`
/// on every neighbour that is still present.
pub fn delete_qubit(inst: &IsingInstance, i: usize) -> Result<IsingInstance> {
    delete_qubits(inst, &[i])
}

/// Deletes several spins at once. The result is the same as deleting them one
/// by one in any order.
///
/// The stored constant grows by the polarizing fields plus the couplings
/// between deleted pairs, so that energies with every deleted spin at `+1`
/// match the instance with those spins removed.
pub fn delete_qubits(inst: &IsingInstance, sites: &[usize]) -> Result<IsingInstance> {
    let mut batch = BTreeSet::new();
    for &i in sites {
        if i >= inst.spins {
            return Err(Error::VertexOutOfRange { vertex: i, n: inst.spins });
        }
        if inst.deleted.contains(&i) || !batch.insert(i) {
            return Err(Error::AlreadyDeleted(i));
        }
    }
    let margin = polarization_margin(inst);
    let adj = inst.adjacency();
    let mut out = inst.clone();
    for &i in &batch {
        let p = margin + adj[i].iter().map(|&(_, j)| j.abs()).sum::<f64>();
        out.fields[i] = p;
        out.constant += p;
        for &(k, j) in &adj[i] {
            if inst.deleted.contains(&k) || (batch.contains(&k) && k < i) {
                out.constant += j;
            } else if !batch.contains(&k) {
                out.fields[k] -= j;
            }
        }
    }
    out.deleted.extend(batch);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternId {
    /// Square lattice, half of all plaquettes frustrated; simulates a
    /// triangular lattice with switchable antiferromagnetic links.
    Fig6,
    /// The simulated triangular lattice itself, all couplings antiferromagnetic.
    TriSim,
    /// Fully frustrated square lattice simulating a square lattice whose links
    /// can be ferromagnetic, antiferromagnetic or severed.
    SqSim,
    /// Square lattice where every plaquette has one antiferromagnetic and
    /// three ferromagnetic bonds, for direct embedding.
    Direct,
    /// Square lattice with pseudo-random bond signs drawn from `seed`.
    /// Experimental.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Geometry {
    Triangular,
    Square,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Working,
    Auxiliary,
    Control,
    Deleted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub pattern: PatternId,
    pub geometry: Geometry,
    pub version: u32,
    /// Sign seed of the `Random` pattern.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub seed: u64,
}

fn is_zero(x: &u64) -> bool {
    *x == 0
}

const SQUARE_STEPS: [Coord; 4] = [[1, 0], [0, 1], [-1, 0], [0, -1]];
const AXIAL_STEPS: [Coord; 6] = [[1, 0], [1, -1], [0, -1], [-1, 0], [-1, 1], [0, 1]];

fn add(a: Coord, b: Coord) -> Coord {
    [a[0] + b[0], a[1] + b[1]]
}

fn sub(a: Coord, b: Coord) -> Coord {
    [a[0] - b[0], a[1] - b[1]]
}

/// Position inside the 4x2 unit cell of the `Fig6` pattern, whose lattice
/// vectors are (4, 0) and (2, 2).
fn fig6_local(c: Coord) -> Coord {
    let b = c[1].div_euclid(2);
    let x = c[0] - 2 * b;
    [x.rem_euclid(4), c[1] - 2 * b]
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Coset of the `SqSim` cell lattice spanned by (5, 1) and (-1, 5).
fn sqsim_class(c: Coord) -> i32 {
    (c[0] + 21 * c[1]).rem_euclid(26)
}

// Per link: auxiliary sites, the control on the ferromagnetic route, the
// control on the antiferromagnetic route. East link first, then north.
const SQSIM_LINKS: [([Coord; 4], Coord, Coord); 2] = [
    ([[1, 0], [2, 0], [3, 1], [4, 1]], [3, 0], [2, 1]),
    ([[0, 1], [0, 2], [-1, 3], [-1, 4]], [0, 3], [-1, 2]),
];

impl LatticeSpec {
    pub fn new(pattern: PatternId) -> Self {
        let geometry = if pattern == PatternId::TriSim { Geometry::Triangular } else { Geometry::Square };
        LatticeSpec { pattern, geometry, version: PATTERN_VERSION, seed: 0 }
    }

    /// The `Random` pattern with bond signs drawn from `seed`.
    pub fn random(seed: u64) -> Self {
        LatticeSpec { seed, ..LatticeSpec::new(PatternId::Random) }
    }

    pub fn steps(&self) -> &'static [Coord] {
        match self.geometry {
            Geometry::Square => &SQUARE_STEPS,
            Geometry::Triangular => &AXIAL_STEPS,
        }
    }

    pub fn adjacent(&self, a: Coord, b: Coord) -> bool {
        self.steps().contains(&sub(b, a))
    }

    pub fn neighbours(&self, a: Coord) -> impl Iterator<Item = Coord> + '_ {
        self.steps().iter().map(move |&d| add(a, d))
    }

    /// Extent of the unit cell, used to size certification patches.
    pub fn cell_extent(&self) -> i32 {
        match self.pattern {
            PatternId::Fig6 => 4,
            PatternId::SqSim => 5,
            PatternId::Direct | PatternId::Random => 3,
            PatternId::TriSim => 1,
        }
    }

    /// Fixed sign of the coupling between adjacent sites `a` and `b`.
    pub fn sign(&self, a: Coord, b: Coord) -> i8 {
        assert!(self.adjacent(a, b), "{a:?} and {b:?} are not lattice neighbours");
        if self.geometry == Geometry::Triangular {
            return -1;
        }
        let (lo, horizontal) = if a[1] == b[1] { (if a[0] < b[0] { a } else { b }, true) } else { (if a[1] < b[1] { a } else { b }, false) };
        match self.pattern {
            PatternId::Fig6 => {
                let l = fig6_local(lo);
                let ferro = if horizontal { l == [0, 0] } else { l == [3, 0] };
                if ferro { 1 } else { -1 }
            }
            PatternId::SqSim => {
                let k = sqsim_class(lo);
                let afm = if horizontal { k == sqsim_class([2, 1]) } else { k == sqsim_class([-1, 2]) };
                if afm { -1 } else { 1 }
            }
            PatternId::Direct => {
                if !horizontal && (lo[0] + lo[1]).rem_euclid(2) == 0 {
                    -1
                } else {
                    1
                }
            }
            PatternId::Random => {
                let key = (lo[0] as u32 as u64) << 33 | (lo[1] as u32 as u64) << 1 | u64::from(horizontal);
                if splitmix(self.seed ^ splitmix(key)) >> 63 == 1 {
                    -1
                } else {
                    1
                }
            }
            PatternId::TriSim => unreachable!(),
        }
    }

    /// Role of a site in the unit cell of a simulating pattern.
    pub fn role(&self, c: Coord) -> Role {
        match self.pattern {
            PatternId::Fig6 => match fig6_local(c) {
                [0, 0] => Role::Working,
                [1, 0] | [2, 0] => Role::Auxiliary,
                [3, 0] | [0, 1] | [2, 1] => Role::Control,
                _ => Role::Deleted,
            },
            PatternId::SqSim => {
                let k = sqsim_class(c);
                if k == 0 {
                    return Role::Working;
                }
                for (aux, f, a) in SQSIM_LINKS {
                    if aux.iter().any(|&x| sqsim_class(x) == k) {
                        return Role::Auxiliary;
                    }
                    if sqsim_class(f) == k || sqsim_class(a) == k {
                        return Role::Control;
                    }
                }
                Role::Deleted
            }
            PatternId::TriSim => Role::Working,
            PatternId::Direct | PatternId::Random => Role::Auxiliary,
        }
    }

    /// Elementary cycles (plaquettes or triangles) with lowest corner in the
    /// box `[0, width) x [0, height)`.
    pub fn elementary_cycles(&self, width: i32, height: i32) -> Vec<Vec<Coord>> {
        let mut out = Vec::new();
        for y in 0..height {
            for x in 0..width {
                let p = [x, y];
                out.push(match self.geometry {
                    Geometry::Square => vec![p, add(p, [1, 0]), add(p, [1, 1]), add(p, [0, 1])],
                    Geometry::Triangular => vec![p, add(p, [1, 0]), add(p, [0, 1])],
                });
            }
        }
        out
    }

    /// True when the cycle has an odd number of antiferromagnetic bonds.
    pub fn is_frustrated(&self, cycle: &[Coord]) -> bool {
        let afm = (0..cycle.len()).filter(|&i| self.sign(cycle[i], cycle[(i + 1) % cycle.len()]) < 0).count();
        afm % 2 == 1
    }

    /// `(frustrated, total)` elementary cycles over the given box.
    pub fn frustration(&self, width: i32, height: i32) -> (usize, usize) {
        let cycles = self.elementary_cycles(width, height);
        (cycles.iter().filter(|c| self.is_frustrated(c)).count(), cycles.len())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HwSite {
    pub coord: Coord,
    pub role: Role,
    pub field: f64,
    /// Cluster owning this site when it carries part of a layout.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster: Option<usize>,
    /// Gauge sign; `1` on sites without a cluster.
    pub tau: i8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeEntry {
    pub site: usize,
    pub cluster: usize,
    pub tau: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardwareProgram {
    pub lattice: LatticeSpec,
    pub threshold: f64,
    /// Constant dropped from the stored Hamiltonian.
    pub constant: f64,
    pub sites: Vec<HwSite>,
    pub deleted: Vec<usize>,
    pub clusters: usize,
    /// Working sites by cluster; the first entry of each cluster is its
    /// representative and decides the decoded value.
    pub decode: Vec<DecodeEntry>,
    /// Cluster pairs joined by a link.
    pub edges: Vec<(usize, usize)>,
    /// Side of the occupied square after each insertion, when built iteratively.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub growth: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProgramStats {
    pub sites: usize,
    pub deleted: usize,
    pub working: usize,
    pub width: usize,
    pub height: usize,
}

impl HardwareProgram {
    pub fn index(&self) -> HashMap<Coord, usize> {
        self.sites.iter().enumerate().map(|(i, s)| (s.coord, i)).collect()
    }

    pub fn kept(&self) -> Vec<bool> {
        let mut k = vec![true; self.sites.len()];
        for &d in &self.deleted {
            k[d] = false;
        }
        k
    }

    /// Every lattice bond between two program sites, with unit magnitude.
    pub fn bonds(&self) -> Vec<(usize, usize, f64)> {
        lattice_bonds(&self.lattice, &self.sites.iter().map(|s| s.coord).collect::<Vec<_>>())
    }

    pub fn stats(&self) -> ProgramStats {
        let span = |k: usize| {
            let lo = self.sites.iter().map(|s| s.coord[k]).min();
            let hi = self.sites.iter().map(|s| s.coord[k]).max();
            lo.zip(hi).map_or(0, |(a, b)| (b - a + 1) as usize)
        };
        ProgramStats {
            sites: self.sites.len(),
            deleted: self.deleted.len(),
            working: self.sites.iter().filter(|s| s.role == Role::Working).count(),
            width: span(0),
            height: span(1),
        }
    }

    /// The full lattice Hamiltonian, deleted spins included.
    pub fn instance(&self) -> IsingInstance {
        let mut inst =
            IsingInstance::new(self.sites.len(), self.bonds(), self.sites.iter().map(|s| s.field).collect(), self.threshold)
                .expect("program bonds are well formed");
        inst.constant = self.constant;
        inst.deleted = self.deleted.iter().copied().collect();
        inst
    }

    /// Hamiltonian on the non-deleted spins, with deleted neighbours fixed at
    /// `+1`. Returns the instance and the program index of each of its spins.
    pub fn reduced(&self) -> (IsingInstance, Vec<usize>) {
        let kept = self.kept();
        let ids: Vec<usize> = (0..self.sites.len()).filter(|&i| kept[i]).collect();
        let mut pos = vec![usize::MAX; self.sites.len()];
        for (k, &i) in ids.iter().enumerate() {
            pos[i] = k;
        }
        let mut fields: Vec<f64> = ids.iter().map(|&i| self.sites[i].field).collect();
        let mut couplings = Vec::new();
        for (a, b, j) in self.bonds() {
            match (kept[a], kept[b]) {
                (true, true) => couplings.push((pos[a], pos[b], j)),
                (true, false) => fields[pos[a]] += j,
                (false, true) => fields[pos[b]] += j,
                _ => {}
            }
        }
        (IsingInstance::new(ids.len(), couplings, fields, self.threshold).expect("well formed"), ids)
    }

    /// Selected clusters of a full-lattice configuration.
    pub fn decode_config(&self, config: &[i8]) -> Vec<usize> {
        let mut seen = vec![false; self.clusters];
        let mut out = Vec::new();
        for e in &self.decode {
            if !std::mem::replace(&mut seen[e.cluster], true) && e.tau * config[e.site] == -1 {
                out.push(e.cluster);
            }
        }
        out.sort_unstable();
        out
    }

    /// Expands a configuration of [`HardwareProgram::reduced`] to the full
    /// lattice, deleted spins at `+1`.
    pub fn expand(&self, ids: &[usize], config: &[i8]) -> Vec<i8> {
        let mut full = vec![1; self.sites.len()];
        for (k, &i) in ids.iter().enumerate() {
            full[i] = config[k];
        }
        full
    }

    /// Rebuilds the fields from the cluster structure and compares.
    pub fn check(&self) -> Result<()> {
        let mut draft = Draft::new(self.lattice);
        for s in &self.sites {
            draft.put(s.coord, s.role, None);
        }
        let kept = self.kept();
        for (i, s) in self.sites.iter().enumerate() {
            if kept[i] {
                let Some(c) = s.cluster else { return Err(Error::PatternMismatch(format!("site {i} has no cluster"))) };
                draft.own(s.coord, c)?;
            }
        }
        draft.reps = vec![None; self.clusters];
        for e in &self.decode {
            if draft.reps[e.cluster].is_none() {
                draft.reps[e.cluster] = Some((self.sites[e.site].coord, e.tau));
            }
        }
        let fresh = draft.finish(self.threshold, self.growth.clone())?;
        let same = fresh.sites.len() == self.sites.len()
            && fresh.deleted == self.deleted
            && fresh.edges == self.edges
            && fresh.sites.iter().zip(&self.sites).all(|(a, b)| (a.field - b.field).abs() < 1e-9 && a.tau == b.tau);
        if same {
            Ok(())
        } else {
            Err(Error::PatternMismatch("program fields disagree with its cluster structure".into()))
        }
    }
}

fn lattice_bonds(spec: &LatticeSpec, coords: &[Coord]) -> Vec<(usize, usize, f64)> {
    let index: HashMap<Coord, usize> = coords.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let mut out = Vec::new();
    for (i, &c) in coords.iter().enumerate() {
        for &d in &spec.steps()[..spec.steps().len() / 2] {
            if let Some(&k) = index.get(&add(c, d)) {
                out.push((i.min(k), i.max(k), f64::from(spec.sign(c, add(c, d)))));
            }
        }
    }
    out
}

/// Program under construction: sites with roles, the cluster owning each
/// non-deleted site and a representative per cluster.
pub(crate) struct Draft {
    pub lattice: LatticeSpec,
    /// Keyed by `(y, x)` so iteration gives row-major order.
    pub sites: BTreeMap<(i32, i32), (Role, Option<usize>)>,
    pub reps: Vec<Option<(Coord, i8)>>,
}

impl Draft {
    pub fn new(lattice: LatticeSpec) -> Self {
        Draft { lattice, sites: BTreeMap::new(), reps: Vec::new() }
    }

    pub fn put(&mut self, c: Coord, role: Role, owner: Option<usize>) {
        self.sites.insert((c[1], c[0]), (role, owner));
    }

    pub fn own(&mut self, c: Coord, cluster: usize) -> Result<()> {
        let Some(entry) = self.sites.get_mut(&(c[1], c[0])) else {
            return Err(Error::PatternMismatch(format!("site {c:?} outside the program")));
        };
        match entry.1 {
            Some(o) if o != cluster => Err(Error::PatternMismatch(format!("site {c:?} claimed by clusters {o} and {cluster}"))),
            _ => {
                entry.1 = Some(cluster);
                Ok(())
            }
        }
    }

    /// Propagates gauge signs from the representatives, derives the cluster
    /// Hamiltonian on the owned sites and deletes everything else.
    pub fn finish(self, threshold: f64, growth: Vec<usize>) -> Result<HardwareProgram> {
        let coords: Vec<Coord> = self.sites.keys().map(|&(y, x)| [x, y]).collect();
        let roles: Vec<Role> = self.sites.values().map(|s| s.0).collect();
        let owner: Vec<Option<usize>> = self.sites.values().map(|s| s.1).collect();
        let n = coords.len();
        let index: HashMap<Coord, usize> = coords.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let bonds = lattice_bonds(&self.lattice, &coords);
        let mut adj = vec![Vec::new(); n];
        for &(a, b, j) in &bonds {
            adj[a].push((b, j));
            adj[b].push((a, j));
        }
        let clusters = self.reps.len();
        let mut tau = vec![0i8; n];
        let mut members = vec![Vec::new(); clusters];
        for (c, rep) in self.reps.iter().enumerate() {
            let Some((coord, t)) = *rep else { return Err(Error::TreeViolation(c)) };
            let Some(&r) = index.get(&coord).filter(|&&r| owner[r] == Some(c)) else {
                return Err(Error::TreeViolation(c));
            };
            tau[r] = t;
            members[c].push(r);
            let mut queue = VecDeque::from([r]);
            while let Some(a) = queue.pop_front() {
                for &(b, j) in &adj[a] {
                    if owner[b] == Some(c) && tau[b] == 0 {
                        tau[b] = tau[a] * j as i8;
                        members[c].push(b);
                        queue.push_back(b);
                    }
                }
            }
        }
        if let Some(i) = (0..n).find(|&i| owner[i].is_some() && tau[i] == 0) {
            return Err(Error::TreeViolation(owner[i].unwrap()));
        }
        let kept: Vec<usize> = (0..n).filter(|&i| owner[i].is_some()).collect();
        let mut pos = vec![usize::MAX; n];
        for (k, &i) in kept.iter().enumerate() {
            pos[i] = k;
        }
        let mut intra = Vec::new();
        let mut inter = Vec::new();
        let mut edges = BTreeSet::new();
        for &(a, b, j) in &bonds {
            if let (Some(ca), Some(cb)) = (owner[a], owner[b]) {
                if ca == cb {
                    intra.push((pos[a], pos[b], j));
                } else {
                    inter.push((pos[a], pos[b], j));
                    edges.insert((ca.min(cb), ca.max(cb)));
                }
            }
        }
        let cm = ClusterModel {
            spins: kept.len(),
            clusters: members.iter().map(|m| m.iter().map(|&i| pos[i]).collect()).collect(),
            tau: kept.iter().map(|&i| tau[i]).collect(),
            intra,
            inter,
        };
        let mut fields = vec![0.0; n];
        let mut constant = 0.0;
        if !kept.is_empty() {
            let ham = build_cluster_hamiltonian(&cm, threshold, Variant::Representative)?;
            for (k, &i) in kept.iter().enumerate() {
                fields[i] = ham.fields[k];
            }
            constant = ham.constant;
        }
        let full = IsingInstance::new(n, bonds, fields, threshold)?;
        let dropped: Vec<usize> = (0..n).filter(|&i| owner[i].is_none()).collect();
        let full = delete_qubits(&full, &dropped)?;
        let mut decode = Vec::new();
        for (c, m) in members.iter().enumerate() {
            for (k, &i) in m.iter().enumerate() {
                if k == 0 || roles[i] == Role::Working {
                    decode.push(DecodeEntry { site: i, cluster: c, tau: tau[i] });
                }
            }
        }
        let sites = (0..n)
            .map(|i| HwSite {
                coord: coords[i],
                role: roles[i],
                field: full.fields[i],
                cluster: owner[i],
                tau: if tau[i] == 0 { 1 } else { tau[i] },
            })
            .collect();
        Ok(HardwareProgram {
            lattice: self.lattice,
            threshold,
            constant: constant + full.constant,
            sites,
            deleted: dropped,
            clusters,
            decode,
            edges: edges.into_iter().collect(),
            growth,
        })
    }
}

fn fig6_origin(q: i32, r: i32) -> Coord {
    [4 * q + 2 * r, 2 * r]
}

/// Compiles a triangular layout onto the `Fig6` square pattern.
///
/// Each layout site becomes a working qubit with two auxiliary qubits; each
/// of its three forward links runs through one control qubit, which is kept
/// when the link is used and deleted otherwise. Only the unit cells of
/// occupied layout sites are part of the program.
pub fn compile_simulated_triangular(layout: &ClusterLayout) -> Result<HardwareProgram> {
    let lattice = LatticeSpec::new(PatternId::Fig6);
    let side = layout.side as i32;
    let mut cell_of = HashMap::new();
    for (s, site) in layout.sites.iter().enumerate() {
        if site.q < 0 || site.r < 0 || site.q + site.r > side {
            return Err(Error::PatternMismatch(format!("site {s} lies outside the layout triangle")));
        }
        if cell_of.insert((site.q, site.r), s).is_some() {
            return Err(Error::PatternMismatch(format!("two layout sites at ({}, {})", site.q, site.r)));
        }
    }
    let mut draft = Draft::new(lattice);
    for &(q, r) in cell_of.keys() {
        let o = fig6_origin(q, r);
        for ly in 0..2 {
            for lx in 0..4 {
                let c = add(o, [lx, ly]);
                draft.put(c, lattice.role(c), None);
            }
        }
    }
    let origin = |s: usize| fig6_origin(layout.sites[s].q, layout.sites[s].r);
    for (s, site) in layout.sites.iter().enumerate() {
        draft.own(origin(s), site.cluster)?;
    }
    for link in &layout.links {
        let (mut s, mut t) = (link.a, link.b);
        let mut d = [layout.sites[t].q - layout.sites[s].q, layout.sites[t].r - layout.sites[s].r];
        if !matches!(d, [1, 0] | [0, 1] | [-1, 1]) {
            std::mem::swap(&mut s, &mut t);
            d = [-d[0], -d[1]];
        }
        let (cs, ct) = (layout.sites[s].cluster, layout.sites[t].cluster);
        let (o, p) = (origin(s), origin(t));
        let path = match d {
            [1, 0] => [(add(o, [1, 0]), cs), (add(o, [2, 0]), cs), (add(o, [3, 0]), cs)],
            [0, 1] => [(add(o, [1, 0]), cs), (add(o, [2, 0]), cs), (add(o, [2, 1]), cs)],
            [-1, 1] => [(add(o, [0, 1]), cs), (add(p, [2, 0]), ct), (add(p, [1, 0]), ct)],
            _ => return Err(Error::PatternMismatch(format!("link {}-{} joins non-adjacent sites", link.a, link.b))),
        };
        for (c, cl) in path {
            draft.own(c, cl)?;
        }
    }
    draft.reps = layout.clusters.iter().map(|m| m.first().map(|&s| (origin(s), layout.sites[s].gauge))).collect();
    draft.finish(1.0, Vec::new())
}

/// Lattice spacings per layout row or column in direct embeddings.
pub const DIRECT_SCALE: i32 = 3;

/// Free rows and columns around the terminals of a direct embedding.
pub const DIRECT_BORDER: i32 = 2;

/// Square position of layout site `(q, r)` in a direct embedding.
pub fn direct_terminal(q: i32, r: i32) -> Coord {
    [DIRECT_BORDER + DIRECT_SCALE * q, DIRECT_BORDER + DIRECT_SCALE * (q + r)]
}

/// Embeds a connected planar graph directly on the `Direct` pattern.
pub fn compile_direct_square(g: &Graph) -> Result<HardwareProgram> {
    compile_direct_layout(&embed_planar(g)?)
}

/// Realizes a triangular layout on the `Direct` pattern, following its
/// insertion order.
///
/// Layout site `(x, y)` in row coordinates sits at `(3x, 3y)`, shifted by a
/// free border, in a square of side `3 * side` plus the border. Every layout link becomes a chain of auxiliary qubits
/// whose bond signs multiply to an antiferromagnetic effective coupling; each
/// plaquette being frustrated, a chain can always pick that parity by going
/// around one plaquette or the other. All unused qubits are deleted.
pub fn compile_direct_layout(layout: &ClusterLayout) -> Result<HardwareProgram> {
    route_layout(layout, LatticeSpec::new(PatternId::Direct))
}

/// Like [`compile_direct_layout`] on a lattice with random bond signs.
/// Routes only exist where the random signs leave enough frustrated
/// plaquettes to fix their parity. Experimental.
pub fn compile_random_layout(layout: &ClusterLayout, seed: u64) -> Result<HardwareProgram> {
    route_layout(layout, LatticeSpec::random(seed))
}

fn route_layout(layout: &ClusterLayout, lattice: LatticeSpec) -> Result<HardwareProgram> {
    let side = DIRECT_SCALE * layout.side as i32 + 2 * DIRECT_BORDER;
    let mut fabric = Fabric::new(lattice);
    for y in 0..=side {
        for x in 0..=side {
            fabric.usable.insert([x, y]);
        }
    }
    let term = |s: usize| direct_terminal(layout.sites[s].q, layout.sites[s].r);
    for (s, site) in layout.sites.iter().enumerate() {
        if !fabric.usable.contains(&term(s)) || fabric.kept.insert(term(s), (site.cluster, site.gauge)).is_some() {
            return Err(Error::PatternMismatch(format!("layout site {s} does not fit the square")));
        }
        fabric.free.insert(term(s));
    }
    let mut comps = Components::default();
    let cluster = |s: usize| layout.sites[s].cluster;
    let mut links: Vec<&LayoutLink> = layout.links.iter().collect();
    links.sort_by_key(|l| cluster(l.a) != cluster(l.b));
    for l in links {
        let (ta, tb) = (term(l.a), term(l.b));
        let (ca, cb) = (cluster(l.a), cluster(l.b));
        let inter = ca != cb;
        let mut path = None;
        for margin in [1, 2, 3, 6, side] {
            let w = window(&[ta, tb], margin);
            let near = |c: &Coord, cl: usize, root: Option<Coord>, comps: &mut Components| {
                fabric.kept[c].0 == cl && (0..2).all(|k| w.0[k] <= c[k] && c[k] <= w.1[k]) && root.map_or(true, |r| comps.find(*c) == r)
            };
            let (ra, rb) = (Some(comps.find(ta)), Some(comps.find(tb)));
            let mut src: Vec<Coord> = fabric.kept.keys().filter(|c| near(c, ca, ra, &mut comps)).copied().collect();
            let mut dst: Vec<Coord> = fabric.kept.keys().filter(|c| near(c, cb, rb, &mut comps)).copied().collect();
            src.sort_by_key(|c| (c[1], c[0]));
            dst.sort_by_key(|c| (c[1], c[0]));
            path = fabric.route(&src, &dst, inter, &w);
            if path.is_some() {
                break;
            }
        }
        let Some(path) = path else {
            return Err(Error::EmbeddingOverflow(format!("no route for layout link {}-{}", l.a, l.b)));
        };
        fabric.commit(&path, ca, inter);
        let joined = if inter { path.len() - 1 } else { path.len() };
        for k in 1..joined {
            comps.union(path[k - 1], path[k]);
        }
    }
    let mut draft = Draft::new(lattice);
    let terminals: HashSet<Coord> = (0..layout.sites.len()).map(term).collect();
    for y in 0..=side {
        for x in 0..=side {
            let c = [x, y];
            let owner = fabric.kept.get(&c).map(|k| k.0);
            let role = match owner {
                _ if terminals.contains(&c) => Role::Working,
                Some(_) => Role::Auxiliary,
                None => Role::Deleted,
            };
            draft.put(c, role, owner);
        }
    }
    draft.reps = layout.clusters.iter().map(|m| m.first().map(|&s| (term(s), fabric.kept[&term(s)].1))).collect();
    let growth = layout.history.iter().map(|h| DIRECT_SCALE as usize * h.side).collect();
    draft.finish(1.0, growth)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkSign {
    Ferro,
    Antiferro,
    Off,
}

/// A link between neighbouring cells `a` and `b` (given as `[column, row]`)
/// of a simulated square lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SquareLink {
    pub a: [usize; 2],
    pub b: [usize; 2],
    pub sign: LinkSign,
}

/// Spin glass on a `width x height` square lattice with programmable links.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquareProblem {
    pub width: usize,
    pub height: usize,
    /// Row-major field per cell.
    pub fields: Vec<f64>,
    pub links: Vec<SquareLink>,
}

fn sqsim_origin(i: usize, j: usize) -> Coord {
    let (i, j) = (i as i32, j as i32);
    [5 * i - j, i + 5 * j]
}

/// Compiles a square spin glass onto the `SqSim` pattern.
///
/// Every link has two control qubits on the two routes around a frustrated
/// plaquette; deleting one of them fixes the sign of the effective coupling,
/// deleting both severs it. Each compiled link is certified afterwards.
pub fn compile_simulated_square(p: &SquareProblem) -> Result<HardwareProgram> {
    let lattice = LatticeSpec::new(PatternId::SqSim);
    let cells = p.width * p.height;
    if p.fields.len() != cells {
        return Err(Error::PatternMismatch(format!("{} fields for {cells} cells", p.fields.len())));
    }
    let mut chosen: HashMap<([usize; 2], usize), LinkSign> = HashMap::new();
    for l in &p.links {
        let (a, b) = if (l.a[1], l.a[0]) < (l.b[1], l.b[0]) { (l.a, l.b) } else { (l.b, l.a) };
        let dir = match (b[0] as i64 - a[0] as i64, b[1] as i64 - a[1] as i64) {
            (1, 0) => 0,
            (0, 1) => 1,
            _ => return Err(Error::PatternMismatch(format!("cells {:?} and {:?} are not neighbours", l.a, l.b))),
        };
        if b[0] >= p.width || b[1] >= p.height {
            return Err(Error::PatternMismatch(format!("cell {b:?} outside the lattice")));
        }
        if chosen.insert((a, dir), l.sign).is_some() {
            return Err(Error::PatternMismatch(format!("link {:?}-{:?} given twice", l.a, l.b)));
        }
    }
    let mut kept: HashMap<Coord, Role> = HashMap::new();
    let mut lo = [i32::MAX; 2];
    let mut hi = [i32::MIN; 2];
    for j in 0..p.height {
        for i in 0..p.width {
            let o = sqsim_origin(i, j);
            kept.insert(o, Role::Working);
            for (dir, (aux, fc, ac)) in SQSIM_LINKS.iter().enumerate() {
                for &c in aux.iter().chain([fc, ac]) {
                    for k in 0..2 {
                        lo[k] = lo[k].min(o[k] + c[k]);
                        hi[k] = hi[k].max(o[k] + c[k]);
                    }
                }
                let sign = chosen.get(&([i, j], dir)).copied().unwrap_or(LinkSign::Off);
                if sign != LinkSign::Off {
                    for &c in aux {
                        kept.insert(add(o, c), Role::Auxiliary);
                    }
                    let ctrl = if sign == LinkSign::Ferro { *fc } else { *ac };
                    kept.insert(add(o, ctrl), Role::Control);
                }
            }
        }
    }
    let mut coords = Vec::new();
    for y in lo[1]..=hi[1] {
        for x in lo[0]..=hi[0] {
            coords.push([x, y]);
        }
    }
    let index: HashMap<Coord, usize> = coords.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let mut fields = vec![0.0; coords.len()];
    for j in 0..p.height {
        for i in 0..p.width {
            fields[index[&sqsim_origin(i, j)]] = p.fields[j * p.width + i];
        }
    }
    let full = IsingInstance::new(coords.len(), lattice_bonds(&lattice, &coords), fields, 1.0)?;
    let dropped: Vec<usize> = (0..coords.len()).filter(|i| !kept.contains_key(&coords[*i])).collect();
    let full = delete_qubits(&full, &dropped)?;
    let mut decode = Vec::new();
    let sites: Vec<HwSite> = coords
        .iter()
        .enumerate()
        .map(|(n, &c)| {
            let role = kept.get(&c).copied().unwrap_or_else(|| lattice.role(c));
            HwSite { coord: c, role, field: full.fields[n], cluster: None, tau: 1 }
        })
        .collect();
    for j in 0..p.height {
        for i in 0..p.width {
            let site = index[&sqsim_origin(i, j)];
            decode.push(DecodeEntry { site, cluster: j * p.width + i, tau: 1 });
        }
    }
    let mut edges: Vec<(usize, usize)> = chosen
        .iter()
        .filter(|(_, &s)| s != LinkSign::Off)
        .map(|(&(a, dir), _)| {
            let c = a[1] * p.width + a[0];
            (c, if dir == 0 { c + 1 } else { c + p.width })
        })
        .collect();
    edges.sort_unstable();
    let prog = HardwareProgram {
        lattice,
        threshold: 1.0,
        constant: full.constant,
        sites,
        deleted: dropped,
        clusters: cells,
        decode,
        edges,
        growth: Vec::new(),
    };
    let opts = Certify::for_lattice(&lattice);
    for (&(a, dir), &sign) in &chosen {
        let b = if dir == 0 { [a[0] + 1, a[1]] } else { [a[0], a[1] + 1] };
        let (sa, sb) = (index[&sqsim_origin(a[0], a[1])], index[&sqsim_origin(b[0], b[1])]);
        let want = match sign {
            LinkSign::Ferro => EffectiveCoupling::Ferro,
            LinkSign::Antiferro => EffectiveCoupling::Antiferro,
            LinkSign::Off => EffectiveCoupling::None,
        };
        let got = certify_effective_coupling(&prog, sa, sb, &opts)?;
        if got != want {
            return Err(Error::PatternMismatch(format!("link {a:?}-{b:?} certified {got:?}, wanted {want:?}")));
        }
    }
    Ok(prog)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EffectiveCoupling {
    Ferro,
    Antiferro,
    None,
}

/// Patch used to certify an effective coupling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certify {
    /// Chebyshev radius around either working site, in lattice spacings.
    pub radius: i32,
    /// Largest number of free spins enumerated.
    pub budget: usize,
}

impl Certify {
    /// Two unit cells around the pair.
    pub fn for_lattice(spec: &LatticeSpec) -> Self {
        Certify { radius: 2 * spec.cell_extent(), budget: 20 }
    }
}

/// Keeps the free sites that lie on some route between `a` and `b`: those
/// reachable from the pair, minus dangling branches, which never change the
/// clamped minima by more than a constant.
fn prune(spec: &LatticeSpec, sites: &[HwSite], a: usize, b: usize, free: Vec<usize>) -> Vec<usize> {
    let mut alive: HashMap<Coord, usize> = free.iter().map(|&i| (sites[i].coord, i)).collect();
    let ends = [sites[a].coord, sites[b].coord];
    let mut seen: BTreeSet<usize> = BTreeSet::new();
    let mut stack: Vec<Coord> = ends.to_vec();
    while let Some(c) = stack.pop() {
        for n in spec.neighbours(c) {
            if let Some(&i) = alive.get(&n) {
                if seen.insert(i) {
                    stack.push(n);
                }
            }
        }
    }
    alive.retain(|_, i| seen.contains(i));
    loop {
        let leaves: Vec<Coord> = alive
            .keys()
            .filter(|&&c| spec.neighbours(c).filter(|n| alive.contains_key(n) || ends.contains(n)).count() <= 1)
            .copied()
            .collect();
        if leaves.is_empty() {
            break;
        }
        for c in leaves {
            alive.remove(&c);
        }
    }
    let mut out: Vec<usize> = alive.into_values().collect();
    out.sort_unstable();
    out
}

/// Sign of the effective coupling between working sites `a` and `b`.
///
/// The patch holds the non-deleted fabric around the pair that lies on a
/// route between them. On compiled layouts it is limited to sites of the two
/// clusters involved; otherwise other working sites are left out. The bare
/// couplings of the patch are minimized over its free spins with `a` and `b` clamped to each of their four joint values; the
/// combination `(E+- + E-+ - E++ - E--) / 4` is the effective coupling.
pub fn certify_effective_coupling(prog: &HardwareProgram, a: usize, b: usize, opts: &Certify) -> Result<EffectiveCoupling> {
    let kept = prog.kept();
    let near = |c: Coord, d: Coord| (c[0] - d[0]).abs().max((c[1] - d[1]).abs()) <= opts.radius;
    let (ca, cb) = (prog.sites[a].coord, prog.sites[b].coord);
    let owners = prog.sites[a].cluster.zip(prog.sites[b].cluster);
    let free: Vec<usize> = (0..prog.sites.len())
        .filter(|&i| {
            let s = &prog.sites[i];
            i != a
                && i != b
                && kept[i]
                && (near(s.coord, ca) || near(s.coord, cb))
                && match owners {
                    Some((x, y)) => s.cluster == Some(x) || s.cluster == Some(y),
                    None => s.role != Role::Working,
                }
        })
        .collect();
    let free = prune(&prog.lattice, &prog.sites, a, b, free);
    if free.len() > opts.budget {
        return Err(Error::PatchTooLarge { size: free.len() + 2, budget: opts.budget + 2 });
    }
    let mut patch = vec![a, b];
    patch.extend(&free);
    let coords: Vec<Coord> = patch.iter().map(|&i| prog.sites[i].coord).collect();
    let bonds = lattice_bonds(&prog.lattice, &coords);
    let m = free.len();
    let clamp = |sa: i8, sb: i8| {
        let mut best = f64::INFINITY;
        let mut s = vec![1i8; m + 2];
        s[0] = sa;
        s[1] = sb;
        for mask in 0u64..1 << m {
            for k in 0..m {
                s[k + 2] = if mask >> k & 1 == 1 { -1 } else { 1 };
            }
            let e: f64 = bonds.iter().map(|&(x, y, j)| -j * f64::from(s[x] * s[y])).sum();
            best = best.min(e);
        }
        best
    };
    let j = (clamp(1, -1) + clamp(-1, 1) - clamp(1, 1) - clamp(-1, -1)) / 4.0;
    Ok(if j > 1e-9 {
        EffectiveCoupling::Ferro
    } else if j < -1e-9 {
        EffectiveCoupling::Antiferro
    } else {
        EffectiveCoupling::None
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fig6_is_half_frustrated() {
        let spec = LatticeSpec::new(PatternId::Fig6);
        assert_eq!(spec.frustration(8, 8), (32, 64));
    }

    #[test]
    fn sqsim_cell_has_thirteen_used_sites() {
        let spec = LatticeSpec::new(PatternId::SqSim);
        let used = (0..26).filter(|&k| spec.role([k, 0]) != Role::Deleted).count();
        assert_eq!(used, 13);
    }
}
