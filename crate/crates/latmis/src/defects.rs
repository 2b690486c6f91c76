//! Coupling defects and rerouting around them.
//!
//! A defective coupling takes one of its two qubits out of service. The
//! program is then rebuilt without those qubits: broken cluster trees are
//! reconnected and missing inter-cluster links routed again, each new chain
//! carrying the same effective sign as the one it replaces.

use crate::error::{Error, Result};
use crate::hardware::{Coord, Draft, HardwareProgram, Role};
use crate::route::{window, Components, Fabric};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};

/// Measured value of one lattice coupling, by program site index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RealizedCoupling {
    pub edge: [usize; 2],
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DefectKind {
    WeakCoupling,
    WrongSign,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Defect {
    pub edge: [usize; 2],
    pub kind: DefectKind,
    /// Site taken out of service: the lower index of the edge.
    pub site: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DefectMap {
    pub realized: Vec<RealizedCoupling>,
    pub defects: Vec<Defect>,
}

impl DefectMap {
    /// Defect map that takes the given sites out of service directly.
    pub fn from_sites(sites: impl IntoIterator<Item = usize>) -> Self {
        let defects = sites
            .into_iter()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .map(|s| Defect { edge: [s, s], kind: DefectKind::WeakCoupling, site: s, value: 0.0 })
            .collect();
        DefectMap { realized: Vec::new(), defects }
    }

    pub fn implicated(&self) -> BTreeSet<usize> {
        self.defects.iter().map(|d| d.site).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.defects.is_empty()
    }
}

/// Compares realized couplings with the nominal pattern signs of `prog`.
///
/// An edge whose realized sign differs from the pattern is `WrongSign`;
/// otherwise it is `WeakCoupling` when its magnitude is below `j`. Entries
/// that are not lattice bonds of the program are ignored, and bonds without
/// an entry are taken as nominal.
pub fn classify_defects(prog: &HardwareProgram, realized: &[RealizedCoupling], j: f64) -> DefectMap {
    let mut defects = Vec::new();
    for r in realized {
        let [a, b] = r.edge;
        let (Some(sa), Some(sb)) = (prog.sites.get(a), prog.sites.get(b)) else { continue };
        if a == b || !prog.lattice.adjacent(sa.coord, sb.coord) {
            continue;
        }
        let nominal = f64::from(prog.lattice.sign(sa.coord, sb.coord));
        let kind = if r.value * nominal <= 0.0 && r.value != 0.0 {
            DefectKind::WrongSign
        } else if r.value.abs() < j {
            DefectKind::WeakCoupling
        } else {
            continue;
        };
        defects.push(Defect { edge: [a.min(b), a.max(b)], kind, site: a.min(b), value: r.value });
    }
    defects.sort_by(|x, y| x.edge.cmp(&y.edge).then(x.kind.cmp(&y.kind)));
    DefectMap { realized: realized.to_vec(), defects }
}

fn bbox(points: &[Coord]) -> (Coord, Coord) {
    window(points, 0)
}

/// Rebuilds `prog` without the implicated sites of `defects`.
///
/// Non-working leaves left dangling by a removed site are dropped. Each
/// cluster is then reconnected to the part holding its representative (or,
/// if that site is gone, its largest part), and every cluster pair that lost
/// its link gets a new one. Routes grow outward from the damaged area in
/// widening windows. Fails with `RoutingFailed` naming the clusters of the
/// first link that cannot be restored.
pub fn reroute(prog: &HardwareProgram, defects: &DefectMap) -> Result<HardwareProgram> {
    let bad: BTreeSet<usize> = defects.implicated().into_iter().filter(|&s| s < prog.sites.len()).collect();
    if bad.is_empty() {
        return Ok(prog.clone());
    }
    let kept = prog.kept();
    let mut fabric = Fabric::new(prog.lattice);
    let mut role: HashMap<Coord, Role> = HashMap::new();
    for (i, s) in prog.sites.iter().enumerate() {
        if bad.contains(&i) {
            continue;
        }
        fabric.usable.insert(s.coord);
        if kept[i] {
            let Some(c) = s.cluster else {
                return Err(Error::PatternMismatch(format!("kept site {i} belongs to no cluster")));
            };
            fabric.kept.insert(s.coord, (c, s.tau));
            role.insert(s.coord, s.role);
        }
    }
    drop_dangling(&mut fabric, &role);

    let all: Vec<Coord> = prog.sites.iter().map(|s| s.coord).collect();
    let whole = bbox(&all);
    let span = (whole.1[0] - whole.0[0]).max(whole.1[1] - whole.0[1]);
    let margins = [2, 4, 8, span.max(8)];

    let mut reps = vec![None; prog.clusters];
    for c in 0..prog.clusters {
        let mut comps = Components::default();
        let mine: Vec<Coord> = sorted(fabric.kept.iter().filter(|(_, k)| k.0 == c).map(|(&x, _)| x));
        for &x in &mine {
            for n in prog.lattice.neighbours(x) {
                if fabric.kept.get(&n).is_some_and(|k| k.0 == c) {
                    comps.union(x, n);
                }
            }
        }
        let mut parts: BTreeMap<Coord, Vec<Coord>> = BTreeMap::new();
        for &x in &mine {
            parts.entry(comps.find(x)).or_default().push(x);
        }
        let old_rep = prog.decode.iter().find(|d| d.cluster == c).map(|d| prog.sites[d.site].coord);
        let main_root = match old_rep.filter(|r| fabric.kept.contains_key(r)) {
            Some(r) => comps.find(r),
            None => {
                let Some((&root, _)) = parts.iter().max_by_key(|(r, p)| (p.len(), std::cmp::Reverse(**r))) else {
                    return Err(Error::RoutingFailed(c, c));
                };
                root
            }
        };
        let mut main = parts.remove(&main_root).unwrap_or_default();
        let rep = old_rep
            .filter(|r| fabric.kept.contains_key(r))
            .or_else(|| main.iter().copied().find(|x| role[x] == Role::Working))
            .unwrap_or(main[0]);
        reps[c] = Some((rep, fabric.kept[&rep].1));
        for (_, part) in parts {
            let mut path = None;
            for &m in &margins {
                let mut pts = main.clone();
                pts.extend(&part);
                let w = window(&[bbox(&pts).0, bbox(&pts).1], m);
                path = fabric.route(&main, &part, false, &w);
                if path.is_some() {
                    break;
                }
            }
            let Some(path) = path else { return Err(Error::RoutingFailed(c, c)) };
            fabric.commit(&path, c, false);
            main.extend(&path[1..path.len() - 1]);
            main.extend(part);
            main = sorted(main.into_iter());
        }
    }

    for &(a, b) in &prog.edges {
        let linked = fabric.kept.iter().any(|(x, k)| k.0 == a && prog.lattice.neighbours(*x).any(|n| fabric.kept.get(&n).is_some_and(|kn| kn.0 == b)));
        if linked {
            continue;
        }
        let sa: Vec<Coord> = sorted(fabric.kept.iter().filter(|(_, k)| k.0 == a).map(|(&x, _)| x));
        let sb: Vec<Coord> = sorted(fabric.kept.iter().filter(|(_, k)| k.0 == b).map(|(&x, _)| x));
        let mut path = None;
        for &m in &margins {
            let w = window(&[bbox(&sa).0, bbox(&sa).1, bbox(&sb).0, bbox(&sb).1], m);
            path = fabric.route(&sa, &sb, true, &w);
            if path.is_some() {
                break;
            }
        }
        let Some(path) = path else { return Err(Error::RoutingFailed(a, b)) };
        fabric.commit(&path, a, true);
    }

    let mut draft = Draft::new(prog.lattice);
    for s in &prog.sites {
        match fabric.kept.get(&s.coord) {
            Some(&(c, _)) => draft.put(s.coord, role.get(&s.coord).copied().unwrap_or(Role::Auxiliary), Some(c)),
            None => draft.put(s.coord, Role::Deleted, None),
        }
    }
    draft.reps = reps;
    draft.finish(prog.threshold, prog.growth.clone())
}

fn sorted(it: impl Iterator<Item = Coord>) -> Vec<Coord> {
    let mut v: Vec<Coord> = it.collect();
    v.sort_by_key(|c| (c[1], c[0]));
    v
}

/// Removes non-working sites that hang off a single site of their own
/// cluster, until none is left.
fn drop_dangling(fabric: &mut Fabric, role: &HashMap<Coord, Role>) {
    loop {
        let leaves: Vec<Coord> = fabric
            .kept
            .iter()
            .filter(|(x, k)| {
                let ns: Vec<usize> = fabric.lattice.neighbours(**x).filter_map(|n| fabric.kept.get(&n).map(|kn| kn.0)).collect();
                role[*x] != Role::Working && ns.len() <= 1 && ns.iter().all(|&c| c == k.0)
            })
            .map(|(&x, _)| x)
            .collect();
        if leaves.is_empty() {
            return;
        }
        for x in leaves {
            fabric.kept.remove(&x);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub density: f64,
    pub trials: usize,
    pub successes: usize,
}

impl SweepRow {
    pub fn rate(&self) -> f64 {
        if self.trials == 0 {
            return 0.0;
        }
        self.successes as f64 / self.trials as f64
    }
}

/// Random stream of one sweep trial.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

fn site_draws(sites: usize, seed: u64, trial: usize) -> Vec<f64> {
    let mut rng = trial_rng(seed, trial);
    (0..sites).map(|_| rng.gen::<f64>()).collect()
}

/// Defect set of sweep trial `trial` at `density`.
pub fn random_defects(prog: &HardwareProgram, density: f64, seed: u64, trial: usize) -> DefectMap {
    let draws = site_draws(prog.sites.len(), seed, trial);
    DefectMap::from_sites((0..draws.len()).filter(|&i| draws[i] < density))
}

/// Monte Carlo success rate of [`reroute`] when each site of `prog` is
/// defective independently with probability `density`.
///
/// Trial `t` draws one uniform number per site from its own stream, and a
/// site is defective at density `p` when its number is below `p`. The same
/// numbers serve every density, so defect sets grow with the density.
pub fn defect_sweep(prog: &HardwareProgram, densities: &[f64], trials: usize, seed: u64) -> Vec<SweepRow> {
    let outcomes: Vec<Vec<bool>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let draws = site_draws(prog.sites.len(), seed, t);
            densities
                .iter()
                .map(|&p| {
                    let defects = DefectMap::from_sites((0..draws.len()).filter(|&i| draws[i] < p));
                    reroute(prog, &defects).is_ok()
                })
                .collect()
        })
        .collect();
    densities
        .iter()
        .enumerate()
        .map(|(k, &density)| SweepRow { density, trials, successes: outcomes.iter().filter(|o| o[k]).count() })
        .collect()
}

/// True when success rates never increase with density.
pub fn is_monotone(rows: &[SweepRow]) -> bool {
    let mut sorted = rows.to_vec();
    sorted.sort_by(|a, b| a.density.total_cmp(&b.density));
    sorted.windows(2).all(|w| w[1].rate() <= w[0].rate())
}

/// Sweep table as `density,trials,successes` CSV.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("density,trials,successes\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.density, r.trials, r.successes));
    }
    out
}
