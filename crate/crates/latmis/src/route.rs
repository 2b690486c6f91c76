//! Lattice routing with a prescribed coupling parity.
//!
//! A route is a chain of fresh sites between two kept sites. It must not
//! touch any other kept site, so that the only new couplings are the bonds
//! along the chain, and the product of its bond signs is fixed by the gauge
//! signs at both ends.

use crate::hardware::{Coord, LatticeSpec};
use std::collections::{HashMap, HashSet, VecDeque};

/// Largest number of partial paths examined by the fallback search.
const SEARCH_BUDGET: usize = 200_000;

#[derive(Debug, Clone)]
pub(crate) struct Fabric {
    pub lattice: LatticeSpec,
    /// Sites a route may use.
    pub usable: HashSet<Coord>,
    /// Cluster and gauge sign of every kept site.
    pub kept: HashMap<Coord, (usize, i8)>,
    /// Kept sites whose gauge sign is not fixed yet; the first route that
    /// reaches one fixes it.
    pub free: HashSet<Coord>,
}

/// Inclusive bounding box.
pub(crate) type Window = (Coord, Coord);

pub(crate) fn window(points: &[Coord], margin: i32) -> Window {
    let lo = [0, 1].map(|k| points.iter().map(|p| p[k]).min().unwrap_or(0) - margin);
    let hi = [0, 1].map(|k| points.iter().map(|p| p[k]).max().unwrap_or(0) + margin);
    (lo, hi)
}

fn inside(w: &Window, c: Coord) -> bool {
    (0..2).all(|k| w.0[k] <= c[k] && c[k] <= w.1[k])
}

impl Fabric {
    pub fn new(lattice: LatticeSpec) -> Self {
        Fabric { lattice, usable: HashSet::new(), kept: HashMap::new(), free: HashSet::new() }
    }

    fn sign(&self, a: Coord, b: Coord) -> i8 {
        self.lattice.sign(a, b)
    }

    fn kept_neighbours(&self, c: Coord) -> Vec<Coord> {
        self.lattice.neighbours(c).filter(|n| self.kept.contains_key(n)).collect()
    }

    /// Whether fresh site `u` can follow `prev` on a route. Returns
    /// `Some(Some(t))` when `u` touches target `t` and must end the route.
    fn step(&self, u: Coord, prev: Coord, targets: &HashSet<Coord>, w: &Window) -> Option<Option<Coord>> {
        if !inside(w, u) || !self.usable.contains(&u) || self.kept.contains_key(&u) {
            return None;
        }
        let others: Vec<Coord> = self.kept_neighbours(u).into_iter().filter(|&k| k != prev).collect();
        match others[..] {
            [] => Some(None),
            [t] if targets.contains(&t) => Some(Some(t)),
            _ => None,
        }
    }

    fn closes(&self, last: Coord, tau: i8, t: Coord, inter: bool) -> bool {
        if self.free.contains(&t) {
            return true;
        }
        let want = self.kept[&t].1 * if inter { -1 } else { 1 };
        tau * self.sign(last, t) == want
    }

    fn valid(&self, path: &[Coord]) -> bool {
        let inner = &path[1..path.len() - 1];
        let set: HashSet<Coord> = inner.iter().copied().collect();
        if set.len() != inner.len() {
            return false;
        }
        for (i, &a) in inner.iter().enumerate() {
            for &b in inner.iter().skip(i + 2) {
                if self.lattice.adjacent(a, b) {
                    return false;
                }
            }
        }
        true
    }

    /// Shortest route from any of `sources` to any of `targets` inside `w`.
    ///
    /// With `inter` the chain realizes a coupling between clusters, which
    /// must be antiferromagnetic in the gauge; otherwise it extends a cluster
    /// and must be ferromagnetic in the gauge. Returns the full path,
    /// endpoints included.
    pub fn route(&self, sources: &[Coord], targets: &[Coord], inter: bool, w: &Window) -> Option<Vec<Coord>> {
        let tset: HashSet<Coord> = targets.iter().copied().collect();
        let mut srcs: Vec<Coord> = sources.to_vec();
        srcs.sort_by_key(|c| (c[1], c[0]));
        let mut pred: HashMap<(Coord, i8), (Coord, i8)> = HashMap::new();
        let mut queue = VecDeque::new();
        let mut found = None;
        'outer: for &s in &srcs {
            let ts = self.kept[&s].1;
            for u in self.lattice.neighbours(s) {
                let Some(end) = self.step(u, s, &tset, w) else { continue };
                let tau = ts * self.sign(s, u);
                if pred.contains_key(&(u, tau)) {
                    continue;
                }
                pred.insert((u, tau), (s, 0));
                match end {
                    Some(t) if self.closes(u, tau, t, inter) => {
                        found = Some(((u, tau), t));
                        break 'outer;
                    }
                    Some(_) => {}
                    None => queue.push_back((u, tau)),
                }
            }
        }
        while found.is_none() {
            let Some((x, tx)) = queue.pop_front() else { break };
            for u in self.lattice.neighbours(x) {
                let Some(end) = self.step(u, x, &tset, w) else { continue };
                let tau = tx * self.sign(x, u);
                if pred.contains_key(&(u, tau)) {
                    continue;
                }
                pred.insert((u, tau), (x, tx));
                match end {
                    Some(t) if self.closes(u, tau, t, inter) => {
                        found = Some(((u, tau), t));
                        break;
                    }
                    Some(_) => {}
                    None => queue.push_back((u, tau)),
                }
            }
        }
        let ((mut c, mut tau), t) = found?;
        let mut path = vec![t, c];
        loop {
            let (p, tp) = pred[&(c, tau)];
            path.push(p);
            if tp == 0 {
                break;
            }
            (c, tau) = (p, tp);
        }
        path.reverse();
        if self.valid(&path) {
            return Some(path);
        }
        self.search(&srcs, &tset, inter, w, path.len() + 6)
    }

    /// Depth-first search over self-avoiding routes, shortest first.
    fn search(&self, srcs: &[Coord], targets: &HashSet<Coord>, inter: bool, w: &Window, max_len: usize) -> Option<Vec<Coord>> {
        let mut budget = SEARCH_BUDGET;
        for limit in 3..=max_len {
            for &s in srcs {
                let mut path = vec![s];
                if let Some(p) = self.dfs(&mut path, self.kept[&s].1, targets, inter, w, limit, &mut budget) {
                    return Some(p);
                }
                if budget == 0 {
                    return None;
                }
            }
        }
        None
    }

    #[allow(clippy::too_many_arguments)]
    fn dfs(
        &self,
        path: &mut Vec<Coord>,
        tau: i8,
        targets: &HashSet<Coord>,
        inter: bool,
        w: &Window,
        limit: usize,
        budget: &mut usize,
    ) -> Option<Vec<Coord>> {
        if *budget == 0 || path.len() + 1 >= limit {
            return None;
        }
        *budget -= 1;
        let x = *path.last().unwrap();
        for u in self.lattice.neighbours(x) {
            let Some(end) = self.step(u, x, targets, w) else { continue };
            if path[1..].contains(&u) || path[1..(path.len() - 1).max(1)].iter().any(|&p| self.lattice.adjacent(p, u)) {
                continue;
            }
            let tu = tau * self.sign(x, u);
            path.push(u);
            match end {
                Some(t) => {
                    if self.closes(u, tu, t, inter) {
                        let mut out = path.clone();
                        out.push(t);
                        return Some(out);
                    }
                }
                None => {
                    if let Some(p) = self.dfs(path, tu, targets, inter, w, limit, budget) {
                        return Some(p);
                    }
                }
            }
            path.pop();
        }
        None
    }

    /// Marks the interior of `path` as kept by `cluster`, with gauge signs
    /// propagated from the start.
    pub fn commit(&mut self, path: &[Coord], cluster: usize, inter: bool) {
        let mut tau = self.kept[&path[0]].1;
        self.free.remove(&path[0]);
        let n = path.len();
        for k in 1..n - 1 {
            tau *= self.sign(path[k - 1], path[k]);
            self.kept.insert(path[k], (cluster, tau));
        }
        let t = path[n - 1];
        if self.free.remove(&t) {
            let sign = tau * self.sign(path[n - 2], t) * if inter { -1 } else { 1 };
            self.kept.get_mut(&t).unwrap().1 = sign;
        }
    }
}

/// Union-find over lattice sites.
#[derive(Debug, Default, Clone)]
pub(crate) struct Components {
    parent: HashMap<Coord, Coord>,
}

impl Components {
    pub fn find(&mut self, c: Coord) -> Coord {
        let p = *self.parent.entry(c).or_insert(c);
        if p == c {
            return c;
        }
        let r = self.find(p);
        self.parent.insert(c, r);
        r
    }

    pub fn union(&mut self, a: Coord, b: Coord) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent.insert(ra, rb);
        }
    }
}
