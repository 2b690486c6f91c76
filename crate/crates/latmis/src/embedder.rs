//! Iterative embedding of connected planar graphs into a triangular lattice.
//!
//! Every vertex becomes a tree of lattice sites (a cluster). The embedded part
//! always fills a triangle `q ≥ 0, r ≥ 0, q + r ≤ side`; clusters that still
//! have unembedded neighbours keep one site on the top side `q + r = side`,
//! at least two sites apart. A new vertex is attached to a contiguous run of
//! those sites from one or two fresh rows above, the other clusters being
//! copied straight up.

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::order::rooted_order;
use crate::planar::{embed_rooted, Embedding};
use crate::reduction::ClusterModel;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};

/// The six axial neighbour offsets of the triangular lattice.
pub const AXIAL_OFFSETS: [(i32, i32); 6] = [(1, 0), (1, -1), (0, -1), (-1, 0), (-1, 1), (0, 1)];

pub fn lattice_adjacent(a: (i32, i32), b: (i32, i32)) -> bool {
    AXIAL_OFFSETS.contains(&(b.0 - a.0, b.1 - a.1))
}

// Row coordinates: row y = q + r, x = q, so row y holds x = 0..=y.
fn axial(x: i32, y: i32) -> (i32, i32) {
    (x, y - x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutSite {
    pub q: i32,
    pub r: i32,
    pub cluster: usize,
    pub tau: i8,
    /// Sign pattern that realizes the layout with antiferromagnetic couplings
    /// only: `-1` products along intra-cluster links, `+1` across clusters.
    pub gauge: i8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkKind {
    Ferro,
    Antiferro,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutLink {
    pub a: usize,
    pub b: usize,
    pub kind: LinkKind,
}

/// State after one vertex insertion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Insertion {
    pub vertex: usize,
    /// Number of already embedded neighbours.
    pub attached: usize,
    pub side: usize,
    /// `(vertex, site)` for every eligible vertex, left to right on the top side.
    pub eligible: Vec<(usize, usize)>,
    /// Smallest gap between consecutive eligible sites.
    pub min_spacing: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterLayout {
    pub vertices: usize,
    pub side: usize,
    pub sites: Vec<LayoutSite>,
    pub links: Vec<LayoutLink>,
    /// Site ids per vertex; the first one is the representative.
    pub clusters: Vec<Vec<usize>>,
    pub order: Vec<usize>,
    pub history: Vec<Insertion>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutStats {
    pub side: usize,
    pub sites: usize,
    pub clusters: usize,
    pub max_cluster_size: usize,
}

impl ClusterLayout {
    pub fn stats(&self) -> LayoutStats {
        LayoutStats {
            side: self.side,
            sites: self.sites.len(),
            clusters: self.clusters.len(),
            max_cluster_size: self.clusters.iter().map(Vec::len).max().unwrap_or(0),
        }
    }

    pub fn coord(&self, site: usize) -> (i32, i32) {
        (self.sites[site].q, self.sites[site].r)
    }

    /// Cluster model with unit ferromagnetic intra links and unit
    /// antiferromagnetic inter links.
    pub fn cluster_model(&self) -> ClusterModel {
        let mut intra = Vec::new();
        let mut inter = Vec::new();
        for l in &self.links {
            let (a, b) = (l.a.min(l.b), l.a.max(l.b));
            match l.kind {
                LinkKind::Ferro => intra.push((a, b, 1.0)),
                LinkKind::Antiferro => inter.push((a, b, -1.0)),
            }
        }
        ClusterModel {
            spins: self.sites.len(),
            clusters: self.clusters.clone(),
            tau: self.sites.iter().map(|s| s.tau).collect(),
            intra,
            inter,
        }
    }

    /// Structural check against the source graph.
    pub fn validate(&self, g: &Graph) -> Result<()> {
        let bad = |m: String| Err(Error::EmbeddingOverflow(m));
        if self.clusters.len() != g.n() {
            return bad("cluster count differs from vertex count".into());
        }
        let mut seen = HashSet::new();
        for (i, s) in self.sites.iter().enumerate() {
            if s.q < 0 || s.r < 0 || (s.q + s.r) as usize > self.side {
                return bad(format!("site {i} outside the triangle"));
            }
            if !seen.insert((s.q, s.r)) {
                return bad(format!("site {i} occupied twice"));
            }
        }
        let mut edges = HashSet::new();
        let mut intra = vec![0usize; g.n()];
        for l in &self.links {
            if !lattice_adjacent(self.coord(l.a), self.coord(l.b)) {
                return bad(format!("link {}-{} is not a lattice edge", l.a, l.b));
            }
            let (ca, cb) = (self.sites[l.a].cluster, self.sites[l.b].cluster);
            let gauge = self.sites[l.a].gauge * self.sites[l.b].gauge;
            match l.kind {
                LinkKind::Ferro if ca == cb && gauge == -1 => intra[ca] += 1,
                LinkKind::Antiferro if ca != cb && g.has_edge(ca, cb) && gauge == 1 => {
                    if !edges.insert((ca.min(cb), ca.max(cb))) {
                        return bad(format!("edge ({ca}, {cb}) realized twice"));
                    }
                }
                _ => return bad(format!("link {}-{} is mislabeled", l.a, l.b)),
            }
        }
        if edges.len() != g.m() {
            return bad("some edges are not realized".into());
        }
        for (v, c) in self.clusters.iter().enumerate() {
            if c.is_empty() || intra[v] + 1 != c.len() || c.iter().any(|&s| self.sites[s].cluster != v) {
                return bad(format!("cluster {v} is not a tree"));
            }
        }
        self.cluster_model().check_structure()
    }
}

#[derive(Clone)]
struct Obj {
    v: usize,
    site: usize,
    x: i32,
    /// Unembedded neighbours served by this copy, left to right.
    pending: Vec<usize>,
}

/// Effect of inserting `v` on the eligible sequence: it attaches to the
/// copies `i..=j`; `left` and `right` are what stays pending on copies `i`
/// and `j` (for a single copy: the neighbours on either side of `v`).
struct Move {
    v: usize,
    i: usize,
    j: usize,
    left: Vec<usize>,
    right: Vec<usize>,
    pending: Vec<usize>,
}

impl Move {
    fn splits(&self) -> bool {
        self.i == self.j && !self.left.is_empty() && !self.right.is_empty()
    }
}

/// Rotation of `v` walked backwards from `start` (exclusive), keeping `keep`.
fn backwards(rot: &[usize], start: usize, keep: impl Fn(usize) -> bool) -> Vec<usize> {
    let k = rot.iter().position(|&u| u == start).expect("not a neighbour");
    (1..=rot.len()).map(|d| rot[(k + rot.len() - d) % rot.len()]).filter(|&u| keep(u)).collect()
}

fn plan_move(emb: &Embedding, placed: &[bool], front: &[(usize, &[usize])], v: usize) -> Option<Move> {
    let run: Vec<usize> = (0..front.len()).filter(|&m| front[m].1.contains(&v)).collect();
    let (&i, &j) = (run.first()?, run.last()?);
    let rot = &emb.rotation[v];
    if j - i + 1 != run.len() || run.len() != rot.iter().filter(|&&u| placed[u]).count() {
        return None;
    }
    let sa = front[i].0;
    // attached neighbours must appear around `v` in the order they sit on the top side
    let k = rot.iter().position(|&u| u == sa)?;
    let ccw: Vec<usize> = (0..rot.len()).map(|d| rot[(k + d) % rot.len()]).filter(|&u| placed[u]).collect();
    if ccw.iter().zip(i..=j).any(|(&u, m)| front[m].0 != u) {
        return None;
    }
    let (left, right) = if i == j {
        let p = front[i].1;
        let at = p.iter().position(|&u| u == v)?;
        (p[..at].to_vec(), p[at + 1..].to_vec())
    } else {
        let (pi, pj) = (front[i].1, front[j].1);
        if pi.last() != Some(&v) || pj.first() != Some(&v) || (i + 1..j).any(|m| front[m].1 != [v]) {
            return None;
        }
        (pi[..pi.len() - 1].to_vec(), pj[1..].to_vec())
    };
    let pending = backwards(rot, sa, |u| !placed[u]);
    Some(Move { v, i, j, left, right, pending })
}

struct Builder<'g> {
    g: &'g Graph,
    placed: Vec<bool>,
    xy: Vec<(i32, i32)>,
    at: HashMap<(i32, i32), usize>,
    sites: Vec<LayoutSite>,
    links: Vec<LayoutLink>,
    clusters: Vec<Vec<usize>>,
    top: i32,
    front: Vec<Obj>,
    history: Vec<Insertion>,
}

fn overflow<T>(m: impl Into<String>) -> Result<T> {
    Err(Error::EmbeddingOverflow(m.into()))
}

/// A cluster reaching the row under construction: its sites there, left to right.
struct Reach {
    v: usize,
    sites: Vec<usize>,
    pending: Vec<usize>,
}

impl<'g> Builder<'g> {
    fn new(g: &'g Graph) -> Self {
        Builder {
            g,
            placed: vec![false; g.n()],
            xy: Vec::new(),
            at: HashMap::new(),
            sites: Vec::new(),
            links: Vec::new(),
            clusters: vec![Vec::new(); g.n()],
            top: 0,
            front: Vec::new(),
            history: Vec::new(),
        }
    }

    fn front_view(&self) -> Vec<(usize, &[usize])> {
        self.front.iter().map(|o| (o.v, o.pending.as_slice())).collect()
    }

    fn add(&mut self, v: usize, x: i32, y: i32, gauge: i8) -> Result<usize> {
        if x < 0 || x > y || self.at.contains_key(&(x, y)) {
            return overflow(format!("cannot place a site at row {y}, column {x}"));
        }
        let id = self.sites.len();
        let (q, r) = axial(x, y);
        self.sites.push(LayoutSite { q, r, cluster: v, tau: 1, gauge });
        self.xy.push((x, y));
        self.at.insert((x, y), id);
        self.clusters[v].push(id);
        Ok(id)
    }

    fn link(&mut self, a: usize, b: usize, kind: LinkKind) -> Result<()> {
        let (pa, pb) = (self.xy[a], self.xy[b]);
        if !lattice_adjacent(axial(pa.0, pa.1), axial(pb.0, pb.1)) {
            return overflow(format!("sites {a} and {b} are not adjacent"));
        }
        self.links.push(LayoutLink { a, b, kind });
        Ok(())
    }

    /// Copy of `parent`'s cluster at `(x, y)`, linked ferromagnetically.
    fn grow(&mut self, parent: usize, x: i32, y: i32) -> Result<usize> {
        let s = self.sites[parent];
        let id = self.add(s.cluster, x, y, -s.gauge)?;
        self.link(parent, id, LinkKind::Ferro)?;
        Ok(id)
    }

    fn start(&mut self, v: usize, pending: Vec<usize>) -> Result<()> {
        let s = self.add(v, 0, 0, 1)?;
        self.placed[v] = true;
        if !pending.is_empty() {
            self.front.push(Obj { v, site: s, x: 0, pending });
        }
        self.record(v, 0)
    }

    fn lift(&mut self, o: &Obj, dx: i32, y: i32) -> Result<Reach> {
        let site = self.grow(o.site, o.x + dx, y)?;
        Ok(Reach { v: o.v, sites: vec![site], pending: o.pending.clone() })
    }

    fn insert(&mut self, mv: Move) -> Result<()> {
        let Move { v, i, j, left, right, pending } = mv;
        let split = i == j && !left.is_empty() && !right.is_empty();
        let front = std::mem::take(&mut self.front);
        let a = self.top + 1;
        let mut row: Vec<Reach> = Vec::new();
        for o in &front[..i] {
            row.push(self.lift(o, 0, a)?);
        }
        let mut tail = Vec::new();
        for o in &front[j + 1..] {
            tail.push(self.lift(o, 1, a)?);
        }
        let mut base = a;
        if split {
            let o = &front[i];
            let b = a + 1;
            let a0 = self.grow(o.site, o.x, a)?;
            let a1 = self.grow(o.site, o.x + 1, a)?;
            for r in row.iter_mut().chain(tail.iter_mut()) {
                let s = r.sites[0];
                let dx = i32::from(self.xy[s].0 > o.x);
                r.sites = vec![self.grow(s, self.xy[s].0 + dx, b)?];
            }
            let sl = self.grow(a0, o.x, b)?;
            let nv = self.add(v, o.x + 1, b, self.sites[a0].gauge)?;
            self.link(a0, nv, LinkKind::Antiferro)?;
            let sr = self.grow(a1, o.x + 2, b)?;
            row.push(Reach { v: o.v, sites: vec![sl], pending: left });
            row.push(Reach { v, sites: vec![nv], pending });
            row.push(Reach { v: o.v, sites: vec![sr], pending: right });
            base = b;
        } else if i == j {
            let o = &front[i];
            let (cx, vx) = if left.is_empty() { (o.x + 1, o.x) } else { (o.x, o.x + 1) };
            let nv = self.add(v, vx, a, self.sites[o.site].gauge)?;
            self.link(o.site, nv, LinkKind::Antiferro)?;
            let mut pair = vec![Reach { v, sites: vec![nv], pending }];
            let rest = if left.is_empty() { right } else { left };
            if !rest.is_empty() {
                let copy = self.grow(o.site, cx, a)?;
                pair.push(Reach { v: o.v, sites: vec![copy], pending: rest });
                if cx < vx {
                    pair.reverse();
                }
            }
            row.extend(pair);
        } else {
            let (oi, oj) = (&front[i], &front[j]);
            let copy_i = if left.is_empty() { None } else { Some(self.grow(oi.site, oi.x, a)?) };
            let lo = if copy_i.is_some() { oi.x + 1 } else { oi.x };
            let hi = if right.is_empty() { oj.x + 1 } else { oj.x };
            // gauge fixed by the first attachment, alternating along the row
            let g0 = self.sites[oi.site].gauge;
            let mut path = Vec::new();
            for x in lo..=hi {
                let sign = if (x - lo) % 2 == 0 { g0 } else { -g0 };
                let s = self.add(v, x, a, sign)?;
                if let Some(&prev) = path.last() {
                    self.link(prev, s, LinkKind::Ferro)?;
                }
                path.push(s);
            }
            let copy_j = if right.is_empty() { None } else { Some(self.grow(oj.site, oj.x + 1, a)?) };
            let vat = |x: i32| path[(x - lo) as usize];
            for (m, o) in front.iter().enumerate().take(j + 1).skip(i) {
                let options: Vec<(usize, usize)> = match (m == i, m == j) {
                    (true, _) if copy_i.is_some() => vec![(o.site, vat(lo)), (copy_i.unwrap(), vat(lo))],
                    (_, true) if copy_j.is_some() => vec![(o.site, vat(hi)), (copy_j.unwrap(), vat(hi))],
                    _ => vec![(o.site, vat(o.x)), (o.site, vat(o.x + 1))],
                };
                let Some(&(p, q)) = options.iter().find(|(p, q)| self.sites[*p].gauge == self.sites[*q].gauge) else {
                    return overflow(format!("no gauge-consistent attachment of {v} to {}", o.v));
                };
                self.link(p, q, LinkKind::Antiferro)?;
            }
            if let Some(c) = copy_i {
                row.push(Reach { v: oi.v, sites: vec![c], pending: left });
            }
            row.push(Reach { v, sites: path, pending });
            if let Some(c) = copy_j {
                row.push(Reach { v: oj.v, sites: vec![c], pending: right });
            }
        }
        row.extend(tail);
        row.retain(|r| !r.pending.is_empty());
        self.placed[v] = true;
        self.spread(row, base)?;
        let attached = self.g.neighbors(v).iter().filter(|&&u| self.placed[u]).count();
        self.record(v, attached)
    }

    /// Picks one site per reaching cluster, leftmost first with spacing two,
    /// adding rows above `y` until that is possible.
    fn spread(&mut self, mut row: Vec<Reach>, mut y: i32) -> Result<()> {
        let limit = y + 2 * row.len() as i32 + 2;
        loop {
            let mut prev = i32::MIN / 2;
            let mut xs = Vec::with_capacity(row.len());
            for r in &row {
                let (l, h) = (self.xy[r.sites[0]].0, self.xy[*r.sites.last().unwrap()].0);
                let x = l.max(prev + 2);
                if x > h {
                    xs.clear();
                    break;
                }
                xs.push(x);
                prev = x;
            }
            if xs.len() == row.len() {
                self.front = row
                    .into_iter()
                    .zip(xs)
                    .map(|(r, x)| {
                        let site = r.sites.iter().copied().find(|&s| self.xy[s].0 == x).unwrap();
                        Obj { v: r.v, site, x, pending: r.pending }
                    })
                    .collect();
                self.top = y;
                return Ok(());
            }
            if y >= limit {
                return overflow("no room to spread the top side");
            }
            y += 1;
            let mut prev = i32::MIN / 2;
            for r in row.iter_mut() {
                let (l, h) = (self.xy[r.sites[0]].0, self.xy[*r.sites.last().unwrap()].0);
                let x = l.max(prev + 2).min(h + 1);
                let parent = r.sites.iter().copied().filter(|&s| self.xy[s].0 <= x).last().unwrap();
                r.sites = vec![self.grow(parent, x, y)?];
                prev = x;
            }
        }
    }

    fn record(&mut self, v: usize, attached: usize) -> Result<()> {
        let spacing = self.front.windows(2).map(|w| (w[1].x - w[0].x) as usize).min();
        for o in &self.front {
            if self.xy[o.site] != (o.x, self.top) || self.sites[o.site].cluster != o.v {
                return overflow(format!("eligible vertex {} is off the top side", o.v));
            }
        }
        if spacing.is_some_and(|s| s < 2) {
            return overflow("eligible vertices closer than two sites");
        }
        let mut served: Vec<(usize, usize)> =
            self.front.iter().flat_map(|o| o.pending.iter().map(move |&u| (o.v, u))).collect();
        served.sort_unstable();
        let mut expected: Vec<(usize, usize)> = (0..self.g.n())
            .filter(|&s| self.placed[s])
            .flat_map(|s| self.g.neighbors(s).iter().filter(|&&u| !self.placed[u]).map(move |&u| (s, u)))
            .collect();
        expected.sort_unstable();
        if served != expected || self.front.iter().any(|o| o.pending.is_empty()) {
            return overflow("eligible set out of sync");
        }
        self.history.push(Insertion {
            vertex: v,
            attached,
            side: self.top as usize,
            eligible: self.front.iter().map(|o| (o.v, o.site)).collect(),
            min_spacing: spacing,
        });
        Ok(())
    }
}

/// Depth-first search for an insertion sequence that never splits a copy,
/// trying candidates in peel order first.
struct Planner<'a> {
    g: &'a Graph,
    emb: &'a Embedding,
    rank: Vec<usize>,
    placed: Vec<bool>,
    front: Vec<(usize, Vec<usize>)>,
    steps: Vec<usize>,
    dead: HashSet<(Vec<bool>, Vec<usize>)>,
    nodes: usize,
    budget: usize,
}

impl Planner<'_> {
    fn search(&mut self) -> bool {
        if self.steps.len() + 1 == self.g.n() {
            return true;
        }
        let key = (self.placed.clone(), self.front.iter().map(|o| o.0).collect());
        if self.nodes >= self.budget || self.dead.contains(&key) {
            return false;
        }
        self.nodes += 1;
        let g = self.g;
        let mut cands: Vec<usize> =
            (0..g.n()).filter(|&v| !self.placed[v] && g.neighbors(v).iter().any(|&u| self.placed[u])).collect();
        cands.sort_by_key(|&v| self.rank[v]);
        for v in cands {
            let view: Vec<(usize, &[usize])> = self.front.iter().map(|(u, p)| (*u, p.as_slice())).collect();
            let Some(mv) = plan_move(self.emb, &self.placed, &view, v) else { continue };
            if mv.splits() {
                continue;
            }
            let next = apply(&self.front, &mv);
            let saved = std::mem::replace(&mut self.front, next);
            self.placed[v] = true;
            self.steps.push(v);
            if self.search() {
                return true;
            }
            self.steps.pop();
            self.placed[v] = false;
            self.front = saved;
        }
        self.dead.insert(key);
        false
    }
}

fn apply(front: &[(usize, Vec<usize>)], mv: &Move) -> Vec<(usize, Vec<usize>)> {
    let mut out: Vec<(usize, Vec<usize>)> = front[..mv.i].to_vec();
    let (si, sj) = (front[mv.i].0, front[mv.j].0);
    out.extend([(si, mv.left.clone()), (mv.v, mv.pending.clone()), (sj, mv.right.clone())]);
    out.retain(|o| !o.1.is_empty());
    out.extend(front[mv.j + 1..].iter().cloned());
    out
}

/// Expanded-state budget of the insertion search, per root.
pub const PLANNER_BUDGET: usize = 20_000;
/// Number of roots tried before falling back to the plain peel order.
pub const PLANNER_ROOTS: usize = 8;

struct Plan {
    emb: Embedding,
    outer: Option<usize>,
    order: Vec<usize>,
}

fn plan(g: &Graph) -> Result<Plan> {
    let mut roots: Vec<usize> = (0..g.n()).collect();
    roots.sort_by_key(|&v| (g.degree(v), v));
    let mut fallback = None;
    let mut tried = 0;
    for &root in &roots {
        if tried == PLANNER_ROOTS {
            break;
        }
        let (emb, outer) = embed_rooted(g, root).ok_or(Error::NotPlanar)?;
        let Some(peel) = rooted_order(g, &emb, outer, root) else { continue };
        tried += 1;
        let mut rank = vec![0; g.n()];
        for (k, &v) in peel.iter().enumerate() {
            rank[v] = k;
        }
        let mut placed = vec![false; g.n()];
        placed[root] = true;
        let start = root_pending(&emb, outer, root);
        let mut p = Planner {
            g,
            emb: &emb,
            rank,
            placed,
            front: if start.is_empty() { Vec::new() } else { vec![(root, start)] },
            steps: Vec::new(),
            dead: HashSet::new(),
            nodes: 0,
            budget: PLANNER_BUDGET,
        };
        if p.search() {
            let order = std::iter::once(root).chain(p.steps.iter().copied()).collect();
            return Ok(Plan { emb, outer, order });
        }
        fallback.get_or_insert(Plan { emb, outer, order: peel });
    }
    fallback.ok_or_else(|| Error::EmbeddingOverflow("no root admits a peel order".into()))
}

/// Neighbours of the root, left to right, seen from the outer face.
fn root_pending(emb: &Embedding, outer: Option<usize>, root: usize) -> Vec<usize> {
    let rot = &emb.rotation[root];
    let Some(f) = outer else { return rot.clone() };
    let face = &emb.faces[f];
    let at = (0..face.len()).find(|&i| face[(i + 1) % face.len()] == root).expect("root on the outer face");
    let y = face[at];
    let k = rot.iter().position(|&u| u == y).unwrap();
    backwards(rot, rot[(k + 1) % rot.len()], |_| true)
}

/// Embeds a connected planar graph; see the module documentation.
pub fn embed_planar(g: &Graph) -> Result<ClusterLayout> {
    if g.n() == 0 {
        return Err(Error::Config("empty graph".into()));
    }
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let Plan { emb, outer, order } = plan(g)?;
    let root = order[0];
    let mut b = Builder::new(g);
    b.start(root, root_pending(&emb, outer, root))?;
    for &v in &order[1..] {
        let mv = plan_move(&emb, &b.placed, &b.front_view(), v)
            .ok_or_else(|| Error::EmbeddingOverflow(format!("vertex {v} cannot be attached")))?;
        b.insert(mv)?;
    }
    let layout = ClusterLayout {
        vertices: g.n(),
        side: b.top as usize,
        sites: b.sites,
        links: b.links,
        clusters: b.clusters,
        order,
        history: b.history,
    };
    layout.validate(g)?;
    Ok(layout)
}
