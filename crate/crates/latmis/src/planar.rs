//! Planarity testing with combinatorial embedding extraction.
//!
//! Each biconnected block is embedded by path addition (Demoucron, Malgrange
//! and Pertuiset); block rotations are then spliced at cut vertices and the
//! result is certified with Euler's formula.

use crate::graph::Graph;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet, VecDeque};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Embedding {
    /// Cyclic order of neighbours around each vertex.
    pub rotation: Vec<Vec<usize>>,
    /// Faces as cyclic vertex sequences; every directed edge lies on exactly one face.
    pub faces: Vec<Vec<usize>>,
}

impl Embedding {
    /// Rotation successor of `u` around `v`.
    pub fn next_around(&self, v: usize, u: usize) -> usize {
        let r = &self.rotation[v];
        let i = r.iter().position(|&x| x == u).expect("not a neighbour");
        r[(i + 1) % r.len()]
    }

    fn from_rotation(rotation: Vec<Vec<usize>>) -> Self {
        let mut succ: HashMap<(usize, usize), usize> = HashMap::new();
        for (v, r) in rotation.iter().enumerate() {
            for i in 0..r.len() {
                succ.insert((v, r[i]), r[(i + 1) % r.len()]);
            }
        }
        let mut seen = HashSet::new();
        let mut faces = Vec::new();
        for (u, r) in rotation.iter().enumerate() {
            for &v in r {
                if seen.contains(&(u, v)) {
                    continue;
                }
                let mut face = Vec::new();
                let (mut a, mut b) = (u, v);
                while seen.insert((a, b)) {
                    face.push(a);
                    let c = succ[&(b, a)];
                    a = b;
                    b = c;
                }
                faces.push(face);
            }
        }
        Embedding { rotation, faces }
    }
}

/// True iff `g` is planar.
pub fn is_planar(g: &Graph) -> bool {
    embed(g).is_some()
}

/// A planar combinatorial embedding of `g`, or `None` when `g` is not planar.
pub fn embed(g: &Graph) -> Option<Embedding> {
    if g.n() >= 3 && g.m() > 3 * (g.n() - 2) {
        return None;
    }
    let mut rotation = vec![Vec::new(); g.n()];
    for block in biconnected_blocks(g) {
        let rot = if block.len() == 1 {
            let (u, v) = block[0];
            HashMap::from([(u, vec![v]), (v, vec![u])])
        } else {
            embed_block(&block)?
        };
        let mut keys: Vec<_> = rot.keys().copied().collect();
        keys.sort_unstable();
        for v in keys {
            rotation[v].extend_from_slice(&rot[&v]);
        }
    }
    let emb = Embedding::from_rotation(rotation);
    let (label, count) = g.components();
    let mut v = vec![0i64; count];
    let mut e = vec![0i64; count];
    let mut f = vec![0i64; count];
    for x in 0..g.n() {
        v[label[x]] += 1;
    }
    for &(a, _) in g.edges() {
        e[label[a]] += 1;
    }
    for face in &emb.faces {
        f[label[face[0]]] += 1;
    }
    let euler_ok = (0..count).all(|c| e[c] == 0 || v[c] - e[c] + f[c] == 2);
    assert!(euler_ok, "path addition produced a non-planar rotation system");
    Some(emb)
}

/// Planar embedding with `root` on the outer face in which every block lies
/// in the outer face of the block through which it is reached from `root`.
/// Returns the embedding and the index of its outer face.
pub fn embed_rooted(g: &Graph, root: usize) -> Option<(Embedding, Option<usize>)> {
    if g.n() >= 3 && g.m() > 3 * (g.n() - 2) {
        return None;
    }
    let n = g.n();
    let blocks = biconnected_blocks(g);
    let mut rots = Vec::with_capacity(blocks.len());
    let mut of: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (b, block) in blocks.iter().enumerate() {
        let rot = if block.len() == 1 {
            let (u, v) = block[0];
            HashMap::from([(u, vec![v]), (v, vec![u])])
        } else {
            embed_block(block)?
        };
        let mut vs: Vec<usize> = rot.keys().copied().collect();
        vs.sort_unstable();
        for v in vs {
            of[v].push(b);
        }
        rots.push(rot);
    }
    let mut rotation: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut queued = vec![false; blocks.len()];
    // (block, attachment vertex, neighbour of the attachment after which the block is spliced)
    let mut queue: VecDeque<(usize, usize, Option<usize>)> = VecDeque::new();
    if let Some(&b0) = of[root].first() {
        queued[b0] = true;
        queue.push_back((b0, root, None));
    }
    let mut outer_dart = None;
    while let Some((b, c, after)) = queue.pop_front() {
        let rot = &rots[b];
        let mut full = vec![Vec::new(); n];
        for (&v, r) in rot {
            full[v] = r.clone();
        }
        let local = Embedding::from_rotation(full);
        let darts = |f: &Vec<usize>| (0..f.len()).map(move |i| (f[i], f[(i + 1) % f.len()])).collect::<Vec<_>>();
        let face = local
            .faces
            .iter()
            .filter(|f| f.contains(&c))
            .max_by_key(|f| f.len())
            .expect("attachment vertex lies on a face")
            .clone();
        let fd = darts(&face);
        let y = fd.iter().find(|d| d.1 == c).unwrap().0;
        let rc = &rot[&c];
        let k = rc.iter().position(|&x| x == y).unwrap();
        let spliced: Vec<usize> = (1..=rc.len()).map(|d| rc[(k + d) % rc.len()]).collect();
        match after {
            None => {
                rotation[c] = spliced;
                outer_dart = Some((y, c));
            }
            Some(x) => {
                let i = rotation[c].iter().position(|&z| z == x).unwrap();
                rotation[c].splice(i + 1..i + 1, spliced);
            }
        }
        let mut vs: Vec<usize> = rot.keys().copied().filter(|&v| v != c).collect();
        vs.sort_unstable();
        for &v in &vs {
            rotation[v] = rot[&v].clone();
        }
        vs.push(c);
        let mut inner = local.faces.clone();
        inner.sort_by_key(|f| std::cmp::Reverse(f.len()));
        for v in vs {
            // vertices off the outer face take their children into their largest face
            let x = fd
                .iter()
                .chain(inner.iter().flat_map(|f| darts(f)).collect::<Vec<_>>().iter())
                .find(|d| d.1 == v)
                .unwrap()
                .0;
            for &ob in &of[v] {
                if !queued[ob] {
                    queued[ob] = true;
                    queue.push_back((ob, v, Some(x)));
                }
            }
        }
    }
    let emb = Embedding::from_rotation(rotation);
    let outer = outer_dart.map(|(a, b)| {
        emb.faces
            .iter()
            .position(|f| (0..f.len()).any(|i| f[i] == a && f[(i + 1) % f.len()] == b))
            .unwrap()
    });
    Some((emb, outer))
}

/// Edge sets of the biconnected blocks (Hopcroft–Tarjan).
pub fn biconnected_blocks(g: &Graph) -> Vec<Vec<(usize, usize)>> {
    let n = g.n();
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut time = 0;
    let mut blocks = Vec::new();
    let mut estack: Vec<(usize, usize)> = Vec::new();
    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        disc[root] = time;
        low[root] = time;
        time += 1;
        // frames: (vertex, parent, next neighbour index)
        let mut stack = vec![(root, usize::MAX, 0usize)];
        while let Some(&mut (v, parent, ref mut idx)) = stack.last_mut() {
            if *idx < g.degree(v) {
                let w = g.neighbors(v)[*idx];
                *idx += 1;
                if disc[w] == usize::MAX {
                    estack.push((v, w));
                    disc[w] = time;
                    low[w] = time;
                    time += 1;
                    stack.push((w, v, 0));
                } else if w != parent && disc[w] < disc[v] {
                    estack.push((v, w));
                    low[v] = low[v].min(disc[w]);
                }
            } else {
                stack.pop();
                if let Some(&(p, _, _)) = stack.last() {
                    low[p] = low[p].min(low[v]);
                    if low[v] >= disc[p] {
                        let mut block = Vec::new();
                        while let Some(e) = estack.pop() {
                            block.push((e.0.min(e.1), e.0.max(e.1)));
                            if e == (p, v) {
                                break;
                            }
                        }
                        block.sort_unstable();
                        blocks.push(block);
                    }
                }
            }
        }
    }
    blocks
}

fn embed_block(edges: &[(usize, usize)]) -> Option<HashMap<usize, Vec<usize>>> {
    let mut adj: HashMap<usize, Vec<usize>> = HashMap::new();
    for &(u, v) in edges {
        adj.entry(u).or_default().push(v);
        adj.entry(v).or_default().push(u);
    }
    for a in adj.values_mut() {
        a.sort_unstable();
    }
    let key = |u: usize, v: usize| (u.min(v), u.max(v));

    let cycle = find_cycle(&adj, edges[0].0);
    let mut placed_v: HashSet<usize> = cycle.iter().copied().collect();
    let mut placed_e: HashSet<(usize, usize)> = HashSet::new();
    for i in 0..cycle.len() {
        placed_e.insert(key(cycle[i], cycle[(i + 1) % cycle.len()]));
    }
    let mut rev = cycle.clone();
    rev.reverse();
    let mut faces = vec![cycle, rev];

    while placed_e.len() < edges.len() {
        // Fragments: (attachment vertices, path between two of them).
        let mut frags: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
        for &(u, v) in edges {
            if !placed_e.contains(&(u, v)) && placed_v.contains(&u) && placed_v.contains(&v) {
                frags.push((vec![u, v], vec![u, v]));
            }
        }
        let mut seen: HashSet<usize> = HashSet::new();
        let mut verts: Vec<usize> = adj.keys().copied().collect();
        verts.sort_unstable();
        for &s in &verts {
            if placed_v.contains(&s) || seen.contains(&s) {
                continue;
            }
            let mut comp = vec![s];
            seen.insert(s);
            let mut i = 0;
            let mut attach = Vec::new();
            while i < comp.len() {
                let x = comp[i];
                i += 1;
                for &y in &adj[&x] {
                    if placed_v.contains(&y) {
                        attach.push(y);
                    } else if seen.insert(y) {
                        comp.push(y);
                    }
                }
            }
            attach.sort_unstable();
            attach.dedup();
            let compset: HashSet<usize> = comp.into_iter().collect();
            let path = fragment_path(&adj, &compset, &attach);
            frags.push((attach, path));
        }
        let mut best: Option<(usize, usize, usize)> = None;
        for (fi, (attach, _)) in frags.iter().enumerate() {
            let ok: Vec<usize> = faces
                .iter()
                .enumerate()
                .filter(|(_, f)| attach.iter().all(|a| f.contains(a)))
                .map(|(i, _)| i)
                .collect();
            if ok.is_empty() {
                return None;
            }
            if best.is_none_or(|b| ok.len() < b.1) {
                best = Some((fi, ok.len(), ok[0]));
            }
        }
        let (fi, _, face_idx) = best.expect("a fragment exists while edges remain");
        let path = &frags[fi].1;
        let face = faces.swap_remove(face_idx);
        let (a, b) = (path[0], path[path.len() - 1]);
        let i = face.iter().position(|&x| x == a).unwrap();
        let j = face.iter().position(|&x| x == b).unwrap();
        let walk = |from: usize, to: usize| {
            let mut w = vec![face[from]];
            let mut k = from;
            while k != to {
                k = (k + 1) % face.len();
                w.push(face[k]);
            }
            w
        };
        let inner = &path[1..path.len() - 1];
        let mut f1 = walk(i, j);
        f1.extend(inner.iter().rev());
        let mut f2 = walk(j, i);
        f2.extend(inner.iter());
        faces.push(f1);
        faces.push(f2);
        for w in path.windows(2) {
            placed_e.insert(key(w[0], w[1]));
        }
        placed_v.extend(path.iter().copied());
    }

    let mut succ: HashMap<(usize, usize), usize> = HashMap::new();
    for f in &faces {
        for k in 0..f.len() {
            let (u, v, w) = (f[k], f[(k + 1) % f.len()], f[(k + 2) % f.len()]);
            succ.insert((v, u), w);
        }
    }
    let mut rot = HashMap::new();
    for (&v, nb) in &adj {
        let mut r = vec![nb[0]];
        while r.len() < nb.len() {
            r.push(succ[&(v, *r.last().unwrap())]);
        }
        rot.insert(v, r);
    }
    Some(rot)
}

fn find_cycle(adj: &HashMap<usize, Vec<usize>>, start: usize) -> Vec<usize> {
    let mut parent: HashMap<usize, usize> = HashMap::new();
    let mut depth: HashMap<usize, usize> = HashMap::from([(start, 0)]);
    let mut stack = vec![(start, usize::MAX, 0usize)];
    while let Some(&mut (v, p, ref mut idx)) = stack.last_mut() {
        if *idx == adj[&v].len() {
            stack.pop();
            continue;
        }
        let w = adj[&v][*idx];
        *idx += 1;
        if w == p {
            continue;
        }
        if let Some(&dw) = depth.get(&w) {
            if dw < depth[&v] {
                let mut cyc = vec![v];
                let mut x = v;
                while x != w {
                    x = parent[&x];
                    cyc.push(x);
                }
                return cyc;
            }
            continue;
        }
        parent.insert(w, v);
        depth.insert(w, depth[&v] + 1);
        stack.push((w, v, 0));
    }
    unreachable!("a biconnected block with two or more edges contains a cycle")
}

fn fragment_path(adj: &HashMap<usize, Vec<usize>>, comp: &HashSet<usize>, attach: &[usize]) -> Vec<usize> {
    let a = attach[0];
    let b = attach[1];
    let mut prev: HashMap<usize, usize> = HashMap::new();
    let mut queue = VecDeque::new();
    for &x in &adj[&a] {
        if comp.contains(&x) && !prev.contains_key(&x) {
            prev.insert(x, a);
            queue.push_back(x);
        }
    }
    while let Some(x) = queue.pop_front() {
        if adj[&x].contains(&b) {
            let mut path = vec![b, x];
            let mut y = x;
            while prev[&y] != a {
                y = prev[&y];
                path.push(y);
            }
            path.push(a);
            path.reverse();
            return path;
        }
        for &y in &adj[&x] {
            if comp.contains(&y) && !prev.contains_key(&y) {
                prev.insert(y, x);
                queue.push_back(y);
            }
        }
    }
    unreachable!("fragment component connects its attachments")
}
