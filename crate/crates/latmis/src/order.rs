//! Insertion orders for iterative embedding.
//!
//! An order is valid when every vertex after the first has an earlier
//! neighbour and, for every prefix, all later vertices sit in the unbounded
//! face of the prefix subgraph (nothing still to be inserted is enclosed).

use crate::graph::Graph;
use crate::planar::Embedding;
use std::collections::HashMap;

/// Index of the face used as the unbounded one: the longest, first on ties.
pub fn default_outer_face(emb: &Embedding) -> Option<usize> {
    (0..emb.faces.len()).rev().max_by_key(|&i| emb.faces[i].len())
}

/// Angles `(w, a)` of the outer face: at `w`, the sector that starts right
/// after neighbour `a` in rotation order.
fn outer_angles(emb: &Embedding, outer: Option<usize>) -> Vec<(usize, usize)> {
    let Some(f) = outer else { return Vec::new() };
    let face = &emb.faces[f];
    (0..face.len()).map(|i| (face[(i + 1) % face.len()], face[i])).collect()
}

struct Restricted<'a> {
    emb: &'a Embedding,
    keep: &'a [bool],
    face_of: HashMap<(usize, usize), usize>,
}

impl<'a> Restricted<'a> {
    fn new(emb: &'a Embedding, keep: &'a [bool]) -> Self {
        let rot: Vec<Vec<usize>> = emb
            .rotation
            .iter()
            .enumerate()
            .map(|(v, r)| if keep[v] { r.iter().copied().filter(|&u| keep[u]).collect() } else { Vec::new() })
            .collect();
        let mut succ = HashMap::new();
        for (v, r) in rot.iter().enumerate() {
            for i in 0..r.len() {
                succ.insert((v, r[i]), r[(i + 1) % r.len()]);
            }
        }
        let mut face_of = HashMap::new();
        let mut id = 0;
        for (u, r) in rot.iter().enumerate() {
            for &v in r {
                if face_of.contains_key(&(u, v)) {
                    continue;
                }
                let (mut a, mut b) = (u, v);
                while face_of.insert((a, b), id).is_none() {
                    let c = succ[&(b, a)];
                    a = b;
                    b = c;
                }
                id += 1;
            }
        }
        Restricted { emb, keep, face_of }
    }

    /// Face of the restricted embedding containing the sector of `w` that
    /// follows neighbour `a` (`inclusive`: `a` itself may be kept).
    fn sector_face(&self, w: usize, a: usize, inclusive: bool) -> Option<usize> {
        let r = &self.emb.rotation[w];
        let i = r.iter().position(|&x| x == a).expect("not a neighbour");
        let start = if inclusive { 0 } else { 1 };
        (start..=r.len()).map(|d| r[(i + r.len() - d % r.len()) % r.len()]).find(|&x| self.keep[x]).map(|x| self.face_of[&(x, w)])
    }
}

/// True when every vertex outside `keep` lies in the unbounded face of the
/// subgraph induced by `keep`.
fn prefix_ok(g: &Graph, emb: &Embedding, angles: &[(usize, usize)], keep: &[bool]) -> bool {
    let r = Restricted::new(emb, keep);
    let mut face = None;
    let mut same = |f: Option<usize>| match (f, face) {
        (None, _) => true,
        (Some(f), None) => {
            face = Some(f);
            true
        }
        (Some(f), Some(h)) => f == h,
    };
    for &(w, a) in angles {
        if keep[w] && !same(r.sector_face(w, a, true)) {
            return false;
        }
    }
    for p in (0..g.n()).filter(|&p| keep[p]) {
        for &u in g.neighbors(p) {
            if !keep[u] && !same(r.sector_face(p, u, false)) {
                return false;
            }
        }
    }
    true
}

/// Checks both ordering conditions against `emb` with `outer` as the unbounded face.
pub fn check_order(g: &Graph, emb: &Embedding, outer: Option<usize>, order: &[usize]) -> bool {
    let n = g.n();
    let mut seen = vec![false; n];
    if order.len() != n || order.iter().any(|&v| v >= n || std::mem::replace(&mut seen[v], true)) {
        return false;
    }
    let angles = outer_angles(emb, outer);
    let mut keep = vec![false; n];
    for (k, &v) in order.iter().enumerate() {
        if k > 0 && !g.neighbors(v).iter().any(|&u| keep[u]) {
            return false;
        }
        keep[v] = true;
        if !prefix_ok(g, emb, &angles, &keep) {
            return false;
        }
    }
    true
}

fn connected_without(g: &Graph, keep: &[bool], skip: usize) -> bool {
    let Some(start) = (0..g.n()).find(|&v| keep[v] && v != skip) else { return true };
    let mut seen = vec![false; g.n()];
    seen[start] = true;
    let mut stack = vec![start];
    let mut count = 1;
    while let Some(v) = stack.pop() {
        for &u in g.neighbors(v) {
            if keep[u] && u != skip && !seen[u] {
                seen[u] = true;
                count += 1;
                stack.push(u);
            }
        }
    }
    count == keep.iter().filter(|&&k| k).count() - usize::from(keep[skip])
}

/// Valid insertion order for a connected plane graph, built by peeling
/// non-separating vertices off the outer boundary.
pub fn vertex_order(g: &Graph, emb: &Embedding) -> Vec<usize> {
    peel(g, emb, default_outer_face(emb), None).expect("a plane graph always has a removable outer vertex")
}

/// Peel order that starts at `root`, which must lie on face `outer`. `None`
/// when the embedding encloses part of the graph in a way that forces some
/// other first vertex.
pub fn rooted_order(g: &Graph, emb: &Embedding, outer: Option<usize>, root: usize) -> Option<Vec<usize>> {
    peel(g, emb, outer, Some(root))
}

fn peel(g: &Graph, emb: &Embedding, outer: Option<usize>, root: Option<usize>) -> Option<Vec<usize>> {
    let n = g.n();
    let angles = outer_angles(emb, outer);
    let mut keep = vec![true; n];
    let mut removed = Vec::with_capacity(n);
    for _ in 0..n {
        let mut cands: Vec<usize> = (0..n).filter(|&v| keep[v] && (Some(v) != root || removed.len() + 1 == n)).collect();
        cands.sort_by_key(|&v| (g.neighbors(v).iter().filter(|&&u| keep[u]).count(), v));
        let v = cands
            .into_iter()
            .find(|&v| {
                if !connected_without(g, &keep, v) {
                    return false;
                }
                keep[v] = false;
                let ok = prefix_ok(g, emb, &angles, &keep);
                keep[v] = true;
                ok
            })?;
        keep[v] = false;
        removed.push(v);
    }
    removed.reverse();
    Some(removed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planar::{embed, embed_rooted};
    use crate::drawing::random_planar;
    use rand::SeedableRng;

    #[test]
    fn orders_are_valid() {
        for g in [Graph::path(5), Graph::cycle(6), Graph::complete(4), Graph::complete_bipartite(2, 4)] {
            let emb = embed(&g).unwrap();
            let order = vertex_order(&g, &emb);
            assert!(check_order(&g, &emb, default_outer_face(&emb), &order), "{order:?}");
        }
    }

    #[test]
    fn rooted_orders_start_at_the_root() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for i in 0..60 {
            let (g, _) = random_planar(2 + i % 15, 0.5, &mut rng);
            for root in [0, g.n() - 1] {
                let (emb, outer) = embed_rooted(&g, root).unwrap();
                assert!(emb.faces[outer.unwrap()].contains(&root));
                let Some(order) = rooted_order(&g, &emb, outer, root) else { continue };
                assert_eq!(order[0], root);
                assert!(check_order(&g, &emb, outer, &order));
            }
        }
    }
}
