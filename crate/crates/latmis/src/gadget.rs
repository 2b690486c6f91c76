//! Crossover gadget and planarization of drawn graphs.
//!
//! The gadget replaces two crossing edges `(u1, u2)` and `(w1, w2)`. Each edge
//! becomes two parallel strands, and every strand-strand crossing is resolved
//! by a small planar cell whose independence number drops by at least one for
//! each of its two strands whose ends are both occupied. A conflicting pair of
//! terminals therefore costs at least two, which makes every maximum set of the
//! planarized graph project onto an independent set of the original.

use crate::drawing::{find_crossings, Drawing};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::oracle::{mis_size, Budget};
use crate::planar::is_planar;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

/// Strand crossing cell. Terminals: 0 top, 1 right, 2 bottom, 3 left; the
/// vertical strand runs 0-2, the horizontal one 3-1.
const CELL_EDGES: [(usize, usize); 30] = [
    (0, 16), (1, 5), (1, 12), (1, 14), (2, 5), (2, 7), (2, 11), (3, 4), (3, 7), (3, 15),
    (4, 7), (4, 13), (4, 15), (5, 8), (5, 12), (6, 9), (6, 12), (6, 14), (7, 11), (7, 13),
    (8, 9), (8, 12), (8, 13), (9, 15), (10, 11), (11, 13), (12, 14), (14, 15), (14, 16), (15, 16),
];
const CELL_VERTICES: usize = 17;

/// Internal vertex count of the crossover gadget.
pub const GADGET_INTERNAL: usize = 68;
/// Independence-number increment contributed by each gadget.
pub const GADGET_INCREMENT: usize = 28;

/// Terminal order: `[u1, w1, u2, w2]`; vertices `4..4 + GADGET_INTERNAL` are internal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gadget {
    pub edges: Vec<(usize, usize)>,
}

impl Gadget {
    pub fn vertex_count(&self) -> usize {
        4 + GADGET_INTERNAL
    }

    pub fn graph(&self) -> Graph {
        Graph::new(self.vertex_count(), self.edges.iter().copied()).expect("gadget edges are valid")
    }
}

pub fn gadget() -> &'static Gadget {
    static G: OnceLock<Gadget> = OnceLock::new();
    G.get_or_init(build_gadget)
}

fn build_gadget() -> Gadget {
    let mut next = 4;
    let mut edges = Vec::new();
    // strand: a - s1 ~ s2 - s3 ~ s4 - b, `~` being a cell crossing
    let mut strand = |a: usize, b: usize, edges: &mut Vec<(usize, usize)>| {
        let s: Vec<usize> = (0..4).map(|i| next + i).collect();
        next += 4;
        edges.extend([(a, s[0]), (s[1], s[2]), (s[3], b)]);
        s
    };
    let left = strand(0, 2, &mut edges);
    let right = strand(0, 2, &mut edges);
    let upper = strand(3, 1, &mut edges);
    let lower = strand(3, 1, &mut edges);
    let cells = [
        [left[0], upper[1], left[1], upper[0]],
        [right[0], upper[3], right[1], upper[2]],
        [left[2], lower[1], left[3], lower[0]],
        [right[2], lower[3], right[3], lower[2]],
    ];
    for t in cells {
        let base = next;
        next += CELL_VERTICES - 4;
        let map = |v: usize| if v < 4 { t[v] } else { base + v - 4 };
        edges.extend(CELL_EDGES.iter().map(|&(a, b)| (map(a), map(b))));
    }
    debug_assert_eq!(next, 4 + GADGET_INTERNAL);
    edges.sort_unstable();
    Gadget { edges }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GadgetCertificate {
    /// Independence number of the internal vertices given each terminal subset
    /// (bit t set means terminal t is occupied).
    pub internal_mis: Vec<usize>,
    pub increment: usize,
    /// No maximum set of the gadget contains two opposite terminals.
    pub opposite_exclusion: bool,
    /// Every conflict-free terminal subset leaves the same increment.
    pub fixed_increment: bool,
    /// Every terminal subset with `v` conflicts loses more than `v`.
    pub strict_penalty: bool,
    /// Planar with the four terminals on one face in the order u1, w1, u2, w2.
    pub planar: bool,
}

fn conflicts(x: usize) -> usize {
    usize::from(x & 0b0101 == 0b0101) + usize::from(x & 0b1010 == 0b1010)
}

/// Exact certification by solving the internal MIS for all 16 terminal states.
pub fn certify_gadget() -> GadgetCertificate {
    let g = gadget().graph();
    let budget = Budget { vertices: 128, ..Budget::default() };
    let internal: Vec<usize> = (4..g.n()).collect();
    let f: Vec<usize> = (0..16usize)
        .map(|x| {
            let keep: Vec<usize> = internal
                .iter()
                .copied()
                .filter(|&v| (0..4).all(|t| x >> t & 1 == 0 || !g.has_edge(t, v)))
                .collect();
            mis_size(&g.induced(&keep), &budget).expect("gadget fits the solver")
        })
        .collect();
    let c = f[0];
    let total = |x: usize| x.count_ones() as usize + f[x];
    let best = (0..16).map(total).max().unwrap();
    let opposite_exclusion = (0..16).filter(|&x| conflicts(x) > 0).all(|x| total(x) < best);
    let fixed_increment = (0..16).filter(|&x| conflicts(x) == 0).all(|x| f[x] == c);
    let strict_penalty = (0..16).filter(|&x| conflicts(x) > 0).all(|x| f[x] + conflicts(x) < c);

    let hub = g.n();
    let mut framed: Vec<(usize, usize)> = g.edges().to_vec();
    framed.extend([(0, 1), (1, 2), (2, 3), (3, 0)]);
    framed.extend((0..4).map(|t| (t, hub)));
    let planar = is_planar(&Graph::new(hub + 1, framed).unwrap());

    GadgetCertificate { internal_mis: f, increment: c, opposite_exclusion, fixed_increment, strict_penalty, planar }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossingRecord {
    /// The two removed edges, as vertex pairs of the input graph.
    pub edges: [(usize, usize); 2],
    /// Ids of the inserted internal gadget vertices in the output graph.
    pub gadget_vertices: Vec<usize>,
    /// Attachment vertices `[u1, w1, u2, w2]`.
    pub terminals: [usize; 4],
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Planarized {
    pub graph: Graph,
    pub original_vertices: usize,
    pub crossings: Vec<CrossingRecord>,
    pub cardinality_offset: usize,
}

impl Planarized {
    /// Restriction of an independent set of the planarized graph to the input vertices.
    pub fn project(&self, set: &[usize]) -> Vec<usize> {
        set.iter().copied().filter(|&v| v < self.original_vertices).collect()
    }
}

/// Replaces every crossing of the drawing with a gadget.
pub fn planarize(g: &Graph, d: &Drawing) -> Result<Planarized> {
    let crossings = find_crossings(g, d)?;
    let mut used = vec![false; g.m()];
    for c in &crossings {
        for e in [c.edges.0, c.edges.1] {
            if used[e] {
                return Err(Error::GadgetOverlap { edge: e });
            }
            used[e] = true;
        }
    }
    let mut edges: Vec<(usize, usize)> =
        g.edges().iter().enumerate().filter(|(i, _)| !used[*i]).map(|(_, &e)| e).collect();
    let mut n = g.n();
    let mut records = Vec::new();
    for c in &crossings {
        let (a, b) = g.edges()[c.edges.0];
        let (x, y) = g.edges()[c.edges.1];
        let terminals = [a, x, b, y];
        let base = n;
        n += GADGET_INTERNAL;
        let map = |v: usize| if v < 4 { terminals[v] } else { base + v - 4 };
        edges.extend(gadget().edges.iter().map(|&(p, q)| (map(p), map(q))));
        records.push(CrossingRecord {
            edges: [(a, b), (x, y)],
            gadget_vertices: (base..n).collect(),
            terminals,
        });
    }
    let graph = Graph::new(n, edges)?;
    if !is_planar(&graph) {
        return Err(Error::NotPlanar);
    }
    Ok(Planarized {
        graph,
        original_vertices: g.n(),
        cardinality_offset: GADGET_INCREMENT * records.len(),
        crossings: records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gadget_size() {
        let g = gadget().graph();
        assert_eq!(g.n(), 4 + GADGET_INTERNAL);
        for t in 0..4 {
            for s in 0..4 {
                assert!(!g.has_edge(t, s));
            }
        }
    }

    #[test]
    fn planar_input_is_unchanged() {
        let g = Graph::cycle(4);
        let d = Drawing::new(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
        let p = planarize(&g, &d).unwrap();
        assert_eq!(p.graph, g);
        assert_eq!(p.cardinality_offset, 0);
    }

    #[test]
    fn shared_edge_is_rejected() {
        // edge 0-1 crosses both 2-3 and 4-5
        let g = Graph::new(6, [(0, 1), (2, 3), (4, 5)]).unwrap();
        let d = Drawing::new(vec![[0.0, 0.0], [10.0, 0.0], [2.0, -1.0], [2.0, 1.0], [6.0, -1.0], [6.0, 1.0]]);
        assert_eq!(planarize(&g, &d).unwrap_err().code(), "GadgetOverlap");
    }
}
