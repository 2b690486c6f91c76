//! Straight-line drawings and crossing detection.

use crate::error::{Error, Result};
use crate::graph::Graph;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Drawing {
    pub coords: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    /// Edge ids into `Graph::edges`, `edges.0 < edges.1`.
    pub edges: (usize, usize),
    pub point: [f64; 2],
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn within_box(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

/// True when `p` lies on segment `ab` (endpoints included).
pub fn on_segment(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> bool {
    orient(a, b, p) == 0.0 && within_box(a, b, p)
}

/// Proper crossing of two segments: interiors meet in a single point.
pub fn segments_cross(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let d1 = orient(a, b, c);
    let d2 = orient(a, b, d);
    let d3 = orient(c, d, a);
    let d4 = orient(c, d, b);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

fn intersection(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> [f64; 2] {
    let r = [b[0] - a[0], b[1] - a[1]];
    let s = [d[0] - c[0], d[1] - c[1]];
    let den = r[0] * s[1] - r[1] * s[0];
    let t = ((c[0] - a[0]) * s[1] - (c[1] - a[1]) * s[0]) / den;
    [a[0] + t * r[0], a[1] + t * r[1]]
}

impl Drawing {
    pub fn new(coords: Vec<[f64; 2]>) -> Self {
        Drawing { coords }
    }

    /// Checks the general-position requirements of a drawing of `g`.
    pub fn validate(&self, g: &Graph) -> Result<()> {
        if self.coords.len() != g.n() {
            return Err(Error::DegenerateDrawing(format!(
                "{} coordinates for {} vertices",
                self.coords.len(),
                g.n()
            )));
        }
        if self.coords.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::DegenerateDrawing("non-finite coordinate".into()));
        }
        for u in 0..g.n() {
            for v in u + 1..g.n() {
                if self.coords[u] == self.coords[v] {
                    return Err(Error::DegenerateDrawing(format!("vertices {u} and {v} coincide")));
                }
            }
        }
        for &(a, b) in g.edges() {
            for v in 0..g.n() {
                if v != a && v != b && on_segment(self.coords[a], self.coords[b], self.coords[v]) {
                    return Err(Error::DegenerateDrawing(format!("vertex {v} lies on edge ({a}, {b})")));
                }
            }
        }
        let p = &self.coords;
        for (i, &(a, b)) in g.edges().iter().enumerate() {
            for &(c, d) in &g.edges()[i + 1..] {
                if a == c || a == d || b == c || b == d {
                    continue;
                }
                if orient(p[a], p[b], p[c]) == 0.0 && orient(p[a], p[b], p[d]) == 0.0 {
                    let overlap = on_segment(p[a], p[b], p[c])
                        || on_segment(p[a], p[b], p[d])
                        || on_segment(p[c], p[d], p[a]);
                    if overlap {
                        return Err(Error::DegenerateDrawing(format!(
                            "edges ({a}, {b}) and ({c}, {d}) overlap"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// All pairwise interior crossings, ordered lexicographically by edge ids.
pub fn find_crossings(g: &Graph, d: &Drawing) -> Result<Vec<Crossing>> {
    d.validate(g)?;
    let p = &d.coords;
    let edges = g.edges();
    let mut out = Vec::new();
    for i in 0..edges.len() {
        let (a, b) = edges[i];
        for (j, &(c, e)) in edges.iter().enumerate().skip(i + 1) {
            if a == c || a == e || b == c || b == e {
                continue;
            }
            if segments_cross(p[a], p[b], p[c], p[e]) {
                out.push(Crossing { edges: (i, j), point: intersection(p[a], p[b], p[c], p[e]) });
            }
        }
    }
    let scale = p.iter().flatten().fold(1.0f64, |m, x| m.max(x.abs()));
    for (k, x) in out.iter().enumerate() {
        for y in &out[k + 1..] {
            let dist = (x.point[0] - y.point[0]).hypot(x.point[1] - y.point[1]);
            if dist <= 1e-9 * scale {
                return Err(Error::DegenerateDrawing(format!(
                    "edges {:?} and {:?} cross at a common point",
                    x.edges, y.edges
                )));
            }
        }
    }
    Ok(out)
}

/// K5 drawn with a single crossing.
pub fn k5_drawing() -> Drawing {
    Drawing::new(vec![[0.0, 0.0], [10.0, 0.0], [5.0, 10.0], [4.0, 3.0], [6.0, 3.0]])
}

/// K3,3 (parts {0,1,2} and {3,4,5}) drawn with a single crossing.
pub fn k33_drawing() -> Drawing {
    Drawing::new(vec![[1.0, 2.0], [0.0, 4.0], [5.0, 0.0], [4.0, 1.0], [0.0, 1.0], [1.0, 3.0]])
}

/// Random connected plane graph with a straight-line drawing on an integer grid.
///
/// Points are drawn in general position, every non-crossing segment is added
/// in random order (a triangulation of the point set), then edges are dropped
/// with probability `drop` as long as the graph stays connected.
pub fn random_planar<R: rand::Rng>(n: usize, drop: f64, rng: &mut R) -> (Graph, Drawing) {
    use rand::seq::SliceRandom;
    let side = (4 * n.max(2)) as i64;
    let mut pts: Vec<[f64; 2]> = Vec::with_capacity(n);
    while pts.len() < n {
        let p = [rng.gen_range(0..side) as f64, rng.gen_range(0..side) as f64];
        let clash = pts.contains(&p)
            || (0..pts.len()).any(|i| (i + 1..pts.len()).any(|j| orient(pts[i], pts[j], p) == 0.0));
        if !clash {
            pts.push(p);
        }
    }
    let mut cand: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
    cand.shuffle(rng);
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for (u, v) in cand {
        let crosses = edges
            .iter()
            .any(|&(a, b)| a != u && a != v && b != u && b != v && segments_cross(pts[u], pts[v], pts[a], pts[b]));
        if !crosses {
            edges.push((u, v));
        }
    }
    edges.shuffle(rng);
    let mut i = 0;
    while i < edges.len() {
        if rng.gen_bool(drop) {
            let e = edges.swap_remove(i);
            if !Graph::new(n, edges.iter().copied()).unwrap().is_connected() {
                edges.push(e);
                let last = edges.len() - 1;
                edges.swap(i, last);
                i += 1;
            }
        } else {
            i += 1;
        }
    }
    (Graph::new(n, edges).unwrap(), Drawing::new(pts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn random_planar_is_crossing_free() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for n in 1..=12 {
            let (g, d) = random_planar(n, 0.4, &mut rng);
            assert!(g.is_connected());
            assert!(find_crossings(&g, &d).unwrap().is_empty());
        }
    }

    #[test]
    fn c4_square_has_no_crossings() {
        let d = Drawing::new(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
        let g = Graph::new(4, [(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        assert!(find_crossings(&g, &d).unwrap().is_empty());
    }

    #[test]
    fn shared_endpoint_is_not_a_crossing() {
        let d = Drawing::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        let g = Graph::new(3, [(0, 1), (0, 2)]).unwrap();
        assert!(find_crossings(&g, &d).unwrap().is_empty());
    }

    #[test]
    fn fixed_drawings_have_one_crossing() {
        let k5 = find_crossings(&Graph::complete(5), &k5_drawing()).unwrap();
        assert_eq!(k5.len(), 1);
        let k33 = find_crossings(&Graph::complete_bipartite(3, 3), &k33_drawing()).unwrap();
        assert_eq!(k33.len(), 1);
    }

    #[test]
    fn centred_k5_is_degenerate() {
        let d = Drawing::new(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]]);
        let err = find_crossings(&Graph::complete(5), &d).unwrap_err();
        assert_eq!(err.code(), "DegenerateDrawing");
    }
}
