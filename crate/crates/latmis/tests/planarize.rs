use latmis::drawing::{k33_drawing, k5_drawing, Drawing};
use latmis::gadget::{certify_gadget, planarize, GADGET_INCREMENT, GADGET_INTERNAL};
use latmis::oracle::{mis_elim, mis_exact, Budget};
use latmis::planar::is_planar;
use latmis::Graph;
use std::collections::BTreeSet;

#[test]
fn gadget_certificate() {
    let c = certify_gadget();
    assert_eq!(c.increment, GADGET_INCREMENT);
    assert!(c.opposite_exclusion);
    assert!(c.fixed_increment);
    assert!(c.strict_penalty);
    assert!(c.planar);
}

fn check_projection(g: &Graph, d: &Drawing, crossings: usize) {
    let b = Budget::default();
    let p = planarize(g, d).unwrap();
    assert!(is_planar(&p.graph));
    assert_eq!(p.crossings.len(), crossings);
    assert_eq!(p.graph.n(), g.n() + crossings * GADGET_INTERNAL);
    let orig = mis_exact(g, &b).unwrap();
    let big = mis_elim(&p.graph, &b).unwrap();
    assert_eq!(big.size, orig.size + p.cardinality_offset);
    let projected: BTreeSet<Vec<usize>> = big.sets.iter().map(|s| p.project(s)).collect();
    let expected: BTreeSet<Vec<usize>> = orig.sets.iter().cloned().collect();
    assert_eq!(projected, expected);
}

#[test]
fn k5_and_k33() {
    check_projection(&Graph::complete(5), &k5_drawing(), 1);
    check_projection(&Graph::complete_bipartite(3, 3), &k33_drawing(), 1);
}

#[test]
fn two_crossing_edges() {
    let g = Graph::new(4, [(0, 1), (2, 3)]).unwrap();
    let d = Drawing::new(vec![[0.0, 0.0], [2.0, 2.0], [0.0, 2.0], [2.0, 0.0]]);
    check_projection(&g, &d, 1);
}
