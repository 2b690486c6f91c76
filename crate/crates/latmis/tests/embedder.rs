use latmis::drawing::{k33_drawing, k5_drawing, random_planar};
use latmis::embedder::{embed_planar, ClusterLayout};
use latmis::gadget::planarize;
use latmis::oracle::{ising_ground_auto, mis_exact, Budget};
use latmis::order::{check_order, default_outer_face, vertex_order};
use latmis::planar::{embed, is_planar};
use latmis::reduction::{build_cluster_hamiltonian, infer_tau, Variant};
use latmis::Graph;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

fn check_bounds(g: &Graph, layout: &ClusterLayout) {
    let n = g.n();
    let stats = layout.stats();
    assert!(stats.side <= 2 * (n - 1), "side {} for N = {n}", stats.side);
    assert!(stats.sites <= n * (2 * n - 1));
    let mut prev = 0;
    for step in &layout.history {
        assert!(step.min_spacing.map_or(true, |s| s >= 2));
        assert!(step.side - prev <= 2);
        prev = step.side;
    }
    let cm = layout.cluster_model();
    assert_eq!(infer_tau(&cm).unwrap(), cm.tau);
}

fn sound(g: &Graph, layout: &ClusterLayout) {
    let cm = layout.cluster_model();
    let inst = build_cluster_hamiltonian(&cm, 1.0, Variant::Representative).unwrap();
    let gs = ising_ground_auto(&inst, &Budget::default()).unwrap();
    assert!(gs.is_complete());
    let sets: BTreeSet<Vec<usize>> = gs.configs.iter().map(|c| cm.decode(c)).collect();
    let exact: BTreeSet<Vec<usize>> = mis_exact(g, &Budget::default()).unwrap().sets.into_iter().collect();
    assert_eq!(sets, exact);
}

#[test]
fn order_example_with_interior_vertex() {
    // 3 sits inside the triangle 0-1-2
    let g = Graph::complete(4);
    let emb = embed(&g).unwrap();
    let outer = default_outer_face(&emb).unwrap();
    let inner = (0..4).find(|v| !emb.faces[outer].contains(v)).unwrap();
    let mut valid = 0;
    let mut perm: Vec<usize> = (0..4).collect();
    loop {
        let ok = check_order(&g, &emb, Some(outer), &perm);
        assert_eq!(ok, perm[3] != inner, "{perm:?}");
        valid += usize::from(ok);
        let Some(i) = (0..3).rev().find(|&i| perm[i] < perm[i + 1]) else { break };
        let j = (i + 1..4).rev().find(|&j| perm[j] > perm[i]).unwrap();
        perm.swap(i, j);
        perm[i + 1..].reverse();
    }
    assert_eq!(valid, 18);
}

#[test]
fn k4_end_to_end() {
    let g = Graph::complete(4);
    let layout = embed_planar(&g).unwrap();
    check_bounds(&g, &layout);
    sound(&g, &layout);
}

#[test]
fn all_small_planar_graphs() {
    for n in 1..=6 {
        for g in Graph::all_connected(n).into_iter().filter(is_planar) {
            let emb = embed(&g).unwrap();
            assert!(check_order(&g, &emb, default_outer_face(&emb), &vertex_order(&g, &emb)));
            let layout = embed_planar(&g).unwrap();
            check_bounds(&g, &layout);
            if layout.sites.len() <= 24 {
                sound(&g, &layout);
            }
        }
    }
}

#[test]
fn random_planar_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for i in 0..100 {
        let n = 1 + i % 12;
        let (g, _) = random_planar(n, 0.3, &mut rng);
        let layout = embed_planar(&g).unwrap();
        check_bounds(&g, &layout);
        if layout.sites.len() <= 24 {
            sound(&g, &layout);
        }
    }
}

#[test]
fn planarized_k5_and_k33() {
    for (g, d) in [(Graph::complete(5), k5_drawing()), (Graph::complete_bipartite(3, 3), k33_drawing())] {
        let p = planarize(&g, &d).unwrap();
        let layout = embed_planar(&p.graph).unwrap();
        check_bounds(&p.graph, &layout);
    }
}
