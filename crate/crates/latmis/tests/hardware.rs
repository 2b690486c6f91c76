use latmis::embedder::embed_planar;
use latmis::hardware::*;
use latmis::ising::IsingInstance;
use latmis::oracle::{ising_ground, ising_ground_auto, mis_exact, Budget};
use latmis::Graph;
use proptest::prelude::*;
use std::collections::BTreeSet;

fn remove_spin(inst: &IsingInstance, i: usize) -> IsingInstance {
    let map = |k: usize| if k > i { k - 1 } else { k };
    let couplings = inst.couplings.iter().filter(|c| c.0 != i && c.1 != i).map(|&(a, b, j)| (map(a), map(b), j)).collect();
    let fields = inst.fields.iter().enumerate().filter(|&(k, _)| k != i).map(|(_, &h)| h).collect();
    IsingInstance::new(inst.spins - 1, couplings, fields, inst.threshold).unwrap()
}

fn ground_set(inst: &IsingInstance) -> (f64, BTreeSet<Vec<i8>>) {
    let gs = ising_ground(inst, &Budget::default()).unwrap();
    assert!(gs.is_complete());
    (gs.ground_energy, gs.configs.into_iter().collect())
}

fn marginal(configs: &BTreeSet<Vec<i8>>, i: usize) -> BTreeSet<Vec<i8>> {
    configs.iter().map(|c| c.iter().enumerate().filter(|&(k, _)| k != i).map(|(_, &s)| s).collect()).collect()
}

fn instance_strategy() -> impl Strategy<Value = (IsingInstance, usize)> {
    (2usize..=12).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
        let m = pairs.len();
        (
            proptest::collection::vec(prop_oneof![Just(0i32), -3i32..=3], m),
            proptest::collection::vec(-3i32..=3, n),
            0..n,
        )
            .prop_map(move |(js, hs, target)| {
                let couplings = pairs.iter().zip(&js).filter(|(_, &j)| j != 0).map(|(&(a, b), &j)| (a, b, f64::from(j))).collect();
                let fields = hs.iter().map(|&h| f64::from(h)).collect();
                (IsingInstance::new(n, couplings, fields, 1.0).unwrap(), target)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, ..ProptestConfig::default() })]

    #[test]
    fn deletion_matches_removal((inst, i) in instance_strategy()) {
        let del = delete_qubit(&inst, i).unwrap();
        let (e_del, with) = ground_set(&del);
        prop_assert!(with.iter().all(|c| c[i] == 1));
        let (e_rem, without) = ground_set(&remove_spin(&inst, i));
        prop_assert_eq!(marginal(&with, i), without);
        prop_assert!((e_del + del.constant - e_rem).abs() < 1e-9);
    }

    #[test]
    fn deletion_commutes((inst, a) in instance_strategy(), shift in 1usize..12) {
        let b = (a + shift) % inst.spins;
        prop_assume!(a != b);
        let ab = delete_qubit(&delete_qubit(&inst, a).unwrap(), b).unwrap();
        let ba = delete_qubit(&delete_qubit(&inst, b).unwrap(), a).unwrap();
        let both = delete_qubits(&inst, &[a, b]).unwrap();
        prop_assert_eq!(&ab, &ba);
        prop_assert_eq!(&ab, &both);
    }
}

#[test]
fn isolated_spin_is_pinned() {
    let inst = IsingInstance::new(1, vec![], vec![0.0], 1.0).unwrap();
    let del = delete_qubit(&inst, 0).unwrap();
    let (_, gs) = ground_set(&del);
    assert_eq!(gs, BTreeSet::from([vec![1]]));
    assert_eq!(delete_qubit(&del, 0).unwrap_err().code(), "AlreadyDeleted");
}

#[test]
fn chain_middle_deleted_decouples_ends() {
    let inst = IsingInstance::new(3, vec![(0, 1, -1.0), (1, 2, -1.0)], vec![0.0; 3], 1.0).unwrap();
    let (_, full) = ground_set(&inst);
    assert_eq!(full.len(), 2);
    let (_, gs) = ground_set(&delete_qubit(&inst, 1).unwrap());
    let m = marginal(&gs, 1);
    assert_eq!(m.len(), 4);
    let (_, free) = ground_set(&IsingInstance::new(2, vec![], vec![0.0; 2], 1.0).unwrap());
    assert_eq!(m, free);
}

#[test]
fn triangle_minus_one_is_an_edge() {
    let inst = IsingInstance::new(3, vec![(0, 1, -1.0), (1, 2, -1.0), (0, 2, -1.0)], vec![0.0; 3], 1.0).unwrap();
    let (_, gs) = ground_set(&delete_qubit(&inst, 2).unwrap());
    let (_, edge) = ground_set(&IsingInstance::new(2, vec![(0, 1, -1.0)], vec![0.0; 2], 1.0).unwrap());
    assert_eq!(marginal(&gs, 2), edge);
}

#[test]
fn every_pattern_is_frustrated() {
    for p in [PatternId::Fig6, PatternId::TriSim, PatternId::SqSim, PatternId::Direct] {
        let spec = LatticeSpec::new(p);
        let (f, total) = spec.frustration(52, 52);
        assert!(f > 0, "{p:?}");
        match p {
            PatternId::Fig6 => assert_eq!(2 * f, total),
            PatternId::Direct | PatternId::TriSim => assert_eq!(f, total),
            PatternId::SqSim | PatternId::Random => {}
        }
    }
}

#[test]
fn direct_plaquettes_have_one_odd_bond() {
    let spec = LatticeSpec::new(PatternId::Direct);
    for c in spec.elementary_cycles(6, 6) {
        let afm = (0..4).filter(|&i| spec.sign(c[i], c[(i + 1) % 4]) < 0).count();
        assert!(afm == 1 || afm == 3);
    }
}

fn single_edge_program() -> HardwareProgram {
    let layout = embed_planar(&Graph::path(2)).unwrap();
    compile_simulated_triangular(&layout).unwrap()
}

#[test]
fn single_edge_uses_two_cells() {
    let prog = single_edge_program();
    assert_eq!(prog.sites.len(), 16);
    let count = |r: Role| prog.sites.iter().filter(|s| s.role == r).count();
    assert_eq!([count(Role::Working), count(Role::Auxiliary), count(Role::Control), count(Role::Deleted)], [2, 4, 6, 4]);
    prog.check().unwrap();
}

#[test]
fn empty_layout_gives_empty_program() {
    let layout = latmis::embedder::ClusterLayout {
        vertices: 0,
        side: 0,
        sites: vec![],
        links: vec![],
        clusters: vec![],
        order: vec![],
        history: vec![],
    };
    let prog = compile_simulated_triangular(&layout).unwrap();
    assert!(prog.sites.is_empty());
    assert!((0..prog.sites.len()).all(|i| prog.deleted.contains(&i)));
}

#[test]
fn control_switches_the_link() {
    let prog = single_edge_program();
    let w: Vec<usize> = prog.decode.iter().map(|e| e.site).collect();
    let opts = Certify::for_lattice(&prog.lattice);
    assert_eq!(certify_effective_coupling(&prog, w[0], w[1], &opts).unwrap(), EffectiveCoupling::Antiferro);

    // bare fabric: no fields apart from those the deletions put in
    let control = (0..16).find(|&i| prog.sites[i].role == Role::Control && !prog.deleted.contains(&i)).unwrap();
    let mut bare = prog.instance();
    bare.fields.iter_mut().for_each(|h| *h = 0.0);
    bare.deleted.clear();
    let on = delete_qubits(&bare, &prog.deleted).unwrap();
    let pairs = |inst: &IsingInstance| -> BTreeSet<(i8, i8)> { ground_set(inst).1.iter().map(|c| (c[w[0]], c[w[1]])).collect() };
    assert_eq!(pairs(&on), BTreeSet::from([(1, -1), (-1, 1)]));
    let off = delete_qubit(&on, control).unwrap();
    assert_eq!(pairs(&off).len(), 4);
    let mut cut = prog.clone();
    cut.deleted.push(control);
    assert_eq!(certify_effective_coupling(&cut, w[0], w[1], &opts).unwrap(), EffectiveCoupling::None);
}

#[test]
fn fig6_programs_solve_small_graphs() {
    let graphs = [Graph::path(3), Graph::complete(3), Graph::cycle(4), Graph::new(4, [(0, 1), (0, 2), (0, 3)]).unwrap()];
    for g in graphs {
        let layout = embed_planar(&g).unwrap();
        let prog = compile_simulated_triangular(&layout).unwrap();
        assert_eq!(prog.sites.len(), 8 * layout.sites.len());
        prog.check().unwrap();
        let (red, ids) = prog.reduced();
        let gs = ising_ground_auto(&red, &Budget::default()).unwrap();
        let got: BTreeSet<Vec<usize>> = gs.configs.iter().map(|c| prog.decode_config(&prog.expand(&ids, c))).collect();
        let want: BTreeSet<Vec<usize>> = mis_exact(&g, &Budget::default()).unwrap().sets.into_iter().collect();
        assert_eq!(got, want);
        let index = prog.index();
        let w = |s: usize| index[&[4 * layout.sites[s].q + 2 * layout.sites[s].r, 2 * layout.sites[s].r]];
        let opts = Certify::for_lattice(&prog.lattice);
        for l in &layout.links {
            assert_eq!(certify_effective_coupling(&prog, w(l.a), w(l.b), &opts).unwrap(), EffectiveCoupling::Antiferro);
        }
    }
}

#[test]
fn fig6_site_count_is_eight_per_simulated_site() {
    for n in 1..=6 {
        for g in Graph::all_connected(n).into_iter().filter(latmis::planar::is_planar).take(5) {
            let layout = embed_planar(&g).unwrap();
            let prog = compile_simulated_triangular(&layout).unwrap();
            assert_eq!(prog.sites.len(), 8 * layout.sites.len());
            prog.check().unwrap();
        }
    }
}

fn two_cells(sign: LinkSign) -> HardwareProgram {
    let p = SquareProblem { width: 2, height: 1, fields: vec![0.0; 2], links: vec![SquareLink { a: [0, 0], b: [1, 0], sign }] };
    compile_simulated_square(&p).unwrap()
}

fn pair_marginal(prog: &HardwareProgram) -> BTreeSet<(i8, i8)> {
    let (red, ids) = prog.reduced();
    let (_, gs) = ground_set(&red);
    let w: Vec<usize> = prog.decode.iter().map(|e| e.site).collect();
    gs.iter().map(|c| prog.expand(&ids, c)).map(|c| (c[w[0]], c[w[1]])).collect()
}

#[test]
fn square_controls_pick_the_sign() {
    let all = BTreeSet::from([(1, 1), (1, -1), (-1, 1), (-1, -1)]);
    assert_eq!(pair_marginal(&two_cells(LinkSign::Off)), all);
    assert_eq!(pair_marginal(&two_cells(LinkSign::Ferro)), BTreeSet::from([(1, 1), (-1, -1)]));
    assert_eq!(pair_marginal(&two_cells(LinkSign::Antiferro)), BTreeSet::from([(1, -1), (-1, 1)]));
    for (sign, want) in [
        (LinkSign::Off, EffectiveCoupling::None),
        (LinkSign::Ferro, EffectiveCoupling::Ferro),
        (LinkSign::Antiferro, EffectiveCoupling::Antiferro),
    ] {
        let prog = two_cells(sign);
        let w: Vec<usize> = prog.decode.iter().map(|e| e.site).collect();
        let got = certify_effective_coupling(&prog, w[0], w[1], &Certify::for_lattice(&prog.lattice)).unwrap();
        assert_eq!(got, want);
    }
}

#[test]
fn square_grid_with_mixed_links() {
    let mut links = Vec::new();
    let signs = [LinkSign::Ferro, LinkSign::Antiferro, LinkSign::Off];
    let mut k = 0;
    for j in 0..3 {
        for i in 0..3 {
            if i + 1 < 3 {
                links.push(SquareLink { a: [i, j], b: [i + 1, j], sign: signs[k % 3] });
                k += 1;
            }
            if j + 1 < 3 {
                links.push(SquareLink { a: [i, j], b: [i, j + 1], sign: signs[k % 3] });
                k += 1;
            }
        }
    }
    let p = SquareProblem { width: 3, height: 3, fields: vec![0.5; 9], links };
    let prog = compile_simulated_square(&p).unwrap();
    assert_eq!(prog.edges.len(), 8);
}

#[test]
fn oversized_patch_is_rejected() {
    let prog = two_cells(LinkSign::Ferro);
    let w: Vec<usize> = prog.decode.iter().map(|e| e.site).collect();
    let err = certify_effective_coupling(&prog, w[0], w[1], &Certify { radius: 10, budget: 2 }).unwrap_err();
    assert_eq!(err.code(), "PatchTooLarge");
}

fn direct_terminals(prog: &HardwareProgram) -> Vec<usize> {
    prog.decode.iter().filter(|d| prog.sites[d.site].role == Role::Working).map(|d| d.site).collect()
}

/// Physical coupling that is `c` in the gauge of sites `a` and `b`.
fn in_gauge(prog: &HardwareProgram, a: usize, b: usize, c: EffectiveCoupling) -> EffectiveCoupling {
    let flip = prog.sites[a].tau * prog.sites[b].tau < 0;
    match c {
        EffectiveCoupling::Ferro if flip => EffectiveCoupling::Antiferro,
        EffectiveCoupling::Antiferro if flip => EffectiveCoupling::Ferro,
        c => c,
    }
}

fn assert_direct_solves(g: &Graph) -> HardwareProgram {
    let layout = embed_planar(g).unwrap();
    let prog = compile_direct_layout(&layout).unwrap();
    prog.check().unwrap();
    let n = g.n();
    assert!(prog.sites.len() <= 36 * n * n, "{} sites for {n} vertices", prog.sites.len());
    for w in prog.growth.windows(2) {
        assert!(w[1] <= w[0] + 6, "{:?}", prog.growth);
    }
    let index = prog.index();
    let term = |s: usize| index[&direct_terminal(layout.sites[s].q, layout.sites[s].r)];
    let opts = Certify::for_lattice(&prog.lattice);
    for l in &layout.links {
        if layout.sites[l.a].cluster != layout.sites[l.b].cluster {
            let (a, b) = (term(l.a), term(l.b));
            if let Ok(c) = certify_effective_coupling(&prog, a, b, &opts) {
                assert_eq!(c, in_gauge(&prog, a, b, EffectiveCoupling::Antiferro), "link {}-{}", l.a, l.b);
            }
        }
    }
    let (red, ids) = prog.reduced();
    if red.spins - red.deleted.len() <= 24 {
        let gs = ising_ground_auto(&red, &Budget::default()).unwrap();
        let got: BTreeSet<Vec<usize>> = gs.configs.iter().map(|c| prog.decode_config(&prog.expand(&ids, c))).collect();
        let want: BTreeSet<Vec<usize>> = mis_exact(g, &Budget::default()).unwrap().sets.into_iter().collect();
        assert_eq!(got, want);
    }
    prog
}

#[test]
fn direct_single_vertex_is_one_qubit() {
    let prog = compile_direct_square(&Graph::new(1, []).unwrap()).unwrap();
    assert_eq!(prog.kept().iter().filter(|&&k| k).count(), 1);
    assert_eq!(direct_terminals(&prog).len(), 1);
}

#[test]
fn direct_edge_is_antiferromagnetic() {
    let prog = assert_direct_solves(&Graph::path(2));
    let t = direct_terminals(&prog);
    assert_eq!(t.len(), 2);
    let opts = Certify::for_lattice(&prog.lattice);
    assert_eq!(certify_effective_coupling(&prog, t[0], t[1], &opts).unwrap(), in_gauge(&prog, t[0], t[1], EffectiveCoupling::Antiferro));
}

#[test]
fn direct_path_selects_endpoints() {
    let g = Graph::path(3);
    let prog = assert_direct_solves(&g);
    let (red, ids) = prog.reduced();
    let gs = ising_ground_auto(&red, &Budget::default()).unwrap();
    let sets: BTreeSet<Vec<usize>> = gs.configs.iter().map(|c| prog.decode_config(&prog.expand(&ids, c))).collect();
    assert_eq!(sets, BTreeSet::from([vec![0, 2]]));
}

#[test]
fn direct_small_graphs() {
    for g in [Graph::complete(3), Graph::cycle(4), Graph::complete(4), Graph::new(4, [(0, 1), (0, 2), (0, 3)]).unwrap(), Graph::cycle(5)] {
        assert_direct_solves(&g);
    }
}

#[test]
fn direct_random_planar_graphs() {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for i in 0..40 {
        let (g, _) = latmis::drawing::random_planar(2 + i % 12, 0.5, &mut rng);
        assert_direct_solves(&g);
    }
}
