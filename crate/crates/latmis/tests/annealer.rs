use latmis::annealer::*;
use latmis::ising::IsingInstance;
use latmis::oracle::{ising_ground, Budget};
use latmis::reduction::{mis_to_ising_unit, random_planar_instance};
use latmis::hardware::compile_direct_square;
use latmis::Graph;
use nalgebra::SymmetricEigen;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn single(h: f64) -> IsingInstance {
    IsingInstance::new(1, vec![], vec![h], 1.0).unwrap()
}

fn random_instance(n: usize, rng: &mut ChaCha8Rng) -> IsingInstance {
    let mut couplings = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen_bool(0.4) {
                couplings.push((a, b, f64::from(rng.gen_range(-2i32..=2))));
            }
        }
    }
    let fields = (0..n).map(|_| f64::from(rng.gen_range(-4i32..=4)) / 2.0).collect();
    IsingInstance::new(n, couplings, fields, 1.0).unwrap()
}

#[test]
fn single_spin_spectrum() {
    let h = build_hamiltonian(&single(1.0), 0.0).unwrap();
    let mut e: Vec<f64> = SymmetricEigen::new(h.dense()).eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    assert_eq!(e, vec![-1.0, 1.0]);
    for hz in [0.3, 1.0, 2.5] {
        let s = gap_sweep(&single(hz), 10.0, 41).unwrap();
        for p in &s.points {
            assert!((p.gap - 2.0 * (p.gamma * p.gamma + hz * hz).sqrt()).abs() < 1e-10, "{p:?}");
        }
    }
}

#[test]
fn classical_limit_matches_enumeration() {
    let inst = mis_to_ising_unit(&Graph::path(2));
    let h = build_hamiltonian(&inst, 0.0).unwrap();
    let mut spec: Vec<f64> = SymmetricEigen::new(h.dense()).eigenvalues.iter().copied().collect();
    spec.sort_by(f64::total_cmp);
    let mut classical = classical_energies(&inst);
    classical.sort_by(f64::total_cmp);
    assert_eq!(spec, classical);
}

#[test]
fn operator_is_symmetric() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for n in [3, 6, 10] {
        let h = build_hamiltonian(&random_instance(n, &mut rng), 1.7).unwrap();
        let d = h.dim();
        let u: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (mut hu, mut hv) = (vec![0.0; d], vec![0.0; d]);
        h.apply(&u, &mut hu);
        h.apply(&v, &mut hv);
        let a: f64 = u.iter().zip(&hv).map(|(x, y)| x * y).sum();
        let b: f64 = hu.iter().zip(&v).map(|(x, y)| x * y).sum();
        assert!((a - b).abs() < 1e-12 * a.abs().max(1.0), "{a} {b}");
    }
}

#[test]
fn iterative_solver_matches_dense() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for n in [9, 10] {
        let inst = random_instance(n, &mut rng);
        let h = build_hamiltonian(&inst, 0.0).unwrap();
        for gamma in [0.05, 0.5, 3.0] {
            let hg = h.with_gamma(gamma);
            let mut e: Vec<f64> = SymmetricEigen::new(hg.dense()).eigenvalues.iter().copied().collect();
            e.sort_by(f64::total_cmp);
            let e1 = e.iter().copied().find(|&x| x > e[0] + DEGENERACY_TOL).unwrap();
            let (a, b) = lowest_two(&hg).unwrap();
            assert!((a - e[0]).abs() < 1e-8 && (b - e1).abs() < 1e-8, "n={n} Γ={gamma}: {a} {b} vs {} {e1}", e[0]);
        }
    }
}

#[test]
fn zero_field_gap_is_the_classical_gap() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for k in 0..12 {
        let inst = random_instance(2 + k % 11, &mut rng);
        let s = gap_sweep(&inst, default_gamma0(&inst), 5).unwrap();
        let last = s.points.last().unwrap();
        assert_eq!(last.gamma, 0.0);
        let classical = ising_ground(&inst, &Budget::default()).unwrap().gap().unwrap_or(0.0);
        assert!((last.gap - classical).abs() < 1e-8);
    }
}

#[test]
fn single_edge_gap_stays_open() {
    let inst = mis_to_ising_unit(&Graph::path(2));
    let s = gap_sweep(&inst, default_gamma0(&inst), 101).unwrap();
    assert!(s.points.iter().all(|p| p.gap > 0.0));
    assert!(s.g_min > 0.0 && s.g_min <= s.gaps().iter().copied().fold(f64::INFINITY, f64::min));
}

/// Nested grids can never do better than exactly half.
const REFINEMENT_RATIO: f64 = 0.51;

fn max_jump(inst: &IsingInstance, gamma0: f64, points: usize) -> f64 {
    let g = gap_curve(inst, &gamma_grid(gamma0, points)).unwrap();
    g.windows(2).map(|w| (w[0].gap - w[1].gap).abs()).fold(0.0, f64::max)
}

#[test]
fn gap_curve_is_continuous_under_refinement() {
    let inst = mis_to_ising_unit(&Graph::path(3));
    let mut prev = max_jump(&inst, 4.0, 11);
    for points in [21, 41, 81, 161] {
        let next = max_jump(&inst, 4.0, points);
        assert!(next <= REFINEMENT_RATIO * prev, "{points}: {next} after {prev}");
        prev = next;
    }
}

#[test]
fn slow_single_spin_follows_the_ground_state() {
    let inst = single(1.0);
    let e = evolve(&inst, &Schedule::linear(&inst, 2000.0, 100.0)).unwrap();
    assert!(e.overlap >= 0.999, "{}", e.overlap);
    assert!(e.drift <= DRIFT_BOUND);
}

#[test]
fn slow_edge_reaches_the_degenerate_ground_space() {
    let inst = mis_to_ising_unit(&Graph::path(2));
    let e = evolve(&inst, &Schedule::linear(&inst, 800.0, 4.0 * default_gamma0(&inst))).unwrap();
    assert!(e.overlap >= 0.99, "{}", e.overlap);
}

#[test]
fn sudden_quench_keeps_the_uniform_state() {
    let inst = mis_to_ising_unit(&Graph::path(2));
    let e = evolve(&inst, &Schedule::linear(&inst, 0.0, 5.0)).unwrap();
    assert_eq!(e.steps, 0);
    assert!((e.overlap - 0.5).abs() < 1e-15);
}

#[test]
fn overlap_grows_along_a_doubling_ladder() {
    let inst = compile_direct_square(&Graph::path(3)).unwrap().reduced().0;
    let gamma0 = 4.0 * default_gamma0(&inst);
    let overlaps: Vec<f64> = [50.0, 100.0, 200.0, 400.0].iter().map(|&t| evolve(&inst, &Schedule::linear(&inst, t, gamma0)).unwrap().overlap).collect();
    println!("{overlaps:?}");
    assert!(overlaps.windows(2).all(|w| w[1] >= w[0]), "{overlaps:?}");
}

#[test]
fn identical_instances_have_equal_orderings() {
    let inst = mis_to_ising_unit(&Graph::path(3));
    let r = ensemble(&[inst.clone(), inst.clone(), inst], &gamma_grid(4.0, 21), 5).unwrap();
    assert_eq!(r.mean_of_min, r.min_of_mean);
}

#[test]
fn distinct_minima_give_a_strict_ordering() {
    let make = |h: f64| IsingInstance::new(2, vec![(0, 1, -1.0)], vec![h, -h], 1.0).unwrap();
    let r = ensemble(&[make(0.2), make(3.0)], &gamma_grid(6.0, 61), 6).unwrap();
    assert_ne!(r.gamma_star[0], r.gamma_star[1]);
    assert!(r.mean_of_min < r.min_of_mean, "{} {}", r.mean_of_min, r.min_of_mean);
    assert_eq!(r.histogram.iter().map(|b| b.count).sum::<usize>(), 2);
}

#[test]
fn ensemble_ordering_holds_on_random_instances() {
    let r = ensemble_experiment(|rng| random_instance(rng.gen_range(2..=6), rng), 20, &gamma_grid(8.0, 17), 3, 8).unwrap();
    assert!(r.ordering_holds());
    assert!(r.csv().lines().count() == 21);
}

const ENSEMBLE_MEAN_OF_MIN: f64 = 0.834_685_256_576_67;
const ENSEMBLE_MIN_OF_MEAN: f64 = 0.880_318_516_158_59;

#[test]
fn ensemble_regression() {
    let r = ensemble_experiment(
        |rng| random_planar_instance(12, rng),
        50,
        &gamma_grid(8.0, 17),
        2024,
        8,
    )
    .unwrap();
    println!("{} {}", r.mean_of_min, r.min_of_mean);
    assert!((r.mean_of_min - ENSEMBLE_MEAN_OF_MIN).abs() < 1e-8);
    assert!((r.min_of_mean - ENSEMBLE_MIN_OF_MEAN).abs() < 1e-8);
    assert!(r.ordering_holds());
}
