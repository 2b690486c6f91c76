//! Transverse-field simulation of small instances: spectra along the
//! annealing path, adiabatic evolution and ensemble statistics.
//!
//! Basis states are bit masks; bit `i` set means `s_i = -1`. The driver is
//! `-Γ Σ σ^x_i`, whose ground state is the uniform superposition.

use crate::error::{Error, Result};
use crate::ising::IsingInstance;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Largest spin count for spectra.
pub const MAX_SPECTRUM_SPINS: usize = 20;
/// Largest spin count for time evolution.
pub const MAX_EVOLVE_SPINS: usize = 14;
/// Largest spin count solved by dense diagonalization.
pub const DENSE_SPINS: usize = 8;
/// Eigenvalues closer than this form one level.
pub const DEGENERACY_TOL: f64 = 1e-9;
/// Largest unitarity drift accepted from [`evolve`].
pub const DRIFT_BOUND: f64 = 1e-9;

const LANCZOS_DIM: usize = 120;
const LANCZOS_RESTARTS: usize = 200;
const RITZ_CHECK: usize = 8;
const MAX_DEFLATIONS: usize = 64;

/// `Ĥ(Γ) = H_classical - Γ Σ σ^x`, applied without storing the matrix.
#[derive(Debug, Clone)]
pub struct QuantumHamiltonian {
    pub spins: usize,
    /// Classical energies, indexed by mask.
    pub diagonal: Vec<f64>,
    pub gamma: f64,
}

/// Classical energy of every basis state.
pub fn classical_energies(inst: &IsingInstance) -> Vec<f64> {
    (0..1u64 << inst.spins).into_par_iter().map(|m| inst.energy_mask(m)).collect()
}

pub fn build_hamiltonian(inst: &IsingInstance, gamma: f64) -> Result<QuantumHamiltonian> {
    if inst.spins > MAX_SPECTRUM_SPINS {
        return Err(Error::BudgetExceeded { what: "spins", size: inst.spins, budget: MAX_SPECTRUM_SPINS });
    }
    Ok(QuantumHamiltonian { spins: inst.spins, diagonal: classical_energies(inst), gamma })
}

impl QuantumHamiltonian {
    pub fn dim(&self) -> usize {
        self.diagonal.len()
    }

    pub fn with_gamma(&self, gamma: f64) -> Self {
        QuantumHamiltonian { gamma, ..self.clone() }
    }

    /// `out = Ĥ v`.
    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        let n = self.spins;
        out.par_iter_mut().enumerate().with_min_len(1024).for_each(|(x, o)| {
            let mut flip = 0.0;
            for i in 0..n {
                flip += v[x ^ (1 << i)];
            }
            *o = self.diagonal[x] * v[x] - self.gamma * flip;
        });
    }

    pub fn dense(&self) -> DMatrix<f64> {
        let d = self.dim();
        let mut m = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.diagonal));
        for x in 0..d {
            for i in 0..self.spins {
                m[(x, x ^ (1 << i))] = -self.gamma;
            }
        }
        m
    }

    /// Rough bound on the spectral radius.
    fn norm_bound(&self) -> f64 {
        self.diagonal.iter().fold(0.0f64, |a, &e| a.max(e.abs())) + self.gamma.abs() * self.spins as f64
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

fn project_out(v: &mut [f64], basis: &[Vec<f64>]) {
    for b in basis {
        let c = dot(v, b);
        axpy(v, -c, b);
    }
}

/// Lowest eigenpair of `h` on the complement of `locked` by restarted
/// Lanczos with full reorthogonalization.
fn lowest(h: &QuantumHamiltonian, locked: &[Vec<f64>], start: &[f64]) -> Option<(f64, Vec<f64>)> {
    let d = h.dim();
    let tol = 1e-10 * h.norm_bound().max(1.0);
    let m = LANCZOS_DIM.min(d - locked.len());
    let mut x = start.to_vec();
    project_out(&mut x, locked);
    if normalize(&mut x) == 0.0 {
        return None;
    }
    let mut w = vec![0.0; d];
    for _ in 0..LANCZOS_RESTARTS {
        let mut q: Vec<Vec<f64>> = vec![x.clone()];
        let mut alpha = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut y = DVector::zeros(0);
        for j in 0..m {
            h.apply(&q[j], &mut w);
            project_out(&mut w, locked);
            alpha.push(dot(&w, &q[j]));
            project_out(&mut w, &q);
            project_out(&mut w, locked);
            let b = normalize(&mut w);
            let done = j + 1 == m || b < 1e-13 * h.norm_bound().max(1.0);
            if done || (j + 1) % RITZ_CHECK == 0 {
                // Residual of the lowest Ritz pair is b times the last component.
                y = lowest_ritz(&alpha, &beta)?;
                if done || b * y[j].abs() < 0.1 * tol {
                    break;
                }
            }
            beta.push(b);
            q.push(w.clone());
        }
        let k = alpha.len();
        x.iter_mut().for_each(|v| *v = 0.0);
        for (i, qi) in q.iter().enumerate().take(k) {
            axpy(&mut x, y[i], qi);
        }
        project_out(&mut x, locked);
        normalize(&mut x);
        h.apply(&x, &mut w);
        project_out(&mut w, locked);
        let rayleigh = dot(&x, &w);
        axpy(&mut w, -rayleigh, &x);
        if dot(&w, &w).sqrt() < tol || k < m {
            return Some((rayleigh, x));
        }
    }
    None
}

/// Eigenvector of the lowest eigenvalue of the tridiagonal matrix.
fn lowest_ritz(alpha: &[f64], beta: &[f64]) -> Option<DVector<f64>> {
    let k = alpha.len();
    let mut t = DMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let idx = eig.eigenvalues.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i)?;
    Some(eig.eigenvectors.column(idx).into_owned())
}

fn start_vector(d: usize, salt: u64) -> Vec<f64> {
    // Deterministic, with weight on every basis state.
    (0..d as u64)
        .map(|i| {
            let z = (i ^ salt).wrapping_mul(0x9e37_79b9_7f4a_7c15).rotate_left(17);
            1.0 + (z % 1000) as f64 / 1000.0
        })
        .collect()
}

/// Ground energy and the lowest energy of the next level.
pub fn lowest_two(h: &QuantumHamiltonian) -> Result<(f64, f64)> {
    let d = h.dim();
    if d == 1 {
        return Ok((h.diagonal[0], h.diagonal[0]));
    }
    if h.gamma == 0.0 {
        return Ok(levels(&h.diagonal));
    }
    if h.spins <= DENSE_SPINS {
        let eig = SymmetricEigen::new(h.dense());
        return Ok(levels(eig.eigenvalues.as_slice()));
    }
    let fail = || Error::ConvergenceFailure(h.gamma);
    let mut locked: Vec<Vec<f64>> = Vec::new();
    let (e0, v0) = lowest(h, &locked, &start_vector(d, 0)).ok_or_else(fail)?;
    locked.push(v0);
    for k in 1..=MAX_DEFLATIONS {
        let (e, v) = lowest(h, &locked, &start_vector(d, k as u64)).ok_or_else(fail)?;
        if e > e0 + DEGENERACY_TOL {
            return Ok((e0, e));
        }
        locked.push(v);
    }
    Err(fail())
}

/// Lowest value and the lowest value outside its degeneracy group.
fn levels(values: &[f64]) -> (f64, f64) {
    let e0 = values.iter().copied().fold(f64::INFINITY, f64::min);
    let e1 = values.iter().copied().filter(|&e| e > e0 + DEGENERACY_TOL).fold(f64::INFINITY, f64::min);
    (e0, if e1.is_finite() { e1 } else { e0 })
}

/// Default initial transverse strength: ten times the largest coupling or field.
pub fn default_gamma0(inst: &IsingInstance) -> f64 {
    let j = inst.couplings.iter().map(|c| c.2.abs()).chain(inst.fields.iter().map(|h| h.abs())).fold(0.0, f64::max);
    10.0 * j.max(f64::MIN_POSITIVE)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPoint {
    pub gamma: f64,
    pub e0: f64,
    pub e1: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    /// Descending from `Γ0` to `0`.
    pub points: Vec<SpectrumPoint>,
    pub g_min: f64,
    pub gamma_star: f64,
}

impl SpectrumResult {
    pub fn gaps(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.gap).collect()
    }

    pub fn csv(&self) -> String {
        let mut out = String::from("gamma,e0,e1,gap\n");
        for p in &self.points {
            out.push_str(&format!("{},{},{},{}\n", p.gamma, p.e0, p.e1, p.gap));
        }
        out
    }
}

/// `points` evenly spaced values from `gamma0` down to `0`.
pub fn gamma_grid(gamma0: f64, points: usize) -> Vec<f64> {
    let last = points.saturating_sub(1).max(1) as f64;
    (0..points).map(|k| if k + 1 == points { 0.0 } else { gamma0 * (1.0 - k as f64 / last) }).collect()
}

fn point(h: &QuantumHamiltonian, gamma: f64) -> Result<SpectrumPoint> {
    let (e0, e1) = lowest_two(&h.with_gamma(gamma))?;
    Ok(SpectrumPoint { gamma, e0, e1, gap: e1 - e0 })
}

/// Gap along `Γ` on the given grid, without refinement.
pub fn gap_curve(inst: &IsingInstance, grid: &[f64]) -> Result<Vec<SpectrumPoint>> {
    let h = build_hamiltonian(inst, 0.0)?;
    grid.par_iter().map(|&g| point(&h, g)).collect()
}

/// Gap curve from `gamma0` to `0` on `points` grid values. The grid minimum
/// is refined by trisection between its neighbours.
pub fn gap_sweep(inst: &IsingInstance, gamma0: f64, points: usize) -> Result<SpectrumResult> {
    if points < 2 {
        return Err(Error::Config(format!("gap sweep needs at least 2 points, got {points}")));
    }
    let h = build_hamiltonian(inst, 0.0)?;
    let grid = gamma_grid(gamma0, points);
    let pts: Vec<SpectrumPoint> = grid.par_iter().map(|&g| point(&h, g)).collect::<Result<_>>()?;
    let k = (0..pts.len()).min_by(|&a, &b| pts[a].gap.total_cmp(&pts[b].gap)).unwrap();
    let (mut g_min, mut gamma_star) = (pts[k].gap, pts[k].gamma);
    // Γ = 0 is a separate regime for degenerate ground states; refine only
    // over strictly positive Γ.
    let hi = if k == 0 { pts[k].gamma } else { pts[k - 1].gamma };
    let lo = pts.get(k + 1).map_or(pts[k].gamma, |p| p.gamma).max(1e-9 * gamma0);
    if pts[k].gamma > 0.0 && hi > lo {
        let (mut a, mut b) = (lo, hi);
        let gap = |g: f64| lowest_two(&h.with_gamma(g)).map(|(e0, e1)| e1 - e0);
        for _ in 0..60 {
            let m1 = a + (b - a) / 3.0;
            let m2 = b - (b - a) / 3.0;
            if gap(m1)? <= gap(m2)? {
                b = m2;
            } else {
                a = m1;
            }
            if b - a < 1e-10 * gamma0.max(1.0) {
                break;
            }
        }
        let g = 0.5 * (a + b);
        let v = gap(g)?;
        if v < g_min {
            g_min = v;
            gamma_star = g;
        }
    }
    Ok(SpectrumResult { points: pts, g_min, gamma_star })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub total_time: f64,
    pub gamma0: f64,
    /// Integration step; the last step is shortened to end at `total_time`.
    pub step: f64,
}

impl Schedule {
    /// Linear schedule with a step that keeps the phase change per step
    /// below 0.05 rad at the larger of the classical and driver scales.
    pub fn linear(inst: &IsingInstance, total_time: f64, gamma0: f64) -> Self {
        let diag = inst.couplings.iter().map(|c| c.2.abs()).sum::<f64>() + inst.fields.iter().map(|h| h.abs()).sum::<f64>();
        let scale = diag.max(gamma0).max(1.0);
        Schedule { total_time, gamma0, step: 0.05 / scale }
    }

    pub fn gamma(&self, t: f64) -> f64 {
        if self.total_time <= 0.0 {
            return 0.0;
        }
        (self.gamma0 * (1.0 - t / self.total_time)).max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evolution {
    /// Squared overlap with the classical ground subspace.
    pub overlap: f64,
    /// `| |ψ|² - 1 |` at the end of the run.
    pub drift: f64,
    pub steps: usize,
    #[serde(skip)]
    pub state: Vec<(f64, f64)>,
}

/// Integrates the Schrödinger equation from the driver ground state.
///
/// Each step applies the diagonal phase for half a step, the exact driver
/// rotation for a full step at the midpoint `Γ`, and the diagonal phase again,
/// so every step is unitary by construction.
pub fn evolve(inst: &IsingInstance, schedule: &Schedule) -> Result<Evolution> {
    let n = inst.spins;
    if n > MAX_EVOLVE_SPINS {
        return Err(Error::BudgetExceeded { what: "spins", size: n, budget: MAX_EVOLVE_SPINS });
    }
    if !(schedule.step > 0.0) {
        return Err(Error::Config("integration step must be positive".into()));
    }
    let diag = classical_energies(inst);
    let d = diag.len();
    let amp = 1.0 / (d as f64).sqrt();
    let mut re = vec![amp; d];
    let mut im = vec![0.0; d];
    let steps = if schedule.total_time > 0.0 { (schedule.total_time / schedule.step).ceil() as usize } else { 0 };
    let mut t = 0.0;
    for _ in 0..steps {
        let dt = schedule.step.min(schedule.total_time - t);
        let gamma = schedule.gamma(t + 0.5 * dt);
        phase(&diag, &mut re, &mut im, 0.5 * dt);
        // exp(i dt Γ σ^x) on every qubit.
        let (c, s) = ((gamma * dt).cos(), (gamma * dt).sin());
        for q in 0..n {
            let bit = 1 << q;
            for x in 0..d {
                if x & bit == 0 {
                    let y = x | bit;
                    let (ar, ai, br, bi) = (re[x], im[x], re[y], im[y]);
                    re[x] = c * ar - s * bi;
                    im[x] = c * ai + s * br;
                    re[y] = c * br - s * ai;
                    im[y] = c * bi + s * ar;
                }
            }
        }
        phase(&diag, &mut re, &mut im, 0.5 * dt);
        t += dt;
    }
    let norm: f64 = re.iter().zip(&im).map(|(a, b)| a * a + b * b).sum();
    let drift = (norm - 1.0).abs();
    if drift > DRIFT_BOUND {
        return Err(Error::StepTooLarge(drift));
    }
    let (e0, _) = levels(&diag);
    let overlap = (0..d).filter(|&x| diag[x] <= e0 + DEGENERACY_TOL).map(|x| re[x] * re[x] + im[x] * im[x]).sum();
    Ok(Evolution { overlap, drift, steps, state: re.into_iter().zip(im).collect() })
}

fn phase(diag: &[f64], re: &mut [f64], im: &mut [f64], dt: f64) {
    re.par_iter_mut().zip(im.par_iter_mut()).zip(diag.par_iter()).with_min_len(4096).for_each(|((a, b), &e)| {
        let (c, s) = ((e * dt).cos(), -(e * dt).sin());
        let (x, y) = (*a, *b);
        *a = c * x - s * y;
        *b = c * y + s * x;
    });
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleReport {
    pub grid: Vec<f64>,
    /// Gap curve per instance on `grid`.
    pub gaps: Vec<Vec<f64>>,
    /// Grid argmin of each instance's gap.
    pub gamma_star: Vec<f64>,
    pub histogram: Vec<HistogramBin>,
    /// Average over instances of the minimum over `Γ`.
    pub mean_of_min: f64,
    /// Minimum over `Γ` of the average over instances.
    pub min_of_mean: f64,
    pub min_of_mean_gamma: f64,
}

impl EnsembleReport {
    /// `⟨min g⟩ ≤ min ⟨g⟩`, which holds for every sample.
    pub fn ordering_holds(&self) -> bool {
        self.mean_of_min <= self.min_of_mean
    }

    pub fn csv(&self) -> String {
        let mut out = String::from("instance,gamma_star,g_min\n");
        for (i, (g, gaps)) in self.gamma_star.iter().zip(&self.gaps).enumerate() {
            out.push_str(&format!("{i},{g},{}\n", gaps.iter().copied().fold(f64::INFINITY, f64::min)));
        }
        out
    }
}

/// Both orderings of minimization over `Γ` and averaging over instances, on
/// a shared grid. The minimum at `Γ = 0` is excluded when the grid has other
/// points, since degenerate ground states make the gap jump there.
pub fn ensemble(instances: &[IsingInstance], grid: &[f64], bins: usize) -> Result<EnsembleReport> {
    let curves: Vec<Vec<f64>> = instances
        .par_iter()
        .map(|inst| gap_curve(inst, grid).map(|pts| pts.into_iter().map(|p| p.gap).collect()))
        .collect::<Result<_>>()?;
    let cols: Vec<usize> = if grid.iter().any(|&g| g > 0.0) { (0..grid.len()).filter(|&k| grid[k] > 0.0).collect() } else { (0..grid.len()).collect() };
    let count = curves.len().max(1) as f64;
    let argmin = |c: &Vec<f64>| cols.iter().copied().min_by(|&a, &b| c[a].total_cmp(&c[b])).unwrap_or(0);
    let gamma_star: Vec<f64> = curves.iter().map(|c| grid[argmin(c)]).collect();
    let mean_of_min = curves.iter().map(|c| c[argmin(c)]).sum::<f64>() / count;
    let mean: Vec<f64> = (0..grid.len()).map(|k| curves.iter().map(|c| c[k]).sum::<f64>() / count).collect();
    let best = cols.iter().copied().min_by(|&a, &b| mean[a].total_cmp(&mean[b])).unwrap_or(0);
    let hi = grid.iter().copied().fold(0.0, f64::max);
    let bins = bins.max(1);
    let width = if hi > 0.0 { hi / bins as f64 } else { 1.0 };
    let mut histogram: Vec<HistogramBin> = (0..bins).map(|b| HistogramBin { lo: b as f64 * width, hi: (b + 1) as f64 * width, count: 0 }).collect();
    for &g in &gamma_star {
        let b = ((g / width) as usize).min(bins - 1);
        histogram[b].count += 1;
    }
    Ok(EnsembleReport {
        grid: grid.to_vec(),
        gaps: curves,
        gamma_star,
        histogram,
        mean_of_min,
        min_of_mean: mean.get(best).copied().unwrap_or(0.0),
        min_of_mean_gamma: grid.get(best).copied().unwrap_or(0.0),
    })
}

/// [`ensemble`] over `count` instances drawn by `generator` from a stream
/// seeded with `seed`.
pub fn ensemble_experiment<F>(mut generator: F, count: usize, grid: &[f64], seed: u64, bins: usize) -> Result<EnsembleReport>
where
    F: FnMut(&mut rand_chacha::ChaCha8Rng) -> IsingInstance,
{
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let instances: Vec<IsingInstance> = (0..count).map(|_| generator(&mut rng)).collect();
    ensemble(&instances, grid, bins)
}
