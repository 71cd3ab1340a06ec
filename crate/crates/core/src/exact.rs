//! Exact analysis of small annealing Hamiltonians
//! `H(s) = A(s) H_X + B(s) H_P` with `H_X = -sum_i sigma^x_i`.
//!
//! Basis states are indexed by bitmasks over the active qubits in ascending
//! id order; bit `i` set means qubit `i` is `|1>` (spin down). `H_P` is the
//! instance normalized so that its largest coupling is 1. Energies are in the
//! schedule's units (GHz) and time evolution uses `hbar = 1` with time in ns.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{IsingInstance, SpinState};
use crate::schedule::Schedule;
use crate::topology::QubitId;

pub const DEFAULT_MAX_QUBITS: usize = 14;

/// Boltzmann constant over Planck's constant, in GHz per kelvin.
pub const KB_OVER_H_GHZ_PER_K: f64 = 20.836_619_12;

/// Largest dimension handled by dense diagonalization; above it Lanczos is used.
const DENSE_DIM: usize = 1024;

/// Propagators above this dimension use Krylov steps instead of a full eigensolve.
const DENSE_EXP_DIM: usize = 64;

const NORM_TOLERANCE: f64 = 1e-8;

/// Thermal energy `k_B T` expressed as a frequency in GHz.
pub fn thermal_energy_ghz(kelvin: f64) -> f64 {
    KB_OVER_H_GHZ_PER_K * kelvin
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSlice {
    pub s: f64,
    pub eigenvalues: Vec<f64>,
    /// Hamming-weight expectation per level, averaged over degenerate levels.
    pub hw_expectations: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinGap {
    pub s_star: f64,
    pub gap: f64,
    /// The ground level was degenerate at the minimum.
    pub degenerate: bool,
}

#[derive(Clone, Debug)]
pub struct Evolution {
    pub state: Vec<Complex64>,
    /// Probability of the planted state at the end of the anneal.
    pub p_s: f64,
    /// Largest deviation of the norm from one seen during integration.
    pub max_norm_error: f64,
}

/// Dense view of one instance under one schedule.
#[derive(Clone, Debug)]
pub struct DenseContext {
    n: usize,
    qubits: Vec<QubitId>,
    fields: Vec<f64>,
    bonds: Vec<(usize, usize, f64)>,
    diag: Vec<f64>,
    planted: usize,
    schedule: Schedule<f64>,
}

impl DenseContext {
    pub fn new(inst: &IsingInstance, schedule: &Schedule<f64>) -> Result<Self> {
        Self::with_cap(inst, schedule, DEFAULT_MAX_QUBITS)
    }

    pub fn with_cap(inst: &IsingInstance, schedule: &Schedule<f64>, max_qubits: usize) -> Result<Self> {
        let topo = inst.topology();
        let qubits: Vec<QubitId> = topo.qubits().collect();
        let n = qubits.len();
        if n > max_qubits {
            return Err(Error::Capability(format!("{n} qubits exceeds the dense cap of {max_qubits}")));
        }
        let scale = inst.energy_scale().to_f64();
        let local = |q: QubitId| qubits.binary_search(&q).expect("active qubit");
        let fields: Vec<f64> = qubits.iter().map(|&q| inst.fields()[q as usize].to_f64() / scale).collect();
        let bonds: Vec<(usize, usize, f64)> = inst
            .nonzero_couplings()
            .map(|(e, v)| (local(e.0), local(e.1), v.to_f64() / scale))
            .collect();
        let dim = 1usize << n;
        let diag = (0..dim)
            .map(|idx| {
                let spin = |i: usize| if idx >> i & 1 == 1 { -1.0 } else { 1.0 };
                fields.iter().enumerate().map(|(i, h)| h * spin(i)).sum::<f64>()
                    + bonds.iter().map(|&(a, b, j)| j * spin(a) * spin(b)).sum::<f64>()
            })
            .collect();
        let planted = qubits
            .iter()
            .enumerate()
            .filter(|(_, &q)| inst.planted_state().0[q as usize] < 0)
            .fold(0usize, |acc, (i, _)| acc | 1 << i);
        Ok(Self { n, qubits, fields, bonds, diag, planted, schedule: schedule.clone() })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn qubits(&self) -> &[QubitId] {
        &self.qubits
    }

    pub fn schedule(&self) -> &Schedule<f64> {
        &self.schedule
    }

    /// Normalized classical energy of every basis state.
    pub fn problem_diagonal(&self) -> &[f64] {
        &self.diag
    }

    pub fn planted_index(&self) -> usize {
        self.planted
    }

    /// Basis index of a spin state.
    pub fn basis_index(&self, state: &SpinState) -> usize {
        self.qubits
            .iter()
            .enumerate()
            .filter(|(_, &q)| state.0[q as usize] < 0)
            .fold(0, |acc, (i, _)| acc | 1 << i)
    }

    /// `y = (a H_X + b H_P) x`.
    fn apply<T>(&self, a: f64, b: f64, x: &[T], y: &mut [T])
    where
        T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Sub<Output = T>,
    {
        for (idx, out) in y.iter_mut().enumerate() {
            let mut acc = x[idx] * (b * self.diag[idx]);
            for q in 0..self.n {
                acc = acc - x[idx ^ (1 << q)] * a;
            }
            *out = acc;
        }
    }

    fn dense_matrix(&self, a: f64, b: f64) -> DMatrix<f64> {
        let dim = self.dim();
        let mut m = DMatrix::zeros(dim, dim);
        for idx in 0..dim {
            m[(idx, idx)] = b * self.diag[idx];
            for q in 0..self.n {
                m[(idx, idx ^ (1 << q))] = -a;
            }
        }
        m
    }

    /// Lowest `k` levels of `H(s)` with Hamming-weight expectations.
    pub fn spectrum(&self, s: f64, k: usize) -> Result<SpectrumSlice> {
        let (a, b) = self.schedule.evaluate(s)?;
        let dim = self.dim();
        if k == 0 || k > dim {
            return Err(Error::param(format!("requested {k} levels of a {dim}-dimensional space")));
        }
        let want = (k + 4).min(dim);
        let pairs = self.lowest_pairs(a, b, want)?;
        let hw: Vec<f64> = pairs
            .iter()
            .map(|(_, v)| hamming_weight_expectation(v.iter().map(|c| c * c)))
            .collect();
        let values: Vec<f64> = pairs.iter().map(|(e, _)| *e).collect();
        let scale = values.iter().fold(1.0f64, |m, e| m.max(e.abs()));
        let tol = 1e-9 * scale;
        let mut averaged = hw.clone();
        let mut start = 0;
        while start < values.len() {
            let mut end = start + 1;
            while end < values.len() && values[end] - values[end - 1] <= tol {
                end += 1;
            }
            let mean = hw[start..end].iter().sum::<f64>() / (end - start) as f64;
            averaged[start..end].iter_mut().for_each(|h| *h = mean);
            start = end;
        }
        Ok(SpectrumSlice { s, eigenvalues: values[..k].to_vec(), hw_expectations: averaged[..k].to_vec() })
    }

    /// Lowest `k` eigenvalues without eigenvectors.
    pub fn lowest_values(&self, s: f64, k: usize) -> Result<Vec<f64>> {
        let (a, b) = self.schedule.evaluate(s)?;
        if self.dim() <= DENSE_DIM {
            let mut values: Vec<f64> = self.dense_matrix(a, b).symmetric_eigenvalues().iter().copied().collect();
            values.sort_by(f64::total_cmp);
            values.truncate(k);
            Ok(values)
        } else {
            Ok(self.lowest_pairs(a, b, k)?.into_iter().map(|(e, _)| e).collect())
        }
    }

    fn lowest_pairs(&self, a: f64, b: f64, k: usize) -> Result<Vec<(f64, Vec<f64>)>> {
        if self.dim() <= DENSE_DIM {
            let eig = SymmetricEigen::new(self.dense_matrix(a, b));
            let mut order: Vec<usize> = (0..self.dim()).collect();
            order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
            Ok(order
                .into_iter()
                .take(k)
                .map(|i| (eig.eigenvalues[i], eig.eigenvectors.column(i).iter().copied().collect()))
                .collect())
        } else {
            lanczos_lowest(self.dim(), k, |x, y| self.apply(a, b, x, y))
        }
    }

    /// Minimum of `E1 - E0` over a uniform grid in `s`, refined by golden-section
    /// search on the bracketing interval.
    pub fn min_gap(&self, grid_points: usize) -> Result<MinGap> {
        if grid_points < 100 {
            return Err(Error::param("the gap grid needs at least 100 points"));
        }
        let gap_at = |s: f64| -> Result<f64> {
            let e = self.lowest_values(s, 2)?;
            Ok(e[1] - e[0])
        };
        let grid: Vec<f64> = (0..grid_points).map(|i| i as f64 / (grid_points - 1) as f64).collect();
        let gaps = grid.iter().map(|&s| gap_at(s)).collect::<Result<Vec<_>>>()?;
        let best = (0..gaps.len()).min_by(|&i, &j| gaps[i].total_cmp(&gaps[j])).expect("non-empty grid");
        let mut lo = grid[best.saturating_sub(1)];
        let mut hi = grid[(best + 1).min(grid.len() - 1)];
        let ratio = (5f64.sqrt() - 1.0) / 2.0;
        let mut x1 = hi - ratio * (hi - lo);
        let mut x2 = lo + ratio * (hi - lo);
        let (mut f1, mut f2) = (gap_at(x1)?, gap_at(x2)?);
        while hi - lo > 1e-9 {
            if f1 < f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - ratio * (hi - lo);
                f1 = gap_at(x1)?;
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + ratio * (hi - lo);
                f2 = gap_at(x2)?;
            }
        }
        let (mut s_star, mut gap) = if f1 < f2 { (x1, f1) } else { (x2, f2) };
        if gaps[best] < gap {
            s_star = grid[best];
            gap = gaps[best];
        }
        let (a, b) = self.schedule.at(s_star);
        let scale = a.abs() * self.n as f64 + b.abs() * self.diag.iter().fold(1.0f64, |m, e| m.max(e.abs()));
        Ok(MinGap { s_star, gap, degenerate: gap <= 1e-9 * scale })
    }

    /// Location of the sharpest exchange of Hamming weight between the two
    /// lowest levels: the sign change of `HW0 - HW1` with the largest swing,
    /// refined by bisection.
    pub fn hw_crossing(&self, grid_points: usize) -> Result<Option<f64>> {
        let diff = |s: f64| -> Result<f64> {
            let sl = self.spectrum(s, 2)?;
            Ok(sl.hw_expectations[0] - sl.hw_expectations[1])
        };
        let grid: Vec<f64> = (0..grid_points).map(|i| i as f64 / (grid_points - 1) as f64).collect();
        let d = grid.iter().map(|&s| diff(s)).collect::<Result<Vec<_>>>()?;
        let Some(i) = (1..d.len())
            .filter(|&i| d[i - 1].signum() != d[i].signum() && d[i - 1] != 0.0 && d[i] != 0.0)
            .max_by(|&i, &j| (d[i - 1] - d[i]).abs().total_cmp(&(d[j - 1] - d[j]).abs()))
        else {
            return Ok(None);
        };
        let (mut lo, mut hi) = (grid[i - 1], grid[i]);
        let sign_lo = d[i - 1].signum();
        for _ in 0..50 {
            let mid = 0.5 * (lo + hi);
            if diff(mid)?.signum() == sign_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(Some(0.5 * (lo + hi)))
    }

    /// Spectrum sweep as CSV rows `s,E0,..,E{k-1},HW0,..,HW{k-1}`.
    pub fn spectrum_csv(&self, points: usize, k: usize) -> Result<String> {
        use std::fmt::Write as _;
        let mut out = String::from("s");
        (0..k).for_each(|i| write!(out, ",E{i}").expect("string write"));
        (0..k).for_each(|i| write!(out, ",HW{i}").expect("string write"));
        out.push('\n');
        for i in 0..points {
            let s = if points == 1 { 0.0 } else { i as f64 / (points - 1) as f64 };
            let sl = self.spectrum(s, k)?;
            write!(out, "{s}").expect("string write");
            sl.eigenvalues.iter().chain(&sl.hw_expectations).for_each(|v| write!(out, ",{v}").expect("string write"));
            out.push('\n');
        }
        Ok(out)
    }

    /// Integrate `i dpsi/dt = H(t / t_f) psi` from the uniform superposition
    /// with a fourth-order commutator-free Magnus scheme. Each step applies
    /// two exact exponentials of `a H_X + b H_P`.
    pub fn evolve(&self, t_f_us: f64, steps: usize) -> Result<Evolution> {
        if steps < 1000 {
            return Err(Error::param("evolution needs at least 1000 steps"));
        }
        if !(t_f_us >= 0.0 && t_f_us.is_finite()) {
            return Err(Error::param(format!("invalid anneal time {t_f_us}")));
        }
        let t_total = t_f_us * 1000.0;
        let dim = self.dim();
        let amp = Complex64::new(1.0 / (dim as f64).sqrt(), 0.0);
        let mut psi = vec![amp; dim];
        let mut max_err: f64 = 0.0;
        let ds = 1.0 / steps as f64;
        for step in 0..steps {
            let s0 = step as f64 * ds;
            let mut trial = psi.clone();
            self.magnus_step(&mut trial, s0, ds, t_total)?;
            let mut err = (norm(&trial) - 1.0).abs();
            if err > NORM_TOLERANCE {
                trial = psi.clone();
                self.magnus_step(&mut trial, s0, 0.5 * ds, t_total)?;
                self.magnus_step(&mut trial, s0 + 0.5 * ds, 0.5 * ds, t_total)?;
                err = (norm(&trial) - 1.0).abs();
                if err > NORM_TOLERANCE {
                    return Err(Error::Integration(format!("norm drift {err:e} at s = {s0}")));
                }
            }
            max_err = max_err.max(err);
            psi = trial;
        }
        let p_s = psi[self.planted].norm_sqr();
        Ok(Evolution { state: psi, p_s, max_norm_error: max_err })
    }

    fn magnus_step(&self, psi: &mut [Complex64], s0: f64, ds: f64, t_total: f64) -> Result<()> {
        let r3 = 3f64.sqrt();
        let (c1, c2) = (0.5 - r3 / 6.0, 0.5 + r3 / 6.0);
        let (w_big, w_small) = (0.25 + r3 / 6.0, 0.25 - r3 / 6.0);
        let (a1, b1) = self.schedule.at(s0 + c1 * ds);
        let (a2, b2) = self.schedule.at(s0 + c2 * ds);
        let tau = ds * t_total;
        self.exp_apply(psi, w_big * a1 + w_small * a2, w_big * b1 + w_small * b2, tau)?;
        self.exp_apply(psi, w_small * a1 + w_big * a2, w_small * b1 + w_big * b2, tau)
    }

    /// `psi <- exp(-i tau (a H_X + b H_P)) psi`.
    fn exp_apply(&self, psi: &mut [Complex64], a: f64, b: f64, tau: f64) -> Result<()> {
        if tau == 0.0 {
            return Ok(());
        }
        if self.dim() <= DENSE_EXP_DIM {
            let eig = SymmetricEigen::new(self.dense_matrix(a, b));
            let v = &eig.eigenvectors;
            let re = DVector::from_iterator(psi.len(), psi.iter().map(|c| c.re));
            let im = DVector::from_iterator(psi.len(), psi.iter().map(|c| c.im));
            let (pr, pi) = (v.tr_mul(&re), v.tr_mul(&im));
            let mut cr = DVector::zeros(psi.len());
            let mut ci = DVector::zeros(psi.len());
            for k in 0..psi.len() {
                let phase = Complex64::from_polar(1.0, -tau * eig.eigenvalues[k]);
                let c = Complex64::new(pr[k], pi[k]) * phase;
                cr[k] = c.re;
                ci[k] = c.im;
            }
            let (nr, ni) = (v * cr, v * ci);
            for (k, p) in psi.iter_mut().enumerate() {
                *p = Complex64::new(nr[k], ni[k]);
            }
            Ok(())
        } else {
            krylov_exp(psi, tau, 0, &|x: &[Complex64], y: &mut [Complex64]| self.apply(a, b, x, y))
        }
    }

    /// `V = -A(s) sum sin(theta) cos(phi) + B(s) (sum h cos(theta) + sum J cos(theta_i) cos(theta_j))`.
    pub fn semiclassical_potential(&self, s: f64, theta: &[f64], phi: &[f64]) -> Result<f64> {
        if theta.len() != self.n || phi.len() != self.n {
            return Err(Error::param(format!("angle vectors must have length {}", self.n)));
        }
        let (a, b) = self.schedule.evaluate(s)?;
        Ok(classical_potential(a, b, &self.fields, &self.bonds, theta, phi))
    }
}

/// `<HW>` for a state given by its basis probabilities.
pub fn hamming_weight_expectation(probabilities: impl IntoIterator<Item = f64>) -> f64 {
    probabilities.into_iter().enumerate().map(|(idx, p)| p * idx.count_ones() as f64).sum()
}

pub(crate) fn classical_potential(
    a: f64,
    b: f64,
    fields: &[f64],
    bonds: &[(usize, usize, f64)],
    theta: &[f64],
    phi: &[f64],
) -> f64 {
    let transverse: f64 = theta.iter().zip(phi).map(|(t, p)| t.sin() * p.cos()).sum();
    let z: Vec<f64> = theta.iter().map(|t| t.cos()).collect();
    let ising: f64 = fields.iter().zip(&z).map(|(h, c)| h * c).sum::<f64>()
        + bonds.iter().map(|&(i, j, v)| v * z[i] * z[j]).sum::<f64>();
    -a * transverse + b * ising
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Lowest `k` eigenpairs of a real symmetric operator by Lanczos with full
/// reorthogonalization, locking each converged vector before the next search.
fn lanczos_lowest(dim: usize, k: usize, op: impl Fn(&[f64], &mut [f64])) -> Result<Vec<(f64, Vec<f64>)>> {
    const MAX_BASIS: usize = 120;
    const MAX_RESTARTS: usize = 200;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut locked: Vec<(f64, Vec<f64>)> = Vec::with_capacity(k);
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
    let project = |v: &mut [f64], basis: &[Vec<f64>]| {
        for _ in 0..2 {
            for q in basis {
                let c = dot(v, q);
                v.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
        }
    };
    while locked.len() < k {
        let locked_vecs: Vec<Vec<f64>> = locked.iter().map(|(_, v)| v.clone()).collect();
        let mut start: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() - 0.5).collect();
        let mut converged = None;
        for _ in 0..MAX_RESTARTS {
            project(&mut start, &locked_vecs);
            let nrm = dot(&start, &start).sqrt();
            start.iter_mut().for_each(|x| *x /= nrm);
            let mut basis: Vec<Vec<f64>> = vec![start.clone()];
            let mut alpha = Vec::new();
            let mut beta: Vec<f64> = Vec::new();
            let mut w = vec![0.0; dim];
            let m_cap = MAX_BASIS.min(dim - locked.len());
            loop {
                let j = basis.len() - 1;
                op(&basis[j], &mut w);
                alpha.push(dot(&w, &basis[j]));
                project(&mut w, &locked_vecs);
                project(&mut w, &basis);
                let b = dot(&w, &w).sqrt();
                if basis.len() == m_cap || b < 1e-12 {
                    beta.push(b);
                    break;
                }
                beta.push(b);
                basis.push(w.iter().map(|x| x / b).collect());
            }
            let m = alpha.len();
            let t = DMatrix::from_fn(m, m, |i, j| {
                if i == j {
                    alpha[i]
                } else if i + 1 == j {
                    beta[i]
                } else if j + 1 == i {
                    beta[j]
                } else {
                    0.0
                }
            });
            let eig = SymmetricEigen::new(t);
            let lowest = (0..m).min_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j])).expect("m > 0");
            let theta = eig.eigenvalues[lowest];
            let y = eig.eigenvectors.column(lowest);
            let residual = (beta[m - 1] * y[m - 1]).abs();
            let mut ritz = vec![0.0; dim];
            for (c, q) in y.iter().zip(&basis) {
                ritz.iter_mut().zip(q).for_each(|(r, x)| *r += c * x);
            }
            if residual <= 1e-10 * theta.abs().max(1.0) {
                converged = Some((theta, ritz));
                break;
            }
            start = ritz;
        }
        let (theta, mut v) = converged.ok_or_else(|| Error::Integration("Lanczos did not converge".into()))?;
        project(&mut v, &locked_vecs);
        let nrm = dot(&v, &v).sqrt();
        v.iter_mut().for_each(|x| *x /= nrm);
        locked.push((theta, v));
    }
    locked.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(locked)
}

/// `psi <- exp(-i tau H) psi` by a Krylov projection; the step is split in
/// halves until the Lanczos error estimate is small.
fn krylov_exp(
    psi: &mut [Complex64],
    tau: f64,
    depth: usize,
    op: &dyn Fn(&[Complex64], &mut [Complex64]),
) -> Result<()> {
    const MAX_BASIS: usize = 40;
    let dim = psi.len();
    let nrm = norm(psi);
    let dotc = |x: &[Complex64], y: &[Complex64]| x.iter().zip(y).map(|(a, b)| a.conj() * b).sum::<Complex64>();
    let mut basis: Vec<Vec<Complex64>> = vec![psi.iter().map(|c| c / nrm).collect()];
    let mut alpha = Vec::new();
    let mut beta = Vec::new();
    let mut w = vec![Complex64::new(0.0, 0.0); dim];
    loop {
        let j = basis.len() - 1;
        op(&basis[j], &mut w);
        alpha.push(dotc(&basis[j], &w).re);
        for _ in 0..2 {
            for q in &basis {
                let c = dotc(q, &w);
                w.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
        }
        let b = norm(&w);
        beta.push(b);
        if basis.len() == MAX_BASIS.min(dim) || b < 1e-13 {
            break;
        }
        basis.push(w.iter().map(|x| x / b).collect());
    }
    let m = alpha.len();
    let t = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(t);
    let coeff: Vec<Complex64> = (0..m)
        .map(|r| {
            (0..m)
                .map(|k| {
                    let v = &eig.eigenvectors;
                    Complex64::from_polar(v[(r, k)] * v[(0, k)], -tau * eig.eigenvalues[k])
                })
                .sum()
        })
        .collect();
    let err = beta[m - 1] * coeff[m - 1].norm();
    if err > 1e-12 && m == MAX_BASIS.min(dim) {
        if depth > 40 {
            return Err(Error::Integration("Krylov exponential failed to converge".into()));
        }
        krylov_exp(psi, 0.5 * tau, depth + 1, op)?;
        return krylov_exp(psi, 0.5 * tau, depth + 1, op);
    }
    for (i, p) in psi.iter_mut().enumerate() {
        *p = (0..m).map(|r| coeff[r] * basis[r][i]).sum::<Complex64>() * nrm;
    }
    Ok(())
}
