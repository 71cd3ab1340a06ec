use rand::Rng;
use serde::{Deserialize, Serialize};

use super::problem::{metropolis, uniform, Problem};
use super::SolverConfig;
use crate::scalar::Real;

/// Spin-vector angles, one per active qubit, each in `(0, 2pi]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmcState<F> {
    pub theta: Vec<F>,
}

impl<F: Real> SvmcState<F> {
    /// Every rotor along the transverse field.
    pub fn transverse(n: usize) -> Self {
        Self { theta: vec![F::FRAC_PI_2(); n] }
    }

    /// Projection onto the computational basis by the sign of `cos(theta)`.
    pub fn spins(&self) -> Vec<i8> {
        self.theta.iter().map(|t| if t.cos() >= F::zero() { 1 } else { -1 }).collect()
    }

    /// `V = -A sum sin(theta_i) + B (sum h_i cos(theta_i) + sum J_ij cos(theta_i) cos(theta_j))`.
    pub fn potential(&self, p: &Problem<F>, a: F, b: F) -> F {
        let c: Vec<F> = self.theta.iter().map(|t| t.cos()).collect();
        let transverse: F = self.theta.iter().map(|t| t.sin()).sum();
        -a * transverse + b * p.energy(&c)
    }
}

pub(super) fn anneal<F: Real, R: Rng + ?Sized>(p: &Problem<F>, cfg: &SolverConfig<F>, rng: &mut R) -> SvmcState<F> {
    let mut state = SvmcState::<F>::transverse(p.len());
    let mut cos: Vec<F> = state.theta.iter().map(|t| t.cos()).collect();
    let mut sin: Vec<F> = state.theta.iter().map(|t| t.sin()).collect();
    let tau = F::TAU();
    for k in 1..=cfg.n_sweeps {
        let (a, b) = cfg.schedule.at(cfg.s_at(k));
        for i in 0..p.len() {
            let proposal = tau * (F::one() - uniform::<F, R>(rng));
            let (s_new, c_new) = proposal.sin_cos();
            let delta = -a * (s_new - sin[i]) + b * (c_new - cos[i]) * p.local_field(i, &cos);
            if metropolis(delta, cfg.beta, rng) {
                state.theta[i] = proposal;
                cos[i] = c_new;
                sin[i] = s_new;
            }
        }
    }
    state
}
