use rand::Rng;

use super::problem::{metropolis, uniform, Problem};
use super::SolverConfig;
use crate::scalar::Real;

/// Imaginary-time configuration: for each qubit, `m` slices packed into
/// 64-bit words, bit set meaning spin down.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SqaState {
    m: usize,
    words: usize,
    bits: Vec<u64>,
}

impl SqaState {
    pub fn random<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Self {
        let words = m.div_ceil(64);
        let mut bits: Vec<u64> = (0..n * words).map(|_| rng.random()).collect();
        if !m.is_multiple_of(64) {
            let keep = (1u64 << m) - 1;
            bits.iter_mut().for_each(|w| *w &= keep);
        }
        Self { m, words, bits }
    }

    pub fn slices(&self) -> usize {
        self.m
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    #[inline]
    pub fn is_down(&self, i: usize, t: usize) -> bool {
        self.bits[i * self.words + t / 64] >> (t % 64) & 1 == 1
    }

    /// Classical state of one slice.
    pub fn slice(&self, t: usize) -> Vec<i8> {
        (0..self.bits.len() / self.words).map(|i| if self.is_down(i, t) { -1 } else { 1 }).collect()
    }

    /// Mean Hamming weight over slices.
    pub fn mean_hamming_weight(&self) -> f64 {
        self.bits.iter().map(|w| w.count_ones() as f64).sum::<f64>() / self.m as f64
    }
}

/// Bitmask over slices for the arc of `len` slices starting at `start`, wrapping.
fn arc_mask(m: usize, start: usize, len: usize, out: &mut [u64]) {
    out.iter_mut().for_each(|w| *w = 0);
    for d in 0..len {
        let t = (start + d) % m;
        out[t / 64] |= 1 << (t % 64);
    }
}

/// Successes before the first failure for trials of probability `p`.
fn geometric<F: Real, R: Rng + ?Sized>(p: F, rng: &mut R) -> usize {
    if p >= F::one() {
        return usize::MAX;
    }
    if p <= F::zero() {
        return 0;
    }
    let u: F = F::one() - uniform::<F, R>(rng);
    (u.ln() / p.ln()).floor().to_usize().unwrap_or(usize::MAX)
}

pub(super) fn anneal<F: Real, R: Rng + ?Sized>(p: &Problem<F>, cfg: &SolverConfig<F>, rng: &mut R) -> Vec<i8> {
    let m = cfg.sqa_slices;
    let mf = F::from_usize_lossy(m);
    let mut state = SqaState::random(p.len(), m, rng);
    let mut mask = vec![0u64; state.words];
    for k in 1..=cfg.n_sweeps {
        let (a, b) = cfg.schedule.at(cfg.s_at(k));
        // tanh(beta A / M) = exp(-2 J_perp), so bonds join with 1 - tanh(beta A / M)
        let join = F::one() - (cfg.beta * a / mf).tanh();
        let slice_beta = cfg.beta * b / mf;
        for i in 0..p.len() {
            let len = grow_cluster(&state, i, join, rng, &mut mask);
            let delta = cluster_delta(p, &state, i, &mask, len);
            if metropolis(delta, slice_beta, rng) {
                let w = state.words;
                state.bits[i * w..(i + 1) * w].iter_mut().zip(&mask).for_each(|(x, y)| *x ^= y);
            }
        }
    }
    state.slice(rng.random_range(0..m))
}

/// Wolff growth along the periodic imaginary-time ring of qubit `i`. Writes
/// the cluster mask and returns its size.
fn grow_cluster<F: Real, R: Rng + ?Sized>(
    state: &SqaState,
    i: usize,
    join: F,
    rng: &mut R,
    mask: &mut [u64],
) -> usize {
    let m = state.m;
    let t0 = rng.random_range(0..m);
    let down = state.is_down(i, t0);
    let budget = geometric(join, rng);
    let mut forward = 0;
    while forward < m - 1 && forward < budget && state.is_down(i, (t0 + forward + 1) % m) == down {
        forward += 1;
    }
    let mut backward = 0;
    if forward < m - 1 {
        let budget = geometric(join, rng);
        while forward + backward < m - 1
            && backward < budget
            && state.is_down(i, (t0 + m - backward - 1) % m) == down
        {
            backward += 1;
        }
    }
    let len = 1 + forward + backward;
    arc_mask(m, (t0 + m - backward) % m, len, mask);
    len
}

/// Change of the summed slice energies `sum_t (h_i s_i^t + sum_j J_ij s_i^t s_j^t)`
/// when the masked slices of qubit `i` are flipped.
fn cluster_delta<F: Real>(p: &Problem<F>, state: &SqaState, i: usize, mask: &[u64], len: usize) -> F {
    let row = state.row(i);
    let size = len as i64;
    // sum over the cluster of s_i^t
    let down_i: i64 = row.iter().zip(mask).map(|(x, y)| (x & y).count_ones() as i64).sum();
    let mut e = p.field(i) * F::from_i64(size - 2 * down_i).expect("small integer");
    for &(j, v) in p.neighbors(i) {
        let other = state.row(j);
        let anti: i64 = row.iter().zip(other).zip(mask).map(|((x, o), y)| ((x ^ o) & y).count_ones() as i64).sum();
        e += v * F::from_i64(size - 2 * anti).expect("small integer");
    }
    -F::lit(2.0) * e
}
