use rand::Rng;

use super::problem::{metropolis, Problem};
use super::SolverConfig;
use crate::scalar::Real;

/// One simulated-annealing run at `beta(s) = cfg.beta * B(s)`. With
/// `cell_moves`, each single-spin sweep is followed by a sweep of whole-cell
/// flips.
pub(super) fn anneal<F: Real, R: Rng + ?Sized>(
    p: &Problem<F>,
    cfg: &SolverConfig<F>,
    cell_moves: bool,
    rng: &mut R,
) -> Vec<i8> {
    let mut x: Vec<F> = (0..p.len()).map(|_| if rng.random::<bool>() { F::one() } else { -F::one() }).collect();
    for k in 1..=cfg.n_sweeps {
        let beta = cfg.beta * cfg.schedule.at(cfg.s_at(k)).1;
        sweep(p, &mut x, beta, rng);
        if cell_moves {
            cell_sweep(p, &mut x, beta, rng);
        }
    }
    x.iter().map(|&v| if v > F::zero() { 1 } else { -1 }).collect()
}

/// Single-spin Metropolis sweep in id order, which visits cells in order and
/// partition A before partition B inside each cell.
pub(super) fn sweep<F: Real, R: Rng + ?Sized>(p: &Problem<F>, x: &mut [F], beta: F, rng: &mut R) {
    let two = F::lit(2.0);
    for i in 0..p.len() {
        let delta = -two * x[i] * p.local_field(i, x);
        if metropolis(delta, beta, rng) {
            x[i] = -x[i];
        }
    }
}

/// Flip each cell as a block; only fields and couplings leaving the cell
/// change sign under the move.
fn cell_sweep<F: Real, R: Rng + ?Sized>(p: &Problem<F>, x: &mut [F], beta: F, rng: &mut R) {
    let two = F::lit(2.0);
    for cell in p.cells() {
        let mut e = F::zero();
        for &i in &cell.members {
            e += p.field(i) * x[i];
        }
        for &(i, j, v) in &cell.external {
            e += v * x[i] * x[j];
        }
        if metropolis(-two * e, beta, rng) {
            for &i in &cell.members {
                x[i] = -x[i];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::super::tests::pair_instance;
    use super::super::{replica_rng, run_sa, run_sac, SolverConfig, SolverKind};
    use super::*;
    use crate::instance::{InstanceClass, IsingInstance, SpinState, Term, TermKind, InstanceMeta};
    use crate::scalar::Thirds;
    use crate::schedule::Schedule;
    use crate::topology::{ChimeraTopology, Edge};

    fn cfg(kind: SolverKind, sweeps: usize, replicas: usize, beta: f64, schedule: Schedule<f64>) -> SolverConfig<f64> {
        let mut c = SolverConfig::new(kind, InstanceClass::Custom, sweeps, replicas, 17);
        c.beta = beta;
        c.schedule = schedule;
        c
    }

    #[test]
    fn cold_single_spin_aligns_with_field() {
        let topo = Arc::new(ChimeraTopology::build(1, &[1, 2, 3, 4, 5, 6, 7], &[]).unwrap());
        let inst = IsingInstance::from_parts(topo, &[(0, Thirds::units(-1))], &[], SpinState::all_up(8)).unwrap();
        let c = cfg(SolverKind::Sa, 5, 200, 50.0, Schedule::constant(0.0, 1.0));
        assert!(run_sa(&inst, &c).unwrap().iter().all(|r| r.final_state.0[0] == 1));
    }

    #[test]
    fn ferromagnetic_pair_at_beta_five() {
        let inst = pair_instance(-1);
        let c = cfg(SolverKind::Sa, 100, 1000, 0.132, Schedule::builtin("dw2x-like").unwrap());
        let recs = run_sa(&inst, &c).unwrap();
        let rate = recs.iter().filter(|r| r.success).count() as f64 / 1000.0;
        // both aligned states are ground states; misalignment costs 2 at beta ~ 5
        let exact = 1.0 / (1.0 + (-2.0 * 0.132 * 38.0f64).exp());
        assert!(exact > 0.99);
        assert!(rate > 0.99, "rate {rate}");
    }

    #[test]
    fn fixed_beta_matches_gibbs() {
        // a pair with J = -1 and h_0 = 1/3: four energies, exact Boltzmann weights
        let topo = Arc::new(ChimeraTopology::build(1, &[1, 2, 3, 5, 6, 7], &[]).unwrap());
        let inst = IsingInstance::from_parts(
            topo,
            &[(0, Thirds(1))],
            &[(Edge(0, 4), Thirds::units(-1))],
            SpinState::all_up(8),
        )
        .unwrap();
        let p = Problem::<f64>::new(&inst);
        let beta = 0.7;
        let mut counts = [0usize; 4];
        let mut rng = replica_rng(9, 0);
        let mut x = vec![1.0, 1.0];
        let n = 200_000;
        for _ in 0..n {
            sweep(&p, &mut x, beta, &mut rng);
            counts[(x[0] < 0.0) as usize + 2 * (x[1] < 0.0) as usize] += 1;
        }
        let energy = |s0: f64, s1: f64| s0 / 3.0 - s0 * s1;
        let states = [(1.0, 1.0), (-1.0, 1.0), (1.0, -1.0), (-1.0, -1.0)];
        let weights: Vec<f64> = states.iter().map(|&(a, b)| (-beta * energy(a, b)).exp()).collect();
        let z: f64 = weights.iter().sum();
        for (c, w) in counts.iter().zip(&weights) {
            let expect = w / z;
            let got = *c as f64 / n as f64;
            assert!((got - expect).abs() < 0.01, "got {got}, expected {expect}");
        }
    }

    /// Two cells joined by one logical edge: intra couplers -3, inter couplers -1.
    fn two_cell_ferromagnet() -> IsingInstance {
        let topo = Arc::new(ChimeraTopology::build(2, &(16..32).collect::<Vec<_>>(), &[]).unwrap());
        let mut j = Vec::new();
        for cell in 0..2u32 {
            for a in 0..4 {
                for b in 4..8 {
                    j.push((Edge(8 * cell + a, 8 * cell + b), Thirds::units(-3)));
                }
            }
        }
        for e in topo.inter_cell_ids(0, 1).unwrap() {
            j.push((e, Thirds::units(-1)));
        }
        let term = Term { kind: TermKind::Custom { label: "ferro".into() }, h: vec![], j };
        IsingInstance::from_terms(topo, vec![term], SpinState::all_up(32), InstanceMeta::custom()).unwrap()
    }

    #[test]
    fn cell_flip_repairs_misaligned_cell() {
        let inst = two_cell_ferromagnet();
        let p = Problem::<f64>::new(&inst);
        assert_eq!(p.cells().len(), 2);
        // cell 1 reversed: four broken inter couplers of strength 1/3 after normalizing by 3
        let mut x: Vec<f64> = (0..16).map(|i| if i < 8 { 1.0 } else { -1.0 }).collect();
        let before = p.energy(&x);
        let mut flipped = x.clone();
        flipped[8..].iter_mut().for_each(|v| *v = -*v);
        let delta = p.energy(&flipped) - before;
        assert!((delta + 8.0 / 3.0).abs() < 1e-12);
        let mut rng = replica_rng(1, 0);
        cell_sweep(&p, &mut x, 100.0, &mut rng);
        assert!(x.iter().all(|&v| v == x[0]));
    }

    #[test]
    fn sac_solves_ferromagnet() {
        let inst = two_cell_ferromagnet();
        let c = cfg(SolverKind::Sac, 50, 100, 0.132, Schedule::builtin("dw2x-like").unwrap());
        let recs = run_sac(&inst, &c).unwrap();
        assert!(recs.iter().all(|r| r.energy == Thirds::units(-100)));
    }
}
