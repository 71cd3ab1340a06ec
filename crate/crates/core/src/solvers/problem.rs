use rand::Rng;

use crate::instance::{IsingInstance, SpinState};
use crate::scalar::Real;
use crate::topology::{ChimeraTopology, QubitId};

/// An instance compiled for the solvers: active qubits renumbered densely in
/// id order, fields and couplings divided by the energy scale, adjacency in
/// compressed rows.
#[derive(Clone, Debug)]
pub struct Problem<F> {
    num_ids: usize,
    ids: Vec<QubitId>,
    h: Vec<F>,
    row: Vec<usize>,
    adj: Vec<(usize, F)>,
    cells: Vec<CellBlock<F>>,
}

/// Active spins of one unit cell and the couplings leaving it.
#[derive(Clone, Debug)]
pub(crate) struct CellBlock<F> {
    pub color: usize,
    pub members: Vec<usize>,
    pub external: Vec<(usize, usize, F)>,
}

impl<F: Real> Problem<F> {
    pub fn new(inst: &IsingInstance) -> Self {
        let topo = inst.topology();
        let scale = inst.energy_scale().to_real::<F>();
        let ids: Vec<QubitId> = topo.qubits().collect();
        let local = |q: QubitId| ids.binary_search(&q).expect("coupler joins active qubits");
        let h = ids.iter().map(|&q| inst.fields()[q as usize].to_real::<F>() / scale).collect();
        let mut lists: Vec<Vec<(usize, F)>> = vec![Vec::new(); ids.len()];
        for (e, v) in inst.nonzero_couplings() {
            let (a, b) = (local(e.0), local(e.1));
            let j = v.to_real::<F>() / scale;
            lists[a].push((b, j));
            lists[b].push((a, j));
        }
        let mut row = Vec::with_capacity(ids.len() + 1);
        let mut adj = Vec::new();
        row.push(0);
        for list in &mut lists {
            list.sort_by_key(|&(j, _)| j);
            adj.extend_from_slice(list);
            row.push(adj.len());
        }
        let side = topo.side();
        let mut cells: Vec<CellBlock<F>> = Vec::new();
        for (i, &q) in ids.iter().enumerate() {
            let cell = ChimeraTopology::cell_of(q);
            if cells.last().is_none_or(|c| ChimeraTopology::cell_of(ids[c.members[0]]) != cell) {
                let color = (cell / side + cell % side) % 2;
                cells.push(CellBlock { color, members: Vec::new(), external: Vec::new() });
            }
            let block = cells.last_mut().expect("just pushed");
            block.members.push(i);
            for &(j, v) in &lists[i] {
                if ChimeraTopology::cell_of(ids[j]) != cell {
                    block.external.push((i, j, v));
                }
            }
        }
        cells.sort_by_key(|c| c.color);
        Self { num_ids: topo.num_ids(), ids, h, row, adj, cells }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[QubitId] {
        &self.ids
    }

    pub fn field(&self, i: usize) -> F {
        self.h[i]
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, F)] {
        &self.adj[self.row[i]..self.row[i + 1]]
    }

    /// `h_i + sum_j J_ij x_j` for an arbitrary per-spin value `x`.
    #[inline]
    pub fn local_field(&self, i: usize, x: &[F]) -> F {
        self.neighbors(i).iter().fold(self.h[i], |acc, &(j, v)| acc + v * x[j])
    }

    /// Cells ordered colour 0 first, then colour 1.
    pub(crate) fn cells(&self) -> &[CellBlock<F>] {
        &self.cells
    }

    /// Normalized classical energy of `spins`.
    pub fn energy(&self, spins: &[F]) -> F {
        let mut e = F::zero();
        for i in 0..self.len() {
            e += self.h[i] * spins[i];
            for &(j, v) in self.neighbors(i) {
                if j > i {
                    e += v * spins[i] * spins[j];
                }
            }
        }
        e
    }

    /// Full-range spin state with masked qubits set up.
    pub fn expand(&self, local: &[i8]) -> SpinState {
        let mut state = SpinState::all_up(self.num_ids);
        for (&q, &s) in self.ids.iter().zip(local) {
            state.0[q as usize] = s;
        }
        state
    }
}

/// Uniform draw in `[0, 1)`.
#[inline]
pub(crate) fn uniform<F: Real, R: Rng + ?Sized>(rng: &mut R) -> F {
    F::lit(rng.random::<f64>())
}

/// Metropolis-Hastings acceptance of an energy change `delta` at inverse temperature `beta`.
#[inline]
pub(crate) fn metropolis<F: Real, R: Rng + ?Sized>(delta: F, beta: F, rng: &mut R) -> bool {
    delta <= F::zero() || uniform::<F, R>(rng) < (-beta * delta).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::gadget_hamiltonian;
    use crate::scalar::Thirds;

    #[test]
    fn normalized_energy_matches_exact() {
        let g = gadget_hamiltonian();
        let p = Problem::<f64>::new(&g);
        assert_eq!(p.len(), 8);
        for mask in 0..256u32 {
            let spins: Vec<i8> = (0..8).map(|i| if mask >> i & 1 == 1 { -1 } else { 1 }).collect();
            let x: Vec<f64> = spins.iter().map(|&s| s as f64).collect();
            let exact = g.energy(&p.expand(&spins)).unwrap();
            assert!((p.energy(&x) - exact.to_f64()).abs() < 1e-12);
        }
        assert_eq!(g.energy_scale(), Thirds::units(1));
        assert_eq!(p.cells().len(), 1);
        assert!(p.cells()[0].external.is_empty());
    }
}
