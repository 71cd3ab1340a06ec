use std::sync::Arc;

use crate::scalar::Thirds;
use crate::topology::{ChimeraTopology, Edge, QubitId, CELL_QUBITS};

use super::{InstanceMeta, IsingInstance, SpinState, Term, TermKind};

/// Local fields of the 8-qubit gadget in thirds, indexed by position in the cell.
pub const GADGET_FIELDS: [i64; 8] = [-3, -2, 2, -3, 1, 3, -3, 3];

/// Couplings in whole units: row `a` is qubit `a` of partition A, column `b`
/// is qubit `4 + b` of partition B.
pub const GADGET_COUPLINGS: [[i64; 4]; 4] = [
    [1, -1, -1, -1],
    [-1, -1, 1, -1],
    [-1, -1, -1, -1],
    [-1, -1, -1, -1],
];

/// Gadget term placed on `cell`. Couplers absent from the topology are skipped.
pub fn gadget_term(topo: &ChimeraTopology, cell: usize) -> Term {
    let base = (cell * CELL_QUBITS) as QubitId;
    let h = GADGET_FIELDS
        .iter()
        .enumerate()
        .filter(|(k, _)| topo.is_active(base + *k as QubitId))
        .map(|(k, &v)| (base + k as QubitId, Thirds(v)))
        .collect();
    let mut j = Vec::with_capacity(16);
    for (a, row) in GADGET_COUPLINGS.iter().enumerate() {
        for (b, &v) in row.iter().enumerate() {
            let e = Edge(base + a as QubitId, base + 4 + b as QubitId);
            if topo.has_coupler(e.0, e.1) {
                j.push((e, Thirds::units(v)));
            }
        }
    }
    Term { kind: TermKind::Gadget { cell }, h, j }
}

/// The gadget alone on a single-cell topology.
pub fn gadget_hamiltonian() -> IsingInstance {
    let topo = Arc::new(ChimeraTopology::ideal(1).expect("L=1 is valid"));
    let term = gadget_term(&topo, 0);
    IsingInstance::from_terms(topo, vec![term], SpinState::all_up(CELL_QUBITS), InstanceMeta::custom())
        .expect("gadget is a valid instance")
}
