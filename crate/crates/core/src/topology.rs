//! Chimera hardware graphs and the derived logical (unit-cell) graph.
//!
//! Qubits are numbered cell-major: `id = 8 * (row * L + col) + k`. Indices
//! `k < 4` form partition A, which couples vertically to the same `k` in the
//! cells above and below; `k >= 4` form partition B, which couples
//! horizontally.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type QubitId = u32;

/// Largest supported grid side.
pub const MAX_SIDE: usize = 16;
pub const CELL_QUBITS: usize = 8;

/// Undirected edge with the smaller endpoint first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge(pub QubitId, pub QubitId);

impl Edge {
    pub fn new(a: QubitId, b: QubitId) -> Self {
        if a <= b {
            Edge(a, b)
        } else {
            Edge(b, a)
        }
    }
}

/// Serialized form of a topology: side length plus the fault masks.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopologySpec {
    #[serde(rename = "L")]
    pub side: usize,
    #[serde(default)]
    pub faulty_qubits: Vec<QubitId>,
    #[serde(default)]
    pub faulty_couplers: Vec<[QubitId; 2]>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Partition {
    A,
    B,
}

#[derive(Clone, Debug)]
pub struct ChimeraTopology {
    side: usize,
    active: Vec<bool>,
    couplers: Vec<Edge>,
    coupler_index: HashMap<Edge, usize>,
    adjacency: Vec<Vec<QubitId>>,
    faulty_qubits: BTreeSet<QubitId>,
    faulty_couplers: BTreeSet<Edge>,
}

/// All couplers of the fault-free `side x side` Chimera graph, sorted.
pub fn ideal_couplers(side: usize) -> Vec<Edge> {
    let mut edges = Vec::with_capacity(16 * side * side + 8 * side * side.saturating_sub(1));
    for row in 0..side {
        for col in 0..side {
            let base = (CELL_QUBITS * (row * side + col)) as QubitId;
            for a in 0..4 {
                for b in 4..8 {
                    edges.push(Edge(base + a, base + b));
                }
            }
            if row + 1 < side {
                let below = (CELL_QUBITS * ((row + 1) * side + col)) as QubitId;
                for k in 0..4 {
                    edges.push(Edge(base + k, below + k));
                }
            }
            if col + 1 < side {
                let right = base + CELL_QUBITS as QubitId;
                for k in 4..8 {
                    edges.push(Edge(base + k, right + k));
                }
            }
        }
    }
    edges.sort_unstable();
    edges
}

impl ChimeraTopology {
    /// Fault-free topology.
    pub fn ideal(side: usize) -> Result<Self> {
        Self::build(side, &[], &[])
    }

    /// Build an `L x L` Chimera graph with the given qubits and couplers masked.
    pub fn build(side: usize, faulty_qubits: &[QubitId], faulty_couplers: &[Edge]) -> Result<Self> {
        if side == 0 || side > MAX_SIDE {
            return Err(Error::param(format!("grid side {side} outside [1, {MAX_SIDE}]")));
        }
        let n = CELL_QUBITS * side * side;
        let ideal = ideal_couplers(side);
        let ideal_set: BTreeSet<Edge> = ideal.iter().copied().collect();

        let mut fq = BTreeSet::new();
        for &q in faulty_qubits {
            if q as usize >= n {
                return Err(Error::param(format!("faulty qubit {q} out of range for L={side}")));
            }
            fq.insert(q);
        }
        let mut fc = BTreeSet::new();
        for &e in faulty_couplers {
            let e = Edge::new(e.0, e.1);
            if e.1 as usize >= n || !ideal_set.contains(&e) {
                return Err(Error::param(format!(
                    "faulty coupler ({}, {}) is not a coupler of the L={side} graph",
                    e.0, e.1
                )));
            }
            fc.insert(e);
        }

        let mut active = vec![true; n];
        for &q in &fq {
            active[q as usize] = false;
        }
        let couplers: Vec<Edge> = ideal
            .into_iter()
            .filter(|e| active[e.0 as usize] && active[e.1 as usize] && !fc.contains(e))
            .collect();
        let mut adjacency = vec![Vec::new(); n];
        for e in &couplers {
            adjacency[e.0 as usize].push(e.1);
            adjacency[e.1 as usize].push(e.0);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        let coupler_index = couplers.iter().enumerate().map(|(i, &e)| (e, i)).collect();
        Ok(Self {
            side,
            active,
            couplers,
            coupler_index,
            adjacency,
            faulty_qubits: fq,
            faulty_couplers: fc,
        })
    }

    pub fn from_spec(spec: &TopologySpec) -> Result<Self> {
        let couplers: Vec<Edge> = spec.faulty_couplers.iter().map(|[a, b]| Edge::new(*a, *b)).collect();
        Self::build(spec.side, &spec.faulty_qubits, &couplers)
    }

    pub fn spec(&self) -> TopologySpec {
        TopologySpec {
            side: self.side,
            faulty_qubits: self.faulty_qubits.iter().copied().collect(),
            faulty_couplers: self.faulty_couplers.iter().map(|e| [e.0, e.1]).collect(),
        }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    /// Size of the id space, `8 L^2`, including masked qubits.
    pub fn num_ids(&self) -> usize {
        self.active.len()
    }

    pub fn num_cells(&self) -> usize {
        self.side * self.side
    }

    pub fn is_active(&self, q: QubitId) -> bool {
        self.active.get(q as usize).copied().unwrap_or(false)
    }

    /// Active qubit ids in ascending order.
    pub fn qubits(&self) -> impl Iterator<Item = QubitId> + '_ {
        self.active
            .iter()
            .enumerate()
            .filter(|(_, &a)| a)
            .map(|(i, _)| i as QubitId)
    }

    pub fn num_qubits(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    /// Active couplers, sorted.
    pub fn couplers(&self) -> &[Edge] {
        &self.couplers
    }

    pub fn coupler_index(&self, a: QubitId, b: QubitId) -> Option<usize> {
        self.coupler_index.get(&Edge::new(a, b)).copied()
    }

    pub fn has_coupler(&self, a: QubitId, b: QubitId) -> bool {
        self.coupler_index(a, b).is_some()
    }

    pub fn faulty_qubits(&self) -> &BTreeSet<QubitId> {
        &self.faulty_qubits
    }

    pub fn faulty_couplers(&self) -> &BTreeSet<Edge> {
        &self.faulty_couplers
    }

    /// Sorted active neighbours of an active qubit.
    pub fn neighbors(&self, q: QubitId) -> Result<&[QubitId]> {
        if !self.is_active(q) {
            return Err(Error::param(format!("qubit {q} is not active")));
        }
        Ok(&self.adjacency[q as usize])
    }

    pub(crate) fn adjacency(&self, q: QubitId) -> &[QubitId] {
        &self.adjacency[q as usize]
    }

    pub fn cell_of(q: QubitId) -> usize {
        q as usize / CELL_QUBITS
    }

    pub fn partition_of(q: QubitId) -> Partition {
        if q as usize % CELL_QUBITS < 4 {
            Partition::A
        } else {
            Partition::B
        }
    }

    pub fn cell_coords(&self, cell: usize) -> (usize, usize) {
        (cell / self.side, cell % self.side)
    }

    /// The eight ids of a cell, masked or not.
    pub fn cell_ids(cell: usize) -> std::ops::Range<QubitId> {
        let base = (cell * CELL_QUBITS) as QubitId;
        base..base + CELL_QUBITS as QubitId
    }

    /// Number of active intra-cell couplers of `cell`.
    pub fn intra_coupler_count(&self, cell: usize) -> usize {
        let base = (cell * CELL_QUBITS) as QubitId;
        (0..4)
            .flat_map(|a| (4..8).map(move |b| (base + a, base + b)))
            .filter(|&(a, b)| self.has_coupler(a, b))
            .count()
    }

    pub fn cell_qubits_active(&self, cell: usize) -> usize {
        Self::cell_ids(cell).filter(|&q| self.is_active(q)).count()
    }

    /// A cell with all eight qubits and all sixteen intra couplers.
    pub fn is_complete_cell(&self, cell: usize) -> bool {
        self.cell_qubits_active(cell) == CELL_QUBITS && self.intra_coupler_count(cell) == 16
    }

    /// Physical couplers joining two grid-adjacent cells, in `k` order.
    /// Returns `None` when the cells are not grid neighbours.
    pub fn inter_cell_ids(&self, c1: usize, c2: usize) -> Option<[Edge; 4]> {
        let (lo, hi) = (c1.min(c2), c1.max(c2));
        let (r1, q1) = self.cell_coords(lo);
        let (r2, q2) = self.cell_coords(hi);
        let offset = if r2 == r1 + 1 && q1 == q2 {
            0
        } else if r1 == r2 && q2 == q1 + 1 {
            4
        } else {
            return None;
        };
        let a = (lo * CELL_QUBITS) as QubitId;
        let b = (hi * CELL_QUBITS) as QubitId;
        Some(std::array::from_fn(|k| Edge(a + offset + k as QubitId, b + offset + k as QubitId)))
    }

    pub fn logical_graph(&self) -> LogicalGraph {
        self.logical_graph_with(LogicalOptions::default())
    }

    pub fn logical_graph_with(&self, opts: LogicalOptions) -> LogicalGraph {
        let cells: Vec<usize> = (0..self.num_cells())
            .filter(|&c| {
                self.cell_qubits_active(c) == CELL_QUBITS && {
                    let intra = self.intra_coupler_count(c);
                    intra == 16 || (opts.allow_missing_intra && intra == 15)
                }
            })
            .collect();
        let present: BTreeSet<usize> = cells.iter().copied().collect();
        let mut edges = Vec::new();
        for &c in &cells {
            let (r, q) = self.cell_coords(c);
            let mut candidates = Vec::with_capacity(2);
            if r + 1 < self.side {
                candidates.push(c + self.side);
            }
            if q + 1 < self.side {
                candidates.push(c + 1);
            }
            for d in candidates {
                if !present.contains(&d) {
                    continue;
                }
                let links = self.inter_cell_ids(c, d).expect("grid neighbours");
                if links.iter().all(|e| self.has_coupler(e.0, e.1)) {
                    edges.push((c, d));
                }
            }
        }
        edges.sort_unstable();
        LogicalGraph::new(self.side, cells, edges)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogicalOptions {
    /// Admit cells missing exactly one intra-cell coupler.
    pub allow_missing_intra: bool,
}

/// Graph of usable unit cells; edges carry all four inter-cell couplers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LogicalGraph {
    side: usize,
    cells: Vec<usize>,
    edges: Vec<(usize, usize)>,
    adjacency: HashMap<usize, Vec<usize>>,
}

impl LogicalGraph {
    fn new(side: usize, cells: Vec<usize>, edges: Vec<(usize, usize)>) -> Self {
        let mut adjacency: HashMap<usize, Vec<usize>> = cells.iter().map(|&c| (c, Vec::new())).collect();
        for &(a, b) in &edges {
            adjacency.get_mut(&a).expect("cell").push(b);
            adjacency.get_mut(&b).expect("cell").push(a);
        }
        for list in adjacency.values_mut() {
            list.sort_unstable();
        }
        Self { side, cells, edges, adjacency }
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn contains_cell(&self, cell: usize) -> bool {
        self.adjacency.contains_key(&cell)
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency.get(&a).is_some_and(|l| l.binary_search(&b).is_ok())
    }

    pub fn neighbors(&self, cell: usize) -> &[usize] {
        self.adjacency.get(&cell).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Cells with at least one logical edge.
    pub fn connected_cells(&self) -> Vec<usize> {
        self.cells.iter().copied().filter(|c| !self.neighbors(*c).is_empty()).collect()
    }

    /// Checkerboard colour of a cell; logical edges always join colours 0 and 1.
    pub fn color(&self, cell: usize) -> usize {
        (cell / self.side + cell % self.side) % 2
    }
}
