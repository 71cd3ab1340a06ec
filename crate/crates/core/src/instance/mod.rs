//! Planted-solution Ising instances on Chimera graphs.
//!
//! An [`IsingInstance`] carries exact fields and couplings (in thirds), the
//! planted all-up state, and a decomposition into terms that are each
//! minimized by the planted state. [`frustration_certificate`] re-proves
//! that property term by term.

mod certificate;
mod gadget;
mod generate;
mod io;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Thirds;
use crate::topology::{ChimeraTopology, Edge, QubitId};

pub use certificate::{frustration_certificate, minimize_term, Certificate, MAX_ENUMERATED_SPINS};
pub use gadget::{gadget_hamiltonian, gadget_term, GADGET_COUPLINGS, GADGET_FIELDS};
pub use generate::{
    gen_hardware_planted, gen_logical_planted, GeneratorOptions, GADGET_FRACTION, HARDWARE_ALPHA, LOGICAL_ALPHA,
};
pub use io::InstanceFile;

/// Largest |J| allowed after gadgets are added.
pub const MAX_RANGE: Thirds = Thirds::units(6);

/// Spin assignment over the full id range of a topology; `+1` is `|0>`.
/// Entries of masked qubits are carried but ignored.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpinState(pub Vec<i8>);

impl SpinState {
    pub fn all_up(n: usize) -> Self {
        SpinState(vec![1; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `'0'` for spin up, `'1'` for spin down.
    pub fn to_bitstring(&self) -> String {
        self.0.iter().map(|&s| if s > 0 { '0' } else { '1' }).collect()
    }

    pub fn from_bitstring(bits: &str) -> Result<Self> {
        bits.chars()
            .map(|c| match c {
                '0' => Ok(1),
                '1' => Ok(-1),
                other => Err(Error::data(format!("invalid spin character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(SpinState)
    }

    /// Number of down spins among `ids`.
    pub fn hamming_weight(&self, ids: impl Iterator<Item = QubitId>) -> usize {
        ids.filter(|&q| self.0[q as usize] < 0).count()
    }
}

/// Per-qubit spin-reversal signs, one per active qubit in ascending id order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GaugeVector(pub Vec<i8>);

impl GaugeVector {
    pub fn identity(topo: &ChimeraTopology) -> Self {
        GaugeVector(vec![1; topo.num_qubits()])
    }

    pub fn random<R: rand::Rng + ?Sized>(topo: &ChimeraTopology, rng: &mut R) -> Self {
        GaugeVector((0..topo.num_qubits()).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect())
    }

    /// Expand to the full id range; masked ids get `+1`.
    fn expand(&self, topo: &ChimeraTopology) -> Result<Vec<i8>> {
        if self.0.len() != topo.num_qubits() {
            return Err(Error::param(format!(
                "gauge has {} entries, topology has {} active qubits",
                self.0.len(),
                topo.num_qubits()
            )));
        }
        if self.0.iter().any(|&g| g != 1 && g != -1) {
            return Err(Error::param("gauge entries must be +1 or -1"));
        }
        let mut full = vec![1i8; topo.num_ids()];
        for (q, &g) in topo.qubits().zip(&self.0) {
            full[q as usize] = g;
        }
        Ok(full)
    }

    /// Gauge-transform a spin state.
    pub fn apply_to_state(&self, topo: &ChimeraTopology, state: &SpinState) -> Result<SpinState> {
        let full = self.expand(topo)?;
        if state.len() != full.len() {
            return Err(Error::param("state length does not match topology"));
        }
        Ok(SpinState(state.0.iter().zip(&full).map(|(&s, &g)| s * g).collect()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstanceClass {
    Hardware,
    Logical,
    Custom,
}

/// Whether a loop lives on physical qubits or on logical cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LoopLevel {
    Physical,
    Logical,
}

/// A frustrated loop: ferromagnetic except for one flipped edge.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoopTerm {
    pub level: LoopLevel,
    /// Cycle in visiting order; edge `i` joins `vertices[i]` and `vertices[i + 1]` (cyclically).
    pub vertices: Vec<u32>,
    /// Coupling on each cycle edge, in the loop's own units.
    pub couplings: Vec<Thirds>,
    /// Index into `couplings` of the antiferromagnetic edge.
    pub flipped_edge: usize,
}

impl LoopTerm {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn edge(&self, i: usize) -> (u32, u32) {
        (self.vertices[i], self.vertices[(i + 1) % self.vertices.len()])
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TermKind {
    Loop(LoopTerm),
    Gadget { cell: usize },
    /// Ferromagnetic intra-cell background of a logical cell.
    CellBackground { cell: usize },
    Custom { label: String },
}

/// One additive piece of the problem Hamiltonian.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Term {
    pub kind: TermKind,
    pub h: Vec<(QubitId, Thirds)>,
    pub j: Vec<(Edge, Thirds)>,
}

impl Term {
    /// Sorted distinct qubits touched by the term.
    pub fn support(&self) -> Vec<QubitId> {
        let mut ids: Vec<QubitId> = self
            .h
            .iter()
            .map(|(q, _)| *q)
            .chain(self.j.iter().flat_map(|(e, _)| [e.0, e.1]))
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    pub fn energy(&self, state: &SpinState) -> Thirds {
        let fields: Thirds = self.h.iter().map(|&(q, v)| v.signed(state.0[q as usize])).sum();
        let bonds: Thirds = self
            .j
            .iter()
            .map(|&(e, v)| v.signed(state.0[e.0 as usize] * state.0[e.1 as usize]))
            .sum();
        fields + bonds
    }

    fn gauged(&self, g: &[i8]) -> Term {
        Term {
            kind: self.kind.clone(),
            h: self.h.iter().map(|&(q, v)| (q, v.signed(g[q as usize]))).collect(),
            j: self
                .j
                .iter()
                .map(|&(e, v)| (e, v.signed(g[e.0 as usize] * g[e.1 as usize])))
                .collect(),
        }
    }
}

/// Generation parameters recorded with an instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceMeta {
    pub class: InstanceClass,
    pub alpha: f64,
    pub p: f64,
    pub seed: u64,
}

impl InstanceMeta {
    pub fn custom() -> Self {
        InstanceMeta { class: InstanceClass::Custom, alpha: 0.0, p: 0.0, seed: 0 }
    }
}

#[derive(Clone, Debug)]
pub struct IsingInstance {
    topology: Arc<ChimeraTopology>,
    h: Vec<Thirds>,
    j: Vec<Thirds>,
    planted: SpinState,
    decomposition: Vec<Term>,
    meta: InstanceMeta,
}

impl IsingInstance {
    /// Assemble an instance from its terms; `h` and `J` are the exact term sums.
    pub fn from_terms(
        topology: Arc<ChimeraTopology>,
        terms: Vec<Term>,
        planted: SpinState,
        meta: InstanceMeta,
    ) -> Result<Self> {
        let (h, j) = sum_terms(&topology, &terms)?;
        let inst = Self { topology, h, j, planted, decomposition: terms, meta };
        inst.validate()?;
        Ok(inst)
    }

    /// Instance with explicit fields and couplings and a single custom term.
    pub fn from_parts(
        topology: Arc<ChimeraTopology>,
        h: &[(QubitId, Thirds)],
        j: &[(Edge, Thirds)],
        planted: SpinState,
    ) -> Result<Self> {
        let term = Term {
            kind: TermKind::Custom { label: "explicit".into() },
            h: h.to_vec(),
            j: j.iter().map(|&(e, v)| (Edge::new(e.0, e.1), v)).collect(),
        };
        Self::from_terms(topology, vec![term], planted, InstanceMeta::custom())
    }

    fn validate(&self) -> Result<()> {
        let n = self.topology.num_ids();
        if self.planted.len() != n {
            return Err(Error::param(format!("planted state has {} spins, expected {n}", self.planted.len())));
        }
        if let Some(bad) = self.planted.0.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::param(format!("spin value {bad} not in {{+1,-1}}")));
        }
        if self.range() > MAX_RANGE {
            return Err(Error::param(format!("coupling range {} exceeds {}", self.range(), MAX_RANGE)));
        }
        Ok(())
    }

    pub fn topology(&self) -> &ChimeraTopology {
        &self.topology
    }

    pub fn topology_arc(&self) -> &Arc<ChimeraTopology> {
        &self.topology
    }

    /// Fields indexed by qubit id (zero on masked qubits).
    pub fn fields(&self) -> &[Thirds] {
        &self.h
    }

    /// Couplings aligned with `topology().couplers()`.
    pub fn couplings(&self) -> &[Thirds] {
        &self.j
    }

    pub fn coupling(&self, a: QubitId, b: QubitId) -> Option<Thirds> {
        self.topology.coupler_index(a, b).map(|i| self.j[i])
    }

    pub fn planted_state(&self) -> &SpinState {
        &self.planted
    }

    pub fn decomposition(&self) -> &[Term] {
        &self.decomposition
    }

    pub fn meta(&self) -> &InstanceMeta {
        &self.meta
    }

    pub fn num_ids(&self) -> usize {
        self.topology.num_ids()
    }

    /// Largest |J|.
    pub fn range(&self) -> Thirds {
        self.j.iter().map(|v| v.abs()).max().unwrap_or(Thirds::ZERO)
    }

    /// Energy unit used by the solvers: max |J|, falling back to max |h| and then 1.
    pub fn energy_scale(&self) -> Thirds {
        let r = self.range();
        if r > Thirds::ZERO {
            return r;
        }
        let hmax = self.h.iter().map(|v| v.abs()).max().unwrap_or(Thirds::ZERO);
        if hmax > Thirds::ZERO {
            hmax
        } else {
            Thirds::units(1)
        }
    }

    pub fn nonzero_fields(&self) -> impl Iterator<Item = (QubitId, Thirds)> + '_ {
        self.h.iter().enumerate().filter(|(_, v)| v.0 != 0).map(|(q, &v)| (q as QubitId, v))
    }

    pub fn nonzero_couplings(&self) -> impl Iterator<Item = (Edge, Thirds)> + '_ {
        self.topology
            .couplers()
            .iter()
            .zip(&self.j)
            .filter(|(_, v)| v.0 != 0)
            .map(|(&e, &v)| (e, v))
    }

    /// Exact energy `sum h_i s_i + sum J_ij s_i s_j`.
    pub fn energy(&self, state: &SpinState) -> Result<Thirds> {
        if state.len() != self.num_ids() {
            return Err(Error::param(format!(
                "state covers {} spins, instance has {}",
                state.len(),
                self.num_ids()
            )));
        }
        let s = &state.0;
        let mut e = Thirds::ZERO;
        for q in self.topology.qubits() {
            let v = s[q as usize];
            if v != 1 && v != -1 {
                return Err(Error::param(format!("spin {q} has value {v}")));
            }
            e += self.h[q as usize].signed(v);
        }
        for (edge, &v) in self.topology.couplers().iter().zip(&self.j) {
            e += v.signed(s[edge.0 as usize] * s[edge.1 as usize]);
        }
        Ok(e)
    }

    /// Spin-reversal transform: `h'_i = g_i h_i`, `J'_ij = g_i g_j J_ij`.
    pub fn apply_gauge(&self, gauge: &GaugeVector) -> Result<IsingInstance> {
        let g = gauge.expand(&self.topology)?;
        let h = self.h.iter().zip(&g).map(|(&v, &gi)| v.signed(gi)).collect();
        let j = self
            .topology
            .couplers()
            .iter()
            .zip(&self.j)
            .map(|(e, &v)| v.signed(g[e.0 as usize] * g[e.1 as usize]))
            .collect();
        let planted = SpinState(self.planted.0.iter().zip(&g).map(|(&s, &gi)| s * gi).collect());
        let decomposition = self.decomposition.iter().map(|t| t.gauged(&g)).collect();
        Ok(IsingInstance {
            topology: Arc::clone(&self.topology),
            h,
            j,
            planted,
            decomposition,
            meta: self.meta.clone(),
        })
    }

    /// True when the decomposition sums exactly to `(h, J)`.
    pub fn decomposition_matches(&self) -> bool {
        match sum_terms(&self.topology, &self.decomposition) {
            Ok((h, j)) => h == self.h && j == self.j,
            Err(_) => false,
        }
    }

    /// All `2^n` classical energies for instances with at most 20 active qubits.
    pub fn classical_spectrum(&self) -> Result<Vec<Thirds>> {
        let ids: Vec<QubitId> = self.topology.qubits().collect();
        if ids.len() > 20 {
            return Err(Error::Capability(format!("{} qubits is too many to enumerate", ids.len())));
        }
        let mut state = SpinState::all_up(self.num_ids());
        let mut out = Vec::with_capacity(1 << ids.len());
        for mask in 0u32..(1u32 << ids.len()) {
            for (bit, &q) in ids.iter().enumerate() {
                state.0[q as usize] = if mask >> bit & 1 == 1 { -1 } else { 1 };
            }
            out.push(self.energy(&state)?);
        }
        Ok(out)
    }
}

fn sum_terms(topo: &ChimeraTopology, terms: &[Term]) -> Result<(Vec<Thirds>, Vec<Thirds>)> {
    let mut h = vec![Thirds::ZERO; topo.num_ids()];
    let mut j = vec![Thirds::ZERO; topo.couplers().len()];
    for term in terms {
        for &(q, v) in &term.h {
            if !topo.is_active(q) {
                return Err(Error::param(format!("field on inactive qubit {q}")));
            }
            h[q as usize] += v;
        }
        for &(e, v) in &term.j {
            let idx = topo
                .coupler_index(e.0, e.1)
                .ok_or_else(|| Error::param(format!("coupling on absent coupler ({}, {})", e.0, e.1)))?;
            j[idx] += v;
        }
    }
    Ok((h, j))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_spin(j: Thirds) -> IsingInstance {
        let topo = Arc::new(ChimeraTopology::ideal(1).unwrap());
        IsingInstance::from_parts(topo, &[], &[(Edge(0, 4), j)], SpinState::all_up(8)).unwrap()
    }

    #[test]
    fn empty_instance_has_zero_energy() {
        let topo = Arc::new(ChimeraTopology::ideal(1).unwrap());
        let inst = IsingInstance::from_parts(topo, &[], &[], SpinState::all_up(8)).unwrap();
        assert_eq!(inst.energy(&SpinState::all_up(8)).unwrap(), Thirds::ZERO);
    }

    #[test]
    fn aligned_ferromagnetic_pair() {
        let inst = two_spin(Thirds::units(-3));
        assert_eq!(inst.energy(&SpinState::all_up(8)).unwrap(), Thirds::units(-3));
        let mut s = SpinState::all_up(8);
        s.0[4] = -1;
        assert_eq!(inst.energy(&s).unwrap(), Thirds::units(3));
    }

    #[test]
    fn energy_rejects_short_state() {
        let inst = two_spin(Thirds::units(-1));
        assert!(matches!(inst.energy(&SpinState::all_up(7)), Err(Error::Parameter(_))));
    }

    #[test]
    fn gauge_size_mismatch() {
        let inst = two_spin(Thirds::units(-1));
        assert!(inst.apply_gauge(&GaugeVector(vec![1; 3])).is_err());
    }

    #[test]
    fn bitstring_round_trip() {
        let s = SpinState(vec![1, -1, -1, 1]);
        assert_eq!(s.to_bitstring(), "0110");
        assert_eq!(SpinState::from_bitstring("0110").unwrap(), s);
        assert!(SpinState::from_bitstring("01x").is_err());
    }

    #[test]
    fn couplings_on_missing_coupler_rejected() {
        let topo = Arc::new(ChimeraTopology::ideal(1).unwrap());
        let r = IsingInstance::from_parts(topo, &[], &[(Edge(0, 1), Thirds(3))], SpinState::all_up(8));
        assert!(r.is_err());
    }
}
