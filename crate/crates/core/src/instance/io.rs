use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Thirds;
use crate::topology::{ChimeraTopology, Edge, QubitId, TopologySpec};

use super::{InstanceClass, InstanceMeta, IsingInstance, SpinState, Term, TermKind};

/// On-disk form of an instance. All values are integer numerators over 3.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub topology: TopologySpec,
    pub h: Vec<(QubitId, i64)>,
    #[serde(rename = "J")]
    pub j: Vec<(QubitId, QubitId, i64)>,
    pub planted_state: String,
    #[serde(default)]
    pub decomposition: Vec<Term>,
    pub seed: u64,
    pub class: InstanceClass,
    pub alpha: f64,
    pub p: f64,
}

impl InstanceFile {
    pub fn from_instance(inst: &IsingInstance) -> Self {
        let meta = inst.meta();
        InstanceFile {
            topology: inst.topology().spec(),
            h: inst.nonzero_fields().map(|(q, v)| (q, v.numer())).collect(),
            j: inst.nonzero_couplings().map(|(e, v)| (e.0, e.1, v.numer())).collect(),
            planted_state: inst.planted_state().to_bitstring(),
            decomposition: inst.decomposition().to_vec(),
            seed: meta.seed,
            class: meta.class,
            alpha: meta.alpha,
            p: meta.p,
        }
    }

    /// Rebuild the instance. A stored decomposition must sum to the stored
    /// fields and couplings.
    pub fn to_instance(&self) -> Result<IsingInstance> {
        let topo = Arc::new(ChimeraTopology::from_spec(&self.topology)?);
        let planted = SpinState::from_bitstring(&self.planted_state)?;
        let meta = InstanceMeta { class: self.class, alpha: self.alpha, p: self.p, seed: self.seed };
        let explicit = Term {
            kind: TermKind::Custom { label: "explicit".into() },
            h: self.h.iter().map(|&(q, v)| (q, Thirds(v))).collect(),
            j: self.j.iter().map(|&(a, b, v)| (Edge::new(a, b), Thirds(v))).collect(),
        };
        let reference = IsingInstance::from_terms(Arc::clone(&topo), vec![explicit.clone()], planted.clone(), meta.clone())?;
        if self.decomposition.is_empty() {
            return Ok(reference);
        }
        let inst = IsingInstance::from_terms(topo, self.decomposition.clone(), planted, meta)?;
        if inst.fields() != reference.fields() || inst.couplings() != reference.couplings() {
            return Err(Error::data("decomposition does not sum to the stored h and J"));
        }
        Ok(inst)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }
}
