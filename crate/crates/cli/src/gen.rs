use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use chimera_bench::instance::{gen_hardware_planted, gen_logical_planted, GeneratorOptions, InstanceClass, InstanceFile};
use chimera_bench::{ChimeraTopology, IsingInstance};

use crate::artifacts::{read_manifest, write_json, write_manifest, Failure, Manifest, Stamp, MANIFEST};
use crate::config::Loaded;
use crate::error::{CliError, CliResult};

/// An instance file with its provenance stamp alongside the instance fields.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceArtifact {
    #[serde(flatten)]
    pub stamp: Stamp,
    #[serde(flatten)]
    pub instance: InstanceFile,
}

pub fn instance_file_name(class: InstanceClass, side: usize, index: usize, seed: u64) -> String {
    let class = match class {
        InstanceClass::Hardware => "hardware",
        InstanceClass::Logical => "logical",
        InstanceClass::Custom => "custom",
    };
    format!("{class}_L{side:02}_i{index:04}_s{seed}.json")
}

/// Refuse to mix artifacts from two configs in one directory.
pub fn check_foreign(dir: &Path, stamp: &Stamp) -> CliResult<()> {
    if dir.join(MANIFEST).exists() {
        let m = read_manifest(dir)?;
        if m.stamp.config_hash != stamp.config_hash {
            return Err(CliError::data(format!(
                "{} holds artifacts from config {}, not {}; use a fresh output_dir",
                dir.display(),
                m.stamp.config_hash,
                stamp.config_hash
            )));
        }
    }
    Ok(())
}

fn generate(loaded: &Loaded, side: usize, seed: u64) -> CliResult<IsingInstance> {
    let spec = &loaded.config.instances;
    let topo = Arc::new(ChimeraTopology::build(side, &spec.faulty_qubits, &[])?);
    let opts = GeneratorOptions::default();
    let inst = match spec.class {
        InstanceClass::Hardware => gen_hardware_planted(topo, loaded.alpha(), spec.p, seed, &opts)?,
        _ => gen_logical_planted(topo, loaded.alpha(), spec.p, seed, &opts)?,
    };
    let back = InstanceFile::from_instance(&inst).to_instance()?;
    if back.energy(back.planted_state())? != inst.energy(inst.planted_state())? {
        return Err(CliError::data("planted energy changed across serialization"));
    }
    Ok(inst)
}

pub fn cmd_gen(loaded: &Loaded) -> CliResult<Manifest> {
    let dir = loaded.instances_dir();
    let stamp = Stamp::new(&loaded.hash);
    check_foreign(&dir, &stamp)?;
    std::fs::create_dir_all(&dir)?;
    let spec = &loaded.config.instances;
    let tasks: Vec<(usize, usize, u64)> = spec
        .sizes
        .iter()
        .flat_map(|&l| (0..spec.count).map(move |i| (l, i, spec.seed.wrapping_add(i as u64))))
        .collect();
    let outcomes: Vec<(PathBuf, CliResult<IsingInstance>)> = tasks
        .par_iter()
        .map(|&(l, i, seed)| (dir.join(instance_file_name(spec.class, l, i, seed)), generate(loaded, l, seed)))
        .collect();
    let mut failures = Vec::new();
    for (path, outcome) in outcomes {
        let task = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        match outcome {
            Ok(inst) => {
                let artifact = InstanceArtifact { stamp: stamp.clone(), instance: InstanceFile::from_instance(&inst) };
                write_json(&path, &artifact)?;
            }
            Err(e) => {
                eprintln!("gen: {task}: {e}");
                failures.push(Failure::new(task, &e));
            }
        }
    }
    write_manifest(&dir, "gen", &stamp, failures)
}
