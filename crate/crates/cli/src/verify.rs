use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use chimera_bench::instance::{frustration_certificate, gadget_hamiltonian, minimize_term, GaugeVector, InstanceFile};
use chimera_bench::{ChimeraTopology, IsingInstance, SpinState, Thirds};

use crate::artifacts::{file_sha256, read_manifest};
use crate::config::Loaded;
use crate::error::{CliError, CliResult};

/// Checks that need no enumeration beyond the frustration-free terms.
fn check_instance(inst: &IsingInstance, seed: u64) -> Result<(), String> {
    if !inst.decomposition_matches() {
        return Err("decomposition does not sum to h and J".into());
    }
    let cert = frustration_certificate(inst).map_err(|e| e.to_string())?;
    if !cert.certified || cert.planted_energy != cert.ground_energy {
        return Err(format!(
            "planted state not certified: energy {} vs bound {}",
            cert.planted_energy.to_f64(),
            cert.ground_energy.to_f64()
        ));
    }
    let mut bound = Thirds(0);
    for term in inst.decomposition() {
        bound += minimize_term(term).map_err(|e| e.to_string())?;
    }
    if bound != cert.ground_energy {
        return Err("term minima do not add up to the certified ground energy".into());
    }
    let topo = inst.topology();
    if ChimeraTopology::from_spec(&topo.spec()).map_err(|e| e.to_string())?.spec() != topo.spec() {
        return Err("topology does not survive a round trip".into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gauge = GaugeVector::random(topo, &mut rng);
    let gauged = inst.apply_gauge(&gauge).map_err(|e| e.to_string())?;
    for _ in 0..16 {
        let mut state = SpinState::all_up(inst.num_ids());
        for q in topo.qubits() {
            state.0[q as usize] = if rng.random::<bool>() { 1 } else { -1 };
        }
        let moved = gauge.apply_to_state(topo, &state).map_err(|e| e.to_string())?;
        if inst.energy(&state).map_err(|e| e.to_string())? != gauged.energy(&moved).map_err(|e| e.to_string())? {
            return Err("a gauge transform changed a state's energy".into());
        }
    }
    Ok(())
}

fn check_gadget_spectrum() -> Result<(), String> {
    let g = gadget_hamiltonian();
    let mut base = g.classical_spectrum().map_err(|e| e.to_string())?;
    base.sort();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..20 {
        let gauged = g.apply_gauge(&GaugeVector::random(g.topology(), &mut rng)).map_err(|e| e.to_string())?;
        let mut s = gauged.classical_spectrum().map_err(|e| e.to_string())?;
        s.sort();
        if s != base {
            return Err("gadget spectrum changed under a gauge".into());
        }
    }
    check_instance(&g, 1)
}

fn verify_file(path: &Path, expected_sha: Option<&str>) -> Result<(), String> {
    if let Some(want) = expected_sha {
        let got = file_sha256(path).map_err(|e| e.to_string())?;
        if got != want {
            return Err("hash does not match the manifest".into());
        }
    }
    let inst = InstanceFile::read(path).and_then(|f| f.to_instance()).map_err(|e| e.to_string())?;
    check_instance(&inst, inst.meta().seed)
}

/// Returns the number of failed checks after printing one line per check.
pub fn cmd_verify(config: Option<&Loaded>, files: &[PathBuf]) -> CliResult<usize> {
    let mut targets: Vec<(PathBuf, Option<String>)> = files.iter().map(|p| (p.clone(), None)).collect();
    if let Some(loaded) = config {
        let dir = loaded.instances_dir();
        let m = read_manifest(&dir).map_err(|e| e.context(format!("no instance manifest in {}", dir.display())))?;
        targets.extend(m.files.into_iter().map(|f| (dir.join(&f.path), Some(f.sha256))));
    }
    if targets.is_empty() {
        return Err(CliError::usage("nothing to verify: pass --config or instance files"));
    }
    let mut failed = 0;
    let mut report = |name: &str, r: Result<(), String>| match r {
        Ok(()) => println!("ok    {name}"),
        Err(e) => {
            failed += 1;
            println!("FAIL  {name}: {e}");
        }
    };
    report("gadget gauge invariance", check_gadget_spectrum());
    for (path, sha) in &targets {
        report(&path.display().to_string(), verify_file(path, sha.as_deref()));
    }
    Ok(failed)
}
