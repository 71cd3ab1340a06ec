use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use chimera_bench::instance::{GaugeVector, InstanceClass, InstanceFile};
use chimera_bench::solvers::{run, AnnealRecord, RecordLine, SolverConfig, SolverKind};
use chimera_bench::IsingInstance;

use crate::artifacts::{derive_seed, file_sha256, read_manifest, write_atomic, write_manifest, Failure, Manifest, Stamp};
use crate::config::Loaded;
use crate::error::{CliError, CliResult};
use crate::gen::check_foreign;

/// Everything that determines a result file's contents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub instance: String,
    pub instance_sha256: String,
    pub solver: SolverKind,
    pub beta: f64,
    pub n_sweeps: usize,
    pub schedule: String,
    pub sqa_slices: usize,
    pub gauges: usize,
    pub reads_per_gauge: usize,
    pub seed: u64,
    pub save_states: bool,
}

/// First line of every result file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultHeader {
    #[serde(flatten)]
    pub stamp: Stamp,
    #[serde(flatten)]
    pub task: TaskSpec,
    pub class: InstanceClass,
    pub side: usize,
    pub effort_axis: String,
    pub reads_total: usize,
    pub successes: usize,
    pub p_s: f64,
}

/// Reads per gauge under the budget `reads * sweeps <= budget`.
pub fn clipped_reads(reads: usize, sweeps: usize, budget: Option<u64>) -> usize {
    match budget {
        Some(b) => reads.min((b / sweeps as u64) as usize),
        None => reads,
    }
}

pub fn result_path(results: &Path, instance: &str, kind: SolverKind, beta: f64, sweeps: usize) -> PathBuf {
    let stem = instance.strip_suffix(".json").unwrap_or(instance);
    results.join(stem).join(format!("{}_b{beta}_n{sweeps:06}.jsonl", kind.name()))
}

pub fn read_result(path: &Path) -> CliResult<(ResultHeader, Vec<RecordLine>)> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header: ResultHeader = serde_json::from_str(lines.next().unwrap_or_default())
        .map_err(|e| CliError::data(format!("{}: bad header: {e}", path.display())))?;
    let records = lines
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect::<Result<Vec<RecordLine>, _>>()
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    if records.len() != header.reads_total {
        return Err(CliError::data(format!(
            "{}: header promises {} reads, file has {}",
            path.display(),
            header.reads_total,
            records.len()
        )));
    }
    Ok((header, records))
}

struct Task {
    path: PathBuf,
    spec: TaskSpec,
    instance: usize,
}

fn execute(loaded: &Loaded, inst: &IsingInstance, task: &Task) -> CliResult<(ResultHeader, Vec<AnnealRecord>)> {
    let spec = &task.spec;
    if spec.reads_per_gauge == 0 {
        return Err(CliError::data(format!(
            "read budget allows no read at {} sweeps",
            spec.n_sweeps
        )));
    }
    let mut cfg = SolverConfig::<f64>::new(spec.solver, inst.meta().class, spec.n_sweeps, spec.reads_per_gauge, spec.seed);
    cfg.beta = spec.beta;
    cfg.schedule = loaded.schedule()?;
    cfg.sqa_slices = spec.sqa_slices;
    let mut records = Vec::new();
    if spec.gauges == 0 {
        records = run(inst, &cfg)?;
    } else {
        for g in 0..spec.gauges {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&format!("{}/gauge/{g}", spec.seed)));
            let gauged = inst.apply_gauge(&GaugeVector::random(inst.topology(), &mut rng))?;
            cfg.seed = derive_seed(&format!("{}/reads/{g}", spec.seed));
            let offset = g * spec.reads_per_gauge;
            records.extend(run(&gauged, &cfg)?.into_iter().map(|mut r| {
                r.replica += offset;
                r
            }));
        }
    }
    let successes = records.iter().filter(|r| r.success).count();
    let header = ResultHeader {
        stamp: Stamp::new(&loaded.hash),
        task: spec.clone(),
        class: inst.meta().class,
        side: inst.topology().side(),
        effort_axis: "sweeps".into(),
        reads_total: records.len(),
        successes,
        p_s: successes as f64 / records.len() as f64,
    };
    Ok((header, records))
}

fn write_result(path: &Path, header: &ResultHeader, records: &[AnnealRecord], with_state: bool) -> CliResult<()> {
    let mut out = serde_json::to_string(header)?;
    out.push('\n');
    for r in records {
        out.push_str(&serde_json::to_string(&RecordLine::from_record(r, with_state))?);
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

/// A finished result for this exact task is kept as is.
fn already_done(path: &Path, stamp: &Stamp, spec: &TaskSpec) -> bool {
    matches!(read_result(path), Ok((h, _)) if h.stamp == *stamp && h.task == *spec)
}

pub fn cmd_run(loaded: &Loaded) -> CliResult<Manifest> {
    let inst_dir = loaded.instances_dir();
    let gen_manifest = read_manifest(&inst_dir)
        .map_err(|e| e.context(format!("no instance manifest in {}; run `gen` first", inst_dir.display())))?;
    let stamp = Stamp::new(&loaded.hash);
    if gen_manifest.stamp.config_hash != stamp.config_hash {
        return Err(CliError::data("instances were generated from a different config"));
    }
    let results = loaded.results_dir();
    check_foreign(&results, &stamp)?;
    std::fs::create_dir_all(&results)?;

    let mut instances = Vec::new();
    for entry in &gen_manifest.files {
        let path = inst_dir.join(&entry.path);
        let sha = file_sha256(&path)?;
        if sha != entry.sha256 {
            return Err(CliError::data(format!("{} does not match its manifest hash", path.display())));
        }
        let inst = InstanceFile::read(&path).map_err(|e| CliError::from(e).context(path.display()))?.to_instance()?;
        instances.push((entry.path.clone(), sha, inst));
    }
    if instances.is_empty() {
        return Err(CliError::data("the instance manifest lists no instances"));
    }

    let s = &loaded.config.solvers;
    let mut tasks = Vec::new();
    for (i, (name, sha, _)) in instances.iter().enumerate() {
        for &kind in &s.kinds {
            for beta in loaded.betas(kind) {
                for &sweeps in &s.sweeps {
                    let seed = derive_seed(&format!("{}/{sha}/{}/{beta}/{sweeps}", s.seed, kind.name()));
                    let spec = TaskSpec {
                        instance: name.clone(),
                        instance_sha256: sha.clone(),
                        solver: kind,
                        beta,
                        n_sweeps: sweeps,
                        schedule: s.schedule.clone(),
                        sqa_slices: s.sqa_slices,
                        gauges: s.gauges,
                        reads_per_gauge: clipped_reads(s.reads, sweeps, s.read_budget),
                        seed,
                        save_states: s.save_states,
                    };
                    tasks.push(Task { path: result_path(&results, name, kind, beta, sweeps), spec, instance: i });
                }
            }
        }
    }

    let failures: Vec<Failure> = tasks
        .par_iter()
        .filter(|t| !already_done(&t.path, &stamp, &t.spec))
        .filter_map(|t| {
            let outcome = execute(loaded, &instances[t.instance].2, t)
                .and_then(|(h, recs)| write_result(&t.path, &h, &recs, t.spec.save_states));
            outcome.err().map(|e| {
                let task = t.path.strip_prefix(&results).unwrap_or(&t.path).display().to_string();
                eprintln!("run: {task}: {e}");
                Failure::new(task, &e)
            })
        })
        .collect();
    write_manifest(&results, "run", &stamp, failures)
}
