use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use chimera_bench::analysis::{fit_quadratic_log_with, fit_scaling, tts, FitResult, QuadraticCi, QuantileCurve};
use chimera_bench::instance::InstanceClass;
use chimera_bench::solvers::{replica_rng, SolverKind};

use crate::artifacts::{derive_seed, file_sha256, list_files, write_atomic, write_json, write_manifest, Failure, Manifest, Stamp, MANIFEST};
use crate::config::{FitCi, Loaded};
use crate::error::{CliError, CliResult};
use crate::run::read_result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimumFit {
    pub class: InstanceClass,
    pub solver: SolverKind,
    pub beta: f64,
    pub side: usize,
    pub q: f64,
    pub effort_axis: String,
    pub efforts: Vec<f64>,
    /// Efforts left out because some instance succeeded in every read.
    pub dropped_efforts: Vec<f64>,
    pub n_instances: usize,
    pub fit: FitResult,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub class: InstanceClass,
    pub solver: SolverKind,
    pub beta: f64,
    pub q: f64,
    pub sizes: Vec<usize>,
    pub fit: FitResult,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FitBody {
    Optimum(OptimumFit),
    Scaling(ScalingFit),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitArtifact {
    #[serde(flatten)]
    pub stamp: Stamp,
    /// Hash of the results manifest the fit was computed from.
    pub results_manifest_sha256: String,
    pub body: FitBody,
}

fn class_name(c: InstanceClass) -> &'static str {
    match c {
        InstanceClass::Hardware => "hardware",
        InstanceClass::Logical => "logical",
        InstanceClass::Custom => "custom",
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct GroupKey {
    class: &'static str,
    solver: &'static str,
    /// Text form keeps the key totally ordered.
    beta: String,
    side: usize,
}

struct Group {
    class: InstanceClass,
    solver: SolverKind,
    beta: f64,
    /// instance -> sweeps -> p_S
    ps: BTreeMap<String, BTreeMap<usize, f64>>,
}

fn load_groups(results: &Path) -> CliResult<BTreeMap<GroupKey, Group>> {
    let files = list_files(results, "jsonl")?;
    if files.is_empty() {
        return Err(CliError::data(format!("no result files under {}; run `run` first", results.display())));
    }
    let mut groups: BTreeMap<GroupKey, Group> = BTreeMap::new();
    for path in files {
        let (h, _) = read_result(&path)?;
        let key = GroupKey {
            class: class_name(h.class),
            solver: h.task.solver.name(),
            beta: format!("{}", h.task.beta),
            side: h.side,
        };
        groups
            .entry(key)
            .or_insert_with(|| Group { class: h.class, solver: h.task.solver, beta: h.task.beta, ps: BTreeMap::new() })
            .ps
            .entry(h.task.instance.clone())
            .or_default()
            .insert(h.task.n_sweeps, h.p_s);
    }
    Ok(groups)
}

/// Per-instance success matrix over the sweeps every instance was run at.
fn success_matrix(group: &Group) -> (Vec<usize>, Vec<Vec<f64>>) {
    let mut sweeps: Vec<usize> = group.ps.values().flat_map(|m| m.keys().copied()).collect();
    sweeps.sort_unstable();
    sweeps.dedup();
    sweeps.retain(|s| group.ps.values().all(|m| m.contains_key(s)));
    let rows = group.ps.values().map(|m| sweeps.iter().map(|s| m[s]).collect()).collect();
    (sweeps, rows)
}

/// `tts[k][i]` for the kept efforts and instance subset.
fn tts_grid(efforts: &[f64], ps: &[&Vec<f64>], cols: &[usize], p_d: f64) -> CliResult<Vec<Vec<f64>>> {
    cols.iter()
        .map(|&k| ps.iter().map(|row| Ok(tts(row[k], efforts[k], 1.0, 1.0, p_d)?)).collect())
        .collect()
}

fn log_points(curve: &QuantileCurve) -> Vec<(f64, f64)> {
    curve.points.iter().filter(|p| p.1.is_finite()).map(|&(e, y)| (e.ln(), y)).collect()
}

fn fit_optimum(loaded: &Loaded, key: &GroupKey, group: &Group, q: f64) -> CliResult<(OptimumFit, QuantileCurve)> {
    let a = &loaded.config.analysis;
    let (sweeps, rows) = success_matrix(group);
    let efforts: Vec<f64> = sweeps.iter().map(|&s| s as f64).collect();
    let (cols, dropped): (Vec<usize>, Vec<usize>) = (0..efforts.len()).partition(|&k| rows.iter().all(|r| r[k] < 1.0));
    let kept: Vec<f64> = cols.iter().map(|&k| efforts[k]).collect();
    let all: Vec<&Vec<f64>> = rows.iter().collect();
    let curve = QuantileCurve::from_tts(&kept, &tts_grid(&efforts, &all, &cols, a.p_d)?, q)?;
    let points = log_points(&curve);
    let ci = match a.ci {
        FitCi::Residuals => QuadraticCi::ResidualBootstrap {
            n_boot: a.n_boot,
            seed: derive_seed(&format!("{}/{key:?}/{q}", a.seed)),
        },
        FitCi::Instances => {
            let seed = derive_seed(&format!("{}/{key:?}/{q}/instances", a.seed));
            let mut sets = Vec::with_capacity(a.n_boot);
            for b in 0..a.n_boot {
                let mut rng = replica_rng(seed, b);
                let pick: Vec<&Vec<f64>> = (0..rows.len()).map(|_| &rows[rng.random_range(0..rows.len())]).collect();
                let c = QuantileCurve::from_tts(&kept, &tts_grid(&efforts, &pick, &cols, a.p_d)?, q)?;
                sets.push(log_points(&c));
            }
            QuadraticCi::Resampled(sets)
        }
    };
    let fit = fit_quadratic_log_with(&points, &ci).map_err(|e| CliError::Numerical(e.to_string()))?;
    let body = OptimumFit {
        class: group.class,
        solver: group.solver,
        beta: group.beta,
        side: key.side,
        q,
        effort_axis: "sweeps".into(),
        efforts: kept,
        dropped_efforts: dropped.iter().map(|&k| efforts[k]).collect(),
        n_instances: rows.len(),
        fit,
    };
    Ok((body, curve))
}

/// Class, solver and beta of one scaling series with its `(L, ln TTS*)` points.
type Optima = (InstanceClass, SolverKind, f64, Vec<(usize, f64)>);

fn stem(key: &GroupKey) -> String {
    format!("{}_{}_b{}", key.class, key.solver, key.beta)
}

fn curve_csv(stamp: &Stamp, curve: &QuantileCurve) -> String {
    let mut out = stamp.csv_comment();
    out.push_str("effort,lnTTS_q\n");
    for (e, y) in &curve.points {
        out.push_str(&format!("{e},{y}\n"));
    }
    out
}

pub fn cmd_fit(loaded: &Loaded) -> CliResult<Manifest> {
    let results = loaded.results_dir();
    let groups = load_groups(&results)?;
    let results_manifest = results.join(MANIFEST);
    let results_manifest_sha256 = if results_manifest.exists() { file_sha256(&results_manifest)? } else { String::new() };
    let stamp = Stamp::new(&loaded.hash);
    let dir = loaded.fits_dir();
    if dir.exists() {
        std::fs::remove_dir_all(&dir)?;
    }
    std::fs::create_dir_all(&dir)?;
    let artifact = |body: FitBody| FitArtifact {
        stamp: stamp.clone(),
        results_manifest_sha256: results_manifest_sha256.clone(),
        body,
    };

    let mut failures = Vec::new();
    let mut optima: BTreeMap<(String, String), Optima> = BTreeMap::new();
    for (key, group) in &groups {
        for &q in &loaded.config.analysis.quantiles {
            let name = format!("{}_L{:02}_q{q}", stem(key), key.side);
            match fit_optimum(loaded, key, group, q) {
                Ok((body, curve)) => {
                    write_atomic(&dir.join("curves").join(format!("{name}.csv")), curve_csv(&stamp, &curve).as_bytes())?;
                    let c = body.fit.tts_star.map(|_| body.fit.param("c").expect("quadratic fit has c"));
                    let entry = optima
                        .entry((stem(key), format!("{q}")))
                        .or_insert_with(|| (group.class, group.solver, group.beta, Vec::new()));
                    if let Some(c) = c {
                        entry.3.push((key.side, c));
                    }
                    write_json(&dir.join("optimum").join(format!("{name}.json")), &artifact(FitBody::Optimum(body)))?;
                }
                Err(e) => {
                    eprintln!("fit: {name}: {e}");
                    failures.push(Failure::new(name, &e));
                }
            }
        }
    }

    for ((stem, q_text), (class, solver, beta, points)) in &optima {
        let q: f64 = q_text.parse().expect("formatted from f64");
        let lp: Vec<(f64, f64)> = points.iter().map(|&(l, c)| (l as f64, c)).collect();
        for &family in &loaded.config.analysis.families {
            if lp.len() <= family.param_names().len() {
                continue;
            }
            let name = format!("{stem}_q{q}_{family}");
            match fit_scaling(&lp, family) {
                Ok(fit) => {
                    let body = ScalingFit {
                        class: *class,
                        solver: *solver,
                        beta: *beta,
                        q,
                        sizes: points.iter().map(|p| p.0).collect(),
                        fit,
                    };
                    write_json(&dir.join("scaling").join(format!("{name}.json")), &artifact(FitBody::Scaling(body)))?;
                }
                Err(e) => {
                    let e = CliError::Numerical(e.to_string());
                    eprintln!("fit: {name}: {e}");
                    failures.push(Failure::new(name, &e));
                }
            }
        }
    }
    write_manifest(&dir, "fit", &stamp, failures)
}

pub fn read_fits(dir: &Path) -> CliResult<Vec<(PathBuf, FitArtifact)>> {
    list_files(dir, "json")?
        .into_iter()
        .map(|p| crate::artifacts::read_json(&p).map(|a| (p, a)))
        .collect()
}
