//! Annealing heuristics: simulated annealing (single-spin and with unit-cell
//! moves), spin-vector Monte Carlo and discrete-time simulated quantum
//! annealing.
//!
//! Every solver runs `replicas` independent anneals. Replica `r` draws from
//! stream `r` of a ChaCha8 generator keyed by the config seed, so records do
//! not depend on how replicas are scheduled across threads. Sweep `k` of
//! `n_sweeps` is performed at `s = k / n_sweeps`.

mod problem;
mod sa;
mod sqa;
mod svmc;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{bootstrap, BootstrapMethod, Estimate};
use crate::error::{Error, Result};
use crate::instance::{frustration_certificate, InstanceClass, IsingInstance, SpinState};
use crate::scalar::{Real, Thirds};
use crate::schedule::{Schedule, SA_BETA_HARDWARE, SA_BETA_LOGICAL};

pub use problem::Problem;
pub use sqa::SqaState;
pub use svmc::SvmcState;

/// Slice counts accepted by SQA; each is a whole number of 8-bit lanes. A
/// single slice is also accepted as the classical limit.
pub const SQA_SLICE_COUNTS: [usize; 6] = [8, 16, 32, 64, 128, 256];
pub const DEFAULT_SQA_SLICES: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Sa,
    Sac,
    Svmc,
    Sqa,
}

impl SolverKind {
    pub const ALL: [SolverKind; 4] = [SolverKind::Sa, SolverKind::Sac, SolverKind::Svmc, SolverKind::Sqa];

    /// Spin updates per nanosecond assumed by the cost model.
    pub fn updates_per_ns(self) -> u64 {
        match self {
            SolverKind::Sa => 50,
            SolverKind::Sac => 25,
            SolverKind::Svmc => 29,
            SolverKind::Sqa => 5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Sa => "sa",
            SolverKind::Sac => "sac",
            SolverKind::Svmc => "svmc",
            SolverKind::Sqa => "sqa",
        }
    }

    /// Default `beta` for an instance class: the scale multiplying `B(s)`
    /// for SA/SAC, the fixed inverse temperature for SVMC/SQA.
    pub fn default_beta(self, class: InstanceClass) -> f64 {
        let hardware = class == InstanceClass::Hardware;
        match (self, hardware) {
            (SolverKind::Sa | SolverKind::Sac, false) => SA_BETA_LOGICAL,
            (SolverKind::Sa | SolverKind::Sac, true) => SA_BETA_HARDWARE,
            (SolverKind::Svmc, false) => 2.5,
            (SolverKind::Svmc, true) => 0.51,
            (SolverKind::Sqa, false) => 2.5,
            (SolverKind::Sqa, true) => 4.25,
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sa" => Ok(SolverKind::Sa),
            "sac" => Ok(SolverKind::Sac),
            "svmc" => Ok(SolverKind::Svmc),
            "sqa" => Ok(SolverKind::Sqa),
            other => Err(Error::param(format!("unknown solver {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "F: Serialize", deserialize = "F: serde::de::DeserializeOwned"))]
pub struct SolverConfig<F = f64> {
    pub kind: SolverKind,
    pub n_sweeps: usize,
    pub beta: F,
    pub schedule: Schedule<F>,
    pub replicas: usize,
    pub seed: u64,
    pub sqa_slices: usize,
}

impl<F: Real> SolverConfig<F> {
    /// Config with the class-default `beta`, the dw2x-like schedule and 64 slices.
    pub fn new(kind: SolverKind, class: InstanceClass, n_sweeps: usize, replicas: usize, seed: u64) -> Self {
        Self {
            kind,
            n_sweeps,
            beta: F::lit(kind.default_beta(class)),
            schedule: Schedule::builtin("dw2x-like").expect("builtin schedule"),
            replicas,
            seed,
            sqa_slices: DEFAULT_SQA_SLICES,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sweeps == 0 {
            return Err(Error::param("n_sweeps must be at least 1"));
        }
        if self.replicas == 0 {
            return Err(Error::param("replicas must be at least 1"));
        }
        if !(self.beta > F::zero() && self.beta.is_finite()) {
            return Err(Error::param(format!("beta must be positive and finite, got {}", self.beta)));
        }
        if self.sqa_slices != 1 && !SQA_SLICE_COUNTS.contains(&self.sqa_slices) {
            return Err(Error::param(format!(
                "sqa_slices = {} is neither 1 nor one of {SQA_SLICE_COUNTS:?}",
                self.sqa_slices
            )));
        }
        Ok(())
    }

    fn expect_kind(&self, kind: SolverKind) -> Result<()> {
        if self.kind != kind {
            return Err(Error::param(format!("config is for {}, not {kind}", self.kind)));
        }
        self.validate()
    }

    /// Annealing parameter of sweep `k` (1-based).
    fn s_at(&self, k: usize) -> F {
        F::from_usize_lossy(k) / F::from_usize_lossy(self.n_sweeps)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnealRecord {
    pub replica: usize,
    pub final_state: SpinState,
    pub energy: Thirds,
    pub success: bool,
    pub seed_used: u64,
}

/// Generator for replica `replica`: stream `replica` of the keyed ChaCha8.
pub fn replica_rng(seed: u64, replica: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica as u64);
    rng
}

pub fn run(inst: &IsingInstance, cfg: &SolverConfig<impl Real>) -> Result<Vec<AnnealRecord>> {
    match cfg.kind {
        SolverKind::Sa => run_sa(inst, cfg),
        SolverKind::Sac => run_sac(inst, cfg),
        SolverKind::Svmc => run_svmc(inst, cfg),
        SolverKind::Sqa => run_sqa(inst, cfg),
    }
}

pub fn run_sa<F: Real>(inst: &IsingInstance, cfg: &SolverConfig<F>) -> Result<Vec<AnnealRecord>> {
    cfg.expect_kind(SolverKind::Sa)?;
    run_replicas(inst, cfg, |p, rng| sa::anneal(p, cfg, false, rng))
}

pub fn run_sac<F: Real>(inst: &IsingInstance, cfg: &SolverConfig<F>) -> Result<Vec<AnnealRecord>> {
    cfg.expect_kind(SolverKind::Sac)?;
    run_replicas(inst, cfg, |p, rng| sa::anneal(p, cfg, true, rng))
}

pub fn run_svmc<F: Real>(inst: &IsingInstance, cfg: &SolverConfig<F>) -> Result<Vec<AnnealRecord>> {
    cfg.expect_kind(SolverKind::Svmc)?;
    run_replicas(inst, cfg, |p, rng| svmc::anneal(p, cfg, rng).spins())
}

pub fn run_sqa<F: Real>(inst: &IsingInstance, cfg: &SolverConfig<F>) -> Result<Vec<AnnealRecord>> {
    cfg.expect_kind(SolverKind::Sqa)?;
    run_replicas(inst, cfg, |p, rng| sqa::anneal(p, cfg, rng))
}

fn run_replicas<F: Real>(
    inst: &IsingInstance,
    cfg: &SolverConfig<F>,
    anneal: impl Fn(&Problem<F>, &mut ChaCha8Rng) -> Vec<i8> + Sync,
) -> Result<Vec<AnnealRecord>> {
    let problem = Problem::new(inst);
    let target = frustration_certificate(inst)?.ground_energy;
    (0..cfg.replicas)
        .into_par_iter()
        .map(|replica| {
            let mut rng = replica_rng(cfg.seed, replica);
            let local = anneal(&problem, &mut rng);
            let state = problem.expand(&local);
            let energy = inst.energy(&state)?;
            Ok(AnnealRecord { replica, final_state: state, energy, success: energy == target, seed_used: cfg.seed })
        })
        .collect()
}

/// Modelled device time in seconds: `8 L^2 n_sweeps R / f_kind`.
pub fn model_time(kind: SolverKind, side: usize, n_sweeps: u64, runs: f64) -> Result<f64> {
    if side == 0 || n_sweeps == 0 || !(runs > 0.0 && runs.is_finite()) {
        return Err(Error::param("model_time arguments must be positive"));
    }
    let updates = 8.0 * (side * side) as f64 * n_sweeps as f64 * runs;
    Ok(updates / (kind.updates_per_ns() as f64 * 1e9))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsEstimate {
    pub p_s: f64,
    pub successes: usize,
    pub total: usize,
    pub ci: (f64, f64),
}

/// Success fraction with a percentile bootstrap interval.
pub fn estimate_ps(records: &[AnnealRecord], n_boot: usize, seed: u64) -> Result<PsEstimate> {
    if records.is_empty() {
        return Err(Error::param("no records to estimate a success probability from"));
    }
    let hits: Vec<f64> = records.iter().map(|r| if r.success { 1.0 } else { 0.0 }).collect();
    let successes = records.iter().filter(|r| r.success).count();
    let est: Estimate<f64> = if hits.len() < 2 {
        let p = hits[0];
        Estimate { estimate: p, ci: (p, p), method: BootstrapMethod::Percentile }
    } else {
        bootstrap(&hits, mean, n_boot, seed, BootstrapMethod::Percentile)?
    };
    Ok(PsEstimate { p_s: est.estimate, successes, total: records.len(), ci: est.ci })
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// One line of a results file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordLine {
    pub replica: usize,
    pub energy_thirds: i64,
    pub success: bool,
    pub seed_used: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_state: Option<String>,
}

impl RecordLine {
    pub fn from_record(rec: &AnnealRecord, with_state: bool) -> Self {
        Self {
            replica: rec.replica,
            energy_thirds: rec.energy.numer(),
            success: rec.success,
            seed_used: rec.seed_used,
            final_state: with_state.then(|| run_length_encode(&rec.final_state.to_bitstring())),
        }
    }
}

pub fn records_to_jsonl(records: &[AnnealRecord], with_state: bool) -> Result<String> {
    let mut out = String::new();
    for rec in records {
        out.push_str(&serde_json::to_string(&RecordLine::from_record(rec, with_state))?);
        out.push('\n');
    }
    Ok(out)
}

pub fn records_from_jsonl(text: &str) -> Result<Vec<RecordLine>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect()
}

/// `"0000110"` becomes `"0:4,1:2,0:1"`.
pub fn run_length_encode(bits: &str) -> String {
    let mut runs: Vec<(char, usize)> = Vec::new();
    for c in bits.chars() {
        match runs.last_mut() {
            Some((last, n)) if *last == c => *n += 1,
            _ => runs.push((c, 1)),
        }
    }
    runs.iter().map(|(c, n)| format!("{c}:{n}")).collect::<Vec<_>>().join(",")
}

pub fn run_length_decode(encoded: &str) -> Result<String> {
    let mut out = String::new();
    if encoded.is_empty() {
        return Ok(out);
    }
    for run in encoded.split(',') {
        let (c, n) = run
            .split_once(':')
            .ok_or_else(|| Error::data(format!("bad run {run:?}")))?;
        let n: usize = n.parse().map_err(|_| Error::data(format!("bad run length in {run:?}")))?;
        if c != "0" && c != "1" {
            return Err(Error::data(format!("bad bit in {run:?}")));
        }
        out.push_str(&c.repeat(n));
    }
    Ok(out)
}
