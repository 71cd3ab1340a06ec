use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use chimera_bench::analysis::FitFamily;
use chimera_bench::instance::{InstanceClass, GADGET_FRACTION, HARDWARE_ALPHA, LOGICAL_ALPHA};
use chimera_bench::schedule::BUILTIN_NAMES;
use chimera_bench::solvers::{SolverKind, DEFAULT_SQA_SLICES, SQA_SLICE_COUNTS};
use chimera_bench::topology::MAX_SIDE;
use chimera_bench::Schedule;

use crate::artifacts::sha256_hex;
use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instances: InstanceSpec,
    pub solvers: SolverGrid,
    #[serde(default)]
    pub analysis: AnalysisSpec,
    /// Relative paths are taken from the config file's directory.
    pub output_dir: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    pub class: InstanceClass,
    /// Defaults to the class's clause density.
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default = "default_p")]
    pub p: f64,
    pub sizes: Vec<usize>,
    pub count: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub faulty_qubits: Vec<u32>,
}

fn default_p() -> f64 {
    GADGET_FRACTION
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverGrid {
    pub kinds: Vec<SolverKind>,
    /// One grid shared by all kinds; each kind's class default when absent.
    #[serde(default)]
    pub betas: Option<Vec<f64>>,
    pub sweeps: Vec<usize>,
    /// Reads per gauge, or in total when gauge averaging is off.
    #[serde(default = "default_reads")]
    pub reads: usize,
    /// Number of random gauges; 0 runs the instance as stored.
    #[serde(default)]
    pub gauges: usize,
    /// Upper bound on reads times sweeps; reads are clipped to fit.
    #[serde(default)]
    pub read_budget: Option<u64>,
    /// Built-in schedule name or path to a `s,A,B` CSV file.
    #[serde(default = "default_schedule")]
    pub schedule: String,
    #[serde(default = "default_slices")]
    pub sqa_slices: usize,
    #[serde(default)]
    pub seed: u64,
    /// Store run-length encoded final states in result lines.
    #[serde(default)]
    pub save_states: bool,
}

fn default_reads() -> usize {
    1000
}

fn default_schedule() -> String {
    "dw2x-like".into()
}

fn default_slices() -> usize {
    DEFAULT_SQA_SLICES
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitCi {
    /// Refit on instance-bootstrapped quantile curves.
    Instances,
    /// Refit on residual-resampled curves.
    Residuals,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSpec {
    #[serde(default = "default_quantiles")]
    pub quantiles: Vec<f64>,
    #[serde(default = "default_p_d")]
    pub p_d: f64,
    #[serde(default = "default_families")]
    pub families: Vec<FitFamily>,
    #[serde(default = "default_ci")]
    pub ci: FitCi,
    #[serde(default = "default_boot")]
    pub n_boot: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_quantiles() -> Vec<f64> {
    vec![0.25, 0.5, 0.75]
}

fn default_p_d() -> f64 {
    0.99
}

fn default_families() -> Vec<FitFamily> {
    vec![FitFamily::ScalingExp, FitFamily::ScalingPoly]
}

fn default_ci() -> FitCi {
    FitCi::Instances
}

fn default_boot() -> usize {
    1000
}

impl Default for AnalysisSpec {
    fn default() -> Self {
        Self {
            quantiles: default_quantiles(),
            p_d: default_p_d(),
            families: default_families(),
            ci: default_ci(),
            n_boot: default_boot(),
            seed: 0,
        }
    }
}

/// A validated config plus the directory its relative paths hang off.
#[derive(Clone, Debug)]
pub struct Loaded {
    pub config: ExperimentConfig,
    pub base: PathBuf,
    pub hash: String,
}

impl Loaded {
    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        let config: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::new(config, base)
    }

    pub fn new(mut config: ExperimentConfig, base: PathBuf) -> CliResult<Self> {
        if config.instances.alpha.is_none() {
            config.instances.alpha = Some(match config.instances.class {
                InstanceClass::Hardware => HARDWARE_ALPHA,
                _ => LOGICAL_ALPHA,
            });
        }
        let loaded = Loaded { hash: config_hash(&config)?, config, base };
        loaded.validate()?;
        Ok(loaded)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.config.output_dir)
    }

    pub fn instances_dir(&self) -> PathBuf {
        self.output_dir().join("instances")
    }

    pub fn results_dir(&self) -> PathBuf {
        self.output_dir().join("results")
    }

    pub fn fits_dir(&self) -> PathBuf {
        self.output_dir().join("fits")
    }

    pub fn report_dir(&self) -> PathBuf {
        self.output_dir().join("report")
    }

    pub fn alpha(&self) -> f64 {
        self.config.instances.alpha.expect("filled in on load")
    }

    pub fn schedule(&self) -> CliResult<Schedule<f64>> {
        load_schedule(&self.config.solvers.schedule, &self.base)
    }

    /// The beta grid for one solver kind.
    pub fn betas(&self, kind: SolverKind) -> Vec<f64> {
        match &self.config.solvers.betas {
            Some(b) => b.clone(),
            None => vec![kind.default_beta(self.config.instances.class)],
        }
    }

    fn validate(&self) -> CliResult<()> {
        let c = &self.config;
        let bad = |m: String| Err(CliError::usage(format!("invalid config: {m}")));
        if c.instances.class == InstanceClass::Custom {
            return bad("instance class must be hardware or logical".into());
        }
        if c.instances.sizes.is_empty() || c.instances.count == 0 {
            return bad("instance sizes and count must be non-empty".into());
        }
        if let Some(&l) = c.instances.sizes.iter().find(|&&l| l == 0 || l > MAX_SIDE) {
            return bad(format!("size {l} outside 1..={MAX_SIDE}"));
        }
        if c.solvers.kinds.is_empty() || c.solvers.sweeps.is_empty() {
            return bad("solver kinds and sweep grid must be non-empty".into());
        }
        if c.solvers.sweeps.contains(&0) || c.solvers.reads == 0 {
            return bad("sweeps and reads must be positive".into());
        }
        if let Some(b) = &c.solvers.betas {
            if b.is_empty() || b.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                return bad("betas must be a non-empty list of positive numbers".into());
            }
        }
        if c.solvers.sqa_slices != 1 && !SQA_SLICE_COUNTS.contains(&c.solvers.sqa_slices) {
            return bad(format!("sqa_slices must be 1 or one of {SQA_SLICE_COUNTS:?}"));
        }
        if c.solvers.read_budget == Some(0) {
            return bad("read_budget must be positive".into());
        }
        let a = &c.analysis;
        if a.quantiles.is_empty() || a.quantiles.iter().any(|q| !(*q > 0.0 && *q < 1.0)) {
            return bad("quantiles must be a non-empty list in (0, 1)".into());
        }
        if !(a.p_d > 0.0 && a.p_d < 1.0) {
            return bad("p_d must lie in (0, 1)".into());
        }
        if let Some(f) = a.families.iter().find(|f| !matches!(f, FitFamily::ScalingExp | FitFamily::ScalingPoly | FitFamily::ScalingHybrid)) {
            return bad(format!("{f} is not a scaling family"));
        }
        if a.n_boot == 0 {
            return bad("n_boot must be positive".into());
        }
        self.schedule().map_err(|e| e.context("invalid config"))?;
        Ok(())
    }
}

/// Hash of the config with defaults filled in, independent of where the
/// output goes.
pub fn config_hash(config: &ExperimentConfig) -> CliResult<String> {
    let mut c = config.clone();
    c.output_dir = PathBuf::new();
    Ok(sha256_hex(serde_json::to_string(&c)?.as_bytes()))
}

pub fn load_schedule(name: &str, base: &Path) -> CliResult<Schedule<f64>> {
    if BUILTIN_NAMES.contains(&name) {
        return Ok(Schedule::builtin(name)?);
    }
    let path = if Path::new(name).is_absolute() { PathBuf::from(name) } else { base.join(name) };
    let text = std::fs::read_to_string(&path).map_err(|e| {
        CliError::usage(format!(
            "schedule {name:?} is neither a built-in ({}) nor a readable file: {e}",
            BUILTIN_NAMES.join(", ")
        ))
    })?;
    Ok(Schedule::from_csv(name, &text)?)
}
