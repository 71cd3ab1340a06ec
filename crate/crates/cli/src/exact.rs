use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use chimera_bench::exact::{DenseContext, DEFAULT_MAX_QUBITS};
use chimera_bench::instance::{gadget_hamiltonian, InstanceFile};

use crate::artifacts::{file_sha256, sha256_hex, write_atomic, write_json, write_manifest, Manifest, Stamp};
use crate::config::load_schedule;
use crate::error::{CliError, CliResult};

#[derive(Args, Clone, Debug, Serialize)]
pub struct ExactArgs {
    /// Instance file to analyse.
    #[arg(long, conflicts_with = "gadget", required_unless_present = "gadget")]
    pub instance: Option<PathBuf>,
    /// Analyse the bundled 8-qubit gadget instead of a file.
    #[arg(long)]
    pub gadget: bool,
    /// Built-in schedule name or path to an `s,A,B` CSV file.
    #[arg(long, default_value = "dw2kq-like")]
    pub schedule: String,
    /// Number of evenly spaced s values in the spectrum sweep.
    #[arg(long, default_value_t = 200)]
    pub points: usize,
    /// Lowest levels reported per s value.
    #[arg(long, default_value_t = 4)]
    pub levels: usize,
    /// Anneal times in microseconds for the evolution curve.
    #[arg(long = "t-f", value_delimiter = ',')]
    pub t_f: Vec<f64>,
    /// Integration steps per evolution.
    #[arg(long, default_value_t = 2000)]
    pub steps: usize,
    /// Largest qubit count handled by dense diagonalization.
    #[arg(long, default_value_t = DEFAULT_MAX_QUBITS)]
    pub max_qubits: usize,
    /// Directory for the CSV and JSON outputs.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct ExactSummary {
    #[serde(flatten)]
    stamp: Stamp,
    qubits: usize,
    schedule: String,
    min_gap: f64,
    s_star: f64,
    degenerate: bool,
    hw_crossing: Option<f64>,
}

pub fn cmd_exact(args: &ExactArgs) -> CliResult<Manifest> {
    if args.points < 2 || args.levels == 0 {
        return Err(CliError::usage("--points must be at least 2 and --levels at least 1"));
    }
    let (inst, source_hash) = match &args.instance {
        Some(path) => {
            let file = InstanceFile::read(path).map_err(|e| CliError::from(e).context(path.display()))?;
            (file.to_instance()?, file_sha256(path)?)
        }
        None => (gadget_hamiltonian(), String::from("gadget")),
    };
    let schedule = load_schedule(&args.schedule, std::path::Path::new("."))?;
    let mut keyed = serde_json::to_value(args)?;
    keyed["instance"] = serde_json::Value::String(source_hash);
    keyed["out"] = serde_json::Value::Null;
    let stamp = Stamp::new(sha256_hex(serde_json::to_string(&keyed)?.as_bytes()));

    let ctx = DenseContext::with_cap(&inst, &schedule, args.max_qubits)?;
    let levels = args.levels.min(ctx.dim());
    let csv = ctx.spectrum_csv(args.points, levels)?;
    write_atomic(&args.out.join("spectrum.csv"), (stamp.csv_comment() + &csv).as_bytes())?;

    let gap = ctx.min_gap(args.points)?;
    let summary = ExactSummary {
        stamp: stamp.clone(),
        qubits: ctx.num_qubits(),
        schedule: schedule.name().to_string(),
        min_gap: gap.gap,
        s_star: gap.s_star,
        degenerate: gap.degenerate,
        hw_crossing: ctx.hw_crossing(args.points)?,
    };
    write_json(&args.out.join("summary.json"), &summary)?;

    if !args.t_f.is_empty() {
        let mut out = stamp.csv_comment() + "t_f_us,p_s,max_norm_error\n";
        for &t in &args.t_f {
            let ev = ctx.evolve(t, args.steps)?;
            writeln!(out, "{t},{},{}", ev.p_s, ev.max_norm_error).expect("string write");
        }
        write_atomic(&args.out.join("evolution.csv"), out.as_bytes())?;
    }
    write_manifest(&args.out, "exact", &stamp, Vec::new())
}
