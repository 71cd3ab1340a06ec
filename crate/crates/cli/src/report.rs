use std::collections::BTreeMap;
use std::fmt::Write as _;

use chimera_bench::analysis::FitResult;
use chimera_bench::instance::InstanceClass;
use chimera_bench::solvers::SolverKind;

use crate::artifacts::{write_atomic, write_manifest, Manifest, Stamp};
use crate::config::Loaded;
use crate::error::{CliError, CliResult};
use crate::fit::{read_fits, FitBody};

const OPTIMUM_HEADER: &str = "family,class,solver,effort,L,min_effort,max_effort,a,a_err,b,b_err,c,c_err\n";
const SCALING_HEADER: &str = "family,class,solver,q,a,a_err,b,b_err,c,c_err\n";

fn class_label(c: InstanceClass) -> &'static str {
    match c {
        InstanceClass::Hardware => "hardware",
        InstanceClass::Logical => "logical",
        InstanceClass::Custom => "custom",
    }
}

/// Value and half-width of each parameter's interval.
fn value_err(fit: &FitResult) -> Vec<(f64, f64)> {
    fit.params.iter().map(|p| (p.value, 0.5 * (p.ci.1 - p.ci.0))).collect()
}

fn push_params(out: &mut String, params: &[(f64, f64)], width: usize) {
    for i in 0..width {
        match params.get(i) {
            Some((v, e)) => write!(out, ",{v},{e}").expect("string write"),
            None => out.push_str(",,"),
        }
    }
    out.push('\n');
}

pub fn cmd_report(loaded: &Loaded) -> CliResult<Manifest> {
    let fits_dir = loaded.fits_dir();
    let fits = read_fits(&fits_dir)?;
    if fits.is_empty() {
        return Err(CliError::data(format!("no fits under {}; run `fit` first", fits_dir.display())));
    }
    let stamp = Stamp::new(&loaded.hash);
    let solver_label = |kind: SolverKind, beta: f64| {
        if loaded.betas(kind).len() > 1 {
            format!("{}_b{beta}", kind.name())
        } else {
            kind.name().to_string()
        }
    };

    let mut optimum: BTreeMap<String, String> = BTreeMap::new();
    let mut scaling = stamp.csv_comment() + SCALING_HEADER;
    for (_, art) in &fits {
        match &art.body {
            FitBody::Optimum(o) => {
                let table = optimum.entry(format!("{}", o.q)).or_insert_with(|| stamp.csv_comment() + OPTIMUM_HEADER);
                let min = o.efforts.iter().copied().fold(f64::INFINITY, f64::min);
                let max = o.efforts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                write!(
                    table,
                    "{},{},{},{},{},{min},{max}",
                    o.fit.family,
                    class_label(o.class),
                    solver_label(o.solver, o.beta),
                    o.effort_axis,
                    o.side
                )
                .expect("string write");
                push_params(table, &value_err(&o.fit), 3);
            }
            FitBody::Scaling(s) => {
                write!(scaling, "{},{},{},{}", s.fit.family, class_label(s.class), solver_label(s.solver, s.beta), s.q)
                    .expect("string write");
                push_params(&mut scaling, &value_err(&s.fit), 3);
            }
        }
    }

    let dir = loaded.report_dir();
    if dir.exists() {
        std::fs::remove_dir_all(&dir)?;
    }
    std::fs::create_dir_all(&dir)?;
    for (q, table) in &optimum {
        write_atomic(&dir.join(format!("optimum_fits_q{q}.csv")), table.as_bytes())?;
    }
    write_atomic(&dir.join("scaling_fits.csv"), scaling.as_bytes())?;
    write_manifest(&dir, "report", &stamp, Vec::new())
}
