//! Published fit tables bundled as CSV, loaded into [`FitResult`]s.

use serde::Deserialize;

use super::fit::{FitFamily, FitResult};
use crate::error::{Error, Result};

pub const OPTIMUM_FITS_CSV: &str = include_str!("../../fixtures/optimum_fits.csv");
pub const SCALING_FITS_CSV: &str = include_str!("../../fixtures/scaling_fits.csv");
pub const POWER_LAW_FITS_CSV: &str = include_str!("../../fixtures/power_law_fits.csv");

/// Optimal-effort fit for one solver, class and size.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimumRow {
    pub class: String,
    pub solver: String,
    /// Unit of the effort axis: `t_f_us`, `sweeps` or `trees`.
    pub effort: String,
    pub side: u32,
    pub min_effort: f64,
    pub max_effort: f64,
    pub fit: FitResult,
}

#[derive(Deserialize)]
struct OptimumCsv {
    family: String,
    class: String,
    solver: String,
    effort: String,
    #[serde(rename = "L")]
    side: u32,
    min_effort: f64,
    max_effort: f64,
    a: f64,
    a_err: f64,
    b: f64,
    b_err: f64,
    c: f64,
    c_err: f64,
}

/// Scaling fit of the optimal TTS with size, at a quantile when one applies.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalingRow {
    pub class: String,
    pub solver: String,
    pub q: Option<f64>,
    pub fit: FitResult,
}

#[derive(Deserialize)]
struct ScalingCsv {
    family: String,
    class: String,
    solver: String,
    q: Option<f64>,
    a: f64,
    a_err: f64,
    b: f64,
    b_err: f64,
    c: Option<f64>,
    c_err: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PowerLawRow {
    pub label: String,
    pub fit: FitResult,
}

#[derive(Deserialize)]
struct PowerLawCsv {
    label: String,
    a: f64,
    a_err: f64,
    b: f64,
    b_err: f64,
}

/// Lines starting with `#` are skipped.
fn rows<T: serde::de::DeserializeOwned>(text: &str) -> Result<Vec<T>> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes())
        .deserialize()
        .map(|r| r.map_err(|e| Error::data(e.to_string())))
        .collect()
}

pub fn load_optimum_fits(text: &str) -> Result<Vec<OptimumRow>> {
    rows::<OptimumCsv>(text)?
        .into_iter()
        .map(|r| {
            let family = FitFamily::parse(&r.family)?;
            Ok(OptimumRow {
                fit: FitResult::reference(family, &[r.a, r.b, r.c], &[r.a_err, r.b_err, r.c_err])?,
                class: r.class,
                solver: r.solver,
                effort: r.effort,
                side: r.side,
                min_effort: r.min_effort,
                max_effort: r.max_effort,
            })
        })
        .collect()
}

pub fn load_scaling_fits(text: &str) -> Result<Vec<ScalingRow>> {
    rows::<ScalingCsv>(text)?
        .into_iter()
        .map(|r| {
            let family = FitFamily::parse(&r.family)?;
            let (values, errors) = match (r.c, r.c_err) {
                (Some(c), Some(ce)) => (vec![r.a, r.b, c], vec![r.a_err, r.b_err, ce]),
                _ => (vec![r.a, r.b], vec![r.a_err, r.b_err]),
            };
            Ok(ScalingRow { fit: FitResult::reference(family, &values, &errors)?, class: r.class, solver: r.solver, q: r.q })
        })
        .collect()
}

pub fn load_power_law_fits(text: &str) -> Result<Vec<PowerLawRow>> {
    rows::<PowerLawCsv>(text)?
        .into_iter()
        .map(|r| {
            Ok(PowerLawRow {
                fit: FitResult::reference(FitFamily::PowerLaw, &[r.a, r.b], &[r.a_err, r.b_err])?,
                label: r.label,
            })
        })
        .collect()
}

/// Look up one bundled optimal-effort row.
pub fn optimum_fit(class: &str, solver: &str, side: u32) -> Result<OptimumRow> {
    load_optimum_fits(OPTIMUM_FITS_CSV)?
        .into_iter()
        .find(|r| r.class == class && r.solver == solver && r.side == side)
        .ok_or_else(|| Error::data(format!("no bundled fit for {class}/{solver} at L = {side}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_tables_load() {
        let opt = load_optimum_fits(OPTIMUM_FITS_CSV).unwrap();
        assert_eq!(opt.len(), 104);
        let row = optimum_fit("logical", "dw2kq", 16).unwrap();
        assert_eq!(row.fit.values(), vec![0.221, 3.798, 9.557]);
        assert_eq!(row.fit.ci_of("a"), Some((0.221 - 0.031, 0.221 + 0.031)));
        let hfs = optimum_fit("logical", "hfs", 8).unwrap();
        assert_eq!(hfs.fit.family, FitFamily::HfsForm);
        assert_eq!(hfs.fit.values(), vec![0.841, 2.221, 9.897]);
        let scaling = load_scaling_fits(SCALING_FITS_CSV).unwrap();
        let sa = scaling
            .iter()
            .find(|r| r.class == "logical" && r.solver == "sa" && r.q == Some(0.5) && r.fit.family == FitFamily::ScalingExp)
            .unwrap();
        assert_eq!(sa.fit.param("b"), Some(0.996));
        assert_eq!(scaling.iter().filter(|r| r.fit.family == FitFamily::ScalingHybrid).count(), 4);
        let pl = load_power_law_fits(POWER_LAW_FITS_CSV).unwrap();
        assert_eq!(pl[0].fit.param("a"), Some(1.546));
    }

    #[test]
    fn malformed_rows_are_rejected() {
        let bad = "family,class,solver,effort,L,min_effort,max_effort,a,a_err,b,b_err,c,c_err\nquadratic_log,x,y,z,8,1,2,oops,0,0,0,0,0\n";
        assert!(matches!(load_optimum_fits(bad), Err(Error::Data(_))));
    }
}
