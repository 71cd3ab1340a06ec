//! Time-to-solution, quantile and bootstrap statistics, and the fit families
//! used to locate optimal annealing effort and its scaling with size.

mod fit;
mod stats;
mod tables;
mod tts;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub use fit::{
    fit_hfs_form, fit_power_law, fit_quadratic_log, fit_quadratic_log_with, fit_scaling, CiMethod, FitFamily, FitParam,
    FitResult, QuadraticCi,
};
pub use stats::{
    bootstrap, interval, ks_two_sample, mean, overlap_fraction, quantile, quantile_of_ratios, quantile_sorted,
    quantile_tts, std_dev, BootstrapMethod, Estimate, DEFAULT_BOOTSTRAPS,
};
pub use tables::{
    load_optimum_fits, load_power_law_fits, load_scaling_fits, optimum_fit, OptimumRow, PowerLawRow, ScalingRow,
    OPTIMUM_FITS_CSV, POWER_LAW_FITS_CSV, SCALING_FITS_CSV,
};
pub use tts::{repetitions, tts, wallclock_tts, DeviceTimings, TtsPoint, DEFAULT_TARGET_PROBABILITY};

/// The q-th quantile of `ln TTS` across instances as a function of effort.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "F: Serialize", deserialize = "F: DeserializeOwned"))]
pub struct QuantileCurve<F = f64> {
    pub q: F,
    /// `(effort, ln TTS_q)`
    pub points: Vec<(F, F)>,
    pub t_star: Option<F>,
    pub tts_star: Option<F>,
}

impl<F: Real> QuantileCurve<F> {
    /// `tts[k][i]` is the TTS of instance `i` at `efforts[k]`.
    pub fn from_tts(efforts: &[F], tts: &[Vec<F>], q: F) -> Result<Self> {
        if efforts.len() != tts.len() {
            return Err(Error::param("one TTS row per effort is required"));
        }
        let points = efforts
            .iter()
            .zip(tts)
            .map(|(&e, row)| Ok((e, quantile_tts(row, q)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { q, points, t_star: None, tts_star: None })
    }

    /// Quadratic fit of `ln TTS_q` against `ln effort` over the finite points.
    pub fn fit(&mut self) -> Result<FitResult<F>> {
        let pts: Vec<(F, F)> = self.points.iter().filter(|p| p.1.is_finite()).map(|&(e, y)| (e.ln(), y)).collect();
        let fit = fit_quadratic_log(&pts)?;
        self.t_star = fit.t_star;
        self.tts_star = fit.tts_star;
        Ok(fit)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("effort,lnTTS_q\n");
        for (e, y) in &self.points {
            out.push_str(&format!("{e},{y}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_curve_finds_optimum() {
        let efforts: Vec<f64> = (0..9).map(|k| 10f64.powf(1.0 + 0.25 * k as f64)).collect();
        // three instances whose ln TTS are shifted copies of one parabola
        let tts: Vec<Vec<f64>> = efforts
            .iter()
            .map(|&e| {
                let x = e.ln();
                [0.0, 0.5, 1.0].iter().map(|s| (0.3 * (x - 5.0).powi(2) + 8.0 + s).exp()).collect()
            })
            .collect();
        let mut curve = QuantileCurve::from_tts(&efforts, &tts, 0.5).unwrap();
        let fit = curve.fit().unwrap();
        assert!((fit.param("b").unwrap() - 5.0).abs() < 1e-8);
        assert!((curve.tts_star.unwrap().ln() - 8.5).abs() < 1e-8);
        assert_eq!(curve.to_csv().lines().count(), 10);
    }
}
