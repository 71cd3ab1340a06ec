use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub const DEFAULT_TARGET_PROBABILITY: f64 = 0.99;

/// Overhead timings of a physical annealer, in microseconds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceTimings {
    pub t_program_us: f64,
    pub t_initial_us: f64,
    pub t_readout_us: f64,
}

impl DeviceTimings {
    /// DW2KQ programming and readout times; the initial-state time is left at zero.
    pub const DW2KQ: DeviceTimings = DeviceTimings { t_program_us: 6987.80, t_initial_us: 0.0, t_readout_us: 124.98 };
}

/// Repetitions needed to see the ground state at least once with
/// probability `p_d`, without rounding up.
pub fn repetitions<F: Real>(p_s: F, p_d: F) -> Result<F> {
    if !(p_d > F::zero() && p_d < F::one()) {
        return Err(Error::param(format!("target probability {p_d} outside (0, 1)")));
    }
    if !(p_s >= F::zero() && p_s <= F::one()) {
        return Err(Error::param(format!("success probability {p_s} outside [0, 1]")));
    }
    if p_s == F::zero() {
        return Ok(F::infinity());
    }
    if p_s == F::one() {
        return Err(Error::param("success probability 1 is degenerate: zero repetitions"));
    }
    Ok((F::one() - p_d).ln() / (F::one() - p_s).ln())
}

/// `effort * R * N / N_max`. Unsolved instances (`p_s = 0`) give `+inf`.
pub fn tts<F: Real>(p_s: F, effort: F, n: F, n_max: F, p_d: F) -> Result<F> {
    if !(effort > F::zero() && effort.is_finite()) {
        return Err(Error::param(format!("effort must be positive, got {effort}")));
    }
    if !(n > F::zero() && n <= n_max && n_max.is_finite()) {
        return Err(Error::param(format!("need 0 < N <= N_max, got N = {n}, N_max = {n_max}")));
    }
    Ok(effort * repetitions(p_s, p_d)? * (n / n_max))
}

/// Wall-clock TTS including per-gauge programming and per-run overheads.
/// `N_max / N` is floored here.
#[allow(clippy::too_many_arguments)]
pub fn wallclock_tts(
    gauges: f64,
    t_program: f64,
    t_initial: f64,
    t_readout: f64,
    t_f: f64,
    runs: f64,
    n: u64,
    n_max: u64,
) -> Result<f64> {
    if n == 0 || n > n_max {
        return Err(Error::param(format!("need 0 < N <= N_max, got N = {n}, N_max = {n_max}")));
    }
    let times = [gauges, t_program, t_initial, t_readout, t_f, runs];
    if times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
        return Err(Error::param("times and counts must be non-negative and finite"));
    }
    let copies = (n_max / n) as f64;
    Ok(gauges * t_program + (t_f + t_initial + t_readout) * runs / copies)
}

/// One point of a TTS curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TtsPoint {
    pub effort: f64,
    pub p_s: f64,
    pub n: f64,
    pub n_max: f64,
    pub p_d: f64,
    pub tts: f64,
}

impl TtsPoint {
    pub fn new(effort: f64, p_s: f64, n: f64, n_max: f64, p_d: f64) -> Result<Self> {
        let tts = tts(p_s, effort, n, n_max, p_d)?;
        Ok(Self { effort, p_s, n, n_max, p_d, tts })
    }
}
