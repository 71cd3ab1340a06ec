use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::solvers::replica_rng;

pub const DEFAULT_BOOTSTRAPS: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BootstrapMethod {
    /// 2.5th and 97.5th percentiles of the resampled statistic.
    Percentile,
    /// Estimate plus or minus two standard deviations of the resampled statistic.
    TwoSigma,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate<F> {
    pub estimate: F,
    pub ci: (F, F),
    pub method: BootstrapMethod,
}

impl<F: Real> Estimate<F> {
    pub fn contains(&self, x: F) -> bool {
        self.ci.0 <= x && x <= self.ci.1
    }

    /// True when the two intervals share no point.
    pub fn separated_from(&self, other: &Estimate<F>) -> bool {
        self.ci.1 < other.ci.0 || other.ci.1 < self.ci.0
    }
}

fn total_cmp<F: Real>(a: &F, b: &F) -> Ordering {
    a.partial_cmp(b).unwrap_or_else(|| a.is_nan().cmp(&b.is_nan()))
}

/// Type-7 quantile of already sorted data: linear interpolation between the
/// order statistics at `(n - 1) q`. Infinite values sort last; an
/// interpolation touching `+inf` yields `+inf`.
pub fn quantile_sorted<F: Real>(sorted: &[F], q: F) -> Result<F> {
    if sorted.is_empty() {
        return Err(Error::param("quantile of empty data"));
    }
    if !(q >= F::zero() && q <= F::one()) {
        return Err(Error::param(format!("quantile level {q} outside [0, 1]")));
    }
    if sorted.iter().any(|x| x.is_nan()) {
        return Err(Error::param("quantile of data containing NaN"));
    }
    let h = F::from_usize_lossy(sorted.len() - 1) * q;
    let lo = h.floor().to_usize().expect("finite index");
    let frac = h - h.floor();
    let x_lo = sorted[lo];
    if frac == F::zero() || lo + 1 >= sorted.len() {
        return Ok(x_lo);
    }
    let x_hi = sorted[lo + 1];
    if x_hi.is_infinite() || x_lo.is_infinite() {
        return Ok(if x_lo.is_infinite() { x_lo } else { x_hi });
    }
    Ok(x_lo + frac * (x_hi - x_lo))
}

pub fn quantile<F: Real>(data: &[F], q: F) -> Result<F> {
    let mut sorted = data.to_vec();
    sorted.sort_by(total_cmp);
    quantile_sorted(&sorted, q)
}

/// Resample `samples` with replacement `n_boot` times. Resample `b` draws
/// from its own stream, so results do not depend on evaluation order.
pub fn bootstrap<F, S>(samples: &[F], statistic: S, n_boot: usize, seed: u64, method: BootstrapMethod) -> Result<Estimate<F>>
where
    F: Real,
    S: Fn(&[F]) -> F,
{
    if samples.len() < 2 {
        return Err(Error::param("bootstrap needs at least two samples"));
    }
    if n_boot == 0 {
        return Err(Error::param("bootstrap needs at least one resample"));
    }
    let estimate = statistic(samples);
    let n = samples.len();
    let mut buf = vec![F::zero(); n];
    let stats: Vec<F> = (0..n_boot)
        .map(|b| {
            let mut rng = replica_rng(seed, b);
            for slot in buf.iter_mut() {
                *slot = samples[rng.random_range(0..n)];
            }
            statistic(&buf)
        })
        .collect();
    Ok(Estimate { estimate, ci: interval(estimate, &stats, method)?, method })
}

/// Interval from a set of resampled statistics.
pub fn interval<F: Real>(estimate: F, stats: &[F], method: BootstrapMethod) -> Result<(F, F)> {
    match method {
        BootstrapMethod::Percentile => {
            let mut sorted = stats.to_vec();
            sorted.sort_by(total_cmp);
            Ok((quantile_sorted(&sorted, F::lit(0.025))?, quantile_sorted(&sorted, F::lit(0.975))?))
        }
        BootstrapMethod::TwoSigma => {
            let sd = std_dev(stats);
            Ok((estimate - F::lit(2.0) * sd, estimate + F::lit(2.0) * sd))
        }
    }
}

pub fn mean<F: Real>(xs: &[F]) -> F {
    xs.iter().copied().sum::<F>() / F::from_usize_lossy(xs.len())
}

/// Sample standard deviation (zero for fewer than two values).
pub fn std_dev<F: Real>(xs: &[F]) -> F {
    if xs.len() < 2 {
        return F::zero();
    }
    let m = mean(xs);
    let ss: F = xs.iter().map(|&x| (x - m) * (x - m)).sum();
    (ss / F::from_usize_lossy(xs.len() - 1)).sqrt()
}

/// `ln` of the q-th quantile of per-instance TTS values; `+inf` entries
/// (instances never solved) count as larger than any finite value.
pub fn quantile_tts<F: Real>(per_instance_tts: &[F], q: F) -> Result<F> {
    if !(q > F::zero() && q < F::one()) {
        return Err(Error::param(format!("quantile level {q} outside (0, 1)")));
    }
    if per_instance_tts.iter().any(|&t| !(t > F::zero())) {
        return Err(Error::param("TTS values must be positive"));
    }
    Ok(quantile(per_instance_tts, q)?.ln())
}

/// q-th quantile of per-instance ratios `solver / baseline`, paired by instance id.
pub fn quantile_of_ratios<F: Real>(solver: &[(String, F)], baseline: &[(String, F)], q: F) -> Result<F> {
    if solver.len() != baseline.len() {
        return Err(Error::param(format!(
            "pairing mismatch: {} solver instances, {} baseline instances",
            solver.len(),
            baseline.len()
        )));
    }
    let base: HashMap<&str, F> = baseline.iter().map(|(id, v)| (id.as_str(), *v)).collect();
    if base.len() != baseline.len() {
        return Err(Error::param("duplicate instance id in baseline"));
    }
    let ratios = solver
        .iter()
        .map(|(id, v)| {
            base.get(id.as_str())
                .map(|b| *v / *b)
                .ok_or_else(|| Error::param(format!("instance {id:?} has no baseline entry")))
        })
        .collect::<Result<Vec<F>>>()?;
    quantile(&ratios, q)
}

/// Indices of instances strictly below the median.
fn below_median<F: Real>(values: &[F]) -> Result<HashSet<usize>> {
    let med = quantile(values, F::lit(0.5))?;
    Ok(values.iter().enumerate().filter(|(_, &v)| v < med).map(|(i, _)| i).collect())
}

fn overlap(a: &HashSet<usize>, b: &HashSet<usize>) -> f64 {
    if a.is_empty() {
        return f64::NAN;
    }
    a.intersection(b).count() as f64 / a.len() as f64
}

/// Normalized overlap of the below-median instance sets of two solvers.
///
/// Each input is a per-instance `(mean, sigma)` of TTS. Every bootstrap
/// draws two independent normal realizations per instance and solver and
/// returns `f(A1, B2) / sqrt(f(A1, A2) f(B1, B2))`.
pub fn overlap_fraction(a: &[(f64, f64)], b: &[(f64, f64)], n_boot: usize, seed: u64) -> Result<Estimate<f64>> {
    if a.len() != b.len() {
        return Err(Error::param("overlap needs the same instances for both solvers"));
    }
    if a.len() < 2 || n_boot == 0 {
        return Err(Error::param("overlap needs at least two instances and one resample"));
    }
    if a.iter().chain(b).any(|&(_, s)| !(s >= 0.0)) {
        return Err(Error::param("sigma must be non-negative"));
    }
    let draw = |data: &[(f64, f64)], rng: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> {
        data.iter()
            .map(|&(m, s)| {
                let z: f64 = StandardNormal.sample(rng);
                m + s * z
            })
            .collect()
    };
    let mut stats = Vec::with_capacity(n_boot);
    for i in 0..n_boot {
        let mut rng = replica_rng(seed, i);
        let a1 = below_median(&draw(a, &mut rng))?;
        let a2 = below_median(&draw(a, &mut rng))?;
        let b1 = below_median(&draw(b, &mut rng))?;
        let b2 = below_median(&draw(b, &mut rng))?;
        let f = overlap(&a1, &b2) / (overlap(&a1, &a2) * overlap(&b1, &b2)).sqrt();
        if f.is_finite() {
            stats.push(f);
        }
    }
    if stats.is_empty() {
        return Err(Error::param("no bootstrap produced a finite overlap"));
    }
    let est = mean(&stats);
    Ok(Estimate { estimate: est, ci: interval(est, &stats, BootstrapMethod::Percentile)?, method: BootstrapMethod::Percentile })
}

/// Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::param("KS test needs non-empty samples"));
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(total_cmp);
    y.sort_by(total_cmp);
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    let en = (n * m / (n + m)).sqrt();
    Ok((d, kolmogorov_q((en + 0.12 + 0.11 / en) * d)))
}

/// Survival function of the Kolmogorov distribution.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn type_seven_quantiles() {
        assert_eq!(quantile(&[1.0, 2.0, 3.0], 0.5).unwrap(), 2.0);
        assert_eq!(quantile(&[3.0, 1.0, 2.0, 4.0], 0.5).unwrap(), 2.5);
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0, 5.0], 0.1).unwrap(), 1.4);
        for q in [0.1, 0.5, 0.9] {
            assert_eq!(quantile(&[7.0; 5], q).unwrap(), 7.0);
        }
        let inf = f64::INFINITY;
        assert_eq!(quantile(&[inf, 1.0, 2.0], 0.5).unwrap(), 2.0);
        assert_eq!(quantile(&[inf, 1.0, 2.0], 0.75).unwrap(), inf);
        assert!(quantile::<f64>(&[], 0.5).is_err());
    }

    #[test]
    fn quantile_tts_is_log_of_quantile() {
        let v = [1.0f64, std::f64::consts::E, 100.0];
        assert!((quantile_tts(&v, 0.5).unwrap() - 1.0).abs() < 1e-15);
        assert!(quantile_tts(&v, 1.0).is_err());
        assert_eq!(quantile_tts(&[1.0, f64::INFINITY], 0.9).unwrap(), f64::INFINITY);
    }

    #[test]
    fn bootstrap_basics() {
        let constant = [3.0f64; 10];
        let e = bootstrap(&constant, mean, 200, 1, BootstrapMethod::Percentile).unwrap();
        assert_eq!(e.ci, (3.0, 3.0));
        let data: Vec<f64> = (0..30).map(|i| (i * 7 % 11) as f64).collect();
        let a = bootstrap(&data, mean, 300, 9, BootstrapMethod::TwoSigma).unwrap();
        let b = bootstrap(&data, mean, 300, 9, BootstrapMethod::TwoSigma).unwrap();
        assert_eq!(a, b);
        assert!(a.contains(a.estimate));
        assert!(bootstrap(&[1.0f64], mean, 10, 0, BootstrapMethod::Percentile).is_err());
    }

    #[test]
    fn ratios() {
        let ids: Vec<String> = (0..5).map(|i| format!("i{i}")).collect();
        let base: Vec<(String, f64)> = ids.iter().map(|s| (s.clone(), 2.0 + s.len() as f64)).collect();
        let same = base.clone();
        assert_eq!(quantile_of_ratios(&same, &base, 0.3).unwrap(), 1.0);
        let half: Vec<(String, f64)> = base.iter().map(|(s, v)| (s.clone(), v / 2.0)).collect();
        assert_eq!(quantile_of_ratios(&half, &base, 0.5).unwrap(), 0.5);
        assert!(quantile_of_ratios(&half[..4], &base, 0.5).is_err());
        let mut renamed = half.clone();
        renamed[0].0 = "other".into();
        assert!(quantile_of_ratios(&renamed, &base, 0.5).is_err());
    }

    #[test]
    fn noiseless_overlap_is_one() {
        let a: Vec<(f64, f64)> = (0..40).map(|i| (i as f64, 0.0)).collect();
        let e = overlap_fraction(&a, &a, 50, 3).unwrap();
        assert_eq!(e.estimate, 1.0);
        assert_eq!(e.ci, (1.0, 1.0));
    }

    #[test]
    fn ks_detects_shift() {
        let a: Vec<f64> = (0..500).map(|i| i as f64 / 500.0).collect();
        let b: Vec<f64> = a.iter().map(|x| x + 0.3).collect();
        let (d, p) = ks_two_sample(&a, &b).unwrap();
        assert!((d - 0.3).abs() < 0.01 && p < 1e-10);
        let (d0, p0) = ks_two_sample(&a, &a).unwrap();
        assert_eq!(d0, 0.0);
        assert_eq!(p0, 1.0);
    }
}
