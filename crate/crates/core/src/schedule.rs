//! Annealing schedules `A(s)`, `B(s)` in GHz and the inverse-temperature
//! schedules used by simulated annealing.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Scale giving `beta * B(1) ~ 5` on the dw2x-like schedule.
pub const SA_BETA_LOGICAL: f64 = 0.132;
/// Scale giving `beta * B(1) ~ 15` on the dw2x-like schedule.
pub const SA_BETA_HARDWARE: f64 = 0.396;

pub const BUILTIN_NAMES: [&str; 3] = ["dw2x-like", "dw2kq-like", "linear"];

const CSV_HEADER: &str = "s,A_GHz,B_GHz";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchedulePoint<F> {
    pub s: F,
    pub a: F,
    pub b: F,
}

/// Piecewise-linear annealing schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule<F = f64> {
    name: String,
    points: Vec<SchedulePoint<F>>,
}

impl<F: Real> Schedule<F> {
    pub fn new(name: impl Into<String>, points: Vec<SchedulePoint<F>>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::param("a schedule needs at least two points"));
        }
        if points[0].s != F::zero() || points[points.len() - 1].s != F::one() {
            return Err(Error::param("schedule must start at s = 0 and end at s = 1"));
        }
        if points.windows(2).any(|w| !(w[1].s > w[0].s)) {
            return Err(Error::param("schedule s values must be strictly increasing"));
        }
        if points.iter().any(|p| !(p.a.is_finite() && p.b.is_finite()) || p.a < F::zero() || p.b < F::zero()) {
            return Err(Error::param("schedule energies must be finite and non-negative"));
        }
        Ok(Self { name: name.into(), points })
    }

    /// `A(s) = a0 (1 - s)`, `B(s) = b0 s`.
    pub fn linear(a0: F, b0: F) -> Self {
        let points = vec![
            SchedulePoint { s: F::zero(), a: a0, b: F::zero() },
            SchedulePoint { s: F::one(), a: F::zero(), b: b0 },
        ];
        Self::new("linear", points).expect("valid linear schedule")
    }

    /// Constant `A` and `B` over the whole anneal.
    pub fn constant(a: F, b: F) -> Self {
        let points = vec![SchedulePoint { s: F::zero(), a, b }, SchedulePoint { s: F::one(), a, b }];
        Self::new("constant", points).expect("valid constant schedule")
    }

    pub fn builtin(name: &str) -> Result<Self> {
        match name {
            "dw2x-like" => Ok(device_like("dw2x-like", 40.0, 10.0, 1.0, 38.0, 0.005)),
            "dw2kq-like" => Ok(device_like("dw2kq-like", 50.0, 11.0, 0.9, 40.0, 0.005)),
            "linear" => {
                let mut s = Self::linear(F::lit(40.0), F::lit(38.0));
                s.name = "linear".into();
                Ok(s)
            }
            other => Err(Error::param(format!(
                "unknown schedule {other:?}; expected one of {}",
                BUILTIN_NAMES.join(", ")
            ))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn points(&self) -> &[SchedulePoint<F>] {
        &self.points
    }

    /// `(A(s), B(s))` by linear interpolation between knots.
    pub fn evaluate(&self, s: F) -> Result<(F, F)> {
        if !(s >= F::zero() && s <= F::one()) {
            return Err(Error::param(format!("s = {s} outside [0, 1]")));
        }
        Ok(self.at(s))
    }

    /// As [`evaluate`](Self::evaluate) but clamps `s` into `[0, 1]`.
    pub fn at(&self, s: F) -> (F, F) {
        let s = s.max(F::zero()).min(F::one());
        let idx = self.points.partition_point(|p| p.s <= s);
        if idx == 0 {
            let p = self.points[0];
            return (p.a, p.b);
        }
        if idx == self.points.len() {
            let p = self.points[idx - 1];
            return (p.a, p.b);
        }
        let (lo, hi) = (self.points[idx - 1], self.points[idx]);
        let t = (s - lo.s) / (hi.s - lo.s);
        (lo.a + t * (hi.a - lo.a), lo.b + t * (hi.b - lo.b))
    }

    /// `A` non-increasing and vanishing at `s = 1`, `B` non-decreasing.
    pub fn is_annealing(&self) -> bool {
        let last = self.points[self.points.len() - 1];
        last.a == F::zero() && self.points.windows(2).all(|w| w[1].a <= w[0].a && w[1].b >= w[0].b)
    }

    /// Smallest knot `s` from which `A` stays zero.
    pub fn transverse_off(&self) -> F {
        let mut off = F::one();
        for p in self.points.iter().rev() {
            if p.a != F::zero() {
                break;
            }
            off = p.s;
        }
        off
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for p in &self.points {
            writeln!(out, "{},{},{}", p.s, p.a, p.b).expect("write to string");
        }
        out
    }

    pub fn from_csv(name: impl Into<String>, text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        match lines.next() {
            Some(h) if h.replace(' ', "") == CSV_HEADER => {}
            other => return Err(Error::data(format!("expected header {CSV_HEADER:?}, found {other:?}"))),
        }
        let mut points = Vec::new();
        for (n, line) in lines.enumerate() {
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != 3 {
                return Err(Error::data(format!("row {}: expected 3 columns", n + 1)));
            }
            let parse = |c: &str| {
                c.parse::<f64>()
                    .map(F::lit)
                    .map_err(|e| Error::data(format!("row {}: {e}", n + 1)))
            };
            points.push(SchedulePoint { s: parse(cols[0])?, a: parse(cols[1])?, b: parse(cols[2])? });
        }
        Self::new(name, points).map_err(|e| Error::data(e.to_string()))
    }

    pub fn cast<G: Real>(&self) -> Schedule<G> {
        let conv = |x: F| G::lit(x.to_f64_lossy());
        Schedule {
            name: self.name.clone(),
            points: self.points.iter().map(|p| SchedulePoint { s: conv(p.s), a: conv(p.a), b: conv(p.b) }).collect(),
        }
    }
}

/// Device-like shape: `A` decays exponentially and reaches zero at `a_off`,
/// `B` rises as a cubic from `b0 * b1` to `b1`.
fn device_like<F: Real>(name: &str, a0: f64, kappa: f64, a_off: f64, b1: f64, b0: f64) -> Schedule<F> {
    const KNOTS: usize = 200;
    let floor = (-kappa * a_off).exp();
    let points = (0..=KNOTS)
        .map(|i| {
            let s = i as f64 / KNOTS as f64;
            let x = s.min(a_off);
            let a = a0 * ((-kappa * x).exp() - floor) / (1.0 - floor);
            let b = b1 * (b0 + (1.0 - b0) * s * s * s);
            SchedulePoint { s: F::lit(s), a: F::lit(a.max(0.0)), b: F::lit(b) }
        })
        .collect();
    Schedule::new(name, points).expect("valid device-like schedule")
}

/// Inverse temperature `beta(s) = scale * B(s)` for simulated annealing.
#[derive(Clone, Debug, PartialEq)]
pub struct BetaSchedule<F = f64> {
    base: Schedule<F>,
    scale: F,
}

impl<F: Real> BetaSchedule<F> {
    pub fn beta(&self, s: F) -> F {
        self.scale * self.base.at(s).1
    }

    pub fn scale(&self) -> F {
        self.scale
    }

    pub fn base(&self) -> &Schedule<F> {
        &self.base
    }
}

pub fn sa_beta_schedule<F: Real>(base: &Schedule<F>, beta_scale: F) -> Result<BetaSchedule<F>> {
    if !(beta_scale > F::zero() && beta_scale.is_finite()) {
        return Err(Error::param(format!("beta scale must be positive, got {beta_scale}")));
    }
    Ok(BetaSchedule { base: base.clone(), scale: beta_scale })
}
