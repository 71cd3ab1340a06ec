//! Scalar abstractions.
//!
//! Floating-point code is written against [`Real`] so that the same routines
//! serve `f32` and `f64`. Ising parameters are exact: every field and coupling
//! used by the instance generators is a multiple of one third, so they are
//! stored as integer numerators in [`Thirds`].

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::{Deserialize, Serialize};

/// Floating-point scalar used by schedules, solvers and statistics.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + Sum
    + fmt::Debug
    + fmt::Display
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`; constants in this crate are all representable.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// An exact rational with denominator three, stored as its numerator.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Thirds(pub i64);

impl Thirds {
    pub const ZERO: Thirds = Thirds(0);

    /// `n` whole units.
    pub const fn units(n: i64) -> Self {
        Thirds(3 * n)
    }

    pub const fn numer(self) -> i64 {
        self.0
    }

    pub fn abs(self) -> Self {
        Thirds(self.0.abs())
    }

    pub fn to_real<F: Real>(self) -> F {
        F::lit(self.0 as f64) / F::lit(3.0)
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / 3.0
    }

    /// Multiply by a spin or gauge sign in `{+1, -1}`.
    #[inline]
    pub fn signed(self, sign: i8) -> Self {
        if sign < 0 {
            Thirds(-self.0)
        } else {
            self
        }
    }
}

impl fmt::Display for Thirds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 % 3 == 0 {
            write!(f, "{}", self.0 / 3)
        } else {
            write!(f, "{}/3", self.0)
        }
    }
}

impl Add for Thirds {
    type Output = Thirds;
    fn add(self, rhs: Thirds) -> Thirds {
        Thirds(self.0 + rhs.0)
    }
}

impl Sub for Thirds {
    type Output = Thirds;
    fn sub(self, rhs: Thirds) -> Thirds {
        Thirds(self.0 - rhs.0)
    }
}

impl Neg for Thirds {
    type Output = Thirds;
    fn neg(self) -> Thirds {
        Thirds(-self.0)
    }
}

impl Mul<i64> for Thirds {
    type Output = Thirds;
    fn mul(self, rhs: i64) -> Thirds {
        Thirds(self.0 * rhs)
    }
}

impl AddAssign for Thirds {
    fn add_assign(&mut self, rhs: Thirds) {
        self.0 += rhs.0;
    }
}

impl SubAssign for Thirds {
    fn sub_assign(&mut self, rhs: Thirds) {
        self.0 -= rhs.0;
    }
}

impl Sum for Thirds {
    fn sum<I: Iterator<Item = Thirds>>(iter: I) -> Thirds {
        Thirds(iter.map(|t| t.0).sum())
    }
}
