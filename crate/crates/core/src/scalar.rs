//! Scalar abstractions.
//!
//! Closed-form threshold algebra only needs field operations, so it is written
//! against [`Field`] and can be evaluated exactly with rationals. Everything
//! that needs `exp`, `ln`, `sqrt` or iteration is written against [`Real`]
//! (`f32` or `f64`).

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, Num, ToPrimitive};

/// Ordered field: enough for rational-function thresholds.
pub trait Field: Num + Copy + PartialOrd + Debug {
    fn two() -> Self {
        Self::one() + Self::one()
    }

    fn four() -> Self {
        Self::two() * Self::two()
    }
}

impl<T: Num + Copy + PartialOrd + Debug> Field for T {}

/// Floating point scalar used by the numeric solvers.
pub trait Real: Field + Float + FromPrimitive + ToPrimitive + Display + Send + Sync + 'static {
    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Lossy conversion to `f64`, used for error payloads and reporting.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}
