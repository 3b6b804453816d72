//! Scalar abstraction shared by all numeric code.

use num_traits::{FromPrimitive, ToPrimitive};

/// Floating-point scalar type usable throughout the crate.
///
/// Implemented for `f32` and `f64`. The bound combines the linear-algebra
/// requirements (`nalgebra::RealField`) with `num-traits` conversions so that
/// tolerances and literals written as `f64` work at either precision.
pub trait Real: nalgebra::RealField + FromPrimitive + ToPrimitive + Copy {
    /// Converts an `f64` literal into this scalar type.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal must convert to scalar type")
    }

    /// `true` when the value is neither NaN nor infinite.
    fn finite(self) -> bool {
        self.to_f64().is_some_and(f64::is_finite)
    }
}

impl Real for f32 {}
impl Real for f64 {}
