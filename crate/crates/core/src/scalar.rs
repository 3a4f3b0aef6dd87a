//! Scalar abstraction shared by every numeric routine in the crate.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real floating-point scalar accepted by the numeric code (`f32` or `f64`).
///
/// Tolerances are written as `f64` literals throughout the crate and lifted
/// with [`Real::lit`]; [`Real::tol`] additionally keeps a tolerance above the
/// working precision so the same code stays meaningful in single precision.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + std::fmt::Debug + Send + Sync + 'static
{
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("literal representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    /// `max(x, 64 ε)`.
    fn tol(x: f64) -> Self {
        let floor = Self::default_epsilon() * Self::lit(64.0);
        let x = Self::lit(x);
        if x > floor {
            x
        } else {
            floor
        }
    }

    /// Smallest eigenvalue admitted when taking fractional matrix powers.
    fn eig_floor() -> Self;
}

impl Real for f32 {
    fn eig_floor() -> Self {
        f32::MIN_POSITIVE
    }
}

impl Real for f64 {
    fn eig_floor() -> Self {
        1e-300
    }
}
