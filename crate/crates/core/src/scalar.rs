//! Scalar abstraction shared by every model in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar the models are generic over (`f32` or `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Sum
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into the scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle<T: Real>(angle: T) -> T {
    let two_pi = T::PI() + T::PI();
    let mut r = angle - two_pi * (angle / two_pi).floor();
    // r is in [0, 2pi) up to rounding
    if r >= two_pi {
        r = r - two_pi;
    }
    if r > T::PI() {
        r - two_pi
    } else {
        r
    }
}

/// Shifts `angle` by a multiple of 2pi so it lies within pi of `reference`.
pub fn unwrap_near<T: Real>(angle: T, reference: T) -> T {
    reference + wrap_angle(angle - reference)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn wrap_range() {
        assert_eq!(wrap_angle(0.0_f64), 0.0);
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert!((wrap_angle(0.3 + 2.0 * PI) - 0.3).abs() < 1e-14);
        assert!((wrap_angle(0.3 - 20.0 * PI) - 0.3).abs() < 1e-13);
        let w = wrap_angle(-1e-18_f64);
        assert!(w > -PI && w <= PI);
    }

    #[test]
    fn unwrap_keeps_continuity() {
        let a = unwrap_near(-PI + 0.01, PI - 0.01);
        assert!((a - (PI + 0.01)).abs() < 1e-12);
    }

    #[test]
    fn works_in_f32() {
        let w = wrap_angle(7.0_f32);
        assert!((w - (7.0 - 2.0 * std::f32::consts::PI)).abs() < 1e-5);
    }
}
