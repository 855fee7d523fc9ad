//! Scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating-point scalar the numerical core is generic over (`f32`, `f64`).
pub trait Real:
    Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossless-enough conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Shorthand for [`Real::lit`].
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::lit(x)
}

/// Gamma function at integer or half-integer arguments `n/2`, `n >= 1`.
pub fn gamma_half<T: Real>(twice_arg: u32) -> T {
    assert!(twice_arg >= 1);
    if twice_arg.is_multiple_of(2) {
        let k = twice_arg / 2;
        (1..k).fold(T::one(), |acc, j| acc * T::from_u32(j).unwrap())
    } else {
        // Γ(1/2) = √π, Γ(x+1) = xΓ(x)
        let mut acc = T::PI().sqrt();
        let mut x = lit::<T>(0.5);
        while (x * lit(2.0)).to_u32().unwrap() < twice_arg {
            acc = acc * x;
            x = x + T::one();
        }
        acc
    }
}

/// Volume of the unit sphere `S^{n-1}` in `R^n`.
pub fn unit_sphere_volume<T: Real>(n: u32) -> T {
    lit::<T>(2.0) * T::PI().powf(T::from_u32(n).unwrap() / lit(2.0)) / gamma_half::<T>(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_values() {
        assert!((gamma_half::<f64>(1) - std::f64::consts::PI.sqrt()).abs() < 1e-15);
        assert!((gamma_half::<f64>(8) - 6.0).abs() < 1e-15);
        assert!((gamma_half::<f64>(5) - 0.75 * std::f64::consts::PI.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn sphere_volumes() {
        let pi = std::f64::consts::PI;
        assert!((unit_sphere_volume::<f64>(2) - 2.0 * pi).abs() < 1e-14);
        assert!((unit_sphere_volume::<f64>(3) - 4.0 * pi).abs() < 1e-13);
        assert!((unit_sphere_volume::<f64>(4) - 2.0 * pi * pi).abs() < 1e-13);
    }
}
