//! Floating-point scalar abstraction: the whole library is generic over
//! `Real`, which `f32` and `f64` implement.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Scalar type the numerical core is generic over.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
}

impl<T> Real for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + ToPrimitive
        + NumAssign
        + Sum
        + Default
        + Debug
        + Display
        + Send
        + Sync
        + 'static
{
}

/// Converts a scalar to `f64` for reporting and accumulation.
#[inline]
pub fn upcast<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Converts an `f64` constant into `T`.
///
/// Panics only if `T` cannot represent any approximation of `x`, which does
/// not happen for the supported scalar types.
#[inline]
pub fn cast<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 constant converts to scalar type")
}

/// Natural log of the gamma function (Lanczos, g = 7, 9 terms).
///
/// Exact integer arguments should go through factorials instead; this is for
/// general real arguments such as Dirichlet tilt exponents.
pub fn ln_gamma<T: Real>(x: T) -> T {
    const COEFFS: [f64; 8] = [
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    let half = cast::<T>(0.5);
    let one = T::one();
    if x < half {
        // reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x)
        let pi = T::PI();
        return (pi / (pi * x).sin()).ln() - ln_gamma(one - x);
    }
    let x = x - one;
    let mut acc = cast::<T>(0.999_999_999_999_809_93);
    for (i, &c) in COEFFS.iter().enumerate() {
        acc = acc + cast::<T>(c) / (x + cast::<T>(i as f64 + 1.0));
    }
    let t = x + cast::<T>(7.5);
    cast::<T>(0.5 * (2.0 * std::f64::consts::PI).ln()) + (x + half) * t.ln() - t + acc.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_matches_factorials() {
        for n in 1..15u64 {
            let exact: f64 = (1..n).map(|k| (k as f64).ln()).sum();
            let approx = ln_gamma(n as f64);
            assert!((approx - exact).abs() < 1e-11, "n={n}: {approx} vs {exact}");
        }
    }

    #[test]
    fn ln_gamma_half_integer() {
        // Gamma(1/2) = sqrt(pi)
        let v: f64 = ln_gamma(0.5);
        assert!((v - 0.5 * std::f64::consts::PI.ln()).abs() < 1e-12);
    }

    #[test]
    fn ln_gamma_f32_path() {
        let v: f32 = ln_gamma(4.0f32);
        assert!((v - 6.0f32.ln()).abs() < 1e-4);
    }
}
