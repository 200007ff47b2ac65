//! Scalar special functions: the thermal coth factor and erfc.

use crate::Real;

/// Temperatures at or below this (MeV) are treated as the T → 0 limit.
pub const ZERO_TEMPERATURE: f64 = 1e-6;

const SERIES_BELOW: f64 = 1e-6;
const SATURATE_ABOVE: f64 = 350.0;

/// Hyperbolic cotangent, accurate across the whole range of arguments.
///
/// Uses `1 + 2/(e^{2x} − 1)` through `exp_m1`, the Laurent series for tiny
/// arguments and saturates at 1 once `e^{-2x}` is below double precision.
pub fn coth<T: Real>(x: T) -> T {
    let ax = x.abs();
    let value = if ax < T::lit(SERIES_BELOW) {
        T::one() / ax + ax / T::lit(3.0)
    } else if ax > T::lit(SATURATE_ABOVE) {
        T::one()
    } else {
        T::one() + T::lit(2.0) / (ax + ax).exp_m1()
    };
    if x < T::zero() {
        -value
    } else {
        value
    }
}

/// `coth(ħω / 2T)` with ħ = k_B = 1, including the zero-temperature limit.
pub fn thermal_coth<T: Real>(omega: T, temperature: T) -> T {
    if temperature <= T::lit(ZERO_TEMPERATURE) {
        T::one()
    } else {
        coth(omega / (temperature + temperature))
    }
}

/// Complementary error function. Values below 1e-300 are flushed to zero.
pub fn erfc<T: Real>(x: T) -> T {
    let v = libm::erfc(x.as_f64());
    if v < 1e-300 {
        T::zero()
    } else {
        T::lit(v)
    }
}

/// Probability mass of `N(mean, variance)` on the half line `q > 0`.
pub fn upper_tail<T: Real>(mean: T, variance: T) -> T {
    let two = T::lit(2.0);
    erfc(-mean / (two * variance).sqrt()) / two
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coth_matches_definition_in_the_bulk() {
        for &x in &[1e-5_f64, 1e-3, 0.1, 0.29468, 1.0, 5.0, 20.0, 100.0] {
            let direct = x.cosh() / x.sinh();
            let rel = (coth(x) - direct).abs() / direct;
            assert!(rel < 1e-14, "x={x} rel={rel}");
        }
    }

    #[test]
    fn coth_small_argument_series() {
        let x = 1e-8_f64;
        assert!((coth(x) * x - 1.0).abs() < 1e-15);
        assert_eq!(coth(-x), -coth(x));
    }

    #[test]
    fn coth_saturates() {
        assert_eq!(coth(400.0_f64), 1.0);
        assert_eq!(coth(1e6_f64), 1.0);
        // 2/(e^{700}-1) underflows relative to 1 long before the cutoff
        assert_eq!(coth(349.0_f64), 1.0);
    }

    #[test]
    fn zero_temperature_limit() {
        assert_eq!(thermal_coth(2.9468, 0.0), 1.0);
        assert_eq!(thermal_coth(2.9468, 1e-7), 1.0);
        assert!(thermal_coth(2.9468, 5.0) > 1.0);
    }

    #[test]
    fn coth_f32() {
        let v: f32 = coth(0.5f32);
        assert!((v - 2.163_953_4).abs() < 1e-6);
    }

    #[test]
    #[allow(clippy::excessive_precision)]
    fn erfc_reference_values() {
        // mpmath, 30 digits
        let cases = [
            (0.0, 1.0),
            (0.5, 0.479_500_122_186_953_5),
            (-1.0, 1.842_700_792_949_714_9),
            (3.0, 2.209_049_699_858_544e-5),
            (6.708_203_932_499_369, 2.381_600_164_396_305e-21),
        ];
        for (x, want) in cases {
            let got: f64 = erfc(x);
            assert!(((got - want) / want).abs() < 1e-14, "x={x} got={got} want={want}");
        }
    }

    #[test]
    fn erfc_clamps_deep_tail() {
        assert_eq!(erfc(30.0_f64), 0.0);
    }

    #[test]
    fn upper_tail_symmetric_gaussian() {
        assert_eq!(upper_tail(0.0_f64, 0.4), 0.5);
    }
}
