//! Float helpers routed through `libm` so results are identical on every target.

pub use core::f64::consts::{LN_2, PI};

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn ln_1p(x: f64) -> f64 {
    libm::log1p(x)
}

#[inline]
pub fn exp_m1(x: f64) -> f64 {
    libm::expm1(x)
}

#[inline]
pub fn powi(x: f64, n: i32) -> f64 {
    libm::pow(x, f64::from(n))
}

#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub fn atan2(y: f64, x: f64) -> f64 {
    libm::atan2(y, x)
}

#[inline]
pub fn acos(x: f64) -> f64 {
    libm::acos(x)
}

#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}

/// Reduces an angle into `[0, period)`.
pub fn wrap(angle: f64, period: f64) -> f64 {
    let r = libm::fmod(angle, period);
    let r = if r < 0.0 { r + period } else { r };
    if r >= period {
        0.0
    } else {
        r
    }
}

/// Correctly rounded `num / den` for exact integer operands.
///
/// Used where a ratio of counts must match an exact rational evaluation bit for
/// bit. Requires `den < 2^127`.
pub fn ratio_u128(num: u128, den: u128) -> f64 {
    assert!(den != 0, "ratio_u128: zero denominator");
    assert!(den < (1u128 << 127), "ratio_u128: denominator too large");
    if num == 0 {
        return 0.0;
    }
    const TOP: u128 = 1 << 53;
    let mut q = num / den;
    let mut r = num % den;
    let mut exp: i32 = 0;
    let sticky;
    if q >= TOP << 1 {
        // More than 54 significant bits in the integer part.
        let bits = 128 - q.leading_zeros();
        let extra = bits - 54;
        sticky = (q & ((1u128 << extra) - 1)) != 0 || r != 0;
        q >>= extra;
        exp += extra as i32;
    } else {
        while q < TOP {
            r <<= 1;
            q <<= 1;
            if r >= den {
                r -= den;
                q |= 1;
            }
            exp -= 1;
        }
        sticky = r != 0;
    }
    // q now holds 54 bits: 53 mantissa bits plus one guard bit.
    let guard = q & 1;
    let mut mant = q >> 1;
    exp += 1;
    if guard == 1 && (sticky || mant & 1 == 1) {
        mant += 1;
    }
    libm::scalbn(mant as f64, exp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_into_period() {
        assert_eq!(wrap(-0.5, 2.0), 1.5);
        assert_eq!(wrap(4.25, 2.0), 0.25);
        assert_eq!(wrap(2.0, 2.0), 0.0);
    }

    #[test]
    fn ratio_matches_ieee_division_for_small_operands() {
        for (n, d) in [(1u128, 3u128), (2, 3), (10, 7), (123_456_789, 1000), (5, 5), (1, 1 << 60)] {
            assert_eq!(ratio_u128(n, d), n as f64 / d as f64, "{n}/{d}");
        }
    }

    #[test]
    fn ratio_large_operands() {
        let n = (1u128 << 100) + 1;
        assert_eq!(ratio_u128(n, 1), libm::scalbn(1.0, 100));
        assert_eq!(ratio_u128(3 << 90, 3 << 20), libm::scalbn(1.0, 70));
    }
}
