use crate::error::{Error, Result};
use crate::math::{ratio_u128, sqrt};

use super::tally::CoincidenceTally;

/// `g²(0) = 4·C123·C1 / (C12 + C13)²`, correctly rounded from the integer counts.
pub fn g2_estimate(t: &CoincidenceTally) -> Result<f64> {
    let sum = t.c12 as u128 + t.c13 as u128;
    if sum == 0 {
        return Err(Error::Undefined("g2 with C12 + C13 = 0"));
    }
    let num = (4 * t.c123 as u128).checked_mul(t.c1 as u128);
    match num {
        Some(num) if sum < 1 << 63 => Ok(ratio_u128(num, sum * sum)),
        _ => Ok(4.0 * t.c123 as f64 * t.c1 as f64 / (sum as f64 * sum as f64)),
    }
}

/// Poisson standard error of [`g2_estimate`] by first-order propagation.
/// With no triple coincidences the error of a single count is reported.
pub fn g2_stderr(t: &CoincidenceTally) -> Result<f64> {
    let s = (t.c12 + t.c13) as f64;
    if s == 0.0 {
        return Err(Error::Undefined("g2 with C12 + C13 = 0"));
    }
    if t.c123 == 0 {
        return Ok(4.0 * t.c1 as f64 / (s * s));
    }
    let g = g2_estimate(t)?;
    let rel = 1.0 / t.c123 as f64 + if t.c1 > 0 { 1.0 / t.c1 as f64 } else { 0.0 } + 4.0 / s;
    Ok(g * sqrt(rel))
}

/// Coincidences over accidentals; `+∞` when no accidentals were seen.
pub fn coincidence_to_accidentals(t: &CoincidenceTally) -> f64 {
    if t.accidental_12 == 0 {
        f64::INFINITY
    } else {
        t.coincidences as f64 / t.accidental_12 as f64
    }
}
