//! Golden angle constants and phase evaluation.

use std::f64::consts::TAU;

/// Fractional golden turn, `1 - (sqrt(5) - 1) / 2 = (3 - sqrt(5)) / 2`.
pub const PHI_FRAC: f64 = 0.381_966_011_250_105_15;

// PHI_FRAC + PHI_FRAC_LO carries the constant to about 34 digits.
const PHI_FRAC_LO: f64 = -1.189_999_194_432_768_2e-18;

/// The golden angle in radians (about 137.5 degrees).
pub const GOLDEN_ANGLE_RAD: f64 = TAU * PHI_FRAC;

/// Phase of spiral index `n`, reduced to `[0, 2π)`.
///
/// The product `n·φ` is reduced modulo one before scaling by 2π so large
/// indices do not lose the fractional part. The product is formed in
/// double-double arithmetic; indices above 2^40 are outside the supported
/// range (the index itself stops being exact in the split).
pub fn golden_angle_phase(n: u64) -> f64 {
    let x = n as f64;
    let hi = x * PHI_FRAC;
    let hi_err = x.mul_add(PHI_FRAC, -hi);
    let turns = (hi.fract() + (hi_err + x * PHI_FRAC_LO)).rem_euclid(1.0);
    let phase = TAU * turns;
    if phase >= TAU {
        0.0
    } else {
        phase
    }
}
