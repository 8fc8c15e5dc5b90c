//! Standard normal CDF and a log-CDF that stays accurate deep in the left tail.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Below this argument `ln Φ` switches to the Mills-ratio form.
const TAIL_SWITCH: f64 = -5.0;

/// Terms in the backward continued-fraction evaluation. At the switch point
/// (x = 5) the tail of the fraction is far below f64 resolution after ~120.
const CF_TERMS: usize = 200;

/// Φ(a), the standard normal CDF.
pub fn norm_cdf(a: f64) -> f64 {
    0.5 * libm::erfc(-a * FRAC_1_SQRT_2)
}

/// ln Φ(a).
///
/// For `a >= 0` uses `ln_1p(-Q(a))` so values near 1 keep full relative
/// precision; for moderate negative `a` uses the erfc directly; below -5 uses
///
/// `ln Φ(a) = -a²/2 - ln √(2π) + ln R(-a)`,
///
/// where `R` is the Mills ratio `Q(x)/φ(x)` (equivalently `erfcx(x/√2)·√(π/2)`),
/// evaluated by its continued fraction. Finite for every finite `a`.
pub fn log_norm_cdf(a: f64) -> f64 {
    if a.is_nan() {
        return f64::NAN;
    }
    if a >= 0.0 {
        let q = 0.5 * libm::erfc(a * FRAC_1_SQRT_2);
        (-q).ln_1p()
    } else if a > TAIL_SWITCH {
        norm_cdf(a).ln()
    } else {
        let x = -a;
        -0.5 * x * x - 0.5 * (2.0 * PI).ln() + mills_ratio(x).ln()
    }
}

/// Mills ratio `R(x) = Q(x) / φ(x)` for `x >= 5`, via
/// `R(x) = 1/(x + 1/(x + 2/(x + 3/(x + ...))))`.
fn mills_ratio(x: f64) -> f64 {
    debug_assert!(x >= -TAIL_SWITCH);
    let mut tail = x;
    for k in (1..=CF_TERMS).rev() {
        tail = x + k as f64 / tail;
    }
    1.0 / tail
}
