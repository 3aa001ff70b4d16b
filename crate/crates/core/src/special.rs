//! Log-gamma and error-function plumbing over `libm`, plus the scaled
//! complementary error function, which `libm` lacks.

use std::f64::consts::PI;

/// `ln Γ(x)` for `x > 0`.
pub(crate) fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    libm::lgamma(x)
}

/// Below this `erfcx` is `e^{x^2} erfc(x)` directly; above, a continued fraction.
const ERFCX_SWITCH: f64 = 2.5;

/// `e^{x^2} erfc(x)` for `x >= ERFCX_SWITCH` via the Laplace continued fraction
/// `erfc(x) = e^{-x^2}/sqrt(pi) / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))`,
/// evaluated with the modified Lentz method.
fn erfcx_continued_fraction(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = x;
    let mut c = f;
    let mut d = 0.0;
    for k in 1..10_000 {
        let a = 0.5 * k as f64;
        d = x + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        d = 1.0 / d;
        c = x + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    1.0 / (f * PI.sqrt())
}

/// Scaled complementary error function `e^{x^2} erfc(x)` for `x >= 0`.
pub(crate) fn erfcx(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x < ERFCX_SWITCH {
        (x * x).exp() * libm::erfc(x)
    } else if x.is_infinite() {
        0.0
    } else {
        erfcx_continued_fraction(x)
    }
}

pub(crate) fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}
