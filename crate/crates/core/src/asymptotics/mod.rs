//! Large-sample behavior of the Student-t posterior under normal data.
//!
//! When the data are really normal with scale `sigma0`, the Student posterior
//! concentrates on the true coefficients and on a shrunken scale
//! `sigma* = r(gamma) sigma0`. With `eta = log r` and `c = e^{2 eta} gamma`,
//! `eta` is the unique root of
//!
//! ```text
//! (gamma + 1) E[Z^2 / (c + Z^2)] - 1 = 0,             Z ~ N(0, 1)
//! (gamma + 1) [1 - sqrt(2 pi c) e^{c/2} Phi(-sqrt c)] - 1 = 0
//! ```
//!
//! (the second line is the closed form of the first). The coefficient
//! estimator's asymptotic covariance is the OLS one inflated by
//!
//! ```text
//! phi(gamma) = E[Z^2 / (1 + Z^2/c)^2] / E[(1 - Z^2/c) / (1 + Z^2/c)^2]^2.
//! ```

mod quadrature;
mod root;

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::Dof;
use crate::special::{erfc, erfcx};

pub use quadrature::{gauss_hermite_rule, normal_expectation, QuadratureSpec};

/// Search interval for `eta = log(sigma*/sigma0)`.
pub const ETA_BRACKET: (f64, f64) = (-20.0, 20.0);
/// Required `|lhs|` at the returned root.
pub const ROOT_RESIDUAL_TOL: f64 = 1e-10;
/// Above this `c = e^{2 eta} gamma` the closed form switches to the scaled
/// complementary error function.
pub const CLOSED_FORM_SWITCH: f64 = 50.0;

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 - 0.5 * erfc(x * FRAC_1_SQRT_2)
    } else {
        0.5 * erfc(-x * FRAC_1_SQRT_2)
    }
}

fn tail_ratio_c(eta: f64, dof: Dof) -> Result<f64> {
    let c = (2.0 * eta).exp() * dof.as_f64();
    if !(c > 0.0 && c.is_finite()) {
        return Err(invalid(format!("eta = {eta} is outside the representable range")));
    }
    Ok(c)
}

/// Integral form of the pseudo-true scale equation at `eta`.
///
/// Strictly decreasing in `eta`, from `gamma` (as `eta -> -inf`) to `-1`.
pub fn scale_equation_lhs(eta: f64, dof: Dof, spec: &QuadratureSpec) -> Result<f64> {
    let c = tail_ratio_c(eta, dof)?;
    let e = normal_expectation(|u| u * u / (c + u * u), spec)?;
    Ok((dof.as_f64() + 1.0) * e - 1.0)
}

/// `sqrt(2 pi c) e^{c/2} Phi(-sqrt c)`, written as `sqrt(pi c / 2) erfcx(sqrt(c / 2))`
/// for large `c` so that no huge exponential meets a tiny tail.
fn mills_term(c: f64) -> f64 {
    if c > CLOSED_FORM_SWITCH {
        (0.5 * PI * c).sqrt() * erfcx((0.5 * c).sqrt())
    } else {
        (2.0 * PI * c).sqrt() * (0.5 * c).exp() * normal_cdf(-c.sqrt())
    }
}

/// Closed (normal-CDF) form of the pseudo-true scale equation at `eta`.
pub fn scale_equation_lhs_closed_form(eta: f64, dof: Dof) -> Result<f64> {
    let c = tail_ratio_c(eta, dof)?;
    Ok((dof.as_f64() + 1.0) * (1.0 - mills_term(c)) - 1.0)
}

/// Solved pseudo-true scale ratio `sigma*/sigma0` for one `gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleRatio {
    pub value: f64,
    pub eta: f64,
    pub gamma: u32,
    /// The scale equation evaluated at `eta`.
    pub residual: f64,
}

/// Root of the scale equation (integral form under `spec`) on [`ETA_BRACKET`].
pub fn solve_sigma_star(dof: Dof, spec: &QuadratureSpec) -> Result<ScaleRatio> {
    solve_sigma_star_in(dof, spec, ETA_BRACKET)
}

pub fn solve_sigma_star_in(dof: Dof, spec: &QuadratureSpec, bracket: (f64, f64)) -> Result<ScaleRatio> {
    spec.validate()?;
    let lhs = |eta: f64| scale_equation_lhs(eta, dof, spec);
    let eta = root::brent(lhs, bracket.0, bracket.1, 1e-14, 200)?;
    let residual = lhs(eta)?;
    if residual.abs() >= ROOT_RESIDUAL_TOL {
        return Err(Error::Numerical(format!(
            "scale equation residual {residual:e} at eta = {eta} exceeds {ROOT_RESIDUAL_TOL:e}"
        )));
    }
    Ok(ScaleRatio { value: eta.exp(), eta, gamma: dof.get(), residual })
}

/// `phi` evaluated at a given `gamma` and scale ratio `r` (no root solve).
pub fn phi_at_ratio(gamma: f64, ratio: f64, spec: &QuadratureSpec) -> Result<f64> {
    let c = ratio * ratio * gamma;
    if !(c > 0.0 && c.is_finite()) {
        return Err(invalid(format!("r^2 gamma = {c} must be positive and finite")));
    }
    let num = normal_expectation(
        |z| {
            let d = 1.0 + z * z / c;
            z * z / (d * d)
        },
        spec,
    )?;
    let den = normal_expectation(
        |z| {
            let t = z * z / c;
            (1.0 - t) / ((1.0 + t) * (1.0 + t))
        },
        spec,
    )?;
    Ok(num / (den * den))
}

/// Asymptotic variance inflation of the Student coefficient estimator relative to OLS.
pub fn phi_factor(dof: Dof, spec: &QuadratureSpec) -> Result<f64> {
    let r = solve_sigma_star(dof, spec)?;
    phi_at_ratio(dof.as_f64(), r.value, spec)
}

/// The OLS benchmark's factor on `sigma0^2 E[XX']^{-1}`; always 1.
pub fn ols_asymptotic_variance_factor() -> f64 {
    1.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dof(g: u32) -> Dof {
        Dof::new(g).unwrap()
    }

    #[test]
    fn normal_cdf_reference_values() {
        // mpmath.ncdf at 40 digits
        let cases = [
            (-8.0, 6.220_960_574_271_784_123_5e-16),
            (-3.5, 0.000_232_629_079_035_525_036_35),
            (-1.0, 0.158_655_253_931_457_051_41),
            (-0.2, 0.420_740_290_560_896_972_62),
            (0.0, 0.5),
            (0.7, 0.758_036_347_776_926_971_38),
            (1.96, 0.975_002_104_851_779_563_79),
            (3.0, 0.998_650_101_968_369_905_47),
            (6.0, 0.999_999_999_013_412_354_96),
        ];
        for (x, want) in cases {
            assert!((normal_cdf(x) - want).abs() < 1e-15, "Phi({x}) = {}", normal_cdf(x));
        }
        assert!((normal_cdf(1.96) - 0.975_002_1).abs() < 1e-6);
        assert!(((normal_cdf(-8.0) - 6.220_960_574_271_784e-16) / 6.22e-16).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn normal_cdf_symmetry(x in -30.0f64..30.0) {
            prop_assert!((normal_cdf(x) + normal_cdf(-x) - 1.0).abs() < 1e-15);
        }

        #[test]
        fn closed_form_matches_integral(eta in -6.0f64..6.0, g in 1u32..50) {
            let a = scale_equation_lhs_closed_form(eta, dof(g)).unwrap();
            let b = scale_equation_lhs(eta, dof(g), &QuadratureSpec::adaptive()).unwrap();
            prop_assert!((a - b).abs() < 1e-8, "{} vs {}", a, b);
        }
    }

    #[test]
    fn lhs_limits_and_monotonicity() {
        let spec = QuadratureSpec::adaptive();
        for g in [1, 4, 30] {
            let lo = scale_equation_lhs(-20.0, dof(g), &spec).unwrap();
            let hi = scale_equation_lhs(20.0, dof(g), &spec).unwrap();
            assert!((lo - g as f64).abs() < 1e-6 * g as f64, "{lo}");
            assert!((hi + 1.0).abs() < 1e-6, "{hi}");
            let mut prev = f64::INFINITY;
            // Away from the saturated ends where consecutive values round equal.
            for k in -16..=16 {
                let v = scale_equation_lhs_closed_form(k as f64 * 0.5, dof(g)).unwrap();
                assert!(v < prev);
                prev = v;
            }
        }
    }

    #[test]
    fn closed_form_is_continuous_at_the_switch() {
        for g in [1u32, 2, 50] {
            let eta = 0.5 * (CLOSED_FORM_SWITCH / g as f64).ln();
            let a = scale_equation_lhs_closed_form(eta - 1e-13, dof(g)).unwrap();
            let b = scale_equation_lhs_closed_form(eta + 1e-13, dof(g)).unwrap();
            assert!((a - b).abs() < 1e-12, "{a} {b}");
        }
        // Huge c stays finite and tends to -1.
        let v = scale_equation_lhs_closed_form(20.0, dof(1)).unwrap();
        assert!((v + 1.0).abs() < 1e-12);
    }

    #[test]
    fn gamma_one_root() {
        let v = scale_equation_lhs(-0.4910, dof(1), &QuadratureSpec::adaptive()).unwrap();
        assert!(v.abs() < 1e-3);
        let r = solve_sigma_star(dof(1), &QuadratureSpec::default()).unwrap();
        // mpmath: eta* = -0.491017798832206, r = 0.612003180962481
        assert!((r.value - 0.6120).abs() < 5e-4);
        assert!((r.value - 0.612_003_180_962_481).abs() < 1e-10);
        assert!(r.residual.abs() < ROOT_RESIDUAL_TOL);
    }

    #[test]
    fn large_gamma_ratio_near_one() {
        let r = solve_sigma_star(dof(200), &QuadratureSpec::default()).unwrap();
        assert!(r.value > 0.99 && r.value < 1.0);
        assert!((r.value - 0.995_060_997_600_451).abs() < 1e-9);
    }

    #[test]
    fn phi_values() {
        let spec = QuadratureSpec::default();
        let p4 = phi_factor(dof(4), &spec).unwrap();
        assert!((1.07..=1.13).contains(&p4));
        // mpmath reference values
        assert!((p4 - 1.120_214_548_179_73).abs() < 1e-8);
        assert!((phi_factor(dof(1), &spec).unwrap() - 1.669_885_526_877_54).abs() < 1e-8);
        let p200 = phi_factor(dof(200), &spec).unwrap();
        assert!(p200 > 1.0 && p200 < 1.01);
        // With r = 1 and gamma -> inf the integrands are Z^2 and 1.
        assert!((phi_at_ratio(1e12, 1.0, &spec).unwrap() - 1.0).abs() < 1e-9);
        assert_eq!(ols_asymptotic_variance_factor(), 1.0);
    }

    #[test]
    fn bracket_failure_is_reported() {
        let err = solve_sigma_star_in(dof(1), &QuadratureSpec::default(), (1.0, 2.0)).unwrap_err();
        assert!(matches!(err, Error::Numerical(_)));
    }
}
