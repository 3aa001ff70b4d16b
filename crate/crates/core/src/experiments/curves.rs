use serde::{Deserialize, Serialize};

use crate::asymptotics::{ols_asymptotic_variance_factor, phi_at_ratio, solve_sigma_star, QuadratureSpec};
use crate::error::{invalid, Error, Result};
use crate::experiments::run_pool;
use crate::model::Dof;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    SigmaStar,
    Phi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaStarRow {
    pub gamma: u32,
    pub sigma_star_ratio: f64,
    pub eta: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiRow {
    pub gamma: u32,
    /// Rounded to 6 significant digits.
    pub phi: f64,
    pub ols_factor: f64,
    /// `phi / ols_factor`, rounded like `phi`.
    pub variance_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CurveTable {
    SigmaStar(Vec<SigmaStarRow>),
    Phi(Vec<PhiRow>),
}

fn round_sig6(x: f64) -> f64 {
    format!("{x:.5e}").parse().expect("formatted float parses")
}

/// `sigma*/sigma0` or `phi` for every integer `gamma` in `[gamma_min, gamma_max]`.
pub fn emit_curves(
    kind: CurveKind,
    gamma_min: u32,
    gamma_max: u32,
    spec: &QuadratureSpec,
    jobs: usize,
) -> Result<CurveTable> {
    if gamma_min < 1 || gamma_min > gamma_max {
        return Err(invalid(format!("need 1 <= gamma_min <= gamma_max (got {gamma_min}, {gamma_max})")));
    }
    spec.validate()?;
    let gammas: Vec<u32> = (gamma_min..=gamma_max).collect();
    let solved = run_pool(jobs, &gammas, |_, &g| -> Result<_> {
        let r = solve_sigma_star(Dof::new(g)?, spec)?;
        let phi = match kind {
            CurveKind::Phi => Some(phi_at_ratio(f64::from(g), r.value, spec)?),
            CurveKind::SigmaStar => None,
        };
        Ok((r, phi))
    })?
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(match kind {
        CurveKind::SigmaStar => CurveTable::SigmaStar(
            solved
                .into_iter()
                .map(|(r, _)| SigmaStarRow { gamma: r.gamma, sigma_star_ratio: r.value, eta: r.eta, residual: r.residual })
                .collect(),
        ),
        CurveKind::Phi => {
            let ols = ols_asymptotic_variance_factor();
            let rows = solved
                .into_iter()
                .map(|(r, phi)| {
                    let phi = phi.ok_or_else(|| Error::Numerical("missing phi value".into()))?;
                    Ok(PhiRow { gamma: r.gamma, phi: round_sig6(phi), ols_factor: ols, variance_ratio: round_sig6(phi / ols) })
                })
                .collect::<Result<Vec<_>>>()?;
            CurveTable::Phi(rows)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding() {
        assert_eq!(round_sig6(1.120_214_548), 1.12021);
        assert_eq!(round_sig6(0.000_123_456_789), 0.000_123_457);
    }

    #[test]
    fn curves_are_monotone() {
        let spec = QuadratureSpec::default();
        let CurveTable::SigmaStar(s) = emit_curves(CurveKind::SigmaStar, 1, 30, &spec, 4).unwrap() else {
            panic!("wrong table kind")
        };
        assert_eq!(s.len(), 30);
        assert!((s[0].sigma_star_ratio - 0.6120).abs() < 5e-4);
        assert!(s.windows(2).all(|w| w[1].sigma_star_ratio > w[0].sigma_star_ratio));
        assert!(s.iter().all(|r| r.sigma_star_ratio > 0.0 && r.sigma_star_ratio <= 1.0));
        let CurveTable::Phi(p) = emit_curves(CurveKind::Phi, 1, 30, &spec, 4).unwrap() else {
            panic!("wrong table kind")
        };
        assert!((1.07..=1.13).contains(&p[3].phi));
        assert!(p.windows(2).all(|w| w[1].phi < w[0].phi));
        assert!(p.iter().all(|r| r.ols_factor == 1.0 && r.variance_ratio == r.phi && r.phi > 1.0));
    }

    #[test]
    fn bad_range() {
        let spec = QuadratureSpec::default();
        assert!(emit_curves(CurveKind::Phi, 0, 3, &spec, 1).is_err());
        assert!(emit_curves(CurveKind::Phi, 5, 3, &spec, 1).is_err());
    }
}
