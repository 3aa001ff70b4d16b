//! Expectations under the standard normal: Gauss-Hermite and adaptive Simpson.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// How `E[h(Z)]`, `Z ~ N(0, 1)`, is computed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum QuadratureSpec {
    /// Gauss-Hermite rule with `order` nodes (at least 20).
    GaussHermite { order: usize },
    /// Adaptive Simpson on `[-truncation, truncation]` with absolute tolerance
    /// `tol` (at most 1e-10); `truncation` is at least 10.
    AdaptiveSimpson { tol: f64, truncation: f64 },
}

impl QuadratureSpec {
    pub const DEFAULT_GH_ORDER: usize = 80;
    pub const DEFAULT_TOL: f64 = 1e-12;
    pub const DEFAULT_TRUNCATION: f64 = 12.0;

    pub fn gauss_hermite() -> Self {
        QuadratureSpec::GaussHermite { order: Self::DEFAULT_GH_ORDER }
    }

    pub fn adaptive() -> Self {
        QuadratureSpec::AdaptiveSimpson { tol: Self::DEFAULT_TOL, truncation: Self::DEFAULT_TRUNCATION }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            QuadratureSpec::GaussHermite { order } if order < 20 => {
                Err(invalid(format!("Gauss-Hermite order must be at least 20 (got {order})")))
            }
            QuadratureSpec::AdaptiveSimpson { tol, .. } if !(tol > 0.0 && tol <= 1e-10) => {
                Err(invalid(format!("adaptive tolerance must lie in (0, 1e-10] (got {tol})")))
            }
            QuadratureSpec::AdaptiveSimpson { truncation, .. } if !(truncation >= 10.0 && truncation.is_finite()) => {
                Err(invalid(format!("truncation must be at least 10 (got {truncation})")))
            }
            _ => Ok(()),
        }
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self::adaptive()
    }
}

/// Nodes and weights for `int e^{-x^2} h(x) dx` (physicists' Hermite), found by
/// Newton iteration on the orthonormal recurrence.
pub fn gauss_hermite_rule(order: usize) -> (Vec<f64>, Vec<f64>) {
    let n = order;
    let nf = n as f64;
    let pim4 = PI.powf(-0.25);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut z = 0.0f64;
    for i in 0..n.div_ceil(2) {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.855_75 * (2.0 * nf + 1.0).powf(-0.166_67),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

fn std_normal_pdf(u: f64) -> f64 {
    (-0.5 * u * u).exp() / (2.0 * PI).sqrt()
}

struct Simpson<'a, F> {
    h: &'a F,
    evals: usize,
}

impl<F: Fn(f64) -> f64> Simpson<'_, F> {
    const MAX_DEPTH: u32 = 60;
    const MAX_EVALS: usize = 50_000_000;

    fn f(&mut self, u: f64) -> f64 {
        self.evals += 1;
        (self.h)(u) * std_normal_pdf(u)
    }

    #[allow(clippy::too_many_arguments)]
    fn step(&mut self, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> Result<f64> {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (self.f(lm), self.f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth >= Self::MAX_DEPTH || delta.abs() <= 15.0 * tol {
            return Ok(left + right + delta / 15.0);
        }
        if self.evals > Self::MAX_EVALS {
            return Err(Error::Numerical("adaptive Simpson exceeded its evaluation budget".into()));
        }
        Ok(self.step(a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)?
            + self.step(m, b, fm, frm, fb, right, 0.5 * tol, depth + 1)?)
    }
}

/// `E[h(Z)]` for `Z ~ N(0, 1)`.
pub fn normal_expectation(h: impl Fn(f64) -> f64, spec: &QuadratureSpec) -> Result<f64> {
    spec.validate()?;
    let value = match *spec {
        QuadratureSpec::GaussHermite { order } => {
            let (x, w) = gauss_hermite_rule(order);
            let s: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * h(std::f64::consts::SQRT_2 * xi)).sum();
            s / PI.sqrt()
        }
        QuadratureSpec::AdaptiveSimpson { tol, truncation } => {
            // Even panel count so that 0 is a panel edge.
            const PANELS: usize = 24;
            let width = 2.0 * truncation / PANELS as f64;
            let mut s = Simpson { h: &h, evals: 0 };
            let mut total = 0.0;
            for k in 0..PANELS {
                let a = -truncation + k as f64 * width;
                let b = a + width;
                let (fa, fm, fb) = (s.f(a), s.f(0.5 * (a + b)), s.f(b));
                let whole = width / 6.0 * (fa + 4.0 * fm + fb);
                total += s.step(a, b, fa, fm, fb, whole, tol / PANELS as f64, 0)?;
            }
            total
        }
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Numerical(format!("normal expectation is not finite ({value})")))
    }
}
