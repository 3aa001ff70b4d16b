//! Unnormalized log-posteriors over `(beta, nu)` and their gradients.
//!
//! With `sigma = e^nu` and residuals `r_i = y_i - x_i' beta`, the full target is
//!
//! ```text
//! log pi(beta, nu | y) = -n nu + sum_i log f(r_i / e^nu) + prior term
//! ```
//!
//! and the outlier-limiting target replaces every outlier's factor
//! `(1/sigma) f(r_i / sigma)` by `sigma^gamma`:
//!
//! ```text
//! log pi(beta, nu | y_keep) = -nu (|keep| - |O| gamma) + sum_{i in keep} log f(r_i / e^nu) + prior term
//! ```
//!
//! The prior term is zero for Jeffreys (`1/sigma`) and `+nu` for the flat prior.

use nalgebra::DVector;

use crate::error::{invalid, Result};
use crate::hmc::LogDensity;
use crate::model::{Dataset, Dof, OutlierSpec, Params, PriorSpec, StudentDensity};

/// A Student-t regression posterior ready for repeated evaluation.
///
/// Rows are stored row-major; only the rows that contribute a density factor
/// are kept.
#[derive(Debug, Clone)]
pub struct StudentTarget {
    rows: Vec<f64>,
    response: Vec<f64>,
    p: usize,
    nu_coef: f64,
    density: StudentDensity,
    prior: PriorSpec,
}

impl StudentTarget {
    pub fn full(dataset: &Dataset, dof: Dof, prior: PriorSpec) -> Self {
        let keep: Vec<usize> = (0..dataset.n()).collect();
        Self::from_rows(dataset, &keep, 0, dof, prior)
    }

    pub fn limiting(
        dataset: &Dataset,
        outliers: &OutlierSpec,
        dof: Dof,
        prior: PriorSpec,
    ) -> Result<Self> {
        let n = dataset.n();
        if outliers.n() != n {
            return Err(invalid(format!(
                "outlier spec covers {} points but the dataset has {n}",
                outliers.n()
            )));
        }
        let keep: Vec<usize> = (0..n).filter(|&i| !outliers.is_outlier(i)).collect();
        if keep.is_empty() {
            return Err(invalid("every point is marked as an outlier; no non-outlying data remain"));
        }
        Ok(Self::from_rows(dataset, &keep, outliers.len(), dof, prior))
    }

    fn from_rows(
        dataset: &Dataset,
        keep: &[usize],
        n_outliers: usize,
        dof: Dof,
        prior: PriorSpec,
    ) -> Self {
        let p = dataset.p();
        let x = dataset.design();
        let mut rows = Vec::with_capacity(keep.len() * p);
        for &i in keep {
            rows.extend(x.row(i).iter());
        }
        let response = keep.iter().map(|&i| dataset.response()[i]).collect();
        let nu_coef = keep.len() as f64 - n_outliers as f64 * dof.as_f64();
        Self { rows, response, p, nu_coef, density: StudentDensity::new(dof), prior }
    }

    /// Coefficient `c` in the `-c nu` term.
    pub fn nu_coefficient(&self) -> f64 {
        self.nu_coef
    }

    pub fn p(&self) -> usize {
        self.p
    }

    fn check_len(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.p + 1 {
            return Err(invalid(format!(
                "parameter vector has length {} (expected p + 1 = {})",
                theta.len(),
                self.p + 1
            )));
        }
        Ok(())
    }

    pub fn log_density(&self, theta: &[f64]) -> Result<f64> {
        self.check_len(theta)?;
        let p = self.p;
        let (beta, nu) = (&theta[..p], theta[p]);
        let inv_sigma = (-nu).exp();
        let mut acc = 0.0;
        for (x, &y) in self.rows.chunks_exact(p).zip(&self.response) {
            let fitted: f64 = x.iter().zip(beta).map(|(a, b)| a * b).sum();
            acc += self.density.logpdf((y - fitted) * inv_sigma);
        }
        let prior = self.prior.log_term(&Params::from_slice(theta))?;
        Ok(acc - self.nu_coef * nu + prior)
    }

    /// Value and gradient in one pass over the rows.
    pub fn log_density_and_grad(&self, theta: &[f64], grad: &mut [f64]) -> Result<f64> {
        self.check_len(theta)?;
        let p = self.p;
        let (beta, nu) = (&theta[..p], theta[p]);
        let gamma = self.density.gamma();
        let scale = (gamma + 1.0) / gamma;
        let inv_sigma = (-nu).exp();
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut acc = 0.0;
        let mut g_nu = 0.0;
        for (x, &y) in self.rows.chunks_exact(p).zip(&self.response) {
            let fitted: f64 = x.iter().zip(beta).map(|(a, b)| a * b).sum();
            let z = (y - fitted) * inv_sigma;
            let z2 = z * z;
            acc += self.density.log_norm() - 0.5 * (gamma + 1.0) * (z2 / gamma).ln_1p();
            let w = scale / (1.0 + z2 / gamma);
            let coef = w * z * inv_sigma;
            for (g, xj) in grad[..p].iter_mut().zip(x) {
                *g += coef * xj;
            }
            g_nu += w * z2;
        }
        grad[p] = g_nu - self.nu_coef;
        let params = Params::from_slice(theta);
        let prior = self.prior.log_term(&params)?;
        self.prior.add_grad(&params, grad)?;
        Ok(acc - self.nu_coef * nu + prior)
    }
}

impl LogDensity for StudentTarget {
    fn dim(&self) -> usize {
        self.p + 1
    }

    fn log_density_and_grad(&self, position: &[f64], grad: &mut [f64]) -> Result<f64> {
        StudentTarget::log_density_and_grad(self, position, grad)
    }
}

fn check_params(dataset: &Dataset, params: &Params) -> Result<()> {
    if params.beta.len() != dataset.p() {
        return Err(invalid(format!(
            "beta has length {} but the design has p = {}",
            params.beta.len(),
            dataset.p()
        )));
    }
    if !params.is_finite() {
        return Err(invalid("parameters must be finite"));
    }
    Ok(())
}

pub fn log_posterior(dataset: &Dataset, params: &Params, dof: Dof, prior: &PriorSpec) -> Result<f64> {
    check_params(dataset, params)?;
    StudentTarget::full(dataset, dof, prior.clone()).log_density(&params.to_vec())
}

/// Gradient `[d/d beta_1, ..., d/d beta_p, d/d nu]` of [`log_posterior`].
pub fn grad_log_posterior(
    dataset: &Dataset,
    params: &Params,
    dof: Dof,
    prior: &PriorSpec,
) -> Result<DVector<f64>> {
    check_params(dataset, params)?;
    let target = StudentTarget::full(dataset, dof, prior.clone());
    let mut grad = vec![0.0; params.dim()];
    target.log_density_and_grad(&params.to_vec(), &mut grad)?;
    Ok(DVector::from_vec(grad))
}

pub fn log_limiting_posterior(
    dataset: &Dataset,
    outliers: &OutlierSpec,
    params: &Params,
    dof: Dof,
    prior: &PriorSpec,
) -> Result<f64> {
    check_params(dataset, params)?;
    StudentTarget::limiting(dataset, outliers, dof, prior.clone())?.log_density(&params.to_vec())
}

pub fn grad_log_limiting_posterior(
    dataset: &Dataset,
    outliers: &OutlierSpec,
    params: &Params,
    dof: Dof,
    prior: &PriorSpec,
) -> Result<DVector<f64>> {
    check_params(dataset, params)?;
    let target = StudentTarget::limiting(dataset, outliers, dof, prior.clone())?;
    let mut grad = vec![0.0; params.dim()];
    target.log_density_and_grad(&params.to_vec(), &mut grad)?;
    Ok(DVector::from_vec(grad))
}
