//! Student-t regression model: data containers, densities, posteriors and
//! the closed-form condition checks.

mod conditions;
mod density;
mod posterior;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};

pub use conditions::{
    check_limiting_properness, check_properness, check_thm1_condition, require_limiting_proper,
    require_proper, Thm1Check,
};
pub use density::{log_pdf_ratio, pdf_ratio, student_logpdf, StudentDensity};
pub use posterior::{
    grad_log_limiting_posterior, grad_log_posterior, log_limiting_posterior, log_posterior,
    StudentTarget,
};

/// Regression data: an `n x p` design whose first column is the intercept, and
/// the response vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    design: DMatrix<f64>,
    response: DVector<f64>,
}

impl Dataset {
    pub fn new(design: DMatrix<f64>, response: DVector<f64>) -> Result<Self> {
        let (n, p) = design.shape();
        if n == 0 || p == 0 {
            return Err(invalid(format!("dataset must have n >= 1 and p >= 1 (got n = {n}, p = {p})")));
        }
        if response.len() != n {
            return Err(invalid(format!(
                "response has {} entries but the design has {n} rows",
                response.len()
            )));
        }
        if let Some(i) = design.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("non-finite design entry at row {}", i % n + 1)));
        }
        if let Some(i) = response.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("non-finite response at row {}", i + 1)));
        }
        if let Some(i) = design.column(0).iter().position(|&v| v != 1.0) {
            return Err(invalid(format!(
                "first design column must be the intercept (all ones); row {} differs",
                i + 1
            )));
        }
        Ok(Self { design, response })
    }

    /// Builds a dataset from covariate rows that already include the intercept.
    pub fn from_rows(rows: &[Vec<f64>], response: Vec<f64>) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != p) {
            return Err(invalid(format!("row {} has a different number of covariates", i + 1)));
        }
        let design = DMatrix::from_fn(n, p, |i, j| rows[i][j]);
        Self::new(design, DVector::from_vec(response))
    }

    pub fn n(&self) -> usize {
        self.design.nrows()
    }

    pub fn p(&self) -> usize {
        self.design.ncols()
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.design
    }

    pub fn response(&self) -> &DVector<f64> {
        &self.response
    }

    /// Same covariates, new response vector.
    pub fn with_response(&self, response: DVector<f64>) -> Result<Self> {
        Self::new(self.design.clone(), response)
    }

    /// Same data with a single response value replaced (0-based index).
    pub fn with_response_at(&self, index: usize, value: f64) -> Result<Self> {
        if index >= self.n() {
            return Err(invalid(format!("row index {index} out of range for n = {}", self.n())));
        }
        let mut y = self.response.clone();
        y[index] = value;
        self.with_response(y)
    }

    /// Drops the given rows (0-based).
    pub fn without_rows(&self, drop: &[usize]) -> Result<Self> {
        if let Some(&i) = drop.iter().find(|&&i| i >= self.n()) {
            return Err(invalid(format!("row index {i} out of range for n = {}", self.n())));
        }
        let keep: Vec<usize> = (0..self.n()).filter(|i| !drop.contains(i)).collect();
        let design = self.design.select_rows(keep.iter());
        let response = self.response.select_rows(keep.iter());
        Self::new(design, response)
    }

    /// Each row repeated `times` times, in order.
    pub fn replicated(&self, times: usize) -> Result<Self> {
        let idx: Vec<usize> = (0..times).flat_map(|_| 0..self.n()).collect();
        Self::new(self.design.select_rows(idx.iter()), self.response.select_rows(idx.iter()))
    }
}

/// Degrees of freedom of the Student error density; a positive integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Dof(u32);

impl Dof {
    pub fn new(gamma: u32) -> Result<Self> {
        if gamma == 0 {
            return Err(invalid("degrees of freedom must be a positive integer"));
        }
        Ok(Self(gamma))
    }

    pub fn get(self) -> u32 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.0)
    }
}

impl fmt::Display for Dof {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Sampling coordinates: coefficients and log-scale `nu = log(sigma)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub beta: DVector<f64>,
    pub nu: f64,
}

impl Params {
    pub fn new(beta: DVector<f64>, nu: f64) -> Self {
        Self { beta, nu }
    }

    /// Unpacks a flat `[beta_1, ..., beta_p, nu]` vector.
    pub fn from_slice(theta: &[f64]) -> Self {
        let (nu, beta) = theta.split_last().expect("parameter vector must be non-empty");
        Self { beta: DVector::from_column_slice(beta), nu: *nu }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.beta.iter().copied().collect();
        v.push(self.nu);
        v
    }

    pub fn sigma(&self) -> f64 {
        self.nu.exp()
    }

    pub fn dim(&self) -> usize {
        self.beta.len() + 1
    }

    pub fn is_finite(&self) -> bool {
        self.nu.is_finite() && self.beta.iter().all(|b| b.is_finite())
    }
}

type LogPriorFn = dyn Fn(&Params) -> f64 + Send + Sync;
type GradPriorFn = dyn Fn(&Params) -> DVector<f64> + Send + Sync;

/// A user prior density on `(beta, sigma)`.
///
/// `log_density(params)` returns `log pi(beta, sigma)` at `sigma = e^nu`, and
/// `gradient(params)` its gradient with respect to `(beta, nu)` (length `p + 1`).
/// The density must satisfy `pi(beta, sigma) <= max(C, C / sigma)`; this is
/// checked at every evaluation.
#[derive(Clone)]
pub struct CustomPrior {
    log_density: Arc<LogPriorFn>,
    gradient: Arc<GradPriorFn>,
    bound: f64,
}

impl CustomPrior {
    pub fn new(
        log_density: impl Fn(&Params) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&Params) -> DVector<f64> + Send + Sync + 'static,
        bound: f64,
    ) -> Result<Self> {
        if !(bound > 0.0 && bound.is_finite()) {
            return Err(invalid("custom prior bound constant C must be positive and finite"));
        }
        Ok(Self { log_density: Arc::new(log_density), gradient: Arc::new(gradient), bound })
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }
}

impl fmt::Debug for CustomPrior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomPrior").field("bound", &self.bound).finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, Default)]
pub enum PriorSpec {
    /// `pi(beta, sigma) = 1 / sigma`
    #[default]
    Jeffreys,
    /// `pi(beta, sigma) = 1`
    Flat,
    Custom(CustomPrior),
}

const PRIOR_BOUND_SLACK: f64 = 1e-12;

impl PriorSpec {
    pub fn name(&self) -> &'static str {
        match self {
            PriorSpec::Jeffreys => "jeffreys",
            PriorSpec::Flat => "flat",
            PriorSpec::Custom(_) => "custom",
        }
    }

    /// The bound constant `C` in `pi <= max(C, C / sigma)`.
    pub fn bound_constant(&self) -> f64 {
        match self {
            PriorSpec::Jeffreys | PriorSpec::Flat => 1.0,
            PriorSpec::Custom(c) => c.bound,
        }
    }

    /// `log pi(beta, sigma)` on the original `(beta, sigma)` scale, with the bound asserted.
    pub fn log_density(&self, params: &Params) -> Result<f64> {
        let value = match self {
            PriorSpec::Jeffreys => -params.nu,
            PriorSpec::Flat => 0.0,
            PriorSpec::Custom(c) => (c.log_density)(params),
        };
        let log_bound = self.bound_constant().ln() + (-params.nu).max(0.0);
        if value > log_bound + PRIOR_BOUND_SLACK {
            return Err(Error::PriorBound { log_prior: value, log_bound });
        }
        Ok(value)
    }

    /// Prior contribution to the target in `(beta, nu)` coordinates, i.e. the
    /// log prior plus the log-Jacobian `nu`. Zero for Jeffreys.
    pub(crate) fn log_term(&self, params: &Params) -> Result<f64> {
        match self {
            PriorSpec::Jeffreys => Ok(0.0),
            PriorSpec::Flat => Ok(params.nu),
            PriorSpec::Custom(_) => Ok(self.log_density(params)? + params.nu),
        }
    }

    /// Adds the gradient of [`Self::log_term`] into `grad` (length `p + 1`).
    pub(crate) fn add_grad(&self, params: &Params, grad: &mut [f64]) -> Result<()> {
        match self {
            PriorSpec::Jeffreys => {}
            PriorSpec::Flat => *grad.last_mut().expect("non-empty gradient") += 1.0,
            PriorSpec::Custom(c) => {
                let g = (c.gradient)(params);
                if g.len() != grad.len() {
                    return Err(invalid(format!(
                        "custom prior gradient has length {} (expected {})",
                        g.len(),
                        grad.len()
                    )));
                }
                for (acc, v) in grad.iter_mut().zip(g.iter()) {
                    *acc += v;
                }
                *grad.last_mut().expect("non-empty gradient") += 1.0;
            }
        }
        Ok(())
    }
}

/// Outlier paths `y_i = a_i + b_i * omega`; the outlier set is `{i : b_i != 0}`.
///
/// Indices are 0-based.
#[derive(Debug, Clone, PartialEq)]
pub struct OutlierSpec {
    indices: Vec<usize>,
    a: Vec<f64>,
    b: Vec<f64>,
    omega: f64,
}

impl OutlierSpec {
    pub fn new(a: Vec<f64>, b: Vec<f64>, omega: f64) -> Result<Self> {
        if a.len() != b.len() {
            return Err(invalid("outlier path vectors a and b must have equal length"));
        }
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(invalid("outlier scale omega must be positive and finite"));
        }
        if a.iter().chain(&b).any(|v| !v.is_finite()) {
            return Err(invalid("outlier path coefficients must be finite"));
        }
        let indices = b.iter().enumerate().filter(|(_, &v)| v != 0.0).map(|(i, _)| i).collect();
        Ok(Self { indices, a, b, omega })
    }

    /// No outliers: every point sits at its observed value.
    pub fn empty(dataset: &Dataset) -> Self {
        let n = dataset.n();
        Self { indices: Vec::new(), a: dataset.response().iter().copied().collect(), b: vec![0.0; n], omega: 1.0 }
    }

    /// Outliers `indices` drifting as `y_i = omega` while the other points stay put.
    pub fn drift(dataset: &Dataset, indices: &[usize], omega: f64) -> Result<Self> {
        let n = dataset.n();
        if let Some(&i) = indices.iter().find(|&&i| i >= n) {
            return Err(invalid(format!("outlier index {i} out of range for n = {n}")));
        }
        let mut a: Vec<f64> = dataset.response().iter().copied().collect();
        let mut b = vec![0.0; n];
        for &i in indices {
            a[i] = 0.0;
            b[i] = 1.0;
        }
        Self::new(a, b, omega)
    }

    /// Marks `indices` as outliers on a path through their current values (`omega = 1`).
    pub fn at_current(dataset: &Dataset, indices: &[usize]) -> Result<Self> {
        let n = dataset.n();
        if let Some(&i) = indices.iter().find(|&&i| i >= n) {
            return Err(invalid(format!("outlier index {i} out of range for n = {n}")));
        }
        let mut a: Vec<f64> = dataset.response().iter().copied().collect();
        let mut b = vec![0.0; n];
        for &i in indices {
            a[i] -= 1.0;
            b[i] = 1.0;
        }
        Self::new(a, b, 1.0)
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn is_outlier(&self, i: usize) -> bool {
        self.b[i] != 0.0
    }

    /// `y_i = a_i + b_i * omega` for every `i`.
    pub fn materialize(&self) -> DVector<f64> {
        DVector::from_iterator(self.n(), self.a.iter().zip(&self.b).map(|(a, b)| a + b * self.omega))
    }

    /// The dataset's covariates with the materialized response.
    pub fn apply(&self, dataset: &Dataset) -> Result<Dataset> {
        if dataset.n() != self.n() {
            return Err(invalid("outlier spec and dataset disagree on n"));
        }
        dataset.with_response(self.materialize())
    }

    /// Same paths at a different `omega`.
    pub fn at_omega(&self, omega: f64) -> Result<Self> {
        Self::new(self.a.clone(), self.b.clone(), omega)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Dataset {
        Dataset::from_rows(&[vec![1.0, 0.5], vec![1.0, 1.5], vec![1.0, 3.0]], vec![1.0, 2.0, 4.5])
            .unwrap()
    }

    #[test]
    fn dataset_validation() {
        assert!(Dataset::from_rows(&[], vec![]).is_err());
        assert!(Dataset::from_rows(&[vec![2.0, 1.0]], vec![1.0]).is_err());
        assert!(Dataset::from_rows(&[vec![1.0, f64::NAN]], vec![1.0]).is_err());
        assert!(Dataset::from_rows(&[vec![1.0, 1.0]], vec![1.0, 2.0]).is_err());
        let d = tiny();
        assert_eq!((d.n(), d.p()), (3, 2));
    }

    #[test]
    fn row_edits() {
        let d = tiny();
        let r = d.without_rows(&[1]).unwrap();
        assert_eq!(r.n(), 2);
        assert_eq!(r.response().as_slice(), &[1.0, 4.5]);
        assert_eq!(r.design()[(1, 1)], 3.0);
        assert_eq!(d.with_response_at(2, 9.0).unwrap().response()[2], 9.0);
        assert_eq!(d.replicated(2).unwrap().n(), 6);
        assert!(d.without_rows(&[0, 1, 2]).is_err());
    }

    #[test]
    fn dof_must_be_positive() {
        assert!(Dof::new(0).is_err());
        assert_eq!(Dof::new(4).unwrap().as_f64(), 4.0);
    }

    #[test]
    fn outlier_paths_materialize() {
        let d = tiny();
        let spec = OutlierSpec::drift(&d, &[2], 100.0).unwrap();
        assert_eq!(spec.indices(), &[2]);
        assert_eq!(spec.materialize().as_slice(), &[1.0, 2.0, 100.0]);
        let cur = OutlierSpec::at_current(&d, &[0]).unwrap();
        assert_eq!(cur.materialize(), *d.response());
        assert!(cur.is_outlier(0) && !cur.is_outlier(1));
        assert!(OutlierSpec::empty(&d).is_empty());
        assert!(OutlierSpec::new(vec![0.0], vec![1.0], 0.0).is_err());
        assert!(OutlierSpec::drift(&d, &[3], 1.0).is_err());
    }

    #[test]
    fn builtin_priors_meet_their_bound() {
        for nu in [-3.0, -0.1, 0.0, 0.7, 4.0] {
            let params = Params::new(DVector::from_vec(vec![0.3]), nu);
            let sigma = params.sigma();
            let bound = 1.0f64.max(1.0 / sigma);
            let j = PriorSpec::Jeffreys.log_density(&params).unwrap().exp();
            let f = PriorSpec::Flat.log_density(&params).unwrap().exp();
            assert!((j - 1.0 / sigma).abs() <= 1e-12 * j);
            assert_eq!(f, 1.0);
            assert!(j <= bound * (1.0 + 1e-12) && f <= bound);
        }
    }

    #[test]
    fn custom_prior_bound_is_enforced() {
        // pi = 2 exceeds max(1, 1/sigma) once sigma > 1/2.
        let prior = PriorSpec::Custom(
            CustomPrior::new(|_| 2f64.ln(), |p| DVector::zeros(p.dim()), 1.0).unwrap(),
        );
        let ok = Params::new(DVector::from_vec(vec![0.0]), (0.25f64).ln());
        let bad = Params::new(DVector::from_vec(vec![0.0]), 0.0);
        assert!(prior.log_density(&ok).is_ok());
        assert!(matches!(prior.log_density(&bad), Err(Error::PriorBound { .. })));
        assert!(CustomPrior::new(|_| 0.0, |p| DVector::zeros(p.dim()), 0.0).is_err());
    }
}
