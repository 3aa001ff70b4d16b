//! Least squares and the normal linear model baseline.
//!
//! Under the improper prior `1/sigma` the normal model's posterior for `beta`
//! has mean `(X'X)^{-1} X'y` and covariance `||y - yhat||^2 / (n - p - 2) (X'X)^{-1}`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::Dataset;

/// Relative threshold on `|R_kk| / |R_00|` below which a column counts as dependent.
pub const RANK_TOLERANCE: f64 = 1e-9;

/// Householder QR with column pivoting (largest remaining column norm first).
#[derive(Debug, Clone)]
pub(crate) struct PivotedQr {
    reflectors: Vec<(Vec<f64>, f64)>,
    r: DMatrix<f64>,
    /// `perm[k]` is the original index of the column in pivoted position `k`.
    perm: Vec<usize>,
}

impl PivotedQr {
    pub(crate) fn new(mut a: DMatrix<f64>) -> Self {
        let (m, n) = a.shape();
        let steps = m.min(n);
        let mut perm: Vec<usize> = (0..n).collect();
        let mut reflectors = Vec::with_capacity(steps);
        for k in 0..steps {
            let norm2 = |a: &DMatrix<f64>, j: usize| a.view((k, j), (m - k, 1)).norm_squared();
            let pivot = (k..n).fold(k, |best, j| if norm2(&a, j) > norm2(&a, best) { j } else { best });
            if pivot != k {
                a.swap_columns(k, pivot);
                perm.swap(k, pivot);
            }
            let x: Vec<f64> = a.view((k, k), (m - k, 1)).iter().copied().collect();
            let xnorm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if xnorm == 0.0 {
                reflectors.push((vec![0.0; m - k], 0.0));
                continue;
            }
            let alpha = if x[0] >= 0.0 { -xnorm } else { xnorm };
            let mut v = x;
            v[0] -= alpha;
            let vtv: f64 = v.iter().map(|t| t * t).sum();
            let beta = 2.0 / vtv;
            for j in k..n {
                let mut col = a.view_mut((k, j), (m - k, 1));
                let s = beta * v.iter().zip(col.iter()).map(|(vi, ci)| vi * ci).sum::<f64>();
                for (ci, vi) in col.iter_mut().zip(&v) {
                    *ci -= s * vi;
                }
            }
            reflectors.push((v, beta));
        }
        let r = DMatrix::from_fn(steps, n, |i, j| if j >= i { a[(i, j)] } else { 0.0 });
        Self { reflectors, r, perm }
    }

    fn ncols(&self) -> usize {
        self.perm.len()
    }

    /// Fails with the (1-based) original column index of the first dependent column.
    pub(crate) fn check_rank(&self) -> Result<()> {
        let n = self.ncols();
        if self.r.nrows() < n {
            return Err(Error::RankDeficient { column: self.perm[self.r.nrows()] + 1 });
        }
        let r00 = self.r[(0, 0)].abs();
        for k in 0..n {
            if !(self.r[(k, k)].abs() > RANK_TOLERANCE * r00) {
                return Err(Error::RankDeficient { column: self.perm[k] + 1 });
            }
        }
        Ok(())
    }

    pub(crate) fn qt_mul(&self, y: &mut DVector<f64>) {
        for (k, (v, beta)) in self.reflectors.iter().enumerate() {
            let mut tail = y.rows_mut(k, v.len());
            let s = beta * v.iter().zip(tail.iter()).map(|(a, b)| a * b).sum::<f64>();
            for (t, vi) in tail.iter_mut().zip(v) {
                *t -= s * vi;
            }
        }
    }

    /// Least-squares solution `argmin ||A x - y||` (requires full column rank).
    pub(crate) fn solve(&self, y: &DVector<f64>) -> DVector<f64> {
        let n = self.ncols();
        let mut qty = y.clone();
        self.qt_mul(&mut qty);
        let mut z = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.r[(i, j)] * z[j]).sum();
            z[i] = (qty[i] - s) / self.r[(i, i)];
        }
        let mut x = DVector::zeros(n);
        for (k, &orig) in self.perm.iter().enumerate() {
            x[orig] = z[k];
        }
        x
    }

    /// `(A'A)^{-1}` in the original column order, exactly symmetric.
    pub(crate) fn gram_inverse(&self) -> DMatrix<f64> {
        let n = self.ncols();
        // Invert the upper-triangular R column by column.
        let mut rinv = DMatrix::zeros(n, n);
        for j in 0..n {
            rinv[(j, j)] = 1.0 / self.r[(j, j)];
            for i in (0..j).rev() {
                let s: f64 = (i + 1..=j).map(|k| self.r[(i, k)] * rinv[(k, j)]).sum();
                rinv[(i, j)] = -s / self.r[(i, i)];
            }
        }
        let piv = &rinv * rinv.transpose();
        let mut out = DMatrix::zeros(n, n);
        for a in 0..n {
            for b in 0..n {
                out[(self.perm[a], self.perm[b])] = 0.5 * (piv[(a, b)] + piv[(b, a)]);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub beta_hat: DVector<f64>,
    pub fitted: DVector<f64>,
    pub residual_sumsq: f64,
    /// `(X'X)^{-1}`
    pub gram_inverse: DMatrix<f64>,
    /// Normal-model posterior covariance of `beta`; `None` unless `n > p + 2`.
    pub posterior_cov: Option<DMatrix<f64>>,
}

impl OlsFit {
    /// Derivative of `beta_hat` with respect to the response at row `index`:
    /// `(X'X)^{-1} x_index`. `beta_hat` is affine in each single response.
    pub fn response_sensitivity(&self, dataset: &Dataset, index: usize) -> DVector<f64> {
        &self.gram_inverse * dataset.design().row(index).transpose()
    }
}

pub fn ols_fit(dataset: &Dataset) -> Result<OlsFit> {
    let (n, p) = (dataset.n(), dataset.p());
    let qr = PivotedQr::new(dataset.design().clone());
    qr.check_rank()?;
    let beta_hat = qr.solve(dataset.response());
    let fitted = dataset.design() * &beta_hat;
    let residual_sumsq = (dataset.response() - &fitted).norm_squared();
    let gram_inverse = qr.gram_inverse();
    let posterior_cov = (n > p + 2).then(|| &gram_inverse * (residual_sumsq / (n - p - 2) as f64));
    Ok(OlsFit { beta_hat, fitted, residual_sumsq, gram_inverse, posterior_cov })
}

/// Weighted least squares with non-negative weights; returns the coefficients
/// and `(X'WX)^{-1}`.
pub(crate) fn weighted_least_squares(
    design: &DMatrix<f64>,
    response: &DVector<f64>,
    weights: &[f64],
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let root: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
    let xw = DMatrix::from_fn(design.nrows(), design.ncols(), |i, j| design[(i, j)] * root[i]);
    let yw = DVector::from_fn(response.len(), |i, _| response[i] * root[i]);
    let qr = PivotedQr::new(xw);
    qr.check_rank()?;
    Ok((qr.solve(&yw), qr.gram_inverse()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Beta2Summary {
    pub mean: f64,
    pub sd: f64,
}

/// Normal-model posterior mean and SD of the slope `beta_2`.
pub fn normal_posterior_beta2_summary(dataset: &Dataset) -> Result<Beta2Summary> {
    if dataset.p() < 2 {
        return Err(invalid("beta_2 needs at least two columns in the design"));
    }
    let (n, p) = (dataset.n(), dataset.p());
    let fit = ols_fit(dataset)?;
    let cov = fit.posterior_cov.ok_or_else(|| {
        Error::Improper(format!("normal posterior covariance needs n > p + 2 (n = {n}, p = {p})"))
    })?;
    Ok(Beta2Summary { mean: fit.beta_hat[1], sd: cov[(1, 1)].max(0.0).sqrt() })
}
