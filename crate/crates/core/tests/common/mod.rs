#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use robust_t::model::{grad_log_limiting_posterior, grad_log_posterior, log_limiting_posterior, log_posterior};
use robust_t::{Dataset, Dof, OutlierSpec, Params, PriorSpec, Result};

pub const FD_STEP: f64 = 1e-5;
pub const FD_REL_TOL: f64 = 1e-5;
pub const FD_ABS_TOL: f64 = 1e-8;

pub struct GradCase {
    pub dataset: Dataset,
    pub outliers: OutlierSpec,
    pub params: Params,
    pub dof: Dof,
    pub prior: PriorSpec,
}

/// Random design with an intercept, heavy-tailed responses, a nearby parameter
/// point, up to two outliers, and gamma cycling through 1, 4, 10.
pub fn random_case(rng: &mut ChaCha8Rng, k: usize) -> GradCase {
    let n = rng.random_range(5..30);
    let p = rng.random_range(1..5);
    let design = DMatrix::from_fn(n, p, |_, j| if j == 0 { 1.0 } else { rng.sample(StandardNormal) });
    let beta: DVector<f64> = DVector::from_fn(p, |_, _| rng.sample(StandardNormal));
    let noise = DVector::from_fn(n, |_, _| {
        let z: f64 = rng.sample(StandardNormal);
        z / rng.random_range(0.2f64..1.0)
    });
    let response = &design * &beta + noise;
    let dataset = Dataset::new(design, response).unwrap();
    let n_out = rng.random_range(0..3).min(n - 1);
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..n_out {
        let j = rng.random_range(i..n);
        idx.swap(i, j);
    }
    let outliers = OutlierSpec::at_current(&dataset, &idx[..n_out]).unwrap();
    let shift = DVector::from_fn(p, |_, _| 0.3 * rng.sample::<f64, _>(StandardNormal));
    let params = Params::new(beta + shift, rng.random_range(-1.0..1.0));
    let dof = Dof::new([1, 4, 10][k % 3]).unwrap();
    let prior = if k % 2 == 0 { PriorSpec::Jeffreys } else { PriorSpec::Flat };
    GradCase { dataset, outliers, params, dof, prior }
}

pub fn central_difference(f: impl Fn(&Params) -> Result<f64>, at: &Params) -> Vec<f64> {
    let theta = at.to_vec();
    (0..theta.len())
        .map(|j| {
            let mut up = theta.clone();
            let mut down = theta.clone();
            up[j] += FD_STEP;
            down[j] -= FD_STEP;
            (f(&Params::from_slice(&up)).unwrap() - f(&Params::from_slice(&down)).unwrap()) / (2.0 * FD_STEP)
        })
        .collect()
}

/// Largest violation ratio: `|fd - g| / max(FD_REL_TOL |g|, FD_ABS_TOL)`; `<= 1` passes.
pub fn gradient_mismatch(analytic: &[f64], fd: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(fd)
        .map(|(g, f)| (g - f).abs() / (FD_REL_TOL * g.abs()).max(FD_ABS_TOL))
        .fold(0.0, f64::max)
}

/// Worst mismatch over `count` random cases for the full and limiting gradients.
pub fn gradient_suite(seed: u64, count: usize) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut full, mut limiting) = (0.0f64, 0.0f64);
    for k in 0..count {
        let c = random_case(&mut rng, k);
        let g = grad_log_posterior(&c.dataset, &c.params, c.dof, &c.prior).unwrap();
        let fd = central_difference(|q| log_posterior(&c.dataset, q, c.dof, &c.prior), &c.params);
        full = full.max(gradient_mismatch(g.as_slice(), &fd));
        let g = grad_log_limiting_posterior(&c.dataset, &c.outliers, &c.params, c.dof, &c.prior).unwrap();
        let fd =
            central_difference(|q| log_limiting_posterior(&c.dataset, &c.outliers, q, c.dof, &c.prior), &c.params);
        limiting = limiting.max(gradient_mismatch(g.as_slice(), &fd));
    }
    (full, limiting)
}

pub fn std_normal_logpdf(x: &[f64]) -> f64 {
    -0.5 * x.iter().map(|v| v * v).sum::<f64>()
}

pub fn std_normal_grad(x: &[f64], g: &mut [f64]) {
    for (gi, xi) in g.iter_mut().zip(x) {
        *gi = -xi;
    }
}
