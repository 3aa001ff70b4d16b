//! Hamiltonian Monte Carlo with a fixed-length leapfrog integrator and a
//! diagonal mass matrix.
//!
//! Randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng::seed_from_u64`);
//! momenta are drawn with `rand_distr::StandardNormal` and acceptance uniforms
//! with `Rng::random::<f64>()`. Given the same seed and configuration a run is
//! bit-for-bit reproducible.

mod diagnostics;
mod fit;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};

pub use diagnostics::{effective_sample_size, quantile_sorted, summarize, Summary};
pub use fit::{
    derive_seed, fit_limiting_posterior, fit_posterior, pilot_mass, robust_start, PosteriorFit,
    FIT_PROBS,
};

/// A differentiable log-density on `R^dim`.
///
/// A non-finite return value marks a point outside the support; the sampler
/// rejects proposals that reach one. `Err` aborts sampling.
pub trait LogDensity {
    fn dim(&self) -> usize;

    /// Returns `log p(position)` and writes its gradient into `grad`.
    fn log_density_and_grad(&self, position: &[f64], grad: &mut [f64]) -> Result<f64>;
}

/// Adapts a pair of closures into a [`LogDensity`].
pub struct FnDensity<L, G> {
    dim: usize,
    logpdf: L,
    grad: G,
}

impl<L, G> FnDensity<L, G>
where
    L: Fn(&[f64]) -> f64,
    G: Fn(&[f64], &mut [f64]),
{
    pub fn new(dim: usize, logpdf: L, grad: G) -> Self {
        Self { dim, logpdf, grad }
    }
}

impl<L, G> LogDensity for FnDensity<L, G>
where
    L: Fn(&[f64]) -> f64,
    G: Fn(&[f64], &mut [f64]),
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_density_and_grad(&self, position: &[f64], grad: &mut [f64]) -> Result<f64> {
        (self.grad)(position, grad);
        Ok((self.logpdf)(position))
    }
}

pub const DEFAULT_STEP_SIZE: f64 = 0.05;
pub const DEFAULT_LEAPFROG: usize = 20;
pub const DEFAULT_SAMPLES: usize = 200_000;

#[derive(Debug, Clone, PartialEq)]
pub struct HmcConfig {
    pub step_size: f64,
    pub n_leapfrog: usize,
    pub n_samples: usize,
    pub n_burnin: usize,
    pub seed: u64,
    /// Diagonal of the mass matrix. `None` means identity for [`hmc_sample`];
    /// the posterior fits tune it from pilot runs instead.
    pub mass_diagonal: Option<Vec<f64>>,
    /// Starting point. `None` means the origin for [`hmc_sample`]; the
    /// posterior fits pick a robust regression start.
    pub init: Option<Vec<f64>>,
}

impl HmcConfig {
    /// Defaults: step size 0.05, 20 leapfrog steps, burn-in of 10% of the draws.
    pub fn new(n_samples: usize, seed: u64) -> Self {
        Self {
            step_size: DEFAULT_STEP_SIZE,
            n_leapfrog: DEFAULT_LEAPFROG,
            n_samples,
            n_burnin: n_samples / 10,
            seed,
            mass_diagonal: None,
            init: None,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(invalid("step size must be positive and finite"));
        }
        if self.n_leapfrog == 0 {
            return Err(invalid("number of leapfrog steps must be at least 1"));
        }
        if self.n_samples == 0 {
            return Err(invalid("number of samples must be at least 1"));
        }
        if let Some(m) = &self.mass_diagonal {
            if m.len() != dim {
                return Err(invalid(format!("mass diagonal has length {} (expected {dim})", m.len())));
            }
            if m.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return Err(invalid("mass diagonal entries must be positive and finite"));
            }
        }
        if let Some(init) = &self.init {
            if init.len() != dim {
                return Err(invalid(format!("initial point has length {} (expected {dim})", init.len())));
            }
        }
        Ok(())
    }
}

impl Default for HmcConfig {
    fn default() -> Self {
        Self::new(DEFAULT_SAMPLES, 0)
    }
}

/// Post-burn-in draws, one row per iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub draws: DMatrix<f64>,
    /// Fraction of accepted proposals after burn-in.
    pub accept_rate: f64,
    pub seed: u64,
}

impl Chain {
    pub fn n_samples(&self) -> usize {
        self.draws.nrows()
    }

    pub fn dim(&self) -> usize {
        self.draws.ncols()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.draws.column(j).iter().copied().collect()
    }

    pub fn last(&self) -> Vec<f64> {
        self.draws.row(self.n_samples() - 1).iter().copied().collect()
    }
}

struct Integrator<'a, T: ?Sized> {
    target: &'a T,
    inv_mass: Vec<f64>,
    step: f64,
    n_steps: usize,
}

impl<T: LogDensity + ?Sized> Integrator<'_, T> {
    fn kinetic(&self, momentum: &[f64]) -> f64 {
        0.5 * momentum.iter().zip(&self.inv_mass).map(|(p, im)| p * p * im).sum::<f64>()
    }

    /// Runs the leapfrog trajectory in place. Returns the final log density, or
    /// `None` once any value turns non-finite.
    fn trajectory(&self, q: &mut [f64], p: &mut [f64], grad: &mut [f64]) -> Result<Option<f64>> {
        let eps = self.step;
        let mut logp = f64::NAN;
        for (pi, gi) in p.iter_mut().zip(grad.iter()) {
            *pi += 0.5 * eps * gi;
        }
        for s in 0..self.n_steps {
            for ((qi, pi), im) in q.iter_mut().zip(p.iter()).zip(&self.inv_mass) {
                *qi += eps * pi * im;
            }
            logp = self.target.log_density_and_grad(q, grad)?;
            if !logp.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Ok(None);
            }
            let w = if s + 1 == self.n_steps { 0.5 * eps } else { eps };
            for (pi, gi) in p.iter_mut().zip(grad.iter()) {
                *pi += w * gi;
            }
        }
        Ok(Some(logp))
    }
}

/// Metropolis-adjusted HMC. Burn-in draws are discarded.
pub fn hmc_sample<T: LogDensity + ?Sized>(target: &T, config: &HmcConfig) -> Result<Chain> {
    let dim = target.dim();
    config.validate(dim)?;
    let mass = config.mass_diagonal.clone().unwrap_or_else(|| vec![1.0; dim]);
    let sqrt_mass: Vec<f64> = mass.iter().map(|m| m.sqrt()).collect();
    let integrator = Integrator {
        target,
        inv_mass: mass.iter().map(|m| 1.0 / m).collect(),
        step: config.step_size,
        n_steps: config.n_leapfrog,
    };

    let mut q = config.init.clone().unwrap_or_else(|| vec![0.0; dim]);
    let mut grad = vec![0.0; dim];
    let mut logp = target.log_density_and_grad(&q, &mut grad)?;
    if !logp.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::Numerical(format!("log density is not finite at the initial point ({logp})")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut draws = DMatrix::zeros(config.n_samples, dim);
    let mut accepted = 0usize;
    let mut q_new = vec![0.0; dim];
    let mut p = vec![0.0; dim];
    let mut grad_new = vec![0.0; dim];

    for iter in 0..config.n_burnin + config.n_samples {
        for (pi, sm) in p.iter_mut().zip(&sqrt_mass) {
            let z: f64 = rng.sample(StandardNormal);
            *pi = sm * z;
        }
        let h0 = -logp + integrator.kinetic(&p);
        q_new.copy_from_slice(&q);
        grad_new.copy_from_slice(&grad);
        let proposal = integrator.trajectory(&mut q_new, &mut p, &mut grad_new)?;
        let u: f64 = rng.random();
        let accept = match proposal {
            Some(logp_new) => {
                let h1 = -logp_new + integrator.kinetic(&p);
                if h1.is_finite() && u.ln() < h0 - h1 {
                    logp = logp_new;
                    true
                } else {
                    false
                }
            }
            None => false,
        };
        if accept {
            std::mem::swap(&mut q, &mut q_new);
            std::mem::swap(&mut grad, &mut grad_new);
        }
        if iter >= config.n_burnin {
            let row = iter - config.n_burnin;
            for (j, v) in q.iter().enumerate() {
                draws[(row, j)] = *v;
            }
            accepted += usize::from(accept);
        }
    }

    Ok(Chain { draws, accept_rate: accepted as f64 / config.n_samples as f64, seed: config.seed })
}

/// `H(end) - H(start)` for one deterministic leapfrog trajectory; `NaN` if it diverges.
pub fn energy_error<T: LogDensity + ?Sized>(
    target: &T,
    position: &[f64],
    momentum: &[f64],
    mass_diagonal: &[f64],
    step_size: f64,
    n_leapfrog: usize,
) -> Result<f64> {
    let dim = target.dim();
    if position.len() != dim || momentum.len() != dim || mass_diagonal.len() != dim {
        return Err(invalid("position, momentum and mass must all have the target's dimension"));
    }
    let integrator = Integrator {
        target,
        inv_mass: mass_diagonal.iter().map(|m| 1.0 / m).collect(),
        step: step_size,
        n_steps: n_leapfrog,
    };
    let mut q = position.to_vec();
    let mut p = momentum.to_vec();
    let mut grad = vec![0.0; dim];
    let logp0 = target.log_density_and_grad(&q, &mut grad)?;
    let h0 = -logp0 + integrator.kinetic(&p);
    Ok(match integrator.trajectory(&mut q, &mut p, &mut grad)? {
        Some(logp1) => -logp1 + integrator.kinetic(&p) - h0,
        None => f64::NAN,
    })
}
