//! Posterior fits: a Student target, a robust starting point, pilot-tuned
//! masses, then a production HMC run summarized on the `(beta, sigma)` scale.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::hmc::{hmc_sample, summarize, Chain, HmcConfig, LogDensity, Summary};
use crate::model::{
    require_limiting_proper, require_proper, Dataset, Dof, OutlierSpec, PriorSpec, StudentTarget,
};
use crate::ols::{ols_fit, weighted_least_squares};

/// Quantile levels reported by the posterior fits.
pub const FIT_PROBS: [f64; 3] = [0.025, 0.5, 0.975];

const PILOT_ROUNDS: usize = 2;
const MAX_PILOT_ATTEMPTS: usize = 12;
const MIN_PILOT_ACCEPT: f64 = 0.3;

#[derive(Debug, Clone)]
pub struct PosteriorFit {
    /// Summary over `(beta_1, ..., beta_p, sigma)`.
    pub summary: Summary,
    /// Raw draws in `(beta, nu)` coordinates.
    pub chain: Chain,
    pub mass_diagonal: Vec<f64>,
    pub init: Vec<f64>,
}

impl PosteriorFit {
    pub fn accept_rate(&self) -> f64 {
        self.chain.accept_rate
    }
}

/// Mixes a stream index into a seed (SplitMix64 finalizer).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed.wrapping_add(stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A starting point near the Student-t maximum likelihood fit, and rough
/// posterior scales for each coordinate.
///
/// Starts from least squares with a MAD scale, then runs the EM iteration
/// for Student-t regression (weights `(gamma + 1) / (gamma + r^2 / sigma^2)`).
/// The `beta` scales come from `sigma^2 (X'WX)^{-1}`, the `nu` scale from `1/sqrt(2n)`.
pub fn robust_start(dataset: &Dataset, dof: Dof) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = dataset.n();
    let gamma = dof.as_f64();
    let x = dataset.design();
    let y = dataset.response();
    let mut beta = ols_fit(dataset)?.beta_hat;
    let residuals = |beta: &DVector<f64>| y - x * beta;
    let mut r = residuals(&beta);
    let mut abs: Vec<f64> = r.iter().map(|v| v.abs()).collect();
    abs.sort_by(f64::total_cmp);
    let floor = 1e-8 * (y.amax() + 1.0);
    let mut sigma2 = (1.4826 * abs[n / 2]).max(floor).powi(2);
    let mut weights = vec![1.0; n];
    let mut gram_inv = ols_fit(dataset)?.gram_inverse;
    for _ in 0..500 {
        for (w, ri) in weights.iter_mut().zip(r.iter()) {
            *w = (gamma + 1.0) / (gamma + ri * ri / sigma2);
        }
        let (next, gi) = weighted_least_squares(x, y, &weights)?;
        gram_inv = gi;
        r = residuals(&next);
        let next_sigma2 =
            (weights.iter().zip(r.iter()).map(|(w, ri)| w * ri * ri).sum::<f64>() / n as f64).max(floor * floor);
        let moved = (&next - &beta).amax() / (1.0 + beta.amax());
        let scaled = (next_sigma2 / sigma2 - 1.0).abs();
        beta = next;
        sigma2 = next_sigma2;
        if moved < 1e-12 && scaled < 1e-12 {
            break;
        }
    }
    let mut start: Vec<f64> = beta.iter().copied().collect();
    start.push(0.5 * sigma2.ln());
    let mut scale: Vec<f64> = (0..dataset.p()).map(|j| (sigma2 * gram_inv[(j, j)]).sqrt()).collect();
    scale.push(1.0 / (2.0 * n as f64).sqrt());
    if scale.iter().any(|s| !(s.is_finite() && *s > 0.0)) || start.iter().any(|s| !s.is_finite()) {
        return Err(Error::Numerical("could not find a finite starting point".into()));
    }
    Ok((start, scale))
}

/// Tunes the diagonal mass matrix to `1 / sd^2` of short pilot chains.
///
/// `scale` is an initial guess of the posterior SDs; it is halved until the
/// pilot accepts at least 30% of proposals. Returns the mass diagonal and the
/// last pilot state.
pub fn pilot_mass<T: LogDensity + ?Sized>(
    target: &T,
    config: &HmcConfig,
    start: &[f64],
    scale: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let pilot_len = (config.n_samples / 20).clamp(500, 4000);
    let mut sd = scale.to_vec();
    let mut position = start.to_vec();
    let mut rounds = 0;
    for attempt in 0..MAX_PILOT_ATTEMPTS {
        let pilot = HmcConfig {
            n_samples: pilot_len,
            n_burnin: pilot_len / 4,
            seed: derive_seed(config.seed, 1000 + attempt as u64),
            mass_diagonal: Some(sd.iter().map(|s| 1.0 / (s * s)).collect()),
            init: Some(position.clone()),
            ..config.clone()
        };
        let chain = hmc_sample(target, &pilot)?;
        if chain.accept_rate < MIN_PILOT_ACCEPT {
            sd.iter_mut().for_each(|s| *s *= 0.5);
            continue;
        }
        let summary = summarize(&chain, &[])?;
        for (s, new) in sd.iter_mut().zip(&summary.sd) {
            if new.is_finite() && *new > 0.0 {
                *s = *new;
            }
        }
        position = chain.last();
        rounds += 1;
        if rounds == PILOT_ROUNDS {
            return Ok((sd.iter().map(|s| 1.0 / (s * s)).collect(), position));
        }
    }
    Err(Error::Numerical(format!(
        "pilot runs failed to reach {MIN_PILOT_ACCEPT} acceptance with step size {}",
        config.step_size
    )))
}

fn run_fit(target: &StudentTarget, start_data: &Dataset, dof: Dof, config: &HmcConfig) -> Result<PosteriorFit> {
    config.validate(target.p() + 1)?;
    let (init, mass) = match (&config.init, &config.mass_diagonal) {
        (Some(init), Some(mass)) => (init.clone(), mass.clone()),
        (init, None) => {
            let (start, scale) = robust_start(start_data, dof)?;
            let start = init.clone().unwrap_or(start);
            let (mass, position) = pilot_mass(target, config, &start, &scale)?;
            (position, mass)
        }
        (None, Some(mass)) => (robust_start(start_data, dof)?.0, mass.clone()),
    };
    let main = HmcConfig { mass_diagonal: Some(mass.clone()), init: Some(init.clone()), ..config.clone() };
    let chain = hmc_sample(target, &main)?;

    let mut on_sigma_scale = chain.clone();
    let last = on_sigma_scale.dim() - 1;
    for v in on_sigma_scale.draws.column_mut(last).iter_mut() {
        *v = v.exp();
        if !(v.is_finite() && *v > 0.0) {
            return Err(Error::Numerical(format!("sigma draw {v} is not positive and finite")));
        }
    }
    let summary = summarize(&on_sigma_scale, &FIT_PROBS)?;
    Ok(PosteriorFit { summary, chain, mass_diagonal: mass, init })
}

/// Samples the full posterior after checking `n > p + 1`.
pub fn fit_posterior(dataset: &Dataset, dof: Dof, prior: &PriorSpec, config: &HmcConfig) -> Result<PosteriorFit> {
    require_proper(dataset.n() as u64, dataset.p() as u64)?;
    let target = StudentTarget::full(dataset, dof, prior.clone());
    run_fit(&target, dataset, dof, config)
}

/// Samples the outlier-limiting posterior after checking `n - |O|(gamma + 1) > p + 1`.
pub fn fit_limiting_posterior(
    dataset: &Dataset,
    outliers: &OutlierSpec,
    dof: Dof,
    prior: &PriorSpec,
    config: &HmcConfig,
) -> Result<PosteriorFit> {
    require_limiting_proper(dataset.n() as u64, dataset.p() as u64, outliers.len() as u64, dof)?;
    let target = StudentTarget::limiting(dataset, outliers, dof, prior.clone())?;
    let kept = dataset.without_rows(outliers.indices())?;
    run_fit(&target, &kept, dof, config)
}
