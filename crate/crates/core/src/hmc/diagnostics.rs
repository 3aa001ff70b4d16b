use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::hmc::Chain;

/// Per-coordinate chain statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    /// `(probability, per-coordinate quantile)` pairs in the requested order.
    pub quantiles: Vec<(f64, Vec<f64>)>,
    pub ess: Vec<f64>,
    /// `sd / sqrt(ess)`
    pub mcse_mean: Vec<f64>,
    /// Delta-method Monte Carlo standard error of `sd`, from the ESS of the
    /// squared deviations.
    pub mcse_sd: Vec<f64>,
    pub n_samples: usize,
}

impl Summary {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn quantile(&self, prob: f64) -> Option<&[f64]> {
        self.quantiles.iter().find(|(p, _)| *p == prob).map(|(_, q)| q.as_slice())
    }
}

/// Type-7 quantile (linear interpolation between order statistics) of sorted data.
pub fn quantile_sorted(sorted: &[f64], prob: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * prob;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Effective sample size with Geyer's initial positive sequence truncation.
///
/// Autocorrelations are summed in adjacent pairs `rho_{2k} + rho_{2k+1}` until
/// the first non-positive pair; `ess = n / (-1 + 2 * sum)`, capped at `n`.
/// A constant series returns `n`.
pub fn effective_sample_size(x: &[f64]) -> f64 {
    let n = x.len();
    let nf = n as f64;
    let mean = x.iter().sum::<f64>() / nf;
    let centered: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let autocov = |lag: usize| -> f64 {
        centered[..n - lag].iter().zip(&centered[lag..]).map(|(a, b)| a * b).sum::<f64>() / nf
    };
    let c0 = autocov(0);
    if c0 <= 0.0 || !c0.is_finite() {
        return nf;
    }
    let mut pair_sum = 0.0;
    let mut k = 0;
    while 2 * k + 1 < n {
        let pair = (autocov(2 * k) + autocov(2 * k + 1)) / c0;
        if pair <= 0.0 {
            break;
        }
        pair_sum += pair;
        k += 1;
    }
    let tau = -1.0 + 2.0 * pair_sum;
    if tau <= 1.0 {
        nf
    } else {
        nf / tau
    }
}

/// Means, SDs, type-7 quantiles, ESS and MCSE for every chain coordinate.
pub fn summarize(chain: &Chain, probs: &[f64]) -> Result<Summary> {
    let n = chain.n_samples();
    if n < 10 {
        return Err(invalid(format!("summaries need at least 10 draws (got {n})")));
    }
    if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(invalid(format!("quantile probability {p} outside [0, 1]")));
    }
    let dim = chain.dim();
    let mut mean = Vec::with_capacity(dim);
    let mut sd = Vec::with_capacity(dim);
    let mut ess = Vec::with_capacity(dim);
    let mut mcse_sd = Vec::with_capacity(dim);
    let mut sorted_cols = Vec::with_capacity(dim);
    for j in 0..dim {
        let col = chain.column(j);
        let m = col.iter().sum::<f64>() / n as f64;
        let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64;
        mean.push(m);
        sd.push(var.sqrt());
        ess.push(effective_sample_size(&col));
        mcse_sd.push(sd_standard_error(&col, m, var));
        let mut sorted = col;
        sorted.sort_by(f64::total_cmp);
        sorted_cols.push(sorted);
    }
    let quantiles = probs
        .iter()
        .map(|&p| (p, sorted_cols.iter().map(|s| quantile_sorted(s, p)).collect()))
        .collect();
    let mcse_mean = sd.iter().zip(&ess).map(|(s, e)| s / e.sqrt()).collect();
    Ok(Summary { mean, sd, quantiles, ess, mcse_mean, mcse_sd, n_samples: n })
}

fn sd_standard_error(x: &[f64], mean: f64, var: f64) -> f64 {
    if var <= 0.0 {
        return 0.0;
    }
    let sq: Vec<f64> = x.iter().map(|v| (v - mean) * (v - mean)).collect();
    let n = sq.len() as f64;
    let m = sq.iter().sum::<f64>() / n;
    let sd_sq = (sq.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0)).sqrt();
    let mcse_var = sd_sq / effective_sample_size(&sq).sqrt();
    mcse_var / (2.0 * var.sqrt())
}
