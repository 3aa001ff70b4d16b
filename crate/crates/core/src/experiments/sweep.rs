use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Error, Result};
use crate::experiments::{run_pool, STATUS_OK};
use crate::hmc::{derive_seed, fit_posterior, HmcConfig};
use crate::model::{Dataset, Dof, PriorSpec};
use crate::ols::normal_posterior_beta2_summary;

/// Outlying response used as the stand-in for `omega -> inf`.
pub const LARGE_OUTLIER: f64 = 1e4;

const SWEEP_GRID: [f64; 6] = [25.0, 50.0, 100.0, 250.0, 1e3, LARGE_OUTLIER];

/// Degrees of freedom, or the normal model as `gamma = inf`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Gamma {
    Finite(Dof),
    Infinite,
}

impl Gamma {
    pub fn finite(self) -> Option<Dof> {
        match self {
            Gamma::Finite(d) => Some(d),
            Gamma::Infinite => None,
        }
    }
}

impl From<Dof> for Gamma {
    fn from(d: Dof) -> Self {
        Gamma::Finite(d)
    }
}

impl Ord for Gamma {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Gamma::Finite(a), Gamma::Finite(b)) => a.cmp(b),
            (Gamma::Finite(_), Gamma::Infinite) => Ordering::Less,
            (Gamma::Infinite, Gamma::Finite(_)) => Ordering::Greater,
            (Gamma::Infinite, Gamma::Infinite) => Ordering::Equal,
        }
    }
}

impl PartialOrd for Gamma {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Gamma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gamma::Finite(d) => d.fmt(f),
            Gamma::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Gamma {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") {
            return Ok(Gamma::Infinite);
        }
        let g: u32 = s.parse().map_err(|_| invalid(format!("gamma must be a positive integer or 'inf', got '{s}'")))?;
        Ok(Gamma::Finite(Dof::new(g)?))
    }
}

impl Serialize for Gamma {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Gamma {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One `(gamma, y_n)` cell of the outlier sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub gamma: Gamma,
    pub y_n: f64,
    pub posterior_mean_beta2: Option<f64>,
    /// Zero for the closed-form normal rows.
    pub mcse: Option<f64>,
    pub status: String,
}

/// The point's current response followed by 25, 50, 100, 250, 1e3 and 1e4.
pub fn default_y_grid(dataset: &Dataset, outlier_index: usize) -> Result<Vec<f64>> {
    if outlier_index >= dataset.n() {
        return Err(invalid(format!("outlier index {outlier_index} out of range for n = {}", dataset.n())));
    }
    let mut grid = vec![dataset.response()[outlier_index]];
    grid.extend(SWEEP_GRID);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    Ok(grid)
}

/// Posterior mean of `beta_2` as the response at `outlier_index` (0-based)
/// moves over `y_values`, for every requested `gamma`.
///
/// Cells run on `jobs` threads; cell `k` of the `gamma`-major grid samples
/// with seed `derive_seed(hmc.seed, k)`. A cell that fails is reported with
/// its error in `status` instead of aborting the sweep. Rows come back sorted
/// by `(gamma, y_n)`.
pub fn sweep_outlier(
    dataset: &Dataset,
    outlier_index: usize,
    y_values: &[f64],
    gammas: &[Gamma],
    prior: &PriorSpec,
    hmc: &HmcConfig,
    jobs: usize,
) -> Result<Vec<SweepRow>> {
    if dataset.p() < 2 {
        return Err(invalid("the sweep reports beta_2 and needs p >= 2"));
    }
    if outlier_index >= dataset.n() {
        return Err(invalid(format!("outlier index {outlier_index} out of range for n = {}", dataset.n())));
    }
    if let Some(y) = y_values.iter().find(|y| !y.is_finite()) {
        return Err(invalid(format!("sweep value {y} is not finite")));
    }
    let cells: Vec<(Gamma, f64)> =
        gammas.iter().flat_map(|&g| y_values.iter().map(move |&y| (g, y))).collect();
    let mut rows = run_pool(jobs, &cells, |k, &(gamma, y_n)| {
        let outcome = sweep_cell(dataset, outlier_index, gamma, y_n, prior, hmc, k as u64);
        match outcome {
            Ok((mean, mcse)) => SweepRow {
                gamma,
                y_n,
                posterior_mean_beta2: Some(mean),
                mcse: Some(mcse),
                status: STATUS_OK.into(),
            },
            Err(e) => SweepRow { gamma, y_n, posterior_mean_beta2: None, mcse: None, status: format!("error: {e}") },
        }
    })?;
    rows.sort_by(|a, b| a.gamma.cmp(&b.gamma).then(a.y_n.total_cmp(&b.y_n)));
    Ok(rows)
}

fn sweep_cell(
    dataset: &Dataset,
    index: usize,
    gamma: Gamma,
    y_n: f64,
    prior: &PriorSpec,
    hmc: &HmcConfig,
    cell: u64,
) -> Result<(f64, f64)> {
    let data = dataset.with_response_at(index, y_n)?;
    match gamma {
        Gamma::Infinite => Ok((normal_posterior_beta2_summary(&data)?.mean, 0.0)),
        Gamma::Finite(dof) => {
            let config = HmcConfig { seed: derive_seed(hmc.seed, cell), ..hmc.clone() };
            let fit = fit_posterior(&data, dof, prior, &config)?;
            Ok((fit.summary.mean[1], fit.summary.mcse_mean[1]))
        }
    }
}
