use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::experiments::{run_pool, Gamma, STATUS_OK};
use crate::hmc::{derive_seed, fit_limiting_posterior, fit_posterior, HmcConfig, PosteriorFit};
use crate::model::{check_thm1_condition, Dataset, Dof, OutlierSpec, PriorSpec};
use crate::ols::normal_posterior_beta2_summary;

/// `beta_2` summaries under the limiting posterior (outlier replaced by its
/// `sigma^gamma` trace) and under the posterior with the outlier deleted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub gamma: Gamma,
    pub limiting_mean: Option<f64>,
    pub limiting_sd: Option<f64>,
    pub limiting_mean_mcse: Option<f64>,
    pub limiting_sd_mcse: Option<f64>,
    pub reduced_mean: Option<f64>,
    pub reduced_sd: Option<f64>,
    pub reduced_mean_mcse: Option<f64>,
    pub reduced_sd_mcse: Option<f64>,
    pub status: String,
}

struct Beta2 {
    mean: f64,
    sd: f64,
    mean_mcse: f64,
    sd_mcse: f64,
}

fn beta2(fit: &PosteriorFit) -> Beta2 {
    let s = &fit.summary;
    Beta2 { mean: s.mean[1], sd: s.sd[1], mean_mcse: s.mcse_mean[1], sd_mcse: s.mcse_sd[1] }
}

fn row(gamma: Gamma, limiting: Option<&Beta2>, reduced: Option<&Beta2>, status: String) -> Table1Row {
    Table1Row {
        gamma,
        limiting_mean: limiting.map(|b| b.mean),
        limiting_sd: limiting.map(|b| b.sd),
        limiting_mean_mcse: limiting.map(|b| b.mean_mcse),
        limiting_sd_mcse: limiting.map(|b| b.sd_mcse),
        reduced_mean: reduced.map(|b| b.mean),
        reduced_sd: reduced.map(|b| b.sd),
        reduced_mean_mcse: reduced.map(|b| b.mean_mcse),
        reduced_sd_mcse: reduced.map(|b| b.sd_mcse),
        status,
    }
}

/// One row per `gamma` plus a closing `gamma = inf` row from the normal model
/// on the reduced data.
///
/// For `gammas[k]` the limiting fit uses seed `derive_seed(hmc.seed, 2k)` and
/// the reduced fit `derive_seed(hmc.seed, 2k + 1)`. A `gamma` that fails the
/// limiting properness condition or the convergence condition for one
/// outlier gets an error row.
pub fn table1_experiment(
    dataset: &Dataset,
    outlier_index: usize,
    gammas: &[Dof],
    prior: &PriorSpec,
    hmc: &HmcConfig,
    jobs: usize,
) -> Result<Vec<Table1Row>> {
    let (n, p) = (dataset.n(), dataset.p());
    if p < 2 {
        return Err(invalid("the table reports beta_2 and needs p >= 2"));
    }
    if outlier_index >= n {
        return Err(invalid(format!("outlier index {outlier_index} out of range for n = {n}")));
    }
    let outliers = OutlierSpec::at_current(dataset, &[outlier_index])?;
    let reduced = dataset.without_rows(&[outlier_index])?;

    let cells: Vec<(usize, bool)> = (0..gammas.len()).flat_map(|k| [(k, true), (k, false)]).collect();
    let fits = run_pool(jobs, &cells, |cell, &(k, limiting)| -> Result<Beta2> {
        let dof = gammas[k];
        let config = HmcConfig { seed: derive_seed(hmc.seed, cell as u64), ..hmc.clone() };
        if limiting {
            let thm1 = check_thm1_condition(n as u64, p as u64, 1, dof);
            if !thm1.holds {
                return Err(Error::Improper(format!(
                    "convergence condition |O^c| >= max(n/2 + p - 1/2, |O| gamma + p + 2) fails for n = {n}, p = {p}, |O| = 1, gamma = {dof}"
                )));
            }
            fit_limiting_posterior(dataset, &outliers, dof, prior, &config).map(|f| beta2(&f))
        } else {
            fit_posterior(&reduced, dof, prior, &config).map(|f| beta2(&f))
        }
    })?;

    let mut rows: Vec<Table1Row> = fits
        .chunks(2)
        .zip(gammas)
        .map(|(pair, &dof)| {
            let (lim, red) = (&pair[0], &pair[1]);
            let errors: Vec<String> = [("limiting", lim), ("reduced", red)]
                .iter()
                .filter_map(|(name, r)| r.as_ref().err().map(|e| format!("{name}: {e}")))
                .collect();
            let status = if errors.is_empty() { STATUS_OK.to_string() } else { format!("error: {}", errors.join("; ")) };
            row(Gamma::Finite(dof), lim.as_ref().ok(), red.as_ref().ok(), status)
        })
        .collect();

    rows.push(match normal_posterior_beta2_summary(&reduced) {
        Ok(s) => row(
            Gamma::Infinite,
            None,
            Some(&Beta2 { mean: s.mean, sd: s.sd, mean_mcse: 0.0, sd_mcse: 0.0 }),
            STATUS_OK.into(),
        ),
        Err(e) => row(Gamma::Infinite, None, None, format!("error: reduced: {e}")),
    });
    Ok(rows)
}
