//! Properness and robustness conditions, evaluated in exact integer arithmetic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Dof;

/// The full posterior is proper when `n > p + 1`.
pub fn check_properness(n: u64, p: u64) -> bool {
    i128::from(n) > i128::from(p) + 1
}

/// The limiting posterior is proper when `n - |O| (gamma + 1) > p + 1`.
pub fn check_limiting_properness(n: u64, p: u64, n_outliers: u64, dof: Dof) -> bool {
    let g = i128::from(dof.get());
    i128::from(n) - i128::from(n_outliers) * (g + 1) > i128::from(p) + 1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thm1Check {
    /// `|O^c| >= max{n/2 + p - 1/2, |O| gamma + p + 2}`
    pub holds: bool,
    /// Largest outlier count for which the condition holds; `None` if even zero fails.
    pub max_outliers: Option<u64>,
    /// `min(1/2 - (p - 1/2)/n, (n - p - 2) / (n (gamma + 1)))`
    pub breakdown_fraction: f64,
}

/// Condition under which the posterior converges to the limiting posterior
/// as the outliers drift away, with the implied breakdown point.
pub fn check_thm1_condition(n: u64, p: u64, n_outliers: u64, dof: Dof) -> Thm1Check {
    let (n, p, k, g) = (i128::from(n), i128::from(p), i128::from(n_outliers), i128::from(dof.get()));
    let kept = n - k;
    // |O^c| >= n/2 + p - 1/2  <=>  2 |O^c| >= n + 2p - 1
    let majority = 2 * kept >= n + 2 * p - 1;
    let tails = kept >= k * g + p + 2;
    let max_outliers = {
        let by_majority = (n - 2 * p + 1).div_euclid(2);
        let by_tails = (n - p - 2).div_euclid(g + 1);
        let m = by_majority.min(by_tails).min(n);
        (m >= 0).then(|| m as u64)
    };
    let (nf, pf, gf) = (n as f64, p as f64, g as f64);
    let breakdown_fraction = f64::min(0.5 - (pf - 0.5) / nf, (nf - pf - 2.0) / (nf * (gf + 1.0)));
    Thm1Check { holds: majority && tails, max_outliers, breakdown_fraction }
}

/// Gate used before sampling the full posterior.
pub fn require_proper(n: u64, p: u64) -> Result<()> {
    if check_properness(n, p) {
        Ok(())
    } else {
        Err(Error::Improper(format!("n > p + 1 fails: n = {n}, p + 1 = {}", p + 1)))
    }
}

/// Gate used before sampling the limiting posterior.
pub fn require_limiting_proper(n: u64, p: u64, n_outliers: u64, dof: Dof) -> Result<()> {
    if check_limiting_properness(n, p, n_outliers, dof) {
        Ok(())
    } else {
        let lhs = i128::from(n) - i128::from(n_outliers) * (i128::from(dof.get()) + 1);
        Err(Error::Improper(format!(
            "n - |O|(gamma + 1) > p + 1 fails: {n} - {n_outliers}*({} + 1) = {lhs}, p + 1 = {}",
            dof.get(),
            p + 1
        )))
    }
}
