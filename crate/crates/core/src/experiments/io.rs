//! File formats.
//!
//! Datasets are CSV with a header `x1,...,xp,y` and LF line endings. Result
//! tables are CSV preceded by a `# robust-t v<version> seed=<seed>` line, or a
//! JSON array of records with the same fields.

use std::io::{Read, Write};
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::hmc::PosteriorFit;
use crate::model::{Dataset, Thm1Check};
use crate::ols::OlsFit;
use crate::VERSION;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(invalid(format!("unknown format '{other}' (expected csv or json)"))),
        }
    }
}

pub fn write_dataset<W: Write>(w: W, dataset: &Dataset) -> Result<()> {
    let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    let p = dataset.p();
    let mut header: Vec<String> = (1..=p).map(|j| format!("x{j}")).collect();
    header.push("y".into());
    out.write_record(&header)?;
    for i in 0..dataset.n() {
        let mut rec: Vec<String> = dataset.design().row(i).iter().map(|v| v.to_string()).collect();
        rec.push(dataset.response()[i].to_string());
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_dataset<R: Read>(r: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let header = rdr.headers()?.clone();
    let cols = header.len();
    let p = cols.checked_sub(1).filter(|&p| p >= 1).ok_or_else(|| invalid("dataset needs columns x1..xp,y"))?;
    let expected: Vec<String> = (1..=p).map(|j| format!("x{j}")).chain(["y".to_string()]).collect();
    if header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(invalid(format!(
            "dataset header must be '{}' (got '{}')",
            expected.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != cols {
            return Err(invalid(format!("data row {} has {} fields (expected {cols})", line + 1, rec.len())));
        }
        for (j, field) in rec.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| invalid(format!("data row {}, column {}: '{field}' is not a number", line + 1, j + 1)))?;
            if j < p {
                x.push(v);
            } else {
                y.push(v);
            }
        }
    }
    if y.is_empty() {
        return Err(invalid("dataset has no rows"));
    }
    let n = y.len();
    Dataset::new(DMatrix::from_row_slice(n, p, &x), DVector::from_vec(y))
}

/// Writes `rows` as CSV (with the version/seed comment line) or as a JSON array.
pub fn write_table<T: Serialize, W: Write>(mut w: W, rows: &[T], format: Format, seed: u64) -> Result<()> {
    match format {
        Format::Csv => {
            writeln!(w, "# robust-t v{VERSION} seed={seed}")?;
            let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
            for row in rows {
                out.serialize(row)?;
            }
            out.flush()?;
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, rows)?;
            writeln!(w)?;
        }
    }
    Ok(())
}

/// Reads a table written by [`write_table`]; CSV lines starting with `#` are skipped.
pub fn read_table<T: DeserializeOwned, R: Read>(r: R, format: Format) -> Result<Vec<T>> {
    match format {
        Format::Csv => {
            let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
            rdr.deserialize().map(|row| row.map_err(Error::from)).collect()
        }
        Format::Json => Ok(serde_json::from_reader(r)?),
    }
}

/// One parameter of a posterior fit; `sigma` is summarized on its own scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    pub parameter: String,
    pub mean: f64,
    pub sd: f64,
    pub q025: f64,
    pub q50: f64,
    pub q975: f64,
    pub ess: f64,
    pub mcse_mean: f64,
    pub mcse_sd: f64,
    pub accept_rate: f64,
}

impl FitRow {
    /// Rows `beta1..betap, sigma`. Expects the fit's quantiles at 0.025, 0.5 and 0.975.
    pub fn from_fit(fit: &PosteriorFit) -> Result<Vec<FitRow>> {
        let s = &fit.summary;
        let q = |prob: f64| {
            s.quantile(prob).ok_or_else(|| Error::Numerical(format!("fit summary lacks the {prob} quantile")))
        };
        let (lo, mid, hi) = (q(0.025)?, q(0.5)?, q(0.975)?);
        let dim = s.dim();
        Ok((0..dim)
            .map(|j| FitRow {
                parameter: if j + 1 == dim { "sigma".into() } else { format!("beta{}", j + 1) },
                mean: s.mean[j],
                sd: s.sd[j],
                q025: lo[j],
                q50: mid[j],
                q975: hi[j],
                ess: s.ess[j],
                mcse_mean: s.mcse_mean[j],
                mcse_sd: s.mcse_sd[j],
                accept_rate: fit.accept_rate(),
            })
            .collect())
    }
}

/// Least-squares estimate and, when `n > p + 2`, the normal-model posterior SD.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsRow {
    pub parameter: String,
    pub estimate: f64,
    pub posterior_sd: Option<f64>,
    pub residual_sumsq: f64,
}

impl OlsRow {
    pub fn from_fit(fit: &OlsFit) -> Vec<OlsRow> {
        (0..fit.beta_hat.len())
            .map(|j| OlsRow {
                parameter: format!("beta{}", j + 1),
                estimate: fit.beta_hat[j],
                posterior_sd: fit.posterior_cov.as_ref().map(|c| c[(j, j)].max(0.0).sqrt()),
                residual_sumsq: fit.residual_sumsq,
            })
            .collect()
    }
}

/// Result of one condition check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub check: String,
    pub n: u64,
    pub p: u64,
    pub n_outliers: Option<u64>,
    pub gamma: Option<u32>,
    pub holds: bool,
    pub max_outliers: Option<u64>,
    pub breakdown_fraction: Option<f64>,
}

impl CheckRow {
    pub fn properness(n: u64, p: u64, holds: bool) -> Self {
        Self {
            check: "properness".into(),
            n,
            p,
            n_outliers: None,
            gamma: None,
            holds,
            max_outliers: None,
            breakdown_fraction: None,
        }
    }

    pub fn limiting_properness(n: u64, p: u64, n_outliers: u64, gamma: u32, holds: bool) -> Self {
        Self {
            check: "limiting_properness".into(),
            n_outliers: Some(n_outliers),
            gamma: Some(gamma),
            ..Self::properness(n, p, holds)
        }
    }

    pub fn thm1(n: u64, p: u64, n_outliers: u64, gamma: u32, c: &Thm1Check) -> Self {
        Self {
            check: "convergence".into(),
            n_outliers: Some(n_outliers),
            gamma: Some(gamma),
            max_outliers: c.max_outliers,
            breakdown_fraction: Some(c.breakdown_fraction),
            ..Self::properness(n, p, c.holds)
        }
    }
}
