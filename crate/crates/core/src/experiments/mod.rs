//! Simulation, the outlier sweep, the limiting-vs-reduced table, asymptotic
//! curves, and the CSV/JSON formats they are written in.

mod curves;
mod io;
mod sim;
mod sweep;
mod table1;

use rayon::prelude::*;

use crate::error::{invalid, Result};

pub use curves::{emit_curves, CurveKind, CurveTable, PhiRow, SigmaStarRow};
pub use io::{
    read_dataset, read_table, write_dataset, write_table, CheckRow, FitRow, Format, OlsRow,
};
pub use sim::{simulate_dataset, CovariateScheme, SimConfig};
pub use sweep::{default_y_grid, sweep_outlier, Gamma, SweepRow, LARGE_OUTLIER};
pub use table1::{table1_experiment, Table1Row};

/// Status string of rows that were computed successfully.
pub const STATUS_OK: &str = "ok";

/// Maps `f` over `cells` on a pool of `jobs` threads, preserving input order.
pub fn run_pool<T, R, F>(jobs: usize, cells: &[T], f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync + Send,
{
    if jobs == 0 {
        return Err(invalid("--jobs must be at least 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| invalid(format!("could not start worker pool: {e}")))?;
    Ok(pool.install(|| cells.par_iter().enumerate().map(|(i, c)| f(i, c)).collect()))
}
