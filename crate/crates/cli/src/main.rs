use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use robust_t::asymptotics::QuadratureSpec;
use robust_t::experiments::{
    default_y_grid, emit_curves, read_dataset, simulate_dataset, sweep_outlier, table1_experiment,
    write_dataset, write_table, CheckRow, CovariateScheme, CurveKind, CurveTable, FitRow, Format,
    Gamma, OlsRow, SimConfig, SweepRow, Table1Row,
};
use robust_t::hmc::{fit_limiting_posterior, fit_posterior, HmcConfig, DEFAULT_LEAPFROG, DEFAULT_STEP_SIZE};
use robust_t::model::{check_limiting_properness, check_properness, check_thm1_condition};
use robust_t::ols::ols_fit;
use robust_t::{Dataset, Dof, Error, OutlierSpec, PriorSpec, Result};

/// Any table the CLI can emit.
enum Rows {
    Fit(Vec<FitRow>),
    Ols(Vec<OlsRow>),
    Check(Vec<CheckRow>),
    Sweep(Vec<SweepRow>),
    Table1(Vec<Table1Row>),
    Curve(CurveTable),
}

impl Rows {
    fn write<W: Write>(&self, w: W, format: Format, seed: u64) -> Result<()> {
        match self {
            Rows::Fit(r) => write_table(w, r, format, seed),
            Rows::Ols(r) => write_table(w, r, format, seed),
            Rows::Check(r) => write_table(w, r, format, seed),
            Rows::Sweep(r) => write_table(w, r, format, seed),
            Rows::Table1(r) => write_table(w, r, format, seed),
            Rows::Curve(CurveTable::SigmaStar(r)) => write_table(w, r, format, seed),
            Rows::Curve(CurveTable::Phi(r)) => write_table(w, r, format, seed),
        }
    }
}

#[derive(Parser)]
#[command(name = "robust-t", version, about = "Bayesian linear regression with Student-t errors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a dataset y = X beta + sigma * eps.
    Simulate(SimulateArgs),
    /// Sample the full posterior.
    Fit(FitArgs),
    /// Sample the posterior limit as the given points drift away.
    LimitFit(LimitFitArgs),
    /// Least squares and the normal-model posterior.
    Ols(OlsArgs),
    /// Posterior mean of beta_2 as one response moves.
    SweepOutlier(SweepArgs),
    /// beta_2 under the limiting posterior and with the outlier removed.
    Table1(Table1Args),
    /// sigma*/sigma0 for a range of gamma.
    SigmaStar(CurveArgs),
    /// Asymptotic variance factor phi for a range of gamma.
    Phi(CurveArgs),
    /// Properness and convergence conditions.
    Check(CheckArgs),
}

#[derive(Args)]
struct Output {
    /// Output file (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv", value_parser = parse_format)]
    format: Format,
}

#[derive(Args)]
struct Sampler {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = robust_t::hmc::DEFAULT_SAMPLES)]
    samples: usize,
    /// Burn-in iterations (default: 10% of --samples).
    #[arg(long)]
    burnin: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_STEP_SIZE)]
    step_size: f64,
    #[arg(long, default_value_t = DEFAULT_LEAPFROG)]
    leapfrog: usize,
    #[arg(long, value_enum, default_value_t = PriorArg::Jeffreys)]
    prior: PriorArg,
}

impl Sampler {
    fn config(&self) -> HmcConfig {
        let mut c = HmcConfig::new(self.samples, self.seed);
        if let Some(b) = self.burnin {
            c.n_burnin = b;
        }
        c.step_size = self.step_size;
        c.n_leapfrog = self.leapfrog;
        c
    }

    fn prior(&self) -> PriorSpec {
        match self.prior {
            PriorArg::Jeffreys => PriorSpec::Jeffreys,
            PriorArg::Flat => PriorSpec::Flat,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PriorArg {
    Jeffreys,
    Flat,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Sequential,
    Iid,
}

#[derive(Clone, Copy, ValueEnum)]
enum QuadArg {
    Adaptive,
    GaussHermite,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value_t = 20)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    p: usize,
    /// Comma-separated coefficients (default: all ones).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    beta: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, value_enum, default_value_t = SchemeArg::Sequential)]
    scheme: SchemeArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    /// Dataset CSV with columns x1..xp,y.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_parser = parse_dof)]
    gamma: Dof,
    #[command(flatten)]
    sampler: Sampler,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct LimitFitArgs {
    #[command(flatten)]
    fit: FitArgs,
    /// Comma-separated 1-based indices of the outlying points.
    #[arg(long, value_delimiter = ',', required = true)]
    outliers: Vec<usize>,
}

#[derive(Args)]
struct OlsArgs {
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    data: PathBuf,
    /// 1-based index of the moving point (default: the last one).
    #[arg(long)]
    index: Option<usize>,
    /// Comma-separated values for the moving response (default: its current
    /// value plus 25, 50, 100, 250, 1e3, 1e4).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    y_values: Option<Vec<f64>>,
    /// Comma-separated degrees of freedom; `inf` is the normal model.
    #[arg(long, value_delimiter = ',', default_value = "1,4,10,inf", value_parser = parse_gamma)]
    gamma: Vec<Gamma>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[command(flatten)]
    sampler: Sampler,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct Table1Args {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    index: Option<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1,4,10", value_parser = parse_dof)]
    gamma: Vec<Dof>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[command(flatten)]
    sampler: Sampler,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct CurveArgs {
    #[arg(long, default_value_t = 1)]
    gamma_min: u32,
    #[arg(long, default_value_t = 30)]
    gamma_max: u32,
    #[arg(long, value_enum, default_value_t = QuadArg::Adaptive)]
    quadrature: QuadArg,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Recorded in the CSV header only; the curves are deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    n: u64,
    #[arg(long)]
    p: u64,
    /// Number of outlying points.
    #[arg(long, default_value_t = 0)]
    n_outliers: u64,
    #[arg(long, value_parser = parse_dof)]
    gamma: Option<Dof>,
    #[command(flatten)]
    output: Output,
}

fn parse_format(s: &str) -> std::result::Result<Format, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_gamma(s: &str) -> std::result::Result<Gamma, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_dof(s: &str) -> std::result::Result<Dof, String> {
    match parse_gamma(s)? {
        Gamma::Finite(d) => Ok(d),
        Gamma::Infinite => Err("a finite gamma is required here".into()),
    }
}

fn load(path: &Path) -> Result<Dataset> {
    read_dataset(File::open(path)?)
}

fn emit(out: &Option<PathBuf>, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match out {
        Some(path) => {
            let mut f = io::BufWriter::new(File::create(path)?);
            write(&mut f)?;
            f.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn zero_based(index: usize, n: usize) -> Result<usize> {
    if index == 0 || index > n {
        return Err(Error::InvalidInput(format!("index {index} is outside 1..={n}")));
    }
    Ok(index - 1)
}

fn run(cli: Cli) -> Result<()> {
    let (rows, output, seed) = match cli.command {
        Command::Simulate(a) => {
            let config = SimConfig {
                n: a.n,
                p: a.p,
                beta_true: a.beta.unwrap_or_else(|| vec![1.0; a.p]),
                sigma_true: a.sigma,
                covariate_scheme: match a.scheme {
                    SchemeArg::Sequential => CovariateScheme::Sequential,
                    SchemeArg::Iid => CovariateScheme::IidStandardNormal,
                },
                seed: a.seed,
            };
            let data = simulate_dataset(&config)?;
            return emit(&a.out, |w| write_dataset(w, &data));
        }
        Command::Fit(a) => {
            let data = load(&a.data)?;
            let fit = fit_posterior(&data, a.gamma, &a.sampler.prior(), &a.sampler.config())?;
            (Rows::Fit(FitRow::from_fit(&fit)?), a.output, a.sampler.seed)
        }
        Command::LimitFit(a) => {
            let data = load(&a.fit.data)?;
            let idx = a.outliers.iter().map(|&i| zero_based(i, data.n())).collect::<Result<Vec<_>>>()?;
            let outliers = OutlierSpec::at_current(&data, &idx)?;
            let s = &a.fit.sampler;
            let fit = fit_limiting_posterior(&data, &outliers, a.fit.gamma, &s.prior(), &s.config())?;
            (Rows::Fit(FitRow::from_fit(&fit)?), a.fit.output, s.seed)
        }
        Command::Ols(a) => {
            let data = load(&a.data)?;
            (Rows::Ols(OlsRow::from_fit(&ols_fit(&data)?)), a.output, 0)
        }
        Command::SweepOutlier(a) => {
            let data = load(&a.data)?;
            let idx = zero_based(a.index.unwrap_or(data.n()), data.n())?;
            let ys = match a.y_values {
                Some(v) => v,
                None => default_y_grid(&data, idx)?,
            };
            let s = &a.sampler;
            let rows = sweep_outlier(&data, idx, &ys, &a.gamma, &s.prior(), &s.config(), a.jobs)?;
            (Rows::Sweep(rows), a.output, s.seed)
        }
        Command::Table1(a) => {
            let data = load(&a.data)?;
            let idx = zero_based(a.index.unwrap_or(data.n()), data.n())?;
            let s = &a.sampler;
            let rows = table1_experiment(&data, idx, &a.gamma, &s.prior(), &s.config(), a.jobs)?;
            (Rows::Table1(rows), a.output, s.seed)
        }
        Command::SigmaStar(a) => curve(CurveKind::SigmaStar, a)?,
        Command::Phi(a) => curve(CurveKind::Phi, a)?,
        Command::Check(a) => {
            let mut rows = vec![CheckRow::properness(a.n, a.p, check_properness(a.n, a.p))];
            if let Some(g) = a.gamma {
                if a.n_outliers > a.n {
                    return Err(Error::InvalidInput(format!("{} outliers exceed n = {}", a.n_outliers, a.n)));
                }
                rows.push(CheckRow::limiting_properness(
                    a.n,
                    a.p,
                    a.n_outliers,
                    g.get(),
                    check_limiting_properness(a.n, a.p, a.n_outliers, g),
                ));
                let thm1 = check_thm1_condition(a.n, a.p, a.n_outliers, g);
                rows.push(CheckRow::thm1(a.n, a.p, a.n_outliers, g.get(), &thm1));
            }
            (Rows::Check(rows), a.output, 0)
        }
    };
    emit(&output.out, |w| rows.write(w, output.format, seed))
}

fn curve(kind: CurveKind, a: CurveArgs) -> Result<(Rows, Output, u64)> {
    let spec = match a.quadrature {
        QuadArg::Adaptive => QuadratureSpec::adaptive(),
        QuadArg::GaussHermite => QuadratureSpec::gauss_hermite(),
    };
    let table = emit_curves(kind, a.gamma_min, a.gamma_max, &spec, a.jobs)?;
    Ok((Rows::Curve(table), a.output, a.seed))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
