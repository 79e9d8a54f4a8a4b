use std::path::PathBuf;

use clap::Args;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use tms_core::dephasing::{linspace, synthetic_g2_curve, synthetic_nk_curve, CurvePoint, DephasingCurve};

use crate::error::{CliError, CliResult};
use crate::output::{curve_csv, write_text};
use crate::params::{resolve_jpa, FilterArgs, PairArgs};

#[derive(Args, Debug)]
pub struct GridArgs {
    /// Largest delay; defaults to the first zero of the filter kernel.
    #[arg(long = "tau-max-s")]
    pub tau_max_s: Option<f64>,
    #[arg(long, default_value_t = 101)]
    pub points: usize,
    /// Standard deviation of Gaussian noise added to each value.
    #[arg(long = "noise-sigma", default_value_t = 0.0)]
    pub noise_sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepNkArgs {
    #[command(flatten)]
    pub pair: PairArgs,
    #[command(flatten)]
    pub filter: FilterArgs,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Args, Debug)]
pub struct SweepG2Args {
    #[arg(long, allow_negative_numbers = true)]
    pub r: Option<f64>,
    #[arg(long = "s-db", allow_negative_numbers = true)]
    pub s_db: Option<f64>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub n: f64,
    #[command(flatten)]
    pub filter: FilterArgs,
    #[command(flatten)]
    pub grid: GridArgs,
}

fn taus(grid: &GridArgs, first_zero: f64) -> CliResult<Vec<f64>> {
    let tau_max = grid.tau_max_s.unwrap_or(first_zero);
    if grid.points < 2 {
        return Err(CliError::Usage("--points must be at least 2".into()));
    }
    if !(tau_max > 0.0) || !tau_max.is_finite() {
        return Err(CliError::Usage("--tau-max-s must be positive".into()));
    }
    if !(grid.noise_sigma >= 0.0) || !grid.noise_sigma.is_finite() {
        return Err(CliError::Usage("--noise-sigma must be >= 0".into()));
    }
    Ok(linspace(0.0, tau_max, grid.points))
}

fn add_noise(curve: DephasingCurve, grid: &GridArgs) -> CliResult<DephasingCurve> {
    if grid.noise_sigma == 0.0 {
        return Ok(curve);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(grid.seed);
    let dist = Normal::new(0.0, grid.noise_sigma).map_err(CliError::usage)?;
    let points = curve
        .points()
        .iter()
        .map(|p| CurvePoint {
            tau: p.tau,
            value: p.value + dist.sample(&mut rng),
            stderr: Some(grid.noise_sigma),
        })
        .collect();
    DephasingCurve::new(curve.kind, points).map_err(CliError::runtime)
}

pub fn sweep_nk(args: &SweepNkArgs) -> CliResult<()> {
    let (j1, j2) = args.pair.resolve(0.0)?;
    let filter = args.filter.resolve()?;
    let grid = taus(&args.grid, filter.first_zero())?;
    let curve = synthetic_nk_curve(&j1, &j2, &filter, &grid).map_err(CliError::runtime)?;
    let curve = add_noise(curve, &args.grid)?;
    write_text(args.grid.out.as_deref(), &curve_csv(&curve, "nk"))
}

pub fn sweep_g2(args: &SweepG2Args) -> CliResult<()> {
    let j = resolve_jpa("", args.r, args.s_db, args.n, 0.0)?;
    let filter = args.filter.resolve()?;
    let grid = taus(&args.grid, filter.first_zero())?;
    let curve = synthetic_g2_curve(&j, &filter, &grid).map_err(CliError::runtime)?;
    let curve = add_noise(curve, &args.grid)?;
    write_text(args.grid.out.as_deref(), &curve_csv(&curve, "g2"))
}
