use std::f64::consts::PI;
use std::fs;
use std::path::PathBuf;

use clap::Args;
use tms_core::dephasing::tms_cov;
use tms_core::gaussian::{wigner_marginal_grid, GridSpec, MarginalGrid, Quadrature};

use crate::error::{CliError, CliResult};
use crate::output::fmt_f64;
use crate::params::PairArgs;

#[derive(Args, Debug)]
pub struct MarginalsArgs {
    #[command(flatten)]
    pub pair: PairArgs,
    /// Squeezing angle of the first amplifier; the second is rotated by π.
    #[arg(long, default_value_t = PI / 2.0, allow_negative_numbers = true)]
    pub phi1: f64,
    /// Comma-separated quadrature pairs such as `q1p1,q2p1`.
    #[arg(long, default_value = "q1p1,q2p1")]
    pub axes: String,
    /// Half-width of the square grid.
    #[arg(long, default_value_t = 6.0)]
    pub range: f64,
    #[arg(long, default_value_t = 0.1)]
    pub step: f64,
    /// Grids are written to `<out>_<pair>.csv`.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn parse_axes(spec: &str) -> CliResult<Vec<(Quadrature, Quadrature)>> {
    spec.split(',')
        .map(|pair| {
            let pair = pair.trim();
            let split = pair[1..]
                .find(['q', 'p', 'Q', 'P'])
                .map(|i| i + 1)
                .ok_or_else(|| CliError::Usage(format!("cannot read quadrature pair {pair:?}")))?;
            let x: Quadrature = pair[..split].parse().map_err(CliError::usage)?;
            let y: Quadrature = pair[split..].parse().map_err(CliError::usage)?;
            if x.mode > 1 || y.mode > 1 {
                return Err(CliError::Usage(format!("{pair}: only modes 1 and 2 exist")));
            }
            if x == y {
                return Err(CliError::Usage(format!("{pair}: axes must differ")));
            }
            Ok((x, y))
        })
        .collect()
}

/// First row holds x coordinates, first column y coordinates.
pub fn grid_csv(grid: &MarginalGrid) -> String {
    let mut out = format!("{}\\{}", grid.y_axis, grid.x_axis);
    for x in &grid.coords {
        out.push(',');
        out.push_str(&fmt_f64(*x));
    }
    out.push('\n');
    for (y, row) in grid.coords.iter().zip(&grid.values) {
        out.push_str(&fmt_f64(*y));
        for v in row {
            out.push(',');
            out.push_str(&fmt_f64(*v));
        }
        out.push('\n');
    }
    out
}

pub fn marginals(args: &MarginalsArgs) -> CliResult<()> {
    let (j1, j2) = args.pair.resolve(args.phi1)?;
    let axes = parse_axes(&args.axes)?;
    if !(args.range > 0.0) || !(args.step > 0.0) {
        return Err(CliError::Usage("--range and --step must be positive".into()));
    }
    let state = tms_cov(&j1, &j2).map_err(CliError::runtime)?;
    let spec = GridSpec::symmetric(args.range, args.step);
    for (x, y) in axes {
        let grid = wigner_marginal_grid(&state, (x, y), spec).map_err(CliError::runtime)?;
        let mut name = args.out.as_os_str().to_owned();
        name.push(format!("_{x}{y}.csv"));
        fs::write(PathBuf::from(name), grid_csv(&grid))?;
    }
    Ok(())
}
