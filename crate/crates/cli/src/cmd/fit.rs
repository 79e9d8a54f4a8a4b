use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::Serialize;
use tms_core::dephasing::CurveKind;
use tms_core::estimation::{fit_g2, fit_nk, FitOptions, FitResult, NkGeometry};

use crate::error::{CliError, CliResult};
use crate::input::read_curve;
use crate::output::{to_json, write_text};
use crate::params::FilterArgs;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    G2,
    Nk,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[arg(long, value_enum)]
    pub model: Model,
    #[arg(long)]
    pub input: PathBuf,
    /// Filter rate for `nk` fits.
    #[command(flatten)]
    pub filter: FilterArgs,
    /// Tie both amplifiers together; otherwise the second one is off.
    #[arg(long)]
    pub symmetric: bool,
    /// Keep points beyond the first kernel zero in `nk` fits.
    #[arg(long = "all-lobes")]
    pub all_lobes: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Report<'a> {
    model: &'static str,
    input: String,
    convention: &'static str,
    #[serde(flatten)]
    fit: &'a FitResult,
}

pub fn fit(args: &FitArgs) -> CliResult<()> {
    let options = FitOptions {
        first_lobe_only: !args.all_lobes,
        ..FitOptions::default()
    };
    let (result, model) = match args.model {
        Model::G2 => {
            let curve = read_curve(&args.input, CurveKind::G2)?;
            (fit_g2(&curve, None, &options), "g2")
        }
        Model::Nk => {
            let filter = args.filter.resolve()?;
            let curve = read_curve(&args.input, CurveKind::Nk)?;
            let geometry = if args.symmetric {
                NkGeometry::Symmetric
            } else {
                NkGeometry::SingleJpa
            };
            (fit_nk(&curve, filter.omega, geometry, None, &options), "nk")
        }
    };
    let result = result.map_err(|e| match e {
        tms_core::Error::InvalidParameter(_) => CliError::usage(e),
        other => CliError::runtime(other),
    })?;
    let report = Report {
        model,
        input: args.input.display().to_string(),
        convention: "vacuum_variance=1",
        fit: &result,
    };
    write_text(args.out.as_deref(), &to_json(&report)?)?;
    if !result.converged {
        return Err(CliError::NonConvergence(format!(
            "fit did not converge after {} iterations",
            result.n_iterations
        )));
    }
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}
