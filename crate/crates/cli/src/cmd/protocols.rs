use std::path::PathBuf;

use clap::{Args, ValueEnum};
use tms_core::protocols::{fidelity_sweep, Protocol};

use crate::error::{CliError, CliResult};
use crate::output::{table, write_text};
use crate::params::{parse_list, resolve_jpa, FilterArgs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProtocolArg {
    Rsp,
    Qt,
}

#[derive(Args, Debug)]
pub struct ProtocolsArgs {
    #[arg(long, value_enum)]
    pub protocol: ProtocolArg,
    /// Squeezing level of each of the two amplifiers in dB.
    #[arg(long = "s-db", allow_negative_numbers = true)]
    pub s_db: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub r: Option<f64>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub n: f64,
    #[command(flatten)]
    pub filter: FilterArgs,
    /// Comma-separated, strictly increasing delays in seconds.
    #[arg(long = "tau-grid", default_value = "0")]
    pub tau_grid: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn protocols(args: &ProtocolsArgs) -> CliResult<()> {
    let j1 = resolve_jpa("", args.r, args.s_db, args.n, 0.0)?;
    let j2 = j1.orthogonal();
    let filter = args.filter.resolve()?;
    let grid = parse_list(&args.tau_grid)?;
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(CliError::Usage("--tau-grid must be strictly increasing".into()));
    }
    let protocol = match args.protocol {
        ProtocolArg::Rsp => Protocol::Rsp,
        ProtocolArg::Qt => Protocol::Qt,
    };
    let results = fidelity_sweep(protocol, &j1, &j2, &filter, &grid).map_err(CliError::runtime)?;
    let csv = table(&["tau_s", "fidelity"], results.iter().map(|r| vec![r.tau, r.fidelity]));
    write_text(args.out.as_deref(), &csv)
}
