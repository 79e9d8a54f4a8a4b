//! `tms-dephase`: sweeps, fits, simulations, marginal grids and protocol
//! fidelities for delayed two-mode squeezed states.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod cmd;
mod error;
mod input;
mod output;
mod params;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cmd::fit::FitArgs;
use cmd::marginals::MarginalsArgs;
use cmd::protocols::ProtocolsArgs;
use cmd::simulate::SimulateArgs;
use cmd::sweep::{SweepG2Args, SweepNkArgs};

#[derive(Parser, Debug)]
#[command(
    name = "tms-dephase",
    version,
    about = "Entanglement dephasing of two-mode squeezed microwaves"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Closed-form negativity kernel N_k(τ) as CSV `tau_s,nk`.
    SweepNk(SweepNkArgs),
    /// Closed-form g²(τ) of one amplifier as CSV `tau_s,g2`.
    SweepG2(SweepG2Args),
    /// Fit a `tau_s,value[,stderr]` trace; writes a JSON report.
    Fit(FitArgs),
    /// Monte Carlo dual-path measurement from a JSON configuration.
    Simulate(SimulateArgs),
    /// Wigner-function marginals on a square grid.
    Marginals(MarginalsArgs),
    /// RSP or QT fidelity over a delay grid.
    Protocols(ProtocolsArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::SweepNk(a) => cmd::sweep::sweep_nk(a),
        Command::SweepG2(a) => cmd::sweep::sweep_g2(a),
        Command::Fit(a) => cmd::fit::fit(a),
        Command::Simulate(a) => cmd::simulate::simulate(a),
        Command::Marginals(a) => cmd::marginals::marginals(a),
        Command::Protocols(a) => cmd::protocols::protocols(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
