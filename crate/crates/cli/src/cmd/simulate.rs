use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use tms_core::dualpath::{estimate_covariance, estimate_g2_curve, estimate_nk_curve, SimulationConfig};
use tms_core::Error;

use crate::error::{CliError, CliResult};
use crate::output::{curve_csv, to_json};

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the seed in the configuration.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output files are `<prefix>_nk.csv`, `<prefix>_g2.csv`, `<prefix>_cov.json`.
    #[arg(long = "out-prefix")]
    pub out_prefix: PathBuf,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveChoice {
    Nk,
    G2,
}

fn default_curves() -> Vec<CurveChoice> {
    vec![CurveChoice::Nk]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub simulation: SimulationConfig,
    pub tau_grid_s: Vec<f64>,
    #[serde(default = "default_curves")]
    pub curves: Vec<CurveChoice>,
}

#[derive(Serialize)]
struct CovarianceReport {
    convention: &'static str,
    n_modes: usize,
    shape: [usize; 2],
    delay_s: f64,
    seed: u64,
    /// Row-major.
    entries: Vec<f64>,
    stderr: Vec<f64>,
}

fn pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } => out.push_str(key),
            Segment::Enum { variant } => out.push_str(variant),
            Segment::Unknown => out.push('?'),
        }
    }
    out
}

pub fn load_config(path: &Path) -> CliResult<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        CliError::Usage(format!(
            "{}: invalid configuration at \"{}\": {}",
            path.display(),
            pointer(e.path()),
            e.inner()
        ))
    })?;
    Ok(config)
}

fn config_error(e: Error) -> CliError {
    match e {
        Error::Config { field, reason } => CliError::Usage(format!(
            "invalid configuration at \"/simulation/{}\": {reason}",
            field.replace('.', "/")
        )),
        Error::InvalidParameter(msg) => CliError::Usage(msg),
        other => CliError::runtime(other),
    }
}

fn run(config: &RunConfig, prefix: &Path) -> CliResult<()> {
    let sim = &config.simulation;
    sim.validate().map_err(config_error)?;
    let file = |suffix: &str| {
        let mut name = prefix.as_os_str().to_owned();
        name.push(suffix);
        PathBuf::from(name)
    };
    for choice in &config.curves {
        let (curve, name, column) = match choice {
            CurveChoice::Nk => (estimate_nk_curve(sim, &config.tau_grid_s), "_nk.csv", "nk"),
            CurveChoice::G2 => (estimate_g2_curve(sim, &config.tau_grid_s), "_g2.csv", "g2"),
        };
        let curve = curve.map_err(|e| match e {
            Error::Config { field, reason } if field == "tau_grid_s" => {
                CliError::Usage(format!("invalid configuration at \"/tau_grid_s\": {reason}"))
            }
            other => config_error(other),
        })?;
        fs::write(file(name), curve_csv(&curve, column))?;
    }
    let est = estimate_covariance(sim).map_err(config_error)?;
    let report = CovarianceReport {
        convention: "vacuum_variance=1",
        n_modes: 2,
        shape: [4, 4],
        delay_s: sim.delay_s,
        seed: sim.seed,
        entries: est.covariance.to_row_major(),
        stderr: est.stderr.transpose().iter().copied().collect(),
    };
    fs::write(file("_cov.json"), to_json(&report)?)?;
    Ok(())
}

pub fn simulate(args: &SimulateArgs) -> CliResult<()> {
    let mut config = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        config.simulation.seed = seed;
    }
    match args.threads {
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(CliError::runtime)?;
            pool.install(|| run(&config, &args.out_prefix))
        }
        None => run(&config, &args.out_prefix),
    }
}
