use std::f64::consts::PI;

use clap::Args;
use tms_core::dephasing::FilterSpec;
use tms_core::jpa::{r_from_level, JpaParams, SqueezingLevel};

use crate::error::{CliError, CliResult};

/// Two amplifiers given either by `(r, n)` or by squeezing level and noise.
#[derive(Args, Debug, Clone, Default)]
pub struct PairArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub r1: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub n1: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub r2: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub n2: Option<f64>,
    /// Squeezing level of the first amplifier in dB.
    #[arg(long = "s1-db", allow_negative_numbers = true)]
    pub s1_db: Option<f64>,
    #[arg(long = "s2-db", allow_negative_numbers = true)]
    pub s2_db: Option<f64>,
    /// Noise photons shared by both amplifiers.
    #[arg(long, allow_negative_numbers = true)]
    pub n: Option<f64>,
}

pub fn resolve_jpa(label: &str, r: Option<f64>, s_db: Option<f64>, n: f64, phi: f64) -> CliResult<JpaParams> {
    let r = match (r, s_db) {
        (Some(_), Some(_)) => {
            return Err(CliError::Usage(format!(
                "amplifier {label}: give either r or a squeezing level in dB, not both"
            )))
        }
        (Some(r), None) => r,
        (None, Some(db)) => r_from_level(SqueezingLevel(db), n).map_err(CliError::usage)?,
        (None, None) => 0.0,
    };
    JpaParams::new(r, n, phi).map_err(|e| CliError::Usage(format!("amplifier {label}: {e}")))
}

impl PairArgs {
    fn noise(&self, own: Option<f64>, label: &str) -> CliResult<f64> {
        match (own, self.n) {
            (Some(_), Some(_)) => Err(CliError::Usage(format!("--n{label} conflicts with --n"))),
            (Some(v), None) | (None, Some(v)) => Ok(v),
            (None, None) => Ok(0.0),
        }
    }

    /// Orthogonally squeezed pair with the first amplifier at angle `phi1`.
    pub fn resolve(&self, phi1: f64) -> CliResult<(JpaParams, JpaParams)> {
        let n1 = self.noise(self.n1, "1")?;
        let n2 = self.noise(self.n2, "2")?;
        Ok((
            resolve_jpa("1", self.r1, self.s1_db, n1, phi1)?,
            resolve_jpa("2", self.r2, self.s2_db, n2, phi1 + PI)?,
        ))
    }
}

#[derive(Args, Debug, Clone, Default)]
pub struct FilterArgs {
    /// Filter rate Ω in rad/s.
    #[arg(long = "omega-rad-s", conflicts_with = "bandwidth_hz")]
    pub omega_rad_s: Option<f64>,
    /// Full boxcar bandwidth B in Hz; Ω = πB.
    #[arg(long = "bandwidth-hz")]
    pub bandwidth_hz: Option<f64>,
}

impl FilterArgs {
    pub fn resolve(&self) -> CliResult<FilterSpec> {
        match (self.omega_rad_s, self.bandwidth_hz) {
            (Some(o), None) => FilterSpec::from_omega(o).map_err(CliError::usage),
            (None, Some(b)) => FilterSpec::from_bandwidth_hz(b).map_err(CliError::usage),
            _ => Err(CliError::Usage(
                "one of --omega-rad-s or --bandwidth-hz is required".into(),
            )),
        }
    }
}

/// Comma-separated list of numbers.
pub fn parse_list(s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::Usage(format!("not a finite number: {t:?}")))
        })
        .collect()
}
