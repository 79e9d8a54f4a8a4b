//! Delay-dependent fidelity estimates for remote state preparation (RSP) and
//! coherent-state quantum teleportation (QT) over the dephased resource.

use serde::{Deserialize, Serialize};

use crate::dephasing::{delayed_tms_cov, FilterSpec};
use crate::error::{invalid, Result};
use crate::gaussian::{
    conditional_covariance_homodyne, gaussian_fidelity_single_mode, smallest_pt_eigenvalue, CovarianceMatrix,
    QuadratureKind,
};
use crate::jpa::JpaParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Rsp,
    Qt,
}

impl std::str::FromStr for Protocol {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rsp" => Ok(Protocol::Rsp),
            "qt" => Ok(Protocol::Qt),
            other => Err(invalid(format!("unknown protocol {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolResult {
    pub protocol: Protocol,
    pub tau: f64,
    pub fidelity: f64,
    pub j1: JpaParams,
    pub j2: JpaParams,
    pub filter: FilterSpec,
}

/// State left on path 2 after an ideal `q` homodyne measurement of path 1.
fn prepared_state(j1: &JpaParams, j2: &JpaParams, filter: &FilterSpec, tau: f64) -> Result<CovarianceMatrix> {
    let v = delayed_tms_cov(j1, j2, filter, tau)?;
    conditional_covariance_homodyne(&v, 0, QuadratureKind::Q)
}

/// Fidelity of the remotely prepared state at delay `tau` with the one the
/// same resource prepares at zero delay.
pub fn rsp_fidelity(j1: &JpaParams, j2: &JpaParams, filter: &FilterSpec, tau: f64) -> Result<ProtocolResult> {
    let target = prepared_state(j1, j2, filter, 0.0)?;
    let prepared = prepared_state(j1, j2, filter, tau)?;
    Ok(ProtocolResult {
        protocol: Protocol::Rsp,
        tau,
        fidelity: gaussian_fidelity_single_mode(&prepared, &target)?,
        j1: *j1,
        j2: *j2,
        filter: *filter,
    })
}

/// Unit-gain coherent-state teleportation fidelity `1/(1 + ν̃)`, with `ν̃`
/// clamped at one so a separable resource gives the classical 1/2.
pub fn qt_fidelity_from_nu(nu: f64) -> f64 {
    1.0 / (1.0 + nu.min(1.0))
}

pub fn qt_fidelity(j1: &JpaParams, j2: &JpaParams, filter: &FilterSpec, tau: f64) -> Result<ProtocolResult> {
    let nu = smallest_pt_eigenvalue(&delayed_tms_cov(j1, j2, filter, tau)?)?;
    Ok(ProtocolResult {
        protocol: Protocol::Qt,
        tau,
        fidelity: qt_fidelity_from_nu(nu),
        j1: *j1,
        j2: *j2,
        filter: *filter,
    })
}

pub fn fidelity_sweep(
    protocol: Protocol,
    j1: &JpaParams,
    j2: &JpaParams,
    filter: &FilterSpec,
    tau_grid: &[f64],
) -> Result<Vec<ProtocolResult>> {
    if tau_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("delay grid must be strictly increasing"));
    }
    tau_grid
        .iter()
        .map(|&tau| match protocol {
            Protocol::Rsp => rsp_fidelity(j1, j2, filter, tau),
            Protocol::Qt => qt_fidelity(j1, j2, filter, tau),
        })
        .collect()
}
