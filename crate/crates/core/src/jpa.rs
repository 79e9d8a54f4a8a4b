//! Josephson parametric amplifier outputs as squeezed thermal states.

use std::f64::consts::{LN_10, PI};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gaussian::{apply, squeezer_transform, CovarianceMatrix};

/// Squeezing factor, added noise photons and squeezing angle of one JPA.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JpaParams {
    pub r: f64,
    pub n: f64,
    #[serde(default)]
    pub phi: f64,
}

impl JpaParams {
    pub fn new(r: f64, n: f64, phi: f64) -> Result<Self> {
        if !r.is_finite() || r < 0.0 {
            return Err(invalid(format!("squeezing factor r must be finite and >= 0, got {r}")));
        }
        if !n.is_finite() || n < 0.0 {
            return Err(invalid(format!(
                "noise photon number n must be finite and >= 0, got {n}"
            )));
        }
        if !phi.is_finite() {
            return Err(invalid("squeezing angle must be finite"));
        }
        Ok(Self {
            r,
            n,
            phi: phi.rem_euclid(2.0 * PI),
        })
    }

    pub fn vacuum() -> Self {
        Self {
            r: 0.0,
            n: 0.0,
            phi: 0.0,
        }
    }

    pub fn from_level(level: SqueezingLevel, n: f64, phi: f64) -> Result<Self> {
        Self::new(r_from_level(level, n)?, n, phi)
    }

    /// Same device squeezing along the orthogonal axis (`φ + π`).
    pub fn orthogonal(&self) -> Self {
        Self {
            phi: (self.phi + PI).rem_euclid(2.0 * PI),
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        Self::new(self.r, self.n, self.phi).map(|_| ())
    }

    pub fn is_vacuum(&self) -> bool {
        self.r == 0.0 && self.n == 0.0
    }
}

/// Squeezing in decibels below vacuum; negative for excess noise.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct SqueezingLevel(pub f64);

impl SqueezingLevel {
    pub fn db(&self) -> f64 {
        self.0
    }

    /// Ratio of the squeezed variance to the vacuum variance.
    pub fn variance_ratio(&self) -> f64 {
        10f64.powf(-self.0 / 10.0)
    }

    pub fn from_variance_ratio(ratio: f64) -> Self {
        SqueezingLevel(-10.0 * ratio.log10())
    }
}

/// `(σ_s², σ_a²)` in vacuum-variance-one units.
pub fn quadrature_variances(params: &JpaParams) -> (f64, f64) {
    let g = 1.0 + 2.0 * params.n;
    (g * (-2.0 * params.r).exp(), g * (2.0 * params.r).exp())
}

pub fn squeezing_level(params: &JpaParams) -> SqueezingLevel {
    // -10 log10((1+2n) e^{-2r}) without forming the exponential
    let db = 20.0 * params.r / LN_10 - 10.0 * (1.0 + 2.0 * params.n).log10();
    SqueezingLevel(db)
}

/// Inverts [`squeezing_level`] at fixed noise photon number.
pub fn r_from_level(level: SqueezingLevel, n: f64) -> Result<f64> {
    if !level.0.is_finite() {
        return Err(invalid("squeezing level must be finite"));
    }
    if !n.is_finite() || n < 0.0 {
        return Err(invalid(format!("noise photon number must be >= 0, got {n}")));
    }
    let r = 0.5 * ((1.0 + 2.0 * n).ln() + level.0 * LN_10 / 10.0);
    if r < -1e-15 {
        return Err(Error::NoSolution(format!(
            "{} dB is below the {:.6} dB floor set by n = {n}",
            level.0,
            -10.0 * (1.0 + 2.0 * n).log10()
        )));
    }
    Ok(r.max(0.0))
}

/// `(1+2n)·R(φ/2)·diag(e^{-2r}, e^{2r})·R(φ/2)ᵀ`.
pub fn squeezed_thermal_cov(params: &JpaParams) -> Result<CovarianceMatrix> {
    let s = squeezer_transform(params.r, params.phi)?;
    apply(&s, &CovarianceMatrix::thermal(params.n)?)
}

/// Two-mode squeezing level of a resource whose smallest partially
/// transposed symplectic eigenvalue is `nu`.
pub fn tms_level_from_nu(nu: f64) -> SqueezingLevel {
    SqueezingLevel::from_variance_ratio(nu)
}

pub fn nu_from_tms_level(level: SqueezingLevel) -> f64 {
    level.variance_ratio()
}

/// Mean photon number of each hybrid-ring output for two identical JPAs
/// squeezing along orthogonal axes.
pub fn symmetric_path_photons(params: &JpaParams) -> f64 {
    ((1.0 + 2.0 * params.n) * (2.0 * params.r).cosh() - 1.0) / 2.0
}

/// Finds the `(r, n)` of two identical orthogonal JPAs that realise a given
/// single-mode squeezing level and a given photon number in each output path.
///
/// Writing `g = 1+2n`, the two conditions are `g e^{-2r} = 10^{-S/10}` and
/// `g cosh 2r = 1 + 2 n_path`, which close to `g² = s (2(1+2n_path) − s)`.
pub fn solve_symmetric_from_path_photons(level: SqueezingLevel, path_photons: f64) -> Result<JpaParams> {
    if !(path_photons >= 0.0) {
        return Err(invalid("path photon number must be >= 0"));
    }
    let s = level.variance_ratio();
    let total = 1.0 + 2.0 * path_photons;
    let g_sq = s * (2.0 * total - s);
    if !(g_sq >= 1.0) {
        return Err(Error::NoSolution(format!(
            "{} dB with {path_photons} photons per path needs negative noise",
            level.0
        )));
    }
    let g = g_sq.sqrt();
    let r = 0.5 * (g / s).ln();
    if r < 0.0 {
        return Err(Error::NoSolution("squeezing level below the noise floor".into()));
    }
    JpaParams::new(r, (g - 1.0) / 2.0, 0.0)
}
