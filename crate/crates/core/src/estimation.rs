//! Least-squares fits of delay traces to the `g²(τ)` and `N_k(τ)` laws.
//!
//! Positive parameters are optimized in transformed coordinates: the filter
//! rate through its logarithm, everything else through a softplus, so the
//! Jacobian stays exact and no clipping is needed. Standard errors are
//! reported for the natural parameters.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dephasing::{
    g2_closed_form, nk_bracket, nk_closed_form, sinc, sinc_derivative, CurveKind, DephasingCurve, FilterSpec,
};
use crate::error::{invalid, Error, Result};
use crate::jpa::{squeezing_level, JpaParams};
use crate::lm::{minimize, LeastSquaresProblem, LmConfig, LmReport};

const MIN_POINTS: usize = 5;
const BOUNDARY: f64 = 1e-6;

fn softplus(u: f64) -> f64 {
    if u > 30.0 {
        u
    } else {
        u.exp().ln_1p()
    }
}

fn softplus_inv(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp_m1().ln()
    }
}

fn sigmoid(u: f64) -> f64 {
    1.0 / (1.0 + (-u).exp())
}

/// One fitted or fixed model parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamEstimate {
    pub name: String,
    pub value: f64,
    pub stderr: Option<f64>,
    pub fixed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub kind: CurveKind,
    pub params: Vec<ParamEstimate>,
    /// Covariance of the free parameters in the order they appear in `params`.
    pub covariance: Option<Vec<Vec<f64>>>,
    /// Weighted residual sum of squares.
    pub residual_norm: f64,
    pub reduced_chi_square: f64,
    pub n_points: usize,
    pub n_iterations: usize,
    pub converged: bool,
    pub gradient_norm: f64,
    /// Squeezing level implied by the fitted `(r, n)`; `N_k` fits only.
    pub squeezing_level_db: Option<f64>,
    pub warnings: Vec<String>,
}

impl FitResult {
    pub fn get(&self, name: &str) -> Option<&ParamEstimate> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.get(name).map(|p| p.value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub lm: LmConfig,
    /// Drop points beyond the first sinc zero before fitting `N_k`.
    pub first_lobe_only: bool,
    /// RMS residual above which an unweighted fit is flagged.
    pub rms_warning_unweighted: f64,
    /// RMS residual (in units of stderr) above which a weighted fit is flagged.
    pub rms_warning_weighted: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            lm: LmConfig::default(),
            first_lobe_only: true,
            rms_warning_unweighted: 0.05,
            rms_warning_weighted: 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct G2Init {
    pub amplitude: f64,
    pub omega: f64,
}

/// A fully specified model to compare a trace against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CurveModel {
    /// `1 + amplitude·sinc²(omega·τ)`.
    G2 { amplitude: f64, omega: f64 },
    Nk {
        j1: JpaParams,
        j2: JpaParams,
        filter: FilterSpec,
    },
}

impl CurveModel {
    pub fn evaluate(&self, tau: f64) -> Result<f64> {
        match self {
            CurveModel::G2 { amplitude, omega } => {
                let s = sinc(omega * tau.abs());
                Ok(1.0 + amplitude * s * s)
            }
            CurveModel::Nk { j1, j2, filter } => nk_closed_form(j1, j2, filter, tau),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    /// `(value − model)/stderr`, or `value − model` without stderr.
    pub residuals: Vec<f64>,
    pub chi_square: f64,
    pub dof: usize,
    pub reduced_chi_square: f64,
}

pub fn residual_report(curve: &DephasingCurve, model: &CurveModel, n_free_params: usize) -> Result<ResidualReport> {
    let residuals = curve
        .points()
        .iter()
        .map(|p| {
            let w = p.stderr.map_or(1.0, |e| if e > 0.0 { 1.0 / e } else { 1.0 });
            Ok((p.value - model.evaluate(p.tau)?) * w)
        })
        .collect::<Result<Vec<_>>>()?;
    let chi_square: f64 = residuals.iter().map(|r| r * r).sum();
    let dof = curve.len().saturating_sub(n_free_params);
    Ok(ResidualReport {
        residuals,
        chi_square,
        dof,
        reduced_chi_square: if dof > 0 { chi_square / dof as f64 } else { f64::NAN },
    })
}

fn weights(curve: &DephasingCurve) -> Result<Vec<f64>> {
    curve
        .points()
        .iter()
        .map(|p| match p.stderr {
            None => Ok(1.0),
            Some(e) if e > 0.0 => Ok(1.0 / e),
            Some(_) => Err(invalid("weighted fit needs strictly positive stderr")),
        })
        .collect()
}

struct G2Problem {
    taus: Vec<f64>,
    values: Vec<f64>,
    weights: Vec<f64>,
}

impl G2Problem {
    fn natural(u: &DVector<f64>) -> (f64, f64) {
        (softplus(u[0]), u[1].exp())
    }

    /// Jacobian with respect to `(amplitude, omega)`.
    fn natural_jacobian(&self, amplitude: f64, omega: f64) -> DMatrix<f64> {
        let mut j = DMatrix::zeros(self.taus.len(), 2);
        for (i, (&t, &w)) in self.taus.iter().zip(&self.weights).enumerate() {
            let t = t.abs();
            let x = omega * t;
            let s = sinc(x);
            j[(i, 0)] = w * s * s;
            j[(i, 1)] = w * 2.0 * amplitude * s * sinc_derivative(x) * t;
        }
        j
    }
}

impl LeastSquaresProblem for G2Problem {
    fn residuals(&self, u: &DVector<f64>) -> DVector<f64> {
        let (a, om) = Self::natural(u);
        DVector::from_iterator(
            self.taus.len(),
            self.taus
                .iter()
                .zip(&self.values)
                .zip(&self.weights)
                .map(|((&t, &y), &w)| {
                    let s = sinc(om * t.abs());
                    w * (1.0 + a * s * s - y)
                }),
        )
    }

    fn jacobian(&self, u: &DVector<f64>) -> DMatrix<f64> {
        let (a, om) = Self::natural(u);
        let mut j = self.natural_jacobian(a, om);
        j.column_mut(0).scale_mut(sigmoid(u[0]));
        j.column_mut(1).scale_mut(om);
        j
    }
}

/// Which amplifiers are free in an `N_k` fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NkGeometry {
    /// `r1 = r2 = r`, `n1 = n2 = n`, orthogonal squeezing.
    Symmetric,
    /// `r2 = n2 = 0`: the second amplifier is off.
    SingleJpa,
}

struct NkProblem {
    kernels: Vec<f64>,
    values: Vec<f64>,
    weights: Vec<f64>,
    geometry: NkGeometry,
}

impl NkProblem {
    fn params(&self, r: f64, n: f64) -> (JpaParams, JpaParams) {
        let j1 = JpaParams { r, n, phi: 0.0 };
        let j2 = match self.geometry {
            NkGeometry::Symmetric => j1.orthogonal(),
            NkGeometry::SingleJpa => JpaParams::vacuum(),
        };
        (j1, j2)
    }

    fn model(&self, r: f64, n: f64, s: f64) -> f64 {
        let (j1, j2) = self.params(r, n);
        -0.5 + 0.5 / nk_bracket(&j1, &j2, s).max(1e-300).sqrt()
    }

    /// `(∂N_k/∂r, ∂N_k/∂n)` from the bracket derivatives.
    fn gradient(&self, r: f64, n: f64, s: f64) -> (f64, f64) {
        let (j1, j2) = self.params(r, n);
        let b = nk_bracket(&j1, &j2, s).max(1e-300);
        let dnk_db = -0.25 * b.powf(-1.5);
        let (n1, n2) = (j1.n, j2.n);
        let big_r = j1.r + j2.r;
        let c = big_r.cosh().powi(2);
        let d = (2.0 * big_r).sinh();
        let nt = (1.0 + 2.0 * n1) * (1.0 + 2.0 * n2);
        let sa = s.abs();
        let s2 = s * s;
        // ∂b/∂r_i is the same for both amplifiers
        let db_dri = nt * (2.0 * big_r).sinh() * (1.0 + s2) - nt * 2.0 * (2.0 * big_r).cosh() * sa;
        let core = c * (1.0 + s2) - d * sa;
        let sum = n1 + n2 + 1.0;
        let db_dn1 = 2.0 * (n1 - n2) + 2.0 * (1.0 + 2.0 * n2) * core - 2.0 * sum * s2;
        let db_dn2 = -2.0 * (n1 - n2) + 2.0 * (1.0 + 2.0 * n1) * core - 2.0 * sum * s2;
        match self.geometry {
            NkGeometry::Symmetric => (dnk_db * 2.0 * db_dri, dnk_db * (db_dn1 + db_dn2)),
            NkGeometry::SingleJpa => (dnk_db * db_dri, dnk_db * db_dn1),
        }
    }

    fn natural_jacobian(&self, r: f64, n: f64) -> DMatrix<f64> {
        let mut j = DMatrix::zeros(self.kernels.len(), 2);
        for (i, (&s, &w)) in self.kernels.iter().zip(&self.weights).enumerate() {
            let (dr, dn) = self.gradient(r, n, s);
            j[(i, 0)] = w * dr;
            j[(i, 1)] = w * dn;
        }
        j
    }
}

impl LeastSquaresProblem for NkProblem {
    fn residuals(&self, u: &DVector<f64>) -> DVector<f64> {
        let (r, n) = (softplus(u[0]), softplus(u[1]));
        DVector::from_iterator(
            self.kernels.len(),
            self.kernels
                .iter()
                .zip(&self.values)
                .zip(&self.weights)
                .map(|((&s, &y), &w)| w * (self.model(r, n, s) - y)),
        )
    }

    fn jacobian(&self, u: &DVector<f64>) -> DMatrix<f64> {
        let (r, n) = (softplus(u[0]), softplus(u[1]));
        let mut j = self.natural_jacobian(r, n);
        j.column_mut(0).scale_mut(sigmoid(u[0]));
        j.column_mut(1).scale_mut(sigmoid(u[1]));
        j
    }
}

/// Parameter covariance `s²·(JᵀJ)⁻¹` from a weighted natural Jacobian.
fn parameter_covariance(jac: &DMatrix<f64>, scale: f64) -> Option<DMatrix<f64>> {
    let jtj = jac.tr_mul(jac);
    let svd = jtj.clone().svd(false, false);
    let (max, min) = (svd.singular_values.max(), svd.singular_values.min());
    if !(min > 0.0) || min < 1e-12 * max {
        return None;
    }
    jtj.try_inverse().map(|inv| inv * scale)
}

fn select_best(reports: Vec<(LmReport, f64)>) -> (LmReport, f64) {
    // lowest cost; near-ties go to the smallest tie-break key
    let min_cost = reports.iter().map(|(r, _)| r.cost).fold(f64::INFINITY, f64::min);
    let tol = 1e-9 * min_cost + 1e-300;
    reports
        .into_iter()
        .filter(|(r, _)| r.cost <= min_cost + tol)
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one start")
}

fn require_points(curve: &DephasingCurve, kind: CurveKind) -> Result<()> {
    if curve.kind != kind {
        return Err(invalid(format!("expected a {kind:?} curve, got {:?}", curve.kind)));
    }
    if curve.len() < MIN_POINTS {
        return Err(invalid(format!(
            "need at least {MIN_POINTS} points, got {}",
            curve.len()
        )));
    }
    Ok(())
}

fn covariance_scale(weighted: bool, rss: f64, dof: usize) -> f64 {
    if weighted {
        1.0
    } else if dof > 0 {
        rss / dof as f64
    } else {
        f64::NAN
    }
}

fn rms_warning(options: &FitOptions, weighted: bool, rss: f64, n: usize) -> Option<String> {
    let rms = (rss / n as f64).sqrt();
    let limit = if weighted {
        options.rms_warning_weighted
    } else {
        options.rms_warning_unweighted
    };
    (rms > limit).then(|| format!("rms residual {rms:.4} exceeds {limit}; data may be inconsistent with the model"))
}

/// Default multistart rates: eight per decade across `[1e4, 1e8]` rad/s.
pub fn default_omega_starts() -> Vec<f64> {
    (0..=32).map(|k| 10f64.powf(4.0 + k as f64 / 8.0)).collect()
}

pub fn fit_g2(curve: &DephasingCurve, init: Option<G2Init>, options: &FitOptions) -> Result<FitResult> {
    require_points(curve, CurveKind::G2)?;
    let values: Vec<f64> = curve.values().collect();
    if values.iter().any(|&v| !(v > 0.0)) {
        return Err(invalid("g2 values must be positive"));
    }
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if hi - lo <= 1e-12 * hi.abs().max(1.0) {
        return Err(Error::Degenerate(
            "flat g2 trace: amplitude and bandwidth are not identifiable".into(),
        ));
    }
    let weighted = curve.has_stderr();
    let problem = G2Problem {
        taus: curve.taus().collect(),
        values,
        weights: weights(curve)?,
    };
    let amp0 = (hi - 1.0).max(1e-3);
    let starts: Vec<G2Init> = match init {
        Some(i) => vec![i],
        None => default_omega_starts()
            .into_iter()
            .map(|omega| G2Init { amplitude: amp0, omega })
            .collect(),
    };
    for s in &starts {
        if !(s.amplitude > 0.0) || !(s.omega > 0.0) {
            return Err(invalid("g2 initial amplitude and rate must be positive"));
        }
    }
    let reports: Vec<(LmReport, f64)> = starts
        .par_iter()
        .map(|s| {
            let x0 = DVector::from_vec(vec![softplus_inv(s.amplitude), s.omega.ln()]);
            let rep = minimize(&problem, x0, &options.lm);
            let omega = rep.x[1].exp();
            (rep, omega)
        })
        .collect();
    let (rep, _) = select_best(reports);
    let (amplitude, omega) = G2Problem::natural(&rep.x);
    if amplitude < 1e-12 {
        return Err(Error::Degenerate(
            "fitted g2 amplitude vanishes; bandwidth unidentifiable".into(),
        ));
    }

    let rss = 2.0 * rep.cost;
    let n = problem.taus.len();
    let dof = n.saturating_sub(2);
    let cov = parameter_covariance(
        &problem.natural_jacobian(amplitude, omega),
        covariance_scale(weighted, rss, dof),
    );
    let mut warnings = Vec::new();
    if cov.is_none() {
        warnings.push("parameter covariance is singular".to_string());
    }
    warnings.extend(rms_warning(options, weighted, rss, n));
    let se = |i: usize| cov.as_ref().map(|c| c[(i, i)].max(0.0).sqrt());
    Ok(FitResult {
        kind: CurveKind::G2,
        params: vec![
            ParamEstimate {
                name: "amplitude".into(),
                value: amplitude,
                stderr: se(0),
                fixed: false,
            },
            ParamEstimate {
                name: "omega".into(),
                value: omega,
                stderr: se(1),
                fixed: false,
            },
        ],
        covariance: cov.as_ref().map(matrix_rows),
        residual_norm: rss,
        reduced_chi_square: if dof > 0 { rss / dof as f64 } else { f64::NAN },
        n_points: n,
        n_iterations: rep.iterations,
        converged: rep.converged(),
        gradient_norm: rep.gradient_norm,
        squeezing_level_db: None,
        warnings,
    })
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NkInit {
    pub r: f64,
    pub n: f64,
}

pub fn default_nk_starts() -> Vec<NkInit> {
    let mut v = Vec::new();
    for r in [0.1, 0.5, 1.0, 1.5] {
        for n in [0.01, 0.1, 0.3] {
            v.push(NkInit { r, n });
        }
    }
    v
}

pub fn fit_nk(
    curve: &DephasingCurve,
    omega: f64,
    geometry: NkGeometry,
    init: Option<NkInit>,
    options: &FitOptions,
) -> Result<FitResult> {
    require_points(curve, CurveKind::Nk)?;
    let filter = FilterSpec::from_omega(omega)?;
    let all_w = weights(curve)?;
    let mut kernels = Vec::new();
    let mut values = Vec::new();
    let mut w = Vec::new();
    for (p, &wi) in curve.points().iter().zip(&all_w) {
        if options.first_lobe_only && p.tau.abs() > filter.first_zero() * (1.0 + 1e-12) {
            continue;
        }
        kernels.push(filter.kernel(p.tau));
        values.push(p.value);
        w.push(wi);
    }
    if kernels.len() < MIN_POINTS {
        return Err(invalid(format!(
            "need at least {MIN_POINTS} points inside the fitted delay range, got {}",
            kernels.len()
        )));
    }
    let weighted = curve.has_stderr();
    let problem = NkProblem {
        kernels,
        values,
        weights: w,
        geometry,
    };
    let starts = match init {
        Some(i) => vec![i],
        None => default_nk_starts(),
    };
    for s in &starts {
        if !(s.r > 0.0) || !(s.n > 0.0) {
            return Err(invalid("N_k initial r and n must be positive"));
        }
    }
    let reports: Vec<(LmReport, f64)> = starts
        .par_iter()
        .map(|s| {
            let rep = minimize(
                &problem,
                DVector::from_vec(vec![softplus_inv(s.r), softplus_inv(s.n)]),
                &options.lm,
            );
            let r = softplus(rep.x[0]);
            (rep, r)
        })
        .collect();
    let (rep, _) = select_best(reports);
    let (r, n) = (softplus(rep.x[0]), softplus(rep.x[1]));

    let rss = 2.0 * rep.cost;
    let npts = problem.kernels.len();
    let dof = npts.saturating_sub(2);
    let cov = parameter_covariance(&problem.natural_jacobian(r, n), covariance_scale(weighted, rss, dof));
    let mut warnings = Vec::new();
    if r < BOUNDARY {
        warnings.push("r at its lower bound; n is not identifiable from this trace".to_string());
    } else if n < BOUNDARY {
        warnings.push("n at its lower bound".to_string());
    }
    if cov.is_none() {
        warnings.push("parameter covariance is singular".to_string());
    }
    warnings.extend(rms_warning(options, weighted, rss, npts));
    let se = |i: usize| cov.as_ref().map(|c| c[(i, i)].max(0.0).sqrt());
    let level = squeezing_level(&JpaParams { r, n, phi: 0.0 }).db();
    Ok(FitResult {
        kind: CurveKind::Nk,
        params: vec![
            ParamEstimate {
                name: "r".into(),
                value: r,
                stderr: se(0),
                fixed: false,
            },
            ParamEstimate {
                name: "n".into(),
                value: n,
                stderr: se(1),
                fixed: false,
            },
            ParamEstimate {
                name: "omega".into(),
                value: omega,
                stderr: None,
                fixed: true,
            },
        ],
        covariance: cov.as_ref().map(matrix_rows),
        residual_norm: rss,
        reduced_chi_square: if dof > 0 { rss / dof as f64 } else { f64::NAN },
        n_points: npts,
        n_iterations: rep.iterations,
        converged: rep.converged(),
        gradient_norm: rep.gradient_norm,
        squeezing_level_db: Some(level),
        warnings,
    })
}

/// `g²` trace model for a given amplifier, for comparison with [`fit_g2`].
pub fn g2_model_of(params: &JpaParams, filter: &FilterSpec) -> Result<CurveModel> {
    Ok(CurveModel::G2 {
        amplitude: g2_closed_form(params, filter, 0.0)? - 1.0,
        omega: filter.omega,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dephasing::{linspace, synthetic_g2_curve, synthetic_nk_curve, CurvePoint};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};
    use std::f64::consts::PI;

    fn symmetric(r: f64, n: f64) -> (JpaParams, JpaParams) {
        let a = JpaParams::new(r, n, 0.0).unwrap();
        (a, a.orthogonal())
    }

    fn with_noise(curve: &DephasingCurve, sigma: f64, seed: u64) -> DephasingCurve {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dist = Normal::new(0.0, sigma).unwrap();
        let pts = curve
            .points()
            .iter()
            .map(|p| CurvePoint {
                tau: p.tau,
                value: p.value + dist.sample(&mut rng),
                stderr: None,
            })
            .collect();
        DephasingCurve::new(curve.kind, pts).unwrap()
    }

    fn median(mut v: Vec<f64>) -> f64 {
        v.sort_by(f64::total_cmp);
        let n = v.len();
        if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        }
    }

    fn g2_curve(omega: f64) -> DephasingCurve {
        let f = FilterSpec::from_omega(omega).unwrap();
        let j = JpaParams::new(1.0, 0.0, 0.0).unwrap();
        synthetic_g2_curve(&j, &f, &linspace(0.0, 2.0 * PI / omega, 50)).unwrap()
    }

    #[test]
    fn g2_noiseless_recovery() {
        let omega = 2.7e6;
        let fit = fit_g2(&g2_curve(omega), None, &FitOptions::default()).unwrap();
        assert!(fit.converged);
        let rel = (fit.value("omega").unwrap() - omega).abs() / omega;
        assert!(rel < 1e-8, "rel error {rel}");
        let amp = 2.0 + 1.0 / 1.0f64.sinh().powi(2);
        assert!((fit.value("amplitude").unwrap() - amp).abs() < 1e-8);
    }

    #[test]
    fn g2_noisy_recovery() {
        let omega = 2.7e6;
        let clean = g2_curve(omega);
        let errs: Vec<f64> = (0..20)
            .map(|seed| {
                let fit = fit_g2(&with_noise(&clean, 0.02, seed), None, &FitOptions::default()).unwrap();
                (fit.value("omega").unwrap() - omega).abs() / omega
            })
            .collect();
        assert!(median(errs) < 0.02);
    }

    #[test]
    fn g2_flat_curve_is_degenerate() {
        let pts = (0..10)
            .map(|i| CurvePoint {
                tau: i as f64 * 1e-7,
                value: 1.0,
                stderr: None,
            })
            .collect();
        let curve = DephasingCurve::new(CurveKind::G2, pts).unwrap();
        assert!(matches!(
            fit_g2(&curve, None, &FitOptions::default()),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn g2_needs_enough_points() {
        let f = FilterSpec::from_omega(1e6).unwrap();
        let j = JpaParams::new(1.0, 0.0, 0.0).unwrap();
        let c = synthetic_g2_curve(&j, &f, &[0.0, 1e-7, 2e-7]).unwrap();
        assert!(fit_g2(&c, None, &FitOptions::default()).is_err());
    }

    #[test]
    fn g2_time_rescaling() {
        let omega = 2.7e6;
        let clean = with_noise(&g2_curve(omega), 0.02, 7);
        let k = 1e3;
        let scaled = DephasingCurve::new(
            CurveKind::G2,
            clean
                .points()
                .iter()
                .map(|p| CurvePoint { tau: p.tau * k, ..*p })
                .collect(),
        )
        .unwrap();
        let init = G2Init {
            amplitude: 2.0,
            omega: 2e6,
        };
        let a = fit_g2(&clean, Some(init), &FitOptions::default()).unwrap();
        let b = fit_g2(
            &scaled,
            Some(G2Init {
                omega: init.omega / k,
                ..init
            }),
            &FitOptions::default(),
        )
        .unwrap();
        let (wa, wb) = (a.value("omega").unwrap(), b.value("omega").unwrap());
        assert!((wb * k - wa).abs() / wa < 1e-9);
        assert!((a.residual_norm - b.residual_norm).abs() <= 1e-9 * a.residual_norm);
    }

    #[test]
    fn equal_weights_match_unweighted() {
        let omega = 2.7e6;
        let noisy = with_noise(&g2_curve(omega), 0.02, 3);
        let weighted = DephasingCurve::new(
            CurveKind::G2,
            noisy
                .points()
                .iter()
                .map(|p| CurvePoint {
                    stderr: Some(0.02),
                    ..*p
                })
                .collect(),
        )
        .unwrap();
        let a = fit_g2(&noisy, None, &FitOptions::default()).unwrap();
        let b = fit_g2(&weighted, None, &FitOptions::default()).unwrap();
        assert!((a.value("omega").unwrap() - b.value("omega").unwrap()).abs() / omega < 1e-8);
        assert!((a.value("amplitude").unwrap() - b.value("amplitude").unwrap()).abs() < 1e-8);
    }

    #[test]
    fn nk_noiseless_recovery_grid() {
        let f = FilterSpec::from_bandwidth_hz(430e3).unwrap();
        let taus = linspace(0.0, f.first_zero(), 40);
        for r in [0.3, 0.8, 1.2] {
            for n in [0.0, 0.1, 0.3] {
                let (a, b) = symmetric(r, n);
                let curve = synthetic_nk_curve(&a, &b, &f, &taus).unwrap();
                let fit = fit_nk(&curve, f.omega, NkGeometry::Symmetric, None, &FitOptions::default()).unwrap();
                assert!(fit.converged);
                let (rh, nh) = (fit.value("r").unwrap(), fit.value("n").unwrap());
                assert!((rh - r).abs() / r < 1e-6, "r={r} n={n}: r̂={rh}");
                if n > 0.0 {
                    assert!((nh - n).abs() / n < 1e-6, "r={r} n={n}: n̂={nh}");
                } else {
                    assert!(nh < 1e-6, "r={r} n=0: n̂={nh}");
                }
            }
        }
    }

    #[test]
    fn nk_single_jpa_recovery() {
        let f = FilterSpec::from_bandwidth_hz(430e3).unwrap();
        let a = JpaParams::new(0.9, 0.1, 0.0).unwrap();
        let curve = synthetic_nk_curve(&a, &JpaParams::vacuum(), &f, &linspace(0.0, f.first_zero(), 30)).unwrap();
        let fit = fit_nk(&curve, f.omega, NkGeometry::SingleJpa, None, &FitOptions::default()).unwrap();
        assert!((fit.value("r").unwrap() - 0.9).abs() < 1e-6);
        assert!((fit.value("n").unwrap() - 0.1).abs() < 1e-6);
        assert!(fit.get("omega").unwrap().fixed);
    }

    #[test]
    fn nk_noisy_recovery() {
        let f = FilterSpec::from_bandwidth_hz(430e3).unwrap();
        let (a, b) = symmetric(0.8, 0.05);
        let clean = synthetic_nk_curve(&a, &b, &f, &linspace(0.0, f.first_zero(), 40)).unwrap();
        let (mut er, mut en) = (Vec::new(), Vec::new());
        for seed in 0..20 {
            let fit = fit_nk(
                &with_noise(&clean, 0.01, 100 + seed),
                f.omega,
                NkGeometry::Symmetric,
                None,
                &FitOptions::default(),
            )
            .unwrap();
            er.push((fit.value("r").unwrap() - 0.8).abs() / 0.8);
            en.push((fit.value("n").unwrap() - 0.05).abs());
        }
        assert!(median(er) < 0.02);
        assert!(median(en) < 0.01);
    }

    #[test]
    fn nk_vacuum_trace_flags_boundary() {
        let f = FilterSpec::from_bandwidth_hz(430e3).unwrap();
        let pts = linspace(0.0, f.first_zero(), 20)
            .into_iter()
            .map(|tau| CurvePoint {
                tau,
                value: 0.0,
                stderr: None,
            })
            .collect();
        let curve = DephasingCurve::new(CurveKind::Nk, pts).unwrap();
        let fit = fit_nk(&curve, f.omega, NkGeometry::Symmetric, None, &FitOptions::default()).unwrap();
        assert!(fit.value("r").unwrap() < 1e-3);
        assert!(!fit.warnings.is_empty(), "{:?}", fit);
    }

    #[test]
    fn residual_report_examples() {
        let f = FilterSpec::from_bandwidth_hz(430e3).unwrap();
        let (a, b) = symmetric(0.5, 0.1);
        let curve = synthetic_nk_curve(&a, &b, &f, &linspace(0.0, 2e-6, 8)).unwrap();
        let model = CurveModel::Nk {
            j1: a,
            j2: b,
            filter: f,
        };
        let rep = residual_report(&curve, &model, 2).unwrap();
        assert!(rep.residuals.iter().all(|r| *r == 0.0));

        let mut pts = curve.points().to_vec();
        pts[3].value += 0.1;
        let bumped = DephasingCurve::new(CurveKind::Nk, pts).unwrap();
        let rep = residual_report(&bumped, &model, 2).unwrap();
        assert!((rep.residuals[3] - 0.1).abs() < 1e-12);
        assert_eq!(rep.dof, 6);
    }

    #[test]
    fn chi_square_matches_degrees_of_freedom() {
        let omega = 2.7e6;
        let sigma = 0.02;
        let clean = g2_curve(omega);
        let mut chis = Vec::new();
        for seed in 0..20 {
            let noisy = with_noise(&clean, sigma, 500 + seed);
            let w = DephasingCurve::new(
                CurveKind::G2,
                noisy
                    .points()
                    .iter()
                    .map(|p| CurvePoint {
                        stderr: Some(sigma),
                        ..*p
                    })
                    .collect(),
            )
            .unwrap();
            let fit = fit_g2(&w, None, &FitOptions::default()).unwrap();
            let model = CurveModel::G2 {
                amplitude: fit.value("amplitude").unwrap(),
                omega: fit.value("omega").unwrap(),
            };
            let rep = residual_report(&w, &model, 2).unwrap();
            assert!((rep.chi_square - fit.residual_norm).abs() < 1e-9 * rep.chi_square);
            chis.push(rep.chi_square);
        }
        let dof = 48.0;
        assert!((median(chis) - dof).abs() < 3.0 * (2.0 * dof).sqrt());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn nk_jacobian_matches_central_differences(r in 0.05..1.5f64, n in 0.01..0.5f64, s in 0.0..1.0f64, sym in any::<bool>()) {
            let geometry = if sym { NkGeometry::Symmetric } else { NkGeometry::SingleJpa };
            let p = NkProblem { kernels: vec![s], values: vec![0.0], weights: vec![1.0], geometry };
            let (dr, dn) = p.gradient(r, n, s);
            let (hr, hn) = (1e-6 * r.max(0.1), 1e-6 * n.max(0.1));
            let fdr = (p.model(r + hr, n, s) - p.model(r - hr, n, s)) / (2.0 * hr);
            let fdn = (p.model(r, n + hn, s) - p.model(r, n - hn, s)) / (2.0 * hn);
            prop_assert!((dr - fdr).abs() <= 1e-5 * fdr.abs().max(1e-3), "dr {} vs {}", dr, fdr);
            prop_assert!((dn - fdn).abs() <= 1e-5 * fdn.abs().max(1e-3), "dn {} vs {}", dn, fdn);
        }

        #[test]
        fn g2_jacobian_matches_central_differences(amp in 0.1..10.0f64, omega in 1e5..1e7f64, x in 0.0..(3.0 * PI)) {
            let tau = x / omega;
            let p = G2Problem { taus: vec![tau], values: vec![0.0], weights: vec![1.0] };
            let j = p.natural_jacobian(amp, omega);
            let f = |a: f64, w: f64| { let s = sinc(w * tau); 1.0 + a * s * s };
            let (ha, hw) = (1e-6 * amp, 1e-6 * omega);
            let fda = (f(amp + ha, omega) - f(amp - ha, omega)) / (2.0 * ha);
            let fdw = (f(amp, omega + hw) - f(amp, omega - hw)) / (2.0 * hw);
            prop_assert!((j[(0, 0)] - fda).abs() <= 1e-5 * fda.abs().max(1e-6));
            prop_assert!((j[(0, 1)] - fdw).abs() <= 1e-5 * fdw.abs().max(1e-6 / omega));
        }
    }
}
