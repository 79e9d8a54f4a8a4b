//! Finite-delay laws for single-mode intensity correlations and two-mode
//! entanglement, with the covariance-level delay model they derive from.
//!
//! A delay `τ` in one detection path multiplies the cross-covariance between
//! the two hybrid-ring outputs by `sinc(Ωτ)`, the normalized autocorrelation
//! of a boxcar measurement filter. The diagonal blocks are delay independent.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gaussian::{apply, beam_splitter_50_50, negativity_kernel_from_cov, CovarianceMatrix};
use crate::jpa::{quadrature_variances, squeezed_thermal_cov, JpaParams};

/// Measurement filter. `omega` multiplies `τ` inside the sinc kernel; a
/// boxcar of full width `B` hertz gives `omega = π·B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub omega: f64,
    pub bandwidth_hz: f64,
}

impl FilterSpec {
    pub fn from_omega(omega: f64) -> Result<Self> {
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(invalid(format!("filter rate must be positive, got {omega}")));
        }
        Ok(Self {
            omega,
            bandwidth_hz: omega / PI,
        })
    }

    pub fn from_bandwidth_hz(bandwidth_hz: f64) -> Result<Self> {
        Self::from_omega(PI * bandwidth_hz)
    }

    /// First zero of the sinc kernel.
    pub fn first_zero(&self) -> f64 {
        PI / self.omega
    }

    pub fn kernel(&self, tau: f64) -> f64 {
        sinc(self.omega * tau.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveKind {
    G2,
    Nk,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub tau: f64,
    pub value: f64,
    pub stderr: Option<f64>,
}

/// The state and filter a synthetic curve was generated from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveSource {
    pub j1: JpaParams,
    pub j2: JpaParams,
    pub filter: FilterSpec,
}

/// Sampled `(τ, value, stderr)` trace of `g²` or `N_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DephasingCurve {
    pub kind: CurveKind,
    points: Vec<CurvePoint>,
    pub source: Option<CurveSource>,
}

impl DephasingCurve {
    pub fn new(kind: CurveKind, points: Vec<CurvePoint>) -> Result<Self> {
        for w in points.windows(2) {
            if !(w[1].tau > w[0].tau) {
                return Err(invalid(format!(
                    "delays must be strictly increasing ({} then {})",
                    w[0].tau, w[1].tau
                )));
            }
        }
        let with_err = points.iter().filter(|p| p.stderr.is_some()).count();
        if with_err != 0 && with_err != points.len() {
            return Err(invalid("stderr must be given for all points or none"));
        }
        for p in &points {
            if !p.tau.is_finite() || !p.value.is_finite() {
                return Err(invalid("curve entries must be finite"));
            }
            if let Some(e) = p.stderr {
                if !(e >= 0.0) || !e.is_finite() {
                    return Err(invalid(format!("stderr must be finite and >= 0, got {e}")));
                }
            }
        }
        Ok(Self {
            kind,
            points,
            source: None,
        })
    }

    pub fn with_source(mut self, source: CurveSource) -> Self {
        self.source = Some(source);
        self
    }

    pub fn points(&self) -> &[CurvePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn taus(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.tau)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.value)
    }

    pub fn has_stderr(&self) -> bool {
        self.points.first().is_some_and(|p| p.stderr.is_some())
    }
}

/// `sin(x)/x` with `sinc(0) = 1`.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 * (1.0 - x2 / 20.0)
    } else {
        x.sin() / x
    }
}

/// `d sinc / dx`.
pub fn sinc_derivative(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        -x / 3.0 * (1.0 - x2 / 10.0)
    } else {
        (x.cos() - x.sin() / x) / x
    }
}

/// Mean photon number of a squeezed thermal mode.
pub fn mean_photons(params: &JpaParams) -> f64 {
    (1.0 + 2.0 * params.n) * (2.0 * params.r).cosh() / 2.0 - 0.5
}

fn check_not_vacuum(params: &JpaParams) -> Result<()> {
    params.validate()?;
    if !(mean_photons(params) > 1e-14) {
        return Err(Error::Degenerate("g2 is undefined for the vacuum (no photons)".into()));
    }
    Ok(())
}

/// `g²(0) − 1` written with quadrature variances in the vacuum-variance-½
/// convention, i.e. half of [`quadrature_variances`].
pub fn g2_amplitude(params: &JpaParams) -> Result<f64> {
    check_not_vacuum(params)?;
    let (s, a) = quadrature_variances(params);
    let (s, a) = (s / 2.0, a / 2.0);
    let den = 1.0 - s - a;
    Ok((1.0 + 2.0 * s * (s - 1.0) + 2.0 * a * (a - 1.0)) / (den * den))
}

pub fn g2_closed_form(params: &JpaParams, filter: &FilterSpec, tau: f64) -> Result<f64> {
    let k = filter.kernel(tau);
    Ok(1.0 + k * k * g2_amplitude(params)?)
}

/// Gaussian moment factorization `1 + sinc²·(N̄² + |M|²)/N̄²`.
pub fn g2_wick_oracle(params: &JpaParams, filter: &FilterSpec, tau: f64) -> Result<f64> {
    check_not_vacuum(params)?;
    let nbar = mean_photons(params);
    let m = (1.0 + 2.0 * params.n) * (2.0 * params.r).sinh() / 2.0;
    let k = filter.kernel(tau);
    Ok(1.0 + k * k * (nbar * nbar + m * m) / (nbar * nbar))
}

/// Hybrid-ring output of two JPAs at zero delay.
pub fn tms_cov(j1: &JpaParams, j2: &JpaParams) -> Result<CovarianceMatrix> {
    let input = squeezed_thermal_cov(j1)?.direct_sum(&squeezed_thermal_cov(j2)?);
    apply(&beam_splitter_50_50(), &input)
}

/// Scales the inter-mode blocks of a two-mode covariance by `s`.
pub fn scale_cross_blocks(state: &CovarianceMatrix, s: f64) -> Result<CovarianceMatrix> {
    if state.n_modes() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: state.n_modes(),
        });
    }
    let mut m = state.matrix().clone();
    for i in 0..2 {
        for j in 2..4 {
            m[(i, j)] *= s;
            m[(j, i)] *= s;
        }
    }
    CovarianceMatrix::new(m)
}

/// Output covariance seen when path 2 is delayed by `tau`.
pub fn delayed_tms_cov(j1: &JpaParams, j2: &JpaParams, filter: &FilterSpec, tau: f64) -> Result<CovarianceMatrix> {
    scale_cross_blocks(&tms_cov(j1, j2)?, filter.kernel(tau))
}

/// The bracket under the inverse square root of the closed-form kernel,
/// equal to `ν̃²`, as a function of the kernel value `s`.
pub fn nk_bracket(j1: &JpaParams, j2: &JpaParams, s: f64) -> f64 {
    let (n1, n2) = (j1.n, j2.n);
    let nt = (1.0 + 2.0 * n1) * (1.0 + 2.0 * n2);
    let c = (j1.r + j2.r).cosh().powi(2);
    let d = (2.0 * j1.r + 2.0 * j2.r).sinh();
    let dn = n1 - n2;
    let sum = n1 + n2 + 1.0;
    dn * dn + nt * c + (nt * c - sum * sum) * s * s - nt * d * s.abs()
}

/// Closed-form negativity kernel of the delayed two-mode state.
///
/// Assumes the JPAs squeeze along orthogonal axes; their `phi` is ignored.
/// Use `r2 = n2 = 0` for a single active JPA.
pub fn nk_closed_form(j1: &JpaParams, j2: &JpaParams, filter: &FilterSpec, tau: f64) -> Result<f64> {
    nk_from_kernel(j1, j2, filter.kernel(tau))
}

pub fn nk_from_kernel(j1: &JpaParams, j2: &JpaParams, s: f64) -> Result<f64> {
    j1.validate()?;
    j2.validate()?;
    let b = nk_bracket(j1, j2, s);
    if !(b > 0.0) {
        return Err(Error::Degenerate(format!("negativity bracket {b} is not positive")));
    }
    Ok(-0.5 + 0.5 / b.sqrt())
}

/// Negativity kernel from an eigensolve of the delayed covariance.
pub fn nk_numeric_oracle(j1: &JpaParams, j2: &JpaParams, filter: &FilterSpec, tau: f64) -> Result<f64> {
    negativity_kernel_from_cov(&delayed_tms_cov(j1, j2, filter, tau)?)
}

/// Kernel argument `x* = Ω·τ_d` at which entanglement vanishes, located on
/// the first sinc lobe. Independent of the filter.
pub fn threshold_argument(j1: &JpaParams, j2: &JpaParams) -> Result<f64> {
    let f = |x: f64| nk_from_kernel(j1, j2, sinc(x));
    if f(0.0)? <= 0.0 {
        return Err(Error::NoSolution("state is not entangled at zero delay".into()));
    }
    // bracket the first crossing, then bisect to machine precision
    const SCAN: usize = 64;
    let mut lo = 0.0;
    let mut hi = PI;
    for i in 1..=SCAN {
        let x = PI * i as f64 / SCAN as f64;
        if f(x)? <= 0.0 {
            hi = x;
            break;
        }
        lo = x;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Largest delay for which the state remains entangled.
pub fn dephasing_time(j1: &JpaParams, j2: &JpaParams, filter: &FilterSpec) -> Result<f64> {
    Ok(threshold_argument(j1, j2)? / filter.omega)
}

pub fn synthetic_nk_curve(j1: &JpaParams, j2: &JpaParams, filter: &FilterSpec, taus: &[f64]) -> Result<DephasingCurve> {
    let points = taus
        .iter()
        .map(|&tau| {
            Ok(CurvePoint {
                tau,
                value: nk_closed_form(j1, j2, filter, tau)?,
                stderr: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DephasingCurve::new(CurveKind::Nk, points)?.with_source(CurveSource {
        j1: *j1,
        j2: *j2,
        filter: *filter,
    }))
}

pub fn synthetic_g2_curve(j: &JpaParams, filter: &FilterSpec, taus: &[f64]) -> Result<DephasingCurve> {
    let points = taus
        .iter()
        .map(|&tau| {
            Ok(CurvePoint {
                tau,
                value: g2_closed_form(j, filter, tau)?,
                stderr: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DephasingCurve::new(CurveKind::G2, points)?.with_source(CurveSource {
        j1: *j,
        j2: JpaParams::vacuum(),
        filter: *filter,
    }))
}

/// `n` evenly spaced points on `[start, stop]`.
pub fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..n)
            .map(|i| start + (stop - start) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::smallest_pt_eigenvalue;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn p(r: f64, n: f64) -> JpaParams {
        JpaParams::new(r, n, 0.0).unwrap()
    }

    fn pair(r1: f64, n1: f64, r2: f64, n2: f64) -> (JpaParams, JpaParams) {
        (p(r1, n1), JpaParams::new(r2, n2, PI).unwrap())
    }

    fn filter() -> FilterSpec {
        FilterSpec::from_bandwidth_hz(430e3).unwrap()
    }

    /// Taylor series of sin(x)/x summed in double-double-free form; exact
    /// enough for |x| < 1e-3 where terms fall off by x²/20 per step.
    fn sinc_series(x: f64) -> f64 {
        let mut term = 1.0;
        let mut sum = 0.0;
        for k in 1..12 {
            sum += term;
            term *= -x * x / ((2 * k) as f64 * (2 * k + 1) as f64);
        }
        sum
    }

    #[test]
    fn sinc_values() {
        assert_eq!(sinc(0.0), 1.0);
        assert!(sinc(PI).abs() < 1e-15);
        assert_eq!(sinc(-0.7), sinc(0.7));
        for x in [1e-8, 3e-5, 9.9e-5, 1.01e-4, 1e-3] {
            assert!(((sinc(x) - sinc_series(x)) / sinc_series(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn sinc_derivative_matches_difference() {
        for x in [1e-6, 5e-5, 0.3, 1.5, 4.0] {
            let h = 1e-6;
            let fd = (sinc(x + h) - sinc(x - h)) / (2.0 * h);
            assert!((sinc_derivative(x) - fd).abs() < 1e-8, "x={x}");
        }
    }

    #[test]
    fn g2_limits() {
        let f = filter();
        let g = g2_closed_form(&p(1.0, 0.0), &f, 0.0).unwrap();
        assert_relative_eq!(g, 3.0 + 1.0 / 1.0f64.sinh().powi(2), epsilon = 1e-12);
        assert_relative_eq!(g, 3.724061660966311, epsilon = 1e-9);
        assert_eq!(g2_closed_form(&p(0.7, 0.1), &f, f.first_zero()).unwrap(), 1.0);
        assert_relative_eq!(g2_closed_form(&p(0.0, 0.3), &f, 0.0).unwrap(), 2.0, epsilon = 1e-12);
        assert!(matches!(
            g2_closed_form(&p(0.0, 0.0), &f, 0.0),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn g2_wick_examples() {
        let f = filter();
        let g0 = g2_wick_oracle(&p(0.5, 0.0), &f, 0.0).unwrap();
        assert_relative_eq!(g0, 2.0 + 1.0 / 0.5f64.tanh().powi(2), epsilon = 1e-12);
        assert_relative_eq!(g0, 6.682694376831169, epsilon = 1e-9);
        // find tau with sinc = 0.5: x ≈ 1.895494267
        let mut lo: f64 = 0.0;
        let mut hi = PI;
        for _ in 0..100 {
            let m = 0.5 * (lo + hi);
            if m.sin() / m > 0.5 {
                lo = m
            } else {
                hi = m
            }
        }
        let tau = lo / f.omega;
        let g = g2_wick_oracle(&p(0.5, 0.0), &f, tau).unwrap();
        assert_relative_eq!(g, 1.0 + 0.25 * (g0 - 1.0), epsilon = 1e-12);
        let j = p(1.0, 0.2);
        assert!((g2_wick_oracle(&j, &f, 0.0).unwrap() - g2_closed_form(&j, &f, 0.0).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn delayed_cov_examples() {
        let f = filter();
        let (a, b) = pair(0.6, 0.1, 0.6, 0.1);
        assert_eq!(delayed_tms_cov(&a, &b, &f, 0.0).unwrap(), tms_cov(&a, &b).unwrap());
        let at_zero = delayed_tms_cov(&a, &b, &f, f.first_zero()).unwrap();
        assert!(at_zero.block(0, 1).amax() < 1e-15);
        assert!(negativity_kernel_from_cov(&at_zero).unwrap() <= 0.0);

        let r = 0.65;
        let (a, b) = pair(r, 0.0, r, 0.0);
        for tau in [0.0, 3e-7, 9e-7, 2e-6] {
            let s = f.kernel(tau);
            let nu = smallest_pt_eigenvalue(&delayed_tms_cov(&a, &b, &f, tau).unwrap()).unwrap();
            assert_relative_eq!(nu, (2.0 * r).cosh() - (2.0 * r).sinh() * s.abs(), max_relative = 1e-10);
        }
    }

    #[test]
    fn delayed_cov_is_physical_and_even() {
        let f = filter();
        let (a, b) = pair(1.1, 0.2, 0.4, 0.05);
        for tau in linspace(0.0, 3.0 * f.first_zero(), 31) {
            let v = delayed_tms_cov(&a, &b, &f, tau).unwrap();
            assert!(v.is_physical());
            assert_eq!(v, delayed_tms_cov(&a, &b, &f, -tau).unwrap());
        }
    }

    #[test]
    fn nk_examples() {
        let f = filter();
        let (a, b) = pair(0.0, 0.0, 0.0, 0.0);
        for tau in [0.0, 1e-6, 5e-6] {
            assert!(nk_closed_form(&a, &b, &f, tau).unwrap().abs() < 1e-15);
        }
        let r = 0.65624;
        let (a, b) = pair(r, 0.0, r, 0.0);
        let nk0 = nk_closed_form(&a, &b, &f, 0.0).unwrap();
        assert_relative_eq!(nk0, nk_numeric_oracle(&a, &b, &f, 0.0).unwrap(), epsilon = 1e-9);
    }

    #[test]
    fn nk_symmetric_dephasing_uses_pair_squeezing() {
        // r1 = r2 = r gives ν̃(0) = e^{-2r}: the two-mode squeezing equals
        // each JPA's single-mode squeezing.
        let f = filter();
        let r = 0.65624;
        let (a, b) = pair(r, 0.0, r, 0.0);
        let nk0 = nk_closed_form(&a, &b, &f, 0.0).unwrap();
        assert_relative_eq!(nk0, 0.5 * ((2.0 * r).exp() - 1.0), epsilon = 1e-12);
        assert_relative_eq!(nk0, 1.3576882148, epsilon = 1e-9);
        let inf = nk_from_kernel(&a, &b, 0.0).unwrap();
        assert_relative_eq!(inf, -0.5 + 0.5 / (2.0 * r).cosh(), epsilon = 1e-12);
        assert_relative_eq!(inf, -0.2490292553, epsilon = 1e-9);
    }

    #[test]
    fn nk_oracle_examples() {
        let f = filter();
        let (a, b) = pair(0.9, 0.1, 0.0, 0.0);
        assert!((nk_closed_form(&a, &b, &f, 0.0).unwrap() - nk_numeric_oracle(&a, &b, &f, 0.0).unwrap()).abs() < 1e-9);

        let (a, b) = pair(0.7, 0.05, 0.5, 0.12);
        // sinc(x) = 0.3 at x ≈ 2.4746
        let mut lo: f64 = 0.0;
        let mut hi = PI;
        for _ in 0..100 {
            let m = 0.5 * (lo + hi);
            if sinc(m) > 0.3 {
                lo = m
            } else {
                hi = m
            }
        }
        let tau = lo / f.omega;
        assert!((f.kernel(tau) - 0.3).abs() < 1e-12);
        assert!((nk_closed_form(&a, &b, &f, tau).unwrap() - nk_numeric_oracle(&a, &b, &f, tau).unwrap()).abs() < 1e-9);

        let (a, b) = pair(0.0, 0.4, 0.0, 0.1);
        for tau in [0.0, 1e-6] {
            assert!(nk_closed_form(&a, &b, &f, tau).unwrap() <= 0.0);
            assert!(nk_numeric_oracle(&a, &b, &f, tau).unwrap() <= 0.0);
        }
    }

    #[test]
    fn dephasing_time_examples() {
        let f = filter();
        let r = 0.65624;
        let (a, b) = pair(r, 0.0, r, 0.0);
        let td = dephasing_time(&a, &b, &f).unwrap();
        assert!((sinc(f.omega * td) - r.tanh()).abs() < 1e-12);
        assert_relative_eq!(f.omega * td, 1.7178131, epsilon = 1e-6);
        assert_relative_eq!(td, 1.2716207e-6, max_relative = 1e-6);

        let (a, b) = pair(1e-4, 0.0, 1e-4, 0.0);
        let td = dephasing_time(&a, &b, &f).unwrap();
        assert!(td > 0.999 * f.first_zero() && td <= f.first_zero());

        let (a, b) = pair(0.0, 0.1, 0.0, 0.1);
        assert!(matches!(dephasing_time(&a, &b, &f), Err(Error::NoSolution(_))));
    }

    #[test]
    fn dephasing_time_decreases_with_squeezing() {
        let f = filter();
        let mut prev = f64::INFINITY;
        for r in linspace(0.1, 1.2, 12) {
            let (a, b) = pair(r, 0.0, r, 0.0);
            let td = dephasing_time(&a, &b, &f).unwrap();
            assert!(td < prev);
            prev = td;
        }
    }

    #[test]
    fn noise_moves_the_threshold_as_the_model_predicts() {
        // symmetric case: ν̃ = g (cosh 2r − s sinh 2r), so the threshold
        // kernel is (cosh 2r − 1/g) / sinh 2r and does depend on n.
        let f = filter();
        let r = 0.6;
        let mut taus = Vec::new();
        for n in [0.0, 0.2] {
            let (a, b) = pair(r, n, r, n);
            let g = 1.0 + 2.0 * n;
            let s_star = ((2.0 * r).cosh() - 1.0 / g) / (2.0 * r).sinh();
            let td = dephasing_time(&a, &b, &f).unwrap();
            assert!((sinc(f.omega * td) - s_star).abs() < 1e-12);
            taus.push(td);
        }
        assert!(taus[1] < taus[0]);
    }

    #[test]
    fn curve_validation() {
        let pt = |tau, value| CurvePoint {
            tau,
            value,
            stderr: None,
        };
        assert!(DephasingCurve::new(CurveKind::Nk, vec![pt(0.0, 1.0), pt(0.0, 1.0)]).is_err());
        let mixed = vec![
            pt(0.0, 1.0),
            CurvePoint {
                tau: 1.0,
                value: 1.0,
                stderr: Some(0.1),
            },
        ];
        assert!(DephasingCurve::new(CurveKind::Nk, mixed).is_err());
        let neg = vec![CurvePoint {
            tau: 0.0,
            value: 1.0,
            stderr: Some(-0.1),
        }];
        assert!(DephasingCurve::new(CurveKind::Nk, neg).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn closed_form_matches_eigensolve(r1 in 0.0..1.5f64, r2 in 0.0..1.5f64, n1 in 0.0..0.5f64, n2 in 0.0..0.5f64, x in 0.0..(3.0 * PI)) {
            let f = filter();
            let (a, b) = pair(r1, n1, r2, n2);
            let tau = x / f.omega;
            let cf = nk_closed_form(&a, &b, &f, tau).unwrap();
            let num = nk_numeric_oracle(&a, &b, &f, tau).unwrap();
            prop_assert!((cf - num).abs() < 1e-9, "{} vs {}", cf, num);
        }

        #[test]
        fn g2_forms_agree_and_bunch(r in 0.01..1.5f64, n in 0.0..0.5f64, x in 0.0..(3.0 * PI)) {
            let f = filter();
            let j = p(r, n);
            let tau = x / f.omega;
            let a = g2_closed_form(&j, &f, tau).unwrap();
            let b = g2_wick_oracle(&j, &f, tau).unwrap();
            prop_assert!((a - b).abs() < 1e-12 * a.max(1.0));
            prop_assert!(a >= 1.0);
        }

        #[test]
        fn nk_depends_on_kernel_magnitude(r1 in 0.0..1.5f64, r2 in 0.0..1.5f64, n in 0.0..0.5f64, x in (PI + 0.01)..(2.0 * PI - 0.01)) {
            // second lobe (sinc < 0) vs the first-lobe point with the same |sinc|
            let f = filter();
            let (a, b) = pair(r1, n, r2, n);
            let target = sinc(x).abs();
            let mut lo: f64 = 0.0;
            let mut hi = PI;
            for _ in 0..100 {
                let m = 0.5 * (lo + hi);
                if sinc(m) > target { lo = m } else { hi = m }
            }
            let second = nk_closed_form(&a, &b, &f, x / f.omega).unwrap();
            let first = nk_closed_form(&a, &b, &f, lo / f.omega).unwrap();
            prop_assert!((second - first).abs() < 1e-9);
            prop_assert!((second - nk_numeric_oracle(&a, &b, &f, x / f.omega).unwrap()).abs() < 1e-9);
        }

        #[test]
        fn nk_non_increasing_on_first_lobe(r1 in 0.0..1.5f64, r2 in 0.0..1.5f64, n1 in 0.0..0.5f64, n2 in 0.0..0.5f64) {
            let f = filter();
            let (a, b) = pair(r1, n1, r2, n2);
            let mut prev = f64::INFINITY;
            for tau in linspace(0.0, f.first_zero(), 50) {
                let v = nk_closed_form(&a, &b, &f, tau).unwrap();
                prop_assert!(v <= prev + 1e-12);
                prev = v;
            }
        }
    }
}
