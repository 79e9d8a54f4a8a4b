//! Monte Carlo model of the dual-path measurement.
//!
//! Each record is synthesized in the frequency domain: every bin inside the
//! boxcar band gets an independent complex Gaussian draw whose covariance is
//! the hybrid-ring output state, plus independent amplifier noise per chain.
//! Bins straddling the band edge are weighted by their overlap so the
//! spectrum integrates to exactly `B`. Path 2 is delayed by a phase ramp and
//! an inverse FFT yields the complex envelope `q + i·p` of each chain.
//!
//! Every record draws from its own ChaCha stream keyed by the master seed and
//! the record index, and per-record moments are reduced in index order, so
//! results do not depend on the number of worker threads.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, Matrix2, Matrix4};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::dephasing::{tms_cov, CurveKind, CurvePoint, DephasingCurve};
use crate::error::{Error, Result};
use crate::gaussian::{negativity_kernel_from_cov, CovarianceMatrix};
use crate::jpa::JpaParams;

/// Carrier frequency of the squeezed modes; metadata only.
pub const DEFAULT_CARRIER_HZ: f64 = 5.323e9;

/// Jackknife blocks used for standard errors; at most this many, at least ten.
const MAX_BATCHES: usize = 20;
const MIN_BATCHES: usize = 10;

fn default_carrier() -> f64 {
    DEFAULT_CARRIER_HZ
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub j1: JpaParams,
    pub j2: JpaParams,
    /// Full width of the boxcar measurement band.
    pub bandwidth_hz: f64,
    pub sample_rate_hz: f64,
    pub n_samples: usize,
    pub n_records: usize,
    /// Photons added by each amplification chain.
    pub amp_noise_photons: f64,
    #[serde(default)]
    pub delay_s: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_carrier")]
    pub carrier_hz: f64,
}

fn config_err(field: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        field: field.to_string(),
        reason: reason.into(),
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, j) in [("j1", &self.j1), ("j2", &self.j2)] {
            if !(j.r >= 0.0) || !j.r.is_finite() {
                return Err(config_err(&format!("{name}.r"), "must be finite and >= 0"));
            }
            if !(j.n >= 0.0) || !j.n.is_finite() {
                return Err(config_err(&format!("{name}.n"), "must be finite and >= 0"));
            }
            if !j.phi.is_finite() {
                return Err(config_err(&format!("{name}.phi"), "must be finite"));
            }
        }
        if !(self.bandwidth_hz > 0.0) || !self.bandwidth_hz.is_finite() {
            return Err(config_err("bandwidth_hz", "must be positive"));
        }
        if !(self.sample_rate_hz >= 8.0 * self.bandwidth_hz) || !self.sample_rate_hz.is_finite() {
            return Err(config_err("sample_rate_hz", "must be at least 8 x bandwidth_hz"));
        }
        if self.n_samples < 1 {
            return Err(config_err("n_samples", "must be >= 1"));
        }
        if (self.n_samples as f64) / self.sample_rate_hz < 20.0 / self.bandwidth_hz {
            return Err(config_err(
                "n_samples",
                "record must span at least 20 correlation times (n_samples / sample_rate_hz >= 20 / bandwidth_hz)",
            ));
        }
        if self.n_records < 1 {
            return Err(config_err("n_records", "must be >= 1"));
        }
        if !(self.amp_noise_photons >= 0.0) || !self.amp_noise_photons.is_finite() {
            return Err(config_err("amp_noise_photons", "must be finite and >= 0"));
        }
        if !self.delay_s.is_finite() {
            return Err(config_err("delay_s", "must be finite"));
        }
        if !self.carrier_hz.is_finite() {
            return Err(config_err("carrier_hz", "must be finite"));
        }
        Ok(())
    }

    /// Same acquisition settings with vacuum at both inputs and a seed
    /// stream disjoint from `self`.
    pub fn calibration(&self) -> SimulationConfig {
        SimulationConfig {
            j1: JpaParams::vacuum(),
            j2: JpaParams::vacuum(),
            seed: splitmix64(self.seed ^ 0xCA11_B8A7_E000_0001),
            ..*self
        }
    }

    /// Bandwidth actually synthesized: the overlap-weighted bin count times
    /// the bin spacing. Equal to `bandwidth_hz` unless the band exceeds Nyquist.
    pub fn effective_bandwidth_hz(&self) -> f64 {
        let plan = SpectralPlan::new(self);
        plan.total_weight * self.sample_rate_hz / self.n_samples as f64
    }

    fn check_matches(&self, other: &SimulationConfig) -> Result<()> {
        let checks: [(&str, bool); 6] = [
            ("bandwidth_hz", self.bandwidth_hz == other.bandwidth_hz),
            ("sample_rate_hz", self.sample_rate_hz == other.sample_rate_hz),
            ("n_samples", self.n_samples == other.n_samples),
            ("n_records", self.n_records == other.n_records),
            ("amp_noise_photons", self.amp_noise_photons == other.amp_noise_photons),
            ("delay_s", self.delay_s == other.delay_s),
        ];
        for (field, ok) in checks {
            if !ok {
                return Err(config_err(
                    field,
                    "records and calibration were acquired with different settings",
                ));
            }
        }
        Ok(())
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn record_rng(seed: u64, record: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(record as u64);
    rng
}

/// Bin weights and normalization shared by all records of a configuration.
struct SpectralPlan {
    n: usize,
    /// `(bin, weight)` for non-negative in-band bins, `weight ∈ (0, 1]`.
    bins: Vec<(usize, f64)>,
    total_weight: f64,
    bin_hz: f64,
    inverse: Arc<dyn Fft<f64>>,
}

impl SpectralPlan {
    fn new(cfg: &SimulationConfig) -> Self {
        let n = cfg.n_samples;
        let df = cfg.sample_rate_hz / n as f64;
        let half_band = cfg.bandwidth_hz / 2.0;
        let mut bins = Vec::new();
        let w0 = (cfg.bandwidth_hz / df).min(1.0);
        bins.push((0, w0));
        let mut total = w0;
        // positive bins strictly below Nyquist; each stands for ±f
        for k in 1..n.div_ceil(2) {
            let f = k as f64 * df;
            let overlap = ((half_band - (f - df / 2.0)) / df).clamp(0.0, 1.0);
            if overlap <= 0.0 {
                break;
            }
            bins.push((k, overlap));
            total += 2.0 * overlap;
        }
        let inverse = FftPlanner::new().plan_fft_inverse(n);
        Self {
            n,
            bins,
            total_weight: total,
            bin_hz: df,
            inverse,
        }
    }
}

/// Packed spectra `Z = Y_q + i·Y_p` of both chains for one record.
struct RecordSpectrum {
    chains: [Vec<Complex64>; 2],
}

fn cholesky4(v: &CovarianceMatrix) -> Matrix4<f64> {
    let m = Matrix4::from_iterator(v.matrix().iter().copied());
    m.cholesky().expect("covariance is positive definite").l()
}

fn synthesize(cfg: &SimulationConfig, plan: &SpectralPlan, chol: &Matrix4<f64>, record: usize) -> RecordSpectrum {
    let mut rng = record_rng(cfg.seed, record);
    let n = plan.n;
    let amp_sd = (2.0 * cfg.amp_noise_photons).sqrt();
    let mut z1 = vec![Complex64::new(0.0, 0.0); n];
    let mut z2 = vec![Complex64::new(0.0, 0.0); n];
    let mut normal = || -> f64 { rng.sample(StandardNormal) };
    for &(k, w) in &plan.bins {
        // per-channel complex amplitudes (q1, p1, q2, p2) before packing
        let mut y = [Complex64::new(0.0, 0.0); 4];
        let scale = if k == 0 {
            n as f64 * (w / plan.total_weight).sqrt()
        } else {
            n as f64 * (w / (2.0 * plan.total_weight)).sqrt()
        };
        let g_re = nalgebra::Vector4::from_fn(|_, _| normal());
        let g_im = if k == 0 {
            nalgebra::Vector4::zeros()
        } else {
            nalgebra::Vector4::from_fn(|_, _| normal())
        };
        let h_re = nalgebra::Vector4::from_fn(|_, _| normal());
        let h_im = if k == 0 {
            nalgebra::Vector4::zeros()
        } else {
            nalgebra::Vector4::from_fn(|_, _| normal())
        };
        let s_re = chol * g_re + h_re * amp_sd;
        let s_im = chol * g_im + h_im * amp_sd;
        for c in 0..4 {
            y[c] = Complex64::new(s_re[c], s_im[c]) * scale;
        }
        let i = Complex64::i();
        z1[k] = y[0] + i * y[1];
        z2[k] = y[2] + i * y[3];
        if k != 0 {
            z1[n - k] = y[0].conj() + i * y[1].conj();
            z2[n - k] = y[2].conj() + i * y[3].conj();
        }
    }
    RecordSpectrum { chains: [z1, z2] }
}

/// Time-domain envelopes of one record with path 2 delayed by `delay`.
fn render(plan: &SpectralPlan, spec: &RecordSpectrum, delay: f64) -> [Vec<Complex64>; 2] {
    let n = plan.n;
    let mut c1 = spec.chains[0].clone();
    let mut c2 = spec.chains[1].clone();
    if delay != 0.0 {
        for &(k, _) in &plan.bins {
            if k == 0 {
                continue;
            }
            let theta = 2.0 * PI * k as f64 * plan.bin_hz * delay;
            let ramp = Complex64::from_polar(1.0, -theta);
            c2[k] *= ramp;
            c2[n - k] *= ramp.conj();
        }
    }
    let inv_n = 1.0 / n as f64;
    for c in [&mut c1, &mut c2] {
        plan.inverse.process(c);
        for z in c.iter_mut() {
            *z *= inv_n;
        }
    }
    [c1, c2]
}

/// `(1/N)·Σ_t x xᵀ` over `x = (q1, p1, q2, p2)`.
fn second_moments(chains: &[Vec<Complex64>; 2]) -> Matrix4<f64> {
    let mut acc = Matrix4::zeros();
    for (a, b) in chains[0].iter().zip(&chains[1]) {
        let x = nalgebra::Vector4::new(a.re, a.im, b.re, b.im);
        acc += x * x.transpose();
    }
    acc / chains[0].len() as f64
}

/// Pairwise sum in a fixed tree over index order.
fn pairwise_sum(items: &[Matrix4<f64>]) -> Matrix4<f64> {
    match items.len() {
        0 => Matrix4::zeros(),
        1 => items[0],
        n => {
            let (a, b) = items.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

fn mean(items: &[Matrix4<f64>]) -> Matrix4<f64> {
    pairwise_sum(items) / items.len() as f64
}

/// Simulated envelopes for every record of a configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    pub config: SimulationConfig,
    /// `records[i][chain][t]`; chain 0 is path 1, chain 1 the delayed path 2.
    pub records: Vec<[Vec<Complex64>; 2]>,
}

impl MeasurementRecord {
    pub fn seed(&self) -> u64 {
        self.config.seed
    }
}

pub fn generate_records(config: &SimulationConfig) -> Result<MeasurementRecord> {
    config.validate()?;
    let plan = SpectralPlan::new(config);
    let chol = cholesky4(&tms_cov(&config.j1, &config.j2)?);
    let records = (0..config.n_records)
        .into_par_iter()
        .map(|i| render(&plan, &synthesize(config, &plan, &chol, i), config.delay_s))
        .collect();
    Ok(MeasurementRecord {
        config: *config,
        records,
    })
}

/// Dual-path estimate of the hybrid-ring output covariance: measured
/// moments minus vacuum-reference moments plus the vacuum itself.
pub fn reconstruct_covariance(
    records: &MeasurementRecord,
    calibration: &MeasurementRecord,
) -> Result<CovarianceMatrix> {
    records.config.check_matches(&calibration.config)?;
    let m: Vec<_> = records.records.par_iter().map(second_moments).collect();
    let c: Vec<_> = calibration.records.par_iter().map(second_moments).collect();
    to_cov(&(mean(&m) - mean(&c) + Matrix4::identity()))
}

fn to_cov(m: &Matrix4<f64>) -> Result<CovarianceMatrix> {
    let sym = (m + m.transpose()) * 0.5;
    CovarianceMatrix::new(DMatrix::from_iterator(4, 4, sym.iter().copied()))
}

fn batch_ranges(n_records: usize) -> Result<Vec<std::ops::Range<usize>>> {
    if n_records < MIN_BATCHES {
        return Err(config_err(
            "n_records",
            format!("standard errors need at least {MIN_BATCHES} records"),
        ));
    }
    let nb = n_records.min(MAX_BATCHES);
    Ok((0..nb)
        .map(|b| (b * n_records / nb)..((b + 1) * n_records / nb))
        .collect())
}

/// Delete-one-block jackknife standard error from the replicate values.
fn jackknife_stderr(replicates: &[f64]) -> f64 {
    let n = replicates.len() as f64;
    let m = replicates.iter().sum::<f64>() / n;
    ((n - 1.0) / n * replicates.iter().map(|v| (v - m).powi(2)).sum::<f64>()).sqrt()
}

/// Full-data mean and the leave-one-block-out means of per-record moments.
struct Resampled {
    full: Matrix4<f64>,
    replicates: Vec<Matrix4<f64>>,
}

fn resample(items: &[Matrix4<f64>], ranges: &[std::ops::Range<usize>]) -> Resampled {
    let total = pairwise_sum(items);
    let n = items.len();
    let replicates = ranges
        .iter()
        .map(|r| (total - pairwise_sum(&items[r.clone()])) / (n - r.len()) as f64)
        .collect();
    Resampled {
        full: total / n as f64,
        replicates,
    }
}

/// Per-record second moments of measurement and calibration at each delay.
struct DelayMoments {
    /// `[delay][record]`
    measured: Vec<Vec<Matrix4<f64>>>,
    calibration: Vec<Matrix4<f64>>,
}

fn moments_over_delays(config: &SimulationConfig, delays: &[f64]) -> Result<DelayMoments> {
    config.validate()?;
    let plan = SpectralPlan::new(config);
    let chol = cholesky4(&tms_cov(&config.j1, &config.j2)?);
    let cal_cfg = config.calibration();
    let cal_chol = Matrix4::identity();

    let per_record: Vec<(Vec<Matrix4<f64>>, Matrix4<f64>)> = (0..config.n_records)
        .into_par_iter()
        .map(|i| {
            let spec = synthesize(config, &plan, &chol, i);
            let m = delays
                .iter()
                .map(|&d| second_moments(&render(&plan, &spec, d)))
                .collect();
            let cal = second_moments(&render(&plan, &synthesize(&cal_cfg, &plan, &cal_chol, i), 0.0));
            (m, cal)
        })
        .collect();

    let mut measured = vec![Vec::with_capacity(config.n_records); delays.len()];
    let mut calibration = Vec::with_capacity(config.n_records);
    for (m, c) in per_record {
        for (d, mm) in m.into_iter().enumerate() {
            measured[d].push(mm);
        }
        calibration.push(c);
    }
    Ok(DelayMoments { measured, calibration })
}

/// Reconstructed covariance with per-entry jackknife standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceEstimate {
    pub covariance: CovarianceMatrix,
    pub stderr: DMatrix<f64>,
    /// Leave-one-block-out reconstructions.
    pub replicates: Vec<DMatrix<f64>>,
}

/// Per-record excess moments `M_i − C_i` over measurement and calibration.
fn excess_moments(mom: &DelayMoments, delay: usize) -> Vec<Matrix4<f64>> {
    mom.measured[delay]
        .iter()
        .zip(&mom.calibration)
        .map(|(m, c)| m - c)
        .collect()
}

/// Reconstructs the covariance at `config.delay_s` from fresh records and a
/// matching vacuum reference.
pub fn estimate_covariance(config: &SimulationConfig) -> Result<CovarianceEstimate> {
    let ranges = batch_ranges(config.n_records)?;
    let mom = moments_over_delays(config, &[config.delay_s])?;
    let rs = resample(&excess_moments(&mom, 0), &ranges);
    let id = Matrix4::identity();
    let mut stderr = DMatrix::zeros(4, 4);
    for i in 0..4 {
        for j in 0..4 {
            let vals: Vec<f64> = rs.replicates.iter().map(|b| b[(i, j)]).collect();
            stderr[(i, j)] = jackknife_stderr(&vals);
        }
    }
    Ok(CovarianceEstimate {
        covariance: to_cov(&(rs.full + id))?,
        stderr,
        replicates: rs
            .replicates
            .iter()
            .map(|b| DMatrix::from_iterator(4, 4, (b + id).iter().copied()))
            .collect(),
    })
}

fn check_grid(tau_grid: &[f64]) -> Result<()> {
    if tau_grid.is_empty() {
        return Err(config_err("tau_grid_s", "must not be empty"));
    }
    if tau_grid.iter().any(|t| !t.is_finite()) || tau_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(config_err("tau_grid_s", "must be finite and strictly increasing"));
    }
    Ok(())
}

fn nk_of_excess(excess: &Matrix4<f64>) -> Result<f64> {
    negativity_kernel_from_cov(&to_cov(&(excess + Matrix4::identity()))?)
}

/// Monte Carlo negativity-kernel trace; path 2 of the same records is
/// digitally delayed by each grid value.
pub fn estimate_nk_curve(config: &SimulationConfig, tau_grid: &[f64]) -> Result<DephasingCurve> {
    check_grid(tau_grid)?;
    let ranges = batch_ranges(config.n_records)?;
    let mom = moments_over_delays(config, tau_grid)?;
    let mut points = Vec::with_capacity(tau_grid.len());
    for (d, &tau) in tau_grid.iter().enumerate() {
        let rs = resample(&excess_moments(&mom, d), &ranges);
        let replicates = rs.replicates.iter().map(nk_of_excess).collect::<Result<Vec<_>>>()?;
        points.push(CurvePoint {
            tau,
            value: nk_of_excess(&rs.full)?,
            stderr: Some(jackknife_stderr(&replicates)),
        });
    }
    DephasingCurve::new(CurveKind::Nk, points)
}

/// Normally ordered two-time quadrature covariance of the signal mode,
/// recovered from the inter-chain block: with vacuum at the second input the
/// chains carry `(a + v)/√2` and `(v − a)/√2`, so `−2·C = V_a − I` scaled by
/// the delay kernel.
fn signal_excess(d: &Matrix4<f64>) -> Matrix2<f64> {
    Matrix2::new(d[(0, 2)], d[(0, 3)], d[(1, 2)], d[(1, 3)]) * -2.0
}

/// `g²` from Gaussian moment factorization of normally ordered moments.
fn g2_from_excess(zero: &Matrix2<f64>, delayed: &Matrix2<f64>) -> Result<f64> {
    let nbar = (zero[(0, 0)] + zero[(1, 1)]) / 4.0;
    if !(nbar > 0.0) {
        return Err(Error::Degenerate(format!(
            "estimated signal photon number {nbar} is not positive"
        )));
    }
    let e = delayed;
    let normal = Complex64::new(e[(0, 0)] + e[(1, 1)], e[(0, 1)] - e[(1, 0)]) / 4.0;
    let anomalous = Complex64::new(e[(0, 0)] - e[(1, 1)], e[(0, 1)] + e[(1, 0)]) / 4.0;
    Ok(1.0 + (normal.norm_sqr() + anomalous.norm_sqr()) / (nbar * nbar))
}

/// Monte Carlo `g²(τ)` trace of the signal mode with the second amplifier
/// off (vacuum at the second hybrid-ring input).
pub fn estimate_g2_curve(config: &SimulationConfig, tau_grid: &[f64]) -> Result<DephasingCurve> {
    if !config.j2.is_vacuum() {
        return Err(config_err("j2", "g2 estimation needs vacuum at the second input"));
    }
    if config.j1.is_vacuum() {
        return Err(Error::Degenerate("g2 is undefined for a vacuum signal".into()));
    }
    check_grid(tau_grid)?;
    let ranges = batch_ranges(config.n_records)?;
    let mut delays = vec![0.0];
    delays.extend_from_slice(tau_grid);
    let mom = moments_over_delays(config, &delays)?;

    let zero = resample(&excess_moments(&mom, 0), &ranges);
    let mut points = Vec::with_capacity(tau_grid.len());
    for (i, &tau) in tau_grid.iter().enumerate() {
        let delayed = resample(&excess_moments(&mom, i + 1), &ranges);
        let value = g2_from_excess(&signal_excess(&zero.full), &signal_excess(&delayed.full))?;
        let replicates = zero
            .replicates
            .iter()
            .zip(&delayed.replicates)
            .map(|(z, d)| g2_from_excess(&signal_excess(z), &signal_excess(d)))
            .collect::<Result<Vec<_>>>()?;
        points.push(CurvePoint {
            tau,
            value,
            stderr: Some(jackknife_stderr(&replicates)),
        });
    }
    DephasingCurve::new(CurveKind::G2, points)
}

/// Normalized circular autocorrelation `Re Σ z(t) z*(t+l) / Σ |z|²`.
pub fn envelope_autocorrelation(chain: &[Complex64], lags: &[usize]) -> Vec<f64> {
    let n = chain.len();
    let power: f64 = chain.iter().map(|z| z.norm_sqr()).sum();
    lags.iter()
        .map(|&l| {
            let s: f64 = (0..n).map(|t| (chain[t] * chain[(t + l) % n].conj()).re).sum();
            s / power
        })
        .collect()
}
