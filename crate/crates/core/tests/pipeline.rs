use std::f64::consts::PI;

use tms_core::dephasing::{linspace, nk_closed_form, FilterSpec};
use tms_core::dualpath::{estimate_nk_curve, SimulationConfig, DEFAULT_CARRIER_HZ};
use tms_core::estimation::{fit_nk, residual_report, CurveModel, FitOptions, NkGeometry};
use tms_core::jpa::JpaParams;

fn config(r: f64, n: f64) -> SimulationConfig {
    let j1 = JpaParams::new(r, n, 0.0).unwrap();
    SimulationConfig {
        j1,
        j2: j1.orthogonal(),
        bandwidth_hz: 430e3,
        sample_rate_hz: 8.0 * 430e3,
        n_samples: 4096,
        n_records: 120,
        amp_noise_photons: 1.0,
        delay_s: 0.0,
        seed: 2024,
        carrier_hz: DEFAULT_CARRIER_HZ,
    }
}

#[test]
fn monte_carlo_trace_fits_back_to_generator() {
    let cfg = config(0.7, 0.05);
    let filter = FilterSpec::from_bandwidth_hz(cfg.bandwidth_hz).unwrap();
    let grid = linspace(0.0, PI / filter.omega, 16);
    let curve = estimate_nk_curve(&cfg, &grid).unwrap();

    let truth = CurveModel::Nk {
        j1: cfg.j1,
        j2: cfg.j2,
        filter,
    };
    let report = residual_report(&curve, &truth, 0).unwrap();
    assert!(report.reduced_chi_square < 3.0, "{report:?}");

    let fit = fit_nk(
        &curve,
        filter.omega,
        NkGeometry::Symmetric,
        None,
        &FitOptions::default(),
    )
    .unwrap();
    assert!(fit.converged);
    let r = fit.get("r").unwrap();
    assert!((r.value - 0.7).abs() < 4.0 * r.stderr.unwrap() + 0.01, "{fit:?}");
}

#[test]
fn monte_carlo_separable_tail() {
    let cfg = config(0.5, 0.1);
    let filter = FilterSpec::from_bandwidth_hz(cfg.bandwidth_hz).unwrap();
    let grid = [1.0 / filter.omega * PI, 1.5 / filter.omega * PI];
    let curve = estimate_nk_curve(&cfg, &grid).unwrap();
    for p in curve.points() {
        let truth = nk_closed_form(&cfg.j1, &cfg.j2, &filter, p.tau).unwrap();
        assert!(truth < 0.0);
        assert!((p.value - truth).abs() < 4.0 * p.stderr.unwrap());
    }
}
