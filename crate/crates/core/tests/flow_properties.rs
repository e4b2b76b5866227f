//! Cross-cutting flow invariants: equivalence of the normalized and
//! unnormalized pictures under the rescaling map, equivalence of the two
//! parametrizations, monotone radial ceilings, curvature pinching and
//! star-shapedness along runs, and measured decay rates on spherical data.

use ccflow_core::diagnostics::{fit_log_linear, TimeSeries};
use ccflow_core::flow::{
    rescale_map, run, FlowConfig, Parametrization, StopReason,
};
use ccflow_core::geometry::ratio;
use ccflow_core::scenarios::{
    canonical_bowl_params, ellipsoid_profile, ellipsoid_support_profile, sphere_profile,
    subsolution_bowl, CANONICAL_BOWL_HEIGHT,
};

fn interp_column(series: &TimeSeries, column: &str, t: f64) -> Option<f64> {
    let ts: Vec<f64> = series.records().iter().map(|r| r.t).collect();
    let ys = series.column(column).unwrap();
    if t < ts[0] || t > *ts.last().unwrap() {
        return None;
    }
    let idx = ts.partition_point(|&x| x < t);
    if idx == 0 {
        return Some(ys[0]);
    }
    let (t0, t1) = (ts[idx - 1], ts[idx.min(ts.len() - 1)]);
    let (y0, y1) = (ys[idx - 1], ys[idx.min(ys.len() - 1)]);
    if t1 == t0 {
        return Some(y0);
    }
    Some(y0 + (y1 - y0) * (t - t0) / (t1 - t0))
}

fn ellipsoid_cfg(alpha: f64, beta: f64, resolution: usize) -> FlowConfig {
    let mut cfg = FlowConfig::new(alpha, beta, 2, "arithmetic-mean");
    cfg.resolution = resolution;
    cfg.record_every = 2;
    cfg
}

#[test]
fn unnormalized_run_rescales_onto_the_normalized_run() {
    let resolution = 64;
    let initial = ellipsoid_profile(2, resolution, 1.2, 0.6).unwrap();

    let mut norm_cfg = ellipsoid_cfg(3.0, 1.0, resolution);
    norm_cfg.t_max = 2.0;
    let norm = run(&norm_cfg, &initial).unwrap();

    let mut raw_cfg = norm_cfg.clone();
    raw_cfg.normalized = false;
    raw_cfg.t_max = (2.0f64).exp() - 1.0; // tau = ln(1 + t) reaches 2
    let raw = run(&raw_cfg, &initial).unwrap();

    let h = std::f64::consts::PI / resolution as f64;
    let tol = 10.0 * h * h;
    let mut compared = 0;
    for rec in raw.series.records() {
        let (_, tau) = rescale_map(rec.t, raw_cfg.alpha, raw_cfg.beta).unwrap();
        if let Some(norm_ratio) = interp_column(&norm.series, "ratio", tau) {
            assert!(
                (rec.ratio - norm_ratio).abs() <= tol,
                "t = {}, tau = {tau}: {} vs {norm_ratio}",
                rec.t,
                rec.ratio
            );
            compared += 1;
        }
    }
    assert!(compared > 100, "only {compared} comparable records");
}

#[test]
fn radial_and_support_parametrizations_agree_on_the_ratio() {
    let resolution = 64;
    let mut radial_cfg = ellipsoid_cfg(3.0, 1.0, resolution);
    radial_cfg.t_max = 3.0;
    let radial_out = run(&radial_cfg, &ellipsoid_profile(2, resolution, 1.2, 0.6).unwrap()).unwrap();

    let mut support_cfg = radial_cfg.clone();
    support_cfg.parametrization = Parametrization::Support;
    let support_out = run(
        &support_cfg,
        &ellipsoid_support_profile(2, resolution, 1.2, 0.6).unwrap(),
    )
    .unwrap();

    let h = std::f64::consts::PI / resolution as f64;
    let tol = 10.0 * h * h;
    let mut compared = 0;
    for rec in radial_out.series.records() {
        if let Some(other) = interp_column(&support_out.series, "ratio", rec.t) {
            assert!(
                (rec.ratio - other).abs() <= tol,
                "t = {}: radial {} vs support {other}",
                rec.t,
                rec.ratio
            );
            compared += 1;
        }
    }
    assert!(compared > 100);
}

#[test]
fn radial_ceiling_pinching_and_star_margin_hold_along_runs() {
    for alpha in [2.0, 3.0] {
        let resolution = 64;
        let cfg = ellipsoid_cfg(alpha, 1.0, resolution);
        let initial = ellipsoid_profile(2, resolution, 1.2, 0.6).unwrap();
        let lambda0_min = 0.6 / (1.2 * 1.2); // smallest curvature of the spheroid
        let out = run(&cfg, &initial).unwrap();
        assert!(matches!(out.stop, StopReason::Converged { .. }), "{}", out.stop);
        let ceiling = 1.0f64.max(out.series.first().unwrap().r_max) + 1e-8;
        for rec in out.series.records() {
            assert!(rec.r_max <= ceiling, "t = {}: {} > {ceiling}", rec.t, rec.r_max);
            assert!(rec.lambda_min >= 0.5 * lambda0_min, "t = {}", rec.t);
            assert!(rec.star_margin > 0.0);
        }
    }
}

#[test]
fn spherical_rate_matches_the_exponent_gap() {
    // q = beta + 1 - alpha = -1: |r - 1| decays at rate |q| exactly on
    // spheres, up to the early transient
    let mut cfg = FlowConfig::new(3.0, 1.0, 2, "arithmetic-mean");
    cfg.resolution = 32;
    cfg.t_max = 8.0;
    cfg.record_every = 5;
    let out = run(&cfg, &sphere_profile(2, 32, 0.5).unwrap()).unwrap();
    assert!(matches!(out.stop, StopReason::TimeExhausted { .. }));
    let records = out.series.records();
    let tail = &records[records.len() / 2..];
    let ts: Vec<f64> = tail.iter().map(|r| r.t).collect();
    let ys: Vec<f64> = tail.iter().map(|r| (r.r_max - 1.0).abs()).collect();
    let fit = fit_log_linear(&ts, &ys).unwrap();
    assert!(
        (fit.gamma - 1.0).abs() <= 0.02,
        "fitted gamma {} is not within 2% of |q| = 1",
        fit.gamma
    );
    assert!(fit.r_squared > 0.999);
}

#[test]
fn bowl_blows_up_only_below_the_critical_exponent() {
    // the flask's shoulder arc needs about h <= pi/128 to be resolved
    let resolution = 128;
    let bowl = subsolution_bowl(&canonical_bowl_params(), CANONICAL_BOWL_HEIGHT, 2, resolution)
        .unwrap();
    assert!(ratio(&bowl) < 50.0);

    let mut sub = ellipsoid_cfg(1.5, 1.0, resolution);
    sub.t_max = 60.0;
    let out = run(&sub, &bowl).unwrap();
    assert!(matches!(out.stop, StopReason::RatioBlowup { .. }), "{}", out.stop);
    assert!(out.series.last().unwrap().r_min > sub.stop.origin_eps);

    let mut sup = ellipsoid_cfg(2.0, 1.0, resolution);
    sup.t_max = 60.0;
    let out = run(&sup, &bowl).unwrap();
    assert!(matches!(out.stop, StopReason::Converged { .. }), "{}", out.stop);
}
