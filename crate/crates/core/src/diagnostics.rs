//! Trajectory diagnostics: monitored quantities per step, exponential
//! decay-rate fitting, bound monitors and convergence verdicts.

use crate::flow::FlowConfig;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("fit window is empty")]
    EmptyWindow,
    #[error("non-positive value {value} at t = {t} in fit window")]
    NonPositiveValues { t: f64, value: f64 },
    #[error("unknown column '{0}'")]
    UnknownColumn(String),
    #[error("csv parse error: {0}")]
    Csv(String),
}

/// One per-step diagnostic record. Column order of the CSV serialization
/// is fixed: `t, r_min, r_max, ratio, grad_ratio_max, lambda_min,
/// lambda_max, F_min, F_max, u_min, u_max, star_margin, dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Record {
    pub t: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub ratio: f64,
    pub grad_ratio_max: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub f_min: f64,
    pub f_max: f64,
    pub u_min: f64,
    pub u_max: f64,
    pub star_margin: f64,
    pub dt: f64,
}

pub const CSV_HEADER: &str =
    "t,r_min,r_max,ratio,grad_ratio_max,lambda_min,lambda_max,F_min,F_max,u_min,u_max,star_margin,dt";

pub const COLUMNS: [&str; 13] = [
    "t",
    "r_min",
    "r_max",
    "ratio",
    "grad_ratio_max",
    "lambda_min",
    "lambda_max",
    "F_min",
    "F_max",
    "u_min",
    "u_max",
    "star_margin",
    "dt",
];

impl Record {
    pub fn column(&self, name: &str) -> Result<f64, DiagnosticsError> {
        Ok(match name {
            "t" => self.t,
            "r_min" => self.r_min,
            "r_max" => self.r_max,
            "ratio" => self.ratio,
            // derived column: distance of the ratio from 1
            "ratio_excess" => self.ratio - 1.0,
            "grad_ratio_max" => self.grad_ratio_max,
            "lambda_min" => self.lambda_min,
            "lambda_max" => self.lambda_max,
            "F_min" => self.f_min,
            "F_max" => self.f_max,
            "u_min" => self.u_min,
            "u_max" => self.u_max,
            "star_margin" => self.star_margin,
            "dt" => self.dt,
            other => return Err(DiagnosticsError::UnknownColumn(other.into())),
        })
    }

    fn csv_row(&self) -> String {
        let vals = [
            self.t,
            self.r_min,
            self.r_max,
            self.ratio,
            self.grad_ratio_max,
            self.lambda_min,
            self.lambda_max,
            self.f_min,
            self.f_max,
            self.u_min,
            self.u_max,
            self.star_margin,
            self.dt,
        ];
        vals.iter()
            .map(|v| format!("{v:.16e}"))
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Ordered per-step records with strictly increasing time.
#[derive(Debug, Clone, Default)]
pub struct TimeSeries {
    records: Vec<Record>,
}

impl TimeSeries {
    pub fn new() -> TimeSeries {
        TimeSeries::default()
    }

    /// Append a record; time must increase strictly and the ratio must be
    /// at least 1.
    pub fn push(&mut self, record: Record) {
        if let Some(last) = self.records.last() {
            assert!(
                record.t > last.t,
                "time series must be strictly increasing ({} after {})",
                record.t,
                last.t
            );
        }
        assert!(record.ratio >= 1.0, "ratio must be at least 1");
        self.records.push(record);
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn first(&self) -> Option<&Record> {
        self.records.first()
    }

    pub fn last(&self) -> Option<&Record> {
        self.records.last()
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>, DiagnosticsError> {
        self.records.iter().map(|r| r.column(name)).collect()
    }

    /// Longest prefix on which `column` stays above `floor`. Exponential
    /// decays bottom out at the discretization/roundoff floor; rate fits
    /// should exclude that plateau.
    pub fn clip_above(&self, column: &str, floor: f64) -> Result<TimeSeries, DiagnosticsError> {
        let vals = self.column(column)?;
        let cut = vals
            .iter()
            .position(|&v| v <= floor)
            .unwrap_or(self.records.len());
        Ok(TimeSeries {
            records: self.records[..cut].to_vec(),
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.records.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            out.push_str(&r.csv_row());
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<TimeSeries, DiagnosticsError> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| DiagnosticsError::Csv("empty csv".into()))?;
        if header.trim() != CSV_HEADER {
            return Err(DiagnosticsError::Csv(format!(
                "unexpected header '{header}'"
            )));
        }
        let mut series = TimeSeries::new();
        for line in lines {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<f64> = line
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| DiagnosticsError::Csv(format!("bad field in '{line}'")))
                })
                .collect::<Result<_, _>>()?;
            if fields.len() != 13 {
                return Err(DiagnosticsError::Csv(format!(
                    "expected 13 fields, got {} in '{line}'",
                    fields.len()
                )));
            }
            series.push(Record {
                t: fields[0],
                r_min: fields[1],
                r_max: fields[2],
                ratio: fields[3],
                grad_ratio_max: fields[4],
                lambda_min: fields[5],
                lambda_max: fields[6],
                f_min: fields[7],
                f_max: fields[8],
                u_min: fields[9],
                u_max: fields[10],
                star_margin: fields[11],
                dt: fields[12],
            });
        }
        Ok(series)
    }
}

/// Result of a log-linear least-squares fit `y ~ C e^{-gamma t}`.
#[derive(Debug, Clone, Copy)]
pub struct DecayFit {
    /// Fitted decay rate (negated slope of `log y` against `t`).
    pub gamma: f64,
    /// Fitted `log C`.
    pub intercept: f64,
    /// Goodness of fit in `[0, 1]`.
    pub r_squared: f64,
    /// Time window of the fit.
    pub window: (f64, f64),
}

/// Least squares of `ln y` on `t` over paired samples.
pub fn fit_log_linear(ts: &[f64], ys: &[f64]) -> Result<DecayFit, DiagnosticsError> {
    assert_eq!(ts.len(), ys.len());
    if ts.len() < 2 {
        return Err(DiagnosticsError::EmptyWindow);
    }
    for (&t, &y) in ts.iter().zip(ys) {
        if !(y > 0.0) {
            return Err(DiagnosticsError::NonPositiveValues { t, value: y });
        }
    }
    let n = ts.len() as f64;
    let logs: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let tm = ts.iter().sum::<f64>() / n;
    let lm = logs.iter().sum::<f64>() / n;
    let sxx: f64 = ts.iter().map(|t| (t - tm) * (t - tm)).sum();
    let sxy: f64 = ts.iter().zip(&logs).map(|(t, l)| (t - tm) * (l - lm)).sum();
    if sxx == 0.0 {
        return Err(DiagnosticsError::EmptyWindow);
    }
    let slope = sxy / sxx;
    let intercept = lm - slope * tm;
    let ss_tot: f64 = logs.iter().map(|l| (l - lm) * (l - lm)).sum();
    let ss_res: f64 = ts
        .iter()
        .zip(&logs)
        .map(|(t, l)| {
            let fit = intercept + slope * t;
            (l - fit) * (l - fit)
        })
        .sum();
    let r_squared = if ss_tot <= f64::EPSILON * n {
        // constant data: a flat line is a perfect fit
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Ok(DecayFit {
        gamma: -slope,
        intercept,
        r_squared,
        window: (ts[0], *ts.last().unwrap()),
    })
}

/// Fit an exponential rate to the trailing `tail_fraction` of the series.
pub fn fit_decay_rate(
    series: &TimeSeries,
    column: &str,
    tail_fraction: f64,
) -> Result<DecayFit, DiagnosticsError> {
    assert!(
        tail_fraction > 0.0 && tail_fraction < 1.0 + 1e-12,
        "tail fraction must lie in (0, 1]"
    );
    if series.is_empty() {
        return Err(DiagnosticsError::EmptyWindow);
    }
    let len = series.len();
    let take = ((len as f64 * tail_fraction).ceil() as usize).clamp(2, len);
    let start = len - take;
    let ts: Vec<f64> = series.records()[start..].iter().map(|r| r.t).collect();
    let ys: Vec<f64> = series.records()[start..]
        .iter()
        .map(|r| r.column(column))
        .collect::<Result<_, _>>()?;
    fit_log_linear(&ts, &ys)
}

#[derive(Debug, Clone, Copy)]
pub struct RealizedBound {
    pub inf: f64,
    pub sup: f64,
}

/// Realized constants of a run: the radial, support, speed and curvature
/// ranges must stay inside a fixed finite window and the star-shape margin
/// strictly positive; for normalized runs with contracting exponents the
/// radial maximum must additionally stay below `max(1, r_max(0))`.
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub radial: RealizedBound,
    pub support: RealizedBound,
    pub speed: RealizedBound,
    pub lambda: RealizedBound,
    pub star_margin_min: f64,
    pub c0_ceiling: f64,
    pub c0_satisfied: bool,
    pub within_window: bool,
}

const BOUND_WINDOW: (f64, f64) = (1e-8, 1e8);
const C0_SLACK: f64 = 1e-8;

impl BoundReport {
    pub fn pass(&self) -> bool {
        self.within_window && self.star_margin_min > 0.0
    }
}

impl fmt::Display for BoundReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "radial_inf: {:.6e}", self.radial.inf)?;
        writeln!(f, "radial_sup: {:.6e}", self.radial.sup)?;
        writeln!(f, "support_inf: {:.6e}", self.support.inf)?;
        writeln!(f, "support_sup: {:.6e}", self.support.sup)?;
        writeln!(f, "speed_inf: {:.6e}", self.speed.inf)?;
        writeln!(f, "speed_sup: {:.6e}", self.speed.sup)?;
        writeln!(f, "lambda_inf: {:.6e}", self.lambda.inf)?;
        writeln!(f, "lambda_sup: {:.6e}", self.lambda.sup)?;
        writeln!(f, "star_margin_min: {:.6e}", self.star_margin_min)?;
        writeln!(f, "c0_ceiling: {:.6e}", self.c0_ceiling)?;
        writeln!(f, "c0_satisfied: {}", self.c0_satisfied)?;
        writeln!(f, "bounds_pass: {}", self.pass())
    }
}

/// Scan a run's records for the realized bound constants.
pub fn check_bounds(series: &TimeSeries, cfg: &FlowConfig) -> BoundReport {
    assert!(!series.is_empty(), "series must be non-empty");
    let mut radial = RealizedBound {
        inf: f64::INFINITY,
        sup: f64::NEG_INFINITY,
    };
    let mut support = radial;
    let mut speed = radial;
    let mut lambda = radial;
    let mut star_margin_min = f64::INFINITY;
    for r in series.records() {
        radial.inf = radial.inf.min(r.r_min);
        radial.sup = radial.sup.max(r.r_max);
        support.inf = support.inf.min(r.u_min);
        support.sup = support.sup.max(r.u_max);
        speed.inf = speed.inf.min(r.f_min);
        speed.sup = speed.sup.max(r.f_max);
        lambda.inf = lambda.inf.min(r.lambda_min);
        lambda.sup = lambda.sup.max(r.lambda_max);
        star_margin_min = star_margin_min.min(r.star_margin);
    }
    let first = series.first().unwrap();
    let c0_ceiling = 1.0f64.max(first.r_max);
    // the monotone ceiling is an a priori estimate only for normalized runs
    // in the contracting exponent range
    let c0_applicable = cfg.normalized && cfg.alpha >= cfg.beta + 1.0;
    let c0_satisfied = !c0_applicable || radial.sup <= c0_ceiling + C0_SLACK;
    let (lo, hi) = BOUND_WINDOW;
    let within = |b: &RealizedBound| b.inf >= lo && b.sup <= hi && b.inf.is_finite();
    let within_window = within(&radial)
        && within(&support)
        && within(&speed)
        && within(&lambda)
        && star_margin_min > 0.0
        && star_margin_min.is_finite();
    BoundReport {
        radial,
        support,
        speed,
        lambda,
        star_margin_min,
        c0_ceiling,
        c0_satisfied,
        within_window,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct VerdictTolerances {
    pub ratio_tol: f64,
    pub grad_tol: f64,
    /// Fits must reach this goodness before the rates count.
    pub r_squared_min: f64,
}

impl Default for VerdictTolerances {
    fn default() -> Self {
        VerdictTolerances {
            ratio_tol: 1e-4,
            grad_tol: 1e-6,
            r_squared_min: 0.98,
        }
    }
}

/// Did the run converge to a round sphere, and at what fitted rates?
#[derive(Debug, Clone)]
pub struct Verdict {
    pub converged_to_sphere: bool,
    pub final_ratio: f64,
    pub gamma_ratio: f64,
    pub gamma_grad: f64,
    pub r_squared_ratio: f64,
    pub r_squared_grad: f64,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "converged_to_sphere: {}", self.converged_to_sphere)?;
        writeln!(f, "final_ratio: {:.12e}", self.final_ratio)?;
        writeln!(f, "gamma_ratio: {:.6e}", self.gamma_ratio)?;
        writeln!(f, "gamma_grad: {:.6e}", self.gamma_grad)?;
        writeln!(f, "r_squared_ratio: {:.6}", self.r_squared_ratio)?;
        writeln!(f, "r_squared_grad: {:.6}", self.r_squared_grad)
    }
}

/// Values at or below this are treated as the numerical floor of a decayed
/// quantity: a profile that is constant to rounding still shows stencil
/// noise of roughly `ulp / h`.
pub const DECAY_FLOOR: f64 = 1e-13;

/// Sphere-convergence verdict: final roundness below tolerance plus
/// positive, well-conditioned fitted decay rates. Quantities already at
/// the numerical floor count as converged without a rate estimate.
pub fn convergence_verdict(series: &TimeSeries, tol: &VerdictTolerances) -> Verdict {
    assert!(!series.is_empty(), "series must be non-empty");
    let last = series.last().unwrap();
    let final_ratio = last.ratio;
    let finals_ok = final_ratio - 1.0 < tol.ratio_tol && last.grad_ratio_max < tol.grad_tol;

    let fit = |column: &str| -> Option<DecayFit> {
        let clipped = series.clip_above(column, DECAY_FLOOR).ok()?;
        if clipped.len() < 4 {
            return None;
        }
        fit_decay_rate(&clipped, column, 0.5).ok()
    };
    let ratio_fit = fit("ratio_excess");
    let grad_fit = fit("grad_ratio_max");
    let rate_ok = |fit: &Option<DecayFit>, final_value: f64| match fit {
        Some(f) => f.gamma > 0.0 && f.r_squared > tol.r_squared_min,
        // decayed to the floor before enough samples: trivially converged
        None => final_value <= DECAY_FLOOR,
    };
    let rates_ok =
        rate_ok(&ratio_fit, final_ratio - 1.0) && rate_ok(&grad_fit, last.grad_ratio_max);
    Verdict {
        converged_to_sphere: finals_ok && rates_ok,
        final_ratio,
        gamma_ratio: ratio_fit.map_or(0.0, |f| f.gamma),
        gamma_grad: grad_fit.map_or(0.0, |f| f.gamma),
        r_squared_ratio: ratio_fit.map_or(1.0, |f| f.r_squared),
        r_squared_grad: grad_fit.map_or(1.0, |f| f.r_squared),
    }
}
