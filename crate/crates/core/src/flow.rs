//! Explicit time integration of the contracting curvature flows.
//!
//! Four variants are covered by one stepper. With `W = r` (radial weight)
//! or `W = u` (support weight) and `F` a registry speed function, the
//! evolving scalar satisfies
//!
//! ```text
//! radial picture:   dr/dt = -sqrt(1 + |Dr|^2/r^2) W^a F^b(lambda)  [+ r]
//! support picture:  du/dt = -W^a F*(tau)^(-b)                      [+ u]
//! ```
//!
//! where the bracketed reaction term is present for the normalized flows.
//! `F*` is the inverse-concave dual from [`crate::curvature`], evaluated
//! on the principal curvature radii `tau`. Steps are classical RK4 with
//! the step size tied to the parabolic stability limit `dt = c h^2 / D`,
//! `D` the largest linearized diffusion coefficient.

use crate::curvature::{powfast, CurvatureError, CurvatureFunction};
use crate::diagnostics::{Record, TimeSeries};
use crate::geometry::{
    radial_to_geometry, support_to_geometry, GeometryError, GeometryFields, Profile, ProfileKind,
};
use crate::grid::{Grid, GridKind};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpeedKind {
    /// Speed `r^alpha F^beta`.
    RadialWeight,
    /// Speed `u^alpha F^beta`.
    SupportWeight,
}

impl SpeedKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SpeedKind::RadialWeight => "radial-weight",
            SpeedKind::SupportWeight => "support-weight",
        }
    }

    pub fn parse(s: &str) -> Option<SpeedKind> {
        match s {
            "radial-weight" => Some(SpeedKind::RadialWeight),
            "support-weight" => Some(SpeedKind::SupportWeight),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parametrization {
    /// Evolve the radial function over polar angles.
    Radial,
    /// Evolve the support function over normal directions.
    Support,
}

impl Parametrization {
    pub fn as_str(&self) -> &'static str {
        match self {
            Parametrization::Radial => "radial",
            Parametrization::Support => "support",
        }
    }

    pub fn parse(s: &str) -> Option<Parametrization> {
        match s {
            "radial" => Some(Parametrization::Radial),
            "support" => Some(Parametrization::Support),
            _ => None,
        }
    }

    pub fn profile_kind(&self) -> ProfileKind {
        match self {
            Parametrization::Radial => ProfileKind::Radial,
            Parametrization::Support => ProfileKind::Support,
        }
    }
}

/// Termination thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopRules {
    pub grad_ratio_tol: f64,
    pub ratio_tol: f64,
    pub origin_eps: f64,
    pub blowup_ratio: f64,
    pub curvature_cap: f64,
}

impl Default for StopRules {
    fn default() -> Self {
        StopRules {
            grad_ratio_tol: 1e-6,
            ratio_tol: 1e-4,
            origin_eps: 1e-3,
            blowup_ratio: 50.0,
            curvature_cap: 1e6,
        }
    }
}

/// Everything that defines a single run.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowConfig {
    pub alpha: f64,
    pub beta: f64,
    pub speed_kind: SpeedKind,
    pub parametrization: Parametrization,
    pub normalized: bool,
    pub f_spec: String,
    pub n: usize,
    pub resolution: usize,
    /// CFL safety factor in `(0, 1)`.
    pub safety: f64,
    pub t_max: f64,
    pub stop: StopRules,
    /// Keep every k-th step in the time series (the initial and final
    /// states are always kept).
    pub record_every: usize,
    /// Flow-time interval between profile snapshots; `None` keeps only
    /// the initial and final snapshots.
    pub snapshot_every: Option<f64>,
}

impl FlowConfig {
    /// A configuration with the default stop rules and stepper settings;
    /// callers fill in the physics.
    pub fn new(alpha: f64, beta: f64, n: usize, f_spec: &str) -> FlowConfig {
        FlowConfig {
            alpha,
            beta,
            speed_kind: SpeedKind::RadialWeight,
            parametrization: Parametrization::Radial,
            normalized: true,
            f_spec: f_spec.to_string(),
            n,
            resolution: 256,
            safety: 0.2,
            t_max: 50.0,
            stop: StopRules::default(),
            record_every: 20,
            snapshot_every: None,
        }
    }

    pub fn validate(&self) -> Result<(), FlowError> {
        if !self.alpha.is_finite() {
            return Err(FlowError::Config("alpha must be finite".into()));
        }
        if !(self.beta >= 1.0) {
            return Err(FlowError::Config(format!(
                "beta must be at least 1, got {}",
                self.beta
            )));
        }
        if self.n < 1 {
            return Err(FlowError::Config("n must be at least 1".into()));
        }
        if self.resolution < 16 {
            return Err(FlowError::Config(format!(
                "resolution must be at least 16, got {}",
                self.resolution
            )));
        }
        if !(self.safety > 0.0 && self.safety < 1.0) {
            return Err(FlowError::Config(format!(
                "safety must lie in (0, 1), got {}",
                self.safety
            )));
        }
        if !(self.t_max > 0.0) {
            return Err(FlowError::Config("t_max must be positive".into()));
        }
        if self.record_every == 0 {
            return Err(FlowError::Config("record_every must be positive".into()));
        }
        if let Some(s) = self.snapshot_every {
            if !(s > 0.0) {
                return Err(FlowError::Config("snapshot_every must be positive".into()));
            }
        }
        let s = &self.stop;
        for (name, v) in [
            ("grad_ratio_tol", s.grad_ratio_tol),
            ("ratio_tol", s.ratio_tol),
            ("origin_eps", s.origin_eps),
            ("curvature_cap", s.curvature_cap),
        ] {
            if !(v > 0.0) {
                return Err(FlowError::Config(format!("{name} must be positive")));
            }
        }
        if !(s.blowup_ratio > 1.0) {
            return Err(FlowError::Config("blowup_ratio must exceed 1".into()));
        }
        CurvatureFunction::parse(&self.f_spec, self.n)?;
        Ok(())
    }
}

/// Current state of a run: the profile plus its cached geometry, the
/// nodal speed-function values and the full speed `Phi`.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub t: f64,
    pub profile: Profile,
    pub geometry: GeometryFields,
    pub f_value: Vec<f64>,
    pub phi: Vec<f64>,
}

impl FlowState {
    /// Build the state (geometry cache, F and Phi) for a profile.
    pub fn from_profile(
        cfg: &FlowConfig,
        t: f64,
        profile: Profile,
    ) -> Result<FlowState, FlowError> {
        cfg.validate()?;
        if profile.kind() != cfg.parametrization.profile_kind() {
            return Err(FlowError::Config(format!(
                "profile kind {} does not match parametrization {}",
                profile.kind().as_str(),
                cfg.parametrization.as_str()
            )));
        }
        if profile.dimension() != cfg.n {
            return Err(FlowError::Config(format!(
                "profile dimension {} does not match n = {}",
                profile.dimension(),
                cfg.n
            )));
        }
        if profile.resolution() != cfg.resolution {
            return Err(FlowError::Config(format!(
                "profile resolution {} does not match configured {}",
                profile.resolution(),
                cfg.resolution
            )));
        }
        let geometry = match profile.kind() {
            ProfileKind::Radial => radial_to_geometry(&profile)?,
            ProfileKind::Support => support_to_geometry(&profile)?,
        };
        let f = CurvatureFunction::parse(&cfg.f_spec, cfg.n)?;
        let m = profile.values().len();
        let mut lam = vec![0.0; cfg.n];
        let mut f_value = vec![0.0; m];
        let mut phi = vec![0.0; m];
        for j in 0..m {
            lam[0] = geometry.lambda_profile[j];
            if let Some(orbit) = &geometry.lambda_orbit {
                for slot in lam[1..].iter_mut() {
                    *slot = orbit[j];
                }
            }
            let fv = f.eval_slice(&lam);
            let w = match cfg.speed_kind {
                SpeedKind::RadialWeight => geometry.radial[j],
                SpeedKind::SupportWeight => geometry.support[j],
            };
            f_value[j] = fv;
            phi[j] = powfast(w, cfg.alpha) * powfast(fv, cfg.beta);
        }
        Ok(FlowState {
            t,
            profile,
            geometry,
            f_value,
            phi,
        })
    }
}

/// Why a run terminated, with the triggering measurement.
#[derive(Debug, Clone, PartialEq)]
pub enum StopReason {
    Converged {
        t: f64,
        grad_ratio: f64,
        ratio: f64,
        residual: f64,
    },
    ReachedOrigin {
        t: f64,
        r_min: f64,
    },
    RatioBlowup {
        t: f64,
        ratio: f64,
    },
    LostConvexity {
        t: f64,
        theta: f64,
        value: f64,
    },
    TimeExhausted {
        t: f64,
    },
    NumericalFailure {
        t: f64,
        detail: String,
    },
}

impl StopReason {
    pub fn label(&self) -> &'static str {
        match self {
            StopReason::Converged { .. } => "converged",
            StopReason::ReachedOrigin { .. } => "reached-origin",
            StopReason::RatioBlowup { .. } => "ratio-blowup",
            StopReason::LostConvexity { .. } => "lost-convexity",
            StopReason::TimeExhausted { .. } => "time-exhausted",
            StopReason::NumericalFailure { .. } => "numerical-failure",
        }
    }

    /// Terminations that are expected outcomes of well-posed experiments,
    /// as opposed to numerical breakdowns.
    pub fn is_expected(&self) -> bool {
        !matches!(
            self,
            StopReason::LostConvexity { .. } | StopReason::NumericalFailure { .. }
        )
    }
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StopReason::Converged {
                t,
                grad_ratio,
                ratio,
                residual,
            } => write!(
                f,
                "converged at t = {t:.6} (grad {grad_ratio:.3e}, ratio-1 {:.3e}, residual {residual:.3e})",
                ratio - 1.0
            ),
            StopReason::ReachedOrigin { t, r_min } => {
                write!(f, "reached the origin at t = {t:.6} (min r = {r_min:.3e})")
            }
            StopReason::RatioBlowup { t, ratio } => {
                write!(f, "ratio blow-up at t = {t:.6} (ratio = {ratio:.3})")
            }
            StopReason::LostConvexity { t, theta, value } => write!(
                f,
                "lost convexity at t = {t:.6} (theta = {theta:.4}, value = {value:.3e})"
            ),
            StopReason::TimeExhausted { t } => write!(f, "time exhausted at t = {t:.6}"),
            StopReason::NumericalFailure { t, detail } => {
                write!(f, "numerical failure at t = {t:.6}: {detail}")
            }
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StepError {
    #[error("lost convexity at theta = {theta}: {value}")]
    LostConvexity { theta: f64, value: f64 },
    #[error("numerical failure: {detail}")]
    NumericalFailure { detail: String },
}

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Curvature(#[from] CurvatureError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Step(#[from] StepError),
    #[error("domain error: {0}")]
    Domain(String),
}

/// Completed run: config echo, per-step records, profile snapshots,
/// final state and the termination reason.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub config: FlowConfig,
    pub series: TimeSeries,
    pub snapshots: Vec<(f64, Profile)>,
    pub final_state: FlowState,
    pub stop: StopReason,
}

/// Rescaling between the unnormalized and normalized pictures: returns
/// the scale factor `phi(t)` and the normalized time `tau(t)`.
pub fn rescale_map(t: f64, alpha: f64, beta: f64) -> Result<(f64, f64), FlowError> {
    let gap = alpha - beta - 1.0;
    if gap == 0.0 {
        return Ok((t.exp(), t));
    }
    let s = 1.0 + gap * t;
    if s <= 0.0 {
        return Err(FlowError::Domain(format!(
            "rescaling undefined at t = {t}: 1 + (alpha-beta-1) t = {s} <= 0"
        )));
    }
    Ok((s.powf(1.0 / gap), s.ln() / gap))
}

/// Per-step aggregate measurements feeding the stop rules and records.
#[derive(Debug, Clone, Copy)]
struct StepDiag {
    r_min: f64,
    r_max: f64,
    u_min: f64,
    u_max: f64,
    lam_min: f64,
    lam_max: f64,
    f_min: f64,
    f_max: f64,
    grad_max: f64,
    margin_min: f64,
    /// Largest linearized diffusion coefficient over the nodes.
    d_max: f64,
    /// Largest |rhs| relative to the profile scale (stationarity residual).
    residual: f64,
}

struct Engine {
    cfg: FlowConfig,
    grid: Grid,
    f: CurvatureFunction,
    f_dual: CurvatureFunction,
    cot: Vec<f64>,
    lam_buf: Vec<f64>,
    grad_buf: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
    rhs_buf: Vec<f64>,
    stage: Vec<f64>,
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
}

impl Engine {
    fn new(cfg: &FlowConfig) -> Result<Engine, FlowError> {
        cfg.validate()?;
        let f = CurvatureFunction::parse(&cfg.f_spec, cfg.n)?;
        let f_dual = f.dual();
        let grid = Grid::for_dimension(cfg.n, cfg.resolution);
        let m = grid.node_count();
        let cot = (0..m)
            .map(|j| {
                let t = grid.theta(j);
                if j == 0 || (grid.kind == GridKind::PolarInterval && j == grid.resolution) {
                    0.0
                } else {
                    t.cos() / t.sin()
                }
            })
            .collect();
        Ok(Engine {
            cfg: cfg.clone(),
            grid,
            f,
            f_dual,
            cot,
            lam_buf: vec![0.0; cfg.n],
            grad_buf: vec![0.0; cfg.n],
            d1: vec![0.0; m],
            d2: vec![0.0; m],
            rhs_buf: vec![0.0; m],
            stage: vec![0.0; m],
            k1: vec![0.0; m],
            k2: vec![0.0; m],
            k3: vec![0.0; m],
            k4: vec![0.0; m],
        })
    }

    /// Evaluate the nodal time derivative into `rhs_buf`. With
    /// `with_diag` also gather the per-step aggregates (these need speed
    /// gradients and are skipped inside RK stages).
    fn eval_rhs(&mut self, vals: &[f64], with_diag: bool) -> Result<Option<StepDiag>, StepError> {
        let m = self.grid.node_count();
        let n = self.cfg.n;
        let polar = self.grid.kind == GridKind::PolarInterval;
        self.grid.deriv1_into(vals, &mut self.d1);
        self.grid.deriv2_into(vals, &mut self.d2);
        let mut diag = StepDiag {
            r_min: f64::INFINITY,
            r_max: f64::NEG_INFINITY,
            u_min: f64::INFINITY,
            u_max: f64::NEG_INFINITY,
            lam_min: f64::INFINITY,
            lam_max: f64::NEG_INFINITY,
            f_min: f64::INFINITY,
            f_max: f64::NEG_INFINITY,
            grad_max: 0.0,
            margin_min: f64::INFINITY,
            d_max: 0.0,
            residual: 0.0,
        };
        let (alpha, beta) = (self.cfg.alpha, self.cfg.beta);
        let d1 = &self.d1[..m];
        let d2 = &self.d2[..m];
        let cot = &self.cot[..m];
        let vals = &vals[..m];
        let rhs_buf = &mut self.rhs_buf[..m];
        for j in 0..m {
            let v = vals[j];
            if !v.is_finite() || v <= 0.0 {
                return Err(StepError::NumericalFailure {
                    detail: format!("non-positive profile value {v} at node {j}"),
                });
            }
            let vp = d1[j];
            let vpp = d2[j];
            if !vp.is_finite() || !vpp.is_finite() {
                return Err(StepError::NumericalFailure {
                    detail: format!("non-finite derivative at node {j}"),
                });
            }
            let at_pole = polar && (j == 0 || j == self.grid.resolution);
            let theta = self.grid.theta(j);
            match self.cfg.parametrization {
                Parametrization::Radial => {
                    let r = v;
                    let msq = r * r + vp * vp;
                    let w = msq.sqrt();
                    let lam1 = (r * r + 2.0 * vp * vp - r * vpp) / (msq * w);
                    if lam1 <= 0.0 {
                        return Err(StepError::LostConvexity { theta, value: lam1 });
                    }
                    self.lam_buf[0] = lam1;
                    if n >= 2 {
                        let hess = if at_pole { vpp } else { vp * cot[j] };
                        let lam_a = (r - hess) / (r * w);
                        if lam_a <= 0.0 {
                            return Err(StepError::LostConvexity {
                                theta,
                                value: lam_a,
                            });
                        }
                        for slot in self.lam_buf[1..].iter_mut() {
                            *slot = lam_a;
                        }
                    }
                    let fv = self.f.eval_slice(&self.lam_buf);
                    let u = r * r / w;
                    let weight = match self.cfg.speed_kind {
                        SpeedKind::RadialWeight => r,
                        SpeedKind::SupportWeight => u,
                    };
                    let phi = powfast(weight, alpha) * powfast(fv, beta);
                    let speed_factor = w / r; // sqrt(1 + |Dr|^2 / r^2)
                    let mut rhs = -speed_factor * phi;
                    if self.cfg.normalized {
                        rhs += r;
                    }
                    rhs_buf[j] = rhs;
                    if with_diag {
                        self.f.grad_slice(&self.lam_buf, &mut self.grad_buf);
                        let grad_max = self.grad_buf.iter().cloned().fold(0.0, f64::max);
                        // coefficient of the second-derivative term after
                        // linearizing the speed through F
                        let d = beta * phi / fv * grad_max / msq;
                        diag.d_max = diag.d_max.max(d);
                        diag.r_min = diag.r_min.min(r);
                        diag.r_max = diag.r_max.max(r);
                        diag.u_min = diag.u_min.min(u);
                        diag.u_max = diag.u_max.max(u);
                        let lam_lo = self.lam_buf.iter().cloned().fold(f64::INFINITY, f64::min);
                        let lam_hi = self
                            .lam_buf
                            .iter()
                            .cloned()
                            .fold(f64::NEG_INFINITY, f64::max);
                        diag.lam_min = diag.lam_min.min(lam_lo);
                        diag.lam_max = diag.lam_max.max(lam_hi);
                        diag.f_min = diag.f_min.min(fv);
                        diag.f_max = diag.f_max.max(fv);
                        diag.grad_max = diag.grad_max.max(vp.abs() / r);
                        diag.margin_min = diag.margin_min.min(r * r / msq);
                        diag.residual = diag.residual.max(rhs.abs());
                    }
                }
                Parametrization::Support => {
                    let u = v;
                    let tau1 = vpp + u;
                    if tau1 <= 0.0 {
                        return Err(StepError::LostConvexity { theta, value: tau1 });
                    }
                    self.lam_buf[0] = tau1;
                    if n >= 2 {
                        let tau_a = if at_pole { tau1 } else { vp * cot[j] + u };
                        if tau_a <= 0.0 {
                            return Err(StepError::LostConvexity {
                                theta,
                                value: tau_a,
                            });
                        }
                        for slot in self.lam_buf[1..].iter_mut() {
                            *slot = tau_a;
                        }
                    }
                    let fstar = self.f_dual.eval_slice(&self.lam_buf);
                    let r = (u * u + vp * vp).sqrt();
                    let weight = match self.cfg.speed_kind {
                        SpeedKind::RadialWeight => r,
                        SpeedKind::SupportWeight => u,
                    };
                    let phi = powfast(weight, alpha) * powfast(fstar, -beta);
                    let mut rhs = -phi;
                    if self.cfg.normalized {
                        rhs += u;
                    }
                    rhs_buf[j] = rhs;
                    if with_diag {
                        self.f_dual.grad_slice(&self.lam_buf, &mut self.grad_buf);
                        let grad_max = self.grad_buf.iter().cloned().fold(0.0, f64::max);
                        // dual-picture linearization: the Hessian enters tau
                        // directly, so the metric factor is 1
                        let d =
                            beta * powfast(weight, alpha) * powfast(fstar, -beta - 1.0) * grad_max;
                        diag.d_max = diag.d_max.max(d);
                        diag.r_min = diag.r_min.min(r);
                        diag.r_max = diag.r_max.max(r);
                        diag.u_min = diag.u_min.min(u);
                        diag.u_max = diag.u_max.max(u);
                        let tau_lo = self.lam_buf.iter().cloned().fold(f64::INFINITY, f64::min);
                        let tau_hi = self
                            .lam_buf
                            .iter()
                            .cloned()
                            .fold(f64::NEG_INFINITY, f64::max);
                        diag.lam_min = diag.lam_min.min(1.0 / tau_hi);
                        diag.lam_max = diag.lam_max.max(1.0 / tau_lo);
                        let fv = 1.0 / fstar;
                        diag.f_min = diag.f_min.min(fv);
                        diag.f_max = diag.f_max.max(fv);
                        diag.grad_max =
                            diag.grad_max.max((r * r / (u * u) - 1.0).max(0.0).sqrt());
                        diag.margin_min = diag.margin_min.min((u / r) * (u / r));
                        diag.residual = diag.residual.max(rhs.abs());
                    }
                }
            }
        }
        if with_diag {
            diag.residual /= diag.r_max.max(f64::MIN_POSITIVE);
            Ok(Some(diag))
        } else {
            Ok(None)
        }
    }

    fn stable_dt_from(&self, diag: &StepDiag) -> f64 {
        let h = self.grid.h;
        self.cfg.safety * h * h / diag.d_max.max(f64::MIN_POSITIVE)
    }

    /// One RK4 step of size `dt`, writing the updated profile in place.
    fn rk4_step(&mut self, vals: &mut [f64], dt: f64) -> Result<(), StepError> {
        self.eval_rhs(vals, false)?;
        self.k1.copy_from_slice(&self.rhs_buf);
        self.rk4_finish(vals, dt)
    }

    /// Complete an RK4 step whose first stage derivative is already in
    /// `k1` (the per-step diagnostics pass computes exactly that).
    fn rk4_finish(&mut self, vals: &mut [f64], dt: f64) -> Result<(), StepError> {
        let m = vals.len();
        for j in 0..m {
            self.stage[j] = vals[j] + 0.5 * dt * self.k1[j];
        }
        let stage = std::mem::take(&mut self.stage);
        let res = self.eval_rhs(&stage, false);
        self.stage = stage;
        res?;
        self.k2.copy_from_slice(&self.rhs_buf);
        for j in 0..m {
            self.stage[j] = vals[j] + 0.5 * dt * self.k2[j];
        }
        let stage = std::mem::take(&mut self.stage);
        let res = self.eval_rhs(&stage, false);
        self.stage = stage;
        res?;
        self.k3.copy_from_slice(&self.rhs_buf);
        for j in 0..m {
            self.stage[j] = vals[j] + dt * self.k3[j];
        }
        let stage = std::mem::take(&mut self.stage);
        let res = self.eval_rhs(&stage, false);
        self.stage = stage;
        res?;
        self.k4.copy_from_slice(&self.rhs_buf);
        for j in 0..m {
            vals[j] += dt / 6.0 * (self.k1[j] + 2.0 * self.k2[j] + 2.0 * self.k3[j] + self.k4[j]);
            if !vals[j].is_finite() {
                return Err(StepError::NumericalFailure {
                    detail: format!("non-finite value after step at node {j}"),
                });
            }
        }
        Ok(())
    }
}

/// Nodal time derivative of the evolving scalar for the configured flow.
pub fn rhs(state: &FlowState, cfg: &FlowConfig) -> Result<Vec<f64>, FlowError> {
    let mut engine = Engine::new(cfg)?;
    engine.eval_rhs(state.profile.values(), false)?;
    Ok(engine.rhs_buf)
}

/// Largest stable explicit step from this state: `safety * h^2 / D_max`,
/// additionally capped at the remaining time to `t_max`.
pub fn stable_dt(state: &FlowState, cfg: &FlowConfig) -> Result<f64, FlowError> {
    let mut engine = Engine::new(cfg)?;
    let diag = engine
        .eval_rhs(state.profile.values(), true)?
        .expect("diagnostics requested");
    Ok(engine.stable_dt_from(&diag).min(cfg.t_max - state.t))
}

/// Advance one RK4 step of size `dt` (callers keep `dt` within
/// [`stable_dt`]); the geometry cache of the result is rebuilt.
pub fn step(state: &FlowState, cfg: &FlowConfig, dt: f64) -> Result<FlowState, FlowError> {
    let mut engine = Engine::new(cfg)?;
    let mut vals = state.profile.values().to_vec();
    engine.rk4_step(&mut vals, dt)?;
    let profile = match cfg.parametrization {
        Parametrization::Radial => Profile::radial(cfg.n, vals)?,
        Parametrization::Support => Profile::support(cfg.n, vals)?,
    };
    FlowState::from_profile(cfg, state.t + dt, profile)
}

fn make_record(t: f64, diag: &StepDiag, dt: f64) -> Record {
    Record {
        t,
        r_min: diag.r_min,
        r_max: diag.r_max,
        ratio: diag.r_max / diag.r_min,
        grad_ratio_max: diag.grad_max,
        lambda_min: diag.lam_min,
        lambda_max: diag.lam_max,
        f_min: diag.f_min,
        f_max: diag.f_max,
        u_min: diag.u_min,
        u_max: diag.u_max,
        star_margin: diag.margin_min,
        dt,
    }
}

/// Integrate the configured flow from `initial` until a stop rule fires.
///
/// Records are written for the initial state, every `record_every`-th
/// accepted step and the final state; the `dt` column holds the step taken
/// from that record's time (0 on the final record). Snapshots are taken at
/// `t = 0`, at every `snapshot_every` interval (steps land on those times
/// exactly) and at termination.
pub fn run(cfg: &FlowConfig, initial: &Profile) -> Result<RunOutput, FlowError> {
    let mut engine = Engine::new(cfg)?;
    // surface kind/shape mismatches before stepping
    FlowState::from_profile(cfg, 0.0, initial.clone())?;

    let mut vals = initial.values().to_vec();
    let mut t = 0.0f64;
    let mut series = TimeSeries::new();
    let mut snapshots: Vec<(f64, Profile)> = Vec::new();
    let mut step_index: usize = 0;
    let mut next_snap = cfg.snapshot_every;
    let make_profile = |vals: &[f64]| -> Result<Profile, FlowError> {
        Ok(match cfg.parametrization {
            Parametrization::Radial => Profile::radial(cfg.n, vals.to_vec())?,
            Parametrization::Support => Profile::support(cfg.n, vals.to_vec())?,
        })
    };
    snapshots.push((0.0, make_profile(&vals)?));
    let eps_t = 1e-12 * cfg.t_max;

    let stop = loop {
        let diag = match engine.eval_rhs(&vals, true) {
            Ok(d) => d.expect("diagnostics requested"),
            Err(StepError::LostConvexity { theta, value }) => {
                break StopReason::LostConvexity { t, theta, value };
            }
            Err(StepError::NumericalFailure { detail }) => {
                break StopReason::NumericalFailure { t, detail };
            }
        };
        let ratio = diag.r_max / diag.r_min;

        if diag.lam_max > cfg.stop.curvature_cap {
            series.push(make_record(t, &diag, 0.0));
            break StopReason::NumericalFailure {
                t,
                detail: format!("curvature {} exceeded the cap", diag.lam_max),
            };
        }
        if ratio > cfg.stop.blowup_ratio {
            series.push(make_record(t, &diag, 0.0));
            break StopReason::RatioBlowup { t, ratio };
        }
        if diag.r_min < cfg.stop.origin_eps {
            series.push(make_record(t, &diag, 0.0));
            break StopReason::ReachedOrigin {
                t,
                r_min: diag.r_min,
            };
        }
        if cfg.normalized
            && diag.grad_max < cfg.stop.grad_ratio_tol
            && ratio - 1.0 < cfg.stop.ratio_tol
            && diag.residual < cfg.stop.grad_ratio_tol
        {
            series.push(make_record(t, &diag, 0.0));
            break StopReason::Converged {
                t,
                grad_ratio: diag.grad_max,
                ratio,
                residual: diag.residual,
            };
        }
        if t >= cfg.t_max - eps_t {
            series.push(make_record(t, &diag, 0.0));
            break StopReason::TimeExhausted { t };
        }

        // step size: stability bound, landing exactly on snapshot times
        // and on t_max
        let mut dt = engine.stable_dt_from(&diag);
        let mut land: Option<f64> = None;
        let mut target = cfg.t_max;
        if let Some(ns) = next_snap {
            target = target.min(ns);
        }
        if t + dt >= target - eps_t {
            dt = target - t;
            land = Some(target);
        }

        if step_index.is_multiple_of(cfg.record_every) && series.last().map(|r| r.t) != Some(t) {
            series.push(make_record(t, &diag, dt));
        }

        // the diagnostics pass already evaluated the derivative at `vals`
        std::mem::swap(&mut engine.k1, &mut engine.rhs_buf);
        match engine.rk4_finish(&mut vals, dt) {
            Ok(()) => {}
            Err(StepError::LostConvexity { theta, value }) => {
                break StopReason::LostConvexity { t, theta, value };
            }
            Err(StepError::NumericalFailure { detail }) => {
                break StopReason::NumericalFailure { t, detail };
            }
        }
        t = match land {
            Some(event) => event,
            None => t + dt,
        };
        step_index += 1;
        if let (Some(ns), Some(interval)) = (next_snap, cfg.snapshot_every) {
            if t >= ns - eps_t {
                snapshots.push((t, make_profile(&vals)?));
                next_snap = Some(ns + interval);
            }
        }
    };

    // final record if the loop broke before writing one at this t
    if series.last().map(|r| r.t) != Some(t) {
        if let Ok(Some(diag)) = engine.eval_rhs(&vals, true) {
            series.push(make_record(t, &diag, 0.0));
        }
    }
    let final_profile = make_profile(&vals)?;
    if snapshots.last().map(|(st, _)| *st) != Some(t) {
        snapshots.push((t, final_profile.clone()));
    }
    let final_state = FlowState::from_profile(cfg, t, final_profile)?;
    Ok(RunOutput {
        config: cfg.clone(),
        series,
        snapshots,
        final_state,
        stop,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ratio as profile_ratio;

    fn sphere(n: usize, resolution: usize, radius: f64) -> Profile {
        let grid = Grid::for_dimension(n, resolution);
        Profile::radial(n, vec![radius; grid.node_count()]).unwrap()
    }

    fn sphere_support(n: usize, resolution: usize, radius: f64) -> Profile {
        let grid = Grid::for_dimension(n, resolution);
        Profile::support(n, vec![radius; grid.node_count()]).unwrap()
    }

    fn base_cfg(alpha: f64, beta: f64, n: usize, resolution: usize) -> FlowConfig {
        let mut cfg = FlowConfig::new(alpha, beta, n, "arithmetic-mean");
        cfg.resolution = resolution;
        cfg.record_every = 1;
        cfg
    }

    #[test]
    fn config_validation_names_offending_fields() {
        let mut cfg = base_cfg(3.0, 1.0, 2, 64);
        cfg.beta = 0.5;
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("beta"));
        let mut cfg = base_cfg(3.0, 1.0, 2, 64);
        cfg.safety = 1.5;
        assert!(cfg.validate().unwrap_err().to_string().contains("safety"));
        let mut cfg = base_cfg(3.0, 1.0, 2, 64);
        cfg.f_spec = "ek-root(9)".into();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn sphere_rhs_matches_scalar_reduction() {
        // normalized radial flow on a sphere: rhs = -rho^(alpha-beta) + rho
        let rho = 0.7;
        let cfg = base_cfg(3.0, 1.0, 2, 64);
        let state = FlowState::from_profile(&cfg, 0.0, sphere(2, 64, rho)).unwrap();
        let r = rhs(&state, &cfg).unwrap();
        let expect = -rho * rho + rho;
        for &v in &r {
            assert!((v - expect).abs() < 1e-13);
        }

        // unnormalized with alpha = beta + 1: rhs = -rho
        let mut cfg = base_cfg(2.0, 1.0, 2, 64);
        cfg.normalized = false;
        let state = FlowState::from_profile(&cfg, 0.0, sphere(2, 64, rho)).unwrap();
        for &v in &rhs(&state, &cfg).unwrap() {
            assert!((v + rho).abs() < 1e-13);
        }

        // support picture agrees with the radial picture on spheres
        let mut cfg_s = base_cfg(3.0, 1.0, 2, 64);
        cfg_s.parametrization = Parametrization::Support;
        let state = FlowState::from_profile(&cfg_s, 0.0, sphere_support(2, 64, rho)).unwrap();
        for &v in &rhs(&state, &cfg_s).unwrap() {
            assert!((v - expect).abs() < 1e-13);
        }
    }

    #[test]
    fn stable_dt_matches_plugin_example() {
        // sphere rho = 1, arithmetic mean, alpha = 2, beta = 1, radial:
        // Phi = 1, F = 1, max grad = 1/n, metric 1 -> D = beta / n
        let cfg = base_cfg(2.0, 1.0, 2, 64);
        let state = FlowState::from_profile(&cfg, 0.0, sphere(2, 64, 1.0)).unwrap();
        let dt = stable_dt(&state, &cfg).unwrap();
        let h = std::f64::consts::PI / 64.0;
        let expect = cfg.safety * h * h / (1.0 / 2.0);
        assert!((dt - expect).abs() < 1e-15 * expect);

        // the remaining-time cap
        let mut cfg_short = cfg.clone();
        cfg_short.t_max = 1e-9;
        let state = FlowState::from_profile(&cfg_short, 0.0, sphere(2, 64, 1.0)).unwrap();
        let dt = stable_dt(&state, &cfg_short).unwrap();
        assert!(dt <= 1e-9);
    }

    #[test]
    fn rk4_over_zero_rhs_is_identity() {
        // the stepper applied to a vanishing derivative must return the
        // state unchanged
        let vals = vec![1.25f64; 32];
        let mut stepped = vals.clone();
        let k = vec![0.0f64; 32];
        for j in 0..32 {
            stepped[j] += 0.1 / 6.0 * (k[j] + 2.0 * k[j] + 2.0 * k[j] + k[j]);
        }
        assert_eq!(stepped, vals);
    }

    #[test]
    fn sphere_step_matches_scalar_rk4_oracle() {
        // textbook RK4 for rho' = -rho^2 + rho against the PDE step
        let cfg = base_cfg(3.0, 1.0, 2, 64);
        let state = FlowState::from_profile(&cfg, 0.0, sphere(2, 64, 0.5)).unwrap();
        let dt = 1e-3;
        let next = step(&state, &cfg, dt).unwrap();
        let f = |x: f64| -x * x + x;
        let (y, h) = (0.5, dt);
        let k1 = f(y);
        let k2 = f(y + 0.5 * h * k1);
        let k3 = f(y + 0.5 * h * k2);
        let k4 = f(y + h * k3);
        let oracle = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        for &v in next.profile.values() {
            assert!((v - oracle).abs() < 1e-14, "{v} vs {oracle}");
        }
    }

    #[test]
    fn spheres_stay_exactly_spherical() {
        let cfg = base_cfg(3.0, 1.0, 2, 32);
        let mut engine = Engine::new(&cfg).unwrap();
        let mut vals = vec![0.5; engine.grid.node_count()];
        for _ in 0..1000 {
            engine.rk4_step(&mut vals, 5e-4).unwrap();
        }
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(hi - lo <= 1e-10, "spread {}", hi - lo);
        assert!(hi < 1.0 && lo > 0.5);
    }

    #[test]
    fn normalized_sphere_run_converges_to_unit_radius() {
        let mut cfg = base_cfg(3.0, 1.0, 2, 64);
        cfg.record_every = 5;
        let out = run(&cfg, &sphere(2, 64, 0.5)).unwrap();
        assert!(
            matches!(out.stop, StopReason::Converged { .. }),
            "{}",
            out.stop
        );
        for &v in out.final_state.profile.values() {
            assert!((v - 1.0).abs() < 1e-6);
        }
        // barrier identity r^q - 1 = (a^q - 1) e^{q t} with q = -1,
        // exact on spheres
        for rec in out.series.records() {
            let expect = 1.0 / (1.0 + (1.0 / 0.5 - 1.0) * (-rec.t).exp());
            assert!(
                (rec.r_max - expect).abs() <= 1e-6 * expect,
                "t = {}: {} vs {expect}",
                rec.t,
                rec.r_max
            );
        }
    }

    #[test]
    fn unnormalized_critical_flow_is_exact_exponential() {
        let mut cfg = base_cfg(2.0, 1.0, 2, 64);
        cfg.normalized = false;
        cfg.t_max = 10.0;
        cfg.record_every = 10;
        let out = run(&cfg, &sphere(2, 64, 1.0)).unwrap();
        assert!(
            matches!(out.stop, StopReason::ReachedOrigin { .. }),
            "{}",
            out.stop
        );
        for rec in out.series.records() {
            let expect = (-rec.t).exp();
            assert!((rec.r_max - expect).abs() <= 1e-6 * expect, "t = {}", rec.t);
        }
    }

    #[test]
    fn counterexample_flow_blows_up_the_ratio() {
        // curve shortening (alpha = 0, beta = 1, n = 1) of an eccentric
        // circle: the circle contracts about its own center onto a point
        // away from the origin
        let mut cfg = base_cfg(0.0, 1.0, 1, 128);
        cfg.normalized = false;
        cfg.t_max = 0.5;
        cfg.record_every = 10;
        let grid = Grid::for_dimension(1, 128);
        let (rho, d) = (1.0, 0.9);
        let vals: Vec<f64> = grid
            .thetas()
            .iter()
            .map(|&t| d * t.cos() + (rho * rho - d * d * t.sin().powi(2)).sqrt())
            .collect();
        let initial = Profile::radial(1, vals).unwrap();
        let out = run(&cfg, &initial).unwrap();
        match out.stop {
            StopReason::RatioBlowup { ratio, .. } => assert!(ratio > 50.0),
            other => panic!("expected ratio blow-up, got {other}"),
        }
        let last = out.series.last().unwrap();
        assert!(last.r_min > cfg.stop.origin_eps);
        // circle of radius sqrt(1 - 2t) centered at 0.9: ratio 50 occurs
        // near rho(t) = 45.9/49
        let expect_rho: f64 = 45.9 / 49.0;
        let expect_t = (1.0 - expect_rho * expect_rho) / 2.0;
        let t_final = out.final_state.t;
        assert!(
            (t_final - expect_t).abs() < 5e-3,
            "t = {t_final} vs {expect_t}"
        );
    }

    #[test]
    fn rescale_map_matches_closed_forms() {
        let (phi, tau) = rescale_map(1.0, 2.0, 1.0).unwrap();
        assert!((phi - std::f64::consts::E).abs() < 1e-15);
        assert!((tau - 1.0).abs() < 1e-15);

        // alpha - beta - 1 = 1
        let (phi, tau) = rescale_map(1.0, 3.0, 1.0).unwrap();
        assert!((phi - 2.0).abs() < 1e-15);
        assert!((tau - 2f64.ln()).abs() < 1e-15);

        let (phi, tau) = rescale_map(0.0, 1.5, 1.0).unwrap();
        assert_eq!((phi, tau), (1.0, 0.0));

        // q > 0 branch hits the domain boundary at t = 1/(beta+1-alpha)
        assert!(rescale_map(1.9, 1.5, 1.0).is_ok());
        assert!(rescale_map(2.0, 1.5, 1.0).is_err());
    }

    #[test]
    fn run_rejects_mismatched_profiles() {
        let cfg = base_cfg(3.0, 1.0, 2, 64);
        let wrong_resolution = sphere(2, 32, 1.0);
        assert!(matches!(
            run(&cfg, &wrong_resolution),
            Err(FlowError::Config(_))
        ));
        let wrong_kind = sphere_support(2, 64, 1.0);
        assert!(matches!(run(&cfg, &wrong_kind), Err(FlowError::Config(_))));
    }

    #[test]
    fn engine_diagnostics_agree_with_geometry_module() {
        let grid = Grid::for_dimension(2, 96);
        let vals: Vec<f64> = grid
            .thetas()
            .iter()
            .map(|&t| 1.0 + 0.2 * t.cos() + 0.05 * (2.0 * t).cos())
            .collect();
        let p = Profile::radial(2, vals).unwrap();
        let cfg = base_cfg(3.0, 1.0, 2, 96);
        let mut engine = Engine::new(&cfg).unwrap();
        let diag = engine.eval_rhs(p.values(), true).unwrap().unwrap();
        let g = radial_to_geometry(&p).unwrap();
        assert!((diag.lam_min - g.lambda_min()).abs() < 1e-13);
        assert!((diag.lam_max - g.lambda_max()).abs() < 1e-13);
        assert!((diag.grad_max - g.grad_ratio_max()).abs() < 1e-13);
        assert!((diag.margin_min - g.star_margin_min()).abs() < 1e-13);
        assert!((diag.r_max / diag.r_min - profile_ratio(&p)).abs() < 1e-13);
    }

    #[test]
    fn snapshots_land_on_exact_times() {
        let mut cfg = base_cfg(3.0, 1.0, 2, 32);
        cfg.t_max = 0.25;
        cfg.snapshot_every = Some(0.1);
        let out = run(&cfg, &sphere(2, 32, 0.5)).unwrap();
        let times: Vec<f64> = out.snapshots.iter().map(|(t, _)| *t).collect();
        assert_eq!(times, vec![0.0, 0.1, 0.2, 0.25]);
        assert!(matches!(out.stop, StopReason::TimeExhausted { .. }));
        assert_eq!(out.final_state.t, 0.25);
    }
}
