//! Initial bodies, exact reference solutions and comparison experiments.
//!
//! The catalogue covers: round spheres and their exact normalized-flow
//! barrier radii, ellipsoids of revolution, off-center spheres, and the
//! two-branch convex profile
//!
//! ```text
//! phi(rho, t) = -|t|^th + |t|^((s-1) th) rho^2,                rho <  |t|^th
//! phi(rho, t) = -|t|^th - (1-s)/(1+s) |t|^((1+s) th)
//!               + 2/(1+s) rho^(1+s),                           rho in [|t|^th, 1]
//! ```
//!
//! with `s = (g th - 1)/(b th)`, whose principal curvatures have closed
//! forms on each branch. A closed convex body built from that graph (the
//! bowl plus a tangent spherical cap) realizes the ratio blow-up mechanism
//! of the sub-critical exponent range at desk scale.

use crate::flow::{FlowConfig, FlowError, Parametrization, RunOutput, SpeedKind};
use crate::geometry::{radial_to_support_profile, GeometryError, Profile, ProfileKind};
use crate::grid::Grid;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unknown preset '{0}'")]
    UnknownPreset(String),
    #[error("config mismatch: {0}")]
    ConfigMismatch(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Flow(#[from] FlowError),
}

/// Exact radius of a normalized-flow sphere solution with exponent gap
/// `q = beta + 1 - alpha`: `r(t) = (1 - (1 - a^q) e^{q t})^{1/q}`.
pub fn barrier_radius(t: f64, a: f64, q: f64) -> Result<f64, ScenarioError> {
    if q == 0.0 {
        return Err(ScenarioError::Domain(
            "barrier radius needs q != 0 (spheres are stationary at q = 0)".into(),
        ));
    }
    if !(a > 0.0) {
        return Err(ScenarioError::Domain(format!(
            "initial radius must be positive, got {a}"
        )));
    }
    let arg = 1.0 - (1.0 - a.powf(q)) * (q * t).exp();
    if arg <= 0.0 {
        return Err(ScenarioError::Domain(format!(
            "sphere has reached the origin: 1 - (1 - a^q) e^(q t) = {arg} <= 0"
        )));
    }
    Ok(arg.powf(1.0 / q))
}

/// Shape parameters of the two-branch profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CounterexampleParams {
    /// Profile exponent, must exceed `1 / gamma_gap`.
    pub theta_exp: f64,
    /// Exponent gap `gamma = beta + 1 - alpha > 0`.
    pub gamma_gap: f64,
    pub beta: f64,
    /// Time slice in `(-1, 0)`.
    pub t_param: f64,
}

impl CounterexampleParams {
    pub fn new(
        theta_exp: f64,
        gamma_gap: f64,
        beta: f64,
        t_param: f64,
    ) -> Result<CounterexampleParams, ScenarioError> {
        if !(gamma_gap > 0.0) {
            return Err(ScenarioError::Domain(format!(
                "gamma_gap must be positive, got {gamma_gap}"
            )));
        }
        if !(beta >= 1.0) {
            return Err(ScenarioError::Domain(format!(
                "beta must be at least 1, got {beta}"
            )));
        }
        if !(theta_exp > 1.0 / gamma_gap) {
            return Err(ScenarioError::Domain(format!(
                "theta_exp must exceed 1/gamma_gap = {}, got {theta_exp}",
                1.0 / gamma_gap
            )));
        }
        if !(t_param > -1.0 && t_param < 0.0) {
            return Err(ScenarioError::Domain(format!(
                "t_param must lie in (-1, 0), got {t_param}"
            )));
        }
        let p = CounterexampleParams {
            theta_exp,
            gamma_gap,
            beta,
            t_param,
        };
        let s = p.sigma();
        if !(s > 0.0 && s < 1.0) {
            return Err(ScenarioError::Domain(format!(
                "derived sigma = {s} is outside (0, 1)"
            )));
        }
        Ok(p)
    }

    /// `sigma = (gamma theta - 1) / (beta theta)`.
    pub fn sigma(&self) -> f64 {
        (self.gamma_gap * self.theta_exp - 1.0) / (self.beta * self.theta_exp)
    }

    /// Seam radius `|t|^theta` between the branches.
    pub fn seam(&self) -> f64 {
        self.t_param.abs().powf(self.theta_exp)
    }

    /// Curvature scale `|t|^((sigma - 1) theta)` of the inner branch.
    pub fn inner_coeff(&self) -> f64 {
        self.t_param.abs().powf((self.sigma() - 1.0) * self.theta_exp)
    }
}

/// Height and closed-form principal curvatures of the profile graph at
/// distance `rho` from the axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilePoint {
    pub height: f64,
    pub lambda_profile: f64,
    pub lambda_orbit: f64,
}

/// Evaluate the two-branch profile and its closed-form curvatures.
pub fn counterexample_profile(
    p: &CounterexampleParams,
    rho: f64,
) -> Result<ProfilePoint, ScenarioError> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(ScenarioError::Domain(format!(
            "rho must lie in [0, 1], got {rho}"
        )));
    }
    let sigma = p.sigma();
    let seam = p.seam();
    let tt = p.t_param.abs();
    Ok(if rho < seam {
        let c = p.inner_coeff();
        let height = -seam + c * rho * rho;
        let root = 1.0 + 4.0 * c * c * rho * rho;
        ProfilePoint {
            height,
            lambda_profile: 2.0 * c / root.powf(1.5),
            lambda_orbit: 2.0 * c / root.sqrt(),
        }
    } else {
        let height = -seam - (1.0 - sigma) / (1.0 + sigma) * tt.powf((1.0 + sigma) * p.theta_exp)
            + 2.0 / (1.0 + sigma) * rho.powf(1.0 + sigma);
        let root = 1.0 + 4.0 * rho.powf(2.0 * sigma);
        ProfilePoint {
            height,
            lambda_profile: 2.0 * sigma * rho.powf(sigma - 1.0) / root.powf(1.5),
            lambda_orbit: 2.0 * rho.powf(sigma - 1.0) / root.sqrt(),
        }
    })
}

/// Round sphere as a radial profile.
pub fn sphere_profile(n: usize, resolution: usize, radius: f64) -> Result<Profile, ScenarioError> {
    if !(radius > 0.0) {
        return Err(ScenarioError::Domain("radius must be positive".into()));
    }
    let grid = Grid::for_dimension(n, resolution);
    Ok(Profile::radial(n, vec![radius; grid.node_count()])?)
}

/// Ellipsoid of revolution (ellipse for `n = 1`) with polar semi-axis `a`
/// and equatorial semi-axis `b`, as a radial profile.
pub fn ellipsoid_profile(
    n: usize,
    resolution: usize,
    a: f64,
    b: f64,
) -> Result<Profile, ScenarioError> {
    if !(a > 0.0 && b > 0.0) {
        return Err(ScenarioError::Domain("semi-axes must be positive".into()));
    }
    let grid = Grid::for_dimension(n, resolution);
    let values = grid
        .thetas()
        .iter()
        .map(|&t| a * b / (b * b * t.cos().powi(2) + a * a * t.sin().powi(2)).sqrt())
        .collect();
    Ok(Profile::radial(n, values)?)
}

/// The same ellipsoid as a support profile, via the closed form
/// `u(phi) = sqrt(a^2 cos^2 phi + b^2 sin^2 phi)`.
pub fn ellipsoid_support_profile(
    n: usize,
    resolution: usize,
    a: f64,
    b: f64,
) -> Result<Profile, ScenarioError> {
    if !(a > 0.0 && b > 0.0) {
        return Err(ScenarioError::Domain("semi-axes must be positive".into()));
    }
    let grid = Grid::for_dimension(n, resolution);
    let values = grid
        .thetas()
        .iter()
        .map(|&t| (a * a * t.cos().powi(2) + b * b * t.sin().powi(2)).sqrt())
        .collect();
    Ok(Profile::support(n, values)?)
}

/// Round sphere of radius `rho` centered at distance `d` along the
/// symmetry axis: `r(theta) = d cos(theta) + sqrt(rho^2 - d^2 sin^2)`.
pub fn eccentric_body(
    n: usize,
    resolution: usize,
    rho: f64,
    d: f64,
) -> Result<Profile, ScenarioError> {
    if !(rho > 0.0) {
        return Err(ScenarioError::Domain("radius must be positive".into()));
    }
    if !(0.0..rho).contains(&d) {
        return Err(ScenarioError::Domain(format!(
            "offset must satisfy 0 <= d < rho, got d = {d}, rho = {rho}"
        )));
    }
    let grid = Grid::for_dimension(n, resolution);
    let values = grid
        .thetas()
        .iter()
        .map(|&t| d * t.cos() + (rho * rho - d * d * t.sin().powi(2)).sqrt())
        .collect();
    Ok(Profile::radial(n, values)?)
}

/// Normal angle at which the wall arc hands over to the polar cap.
const FLASK_HANDOVER: f64 = 20.0 * std::f64::consts::PI / 180.0;

/// Closed convex body built from the two-branch graph: a flask. The bowl
/// over `rho <= 1` (where the outer branch always reaches slope 2 at the
/// rim) continues into a nearly straight wall arc and closes with a wide,
/// low-curvature polar cap whose apex sits at `height` on the axis. The
/// bottom hugs the origin at distance about `|t|^theta` while the flat
/// top keeps the body anchored, which is what lets the sub-critical flow
/// squeeze the bottom into the origin before the body can round out.
pub fn subsolution_bowl(
    p: &CounterexampleParams,
    height: f64,
    n: usize,
    resolution: usize,
) -> Result<Profile, ScenarioError> {
    let sigma = p.sigma();
    let seam = p.seam();
    let tt = p.t_param.abs();
    let rim_height = -seam - (1.0 - sigma) / (1.0 + sigma) * tt.powf((1.0 + sigma) * p.theta_exp)
        + 2.0 / (1.0 + sigma);
    // outward normal at the rim: (2, -1)/sqrt(5); the wall arc turns it to
    // the handover angle, the cap carries it to the north pole
    let root5 = 5.0f64.sqrt();
    let nu_rim = (-1.0f64).atan2(2.0);
    let delta = FLASK_HANDOVER;
    // apex height as a function of the wall radius (see the arc geometry
    // below): apex = rim_y + R (sin d + 1/sqrt5) + E_x (1 - sin d)/cos d
    // with E_x = 1 + R (cos d - 2/sqrt5)
    let slope_term = (delta.sin() + 1.0 / root5)
        + (delta.cos() - 2.0 / root5) * (1.0 - delta.sin()) / delta.cos();
    let offset_term = rim_height + (1.0 - delta.sin()) / delta.cos();
    let wall_radius = (height - offset_term) / slope_term;
    if !(wall_radius > 0.1) {
        return Err(ScenarioError::Domain(format!(
            "closure height {height} is too small for the rim at {rim_height:.4}"
        )));
    }
    // wall arc: center on the inward normal at the rim
    let wall_center = (
        1.0 - 2.0 * wall_radius / root5,
        rim_height + wall_radius / root5,
    );
    // handover point and the axis-centered cap through it
    let hand = (
        wall_center.0 + wall_radius * delta.cos(),
        wall_center.1 + wall_radius * delta.sin(),
    );
    if !(hand.0 > 0.0) {
        return Err(ScenarioError::Domain(
            "wall arc crosses the axis before the handover".into(),
        ));
    }
    let cap_radius = hand.0 / delta.cos();
    let cap_center_y = hand.1 - cap_radius * delta.sin();
    let inner_c = p.inner_coeff();

    // boundary point at master parameter s in [0, 1], from the apex down
    // to the bowl bottom; normal angles are measured from the equator
    let point = |s: f64| -> (f64, f64) {
        if s <= 0.25 {
            // cap: normal angle from pi/2 down to delta
            let nu = std::f64::consts::FRAC_PI_2 - 4.0 * s * (std::f64::consts::FRAC_PI_2 - delta);
            (cap_radius * nu.cos(), cap_center_y + cap_radius * nu.sin())
        } else if s <= 0.5 {
            // wall: normal angle from delta down to the rim normal
            let nu = delta - 4.0 * (s - 0.25) * (delta - nu_rim);
            (
                wall_center.0 + wall_radius * nu.cos(),
                wall_center.1 + wall_radius * nu.sin(),
            )
        } else if s <= 0.75 {
            let rho = 1.0 - 4.0 * (s - 0.5) * (1.0 - seam);
            let height = -seam
                - (1.0 - sigma) / (1.0 + sigma) * tt.powf((1.0 + sigma) * p.theta_exp)
                + 2.0 / (1.0 + sigma) * rho.powf(1.0 + sigma);
            (rho, height)
        } else {
            let rho = seam * (4.0 - 4.0 * s);
            (rho, -seam + inner_c * rho * rho)
        }
    };
    let angle_of = |s: f64| -> f64 {
        let (rho, y) = point(s);
        rho.atan2(y)
    };

    let grid = Grid::for_dimension(n, resolution);
    let mut values = Vec::with_capacity(grid.node_count());
    let span = grid.span();
    for j in 0..grid.node_count() {
        let mut theta = grid.theta(j);
        // a bowl profile is even; fold the periodic circle onto [0, pi]
        if theta > std::f64::consts::PI {
            theta = span - theta;
        }
        if theta <= 0.0 {
            values.push(height);
            continue;
        }
        if theta >= std::f64::consts::PI {
            values.push(seam);
            continue;
        }
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if angle_of(mid) < theta {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (rho, y) = point(0.5 * (lo + hi));
        values.push((rho * rho + y * y).sqrt());
    }
    Ok(Profile::radial(n, values)?)
}

/// Parameters of the canonical dichotomy experiment body.
pub fn canonical_bowl_params() -> CounterexampleParams {
    CounterexampleParams::new(4.0, 0.5, 1.0, -0.5).expect("canonical parameters are valid")
}

/// Closure height of the canonical dichotomy body.
pub const CANONICAL_BOWL_HEIGHT: f64 = 2.5;

/// One cell of the exponent-dichotomy sweep: normalized radial-weight flow
/// from the canonical bowl. Sub-critical `alpha` drives the flat bottom
/// into the origin while the tall body holds its extent; at or above the
/// critical exponent the body rounds out instead.
pub fn dichotomy_cell(
    alpha: f64,
    resolution: usize,
) -> Result<(FlowConfig, Profile), ScenarioError> {
    let mut cfg = FlowConfig::new(alpha, 1.0, 2, "arithmetic-mean");
    cfg.resolution = resolution;
    cfg.t_max = 60.0;
    let profile = subsolution_bowl(&canonical_bowl_params(), CANONICAL_BOWL_HEIGHT, 2, resolution)?;
    Ok((cfg, profile))
}

/// Nesting verdicts at the common snapshot times of two runs.
#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub times: Vec<f64>,
    pub nested: Vec<bool>,
    pub first_violation: Option<f64>,
}

impl ComparisonReport {
    pub fn all_nested(&self) -> bool {
        self.first_violation.is_none() && !self.times.is_empty()
    }
}

const NESTING_SLACK: f64 = 1e-10;

fn to_support(p: &Profile) -> Result<Profile, ScenarioError> {
    Ok(match p.kind() {
        ProfileKind::Support => p.clone(),
        ProfileKind::Radial => radial_to_support_profile(p)?,
    })
}

/// Check that run `inner` stays inside run `outer` at every common
/// snapshot time. Containment of convex bodies is compared through
/// support functions: nested iff `u_inner <= u_outer` in every direction.
pub fn comparison_check(
    inner: &RunOutput,
    outer: &RunOutput,
) -> Result<ComparisonReport, ScenarioError> {
    let a = &inner.config;
    let b = &outer.config;
    let mismatches: Vec<&str> = [
        (a.alpha != b.alpha, "alpha"),
        (a.beta != b.beta, "beta"),
        (a.f_spec != b.f_spec, "f_spec"),
        (a.speed_kind != b.speed_kind, "speed_kind"),
        (a.parametrization != b.parametrization, "parametrization"),
        (a.normalized != b.normalized, "normalized"),
        (a.n != b.n, "n"),
        (a.resolution != b.resolution, "resolution"),
        (a.snapshot_every != b.snapshot_every, "snapshot_every"),
    ]
    .iter()
    .filter_map(|&(bad, name)| if bad { Some(name) } else { None })
    .collect();
    if !mismatches.is_empty() {
        return Err(ScenarioError::ConfigMismatch(format!(
            "runs differ in {}",
            mismatches.join(", ")
        )));
    }
    let mut times = Vec::new();
    let mut nested = Vec::new();
    let mut first_violation = None;
    let mut i = 0;
    let mut j = 0;
    while i < inner.snapshots.len() && j < outer.snapshots.len() {
        let (ti, pi) = &inner.snapshots[i];
        let (tj, pj) = &outer.snapshots[j];
        let tol = 1e-9 * (1.0 + ti.abs().max(tj.abs()));
        if (ti - tj).abs() <= tol {
            let ui = to_support(pi)?;
            let uo = to_support(pj)?;
            let ok = ui
                .values()
                .iter()
                .zip(uo.values())
                .all(|(&a, &b)| a <= b + NESTING_SLACK);
            times.push(*ti);
            nested.push(ok);
            if !ok && first_violation.is_none() {
                first_violation = Some(*ti);
            }
            i += 1;
            j += 1;
        } else if ti < tj {
            i += 1;
        } else {
            j += 1;
        }
    }
    Ok(ComparisonReport {
        times,
        nested,
        first_violation,
    })
}

/// Initial-data descriptor; buildable in either profile kind.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialSpec {
    Sphere {
        radius: f64,
    },
    Ellipsoid {
        axis_a: f64,
        axis_b: f64,
    },
    Eccentric {
        radius: f64,
        offset: f64,
    },
    Bowl {
        theta_exp: f64,
        gamma_gap: f64,
        beta: f64,
        t_param: f64,
        height: f64,
    },
}

impl InitialSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            InitialSpec::Sphere { .. } => "sphere",
            InitialSpec::Ellipsoid { .. } => "ellipsoid",
            InitialSpec::Eccentric { .. } => "eccentric",
            InitialSpec::Bowl { .. } => "bowl",
        }
    }

    /// Build the profile in the kind matching the parametrization.
    pub fn build(
        &self,
        n: usize,
        resolution: usize,
        kind: ProfileKind,
    ) -> Result<Profile, ScenarioError> {
        let grid = Grid::for_dimension(n, resolution);
        match (self, kind) {
            (InitialSpec::Sphere { radius }, ProfileKind::Radial) => {
                sphere_profile(n, resolution, *radius)
            }
            (InitialSpec::Sphere { radius }, ProfileKind::Support) => {
                if !(*radius > 0.0) {
                    return Err(ScenarioError::Domain("radius must be positive".into()));
                }
                Ok(Profile::support(n, vec![*radius; grid.node_count()])?)
            }
            (InitialSpec::Ellipsoid { axis_a, axis_b }, ProfileKind::Radial) => {
                ellipsoid_profile(n, resolution, *axis_a, *axis_b)
            }
            (InitialSpec::Ellipsoid { axis_a, axis_b }, ProfileKind::Support) => {
                ellipsoid_support_profile(n, resolution, *axis_a, *axis_b)
            }
            (InitialSpec::Eccentric { radius, offset }, ProfileKind::Radial) => {
                eccentric_body(n, resolution, *radius, *offset)
            }
            (InitialSpec::Eccentric { radius, offset }, ProfileKind::Support) => {
                // support function of a translated ball
                if !(*radius > 0.0) || !(0.0..*radius).contains(offset) {
                    return Err(ScenarioError::Domain(
                        "offset must satisfy 0 <= d < rho".into(),
                    ));
                }
                let values = grid
                    .thetas()
                    .iter()
                    .map(|&t| offset * t.cos() + radius)
                    .collect();
                Ok(Profile::support(n, values)?)
            }
            (
                InitialSpec::Bowl {
                    theta_exp,
                    gamma_gap,
                    beta,
                    t_param,
                    height,
                },
                kind,
            ) => {
                let params = CounterexampleParams::new(*theta_exp, *gamma_gap, *beta, *t_param)?;
                let radial = subsolution_bowl(&params, *height, n, resolution)?;
                match kind {
                    ProfileKind::Radial => Ok(radial),
                    ProfileKind::Support => Ok(radial_to_support_profile(&radial)?),
                }
            }
        }
    }
}

/// A named experiment: flow configuration plus initial-data descriptor.
#[derive(Debug, Clone)]
pub struct Preset {
    pub name: &'static str,
    pub config: FlowConfig,
    pub initial: InitialSpec,
}

impl Preset {
    pub fn initial_profile(&self) -> Result<Profile, ScenarioError> {
        self.initial.build(
            self.config.n,
            self.config.resolution,
            self.config.parametrization.profile_kind(),
        )
    }
}

pub const PRESET_NAMES: [&str; 7] = [
    "thm1-radial",
    "thm1-support",
    "thm1-critical-radial",
    "thm4-gauss-blend",
    "counterexample",
    "sphere-oracle",
    "barrier-oracle",
];

/// Look up a catalogued experiment.
pub fn preset_catalogue(name: &str) -> Result<Preset, ScenarioError> {
    let ellipsoid = InitialSpec::Ellipsoid {
        axis_a: 1.2,
        axis_b: 0.6,
    };
    let preset = match name {
        "thm1-radial" => {
            let mut cfg = FlowConfig::new(3.0, 1.0, 2, "arithmetic-mean");
            cfg.t_max = 40.0;
            Preset {
                name: "thm1-radial",
                config: cfg,
                initial: ellipsoid,
            }
        }
        "thm1-critical-radial" => {
            let mut cfg = FlowConfig::new(2.0, 1.0, 2, "arithmetic-mean");
            cfg.t_max = 40.0;
            Preset {
                name: "thm1-critical-radial",
                config: cfg,
                initial: ellipsoid,
            }
        }
        "thm1-support" => {
            let mut cfg = FlowConfig::new(3.0, 1.5, 2, "arithmetic-mean");
            cfg.speed_kind = SpeedKind::SupportWeight;
            cfg.parametrization = Parametrization::Support;
            cfg.t_max = 60.0;
            Preset {
                name: "thm1-support",
                config: cfg,
                initial: ellipsoid,
            }
        }
        "thm4-gauss-blend" => {
            let mut cfg =
                FlowConfig::new(2.0, 1.0, 2, "blend(gauss-root,arithmetic-mean,0.5)");
            cfg.speed_kind = SpeedKind::SupportWeight;
            cfg.parametrization = Parametrization::Support;
            cfg.t_max = 40.0;
            Preset {
                name: "thm4-gauss-blend",
                config: cfg,
                initial: ellipsoid,
            }
        }
        "counterexample" => {
            let mut cfg = FlowConfig::new(0.0, 1.0, 1, "arithmetic-mean");
            cfg.normalized = false;
            cfg.t_max = 0.5;
            Preset {
                name: "counterexample",
                config: cfg,
                initial: InitialSpec::Eccentric {
                    radius: 1.0,
                    offset: 0.9,
                },
            }
        }
        "sphere-oracle" => {
            let mut cfg = FlowConfig::new(2.0, 1.0, 2, "arithmetic-mean");
            cfg.normalized = false;
            cfg.t_max = 8.0;
            Preset {
                name: "sphere-oracle",
                config: cfg,
                initial: InitialSpec::Sphere { radius: 1.0 },
            }
        }
        "barrier-oracle" => {
            let mut cfg = FlowConfig::new(3.0, 1.0, 2, "arithmetic-mean");
            cfg.t_max = 40.0;
            Preset {
                name: "barrier-oracle",
                config: cfg,
                initial: InitialSpec::Sphere { radius: 0.5 },
            }
        }
        other => return Err(ScenarioError::UnknownPreset(other.into())),
    };
    Ok(preset)
}

/// Catalogue lookup returning the configuration and the built profile.
pub fn preset(name: &str) -> Result<(FlowConfig, Profile), ScenarioError> {
    let p = preset_catalogue(name)?;
    let profile = p.initial_profile()?;
    Ok((p.config, profile))
}
