//! Exact axisymmetric differential geometry of discrete profiles.
//!
//! A hypersurface of revolution in `R^{n+1}` is stored as either a radial
//! profile `r(theta)` (distance from the origin per polar angle) or a
//! support profile `u(theta)` (support value per normal direction). With
//! `'` denoting the angular derivative, the axisymmetric reduction of the
//! graph geometry is
//!
//! ```text
//! lambda_profile = (r^2 + 2 r'^2 - r r'') / (r^2 + r'^2)^(3/2)
//! lambda_orbit   = (r - r' cot(theta)) / (r sqrt(r^2 + r'^2))   (n >= 2)
//! u              = r^2 / sqrt(r^2 + r'^2)
//! ```
//!
//! in the radial picture, with the pole limit `r' cot -> r''`, and
//!
//! ```text
//! tau_profile = u'' + u,    tau_orbit = u' cot(theta) + u,
//! lambda = 1 / tau,         r = sqrt(u^2 + u'^2)
//! ```
//!
//! in the support picture. Spatial derivatives are the 4th-order stencils
//! of [`crate::grid`].

use crate::grid::{brent_max, Grid, GridKind, SmoothInterp};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("profile is not convex at theta = {theta}: {what} = {value}")]
    NonConvex {
        theta: f64,
        value: f64,
        what: &'static str,
    },
    #[error("pole is irregular: one-sided derivative {derivative} exceeds tolerance {tolerance}")]
    PoleIrregular { derivative: f64, tolerance: f64 },
    #[error("invalid profile: {0}")]
    Invalid(String),
    #[error("snapshot parse error: {0}")]
    Snapshot(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    Radial,
    Support,
}

impl ProfileKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ProfileKind::Radial => "radial",
            ProfileKind::Support => "support",
        }
    }
}

/// An axisymmetric hypersurface state on a polar-angle grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    kind: ProfileKind,
    n: usize,
    grid: Grid,
    values: Vec<f64>,
}

/// Pole-regularity tolerance factor: the one-sided derivative of a smooth
/// even profile is `O(h^5)`, a cone point gives `O(1)`.
const POLE_TOL_FACTOR: f64 = 5.0;

impl Profile {
    fn validate_values(values: &[f64]) -> Result<(), GeometryError> {
        for (j, &v) in values.iter().enumerate() {
            if !v.is_finite() || v <= 0.0 {
                return Err(GeometryError::Invalid(format!(
                    "value {v} at node {j} is not strictly positive"
                )));
            }
        }
        Ok(())
    }

    fn grid_for(n: usize, len: usize) -> Result<Grid, GeometryError> {
        if len < 16 {
            return Err(GeometryError::Invalid(format!(
                "profile needs at least 16 nodes, got {len}"
            )));
        }
        let resolution = if n == 1 { len } else { len - 1 };
        Ok(Grid::for_dimension(n, resolution))
    }

    /// Radial profile `r(theta) > 0`.
    pub fn radial(n: usize, values: Vec<f64>) -> Result<Profile, GeometryError> {
        Self::validate_values(&values)?;
        let grid = Self::grid_for(n, values.len())?;
        Ok(Profile {
            kind: ProfileKind::Radial,
            n,
            grid,
            values,
        })
    }

    /// Support profile `u(theta) > 0`; the convexity invariant
    /// `tau_profile > 0`, `tau_orbit > 0` is enforced at construction.
    pub fn support(n: usize, values: Vec<f64>) -> Result<Profile, GeometryError> {
        Self::validate_values(&values)?;
        let grid = Self::grid_for(n, values.len())?;
        let p = Profile {
            kind: ProfileKind::Support,
            n,
            grid,
            values,
        };
        support_to_geometry(&p)?;
        Ok(p)
    }

    pub fn kind(&self) -> ProfileKind {
        self.kind
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn resolution(&self) -> usize {
        self.grid.resolution
    }

    /// Serialize as the snapshot text record: a header line
    /// `kind=<kind> n=<n> N=<resolution> t=<time>` followed by one
    /// `theta,value` pair per line at 17 significant digits.
    pub fn snapshot(&self, time: f64) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "kind={} n={} N={} t={:.16e}\n",
            self.kind.as_str(),
            self.n,
            self.grid.resolution,
            time
        ));
        for (j, &v) in self.values.iter().enumerate() {
            out.push_str(&format!("{:.16e},{:.16e}\n", self.grid.theta(j), v));
        }
        out
    }

    /// Parse a snapshot record produced by [`Profile::snapshot`]; returns
    /// the profile and its time stamp.
    pub fn from_snapshot(text: &str) -> Result<(Profile, f64), GeometryError> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| GeometryError::Snapshot("empty snapshot".into()))?;
        let mut kind = None;
        let mut n = None;
        let mut time = None;
        for field in header.split_whitespace() {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| GeometryError::Snapshot(format!("bad header field '{field}'")))?;
            match key {
                "kind" => {
                    kind = Some(match value {
                        "radial" => ProfileKind::Radial,
                        "support" => ProfileKind::Support,
                        other => {
                            return Err(GeometryError::Snapshot(format!(
                                "unknown profile kind '{other}'"
                            )))
                        }
                    })
                }
                "n" => {
                    n = Some(value.parse::<usize>().map_err(|_| {
                        GeometryError::Snapshot(format!("bad dimension '{value}'"))
                    })?)
                }
                "t" => {
                    time = Some(value.parse::<f64>().map_err(|_| {
                        GeometryError::Snapshot(format!("bad time '{value}'"))
                    })?)
                }
                "N" => {}
                other => {
                    return Err(GeometryError::Snapshot(format!(
                        "unknown header key '{other}'"
                    )))
                }
            }
        }
        let kind = kind.ok_or_else(|| GeometryError::Snapshot("missing kind".into()))?;
        let n = n.ok_or_else(|| GeometryError::Snapshot("missing dimension".into()))?;
        let time = time.ok_or_else(|| GeometryError::Snapshot("missing time".into()))?;
        let mut values = Vec::new();
        for line in lines {
            if line.trim().is_empty() {
                continue;
            }
            let (_, v) = line
                .split_once(',')
                .ok_or_else(|| GeometryError::Snapshot(format!("bad data line '{line}'")))?;
            values.push(v.trim().parse::<f64>().map_err(|_| {
                GeometryError::Snapshot(format!("bad value in line '{line}'"))
            })?);
        }
        match kind {
            ProfileKind::Radial => Profile::radial(n, values).map(|p| (p, time)),
            ProfileKind::Support => Profile::support(n, values).map(|p| (p, time)),
        }
    }
}

/// Pointwise geometric fields of a profile.
#[derive(Debug, Clone)]
pub struct GeometryFields {
    /// Principal curvature along the profile direction.
    pub lambda_profile: Vec<f64>,
    /// The `n - 1` equal rotational curvatures; `None` for curves.
    pub lambda_orbit: Option<Vec<f64>>,
    /// Support value per node (`<X, nu>` in the radial picture).
    pub support: Vec<f64>,
    /// Distance to the origin per node.
    pub radial: Vec<f64>,
    /// `|Dr| / r` per node.
    pub grad_ratio: Vec<f64>,
    /// `1 - <e, p/|p|>^2 = r^2 / (r^2 + |Dr|^2)` per node.
    pub star_margin: Vec<f64>,
}

impl GeometryFields {
    pub fn lambda_min(&self) -> f64 {
        let a = self.lambda_profile.iter().cloned().fold(f64::INFINITY, f64::min);
        match &self.lambda_orbit {
            Some(o) => o.iter().cloned().fold(a, f64::min),
            None => a,
        }
    }

    pub fn lambda_max(&self) -> f64 {
        let a = self
            .lambda_profile
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        match &self.lambda_orbit {
            Some(o) => o.iter().cloned().fold(a, f64::max),
            None => a,
        }
    }

    pub fn star_margin_min(&self) -> f64 {
        self.star_margin.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn grad_ratio_max(&self) -> f64 {
        self.grad_ratio.iter().cloned().fold(0.0, f64::max)
    }
}

fn check_poles(grid: &Grid, values: &[f64]) -> Result<(), GeometryError> {
    if grid.kind != GridKind::PolarInterval {
        return Ok(());
    }
    let scale = values.iter().cloned().fold(0.0f64, f64::max);
    let tolerance = POLE_TOL_FACTOR * grid.h * grid.h * scale;
    for d in [
        grid.one_sided_deriv1_start(values),
        grid.one_sided_deriv1_end(values),
    ] {
        if d.abs() > tolerance {
            return Err(GeometryError::PoleIrregular {
                derivative: d,
                tolerance,
            });
        }
    }
    Ok(())
}

/// Principal curvatures, support values and star-shape data of a radial
/// profile.
pub fn radial_to_geometry(p: &Profile) -> Result<GeometryFields, GeometryError> {
    assert_eq!(p.kind, ProfileKind::Radial, "expected a radial profile");
    let grid = &p.grid;
    let r = &p.values;
    check_poles(grid, r)?;
    let d1 = grid.deriv1(r);
    let d2 = grid.deriv2(r);
    let m = grid.node_count();
    let mut lambda_profile = vec![0.0; m];
    let mut lambda_orbit = if p.n >= 2 { Some(vec![0.0; m]) } else { None };
    let mut support = vec![0.0; m];
    let mut grad_ratio = vec![0.0; m];
    let mut star_margin = vec![0.0; m];
    for j in 0..m {
        let (rj, rp, rpp) = (r[j], d1[j], d2[j]);
        let msq = rj * rj + rp * rp;
        let w = msq.sqrt();
        let lam1 = (rj * rj + 2.0 * rp * rp - rj * rpp) / (msq * w);
        if lam1 <= 0.0 {
            return Err(GeometryError::NonConvex {
                theta: grid.theta(j),
                value: lam1,
                what: "lambda_profile",
            });
        }
        lambda_profile[j] = lam1;
        if let Some(orbit) = lambda_orbit.as_mut() {
            let theta = grid.theta(j);
            let at_pole = j == 0 || j == grid.resolution;
            // r' cot(theta) has the removable pole limit r''(pole)
            let hess = if at_pole {
                rpp
            } else {
                rp * theta.cos() / theta.sin()
            };
            let lam_a = (rj - hess) / (rj * w);
            if lam_a <= 0.0 {
                return Err(GeometryError::NonConvex {
                    theta,
                    value: lam_a,
                    what: "lambda_orbit",
                });
            }
            orbit[j] = lam_a;
        }
        support[j] = rj * rj / w;
        grad_ratio[j] = rp.abs() / rj;
        star_margin[j] = rj * rj / msq;
    }
    Ok(GeometryFields {
        lambda_profile,
        lambda_orbit,
        support,
        radial: r.clone(),
        grad_ratio,
        star_margin,
    })
}

/// Curvatures and radial data of a support profile via the spherical
/// Hessian `tau`; eigenvalues of `tau` are the principal curvature radii.
pub fn support_to_geometry(p: &Profile) -> Result<GeometryFields, GeometryError> {
    assert_eq!(p.kind, ProfileKind::Support, "expected a support profile");
    let grid = &p.grid;
    let u = &p.values;
    check_poles(grid, u)?;
    let d1 = grid.deriv1(u);
    let d2 = grid.deriv2(u);
    let m = grid.node_count();
    let mut lambda_profile = vec![0.0; m];
    let mut lambda_orbit = if p.n >= 2 { Some(vec![0.0; m]) } else { None };
    let mut radial = vec![0.0; m];
    let mut grad_ratio = vec![0.0; m];
    let mut star_margin = vec![0.0; m];
    for j in 0..m {
        let (uj, up, upp) = (u[j], d1[j], d2[j]);
        let tau1 = upp + uj;
        if tau1 <= 0.0 {
            return Err(GeometryError::NonConvex {
                theta: grid.theta(j),
                value: tau1,
                what: "tau_profile",
            });
        }
        lambda_profile[j] = 1.0 / tau1;
        if let Some(orbit) = lambda_orbit.as_mut() {
            let theta = grid.theta(j);
            let at_pole = j == 0 || j == grid.resolution;
            let tau_a = if at_pole {
                tau1
            } else {
                up * theta.cos() / theta.sin() + uj
            };
            if tau_a <= 0.0 {
                return Err(GeometryError::NonConvex {
                    theta,
                    value: tau_a,
                    what: "tau_orbit",
                });
            }
            orbit[j] = 1.0 / tau_a;
        }
        let r = (uj * uj + up * up).sqrt();
        radial[j] = r;
        // u = r^2 / sqrt(r^2 + |Dr|^2) inverts to |Dr|/r = sqrt(r^2/u^2 - 1)
        grad_ratio[j] = (r * r / (uj * uj) - 1.0).max(0.0).sqrt();
        star_margin[j] = (uj / r) * (uj / r);
    }
    Ok(GeometryFields {
        lambda_profile,
        lambda_orbit,
        support: u.clone(),
        radial,
        grad_ratio,
        star_margin,
    })
}

/// Roundness measure `max r / min r`.
pub fn ratio(p: &Profile) -> f64 {
    let r = match p.kind {
        ProfileKind::Radial => p.values.clone(),
        ProfileKind::Support => {
            let d1 = p.grid.deriv1(&p.values);
            p.values
                .iter()
                .zip(&d1)
                .map(|(&u, &up)| (u * u + up * up).sqrt())
                .collect()
        }
    };
    let max = r.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = r.iter().cloned().fold(f64::INFINITY, f64::min);
    max / min
}

/// Uniform star-shapedness margin `min 1 - <e, p/|p|>^2`; equals
/// `min r^2 / (r^2 + r'^2)` for radial graphs and `min (u/r)^2` in the
/// support picture.
pub fn star_shape_margin(p: &Profile) -> f64 {
    // the same quotient works in both pictures: for support profiles
    // v^2 / (v^2 + v'^2) = (u / r)^2 with r = sqrt(u^2 + u'^2)
    let d1 = p.grid.deriv1(&p.values);
    p.values
        .iter()
        .zip(&d1)
        .map(|(&v, &vp)| v * v / (v * v + vp * vp))
        .fold(f64::INFINITY, f64::min)
}

/// Convert a radial profile to the support profile on the same grid:
/// for each outward direction, maximize `<X(theta), z>` over boundary
/// points, seeding a parabolic refinement from the discrete argmax.
pub fn radial_to_support_profile(p: &Profile) -> Result<Profile, GeometryError> {
    assert_eq!(p.kind, ProfileKind::Radial, "expected a radial profile");
    // convexity contract
    radial_to_geometry(p)?;
    let grid = &p.grid;
    let interp = SmoothInterp::new(grid, &p.values);
    let m = grid.node_count();
    let mut u = vec![0.0; m];
    for jhat in 0..m {
        let dir = grid.theta(jhat);
        // objective <X(theta), z(dir)> = r(theta) cos(theta - dir); the
        // interpolant folds across poles, matching the reflected meridian
        let obj = |t: f64| interp.eval(t) * (t - dir).cos();
        let mut best = f64::NEG_INFINITY;
        let mut best_j = 0usize;
        for j in 0..m {
            let v = p.values[j] * (grid.theta(j) - dir).cos();
            if v > best {
                best = v;
                best_j = j;
            }
        }
        let center = grid.theta(best_j);
        let (_, val) = brent_max(obj, center - grid.h, center + grid.h, center, 1e-12);
        u[jhat] = val;
    }
    Profile::support(p.n, u)
}

/// Convert a support profile to the radial profile on the same grid: the
/// boundary points `X = u z + u' e_theta` are re-binned by their own polar
/// angle and `|X|` is interpolated onto the grid.
pub fn support_to_radial_profile(p: &Profile) -> Result<Profile, GeometryError> {
    assert_eq!(p.kind, ProfileKind::Support, "expected a support profile");
    support_to_geometry(p)?;
    let grid = &p.grid;
    let u = &p.values;
    let d1 = grid.deriv1(u);
    let m = grid.node_count();
    // boundary points in the (axis, off-axis) half-plane
    let mut phi = Vec::with_capacity(m);
    let mut rad = Vec::with_capacity(m);
    for j in 0..m {
        let theta = grid.theta(j);
        let (uj, up) = (u[j], d1[j]);
        let axis = uj * theta.cos() - up * theta.sin();
        let off = uj * theta.sin() + up * theta.cos();
        let mut angle = off.atan2(axis);
        if grid.kind == GridKind::PeriodicCircle && angle < 0.0 {
            angle += 2.0 * std::f64::consts::PI;
        }
        phi.push(angle);
        rad.push((axis * axis + off * off).sqrt());
    }
    if grid.kind == GridKind::PolarInterval {
        // poles map to themselves (u' vanishes there)
        phi[0] = 0.0;
        phi[m - 1] = std::f64::consts::PI;
    } else {
        // unwrap so the sequence is monotone increasing from phi[0]
        for j in 1..m {
            while phi[j] < phi[j - 1] {
                phi[j] += 2.0 * std::f64::consts::PI;
            }
        }
    }
    // extended sample list for interpolation across the ends
    let mut xs = Vec::with_capacity(m + 8);
    let mut ys = Vec::with_capacity(m + 8);
    match grid.kind {
        GridKind::PolarInterval => {
            for k in (1..=3).rev() {
                xs.push(-phi[k]);
                ys.push(rad[k]);
            }
            xs.extend_from_slice(&phi);
            ys.extend_from_slice(&rad);
            for k in 1..=3 {
                xs.push(2.0 * std::f64::consts::PI - phi[m - 1 - k]);
                ys.push(rad[m - 1 - k]);
            }
        }
        GridKind::PeriodicCircle => {
            for k in (0..3).rev() {
                xs.push(phi[m - 1 - k] - 2.0 * std::f64::consts::PI);
                ys.push(rad[m - 1 - k]);
            }
            xs.extend_from_slice(&phi);
            ys.extend_from_slice(&rad);
            for k in 0..3 {
                xs.push(phi[k] + 2.0 * std::f64::consts::PI);
                ys.push(rad[k]);
            }
        }
    }
    let mut out = vec![0.0; m];
    for (j, slot) in out.iter_mut().enumerate() {
        let target = grid.theta(j);
        *slot = lagrange4(&xs, &ys, target);
    }
    Profile::radial(p.n, out)
}

/// Cubic Lagrange interpolation on the 4 samples bracketing `x`; `xs` must
/// be strictly increasing.
fn lagrange4(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let m = xs.len();
    let mut lo = match xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
        Ok(i) => i,
        Err(i) => i.saturating_sub(1),
    };
    // choose a 4-point window centered on the bracket
    lo = lo.saturating_sub(1).min(m - 4);
    let xs = &xs[lo..lo + 4];
    let ys = &ys[lo..lo + 4];
    let mut acc = 0.0;
    for i in 0..4 {
        let mut term = ys[i];
        for k in 0..4 {
            if k != i {
                term *= (x - xs[k]) / (xs[i] - xs[k]);
            }
        }
        acc += term;
    }
    acc
}
