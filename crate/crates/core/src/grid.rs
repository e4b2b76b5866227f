//! 1-D angular grids, finite-difference stencils and interpolation.
//!
//! Axisymmetric hypersurfaces reduce to profiles over a single polar angle:
//! a periodic grid on `[0, 2pi)` for curves (`n = 1`) and an interval grid
//! on `[0, pi]` with nodes at both poles for `n >= 2`. Profiles for
//! `n >= 2` are even across the poles, so stencils use reflection there;
//! the periodic grid wraps. All derivatives are 4th-order central
//! differences, grouped so that constant data differentiates to exactly
//! zero.

/// Topology of the angular grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    /// `n = 1`: nodes `theta_j = 2 pi j / N`, `j = 0..N`, wrapping.
    PeriodicCircle,
    /// `n >= 2`: nodes `theta_j = pi j / N`, `j = 0..=N`, even reflection
    /// across both poles.
    PolarInterval,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub kind: GridKind,
    /// Number of grid intervals `N`.
    pub resolution: usize,
    /// Angular spacing `h`.
    pub h: f64,
}

impl Grid {
    /// Grid for a hypersurface dimension `n` with `resolution` intervals.
    pub fn for_dimension(n: usize, resolution: usize) -> Grid {
        assert!(n >= 1, "dimension must be at least 1");
        assert!(resolution >= 8, "resolution must be at least 8");
        if n == 1 {
            Grid {
                kind: GridKind::PeriodicCircle,
                resolution,
                h: 2.0 * std::f64::consts::PI / resolution as f64,
            }
        } else {
            Grid {
                kind: GridKind::PolarInterval,
                resolution,
                h: std::f64::consts::PI / resolution as f64,
            }
        }
    }

    /// Number of stored nodes (`N` periodic, `N + 1` polar).
    pub fn node_count(&self) -> usize {
        match self.kind {
            GridKind::PeriodicCircle => self.resolution,
            GridKind::PolarInterval => self.resolution + 1,
        }
    }

    pub fn theta(&self, j: usize) -> f64 {
        self.h * j as f64
    }

    pub fn thetas(&self) -> Vec<f64> {
        (0..self.node_count()).map(|j| self.theta(j)).collect()
    }

    /// Full angular extent (`2 pi` periodic, `pi` polar).
    pub fn span(&self) -> f64 {
        self.h * self.resolution as f64
    }

    #[inline]
    fn fold(&self, j: isize) -> usize {
        let m = self.node_count() as isize;
        match self.kind {
            GridKind::PeriodicCircle => j.rem_euclid(m) as usize,
            GridKind::PolarInterval => {
                let n = self.resolution as isize;
                let mut k = j;
                // reflect until inside [0, N]; at most two reflections for
                // the stencil offsets used here
                loop {
                    if k < 0 {
                        k = -k;
                    } else if k > n {
                        k = 2 * n - k;
                    } else {
                        return k as usize;
                    }
                }
            }
        }
    }

    /// 4th-order first derivative. Exactly zero on constant data.
    pub fn deriv1_into(&self, v: &[f64], out: &mut [f64]) {
        let m = self.node_count();
        assert_eq!(v.len(), m);
        assert_eq!(out.len(), m);
        let c = 1.0 / (12.0 * self.h);
        // interior nodes need no index folding
        for j in 2..m - 2 {
            out[j] = (8.0 * (v[j + 1] - v[j - 1]) - (v[j + 2] - v[j - 2])) * c;
        }
        for j in [0usize, 1, m - 2, m - 1] {
            let ji = j as isize;
            let vm2 = v[self.fold(ji - 2)];
            let vm1 = v[self.fold(ji - 1)];
            let vp1 = v[self.fold(ji + 1)];
            let vp2 = v[self.fold(ji + 2)];
            out[j] = (8.0 * (vp1 - vm1) - (vp2 - vm2)) * c;
        }
    }

    /// 4th-order second derivative. Exactly zero on constant data.
    pub fn deriv2_into(&self, v: &[f64], out: &mut [f64]) {
        let m = self.node_count();
        assert_eq!(v.len(), m);
        assert_eq!(out.len(), m);
        let c = 1.0 / (12.0 * self.h * self.h);
        for j in 2..m - 2 {
            out[j] = (16.0 * (v[j + 1] + v[j - 1]) - (v[j + 2] + v[j - 2]) - 30.0 * v[j]) * c;
        }
        for j in [0usize, 1, m - 2, m - 1] {
            let ji = j as isize;
            let vm2 = v[self.fold(ji - 2)];
            let vm1 = v[self.fold(ji - 1)];
            let vp1 = v[self.fold(ji + 1)];
            let vp2 = v[self.fold(ji + 2)];
            out[j] = (16.0 * (vp1 + vm1) - (vp2 + vm2) - 30.0 * v[j]) * c;
        }
    }

    pub fn deriv1(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        self.deriv1_into(v, &mut out);
        out
    }

    pub fn deriv2(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        self.deriv2_into(v, &mut out);
        out
    }

    /// One-sided 4th-order first derivative at the start pole, making no
    /// symmetry assumption. Vanishes to `O(h^5)` for smooth even data, so a
    /// non-small value flags a cone point.
    pub fn one_sided_deriv1_start(&self, v: &[f64]) -> f64 {
        (-25.0 * v[0] + 48.0 * v[1] - 36.0 * v[2] + 16.0 * v[3] - 3.0 * v[4]) / (12.0 * self.h)
    }

    /// One-sided counterpart at the end pole.
    pub fn one_sided_deriv1_end(&self, v: &[f64]) -> f64 {
        let m = v.len();
        (25.0 * v[m - 1] - 48.0 * v[m - 2] + 36.0 * v[m - 3] - 16.0 * v[m - 4]
            + 3.0 * v[m - 5])
            / (12.0 * self.h)
    }
}

/// Cubic Hermite interpolant of nodal data, evaluable at any angle via the
/// grid's wrap/reflection symmetry. Nodal slopes come from the 4th-order
/// stencils, giving `O(h^4)` interpolation error for smooth profiles.
#[derive(Debug, Clone)]
pub struct SmoothInterp {
    grid: Grid,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl SmoothInterp {
    pub fn new(grid: &Grid, values: &[f64]) -> SmoothInterp {
        let slopes = grid.deriv1(values);
        SmoothInterp {
            grid: grid.clone(),
            values: values.to_vec(),
            slopes,
        }
    }

    /// Map an arbitrary angle into the principal domain. Values are even
    /// across the poles for polar grids, so folding preserves them.
    fn principal(&self, theta: f64) -> (f64, f64) {
        let two_pi = 2.0 * std::f64::consts::PI;
        let mut t = theta.rem_euclid(two_pi);
        match self.grid.kind {
            GridKind::PeriodicCircle => (t, 1.0),
            GridKind::PolarInterval => {
                if t > std::f64::consts::PI {
                    t = two_pi - t;
                    (t, -1.0)
                } else {
                    (t, 1.0)
                }
            }
        }
    }

    pub fn eval(&self, theta: f64) -> f64 {
        let (t, _) = self.principal(theta);
        let h = self.grid.h;
        let m = self.grid.node_count();
        let mut cell = (t / h).floor() as usize;
        let max_cell = match self.grid.kind {
            GridKind::PeriodicCircle => m - 1,
            GridKind::PolarInterval => m - 2,
        };
        if cell > max_cell {
            cell = max_cell;
        }
        let next = match self.grid.kind {
            GridKind::PeriodicCircle => (cell + 1) % m,
            GridKind::PolarInterval => cell + 1,
        };
        let s = (t - self.grid.theta(cell)) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.values[cell]
            + h * h10 * self.slopes[cell]
            + h01 * self.values[next]
            + h * h11 * self.slopes[next]
    }
}

/// Maximize `f` on the bracket `[a, b]` starting from `x0` by Brent's
/// method (successive parabolic interpolation with golden-section
/// fallback). Returns the maximizer and the maximum value.
pub fn brent_max(f: impl Fn(f64) -> f64, a: f64, b: f64, x0: f64, tol: f64) -> (f64, f64) {
    const GOLD: f64 = 0.381_966_011_250_105_1;
    const MAX_ITER: usize = 100;
    let g = |x: f64| -f(x);
    let (mut lo, mut hi) = (a.min(b), a.max(b));
    let mut x = x0.clamp(lo, hi);
    let (mut w, mut v) = (x, x);
    let mut fx = g(x);
    let (mut fw, mut fv) = (fx, fx);
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;
    for _ in 0..MAX_ITER {
        let m = 0.5 * (lo + hi);
        let tol1 = tol * x.abs() + 1e-15;
        let tol2 = 2.0 * tol1;
        if (x - m).abs() <= tol2 - 0.5 * (hi - lo) {
            break;
        }
        let mut take_golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            let mut q2 = 2.0 * (q - r);
            if q2 > 0.0 {
                p = -p;
            }
            q2 = q2.abs();
            let etemp = e;
            e = d;
            if p.abs() < (0.5 * q2 * etemp).abs() && p > q2 * (lo - x) && p < q2 * (hi - x) {
                d = p / q2;
                let u = x + d;
                if u - lo < tol2 || hi - u < tol2 {
                    d = if m > x { tol1 } else { -tol1 };
                }
                take_golden = false;
            }
        }
        if take_golden {
            e = if x < m { hi - x } else { lo - x };
            d = GOLD * e;
        }
        let u = if d.abs() >= tol1 {
            x + d
        } else {
            x + if d > 0.0 { tol1 } else { -tol1 }
        };
        let fu = g(u);
        if fu <= fx {
            if u < x {
                hi = x;
            } else {
                lo = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                lo = u;
            } else {
                hi = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    (x, -fx)
}
