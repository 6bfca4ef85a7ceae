//! The gradient-constraint set `D`: a star-shaped domain given through its
//! radial function on a uniform angular grid, with outward normals taken from
//! the tangent of the interpolated boundary curve, and the convex gauge `η`
//! vanishing on `D` and comparable to the distance outside.

use crate::error::{CoreError, Result};
use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;
use std::path::Path;

const UNIT_TOL: f64 = 1e-12;

/// Unit vector in R^n, n in {1, 2}.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Direction {
    dim: usize,
    v: [f64; 2],
}

impl Direction {
    pub fn new(components: &[f64]) -> Result<Self> {
        let dim = components.len();
        if dim != 1 && dim != 2 {
            return Err(CoreError::InvalidInput(format!(
                "direction must have 1 or 2 components, got {dim}"
            )));
        }
        let mut v = [0.0; 2];
        v[..dim].copy_from_slice(components);
        let norm = (v[0] * v[0] + v[1] * v[1]).sqrt();
        if (norm - 1.0).abs() > UNIT_TOL {
            return Err(CoreError::InvalidInput(format!(
                "direction norm {norm} differs from 1 by more than {UNIT_TOL}"
            )));
        }
        Ok(Direction { dim, v })
    }

    pub fn from_angle(theta: f64) -> Self {
        Direction {
            dim: 2,
            v: [theta.cos(), theta.sin()],
        }
    }

    /// 1D directions: `+1` or `-1`.
    pub fn axis_1d(sign: f64) -> Self {
        Direction {
            dim: 1,
            v: [sign.signum(), 0.0],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &[f64] {
        &self.v[..self.dim]
    }

    pub fn x(&self) -> f64 {
        self.v[0]
    }

    pub fn y(&self) -> f64 {
        self.v[1]
    }

    pub fn dot(&self, other: &Direction) -> f64 {
        self.v[0] * other.v[0] + self.v[1] * other.v[1]
    }

    /// Angle in [0, 2π) (2D only).
    pub fn angle(&self) -> f64 {
        let a = self.v[1].atan2(self.v[0]);
        if a < 0.0 {
            a + TAU
        } else {
            a
        }
    }
}

/// Star-shaped constraint set, sampled radial function `f(ν)` with
/// piecewise-linear interpolation in angle (a pair of scalars in 1D).
#[derive(Clone, Debug, PartialEq)]
pub struct StarDomain {
    dim: usize,
    /// 2D: `radial[m] = f(θ_m)` at `θ_m = 2π m / M`. 1D: `[f(+1), f(-1)]`.
    radial: Vec<f64>,
    delta: f64,
}

/// Minimum angular table size accepted for 2D domains.
pub const MIN_ANGULAR_SAMPLES: usize = 16;
/// Default angular resolution for built-in boundary curves.
pub const DEFAULT_ANGULAR_SAMPLES: usize = 720;

impl StarDomain {
    /// Ball of radius `rho` centered at the origin.
    pub fn ball(dim: usize, rho: f64) -> Result<Self> {
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(CoreError::InvalidInput(format!("ball radius {rho} must be positive")));
        }
        match dim {
            1 => Self::interval(rho, rho),
            2 => Self::from_radial_values(vec![rho; DEFAULT_ANGULAR_SAMPLES], None),
            d => Err(CoreError::InvalidInput(format!("unsupported dimension {d}"))),
        }
    }

    pub fn unit_ball(dim: usize) -> Result<Self> {
        Self::ball(dim, 1.0)
    }

    /// Axis-aligned ellipse `{p : p_1^2/a^2 + p_2^2/b^2 <= 1}` sampled at `m` angles.
    pub fn ellipse(a: f64, b: f64, m: usize) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) {
            return Err(CoreError::InvalidInput("ellipse semi-axes must be positive".into()));
        }
        let values = (0..m)
            .map(|k| {
                let t = TAU * k as f64 / m as f64;
                let c = t.cos() / a;
                let s = t.sin() / b;
                1.0 / (c * c + s * s).sqrt()
            })
            .collect();
        Self::from_radial_values(values, None)
    }

    /// 1D interval `[-f_minus, f_plus]`.
    pub fn interval(f_plus: f64, f_minus: f64) -> Result<Self> {
        if !(f_plus > 0.0 && f_minus > 0.0) {
            return Err(CoreError::InvalidInput(
                "interval radial values must be positive (origin interior)".into(),
            ));
        }
        let f_min = f_plus.min(f_minus);
        let f_max = f_plus.max(f_minus);
        let delta = f_min.min(1.0 / f_max).min(1.0);
        Ok(StarDomain {
            dim: 1,
            radial: vec![f_plus, f_minus],
            delta,
        })
    }

    /// 2D domain from radial samples on the uniform angular grid.
    ///
    /// `required_delta` is the claimed constant of the star-shape bounds; when
    /// absent the measured value is claimed, so the domain validates against
    /// itself. Construction only rejects structurally broken tables; the
    /// quantitative star-shape rejection happens in [`StarDomain::validate`].
    pub fn from_radial_values(values: Vec<f64>, required_delta: Option<f64>) -> Result<Self> {
        if values.len() < MIN_ANGULAR_SAMPLES {
            return Err(CoreError::InvalidInput(format!(
                "angular table of size {} is degenerate (minimum {MIN_ANGULAR_SAMPLES})",
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(CoreError::InvalidInput(format!(
                "radial values must be positive and finite, got {bad}"
            )));
        }
        let mut dom = StarDomain {
            dim: 2,
            radial: values,
            delta: 0.0,
        };
        dom.delta = match required_delta {
            Some(d) => {
                if !(d > 0.0 && d <= 1.0) {
                    return Err(CoreError::InvalidInput(format!(
                        "required delta {d} must lie in (0, 1]"
                    )));
                }
                d
            }
            None => dom.measured_delta().max(f64::MIN_POSITIVE),
        };
        Ok(dom)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn angular_samples(&self) -> usize {
        if self.dim == 1 {
            2
        } else {
            self.radial.len()
        }
    }

    pub fn f_min(&self) -> f64 {
        self.radial.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn f_max(&self) -> f64 {
        self.radial.iter().cloned().fold(0.0, f64::max)
    }

    /// Radial value at angle `theta` (2D), piecewise-linear and periodic.
    pub fn f_at_angle(&self, theta: f64) -> f64 {
        let m = self.radial.len();
        let step = TAU / m as f64;
        let t = theta.rem_euclid(TAU) / step;
        let k = (t.floor() as usize).min(m - 1);
        let frac = t - k as f64;
        let a = self.radial[k];
        let b = self.radial[(k + 1) % m];
        a + frac * (b - a)
    }

    /// Interpolated radial value: `f(ν) ν` lies on the boundary curve.
    pub fn f_of_nu(&self, nu: &Direction) -> Result<f64> {
        if nu.dim() != self.dim {
            return Err(CoreError::InvalidInput(format!(
                "direction dimension {} does not match domain dimension {}",
                nu.dim(),
                self.dim
            )));
        }
        if self.dim == 1 {
            return Ok(if nu.x() >= 0.0 { self.radial[0] } else { self.radial[1] });
        }
        Ok(self.f_at_angle(nu.angle()))
    }

    /// Derivative of the interpolated radial function, central in angle.
    fn f_prime_at_angle(&self, theta: f64) -> f64 {
        let m = self.radial.len();
        let step = TAU / m as f64;
        (self.f_at_angle(theta + step) - self.f_at_angle(theta - step)) / (2.0 * step)
    }

    fn normal_raw(&self, theta: f64) -> [f64; 2] {
        // boundary curve c(θ) = f(θ)(cos θ, sin θ); outward normal is the
        // tangent rotated by -90°, oriented away from the origin
        let f = self.f_at_angle(theta);
        let fp = self.f_prime_at_angle(theta);
        let (s, c) = theta.sin_cos();
        let tx = fp * c - f * s;
        let ty = fp * s + f * c;
        let mut n = [ty, -tx];
        if n[0] * c + n[1] * s < 0.0 {
            n = [-n[0], -n[1]];
        }
        let len = (n[0] * n[0] + n[1] * n[1]).sqrt();
        [n[0] / len, n[1] / len]
    }

    /// Unit outward normal at `x = f(ν) ν`; errors if the star-shape bound
    /// `ω · ν >= δ` fails at that direction.
    pub fn normal_at(&self, nu: &Direction) -> Result<Direction> {
        if nu.dim() != self.dim {
            return Err(CoreError::InvalidInput(
                "direction dimension does not match domain".into(),
            ));
        }
        if self.dim == 1 {
            return Ok(Direction::axis_1d(nu.x()));
        }
        let theta = nu.angle();
        let n = self.normal_raw(theta);
        let dot = n[0] * nu.x() + n[1] * nu.y();
        if dot < self.delta - 1e-12 {
            return Err(CoreError::Validation(format!(
                "star-shape bound violated at ν = ({:.6}, {:.6}): ω·ν = {:.6} < δ = {:.6}",
                nu.x(),
                nu.y(),
                dot,
                self.delta
            )));
        }
        Ok(Direction { dim: 2, v: n })
    }

    /// True when `p` lies in the closed set `D̄` (radial comparison).
    pub fn contains(&self, p: &[f64]) -> bool {
        match self.dim {
            1 => -self.radial[1] <= p[0] && p[0] <= self.radial[0],
            _ => {
                let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
                if r == 0.0 {
                    return true;
                }
                r <= self.f_at_angle(p[1].atan2(p[0]))
            }
        }
    }

    /// Directions of the sampled angular grid.
    pub fn sample_directions(&self) -> Vec<Direction> {
        if self.dim == 1 {
            return vec![Direction::axis_1d(1.0), Direction::axis_1d(-1.0)];
        }
        let m = self.radial.len();
        (0..m)
            .map(|k| Direction::from_angle(TAU * k as f64 / m as f64))
            .collect()
    }

    fn measured_delta(&self) -> f64 {
        let f_bound = self.f_min().min(1.0 / self.f_max());
        if self.dim == 1 {
            return f_bound.min(1.0);
        }
        let m = self.radial.len();
        let mut min_dot = f64::INFINITY;
        for k in 0..m {
            let theta = TAU * k as f64 / m as f64;
            let n = self.normal_raw(theta);
            min_dot = min_dot.min(n[0] * theta.cos() + n[1] * theta.sin());
        }
        f_bound.min(min_dot).min(1.0)
    }

    /// Check the radial bounds `δ <= f <= δ^{-1}` and the star-shape bound
    /// `ω·ν >= δ` at every sampled direction, plus the normal-kink density
    /// precondition. Rejection names the worst offending direction.
    pub fn validate(&self) -> Result<StarShapeReport> {
        let f_min = self.f_min();
        let f_max = self.f_max();
        if self.dim == 1 {
            if f_min < self.delta || f_max > 1.0 / self.delta {
                return Err(CoreError::Validation(format!(
                    "radial bounds [{f_min}, {f_max}] exit [δ, 1/δ] = [{}, {}]",
                    self.delta,
                    1.0 / self.delta
                )));
            }
            return Ok(StarShapeReport {
                delta: self.delta,
                delta_measured: f_min.min(1.0 / f_max).min(1.0),
                f_min,
                f_max,
                min_omega_dot_nu: 1.0,
                worst_nu: Direction::axis_1d(1.0),
                max_normal_kink_deg: 0.0,
            });
        }

        let m = self.radial.len();
        let mut min_dot = f64::INFINITY;
        let mut worst = 0usize;
        let mut normals = Vec::with_capacity(m);
        for k in 0..m {
            let theta = TAU * k as f64 / m as f64;
            let n = self.normal_raw(theta);
            let dot = n[0] * theta.cos() + n[1] * theta.sin();
            if dot < min_dot {
                min_dot = dot;
                worst = k;
            }
            normals.push(n);
        }
        let mut max_kink: f64 = 0.0;
        for k in 0..m {
            let a = normals[k];
            let b = normals[(k + 1) % m];
            let cosang = (a[0] * b[0] + a[1] * b[1]).clamp(-1.0, 1.0);
            max_kink = max_kink.max(cosang.acos().to_degrees());
        }
        let worst_nu = Direction::from_angle(TAU * worst as f64 / m as f64);
        let report = StarShapeReport {
            delta: self.delta,
            delta_measured: f_min.min(1.0 / f_max).min(min_dot).min(1.0),
            f_min,
            f_max,
            min_omega_dot_nu: min_dot,
            worst_nu,
            max_normal_kink_deg: max_kink,
        };
        if f_min < self.delta - 1e-12 || f_max > 1.0 / self.delta + 1e-12 {
            return Err(CoreError::Validation(format!(
                "radial bounds [{f_min:.6}, {f_max:.6}] exit [δ, 1/δ] with δ = {:.6}",
                self.delta
            )));
        }
        if min_dot < self.delta - 1e-12 {
            return Err(CoreError::Validation(format!(
                "star-shape bound violated at ν = ({:.6}, {:.6}): ω·ν = {:.6} < δ = {:.6}",
                report.worst_nu.x(),
                report.worst_nu.y(),
                min_dot,
                self.delta
            )));
        }
        if max_kink > 10.0 {
            return Err(CoreError::Validation(format!(
                "adjacent normals differ by {max_kink:.2}°; the angular table is too coarse for a C¹ boundary"
            )));
        }
        Ok(report)
    }

    /// Serialize as a text table, one `angle f(ν)` pair per line (radians,
    /// monotone angles).
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        match self.dim {
            1 => {
                let _ = writeln!(out, "0 {}", self.radial[0]);
                let _ = writeln!(out, "{} {}", PI, self.radial[1]);
            }
            _ => {
                let m = self.radial.len();
                for (k, v) in self.radial.iter().enumerate() {
                    let _ = writeln!(out, "{} {}", TAU * k as f64 / m as f64, v);
                }
            }
        }
        out
    }

    pub fn write_table(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_table())?;
        Ok(())
    }

    /// Parse the `angle f(ν)` text table. Rejects non-monotone angles, angles
    /// outside `[0, 2π)`, and non-uniform angular spacing.
    pub fn parse_table(text: &str, required_delta: Option<f64>) -> Result<Self> {
        let mut rows: Vec<(f64, f64)> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let (a, f) = match (it.next(), it.next()) {
                (Some(a), Some(f)) => (a, f),
                _ => {
                    return Err(CoreError::Format(format!(
                        "line {}: expected `angle value`",
                        lineno + 1
                    )))
                }
            };
            let angle: f64 = a.parse().map_err(|_| {
                CoreError::Format(format!("line {}: bad angle `{a}`", lineno + 1))
            })?;
            let value: f64 = f.parse().map_err(|_| {
                CoreError::Format(format!("line {}: bad value `{f}`", lineno + 1))
            })?;
            rows.push((angle, value));
        }
        if rows.len() == 2 && (rows[1].0 - PI).abs() < 1e-9 && rows[0].0.abs() < 1e-9 {
            // 1D pair: angles 0 and π
            return Self::interval(rows[0].1, rows[1].1);
        }
        let m = rows.len();
        if m < MIN_ANGULAR_SAMPLES {
            return Err(CoreError::Format(format!(
                "table holds {m} rows, need at least {MIN_ANGULAR_SAMPLES}"
            )));
        }
        let step = TAU / m as f64;
        for (k, (angle, _)) in rows.iter().enumerate() {
            if *angle < 0.0 || *angle >= TAU {
                return Err(CoreError::Format(format!(
                    "angle {angle} out of range [0, 2π)"
                )));
            }
            if k > 0 && *angle <= rows[k - 1].0 {
                return Err(CoreError::Format(format!(
                    "angles must be strictly monotone: {} after {}",
                    angle,
                    rows[k - 1].0
                )));
            }
            if (angle - step * k as f64).abs() > 1e-9 {
                return Err(CoreError::Format(format!(
                    "angle {angle} is off the uniform grid 2πk/{m}"
                )));
            }
        }
        Self::from_radial_values(rows.into_iter().map(|(_, v)| v).collect(), required_delta)
    }

    pub fn read_table(path: &Path, required_delta: Option<f64>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_table(&text, required_delta)
    }
}

/// Outcome of the star-shape validation scan.
#[derive(Clone, Debug)]
pub struct StarShapeReport {
    pub delta: f64,
    pub delta_measured: f64,
    pub f_min: f64,
    pub f_max: f64,
    pub min_omega_dot_nu: f64,
    pub worst_nu: Direction,
    pub max_normal_kink_deg: f64,
}

/// Which construction the gauge uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GaugeMode {
    /// Euclidean distance to the convex hull of the sampled boundary.
    ConvexHull,
    /// Radial excess `(|p| - f(p/|p|))^+`; comparable to the distance for
    /// star-shaped domains (proportionality constant taken as 1).
    RadialExcess,
}

/// Convex gauge `η`: zero on `D̄`, comparable to `dist(·, D)` outside.
#[derive(Clone, Debug)]
pub struct Gauge {
    dom: StarDomain,
    mode: GaugeMode,
    /// Convex hull of boundary samples, counter-clockwise (2D hull mode).
    hull: Vec<[f64; 2]>,
    /// Kink-smoothing length; 0 evaluates the plain distance, s > 0 evaluates
    /// `d^2 / (d + s)` whose second differences stay of order 1/s.
    smoothing: f64,
}

impl Gauge {
    pub fn new(dom: &StarDomain, mode: GaugeMode) -> Self {
        let hull = if dom.dim() == 2 && mode == GaugeMode::ConvexHull {
            convex_hull(
                &dom.sample_directions()
                    .iter()
                    .map(|nu| {
                        let f = dom.f_of_nu(nu).expect("sample direction");
                        [f * nu.x(), f * nu.y()]
                    })
                    .collect::<Vec<_>>(),
            )
        } else {
            Vec::new()
        };
        Gauge {
            dom: dom.clone(),
            mode,
            hull,
            smoothing: 0.0,
        }
    }

    /// Convexified gauge (hull-based); the right choice when the estimates
    /// need a convex η.
    pub fn convexified(dom: &StarDomain) -> Self {
        Self::new(dom, GaugeMode::ConvexHull)
    }

    pub fn radial(dom: &StarDomain) -> Self {
        Self::new(dom, GaugeMode::RadialExcess)
    }

    pub fn with_smoothing(mut self, s: f64) -> Self {
        self.smoothing = s.max(0.0);
        self
    }

    pub fn mode(&self) -> GaugeMode {
        self.mode
    }

    pub fn domain(&self) -> &StarDomain {
        &self.dom
    }

    fn raw_distance(&self, p: &[f64]) -> f64 {
        match self.dom.dim() {
            1 => {
                let lo = -self.dom.radial[1];
                let hi = self.dom.radial[0];
                (p[0] - hi).max(lo - p[0]).max(0.0)
            }
            _ => match self.mode {
                GaugeMode::RadialExcess => {
                    let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
                    if r == 0.0 {
                        return 0.0;
                    }
                    (r - self.dom.f_at_angle(p[1].atan2(p[0]))).max(0.0)
                }
                GaugeMode::ConvexHull => {
                    let q = [p[0], p[1]];
                    if point_in_convex(&self.hull, q) {
                        0.0
                    } else {
                        distance_to_polygon(&self.hull, q)
                    }
                }
            },
        }
    }

    /// Evaluate `η(p)`.
    pub fn eval(&self, p: &[f64]) -> f64 {
        let d = self.raw_distance(p);
        if self.smoothing > 0.0 {
            d * d / (d + self.smoothing)
        } else {
            d
        }
    }
}

/// Andrew monotone chain; returns the hull counter-clockwise.
fn convex_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts: Vec<[f64; 2]> = points.to_vec();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|a, b| (a[0] - b[0]).abs() < 1e-15 && (a[1] - b[1]).abs() < 1e-15);
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn point_in_convex(hull: &[[f64; 2]], p: [f64; 2]) -> bool {
    let n = hull.len();
    if n < 3 {
        return false;
    }
    for k in 0..n {
        let a = hull[k];
        let b = hull[(k + 1) % n];
        let cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
        if cross < -1e-12 {
            return false;
        }
    }
    true
}

fn distance_to_polygon(hull: &[[f64; 2]], p: [f64; 2]) -> f64 {
    let n = hull.len();
    let mut best = f64::INFINITY;
    for k in 0..n {
        let a = hull[k];
        let b = hull[(k + 1) % n];
        let ab = [b[0] - a[0], b[1] - a[1]];
        let ap = [p[0] - a[0], p[1] - a[1]];
        let len2 = ab[0] * ab[0] + ab[1] * ab[1];
        let t = if len2 > 0.0 {
            ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let q = [a[0] + t * ab[0], a[1] + t * ab[1]];
        let d = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
        best = best.min(d);
    }
    best
}
