//! The right-hand-side nonlinearity `h(p)`, the power potential `W(t) = (t^+)^γ`,
//! the change of variables `w = u^{1/β}`, discrete energies and residuals, and
//! the exact one-dimensional profile used as the main solver oracle.

use crate::error::{CoreError, Result};
use crate::fields::{gradient, laplacian, GradientScheme, ScalarField};
use crate::geometry::StarDomain;

/// Positivity threshold factor: a node counts as positive when `w > C_POS * h`,
/// which keeps difference stencils one cell away from the free boundary.
pub const C_POS: f64 = 0.5;

/// `β = 2 / (2 - γ)` for `γ in (0, 2)`.
pub fn beta_of_gamma(gamma: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma < 2.0) {
        return Err(CoreError::InvalidInput(format!(
            "gamma = {gamma} outside the admissible range (0, 2)"
        )));
    }
    Ok(2.0 / (2.0 - gamma))
}

/// Slope of the blow-up cone for the quadratic nonlinearity:
/// `ρ_γ = sqrt(γ / (β(β-1)))`, the radius of its zero set.
pub fn rho_gamma(gamma: f64) -> Result<f64> {
    let beta = beta_of_gamma(gamma)?;
    Ok((gamma / (beta * (beta - 1.0))).sqrt())
}

#[derive(Clone, Debug)]
enum HKind {
    /// `h(p) = γ/β - (β-1)|p|^2`; zero set is the sphere of radius ρ_γ.
    Quadratic { gamma: f64, beta: f64 },
    /// `h(p) = -slope(ν) (|p| - f(ν))` with per-direction slopes from a table.
    RadialTable { slope: Vec<f64> },
}

/// Right-hand-side nonlinearity: nonnegative inside the constraint set `D`,
/// nonpositive outside, vanishing on `Γ = ∂D`, with the quadratic lower bound
/// `h(p) >= -C_h |p|^2`.
#[derive(Clone, Debug)]
pub struct HFunction {
    kind: HKind,
    dom: StarDomain,
    c_h: f64,
    clamp_radius: f64,
}

impl HFunction {
    /// The quadratic family: `D` is the ball of radius ρ_γ and `C_h = β - 1`.
    pub fn quadratic(gamma: f64, dim: usize) -> Result<Self> {
        let beta = beta_of_gamma(gamma)?;
        let rho = rho_gamma(gamma)?;
        let dom = StarDomain::ball(dim, rho)?;
        let clamp_radius = 10.0 / dom.delta();
        Ok(HFunction {
            kind: HKind::Quadratic { gamma, beta },
            dom,
            c_h: beta - 1.0,
            clamp_radius,
        })
    }

    /// Table-driven nonlinearity over an arbitrary star domain; `slope[k] > 0`
    /// is the decay rate of `h` across the boundary in the k-th sampled
    /// direction.
    pub fn from_table(dom: StarDomain, slope: Vec<f64>) -> Result<Self> {
        if slope.len() != dom.angular_samples() {
            return Err(CoreError::InvalidInput(format!(
                "slope table of length {} does not match the {} angular samples",
                slope.len(),
                dom.angular_samples()
            )));
        }
        if let Some(bad) = slope.iter().find(|s| !(**s > 0.0) || !s.is_finite()) {
            return Err(CoreError::InvalidInput(format!(
                "profile slopes must be positive and finite, got {bad}"
            )));
        }
        let max_slope = slope.iter().cloned().fold(0.0, f64::max);
        let c_h = max_slope / dom.delta();
        let clamp_radius = 10.0 / dom.delta();
        Ok(HFunction {
            kind: HKind::RadialTable { slope },
            dom,
            c_h,
            clamp_radius,
        })
    }

    /// Parse the star-domain text table extended with a third profile column:
    /// `angle f(ν) slope(ν)` per line.
    pub fn parse_table(text: &str) -> Result<Self> {
        let mut angles_f = String::new();
        let mut slopes = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 3 {
                return Err(CoreError::Format(format!(
                    "line {}: expected `angle f slope`",
                    lineno + 1
                )));
            }
            angles_f.push_str(&format!("{} {}\n", cols[0], cols[1]));
            let s: f64 = cols[2]
                .parse()
                .map_err(|_| CoreError::Format(format!("line {}: bad slope `{}`", lineno + 1, cols[2])))?;
            slopes.push(s);
        }
        let dom = StarDomain::parse_table(&angles_f, None)?;
        Self::from_table(dom, slopes)
    }

    pub fn domain(&self) -> &StarDomain {
        &self.dom
    }

    pub fn c_h(&self) -> f64 {
        self.c_h
    }

    pub fn clamp_radius(&self) -> f64 {
        self.clamp_radius
    }

    pub fn gamma(&self) -> Option<f64> {
        match &self.kind {
            HKind::Quadratic { gamma, .. } => Some(*gamma),
            HKind::RadialTable { .. } => None,
        }
    }

    fn slope_at_angle(&self, theta: f64, slope: &[f64]) -> f64 {
        let m = slope.len();
        let step = std::f64::consts::TAU / m as f64;
        let t = theta.rem_euclid(std::f64::consts::TAU) / step;
        let k = (t.floor() as usize).min(m - 1);
        let frac = t - k as f64;
        slope[k] + frac * (slope[(k + 1) % m] - slope[k])
    }

    /// Evaluate `h(p)`; gradients beyond the clamp radius are pulled back onto
    /// it, preserving the sign structure.
    pub fn eval(&self, p: &[f64]) -> f64 {
        let mut q = [p[0], if p.len() > 1 { p[1] } else { 0.0 }];
        let r = (q[0] * q[0] + q[1] * q[1]).sqrt();
        if r > self.clamp_radius {
            let f = self.clamp_radius / r;
            q[0] *= f;
            q[1] *= f;
        }
        match &self.kind {
            HKind::Quadratic { gamma, beta } => {
                gamma / beta - (beta - 1.0) * (q[0] * q[0] + q[1] * q[1])
            }
            HKind::RadialTable { slope } => {
                let r = (q[0] * q[0] + q[1] * q[1]).sqrt().min(self.clamp_radius);
                if self.dom.dim() == 1 {
                    let (f, s) = if q[0] >= 0.0 {
                        (self.dom.f_of_nu(&crate::geometry::Direction::axis_1d(1.0)).unwrap(), slope[0])
                    } else {
                        (self.dom.f_of_nu(&crate::geometry::Direction::axis_1d(-1.0)).unwrap(), slope[1])
                    };
                    return -s * (q[0].abs() - f);
                }
                if r == 0.0 {
                    // direction-independent limit: take the smallest inward value
                    let mut best = f64::INFINITY;
                    for (k, s) in slope.iter().enumerate() {
                        let theta = std::f64::consts::TAU * k as f64 / slope.len() as f64;
                        best = best.min(s * self.dom.f_at_angle(theta));
                    }
                    return best;
                }
                let theta = q[1].atan2(q[0]);
                let s = self.slope_at_angle(theta, slope);
                -s * (r - self.dom.f_at_angle(theta))
            }
        }
    }

    /// Sampled structural audit: sign pattern inside/outside `D`, smallness on
    /// `Γ`, and the quadratic growth bound up to the clamp radius.
    pub fn validate_sampling(&self, n_radial: usize, n_angular: usize) -> Result<HAudit> {
        let mut min_inside = f64::INFINITY;
        let mut max_outside = f64::NEG_INFINITY;
        let mut growth_margin = f64::INFINITY;
        let mut max_on_gamma: f64 = 0.0;
        let dirs = if self.dom.dim() == 1 { 2 } else { n_angular };
        for k in 0..dirs {
            let (c, s) = if self.dom.dim() == 1 {
                (if k == 0 { 1.0 } else { -1.0 }, 0.0)
            } else {
                let theta = std::f64::consts::TAU * k as f64 / dirs as f64;
                (theta.cos(), theta.sin())
            };
            let f = if self.dom.dim() == 1 {
                self.dom
                    .f_of_nu(&crate::geometry::Direction::axis_1d(c))
                    .unwrap()
            } else {
                self.dom.f_at_angle(s.atan2(c))
            };
            max_on_gamma = max_on_gamma.max(self.eval(&[f * c, f * s]).abs());
            for i in 1..=n_radial {
                let r = self.clamp_radius * i as f64 / n_radial as f64;
                let p = [r * c, r * s];
                let v = self.eval(&p);
                if r < f {
                    min_inside = min_inside.min(v);
                } else if r > f {
                    max_outside = max_outside.max(v);
                }
                growth_margin = growth_margin.min(v + self.c_h * r * r);
            }
        }
        let tol = 1e-9;
        if min_inside < -tol {
            return Err(CoreError::Validation(format!(
                "h dips to {min_inside} inside D"
            )));
        }
        if max_outside > tol {
            return Err(CoreError::Validation(format!(
                "h rises to {max_outside} outside D"
            )));
        }
        if growth_margin < -tol {
            return Err(CoreError::Validation(format!(
                "quadratic growth bound violated by {growth_margin}"
            )));
        }
        Ok(HAudit {
            min_inside,
            max_outside,
            growth_margin,
            max_on_gamma,
        })
    }
}

#[derive(Clone, Copy, Debug)]
pub struct HAudit {
    pub min_inside: f64,
    pub max_outside: f64,
    pub growth_margin: f64,
    pub max_on_gamma: f64,
}

/// Power potential `W(t) = (t^+)^γ` with a regularization floor for the
/// derivative when `γ < 1` (the floor vanishes under grid refinement).
#[derive(Clone, Copy, Debug)]
pub struct Potential {
    gamma: f64,
    t_reg: f64,
}

impl Potential {
    pub fn new(gamma: f64, t_reg: f64) -> Result<Self> {
        beta_of_gamma(gamma)?;
        if t_reg < 0.0 {
            return Err(CoreError::InvalidInput("t_reg must be nonnegative".into()));
        }
        Ok(Potential { gamma, t_reg })
    }

    /// Standard floor choice `t_reg = h^2` (only needed for γ < 1).
    pub fn with_grid_floor(gamma: f64, h: f64) -> Result<Self> {
        let t_reg = if gamma < 1.0 { h * h } else { 0.0 };
        Self::new(gamma, t_reg)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn t_reg(&self) -> f64 {
        self.t_reg
    }

    pub fn w(&self, t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else {
            t.powf(self.gamma)
        }
    }

    /// Raw derivative `γ (t^+)^{γ-1}` (unbounded at 0 for γ < 1).
    pub fn w_prime(&self, t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else {
            self.gamma * t.powf(self.gamma - 1.0)
        }
    }

    /// Regularized derivative: `γ max(t, t_reg)^{γ-1}` on `t >= 0`.
    pub fn w_prime_reg(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        if self.t_reg > 0.0 {
            self.gamma * t.max(self.t_reg).powf(self.gamma - 1.0)
        } else {
            self.w_prime(t)
        }
    }

    /// Antiderivative of `w_prime_reg` with `W_reg(0) = 0`.
    pub fn w_reg(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if self.t_reg == 0.0 || t >= self.t_reg {
            let offset = if self.t_reg > 0.0 {
                (self.gamma - 1.0) * self.t_reg.powf(self.gamma)
            } else {
                0.0
            };
            t.powf(self.gamma) + offset
        } else {
            self.gamma * self.t_reg.powf(self.gamma - 1.0) * t
        }
    }
}

/// Nodewise power map `w = u^{1/β}`; the zero set is preserved exactly.
pub fn u_to_w(u: &ScalarField, gamma: f64) -> Result<ScalarField> {
    let beta = beta_of_gamma(gamma)?;
    power_map(u, 1.0 / beta)
}

/// Inverse map `u = w^β`.
pub fn w_to_u(w: &ScalarField, gamma: f64) -> Result<ScalarField> {
    let beta = beta_of_gamma(gamma)?;
    power_map(w, beta)
}

fn power_map(f: &ScalarField, exponent: f64) -> Result<ScalarField> {
    let mut out = f.clone();
    for v in out.values_mut() {
        if *v < 0.0 {
            if *v < -1e-12 {
                return Err(CoreError::InvalidInput(format!(
                    "negative input value {v} in power map"
                )));
            }
            *v = 0.0;
        } else if *v == 0.0 {
            // keep exact zeros
        } else {
            *v = v.powf(exponent);
        }
    }
    Ok(out)
}

/// Midpoint quadrature of `∫ ½|∇u|² + W(u)` over the grid cells.
pub fn energy_j(u: &ScalarField, pot: &Potential) -> f64 {
    let g = u.grid();
    let h = g.h();
    let mut total = 0.0;
    if g.dim() == 1 {
        for i in 0..g.n_cells()[0] {
            let a = u.at(i, 0);
            let b = u.at(i + 1, 0);
            let du = (b - a) / h;
            total += h * (0.5 * du * du + pot.w(0.5 * (a + b)));
        }
        return total;
    }
    for j in 0..g.n_cells()[1] {
        for i in 0..g.n_cells()[0] {
            let v00 = u.at(i, j);
            let v10 = u.at(i + 1, j);
            let v01 = u.at(i, j + 1);
            let v11 = u.at(i + 1, j + 1);
            let gx = ((v10 - v00) + (v11 - v01)) / (2.0 * h);
            let gy = ((v01 - v00) + (v11 - v10)) / (2.0 * h);
            let mid = 0.25 * (v00 + v10 + v01 + v11);
            total += h * h * (0.5 * (gx * gx + gy * gy) + pot.w(mid));
        }
    }
    total
}

/// Residual of the degenerate equation on the positive set.
#[derive(Clone, Debug)]
pub struct ResidualReport {
    /// Residual values on masked nodes, zero elsewhere.
    pub field: ScalarField,
    /// Interior nodes with `w > C_POS * h`.
    pub mask: Vec<bool>,
    pub sup: f64,
    pub l2: f64,
    pub threshold: f64,
}

/// `Δw - h(∇w) / max(w, floor)` on interior nodes with `w > C_POS h`, with the
/// gradient one-sided into the positivity set near the free boundary.
pub fn residual_w(w: &ScalarField, hfn: &HFunction, floor: f64) -> ResidualReport {
    let g = w.grid();
    let h = g.h();
    let threshold = C_POS * h;
    let lap = laplacian(w);
    let grad = gradient(w, GradientScheme::OneSidedIntoPositive { threshold });
    let mut field = ScalarField::zeros(g);
    let mut mask = vec![false; g.node_count()];
    let mut sup: f64 = 0.0;
    let mut sum2 = 0.0;
    let [nx, ny] = g.nodes();
    for j in 0..ny {
        for i in 0..nx {
            if g.is_boundary_node(i, j) {
                continue;
            }
            let idx = g.index(i, j);
            let wv = w.values()[idx];
            if wv <= threshold {
                continue;
            }
            let p = [grad.x[idx], grad.y[idx]];
            let r = lap.values()[idx] - hfn.eval(&p) / wv.max(floor);
            field.values_mut()[idx] = r;
            mask[idx] = true;
            sup = sup.max(r.abs());
            sum2 += r * r;
        }
    }
    let vol = h.powi(g.dim() as i32);
    ResidualReport {
        field,
        mask,
        sup,
        l2: (vol * sum2).sqrt(),
        threshold,
    }
}

/// Closed-form one-dimensional profile: `u(x) = c_γ ((x-a)^+)^β` with
/// `c_γ^{2-γ} = γ / (β(β-1))`, so `w = u^{1/β}` is the cone of slope ρ_γ.
#[derive(Clone, Copy, Debug)]
pub struct Profile1d {
    pub gamma: f64,
    pub beta: f64,
    pub c_gamma: f64,
    pub fb_position: f64,
}

pub fn exact_1d_profile(gamma: f64, fb_position: f64) -> Result<Profile1d> {
    let beta = beta_of_gamma(gamma)?;
    let c_gamma = (gamma / (beta * (beta - 1.0))).powf(1.0 / (2.0 - gamma));
    Ok(Profile1d {
        gamma,
        beta,
        c_gamma,
        fb_position,
    })
}

impl Profile1d {
    pub fn u(&self, x: f64) -> f64 {
        let s = (x - self.fb_position).max(0.0);
        self.c_gamma * s.powf(self.beta)
    }

    pub fn w(&self, x: f64) -> f64 {
        let s = (x - self.fb_position).max(0.0);
        self.slope() * s
    }

    /// Cone slope `c_γ^{1/β} = ρ_γ`.
    pub fn slope(&self) -> f64 {
        self.c_gamma.powf(1.0 / self.beta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Grid;

    #[test]
    fn beta_values() {
        assert_eq!(beta_of_gamma(1.0).unwrap(), 2.0);
        assert!((beta_of_gamma(4.0 / 3.0).unwrap() - 3.0).abs() < 1e-12);
        assert!((beta_of_gamma(1e-9).unwrap() - 1.0).abs() < 1e-8);
        assert!(beta_of_gamma(0.0).is_err());
        assert!(beta_of_gamma(2.0).is_err());
        assert!(beta_of_gamma(3.0).is_err());
    }

    #[test]
    fn quadratic_h_gamma_one() {
        // β = 2: h(p) = 1/2 - |p|^2, zero set |p| = 1/sqrt(2)
        let h = HFunction::quadratic(1.0, 2).unwrap();
        assert!((h.eval(&[0.0, 0.0]) - 0.5).abs() < 1e-12);
        let rho = rho_gamma(1.0).unwrap();
        assert!((rho - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!(h.eval(&[rho, 0.0]).abs() < 1e-12);
        assert!(h.eval(&[2.0 * rho, 0.0]) < 0.0);
        assert!((h.c_h() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quadratic_h_signs_and_growth() {
        for gamma in [0.5, 1.0, 1.5] {
            let h = HFunction::quadratic(gamma, 2).unwrap();
            assert!(h.eval(&[0.0, 0.0]) > 0.0);
            let rho = rho_gamma(gamma).unwrap();
            assert!(h.eval(&[0.0, 2.0 * rho]) < 0.0);
            h.validate_sampling(200, 64).unwrap();
        }
    }

    #[test]
    fn radial_table_h_audit() {
        let dom = StarDomain::ellipse(2.0, 1.0, 720).unwrap();
        let slopes = vec![1.0; 720];
        let h = HFunction::from_table(dom.clone(), slopes).unwrap();
        let audit = h.validate_sampling(200, 128).unwrap();
        assert!(audit.max_on_gamma < 1e-9);
        // zero on Γ in the diagonal direction too
        let f = dom.f_at_angle(0.7);
        assert!(h.eval(&[f * 0.7f64.cos(), f * 0.7f64.sin()]).abs() < 1e-9);
    }

    #[test]
    fn clamp_preserves_sign_outside() {
        let h = HFunction::quadratic(1.0, 2).unwrap();
        let big = 100.0 * h.clamp_radius();
        assert!(h.eval(&[big, 0.0]) < 0.0);
    }

    #[test]
    fn u_to_w_on_obstacle_profile() {
        // u = (x^+)^2 / 2 with γ = 1 maps to the cone w = x^+ / sqrt(2)
        let g = Grid::new_1d(-1.0, 64, 2.0 / 64.0).unwrap();
        let u = ScalarField::from_fn(&g, |x| 0.5 * x[0].max(0.0).powi(2));
        let w = u_to_w(&u, 1.0).unwrap();
        for i in 0..=64 {
            let x = g.node_pos(i, 0)[0];
            let expect = x.max(0.0) / 2.0f64.sqrt();
            assert!((w.at(i, 0) - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn power_roundtrip_and_zero_preservation() {
        let g = Grid::new_1d(-1.0, 64, 2.0 / 64.0).unwrap();
        let u = ScalarField::from_fn(&g, |x| (x[0] + 0.3).max(0.0).powi(2));
        for gamma in [0.5, 1.0, 1.5] {
            let w = u_to_w(&u, gamma).unwrap();
            let back = w_to_u(&w, gamma).unwrap();
            for i in 0..=64 {
                assert!((back.at(i, 0) - u.at(i, 0)).abs() < 1e-12);
                if u.at(i, 0) == 0.0 {
                    assert_eq!(w.at(i, 0), 0.0);
                }
            }
        }
        assert!(u_to_w(&ScalarField::from_fn(&g, |_| -1.0), 1.0).is_err());
    }

    #[test]
    fn energy_of_zero_and_affine() {
        let g = Grid::new_2d([0.0, 0.0], [32, 32], 1.0 / 32.0).unwrap();
        let pot = Potential::new(1.0, 0.0).unwrap();
        let zero = ScalarField::zeros(&g);
        assert_eq!(energy_j(&zero, &pot), 0.0);

        // u = x_n on the unit box: ∫ 1/2 + u = 1/2 + 1/2 = 1, exact for the
        // midpoint rule on an affine integrand.
        let u = ScalarField::from_fn(&g, |x| x[1]);
        let e = energy_j(&u, &pot);
        assert!((e - 1.0).abs() < 1e-12, "energy = {e}");
    }

    #[test]
    fn residual_of_half_plane_cone_vanishes() {
        let g = Grid::new_2d([-1.0, -1.0], [64, 64], 2.0 / 64.0).unwrap();
        let hfn = HFunction::quadratic(1.0, 2).unwrap();
        let rho = rho_gamma(1.0).unwrap();
        // tilted half-plane solution with f(ν) = ρ on the ball domain
        let nu = [0.6, 0.8];
        let w = ScalarField::from_fn(&g, |x| rho * (x[0] * nu[0] + x[1] * nu[1]).max(0.0));
        let rep = residual_w(&w, &hfn, g.h() / 2.0);
        // residual must vanish away from one cell of the free boundary
        let [nx, ny] = g.nodes();
        for j in 0..ny {
            for i in 0..nx {
                let idx = g.index(i, j);
                if !rep.mask[idx] {
                    continue;
                }
                let x = g.node_pos(i, j);
                let d = x[0] * nu[0] + x[1] * nu[1];
                if d > 1.5 * g.h() {
                    assert!(
                        rep.field.values()[idx].abs() < 1e-9,
                        "residual {} at distance {d}",
                        rep.field.values()[idx]
                    );
                }
            }
        }
    }

    #[test]
    fn residual_of_one_d_cone() {
        let g = Grid::new_1d(-1.0, 128, 2.0 / 128.0).unwrap();
        let hfn = HFunction::quadratic(1.0, 1).unwrap();
        let w = ScalarField::from_fn(&g, |x| x[0].max(0.0) / 2.0f64.sqrt());
        let rep = residual_w(&w, &hfn, g.h() / 2.0);
        for i in 1..128 {
            let idx = g.index(i, 0);
            if rep.mask[idx] && g.node_pos(i, 0)[0] > 1.5 * g.h() {
                assert!(rep.field.values()[idx].abs() < 1e-9);
            }
        }
    }

    #[test]
    fn residual_of_quadratic_matches_hand_value() {
        // w = x_n^2: residual = 2 - h(2 x_n e_n)/x_n^2; at x_n = 1/2 with
        // γ = 1 this is 2 - (1/2 - 1)/(1/4) = 4.
        let g = Grid::new_2d([-1.0, -1.0], [64, 64], 2.0 / 64.0).unwrap();
        let hfn = HFunction::quadratic(1.0, 2).unwrap();
        let w = ScalarField::from_fn(&g, |x| x[1] * x[1]);
        let rep = residual_w(&w, &hfn, 1e-9);
        // find the node at (0, 1/2)
        let i = 32;
        let j = 48;
        assert!((g.node_pos(i, j)[1] - 0.5).abs() < 1e-12);
        let idx = g.index(i, j);
        assert!(rep.mask[idx]);
        assert!(
            (rep.field.values()[idx] - 4.0).abs() < 1e-9,
            "residual = {}",
            rep.field.values()[idx]
        );
    }

    #[test]
    fn exact_profile_satisfies_euler_lagrange() {
        // substitute u = c ((x-a)^+)^β into Δu = γ u^{γ-1} pointwise
        for gamma in [0.5, 1.0, 1.5] {
            let p = exact_1d_profile(gamma, 0.2).unwrap();
            for x in [0.3, 0.55, 0.9] {
                let dd = {
                    let e = 1e-5;
                    (p.u(x + e) - 2.0 * p.u(x) + p.u(x - e)) / (e * e)
                };
                let rhs = gamma * p.u(x).powf(gamma - 1.0);
                assert!(
                    (dd - rhs).abs() < 1e-4 * (1.0 + rhs.abs()),
                    "γ={gamma}: u'' = {dd}, γu^(γ-1) = {rhs}"
                );
            }
            assert!((exact_1d_profile(gamma, 0.0).unwrap().u(0.7) - p.u(0.9)).abs() < 1e-12);
        }
        // γ = 1 is the obstacle profile u = ((x-a)^+)^2 / 2
        let p = exact_1d_profile(1.0, 0.0).unwrap();
        assert!((p.c_gamma - 0.5).abs() < 1e-12);
    }

    #[test]
    fn profile_slope_is_zero_of_quadratic_h() {
        for gamma in [0.5, 1.0, 1.5] {
            let p = exact_1d_profile(gamma, 0.0).unwrap();
            let h = HFunction::quadratic(gamma, 1).unwrap();
            let v = h.eval(&[p.slope()]);
            assert!(v.abs() < 1e-12, "h(slope) = {v} for γ = {gamma}");
        }
    }

    #[test]
    fn change_of_variables_consistency() {
        // u solves Δu = γ u^{γ-1} iff w = u^{1/β} has small degenerate residual
        let gamma = 0.5;
        let g = Grid::new_1d(-1.0, 256, 2.0 / 256.0).unwrap();
        let p = exact_1d_profile(gamma, 0.0).unwrap();
        let u = ScalarField::from_fn(&g, |x| p.u(x[0]));
        let w = u_to_w(&u, gamma).unwrap();
        let hfn = HFunction::quadratic(gamma, 1).unwrap();
        let rep = residual_w(&w, &hfn, g.h() / 2.0);
        // O(h) at worst near the kink, essentially zero in the bulk
        assert!(rep.sup < g.h(), "residual sup = {}", rep.sup);
    }

    #[test]
    fn profile_energy_is_locally_minimal() {
        let gamma = 1.0;
        let g = Grid::new_1d(-1.0, 256, 2.0 / 256.0).unwrap();
        let p = exact_1d_profile(gamma, 0.0).unwrap();
        let pot = Potential::new(gamma, 0.0).unwrap();
        let u = ScalarField::from_fn(&g, |x| p.u(x[0]));
        let base = energy_j(&u, &pot);
        // compactly supported nonnegativity-preserving bumps
        for amp in [0.02, -0.02, 0.05] {
            let pert = ScalarField::from_fn(&g, |x| {
                let b = (1.0 - (x[0] / 0.5).powi(2)).max(0.0).powi(2);
                (p.u(x[0]) + amp * b).max(0.0)
            });
            let e = energy_j(&pert, &pot);
            assert!(e >= base - 1e-12, "perturbed energy {e} below base {base}");
        }
    }

    #[test]
    fn potential_monotonicity_classes() {
        let lo = Potential::new(0.5, 1e-4).unwrap();
        assert!(lo.w_prime_reg(0.01) > lo.w_prime_reg(0.1));
        let hi = Potential::new(1.5, 0.0).unwrap();
        assert!(hi.w_prime_reg(0.01) < hi.w_prime_reg(0.1));
        let ob = Potential::new(1.0, 0.0).unwrap();
        assert_eq!(ob.w_prime_reg(0.3), ob.w_prime_reg(0.9));
        // W >= 0 and vanishes on (-inf, 0]
        assert_eq!(lo.w(-3.0), 0.0);
        assert_eq!(lo.w(0.0), 0.0);
        assert!(lo.w(2.0) > 0.0);
        // regularized antiderivative is continuous at the floor
        let a = lo.w_reg(1e-4 - 1e-12);
        let b = lo.w_reg(1e-4 + 1e-12);
        assert!((a - b).abs() < 1e-10);
    }
}
