//! Uniform node-centered grids and the discrete calculus used by every solver
//! and diagnostic: Laplacian, gradients (centered and one-sided into the
//! positivity set), Lipschitz rescaling, oscillations and sphere suprema.

pub mod io;

use crate::error::{CoreError, Result};
use serde::{Deserialize, Serialize};

/// Uniform rectangular grid, node-centered, equal spacing per axis.
///
/// Nodes sit at `origin + (i, j) * h` with `i in 0..=n_cells[0]` and
/// `j in 0..=n_cells[1]` (for 1D grids `n_cells[1] == 0`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    n_cells: [usize; 2],
    h: f64,
    origin: [f64; 2],
}

impl Grid {
    pub fn new_1d(origin: f64, n_cells: usize, h: f64) -> Result<Self> {
        Self::validate(1, [n_cells, 0], h)?;
        Ok(Grid {
            dim: 1,
            n_cells: [n_cells, 0],
            h,
            origin: [origin, 0.0],
        })
    }

    pub fn new_2d(origin: [f64; 2], n_cells: [usize; 2], h: f64) -> Result<Self> {
        Self::validate(2, n_cells, h)?;
        Ok(Grid {
            dim: 2,
            n_cells,
            h,
            origin,
        })
    }

    fn validate(dim: usize, n_cells: [usize; 2], h: f64) -> Result<()> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(CoreError::InvalidInput(format!("grid spacing h = {h} must be positive")));
        }
        for d in 0..dim {
            if n_cells[d] < 8 {
                return Err(CoreError::InvalidInput(format!(
                    "n_cells[{d}] = {} is below the minimum of 8",
                    n_cells[d]
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    pub fn n_cells(&self) -> [usize; 2] {
        self.n_cells
    }

    /// Number of nodes along each axis (`1` on the inactive axis of a 1D grid).
    pub fn nodes(&self) -> [usize; 2] {
        [self.n_cells[0] + 1, self.n_cells[1] + 1]
    }

    pub fn node_count(&self) -> usize {
        self.nodes()[0] * self.nodes()[1]
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i + j * self.nodes()[0]
    }

    pub fn node_pos(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.origin[0] + i as f64 * self.h,
            self.origin[1] + j as f64 * self.h,
        ]
    }

    /// Upper corner of the extent box.
    pub fn extent_max(&self) -> [f64; 2] {
        [
            self.origin[0] + self.n_cells[0] as f64 * self.h,
            self.origin[1] + self.n_cells[1] as f64 * self.h,
        ]
    }

    pub fn is_boundary_node(&self, i: usize, j: usize) -> bool {
        if i == 0 || i == self.n_cells[0] {
            return true;
        }
        self.dim == 2 && (j == 0 || j == self.n_cells[1])
    }

    /// True if `p` lies in the closed extent box, with `tol` slack per axis.
    pub fn contains_point(&self, p: [f64; 2], tol: f64) -> bool {
        let hi = self.extent_max();
        for d in 0..self.dim {
            if p[d] < self.origin[d] - tol || p[d] > hi[d] + tol {
                return false;
            }
        }
        true
    }
}

/// Scalar grid function with a Dirichlet boundary mask.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
    boundary: Vec<bool>,
}

impl ScalarField {
    /// Zero field; the mask marks the geometric boundary nodes.
    pub fn zeros(grid: &Grid) -> Self {
        let mut boundary = vec![false; grid.node_count()];
        for j in 0..grid.nodes()[1] {
            for i in 0..grid.nodes()[0] {
                boundary[grid.index(i, j)] = grid.is_boundary_node(i, j);
            }
        }
        ScalarField {
            grid: *grid,
            values: vec![0.0; grid.node_count()],
            boundary,
        }
    }

    pub fn from_fn(grid: &Grid, mut f: impl FnMut([f64; 2]) -> f64) -> Self {
        let mut field = Self::zeros(grid);
        for j in 0..grid.nodes()[1] {
            for i in 0..grid.nodes()[0] {
                field.values[grid.index(i, j)] = f(grid.node_pos(i, j));
            }
        }
        field
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn boundary_mask(&self) -> &[bool] {
        &self.boundary
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let idx = self.grid.index(i, j);
        self.values[idx] = v;
    }

    /// Overwrite boundary node values from a closure, leaving the interior alone.
    pub fn set_boundary_from_fn(&mut self, f: impl Fn([f64; 2]) -> f64) {
        for j in 0..self.grid.nodes()[1] {
            for i in 0..self.grid.nodes()[0] {
                if self.grid.is_boundary_node(i, j) {
                    let idx = self.grid.index(i, j);
                    self.values[idx] = f(self.grid.node_pos(i, j));
                }
            }
        }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Sup-norm of the nodewise difference; grids must match.
    pub fn sup_diff(&self, other: &ScalarField) -> Result<f64> {
        if self.grid != other.grid {
            return Err(CoreError::InvalidInput("sup_diff requires matching grids".into()));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Bilinear (linear in 1D) sample at an arbitrary point of the extent box.
    pub fn sample(&self, p: [f64; 2]) -> Result<f64> {
        let g = &self.grid;
        let tol = 1e-9 * g.h;
        if !g.contains_point(p, tol) {
            return Err(CoreError::OutOfDomain(format!(
                "sample point ({}, {}) exits the grid extent",
                p[0], p[1]
            )));
        }
        let fx = ((p[0] - g.origin[0]) / g.h).clamp(0.0, g.n_cells[0] as f64);
        let i0 = (fx.floor() as usize).min(g.n_cells[0].saturating_sub(1));
        let tx = fx - i0 as f64;
        if g.dim == 1 {
            let a = self.values[g.index(i0, 0)];
            let b = self.values[g.index(i0 + 1, 0)];
            return Ok(a + tx * (b - a));
        }
        let fy = ((p[1] - g.origin[1]) / g.h).clamp(0.0, g.n_cells[1] as f64);
        let j0 = (fy.floor() as usize).min(g.n_cells[1].saturating_sub(1));
        let ty = fy - j0 as f64;
        let v00 = self.values[g.index(i0, j0)];
        let v10 = self.values[g.index(i0 + 1, j0)];
        let v01 = self.values[g.index(i0, j0 + 1)];
        let v11 = self.values[g.index(i0 + 1, j0 + 1)];
        Ok(v00 * (1.0 - tx) * (1.0 - ty)
            + v10 * tx * (1.0 - ty)
            + v01 * (1.0 - tx) * ty
            + v11 * tx * ty)
    }
}

/// Nodewise vector field (gradient output).
#[derive(Clone, Debug)]
pub struct VectorField {
    grid: Grid,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl VectorField {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn at(&self, i: usize, j: usize) -> [f64; 2] {
        let idx = self.grid.index(i, j);
        [self.x[idx], self.y[idx]]
    }

    pub fn norm_at(&self, idx: usize) -> f64 {
        (self.x[idx] * self.x[idx] + self.y[idx] * self.y[idx]).sqrt()
    }
}

/// Difference scheme for [`gradient`].
#[derive(Clone, Copy, Debug)]
pub enum GradientScheme {
    Centered,
    /// Centered in the interior of `{f > threshold}`, one-sided into the
    /// positive side within one cell of its boundary. Keeps the stencil from
    /// straddling the free boundary kink.
    OneSidedIntoPositive { threshold: f64 },
}

/// Standard second-order centered Laplacian on interior nodes (exact on
/// quadratics). Boundary nodes carry 0 and stay flagged in the mask.
pub fn laplacian(f: &ScalarField) -> ScalarField {
    let g = *f.grid();
    let mut out = ScalarField::zeros(&g);
    let h2 = g.h() * g.h();
    let [nx, ny] = g.nodes();
    for j in 0..ny {
        for i in 0..nx {
            if g.is_boundary_node(i, j) {
                continue;
            }
            let c = f.at(i, j);
            let mut lap = (f.at(i + 1, j) - 2.0 * c + f.at(i - 1, j)) / h2;
            if g.dim() == 2 {
                lap += (f.at(i, j + 1) - 2.0 * c + f.at(i, j - 1)) / h2;
            }
            out.set(i, j, lap);
        }
    }
    out
}

fn axis_derivative(
    f: &ScalarField,
    i: usize,
    j: usize,
    axis: usize,
    scheme: GradientScheme,
) -> f64 {
    let g = f.grid();
    let n_max = g.n_cells()[axis];
    let coord = if axis == 0 { i } else { j };
    let h = g.h();
    let at = |c: usize| -> f64 {
        if axis == 0 {
            f.at(c, j)
        } else {
            f.at(i, c)
        }
    };
    let has_bwd = coord > 0;
    let has_fwd = coord < n_max;
    match scheme {
        GradientScheme::Centered => {
            if has_bwd && has_fwd {
                (at(coord + 1) - at(coord - 1)) / (2.0 * h)
            } else if has_fwd {
                (at(coord + 1) - at(coord)) / h
            } else if has_bwd {
                (at(coord) - at(coord - 1)) / h
            } else {
                0.0
            }
        }
        GradientScheme::OneSidedIntoPositive { threshold } => {
            let fwd_pos = has_fwd && at(coord + 1) > threshold;
            let bwd_pos = has_bwd && at(coord - 1) > threshold;
            if fwd_pos && bwd_pos {
                (at(coord + 1) - at(coord - 1)) / (2.0 * h)
            } else if fwd_pos {
                (at(coord + 1) - at(coord)) / h
            } else if bwd_pos {
                (at(coord) - at(coord - 1)) / h
            } else if has_bwd && has_fwd {
                (at(coord + 1) - at(coord - 1)) / (2.0 * h)
            } else if has_fwd {
                (at(coord + 1) - at(coord)) / h
            } else if has_bwd {
                (at(coord) - at(coord - 1)) / h
            } else {
                0.0
            }
        }
    }
}

/// Discrete gradient. See [`GradientScheme`] for the stencil choice near the
/// positivity boundary; grid-boundary nodes always use the inward one-sided
/// difference.
pub fn gradient(f: &ScalarField, scheme: GradientScheme) -> VectorField {
    let g = *f.grid();
    let n = g.node_count();
    let mut vx = vec![0.0; n];
    let mut vy = vec![0.0; n];
    let [nx, ny] = g.nodes();
    for j in 0..ny {
        for i in 0..nx {
            let idx = g.index(i, j);
            vx[idx] = axis_derivative(f, i, j, 0, scheme);
            if g.dim() == 2 {
                vy[idx] = axis_derivative(f, i, j, 1, scheme);
            }
        }
    }
    VectorField { grid: g, x: vx, y: vy }
}

/// Lipschitz rescaling `x ↦ f(center + r x) / r`, interpolated bilinearly onto
/// a fresh grid with the same extent and resolution as the source. Errors when
/// the scaled window exits the source domain.
pub fn rescale_lipschitz(f: &ScalarField, r: f64, center: [f64; 2]) -> Result<ScalarField> {
    rescale_lipschitz_onto(f, r, center, f.grid())
}

/// Same map, sampled onto an explicit target grid (used when the scaled
/// window must shrink to stay inside the source).
pub fn rescale_lipschitz_onto(
    f: &ScalarField,
    r: f64,
    center: [f64; 2],
    target: &Grid,
) -> Result<ScalarField> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(CoreError::InvalidInput(format!("rescale factor r = {r} must be positive")));
    }
    let g = f.grid();
    let mut out = ScalarField::zeros(target);
    for j in 0..target.nodes()[1] {
        for i in 0..target.nodes()[0] {
            let x = target.node_pos(i, j);
            let p = [center[0] + r * x[0], center[1] + r * x[1]];
            if !g.contains_point(p, 1e-9 * g.h()) {
                return Err(CoreError::OutOfDomain(format!(
                    "scaled window exits the source domain at ({}, {})",
                    p[0], p[1]
                )));
            }
            let v = f.sample(p)? / r;
            out.set(i, j, v);
        }
    }
    Ok(out)
}

/// `sup - inf` over nodes in the closed ball `B_radius(center)`.
pub fn oscillation(f: &ScalarField, center: [f64; 2], radius: f64) -> Result<f64> {
    let g = f.grid();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut seen = false;
    for j in 0..g.nodes()[1] {
        for i in 0..g.nodes()[0] {
            let x = g.node_pos(i, j);
            let dx = x[0] - center[0];
            let dy = if g.dim() == 2 { x[1] - center[1] } else { 0.0 };
            if (dx * dx + dy * dy).sqrt() <= radius + 1e-12 {
                let v = f.at(i, j);
                lo = lo.min(v);
                hi = hi.max(v);
                seen = true;
            }
        }
    }
    if !seen {
        return Err(CoreError::OutOfDomain(format!(
            "no nodes inside the ball of radius {radius}"
        )));
    }
    Ok(hi - lo)
}

/// Max over nodes within half a cell of the sphere `|x - center| = r`.
pub fn sup_on_sphere(f: &ScalarField, center: [f64; 2], r: f64) -> Result<f64> {
    let g = f.grid();
    let mut hi = f64::NEG_INFINITY;
    let mut seen = false;
    for j in 0..g.nodes()[1] {
        for i in 0..g.nodes()[0] {
            let x = g.node_pos(i, j);
            let dx = x[0] - center[0];
            let dy = if g.dim() == 2 { x[1] - center[1] } else { 0.0 };
            let d = (dx * dx + dy * dy).sqrt();
            if (d - r).abs() <= 0.5 * g.h() + 1e-12 {
                hi = hi.max(f.at(i, j));
                seen = true;
            }
        }
    }
    if !seen {
        return Err(CoreError::OutOfDomain(format!(
            "no nodes within one cell of the sphere of radius {r}"
        )));
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_grid_2d(n: usize) -> Grid {
        Grid::new_2d([0.0, 0.0], [n, n], 1.0 / n as f64).unwrap()
    }

    #[test]
    fn grid_rejects_degenerate_inputs() {
        assert!(Grid::new_2d([0.0, 0.0], [4, 16], 0.1).is_err());
        assert!(Grid::new_1d(0.0, 16, 0.0).is_err());
        assert!(Grid::new_1d(0.0, 16, -1.0).is_err());
    }

    #[test]
    fn laplacian_of_constant_is_zero() {
        let g = unit_grid_2d(16);
        let f = ScalarField::from_fn(&g, |_| 3.5);
        let lap = laplacian(&f);
        for j in 1..16 {
            for i in 1..16 {
                assert_eq!(lap.at(i, j), 0.0);
            }
        }
    }

    #[test]
    fn laplacian_exact_on_quadratic() {
        // f = |x|^2 / (2n) has Laplacian exactly 1; the stencil is exact on quadratics.
        let g = Grid::new_2d([-1.0, -1.0], [32, 32], 2.0 / 32.0).unwrap();
        let f = ScalarField::from_fn(&g, |x| (x[0] * x[0] + x[1] * x[1]) / 4.0);
        let lap = laplacian(&f);
        for j in 1..32 {
            for i in 1..32 {
                assert!((lap.at(i, j) - 1.0).abs() < 1e-12, "lap = {}", lap.at(i, j));
            }
        }
    }

    #[test]
    fn laplacian_of_sine_matches_taylor_bound() {
        // Oracle: the centered-stencil truncation error for sin(pi x) is
        // bounded by (pi h)^2 / 12 relative, well inside 5e-3 at h = 1/64.
        let n = 64;
        let g = Grid::new_1d(0.0, n, 1.0 / n as f64).unwrap();
        let f = ScalarField::from_fn(&g, |x| (std::f64::consts::PI * x[0]).sin());
        let lap = laplacian(&f);
        let pi2 = std::f64::consts::PI.powi(2);
        for i in 1..n {
            let x = g.node_pos(i, 0)[0];
            let exact = -pi2 * (std::f64::consts::PI * x).sin();
            if exact.abs() > 1e-6 {
                let rel = (lap.at(i, 0) - exact).abs() / exact.abs();
                assert!(rel < 5e-3, "relative error {rel} at x = {x}");
            }
        }
    }

    #[test]
    fn gradient_exact_on_affine() {
        let g = unit_grid_2d(16);
        let a = [0.7, -1.3];
        let f = ScalarField::from_fn(&g, |x| a[0] * x[0] + a[1] * x[1] + 0.25);
        let grad = gradient(&f, GradientScheme::Centered);
        for j in 0..=16 {
            for i in 0..=16 {
                let v = grad.at(i, j);
                assert!((v[0] - a[0]).abs() < 1e-12);
                assert!((v[1] - a[1]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn one_sided_gradient_exact_on_cone() {
        // Nodes at x_n = ..., -h/2, h/2, 3h/2, ...: the node at h/2 must use the
        // forward difference and recover slope 1 exactly.
        let n = 16;
        let h = 1.0 / n as f64;
        let g = Grid::new_2d([-0.5 + 0.5 * h, -0.5 + 0.5 * h], [n, n], h).unwrap();
        let f = ScalarField::from_fn(&g, |x| x[1].max(0.0));
        let grad = gradient(&f, GradientScheme::OneSidedIntoPositive { threshold: 0.0 });
        // find the node row with x_n = h/2
        for j in 0..=n {
            for i in 1..n {
                let x = g.node_pos(i, j);
                if (x[1] - 0.5 * h).abs() < 1e-12 {
                    let v = grad.at(i, j);
                    assert!((v[0] - 0.0).abs() < 1e-12);
                    assert!((v[1] - 1.0).abs() < 1e-12, "dy = {}", v[1]);
                }
            }
        }
    }

    #[test]
    fn centered_gradient_on_half_quadratic() {
        let g = Grid::new_2d([-1.0, -1.0], [32, 32], 2.0 / 32.0).unwrap();
        let f = ScalarField::from_fn(&g, |x| 0.5 * (x[0] * x[0] + x[1] * x[1]));
        let grad = gradient(&f, GradientScheme::Centered);
        for j in 1..32 {
            for i in 1..32 {
                let x = g.node_pos(i, j);
                let v = grad.at(i, j);
                assert!((v[0] - x[0]).abs() < 1e-12);
                assert!((v[1] - x[1]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rescale_fixes_homogeneous_cone() {
        let g = Grid::new_2d([-1.0, -1.0], [64, 64], 2.0 / 64.0).unwrap();
        let f = ScalarField::from_fn(&g, |x| x[1].max(0.0));
        let r = rescale_lipschitz(&f, 0.5, [0.0, 0.0]).unwrap();
        // (x_n)^+ is degree-1 homogeneous: w(rx)/r = w(x); nodes hit exactly.
        assert!(f.sup_diff(&r).unwrap() < 1e-12);
    }

    #[test]
    fn rescale_quadratic() {
        // w = x_n^2 / 2, r = 1/2, center 0 -> w(rx)/r = x_n^2 / 4.
        let g = Grid::new_2d([-1.0, -1.0], [64, 64], 2.0 / 64.0).unwrap();
        let f = ScalarField::from_fn(&g, |x| 0.5 * x[1] * x[1]);
        let r = rescale_lipschitz(&f, 0.5, [0.0, 0.0]).unwrap();
        let expect = ScalarField::from_fn(&g, |x| 0.25 * x[1] * x[1]);
        // bilinear interpolation error O(h^2)
        let h = g.h();
        assert!(r.sup_diff(&expect).unwrap() < h * h);
    }

    #[test]
    fn rescale_rejects_exiting_window() {
        let g = Grid::new_2d([-1.0, -1.0], [16, 16], 2.0 / 16.0).unwrap();
        let f = ScalarField::from_fn(&g, |x| x[0]);
        assert!(matches!(
            rescale_lipschitz(&f, 2.0, [0.0, 0.0]),
            Err(CoreError::OutOfDomain(_))
        ));
    }

    #[test]
    fn oscillation_of_constant_and_affine() {
        let g = Grid::new_2d([-1.0, -1.0], [64, 64], 2.0 / 64.0).unwrap();
        let c = ScalarField::from_fn(&g, |_| 2.0);
        assert_eq!(oscillation(&c, [0.0, 0.0], 0.5).unwrap(), 0.0);

        // affine: oscillation on B_r equals 2 r |a| up to one cell
        let a = [0.6, 0.8];
        let f = ScalarField::from_fn(&g, |x| a[0] * x[0] + a[1] * x[1]);
        let r = 0.5;
        let osc = oscillation(&f, [0.0, 0.0], r).unwrap();
        assert!((osc - 2.0 * r).abs() < 2.0 * g.h(), "osc = {osc}");
    }

    #[test]
    fn sphere_sup_of_cone() {
        let g = Grid::new_2d([-1.0, -1.0], [128, 128], 2.0 / 128.0).unwrap();
        let f = ScalarField::from_fn(&g, |x| x[1].max(0.0));
        let s = sup_on_sphere(&f, [0.0, 0.0], 0.5).unwrap();
        assert!((s - 0.5).abs() <= g.h(), "sup = {s}");
    }

    #[test]
    fn empty_sphere_band_errors() {
        let g = unit_grid_2d(16);
        let f = ScalarField::zeros(&g);
        assert!(sup_on_sphere(&f, [10.0, 10.0], 0.1).is_err());
    }

    #[test]
    fn oscillation_monotone_in_radius() {
        let g = Grid::new_2d([-1.0, -1.0], [48, 48], 2.0 / 48.0).unwrap();
        let f = ScalarField::from_fn(&g, |x| (3.0 * x[0]).sin() + x[1] * x[1]);
        let mut prev = 0.0;
        for k in 1..=8 {
            let r = 0.1 * k as f64;
            let osc = oscillation(&f, [0.0, 0.0], r).unwrap();
            assert!(osc + 1e-15 >= prev, "oscillation must grow with r");
            prev = osc;
        }
    }

    proptest! {
        // Linearity of the discrete operators to machine precision.
        #[test]
        fn laplacian_and_gradient_are_linear(seed in 0u64..500) {
            let g = Grid::new_2d([0.0, 0.0], [12, 12], 1.0/12.0).unwrap();
            let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let mut rnd = || {
                s ^= s << 13; s ^= s >> 7; s ^= s << 17;
                (s as f64 / u64::MAX as f64) - 0.5
            };
            let fa = ScalarField::from_fn(&g, |_| rnd());
            let fb = ScalarField::from_fn(&g, |_| rnd());
            let mut sum = fa.clone();
            for (v, w) in sum.values_mut().iter_mut().zip(fb.values()) {
                *v += *w;
            }
            let la = laplacian(&fa);
            let lb = laplacian(&fb);
            let ls = laplacian(&sum);
            for idx in 0..g.node_count() {
                let lin = la.values()[idx] + lb.values()[idx];
                prop_assert!((ls.values()[idx] - lin).abs() < 1e-9 * (1.0 + lin.abs()));
            }
            let ga = gradient(&fa, GradientScheme::Centered);
            let gb = gradient(&fb, GradientScheme::Centered);
            let gs = gradient(&sum, GradientScheme::Centered);
            for idx in 0..g.node_count() {
                prop_assert!((gs.x[idx] - ga.x[idx] - gb.x[idx]).abs() < 1e-9);
                prop_assert!((gs.y[idx] - ga.y[idx] - gb.y[idx]).abs() < 1e-9);
            }
        }

        // Round-trip rescaling returns the field up to interpolation error
        // O(h^2); the way back is sampled onto a window that stays inside the
        // intermediate domain.
        #[test]
        fn rescale_roundtrip(r in 0.3f64..0.9) {
            let g = Grid::new_2d([-1.0, -1.0], [64, 64], 2.0/64.0).unwrap();
            let f = ScalarField::from_fn(&g, |x| (2.0*x[0]).sin() * (1.5*x[1]).cos());
            let down = rescale_lipschitz(&f, r, [0.0, 0.0]).unwrap();
            let side = 0.9 * r;
            let target = Grid::new_2d([-side, -side], [48, 48], 2.0 * side / 48.0).unwrap();
            let back = rescale_lipschitz_onto(&down, 1.0/r, [0.0, 0.0], &target).unwrap();
            let h = g.h();
            for j in 0..=48 {
                for i in 0..=48 {
                    let x = target.node_pos(i, j);
                    let d = (back.at(i, j) - f.sample(x).unwrap()).abs();
                    prop_assert!(d < 15.0 * h * h, "d = {d} at ({i},{j})");
                }
            }
        }
    }
}
