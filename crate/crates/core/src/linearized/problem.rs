//! Problem data for the degenerate half-domain operator
//! `L_s φ = a11 φ_11 + 2 a1n φ_1n + φ_nn + s φ_n / x_n` (a_nn = 1), defined on
//! a vertically staggered grid whose node heights are `(k + 1/2) h`, with the
//! boundary value living on the ghost row `x_n = 0`.

use crate::error::{CoreError, Result};
use crate::fields::Grid;
use crate::geometry::Direction;

pub struct LinearizedProblem {
    pub a11: f64,
    pub a1n: f64,
    pub s: f64,
    pub delta: f64,
    /// Optional source term `g(x', x_n)` for manufactured solutions.
    pub source: Option<Box<dyn Fn(f64, f64) -> f64 + Sync>>,
}

impl LinearizedProblem {
    pub fn new(a11: f64, a1n: f64, s: f64, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(CoreError::InvalidInput(format!("delta = {delta} outside (0, 1]")));
        }
        if s < -1.0 + delta - 1e-12 || s > 1.0 / delta + 1e-12 {
            return Err(CoreError::InvalidInput(format!(
                "s = {s} outside [-1 + δ, 1/δ] = [{}, {}]",
                -1.0 + delta,
                1.0 / delta
            )));
        }
        // ellipticity of [[a11, a1n], [a1n, 1]]
        if a11 <= 0.0 || a11 - a1n * a1n <= 0.0 {
            return Err(CoreError::InvalidInput(format!(
                "coefficients a11 = {a11}, a1n = {a1n} are not uniformly elliptic"
            )));
        }
        Ok(LinearizedProblem {
            a11,
            a1n,
            s,
            delta,
            source: None,
        })
    }

    /// Normalized operator: plain Laplacian plus the weighted vertical drift.
    pub fn normalized(s: f64, delta: f64) -> Result<Self> {
        Self::new(1.0, 0.0, s, delta)
    }

    pub fn with_source(mut self, g: Box<dyn Fn(f64, f64) -> f64 + Sync>) -> Self {
        self.source = Some(g);
        self
    }

    /// General-form problem for drift `v = λ ω`: after the shear
    /// `φ̃(x', x_n) = φ(x' + ω' x_n / ω_n, x_n)` the operator becomes
    /// `(1 + d11) φ̃_11 - b1 φ̃_1n + φ̃_nn + s φ̃_n/x_n` with `s = λ ω_n`.
    pub fn from_shear(omega: &Direction, lambda: f64, delta: f64) -> Result<Self> {
        if omega.dim() != 2 {
            return Err(CoreError::InvalidInput("shear direction must be 2D".into()));
        }
        if omega.y() < delta {
            return Err(CoreError::InvalidInput(format!(
                "ω_n = {} below δ = {delta}",
                omega.y()
            )));
        }
        let (d11, b1) = crate::linearized::transformed_coefficients(omega);
        Self::new(1.0 + d11, -0.5 * b1, lambda * omega.y(), delta)
    }

    /// Ellipticity constants (λ, Λ) of the coefficient matrix.
    pub fn ellipticity(&self) -> (f64, f64) {
        let tr = self.a11 + 1.0;
        let det = self.a11 - self.a1n * self.a1n;
        let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
        (tr / 2.0 - disc, tr / 2.0 + disc)
    }

    pub fn eval_source(&self, x: f64, t: f64) -> f64 {
        match &self.source {
            Some(g) => g(x, t),
            None => 0.0,
        }
    }
}

/// Staggered upper-half grid: `k_rows` node rows at heights `(k + 1/2) h`,
/// columns spanning `[x_min, x_min + nx_cells h]`. Dirichlet data lives on the
/// side columns and the top row; the bottom row is closed by the weighted
/// boundary condition.
pub fn staggered_half_grid(nx_cells: usize, k_rows: usize, h: f64, x_min: f64) -> Result<Grid> {
    if k_rows < 9 {
        return Err(CoreError::InvalidInput(format!(
            "need at least 9 staggered rows, got {k_rows}"
        )));
    }
    Grid::new_2d([x_min, 0.5 * h], [nx_cells, k_rows - 1], h)
}
