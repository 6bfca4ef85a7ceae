//! Barrier catalog: the radial comparison functions of the non-degeneracy and
//! linear-growth arguments, the slab polynomial driving the Harnack step, and
//! the Hölder cone seeds, each with a discrete sign audit on its stated
//! subdomain.

use crate::error::{CoreError, Result};
use crate::fields::{gradient, laplacian, GradientScheme, Grid, ScalarField};
use crate::geometry::Direction;
use crate::potentials::{HFunction, C_POS};

#[derive(Clone, Debug)]
pub enum Barrier {
    /// Harmonic supersolution vanishing on `B_{1/2}`:
    /// `v = c̄((1/2)^{2-n} - |x|^{2-n})` for `n >= 3`, `c̄ ln(2|x|)` for `n = 2`.
    RadialSuper { c_bar: f64, n: usize },
    /// Strict subsolution on the annulus `1/2 < |x| < 1`:
    /// `ψ = M(|x|^{-n} - 1)`.
    RadialSub { m: f64, n: usize },
    /// Slab polynomial `Q = -|x' - (ω'/ω_n) x_n|² + A x_n² + x_n`.
    SlabQ { omega: Direction, a: f64 },
    /// Hölder cone `φ0 ± C |(x - x0)·ν|^{α/2}` (truncated below when lower).
    HolderSeed {
        x0: [f64; 2],
        phi0: f64,
        c: f64,
        alpha: f64,
        nu: Direction,
        upper: bool,
    },
}

/// Outcome of the discrete/symbolic sign audit.
#[derive(Clone, Copy, Debug)]
pub struct BarrierAudit {
    pub ok: bool,
    /// Minimum margin of the defining differential inequality on the stated
    /// subdomain (symbolic derivatives evaluated at the nodes).
    pub min_pde_margin: f64,
    /// Minimum margin of the gradient-location condition (inside `D` for
    /// supersolutions, outside `D̄` for subsolutions; for the slab barrier the
    /// minimum of `ω·∇Q`).
    pub grad_location_margin: f64,
    /// Worst deviation of the discrete stencil from the symbolic values
    /// (NaN when the barrier dimension differs from the grid dimension).
    pub max_discrete_residual: f64,
    pub nodes_checked: usize,
}

fn radial_super_profile(c_bar: f64, n: usize, r: f64) -> f64 {
    if r <= 0.5 {
        return 0.0;
    }
    if n == 2 {
        c_bar * (2.0 * r).ln()
    } else {
        c_bar * (0.5f64.powi(2 - n as i32) - r.powi(2 - n as i32))
    }
}

fn radial_super_grad(c_bar: f64, n: usize, r: f64) -> f64 {
    // outside profile gradient; on the seam use the outside branch
    if r < 0.5 {
        return 0.0;
    }
    if n == 2 {
        c_bar / r
    } else {
        c_bar * (n as f64 - 2.0) * r.powi(1 - n as i32)
    }
}

pub fn barrier_eval(
    b: &Barrier,
    grid: &Grid,
    hfn: &HFunction,
) -> Result<(ScalarField, BarrierAudit)> {
    let dom = hfn.domain();
    match b {
        Barrier::RadialSuper { c_bar, n } => {
            if *n < 2 {
                return Err(CoreError::InvalidInput("radial barrier needs n >= 2".into()));
            }
            // regime: the gradient on ∂B_{1/2} must lie inside D
            let gmax = radial_super_grad(*c_bar, *n, 0.5);
            if gmax >= dom.f_min() {
                return Err(CoreError::InvalidInput(format!(
                    "c̄ = {c_bar} too large: |∇v|(1/2) = {gmax:.6} leaves D (f_min = {:.6})",
                    dom.f_min()
                )));
            }
            let field = ScalarField::from_fn(grid, |x| {
                radial_super_profile(*c_bar, *n, (x[0] * x[0] + x[1] * x[1]).sqrt())
            });
            let mut grad_margin = f64::INFINITY;
            let mut checked = 0;
            for j in 0..grid.nodes()[1] {
                for i in 0..grid.nodes()[0] {
                    let x = grid.node_pos(i, j);
                    let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
                    if r <= 0.5 || r >= 1.0 {
                        continue;
                    }
                    checked += 1;
                    let g = radial_super_grad(*c_bar, *n, r);
                    let nu = Direction::new(&[x[0] / r, x[1] / r]).unwrap();
                    grad_margin = grad_margin.min(dom.f_of_nu(&nu)? - g);
                }
            }
            // harmonic: the symbolic Laplacian vanishes; discrete check only
            // when the profile dimension matches the grid
            let disc = if *n == grid.dim() {
                max_discrete_laplacian_deviation(grid, &field, |_| 0.0)
            } else {
                f64::NAN
            };
            let audit = BarrierAudit {
                ok: grad_margin > 0.0,
                min_pde_margin: 0.0,
                grad_location_margin: grad_margin,
                max_discrete_residual: disc,
                nodes_checked: checked,
            };
            Ok((field, audit))
        }
        Barrier::RadialSub { m, n } => {
            if *n < 2 {
                return Err(CoreError::InvalidInput("radial barrier needs n >= 2".into()));
            }
            let nn = *n as f64;
            // gradient must exit D̄ on the whole annulus; worst case r = 1
            if m * nn <= dom.f_max() {
                return Err(CoreError::InvalidInput(format!(
                    "M = {m} too small: |∇ψ|(1) = {} stays inside D̄ (f_max = {})",
                    m * nn,
                    dom.f_max()
                )));
            }
            let profile = |r: f64| m * (r.max(0.25).powi(-(*n as i32)) - 1.0);
            let field = ScalarField::from_fn(grid, |x| profile((x[0] * x[0] + x[1] * x[1]).sqrt()));
            let mut pde_margin = f64::INFINITY;
            let mut grad_margin = f64::INFINITY;
            let mut checked = 0;
            for j in 0..grid.nodes()[1] {
                for i in 0..grid.nodes()[0] {
                    let x = grid.node_pos(i, j);
                    let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
                    if r <= 0.5 || r >= 1.0 {
                        continue;
                    }
                    checked += 1;
                    // Δψ = M 2n r^{-n-2} > 0, |∇ψ| = M n r^{-n-1}
                    pde_margin = pde_margin.min(m * 2.0 * nn * r.powi(-(*n as i32) - 2));
                    grad_margin = grad_margin.min(m * nn * r.powi(-(*n as i32) - 1) - dom.f_max());
                }
            }
            let disc = if *n == grid.dim() {
                max_discrete_laplacian_deviation(grid, &field, |x| {
                    let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
                    if r > 0.5 && r < 1.0 {
                        m * 2.0 * nn * r.powi(-(*n as i32) - 2)
                    } else {
                        f64::NAN
                    }
                })
            } else {
                f64::NAN
            };
            let audit = BarrierAudit {
                ok: pde_margin > 0.0 && grad_margin > 0.0,
                min_pde_margin: pde_margin,
                grad_location_margin: grad_margin,
                max_discrete_residual: disc,
                nodes_checked: checked,
            };
            Ok((field, audit))
        }
        Barrier::SlabQ { omega, a } => {
            if grid.dim() != 2 {
                return Err(CoreError::InvalidInput("slab barrier is two-dimensional".into()));
            }
            let delta = dom.delta();
            let need = 1.0 + 1.0 / (delta * delta); // (n-1) + δ^{-2} with n = 2
            if *a <= need {
                return Err(CoreError::InvalidInput(format!(
                    "slab coefficient A = {a} must exceed (n-1) + δ^{{-2}} = {need:.6}"
                )));
            }
            let wn = omega.y();
            if wn < delta {
                return Err(CoreError::InvalidInput(format!(
                    "slab direction has ω_n = {wn} below δ = {delta}"
                )));
            }
            let wp = omega.x();
            let q = move |x: [f64; 2]| {
                let t = x[0] - (wp / wn) * x[1];
                -t * t + a * x[1] * x[1] + x[1]
            };
            let field = ScalarField::from_fn(grid, q);
            // ΔQ = -2(n-1) + 2A, constant
            let pde_margin = 2.0 * a - 2.0;
            // ω·∇Q = 2 A ω_n x_n + ω_n on the slab
            let mut grad_margin = f64::INFINITY;
            let mut checked = 0;
            for j in 0..grid.nodes()[1] {
                for i in 0..grid.nodes()[0] {
                    let x = grid.node_pos(i, j);
                    if x[1] < -0.05 || x[1] > 0.45 {
                        continue;
                    }
                    checked += 1;
                    grad_margin = grad_margin.min(2.0 * a * wn * x[1] + wn);
                }
            }
            let disc = max_discrete_laplacian_deviation(grid, &field, |_| 2.0 * a - 2.0);
            let audit = BarrierAudit {
                ok: pde_margin > 0.0 && grad_margin > 0.0,
                min_pde_margin: pde_margin,
                grad_location_margin: grad_margin,
                max_discrete_residual: disc,
                nodes_checked: checked,
            };
            Ok((field, audit))
        }
        Barrier::HolderSeed {
            x0,
            phi0,
            c,
            alpha,
            nu,
            upper,
        } => {
            if !(*alpha > 0.0 && *alpha < 1.0) {
                return Err(CoreError::InvalidInput(format!("alpha = {alpha} outside (0,1)")));
            }
            let lhs = 0.5 * alpha * (0.5 * alpha - 1.0);
            if lhs > -0.25 * hfn.c_h() * alpha * alpha + 1e-15 {
                return Err(CoreError::InvalidInput(
                    "cone parameters violate α/2(α/2-1) <= -C_h α²/4".into(),
                ));
            }
            let (nx, ny_) = (nu.x(), if nu.dim() == 2 { nu.y() } else { 0.0 });
            let prof = move |x: [f64; 2]| {
                let t = ((x[0] - x0[0]) * nx + (x[1] - x0[1]) * ny_).abs();
                let cone = c * t.powf(0.5 * alpha);
                if *upper {
                    phi0 + cone
                } else {
                    (phi0 - cone).max(0.0)
                }
            };
            let field = ScalarField::from_fn(grid, prof);
            // sign audit of the degenerate inequality on the positive set where
            // the cone gradient has left D̄
            let thr = C_POS * grid.h();
            let lap = laplacian(&field);
            let grd = gradient(&field, GradientScheme::OneSidedIntoPositive { threshold: thr });
            let mut margin = f64::INFINITY;
            let mut checked = 0;
            for j in 1..grid.nodes()[1].saturating_sub(1).max(1) {
                for i in 1..grid.nodes()[0] - 1 {
                    if grid.is_boundary_node(i, j) {
                        continue;
                    }
                    let idx = grid.index(i, j);
                    let v = field.values()[idx];
                    if v <= thr {
                        continue;
                    }
                    let x = grid.node_pos(i, j);
                    let t = ((x[0] - x0[0]) * nx + (x[1] - x0[1]) * ny_).abs();
                    if t < 2.0 * grid.h() {
                        continue; // one-cell kink buffer
                    }
                    let p = [grd.x[idx], grd.y[idx]];
                    if dom.contains(&p) {
                        continue;
                    }
                    checked += 1;
                    let resid = lap.values()[idx] - hfn.eval(&p) / v;
                    // supersolution: residual <= 0; subsolution: residual >= 0
                    let m = if *upper { -resid } else { resid };
                    margin = margin.min(m);
                }
            }
            let audit = BarrierAudit {
                ok: margin >= -1e-9,
                min_pde_margin: margin,
                grad_location_margin: 0.0,
                max_discrete_residual: 0.0,
                nodes_checked: checked,
            };
            Ok((field, audit))
        }
    }
}

/// Worst |Δ_h f - expected(x)| over interior nodes where `expected` is finite,
/// skipping nodes within one cell of the profile kinks (|x| = 1/2).
fn max_discrete_laplacian_deviation(
    grid: &Grid,
    field: &ScalarField,
    expected: impl Fn([f64; 2]) -> f64,
) -> f64 {
    let lap = laplacian(field);
    let mut worst: f64 = 0.0;
    for j in 0..grid.nodes()[1] {
        for i in 0..grid.nodes()[0] {
            if grid.is_boundary_node(i, j) {
                continue;
            }
            let x = grid.node_pos(i, j);
            let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
            if r < 0.6 {
                continue;
            }
            let e = expected(x);
            if !e.is_finite() {
                continue;
            }
            worst = worst.max((lap.values()[grid.index(i, j)] - e).abs());
        }
    }
    worst
}
