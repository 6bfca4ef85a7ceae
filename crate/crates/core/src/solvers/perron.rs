//! Perron construction: Hölder cone seeds (supersolution above, truncated
//! subsolution below), the envelope lowered by local patch replacement in
//! fixed lexicographic order, and the exact discrete inf-convolution.

use super::config::{boundary_init, SolveReport, SolverConfig};
use crate::error::{CoreError, Result};
use crate::fields::{gradient, GradientScheme, Grid, ScalarField};
use crate::potentials::{residual_w, HFunction, C_POS};
use rayon::prelude::*;
use std::time::Instant;

/// Cone-family parameters of the Hölder seeds.
#[derive(Clone, Copy, Debug)]
pub struct SeedParams {
    pub c: f64,
    pub alpha: f64,
}

impl SeedParams {
    /// Admissibility: `α in (0,1)`, the curvature inequality
    /// `α/2 (α/2 - 1) <= -C_h α² / 4`, and cone gradients staying outside `D̄`
    /// across the whole grid diameter.
    fn validate(&self, grid: &Grid, hfn: &HFunction) -> Result<()> {
        let (c, alpha) = (self.c, self.alpha);
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(CoreError::InvalidInput(format!(
                "seed exponent alpha = {alpha} outside (0, 1)"
            )));
        }
        let lhs = 0.5 * alpha * (0.5 * alpha - 1.0);
        let rhs = -0.25 * hfn.c_h() * alpha * alpha;
        if lhs > rhs + 1e-15 {
            return Err(CoreError::InvalidInput(format!(
                "seed parameters rejected: α/2(α/2-1) = {lhs:.6} > -C_h α²/4 = {rhs:.6}"
            )));
        }
        let ext = grid.extent_max();
        let diam = {
            let dx = ext[0] - grid.origin()[0];
            let dy = if grid.dim() == 2 { ext[1] - grid.origin()[1] } else { 0.0 };
            (dx * dx + dy * dy).sqrt()
        };
        let min_grad = c * 0.5 * alpha * diam.powf(0.5 * alpha - 1.0);
        let f_max = hfn.domain().f_max();
        if min_grad <= f_max {
            return Err(CoreError::InvalidInput(format!(
                "seed parameters rejected: cone gradient floor C α/2 diam^(α/2-1) = {min_grad:.6} \
                 does not leave D̄ (f_max = {f_max:.6}); C too small"
            )));
        }
        Ok(())
    }
}

/// Boundary (point, outward normal) pairs of the rectangular domain; corner
/// nodes contribute one pair per incident face.
fn boundary_cones(grid: &Grid) -> Vec<([f64; 2], [f64; 2])> {
    let [nx, ny] = grid.nodes();
    let mut out = Vec::new();
    if grid.dim() == 1 {
        out.push((grid.node_pos(0, 0), [-1.0, 0.0]));
        out.push((grid.node_pos(nx - 1, 0), [1.0, 0.0]));
        return out;
    }
    for j in 0..ny {
        for i in 0..nx {
            if !grid.is_boundary_node(i, j) {
                continue;
            }
            let p = grid.node_pos(i, j);
            if i == 0 {
                out.push((p, [-1.0, 0.0]));
            }
            if i == nx - 1 {
                out.push((p, [1.0, 0.0]));
            }
            if j == 0 {
                out.push((p, [0.0, -1.0]));
            }
            if j == ny - 1 {
                out.push((p, [0.0, 1.0]));
            }
        }
    }
    out
}

fn seed_field(
    grid: &Grid,
    data: &dyn Fn([f64; 2]) -> f64,
    params: &SeedParams,
    hfn: &HFunction,
    upper: bool,
) -> Result<ScalarField> {
    params.validate(grid, hfn)?;
    let rim = boundary_init(grid, data)?; // validates data >= 0
    let cones = boundary_cones(grid);
    let mut field = ScalarField::zeros(grid);
    let [nx, ny] = grid.nodes();
    for j in 0..ny {
        for i in 0..nx {
            let x = grid.node_pos(i, j);
            let mut best = if upper { f64::INFINITY } else { f64::NEG_INFINITY };
            for (x0, nu) in &cones {
                let t = ((x[0] - x0[0]) * nu[0] + (x[1] - x0[1]) * nu[1]).abs();
                let cone = params.c * t.powf(0.5 * params.alpha);
                let phi0 = data(*x0);
                let v = if upper {
                    phi0 + cone
                } else {
                    (phi0 - cone).max(0.0)
                };
                if upper {
                    best = best.min(v);
                } else {
                    best = best.max(v);
                }
            }
            field.set(i, j, best);
        }
    }
    // the seeds must restore the data on the rim; along a flat face every
    // same-face cone projects to zero, so data varying along a face cannot be
    // matched by the normal-cone family (a rectangular-boundary geometry
    // restriction: the construction matches data exactly on strictly convex
    // boundaries)
    for j in 0..ny {
        for i in 0..nx {
            if grid.is_boundary_node(i, j) {
                let want = rim.at(i, j);
                let got = field.at(i, j);
                if (got - want).abs() > 1e-9 * (1.0 + want.abs()) {
                    let reason = if face_variation(grid, data) > 1e-9 {
                        "the boundary data varies along a flat face, which the \
                         normal-cone family cannot match (use face-constant data)"
                    } else {
                        "C too small for the data's Hölder seminorm"
                    };
                    return Err(CoreError::InvalidInput(format!(
                        "seed does not match the boundary data at ({i}, {j}): {got} vs {want}; {reason}"
                    )));
                }
            }
        }
    }
    Ok(field)
}

/// Largest variation of the data along any single face of the box.
fn face_variation(grid: &Grid, data: &dyn Fn([f64; 2]) -> f64) -> f64 {
    let [nx, ny] = grid.nodes();
    if grid.dim() == 1 {
        return 0.0;
    }
    let mut worst: f64 = 0.0;
    let mut scan = |pts: &mut dyn Iterator<Item = [f64; 2]>| {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for p in pts {
            let v = data(p);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        worst = worst.max(hi - lo);
    };
    scan(&mut (0..ny).map(|j| grid.node_pos(0, j)));
    scan(&mut (0..ny).map(|j| grid.node_pos(nx - 1, j)));
    scan(&mut (0..nx).map(|i| grid.node_pos(i, 0)));
    scan(&mut (0..nx).map(|i| grid.node_pos(i, ny - 1)));
    worst
}

/// Infimum of the Hölder cone family over the boundary: a supersolution
/// matching the data on the rim.
pub fn supersolution_seed(
    grid: &Grid,
    data: &dyn Fn([f64; 2]) -> f64,
    params: &SeedParams,
    hfn: &HFunction,
) -> Result<ScalarField> {
    seed_field(grid, data, params, hfn, true)
}

/// Supremum of the truncated downward cone family: a subsolution below the
/// envelope.
pub fn subsolution_seed(
    grid: &Grid,
    data: &dyn Fn([f64; 2]) -> f64,
    params: &SeedParams,
    hfn: &HFunction,
) -> Result<ScalarField> {
    seed_field(grid, data, params, hfn, false)
}

/// Exact discrete inf-convolution `min_y (ψ(y) + 2C |x-y|^{α/2})` over all
/// grid nodes.
pub fn inf_convolution(psi: &ScalarField, c: f64, alpha: f64) -> ScalarField {
    let g = *psi.grid();
    let [nx, ny] = g.nodes();
    let positions: Vec<[f64; 2]> = (0..ny)
        .flat_map(|j| (0..nx).map(move |i| (i, j)))
        .map(|(i, j)| g.node_pos(i, j))
        .collect();
    let vals = psi.values().to_vec();
    let half_alpha = 0.5 * alpha;
    let out_vals: Vec<f64> = positions
        .par_iter()
        .map(|x| {
            let mut best = f64::INFINITY;
            for (y, v) in positions.iter().zip(&vals) {
                let d2 = (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2);
                let cand = v + 2.0 * c * d2.powf(0.5 * half_alpha);
                if cand < best {
                    best = cand;
                }
            }
            best
        })
        .collect();
    let mut out = psi.clone();
    out.values_mut().copy_from_slice(&out_vals);
    out
}

/// Value at global node, preferring the patch-local overlay.
#[inline]
fn patch_val(
    w: &ScalarField,
    local: &[f64],
    li: impl Fn(usize, usize) -> Option<usize>,
    i: usize,
    j: usize,
) -> f64 {
    match li(i, j) {
        Some(k) => local[k],
        None => w.at(i, j),
    }
}

/// Perron envelope: start from the supersolution seed and keep lowering by
/// local replacement (nonlinear patch solves, pointwise min with the current
/// iterate), patches in fixed lexicographic order.
pub fn perron_envelope(
    grid: &Grid,
    data: &dyn Fn([f64; 2]) -> f64,
    hfn: &HFunction,
    cfg: &SolverConfig,
    params: &SeedParams,
) -> Result<(ScalarField, SolveReport)> {
    cfg.validate(grid)?;
    let start = Instant::now();
    let psi = supersolution_seed(grid, data, params, hfn)?;
    let phi_sub = subsolution_seed(grid, data, params, hfn)?;
    for idx in 0..grid.node_count() {
        if psi.values()[idx] < phi_sub.values()[idx] - 1e-12 {
            return Err(CoreError::InvalidInput(
                "seed ordering violation: supersolution seed dips below the subsolution seed \
                 (C too small)"
                    .into(),
            ));
        }
    }

    let mut w = psi;
    let mut report = SolveReport::default();
    let thr = C_POS * grid.h();
    let h2 = grid.h() * grid.h();
    let two_dim = 2.0 * grid.dim() as f64;
    let patch: usize = 16;
    let stride: usize = 8;
    let [nx, ny] = grid.nodes();
    let patch_sweeps = 2 * (patch + 2);

    let origins = |n: usize| -> Vec<usize> {
        if n <= patch + 1 {
            return vec![0];
        }
        let mut v: Vec<usize> = (0..).map(|k| k * stride).take_while(|o| o + patch < n).collect();
        let last = n - 1 - patch;
        if v.last() != Some(&last) {
            v.push(last);
        }
        v
    };
    let ox = origins(nx);
    let oy = if grid.dim() == 2 { origins(ny) } else { vec![0] };

    let mut residual = f64::INFINITY;
    let mut pass = 0;
    while pass < cfg.max_iters {
        pass += 1;
        let mut max_change: f64 = 0.0;
        for &j0 in &oy {
            for &i0 in &ox {
                let i1 = (i0 + patch).min(nx - 1);
                let j1 = if grid.dim() == 2 { (j0 + patch).min(ny - 1) } else { 0 };
                let li_nx = i1 - i0 + 1;
                let li = |i: usize, j: usize| -> Option<usize> {
                    if i >= i0 && i <= i1 && j >= j0 && j <= j1 {
                        Some((i - i0) + (j - j0) * li_nx)
                    } else {
                        None
                    }
                };
                let mut local: Vec<f64> =
                    (j0..=j1).flat_map(|j| (i0..=i1).map(move |i| (i, j))).map(|(i, j)| w.at(i, j)).collect();

                for _ in 0..patch_sweeps {
                    for color in 0..2usize {
                        for j in j0.max(1)..=j1.min(ny.saturating_sub(2).max(j0)) {
                            for i in i0.max(1)..=i1.min(nx - 2) {
                                if grid.is_boundary_node(i, j) || (i + j) % 2 != color {
                                    continue;
                                }
                                if grid.dim() == 2 && (j == 0 || j == ny - 1) {
                                    continue;
                                }
                                let k = li(i, j).unwrap();
                                // one-sided gradient into positivity, local overlay
                                let c = local[k];
                                let gv = |di: isize, dj: isize| {
                                    patch_val(
                                        &w,
                                        &local,
                                        li,
                                        (i as isize + di) as usize,
                                        (j as isize + dj) as usize,
                                    )
                                };
                                let (xp, xm) = (gv(1, 0), gv(-1, 0));
                                let gx = one_sided(c, xm, xp, thr, grid.h());
                                let gy = if grid.dim() == 2 {
                                    let (yp, ym) = (gv(0, 1), gv(0, -1));
                                    one_sided(c, ym, yp, thr, grid.h())
                                } else {
                                    0.0
                                };
                                let rhs = hfn.eval(&[gx, gy]) / c.max(cfg.floor);
                                let mut nb = xp + xm;
                                if grid.dim() == 2 {
                                    nb += gv(0, 1) + gv(0, -1);
                                }
                                local[k] = ((nb - h2 * rhs) / two_dim).max(0.0);
                            }
                        }
                    }
                }

                // pointwise min against the current envelope
                for j in j0..=j1 {
                    for i in i0..=i1 {
                        if grid.is_boundary_node(i, j) {
                            continue;
                        }
                        let k = li(i, j).unwrap();
                        let old = w.at(i, j);
                        let new = old.min(local[k].max(0.0));
                        if new < old {
                            max_change = max_change.max(old - new);
                            w.set(i, j, new);
                        }
                    }
                }
            }
        }

        if pass % 5 == 0 || max_change < 1e-13 {
            let res = residual_w(&w, hfn, cfg.floor);
            residual = res.sup;
            report.residual_sup = res.sup;
            report.residual_l2 = res.l2;
            if residual <= cfg.tol_residual || max_change < 1e-13 {
                break;
            }
        }
    }

    // supersolution sign audit on the positive set where the gradient left D
    {
        let grad = gradient(&w, GradientScheme::OneSidedIntoPositive { threshold: thr });
        let res = residual_w(&w, hfn, cfg.floor);
        let mut worst: f64 = 0.0;
        for idx in 0..grid.node_count() {
            if !res.mask[idx] {
                continue;
            }
            let p = [grad.x[idx], grad.y[idx]];
            if !hfn.domain().contains(&p) {
                worst = worst.max(res.field.values()[idx]);
            }
        }
        report.supersolution_violation = Some(worst);
    }

    report.converged = residual <= cfg.tol_residual;
    report.iterations = pass;
    report.wall_secs = start.elapsed().as_secs_f64();
    Ok((w, report))
}

#[inline]
fn one_sided(c: f64, minus: f64, plus: f64, thr: f64, h: f64) -> f64 {
    let fwd = plus > thr;
    let bwd = minus > thr;
    if fwd && bwd {
        (plus - minus) / (2.0 * h)
    } else if fwd {
        (plus - c) / h
    } else if bwd {
        (c - minus) / h
    } else {
        (plus - minus) / (2.0 * h)
    }
}
