//! Pointwise and integral free-boundary diagnostics: the non-degeneracy
//! constant, the linear-growth bound, gradient-constraint violation through
//! the gauge, the η-integral, and the level-strip surrogate for the boundary
//! measure.

use super::extract::FreeBoundary;
use crate::error::{CoreError, Result};
use crate::fields::{gradient, sup_on_sphere, GradientScheme, ScalarField};
use crate::geometry::{Gauge, GaugeMode};
use crate::potentials::C_POS;
use rayon::prelude::*;

#[derive(Clone, Debug)]
pub struct NondegeneracyReport {
    pub kappa: f64,
    pub per_radius: Vec<(f64, f64)>,
}

/// `κ = min_r sup_{∂B_r(x0)} w / r` over the given radii.
pub fn nondegeneracy_constant(
    w: &ScalarField,
    x0: [f64; 2],
    radii: &[f64],
) -> Result<NondegeneracyReport> {
    if radii.is_empty() {
        return Err(CoreError::InvalidInput("no radii supplied".into()));
    }
    let mut per_radius = Vec::with_capacity(radii.len());
    let mut kappa = f64::INFINITY;
    for &r in radii {
        let s = sup_on_sphere(w, x0, r)? / r;
        kappa = kappa.min(s);
        per_radius.push((r, s));
    }
    Ok(NondegeneracyReport { kappa, per_radius })
}

/// `C_growth = max w(x)/dist(x, F(w))` over positive nodes (brute-force
/// distances; fine at desk scale).
pub fn linear_growth_check(w: &ScalarField, fb: &FreeBoundary) -> Result<f64> {
    if fb.is_empty() {
        return Err(CoreError::Precondition(
            "linear growth check needs a nonempty free boundary".into(),
        ));
    }
    let g = w.grid();
    let [nx, ny] = g.nodes();
    let nodes: Vec<([f64; 2], f64)> = (0..ny)
        .flat_map(|j| (0..nx).map(move |i| (i, j)))
        .filter_map(|(i, j)| {
            let v = w.at(i, j);
            (v > fb.w_thresh).then(|| (g.node_pos(i, j), v))
        })
        .collect();
    let best = nodes
        .par_iter()
        .map(|(x, v)| {
            let d = fb.distance_to(*x);
            if d > 1e-12 {
                v / d
            } else {
                0.0
            }
        })
        .reduce(|| 0.0, f64::max);
    Ok(best)
}

#[derive(Clone, Debug)]
pub struct GradientConstraintReport {
    /// `sup η(∇w)` over positive nodes within the band.
    pub sup_eta: f64,
    /// Least-squares exponent of `log η⁺` against `log w` (the discrete shadow
    /// of `η(∇w) <= w^ξ`), when enough positive samples exist.
    pub xi_fit: Option<f64>,
    pub nodes_in_band: usize,
    pub gauge_mode: GaugeMode,
}

/// Gradient-constraint violation in a band `dist(x, F(w)) <= band`.
pub fn gradient_constraint_check(
    w: &ScalarField,
    fb: &FreeBoundary,
    gauge: &Gauge,
    band: f64,
) -> Result<GradientConstraintReport> {
    if fb.is_empty() {
        return Err(CoreError::Precondition(
            "gradient constraint check needs a nonempty free boundary".into(),
        ));
    }
    let g = w.grid();
    let thr = C_POS * g.h();
    let grad = gradient(w, GradientScheme::OneSidedIntoPositive { threshold: thr });
    let [nx, ny] = g.nodes();
    let samples: Vec<(f64, f64)> = (0..ny)
        .flat_map(|j| (0..nx).map(move |i| (i, j)))
        .collect::<Vec<_>>()
        .par_iter()
        .filter_map(|&(i, j)| {
            if g.is_boundary_node(i, j) {
                return None;
            }
            let idx = g.index(i, j);
            let v = w.values()[idx];
            if v <= thr {
                return None;
            }
            let x = g.node_pos(i, j);
            if fb.distance_to(x) > band {
                return None;
            }
            let p = [grad.x[idx], grad.y[idx]];
            Some((gauge.eval(&p[..g.dim()]), v))
        })
        .collect();
    if samples.is_empty() {
        return Err(CoreError::Precondition("no positive nodes in the band".into()));
    }
    let sup_eta = samples.iter().map(|(e, _)| *e).fold(0.0, f64::max);
    // fit log η = ξ log w on nodes with η > 0
    let logs: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(e, v)| *e > 1e-14 && *v > 0.0 && *v < 1.0)
        .map(|(e, v)| (v.ln(), e.ln()))
        .collect();
    let xi_fit = if logs.len() >= 8 {
        let n = logs.len() as f64;
        let sx: f64 = logs.iter().map(|(x, _)| x).sum();
        let sy: f64 = logs.iter().map(|(_, y)| y).sum();
        let sxx: f64 = logs.iter().map(|(x, _)| x * x).sum();
        let sxy: f64 = logs.iter().map(|(x, y)| x * y).sum();
        let det = n * sxx - sx * sx;
        (det.abs() > 1e-12).then(|| (n * sxy - sx * sy) / det)
    } else {
        None
    };
    Ok(GradientConstraintReport {
        sup_eta,
        xi_fit,
        nodes_in_band: samples.len(),
        gauge_mode: gauge.mode(),
    })
}

#[derive(Clone, Debug)]
pub struct EtaIntegral {
    pub value: f64,
    /// Same quadrature with half the floor (sensitivity control).
    pub value_half_floor: f64,
    pub floor: f64,
    pub gauge_mode: GaugeMode,
}

/// `∫ (η(∇w))⁺ / max(w, ε_f)` over the positive set, nodal quadrature,
/// reported at two floors.
pub fn eta_integral(w: &ScalarField, gauge: &Gauge, floor: f64) -> Result<EtaIntegral> {
    let g = w.grid();
    let thr = C_POS * g.h();
    let grad = gradient(w, GradientScheme::OneSidedIntoPositive { threshold: thr });
    let vol = g.h().powi(g.dim() as i32);
    let [nx, ny] = g.nodes();
    let mut value = 0.0;
    let mut value_half = 0.0;
    for j in 0..ny {
        for i in 0..nx {
            if g.is_boundary_node(i, j) {
                continue;
            }
            let idx = g.index(i, j);
            let v = w.values()[idx];
            if v <= thr {
                continue;
            }
            let p = [grad.x[idx], grad.y[idx]];
            let eta = gauge.eval(&p[..g.dim()]).max(0.0);
            value += vol * eta / v.max(floor);
            value_half += vol * eta / v.max(0.5 * floor);
        }
    }
    Ok(EtaIntegral {
        value,
        value_half_floor: value_half,
        floor,
        gauge_mode: gauge.mode(),
    })
}

#[derive(Clone, Debug)]
pub struct HausdorffRow {
    pub eps: f64,
    /// `(1/ε) ∫_{ε <= w < 2ε} |∇w|²` (nodal quadrature, optional ball cut).
    pub strip_integral: f64,
    /// Greedy covering count of F(w) with balls of radius 5ε.
    pub covering_count: usize,
}

#[derive(Clone, Debug)]
pub struct HausdorffReport {
    pub rows: Vec<HausdorffRow>,
    pub resolution_h: f64,
}

/// Level-strip surrogate of the boundary measure per level, plus a covering
/// count. An empty free boundary yields an empty report.
pub fn hausdorff_estimate(
    w: &ScalarField,
    fb: &FreeBoundary,
    levels: &[f64],
    ball: Option<([f64; 2], f64)>,
) -> Result<HausdorffReport> {
    let g = w.grid();
    let h = g.h();
    if fb.is_empty() {
        return Ok(HausdorffReport {
            rows: Vec::new(),
            resolution_h: h,
        });
    }
    for &eps in levels {
        if eps < 4.0 * h {
            return Err(CoreError::Resolution(format!(
                "strip level ε = {eps} below 4h = {}",
                4.0 * h
            )));
        }
    }
    let thr = C_POS * h;
    let grad = gradient(w, GradientScheme::OneSidedIntoPositive { threshold: thr });
    let vol = h.powi(g.dim() as i32);
    let [nx, ny] = g.nodes();
    let mut rows = Vec::with_capacity(levels.len());
    for &eps in levels {
        let mut integral = 0.0;
        for j in 0..ny {
            for i in 0..nx {
                let idx = g.index(i, j);
                let v = w.values()[idx];
                if v < eps || v >= 2.0 * eps {
                    continue;
                }
                if let Some((c, r)) = ball {
                    let x = g.node_pos(i, j);
                    if ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2)).sqrt() > r {
                        continue;
                    }
                }
                let p = [grad.x[idx], grad.y[idx]];
                integral += vol * (p[0] * p[0] + p[1] * p[1]);
            }
        }
        // greedy covering of the boundary points at radius 5ε (extraction
        // order, deterministic)
        let radius = 5.0 * eps;
        let mut covered = vec![false; fb.len()];
        let mut count = 0usize;
        for k in 0..fb.len() {
            if covered[k] {
                continue;
            }
            count += 1;
            let c = fb.points[k].pos;
            for (l, cov) in covered.iter_mut().enumerate() {
                if !*cov {
                    let p = fb.points[l].pos;
                    if ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt() <= radius {
                        *cov = true;
                    }
                }
            }
        }
        rows.push(HausdorffRow {
            eps,
            strip_integral: integral / eps,
            covering_count: count,
        });
    }
    Ok(HausdorffReport {
        rows,
        resolution_h: h,
    })
}

impl HausdorffReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("eps,strip_integral,covering_count\n");
        for r in &self.rows {
            s.push_str(&format!("{},{},{}\n", r.eps, r.strip_integral, r.covering_count));
        }
        s
    }
}
