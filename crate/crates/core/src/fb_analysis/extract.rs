//! Free boundary extraction: march the grid edges of the threshold set, place
//! a subgrid point on each crossing edge by interpolating `w` down to its
//! zero, and estimate the inner normal from a least-squares fit of `w` on the
//! positive side.

use crate::error::Result;
use crate::fields::ScalarField;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Clone, Copy, Debug)]
pub struct FbPoint {
    pub pos: [f64; 2],
    /// Unit normal pointing into the positivity set.
    pub normal: [f64; 2],
}

#[derive(Clone, Debug)]
pub struct FreeBoundary {
    pub points: Vec<FbPoint>,
    pub w_thresh: f64,
}

impl FreeBoundary {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// Brute-force distance to the nearest boundary point.
    pub fn distance_to(&self, x: [f64; 2]) -> f64 {
        self.points
            .iter()
            .map(|p| ((x[0] - p.pos[0]).powi(2) + (x[1] - p.pos[1]).powi(2)).sqrt())
            .fold(f64::INFINITY, f64::min)
    }

    /// Plain-text point cloud, `x y nx ny` per line.
    pub fn write_points(&self, path: &Path) -> Result<()> {
        let mut s = String::new();
        for p in &self.points {
            let _ = writeln!(s, "{} {} {} {}", p.pos[0], p.pos[1], p.normal[0], p.normal[1]);
        }
        std::fs::write(path, s)?;
        Ok(())
    }
}

/// Subgrid crossing along one edge: interpolate the linear extension of `w`
/// down to its zero. The zero of the extension may sit up to one cell outside
/// the crossing edge (both endpoint values are nonnegative); clamping to
/// [-1, 2] keeps exact cones exact while bounding noisy extrapolation.
fn crossing(pa: [f64; 2], va: f64, pb: [f64; 2], vb: f64) -> [f64; 2] {
    let t = if (va - vb).abs() > 0.0 {
        (va / (va - vb)).clamp(-1.0, 2.0)
    } else {
        0.5
    };
    [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])]
}

/// Inner normal from a least-squares linear fit of `w` over positive-side
/// nodes near `pos`; falls back to the edge direction when the fit is rank
/// deficient.
fn fit_normal(w: &ScalarField, pos: [f64; 2], thr: f64, fallback: [f64; 2]) -> [f64; 2] {
    let g = w.grid();
    let h = g.h();
    for radius in [1.75 * h, 2.75 * h] {
        // gather positive nodes in the disc
        let mut pts: Vec<([f64; 2], f64)> = Vec::new();
        let i0 = (((pos[0] - g.origin()[0] - radius) / h).floor().max(0.0)) as usize;
        let i1 = ((((pos[0] - g.origin()[0] + radius) / h).ceil()) as usize).min(g.n_cells()[0]);
        let (j0, j1) = if g.dim() == 2 {
            (
                (((pos[1] - g.origin()[1] - radius) / h).floor().max(0.0)) as usize,
                ((((pos[1] - g.origin()[1] + radius) / h).ceil()) as usize).min(g.n_cells()[1]),
            )
        } else {
            (0, 0)
        };
        for j in j0..=j1 {
            for i in i0..=i1 {
                let x = g.node_pos(i, j);
                let dx = x[0] - pos[0];
                let dy = x[1] - pos[1];
                if (dx * dx + dy * dy).sqrt() > radius {
                    continue;
                }
                let v = w.at(i, j);
                if v > thr {
                    pts.push(([dx, dy], v));
                }
            }
        }
        let needed = if g.dim() == 1 { 2 } else { 3 };
        if pts.len() < needed {
            continue;
        }
        if g.dim() == 1 {
            // slope sign of the 1D fit
            let (mut sx, mut sxx, mut sv, mut sxv) = (0.0, 0.0, 0.0, 0.0);
            for (p, v) in &pts {
                sx += p[0];
                sxx += p[0] * p[0];
                sv += v;
                sxv += p[0] * v;
            }
            let nf = pts.len() as f64;
            let det = nf * sxx - sx * sx;
            if det.abs() < 1e-14 {
                continue;
            }
            let slope = (nf * sxv - sx * sv) / det;
            if slope.abs() > 0.0 {
                return [slope.signum(), 0.0];
            }
            continue;
        }
        // 2D normal equations for w ~ c + g·x
        let nf = pts.len() as f64;
        let (mut sx, mut sy, mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        let (mut sv, mut sxv, mut syv) = (0.0, 0.0, 0.0);
        for (p, v) in &pts {
            sx += p[0];
            sy += p[1];
            sxx += p[0] * p[0];
            sxy += p[0] * p[1];
            syy += p[1] * p[1];
            sv += v;
            sxv += p[0] * v;
            syv += p[1] * v;
        }
        // solve [n sx sy; sx sxx sxy; sy sxy syy] [c gx gy] = [sv sxv syv]
        let m = [[nf, sx, sy], [sx, sxx, sxy], [sy, sxy, syy]];
        let rhs = [sv, sxv, syv];
        if let Some(sol) = solve3(m, rhs) {
            let norm = (sol[1] * sol[1] + sol[2] * sol[2]).sqrt();
            if norm > 1e-14 {
                return [sol[1] / norm, sol[2] / norm];
            }
        }
    }
    fallback
}

fn solve3(mut m: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let mut piv = col;
        for r in col + 1..3 {
            if m[r][col].abs() > m[piv][col].abs() {
                piv = r;
            }
        }
        if m[piv][col].abs() < 1e-14 {
            return None;
        }
        m.swap(col, piv);
        b.swap(col, piv);
        for r in 0..3 {
            if r == col {
                continue;
            }
            let f = m[r][col] / m[col][col];
            for c in col..3 {
                m[r][c] -= f * m[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    Some([b[0] / m[0][0], b[1] / m[1][1], b[2] / m[2][2]])
}

/// March over grid edges: every edge where `{w > w_thresh}` meets
/// `{w <= w_thresh}` contributes one subgrid point. An everywhere-positive or
/// identically-zero field yields an empty boundary (not an error).
pub fn extract_free_boundary(w: &ScalarField, w_thresh: f64) -> FreeBoundary {
    let g = w.grid();
    let [nx, ny] = g.nodes();
    let mut points = Vec::new();
    let mut push = |pa: [f64; 2], va: f64, pb: [f64; 2], vb: f64| {
        let pos = crossing(pa, va, pb, vb);
        let edge_dir = {
            let d = [pb[0] - pa[0], pb[1] - pa[1]];
            let n = (d[0] * d[0] + d[1] * d[1]).sqrt();
            let sign = if vb > va { 1.0 } else { -1.0 };
            [sign * d[0] / n, sign * d[1] / n]
        };
        let normal = fit_normal(w, pos, w_thresh, edge_dir);
        points.push(FbPoint { pos, normal });
    };
    for j in 0..ny {
        for i in 0..nx {
            let pa = g.node_pos(i, j);
            let va = w.at(i, j);
            if i + 1 < nx {
                let pb = g.node_pos(i + 1, j);
                let vb = w.at(i + 1, j);
                if (va > w_thresh) != (vb > w_thresh) {
                    push(pa, va, pb, vb);
                }
            }
            if g.dim() == 2 && j + 1 < ny {
                let pb = g.node_pos(i, j + 1);
                let vb = w.at(i, j + 1);
                if (va > w_thresh) != (vb > w_thresh) {
                    push(pa, va, pb, vb);
                }
            }
        }
    }
    FreeBoundary { points, w_thresh }
}
