//! Per-column expansion fit near the bottom boundary:
//! `φ(x', t) ≈ c1 t^{1-s} + c2 + c3 t^{1+α}` on a vertical window, the
//! tangential affine slope of the fitted `c2(x')`, and the remainder exponent
//! from dyadic half-balls. The weighted boundary condition of the solver
//! corresponds to `c1 ≈ 0`.

use crate::error::{CoreError, Result};
use crate::fields::ScalarField;
use crate::geometry::Direction;

#[derive(Clone, Debug)]
pub struct ExpansionFit {
    pub x0_prime: f64,
    pub c1_est: f64,
    pub c2_est: f64,
    pub c3_est: f64,
    /// Tangential slope of `c2(x')` at the column.
    pub a_prime: f64,
    /// Remainder exponent from dyadic windows (`μ` in `r^{1+μ}`).
    pub mu_est: Option<f64>,
    /// Full affine gradient over the window (when `omega` was supplied)
    /// and its defect against tangency to the constraint boundary.
    pub a_full: Option<[f64; 2]>,
    pub a_dot_omega: Option<f64>,
}

fn basis1(s: f64, t: f64) -> f64 {
    if (s - 1.0).abs() < 1e-12 {
        t.ln()
    } else {
        t.powf(1.0 - s)
    }
}

/// Least squares of `v ≈ c1 b1(t) + c2 + c3 t^{1+α} (+ c4 t²)` over one column
/// window. The quadratic term absorbs the smooth even part of the remainder
/// (otherwise it bleeds into `c1`); bases nearly collinear with `b1` are
/// dropped.
fn fit_column(ts: &[f64], vs: &[f64], s: f64, alpha: f64) -> Result<(f64, f64, f64)> {
    let log_branch = (s - 1.0).abs() < 1e-12;
    let use_alpha = log_branch
        || (((1.0 - s) - (1.0 + alpha)).abs() >= 0.05 && (1.0 + alpha - 2.0).abs() >= 0.05);
    let use_quad = log_branch || ((1.0 - s) - 2.0).abs() >= 0.05;
    let mut basis_exps: Vec<Option<f64>> = vec![None, Some(0.0)]; // b1, constant
    if use_alpha {
        basis_exps.push(Some(1.0 + alpha));
    }
    if use_quad {
        basis_exps.push(Some(2.0));
    }
    let nb = basis_exps.len();
    let mut ata = vec![vec![0.0f64; nb]; nb];
    let mut atb = vec![0.0f64; nb];
    for (&t, &v) in ts.iter().zip(vs) {
        let row: Vec<f64> = basis_exps
            .iter()
            .map(|e| match e {
                None => basis1(s, t),
                Some(p) => t.powf(*p),
            })
            .collect();
        for r in 0..nb {
            for c in 0..nb {
                ata[r][c] += row[r] * row[c];
            }
            atb[r] += row[r] * v;
        }
    }
    let x = solve_dense(&mut ata, &mut atb)
        .ok_or_else(|| CoreError::Resolution("degenerate column fit".into()))?;
    let c3 = if use_alpha { x[2] } else { 0.0 };
    Ok((x[0], x[1], c3))
}

fn solve_dense(m: &mut [Vec<f64>], b: &mut [f64]) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if m[r][col].abs() > m[piv][col].abs() {
                piv = r;
            }
        }
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = m[r][col] / m[col][col];
            for c in col..n {
                m[r][c] = m[r][c] - f * m[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    Some((0..n).map(|k| b[k] / m[k][k]).collect())
}

fn solve3(mut m: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let mut piv = col;
        for r in col + 1..3 {
            if m[r][col].abs() > m[piv][col].abs() {
                piv = r;
            }
        }
        if m[piv][col].abs() < 1e-300 {
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

/// Fitting window `t in [4h, t_max]` (the closure dominates below, the local
/// expansion degrades above).
pub const WINDOW_TOP_DEFAULT: f64 = 0.2;

pub fn expansion_fit(
    phi: &ScalarField,
    x0_prime: f64,
    s: f64,
    alpha: f64,
    omega: Option<&Direction>,
) -> Result<ExpansionFit> {
    let g = phi.grid();
    if g.dim() != 2 {
        return Err(CoreError::InvalidInput("expansion fit needs a 2D half-domain field".into()));
    }
    let h = g.h();
    let t_lo = 4.0 * h;
    let t_hi = WINDOW_TOP_DEFAULT;
    let col = ((x0_prime - g.origin()[0]) / h).round() as isize;
    if col < 1 || col as usize >= g.nodes()[0] - 1 {
        return Err(CoreError::OutOfDomain(format!(
            "column x' = {x0_prime} outside the grid interior"
        )));
    }
    let col = col as usize;

    let column_fit = |i: usize| -> Result<(f64, f64, f64)> {
        let mut ts = Vec::new();
        let mut vs = Vec::new();
        for k in 0..g.nodes()[1] {
            let t = g.node_pos(i, k)[1];
            if t >= t_lo && t <= t_hi {
                ts.push(t);
                vs.push(phi.at(i, k));
            }
        }
        if ts.len() < 8 {
            return Err(CoreError::Resolution(format!(
                "only {} nodes in the vertical fitting window (need 8)",
                ts.len()
            )));
        }
        fit_column(&ts, &vs, s, alpha)
    };

    let (c1, c2, c3) = column_fit(col)?;
    let (_, c2_w, _) = column_fit(col - 1)?;
    let (_, c2_e, _) = column_fit(col + 1)?;
    let a_prime = (c2_e - c2_w) / (2.0 * h);

    // remainder exponent from dyadic half-balls around (x0', 0)
    let x0 = g.node_pos(col, 0)[0];
    let mut remainders = Vec::new();
    for r in [0.2, 0.1, 0.05] {
        if r < 6.0 * h {
            continue;
        }
        let mut worst: f64 = 0.0;
        for k in 0..g.nodes()[1] {
            for i in 0..g.nodes()[0] {
                let x = g.node_pos(i, k);
                let dx = x[0] - x0;
                if (dx * dx + x[1] * x[1]).sqrt() > r {
                    continue;
                }
                worst = worst.max((phi.at(i, k) - c2 - a_prime * dx).abs());
            }
        }
        if worst > 0.0 {
            remainders.push((r, worst));
        }
    }
    let mu_est = if remainders.len() >= 2 {
        let (r1, e1) = remainders[0];
        let (r2, e2) = *remainders.last().unwrap();
        let slope = (e1 / e2).ln() / (r1 / r2).ln();
        Some(slope - 1.0)
    } else {
        None
    };

    // full affine fit (for the sheared general problem): φ ≈ c + a·(x - x0)
    let (a_full, a_dot_omega) = if let Some(om) = omega {
        let mut ata = [[0.0f64; 3]; 3];
        let mut atb = [0.0f64; 3];
        for k in 0..g.nodes()[1] {
            for i in 0..g.nodes()[0] {
                let x = g.node_pos(i, k);
                let dx = x[0] - x0;
                if x[1] > 0.25 || (dx * dx + x[1] * x[1]).sqrt() > 0.3 || x[1] < t_lo {
                    continue;
                }
                let row = [1.0, dx, x[1]];
                let v = phi.at(i, k);
                for r in 0..3 {
                    for c in 0..3 {
                        ata[r][c] += row[r] * row[c];
                    }
                    atb[r] += row[r] * v;
                }
            }
        }
        match solve3(ata, atb) {
            Some(sol) => {
                let a = [sol[1], sol[2]];
                (Some(a), Some(a[0] * om.x() + a[1] * om.y()))
            }
            None => (None, None),
        }
    } else {
        (None, None)
    };

    Ok(ExpansionFit {
        x0_prime: x0,
        c1_est: c1,
        c2_est: c2,
        c3_est: c3,
        a_prime,
        mu_est,
        a_full,
        a_dot_omega,
    })
}

impl ExpansionFit {
    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}\n",
            self.x0_prime,
            self.a_prime,
            self.c1_est,
            self.mu_est.unwrap_or(f64::NAN),
            self.c2_est
        )
    }
}
