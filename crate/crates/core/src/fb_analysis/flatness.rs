//! Cone-trapping flatness: the smallest ε with
//! `(f(ν)(x-x0)·ν - ε)^+ <= w <= (f(ν)(x-x0)·ν + ε)^+` on `B_r(x0)`,
//! minimized over the direction, reported in units of `r`; plus the
//! improvement-of-flatness step (linearization fit, cone rotation, re-check).

use crate::error::{CoreError, Result};
use crate::fields::ScalarField;
use crate::geometry::{Direction, StarDomain};
use crate::potentials::C_POS;

/// Smallest admissible (absolute) trapping gap for a fixed direction.
fn gap_for_direction(
    w: &ScalarField,
    dom: &StarDomain,
    x0: [f64; 2],
    r: f64,
    nu: &Direction,
) -> Result<f64> {
    let f = dom.f_of_nu(nu)?;
    let g = w.grid();
    let [nx, ny] = g.nodes();
    let mut gap: f64 = 0.0;
    for j in 0..ny {
        for i in 0..nx {
            let x = g.node_pos(i, j);
            let dx = x[0] - x0[0];
            let dy = if g.dim() == 2 { x[1] - x0[1] } else { 0.0 };
            if (dx * dx + dy * dy).sqrt() > r {
                continue;
            }
            let t = f * (dx * nu.x() + dy * nu.y());
            let v = w.at(i, j);
            if v > 0.0 {
                gap = gap.max((v - t).abs());
            } else {
                gap = gap.max(t);
            }
        }
    }
    Ok(gap)
}

/// Direction scan: 256 coarse angles, ties toward the smaller index, then a
/// golden-section refinement of the winning bracket.
fn best_direction(
    w: &ScalarField,
    dom: &StarDomain,
    x0: [f64; 2],
    r: f64,
) -> Result<(f64, Direction)> {
    if dom.dim() == 1 {
        let plus = gap_for_direction(w, dom, x0, r, &Direction::axis_1d(1.0))?;
        let minus = gap_for_direction(w, dom, x0, r, &Direction::axis_1d(-1.0))?;
        return if plus <= minus {
            Ok((plus, Direction::axis_1d(1.0)))
        } else {
            Ok((minus, Direction::axis_1d(-1.0)))
        };
    }
    const COARSE: usize = 256;
    let tau = std::f64::consts::TAU;
    let mut best_k = 0;
    let mut best_gap = f64::INFINITY;
    for k in 0..COARSE {
        let theta = tau * k as f64 / COARSE as f64;
        let gap = gap_for_direction(w, dom, x0, r, &Direction::from_angle(theta))?;
        if gap < best_gap - 1e-15 {
            best_gap = gap;
            best_k = k;
        }
    }
    // golden-section refinement of the bracket around the coarse winner
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut lo = tau * (best_k as f64 - 1.0) / COARSE as f64;
    let mut hi = tau * (best_k as f64 + 1.0) / COARSE as f64;
    let eval = |theta: f64| gap_for_direction(w, dom, x0, r, &Direction::from_angle(theta));
    let mut t1 = hi - phi * (hi - lo);
    let mut t2 = lo + phi * (hi - lo);
    let mut f1 = eval(t1)?;
    let mut f2 = eval(t2)?;
    for _ in 0..48 {
        if f1 <= f2 {
            hi = t2;
            t2 = t1;
            f2 = f1;
            t1 = hi - phi * (hi - lo);
            f1 = eval(t1)?;
        } else {
            lo = t1;
            t1 = t2;
            f1 = f2;
            t2 = lo + phi * (hi - lo);
            f2 = eval(t2)?;
        }
    }
    let theta = if f1 <= f2 { t1 } else { t2 };
    let refined = eval(theta)?;
    if refined < best_gap {
        Ok((refined, Direction::from_angle(theta)))
    } else {
        Ok((best_gap, Direction::from_angle(tau * best_k as f64 / COARSE as f64)))
    }
}

/// Flatness at scale `r` about `x0`: normalized gap `ε/r` and the best cone
/// direction. Needs `r >= 4h`.
pub fn flatness(
    w: &ScalarField,
    dom: &StarDomain,
    x0: [f64; 2],
    r: f64,
) -> Result<(f64, Direction)> {
    if r < 4.0 * w.grid().h() {
        return Err(CoreError::Resolution(format!(
            "flatness scale r = {r} below 4h = {}",
            4.0 * w.grid().h()
        )));
    }
    let (gap, nu) = best_direction(w, dom, x0, r)?;
    Ok((gap / r, nu))
}

#[derive(Clone, Debug)]
pub struct FlatnessRow {
    pub r: f64,
    /// Gap divided by r (the cross-scale normalization).
    pub eps: f64,
    pub eps_abs: f64,
    pub nu_angle: f64,
    pub slope: f64,
    /// `eps(r) / eps(previous larger r)`, when the previous row exists.
    pub decay_ratio: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct FlatnessReport {
    pub center: [f64; 2],
    pub rows: Vec<FlatnessRow>,
}

/// Per-scale flatness over a set of (typically dyadic) radii, largest first.
pub fn flatness_report(
    w: &ScalarField,
    dom: &StarDomain,
    x0: [f64; 2],
    radii: &[f64],
) -> Result<FlatnessReport> {
    let mut radii = radii.to_vec();
    radii.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut rows: Vec<FlatnessRow> = Vec::new();
    for r in radii {
        let (eps, nu) = flatness(w, dom, x0, r)?;
        let ratio = rows.last().map(|prev: &FlatnessRow| {
            if prev.eps > 0.0 {
                eps / prev.eps
            } else {
                1.0
            }
        });
        rows.push(FlatnessRow {
            r,
            eps,
            eps_abs: eps * r,
            nu_angle: nu.angle(),
            slope: dom.f_of_nu(&nu)?,
            decay_ratio: ratio,
        });
    }
    Ok(FlatnessReport { center: x0, rows })
}

impl FlatnessReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,eps,eps_abs,nu_angle,slope,decay_ratio\n");
        for row in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                row.r,
                row.eps,
                row.eps_abs,
                row.nu_angle,
                row.slope,
                row.decay_ratio.map(|v| v.to_string()).unwrap_or_default()
            ));
        }
        s
    }
}

#[derive(Clone, Debug)]
pub struct ImprovementReport {
    /// Fitted linearization gradient of `(w - f(ν0) x·ν0)/ε`.
    pub a: [f64; 2],
    pub a_dot_omega: f64,
    /// Normalized flatness at the entry scale.
    pub before: f64,
    /// Normalized flatness at scale `r` about the rotated cone.
    pub after: f64,
    pub nu_before: Direction,
    pub nu_after: Direction,
}

/// One improvement-of-flatness step in the normalized presentation: the field
/// is assumed trapped by the `nu0` cone at the entry scale. Forms the
/// normalized difference `(w - f(ν0) x·ν0)/ε` on `B_r`, fits its affine
/// correction, rotates the cone direction by it (`f(ν0) ν0 + ε a = σ ν`), and
/// re-measures about the new direction. The fitted vector is tangential to
/// `Γ` for true solutions (`a·ω = 0`), which the caller can check from the
/// report.
pub fn improvement_of_flatness(
    w: &ScalarField,
    dom: &StarDomain,
    x0: [f64; 2],
    nu0: &Direction,
    entry_r: f64,
    r: f64,
    eps0: f64,
) -> Result<ImprovementReport> {
    if dom.dim() != 2 {
        return Err(CoreError::InvalidInput(
            "improvement of flatness needs a two-dimensional field".into(),
        ));
    }
    let g = w.grid();
    let h = g.h();
    let nu0 = *nu0;
    let before = gap_for_direction(w, dom, x0, entry_r, &nu0)? / entry_r;
    if before > eps0 {
        return Err(CoreError::Precondition(format!(
            "flatness {before:.4} at the entry scale exceeds ε0 = {eps0}"
        )));
    }
    let f0 = dom.f_of_nu(&nu0)?;
    let eps_abs = before * entry_r;
    let omega = dom.normal_at(&nu0)?;

    let mut a = [0.0f64; 2];
    if eps_abs > 1e-14 {
        // least-squares affine fit of (w - f0 t)/eps over positive nodes in B_r
        let thr = C_POS * h;
        let (mut n, mut sx, mut sy) = (0.0f64, 0.0f64, 0.0f64);
        let (mut sxx, mut sxy, mut syy) = (0.0f64, 0.0f64, 0.0f64);
        let (mut sv, mut sxv, mut syv) = (0.0f64, 0.0f64, 0.0f64);
        let [nx, ny] = g.nodes();
        for j in 0..ny {
            for i in 0..nx {
                let x = g.node_pos(i, j);
                let dx = x[0] - x0[0];
                let dy = x[1] - x0[1];
                if (dx * dx + dy * dy).sqrt() > r {
                    continue;
                }
                let v = w.at(i, j);
                if v <= thr {
                    continue;
                }
                let t = f0 * (dx * nu0.x() + dy * nu0.y());
                let val = (v - t) / eps_abs;
                n += 1.0;
                sx += dx;
                sy += dy;
                sxx += dx * dx;
                sxy += dx * dy;
                syy += dy * dy;
                sv += val;
                sxv += dx * val;
                syv += dy * val;
            }
        }
        if n < 8.0 {
            return Err(CoreError::Resolution(
                "too few positive nodes in the fitting ball".into(),
            ));
        }
        let m = [[n, sx, sy], [sx, sxx, sxy], [sy, sxy, syy]];
        let rhs = [sv, sxv, syv];
        let sol = solve3(m, rhs).ok_or_else(|| {
            CoreError::Resolution("degenerate least-squares system in the flatness fit".into())
        })?;
        a = [sol[1], sol[2]];
    }

    // rotate: f(ν0) ν0 + ε a = σ ν
    let vx = f0 * nu0.x() + eps_abs * a[0];
    let vy = f0 * nu0.y() + eps_abs * a[1];
    let sigma = (vx * vx + vy * vy).sqrt();
    let nu_new = Direction::new(&[vx / sigma, vy / sigma])?;

    // flatness about the updated direction: golden refinement near its angle
    let theta0 = nu_new.angle();
    let eval = |theta: f64| gap_for_direction(w, dom, x0, r, &Direction::from_angle(theta));
    let mut best_theta = theta0;
    let mut best = eval(theta0)?;
    let span = 4.0 * std::f64::consts::TAU / 256.0;
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (theta0 - span, theta0 + span);
    let mut t1 = hi - phi * (hi - lo);
    let mut t2 = lo + phi * (hi - lo);
    let mut f1 = eval(t1)?;
    let mut f2 = eval(t2)?;
    for _ in 0..48 {
        if f1 <= f2 {
            hi = t2;
            t2 = t1;
            f2 = f1;
            t1 = hi - phi * (hi - lo);
            f1 = eval(t1)?;
        } else {
            lo = t1;
            t1 = t2;
            f1 = f2;
            t2 = lo + phi * (hi - lo);
            f2 = eval(t2)?;
        }
    }
    let theta = if f1 <= f2 { t1 } else { t2 };
    let cand = eval(theta)?;
    if cand < best {
        best = cand;
        best_theta = theta;
    }

    Ok(ImprovementReport {
        a,
        a_dot_omega: a[0] * omega.x() + a[1] * omega.y(),
        before,
        after: best / r,
        nu_before: nu0,
        nu_after: Direction::from_angle(best_theta),
    })
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Grid;

    fn grid(n: usize) -> Grid {
        Grid::new_2d([-1.0, -1.0], [n, n], 2.0 / n as f64).unwrap()
    }

    #[test]
    fn exact_cone_has_zero_flatness() {
        let g = grid(128);
        let dom = StarDomain::unit_ball(2).unwrap();
        let theta0: f64 = 1.1;
        let nu0 = [theta0.cos(), theta0.sin()];
        let w = ScalarField::from_fn(&g, |x| (x[0] * nu0[0] + x[1] * nu0[1]).max(0.0));
        let (eps, nu) = flatness(&w, &dom, [0.0, 0.0], 0.5).unwrap();
        assert!(eps < 1e-4, "flatness of an exact cone: {eps}");
        assert!((nu.angle() - theta0).abs() < 1e-2, "direction {}", nu.angle());
    }

    #[test]
    fn translated_cone_measured_about_origin() {
        // w = (x_n + 0.1)^+ about its own boundary point has flatness ~ 0;
        // about the origin the gap is 0.1.
        let g = grid(128);
        let dom = StarDomain::unit_ball(2).unwrap();
        let w = ScalarField::from_fn(&g, |x| (x[1] + 0.1).max(0.0));
        let (eps_fb, _) = flatness(&w, &dom, [0.0, -0.1], 0.5).unwrap();
        assert!(eps_fb < 1e-3, "flatness at the FB point: {eps_fb}");
        let (eps_origin, _) = flatness(&w, &dom, [0.0, 0.0], 0.5).unwrap();
        assert!((eps_origin * 0.5 - 0.1).abs() < 0.01, "gap = {}", eps_origin * 0.5);
    }

    #[test]
    fn ellipse_cone_direction_and_slope() {
        let g = grid(128);
        let dom = StarDomain::ellipse(2.0, 1.0, 720).unwrap();
        let theta0 = std::f64::consts::PI / 4.0;
        let f = dom.f_at_angle(theta0);
        let nu0 = [theta0.cos(), theta0.sin()];
        let w = ScalarField::from_fn(&g, |x| f * (x[0] * nu0[0] + x[1] * nu0[1]).max(0.0));
        let (eps, nu) = flatness(&w, &dom, [0.0, 0.0], 0.5).unwrap();
        assert!(eps < 1e-3, "eps = {eps}");
        assert!((nu.angle() - theta0).abs() < 0.02);
    }

    #[test]
    fn resolution_guard() {
        let g = grid(32);
        let dom = StarDomain::unit_ball(2).unwrap();
        let w = ScalarField::from_fn(&g, |x| x[1].max(0.0));
        assert!(matches!(
            flatness(&w, &dom, [0.0, 0.0], 3.0 * g.h()),
            Err(CoreError::Resolution(_))
        ));
    }

    #[test]
    fn report_rows_normalized_consistently() {
        let g = grid(128);
        let dom = StarDomain::unit_ball(2).unwrap();
        // smooth perturbation of a cone decays linearly in r under the gap/r
        // normalization
        let w = ScalarField::from_fn(&g, |x| (x[1] + 0.05 * (x[0] * x[0] - x[1] * x[1])).max(0.0));
        let rep = flatness_report(&w, &dom, [0.0, 0.0], &[0.8, 0.4, 0.2]).unwrap();
        assert_eq!(rep.rows.len(), 3);
        for pair in rep.rows.windows(2) {
            assert!(pair[1].eps <= pair[0].eps + 1e-9, "normalized flatness must shrink");
        }
        for row in &rep.rows {
            assert!((row.eps_abs - row.eps * row.r).abs() < 1e-15);
        }
    }

    #[test]
    fn improvement_on_exact_tilted_cone() {
        // cones are fixed points: after-flatness stays at the resolution floor
        // and the recovered direction matches the tilt
        let g = grid(192);
        let dom = StarDomain::unit_ball(2).unwrap();
        let theta0 = std::f64::consts::FRAC_PI_2 + 0.04;
        let nu0 = [theta0.cos(), theta0.sin()];
        let w = ScalarField::from_fn(&g, |x| (x[0] * nu0[0] + x[1] * nu0[1]).max(0.0));
        let e2 = Direction::new(&[0.0, 1.0]).unwrap();
        let rep = improvement_of_flatness(&w, &dom, [0.0, 0.0], &e2, 0.9, 0.45, 0.2).unwrap();
        assert!(rep.after < 4.0 * g.h() / 0.45, "after = {}", rep.after);
        assert!((rep.nu_after.angle() - theta0).abs() < 0.02);
    }

    #[test]
    fn improvement_halves_perturbed_cone() {
        let g = grid(256);
        let dom = StarDomain::unit_ball(2).unwrap();
        let eps = 0.05;
        // smooth perturbation with a tangential linear part (ω = e_n for the
        // ball, so a·ω = 0 needs no x_n-linear term)
        let w = ScalarField::from_fn(&g, |x| {
            (x[1] + eps * (0.5 * x[0] + 0.18 * (x[0] * x[0] - x[1] * x[1]))).max(0.0)
        });
        let e2 = Direction::new(&[0.0, 1.0]).unwrap();
        let rep = improvement_of_flatness(&w, &dom, [0.0, 0.0], &e2, 0.9, 0.3, 0.2).unwrap();
        assert!(
            rep.after <= 0.6 * rep.before,
            "before {} after {}",
            rep.before,
            rep.after
        );
        // tangency: for the unit ball ω = ν0 ~ e_n, and the constructed tilt is
        // tangential
        let alen = (rep.a[0] * rep.a[0] + rep.a[1] * rep.a[1]).sqrt();
        assert!(
            rep.a_dot_omega.abs() <= 0.05 * alen + 10.0 * g.h(),
            "a·ω = {}, |a| = {alen}",
            rep.a_dot_omega
        );
    }

    #[test]
    fn improvement_requires_flat_entry() {
        let g = grid(64);
        let dom = StarDomain::unit_ball(2).unwrap();
        let w = ScalarField::from_fn(&g, |x| (x[1] + 0.4 * x[0].sin()).max(0.0));
        let e2 = Direction::new(&[0.0, 1.0]).unwrap();
        assert!(matches!(
            improvement_of_flatness(&w, &dom, [0.0, 0.0], &e2, 0.9, 0.3, 0.05),
            Err(CoreError::Precondition(_))
        ));
    }
}
