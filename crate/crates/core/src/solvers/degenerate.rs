//! Damped fixed point for the degenerate equation `Δw = h(∇w)/w` on the
//! positivity set.
//!
//! Each red-black sweep freezes the one-sided gradient, then solves the
//! nodewise stencil balance `(Σ_nb - 2n t)/h² = h(∇w^k) / max(t, ε_f)` exactly
//! (the denominator is taken at the new value: a quadratic in `t`, whose
//! stable branch saturates instead of pumping when transient cliffs drive
//! `h(∇w)` negative), projects onto `t >= 0`, and re-derives the positivity
//! set. Updates inside the free-boundary band are damped by θ; nodes whose
//! whole stencil sits safely in the positive phase relax at full
//! over-relaxation speed. Exit requires the degenerate residual below
//! tolerance and a positivity set stable over ten consecutive sweeps.

use super::config::{boundary_init, optimal_omega, SeedChoice, SolveReport, SolverConfig};
use crate::error::Result;
use crate::fields::{gradient, GradientScheme, Grid, ScalarField};
use crate::potentials::{residual_w, HFunction, C_POS};
use std::time::Instant;

/// Exact nonnegative solution of `(nb - 2n t)/h² = H / max(t, floor)`,
/// preferring the quadratic branch (`t >= floor`) and falling back to the
/// floored-linear branch below it.
#[inline]
fn node_balance(nb: f64, h2: f64, two_n: f64, hval: f64, floor: f64) -> f64 {
    let disc = nb * nb - 4.0 * two_n * h2 * hval;
    if disc >= 0.0 {
        let tq = (nb + disc.sqrt()) / (2.0 * two_n);
        if tq >= floor {
            return tq;
        }
    }
    ((nb - h2 * hval / floor) / two_n).clamp(0.0, floor.max(0.0))
}

/// One nonlinear red-black sweep.
fn degenerate_sweep(
    w: &mut ScalarField,
    hfn: &HFunction,
    floor: f64,
    omega_bulk: f64,
    theta: f64,
    safe_level: f64,
) {
    let g = *w.grid();
    let h = g.h();
    let h2 = h * h;
    let thr = C_POS * h;
    let two_n = 2.0 * g.dim() as f64;
    let [nx, ny] = g.nodes();
    for color in 0..2usize {
        for j in 0..ny {
            for i in 0..nx {
                if g.is_boundary_node(i, j) || (i + j) % 2 != color {
                    continue;
                }
                let idx = g.index(i, j);
                let c = w.values()[idx];
                let xm = w.values()[g.index(i - 1, j)];
                let xp = w.values()[g.index(i + 1, j)];
                let (ym, yp) = if g.dim() == 2 {
                    (w.values()[g.index(i, j - 1)], w.values()[g.index(i, j + 1)])
                } else {
                    (0.0, 0.0)
                };
                let one_sided = |m: f64, p: f64| -> f64 {
                    let fp = p > thr;
                    let bm = m > thr;
                    if fp && bm {
                        (p - m) / (2.0 * h)
                    } else if fp {
                        (p - c) / h
                    } else if bm {
                        (c - m) / h
                    } else {
                        (p - m) / (2.0 * h)
                    }
                };
                let gx = one_sided(xm, xp);
                let gy = if g.dim() == 2 { one_sided(ym, yp) } else { 0.0 };
                let hval = hfn.eval(&[gx, gy]);
                let nb = xm + xp + ym + yp;
                let t = node_balance(nb, h2, two_n, hval, floor);
                let in_bulk = c > safe_level
                    && xm > safe_level
                    && xp > safe_level
                    && (g.dim() == 1 || (ym > safe_level && yp > safe_level));
                let om = if in_bulk { omega_bulk } else { theta };
                let v = (c + om * (t - c)).max(0.0);
                w.values_mut()[idx] = v;
            }
        }
    }
}

fn positivity_hash(w: &ScalarField) -> u64 {
    let thr = C_POS * w.grid().h();
    let mut h: u64 = 0xcbf29ce484222325;
    for (k, v) in w.values().iter().enumerate() {
        if *v > thr {
            h ^= k as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
    }
    h
}

fn positivity_set(w: &ScalarField) -> Vec<usize> {
    let thr = C_POS * w.grid().h();
    w.values()
        .iter()
        .enumerate()
        .filter_map(|(k, v)| (*v > thr).then_some(k))
        .collect()
}

pub fn solve_degenerate(
    grid: &Grid,
    data: &dyn Fn([f64; 2]) -> f64,
    hfn: &HFunction,
    cfg: &SolverConfig,
) -> Result<(ScalarField, SolveReport)> {
    cfg.validate(grid)?;
    let start = Instant::now();
    let mut w = boundary_init(grid, data)?;
    let mut report = SolveReport::default();

    match cfg.seed {
        SeedChoice::Zero => {}
        SeedChoice::ConstMean | SeedChoice::Harmonic => {
            // interior preset to the boundary mean; the nonlinear sweeps are
            // their own smoother, so the harmonic warm start shares this path
            let mean = {
                let mut s = 0.0;
                let mut c = 0usize;
                for (idx, b) in w.boundary_mask().iter().enumerate() {
                    if *b {
                        s += w.values()[idx];
                        c += 1;
                    }
                }
                if c > 0 {
                    s / c as f64
                } else {
                    0.0
                }
            };
            let mask = w.boundary_mask().to_vec();
            for (idx, b) in mask.iter().enumerate() {
                if !b {
                    w.values_mut()[idx] = mean;
                }
            }
        }
    }

    let omega_bulk = optimal_omega(grid).min(1.95);
    let theta = cfg.relaxation;
    let safe_level = 6.0 * grid.h() * hfn.domain().f_max();
    let stability_window = 10usize;
    let mut hash_ring: Vec<u64> = vec![positivity_hash(&w)];
    let mut sweeps = 0;
    let mut converged = false;

    while sweeps < cfg.max_iters {
        degenerate_sweep(&mut w, hfn, cfg.floor, omega_bulk, theta, safe_level);
        sweeps += 1;
        hash_ring.push(positivity_hash(&w));
        if hash_ring.len() > stability_window + 1 {
            hash_ring.remove(0);
        }
        if sweeps % 25 == 0 || sweeps == cfg.max_iters {
            let res = residual_w(&w, hfn, cfg.floor);
            report.residual_sup = res.sup;
            report.residual_l2 = res.l2;
            if res.sup <= cfg.tol_residual
                && hash_ring.len() > stability_window
                && hash_ring.windows(2).all(|p| p[0] == p[1])
            {
                converged = true;
                break;
            }
        }
    }

    if !converged {
        // probe for a two-cycle of the positivity set and persist both
        let s0 = positivity_set(&w);
        let mut probe = w.clone();
        degenerate_sweep(&mut probe, hfn, cfg.floor, omega_bulk, theta, safe_level);
        let s1 = positivity_set(&probe);
        degenerate_sweep(&mut probe, hfn, cfg.floor, omega_bulk, theta, safe_level);
        let s2 = positivity_set(&probe);
        if s0 == s2 && s0 != s1 {
            report.positivity_oscillation = Some((s0, s1));
        }
    }

    // clamp audit: count gradients beyond the evaluation clamp at exit
    {
        let thr = C_POS * grid.h();
        let grad = gradient(&w, GradientScheme::OneSidedIntoPositive { threshold: thr });
        let clamp = hfn.clamp_radius();
        report.clamp_events = (0..grid.node_count())
            .filter(|&idx| !w.boundary_mask()[idx] && grad.norm_at(idx) > clamp)
            .count();
    }

    report.converged = converged;
    report.iterations = sweeps;
    report.inner_sweeps = sweeps;
    report.wall_secs = start.elapsed().as_secs_f64();
    Ok((w, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::StarDomain;
    use crate::potentials::{residual_w, rho_gamma, u_to_w};
    use crate::solvers::config::Scheme;
    use crate::solvers::solve_obstacle;

    fn cfg(grid: &Grid) -> SolverConfig {
        let mut c = SolverConfig::new(Scheme::Degenerate, grid.h());
        c.tol_residual = 1e-7;
        c.max_iters = 60_000;
        c
    }

    #[test]
    fn half_plane_cone_is_reproduced() {
        let n = 96;
        let grid = Grid::new_2d([-1.0, -1.0], [n, n], 2.0 / n as f64).unwrap();
        let hfn = HFunction::quadratic(1.0, 2).unwrap();
        let rho = rho_gamma(1.0).unwrap();
        let exact = move |x: [f64; 2]| rho * x[1].max(0.0);
        let (w, rep) = solve_degenerate(&grid, &exact, &hfn, &cfg(&grid)).unwrap();
        assert!(rep.converged, "residual {}", rep.residual_sup);
        let mut sup = 0.0f64;
        for j in 0..=n {
            for i in 0..=n {
                sup = sup.max((w.at(i, j) - exact(grid.node_pos(i, j))).abs());
            }
        }
        assert!(sup <= 2.0 * grid.h(), "sup error {sup}");
        assert_eq!(rep.clamp_events, 0);
    }

    #[test]
    fn tilted_ellipse_cone() {
        let n = 96;
        let grid = Grid::new_2d([-1.0, -1.0], [n, n], 2.0 / n as f64).unwrap();
        let dom = StarDomain::ellipse(2.0, 1.0, 720).unwrap();
        let hfn = HFunction::from_table(dom.clone(), vec![1.0; 720]).unwrap();
        let theta = std::f64::consts::PI / 4.0;
        let nu = [theta.cos(), theta.sin()];
        let f = dom.f_at_angle(theta);
        let exact = move |x: [f64; 2]| f * (x[0] * nu[0] + x[1] * nu[1]).max(0.0);
        let (w, rep) = solve_degenerate(&grid, &exact, &hfn, &cfg(&grid)).unwrap();
        assert!(rep.converged, "residual {}", rep.residual_sup);
        let mut sup = 0.0f64;
        for j in 0..=n {
            for i in 0..=n {
                sup = sup.max((w.at(i, j) - exact(grid.node_pos(i, j))).abs());
            }
        }
        assert!(sup <= 2.5 * grid.h(), "sup error {sup}");
    }

    #[test]
    fn gamma_one_change_of_variables_equivalence() {
        // obstacle solve -> u_to_w vs the degenerate fixed point
        let n = 96;
        let grid = Grid::new_2d([-1.0, -1.0], [n, n], 2.0 / n as f64).unwrap();
        let a: f64 = 0.4;
        let u_exact = move |r: f64| {
            if r <= a {
                0.0
            } else {
                (r * r - a * a) / 4.0 - (a * a / 2.0) * (r / a).ln()
            }
        };
        let data_u = move |x: [f64; 2]| u_exact((x[0] * x[0] + x[1] * x[1]).sqrt());
        let (u, _) = solve_obstacle(&grid, &data_u, &cfg(&grid)).unwrap();
        let w_from_u = u_to_w(&u, 1.0).unwrap();

        let hfn = HFunction::quadratic(1.0, 2).unwrap();
        let data_w = move |x: [f64; 2]| data_u(x).sqrt();
        let (w, rep) = solve_degenerate(&grid, &data_w, &hfn, &cfg(&grid)).unwrap();
        assert!(rep.converged, "residual {}", rep.residual_sup);

        // compare away from a 2-cell band around the free boundary circle
        let h = grid.h();
        let mut sup = 0.0f64;
        for j in 0..=n {
            for i in 0..=n {
                let x = grid.node_pos(i, j);
                let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
                if (r - a).abs() > 2.0 * h {
                    sup = sup.max((w.at(i, j) - w_from_u.at(i, j)).abs());
                }
            }
        }
        assert!(sup <= 10.0 * h, "sup diff {sup} vs 10h = {}", 10.0 * h);
    }

    #[test]
    fn zero_data_stays_zero() {
        let grid = Grid::new_2d([-1.0, -1.0], [24, 24], 2.0 / 24.0).unwrap();
        let hfn = HFunction::quadratic(1.0, 2).unwrap();
        let (w, rep) = solve_degenerate(&grid, &|_| 0.0, &hfn, &cfg(&grid)).unwrap();
        assert!(rep.converged);
        assert_eq!(w.max(), 0.0);
    }

    #[test]
    fn solved_field_has_small_residual() {
        let n = 64;
        let grid = Grid::new_2d([-1.0, -1.0], [n, n], 2.0 / n as f64).unwrap();
        let hfn = HFunction::quadratic(1.0, 2).unwrap();
        let rho = rho_gamma(1.0).unwrap();
        let (w, rep) =
            solve_degenerate(&grid, &|x| rho * x[1].max(0.0), &hfn, &cfg(&grid)).unwrap();
        assert!(rep.converged);
        let res = residual_w(&w, &hfn, grid.h() / 2.0);
        assert!(res.sup <= 10.0 * grid.h(), "residual sup {}", res.sup);
    }

    #[test]
    fn comparison_audit_frozen_nonlinearity() {
        // with a shared frozen nonlinearity the nodewise balance map is
        // monotone: ordered fields stay ordered through a sweep, and a
        // discrete supersolution cannot rise
        let n = 48;
        let grid = Grid::new_2d([-1.0, -1.0], [n, n], 2.0 / n as f64).unwrap();
        let h2 = grid.h() * grid.h();
        let floor = grid.h() / 2.0;
        let mut s = 0x2545F4914F6CDD1Du64;
        let mut rnd = || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            s as f64 / u64::MAX as f64
        };
        for _ in 0..5 {
            let k1 = 1.0 + 2.0 * rnd();
            let hvals = ScalarField::from_fn(&grid, |x| 0.5 - (k1 * (x[0] + x[1])).sin());
            // v: concave paraboloid, Δv = -2 amp <= H/v for v > 0 when amp covers H
            let amp: f64 = 1.5;
            let c0 = 2.0 * amp + 1.0;
            let v = ScalarField::from_fn(&grid, |x| c0 - amp * (x[0] * x[0] + x[1] * x[1]) / 2.0);
            let off = rnd();
            let u = ScalarField::from_fn(&grid, |x| {
                (c0 - amp * (x[0] * x[0] + x[1] * x[1]) / 2.0
                    - 0.3 * (1.0 + (3.0 * x[0] + off).sin()))
                .max(0.0)
            });
            // v is a discrete supersolution of the frozen problem
            for j in 1..n {
                for i in 1..n {
                    let idx = grid.index(i, j);
                    let lap = (v.at(i - 1, j) + v.at(i + 1, j) + v.at(i, j - 1) + v.at(i, j + 1)
                        - 4.0 * v.at(i, j))
                        / h2;
                    assert!(lap <= hvals.values()[idx] / v.at(i, j).max(floor) + 1e-9);
                }
            }
            let sweep_frozen = |f: &mut ScalarField| {
                for color in 0..2usize {
                    for j in 1..n {
                        for i in 1..n {
                            if (i + j) % 2 != color {
                                continue;
                            }
                            let idx = grid.index(i, j);
                            let nb =
                                f.at(i - 1, j) + f.at(i + 1, j) + f.at(i, j - 1) + f.at(i, j + 1);
                            let t = node_balance(nb, h2, 4.0, hvals.values()[idx], floor);
                            f.values_mut()[idx] = t.max(0.0);
                        }
                    }
                }
            };
            let mut u1 = u.clone();
            let mut v1 = v.clone();
            sweep_frozen(&mut u1);
            sweep_frozen(&mut v1);
            for idx in 0..grid.node_count() {
                assert!(
                    u1.values()[idx] <= v1.values()[idx] + 1e-9,
                    "ordering broke at {idx}"
                );
                assert!(
                    v1.values()[idx] <= v.values()[idx] + 1e-9,
                    "supersolution rose at {idx}"
                );
            }
        }
    }
}
