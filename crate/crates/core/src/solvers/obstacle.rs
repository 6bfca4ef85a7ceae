//! Projected over-relaxation for the obstacle problem
//! `u >= 0`, `Δu <= 1`, `u (Δu - 1) = 0` with Dirichlet data.

use super::config::{boundary_init, lcp_residual, optimal_omega, psor_sweep, SolveReport, SolverConfig};
use crate::error::Result;
use crate::fields::{Grid, ScalarField};
use crate::potentials::{energy_j, Potential};
use std::time::Instant;

pub fn solve_obstacle(
    grid: &Grid,
    data: &dyn Fn([f64; 2]) -> f64,
    cfg: &SolverConfig,
) -> Result<(ScalarField, SolveReport)> {
    cfg.validate(grid)?;
    let start = Instant::now();
    let mut u = boundary_init(grid, data)?;
    let rhs = vec![1.0; grid.node_count()];
    let omega = optimal_omega(grid);
    let pot = Potential::new(1.0, 0.0)?;

    let mut report = SolveReport::default();
    report.energy_initial = Some(energy_j(&u, &pot));
    let trace_stride = 8;
    let mut residual = f64::INFINITY;
    let mut sweeps = 0;
    while sweeps < cfg.max_iters {
        psor_sweep(&mut u, &rhs, omega, true, cfg.sweep);
        sweeps += 1;
        if sweeps % trace_stride == 0 || sweeps == 1 {
            report.energy_trace.push(energy_j(&u, &pot));
        }
        if sweeps % 10 == 0 || sweeps == cfg.max_iters {
            residual = lcp_residual(&u, &rhs);
            if residual <= cfg.tol_residual {
                break;
            }
        }
    }
    report.energy_trace.push(energy_j(&u, &pot));
    report.energy_final = Some(*report.energy_trace.last().unwrap());
    report.check_energy_monotone();
    report.converged = residual <= cfg.tol_residual;
    report.iterations = sweeps;
    report.inner_sweeps = sweeps;
    report.residual_sup = residual;
    report.residual_l2 = residual; // complementarity sup is the reported norm
    report.wall_secs = start.elapsed().as_secs_f64();
    Ok((u, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::config::Scheme;

    fn cfg(grid: &Grid) -> SolverConfig {
        let mut c = SolverConfig::new(Scheme::Obstacle, grid.h());
        c.tol_residual = 1e-9;
        c
    }

    #[test]
    fn one_d_obstacle_recovers_exact_profile() {
        // Oracle: u = ((x)^+)^2 / 2 solves Δu = 1 on {u > 0} with data
        // u(-1) = 0, u(1) = 1/2 and free boundary at 0.
        let n = 512;
        let grid = Grid::new_1d(-1.0, n, 2.0 / n as f64).unwrap();
        let (u, rep) = solve_obstacle(&grid, &|x| 0.5 * x[0].max(0.0).powi(2), &cfg(&grid)).unwrap();
        assert!(rep.converged, "residual = {}", rep.residual_sup);
        assert!(rep.energy_monotone);
        let h = grid.h();
        let mut sup = 0.0f64;
        for i in 0..=n {
            let x = grid.node_pos(i, 0)[0];
            sup = sup.max((u.at(i, 0) - 0.5 * x.max(0.0).powi(2)).abs());
        }
        assert!(sup < 3.0 * h * h, "sup error = {sup}");
        // free boundary within 2h of the origin: last node with u ~ 0
        let mut fb = -1.0;
        for i in 0..n {
            if u.at(i, 0) <= 1e-12 && u.at(i + 1, 0) > 1e-12 {
                fb = grid.node_pos(i, 0)[0];
            }
        }
        assert!(fb.abs() <= 2.0 * h, "free boundary at {fb}");
    }

    #[test]
    fn zero_data_gives_zero() {
        let grid = Grid::new_2d([-1.0, -1.0], [32, 32], 2.0 / 32.0).unwrap();
        let (u, rep) = solve_obstacle(&grid, &|_| 0.0, &cfg(&grid)).unwrap();
        assert!(rep.converged);
        assert_eq!(u.max(), 0.0);
    }

    #[test]
    fn large_data_solves_poisson_everywhere() {
        // Oracle: with constant data c and u > 0 everywhere the solution of
        // Δu = 1 on [-1,1] is u = c + (x^2 - 1)/2.
        let n = 256;
        let grid = Grid::new_1d(-1.0, n, 2.0 / n as f64).unwrap();
        let c = 3.0;
        let (u, rep) = solve_obstacle(&grid, &|_| c, &cfg(&grid)).unwrap();
        assert!(rep.converged);
        for i in 0..=n {
            let x = grid.node_pos(i, 0)[0];
            let exact = c + (x * x - 1.0) / 2.0;
            assert!(u.at(i, 0) > 0.0);
            assert!((u.at(i, 0) - exact).abs() < 1e-8, "err at {x}");
        }
    }

    #[test]
    fn negative_data_rejected() {
        let grid = Grid::new_1d(-1.0, 64, 2.0 / 64.0).unwrap();
        assert!(solve_obstacle(&grid, &|x| x[0], &cfg(&grid)).is_err());
    }
}
