use onephase_core::fields::Grid;
use onephase_core::potentials::{exact_1d_profile, Potential};
use onephase_core::solvers::{solve_alt_phillips, Scheme, SolverConfig};

fn main() {
    let n = 2048usize;
    let grid = Grid::new_1d(-1.0, n, 2.0 / n as f64).unwrap();
    let p = exact_1d_profile(0.5, 0.0).unwrap();
    let pot = Potential::with_grid_floor(0.5, grid.h()).unwrap();
    for iters in [20000usize, 40000, 80000, 160000] {
        let mut cfg = SolverConfig::new(Scheme::AltPhillips, grid.h());
        cfg.tol_residual = 1e-9;
        cfg.max_iters = iters;
        let (u, rep) = solve_alt_phillips(&grid, &|x| p.u(x[0]), 0.5, &cfg).unwrap();
        let h2 = grid.h() * grid.h();
        let mut worst = (0.0f64, 0usize, 0.0f64);
        for i in 1..n {
            let c = u.at(i, 0);
            if c <= pot.t_reg() { continue; }
            let lap = (u.at(i - 1, 0) + u.at(i + 1, 0) - 2.0 * c) / h2;
            let r = (lap - pot.w_prime_reg(c)).abs();
            if r > worst.0 { worst = (r, i, c); }
        }
        println!("iters={iters}: res={:.3e} worst at x={:.4} u={:.3e}", rep.residual_sup, grid.node_pos(worst.1, 0)[0], worst.2);
    }
}
