use onephase_core::fields::Grid;
use onephase_core::potentials::{exact_1d_profile, Potential};
use onephase_core::solvers::{solve_alt_phillips, Scheme, SolverConfig};

fn main() {
    let n = 1024usize;
    let grid = Grid::new_1d(-1.0, n, 2.0 / n as f64).unwrap();
    let p = exact_1d_profile(0.5, 0.0).unwrap();
    let mut cfg = SolverConfig::new(Scheme::AltPhillips, grid.h());
    cfg.tol_residual = 1e-8;
    cfg.max_iters = 20_000;
    let (u, rep) = solve_alt_phillips(&grid, &|x| p.u(x[0]), 0.5, &cfg).unwrap();
    println!("res={:.3e} sweeps={}", rep.residual_sup, rep.iterations);
    let pot = Potential::with_grid_floor(0.5, grid.h()).unwrap();
    let h2 = grid.h() * grid.h();
    let mut worst = (0.0f64, 0usize, 0.0f64);
    for i in 1..n {
        let c = u.at(i, 0);
        if c <= pot.t_reg() { continue; }
        let lap = (u.at(i - 1, 0) + u.at(i + 1, 0) - 2.0 * c) / h2;
        let r = (lap - pot.w_prime_reg(c)).abs();
        if r > worst.0 { worst = (r, i, c); }
    }
    println!("worst residual {:.3e} at node {} with u = {:.3e} (t_reg = {:.3e}, x = {:.4})",
        worst.0, worst.1, worst.2, pot.t_reg(), grid.node_pos(worst.1, 0)[0]);
}
