use onephase_core::fields::Grid;
use onephase_core::potentials::exact_1d_profile;
use onephase_core::solvers::{solve_alt_phillips, Scheme, SolverConfig};

fn main() {
    for n in [512usize, 1024, 2048] {
        let grid = Grid::new_1d(-1.0, n, 2.0 / n as f64).unwrap();
        let p = exact_1d_profile(0.5, 0.0).unwrap();
        let mut cfg = SolverConfig::new(Scheme::AltPhillips, grid.h());
        cfg.tol_residual = 1e-8;
        cfg.max_iters = 40_000;
        let t0 = std::time::Instant::now();
        let (u, rep) = solve_alt_phillips(&grid, &|x| p.u(x[0]), 0.5, &cfg).unwrap();
        let mut sup = 0.0f64;
        for i in 0..=n { sup = sup.max((u.at(i, 0) - p.u(grid.node_pos(i, 0)[0])).abs()); }
        println!("n={n}: converged={} sweeps={} res={:.2e} sup={:.2e} secs={:.1}",
            rep.converged, rep.iterations, rep.residual_sup, sup, t0.elapsed().as_secs_f64());
    }
}
