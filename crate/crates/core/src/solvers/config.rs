use crate::error::{CoreError, Result};
use crate::fields::{Grid, ScalarField};
use std::fmt::Write as _;
use std::path::Path;

/// Which discrete scheme a run uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    Obstacle,
    AltPhillips,
    Degenerate,
    Perron,
}

/// Sweep ordering; red-black is the default and the parallel-safe one.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepOrder {
    Lexicographic,
    RedBlack,
}

/// Initial iterate selection.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeedChoice {
    /// Zero interior, boundary data on the rim.
    Zero,
    /// Interior preset to the mean of the boundary data.
    ConstMean,
    /// Projected harmonic extension (one zero-right-hand-side inner solve).
    Harmonic,
}

/// Numeric knobs shared by all solvers.
#[derive(Clone, Copy, Debug)]
pub struct SolverConfig {
    pub scheme: Scheme,
    /// Right-hand-side floor `ε_f` (length units of `w`); must be >= h/2.
    pub floor: f64,
    pub tol_residual: f64,
    pub max_iters: usize,
    /// Outer damping θ in (0, 1] for the degenerate fixed point.
    pub relaxation: f64,
    pub sweep: SweepOrder,
    pub seed: SeedChoice,
}

impl SolverConfig {
    pub fn new(scheme: Scheme, grid_h: f64) -> Self {
        SolverConfig {
            scheme,
            floor: grid_h / 2.0,
            tol_residual: 1e-8,
            max_iters: 200_000,
            relaxation: match scheme {
                Scheme::Degenerate => 0.7,
                _ => 1.0,
            },
            sweep: SweepOrder::RedBlack,
            seed: match scheme {
                Scheme::Degenerate => SeedChoice::Harmonic,
                Scheme::Perron => SeedChoice::ConstMean,
                _ => SeedChoice::Zero,
            },
        }
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        if self.floor < grid.h() / 2.0 - 1e-15 {
            return Err(CoreError::InvalidInput(format!(
                "floor ε_f = {} below h/2 = {}",
                self.floor,
                grid.h() / 2.0
            )));
        }
        if !(self.relaxation > 0.0 && self.relaxation <= 1.0) {
            return Err(CoreError::InvalidInput(format!(
                "relaxation θ = {} outside (0, 1]",
                self.relaxation
            )));
        }
        if !(self.tol_residual > 0.0) {
            return Err(CoreError::InvalidInput("tol_residual must be positive".into()));
        }
        Ok(())
    }
}

/// Per-run outcome record.
#[derive(Clone, Debug, Default)]
pub struct SolveReport {
    pub converged: bool,
    /// Outer iterations (sweeps for single-loop schemes).
    pub iterations: usize,
    /// Total relaxation sweeps across inner solves.
    pub inner_sweeps: usize,
    pub residual_sup: f64,
    pub residual_l2: f64,
    /// Descent-objective trace for the variational schemes (empty otherwise).
    pub energy_trace: Vec<f64>,
    /// True when the recorded trace never rose beyond 1e-12 relative slack.
    pub energy_monotone: bool,
    /// Physical energy at the first and last iterate (variational schemes).
    pub energy_initial: Option<f64>,
    pub energy_final: Option<f64>,
    /// Populated when the positivity set kept oscillating between two
    /// candidate sets at exit (both persisted, sorted node indices).
    pub positivity_oscillation: Option<(Vec<usize>, Vec<usize>)>,
    /// Nodes whose gradient exceeded the evaluation clamp at exit.
    pub clamp_events: usize,
    /// Worst positive excess of `Δw - h/w` over audited supersolution nodes
    /// (Perron scheme only).
    pub supersolution_violation: Option<f64>,
    pub wall_secs: f64,
}

impl SolveReport {
    pub(crate) fn check_energy_monotone(&mut self) {
        self.energy_monotone = self
            .energy_trace
            .windows(2)
            .all(|w| w[1] <= w[0] + 1e-12 * (1.0 + w[0].abs()));
    }

    /// Structured key-value text form.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "converged={}", self.converged);
        let _ = writeln!(s, "iterations={}", self.iterations);
        let _ = writeln!(s, "inner_sweeps={}", self.inner_sweeps);
        let _ = writeln!(s, "residual_sup={}", self.residual_sup);
        let _ = writeln!(s, "residual_l2={}", self.residual_l2);
        let _ = writeln!(s, "energy_monotone={}", self.energy_monotone);
        if let Some(e) = self.energy_initial {
            let _ = writeln!(s, "energy_initial={e}");
        }
        if let Some(e) = self.energy_final {
            let _ = writeln!(s, "energy_final={e}");
        }
        let _ = writeln!(s, "clamp_events={}", self.clamp_events);
        if let Some(v) = self.supersolution_violation {
            let _ = writeln!(s, "supersolution_violation={v}");
        }
        let _ = writeln!(
            s,
            "positivity_oscillation={}",
            self.positivity_oscillation.is_some()
        );
        let _ = writeln!(s, "wall_secs={}", self.wall_secs);
        s
    }

    pub fn write_text(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn write_energy_csv(&self, path: &Path) -> Result<()> {
        let mut s = String::from("sweep,energy\n");
        for (k, e) in self.energy_trace.iter().enumerate() {
            let _ = writeln!(s, "{k},{e}");
        }
        std::fs::write(path, s)?;
        Ok(())
    }
}

/// Near-optimal over-relaxation factor for the 5-point Laplacian on this grid.
pub(crate) fn optimal_omega(grid: &Grid) -> f64 {
    let n = if grid.dim() == 1 {
        grid.n_cells()[0]
    } else {
        grid.n_cells()[0].min(grid.n_cells()[1])
    } as f64;
    (2.0 / (1.0 + (std::f64::consts::PI / n).sin())).min(1.97)
}

/// Boundary-data field: zero interior, `data` on the rim; rejects negative data.
pub(crate) fn boundary_init(
    grid: &Grid,
    data: &dyn Fn([f64; 2]) -> f64,
) -> Result<ScalarField> {
    let mut f = ScalarField::zeros(grid);
    let [nx, ny] = grid.nodes();
    for j in 0..ny {
        for i in 0..nx {
            if grid.is_boundary_node(i, j) {
                let v = data(grid.node_pos(i, j));
                if v < 0.0 {
                    return Err(CoreError::InvalidInput(format!(
                        "boundary data is negative ({v}) at node ({i}, {j})"
                    )));
                }
                if !v.is_finite() {
                    return Err(CoreError::InvalidInput("boundary data must be finite".into()));
                }
                f.set(i, j, v);
            }
        }
    }
    Ok(f)
}

/// One projected relaxation sweep for `Δu = rhs`, `u >= 0` (when `project`),
/// Dirichlet on the field's boundary mask. Red-black coloring touches each
/// node once; within a color every read is of the opposite color, so the
/// result does not depend on the intra-color order.
pub(crate) fn psor_sweep(
    u: &mut ScalarField,
    rhs: &[f64],
    omega: f64,
    project: bool,
    order: SweepOrder,
) {
    let g = *u.grid();
    let h2 = g.h() * g.h();
    let [nx, ny] = g.nodes();
    let two_dim = 2.0 * g.dim() as f64;
    let pass = |color: Option<usize>, u: &mut ScalarField| {
        for j in 0..ny {
            for i in 0..nx {
                if g.is_boundary_node(i, j) {
                    continue;
                }
                if let Some(c) = color {
                    if (i + j) % 2 != c {
                        continue;
                    }
                }
                let idx = g.index(i, j);
                let mut nb = u.values()[g.index(i - 1, j)] + u.values()[g.index(i + 1, j)];
                if g.dim() == 2 {
                    nb += u.values()[g.index(i, j - 1)] + u.values()[g.index(i, j + 1)];
                }
                let gs = (nb - h2 * rhs[idx]) / two_dim;
                let old = u.values()[idx];
                let mut v = old + omega * (gs - old);
                if project && v < 0.0 {
                    v = 0.0;
                }
                u.values_mut()[idx] = v;
            }
        }
    };
    match order {
        SweepOrder::RedBlack => {
            pass(Some(0), u);
            pass(Some(1), u);
        }
        SweepOrder::Lexicographic => pass(None, u),
    }
}

/// Sup-norm complementarity residual of the projected system
/// `u >= 0`, `Δu <= rhs`, `u (Δu - rhs) = 0`.
pub(crate) fn lcp_residual(u: &ScalarField, rhs: &[f64]) -> f64 {
    let g = u.grid();
    let h2 = g.h() * g.h();
    let [nx, ny] = g.nodes();
    let mut worst: f64 = 0.0;
    for j in 0..ny {
        for i in 0..nx {
            if g.is_boundary_node(i, j) {
                continue;
            }
            let idx = g.index(i, j);
            let c = u.values()[idx];
            let mut lap = u.values()[g.index(i - 1, j)] + u.values()[g.index(i + 1, j)]
                - 2.0 * c * g.dim() as f64;
            if g.dim() == 2 {
                lap += u.values()[g.index(i, j - 1)] + u.values()[g.index(i, j + 1)];
            }
            lap /= h2;
            let r = if c > 0.0 {
                (lap - rhs[idx]).abs()
            } else {
                (lap - rhs[idx]).max(0.0)
            };
            worst = worst.max(r);
        }
    }
    worst
}
