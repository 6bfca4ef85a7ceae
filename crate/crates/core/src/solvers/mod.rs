//! Discrete solvers: projected relaxation for the obstacle problem, energy
//! descent for the Alt-Phillips functional, the damped fixed point for the
//! degenerate equation, the Perron envelope with its sub/supersolution seeds,
//! inf-convolution, and the barrier catalog with discrete sign audits.

mod alt_phillips;
mod barriers;
mod config;
mod degenerate;
mod obstacle;
mod perron;

pub use alt_phillips::solve_alt_phillips;
pub use barriers::{barrier_eval, Barrier, BarrierAudit};
pub use config::{Scheme, SeedChoice, SolveReport, SolverConfig, SweepOrder};
pub use degenerate::solve_degenerate;
pub use obstacle::solve_obstacle;
pub use perron::{
    inf_convolution, perron_envelope, subsolution_seed, supersolution_seed, SeedParams,
};
