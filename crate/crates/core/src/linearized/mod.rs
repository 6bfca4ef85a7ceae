//! The degenerate Neumann-type linear problem on the upper half domain:
//! `L_s φ = Σ a_ij φ_ij + s φ_n / x_n = 0` with the weighted boundary
//! condition killing the `x_n^{1-s}` mode, its sheared general form, the
//! explicit ODE solutions, and the boundary expansion fit.

mod expansion;
mod ode;
mod problem;
mod solve;

pub use expansion::{expansion_fit, ExpansionFit};
pub use ode::{ode_solve, tanh_sinh, OdeProblem, OdeSolution};
pub use problem::{staggered_half_grid, LinearizedProblem};
pub use solve::{domain_variation, solve_ls, transformed_coefficients, LsReport};
