//! Subproblem solvers of the alternating scheme.

pub mod admm;
pub mod cg;
pub mod prox;
pub mod separation;

pub use admm::{admm_y_update, y_step_cg, y_step_diagonal, AdmmOutcome, AdmmState, YProblem};
pub use cg::{cg_solve, pcg_solve, CgOutcome};
pub use prox::prox_weighted_l21;
pub use separation::{
    project_rows_to_sphere, separation_objective, sphere_quadratic_minimum, update_w, WUpdateOutcome,
};
