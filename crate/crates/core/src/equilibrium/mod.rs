//! General regular equilibria: the Bayes ODE for the action rule, compact
//! boundary equations, shooting, and the deterministic cost floor.

mod bayes;
mod bvp;
mod floor;
mod rule;
mod sender;

pub use bayes::{inverse_anchor, Coefficients, Kernel};
pub use bvp::{
    bayes_residual_max, shoot, solve_bvp, solve_whole_line, u_star, v_star, BvpOptions, BvpSolution, Candidate, Method,
    Shot, Telemetry, WholeLineSolution, WholeLineStep,
};
pub use floor::{cost_floor, separating_rho, separation_incentive, CostFloorObjects, SeparatingPath};
pub use rule::{ActionFn, ActionRule, LinearRule, StepRule};
pub use sender::{best_response, communication_cost, report_gradient};
