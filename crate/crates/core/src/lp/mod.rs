//! Linear programming: a small simplex solver and the worst-case distortion
//! programs built on it.

mod distortion;
mod simplex;

pub use distortion::{
    build_compact_worstcase_lp, build_worstcase_lp, distortion_of, distortion_of_tol, lp_tolerance, rule_distortion,
    DistortionResult, RuleDistortion, DEFAULT_LP_TOL,
};
pub use simplex::{solve_lp, solve_lp_with, Constraint, LinearProgram, LpResult, LpStatus, PivotRule, Relation, SimplexOptions};
