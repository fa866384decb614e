//! Experiment drivers for the quantitative results and an independent
//! cross-check of the Picard solver.

pub mod bounds;
pub mod dependence;
pub mod oracle;
pub mod weak_star;

pub use bounds::{bound_suite, BoundCell, BoundKind, BoundMatrix};
pub use dependence::{continuous_dependence_experiment, default_partner, DependenceReport};
pub use oracle::{
    oracle_time_march, refinement_study, relative_gap, OracleSolution, RefinementRow,
};
pub use weak_star::{
    default_test_functions, dyadic_sequence, weak_star_experiment, TestFunction, WeakStarReport,
};
