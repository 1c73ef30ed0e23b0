//! Reduced-model planning for stochastic shortest path problems.
//!
//! The pipeline is: parse and ground a PPDDL-subset domain ([`ppddl`]),
//! build an M_{k,1} reduction from a determinization ([`reduction`]), solve
//! it with FF-LAO* ([`solver`]) using the built-in classical planner
//! ([`detplan`]), and execute with replanning ([`executor`]). The
//! [`learner`] picks a determinization by Monte-Carlo evaluation and the
//! [`oracle`] module provides exact reference solvers for testing.

pub mod detplan;
pub mod executor;
pub mod gen;
pub mod learner;
pub mod model;
pub mod oracle;
pub mod ppddl;
pub mod problem;
pub mod reduction;
pub mod solver;
mod util;

pub use model::{State, SuccessorDistribution};
pub use problem::{ActionId, GroundedProblem};
pub use reduction::{make_reduction, AugmentedState, Determinization, ReducedModel};
