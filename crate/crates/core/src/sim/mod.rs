//! Discrete-time plan execution under stochastic move delays.
//!
//! Each time step every agent receives GO or STOP from its policy. A GO on a
//! wait step always advances the local state; a GO on a move step advances it
//! with probability `1 - p_i`. Agents that enter a new local state send the
//! messages their policy prescribes; messages are delivered reliably and, by
//! default, become visible at the next time step.

mod exec;
mod monte_carlo;
mod policy;

pub use exec::{
    run_execution, step, Collision, CollisionKind, ExecConfig, ExecOutcome, ExecutionTrace, Executor, Snapshot,
};
pub use monte_carlo::{monte_carlo, RunStats};
pub use policy::{commands_dummy, commands_fsp, commands_mcp, Command, ExecState, Policy};

use thiserror::Error;

use crate::dependency::DependencyError;
use crate::model::PlanError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error("plan is not valid ({0} conflicts); robust policies require a valid plan")]
    InvalidPlan(usize),
    #[error(transparent)]
    Dependency(#[from] DependencyError),
    #[error("message schedule was compiled for a different plan")]
    ScheduleMismatch,
    #[error("need at least one run")]
    NoRuns,
    #[error("unknown policy {0:?} (expected mcp, fsp or dummy)")]
    UnknownPolicy(String),
}
