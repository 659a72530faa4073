//! Execution partial order over local states, its transitive reduction, the
//! message schedule of the minimal communication policy, and approximate
//! entry-time labels.
//!
//! Local state `(i, x)` precedes `(i, x + 1)`. Across agents, whenever agent
//! `j` is at vertex `l` at index `x'` and agent `i` is scheduled at `l` at a
//! later index `x + 1` with `x' < x`, agent `i` may enter `(i, x + 1)` only
//! after `j` has entered `(j, x' + 1)`. Every edge strictly increases the
//! index, so the graph is acyclic and indices form a topological layering.

mod labels;
mod order;
mod schedule;

pub use labels::{approximate_average_makespan, compute_labels, labels_over_graph, LabeledPlan};
pub(crate) use labels::{inter_agent_bound, VisitIndex};
pub use order::{build_partial_order, reduce_dag, transitive_reduction, DependencyGraph, LocalState};
pub use schedule::{message_schedule, MessageSchedule};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DependencyError {
    #[error("dependency edge {from:?} -> {to:?} is not index-increasing or targets a missing state")]
    Structural { from: LocalState, to: LocalState },
    #[error("dependency graph contains a cycle")]
    Cycle,
    #[error("message schedule requires a reduced dependency graph")]
    NotReduced,
    #[error("sender state {from:?} has reduced edges into two states of agent {recipient}")]
    AmbiguousCount { from: LocalState, recipient: usize },
}
