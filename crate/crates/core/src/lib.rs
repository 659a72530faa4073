//! Multi-agent path finding with delay probabilities.
//!
//! The crate covers the full pipeline: building instances on 4-neighbor grids,
//! planning valid plans with the expectation-aware two-level solver ([`ame`]) or
//! the perfect-execution baseline ([`cbs`]), compiling plans into execution
//! dependencies and message schedules ([`dependency`]), and executing them under
//! stochastic delays with collision and message accounting ([`sim`]).
//!
//! A plan is *valid* when no two agents share a vertex at the same local-state
//! index and no agent enters, at index `x + 1`, a vertex that another agent
//! occupies at index `x`. Valid plans executed with the fully synchronized or
//! the minimal communication policy never collide and never deadlock.

pub mod ame;
pub mod bench;
pub mod cbs;
pub mod dependency;
pub mod io;
pub mod model;
pub mod sim;
pub mod stats;

pub use model::{AgentId, AgentSpec, Conflict, ConflictKind, Graph, Instance, Path, Plan, VertexId};
