//! Graphs, instances, plans and plan validity.

mod conflict;
mod generate;
mod graph;
mod instance;
mod plan;

pub use conflict::{find_earliest_conflict, scan_conflicts, validate_plan, Conflict, ConflictKind, ValidationReport};
pub use generate::{
    delay_probs_from_uniforms, generate_random_instance, generate_warehouse_instance, RandomInstanceParams,
    WarehouseParams,
};
pub use graph::{parse_map, serialize_map, shortest_path_distances, Graph, GridMeta, UNREACHABLE};
pub use instance::{AgentSpec, Instance};
pub use plan::{Path, Plan};

use thiserror::Error;

pub type VertexId = usize;
pub type AgentId = usize;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("map is empty")]
    EmptyMap,
    #[error("map header: {0}")]
    BadHeader(String),
    #[error("map row {row} has width {found}, expected {expected}")]
    RaggedRow { row: usize, expected: usize, found: usize },
    #[error("unknown map character {ch:?} at row {row}, column {col}")]
    UnknownCell { row: usize, col: usize, ch: char },
    #[error("map has no free cells")]
    NoFreeCells,
    #[error("map declares {declared} but has {found}")]
    DimensionMismatch { declared: String, found: String },
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("agent {agent}: {reason}")]
    InvalidAgent { agent: usize, reason: String },
    #[error("agents {first} and {second} share {what} vertex {vertex}")]
    DuplicateEndpoint { first: AgentId, second: AgentId, what: &'static str, vertex: VertexId },
    #[error("infeasible instance parameters: {0}")]
    Infeasible(String),
    #[error("graph has no grid metadata")]
    NotAGrid,
    #[error("agents file line {line}: {reason}")]
    AgentsSyntax { line: usize, reason: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("plan has {found} paths, instance has {expected} agents")]
    AgentCount { expected: usize, found: usize },
    #[error("path of agent {agent} is empty")]
    EmptyPath { agent: AgentId },
    #[error("path of agent {agent} references unknown vertex {vertex}")]
    UnknownVertex { agent: AgentId, vertex: VertexId },
    #[error("path of agent {agent} starts at {found}, expected {expected}")]
    WrongStart { agent: AgentId, expected: VertexId, found: VertexId },
    #[error("path of agent {agent} ends at {found}, expected {expected}")]
    WrongGoal { agent: AgentId, expected: VertexId, found: VertexId },
    #[error("path of agent {agent} jumps from {from} to non-adjacent {to} at index {index}")]
    NotAdjacent { agent: AgentId, index: usize, from: VertexId, to: VertexId },
    #[error("labels of agent {agent}: {reason}")]
    BadLabels { agent: AgentId, reason: String },
}
