//! Approximate minimization in expectation: a two-level conflict-tree search
//! whose high level orders nodes by the approximate average makespan and whose
//! low level runs a two-phase focal search over (vertex, local state) pairs.
//!
//! The types shared by both solvers (limits, outcomes, reports, constraints)
//! live here as well.

mod constraint;
mod high_level;
mod low_level;

pub use constraint::{branch_constraints, Constraint, ConstraintTable};
pub use high_level::{solve_ame, HighLevelNode};
pub use low_level::{
    count_path_conflicts, low_level_search, step_conflicts, FailureCause, LowLevelFailure, LowLevelQuery,
    LowLevelState, LowLevelSuccess,
};

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::model::{Instance, Plan};

/// Keys closer than this compare equal.
pub const KEY_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchLimits {
    pub time: Option<Duration>,
    pub high_level_expansions: usize,
    pub low_level_expansions: usize,
    /// Largest local-state index a low-level search may generate. `None`
    /// means `4 |V|` plus the agent's largest constrained index.
    pub max_index: Option<usize>,
    /// Joint configurations a solver may enumerate to prove that no valid
    /// plan exists before searching. 0 disables the check.
    pub feasibility_check_states: usize,
}

impl Default for SearchLimits {
    fn default() -> Self {
        Self {
            time: Some(Duration::from_secs(60)),
            high_level_expansions: 50_000,
            low_level_expansions: 200_000,
            max_index: None,
            feasibility_check_states: 200_000,
        }
    }
}

impl SearchLimits {
    pub(crate) fn deadline(&self, start: Instant) -> Option<Instant> {
        self.time.map(|t| start + t)
    }

    pub(crate) fn index_cap(&self, instance: &Instance, table: &ConstraintTable) -> usize {
        self.max_index.unwrap_or(4 * instance.graph().num_vertices() + table.max_index())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AmeOptions {
    /// Refresh every agent's labels after each re-plan instead of keeping
    /// the stored labels of agents that were not re-planned.
    pub recompute_labels: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Solver {
    #[serde(rename = "ame")]
    Ame,
    #[serde(rename = "adapted-cbs")]
    AdaptedCbs,
}

impl Solver {
    pub const ALL: [Solver; 2] = [Solver::Ame, Solver::AdaptedCbs];

    pub fn name(self) -> &'static str {
        match self {
            Solver::Ame => "ame",
            Solver::AdaptedCbs => "adapted-cbs",
        }
    }
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Solver {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ame" => Ok(Solver::Ame),
            "adapted-cbs" | "cbs" => Ok(Solver::AdaptedCbs),
            _ => Err(format!("unknown solver {s:?} (expected ame or adapted-cbs)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveOutcome {
    Solved,
    NoSolution,
    Timeout,
}

impl SolveOutcome {
    pub fn name(self) -> &'static str {
        match self {
            SolveOutcome::Solved => "solved",
            SolveOutcome::NoSolution => "no-solution",
            SolveOutcome::Timeout => "timeout",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchStats {
    pub hl_expanded: usize,
    pub hl_generated: usize,
    pub ll_searches: usize,
    pub ll_expanded: usize,
    /// Children whose key fell below their parent's.
    pub key_decreases: usize,
    /// Children dropped because their low-level search hit a budget.
    pub ll_budget_failures: usize,
    /// Set when the joint-configuration check decided feasibility.
    pub feasibility_checked: bool,
    #[serde(skip)]
    pub runtime: Duration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub solver: Solver,
    pub outcome: SolveOutcome,
    /// The plan on success; AME plans carry labels.
    pub plan: Option<Plan>,
    /// Largest final label recomputed from scratch on the returned plan.
    pub approx_makespan: Option<f64>,
    /// The high-level key of the returned node (AME only).
    pub key: Option<f64>,
    pub stats: SearchStats,
}

impl SolveReport {
    pub(crate) fn failed(solver: Solver, outcome: SolveOutcome, mut stats: SearchStats, start: Instant) -> Self {
        stats.runtime = start.elapsed();
        Self { solver, outcome, plan: None, approx_makespan: None, key: None, stats }
    }

    pub fn is_solved(&self) -> bool {
        self.outcome == SolveOutcome::Solved
    }
}

/// Runs the requested solver.
pub fn solve(instance: &Instance, solver: Solver, limits: &SearchLimits, options: AmeOptions) -> SolveReport {
    match solver {
        Solver::Ame => solve_ame(instance, limits, options),
        Solver::AdaptedCbs => crate::cbs::solve_adapted_cbs(instance, limits),
    }
}

/// Quantized key for heap ordering, so keys within `KEY_EPS` tie.
pub(crate) fn key_bucket(key: f64) -> i64 {
    (key / KEY_EPS).round() as i64
}
