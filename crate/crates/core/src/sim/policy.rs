use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::SimError;
use crate::dependency::MessageSchedule;
use crate::model::Plan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    /// Minimal communication policy: waits only on reduced dependencies.
    Mcp,
    /// Fully synchronized policy: lockstep via all-to-all messages.
    Fsp,
    /// Always GO. Not robust.
    Dummy,
}

impl Policy {
    pub const ALL: [Policy; 3] = [Policy::Mcp, Policy::Fsp, Policy::Dummy];

    pub fn is_robust(self) -> bool {
        !matches!(self, Policy::Dummy)
    }

    pub fn name(self) -> &'static str {
        match self {
            Policy::Mcp => "mcp",
            Policy::Fsp => "fsp",
            Policy::Dummy => "dummy",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mcp" => Ok(Policy::Mcp),
            "fsp" => Ok(Policy::Fsp),
            "dummy" => Ok(Policy::Dummy),
            _ => Err(SimError::UnknownPolicy(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Command {
    Go,
    Stop,
}

/// Execution state at the start of a time step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecState {
    pub t: usize,
    /// Local state (path index) per agent.
    pub local: Vec<usize>,
    /// `received[i][j]`: messages agent `i` has received from agent `j`.
    pub received: Vec<Vec<u32>>,
}

impl ExecState {
    pub fn initial(num_agents: usize) -> Self {
        Self { t: 0, local: vec![0; num_agents], received: vec![vec![0; num_agents]; num_agents] }
    }

    pub fn is_done(&self, plan: &Plan, agent: usize) -> bool {
        self.local[agent] >= plan.paths[agent].last_index()
    }

    pub fn all_done(&self, plan: &Plan) -> bool {
        (0..self.local.len()).all(|a| self.is_done(plan, a))
    }
}

/// GO in state `x` iff not finished and every other agent `j` has sent at
/// least `min(x, X_j)` messages: it has either left all states before `x` or
/// entered its last state.
pub fn commands_fsp(state: &ExecState, plan: &Plan) -> Vec<Command> {
    let m = plan.paths.len();
    (0..m)
        .map(|i| {
            let x = state.local[i];
            if x >= plan.paths[i].last_index() {
                return Command::Stop;
            }
            let ready =
                (0..m).filter(|&j| j != i).all(|j| state.received[i][j] as usize >= x.min(plan.paths[j].last_index()));
            if ready {
                Command::Go
            } else {
                Command::Stop
            }
        })
        .collect()
}

/// GO in state `x` iff not finished and, for every sender `j`, the messages
/// received from `j` meet the schedule's cumulative threshold for `x`.
pub fn commands_mcp(state: &ExecState, schedule: &MessageSchedule, plan: &Plan) -> Result<Vec<Command>, SimError> {
    if schedule.num_agents() != plan.paths.len()
        || schedule.state_counts().iter().zip(&plan.paths).any(|(&c, p)| c != p.vertices.len())
    {
        return Err(SimError::ScheduleMismatch);
    }
    Ok((0..plan.paths.len())
        .map(|i| {
            let x = state.local[i];
            if x >= plan.paths[i].last_index() {
                return Command::Stop;
            }
            let ready = schedule.thresholds_at(i, x).iter().zip(&state.received[i]).all(|(&need, &got)| got >= need);
            if ready {
                Command::Go
            } else {
                Command::Stop
            }
        })
        .collect())
}

/// GO for every unfinished agent.
pub fn commands_dummy(state: &ExecState, plan: &Plan) -> Vec<Command> {
    (0..plan.paths.len()).map(|i| if state.is_done(plan, i) { Command::Stop } else { Command::Go }).collect()
}
