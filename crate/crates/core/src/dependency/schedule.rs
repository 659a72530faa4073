use serde::Serialize;

use super::{DependencyError, DependencyGraph, LocalState};
use crate::model::{AgentId, Plan};

/// Who messages whom under the minimal communication policy, and how many
/// messages each agent must have received before it may leave a local state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MessageSchedule {
    state_counts: Vec<usize>,
    /// `sends[j][y]`: recipients notified when agent `j` enters local state `y`.
    sends: Vec<Vec<Vec<AgentId>>>,
    /// `thresholds[i][x][j]`: messages from `j` that agent `i` needs before GO in state `x`.
    thresholds: Vec<Vec<Vec<u32>>>,
    total_messages: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    plan_fingerprint: Option<String>,
}

impl MessageSchedule {
    pub fn num_agents(&self) -> usize {
        self.state_counts.len()
    }

    pub fn state_counts(&self) -> &[usize] {
        &self.state_counts
    }

    pub fn recipients(&self, sender: AgentId, state: usize) -> &[AgentId] {
        &self.sends[sender][state]
    }

    pub fn threshold(&self, recipient: AgentId, state: usize, sender: AgentId) -> u32 {
        self.thresholds[recipient][state][sender]
    }

    pub fn thresholds_at(&self, recipient: AgentId, state: usize) -> &[u32] {
        &self.thresholds[recipient][state]
    }

    /// Messages sent over one complete execution.
    pub fn total_messages(&self) -> usize {
        self.total_messages
    }

    pub fn plan_fingerprint(&self) -> Option<&str> {
        self.plan_fingerprint.as_deref()
    }

    /// Ties the schedule to the plan it was compiled from.
    pub fn bind(mut self, plan: &Plan) -> Self {
        self.plan_fingerprint = Some(plan.fingerprint());
        self
    }

    /// Builds partial order, reduction and schedule for a valid plan.
    pub fn for_plan(plan: &Plan) -> Result<Self, DependencyError> {
        let reduced = super::transitive_reduction(&super::build_partial_order(plan)?)?;
        Ok(message_schedule(&reduced)?.bind(plan))
    }
}

/// Derives the message schedule from a reduced dependency graph. One message
/// per (sender state, recipient agent) pair; recipient thresholds count the
/// same pairs cumulatively over its states `0..=x+1`.
pub fn message_schedule(reduced: &DependencyGraph) -> Result<MessageSchedule, DependencyError> {
    if !reduced.is_reduced() {
        return Err(DependencyError::NotReduced);
    }
    let m = reduced.num_agents();
    let counts: Vec<usize> = (0..m).map(|a| reduced.state_count(a)).collect();
    let mut sends: Vec<Vec<Vec<AgentId>>> = counts.iter().map(|&c| vec![Vec::new(); c]).collect();
    // incoming[i][x][j]: reduced edges from agent j into (i, x)
    let mut incoming: Vec<Vec<Vec<u32>>> = counts.iter().map(|&c| vec![vec![0; m]; c]).collect();

    for &(from, to) in reduced.inter_agent_edges() {
        let list = &mut sends[from.agent][from.index];
        if list.contains(&to.agent) {
            return Err(DependencyError::AmbiguousCount { from, recipient: to.agent });
        }
        list.push(to.agent);
        incoming[to.agent][to.index][from.agent] += 1;
    }
    for per_state in &mut sends {
        for list in per_state {
            list.sort_unstable();
        }
    }
    check_prefix_order(reduced)?;

    let mut thresholds = Vec::with_capacity(m);
    for (i, inc) in incoming.iter().enumerate() {
        let mut per_state = Vec::with_capacity(counts[i]);
        let mut acc = inc[0].clone();
        for x in 0..counts[i] {
            if x + 1 < counts[i] {
                for (a, &c) in acc.iter_mut().zip(&inc[x + 1]) {
                    *a += c;
                }
            }
            per_state.push(acc.clone());
        }
        thresholds.push(per_state);
    }
    let total_messages = sends.iter().flatten().map(Vec::len).sum();
    Ok(MessageSchedule { state_counts: counts, sends, thresholds, total_messages, plan_fingerprint: None })
}

/// Counting received messages only works if, for every ordered agent pair,
/// later sender states feed strictly later recipient states.
fn check_prefix_order(reduced: &DependencyGraph) -> Result<(), DependencyError> {
    let mut pairs: Vec<(AgentId, AgentId, usize, usize)> =
        reduced.inter_agent_edges().map(|&(f, t)| (f.agent, t.agent, f.index, t.index)).collect();
    pairs.sort_unstable();
    for w in pairs.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a.0 == b.0 && a.1 == b.1 && b.3 <= a.3 {
            return Err(DependencyError::AmbiguousCount { from: LocalState::new(b.0, b.2), recipient: b.1 });
        }
    }
    Ok(())
}
