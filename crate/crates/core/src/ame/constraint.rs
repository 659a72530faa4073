use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::model::{AgentId, Conflict, ConflictKind, VertexId};

/// Agent `agent` must not be at `vertex` in local state `index`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Constraint {
    pub agent: AgentId,
    pub vertex: VertexId,
    pub index: usize,
}

impl Constraint {
    pub fn new(agent: AgentId, vertex: VertexId, index: usize) -> Self {
        Self { agent, vertex, index }
    }
}

/// The two constraints that split a conflict: each child forbids one of the
/// two conflicting placements.
pub fn branch_constraints(conflict: &Conflict) -> (Constraint, Constraint) {
    let (i, j) = conflict.agents;
    let (l, x) = (conflict.vertex, conflict.index);
    match conflict.kind {
        ConflictKind::VertexSameIndex => (Constraint::new(i, l, x), Constraint::new(j, l, x)),
        ConflictKind::FollowIndex => (Constraint::new(i, l, x + 1), Constraint::new(j, l, x)),
    }
}

/// One agent's constraints, with O(1) exclusion tests.
#[derive(Debug, Clone, Default)]
pub struct ConstraintTable {
    banned: HashSet<(VertexId, usize)>,
    max_index: usize,
    /// Largest constrained index at the goal, if any.
    goal_last: Option<usize>,
}

impl ConstraintTable {
    pub fn for_agent<'a>(
        agent: AgentId,
        goal: VertexId,
        constraints: impl IntoIterator<Item = &'a Constraint>,
    ) -> Self {
        let mut t = Self::default();
        for c in constraints.into_iter().filter(|c| c.agent == agent) {
            t.banned.insert((c.vertex, c.index));
            t.max_index = t.max_index.max(c.index);
            if c.vertex == goal {
                t.goal_last = Some(t.goal_last.map_or(c.index, |g| g.max(c.index)));
            }
        }
        t
    }

    pub fn is_banned(&self, vertex: VertexId, index: usize) -> bool {
        self.banned.contains(&(vertex, index))
    }

    pub fn max_index(&self) -> usize {
        self.max_index
    }

    /// Whether the agent may stop at its goal at `index` for good.
    pub fn can_finish_at(&self, index: usize) -> bool {
        self.goal_last.is_none_or(|g| g < index)
    }

    pub fn len(&self) -> usize {
        self.banned.len()
    }

    pub fn is_empty(&self) -> bool {
        self.banned.is_empty()
    }
}
