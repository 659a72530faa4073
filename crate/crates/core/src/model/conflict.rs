use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{AgentId, Instance, Plan, PlanError, VertexId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ConflictKind {
    /// Two agents scheduled at the same vertex with the same index.
    VertexSameIndex,
    /// Agent `i` scheduled at index `x + 1` on the vertex agent `j` holds at index `x`.
    FollowIndex,
}

/// A violation of plan validity. For [`ConflictKind::FollowIndex`], `index` is
/// the index `x` of agent `agents.1`; agent `agents.0` is at `x + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Conflict {
    pub kind: ConflictKind,
    pub agents: (AgentId, AgentId),
    pub vertex: VertexId,
    pub index: usize,
}

impl Conflict {
    /// The larger of the two local-state indices involved.
    pub fn later_index(&self) -> usize {
        match self.kind {
            ConflictKind::VertexSameIndex => self.index,
            ConflictKind::FollowIndex => self.index + 1,
        }
    }

    fn order_key(&self) -> (usize, ConflictKind, AgentId, AgentId, VertexId) {
        (self.later_index(), self.kind, self.agents.0, self.agents.1, self.vertex)
    }
}

/// Every conflict of a plan, sorted earliest first. Empty means valid.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub conflicts: Vec<Conflict>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.conflicts.is_empty()
    }

    pub fn earliest(&self) -> Option<&Conflict> {
        self.conflicts.first()
    }
}

/// Checks both validity properties on paths padded with their goal vertex up
/// to `max_i X_i`. Malformed paths are reported as errors, not conflicts.
pub fn validate_plan(instance: &Instance, plan: &Plan) -> Result<ValidationReport, PlanError> {
    plan.check_well_formed(instance)?;
    Ok(ValidationReport { conflicts: scan_conflicts(plan) })
}

/// Earliest conflict by larger involved index, then vertex conflicts before
/// follow conflicts, then agent ids and vertex id.
pub fn find_earliest_conflict(instance: &Instance, plan: &Plan) -> Result<Option<Conflict>, PlanError> {
    Ok(validate_plan(instance, plan)?.conflicts.into_iter().next())
}

/// Every conflict of a (well-formed) plan, earliest first.
pub fn scan_conflicts(plan: &Plan) -> Vec<Conflict> {
    let horizon = plan.max_last_index();
    let mut conflicts = Vec::new();
    let mut prev: HashMap<VertexId, Vec<AgentId>> = HashMap::new();
    let mut cur: HashMap<VertexId, Vec<AgentId>> = HashMap::new();
    for x in 0..=horizon {
        cur.clear();
        for (agent, path) in plan.paths.iter().enumerate() {
            cur.entry(path.padded(x)).or_default().push(agent);
        }
        for (&vertex, agents) in &cur {
            for (a, &i) in agents.iter().enumerate() {
                for &j in &agents[a + 1..] {
                    conflicts.push(Conflict { kind: ConflictKind::VertexSameIndex, agents: (i, j), vertex, index: x });
                }
            }
        }
        if x > 0 {
            for (i, path) in plan.paths.iter().enumerate() {
                let vertex = path.padded(x);
                for &j in prev.get(&vertex).into_iter().flatten() {
                    if j != i {
                        conflicts.push(Conflict {
                            kind: ConflictKind::FollowIndex,
                            agents: (i, j),
                            vertex,
                            index: x - 1,
                        });
                    }
                }
            }
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    conflicts.sort_by_key(Conflict::order_key);
    conflicts
}
