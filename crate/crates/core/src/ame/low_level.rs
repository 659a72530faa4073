use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::time::Instant;

use ordered_float::OrderedFloat;

use super::{ConstraintTable, KEY_EPS};
use crate::dependency::{inter_agent_bound, VisitIndex};
use crate::model::{AgentId, Instance, Path, VertexId, UNREACHABLE};

/// Search state for one agent: at `vertex` in local state `index`.
#[derive(Debug, Clone, PartialEq)]
pub struct LowLevelState {
    pub vertex: VertexId,
    pub index: usize,
    /// Approximate average time step of entering this state.
    pub g: f64,
    /// Conflicts along the best known path to this state.
    pub conflicts: usize,
    pub parent: Option<usize>,
    version: u32,
}

/// Inputs of one low-level search. `others[j]` holds agent `j`'s stored
/// labeled path, or `None` for the searching agent and agents not yet planned.
pub struct LowLevelQuery<'a> {
    pub instance: &'a Instance,
    pub agent: AgentId,
    pub others: &'a [Option<&'a Path>],
    pub constraints: &'a ConstraintTable,
    /// Phase-one bound on `f`.
    pub key: f64,
    pub max_index: usize,
    pub max_expansions: usize,
    pub deadline: Option<Instant>,
    /// Hop distances to the agent's goal.
    pub dist: &'a [usize],
}

#[derive(Debug, Clone, PartialEq)]
pub struct LowLevelSuccess {
    pub path: Path,
    pub expanded: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureCause {
    /// Every reachable state within the limits was expanded and none, or no
    /// state at all, was admissible.
    Exhausted,
    /// An expansion, index or time budget ran out.
    Budget,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LowLevelFailure {
    pub cause: FailureCause,
    pub expanded: usize,
}

/// Violations between the searching agent being at `vertex` in state `x` and
/// the other agents' padded paths: same index, the agent following another
/// from `x - 1`, and another following the agent into `x + 1`.
pub fn step_conflicts(others: &[Option<&Path>], vertex: VertexId, x: usize) -> usize {
    let mut n = 0;
    for p in others.iter().flatten() {
        n += usize::from(p.padded(x) == vertex);
        n += usize::from(x >= 1 && p.padded(x - 1) == vertex);
        n += usize::from(p.padded(x + 1) == vertex);
    }
    n
}

/// Violations between a path prefix (indices `0..prefix.len()`) and other
/// agents' padded paths, each (agent, kind, index) pair counted once.
pub fn count_path_conflicts(prefix: &[VertexId], others: &[Option<&Path>]) -> usize {
    prefix.iter().enumerate().map(|(x, &v)| step_conflicts(others, v, x)).sum()
}

/// Two-phase focal search with re-expansions.
///
/// Phase one expands, among queued states with `f <= key`, one with the
/// fewest conflicts; once no such state is queued the search switches for
/// good to expanding the smallest `f`. The search stops when it is about to
/// expand the goal in a state after which no goal constraint remains.
pub fn low_level_search(q: &LowLevelQuery<'_>) -> Result<LowLevelSuccess, LowLevelFailure> {
    let graph = q.instance.graph();
    let spec = &q.instance.agents()[q.agent];
    let move_cost = spec.move_cost();
    let visits =
        VisitIndex::new(q.others.iter().enumerate().filter_map(|(j, p)| p.map(|p| (j, p.vertices.as_slice()))));
    let labels_of = |j: AgentId| q.others[j].and_then(|p| p.labels.as_deref()).unwrap_or(&[]);
    let bound_at = |v: VertexId, x: usize| inter_agent_bound(&visits, labels_of, q.agent, v, x);

    let fail = |cause, expanded| Err(LowLevelFailure { cause, expanded });
    if q.constraints.is_banned(spec.start, 0) {
        return fail(FailureCause::Exhausted, 0);
    }

    let bound = q.key + KEY_EPS;
    let mut states: Vec<LowLevelState> = Vec::new();
    let mut index: HashMap<(VertexId, usize), usize> = HashMap::new();
    // (f, deeper first, vertex, id, version)
    type OpenKey = Reverse<(OrderedFloat<f64>, Reverse<usize>, VertexId, usize, u32)>;
    type FocalKey = Reverse<(usize, OrderedFloat<f64>, Reverse<usize>, VertexId, usize, u32)>;
    let mut open: BinaryHeap<OpenKey> = BinaryHeap::new();
    let mut focal: BinaryHeap<FocalKey> = BinaryHeap::new();
    let mut phase_one = true;
    let mut pruned = false;
    let mut expanded = 0usize;

    let h = |v: VertexId| q.dist[v] as f64 * move_cost;
    let push = |states: &mut Vec<LowLevelState>,
                open: &mut BinaryHeap<OpenKey>,
                focal: &mut BinaryHeap<FocalKey>,
                phase_one: bool,
                id: usize| {
        let s = &states[id];
        let f = s.g + h(s.vertex);
        if phase_one && f <= bound {
            focal.push(Reverse((s.conflicts, OrderedFloat(f), Reverse(s.index), s.vertex, id, s.version)));
        } else {
            open.push(Reverse((OrderedFloat(f), Reverse(s.index), s.vertex, id, s.version)));
        }
    };

    states.push(LowLevelState {
        vertex: spec.start,
        index: 0,
        g: 0.0,
        conflicts: step_conflicts(q.others, spec.start, 0),
        parent: None,
        version: 0,
    });
    index.insert((spec.start, 0), 0);
    push(&mut states, &mut open, &mut focal, phase_one, 0);

    loop {
        let popped = if phase_one {
            match focal.pop() {
                Some(Reverse((_, _, _, _, id, ver))) => Some((id, ver)),
                None => {
                    phase_one = false;
                    None
                }
            }
        } else {
            None
        };
        let (id, ver) = match popped.or_else(|| open.pop().map(|Reverse((_, _, _, id, ver))| (id, ver))) {
            Some(e) => e,
            None => return fail(if pruned { FailureCause::Budget } else { FailureCause::Exhausted }, expanded),
        };
        if states[id].version != ver {
            continue;
        }
        expanded += 1;
        if expanded > q.max_expansions {
            return fail(FailureCause::Budget, expanded);
        }
        if expanded.is_multiple_of(1024) && q.deadline.is_some_and(|d| Instant::now() >= d) {
            return fail(FailureCause::Budget, expanded);
        }
        let (v, x, g, conflicts) = (states[id].vertex, states[id].index, states[id].g, states[id].conflicts);
        if v == spec.goal && q.constraints.can_finish_at(x) {
            let path = extract(&states, id, move_cost, &bound_at);
            return Ok(LowLevelSuccess { path, expanded });
        }
        if x + 1 > q.max_index {
            pruned = true;
            continue;
        }
        let nx = x + 1;
        for &w in std::iter::once(&v).chain(graph.neighbors(v)) {
            if q.constraints.is_banned(w, nx) || q.dist[w] == UNREACHABLE {
                continue;
            }
            let cost = if w == v { 1.0 } else { move_cost };
            let ng = g.max(bound_at(w, nx)) + cost;
            let nc = conflicts + step_conflicts(q.others, w, nx);
            let nid = match index.get(&(w, nx)) {
                Some(&sid) => {
                    let s = &mut states[sid];
                    let better = ng < s.g - KEY_EPS || ((ng - s.g).abs() <= KEY_EPS && nc < s.conflicts);
                    if !better {
                        continue;
                    }
                    s.g = ng;
                    s.conflicts = nc;
                    s.parent = Some(id);
                    s.version += 1;
                    sid
                }
                None => {
                    states.push(LowLevelState {
                        vertex: w,
                        index: nx,
                        g: ng,
                        conflicts: nc,
                        parent: Some(id),
                        version: 0,
                    });
                    index.insert((w, nx), states.len() - 1);
                    states.len() - 1
                }
            };
            push(&mut states, &mut open, &mut focal, phase_one, nid);
        }
    }
}

/// Reads the vertices off the back-pointer chain and evaluates the label
/// recurrence along them against the same stored labels.
fn extract(
    states: &[LowLevelState],
    goal_id: usize,
    move_cost: f64,
    bound_at: &impl Fn(VertexId, usize) -> f64,
) -> Path {
    let mut vertices = Vec::with_capacity(states[goal_id].index + 1);
    let mut cur = Some(goal_id);
    while let Some(id) = cur {
        vertices.push(states[id].vertex);
        cur = states[id].parent;
    }
    vertices.reverse();
    let mut labels = vec![0.0f64; vertices.len()];
    for x in 1..vertices.len() {
        let cost = if vertices[x] == vertices[x - 1] { 1.0 } else { move_cost };
        labels[x] = labels[x - 1].max(bound_at(vertices[x], x)) + cost;
    }
    Path::with_labels(vertices, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ame::Constraint;
    use crate::dependency::compute_labels;
    use crate::model::{shortest_path_distances, AgentSpec, Graph, Plan};

    fn corridor(p: f64) -> Instance {
        // v1..v5 as 0..4: v1-v3, v2-v3, v3-v4, v4-v5
        let g = Graph::from_edges(5, &[(1, 2), (2, 3), (3, 4), (0, 2)]).unwrap();
        Instance::new(
            g,
            vec![
                AgentSpec { id: 0, start: 2, goal: 3, delay_prob: p },
                AgentSpec { id: 1, start: 1, goal: 4, delay_prob: p },
            ],
        )
        .unwrap()
    }

    fn query<'a>(
        inst: &'a Instance,
        agent: AgentId,
        others: &'a [Option<&'a Path>],
        table: &'a ConstraintTable,
        dist: &'a [usize],
    ) -> LowLevelQuery<'a> {
        LowLevelQuery {
            instance: inst,
            agent,
            others,
            constraints: table,
            key: 0.0,
            max_index: 40,
            max_expansions: 10_000,
            deadline: None,
            dist,
        }
    }

    #[test]
    fn unconstrained_is_shortest_path() {
        let inst = corridor(0.5);
        let dist = shortest_path_distances(inst.graph(), 4);
        let table = ConstraintTable::default();
        let others = [None, None];
        let r = low_level_search(&query(&inst, 1, &others, &table, &dist)).unwrap();
        assert_eq!(r.path.vertices, vec![1, 2, 3, 4]);
        assert_eq!(r.path.labels.unwrap(), vec![0.0, 2.0, 4.0, 6.0]);
    }

    #[test]
    fn goal_constraint_delays_arrival() {
        let inst = corridor(0.5);
        let dist = shortest_path_distances(inst.graph(), 4);
        let cs = [Constraint::new(1, 4, 6)];
        let table = ConstraintTable::for_agent(1, 4, &cs);
        let others = [None, None];
        let r = low_level_search(&query(&inst, 1, &others, &table, &dist)).unwrap();
        assert!(r.path.last_index() >= 7);
        assert_eq!(*r.path.vertices.last().unwrap(), 4);
        assert_ne!(r.path.vertices[6], 4);
    }

    #[test]
    fn banned_start_fails_exhausted() {
        let inst = corridor(0.5);
        let dist = shortest_path_distances(inst.graph(), 4);
        let cs = [Constraint::new(1, 1, 0)];
        let table = ConstraintTable::for_agent(1, 4, &cs);
        let others = [None, None];
        let e = low_level_search(&query(&inst, 1, &others, &table, &dist)).unwrap_err();
        assert_eq!(e.cause, FailureCause::Exhausted);
    }

    #[test]
    fn index_cap_is_budget_failure() {
        let inst = corridor(0.5);
        let dist = shortest_path_distances(inst.graph(), 4);
        let table = ConstraintTable::default();
        let others = [None, None];
        let mut q = query(&inst, 1, &others, &table, &dist);
        q.max_index = 2;
        assert_eq!(low_level_search(&q).unwrap_err().cause, FailureCause::Budget);
    }

    #[test]
    fn labels_follow_other_agent() {
        // agent 0 detours via v1 and back; agent 1 passes through v3 behind it
        let inst = corridor(0.5);
        let a0 = Path::new(vec![2, 0, 0, 0, 2, 3]);
        let plan0 = compute_labels(&Plan::new(vec![a0.clone()]), &[0.5]);
        let stored0 = plan0.plan.paths[0].clone();
        let others = [Some(&stored0), None];
        let dist = shortest_path_distances(inst.graph(), 4);
        let table = ConstraintTable::default();
        let r = low_level_search(&query(&inst, 1, &others, &table, &dist)).unwrap();
        let full = Plan::new(vec![a0, Path::new(r.path.vertices.clone())]);
        let recomputed = compute_labels(&full, &[0.5, 0.5]);
        let got = r.path.labels.as_ref().unwrap();
        for (a, b) in got.iter().zip(recomputed.labels(1)) {
            assert!((a - b).abs() < 1e-9, "{got:?} vs {:?}", recomputed.labels(1));
        }
    }

    #[test]
    fn conflict_counts() {
        let other = Path::new(vec![5, 6, 7]);
        let others = [None, Some(&other)];
        assert_eq!(count_path_conflicts(&[0, 1, 2], &others), 0);
        assert_eq!(count_path_conflicts(&[0, 6], &others), 1);
        // at 6 with equal index; at 7 with equal index, behind it, and ahead of its padding
        assert_eq!(count_path_conflicts(&[0, 6, 8, 7], &others), 1 + 3);
    }
}
