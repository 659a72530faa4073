use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::DependencyGraph;
use crate::model::{AgentId, Plan, VertexId};

/// A plan whose paths all carry labels, together with each agent's expected
/// move duration `1/(1-p_i)`. Wait actions always cost 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledPlan {
    pub plan: Plan,
    pub move_costs: Vec<f64>,
}

impl LabeledPlan {
    pub fn labels(&self, agent: AgentId) -> &[f64] {
        self.plan.paths[agent].labels.as_deref().expect("labeled plan")
    }

    pub fn step_cost(&self, agent: AgentId, x: usize) -> f64 {
        if self.plan.paths[agent].is_wait(x) {
            1.0
        } else {
            self.move_costs[agent]
        }
    }
}

/// Per-vertex visit lists, used to find the latest visit of each other agent
/// before a given index.
#[derive(Debug, Default, Clone)]
pub(crate) struct VisitIndex {
    by_vertex: HashMap<VertexId, Vec<(AgentId, Vec<usize>)>>,
}

impl VisitIndex {
    pub(crate) fn new<'a>(paths: impl IntoIterator<Item = (AgentId, &'a [VertexId])>) -> Self {
        let mut by_vertex: HashMap<VertexId, Vec<(AgentId, Vec<usize>)>> = HashMap::new();
        for (agent, vertices) in paths {
            for (x, &v) in vertices.iter().enumerate() {
                let list = by_vertex.entry(v).or_default();
                match list.last_mut() {
                    Some((a, idx)) if *a == agent => idx.push(x),
                    _ => list.push((agent, vec![x])),
                }
            }
        }
        Self { by_vertex }
    }

    /// For every agent other than `agent`, its latest visit of `vertex` at an
    /// index strictly below `bound`.
    pub(crate) fn latest_before(
        &self,
        vertex: VertexId,
        agent: AgentId,
        bound: usize,
    ) -> impl Iterator<Item = (AgentId, usize)> + '_ {
        self.by_vertex.get(&vertex).into_iter().flatten().filter_map(move |(j, idx)| {
            if *j == agent {
                return None;
            }
            let k = idx.partition_point(|&t| t < bound);
            (k > 0).then(|| (*j, idx[k - 1]))
        })
    }
}

/// Largest label among the inter-agent predecessors of `(agent, x)` when
/// `(agent, x)` sits on `vertex`: for every other agent `j`, the label of
/// `(j, x'' + 1)` where `x''` is its latest visit of `vertex` before `x - 1`.
/// A visit at `j`'s final index (only possible in invalid plans) reads the
/// final label.
pub(crate) fn inter_agent_bound<'a, F>(
    visits: &VisitIndex,
    labels_of: F,
    agent: AgentId,
    vertex: VertexId,
    x: usize,
) -> f64
where
    F: Fn(AgentId) -> &'a [f64],
{
    let mut bound = f64::NEG_INFINITY;
    if x < 2 {
        return bound;
    }
    for (j, xp) in visits.latest_before(vertex, agent, x - 1) {
        let labels = labels_of(j);
        bound = bound.max(labels[(xp + 1).min(labels.len() - 1)]);
    }
    bound
}

/// Evaluates the entry-time recurrence in increasing index order:
/// `L_i(0) = 0`, `L_i(x) = max(L_i(x-1), max over inter-agent predecessors) + t_i(x)`
/// with `t_i(x) = 1` for a wait and `1/(1-p_i)` for a move.
pub fn compute_labels(plan: &Plan, delay_probs: &[f64]) -> LabeledPlan {
    let move_costs: Vec<f64> = delay_probs.iter().map(|p| 1.0 / (1.0 - p)).collect();
    let visits = VisitIndex::new(plan.paths.iter().enumerate().map(|(a, p)| (a, p.vertices.as_slice())));
    let mut labels: Vec<Vec<f64>> = plan.paths.iter().map(|p| vec![0.0; p.vertices.len()]).collect();
    for x in 1..=plan.max_last_index() {
        for (i, path) in plan.paths.iter().enumerate() {
            if x > path.last_index() {
                continue;
            }
            let cost = if path.is_wait(x) { 1.0 } else { move_costs[i] };
            let others = inter_agent_bound(&visits, |j| labels[j].as_slice(), i, path.vertices[x], x);
            labels[i][x] = labels[i][x - 1].max(others) + cost;
        }
    }
    let paths =
        plan.paths.iter().zip(labels).map(|(p, l)| crate::model::Path::with_labels(p.vertices.clone(), l)).collect();
    LabeledPlan { plan: Plan::new(paths), move_costs }
}

/// Same recurrence evaluated directly over the edges of a dependency graph
/// (reduced or not).
pub fn labels_over_graph(dg: &DependencyGraph, plan: &Plan, move_costs: &[f64]) -> Vec<Vec<f64>> {
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); dg.num_nodes()];
    for &(a, b) in dg.edges() {
        preds[dg.node_id(b)].push(dg.node_id(a));
    }
    let mut value = vec![0.0f64; dg.num_nodes()];
    let mut order: Vec<usize> = (0..dg.num_nodes()).collect();
    order.sort_by_key(|&id| dg.node(id).index);
    for id in order {
        let s = dg.node(id);
        if s.index == 0 {
            continue;
        }
        let path = &plan.paths[s.agent];
        let cost = if path.is_wait(s.index) { 1.0 } else { move_costs[s.agent] };
        let best = preds[id].iter().map(|&p| value[p]).fold(f64::NEG_INFINITY, f64::max);
        value[id] = best + cost;
    }
    (0..dg.num_agents())
        .map(|a| (0..dg.state_count(a)).map(|x| value[dg.node_id(super::LocalState::new(a, x))]).collect())
        .collect()
}

/// `max_i L_i(X_i)` over stored labels.
pub fn approximate_average_makespan(labeled: &LabeledPlan) -> f64 {
    labeled.plan.paths.iter().filter_map(|p| p.final_label()).fold(0.0, f64::max)
}
