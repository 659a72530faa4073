use std::collections::HashMap;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use super::DependencyError;
use crate::model::{AgentId, Plan, VertexId};

/// Local state `index` of agent `agent`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LocalState {
    pub agent: AgentId,
    pub index: usize,
}

impl LocalState {
    pub fn new(agent: AgentId, index: usize) -> Self {
        Self { agent, index }
    }
}

/// DAG over all local states `(i, 0..=X_i)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DependencyGraph {
    state_counts: Vec<usize>,
    edges: Vec<(LocalState, LocalState)>,
    reduced: bool,
    #[serde(skip)]
    offsets: Vec<usize>,
}

impl DependencyGraph {
    fn new(state_counts: Vec<usize>, mut edges: Vec<(LocalState, LocalState)>, reduced: bool) -> Self {
        edges.sort_unstable();
        edges.dedup();
        let mut offsets = Vec::with_capacity(state_counts.len() + 1);
        let mut acc = 0;
        for &c in &state_counts {
            offsets.push(acc);
            acc += c;
        }
        offsets.push(acc);
        Self { state_counts, edges, reduced, offsets }
    }

    pub fn num_agents(&self) -> usize {
        self.state_counts.len()
    }

    pub fn num_nodes(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    /// `X_i + 1`.
    pub fn state_count(&self, agent: AgentId) -> usize {
        self.state_counts[agent]
    }

    pub fn edges(&self) -> &[(LocalState, LocalState)] {
        &self.edges
    }

    pub fn inter_agent_edges(&self) -> impl Iterator<Item = &(LocalState, LocalState)> + '_ {
        self.edges.iter().filter(|(a, b)| a.agent != b.agent)
    }

    pub fn num_inter_agent_edges(&self) -> usize {
        self.inter_agent_edges().count()
    }

    pub fn is_reduced(&self) -> bool {
        self.reduced
    }

    pub fn node_id(&self, s: LocalState) -> usize {
        self.offsets[s.agent] + s.index
    }

    pub fn node(&self, id: usize) -> LocalState {
        let agent = self.offsets.partition_point(|&o| o <= id) - 1;
        LocalState::new(agent, id - self.offsets[agent])
    }

    pub fn contains(&self, s: LocalState) -> bool {
        s.agent < self.state_counts.len() && s.index < self.state_counts[s.agent]
    }
}

/// Intra-agent chain edges plus one inter-agent edge `(j, x'+1) -> (i, x+1)`
/// for every pair of visits `l_j(x') = l_i(x+1)` with `x' < x`.
pub fn build_partial_order(plan: &Plan) -> Result<DependencyGraph, DependencyError> {
    let mut visits: HashMap<VertexId, Vec<(AgentId, usize)>> = HashMap::new();
    for (agent, path) in plan.paths.iter().enumerate() {
        for (x, &v) in path.vertices.iter().enumerate() {
            visits.entry(v).or_default().push((agent, x));
        }
    }
    let mut edges = Vec::new();
    for (i, path) in plan.paths.iter().enumerate() {
        for x in 1..path.vertices.len() {
            edges.push((LocalState::new(i, x - 1), LocalState::new(i, x)));
            for &(j, xp) in &visits[&path.vertices[x]] {
                if j == i || xp + 1 >= x {
                    continue;
                }
                let from = LocalState::new(j, xp + 1);
                let to = LocalState::new(i, x);
                if xp + 1 > plan.paths[j].last_index() {
                    return Err(DependencyError::Structural { from, to });
                }
                edges.push((from, to));
            }
        }
    }
    let counts = plan.paths.iter().map(|p| p.vertices.len()).collect();
    Ok(DependencyGraph::new(counts, edges, false))
}

/// Transitive reduction of a DAG on nodes `0..n`. Returns the kept edges,
/// sorted. Runs in `O(|V| |E| / w)` with bitset reachability.
pub fn reduce_dag(n: usize, edges: &[(usize, usize)]) -> Result<Vec<(usize, usize)>, DependencyError> {
    let mut succ = vec![Vec::new(); n];
    let mut indeg = vec![0usize; n];
    for &(u, v) in edges {
        succ[u].push(v);
    }
    for list in &mut succ {
        list.sort_unstable();
        list.dedup();
        for &v in list.iter() {
            indeg[v] += 1;
        }
    }
    // Kahn's algorithm
    let mut topo = Vec::with_capacity(n);
    let mut stack: Vec<usize> = (0..n).rev().filter(|&v| indeg[v] == 0).collect();
    while let Some(u) = stack.pop() {
        topo.push(u);
        for &v in &succ[u] {
            indeg[v] -= 1;
            if indeg[v] == 0 {
                stack.push(v);
            }
        }
    }
    if topo.len() != n {
        return Err(DependencyError::Cycle);
    }
    let mut rank = vec![0usize; n];
    for (r, &v) in topo.iter().enumerate() {
        rank[v] = r;
    }

    let mut reach: Vec<FixedBitSet> = vec![FixedBitSet::new(); n];
    let mut kept = Vec::new();
    for &u in topo.iter().rev() {
        let mut targets = succ[u].clone();
        targets.sort_unstable_by_key(|&v| rank[v]);
        let mut mark = FixedBitSet::with_capacity(n);
        for v in targets {
            // v is redundant iff an earlier successor already reaches it
            if !mark.contains(v) {
                kept.push((u, v));
                mark.insert(v);
                mark.union_with(&reach[v]);
            }
        }
        reach[u] = mark;
    }
    kept.sort_unstable();
    Ok(kept)
}

/// The unique transitive reduction. Intra-agent chain edges always survive.
pub fn transitive_reduction(dg: &DependencyGraph) -> Result<DependencyGraph, DependencyError> {
    let ids: Vec<(usize, usize)> = dg.edges.iter().map(|&(a, b)| (dg.node_id(a), dg.node_id(b))).collect();
    let kept = reduce_dag(dg.num_nodes(), &ids)?;
    let edges = kept.into_iter().map(|(u, v)| (dg.node(u), dg.node(v))).collect();
    Ok(DependencyGraph::new(dg.state_counts.clone(), edges, true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Path;

    pub(crate) fn pocket_plan() -> Plan {
        // v1..v5 -> 0..4
        Plan::new(vec![Path::new(vec![2, 0, 2, 0, 0, 0, 2, 3]), Path::new(vec![1, 1, 1, 1, 2, 3, 4])])
    }

    fn ls(a: usize, x: usize) -> LocalState {
        LocalState::new(a, x)
    }

    #[test]
    fn pocket_partial_order() {
        let dg = build_partial_order(&pocket_plan()).unwrap();
        let inter: Vec<_> = dg.inter_agent_edges().copied().collect();
        assert_eq!(inter, vec![(ls(0, 1), ls(1, 4)), (ls(0, 3), ls(1, 4)), (ls(1, 5), ls(0, 6)), (ls(1, 6), ls(0, 7))]);
        assert_eq!(dg.edges().len(), 7 + 6 + 4);
        for (a, b) in dg.edges() {
            assert!(a.index < b.index);
        }
    }

    #[test]
    fn pocket_reduction_drops_implied_edge() {
        let dg = transitive_reduction(&build_partial_order(&pocket_plan()).unwrap()).unwrap();
        assert!(dg.is_reduced());
        let inter: Vec<_> = dg.inter_agent_edges().copied().collect();
        assert_eq!(inter, vec![(ls(0, 3), ls(1, 4)), (ls(1, 5), ls(0, 6)), (ls(1, 6), ls(0, 7))]);
        assert_eq!(dg.edges().len(), 13 + 3);
    }

    #[test]
    fn single_agent_chain_only() {
        let dg = build_partial_order(&Plan::new(vec![Path::new(vec![0, 1, 1, 2])])).unwrap();
        assert_eq!(dg.edges().len(), 3);
        assert_eq!(transitive_reduction(&dg).unwrap().edges(), dg.edges());
    }

    #[test]
    fn disjoint_agents_have_no_inter_edges() {
        let dg = build_partial_order(&Plan::new(vec![Path::new(vec![0, 1, 2]), Path::new(vec![5, 4, 3])])).unwrap();
        assert_eq!(dg.num_inter_agent_edges(), 0);
    }

    #[test]
    fn entering_parked_goal_is_structural_error() {
        // agent 0 parks at 1 at index 1; agent 1 reaches 1 at index 3
        let plan = Plan::new(vec![Path::new(vec![0, 1]), Path::new(vec![3, 3, 2, 1, 0])]);
        assert!(matches!(build_partial_order(&plan), Err(DependencyError::Structural { .. })));
    }

    #[test]
    fn cycle_detected() {
        assert_eq!(reduce_dag(3, &[(0, 1), (1, 2), (2, 0)]), Err(DependencyError::Cycle));
    }

    #[test]
    fn node_ids_round_trip() {
        let dg = build_partial_order(&pocket_plan()).unwrap();
        for id in 0..dg.num_nodes() {
            assert_eq!(dg.node_id(dg.node(id)), id);
        }
        assert_eq!(dg.node(8), ls(1, 0));
    }
}
