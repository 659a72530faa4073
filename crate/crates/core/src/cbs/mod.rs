//! Conflict-based search that assumes perfect execution and minimizes the
//! largest path length, over the same conflicts and constraints as the
//! approximate solver. Also holds exhaustive joint-configuration searches used
//! as a feasibility check and as an optimality oracle on tiny instances.

mod joint;

pub use joint::{brute_force_optimal_makespan, joint_feasibility, BruteForceError};

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::time::Instant;

use crate::ame::{
    branch_constraints, Constraint, ConstraintTable, FailureCause, SearchLimits, SearchStats, SolveOutcome,
    SolveReport, Solver,
};
use crate::dependency::{approximate_average_makespan, compute_labels};
use crate::model::{scan_conflicts, shortest_path_distances, Conflict, Instance, Path, Plan, VertexId, UNREACHABLE};

/// Space-time A* for one agent minimizing its path length under constraints.
/// Ties go to smaller `f`, then larger index, then smaller vertex id.
#[allow(clippy::too_many_arguments)]
fn shortest_constrained_path(
    instance: &Instance,
    agent: usize,
    dist: &[usize],
    table: &ConstraintTable,
    max_index: usize,
    max_expansions: usize,
    deadline: Option<Instant>,
    expanded: &mut usize,
) -> Result<Vec<VertexId>, FailureCause> {
    let graph = instance.graph();
    let spec = &instance.agents()[agent];
    if table.is_banned(spec.start, 0) {
        return Err(FailureCause::Exhausted);
    }
    let mut parent: HashMap<(VertexId, usize), Option<(VertexId, usize)>> = HashMap::new();
    let mut open = BinaryHeap::new();
    parent.insert((spec.start, 0), None);
    open.push(Reverse((dist[spec.start], Reverse(0usize), spec.start)));
    let mut pruned = false;
    let mut count = 0usize;
    while let Some(Reverse((_, Reverse(x), v))) = open.pop() {
        count += 1;
        *expanded += 1;
        if count > max_expansions || (count.is_multiple_of(1024) && deadline.is_some_and(|d| Instant::now() >= d)) {
            return Err(FailureCause::Budget);
        }
        if v == spec.goal && table.can_finish_at(x) {
            let mut path = vec![v];
            let mut cur = parent[&(v, x)];
            while let Some(s) = cur {
                path.push(s.0);
                cur = parent[&s];
            }
            path.reverse();
            return Ok(path);
        }
        if x + 1 > max_index {
            pruned = true;
            continue;
        }
        for &w in std::iter::once(&v).chain(graph.neighbors(v)) {
            if dist[w] == UNREACHABLE || table.is_banned(w, x + 1) || parent.contains_key(&(w, x + 1)) {
                continue;
            }
            parent.insert((w, x + 1), Some((v, x)));
            open.push(Reverse((x + 1 + dist[w], Reverse(x + 1), w)));
        }
    }
    Err(if pruned { FailureCause::Budget } else { FailureCause::Exhausted })
}

struct Node {
    constraints: Vec<Constraint>,
    plan: Plan,
    earliest: Option<Conflict>,
}

/// CBS whose high level orders nodes by `max_i X_i`, then `sum_i X_i`, then
/// conflict count, then age. Delay probabilities are ignored.
pub fn solve_adapted_cbs(instance: &Instance, limits: &SearchLimits) -> SolveReport {
    let start = Instant::now();
    let deadline = limits.deadline(start);
    let mut stats = SearchStats::default();
    let failed = |outcome, stats: SearchStats| SolveReport::failed(Solver::AdaptedCbs, outcome, stats, start);

    if let Some(feasible) = joint_feasibility(instance, limits.feasibility_check_states) {
        stats.feasibility_checked = true;
        if !feasible {
            return failed(SolveOutcome::NoSolution, stats);
        }
    }
    let dists: Vec<Vec<usize>> =
        instance.agents().iter().map(|a| shortest_path_distances(instance.graph(), a.goal)).collect();
    let plan_agent = |agent: usize, constraints: &[Constraint], stats: &mut SearchStats| {
        let table = ConstraintTable::for_agent(agent, instance.agents()[agent].goal, constraints);
        stats.ll_searches += 1;
        shortest_constrained_path(
            instance,
            agent,
            &dists[agent],
            &table,
            limits.index_cap(instance, &table),
            limits.low_level_expansions,
            deadline,
            &mut stats.ll_expanded,
        )
    };

    let mut paths = Vec::with_capacity(instance.num_agents());
    for agent in 0..instance.num_agents() {
        match plan_agent(agent, &[], &mut stats) {
            Ok(p) => paths.push(Path::new(p)),
            Err(FailureCause::Exhausted) => return failed(SolveOutcome::NoSolution, stats),
            Err(FailureCause::Budget) => return failed(SolveOutcome::Timeout, stats),
        }
    }

    let mut nodes: Vec<Option<Node>> = Vec::new();
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    let mut push =
        |constraints: Vec<Constraint>, plan: Plan, nodes: &mut Vec<Option<Node>>, heap: &mut BinaryHeap<_>| {
            let conflicts = scan_conflicts(&plan);
            heap.push(Reverse((plan.max_last_index(), plan.sum_last_index(), conflicts.len(), seq, nodes.len())));
            seq += 1;
            nodes.push(Some(Node { constraints, plan, earliest: conflicts.first().copied() }));
        };
    push(Vec::new(), Plan::new(paths), &mut nodes, &mut heap);
    stats.hl_generated = 1;

    while let Some(Reverse((.., idx))) = heap.pop() {
        let node = nodes[idx].take().expect("node popped once");
        if deadline.is_some_and(|d| Instant::now() >= d) || stats.hl_expanded >= limits.high_level_expansions {
            return failed(SolveOutcome::Timeout, stats);
        }
        stats.hl_expanded += 1;
        let Some(conflict) = node.earliest else {
            stats.runtime = start.elapsed();
            let labeled = compute_labels(&node.plan, &instance.delay_probs());
            return SolveReport {
                solver: Solver::AdaptedCbs,
                outcome: SolveOutcome::Solved,
                approx_makespan: Some(approximate_average_makespan(&labeled)),
                key: None,
                plan: Some(node.plan),
                stats,
            };
        };
        let (c1, c2) = branch_constraints(&conflict);
        for c in [c1, c2] {
            let mut constraints = node.constraints.clone();
            constraints.push(c);
            match plan_agent(c.agent, &constraints, &mut stats) {
                Ok(p) => {
                    let mut paths = node.plan.paths.clone();
                    paths[c.agent] = Path::new(p);
                    stats.hl_generated += 1;
                    push(constraints, Plan::new(paths), &mut nodes, &mut heap);
                }
                Err(FailureCause::Exhausted) => {}
                Err(FailureCause::Budget) => stats.ll_budget_failures += 1,
            }
        }
    }
    let outcome = if stats.ll_budget_failures > 0 { SolveOutcome::Timeout } else { SolveOutcome::NoSolution };
    failed(outcome, stats)
}
