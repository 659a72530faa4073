use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::time::Instant;

use tracing::debug;

use super::low_level::{low_level_search, FailureCause, LowLevelQuery};
use super::{
    branch_constraints, key_bucket, AmeOptions, Constraint, ConstraintTable, SearchLimits, SearchStats, SolveOutcome,
    SolveReport, Solver, KEY_EPS,
};
use crate::cbs::joint_feasibility;
use crate::dependency::compute_labels;
use crate::model::{scan_conflicts, shortest_path_distances, Conflict, Instance, Path, Plan};

/// A node of the conflict tree.
#[derive(Debug, Clone)]
pub struct HighLevelNode {
    pub constraints: Vec<Constraint>,
    /// Labeled paths of all agents.
    pub plan: Plan,
    /// Largest stored final label.
    pub key: f64,
    pub parent_key: f64,
    pub conflict_count: usize,
    pub seq: u64,
    earliest: Option<Conflict>,
}

fn stored_key(plan: &Plan) -> f64 {
    plan.paths.iter().filter_map(Path::final_label).fold(0.0, f64::max)
}

fn relabel(plan: Plan, instance: &Instance, options: AmeOptions) -> Plan {
    if options.recompute_labels {
        compute_labels(&plan, &instance.delay_probs()).plan
    } else {
        plan
    }
}

/// High-level search: the root plans agents one after another with key 0,
/// nodes are expanded in order of key, then conflict count, then age, and
/// each expansion splits the earliest conflict into two children that re-plan
/// only the newly constrained agent.
pub fn solve_ame(instance: &Instance, limits: &SearchLimits, options: AmeOptions) -> SolveReport {
    let start = Instant::now();
    let deadline = limits.deadline(start);
    let mut stats = SearchStats::default();
    let failed = |outcome, stats: SearchStats| SolveReport::failed(Solver::Ame, outcome, stats, start);

    if let Some(feasible) = joint_feasibility(instance, limits.feasibility_check_states) {
        stats.feasibility_checked = true;
        if !feasible {
            return failed(SolveOutcome::NoSolution, stats);
        }
    }

    let m = instance.num_agents();
    let dists: Vec<Vec<usize>> =
        instance.agents().iter().map(|a| shortest_path_distances(instance.graph(), a.goal)).collect();
    let plan_agent = |agent: usize,
                      others: &[Option<&Path>],
                      constraints: &[Constraint],
                      key: f64,
                      stats: &mut SearchStats|
     -> Result<Path, FailureCause> {
        let table = ConstraintTable::for_agent(agent, instance.agents()[agent].goal, constraints);
        let q = LowLevelQuery {
            instance,
            agent,
            others,
            constraints: &table,
            key,
            max_index: limits.index_cap(instance, &table),
            max_expansions: limits.low_level_expansions,
            deadline,
            dist: &dists[agent],
        };
        stats.ll_searches += 1;
        match low_level_search(&q) {
            Ok(s) => {
                stats.ll_expanded += s.expanded;
                Ok(s.path)
            }
            Err(e) => {
                stats.ll_expanded += e.expanded;
                Err(e.cause)
            }
        }
    };

    // root
    let mut root_paths: Vec<Option<Path>> = vec![None; m];
    for agent in 0..m {
        let others: Vec<Option<&Path>> = root_paths.iter().map(Option::as_ref).collect();
        match plan_agent(agent, &others, &[], 0.0, &mut stats) {
            Ok(p) => root_paths[agent] = Some(p),
            Err(FailureCause::Exhausted) => return failed(SolveOutcome::NoSolution, stats),
            Err(FailureCause::Budget) => return failed(SolveOutcome::Timeout, stats),
        }
    }
    let root_plan = relabel(Plan::new(root_paths.into_iter().map(Option::unwrap).collect()), instance, options);
    let mut seq = 0u64;
    let make_node = |constraints, plan: Plan, parent_key, seq| {
        let conflicts = scan_conflicts(&plan);
        let key = stored_key(&plan);
        HighLevelNode {
            constraints,
            key,
            parent_key,
            conflict_count: conflicts.len(),
            earliest: conflicts.first().copied(),
            plan,
            seq,
        }
    };

    let mut nodes: Vec<Option<HighLevelNode>> = Vec::new();
    let mut heap: BinaryHeap<Reverse<(i64, usize, u64, usize)>> = BinaryHeap::new();
    let push = |node: HighLevelNode, nodes: &mut Vec<Option<HighLevelNode>>, heap: &mut BinaryHeap<_>| {
        heap.push(Reverse((key_bucket(node.key), node.conflict_count, node.seq, nodes.len())));
        nodes.push(Some(node));
    };
    push(make_node(Vec::new(), root_plan, 0.0, seq), &mut nodes, &mut heap);
    stats.hl_generated = 1;

    while let Some(Reverse((_, _, _, idx))) = heap.pop() {
        let node = nodes[idx].take().expect("node popped once");
        if deadline.is_some_and(|d| Instant::now() >= d) || stats.hl_expanded >= limits.high_level_expansions {
            return failed(SolveOutcome::Timeout, stats);
        }
        stats.hl_expanded += 1;
        let Some(conflict) = node.earliest else {
            stats.runtime = start.elapsed();
            let approx = compute_labels(&node.plan, &instance.delay_probs());
            return SolveReport {
                solver: Solver::Ame,
                outcome: SolveOutcome::Solved,
                approx_makespan: Some(crate::dependency::approximate_average_makespan(&approx)),
                key: Some(node.key),
                plan: Some(node.plan),
                stats,
            };
        };
        let (c1, c2) = branch_constraints(&conflict);
        for c in [c1, c2] {
            let mut constraints = node.constraints.clone();
            constraints.push(c);
            let others: Vec<Option<&Path>> =
                node.plan.paths.iter().enumerate().map(|(j, p)| (j != c.agent).then_some(p)).collect();
            match plan_agent(c.agent, &others, &constraints, node.key, &mut stats) {
                Ok(path) => {
                    let mut paths = node.plan.paths.clone();
                    paths[c.agent] = path;
                    let plan = relabel(Plan::new(paths), instance, options);
                    seq += 1;
                    let child = make_node(constraints, plan, node.key, seq);
                    if child.key < node.key - KEY_EPS {
                        stats.key_decreases += 1;
                        debug!(parent = node.key, child = child.key, "child key below parent key");
                    }
                    stats.hl_generated += 1;
                    push(child, &mut nodes, &mut heap);
                }
                Err(FailureCause::Exhausted) => {}
                Err(FailureCause::Budget) => stats.ll_budget_failures += 1,
            }
        }
    }
    let outcome = if stats.ll_budget_failures > 0 { SolveOutcome::Timeout } else { SolveOutcome::NoSolution };
    failed(outcome, stats)
}
