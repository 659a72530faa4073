use std::collections::HashSet;

use thiserror::Error;

use crate::model::{Graph, Instance, VertexId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BruteForceError {
    #[error("no valid plan with makespan at most {0}")]
    Infeasible(usize),
    #[error("joint search exceeded {0} configurations")]
    TooLarge(usize),
}

enum JointResult {
    Reached(usize),
    Unreachable,
    TooLarge,
}

/// Every joint configuration reachable in one index step: each agent waits or
/// moves to a neighbor, no two agents share a vertex, and no agent enters a
/// vertex another agent occupied at the previous index.
fn successors(graph: &Graph, cur: &[VertexId], out: &mut Vec<Vec<VertexId>>) {
    fn rec(graph: &Graph, cur: &[VertexId], k: usize, next: &mut Vec<VertexId>, out: &mut Vec<Vec<VertexId>>) {
        if k == cur.len() {
            out.push(next.clone());
            return;
        }
        for &w in std::iter::once(&cur[k]).chain(graph.neighbors(cur[k])) {
            let follows = w != cur[k] && cur.contains(&w);
            if follows || next.contains(&w) {
                continue;
            }
            next.push(w);
            rec(graph, cur, k + 1, next, out);
            next.pop();
        }
    }
    rec(graph, cur, 0, &mut Vec::with_capacity(cur.len()), out);
}

fn joint_bfs(instance: &Instance, depth_limit: Option<usize>, max_states: usize) -> JointResult {
    let graph = instance.graph();
    let start: Vec<VertexId> = instance.agents().iter().map(|a| a.start).collect();
    let goal: Vec<VertexId> = instance.agents().iter().map(|a| a.goal).collect();
    if start == goal {
        return JointResult::Reached(0);
    }
    let mut seen: HashSet<Vec<VertexId>> = HashSet::new();
    seen.insert(start.clone());
    let mut frontier = vec![start];
    let mut buf = Vec::new();
    let mut depth = 0;
    while !frontier.is_empty() {
        if depth_limit.is_some_and(|d| depth >= d) {
            return JointResult::Unreachable;
        }
        depth += 1;
        let mut next = Vec::new();
        for cur in &frontier {
            buf.clear();
            successors(graph, cur, &mut buf);
            for s in buf.drain(..) {
                if s == goal {
                    return JointResult::Reached(depth);
                }
                if seen.contains(&s) {
                    continue;
                }
                if seen.len() >= max_states {
                    return JointResult::TooLarge;
                }
                seen.insert(s.clone());
                next.push(s);
            }
        }
        frontier = next;
    }
    JointResult::Unreachable
}

/// Smallest `max_i X_i` over all valid plans, by breadth-first search over
/// joint configurations up to `horizon` index steps.
pub fn brute_force_optimal_makespan(instance: &Instance, horizon: usize) -> Result<usize, BruteForceError> {
    const CAP: usize = 5_000_000;
    match joint_bfs(instance, Some(horizon), CAP) {
        JointResult::Reached(d) => Ok(d),
        JointResult::Unreachable => Err(BruteForceError::Infeasible(horizon)),
        JointResult::TooLarge => Err(BruteForceError::TooLarge(CAP)),
    }
}

/// Whether any valid plan exists, decided exhaustively when the number of
/// joint configurations is at most `max_states`; `None` otherwise.
pub fn joint_feasibility(instance: &Instance, max_states: usize) -> Option<bool> {
    let n = instance.graph().num_vertices();
    let m = instance.num_agents();
    if max_states == 0 || m > n {
        return None;
    }
    let mut configs = 1usize;
    for k in 0..m {
        configs = configs.saturating_mul(n - k);
        if configs > max_states {
            return None;
        }
    }
    match joint_bfs(instance, None, max_states) {
        JointResult::Reached(_) => Some(true),
        JointResult::Unreachable => Some(false),
        JointResult::TooLarge => None,
    }
}
