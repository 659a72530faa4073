//! Instance generators and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use mapf_dp::ame::{solve, AmeOptions, SearchLimits, Solver};
use mapf_dp::dependency::compute_labels;
use mapf_dp::model::{
    generate_random_instance, shortest_path_distances, AgentSpec, Graph, Instance, Path, Plan, RandomInstanceParams,
    UNREACHABLE,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Connected random graph with 3..=`max_vertices` vertices (random tree plus
/// extra edges) and 1..=`max_agents` agents with distinct starts and goals.
pub fn tiny_instance(seed: u64, max_vertices: usize, max_agents: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(3..=max_vertices);
    let mut edges = Vec::new();
    for v in 1..n {
        edges.push((rng.random_range(0..v), v));
    }
    let extra = rng.random_range(0.0..0.4);
    for u in 0..n {
        for v in u + 1..n {
            if !edges.contains(&(u, v)) && rng.random_bool(extra) {
                edges.push((u, v));
            }
        }
    }
    let graph = Graph::from_edges(n, &edges).unwrap();
    let m = rng.random_range(1..=max_agents.min(n));
    let mut starts: Vec<usize> = (0..n).collect();
    let mut goals: Vec<usize> = (0..n).collect();
    starts.shuffle(&mut rng);
    goals.shuffle(&mut rng);
    let agents = (0..m)
        .map(|id| AgentSpec { id, start: starts[id], goal: goals[id], delay_prob: rng.random_range(0.0..0.5) })
        .collect();
    Instance::new(graph, agents).unwrap()
}

pub fn grid_instance(seed: u64, width: usize, height: usize, agents: usize) -> Instance {
    let params = RandomInstanceParams { width, height, agents, ..RandomInstanceParams::default() };
    generate_random_instance(&params, seed).unwrap()
}

/// Valid plans from AME on small grids.
pub fn solved_plans(count: usize, first_seed: u64) -> Vec<(Instance, Plan)> {
    let mut out = Vec::new();
    let mut seed = first_seed;
    while out.len() < count {
        let inst = grid_instance(seed, 7, 6, 2 + (seed % 4) as usize);
        seed += 1;
        let r = solve(&inst, Solver::Ame, &SearchLimits::default(), AmeOptions::default());
        if let Some(plan) = r.plan {
            out.push((inst, plan.without_labels()));
        }
    }
    out
}

/// Random DAG on up to 12 nodes, node order shuffled.
pub fn random_dag(seed: u64) -> (usize, Vec<(usize, usize)>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=12);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let density = rng.random_range(0.1..0.7);
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random_bool(density) {
                edges.push((order[a], order[b]));
            }
        }
    }
    (n, edges)
}

/// Keeps an edge `u -> v` exactly when no other route leads from `u` to `v`.
pub fn brute_reduction(n: usize, edges: &[(usize, usize)]) -> BTreeSet<(usize, usize)> {
    let unique: BTreeSet<(usize, usize)> = edges.iter().copied().collect();
    let mut succ = vec![Vec::new(); n];
    for &(u, v) in &unique {
        succ[u].push(v);
    }
    let reaches = |from: usize, to: usize| {
        let mut seen = vec![false; n];
        let mut stack = vec![from];
        while let Some(w) = stack.pop() {
            if w == to {
                return true;
            }
            for &s in &succ[w] {
                if !seen[s] {
                    seen[s] = true;
                    stack.push(s);
                }
            }
        }
        false
    };
    unique.iter().copied().filter(|&(u, v)| !succ[u].iter().any(|&w| w != v && reaches(w, v))).collect()
}

/// Entry-time labels with the inter-agent term taken over every earlier
/// visit, not just the latest one. Valid plans only.
pub fn full_scan_labels(plan: &Plan, probs: &[f64]) -> Vec<Vec<f64>> {
    let mut labels: Vec<Vec<f64>> = plan.paths.iter().map(|p| vec![0.0; p.vertices.len()]).collect();
    for x in 1..=plan.max_last_index() {
        for (i, p) in plan.paths.iter().enumerate() {
            if x > p.last_index() {
                continue;
            }
            let v = p.vertices[x];
            let cost = if p.vertices[x - 1] == v { 1.0 } else { 1.0 / (1.0 - probs[i]) };
            let mut best = labels[i][x - 1];
            for (j, q) in plan.paths.iter().enumerate() {
                if j == i {
                    continue;
                }
                for xp in 0..x - 1 {
                    if q.vertices.get(xp) == Some(&v) {
                        best = best.max(labels[j][xp + 1]);
                    }
                }
            }
            labels[i][x] = best + cost;
        }
    }
    labels
}

/// Pairwise validity of two goal-padded paths.
pub fn compatible(a: &[usize], b: &[usize]) -> bool {
    let at = |p: &[usize], x: usize| p[x.min(p.len() - 1)];
    let end = a.len().max(b.len());
    (0..end).all(|x| at(a, x) != at(b, x) && (x + 1 >= end || (at(a, x + 1) != at(b, x) && at(b, x + 1) != at(a, x))))
}

fn walks_of(instance: &Instance, agent: usize, horizon: usize) -> Vec<(f64, Vec<usize>)> {
    let g = instance.graph();
    let a = &instance.agents()[agent];
    let dist = shortest_path_distances(g, a.goal);
    let move_cost = 1.0 / (1.0 - a.delay_prob);
    let mut out = Vec::new();
    let mut cur = vec![a.start];
    #[allow(clippy::too_many_arguments)]
    fn rec(
        g: &Graph,
        goal: usize,
        dist: &[usize],
        move_cost: f64,
        horizon: usize,
        cur: &mut Vec<usize>,
        cost: f64,
        out: &mut Vec<(f64, Vec<usize>)>,
    ) {
        let v = *cur.last().unwrap();
        let n = cur.len();
        if v == goal && (n == 1 || cur[n - 2] != goal) {
            out.push((cost, cur.clone()));
        }
        if n - 1 == horizon {
            return;
        }
        for &next in std::iter::once(&v).chain(g.neighbors(v)) {
            if dist[next] == UNREACHABLE || dist[next] > horizon - n {
                continue;
            }
            cur.push(next);
            let step = if next == v { 1.0 } else { move_cost };
            rec(g, goal, dist, move_cost, horizon, cur, cost + step, out);
            cur.pop();
        }
    }
    if dist[a.start] != UNREACHABLE {
        rec(g, a.goal, &dist, move_cost, horizon, &mut cur, 0.0, &mut out);
    }
    out.sort_by(|x, y| x.0.total_cmp(&y.0));
    out
}

/// Smallest approximate average makespan over all valid plans whose paths
/// end by `horizon`. Own path cost bounds an agent's final label from
/// below, which prunes the enumeration.
pub fn min_approx_makespan(instance: &Instance, horizon: usize) -> Option<f64> {
    let m = instance.num_agents();
    let walks: Vec<_> = (0..m).map(|a| walks_of(instance, a, horizon)).collect();
    let probs = instance.delay_probs();
    let mut best = f64::INFINITY;
    let mut chosen: Vec<&[usize]> = Vec::new();
    fn rec<'a>(
        k: usize,
        walks: &'a [Vec<(f64, Vec<usize>)>],
        probs: &[f64],
        chosen: &mut Vec<&'a [usize]>,
        best: &mut f64,
    ) {
        if k == walks.len() {
            let plan = Plan::new(chosen.iter().map(|w| Path::new(w.to_vec())).collect());
            let labeled = compute_labels(&plan, probs);
            let value = labeled.plan.paths.iter().filter_map(Path::final_label).fold(0.0, f64::max);
            *best = best.min(value);
            return;
        }
        for (cost, w) in &walks[k] {
            if *cost >= *best {
                break;
            }
            if chosen.iter().all(|c| compatible(c, w)) {
                chosen.push(w);
                rec(k + 1, walks, probs, chosen, best);
                chosen.pop();
            }
        }
    }
    rec(0, &walks, &probs, &mut chosen, &mut best);
    best.is_finite().then_some(best)
}
