use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use super::exec::{ExecConfig, ExecOutcome, ExecutionTrace, Executor};
use super::{Policy, SimError};
use crate::model::{Instance, Plan};
use crate::stats::stats_ci;

/// Summary of repeated executions. Makespan and message statistics cover
/// completed runs only.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunStats {
    pub policy: Policy,
    pub n_runs: usize,
    pub completed: usize,
    pub mean_makespan: f64,
    pub ci95: f64,
    pub messages: f64,
    pub mean_collisions: f64,
    /// Runs with at least one collision.
    pub collision_runs: usize,
    pub timeouts: usize,
    pub deadlocks: usize,
}

impl RunStats {
    pub fn from_traces(policy: Policy, traces: &[ExecutionTrace]) -> Self {
        let makespans: Vec<f64> = traces.iter().filter_map(|t| t.makespan).map(|m| m as f64).collect();
        let completed_msgs: Vec<f64> =
            traces.iter().filter(|t| t.outcome == ExecOutcome::Completed).map(|t| t.messages_sent as f64).collect();
        let (mean_makespan, ci95) = stats_ci(&makespans);
        let n = traces.len();
        let collisions: usize = traces.iter().map(|t| t.collisions.len()).sum();
        Self {
            policy,
            n_runs: n,
            completed: makespans.len(),
            mean_makespan,
            ci95,
            messages: stats_ci(&completed_msgs).0,
            mean_collisions: if n == 0 { 0.0 } else { collisions as f64 / n as f64 },
            collision_runs: traces.iter().filter(|t| !t.collisions.is_empty()).count(),
            timeouts: traces.iter().filter(|t| t.outcome == ExecOutcome::Timeout).count(),
            deadlocks: traces.iter().filter(|t| t.outcome == ExecOutcome::Deadlock).count(),
        }
    }
}

impl fmt::Display for RunStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "policy={} runs={} completed={} mean_makespan={:.3} ci95={:.3} messages={:.1} mean_collisions={:.3} timeouts={} deadlocks={}",
            self.policy,
            self.n_runs,
            self.completed,
            self.mean_makespan,
            self.ci95,
            self.messages,
            self.mean_collisions,
            self.timeouts,
            self.deadlocks
        )
    }
}

/// Runs `n_runs` executions in parallel. Run `k` draws from stream `k` of
/// `seed`, so results do not depend on thread count or scheduling.
pub fn monte_carlo(
    instance: &Instance,
    plan: &Plan,
    policy: Policy,
    n_runs: usize,
    seed: u64,
    config: ExecConfig,
) -> Result<RunStats, SimError> {
    if n_runs == 0 {
        return Err(SimError::NoRuns);
    }
    let exec = Executor::new(instance, plan, policy, ExecConfig { record_trace: false, ..config })?;
    let traces: Vec<ExecutionTrace> = (0..n_runs as u64).into_par_iter().map(|k| exec.run_seeded(seed, k)).collect();
    Ok(RunStats::from_traces(policy, &traces))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AgentSpec, Graph, Path};

    fn line_instance(p: f64) -> (Instance, Plan) {
        let g = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let inst = Instance::new(g, vec![AgentSpec { id: 0, start: 0, goal: 3, delay_prob: p }]).unwrap();
        (inst, Plan::new(vec![Path::new(vec![0, 1, 2, 3])]))
    }

    #[test]
    fn deterministic_across_calls() {
        let (inst, plan) = line_instance(0.5);
        let a = monte_carlo(&inst, &plan, Policy::Mcp, 64, 7, ExecConfig::default()).unwrap();
        let b = monte_carlo(&inst, &plan, Policy::Mcp, 64, 7, ExecConfig::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_agent_mean_is_geometric() {
        // three moves, each geometric with mean 1/(1-p) = 2
        let (inst, plan) = line_instance(0.5);
        let s = monte_carlo(&inst, &plan, Policy::Fsp, 4000, 1, ExecConfig::default()).unwrap();
        assert_eq!(s.completed, 4000);
        assert!((s.mean_makespan - 6.0).abs() < 3.0 * s.ci95.max(0.1));
        assert_eq!(s.messages, 0.0);
    }

    #[test]
    fn zero_runs_rejected() {
        let (inst, plan) = line_instance(0.5);
        assert_eq!(monte_carlo(&inst, &plan, Policy::Mcp, 0, 0, ExecConfig::default()), Err(SimError::NoRuns));
    }

    #[test]
    fn display_mentions_fields() {
        let (inst, plan) = line_instance(0.2);
        let s = monte_carlo(&inst, &plan, Policy::Dummy, 10, 0, ExecConfig::default()).unwrap();
        let line = s.to_string();
        assert!(line.contains("policy=dummy") && line.contains("runs=10"));
    }
}
