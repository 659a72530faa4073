use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::policy::{commands_dummy, commands_fsp, commands_mcp, Command, ExecState, Policy};
use super::SimError;
use crate::dependency::MessageSchedule;
use crate::model::{validate_plan, AgentId, Instance, Plan, VertexId};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExecConfig {
    /// Step limit. `None` means `max(1000, 50 * max X_i)`.
    pub horizon_cap: Option<usize>,
    /// Extra steps before a message becomes visible. 0 means visible next step.
    pub message_latency: usize,
    pub record_trace: bool,
    /// Lets robust policies run on invalid plans (stress testing only).
    pub allow_invalid: bool,
}

impl ExecConfig {
    pub fn horizon_for(&self, plan: &Plan) -> usize {
        self.horizon_cap.unwrap_or_else(|| 1000usize.max(50 * plan.max_last_index()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExecOutcome {
    Completed,
    Timeout,
    Deadlock,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CollisionKind {
    /// Two agents end a step on the same vertex.
    Vertex,
    /// Two agents traverse the same edge in opposite directions.
    Edge,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Collision {
    /// Time step at whose end the collision is observed.
    pub t: usize,
    pub kind: CollisionKind,
    pub agents: (AgentId, AgentId),
    /// `(v, v)` for vertex collisions, the traversed edge for edge collisions.
    pub location: (VertexId, VertexId),
}

/// State at the start of time step `t` and the commands issued in it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Snapshot {
    pub t: usize,
    pub local: Vec<usize>,
    pub commands: Vec<Command>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExecutionTrace {
    pub outcome: ExecOutcome,
    /// Steps until every agent reached its final local state (completed runs).
    pub makespan: Option<usize>,
    pub steps: usize,
    pub messages_sent: u64,
    pub collisions: Vec<Collision>,
    pub final_local: Vec<usize>,
    pub snapshots: Vec<Snapshot>,
}

impl ExecutionTrace {
    /// One line per agent and recorded step: `t, agent, x, vertex, command`.
    pub fn dump(&self, plan: &Plan) -> String {
        let mut out = String::from("t,agent,x,vertex,command\n");
        for s in &self.snapshots {
            for (a, (&x, c)) in s.local.iter().zip(&s.commands).enumerate() {
                let cmd = match c {
                    Command::Go => "GO",
                    Command::Stop => "STOP",
                };
                let _ = writeln!(out, "{},{},{},{},{}", s.t, a, x, plan.paths[a].vertices[x], cmd);
            }
        }
        out
    }
}

/// Advances one time step. GO on a wait always succeeds; GO on a move succeeds
/// with probability `1 - p_i`, one coin per moving agent in agent order.
/// Message counters are left untouched.
pub fn step<R: Rng + ?Sized>(
    state: &ExecState,
    commands: &[Command],
    plan: &Plan,
    delay_probs: &[f64],
    rng: &mut R,
) -> ExecState {
    let mut next = state.clone();
    next.t += 1;
    for (i, path) in plan.paths.iter().enumerate() {
        let x = state.local[i];
        if commands[i] != Command::Go || x >= path.last_index() {
            continue;
        }
        let advance = path.is_wait(x + 1) || rng.random::<f64>() >= delay_probs[i];
        if advance {
            next.local[i] = x + 1;
        }
    }
    next
}

/// A plan prepared for repeated execution under one policy.
#[derive(Debug, Clone)]
pub struct Executor {
    plan: Plan,
    delay_probs: Vec<f64>,
    policy: Policy,
    schedule: Option<MessageSchedule>,
    config: ExecConfig,
}

impl Executor {
    pub fn new(instance: &Instance, plan: &Plan, policy: Policy, config: ExecConfig) -> Result<Self, SimError> {
        let report = validate_plan(instance, plan)?;
        if policy.is_robust() && !report.is_valid() && !config.allow_invalid {
            return Err(SimError::InvalidPlan(report.conflicts.len()));
        }
        let schedule = match policy {
            Policy::Mcp => Some(MessageSchedule::for_plan(plan)?),
            _ => None,
        };
        Ok(Self { plan: plan.without_labels(), delay_probs: instance.delay_probs(), policy, schedule, config })
    }

    /// Replaces the compiled schedule; it must belong to this plan.
    pub fn with_schedule(mut self, schedule: MessageSchedule) -> Result<Self, SimError> {
        match schedule.plan_fingerprint() {
            Some(fp) if fp != self.plan.fingerprint() => return Err(SimError::ScheduleMismatch),
            _ => {}
        }
        self.schedule = Some(schedule);
        Ok(self)
    }

    pub fn plan(&self) -> &Plan {
        &self.plan
    }

    pub fn policy(&self) -> Policy {
        self.policy
    }

    pub fn config(&self) -> &ExecConfig {
        &self.config
    }

    /// Runs once with the counter-based stream `run` of `seed`.
    pub fn run_seeded(&self, seed: u64, run: u64) -> ExecutionTrace {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(run);
        self.run(&mut rng)
    }

    pub fn run<R: Rng + ?Sized>(&self, rng: &mut R) -> ExecutionTrace {
        let plan = &self.plan;
        let m = plan.paths.len();
        let horizon = self.config.horizon_for(plan);
        let mut state = ExecState::initial(m);
        // (visible at step, recipient, sender)
        let mut in_flight: VecDeque<(usize, AgentId, AgentId)> = VecDeque::new();
        let mut messages_sent = 0u64;
        let mut collisions = Vec::new();
        let mut snapshots = Vec::new();

        let outcome = loop {
            while let Some(&(at, to, from)) = in_flight.front() {
                if at > state.t {
                    break;
                }
                state.received[to][from] += 1;
                in_flight.pop_front();
            }
            if state.all_done(plan) {
                break ExecOutcome::Completed;
            }
            if state.t >= horizon {
                break ExecOutcome::Timeout;
            }
            let commands = self.commands(&state);
            if self.config.record_trace {
                snapshots.push(Snapshot { t: state.t, local: state.local.clone(), commands: commands.clone() });
            }
            if in_flight.is_empty() && !commands.contains(&Command::Go) {
                break ExecOutcome::Deadlock;
            }
            let next = step(&state, &commands, plan, &self.delay_probs, rng);
            detect_collisions(plan, &state, &next, &mut collisions);
            let visible = next.t + self.config.message_latency;
            for i in 0..m {
                if next.local[i] == state.local[i] {
                    continue;
                }
                let y = next.local[i];
                match self.policy {
                    Policy::Fsp => {
                        for k in (0..m).filter(|&k| k != i) {
                            in_flight.push_back((visible, k, i));
                            messages_sent += 1;
                        }
                    }
                    Policy::Mcp => {
                        let sched = self.schedule.as_ref().expect("mcp schedule");
                        for &k in sched.recipients(i, y) {
                            in_flight.push_back((visible, k, i));
                            messages_sent += 1;
                        }
                    }
                    Policy::Dummy => {}
                }
            }
            state = next;
        };

        ExecutionTrace {
            outcome,
            makespan: (outcome == ExecOutcome::Completed).then_some(state.t),
            steps: state.t,
            messages_sent,
            collisions,
            final_local: state.local,
            snapshots,
        }
    }

    fn commands(&self, state: &ExecState) -> Vec<Command> {
        match self.policy {
            Policy::Fsp => commands_fsp(state, &self.plan),
            Policy::Mcp => commands_mcp(state, self.schedule.as_ref().expect("mcp schedule"), &self.plan)
                .expect("schedule checked at construction"),
            Policy::Dummy => commands_dummy(state, &self.plan),
        }
    }
}

fn detect_collisions(plan: &Plan, before: &ExecState, after: &ExecState, out: &mut Vec<Collision>) {
    let pos = |s: &ExecState, a: usize| plan.paths[a].vertices[s.local[a]];
    let mut at: HashMap<VertexId, Vec<AgentId>> = HashMap::new();
    let mut moves: HashMap<(VertexId, VertexId), Vec<AgentId>> = HashMap::new();
    for a in 0..plan.paths.len() {
        let (u, v) = (pos(before, a), pos(after, a));
        at.entry(v).or_default().push(a);
        if u != v {
            moves.entry((u, v)).or_default().push(a);
        }
    }
    let mut found = Vec::new();
    for (&v, agents) in &at {
        for (k, &i) in agents.iter().enumerate() {
            for &j in &agents[k + 1..] {
                found.push(Collision { t: after.t, kind: CollisionKind::Vertex, agents: (i, j), location: (v, v) });
            }
        }
    }
    for (&(u, v), agents) in &moves {
        if u > v {
            continue;
        }
        if let Some(back) = moves.get(&(v, u)) {
            for &i in agents {
                for &j in back {
                    let pair = (i.min(j), i.max(j));
                    found.push(Collision { t: after.t, kind: CollisionKind::Edge, agents: pair, location: (u, v) });
                }
            }
        }
    }
    found.sort_by_key(|c| (c.kind as u8, c.agents, c.location));
    out.extend(found);
}

/// Single execution with stream 0 of `seed`.
pub fn run_execution(
    instance: &Instance,
    plan: &Plan,
    policy: Policy,
    seed: u64,
    config: ExecConfig,
) -> Result<ExecutionTrace, SimError> {
    Ok(Executor::new(instance, plan, policy, config)?.run_seeded(seed, 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AgentSpec, Graph, Path};

    /// Corridor v1..v5 as 0..4 with edges v2-v3, v3-v4, v4-v5 and v1-v3.
    fn pocket_instance(p: [f64; 2]) -> Instance {
        let g = Graph::from_edges(5, &[(1, 2), (2, 3), (3, 4), (0, 2)]).unwrap();
        Instance::new(
            g,
            vec![
                AgentSpec { id: 0, start: 2, goal: 3, delay_prob: p[0] },
                AgentSpec { id: 1, start: 1, goal: 4, delay_prob: p[1] },
            ],
        )
        .unwrap()
    }

    fn pocket_plan() -> Plan {
        Plan::new(vec![Path::new(vec![2, 0, 0, 0, 2, 3]), Path::new(vec![1, 1, 2, 3, 4])])
    }

    #[test]
    fn certain_moves_finish_in_plan_length() {
        let inst = pocket_instance([1e-9, 1e-9]);
        for policy in Policy::ALL {
            let t = run_execution(&inst, &pocket_plan(), policy, 3, ExecConfig::default()).unwrap();
            assert_eq!(t.outcome, ExecOutcome::Completed);
            assert_eq!(t.makespan, Some(5));
            assert!(t.collisions.is_empty());
        }
    }

    #[test]
    fn fsp_message_count() {
        let inst = pocket_instance([0.4, 0.7]);
        let t = run_execution(&inst, &pocket_plan(), Policy::Fsp, 11, ExecConfig::default()).unwrap();
        assert_eq!(t.messages_sent, (5 + 4) as u64);
    }

    #[test]
    fn mcp_message_count_matches_schedule() {
        let inst = pocket_instance([0.4, 0.7]);
        let sched = MessageSchedule::for_plan(&pocket_plan()).unwrap();
        for seed in 0..20 {
            let t = run_execution(&inst, &pocket_plan(), Policy::Mcp, seed, ExecConfig::default()).unwrap();
            assert_eq!(t.outcome, ExecOutcome::Completed);
            assert_eq!(t.messages_sent, sched.total_messages() as u64);
            assert!(t.collisions.is_empty());
        }
    }

    #[test]
    fn invalid_plan_rejected_for_robust_policies() {
        let inst = pocket_instance([0.5, 0.5]);
        let bad = Plan::new(vec![Path::new(vec![2, 0, 0, 2, 3]), Path::new(vec![1, 2, 3, 4])]);
        assert!(matches!(
            run_execution(&inst, &bad, Policy::Mcp, 0, ExecConfig::default()),
            Err(SimError::InvalidPlan(_))
        ));
        assert!(run_execution(&inst, &bad, Policy::Dummy, 0, ExecConfig::default()).is_ok());
    }

    fn two_on_line(n: usize, a: Vec<VertexId>, b: Vec<VertexId>) -> (Instance, Plan) {
        let edges: Vec<_> = (1..n).map(|v| (v - 1, v)).collect();
        let g = Graph::from_edges(n, &edges).unwrap();
        let inst = Instance::new(
            g,
            vec![
                AgentSpec { id: 0, start: a[0], goal: *a.last().unwrap(), delay_prob: 1e-9 },
                AgentSpec { id: 1, start: b[0], goal: *b.last().unwrap(), delay_prob: 1e-9 },
            ],
        )
        .unwrap();
        (inst, Plan::new(vec![Path::new(a), Path::new(b)]))
    }

    #[test]
    fn vertex_collision_detected() {
        let (inst, plan) = two_on_line(3, vec![0, 1, 2], vec![2, 1, 0]);
        let t = run_execution(&inst, &plan, Policy::Dummy, 0, ExecConfig::default()).unwrap();
        assert_eq!(t.collisions.len(), 1);
        assert_eq!(t.collisions[0].kind, CollisionKind::Vertex);
        assert_eq!(t.collisions[0].t, 1);
        assert_eq!(t.collisions[0].location, (1, 1));
    }

    #[test]
    fn edge_collision_detected() {
        let (inst, plan) = two_on_line(4, vec![0, 1, 2, 3], vec![3, 2, 1, 0]);
        let t = run_execution(&inst, &plan, Policy::Dummy, 0, ExecConfig::default()).unwrap();
        assert_eq!(t.collisions.len(), 1);
        assert_eq!(t.collisions[0].kind, CollisionKind::Edge);
        assert_eq!(t.collisions[0].t, 2);
        assert_eq!(t.collisions[0].agents, (0, 1));
        assert_eq!(t.collisions[0].location, (1, 2));
    }

    #[test]
    fn zero_latency_and_delayed_delivery() {
        let inst = pocket_instance([1e-9, 1e-9]);
        let cfg = ExecConfig { message_latency: 2, ..ExecConfig::default() };
        let t = run_execution(&inst, &pocket_plan(), Policy::Fsp, 0, cfg).unwrap();
        assert_eq!(t.outcome, ExecOutcome::Completed);
        assert!(t.makespan.unwrap() > 5);
    }

    #[test]
    fn horizon_cap_times_out() {
        let inst = pocket_instance([0.99, 0.99]);
        let cfg = ExecConfig { horizon_cap: Some(3), ..ExecConfig::default() };
        let t = run_execution(&inst, &pocket_plan(), Policy::Fsp, 0, cfg).unwrap();
        assert_eq!(t.outcome, ExecOutcome::Timeout);
        assert_eq!(t.makespan, None);
    }

    #[test]
    fn trace_dump_lines() {
        let inst = pocket_instance([1e-9, 1e-9]);
        let cfg = ExecConfig { record_trace: true, ..ExecConfig::default() };
        let t = run_execution(&inst, &pocket_plan(), Policy::Mcp, 0, cfg).unwrap();
        let dump = t.dump(&pocket_plan());
        assert_eq!(dump.lines().count(), 1 + 2 * t.snapshots.len());
        assert!(dump.lines().nth(1).unwrap().starts_with("0,0,0,2,GO"));
    }

    #[test]
    fn same_seed_same_trace() {
        let inst = pocket_instance([0.5, 0.5]);
        let a = run_execution(&inst, &pocket_plan(), Policy::Mcp, 9, ExecConfig::default()).unwrap();
        let b = run_execution(&inst, &pocket_plan(), Policy::Mcp, 9, ExecConfig::default()).unwrap();
        assert_eq!(a, b);
    }
}
