//! Experiment harness: generates instance sets, solves them, simulates the
//! plans under the requested policies and tabulates the results.

mod report;

pub use report::{BenchReport, BenchRow, SuccessRate, CSV_COLUMNS};

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::info;

use crate::ame::{solve, AmeOptions, SearchLimits, Solver};
use crate::model::{
    generate_random_instance, generate_warehouse_instance, validate_plan, Instance, ModelError, RandomInstanceParams,
    WarehouseParams,
};
use crate::sim::{monte_carlo, ExecConfig, Policy, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    /// Both solvers on random and warehouse instances, executed with MCP.
    Exp1,
    /// One layout under a sweep of delay ranges.
    Exp2,
    /// Random instances for a sweep of agent counts.
    Exp3,
    /// One solver, all execution policies.
    Exp4,
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Experiment::Exp1 => "exp1",
            Experiment::Exp2 => "exp2",
            Experiment::Exp3 => "exp3",
            Experiment::Exp4 => "exp4",
        };
        f.write_str(s)
    }
}

impl FromStr for Experiment {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "exp1" | "1" => Ok(Experiment::Exp1),
            "exp2" | "2" => Ok(Experiment::Exp2),
            "exp3" | "3" => Ok(Experiment::Exp3),
            "exp4" | "4" => Ok(Experiment::Exp4),
            _ => Err(BenchError::Config(format!("unknown experiment {s:?}"))),
        }
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("bench config: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{solver} returned an invalid plan for {instance}: {detail}")]
    InvalidPlan { solver: Solver, instance: String, detail: String },
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub experiment: Experiment,
    /// Random instances per agent count.
    pub instances: usize,
    /// Warehouse instances (first agent count only).
    pub warehouse_instances: usize,
    pub width: usize,
    pub height: usize,
    pub blocked_fraction: f64,
    pub agent_counts: Vec<usize>,
    /// Upper ends of the expected move duration range; delay probabilities
    /// come from `(0, 1 - 1/t_max)`.
    pub t_max: Vec<f64>,
    pub solvers: Vec<Solver>,
    pub policies: Vec<Policy>,
    pub n_runs: usize,
    pub seed: u64,
    pub time_limit_secs: f64,
    pub high_level_expansions: usize,
    pub low_level_expansions: usize,
    pub recompute_labels: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self::preset(Experiment::Exp1)
    }
}

impl BenchConfig {
    pub fn preset(experiment: Experiment) -> Self {
        let base = Self {
            experiment,
            instances: 10,
            warehouse_instances: 0,
            width: 20,
            height: 20,
            blocked_fraction: 0.1,
            agent_counts: vec![10],
            t_max: vec![2.0],
            solvers: vec![Solver::Ame],
            policies: vec![Policy::Mcp],
            n_runs: 200,
            seed: 1,
            time_limit_secs: 60.0,
            high_level_expansions: 20_000,
            low_level_expansions: 200_000,
            recompute_labels: false,
        };
        match experiment {
            Experiment::Exp1 => Self { warehouse_instances: 10, solvers: Solver::ALL.to_vec(), ..base },
            Experiment::Exp2 => Self { instances: 1, t_max: vec![2.0, 4.0, 8.0], ..base },
            Experiment::Exp3 => Self { agent_counts: vec![5, 10, 15, 20], ..base },
            Experiment::Exp4 => Self { warehouse_instances: 10, policies: Policy::ALL.to_vec(), ..base },
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |s: &str| Err(BenchError::Config(s.to_string()));
        if self.solvers.is_empty() {
            return bad("solver set is empty");
        }
        if self.policies.is_empty() {
            return bad("policy set is empty");
        }
        if self.instances + self.warehouse_instances == 0 || self.n_runs == 0 || self.agent_counts.is_empty() {
            return bad("instance, run and agent counts must be positive");
        }
        if self.agent_counts.contains(&0) || self.width == 0 || self.height == 0 {
            return bad("grid size and agent counts must be positive");
        }
        if self.t_max.is_empty() || self.t_max.iter().any(|&t| !(t > 1.0 && t.is_finite())) {
            return bad("t_max values must be finite and greater than 1");
        }
        if !(0.0..1.0).contains(&self.blocked_fraction) {
            return bad("blocked_fraction must lie in [0, 1)");
        }
        if self.time_limit_secs.is_nan()
            || self.time_limit_secs <= 0.0
            || self.high_level_expansions == 0
            || self.low_level_expansions == 0
        {
            return bad("solver limits must be positive");
        }
        Ok(())
    }

    pub fn limits(&self) -> SearchLimits {
        SearchLimits {
            time: Some(Duration::from_secs_f64(self.time_limit_secs)),
            high_level_expansions: self.high_level_expansions,
            low_level_expansions: self.low_level_expansions,
            ..SearchLimits::default()
        }
    }
}

/// One generated instance with its table label.
#[derive(Debug, Clone)]
pub struct BenchInstance {
    pub label: String,
    pub agents: usize,
    pub t_max: f64,
    pub instance: Instance,
}

const WAREHOUSE_GROUP: usize = 0xFFFF;

fn p_range(t_max: f64) -> (f64, f64) {
    (0.0, 1.0 - 1.0 / t_max)
}

/// Instance seeds depend only on the master seed, the agent-count position
/// and the instance position, so sweeps over `t_max` share layouts.
fn instance_seed(master: u64, group: usize, k: usize) -> u64 {
    master.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(((group as u64) << 32) | k as u64)
}

pub fn generate_instances(config: &BenchConfig) -> Result<Vec<BenchInstance>, BenchError> {
    config.validate()?;
    let mut out = Vec::new();
    for (g, &agents) in config.agent_counts.iter().enumerate() {
        for &t_max in &config.t_max {
            for k in 0..config.instances {
                let params = RandomInstanceParams {
                    width: config.width,
                    height: config.height,
                    blocked_fraction: config.blocked_fraction,
                    agents,
                    p_range: p_range(t_max),
                };
                let instance = generate_random_instance(&params, instance_seed(config.seed, g, k))?;
                out.push(BenchInstance { label: format!("random-{}", k + 1), agents, t_max, instance });
            }
            if g == 0 {
                for k in 0..config.warehouse_instances {
                    let params = WarehouseParams { agents, p_range: p_range(t_max), ..WarehouseParams::default() };
                    let instance =
                        generate_warehouse_instance(&params, instance_seed(config.seed, WAREHOUSE_GROUP, k))?;
                    out.push(BenchInstance { label: format!("warehouse-{}", k + 1), agents, t_max, instance });
                }
            }
        }
    }
    Ok(out)
}

/// Solves every instance with every solver, re-validates each plan and
/// simulates it under every policy. Rows come out in instance, solver,
/// policy order regardless of parallel scheduling.
pub fn run_bench(config: &BenchConfig) -> Result<BenchReport, BenchError> {
    let instances = generate_instances(config)?;
    let limits = config.limits();
    let options = AmeOptions { recompute_labels: config.recompute_labels };
    let jobs: Vec<(usize, Solver)> =
        (0..instances.len()).flat_map(|i| config.solvers.iter().map(move |&s| (i, s))).collect();
    let results: Vec<Result<Vec<BenchRow>, BenchError>> = jobs
        .par_iter()
        .map(|&(i, solver)| {
            let bi = &instances[i];
            let report = solve(&bi.instance, solver, &limits, options);
            info!(instance = %bi.label, %solver, outcome = report.outcome.name(), "solved");
            let base = BenchRow::unsolved(config.experiment, bi, &report);
            let Some(plan) = &report.plan else {
                return Ok(vec![base]);
            };
            let validation = validate_plan(&bi.instance, plan).map_err(|e| BenchError::InvalidPlan {
                solver,
                instance: bi.label.clone(),
                detail: e.to_string(),
            })?;
            if !validation.is_valid() {
                return Err(BenchError::InvalidPlan {
                    solver,
                    instance: bi.label.clone(),
                    detail: format!("{} conflicts", validation.conflicts.len()),
                });
            }
            let mut rows = Vec::new();
            for (k, &policy) in config.policies.iter().enumerate() {
                let sim_seed = config.seed.wrapping_add(i as u64).wrapping_mul(31).wrapping_add(k as u64);
                let stats = monte_carlo(&bi.instance, plan, policy, config.n_runs, sim_seed, ExecConfig::default())?;
                rows.push(base.clone().with_stats(&stats));
            }
            Ok(rows)
        })
        .collect();
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    Ok(BenchReport::new(config.clone(), rows))
}
