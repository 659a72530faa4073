//! Map, agents and plan files.
//!
//! Agents files hold one line per agent, `id,start_x,start_y,goal_x,goal_y,delay_prob`,
//! with grid coordinates. Lines starting with `#` and a leading header line are
//! skipped. Plan files are JSON.

use std::fs;
use std::path::{Path as FsPath, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dependency::{build_partial_order, transitive_reduction, DependencyError, MessageSchedule};
use crate::model::{parse_map, serialize_map, AgentSpec, Graph, Instance, ModelError, Path, Plan};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("plan file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("plan was computed for instance {expected}, not {found}")]
    ChecksumMismatch { expected: String, found: String },
    #[error(transparent)]
    Dependency(#[from] DependencyError),
}

fn read(path: &FsPath) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::File { path: path.to_path_buf(), source })
}

fn write(path: &FsPath, text: &str) -> Result<(), IoError> {
    fs::write(path, text).map_err(|source| IoError::File { path: path.to_path_buf(), source })
}

/// Shortest representation that reads back to the same value, padded with
/// zeros to at least six significant digits.
pub fn format_probability(p: f64) -> String {
    let s = format!("{p}");
    let significant = s.trim_start_matches(['0', '.']).chars().filter(char::is_ascii_digit).count();
    if significant >= 6 {
        return s;
    }
    let mut out = if s.contains('.') { s } else { format!("{s}.") };
    out.extend(std::iter::repeat_n('0', 6 - significant));
    out
}

pub fn serialize_agents(instance: &Instance) -> Result<String, ModelError> {
    let grid = instance.graph().grid().ok_or(ModelError::NotAGrid)?;
    let mut out = String::new();
    for a in instance.agents() {
        let (sx, sy) = grid.cell_of(a.start);
        let (gx, gy) = grid.cell_of(a.goal);
        out.push_str(&format!("{},{},{},{},{},{}\n", a.id, sx, sy, gx, gy, format_probability(a.delay_prob)));
    }
    Ok(out)
}

pub fn parse_agents(text: &str, graph: &Graph) -> Result<Vec<AgentSpec>, ModelError> {
    let grid = graph.grid().ok_or(ModelError::NotAGrid)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut agents = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let err = |line: usize, reason: String| ModelError::AgentsSyntax { line, reason };
        let record = record.map_err(|e| err(k + 1, e.to_string()))?;
        let line = record.position().map_or(k + 1, |p| p.line() as usize);
        if agents.is_empty() && record.get(0).is_some_and(|f| f.parse::<usize>().is_err()) {
            continue;
        }
        if record.len() != 6 {
            return Err(err(line, format!("expected 6 fields, found {}", record.len())));
        }
        let int = |i: usize| record[i].parse::<usize>().map_err(|e| err(line, format!("field {}: {e}", i + 1)));
        let (id, sx, sy, gx, gy) = (int(0)?, int(1)?, int(2)?, int(3)?, int(4)?);
        let delay_prob = record[5].parse::<f64>().map_err(|e| err(line, format!("delay probability: {e}")))?;
        let cell = |x, y| {
            grid.vertex_at(x, y).ok_or_else(|| err(line, format!("cell ({x}, {y}) is blocked or outside the map")))
        };
        agents.push(AgentSpec { id, start: cell(sx, sy)?, goal: cell(gx, gy)?, delay_prob });
    }
    Ok(agents)
}

pub fn read_instance(map: &FsPath, agents: &FsPath) -> Result<Instance, IoError> {
    let graph = parse_map(&read(map)?)?;
    let specs = parse_agents(&read(agents)?, &graph)?;
    Ok(Instance::new(graph, specs)?)
}

pub fn write_instance(instance: &Instance, map: &FsPath, agents: &FsPath) -> Result<(), IoError> {
    write(map, &serialize_map(instance.graph())?)?;
    write(agents, &serialize_agents(instance)?)
}

/// Edge and message counts of a plan's dependency graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DependencySummary {
    pub edges: usize,
    pub inter_agent_edges: usize,
    pub reduced_edges: usize,
    pub reduced_inter_agent_edges: usize,
    pub mcp_messages: usize,
    pub fsp_messages: usize,
}

impl DependencySummary {
    pub fn for_plan(plan: &Plan) -> Result<Self, DependencyError> {
        let full = build_partial_order(plan)?;
        let reduced = transitive_reduction(&full)?;
        let schedule = MessageSchedule::for_plan(plan)?;
        let m = plan.num_agents();
        Ok(Self {
            edges: full.edges().len(),
            inter_agent_edges: full.num_inter_agent_edges(),
            reduced_edges: reduced.edges().len(),
            reduced_inter_agent_edges: reduced.num_inter_agent_edges(),
            mcp_messages: schedule.total_messages(),
            fsp_messages: m.saturating_sub(1) * plan.sum_last_index(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanFile {
    pub instance_checksum: String,
    pub solver: String,
    pub paths: Vec<Path>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dependencies: Option<DependencySummary>,
}

impl PlanFile {
    pub fn new(instance: &Instance, solver: &str, plan: &Plan) -> Self {
        Self {
            instance_checksum: instance.checksum(),
            solver: solver.to_string(),
            paths: plan.paths.clone(),
            dependencies: None,
        }
    }

    pub fn with_dependencies(mut self) -> Result<Self, DependencyError> {
        self.dependencies = Some(DependencySummary::for_plan(&Plan::new(self.paths.clone()))?);
        Ok(self)
    }

    /// The plan, after checking it was computed for `instance`.
    pub fn plan_for(&self, instance: &Instance) -> Result<Plan, IoError> {
        let found = instance.checksum();
        if found != self.instance_checksum {
            return Err(IoError::ChecksumMismatch { expected: self.instance_checksum.clone(), found });
        }
        Ok(Plan::new(self.paths.clone()))
    }

    pub fn to_json(&self) -> Result<String, IoError> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn read(path: &FsPath) -> Result<Self, IoError> {
        Ok(serde_json::from_str(&read(path)?)?)
    }

    pub fn write(&self, path: &FsPath) -> Result<(), IoError> {
        write(path, &self.to_json()?)
    }
}
