use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Instance, PlanError, VertexId};

const LABEL_EPS: f64 = 1e-9;

/// One agent's path `l(0..=X)` with optional approximate entry times per index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub vertices: Vec<VertexId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<f64>>,
}

impl Path {
    pub fn new(vertices: Vec<VertexId>) -> Self {
        Self { vertices, labels: None }
    }

    pub fn with_labels(vertices: Vec<VertexId>, labels: Vec<f64>) -> Self {
        Self { vertices, labels: Some(labels) }
    }

    /// Index of the last local state, `X`.
    pub fn last_index(&self) -> usize {
        self.vertices.len() - 1
    }

    /// Vertex at index `x`, repeating the final vertex past the end.
    pub fn padded(&self, x: usize) -> VertexId {
        self.vertices[x.min(self.vertices.len() - 1)]
    }

    pub fn is_wait(&self, x: usize) -> bool {
        self.vertices[x - 1] == self.vertices[x]
    }

    /// Label of the last local state, if labels are present.
    pub fn final_label(&self) -> Option<f64> {
        self.labels.as_ref().and_then(|l| l.last().copied())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub paths: Vec<Path>,
}

impl Plan {
    pub fn new(paths: Vec<Path>) -> Self {
        Self { paths }
    }

    pub fn num_agents(&self) -> usize {
        self.paths.len()
    }

    /// `max_i X_i`.
    pub fn max_last_index(&self) -> usize {
        self.paths.iter().map(Path::last_index).max().unwrap_or(0)
    }

    /// `sum_i X_i`.
    pub fn sum_last_index(&self) -> usize {
        self.paths.iter().map(Path::last_index).sum()
    }

    pub fn without_labels(&self) -> Self {
        Self { paths: self.paths.iter().map(|p| Path::new(p.vertices.clone())).collect() }
    }

    /// Digest of the vertex sequences; labels are ignored.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for p in &self.paths {
            h.update((p.vertices.len() as u64).to_le_bytes());
            for &v in &p.vertices {
                h.update((v as u64).to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }

    /// Checks path shape against the instance: endpoints, adjacency of
    /// consecutive vertices, and label monotonicity when labels are present.
    pub fn check_well_formed(&self, instance: &Instance) -> Result<(), PlanError> {
        let agents = instance.agents();
        if self.paths.len() != agents.len() {
            return Err(PlanError::AgentCount { expected: agents.len(), found: self.paths.len() });
        }
        let graph = instance.graph();
        for (agent, (path, spec)) in self.paths.iter().zip(agents).enumerate() {
            let vs = &path.vertices;
            let (Some(&first), Some(&last)) = (vs.first(), vs.last()) else {
                return Err(PlanError::EmptyPath { agent });
            };
            if let Some(&vertex) = vs.iter().find(|&&v| !graph.contains(v)) {
                return Err(PlanError::UnknownVertex { agent, vertex });
            }
            if first != spec.start {
                return Err(PlanError::WrongStart { agent, expected: spec.start, found: first });
            }
            if last != spec.goal {
                return Err(PlanError::WrongGoal { agent, expected: spec.goal, found: last });
            }
            for (index, w) in vs.windows(2).enumerate() {
                if w[0] != w[1] && !graph.is_adjacent(w[0], w[1]) {
                    return Err(PlanError::NotAdjacent { agent, index: index + 1, from: w[0], to: w[1] });
                }
            }
            if let Some(labels) = &path.labels {
                let bad = |reason: String| PlanError::BadLabels { agent, reason };
                if labels.len() != vs.len() {
                    return Err(bad(format!("{} labels for {} states", labels.len(), vs.len())));
                }
                if labels[0].abs() > LABEL_EPS {
                    return Err(bad(format!("first label is {}", labels[0])));
                }
                if let Some(x) = labels.windows(2).position(|w| w[1] - w[0] < 1.0 - LABEL_EPS) {
                    return Err(bad(format!("label increases by less than 1 at index {}", x + 1)));
                }
            }
        }
        Ok(())
    }
}
