use sha2::{Digest, Sha256};

use super::{AgentId, Graph, ModelError, VertexId};

#[derive(Debug, Clone, PartialEq)]
pub struct AgentSpec {
    pub id: AgentId,
    pub start: VertexId,
    pub goal: VertexId,
    /// Probability that a move action fails and the agent stays put.
    pub delay_prob: f64,
}

impl AgentSpec {
    /// Expected number of time steps needed to complete one move action.
    pub fn move_cost(&self) -> f64 {
        1.0 / (1.0 - self.delay_prob)
    }
}

/// A graph plus agents with unique starts, unique goals and delay probabilities in (0, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    graph: Graph,
    agents: Vec<AgentSpec>,
}

impl Instance {
    pub fn new(graph: Graph, agents: Vec<AgentSpec>) -> Result<Self, ModelError> {
        let n = graph.num_vertices();
        for (idx, a) in agents.iter().enumerate() {
            let bad = |reason: String| ModelError::InvalidAgent { agent: idx, reason };
            if a.id != idx {
                return Err(bad(format!("id {} does not match position {idx}", a.id)));
            }
            if !(a.delay_prob > 0.0 && a.delay_prob < 1.0) {
                return Err(bad(format!("delay probability {} outside (0, 1)", a.delay_prob)));
            }
            if a.start >= n || a.goal >= n {
                return Err(bad("start or goal is not a vertex".to_string()));
            }
        }
        let mut start_owner = vec![None; n];
        let mut goal_owner = vec![None; n];
        for a in &agents {
            if let Some(first) = start_owner[a.start].replace(a.id) {
                return Err(ModelError::DuplicateEndpoint { first, second: a.id, what: "start", vertex: a.start });
            }
            if let Some(first) = goal_owner[a.goal].replace(a.id) {
                return Err(ModelError::DuplicateEndpoint { first, second: a.id, what: "goal", vertex: a.goal });
            }
        }
        let comp = graph.components();
        for a in &agents {
            if comp[a.start] != comp[a.goal] {
                return Err(ModelError::InvalidAgent {
                    agent: a.id,
                    reason: "start and goal lie in different components".to_string(),
                });
            }
        }
        Ok(Self { graph, agents })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn agents(&self) -> &[AgentSpec] {
        &self.agents
    }

    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn delay_probs(&self) -> Vec<f64> {
        self.agents.iter().map(|a| a.delay_prob).collect()
    }

    /// Same graph and endpoints with replaced delay probabilities.
    pub fn with_delay_probs(&self, probs: &[f64]) -> Result<Self, ModelError> {
        if probs.len() != self.agents.len() {
            return Err(ModelError::Infeasible(format!(
                "{} delay probabilities for {} agents",
                probs.len(),
                self.agents.len()
            )));
        }
        let agents = self.agents.iter().zip(probs).map(|(a, &p)| AgentSpec { delay_prob: p, ..a.clone() }).collect();
        Self::new(self.graph.clone(), agents)
    }

    /// SHA-256 over a canonical encoding of the adjacency lists and agents.
    /// Delay probabilities enter through their exact bit patterns.
    pub fn checksum(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.graph.num_vertices() as u64).to_le_bytes());
        for v in 0..self.graph.num_vertices() {
            let nb = self.graph.neighbors(v);
            h.update((nb.len() as u64).to_le_bytes());
            for &w in nb {
                h.update((w as u64).to_le_bytes());
            }
        }
        h.update((self.agents.len() as u64).to_le_bytes());
        for a in &self.agents {
            h.update((a.start as u64).to_le_bytes());
            h.update((a.goal as u64).to_le_bytes());
            h.update(a.delay_prob.to_bits().to_le_bytes());
        }
        hex::encode(h.finalize())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corridor() -> Graph {
        Graph::from_edges(5, &[(1, 2), (2, 3), (3, 4), (0, 2)]).unwrap()
    }

    fn agent(id: usize, start: usize, goal: usize, p: f64) -> AgentSpec {
        AgentSpec { id, start, goal, delay_prob: p }
    }

    #[test]
    fn accepts_well_formed() {
        let inst = Instance::new(corridor(), vec![agent(0, 2, 3, 0.5), agent(1, 1, 4, 0.5)]).unwrap();
        assert_eq!(inst.num_agents(), 2);
        assert!((inst.agents()[0].move_cost() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_probability() {
        for p in [0.0, 1.0, -0.1, f64::NAN] {
            assert!(Instance::new(corridor(), vec![agent(0, 2, 3, p)]).is_err());
        }
    }

    #[test]
    fn rejects_shared_endpoints() {
        let err = Instance::new(corridor(), vec![agent(0, 2, 3, 0.5), agent(1, 2, 4, 0.5)]).unwrap_err();
        assert!(matches!(err, ModelError::DuplicateEndpoint { what: "start", .. }));
        let err = Instance::new(corridor(), vec![agent(0, 2, 3, 0.5), agent(1, 1, 3, 0.5)]).unwrap_err();
        assert!(matches!(err, ModelError::DuplicateEndpoint { what: "goal", .. }));
    }

    #[test]
    fn rejects_disconnected_goal() {
        let g = Graph::from_edges(3, &[(0, 1)]).unwrap();
        assert!(Instance::new(g, vec![agent(0, 0, 2, 0.5)]).is_err());
    }

    #[test]
    fn checksum_tracks_probabilities() {
        let a = Instance::new(corridor(), vec![agent(0, 2, 3, 0.5)]).unwrap();
        let b = a.with_delay_probs(&[0.25]).unwrap();
        assert_ne!(a.checksum(), b.checksum());
        assert_eq!(a.checksum(), a.clone().checksum());
    }
}
