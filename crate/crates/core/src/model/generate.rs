use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{AgentSpec, Graph, Instance, ModelError, VertexId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomInstanceParams {
    pub width: usize,
    pub height: usize,
    pub blocked_fraction: f64,
    pub agents: usize,
    /// Delay probability range `(lo, hi)`.
    pub p_range: (f64, f64),
}

impl Default for RandomInstanceParams {
    fn default() -> Self {
        Self { width: 20, height: 20, blocked_fraction: 0.1, agents: 10, p_range: (0.0, 0.5) }
    }
}

/// Shelf-block warehouse layout: a grid of `block_rows x block_cols` blocked
/// rectangles separated by aisles, flanked by open side corridors where agents
/// start and end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarehouseParams {
    pub block_rows: usize,
    pub block_cols: usize,
    pub block_width: usize,
    pub block_height: usize,
    pub aisle_width: usize,
    pub side_width: usize,
    pub agents: usize,
    pub p_range: (f64, f64),
}

impl Default for WarehouseParams {
    fn default() -> Self {
        Self {
            block_rows: 4,
            block_cols: 3,
            block_width: 6,
            block_height: 2,
            aisle_width: 1,
            side_width: 3,
            agents: 35,
            p_range: (0.0, 0.5),
        }
    }
}

impl WarehouseParams {
    pub fn width(&self) -> usize {
        2 * self.side_width + self.block_cols * self.block_width + (self.block_cols + 1) * self.aisle_width
    }

    pub fn height(&self) -> usize {
        self.block_rows * self.block_height + (self.block_rows + 1) * self.aisle_width
    }
}

/// Maps uniform draws `u in (0, 1)` to delay probabilities by sampling the
/// expected move duration `t = 1/(1-p)` uniformly between `1/(1-lo)` and
/// `1/(1-hi)`, then setting `p = 1 - 1/t`.
pub fn delay_probs_from_uniforms(uniforms: &[f64], p_range: (f64, f64)) -> Vec<f64> {
    let t_min = 1.0 / (1.0 - p_range.0);
    let t_max = 1.0 / (1.0 - p_range.1);
    uniforms
        .iter()
        .map(|&u| {
            let t = t_min + u * (t_max - t_min);
            1.0 - 1.0 / t
        })
        .collect()
}

fn check_p_range((lo, hi): (f64, f64)) -> Result<(), ModelError> {
    if !(0.0 <= lo && lo < hi && hi < 1.0) {
        return Err(ModelError::Infeasible(format!(
            "delay probability range ({lo}, {hi}) must satisfy 0 <= lo < hi < 1"
        )));
    }
    Ok(())
}

fn open_unit(rng: &mut impl Rng) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

fn build(
    graph: Graph,
    ends: Vec<(VertexId, VertexId)>,
    uniforms: &[f64],
    p_range: (f64, f64),
) -> Result<Instance, ModelError> {
    let probs = delay_probs_from_uniforms(uniforms, p_range);
    let agents = ends
        .into_iter()
        .zip(probs)
        .enumerate()
        .map(|(id, ((start, goal), delay_prob))| AgentSpec { id, start, goal, delay_prob })
        .collect();
    Instance::new(graph, agents)
}

/// Random grid instance. The draw order (blocked cells, endpoints, delay
/// uniforms) does not depend on `p_range`, so the same seed with different
/// ranges yields the same layout and endpoints.
pub fn generate_random_instance(params: &RandomInstanceParams, seed: u64) -> Result<Instance, ModelError> {
    check_p_range(params.p_range)?;
    let cells = params.width * params.height;
    if cells == 0 {
        return Err(ModelError::Infeasible("empty grid".to_string()));
    }
    if !(0.0..1.0).contains(&params.blocked_fraction) {
        return Err(ModelError::Infeasible(format!("blocked fraction {}", params.blocked_fraction)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_blocked = (params.blocked_fraction * cells as f64).round() as usize;
    let mut blocked = vec![false; cells];
    for c in index::sample(&mut rng, cells, n_blocked) {
        blocked[c] = true;
    }
    let graph = Graph::from_grid(params.width, params.height, blocked)?;

    let comp = graph.components();
    let n_comp = comp.iter().max().map_or(0, |&c| c + 1);
    let mut sizes = vec![0usize; n_comp];
    for &c in &comp {
        sizes[c] += 1;
    }
    // ties go to the component with the smaller label
    let largest = (0..n_comp).max_by_key(|&c| (sizes[c], std::cmp::Reverse(c))).unwrap_or(0);
    let pool: Vec<VertexId> = (0..graph.num_vertices()).filter(|&v| comp[v] == largest).collect();
    let m = params.agents;
    if 2 * m > pool.len() {
        return Err(ModelError::Infeasible(format!(
            "{m} agents need {} distinct cells, largest component has {}",
            2 * m,
            pool.len()
        )));
    }
    let picks: Vec<VertexId> = index::sample(&mut rng, pool.len(), 2 * m).into_iter().map(|i| pool[i]).collect();
    let ends = (0..m).map(|a| (picks[a], picks[m + a])).collect();
    let uniforms: Vec<f64> = (0..m).map(|_| open_unit(&mut rng)).collect();
    build(graph, ends, &uniforms, params.p_range)
}

/// Warehouse instance: each agent crosses from one side corridor to the other,
/// direction chosen per agent.
pub fn generate_warehouse_instance(params: &WarehouseParams, seed: u64) -> Result<Instance, ModelError> {
    check_p_range(params.p_range)?;
    let (w, h) = (params.width(), params.height());
    if params.side_width == 0 || h == 0 {
        return Err(ModelError::Infeasible("warehouse needs side corridors and nonzero height".to_string()));
    }
    let mut blocked = vec![false; w * h];
    for br in 0..params.block_rows {
        for bc in 0..params.block_cols {
            let y0 = params.aisle_width + br * (params.block_height + params.aisle_width);
            let x0 = params.side_width + params.aisle_width + bc * (params.block_width + params.aisle_width);
            for y in y0..y0 + params.block_height {
                for x in x0..x0 + params.block_width {
                    blocked[y * w + x] = true;
                }
            }
        }
    }
    let graph = Graph::from_grid(w, h, blocked)?;
    let grid = graph.grid().expect("grid graph");
    let side_cells = |x_range: std::ops::Range<usize>| -> Vec<VertexId> {
        (0..h).flat_map(|y| x_range.clone().map(move |x| (x, y))).filter_map(|(x, y)| grid.vertex_at(x, y)).collect()
    };
    let mut left = side_cells(0..params.side_width);
    let mut right = side_cells(w - params.side_width..w);
    let m = params.agents;
    if m > left.len() || m > right.len() {
        return Err(ModelError::Infeasible(format!(
            "{m} agents but only {} side cells per side",
            left.len().min(right.len())
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    left.shuffle(&mut rng);
    right.shuffle(&mut rng);
    let ends = (0..m).map(|a| if rng.random::<bool>() { (left[a], right[a]) } else { (right[a], left[a]) }).collect();
    let uniforms: Vec<f64> = (0..m).map(|_| open_unit(&mut rng)).collect();
    build(graph, ends, &uniforms, params.p_range)
}
