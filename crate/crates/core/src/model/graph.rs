use std::collections::VecDeque;
use std::fmt::Write as _;

use super::{ModelError, VertexId};

/// Hop distance reported for vertices that cannot reach the goal.
pub const UNREACHABLE: usize = usize::MAX;

/// Cell layout retained when a graph is built from an ASCII grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridMeta {
    pub width: usize,
    pub height: usize,
    blocked: Vec<bool>,
    cell_vertex: Vec<Option<VertexId>>,
    vertex_cell: Vec<(usize, usize)>,
}

impl GridMeta {
    pub fn is_blocked(&self, x: usize, y: usize) -> bool {
        self.blocked[y * self.width + x]
    }

    pub fn blocked_mask(&self) -> &[bool] {
        &self.blocked
    }

    /// Vertex at column `x`, row `y`, if the cell is free.
    pub fn vertex_at(&self, x: usize, y: usize) -> Option<VertexId> {
        if x >= self.width || y >= self.height {
            return None;
        }
        self.cell_vertex[y * self.width + x]
    }

    /// `(x, y)` coordinates of a vertex.
    pub fn cell_of(&self, v: VertexId) -> (usize, usize) {
        self.vertex_cell[v]
    }
}

/// Undirected, unweighted graph with dense vertex ids and sorted adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<VertexId>>,
    grid: Option<GridMeta>,
}

impl Graph {
    /// Builds a graph from an undirected edge list. Duplicate edges are merged;
    /// self-loops and out-of-range endpoints are rejected.
    pub fn from_edges(num_vertices: usize, edges: &[(VertexId, VertexId)]) -> Result<Self, ModelError> {
        let mut adjacency = vec![Vec::new(); num_vertices];
        for &(u, v) in edges {
            if u >= num_vertices || v >= num_vertices {
                return Err(ModelError::InvalidGraph(format!("edge ({u}, {v}) out of range")));
            }
            if u == v {
                return Err(ModelError::InvalidGraph(format!("self-loop at {u}")));
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Self { adjacency, grid: None })
    }

    /// Builds the 4-neighbor graph over the free cells of a `width x height` grid.
    /// Vertex ids are assigned row-major over free cells.
    pub fn from_grid(width: usize, height: usize, blocked: Vec<bool>) -> Result<Self, ModelError> {
        if blocked.len() != width * height {
            return Err(ModelError::InvalidGraph(format!(
                "blocked mask has {} cells, expected {}",
                blocked.len(),
                width * height
            )));
        }
        let mut cell_vertex = vec![None; width * height];
        let mut vertex_cell = Vec::new();
        for y in 0..height {
            for x in 0..width {
                if !blocked[y * width + x] {
                    cell_vertex[y * width + x] = Some(vertex_cell.len());
                    vertex_cell.push((x, y));
                }
            }
        }
        if vertex_cell.is_empty() {
            return Err(ModelError::NoFreeCells);
        }
        let mut adjacency = vec![Vec::new(); vertex_cell.len()];
        for (v, &(x, y)) in vertex_cell.iter().enumerate() {
            // neighbors in ascending id order: up, left, right, down
            let candidates = [
                (y > 0).then(|| (x, y - 1)),
                (x > 0).then(|| (x - 1, y)),
                (x + 1 < width).then(|| (x + 1, y)),
                (y + 1 < height).then(|| (x, y + 1)),
            ];
            for (cx, cy) in candidates.into_iter().flatten() {
                if let Some(u) = cell_vertex[cy * width + cx] {
                    adjacency[v].push(u);
                }
            }
        }
        Ok(Self { adjacency, grid: Some(GridMeta { width, height, blocked, cell_vertex, vertex_cell }) })
    }

    pub fn num_vertices(&self) -> usize {
        self.adjacency.len()
    }

    pub fn num_edges(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        &self.adjacency[v]
    }

    pub fn contains(&self, v: VertexId) -> bool {
        v < self.adjacency.len()
    }

    pub fn is_adjacent(&self, u: VertexId, v: VertexId) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }

    pub fn grid(&self) -> Option<&GridMeta> {
        self.grid.as_ref()
    }

    /// Connected-component label for every vertex; labels are assigned in
    /// ascending order of each component's smallest vertex.
    pub fn components(&self) -> Vec<usize> {
        let mut label = vec![usize::MAX; self.num_vertices()];
        let mut next = 0;
        let mut queue = VecDeque::new();
        for root in 0..self.num_vertices() {
            if label[root] != usize::MAX {
                continue;
            }
            label[root] = next;
            queue.push_back(root);
            while let Some(u) = queue.pop_front() {
                for &w in &self.adjacency[u] {
                    if label[w] == usize::MAX {
                        label[w] = next;
                        queue.push_back(w);
                    }
                }
            }
            next += 1;
        }
        label
    }
}

/// BFS hop distance from every vertex to `goal`.
pub fn shortest_path_distances(graph: &Graph, goal: VertexId) -> Vec<usize> {
    let mut dist = vec![UNREACHABLE; graph.num_vertices()];
    let mut queue = VecDeque::new();
    dist[goal] = 0;
    queue.push_back(goal);
    while let Some(u) = queue.pop_front() {
        for &w in graph.neighbors(u) {
            if dist[w] == UNREACHABLE {
                dist[w] = dist[u] + 1;
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Parses an ASCII grid map. `.` is free, `@` and `T` are blocked.
///
/// An optional `WIDTH HEIGHT` first line is auto-detected, as is the
/// `type/height/width/map` header used by the common benchmark sets.
pub fn parse_map(text: &str) -> Result<Graph, ModelError> {
    let lines: Vec<&str> = text.lines().map(|l| l.trim_end_matches('\r')).collect();
    let mut start = 0;
    while start < lines.len() && lines[start].trim().is_empty() {
        start += 1;
    }
    if start == lines.len() {
        return Err(ModelError::EmptyMap);
    }

    let mut declared: Option<(usize, usize)> = None;
    let first = lines[start].trim();
    if first.starts_with("type") {
        let (mut w, mut h) = (None, None);
        start += 1;
        loop {
            let line = lines
                .get(start)
                .map(|l| l.trim())
                .ok_or_else(|| ModelError::BadHeader("missing `map` line".to_string()))?;
            start += 1;
            let mut parts = line.split_whitespace();
            match (parts.next(), parts.next()) {
                (Some("map"), None) => break,
                (Some("height"), Some(n)) => h = n.parse().ok(),
                (Some("width"), Some(n)) => w = n.parse().ok(),
                _ => return Err(ModelError::BadHeader(format!("unexpected line {line:?}"))),
            }
        }
        match (w, h) {
            (Some(w), Some(h)) => declared = Some((w, h)),
            _ => return Err(ModelError::BadHeader("width/height missing".to_string())),
        }
    } else {
        let parts: Vec<&str> = first.split_whitespace().collect();
        if parts.len() == 2 {
            if let (Ok(w), Ok(h)) = (parts[0].parse(), parts[1].parse()) {
                declared = Some((w, h));
                start += 1;
            }
        }
    }

    let mut rows: Vec<&str> = lines[start..].to_vec();
    while rows.last().is_some_and(|r| r.trim().is_empty()) {
        rows.pop();
    }
    if rows.is_empty() {
        return Err(ModelError::EmptyMap);
    }
    let width = rows[0].chars().count();
    let height = rows.len();
    let mut blocked = Vec::with_capacity(width * height);
    for (row, line) in rows.iter().enumerate() {
        let found = line.chars().count();
        if found != width {
            return Err(ModelError::RaggedRow { row, expected: width, found });
        }
        for (col, ch) in line.chars().enumerate() {
            blocked.push(match ch {
                '.' => false,
                '@' | 'T' => true,
                _ => return Err(ModelError::UnknownCell { row, col, ch }),
            });
        }
    }
    if let Some((w, h)) = declared {
        if (w, h) != (width, height) {
            return Err(ModelError::DimensionMismatch {
                declared: format!("{w}x{h}"),
                found: format!("{width}x{height}"),
            });
        }
    }
    Graph::from_grid(width, height, blocked)
}

/// Writes a grid graph back as `WIDTH HEIGHT` followed by the rows.
pub fn serialize_map(graph: &Graph) -> Result<String, ModelError> {
    let grid = graph.grid().ok_or(ModelError::NotAGrid)?;
    let mut out = String::with_capacity((grid.width + 1) * (grid.height + 1));
    let _ = writeln!(out, "{} {}", grid.width, grid.height);
    for y in 0..grid.height {
        for x in 0..grid.width {
            out.push(if grid.is_blocked(x, y) { '@' } else { '.' });
        }
        out.push('\n');
    }
    Ok(out)
}
