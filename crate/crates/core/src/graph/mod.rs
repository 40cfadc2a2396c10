//! Finite connected graphs: validation, BFS distances, geodesic sets and
//! midpoints, plus Cayley balls of a few finitely presented groups.

mod bridges;
mod cayley;
mod io;

use std::collections::VecDeque;
use std::sync::OnceLock;

use thiserror::Error;

pub use bridges::{BridgeStructure, EdgeComponent};
pub use cayley::{cayley_ball, translate, CayleyData, GroupKind, GroupSpec, Word, DEFAULT_VERTEX_CAP};
pub use io::{parse_graph, write_graph};

/// Dense vertex index.
pub type Vertex = usize;
/// Index into [`Graph::edges`].
pub type EdgeId = usize;

/// Above this many vertices distances are computed by per-query BFS.
pub const DEFAULT_MEMO_THRESHOLD: usize = 5000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("edge list is empty")]
    Empty,
    #[error("self-loop at vertex {0}")]
    SelfLoop(Vertex),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(Vertex, Vertex),
    #[error("graph is disconnected: vertex {0} is unreachable from vertex 0")]
    Disconnected(Vertex),
    #[error("vertex {vertex} out of range (graph has {count} vertices)")]
    InvalidVertex { vertex: Vertex, count: usize },
    #[error("vertices {0} and {1} are not adjacent")]
    NotAdjacent(Vertex, Vertex),
    #[error("malformed graph file: {0}")]
    Parse(String),
    #[error("ball exceeds the vertex cap of {cap}")]
    TooLarge { cap: usize },
    #[error("invalid group spec: {0}")]
    InvalidSpec(String),
    #[error("invalid word {0:?}")]
    InvalidWord(String),
    #[error("operation needs a Cayley ball")]
    NotCayley,
}

pub type Result<T, E = GraphError> = std::result::Result<T, E>;

/// Finite connected simple graph with a canonical edge orientation `(min, max)`.
///
/// Immutable once built. Lazily computed tables (all-pairs distances, bridge
/// structure) sit behind `OnceLock`, so a `Graph` can be shared across threads.
#[derive(Debug)]
pub struct Graph {
    adjacency: Vec<Vec<Vertex>>,
    // incident[v][i] is the edge id joining v and adjacency[v][i]
    incident: Vec<Vec<EdgeId>>,
    edges: Vec<(Vertex, Vertex)>,
    degree_bound: usize,
    cayley: Option<CayleyData>,
    memo_threshold: usize,
    distances: OnceLock<Option<Vec<u16>>>,
    bridges: OnceLock<BridgeStructure>,
}

impl Graph {
    /// Builds and validates a graph on vertices `0..vertex_count`.
    pub fn new(vertex_count: usize, edge_list: &[(Vertex, Vertex)]) -> Result<Self> {
        if vertex_count == 0 {
            return Err(GraphError::Empty);
        }
        let mut edges = Vec::with_capacity(edge_list.len());
        for &(u, v) in edge_list {
            for w in [u, v] {
                if w >= vertex_count {
                    return Err(GraphError::InvalidVertex { vertex: w, count: vertex_count });
                }
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            edges.push((u.min(v), u.max(v)));
        }
        edges.sort_unstable();
        if let Some(w) = edges.windows(2).find(|w| w[0] == w[1]) {
            return Err(GraphError::DuplicateEdge(w[0].0, w[0].1));
        }

        let mut adjacency = vec![Vec::new(); vertex_count];
        for (id, &(u, v)) in edges.iter().enumerate() {
            adjacency[u].push((v, id));
            adjacency[v].push((u, id));
        }
        let mut adj = Vec::with_capacity(vertex_count);
        let mut incident = Vec::with_capacity(vertex_count);
        for mut list in adjacency {
            list.sort_unstable();
            adj.push(list.iter().map(|&(w, _)| w).collect::<Vec<_>>());
            incident.push(list.iter().map(|&(_, e)| e).collect::<Vec<_>>());
        }
        let degree_bound = adj.iter().map(Vec::len).max().unwrap_or(0);

        let graph = Graph {
            adjacency: adj,
            incident,
            edges,
            degree_bound,
            cayley: None,
            memo_threshold: DEFAULT_MEMO_THRESHOLD,
            distances: OnceLock::new(),
            bridges: OnceLock::new(),
        };
        let reach = graph.bfs(0);
        if let Some(v) = reach.iter().position(|&d| d == u32::MAX) {
            return Err(GraphError::Disconnected(v));
        }
        Ok(graph)
    }

    /// Sets the vertex count up to which all-pairs distances are memoized.
    pub fn with_memo_threshold(mut self, threshold: usize) -> Self {
        self.memo_threshold = threshold;
        self.distances = OnceLock::new();
        self
    }

    pub(crate) fn with_cayley(mut self, data: CayleyData) -> Self {
        self.cayley = Some(data);
        self
    }

    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Canonical edges `(u, v)` with `u < v`, sorted lexicographically.
    pub fn edges(&self) -> &[(Vertex, Vertex)] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> (Vertex, Vertex) {
        self.edges[id]
    }

    pub fn neighbors(&self, v: Vertex) -> &[Vertex] {
        &self.adjacency[v]
    }

    /// Edge ids incident to `v`, aligned with [`Graph::neighbors`].
    pub fn incident_edges(&self, v: Vertex) -> &[EdgeId] {
        &self.incident[v]
    }

    pub fn degree_bound(&self) -> usize {
        self.degree_bound
    }

    pub fn is_tree(&self) -> bool {
        self.edges.len() + 1 == self.vertex_count()
    }

    /// Dimension of the cycle space, `m - n + 1`.
    pub fn cycle_rank(&self) -> usize {
        self.edges.len() + 1 - self.vertex_count()
    }

    pub fn cayley(&self) -> Option<&CayleyData> {
        self.cayley.as_ref()
    }

    /// Id of the edge joining `u` and `v`, if any.
    pub fn edge_between(&self, u: Vertex, v: Vertex) -> Option<EdgeId> {
        let adj = self.adjacency.get(u)?;
        adj.binary_search(&v).ok().map(|i| self.incident[u][i])
    }

    pub fn check_vertex(&self, v: Vertex) -> Result<()> {
        if v < self.vertex_count() {
            Ok(())
        } else {
            Err(GraphError::InvalidVertex { vertex: v, count: self.vertex_count() })
        }
    }

    /// BFS distances from `source`; `u32::MAX` marks unreachable vertices.
    pub fn bfs(&self, source: Vertex) -> Vec<u32> {
        self.bfs_multi(std::slice::from_ref(&source))
    }

    /// Distances to the nearest vertex of `sources`.
    pub fn bfs_multi(&self, sources: &[Vertex]) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.vertex_count()];
        let mut queue = VecDeque::with_capacity(self.vertex_count());
        for &s in sources {
            if dist[s] != 0 {
                dist[s] = 0;
                queue.push_back(s);
            }
        }
        while let Some(u) = queue.pop_front() {
            let next = dist[u] + 1;
            for &w in &self.adjacency[u] {
                if dist[w] == u32::MAX {
                    dist[w] = next;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    fn table(&self) -> Option<&Vec<u16>> {
        self.distances
            .get_or_init(|| {
                let n = self.vertex_count();
                if n > self.memo_threshold || n > u16::MAX as usize {
                    return None;
                }
                let mut table = vec![0u16; n * n];
                for (s, row) in table.chunks_mut(n).enumerate() {
                    for (slot, d) in row.iter_mut().zip(self.bfs(s)) {
                        *slot = d as u16;
                    }
                }
                Some(table)
            })
            .as_ref()
    }

    /// Whether all-pairs distances are held in memory.
    pub fn has_distance_table(&self) -> bool {
        self.table().is_some()
    }

    /// Graph distance; validates both vertex ids.
    pub fn distance(&self, x: Vertex, y: Vertex) -> Result<u32> {
        self.check_vertex(x)?;
        self.check_vertex(y)?;
        Ok(self.dist(x, y))
    }

    /// Unchecked graph distance. Panics on out-of-range ids.
    #[inline]
    pub fn dist(&self, x: Vertex, y: Vertex) -> u32 {
        match self.table() {
            Some(t) => t[x * self.vertex_count() + y] as u32,
            None => self.bfs(x)[y],
        }
    }

    /// Distances from `x` to every vertex.
    pub fn distances_from(&self, x: Vertex) -> Vec<u32> {
        match self.table() {
            Some(t) => {
                let n = self.vertex_count();
                t[x * n..(x + 1) * n].iter().map(|&d| d as u32).collect()
            }
            None => self.bfs(x),
        }
    }

    /// `η-géod(x, y)`: all `z` with `d(x,z) + d(z,y) <= d(x,y) + η`, ascending.
    pub fn eta_geodesic_set(&self, x: Vertex, y: Vertex, eta: f64) -> Vec<Vertex> {
        let dx = self.distances_from(x);
        let dy = self.distances_from(y);
        eta_set_from_rows(&dx, &dy, dx[y], eta)
    }

    /// The geodesic interval `géod(x, y)`.
    pub fn geodesic_set(&self, x: Vertex, y: Vertex) -> Vec<Vertex> {
        self.eta_geodesic_set(x, y, 0.0)
    }

    /// A vertex of `géod(x, y)` with `|d(x,z) - d(y,z)| <= 1`, smallest index first.
    pub fn midpoint(&self, x: Vertex, y: Vertex) -> Vertex {
        let dx = self.distances_from(x);
        let dy = self.distances_from(y);
        let total = dx[y];
        (0..self.vertex_count())
            .find(|&z| dx[z] + dy[z] == total && dx[z].abs_diff(dy[z]) <= 1)
            .expect("graph metrics are geodesic")
    }

    /// A shortest path from `x` to `y`, stepping to the smallest-index
    /// neighbour that gets strictly closer to `y`.
    pub fn geodesic_path(&self, x: Vertex, y: Vertex) -> Vec<Vertex> {
        let dy = self.distances_from(y);
        let mut path = Vec::with_capacity(dy[x] as usize + 1);
        let mut cur = x;
        path.push(cur);
        while cur != y {
            cur = *self.adjacency[cur]
                .iter()
                .find(|&&w| dy[w] + 1 == dy[cur])
                .expect("connected graph");
            path.push(cur);
        }
        path
    }

    /// Validates that consecutive vertices are adjacent.
    pub fn check_path(&self, path: &[Vertex]) -> Result<()> {
        for &v in path {
            self.check_vertex(v)?;
        }
        for w in path.windows(2) {
            if self.edge_between(w[0], w[1]).is_none() {
                return Err(GraphError::NotAdjacent(w[0], w[1]));
            }
        }
        Ok(())
    }

    /// Bridges and 2-edge-connected components, computed once.
    pub fn bridge_structure(&self) -> &BridgeStructure {
        self.bridges.get_or_init(|| BridgeStructure::compute(self))
    }
}

/// Builds a graph from an edge list; the vertex count is one past the largest id.
pub fn build_from_edges(edge_list: &[(Vertex, Vertex)]) -> Result<Graph> {
    let n = edge_list
        .iter()
        .map(|&(u, v)| u.max(v) + 1)
        .max()
        .ok_or(GraphError::Empty)?;
    Graph::new(n, edge_list)
}

pub(crate) fn eta_set_from_rows(dx: &[u32], dy: &[u32], dxy: u32, eta: f64) -> Vec<Vertex> {
    let bound = dxy as f64 + eta;
    (0..dx.len())
        .filter(|&z| (dx[z] + dy[z]) as f64 <= bound)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(n: usize) -> Graph {
        build_from_edges(&(0..n - 1).map(|i| (i, i + 1)).collect::<Vec<_>>()).unwrap()
    }

    fn cycle(n: usize) -> Graph {
        build_from_edges(&(0..n).map(|i| (i, (i + 1) % n)).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn path_graph_basics() {
        let g = build_from_edges(&[(0, 1), (1, 2)]).unwrap();
        assert_eq!(g.vertex_count(), 3);
        assert_eq!(g.distance(0, 2).unwrap(), 2);
        assert_eq!(g.edges(), &[(0, 1), (1, 2)]);
        assert!(g.is_tree());
        assert_eq!(g.degree_bound(), 2);
    }

    #[test]
    fn rejects_bad_edge_lists() {
        assert_eq!(build_from_edges(&[(0, 1), (1, 0)]).unwrap_err(), GraphError::DuplicateEdge(0, 1));
        assert_eq!(build_from_edges(&[(0, 1), (2, 3)]).unwrap_err(), GraphError::Disconnected(2));
        assert_eq!(build_from_edges(&[(0, 1), (1, 1)]).unwrap_err(), GraphError::SelfLoop(1));
        assert_eq!(build_from_edges(&[]).unwrap_err(), GraphError::Empty);
    }

    #[test]
    fn canonical_edges_sorted() {
        let g = build_from_edges(&[(3, 2), (0, 3), (1, 0), (2, 1)]).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (0, 3), (1, 2), (2, 3)]);
        for v in 0..4 {
            let adj = g.neighbors(v);
            assert!(adj.windows(2).all(|w| w[0] < w[1]));
            for (&w, &e) in adj.iter().zip(g.incident_edges(v)) {
                let (a, b) = g.edge(e);
                assert!((a, b) == (v.min(w), v.max(w)));
            }
        }
    }

    #[test]
    fn invalid_vertex_queries() {
        let g = path(3);
        assert!(matches!(g.distance(0, 7), Err(GraphError::InvalidVertex { vertex: 7, count: 3 })));
        assert_eq!(g.distance(1, 1).unwrap(), 0);
        assert_eq!(g.distance(1, 2).unwrap(), 1);
    }

    #[test]
    fn distances_without_table_match() {
        let g = cycle(9).with_memo_threshold(0);
        assert!(!g.has_distance_table());
        let h = cycle(9);
        assert!(h.has_distance_table());
        for x in 0..9 {
            for y in 0..9 {
                assert_eq!(g.dist(x, y), h.dist(x, y));
            }
        }
    }

    #[test]
    fn geodesic_sets() {
        assert_eq!(path(3).geodesic_set(0, 2), vec![0, 1, 2]);
        assert_eq!(cycle(4).geodesic_set(0, 2), vec![0, 1, 2, 3]);
        let p5 = path(5);
        let set = p5.eta_geodesic_set(0, 2, 2.0);
        assert!(set.contains(&3));
        assert!(!set.contains(&4));
    }

    #[test]
    fn midpoints() {
        assert_eq!(path(5).midpoint(0, 4), 2);
        assert_eq!(path(4).midpoint(0, 3), 1);
        assert_eq!(path(4).midpoint(2, 2), 2);
    }

    #[test]
    fn geodesic_path_is_shortest() {
        let g = cycle(7);
        let p = g.geodesic_path(0, 4);
        assert_eq!(p.len() as u32, g.dist(0, 4) + 1);
        g.check_path(&p).unwrap();
        assert_eq!(p, vec![0, 6, 5, 4]);
    }

    #[test]
    fn check_path_rejects_jumps() {
        assert_eq!(path(4).check_path(&[0, 2]).unwrap_err(), GraphError::NotAdjacent(0, 2));
    }
}
