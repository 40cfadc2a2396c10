use super::{EdgeId, Graph, Vertex};

/// A 2-edge-connected component with at least one edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeComponent {
    /// Ascending.
    pub vertices: Vec<Vertex>,
    /// Ascending.
    pub edges: Vec<EdgeId>,
}

/// Bridges of a graph and its non-trivial 2-edge-connected components.
///
/// Every cycle lies inside one component, so the cycle space splits as a
/// direct sum over components and bridges carry no cycle at all.
#[derive(Debug, Clone)]
pub struct BridgeStructure {
    pub is_bridge: Vec<bool>,
    pub components: Vec<EdgeComponent>,
    /// Component of each non-bridge edge.
    pub edge_component: Vec<Option<usize>>,
}

impl BridgeStructure {
    pub(crate) fn compute(g: &Graph) -> Self {
        let n = g.vertex_count();
        let m = g.edge_count();
        let mut disc = vec![u32::MAX; n];
        let mut low = vec![0u32; n];
        let mut is_bridge = vec![false; m];
        let mut timer = 0u32;
        // (vertex, parent edge, next neighbour slot)
        let mut stack: Vec<(Vertex, Option<EdgeId>, usize)> = Vec::new();
        for root in 0..n {
            if disc[root] != u32::MAX {
                continue;
            }
            disc[root] = timer;
            low[root] = timer;
            timer += 1;
            stack.push((root, None, 0));
            while let Some(top) = stack.last_mut() {
                let (v, parent_edge, slot) = *top;
                if slot < g.neighbors(v).len() {
                    top.2 += 1;
                    let w = g.neighbors(v)[slot];
                    let e = g.incident_edges(v)[slot];
                    if Some(e) == parent_edge {
                        continue;
                    }
                    if disc[w] == u32::MAX {
                        disc[w] = timer;
                        low[w] = timer;
                        timer += 1;
                        stack.push((w, Some(e), 0));
                    } else {
                        low[v] = low[v].min(disc[w]);
                    }
                } else {
                    stack.pop();
                    if let (Some(e), Some(&(u, _, _))) = (parent_edge, stack.last()) {
                        low[u] = low[u].min(low[v]);
                        if low[v] > disc[u] {
                            is_bridge[e] = true;
                        }
                    }
                }
            }
        }

        // components of the graph with bridges removed
        let mut comp_of = vec![usize::MAX; n];
        let mut components = Vec::new();
        let mut edge_component = vec![None; m];
        for start in 0..n {
            if comp_of[start] != usize::MAX {
                continue;
            }
            let id = components.len();
            let mut vertices = vec![start];
            comp_of[start] = id;
            let mut i = 0;
            let mut edges = Vec::new();
            while i < vertices.len() {
                let v = vertices[i];
                i += 1;
                for (&w, &e) in g.neighbors(v).iter().zip(g.incident_edges(v)) {
                    if is_bridge[e] {
                        continue;
                    }
                    if v < w {
                        edges.push(e);
                    }
                    if comp_of[w] == usize::MAX {
                        comp_of[w] = id;
                        vertices.push(w);
                    }
                }
            }
            if edges.is_empty() {
                // isolated in the bridge-free graph; no cycle passes here
                comp_of[start] = usize::MAX - 1;
                continue;
            }
            vertices.sort_unstable();
            edges.sort_unstable();
            for &e in &edges {
                edge_component[e] = Some(id);
            }
            components.push(EdgeComponent { vertices, edges });
        }
        BridgeStructure { is_bridge, components, edge_component }
    }

    pub fn bridge_count(&self) -> usize {
        self.is_bridge.iter().filter(|&&b| b).count()
    }
}
