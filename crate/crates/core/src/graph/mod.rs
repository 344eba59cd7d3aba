//! Simple, connected, undirected graphs with non-negative integer edge
//! weights, plus the exact sequential searches the protocols are measured
//! against.

mod edgelist;
mod generate;

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use edgelist::{parse_edge_list, parse_edge_set, read_edge_list, write_edge_list};
pub use generate::{assign_random_weights, generate_graph, generate_graph_with_meta, Generated, GraphKind};

pub type NodeId = usize;
pub type Weight = u64;

/// Largest admissible weight bound is `n^WEIGHT_EXPONENT`.
pub const WEIGHT_EXPONENT: u32 = 6;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("graph needs at least {min} nodes, got {n}")]
    TooFewNodes { n: usize, min: usize },
    #[error("node {node} out of range for n = {n}")]
    NodeOutOfRange { node: NodeId, n: usize },
    #[error("self-loop at node {0}")]
    SelfLoop(NodeId),
    #[error("parallel edge {0}-{1}")]
    ParallelEdge(NodeId, NodeId),
    #[error("edge weight {weight} exceeds bound {bound}")]
    WeightAboveBound { weight: Weight, bound: Weight },
    #[error("weight bound {bound} exceeds n^{WEIGHT_EXPONENT} for n = {n}")]
    BoundTooLarge { bound: Weight, n: usize },
    #[error("graph is disconnected: node {0} unreachable from node 0")]
    Disconnected(NodeId),
    #[error("invalid generator parameter: {0}")]
    InvalidParameter(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}

/// Undirected edge with endpoints normalized so that `0 < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge(pub NodeId, pub NodeId);

impl Edge {
    pub fn new(u: NodeId, v: NodeId) -> Self {
        if u < v {
            Edge(u, v)
        } else {
            Edge(v, u)
        }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.0, self.1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    weight_bound: Weight,
    adjacency: Vec<Vec<(NodeId, Weight)>>,
}

impl Graph {
    /// Builds a graph from `(u, v, w)` triples, validating every invariant.
    /// The weight bound is the largest weight present.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (NodeId, NodeId, Weight)>,
    {
        let edges: Vec<_> = edges.into_iter().collect();
        let bound = edges.iter().map(|e| e.2).max().unwrap_or(0);
        Self::with_bound(n, bound, edges)
    }

    /// Builds a graph with an explicit weight bound `W`.
    pub fn with_bound<I>(n: usize, bound: Weight, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (NodeId, NodeId, Weight)>,
    {
        let mut builder = GraphBuilder::new(n, bound)?;
        for (u, v, w) in edges {
            builder.add_edge(u, v, w)?;
        }
        builder.finish()
    }

    pub fn unweighted<I>(n: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (NodeId, NodeId)>,
    {
        Self::from_edges(n, edges.into_iter().map(|(u, v)| (u, v, 1)))
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// The declared weight bound `W`.
    pub fn weight_bound(&self) -> Weight {
        self.weight_bound
    }

    /// Neighbors of `v` sorted by id, with edge weights.
    pub fn neighbors(&self, v: NodeId) -> &[(NodeId, Weight)] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adjacency[v].len()
    }

    pub fn weight(&self, u: NodeId, v: NodeId) -> Option<Weight> {
        let row = &self.adjacency[u];
        row.binary_search_by_key(&v, |&(x, _)| x).ok().map(|i| row[i].1)
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        u < self.node_count() && v < self.node_count() && self.weight(u, v).is_some()
    }

    /// All edges as `(edge, weight)` in ascending edge order.
    pub fn edges(&self) -> impl Iterator<Item = (Edge, Weight)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(u, row)| {
            row.iter()
                .filter(move |&&(v, _)| u < v)
                .map(move |&(v, w)| (Edge(u, v), w))
        })
    }

    /// Same topology, weights replaced by `f(edge, old weight)`.
    pub fn reweighted<F>(&self, bound: Weight, mut f: F) -> Result<Self, GraphError>
    where
        F: FnMut(Edge, Weight) -> Weight,
    {
        let edges: Vec<_> = self.edges().map(|(e, w)| (e.0, e.1, f(e, w))).collect();
        Self::with_bound(self.node_count(), bound, edges)
    }
}

struct GraphBuilder {
    bound: Weight,
    adjacency: Vec<Vec<(NodeId, Weight)>>,
}

impl GraphBuilder {
    fn new(n: usize, bound: Weight) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::TooFewNodes { n, min: 1 });
        }
        let limit = (n.max(2) as u128).pow(WEIGHT_EXPONENT);
        if bound as u128 > limit {
            return Err(GraphError::BoundTooLarge { bound, n });
        }
        Ok(Self {
            bound,
            adjacency: vec![Vec::new(); n],
        })
    }

    fn add_edge(&mut self, u: NodeId, v: NodeId, w: Weight) -> Result<(), GraphError> {
        let n = self.adjacency.len();
        for x in [u, v] {
            if x >= n {
                return Err(GraphError::NodeOutOfRange { node: x, n });
            }
        }
        if u == v {
            return Err(GraphError::SelfLoop(u));
        }
        if w > self.bound {
            return Err(GraphError::WeightAboveBound {
                weight: w,
                bound: self.bound,
            });
        }
        if self.adjacency[u].iter().any(|&(x, _)| x == v) {
            let e = Edge::new(u, v);
            return Err(GraphError::ParallelEdge(e.0, e.1));
        }
        self.adjacency[u].push((v, w));
        self.adjacency[v].push((u, w));
        Ok(())
    }

    fn finish(mut self) -> Result<Graph, GraphError> {
        for row in &mut self.adjacency {
            row.sort_unstable();
        }
        let graph = Graph {
            weight_bound: self.bound,
            adjacency: self.adjacency,
        };
        let dist = bfs_distances(&graph, 0);
        if let Some(v) = dist.iter().position(Option::is_none) {
            return Err(GraphError::Disconnected(v));
        }
        Ok(graph)
    }
}

/// A simple path in a host graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Path {
    nodes: Vec<NodeId>,
}

impl Path {
    /// Validates adjacency of consecutive nodes and the absence of repeats.
    pub fn new(g: &Graph, nodes: Vec<NodeId>) -> Result<Self, GraphError> {
        if nodes.is_empty() {
            return Err(GraphError::InvalidParameter("empty path".into()));
        }
        let mut seen = vec![false; g.node_count()];
        for &v in &nodes {
            if v >= g.node_count() {
                return Err(GraphError::NodeOutOfRange {
                    node: v,
                    n: g.node_count(),
                });
            }
            if std::mem::replace(&mut seen[v], true) {
                return Err(GraphError::InvalidParameter(format!("node {v} repeated in path")));
            }
        }
        for pair in nodes.windows(2) {
            if !g.has_edge(pair[0], pair[1]) {
                return Err(GraphError::InvalidParameter(format!(
                    "{}-{} is not an edge",
                    pair[0], pair[1]
                )));
            }
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    /// Number of edges.
    pub fn len(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.nodes.windows(2).map(|p| Edge::new(p[0], p[1]))
    }

    pub fn weight(&self, g: &Graph) -> Weight {
        self.nodes
            .windows(2)
            .map(|p| g.weight(p[0], p[1]).expect("validated path"))
            .sum()
    }
}

/// A shortest-path tree in which every root path is also the lightest
/// among the shortest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WbfsTree {
    pub source: NodeId,
    /// `None` marks the root.
    pub parent: Vec<Option<NodeId>>,
    pub dist: Vec<usize>,
    pub weight: Vec<Weight>,
}

impl WbfsTree {
    /// Tree path from the source to `v`, or `None` if the parent pointers
    /// do not lead back to the source.
    pub fn path_to(&self, v: NodeId) -> Option<Vec<NodeId>> {
        let mut nodes = vec![v];
        let mut cur = v;
        while let Some(p) = self.parent[cur] {
            if nodes.len() > self.parent.len() {
                return None;
            }
            nodes.push(p);
            cur = p;
        }
        if cur != self.source {
            return None;
        }
        nodes.reverse();
        Some(nodes)
    }
}

/// Unweighted hop distances from `source`; `None` for unreachable nodes.
pub fn bfs_distances(g: &Graph, source: NodeId) -> Vec<Option<usize>> {
    let mut dist = vec![None; g.node_count()];
    dist[source] = Some(0);
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        let du = dist[u].unwrap();
        for &(v, _) in g.neighbors(u) {
            if dist[v].is_none() {
                dist[v] = Some(du + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Exact diameter via one BFS per node.
pub fn diameter(g: &Graph) -> usize {
    (0..g.node_count())
        .map(|s| bfs_distances(g, s).into_iter().flatten().max().unwrap_or(0))
        .max()
        .unwrap_or(0)
}

/// Sequential weighted BFS: nodes are finalized in BFS order and each picks
/// the already-finalized neighbor one layer up that minimizes its weight,
/// smallest id on ties.
pub fn sequential_wbfs_tree(g: &Graph, source: NodeId) -> WbfsTree {
    let n = g.node_count();
    let mut order = Vec::with_capacity(n);
    let mut dist = vec![usize::MAX; n];
    dist[source] = 0;
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        order.push(u);
        for &(v, _) in g.neighbors(u) {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }

    let mut parent = vec![None; n];
    let mut weight = vec![0; n];
    for &v in order.iter().skip(1) {
        let (w, u) = g
            .neighbors(v)
            .iter()
            .filter(|&&(u, _)| dist[u] + 1 == dist[v])
            .map(|&(u, w)| (weight[u] + w, u))
            .min()
            .expect("non-root node has a neighbor one layer up");
        parent[v] = Some(u);
        weight[v] = w;
    }
    WbfsTree {
        source,
        parent,
        dist,
        weight,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn triangle() -> Graph {
        Graph::from_edges(3, [(0, 1, 1), (1, 2, 1), (0, 2, 5)]).unwrap()
    }

    pub(crate) fn diamond() -> Graph {
        Graph::from_edges(4, [(0, 1, 3), (0, 2, 1), (1, 3, 1), (2, 3, 1)]).unwrap()
    }

    #[test]
    fn rejects_invalid_graphs() {
        assert_eq!(Graph::unweighted(2, [(0, 0)]), Err(GraphError::SelfLoop(0)));
        assert_eq!(
            Graph::unweighted(2, [(0, 1), (1, 0)]),
            Err(GraphError::ParallelEdge(0, 1))
        );
        assert_eq!(Graph::unweighted(3, [(0, 1)]), Err(GraphError::Disconnected(2)));
        assert!(matches!(
            Graph::unweighted(2, [(0, 2)]),
            Err(GraphError::NodeOutOfRange { node: 2, n: 2 })
        ));
        assert!(matches!(
            Graph::with_bound(2, 3, [(0, 1, 4)]),
            Err(GraphError::WeightAboveBound { weight: 4, bound: 3 })
        ));
        assert!(matches!(
            Graph::with_bound(2, 65, [(0, 1, 1)]),
            Err(GraphError::BoundTooLarge { .. })
        ));
    }

    #[test]
    fn adjacency_is_symmetric_and_sorted() {
        let g = diamond();
        assert_eq!(g.neighbors(0), &[(1, 3), (2, 1)]);
        assert_eq!(g.neighbors(3), &[(1, 1), (2, 1)]);
        assert_eq!(g.weight(1, 0), Some(3));
        assert_eq!(g.edge_count(), 4);
    }

    #[test]
    fn path_validation() {
        let g = diamond();
        let p = Path::new(&g, vec![0, 2, 3]).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p.weight(&g), 2);
        assert!(Path::new(&g, vec![0, 3]).is_err());
        assert!(Path::new(&g, vec![0, 2, 0]).is_err());
    }

    #[test]
    fn shortest_beats_lighter_but_longer() {
        let t = sequential_wbfs_tree(&triangle(), 0);
        assert_eq!((t.dist[2], t.weight[2], t.parent[2]), (1, 5, Some(0)));
    }

    #[test]
    fn lightest_among_equal_length() {
        let t = sequential_wbfs_tree(&diamond(), 0);
        assert_eq!((t.dist[3], t.weight[3], t.parent[3]), (2, 2, Some(2)));
        assert_eq!(t.path_to(3), Some(vec![0, 2, 3]));
    }

    #[test]
    fn root_has_zero_distance_and_weight() {
        let g = diamond();
        for s in 0..4 {
            let t = sequential_wbfs_tree(&g, s);
            assert_eq!((t.dist[s], t.weight[s], t.parent[s]), (0, 0, None));
        }
    }

    #[test]
    fn parent_ties_break_to_smallest_id() {
        // 0-1-3 and 0-2-3 have equal length and weight.
        let g = Graph::unweighted(4, [(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap();
        assert_eq!(sequential_wbfs_tree(&g, 0).parent[3], Some(1));
    }
}
