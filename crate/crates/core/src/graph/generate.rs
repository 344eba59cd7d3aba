use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{bfs_distances, Graph, GraphError, NodeId, Weight};
use crate::seed::{derive_seed, rng_from, tag};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GraphKind {
    /// Erdős–Rényi `G(n, p)`, repaired to connectivity.
    Gnp {
        n: usize,
        p: f64,
    },
    Path {
        n: usize,
    },
    Cycle {
        n: usize,
    },
    Complete {
        n: usize,
    },
    Grid {
        rows: usize,
        cols: usize,
    },
    /// Hub `0` joined to leaves `1..n`.
    Star {
        n: usize,
    },
}

#[derive(Debug, Clone)]
pub struct Generated {
    pub graph: Graph,
    /// Cycle edges added to make a `gnp` sample connected.
    pub repair_edges: usize,
}

pub fn generate_graph(kind: &GraphKind, seed: u64) -> Result<Graph, GraphError> {
    generate_graph_with_meta(kind, seed).map(|g| g.graph)
}

pub fn generate_graph_with_meta(kind: &GraphKind, seed: u64) -> Result<Generated, GraphError> {
    let too_few = |n: usize, min: usize| {
        if n < min {
            Err(GraphError::TooFewNodes { n, min })
        } else {
            Ok(())
        }
    };
    let mut repair_edges = 0;
    let (n, edges): (usize, Vec<(NodeId, NodeId)>) = match *kind {
        GraphKind::Path { n } => {
            too_few(n, 2)?;
            (n, (1..n).map(|v| (v - 1, v)).collect())
        }
        GraphKind::Cycle { n } => {
            too_few(n, 3)?;
            (n, (0..n).map(|v| (v, (v + 1) % n)).collect())
        }
        GraphKind::Complete { n } => {
            too_few(n, 2)?;
            (n, (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect())
        }
        GraphKind::Star { n } => {
            too_few(n, 2)?;
            (n, (1..n).map(|v| (0, v)).collect())
        }
        GraphKind::Grid { rows, cols } => {
            if rows == 0 || cols == 0 {
                return Err(GraphError::InvalidParameter("grid dimensions must be positive".into()));
            }
            too_few(rows * cols, 2)?;
            let id = |r: usize, c: usize| r * cols + c;
            let mut edges = Vec::new();
            for r in 0..rows {
                for c in 0..cols {
                    if c + 1 < cols {
                        edges.push((id(r, c), id(r, c + 1)));
                    }
                    if r + 1 < rows {
                        edges.push((id(r, c), id(r + 1, c)));
                    }
                }
            }
            (rows * cols, edges)
        }
        GraphKind::Gnp { n, p } => {
            too_few(n, 2)?;
            if !(p > 0.0 && p <= 1.0) {
                return Err(GraphError::InvalidParameter(format!(
                    "gnp probability must lie in (0, 1], got {p}"
                )));
            }
            let mut rng = rng_from(derive_seed(seed, &[tag::GENERATOR]));
            let mut present = vec![vec![false; n]; n];
            let mut edges = Vec::new();
            for (u, row) in present.iter_mut().enumerate() {
                for (v, cell) in row.iter_mut().enumerate().skip(u + 1) {
                    if rng.gen_bool(p) {
                        *cell = true;
                        edges.push((u, v));
                    }
                }
            }
            if !is_connected(n, &edges) {
                for u in 0..n {
                    let v = (u + 1) % n;
                    let (a, b) = (u.min(v), u.max(v));
                    if a != b && !present[a][b] {
                        present[a][b] = true;
                        edges.push((a, b));
                        repair_edges += 1;
                    }
                }
            }
            (n, edges)
        }
    };
    let graph = Graph::unweighted(n, edges)?;
    Ok(Generated { graph, repair_edges })
}

fn is_connected(n: usize, edges: &[(NodeId, NodeId)]) -> bool {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut components = n;
    for &(u, v) in edges {
        let (a, b) = (find(&mut parent, u), find(&mut parent, v));
        if a != b {
            parent[a] = b;
            components -= 1;
        }
    }
    components == 1
}

/// Redraws every edge weight uniformly from `1..=max_weight`.
pub fn assign_random_weights(g: &Graph, max_weight: Weight, seed: u64) -> Result<Graph, GraphError> {
    if max_weight < 1 {
        return Err(GraphError::InvalidParameter("max_weight must be at least 1".into()));
    }
    let mut rng = rng_from(derive_seed(seed, &[tag::WEIGHTS]));
    let out = g.reweighted(max_weight, |_, _| rng.gen_range(1..=max_weight))?;
    debug_assert!(bfs_distances(&out, 0).iter().all(Option::is_some));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{diameter, Edge};

    #[test]
    fn path_five() {
        let g = generate_graph(&GraphKind::Path { n: 5 }, 0).unwrap();
        let edges: Vec<_> = g.edges().collect();
        assert_eq!(
            edges,
            vec![(Edge(0, 1), 1), (Edge(1, 2), 1), (Edge(2, 3), 1), (Edge(3, 4), 1)]
        );
    }

    #[test]
    fn complete_four() {
        let g = generate_graph(&GraphKind::Complete { n: 4 }, 0).unwrap();
        assert_eq!(g.edge_count(), 6);
        assert_eq!(diameter(&g), 1);
    }

    #[test]
    fn star_and_grid_shapes() {
        let s = generate_graph(&GraphKind::Star { n: 6 }, 0).unwrap();
        assert_eq!((s.edge_count(), s.degree(0)), (5, 5));
        let g = generate_graph(&GraphKind::Grid { rows: 3, cols: 4 }, 0).unwrap();
        assert_eq!((g.node_count(), g.edge_count(), diameter(&g)), (12, 17, 5));
    }

    #[test]
    fn gnp_is_connected_and_deterministic() {
        let kind = GraphKind::Gnp { n: 50, p: 0.2 };
        let a = generate_graph(&kind, 7).unwrap();
        let b = generate_graph(&kind, 7).unwrap();
        assert!(a.edge_count() <= 1225);
        assert_eq!(a.edges().collect::<Vec<_>>(), b.edges().collect::<Vec<_>>());
        assert!(bfs_distances(&a, 0).iter().all(Option::is_some));
    }

    #[test]
    fn sparse_gnp_is_repaired_with_cycle_edges() {
        let out = generate_graph_with_meta(&GraphKind::Gnp { n: 40, p: 0.01 }, 3).unwrap();
        assert!(out.repair_edges > 0);
        for v in 0..40 {
            assert!(out.graph.has_edge(v, (v + 1) % 40));
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(
            generate_graph(&GraphKind::Path { n: 1 }, 0),
            Err(GraphError::TooFewNodes { n: 1, .. })
        ));
        for p in [0.0, -0.5, 1.5, f64::NAN] {
            assert!(matches!(
                generate_graph(&GraphKind::Gnp { n: 10, p }, 0),
                Err(GraphError::InvalidParameter(_))
            ));
        }
        assert!(generate_graph(&GraphKind::Gnp { n: 10, p: 1.0 }, 0).is_ok());
    }

    #[test]
    fn random_weights_are_in_range_and_reproducible() {
        let p3 = generate_graph(&GraphKind::Path { n: 3 }, 0).unwrap();
        let a = assign_random_weights(&p3, 100, 1).unwrap();
        let b = assign_random_weights(&p3, 100, 1).unwrap();
        assert_eq!(a, b);
        assert!(a.edges().all(|(_, w)| (1..=100).contains(&w)));
        let ones = assign_random_weights(&p3, 1, 9).unwrap();
        assert!(ones.edges().all(|(_, w)| w == 1));
        assert!(assign_random_weights(&p3, 0, 1).is_err());
    }
}
