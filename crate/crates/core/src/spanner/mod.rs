//! Purely additive +6 spanner: clustering around random centers, then path
//! buying between clusters at doubling scales `k`.

mod distributed;
mod setup;

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::graph::{sequential_wbfs_tree, Edge, Graph, GraphError, NodeId};
use crate::seed::{derive_seed, node_seed, rng_from, tag};
use crate::sim::SimError;

pub use distributed::{distributed_6ap, distributed_6ap_with_centers, SpannerEvent};
pub use setup::{run_leader_bfs_setup, SetupReport};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpannerError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("node {node} has no entry for center {missing_source} after the search phase")]
    IncompleteRun { node: NodeId, missing_source: NodeId },
    #[error("node {node} needed two messages on one edge in round {round}")]
    PipelineOverflow { node: NodeId, round: u64 },
    #[error("simulation stopped after {rounds} rounds before every node finished")]
    Unfinished { rounds: u64 },
}

/// Sampling parameters, all logarithms natural.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathBuyParams {
    pub n: usize,
    pub c: f64,
    pub center_prob: f64,
    pub k_max: f64,
}

impl PathBuyParams {
    pub fn new(n: usize, c: f64) -> Result<Self, SpannerError> {
        if n < 2 {
            return Err(SpannerError::InvalidParameter(format!("need n >= 2, got {n}")));
        }
        if c.partial_cmp(&2.0) != Some(std::cmp::Ordering::Greater) || !c.is_finite() {
            return Err(SpannerError::InvalidParameter(format!("need c > 2, got {c}")));
        }
        let nf = n as f64;
        let ln = nf.ln();
        Ok(Self {
            n,
            c,
            center_prob: (c / (nf.cbrt() * ln.cbrt())).min(1.0),
            k_max: 8.0 * c * nf.powf(2.0 / 3.0) / ln.cbrt(),
        })
    }

    pub fn sk_prob(&self, k: u64) -> f64 {
        (8.0 * self.c * self.c * (self.n as f64).ln() / k as f64).min(1.0)
    }

    /// Powers of two up to `k_max`; never empty.
    pub fn scales(&self) -> Vec<u64> {
        let mut out = vec![1];
        while ((out[out.len() - 1] * 2) as f64) <= self.k_max {
            out.push(out[out.len() - 1] * 2);
        }
        out
    }
}

/// Whether `v` elects itself center. Drawn from `v`'s own stream.
pub fn is_sampled_center(params: &PathBuyParams, node_seed_v: u64) -> bool {
    rng_from(derive_seed(node_seed_v, &[tag::CENTER])).gen_bool(params.center_prob)
}

/// Whether center `c` joins `S_k`. Drawn from `c`'s own stream.
pub fn is_in_scale_sample(params: &PathBuyParams, node_seed_c: u64, k: u64) -> bool {
    rng_from(derive_seed(node_seed_c, &[tag::SCALE, k])).gen_bool(params.sk_prob(k))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeOrigin {
    ClusterEdge,
    UnclusteredStar,
    BoughtPath,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Clustering {
    pub centers: BTreeSet<NodeId>,
    /// A center maps to itself; `None` marks an unclustered node.
    pub cluster_of: Vec<Option<NodeId>>,
    pub h0: BTreeMap<Edge, EdgeOrigin>,
}

impl Clustering {
    /// Members of the cluster of `center`, the center included.
    pub fn members(&self, center: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.cluster_of
            .iter()
            .enumerate()
            .filter(move |(_, c)| **c == Some(center))
            .map(|(v, _)| v)
    }
}

pub fn sample_centers(g: &Graph, params: &PathBuyParams, seed: u64) -> BTreeSet<NodeId> {
    (0..g.node_count())
        .filter(|&v| is_sampled_center(params, node_seed(seed, v)))
        .collect()
}

pub fn cluster(g: &Graph, params: &PathBuyParams, seed: u64) -> Clustering {
    cluster_with_centers(g, sample_centers(g, params, seed))
}

/// Clustering for a given center set.
pub fn cluster_with_centers(g: &Graph, centers: BTreeSet<NodeId>) -> Clustering {
    let n = g.node_count();
    let mut cluster_of = vec![None; n];
    let mut h0 = BTreeMap::new();
    for (v, slot) in cluster_of.iter_mut().enumerate() {
        if centers.contains(&v) {
            *slot = Some(v);
            continue;
        }
        match g.neighbors(v).iter().map(|&(u, _)| u).find(|u| centers.contains(u)) {
            Some(c) => {
                *slot = Some(c);
                h0.insert(Edge::new(v, c), EdgeOrigin::ClusterEdge);
            }
            None => {
                for &(u, _) in g.neighbors(v) {
                    h0.insert(Edge::new(v, u), EdgeOrigin::UnclusteredStar);
                }
            }
        }
    }
    Clustering {
        centers,
        cluster_of,
        h0,
    }
}

/// Same topology; weight 0 on `h0` edges and 1 elsewhere, so that the
/// weight of a path counts its edges outside `h0`.
pub fn missing_edge_weights<'a, I>(g: &Graph, h0: I) -> Result<Graph, GraphError>
where
    I: IntoIterator<Item = &'a Edge>,
{
    let marked: BTreeSet<Edge> = h0.into_iter().copied().collect();
    if let Some(e) = marked.iter().find(|e| !g.has_edge(e.0, e.1)) {
        return Err(GraphError::InvalidParameter(format!("edge {e} is not in the graph")));
    }
    g.reweighted(1, |e, _| u64::from(!marked.contains(&e)))
}

/// Candidate selection at one center: among `(v, length, missing)` with
/// `missing < 2k`, the shortest, then fewest missing, then smallest id.
pub fn choose_candidate<I>(candidates: I, k: u64) -> Option<(NodeId, u64, u64)>
where
    I: IntoIterator<Item = (NodeId, u64, u64)>,
{
    candidates
        .into_iter()
        .filter(|&(_, _, missing)| missing < 2 * k)
        .min_by_key(|&(v, d, missing)| (d, missing, v))
}

/// One bought path: at scale `k`, center `center_j` picked `endpoint` from
/// its cluster for center `center_i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Purchase {
    pub k: u64,
    pub center_i: NodeId,
    pub center_j: NodeId,
    pub endpoint: NodeId,
    pub length: u64,
    pub missing: u64,
    /// From `center_i` to `endpoint`.
    pub path: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScaleStats {
    pub k: u64,
    pub sk_size: usize,
    pub paths_bought: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SpannerResult {
    pub edges: BTreeMap<Edge, EdgeOrigin>,
    pub clustering: Clustering,
    pub scale_samples: BTreeMap<u64, BTreeSet<NodeId>>,
    pub scales: Vec<ScaleStats>,
    pub purchases: Vec<Purchase>,
    /// Simulated rounds; `None` for the sequential construction.
    pub rounds: Option<u64>,
}

impl SpannerResult {
    pub fn edge_set(&self) -> BTreeSet<Edge> {
        self.edges.keys().copied().collect()
    }

    pub fn size(&self) -> usize {
        self.edges.len()
    }

    fn record_scale_stats(&mut self, ks: &[u64]) {
        self.scales = ks
            .iter()
            .map(|&k| ScaleStats {
                k,
                sk_size: self.scale_samples.get(&k).map_or(0, BTreeSet::len),
                paths_bought: self.purchases.iter().filter(|p| p.k == k).count(),
            })
            .collect();
    }
}

pub fn sequential_6ap(g: &Graph, params: &PathBuyParams, seed: u64) -> Result<SpannerResult, SpannerError> {
    sequential_with_clustering(g, params, seed, cluster(g, params, seed))
}

/// Sequential construction with the center set fixed by the caller.
pub fn sequential_6ap_with_centers(
    g: &Graph,
    params: &PathBuyParams,
    seed: u64,
    centers: BTreeSet<NodeId>,
) -> Result<SpannerResult, SpannerError> {
    sequential_with_clustering(g, params, seed, cluster_with_centers(g, centers))
}

fn sequential_with_clustering(
    g: &Graph,
    params: &PathBuyParams,
    seed: u64,
    clustering: Clustering,
) -> Result<SpannerResult, SpannerError> {
    check_params(g, params)?;
    let marked = missing_edge_weights(g, clustering.h0.keys())?;
    let trees: BTreeMap<NodeId, _> = clustering
        .centers
        .iter()
        .map(|&c| (c, sequential_wbfs_tree(&marked, c)))
        .collect();
    let ks = params.scales();

    let mut result = SpannerResult {
        edges: clustering.h0.clone(),
        clustering,
        scale_samples: BTreeMap::new(),
        scales: Vec::new(),
        purchases: Vec::new(),
        rounds: None,
    };
    for &k in &ks {
        let sample: BTreeSet<NodeId> = result
            .clustering
            .centers
            .iter()
            .copied()
            .filter(|&c| is_in_scale_sample(params, node_seed(seed, c), k))
            .collect();
        for &cj in &sample {
            let members: Vec<NodeId> = result.clustering.members(cj).collect();
            for (&ci, tree) in &trees {
                let cands = members.iter().map(|&v| (v, tree.dist[v] as u64, tree.weight[v]));
                let Some((v, length, missing)) = choose_candidate(cands, k) else {
                    continue;
                };
                let path = tree.path_to(v).expect("tree spans the graph");
                for e in path.windows(2) {
                    result
                        .edges
                        .entry(Edge::new(e[0], e[1]))
                        .or_insert(EdgeOrigin::BoughtPath);
                }
                result.purchases.push(Purchase {
                    k,
                    center_i: ci,
                    center_j: cj,
                    endpoint: v,
                    length,
                    missing,
                    path,
                });
            }
        }
        result.scale_samples.insert(k, sample);
    }
    result.record_scale_stats(&ks);
    Ok(result)
}

fn check_params(g: &Graph, params: &PathBuyParams) -> Result<(), SpannerError> {
    if params.n != g.node_count() {
        return Err(SpannerError::InvalidParameter(format!(
            "parameters are for n = {}, graph has {} nodes",
            params.n,
            g.node_count()
        )));
    }
    Ok(())
}
