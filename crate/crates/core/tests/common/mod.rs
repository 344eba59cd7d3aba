#![allow(dead_code)]

use std::collections::BTreeSet;

use congest_core::graph::{generate_graph, Graph, GraphKind, NodeId};
use congest_core::seed::rng_from;
use rand::seq::index::sample;
use rand::Rng;

/// Connected gnp graph with weights drawn uniformly from `0..=max_weight`.
pub fn weighted_gnp(n: usize, p: f64, max_weight: u64, seed: u64) -> Graph {
    let g = generate_graph(&GraphKind::Gnp { n, p }, seed).unwrap();
    let mut rng = rng_from(seed ^ 0x5eed);
    g.reweighted(max_weight, |_, _| rng.gen_range(0..=max_weight)).unwrap()
}

/// Random instance with `n` in `lo..=hi` and an edge probability that keeps
/// the average degree moderate.
pub fn random_instance(lo: usize, hi: usize, seed: u64) -> Graph {
    let mut rng = rng_from(seed);
    let n = rng.gen_range(lo..=hi);
    let p = (rng.gen_range(1.5..6.0) / n as f64).min(1.0);
    weighted_gnp(n, p, n as u64, seed)
}

pub fn random_sources(n: usize, count: usize, seed: u64) -> BTreeSet<NodeId> {
    let mut rng = rng_from(seed ^ 0x50_75);
    sample(&mut rng, n, count.min(n)).into_iter().collect()
}
