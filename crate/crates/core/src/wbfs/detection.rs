use std::collections::BTreeSet;

use serde::Serialize;

use super::{run_wbfs, Parent, Triplet, WbfsError, WbfsOptions, WbfsProgram};
use crate::graph::{Graph, NodeId};
use crate::sim::SimConfig;

/// What a node learns in weighted `(S, d, k)`-detection: its first
/// `min(k, λ)` proximity-list entries with their parents, where `λ` counts
/// the sources within distance `d`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DetectionAnswer {
    pub node: NodeId,
    pub entries: Vec<(Triplet, Parent)>,
}

/// Runs the weighted Bellman-Ford loop for `min(d, D) + min(k, |S|)` rounds
/// and truncates every list. `diameter_bound` may be any upper bound on `D`.
pub fn solve_detection(
    g: &Graph,
    sources: &BTreeSet<NodeId>,
    d: u64,
    k: usize,
    diameter_bound: usize,
) -> Result<Vec<DetectionAnswer>, WbfsError> {
    assert!(k >= 1, "detection needs k >= 1");
    let rounds = d.min(diameter_bound as u64) + k.min(sources.len()) as u64;
    let config = SimConfig::new(rounds).without_trace();
    let sim = run_wbfs(g, sources, WbfsOptions::default(), &config)?;
    Ok(sim
        .programs
        .iter()
        .map(WbfsProgram::state)
        .map(|st| {
            // A list entry is the length of a real path, so entries within
            // distance d belong to sources truly within d.
            let within = st.list().iter().filter(|t| t.d <= d).count();
            let entries = st
                .list()
                .iter()
                .take(k.min(within))
                .map(|t| (t, st.path_map().get(t.s).expect("listed source has a parent")))
                .collect();
            DetectionAnswer {
                node: st.node(),
                entries,
            }
        })
        .collect())
}
