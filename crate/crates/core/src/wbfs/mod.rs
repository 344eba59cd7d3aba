//! Weighted distributed Bellman-Ford: every node learns, for every source,
//! the length and weight of a lightest shortest path and the neighbor it
//! leads through.
//!
//! Each round a node broadcasts the smallest entry of its proximity list it
//! has not sent yet, then folds every received triplet `(d, s, w)` from `u`
//! into its list as `(d + 1, s, w + w(u, v))` if no entry for `s` is shorter,
//! or equally long and lighter. After `|S| + D - 1` rounds the lists equal
//! the true proximity lists.

mod detection;
mod invariants;
mod state;

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::graph::{Graph, NodeId, WbfsTree, Weight};
use crate::sim::{run_simulation, Message, NodeEnv, NodeProgram, Outbox, SimConfig, SimError, Simulation};

pub use detection::{solve_detection, DetectionAnswer};
pub use invariants::{check_round_invariants, InvariantKind, RoundViolation};
pub use state::{Parent, PathMap, ProximityList, ReceiveRecord, WbfsEvent, WbfsState};

/// Entry of a proximity list. The derived order compares `d`, then `s`,
/// then `w`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Triplet {
    pub d: u64,
    pub s: NodeId,
    pub w: Weight,
}

impl Triplet {
    pub fn new(d: u64, s: NodeId, w: Weight) -> Self {
        Self { d, s, w }
    }

    pub fn to_message(self) -> Message {
        Message::Triplet {
            d: self.d,
            s: self.s,
            w: self.w,
        }
    }

    pub fn from_message(msg: &Message) -> Option<Self> {
        match *msg {
            Message::Triplet { d, s, w } => Some(Self { d, s, w }),
            _ => None,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WbfsError {
    #[error("node {node} has no entry for source {missing_source}; the round budget was too small")]
    IncompleteRun { node: NodeId, missing_source: NodeId },
    #[error("source set is empty")]
    NoSources,
    #[error("source {0} out of range")]
    SourceOutOfRange(NodeId),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Options for [`WbfsProgram`].
#[derive(Debug, Clone, Copy, Default)]
pub struct WbfsOptions {
    /// Keep the per-round receive log (needed to replay paths backwards).
    pub keep_receive_log: bool,
    /// Emit insert/remove digests into the trace.
    pub record_events: bool,
}

/// Node program running the weighted Bellman-Ford loop forever; the round
/// budget is the caller's `max_rounds`.
#[derive(Debug, Clone)]
pub struct WbfsProgram {
    state: WbfsState,
    neighbors: Vec<(NodeId, Weight)>,
}

impl WbfsProgram {
    pub fn new(env: NodeEnv<'_>, sources: &BTreeSet<NodeId>, options: WbfsOptions) -> Self {
        let state = WbfsState::new(env.id, sources.contains(&env.id), options);
        Self {
            state,
            neighbors: env.neighbors().to_vec(),
        }
    }

    pub fn state(&self) -> &WbfsState {
        &self.state
    }

    pub fn into_state(self) -> WbfsState {
        self.state
    }

    fn edge_weight(&self, u: NodeId) -> Weight {
        let i = self
            .neighbors
            .binary_search_by_key(&u, |&(x, _)| x)
            .expect("messages only arrive from neighbors");
        self.neighbors[i].1
    }
}

impl NodeProgram for WbfsProgram {
    type Event = WbfsEvent;

    fn outgoing(&mut self, _round: u64) -> Outbox {
        match self.state.take_next_send() {
            Some(t) => Outbox::broadcast(t.to_message()),
            None => Outbox::default(),
        }
    }

    fn receive(&mut self, round: u64, from: NodeId, msg: &Message) {
        if let Some(t) = Triplet::from_message(msg) {
            let w = self.edge_weight(from);
            self.state.offer(round, from, t, w);
        }
    }

    fn drain_events(&mut self, out: &mut Vec<WbfsEvent>) {
        self.state.drain_events(out);
    }
}

fn validate_sources(g: &Graph, sources: &BTreeSet<NodeId>) -> Result<(), WbfsError> {
    if sources.is_empty() {
        return Err(WbfsError::NoSources);
    }
    if let Some(&s) = sources.iter().find(|&&s| s >= g.node_count()) {
        return Err(WbfsError::SourceOutOfRange(s));
    }
    Ok(())
}

/// Runs [`WbfsProgram`] from `sources` for `config.max_rounds` rounds.
pub fn run_wbfs(
    g: &Graph,
    sources: &BTreeSet<NodeId>,
    options: WbfsOptions,
    config: &SimConfig,
) -> Result<Simulation<WbfsProgram>, WbfsError> {
    validate_sources(g, sources)?;
    Ok(run_simulation(
        g,
        |env| WbfsProgram::new(env, sources, options),
        config,
    )?)
}

/// The round budget `|S| + D - 1` that suffices for every list to be exact.
pub fn convergence_rounds(source_count: usize, diameter: usize) -> u64 {
    (source_count + diameter).saturating_sub(1) as u64
}

/// Assembles one tree per source from the final per-node states.
pub fn extract_trees<'a, I>(states: I, sources: &BTreeSet<NodeId>) -> Result<BTreeMap<NodeId, WbfsTree>, WbfsError>
where
    I: IntoIterator<Item = &'a WbfsState>,
{
    let states: Vec<&WbfsState> = states.into_iter().collect();
    let n = states.len();
    let mut trees = BTreeMap::new();
    for &s in sources {
        let mut tree = WbfsTree {
            source: s,
            parent: vec![None; n],
            dist: vec![0; n],
            weight: vec![0; n],
        };
        for (v, st) in states.iter().enumerate() {
            let entry = st.list().get(s).ok_or(WbfsError::IncompleteRun {
                node: v,
                missing_source: s,
            })?;
            tree.dist[v] = entry.d as usize;
            tree.weight[v] = entry.w;
            tree.parent[v] = match st.path_map().get(s) {
                Some(Parent::Node(u)) => Some(u),
                _ => None,
            };
        }
        trees.insert(s, tree);
    }
    Ok(trees)
}

#[derive(Debug, Serialize)]
struct DumpEntry {
    d: u64,
    s: NodeId,
    w: Weight,
    parent: Parent,
}

#[derive(Debug, Serialize)]
struct DumpNode {
    node: NodeId,
    entries: Vec<DumpEntry>,
}

/// One JSON object per line: `{node, entries:[{d,s,w,parent}...]}` in list
/// order.
pub fn dump_lists<'a, I>(states: I) -> String
where
    I: IntoIterator<Item = &'a WbfsState>,
{
    let mut out = String::new();
    for st in states {
        let entries = st
            .list()
            .iter()
            .map(|t| DumpEntry {
                d: t.d,
                s: t.s,
                w: t.w,
                parent: st.path_map().get(t.s).expect("listed sources have a parent"),
            })
            .collect();
        let rec = DumpNode {
            node: st.node(),
            entries,
        };
        out.push_str(&serde_json::to_string(&rec).expect("dump serializes"));
        out.push('\n');
    }
    out
}
