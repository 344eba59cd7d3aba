//! Setup phase run from leader node 0: a BFS wave builds a tree, a
//! convergecast collects the number of centers and the tree depth, and the
//! root pipelines `D' = 2 * depth` and the center count back down.
//!
//! Rounds are local to the phase (the first setup round is 1). A node at
//! depth `d` hears the wave in round `d`, rebroadcasts it (carrying its
//! parent id) in round `d + 1` and therefore knows its children after round
//! `d + 2`. Every node learns when the root started the down-cast from its
//! own depth, so all nodes agree on the last setup round.

use std::collections::{BTreeMap, BTreeSet};

use super::SpannerError;
use crate::graph::{Graph, NodeId};
use crate::sim::{run_simulation, AnnounceTag, Message, NodeEnv, NodeProgram, Outbox, SimConfig};

pub(super) const LEADER: NodeId = 0;

/// What every node knows once setup is over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(super) struct SetupOutcome {
    pub diameter_bound: u64,
    pub center_count: u64,
    /// Last round of the phase.
    pub end: u64,
}

#[derive(Debug, Clone)]
pub(super) struct SetupState {
    id: NodeId,
    is_center: bool,
    depth: Option<u64>,
    parent: Option<NodeId>,
    children: BTreeSet<NodeId>,
    child_counts: BTreeMap<NodeId, u64>,
    child_depths: BTreeMap<NodeId, u64>,
    up_sent: Option<u64>,
    down_started: Option<u64>,
    forward: Vec<(u64, Message)>,
    diameter_bound: Option<u64>,
    end: Option<u64>,
    center_count: Option<u64>,
}

fn announce(tag: AnnounceTag, value: u64) -> Message {
    Message::Announce { tag, value }
}

impl SetupState {
    pub fn new(id: NodeId, is_center: bool) -> Self {
        Self {
            id,
            is_center,
            depth: (id == LEADER).then_some(0),
            parent: None,
            children: BTreeSet::new(),
            child_counts: BTreeMap::new(),
            child_depths: BTreeMap::new(),
            up_sent: None,
            down_started: None,
            forward: Vec::new(),
            diameter_bound: None,
            end: None,
            center_count: None,
        }
    }

    pub fn depth(&self) -> Option<u64> {
        self.depth
    }

    pub fn outcome(&self) -> Option<SetupOutcome> {
        Some(SetupOutcome {
            diameter_bound: self.diameter_bound?,
            center_count: self.center_count?,
            end: self.end?,
        })
    }

    fn subtree_reported(&self, t: u64) -> bool {
        let d = self.depth.expect("reached by the wave");
        t >= d + 3 && self.children.iter().all(|c| self.child_depths.contains_key(c))
    }

    fn subtree_count(&self) -> u64 {
        u64::from(self.is_center) + self.child_counts.values().sum::<u64>()
    }

    fn subtree_depth(&self) -> u64 {
        self.child_depths
            .values()
            .copied()
            .fold(self.depth.unwrap_or(0), u64::max)
    }

    pub fn outgoing(&mut self, t: u64) -> Outbox {
        let mut out = Outbox::default();
        let Some(d) = self.depth else { return out };
        if t == d + 1 {
            let value = self.parent.unwrap_or(self.id) as u64;
            out.broadcast = Some(announce(AnnounceTag::Wave, value));
            return out;
        }
        if self.id == LEADER {
            if self.down_started.is_none() && self.subtree_reported(t) {
                let depth = self.subtree_depth();
                self.down_started = Some(t);
                self.diameter_bound = Some(2 * depth);
                self.center_count = Some(self.subtree_count());
                self.end = Some(t + depth);
                self.forward.push((t, announce(AnnounceTag::DiameterBound, 2 * depth)));
                self.forward
                    .push((t + 1, announce(AnnounceTag::CenterCount, self.subtree_count())));
            }
        } else if let Some(p) = self.parent {
            match self.up_sent {
                None if self.subtree_reported(t) => {
                    self.up_sent = Some(t);
                    out.send(p, announce(AnnounceTag::CenterCountUp, self.subtree_count()));
                }
                Some(s) if s + 1 == t => {
                    out.send(p, announce(AnnounceTag::DepthUp, self.subtree_depth()));
                }
                _ => {}
            }
        }
        let due: Vec<Message> = self.forward.iter().filter(|(r, _)| *r == t).map(|(_, m)| *m).collect();
        for m in due {
            for &c in &self.children {
                out.send(c, m);
            }
        }
        out
    }

    pub fn receive(&mut self, t: u64, from: NodeId, msg: &Message) {
        let Message::Announce { tag, value } = *msg else { return };
        match tag {
            AnnounceTag::Wave => {
                if value == self.id as u64 && from != self.id {
                    self.children.insert(from);
                }
                if self.id == LEADER {
                    return;
                }
                match (self.depth, self.parent) {
                    (None, _) => {
                        self.depth = Some(t);
                        self.parent = Some(from);
                    }
                    (Some(d), Some(p)) if d == t && from < p => self.parent = Some(from),
                    _ => {}
                }
            }
            AnnounceTag::CenterCountUp => {
                self.child_counts.insert(from, value);
            }
            AnnounceTag::DepthUp => {
                self.child_depths.insert(from, value);
            }
            AnnounceTag::DiameterBound if Some(from) == self.parent => {
                let d = self.depth.expect("has a parent");
                let root_start = t + 1 - d;
                self.diameter_bound = Some(value);
                self.end = Some(root_start + value / 2);
                self.forward.push((t + 1, *msg));
            }
            AnnounceTag::CenterCount if Some(from) == self.parent => {
                self.center_count = Some(value);
                self.forward.push((t + 1, *msg));
            }
            _ => {}
        }
    }
}

/// The setup phase on its own, for inspection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetupReport {
    pub diameter_bound: u64,
    pub center_count: u64,
    pub depths: Vec<u64>,
    pub rounds: u64,
}

#[derive(Debug, Clone)]
struct SetupProgram {
    state: SetupState,
    done: bool,
    last_round: u64,
}

impl NodeProgram for SetupProgram {
    type Event = ();

    fn outgoing(&mut self, round: u64) -> Outbox {
        self.last_round = round;
        self.state.outgoing(round)
    }

    fn receive(&mut self, round: u64, from: NodeId, msg: &Message) {
        self.state.receive(round, from, msg);
    }

    fn halted(&self) -> bool {
        self.done
    }

    fn drain_events(&mut self, _out: &mut Vec<()>) {
        // called after each delivery phase: a node stops once its own
        // view says the phase is over
        if let Some(end) = self.state.end {
            self.done |= self.last_round >= end;
        }
    }
}

/// Runs only the setup phase with the given center set. Every node must
/// agree on the outcome.
pub fn run_leader_bfs_setup(g: &Graph, centers: &BTreeSet<NodeId>) -> Result<SetupReport, SpannerError> {
    if g.node_count() < 2 {
        return Err(SpannerError::InvalidParameter("setup needs n >= 2".into()));
    }
    let cap = 4 * g.node_count() as u64 + 8;
    let sim = run_simulation(
        g,
        |env: NodeEnv<'_>| SetupProgram {
            state: SetupState::new(env.id, centers.contains(&env.id)),
            done: false,
            last_round: 0,
        },
        &SimConfig::new(cap).without_trace(),
    )?;
    let outcomes: Vec<SetupOutcome> = sim
        .programs
        .iter()
        .map(|p| p.state.outcome())
        .collect::<Option<_>>()
        .ok_or(SpannerError::Unfinished { rounds: cap })?;
    let first = outcomes[0];
    if outcomes.iter().any(|o| *o != first) {
        return Err(SpannerError::InvalidParameter(
            "nodes disagree on the setup outcome".into(),
        ));
    }
    Ok(SetupReport {
        diameter_bound: first.diameter_bound,
        center_count: first.center_count,
        depths: sim.programs.iter().map(|p| p.state.depth().unwrap()).collect(),
        rounds: sim.trace.rounds_executed(),
    })
}
