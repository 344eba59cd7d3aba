//! Deterministic round-synchronous message passing under CONGEST bandwidth.
//!
//! Every round has a send phase (all [`NodeProgram::outgoing`] calls), a
//! validation step (adjacency, one message per directed edge, bit budget)
//! and a delivery phase ([`NodeProgram::receive`] per message, senders in a
//! fixed order). The phases are separated by full barriers, so a program
//! can never react within a round to what it receives in that round.

mod message;
mod trace;

use rayon::prelude::*;
use thiserror::Error;

use crate::graph::{Graph, NodeId, Weight};
use crate::seed::node_seed;

pub use message::{bits_per_message, AnnounceTag, Message, TAG_BITS};
pub use trace::{Recipient, RoundRecord, Trace, TraceStats, Transmission};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("round {round}: message {from}->{to} has {bits} bits, budget is {limit}")]
    BandwidthViolation {
        round: u64,
        from: NodeId,
        to: NodeId,
        bits: u64,
        limit: u64,
    },
    #[error("round {round}: node {from} addressed non-neighbor {to}")]
    NotANeighbor { round: u64, from: NodeId, to: NodeId },
    #[error("round {round}: more than one message on edge {from}->{to}")]
    EdgeOverload { round: u64, from: NodeId, to: NodeId },
    #[error("round {round}: node {node} produced different output on replay")]
    NonDeterminism { round: u64, node: NodeId },
}

/// What a node puts on the wire in one round.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Outbox {
    pub broadcast: Option<Message>,
    pub direct: Vec<(NodeId, Message)>,
}

impl Outbox {
    pub fn broadcast(msg: Message) -> Self {
        Self {
            broadcast: Some(msg),
            direct: Vec::new(),
        }
    }

    pub fn send(&mut self, to: NodeId, msg: Message) {
        self.direct.push((to, msg));
    }

    pub fn is_empty(&self) -> bool {
        self.broadcast.is_none() && self.direct.is_empty()
    }
}

/// Per-node behaviour driven by the engine.
pub trait NodeProgram {
    /// State-change digest recorded in the trace.
    type Event: Clone + std::fmt::Debug;

    fn outgoing(&mut self, round: u64) -> Outbox;

    fn receive(&mut self, round: u64, from: NodeId, msg: &Message);

    fn halted(&self) -> bool {
        false
    }

    /// Moves pending digests into `out`. Called after construction and
    /// after every delivery phase.
    fn drain_events(&mut self, _out: &mut Vec<Self::Event>) {}
}

/// What a program factory learns about its node.
#[derive(Debug, Clone, Copy)]
pub struct NodeEnv<'a> {
    pub id: NodeId,
    pub graph: &'a Graph,
    /// Node-local seed derived from the global seed and the node id.
    pub seed: u64,
}

impl NodeEnv<'_> {
    pub fn neighbors(&self) -> &[(NodeId, Weight)] {
        self.graph.neighbors(self.id)
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DeliveryOrder {
    #[default]
    AscendingSender,
    DescendingSender,
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub max_rounds: u64,
    pub bandwidth_check: bool,
    pub record_trace: bool,
    pub global_seed: u64,
    pub delivery_order: DeliveryOrder,
    /// Run send and delivery phases on the rayon pool.
    pub parallel: bool,
    /// Re-run every `outgoing` call on a clone and compare.
    pub replay_check: bool,
}

impl SimConfig {
    pub fn new(max_rounds: u64) -> Self {
        Self {
            max_rounds,
            bandwidth_check: true,
            record_trace: true,
            global_seed: 0,
            delivery_order: DeliveryOrder::default(),
            parallel: false,
            replay_check: false,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.global_seed = seed;
        self
    }

    pub fn without_trace(mut self) -> Self {
        self.record_trace = false;
        self
    }
}

#[derive(Debug, Clone)]
pub struct Simulation<P: NodeProgram> {
    pub programs: Vec<P>,
    pub trace: Trace<P::Event>,
}

/// Runs one program per node for up to `config.max_rounds` rounds, or until
/// every program reports `halted`.
pub fn run_simulation<P, F>(g: &Graph, mut factory: F, config: &SimConfig) -> Result<Simulation<P>, SimError>
where
    P: NodeProgram + Clone + Send,
    P::Event: Send,
    F: FnMut(NodeEnv<'_>) -> P,
{
    let n = g.node_count();
    let mut programs: Vec<P> = (0..n)
        .map(|id| {
            factory(NodeEnv {
                id,
                graph: g,
                seed: node_seed(config.global_seed, id),
            })
        })
        .collect();

    let limit = bits_per_message(n, g.weight_bound());
    let mut trace = Trace::default();
    trace.stats.bit_budget = limit;
    let mut scratch = Vec::new();
    for (id, p) in programs.iter_mut().enumerate() {
        p.drain_events(&mut scratch);
        if config.record_trace {
            trace.initial_events.extend(scratch.drain(..).map(|e| (id, e)));
        }
        scratch.clear();
    }

    for round in 1..=config.max_rounds {
        if programs.iter().all(P::halted) {
            break;
        }

        let outboxes: Vec<Outbox> = if config.parallel {
            programs
                .par_iter_mut()
                .enumerate()
                .map(|(id, p)| send_phase(p, id, round, config.replay_check))
                .collect::<Result<_, _>>()?
        } else {
            programs
                .iter_mut()
                .enumerate()
                .map(|(id, p)| send_phase(p, id, round, config.replay_check))
                .collect::<Result<_, _>>()?
        };

        let mut inboxes: Vec<Vec<(NodeId, Message)>> = vec![Vec::new(); n];
        let mut sends = Vec::new();
        let mut directed = 0u64;
        let senders: Box<dyn Iterator<Item = NodeId>> = match config.delivery_order {
            DeliveryOrder::AscendingSender => Box::new(0..n),
            DeliveryOrder::DescendingSender => Box::new((0..n).rev()),
        };
        for from in senders {
            let outbox = &outboxes[from];
            let mut targets: Vec<NodeId> = outbox.direct.iter().map(|&(to, _)| to).collect();
            targets.sort_unstable();
            if let Some(w) = targets.windows(2).find(|w| w[0] == w[1]) {
                return Err(SimError::EdgeOverload { round, from, to: w[0] });
            }
            for &to in &targets {
                if !g.has_edge(from, to) {
                    return Err(SimError::NotANeighbor { round, from, to });
                }
                if outbox.broadcast.is_some() {
                    return Err(SimError::EdgeOverload { round, from, to });
                }
            }
            if let Some(msg) = outbox.broadcast {
                for &(to, _) in g.neighbors(from) {
                    check_bits(&mut trace.stats, config, round, from, to, &msg, limit)?;
                    inboxes[to].push((from, msg));
                    directed += 1;
                }
                if config.record_trace {
                    sends.push(Transmission {
                        from,
                        to: Recipient::Broadcast,
                        message: msg,
                    });
                }
            }
            let mut direct = outbox.direct.clone();
            direct.sort_by_key(|&(to, _)| to);
            for (to, msg) in direct {
                check_bits(&mut trace.stats, config, round, from, to, &msg, limit)?;
                inboxes[to].push((from, msg));
                directed += 1;
                if config.record_trace {
                    sends.push(Transmission {
                        from,
                        to: Recipient::Node(to),
                        message: msg,
                    });
                }
            }
        }

        let deliver = |(p, inbox): (&mut P, Vec<(NodeId, Message)>)| {
            for (from, msg) in &inbox {
                p.receive(round, *from, msg);
            }
            let mut evs = Vec::new();
            p.drain_events(&mut evs);
            evs
        };
        let events: Vec<Vec<P::Event>> = if config.parallel {
            programs.par_iter_mut().zip(inboxes).map(deliver).collect()
        } else {
            programs.iter_mut().zip(inboxes).map(deliver).collect()
        };

        trace.stats.rounds_executed = round;
        trace.stats.messages_per_round.push(directed);
        trace.stats.total_messages += directed;
        if config.record_trace {
            sends.sort_by_key(|t| t.from);
            trace.rounds.push(RoundRecord {
                round,
                sends,
                events: events
                    .into_iter()
                    .enumerate()
                    .flat_map(|(id, evs)| evs.into_iter().map(move |e| (id, e)))
                    .collect(),
            });
        }
    }

    Ok(Simulation { programs, trace })
}

fn send_phase<P: NodeProgram + Clone>(p: &mut P, id: NodeId, round: u64, replay: bool) -> Result<Outbox, SimError> {
    if p.halted() {
        return Ok(Outbox::default());
    }
    if replay {
        let mut twin = p.clone();
        let first = twin.outgoing(round);
        let second = p.outgoing(round);
        if first != second {
            return Err(SimError::NonDeterminism { round, node: id });
        }
        return Ok(second);
    }
    Ok(p.outgoing(round))
}

fn check_bits(
    stats: &mut TraceStats,
    config: &SimConfig,
    round: u64,
    from: NodeId,
    to: NodeId,
    msg: &Message,
    limit: u64,
) -> Result<(), SimError> {
    let bits = msg.bit_size();
    stats.max_bits = stats.max_bits.max(bits);
    if config.bandwidth_check && bits > limit {
        return Err(SimError::BandwidthViolation {
            round,
            from,
            to,
            bits,
            limit,
        });
    }
    Ok(())
}
