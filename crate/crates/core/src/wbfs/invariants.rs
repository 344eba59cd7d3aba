//! Trace-level checks of the index properties every run must satisfy.
//!
//! The checker rebuilds each node's list from the insert/remove digests and
//! computes list positions itself (1-based, at the beginning of a round):
//!
//! * (a) the position of a live triplet never decreases;
//! * (b) a triplet sent in round `r` at position `l` has `d + l >= r`;
//! * (c) a triplet inserted in round `r` and still present at the start of
//!   round `r + 1`, at position `l`, has `d + l > r`;
//! * (d) a node broadcasts at most one triplet per round.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{Triplet, WbfsEvent};
use crate::graph::NodeId;
use crate::sim::{Message, Trace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InvariantKind {
    IndexDecreased,
    LateSend,
    LateInsertion,
    MultipleTripletSends,
    /// The digest stream contradicts itself (unknown removal, send of an
    /// absent triplet, duplicate source).
    InconsistentDigest,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RoundViolation {
    pub kind: InvariantKind,
    pub round: u64,
    pub node: NodeId,
    pub triplet: Option<Triplet>,
    pub detail: String,
}

fn position(list: &BTreeSet<Triplet>, t: &Triplet) -> Option<usize> {
    list.contains(t).then(|| list.range(..t).count() + 1)
}

fn apply(list: &mut BTreeSet<Triplet>, event: &WbfsEvent, round: u64, node: NodeId, out: &mut Vec<RoundViolation>) {
    match *event {
        WbfsEvent::Inserted { triplet, .. } => {
            if list.iter().any(|t| t.s == triplet.s) {
                out.push(RoundViolation {
                    kind: InvariantKind::InconsistentDigest,
                    round,
                    node,
                    triplet: Some(triplet),
                    detail: "second entry for one source".into(),
                });
            }
            list.insert(triplet);
        }
        WbfsEvent::Removed { triplet } => {
            if !list.remove(&triplet) {
                out.push(RoundViolation {
                    kind: InvariantKind::InconsistentDigest,
                    round,
                    node,
                    triplet: Some(triplet),
                    detail: "removal of an absent triplet".into(),
                });
            }
        }
    }
}

/// Returns every violation found; an empty vector means the trace passes.
pub fn check_round_invariants(trace: &Trace<WbfsEvent>) -> Vec<RoundViolation> {
    let mut out = Vec::new();
    let mut lists: BTreeMap<NodeId, BTreeSet<Triplet>> = BTreeMap::new();
    for (node, e) in &trace.initial_events {
        apply(lists.entry(*node).or_default(), e, 0, *node, &mut out);
    }

    for rec in &trace.rounds {
        let r = rec.round;

        let mut per_sender: BTreeMap<NodeId, usize> = BTreeMap::new();
        for tx in &rec.sends {
            let Message::Triplet { d, s, w } = tx.message else {
                continue;
            };
            let t = Triplet::new(d, s, w);
            let count = per_sender.entry(tx.from).or_default();
            *count += 1;
            if *count == 2 {
                out.push(RoundViolation {
                    kind: InvariantKind::MultipleTripletSends,
                    round: r,
                    node: tx.from,
                    triplet: Some(t),
                    detail: "more than one triplet transmission in a round".into(),
                });
            }
            let list = lists.entry(tx.from).or_default();
            match position(list, &t) {
                None => out.push(RoundViolation {
                    kind: InvariantKind::InconsistentDigest,
                    round: r,
                    node: tx.from,
                    triplet: Some(t),
                    detail: "sent triplet is not in the list".into(),
                }),
                Some(l) if t.d + (l as u64) < r => out.push(RoundViolation {
                    kind: InvariantKind::LateSend,
                    round: r,
                    node: tx.from,
                    triplet: Some(t),
                    detail: format!("d + l = {} + {} < {}", t.d, l, r),
                }),
                Some(_) => {}
            }
        }

        let mut by_node: BTreeMap<NodeId, Vec<&WbfsEvent>> = BTreeMap::new();
        for (node, e) in &rec.events {
            by_node.entry(*node).or_default().push(e);
        }
        for (node, events) in by_node {
            let list = lists.entry(node).or_default();
            let before: Vec<Triplet> = list.iter().copied().collect();
            let mut inserted = Vec::new();
            for e in events {
                if let WbfsEvent::Inserted { triplet, .. } = e {
                    inserted.push(*triplet);
                }
                apply(list, e, r, node, &mut out);
            }
            let after: Vec<Triplet> = list.iter().copied().collect();
            let after_pos = |t: &Triplet| after.binary_search(t).ok().map(|i| i + 1);
            for (i, t) in before.into_iter().enumerate() {
                let l_before = i + 1;
                if let Some(l_after) = after_pos(&t) {
                    if l_after < l_before {
                        out.push(RoundViolation {
                            kind: InvariantKind::IndexDecreased,
                            round: r,
                            node,
                            triplet: Some(t),
                            detail: format!("index {l_before} -> {l_after}"),
                        });
                    }
                }
            }
            for t in inserted {
                if let Some(l) = after_pos(&t) {
                    if t.d + (l as u64) <= r {
                        out.push(RoundViolation {
                            kind: InvariantKind::LateInsertion,
                            round: r,
                            node,
                            triplet: Some(t),
                            detail: format!("d + l = {} + {} <= {}", t.d, l, r),
                        });
                    }
                }
            }
        }
    }
    out
}
