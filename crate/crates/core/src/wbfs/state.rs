use std::collections::{BTreeMap, BTreeSet};

use serde::{Serialize, Serializer};

use super::{Triplet, WbfsOptions};
use crate::graph::{NodeId, Weight};

/// Parent of a node in one source's tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Parent {
    Root,
    Node(NodeId),
}

impl Serialize for Parent {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Parent::Root => s.serialize_str("root"),
            Parent::Node(u) => s.serialize_u64(*u as u64),
        }
    }
}

/// Sorted triplets, at most one per source. `unsent` tracks the entries
/// still waiting to be broadcast; a replaced entry leaves both sets.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProximityList {
    entries: BTreeSet<Triplet>,
    by_source: BTreeMap<NodeId, Triplet>,
    unsent: BTreeSet<Triplet>,
}

impl ProximityList {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in ascending `(d, s, w)` order.
    pub fn iter(&self) -> impl Iterator<Item = Triplet> + '_ {
        self.entries.iter().copied()
    }

    pub fn get(&self, source: NodeId) -> Option<Triplet> {
        self.by_source.get(&source).copied()
    }

    /// 1-based position of `t`, if present.
    pub fn index_of(&self, t: &Triplet) -> Option<usize> {
        self.entries.contains(t).then(|| self.entries.range(..t).count() + 1)
    }

    pub fn is_sent(&self, t: &Triplet) -> bool {
        self.entries.contains(t) && !self.unsent.contains(t)
    }

    pub fn unsent_count(&self) -> usize {
        self.unsent.len()
    }

    fn take_first_unsent(&mut self) -> Option<Triplet> {
        self.unsent.pop_first()
    }

    /// Replaces any entry for `t.s` with `t` (marked unsent); returns the
    /// replaced entry.
    fn replace(&mut self, t: Triplet) -> Option<Triplet> {
        let old = self.by_source.insert(t.s, t);
        if let Some(o) = old {
            self.entries.remove(&o);
            self.unsent.remove(&o);
        }
        self.entries.insert(t);
        self.unsent.insert(t);
        old
    }
}

/// Source → parent map (`Root` at the source itself).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PathMap(BTreeMap<NodeId, Parent>);

impl PathMap {
    pub fn get(&self, source: NodeId) -> Option<Parent> {
        self.0.get(&source).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, Parent)> + '_ {
        self.0.iter().map(|(&s, &p)| (s, p))
    }
}

/// An accepted triplet: in `round`, the entry for `source` was taken from
/// `from`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ReceiveRecord {
    pub round: u64,
    pub from: NodeId,
    pub source: NodeId,
}

/// State change digest for the trace. `parent` is the node's own id for a
/// source's initial entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum WbfsEvent {
    Inserted { triplet: Triplet, parent: NodeId },
    Removed { triplet: Triplet },
}

#[derive(Debug, Clone)]
pub struct WbfsState {
    node: NodeId,
    list: ProximityList,
    path_map: PathMap,
    receive_log: Option<Vec<ReceiveRecord>>,
    record_events: bool,
    events: Vec<WbfsEvent>,
}

impl WbfsState {
    pub fn new(node: NodeId, is_source: bool, options: WbfsOptions) -> Self {
        let mut st = Self {
            node,
            list: ProximityList::default(),
            path_map: PathMap::default(),
            receive_log: options.keep_receive_log.then(Vec::new),
            record_events: options.record_events,
            events: Vec::new(),
        };
        if is_source {
            let root = Triplet::new(0, node, 0);
            st.list.replace(root);
            st.path_map.0.insert(node, Parent::Root);
            st.push_event(WbfsEvent::Inserted {
                triplet: root,
                parent: node,
            });
        }
        st
    }

    pub fn node(&self) -> NodeId {
        self.node
    }

    pub fn list(&self) -> &ProximityList {
        &self.list
    }

    pub fn path_map(&self) -> &PathMap {
        &self.path_map
    }

    /// Accepted receptions in order; empty unless the log was requested.
    pub fn receive_log(&self) -> &[ReceiveRecord] {
        self.receive_log.as_deref().unwrap_or(&[])
    }

    /// The reception that produced the current entry for `source`.
    pub fn last_acceptance(&self, source: NodeId) -> Option<ReceiveRecord> {
        self.receive_log().iter().rev().find(|r| r.source == source).copied()
    }

    /// Smallest unsent entry, now marked sent.
    pub fn take_next_send(&mut self) -> Option<Triplet> {
        self.list.take_first_unsent()
    }

    /// Folds a triplet received from neighbor `from` over an edge of weight
    /// `edge_weight`. Returns whether the list changed.
    pub fn offer(&mut self, round: u64, from: NodeId, received: Triplet, edge_weight: Weight) -> bool {
        let cand = Triplet::new(received.d + 1, received.s, received.w + edge_weight);
        if let Some(cur) = self.list.get(cand.s) {
            if (cur.d, cur.w) <= (cand.d, cand.w) {
                return false;
            }
        }
        if let Some(old) = self.list.replace(cand) {
            self.push_event(WbfsEvent::Removed { triplet: old });
        }
        self.path_map.0.insert(cand.s, Parent::Node(from));
        self.push_event(WbfsEvent::Inserted {
            triplet: cand,
            parent: from,
        });
        if let Some(log) = &mut self.receive_log {
            log.push(ReceiveRecord {
                round,
                from,
                source: cand.s,
            });
        }
        true
    }

    fn push_event(&mut self, e: WbfsEvent) {
        if self.record_events {
            self.events.push(e);
        }
    }

    pub fn drain_events(&mut self, out: &mut Vec<WbfsEvent>) {
        out.append(&mut self.events);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn logged() -> WbfsOptions {
        WbfsOptions {
            keep_receive_log: true,
            record_events: true,
        }
    }

    #[test]
    fn source_starts_with_unsent_root() {
        let mut st = WbfsState::new(3, true, logged());
        assert_eq!(st.list().iter().collect::<Vec<_>>(), vec![Triplet::new(0, 3, 0)]);
        assert_eq!(st.path_map().get(3), Some(Parent::Root));
        assert_eq!(st.take_next_send(), Some(Triplet::new(0, 3, 0)));
        assert_eq!(st.take_next_send(), None);
        assert!(st.list().is_sent(&Triplet::new(0, 3, 0)));
    }

    #[test]
    fn replacement_rule() {
        let mut st = WbfsState::new(9, false, logged());
        assert!(st.offer(1, 4, Triplet::new(2, 0, 7), 1)); // (3,0,8)
        assert!(!st.offer(1, 5, Triplet::new(2, 0, 7), 1)); // equal
        assert!(!st.offer(1, 5, Triplet::new(2, 0, 9), 0)); // heavier
        assert!(!st.offer(1, 5, Triplet::new(3, 0, 0), 0)); // longer
        assert!(st.offer(2, 6, Triplet::new(2, 0, 5), 1)); // lighter
        assert!(st.offer(3, 7, Triplet::new(0, 0, 99), 1)); // shorter
        assert_eq!(st.list().get(0), Some(Triplet::new(1, 0, 100)));
        assert_eq!(st.path_map().get(0), Some(Parent::Node(7)));
        assert_eq!(st.list().len(), 1);
        assert_eq!(
            st.last_acceptance(0),
            Some(ReceiveRecord {
                round: 3,
                from: 7,
                source: 0
            })
        );
        assert_eq!(st.receive_log().len(), 3);
    }

    #[test]
    fn sends_in_list_order_and_resends_replacements() {
        let mut st = WbfsState::new(9, false, WbfsOptions::default());
        st.offer(1, 1, Triplet::new(1, 5, 0), 1);
        st.offer(1, 2, Triplet::new(0, 7, 0), 1);
        st.offer(1, 2, Triplet::new(0, 2, 0), 1);
        assert_eq!(st.list().index_of(&Triplet::new(1, 2, 1)), Some(1));
        assert_eq!(st.list().index_of(&Triplet::new(1, 7, 1)), Some(2));
        assert_eq!(st.list().index_of(&Triplet::new(2, 5, 1)), Some(3));
        assert_eq!(st.take_next_send(), Some(Triplet::new(1, 2, 1)));
        assert_eq!(st.take_next_send(), Some(Triplet::new(1, 7, 1)));
        st.offer(2, 3, Triplet::new(0, 5, 0), 0);
        assert_eq!(st.list().unsent_count(), 1);
        assert_eq!(st.take_next_send(), Some(Triplet::new(1, 5, 0)));
        assert!(st.receive_log().is_empty());
    }
}
