use std::io::{self, Write};

use serde::Serialize;
use serde_json::{json, Map, Value};

use super::Message;
use crate::graph::{Graph, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Recipient {
    /// One copy on every incident edge.
    Broadcast,
    Node(NodeId),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Transmission {
    pub from: NodeId,
    pub to: Recipient,
    pub message: Message,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundRecord<E> {
    pub round: u64,
    pub sends: Vec<Transmission>,
    /// State-change digests in ascending node order.
    pub events: Vec<(NodeId, E)>,
}

/// Counters kept whether or not the full trace is recorded.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct TraceStats {
    pub rounds_executed: u64,
    /// Directed messages per round, index 0 = round 1.
    pub messages_per_round: Vec<u64>,
    pub total_messages: u64,
    pub max_bits: u64,
    pub bit_budget: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace<E> {
    /// Events emitted while programs were constructed (round 0).
    pub initial_events: Vec<(NodeId, E)>,
    pub rounds: Vec<RoundRecord<E>>,
    pub stats: TraceStats,
}

impl<E> Default for Trace<E> {
    fn default() -> Self {
        Self {
            initial_events: Vec::new(),
            rounds: Vec::new(),
            stats: TraceStats::default(),
        }
    }
}

impl<E> Trace<E> {
    pub fn rounds_executed(&self) -> u64 {
        self.stats.rounds_executed
    }

    /// Directed messages recorded in `round` (1-based), expanded over the
    /// fanout of broadcasts.
    pub fn directed_messages(&self, g: &Graph, round: u64) -> Vec<(NodeId, NodeId, Message)> {
        let Some(rec) = self.rounds.iter().find(|r| r.round == round) else {
            return Vec::new();
        };
        expand(g, &rec.sends)
    }
}

fn expand(g: &Graph, sends: &[Transmission]) -> Vec<(NodeId, NodeId, Message)> {
    let mut out = Vec::new();
    for t in sends {
        match t.to {
            Recipient::Broadcast => out.extend(g.neighbors(t.from).iter().map(|&(v, _)| (t.from, v, t.message))),
            Recipient::Node(v) => out.push((t.from, v, t.message)),
        }
    }
    out
}

fn message_record(round: u64, from: NodeId, to: NodeId, msg: &Message) -> Value {
    let mut rec = Map::new();
    rec.insert("round".into(), json!(round));
    rec.insert("from".into(), json!(from));
    rec.insert("to".into(), json!(to));
    // Message serializes as {"kind": ..., fields...}; keep that order after the header.
    if let Value::Object(fields) = serde_json::to_value(msg).expect("message serializes") {
        for (k, v) in fields {
            rec.insert(k, v);
        }
    }
    Value::Object(rec)
}

impl<E: Serialize> Trace<E> {
    /// JSON lines: one record per directed message, then one summary record
    /// per round carrying the message count and the state digests.
    pub fn write_jsonl<W: Write>(&self, g: &Graph, mut out: W) -> io::Result<()> {
        for rec in &self.rounds {
            let msgs = expand(g, &rec.sends);
            for (from, to, m) in &msgs {
                serde_json::to_writer(&mut out, &message_record(rec.round, *from, *to, m))?;
                out.write_all(b"\n")?;
            }
            let events: Vec<Value> = rec
                .events
                .iter()
                .map(|(node, e)| json!({"node": node, "event": e}))
                .collect();
            let summary = json!({
                "round": rec.round,
                "kind": "round_summary",
                "messages": msgs.len(),
                "events": events,
            });
            serde_json::to_writer(&mut out, &summary)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}
