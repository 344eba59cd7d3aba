use serde::Serialize;

use crate::graph::{NodeId, Weight};

/// Control tags carried by [`Message::Announce`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnounceTag {
    Center,
    Join,
    Unclustered,
    /// BFS wave; the value is the sender's parent id.
    Wave,
    CenterCountUp,
    DepthUp,
    DiameterBound,
    CenterCount,
    /// Free-form test traffic.
    Ping,
}

/// A single CONGEST message. Each kind (including each announce tag) is
/// identified by the 4-bit tag charged by [`bits_per_message`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Message {
    Triplet { d: u64, s: NodeId, w: Weight },
    Buy { source: NodeId },
    Announce { tag: AnnounceTag, value: u64 },
    Report { d: u64, source: NodeId, missing: u64 },
}

pub const TAG_BITS: u64 = 4;

fn bit_length(x: u64) -> u64 {
    u64::from(64 - x.leading_zeros())
}

impl Message {
    /// Tag bits plus the binary length of every field value.
    pub fn bit_size(&self) -> u64 {
        let fields = match *self {
            Message::Triplet { d, s, w } => bit_length(d) + bit_length(s as u64) + bit_length(w),
            Message::Buy { source } => bit_length(source as u64),
            Message::Announce { value, .. } => bit_length(value),
            Message::Report { d, source, missing } => bit_length(d) + bit_length(source as u64) + bit_length(missing),
        };
        TAG_BITS + fields
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Message::Triplet { .. } => "triplet",
            Message::Buy { .. } => "buy",
            Message::Announce { .. } => "announce",
            Message::Report { .. } => "report",
        }
    }
}

/// Smallest `b` with `2^b >= x`.
fn ceil_log2(x: u128) -> u64 {
    if x <= 1 {
        0
    } else {
        u64::from(128 - (x - 1).leading_zeros())
    }
}

/// Per-message bandwidth `B = 2*ceil(log2(n+1)) + ceil(log2(n*W+1)) + 4`:
/// room for a distance and a node id up to `n` and a path weight up to `n*W`.
pub fn bits_per_message(n: usize, weight_bound: Weight) -> u64 {
    let n = n as u128;
    2 * ceil_log2(n + 1) + ceil_log2(n * u128::from(weight_bound) + 1) + TAG_BITS
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formula_instances() {
        // 2*ceil(log2 3) + ceil(log2 1) + 4
        assert_eq!(bits_per_message(2, 0), 8);
        assert_eq!(bits_per_message(16, 1), 19);
    }

    #[test]
    fn field_widths() {
        assert_eq!(Message::Triplet { d: 0, s: 0, w: 0 }.bit_size(), 4);
        assert_eq!(Message::Triplet { d: 16, s: 15, w: 16 }.bit_size(), 4 + 5 + 4 + 5);
        assert_eq!(Message::Buy { source: 8 }.bit_size(), 8);
    }

    #[test]
    fn in_range_triplets_fit_the_budget() {
        for n in 2..70usize {
            for bound in [0u64, 1, 3, n as u64, (n as u64).pow(3)] {
                let b = bits_per_message(n, bound);
                let worst = Message::Triplet {
                    d: n as u64,
                    s: n - 1,
                    w: n as u64 * bound,
                };
                assert!(worst.bit_size() <= b, "n={n} W={bound}");
            }
        }
    }
}
