//! Independent checkers. Nothing here calls into the searches of
//! [`crate::graph`] or the protocols it validates: distances are recomputed
//! with all-pairs dynamic programming, per-source label-correcting
//! relaxation, a lexicographic Dijkstra and, for small graphs, exhaustive
//! path enumeration.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, VecDeque};
use std::io::{self, Write};

use serde::Serialize;
use thiserror::Error;

use crate::graph::{Edge, Graph, NodeId, WbfsTree, Weight};
use crate::wbfs::{DetectionAnswer, InvariantKind, Parent, RoundViolation, Triplet};

/// Exhaustive enumeration is only attempted up to this many nodes.
pub const EXHAUSTIVE_MAX_NODES: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Distance,
    Weight,
    Stretch,
    Detection,
    Invariant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub nodes: Vec<NodeId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub round: Option<u64>,
    pub expected: String,
    pub actual: String,
}

impl Violation {
    fn new(kind: ViolationKind, nodes: Vec<NodeId>, expected: impl ToString, actual: impl ToString) -> Self {
        Self {
            kind,
            nodes,
            round: None,
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }
}

impl From<&RoundViolation> for Violation {
    fn from(v: &RoundViolation) -> Self {
        let expected = match v.kind {
            InvariantKind::IndexDecreased => "non-decreasing index",
            InvariantKind::LateSend => "d + l >= round",
            InvariantKind::LateInsertion => "d + l > round",
            InvariantKind::MultipleTripletSends => "one triplet per round",
            InvariantKind::InconsistentDigest => "consistent digest",
        };
        Self {
            kind: ViolationKind::Invariant,
            nodes: vec![v.node],
            round: Some(v.round),
            expected: expected.into(),
            actual: v.detail.clone(),
        }
    }
}

/// Writes violations as JSON lines, tagged so they can share a stream with
/// trace records.
pub fn write_violations_jsonl<W: Write>(violations: &[Violation], mut out: W) -> io::Result<()> {
    for v in violations {
        let mut rec = serde_json::to_value(v).expect("violation serializes");
        rec.as_object_mut()
            .expect("object")
            .insert("record".into(), "violation".into());
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VerifyError {
    #[error("edge {0} is not in the host graph")]
    NotASubgraph(Edge),
}

/// `(length, weight)` of the lexicographically smallest path.
pub type LexDist = (u64, Weight);

/// All-pairs lexicographic `(length, weight)` distances by Floyd–Warshall.
pub fn all_pairs_lex(g: &Graph) -> Vec<Vec<Option<LexDist>>> {
    let n = g.node_count();
    let mut m = vec![vec![None; n]; n];
    for (v, row) in m.iter_mut().enumerate() {
        row[v] = Some((0, 0));
    }
    for (e, w) in g.edges() {
        m[e.0][e.1] = Some((1, w));
        m[e.1][e.0] = Some((1, w));
    }
    for k in 0..n {
        let row_k = m[k].clone();
        for row in m.iter_mut() {
            let Some((a1, a2)) = row[k] else { continue };
            for (j, bk) in row_k.iter().enumerate() {
                if let Some((b1, b2)) = *bk {
                    let cand = (a1 + b1, a2 + b2);
                    if row[j].is_none_or(|cur| cand < cur) {
                        row[j] = Some(cand);
                    }
                }
            }
        }
    }
    m
}

/// Single-source lexicographic distances by repeated edge relaxation.
pub fn single_source_lex(g: &Graph, source: NodeId) -> Vec<Option<LexDist>> {
    let n = g.node_count();
    let mut best: Vec<Option<LexDist>> = vec![None; n];
    best[source] = Some((0, 0));
    loop {
        let mut changed = false;
        for (e, w) in g.edges() {
            for (a, b) in [(e.0, e.1), (e.1, e.0)] {
                if let Some((l, x)) = best[a] {
                    let cand = (l + 1, x + w);
                    if best[b].is_none_or(|cur| cand < cur) {
                        best[b] = Some(cand);
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            return best;
        }
    }
}

/// Which parent a lexicographic Dijkstra keeps among equal candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TieOrder {
    SmallestId,
    LargestId,
}

/// Dijkstra on `(length, weight)` keys. Returns the parent array and the
/// distances.
pub fn lex_dijkstra(g: &Graph, source: NodeId, ties: TieOrder) -> (Vec<Option<NodeId>>, Vec<Option<LexDist>>) {
    let n = g.node_count();
    let mut best: Vec<Option<LexDist>> = vec![None; n];
    let mut parent = vec![None; n];
    let mut done = vec![false; n];
    best[source] = Some((0, 0));
    let mut heap = BinaryHeap::from([Reverse(((0u64, 0u64), source))]);
    while let Some(Reverse((key, u))) = heap.pop() {
        if done[u] || best[u] != Some(key) {
            continue;
        }
        done[u] = true;
        for &(v, w) in g.neighbors(u) {
            if done[v] {
                continue;
            }
            let cand = (key.0 + 1, key.1 + w);
            let better = match best[v] {
                None => true,
                Some(cur) if cand < cur => true,
                Some(cur) if cand == cur => match (ties, parent[v]) {
                    (TieOrder::SmallestId, Some(p)) => u < p,
                    (TieOrder::LargestId, Some(p)) => u > p,
                    _ => false,
                },
                _ => false,
            };
            if better {
                best[v] = Some(cand);
                parent[v] = Some(u);
                heap.push(Reverse((cand, v)));
            }
        }
    }
    (parent, best)
}

/// Hop distances of the graph on `n` nodes with the given edges.
pub fn hop_distances(n: usize, edges: &[Edge]) -> Vec<Vec<Option<u64>>> {
    let mut adj = vec![Vec::new(); n];
    for e in edges {
        adj[e.0].push(e.1);
        adj[e.1].push(e.0);
    }
    (0..n)
        .map(|s| {
            let mut dist = vec![None; n];
            dist[s] = Some(0);
            let mut q = VecDeque::from([s]);
            while let Some(u) = q.pop_front() {
                let du = dist[u].unwrap();
                for &v in &adj[u] {
                    if dist[v].is_none() {
                        dist[v] = Some(du + 1);
                        q.push_back(v);
                    }
                }
            }
            dist
        })
        .collect()
}

/// Every shortest `s`–`t` path, by depth-first enumeration of simple paths
/// (iterative deepening on length). Intended for `n <= 12`.
pub fn enumerate_shortest_paths(g: &Graph, s: NodeId, t: NodeId) -> Vec<Vec<NodeId>> {
    fn dfs(g: &Graph, path: &mut Vec<NodeId>, on: &mut [bool], t: NodeId, budget: usize, out: &mut Vec<Vec<NodeId>>) {
        let u = *path.last().unwrap();
        if u == t {
            out.push(path.clone());
            return;
        }
        if budget == 0 {
            return;
        }
        for &(v, _) in g.neighbors(u) {
            if !on[v] {
                on[v] = true;
                path.push(v);
                dfs(g, path, on, t, budget - 1, out);
                path.pop();
                on[v] = false;
            }
        }
    }
    let n = g.node_count();
    for len in 0..n {
        let mut out = Vec::new();
        let mut on = vec![false; n];
        on[s] = true;
        dfs(g, &mut vec![s], &mut on, t, len, &mut out);
        out.retain(|p| p.len() == len + 1);
        if !out.is_empty() {
            return out;
        }
    }
    Vec::new()
}

fn path_weight(g: &Graph, p: &[NodeId]) -> Weight {
    p.windows(2).map(|e| g.weight(e[0], e[1]).unwrap()).sum()
}

/// Checks both tree properties for every node: the tree path has shortest
/// length, and no shortest path is lighter. The tree's own `dist`/`weight`
/// fields must agree with its parent pointers.
pub fn check_wbfs_tree(g: &Graph, tree: &WbfsTree) -> Vec<Violation> {
    let n = g.node_count();
    let s = tree.source;
    let oracle = single_source_lex(g, s);
    let mut out = Vec::new();
    for (v, entry) in oracle.iter().enumerate() {
        let (delta, lightest) = entry.expect("connected graph");
        // walk parent pointers, bounded by n steps
        let mut walk = vec![v];
        let mut cur = v;
        let mut ok = true;
        while cur != s {
            match tree.parent[cur] {
                Some(p) if walk.len() <= n && g.has_edge(cur, p) => {
                    walk.push(p);
                    cur = p;
                }
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            out.push(Violation::new(
                ViolationKind::Distance,
                vec![s, v],
                format!("tree path of length {delta}"),
                "parent pointers do not reach the source",
            ));
            continue;
        }
        let len = (walk.len() - 1) as u64;
        let weight = path_weight(g, &walk);
        if len != delta || tree.dist[v] as u64 != delta {
            out.push(Violation::new(
                ViolationKind::Distance,
                vec![s, v],
                delta,
                format!("tree path {len}, recorded {}", tree.dist[v]),
            ));
            continue;
        }
        if weight != lightest || tree.weight[v] != lightest {
            out.push(Violation::new(
                ViolationKind::Weight,
                vec![s, v],
                lightest,
                format!("tree path {weight}, recorded {}", tree.weight[v]),
            ));
            continue;
        }
        if n <= EXHAUSTIVE_MAX_NODES {
            let paths = enumerate_shortest_paths(g, s, v);
            let min_len = paths.first().map_or(0, |p| p.len() as u64 - 1);
            let min_w = paths.iter().map(|p| path_weight(g, p)).min().unwrap_or(0);
            if min_len != len {
                out.push(Violation::new(ViolationKind::Distance, vec![s, v], min_len, len));
            } else if min_w != weight {
                out.push(Violation::new(ViolationKind::Weight, vec![s, v], min_w, weight));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StretchReport {
    /// `None` if some pair is disconnected in the subgraph.
    pub max_excess: Option<u64>,
    pub worst_pair: Option<(NodeId, NodeId)>,
    pub beta: u64,
}

impl StretchReport {
    pub fn passed(&self) -> bool {
        self.max_excess.is_some_and(|e| e <= self.beta)
    }
}

/// Exact additive stretch of the subgraph `h` of `g`.
pub fn check_stretch(g: &Graph, h: &BTreeSet<Edge>, beta: u64) -> Result<StretchReport, VerifyError> {
    if let Some(e) = h.iter().find(|e| !g.has_edge(e.0, e.1)) {
        return Err(VerifyError::NotASubgraph(*e));
    }
    let n = g.node_count();
    let all: Vec<Edge> = g.edges().map(|(e, _)| e).collect();
    let sub: Vec<Edge> = h.iter().copied().collect();
    let dg = hop_distances(n, &all);
    let dh = hop_distances(n, &sub);
    let mut worst: Option<(u64, (NodeId, NodeId))> = None;
    for u in 0..n {
        for v in u + 1..n {
            let Some(base) = dg[u][v] else { continue };
            let Some(sub_d) = dh[u][v] else {
                return Ok(StretchReport {
                    max_excess: None,
                    worst_pair: Some((u, v)),
                    beta,
                });
            };
            let excess = sub_d - base;
            if worst.is_none_or(|(e, _)| excess > e) {
                worst = Some((excess, (u, v)));
            }
        }
    }
    Ok(StretchReport {
        max_excess: Some(worst.map_or(0, |w| w.0)),
        worst_pair: worst.map(|w| w.1),
        beta,
    })
}

/// Recomputes every node's true proximity list, truncates it to the first
/// `min(k, λ)` entries and compares triplets exactly. Reported parents must
/// be neighbors through which the entry is realized.
pub fn check_detection(
    g: &Graph,
    sources: &BTreeSet<NodeId>,
    d: u64,
    k: usize,
    answer: &[DetectionAnswer],
) -> Vec<Violation> {
    let apsp = all_pairs_lex(g);
    let mut out = Vec::new();
    for v in 0..g.node_count() {
        let mut truth: Vec<Triplet> = sources
            .iter()
            .map(|&s| {
                let (l, w) = apsp[s][v].expect("connected graph");
                Triplet::new(l, s, w)
            })
            .collect();
        truth.sort();
        let lambda = truth.iter().filter(|t| t.d <= d).count();
        truth.truncate(k.min(lambda));

        let Some(ans) = answer.iter().find(|a| a.node == v) else {
            out.push(Violation::new(
                ViolationKind::Detection,
                vec![v],
                format!("{truth:?}"),
                "no answer",
            ));
            continue;
        };
        let got: Vec<Triplet> = ans.entries.iter().map(|e| e.0).collect();
        if got != truth {
            out.push(Violation::new(
                ViolationKind::Detection,
                vec![v],
                format!("{truth:?}"),
                format!("{got:?}"),
            ));
            continue;
        }
        for (t, parent) in &ans.entries {
            let realized = match *parent {
                Parent::Root => t.s == v && t.d == 0,
                Parent::Node(u) => g
                    .weight(u, v)
                    .is_some_and(|w| apsp[t.s][u] == Some((t.d - 1, t.w.wrapping_sub(w))) && w <= t.w),
            };
            if !realized {
                out.push(Violation::new(
                    ViolationKind::Detection,
                    vec![v, t.s],
                    "parent on a lightest shortest path",
                    format!("{parent:?}"),
                ));
            }
        }
    }
    out
}

/// For every ordered pair `(s, t)`, whether the lightest shortest path is
/// unique, by counting lightest shortest paths over the BFS layering.
pub fn lightest_path_uniqueness(g: &Graph) -> (usize, usize) {
    let n = g.node_count();
    let mut unique = 0;
    let mut total = 0;
    for s in 0..n {
        let lex = single_source_lex(g, s);
        let mut order: Vec<NodeId> = (0..n).collect();
        order.sort_by_key(|&v| lex[v]);
        // count[v]: number of lightest shortest s-v paths, capped at 2
        let mut count = vec![0u8; n];
        count[s] = 1;
        for &v in order.iter().skip(1) {
            let (l, w) = lex[v].unwrap();
            let c: u32 = g
                .neighbors(v)
                .iter()
                .filter(|&&(u, wu)| lex[u] == Some((l - 1, w.wrapping_sub(wu))) && wu <= w)
                .map(|&(u, _)| u32::from(count[u]))
                .sum();
            count[v] = c.min(2) as u8;
        }
        for (t, &c) in count.iter().enumerate() {
            if t != s {
                total += 1;
                if c == 1 {
                    unique += 1;
                }
            }
        }
    }
    (unique, total)
}

/// Brute-force uniqueness: enumerates all shortest paths per pair (`n <= 12`).
pub fn lightest_path_uniqueness_exhaustive(g: &Graph) -> (usize, usize) {
    let n = g.node_count();
    assert!(n <= EXHAUSTIVE_MAX_NODES, "exhaustive enumeration is capped");
    let mut unique = 0;
    let mut total = 0;
    for s in 0..n {
        for t in 0..n {
            if s == t {
                continue;
            }
            total += 1;
            let weights: Vec<Weight> = enumerate_shortest_paths(g, s, t)
                .iter()
                .map(|p| path_weight(g, p))
                .collect();
            let min = *weights.iter().min().unwrap();
            if weights.iter().filter(|&&w| w == min).count() == 1 {
                unique += 1;
            }
        }
    }
    (unique, total)
}

/// Pairs whose lightest shortest path comes out identical from two
/// lexicographic Dijkstra runs with opposite tie orders.
pub fn lightest_path_tie_agreement(g: &Graph) -> (usize, usize) {
    let n = g.node_count();
    let mut agree = 0;
    let mut total = 0;
    for s in 0..n {
        let (pa, _) = lex_dijkstra(g, s, TieOrder::SmallestId);
        let (pb, _) = lex_dijkstra(g, s, TieOrder::LargestId);
        // a pair agrees iff the two root paths coincide
        let mut same = vec![false; n];
        same[s] = true;
        let (_, lex) = lex_dijkstra(g, s, TieOrder::SmallestId);
        let mut order: Vec<NodeId> = (0..n).collect();
        order.sort_by_key(|&v| lex[v]);
        for &v in order.iter().skip(1) {
            same[v] = pa[v] == pb[v] && pa[v].is_some_and(|p| same[p]);
            total += 1;
            if same[v] {
                agree += 1;
            }
        }
    }
    (agree, total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_graph, sequential_wbfs_tree, GraphKind};

    fn triangle() -> Graph {
        Graph::from_edges(3, [(0, 1, 1), (1, 2, 1), (0, 2, 5)]).unwrap()
    }

    #[test]
    fn oracles_agree_on_the_diamond() {
        let g = Graph::from_edges(4, [(0, 1, 3), (0, 2, 1), (1, 3, 1), (2, 3, 1)]).unwrap();
        let apsp = all_pairs_lex(&g);
        assert_eq!(apsp[0][3], Some((2, 2)));
        assert_eq!(single_source_lex(&g, 0)[3], Some((2, 2)));
        assert_eq!(lex_dijkstra(&g, 0, TieOrder::SmallestId).0[3], Some(2));
        let paths = enumerate_shortest_paths(&g, 0, 3);
        assert_eq!(paths, vec![vec![0, 1, 3], vec![0, 2, 3]]);
    }

    #[test]
    fn sequential_tree_passes() {
        let g = triangle();
        assert!(check_wbfs_tree(&g, &sequential_wbfs_tree(&g, 0)).is_empty());
    }

    #[test]
    fn lighter_but_longer_parent_is_a_distance_violation() {
        let g = triangle();
        let mut t = sequential_wbfs_tree(&g, 0);
        t.parent[2] = Some(1);
        t.dist[2] = 2;
        t.weight[2] = 2;
        let v = check_wbfs_tree(&g, &t);
        assert_eq!(v.len(), 1);
        assert_eq!((v[0].kind, v[0].nodes.clone()), (ViolationKind::Distance, vec![0, 2]));
    }

    #[test]
    fn corrupted_parent_lengthens_path() {
        let g = generate_graph(&GraphKind::Cycle { n: 6 }, 0).unwrap();
        let mut t = sequential_wbfs_tree(&g, 0);
        // node 1 now routes the long way round
        t.parent[1] = Some(2);
        let v = check_wbfs_tree(&g, &t);
        assert!(v
            .iter()
            .any(|x| x.kind == ViolationKind::Distance && x.nodes == vec![0, 1]));
    }

    #[test]
    fn stretch_of_full_and_broken_subgraphs() {
        let g = generate_graph(&GraphKind::Path { n: 10 }, 0).unwrap();
        let all: BTreeSet<Edge> = g.edges().map(|(e, _)| e).collect();
        let r = check_stretch(&g, &all, 6).unwrap();
        assert_eq!(r.max_excess, Some(0));
        assert!(r.passed());
        let mut cut = all.clone();
        cut.remove(&Edge(4, 5));
        let r = check_stretch(&g, &cut, 6).unwrap();
        assert_eq!(r.max_excess, None);
        assert!(!r.passed());
        assert_eq!(
            check_stretch(&g, &BTreeSet::from([Edge(0, 9)]), 6),
            Err(VerifyError::NotASubgraph(Edge(0, 9)))
        );
    }

    #[test]
    fn stretch_counts_detours() {
        // dropping one cycle edge turns a distance-1 pair into distance n-1
        let g = generate_graph(&GraphKind::Cycle { n: 8 }, 0).unwrap();
        let h: BTreeSet<Edge> = g.edges().map(|(e, _)| e).filter(|e| *e != Edge(0, 7)).collect();
        let r = check_stretch(&g, &h, 6).unwrap();
        assert_eq!(r.max_excess, Some(6));
        assert_eq!(r.worst_pair, Some((0, 7)));
    }

    #[test]
    fn reordered_detection_answer_is_flagged() {
        let g = Graph::from_edges(4, [(0, 1, 3), (0, 2, 1), (1, 3, 1), (2, 3, 1)]).unwrap();
        let s = BTreeSet::from([0, 3]);
        let good = crate::wbfs::solve_detection(&g, &s, 3, 2, 2).unwrap();
        assert!(check_detection(&g, &s, 3, 2, &good).is_empty());
        let mut bad = good.clone();
        bad[1].entries.reverse();
        let v = check_detection(&g, &s, 3, 2, &bad);
        assert_eq!(v.len(), 1);
        assert_eq!((v[0].kind, v[0].nodes.clone()), (ViolationKind::Detection, vec![1]));
    }

    #[test]
    fn uniqueness_counts() {
        // unit-weight square: the two opposite corners have two paths
        let g = Graph::unweighted(4, [(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        assert_eq!(lightest_path_uniqueness(&g), (8, 12));
        assert_eq!(lightest_path_uniqueness_exhaustive(&g), (8, 12));
        assert_eq!(lightest_path_tie_agreement(&g), (8, 12));
    }

    #[test]
    fn violations_serialize_as_tagged_lines() {
        let v = Violation::new(ViolationKind::Stretch, vec![1, 2], 6, 7);
        let mut buf = Vec::new();
        write_violations_jsonl(&[v], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "{\"kind\":\"stretch\",\"nodes\":[1,2],\"expected\":\"6\",\"actual\":\"7\",\"record\":\"violation\"}\n"
        );
    }
}
