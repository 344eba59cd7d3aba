//! The spanner as one CONGEST program. Global round layout, with `E` the
//! last setup round, `R = |C| + D'` and `c = |C|`:
//!
//! | rounds                     | phase                                   |
//! |----------------------------|-----------------------------------------|
//! | 1                          | centers announce themselves             |
//! | 2                          | joins, unclustered nodes announce       |
//! | 3 ..= E                    | leader BFS setup                        |
//! | E+1 ..= E+R                | weighted BFS from the centers, 0/1 marks|
//! | E+R+1 ..= E+R+c            | members report their lists to centers   |
//! | E+R+c+1 ..= E+R+2c         | centers send buy orders to members      |
//! | E+R+2c+1 ..= E+2R+2c       | buy orders walk back up the trees       |
//!
//! A node holding `Buy(s)` whose final entry for `s` was accepted from `u`
//! in search round `r` forwards it to `u` in buy round `R - r + 1`; its
//! parent accepted strictly earlier and so forwards strictly later.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::setup::SetupState;
use super::{
    check_params, choose_candidate, cluster_with_centers, is_in_scale_sample, is_sampled_center, Clustering,
    EdgeOrigin, PathBuyParams, Purchase, SpannerError, SpannerResult,
};
use crate::graph::{Edge, Graph, NodeId};
use crate::sim::{run_simulation, AnnounceTag, Message, NodeEnv, NodeProgram, Outbox, SimConfig, Trace};
use crate::wbfs::{Parent, Triplet, WbfsOptions, WbfsState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum SpannerEvent {
    EdgeAdded { edge: Edge, origin: EdgeOrigin },
}

#[derive(Debug, Clone, Copy)]
struct Schedule {
    setup_end: u64,
    search: u64,
    centers: u64,
    end: u64,
}

enum Phase {
    Announce,
    Join,
    Setup(u64),
    Search(u64),
    Report(u64),
    Order(u64),
    Buy(u64),
    Done,
}

impl Schedule {
    fn new(setup_end_local: u64, diameter_bound: u64, centers: u64) -> Self {
        let setup_end = setup_end_local + 2;
        let search = centers + diameter_bound;
        let end = if centers == 0 {
            setup_end
        } else {
            setup_end + 2 * search + 2 * centers
        };
        Self {
            setup_end,
            search,
            centers,
            end,
        }
    }

    fn phase(&self, round: u64) -> Phase {
        if round <= self.setup_end {
            return Phase::Setup(round - 2);
        }
        let mut r = round - self.setup_end;
        if r <= self.search {
            return Phase::Search(r);
        }
        r -= self.search;
        if r <= self.centers {
            return Phase::Report(r);
        }
        r -= self.centers;
        if r <= self.centers {
            return Phase::Order(r);
        }
        r -= self.centers;
        if r <= self.search {
            return Phase::Buy(r);
        }
        Phase::Done
    }
}

#[derive(Debug, Clone)]
struct SpannerNode {
    id: NodeId,
    seed: u64,
    params: PathBuyParams,
    neighbors: Vec<NodeId>,
    is_center: bool,
    heard_centers: BTreeSet<NodeId>,
    cluster_of: Option<NodeId>,
    members: BTreeSet<NodeId>,
    h0: BTreeMap<NodeId, EdgeOrigin>,
    bought: BTreeSet<NodeId>,
    setup: SetupState,
    schedule: Option<Schedule>,
    search: WbfsState,
    reports: BTreeMap<NodeId, Vec<Triplet>>,
    sampled_scales: Vec<u64>,
    purchases: Vec<Purchase>,
    buy_queue: BTreeMap<NodeId, Vec<NodeId>>,
    held: BTreeSet<NodeId>,
    forwarded: BTreeSet<NodeId>,
    fault: Option<SpannerError>,
    events: Vec<SpannerEvent>,
    last_round: u64,
}

impl SpannerNode {
    fn new(env: NodeEnv<'_>, params: &PathBuyParams, forced: Option<&BTreeSet<NodeId>>) -> Self {
        let is_center = match forced {
            Some(set) => set.contains(&env.id),
            None => is_sampled_center(params, env.seed),
        };
        let options = WbfsOptions {
            keep_receive_log: true,
            record_events: false,
        };
        Self {
            id: env.id,
            seed: env.seed,
            params: params.clone(),
            neighbors: env.neighbors().iter().map(|&(u, _)| u).collect(),
            is_center,
            heard_centers: BTreeSet::new(),
            cluster_of: is_center.then_some(env.id),
            members: BTreeSet::new(),
            h0: BTreeMap::new(),
            bought: BTreeSet::new(),
            setup: SetupState::new(env.id, is_center),
            schedule: None,
            search: WbfsState::new(env.id, is_center, options),
            reports: BTreeMap::new(),
            sampled_scales: Vec::new(),
            purchases: Vec::new(),
            buy_queue: BTreeMap::new(),
            held: BTreeSet::new(),
            forwarded: BTreeSet::new(),
            fault: None,
            events: Vec::new(),
            last_round: 0,
        }
    }

    fn phase(&self, round: u64) -> Phase {
        match (round, self.schedule) {
            (1, _) => Phase::Announce,
            (2, _) => Phase::Join,
            (_, None) => Phase::Setup(round - 2),
            (_, Some(s)) => s.phase(round),
        }
    }

    /// The leader learns the outcome while sending, everyone else while
    /// receiving.
    fn sync_schedule(&mut self) {
        if self.schedule.is_none() {
            if let Some(o) = self.setup.outcome() {
                self.schedule = Some(Schedule::new(o.end, o.diameter_bound, o.center_count));
            }
        }
    }

    fn fail(&mut self, err: SpannerError) {
        self.fault.get_or_insert(err);
    }

    fn add_h0(&mut self, u: NodeId, origin: EdgeOrigin) {
        if self.h0.insert(u, origin).is_none() {
            self.events.push(SpannerEvent::EdgeAdded {
                edge: Edge::new(self.id, u),
                origin,
            });
        }
    }

    fn add_bought(&mut self, u: NodeId) {
        if !self.h0.contains_key(&u) && self.bought.insert(u) {
            self.events.push(SpannerEvent::EdgeAdded {
                edge: Edge::new(self.id, u),
                origin: EdgeOrigin::BoughtPath,
            });
        }
    }

    /// Path buying at a center, from its own list and its members' reports.
    fn plan_purchases(&mut self, centers: u64) {
        let mut table: BTreeMap<NodeId, Vec<(NodeId, u64, u64)>> = BTreeMap::new();
        let own = self.search.list().iter().map(|t| (self.id, t));
        let reported = self.reports.iter().flat_map(|(&v, ts)| ts.iter().map(move |&t| (v, t)));
        for (v, t) in own.chain(reported) {
            table.entry(t.s).or_default().push((v, t.d, t.w));
        }
        for k in self.params.scales() {
            if !is_in_scale_sample(&self.params, self.seed, k) {
                continue;
            }
            self.sampled_scales.push(k);
            for (&ci, cands) in &table {
                let Some((v, length, missing)) = choose_candidate(cands.iter().copied(), k) else {
                    continue;
                };
                self.purchases.push(Purchase {
                    k,
                    center_i: ci,
                    center_j: self.id,
                    endpoint: v,
                    length,
                    missing,
                    path: Vec::new(),
                });
                if v == self.id {
                    self.held.insert(ci);
                } else {
                    let q = self.buy_queue.entry(v).or_default();
                    if !q.contains(&ci) {
                        q.push(ci);
                    }
                }
            }
        }
        if self.buy_queue.values().any(|q| q.len() as u64 > centers) {
            let round = self.last_round;
            self.fail(SpannerError::PipelineOverflow { node: self.id, round });
        }
    }

    /// Buy round in which the order for `source` leaves this node.
    fn buy_slot(&self, source: NodeId, search: u64) -> Option<(u64, NodeId)> {
        self.search
            .last_acceptance(source)
            .map(|rec| (search - rec.round + 1, rec.from))
    }
}

impl NodeProgram for SpannerNode {
    type Event = SpannerEvent;

    fn outgoing(&mut self, round: u64) -> Outbox {
        self.last_round = round;
        let mut out = Outbox::default();
        match self.phase(round) {
            Phase::Announce => {
                if self.is_center {
                    out.broadcast = Some(Message::Announce {
                        tag: AnnounceTag::Center,
                        value: 0,
                    });
                }
            }
            Phase::Join => {
                if !self.is_center {
                    // neighbors are sorted, so the first center heard is the smallest
                    match self.heard_centers.first().copied() {
                        Some(c) => {
                            self.cluster_of = Some(c);
                            self.add_h0(c, EdgeOrigin::ClusterEdge);
                            out.send(
                                c,
                                Message::Announce {
                                    tag: AnnounceTag::Join,
                                    value: 0,
                                },
                            );
                        }
                        None => {
                            for u in self.neighbors.clone() {
                                self.add_h0(u, EdgeOrigin::UnclusteredStar);
                            }
                            out.broadcast = Some(Message::Announce {
                                tag: AnnounceTag::Unclustered,
                                value: 0,
                            });
                        }
                    }
                }
            }
            Phase::Setup(t) => {
                out = self.setup.outgoing(t);
                self.sync_schedule();
            }
            Phase::Search(_) => {
                if let Some(t) = self.search.take_next_send() {
                    out.broadcast = Some(t.to_message());
                }
            }
            Phase::Report(j) => {
                if let (false, Some(c)) = (self.is_center, self.cluster_of) {
                    if let Some(t) = self.search.list().iter().nth(j as usize - 1) {
                        out.send(
                            c,
                            Message::Report {
                                d: t.d,
                                source: t.s,
                                missing: t.w,
                            },
                        );
                    }
                }
            }
            Phase::Order(j) => {
                if self.is_center {
                    if j == 1 {
                        let centers = self.schedule.expect("scheduled").centers;
                        self.plan_purchases(centers);
                    }
                    for (&v, q) in &self.buy_queue {
                        if let Some(&ci) = q.get(j as usize - 1) {
                            out.send(v, Message::Buy { source: ci });
                        }
                    }
                }
            }
            Phase::Buy(b) => {
                let search = self.schedule.expect("scheduled").search;
                let mut used = BTreeSet::new();
                let pending: Vec<NodeId> = self.held.difference(&self.forwarded).copied().collect();
                for s in pending {
                    if s == self.id {
                        continue;
                    }
                    match self.buy_slot(s, search) {
                        None => self.fail(SpannerError::IncompleteRun {
                            node: self.id,
                            missing_source: s,
                        }),
                        Some((slot, u)) if slot == b => {
                            if !used.insert(u) {
                                self.fail(SpannerError::PipelineOverflow { node: self.id, round });
                                continue;
                            }
                            self.forwarded.insert(s);
                            self.add_bought(u);
                            out.send(u, Message::Buy { source: s });
                        }
                        Some((slot, _)) if slot < b => {
                            self.fail(SpannerError::PipelineOverflow { node: self.id, round });
                        }
                        Some(_) => {}
                    }
                }
            }
            Phase::Done => {}
        }
        out
    }

    fn receive(&mut self, round: u64, from: NodeId, msg: &Message) {
        match (self.phase(round), *msg) {
            (
                Phase::Announce,
                Message::Announce {
                    tag: AnnounceTag::Center,
                    ..
                },
            ) => {
                self.heard_centers.insert(from);
            }
            (
                Phase::Join,
                Message::Announce {
                    tag: AnnounceTag::Join, ..
                },
            ) => {
                self.members.insert(from);
                self.add_h0(from, EdgeOrigin::ClusterEdge);
            }
            (
                Phase::Join,
                Message::Announce {
                    tag: AnnounceTag::Unclustered,
                    ..
                },
            ) => {
                self.add_h0(from, EdgeOrigin::UnclusteredStar);
            }
            (Phase::Setup(t), _) => {
                self.setup.receive(t, from, msg);
                self.sync_schedule();
            }
            (Phase::Search(r), Message::Triplet { d, s, w }) => {
                let weight = u64::from(!self.h0.contains_key(&from));
                self.search.offer(r, from, Triplet::new(d, s, w), weight);
            }
            (Phase::Report(_), Message::Report { d, source, missing }) => {
                self.reports
                    .entry(from)
                    .or_default()
                    .push(Triplet::new(d, source, missing));
            }
            (Phase::Order(_), Message::Buy { source }) => {
                self.held.insert(source);
            }
            (Phase::Buy(b), Message::Buy { source }) => {
                self.add_bought(from);
                if source != self.id && self.held.insert(source) {
                    let search = self.schedule.expect("scheduled").search;
                    if self.buy_slot(source, search).is_some_and(|(slot, _)| slot <= b) {
                        self.fail(SpannerError::PipelineOverflow { node: self.id, round });
                    }
                }
            }
            _ => {}
        }
    }

    fn halted(&self) -> bool {
        self.schedule.is_some_and(|s| self.last_round >= s.end)
    }

    fn drain_events(&mut self, out: &mut Vec<SpannerEvent>) {
        out.append(&mut self.events);
    }
}

/// Runs the whole construction inside one simulation. `config.max_rounds`
/// only caps the run; nodes stop on their own schedule. The global seed of
/// `config` is replaced by `seed`.
pub fn distributed_6ap(
    g: &Graph,
    params: &PathBuyParams,
    seed: u64,
    config: &SimConfig,
) -> Result<(SpannerResult, Trace<SpannerEvent>), SpannerError> {
    run(g, params, seed, None, config)
}

/// Same, with the center set fixed by the caller.
pub fn distributed_6ap_with_centers(
    g: &Graph,
    params: &PathBuyParams,
    seed: u64,
    centers: &BTreeSet<NodeId>,
    config: &SimConfig,
) -> Result<(SpannerResult, Trace<SpannerEvent>), SpannerError> {
    run(g, params, seed, Some(centers), config)
}

fn run(
    g: &Graph,
    params: &PathBuyParams,
    seed: u64,
    forced: Option<&BTreeSet<NodeId>>,
    config: &SimConfig,
) -> Result<(SpannerResult, Trace<SpannerEvent>), SpannerError> {
    check_params(g, params)?;
    let config = config.clone().with_seed(seed);
    let sim = run_simulation(g, |env| SpannerNode::new(env, params, forced), &config)?;
    let rounds = sim.trace.rounds_executed();
    if !sim.programs.iter().all(NodeProgram::halted) {
        return Err(SpannerError::Unfinished { rounds });
    }
    if let Some(err) = sim.programs.iter().find_map(|p| p.fault.clone()) {
        return Err(err);
    }
    let centers: BTreeSet<NodeId> = sim.programs.iter().filter(|p| p.is_center).map(|p| p.id).collect();
    for p in &sim.programs {
        if let Some(&c) = centers.iter().find(|&&c| p.search.list().get(c).is_none()) {
            return Err(SpannerError::IncompleteRun {
                node: p.id,
                missing_source: c,
            });
        }
    }

    let mut h0 = BTreeMap::new();
    for p in &sim.programs {
        for (&u, &origin) in &p.h0 {
            h0.insert(Edge::new(p.id, u), origin);
        }
    }
    let clustering = Clustering {
        centers,
        cluster_of: sim.programs.iter().map(|p| p.cluster_of).collect(),
        h0,
    };
    debug_assert_eq!(clustering, cluster_with_centers(g, clustering.centers.clone()));

    let mut edges = clustering.h0.clone();
    for p in &sim.programs {
        for &u in &p.bought {
            edges.entry(Edge::new(p.id, u)).or_insert(EdgeOrigin::BoughtPath);
        }
    }
    let ks = params.scales();
    let mut scale_samples: BTreeMap<u64, BTreeSet<NodeId>> = ks.iter().map(|&k| (k, BTreeSet::new())).collect();
    let mut purchases = Vec::new();
    for p in &sim.programs {
        for &k in &p.sampled_scales {
            scale_samples.entry(k).or_default().insert(p.id);
        }
        for pur in &p.purchases {
            let mut pur = pur.clone();
            pur.path = tree_path(&sim.programs, pur.center_i, pur.endpoint).ok_or(SpannerError::IncompleteRun {
                node: pur.endpoint,
                missing_source: pur.center_i,
            })?;
            purchases.push(pur);
        }
    }
    purchases.sort_by_key(|p| (p.k, p.center_j, p.center_i));

    let mut result = SpannerResult {
        edges,
        clustering,
        scale_samples,
        scales: Vec::new(),
        purchases,
        rounds: Some(rounds),
    };
    result.record_scale_stats(&ks);
    Ok((result, sim.trace))
}

fn tree_path(programs: &[SpannerNode], source: NodeId, v: NodeId) -> Option<Vec<NodeId>> {
    let mut path = vec![v];
    let mut cur = v;
    while cur != source {
        match programs[cur].search.path_map().get(source)? {
            Parent::Node(u) if path.len() <= programs.len() => {
                path.push(u);
                cur = u;
            }
            _ => return None,
        }
    }
    path.reverse();
    Some(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_graph, GraphKind};
    use crate::spanner::{cluster, sequential_6ap, sequential_6ap_with_centers};
    use crate::verify::{check_stretch, enumerate_shortest_paths, single_source_lex};

    fn config() -> SimConfig {
        SimConfig::new(1_000_000)
    }

    #[test]
    fn no_centers_keeps_every_edge() {
        let g = generate_graph(&GraphKind::Path { n: 5 }, 0).unwrap();
        let p = PathBuyParams::new(5, 3.0).unwrap();
        let (r, trace) = distributed_6ap_with_centers(&g, &p, 0, &BTreeSet::new(), &config()).unwrap();
        assert_eq!(r.size(), 4);
        // announce, join, then setup on P5: wave to depth 4 and back
        assert_eq!(r.rounds, Some(trace.rounds_executed()));
        assert!(r.purchases.is_empty());
    }

    #[test]
    fn diamond_with_forced_centers_buys_fewest_missing() {
        let g = Graph::unweighted(4, [(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap();
        let p = PathBuyParams::new(4, 3.0).unwrap();
        let centers = BTreeSet::from([0, 3]);
        let (r, _) = distributed_6ap_with_centers(&g, &p, 0, &centers, &config()).unwrap();
        // nodes 1 and 2 both join center 0
        assert_eq!(r.clustering.cluster_of, vec![Some(0), Some(0), Some(0), Some(3)]);
        for pur in r.purchases.iter().filter(|p| p.center_i != p.center_j) {
            let fewest = enumerate_shortest_paths(&g, pur.center_i, pur.endpoint)
                .iter()
                .map(|path| {
                    path.windows(2)
                        .filter(|e| !r.clustering.h0.contains_key(&Edge::new(e[0], e[1])))
                        .count() as u64
                })
                .min()
                .unwrap();
            assert_eq!(pur.missing, fewest);
            assert_eq!(pur.path.first(), Some(&pur.center_i));
            assert_eq!(pur.path.last(), Some(&pur.endpoint));
        }
        let seq = sequential_6ap_with_centers(&g, &p, 0, centers).unwrap();
        assert_eq!(r.clustering, seq.clustering);
        assert!(check_stretch(&g, &r.edge_set(), 6).unwrap().passed());
    }

    #[test]
    fn agrees_with_sequential_on_samples() {
        for seed in 0..4 {
            let g = generate_graph(&GraphKind::Gnp { n: 50, p: 0.12 }, seed).unwrap();
            let p = PathBuyParams::new(50, 3.0).unwrap();
            let (d, _) = distributed_6ap(&g, &p, seed, &config()).unwrap();
            let s = sequential_6ap(&g, &p, seed).unwrap();
            assert_eq!(d.clustering, s.clustering);
            assert_eq!(d.scale_samples, s.scale_samples);
            let key = |r: &SpannerResult| -> Vec<_> {
                r.purchases
                    .iter()
                    .map(|p| (p.k, p.center_i, p.center_j, p.endpoint, p.length, p.missing))
                    .collect()
            };
            assert_eq!(key(&d), key(&s));
            assert!(check_stretch(&g, &d.edge_set(), 6).unwrap().passed());
            for pur in &d.purchases {
                for e in pur.path.windows(2) {
                    assert!(d.edges.contains_key(&Edge::new(e[0], e[1])));
                }
            }
        }
    }

    #[test]
    fn search_entries_count_missing_edges() {
        for seed in 0..4 {
            let g = generate_graph(&GraphKind::Gnp { n: 50, p: 0.12 }, seed).unwrap();
            let p = PathBuyParams::new(50, 3.0).unwrap();
            let sim = run_simulation(&g, |env| SpannerNode::new(env, &p, None), &config().with_seed(seed)).unwrap();
            let end = sim.programs[0].schedule.unwrap().end;
            assert!(sim.programs.iter().all(|q| q.schedule.unwrap().end == end));
            let cl = cluster(&g, &p, seed);
            for &c in &cl.centers {
                let oracle = single_source_lex(&g.reweighted(1, |e, _| u64::from(!cl.h0.contains_key(&e))).unwrap(), c);
                for q in &sim.programs {
                    let e = q.search.list().get(c).unwrap();
                    assert_eq!(Some((e.d, e.w)), oracle[q.id]);
                    let path = tree_path(&sim.programs, c, q.id).unwrap();
                    let missing = path
                        .windows(2)
                        .filter(|x| !cl.h0.contains_key(&Edge::new(x[0], x[1])))
                        .count() as u64;
                    assert_eq!((path.len() as u64 - 1, missing), (e.d, e.w));
                }
            }
        }
    }

    #[test]
    fn too_few_rounds_is_reported() {
        let g = generate_graph(&GraphKind::Cycle { n: 8 }, 0).unwrap();
        let p = PathBuyParams::new(8, 3.0).unwrap();
        let err = distributed_6ap(&g, &p, 0, &SimConfig::new(5)).unwrap_err();
        assert_eq!(err, SpannerError::Unfinished { rounds: 5 });
    }
}
