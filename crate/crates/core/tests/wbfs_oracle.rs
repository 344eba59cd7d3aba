mod common;

use std::collections::BTreeSet;

use congest_core::graph::{diameter, Graph, NodeId};
use congest_core::sim::{DeliveryOrder, Message, Recipient, SimConfig};
use congest_core::verify::{all_pairs_lex, check_wbfs_tree};
use congest_core::wbfs::{
    check_round_invariants, convergence_rounds, extract_trees, run_wbfs, Triplet, WbfsEvent, WbfsOptions, WbfsProgram,
};

use common::{random_instance, random_sources};

fn traced() -> WbfsOptions {
    WbfsOptions {
        keep_receive_log: false,
        record_events: true,
    }
}

fn budget(g: &Graph, s: &BTreeSet<NodeId>) -> u64 {
    convergence_rounds(s.len(), diameter(g))
}

#[test]
fn lists_match_the_lexicographic_oracle_after_the_budget() {
    for seed in 0..100 {
        let g = random_instance(10, 200, seed);
        let n = g.node_count();
        let apsp = all_pairs_lex(&g);
        for count in [1, 3, n] {
            let s = random_sources(n, count, seed);
            let sim = run_wbfs(&g, &s, traced(), &SimConfig::new(budget(&g, &s))).unwrap();
            for p in &sim.programs {
                let v = p.state().node();
                let got: Vec<(u64, NodeId, u64)> = p.state().list().iter().map(|t| (t.d, t.s, t.w)).collect();
                let mut want: Vec<(u64, NodeId, u64)> = s
                    .iter()
                    .map(|&src| {
                        let (d, w) = apsp[src][v].unwrap();
                        (d, src, w)
                    })
                    .collect();
                want.sort();
                assert_eq!(got, want, "seed {seed}, |S| = {count}, node {v}");
            }
            let trees = extract_trees(sim.programs.iter().map(WbfsProgram::state), &s).unwrap();
            for tree in trees.values() {
                assert!(check_wbfs_tree(&g, tree).is_empty(), "seed {seed}");
            }
            assert!(check_round_invariants(&sim.trace).is_empty(), "seed {seed}");
        }
    }
}

#[test]
fn lists_are_stable_after_the_budget() {
    for seed in 0..30 {
        let g = random_instance(10, 80, seed);
        let n = g.node_count();
        let s = random_sources(n, 3, seed);
        let b = budget(&g, &s);
        for extra in [1, 5, n as u64] {
            let sim = run_wbfs(&g, &s, traced(), &SimConfig::new(b + extra)).unwrap();
            let late: Vec<_> = sim
                .trace
                .rounds
                .iter()
                .filter(|r| r.round > b && !r.events.is_empty())
                .collect();
            assert!(late.is_empty(), "seed {seed}: list changed after round {b}");
        }
    }
}

#[test]
fn delivery_order_does_not_change_the_lists() {
    for seed in 0..30 {
        let g = random_instance(10, 120, seed);
        let s = random_sources(g.node_count(), 4, seed);
        let mut cfg = SimConfig::new(budget(&g, &s)).without_trace();
        let asc = run_wbfs(&g, &s, WbfsOptions::default(), &cfg).unwrap();
        cfg.delivery_order = DeliveryOrder::DescendingSender;
        let desc = run_wbfs(&g, &s, WbfsOptions::default(), &cfg).unwrap();
        for (a, d) in asc.programs.iter().zip(&desc.programs) {
            assert_eq!(a.state().list(), d.state().list());
        }
    }
}

#[test]
fn parallel_and_replay_checked_runs_agree() {
    let g = random_instance(100, 150, 3);
    let s = random_sources(g.node_count(), 10, 3);
    let cfg = SimConfig::new(budget(&g, &s));
    let base = run_wbfs(&g, &s, traced(), &cfg).unwrap();
    let mut par_cfg = cfg.clone();
    par_cfg.parallel = true;
    par_cfg.replay_check = true;
    let par = run_wbfs(&g, &s, traced(), &par_cfg).unwrap();
    assert_eq!(base.trace.stats, par.trace.stats);
    for (a, b) in base.programs.iter().zip(&par.programs) {
        assert_eq!(a.state().list(), b.state().list());
    }
}

#[test]
fn each_triplet_is_broadcast_at_most_once_per_node() {
    for seed in 0..20 {
        let g = random_instance(10, 100, seed);
        let s = random_sources(g.node_count(), 5, seed);
        let sim = run_wbfs(&g, &s, traced(), &SimConfig::new(budget(&g, &s) + 5)).unwrap();
        let mut seen: BTreeSet<(NodeId, Triplet)> = BTreeSet::new();
        for rec in &sim.trace.rounds {
            let mut senders = BTreeSet::new();
            for tx in &rec.sends {
                assert_eq!(tx.to, Recipient::Broadcast);
                let Message::Triplet { d, s, w } = tx.message else {
                    panic!("only triplets")
                };
                assert!(
                    senders.insert(tx.from),
                    "two sends by {} in round {}",
                    tx.from,
                    rec.round
                );
                assert!(
                    seen.insert((tx.from, Triplet::new(d, s, w))),
                    "repeat send by {}",
                    tx.from
                );
            }
        }
    }
}

#[test]
fn triangle_keeps_the_short_heavy_edge() {
    let g = Graph::from_edges(3, [(0, 1, 1), (1, 2, 1), (0, 2, 5)]).unwrap();
    let s = BTreeSet::from([0]);
    let sim = run_wbfs(&g, &s, traced(), &SimConfig::new(5)).unwrap();
    assert_eq!(sim.programs[2].state().list().get(0), Some(Triplet::new(1, 0, 5)));
    // (1,0,1) from node 1 arrives in round 2 and is not accepted
    let inserts_at_2: Vec<_> = sim
        .trace
        .rounds
        .iter()
        .flat_map(|r| r.events.iter().map(move |e| (r.round, e)))
        .filter(|(_, (v, _))| *v == 2)
        .collect();
    assert_eq!(inserts_at_2.len(), 1);
}

#[test]
fn diamond_replaces_the_heavy_entry() {
    let g = Graph::from_edges(4, [(0, 1, 3), (0, 2, 1), (1, 3, 1), (2, 3, 1)]).unwrap();
    let s = BTreeSet::from([0]);
    let sim = run_wbfs(&g, &s, traced(), &SimConfig::new(3)).unwrap();
    assert_eq!(sim.programs[3].state().list().get(0), Some(Triplet::new(2, 0, 2)));
    let events_3: Vec<WbfsEvent> = sim
        .trace
        .rounds
        .iter()
        .flat_map(|r| r.events.iter())
        .filter(|(v, _)| *v == 3)
        .map(|(_, e)| *e)
        .collect();
    // both arrivals happen in round 2; ascending delivery takes node 1 first
    assert_eq!(
        events_3,
        vec![
            WbfsEvent::Inserted {
                triplet: Triplet::new(2, 0, 4),
                parent: 1
            },
            WbfsEvent::Removed {
                triplet: Triplet::new(2, 0, 4)
            },
            WbfsEvent::Inserted {
                triplet: Triplet::new(2, 0, 2),
                parent: 2
            },
        ]
    );
}
