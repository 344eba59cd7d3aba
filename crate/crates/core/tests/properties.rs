mod common;

use std::collections::BTreeSet;

use congest_core::graph::{diameter, generate_graph_with_meta, parse_edge_list, write_edge_list, Graph, GraphKind};
use congest_core::sim::{bits_per_message, SimConfig};
use congest_core::verify::{all_pairs_lex, check_wbfs_tree};
use congest_core::wbfs::{
    check_round_invariants, convergence_rounds, extract_trees, run_wbfs, WbfsOptions, WbfsProgram,
};
use proptest::prelude::*;

fn small_graph() -> impl Strategy<Value = Graph> {
    (2usize..14, 0.1f64..1.0, any::<u64>(), 0u64..20).prop_map(|(n, p, seed, w)| common::weighted_gnp(n, p, w, seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn wbfs_matches_oracle_and_keeps_invariants(g in small_graph(), mask in any::<u16>()) {
        let n = g.node_count();
        let mut sources: BTreeSet<usize> = (0..n).filter(|v| mask >> v & 1 == 1).collect();
        if sources.is_empty() {
            sources.insert(0);
        }
        let options = WbfsOptions { keep_receive_log: false, record_events: true };
        let rounds = convergence_rounds(sources.len(), diameter(&g));
        let sim = run_wbfs(&g, &sources, options, &SimConfig::new(rounds)).unwrap();
        prop_assert!(check_round_invariants(&sim.trace).is_empty());
        prop_assert!(sim.trace.stats.max_bits <= bits_per_message(n, g.weight_bound()));
        let apsp = all_pairs_lex(&g);
        let trees = extract_trees(sim.programs.iter().map(WbfsProgram::state), &sources).unwrap();
        for (s, tree) in &trees {
            prop_assert!(check_wbfs_tree(&g, tree).is_empty());
            for (v, &want) in apsp[*s].iter().enumerate() {
                prop_assert_eq!(Some((tree.dist[v] as u64, tree.weight[v])), want);
            }
        }
    }

    #[test]
    fn edge_list_round_trips(g in small_graph()) {
        let text = write_edge_list(&g, None::<&[_]>);
        let back = parse_edge_list(&text).unwrap();
        prop_assert_eq!(back.edges().collect::<Vec<_>>(), g.edges().collect::<Vec<_>>());
    }

    #[test]
    fn generated_graphs_are_connected(n in 2usize..60, p in 0.001f64..1.0, seed in any::<u64>()) {
        let gen = generate_graph_with_meta(&GraphKind::Gnp { n, p }, seed).unwrap();
        prop_assert_eq!(gen.graph.node_count(), n);
        prop_assert!(diameter(&gen.graph) < n);
    }
}
