use std::collections::BTreeSet;
use std::time::Instant;

use congest_core::graph::{diameter, parse_edge_set, write_edge_list, Edge, Graph};
use congest_core::sim::SimConfig;
use congest_core::spanner::{distributed_6ap, sequential_6ap, PathBuyParams, SpannerError, SpannerResult};
use congest_core::verify::{check_detection, check_stretch, check_wbfs_tree, write_violations_jsonl, Violation};
use congest_core::wbfs::{
    check_round_invariants, convergence_rounds, extract_trees, run_wbfs, solve_detection, WbfsError, WbfsOptions,
    WbfsProgram,
};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::error::CliError;
use crate::spec::{GraphSource, SourceSelection};

/// One seed's result: a flat report row plus optional trace lines.
#[derive(Debug, Default)]
pub struct RunRecord {
    pub row: Map<String, Value>,
    pub passed: bool,
    pub trace: Vec<u8>,
}

fn row(value: Value) -> Map<String, Value> {
    match value {
        Value::Object(m) => m,
        _ => unreachable!("rows are objects"),
    }
}

fn io_err(path: &str) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::io(path, e)
}

fn append_trace<T: Serialize>(
    buf: &mut Vec<u8>,
    seed: u64,
    mut body: impl FnMut(&mut Vec<u8>) -> std::io::Result<()>,
    header: T,
) {
    let head = json!({"record": "run", "seed": seed, "run": header});
    buf.extend(serde_json::to_vec(&head).expect("header serializes"));
    buf.push(b'\n');
    body(buf).expect("writing to memory");
}

pub struct WbfsArgs<'a> {
    pub graph: &'a GraphSource,
    pub sources: &'a SourceSelection,
    pub rounds: Option<u64>,
    pub verify: bool,
    pub trace: bool,
}

pub fn wbfs(args: &WbfsArgs<'_>, seed: u64) -> Result<RunRecord, CliError> {
    let g = args.graph.load(seed)?;
    let n = g.node_count();
    let s = args.sources.resolve(n, seed)?;
    let d = diameter(&g);
    let budget = convergence_rounds(s.len(), d);
    let rounds = args.rounds.unwrap_or(budget);
    let options = WbfsOptions {
        keep_receive_log: false,
        record_events: true,
    };
    let sim = run_wbfs(&g, &s, options, &SimConfig::new(rounds).with_seed(seed))?;
    let stabilized = sim
        .trace
        .rounds
        .iter()
        .filter(|r| !r.events.is_empty())
        .map(|r| r.round)
        .max()
        .unwrap_or(0);

    let mut violations: Vec<Violation> = Vec::new();
    let trees = extract_trees(sim.programs.iter().map(WbfsProgram::state), &s);
    let incomplete = match &trees {
        Err(WbfsError::IncompleteRun { node, missing_source }) => Some(json!({"node": node, "source": missing_source})),
        Err(e) => return Err(CliError::Spec(e.to_string())),
        Ok(_) => None,
    };
    if args.verify {
        violations.extend(check_round_invariants(&sim.trace).iter().map(Violation::from));
        if let Ok(trees) = &trees {
            for t in trees.values() {
                violations.extend(check_wbfs_tree(&g, t));
            }
        }
    }
    let passed = incomplete.is_none() && violations.is_empty();
    let mut rec = RunRecord {
        row: row(json!({
            "n": n,
            "m": g.edge_count(),
            "seed": seed,
            "sources": s,
            "diameter": d,
            "budget": budget,
            "rounds": rounds,
            "round_stabilized": stabilized,
            "messages": sim.trace.stats.total_messages,
            "max_bits": sim.trace.stats.max_bits,
            "bit_budget": sim.trace.stats.bit_budget,
            "complete": incomplete.is_none(),
            "violations": violations.len(),
        })),
        passed,
        trace: Vec::new(),
    };
    if let Some(missing) = incomplete {
        rec.row.insert("incomplete".into(), missing);
    }
    if args.trace {
        append_trace(
            &mut rec.trace,
            seed,
            |buf| {
                sim.trace.write_jsonl(&g, &mut *buf)?;
                write_violations_jsonl(&violations, &mut *buf)
            },
            "wbfs",
        );
    }
    Ok(rec)
}

pub struct DetectionArgs<'a> {
    pub graph: &'a GraphSource,
    pub sources: &'a SourceSelection,
    pub d: u64,
    pub k: usize,
    pub verify: bool,
}

pub fn detection(args: &DetectionArgs<'_>, seed: u64) -> Result<RunRecord, CliError> {
    if args.k == 0 {
        return Err(CliError::Spec("detection needs k >= 1".into()));
    }
    let g = args.graph.load(seed)?;
    let s = args.sources.resolve(g.node_count(), seed)?;
    let dd = diameter(&g);
    let answers = solve_detection(&g, &s, args.d, args.k, dd)?;
    let violations = if args.verify {
        check_detection(&g, &s, args.d, args.k, &answers)
    } else {
        Vec::new()
    };
    Ok(RunRecord {
        row: row(json!({
            "n": g.node_count(),
            "m": g.edge_count(),
            "seed": seed,
            "sources": s,
            "d": args.d,
            "k": args.k,
            "rounds": args.d.min(dd as u64) + args.k.min(s.len()) as u64,
            "violations": violations.len(),
            "answers": answers,
        })),
        passed: violations.is_empty(),
        trace: Vec::new(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SpannerMode {
    Seq,
    Dist,
}

pub struct SpannerArgs<'a> {
    pub graph: &'a GraphSource,
    pub c: f64,
    pub mode: SpannerMode,
    pub rounds: Option<u64>,
    pub verify: bool,
    pub trace: bool,
    pub timed: bool,
}

/// A built spanner with its row; `graph` is kept for export.
pub struct SpannerRun {
    pub record: RunRecord,
    pub graph: Graph,
    pub result: Option<SpannerResult>,
}

pub fn spanner(args: &SpannerArgs<'_>, seed: u64) -> Result<SpannerRun, CliError> {
    let g = args.graph.load(seed)?;
    let params = PathBuyParams::new(g.node_count(), args.c)?;
    let start = Instant::now();
    let mut trace = Vec::new();
    let built = match args.mode {
        SpannerMode::Seq => sequential_6ap(&g, &params, seed),
        SpannerMode::Dist => {
            let mut cfg = SimConfig::new(args.rounds.unwrap_or(u64::MAX));
            cfg.record_trace = args.trace;
            distributed_6ap(&g, &params, seed, &cfg).map(|(r, t)| {
                if args.trace {
                    append_trace(&mut trace, seed, |buf| t.write_jsonl(&g, &mut *buf), "spanner");
                }
                r
            })
        }
    };
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let mode = match args.mode {
        SpannerMode::Seq => "sequential",
        SpannerMode::Dist => "distributed",
    };
    let base = json!({
        "n": g.node_count(),
        "m": g.edge_count(),
        "seed": seed,
        "c": args.c,
        "mode": mode,
    });
    let result = match built {
        Ok(r) => r,
        Err(SpannerError::InvalidParameter(msg)) => return Err(CliError::Spec(msg)),
        Err(SpannerError::Graph(e)) => return Err(e.into()),
        Err(e) => {
            // the construction itself misbehaved: a check failure, not a usage error
            let mut r = row(base);
            r.insert("error".into(), e.to_string().into());
            return Ok(SpannerRun {
                record: RunRecord {
                    row: r,
                    passed: false,
                    trace,
                },
                graph: g,
                result: None,
            });
        }
    };

    let mut r = row(base);
    r.insert("edges_H".into(), result.size().into());
    r.insert("size_H0".into(), result.clustering.h0.len().into());
    r.insert("centers".into(), result.clustering.centers.len().into());
    r.insert("rounds".into(), json!(result.rounds));
    r.insert("per_k".into(), json!(result.scales));
    let mut passed = true;
    if args.verify {
        let report = check_stretch(&g, &result.edge_set(), 6)?;
        passed = report.passed();
        r.insert("stretch_max".into(), json!(report.max_excess));
        r.insert("worst_pair".into(), json!(report.worst_pair));
    }
    if args.timed {
        r.insert("wall_ms".into(), json!((wall_ms * 1e3).round() / 1e3));
    }
    Ok(SpannerRun {
        record: RunRecord { row: r, passed, trace },
        graph: g,
        result: Some(result),
    })
}

pub fn export_edges(run: &SpannerRun, path: &str) -> Result<(), CliError> {
    let Some(result) = &run.result else {
        return Err(CliError::Spec("no spanner to export".into()));
    };
    let h: BTreeSet<Edge> = result.edge_set();
    std::fs::write(path, write_edge_list(&run.graph, Some(h.iter()))).map_err(io_err(path))
}

pub fn verify_subgraph(graph: &GraphSource, subgraph: &str, beta: u64, seed: u64) -> Result<RunRecord, CliError> {
    let g = graph.load(seed)?;
    let text = std::fs::read_to_string(subgraph).map_err(io_err(subgraph))?;
    let (n, edges) = parse_edge_set(&text)?;
    if n != g.node_count() {
        return Err(CliError::Spec(format!(
            "subgraph has {n} nodes, graph has {}",
            g.node_count()
        )));
    }
    let h: BTreeSet<Edge> = edges.into_iter().map(|(e, _)| e).collect();
    let report = check_stretch(&g, &h, beta)?;
    Ok(RunRecord {
        row: row(json!({
            "n": g.node_count(),
            "m": g.edge_count(),
            "seed": seed,
            "edges_H": h.len(),
            "beta": beta,
            "stretch_max": report.max_excess,
            "worst_pair": report.worst_pair,
        })),
        passed: report.passed(),
        trace: Vec::new(),
    })
}
