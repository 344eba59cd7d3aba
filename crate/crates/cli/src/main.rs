mod commands;
mod error;
mod spec;
mod trend;

use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use congest_core::graph::diameter;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value};

use commands::{RunRecord, SpannerMode};
use error::CliError;
use spec::{parse_seeds, parse_sizes, GraphSource, SourceSelection};

/// Simulator and experiment harness for CONGEST shortest-path and spanner
/// algorithms.
#[derive(Debug, Parser, Serialize)]
#[command(name = "congest-sim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args, Serialize)]
struct Common {
    /// Edge-list file or `gen:<kind>:key=value,...`.
    #[arg(long, global = true)]
    graph: Option<String>,
    /// `3`, `0,1,5` or `0..20`.
    #[arg(long = "seeds", alias = "seed", global = true, default_value = "0")]
    seeds: String,
    /// Spanner sampling constant, above 2.
    #[arg(long, global = true, default_value_t = 3.0)]
    c: f64,
    /// `0,3,5`, `all` or `random:k`.
    #[arg(long, global = true, default_value = "0")]
    sources: String,
    /// Round budget override.
    #[arg(long, global = true)]
    rounds: Option<u64>,
    /// Run the exact checks; failures give exit code 1.
    #[arg(long, global = true)]
    verify: bool,
    /// JSONL trace destination.
    #[arg(long, global = true)]
    trace: Option<String>,
    /// Report destination (stdout if absent).
    #[arg(long, global = true)]
    out: Option<String>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case", tag = "command")]
enum Command {
    /// Multi-source lightest shortest-path trees.
    Wbfs,
    /// (S, d, k)-source detection.
    Detection {
        #[arg(long)]
        d: u64,
        #[arg(long)]
        k: usize,
    },
    /// Centralized +6 spanner.
    SpannerSeq {
        /// Write H as an edge list; `{seed}` is replaced per run.
        #[arg(long)]
        export_edges: Option<String>,
    },
    /// Distributed +6 spanner inside the simulator.
    SpannerDist {
        #[arg(long)]
        export_edges: Option<String>,
    },
    /// Additive stretch of an edge subset of the graph.
    Verify {
        #[arg(long)]
        subgraph: String,
        #[arg(long, default_value_t = 6)]
        beta: u64,
    },
    /// Spanner runs with wall-clock timing.
    Bench {
        #[arg(long, value_enum, default_value_t = SpannerMode::Dist)]
        mode: SpannerMode,
    },
    /// Size and round scaling over several graph sizes.
    Trend {
        /// Ascending comma-separated sizes.
        #[arg(long, default_value = "64,128,256,512")]
        sizes: String,
        #[arg(long, value_enum, default_value_t = SpannerMode::Dist)]
        mode: SpannerMode,
    },
}

struct Report {
    runs: Vec<Map<String, Value>>,
    passed: bool,
    trace: Vec<u8>,
    extra: Option<(String, Value)>,
}

impl Report {
    fn from_records(records: Vec<RunRecord>) -> Self {
        let passed = records.iter().all(|r| r.passed);
        let mut trace = Vec::new();
        let mut runs = Vec::with_capacity(records.len());
        for r in records {
            trace.extend(r.trace);
            runs.push(r.row);
        }
        Self {
            runs,
            passed,
            trace,
            extra: None,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = std::env::var("CONGEST_SIM_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        // a second initialization only happens in tests; ignore it
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build_global();
    }
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn graph_source(common: &Common) -> Result<GraphSource, CliError> {
    common
        .graph
        .as_deref()
        .ok_or_else(|| CliError::Spec("--graph is required".into()))?
        .parse()
}

fn per_seed<T: Send>(seeds: &[u64], f: impl Fn(u64) -> Result<T, CliError> + Sync) -> Result<Vec<T>, CliError> {
    seeds.par_iter().map(|&s| f(s)).collect()
}

fn export_path(template: &str, seed: u64, seed_count: usize) -> Result<String, CliError> {
    if template.contains("{seed}") {
        Ok(template.replace("{seed}", &seed.to_string()))
    } else if seed_count == 1 {
        Ok(template.to_string())
    } else {
        Err(CliError::Spec(
            "--export-edges needs `{seed}` when several seeds are given".into(),
        ))
    }
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    let common = &cli.common;
    let seeds = parse_seeds(&common.seeds)?;
    let graph = graph_source(common)?;
    if !(common.c > 2.0 && common.c.is_finite())
        && !matches!(
            cli.command,
            Command::Wbfs | Command::Detection { .. } | Command::Verify { .. }
        )
    {
        return Err(CliError::Spec(format!(
            "--c must be a finite value above 2, got {}",
            common.c
        )));
    }

    let report = match &cli.command {
        Command::Wbfs => {
            let sources: SourceSelection = common.sources.parse()?;
            let args = commands::WbfsArgs {
                graph: &graph,
                sources: &sources,
                rounds: common.rounds,
                verify: common.verify,
                trace: common.trace.is_some(),
            };
            Report::from_records(per_seed(&seeds, |s| commands::wbfs(&args, s))?)
        }
        Command::Detection { d, k } => {
            let sources: SourceSelection = common.sources.parse()?;
            let args = commands::DetectionArgs {
                graph: &graph,
                sources: &sources,
                d: *d,
                k: *k,
                verify: common.verify,
            };
            Report::from_records(per_seed(&seeds, |s| commands::detection(&args, s))?)
        }
        Command::SpannerSeq { export_edges } | Command::SpannerDist { export_edges } => {
            let mode = match cli.command {
                Command::SpannerSeq { .. } => SpannerMode::Seq,
                _ => SpannerMode::Dist,
            };
            let args = commands::SpannerArgs {
                graph: &graph,
                c: common.c,
                mode,
                rounds: common.rounds,
                verify: common.verify,
                trace: common.trace.is_some(),
                timed: false,
            };
            let runs = per_seed(&seeds, |s| {
                let run = commands::spanner(&args, s)?;
                if let Some(t) = export_edges {
                    if run.result.is_some() {
                        commands::export_edges(&run, &export_path(t, s, seeds.len())?)?;
                    }
                }
                Ok(run.record)
            })?;
            Report::from_records(runs)
        }
        Command::Verify { subgraph, beta } => Report::from_records(per_seed(&seeds, |s| {
            commands::verify_subgraph(&graph, subgraph, *beta, s)
        })?),
        Command::Bench { mode } => {
            let args = commands::SpannerArgs {
                graph: &graph,
                c: common.c,
                mode: *mode,
                rounds: common.rounds,
                verify: common.verify,
                trace: false,
                timed: true,
            };
            // sequential so timings are not skewed by sibling runs
            let records = seeds
                .iter()
                .map(|&s| commands::spanner(&args, s).map(|r| r.record))
                .collect::<Result<Vec<_>, _>>()?;
            Report::from_records(records)
        }
        Command::Trend { sizes, mode } => trend_report(common, &graph, &seeds, &parse_sizes(sizes)?, *mode)?,
    };

    if let Some(path) = &common.trace {
        std::fs::write(path, &report.trace).map_err(|e| CliError::io(path, e))?;
    }
    let body = match common.format {
        Format::Json => {
            let mut top = Map::new();
            top.insert("spec".into(), serde_json::to_value(cli).expect("spec serializes"));
            top.insert("passed".into(), report.passed.into());
            top.insert(
                "runs".into(),
                Value::Array(report.runs.into_iter().map(Value::Object).collect()),
            );
            if let Some((k, v)) = report.extra {
                top.insert(k, v);
            }
            let mut s = serde_json::to_string_pretty(&Value::Object(top)).expect("report serializes");
            s.push('\n');
            s.into_bytes()
        }
        Format::Csv => to_csv(&report.runs)?,
    };
    match &common.out {
        Some(path) => std::fs::write(path, body).map_err(|e| CliError::io(path, e))?,
        None => std::io::stdout()
            .write_all(&body)
            .map_err(|e| CliError::io("<stdout>", e))?,
    }
    Ok(report.passed)
}

fn trend_report(
    common: &Common,
    graph: &GraphSource,
    seeds: &[u64],
    sizes: &[usize],
    mode: SpannerMode,
) -> Result<Report, CliError> {
    if matches!(graph, GraphSource::File(_)) {
        return Err(CliError::Spec("trend needs a generator graph source".into()));
    }
    let jobs: Vec<(usize, u64)> = sizes.iter().flat_map(|&n| seeds.iter().map(move |&s| (n, s))).collect();
    let runs: Vec<(trend::Sample, RunRecord)> = jobs
        .par_iter()
        .map(|&(n, seed)| {
            let sized = graph.with_size(n);
            let args = commands::SpannerArgs {
                graph: &sized,
                c: common.c,
                mode,
                rounds: common.rounds,
                verify: common.verify,
                trace: false,
                timed: false,
            };
            let run = commands::spanner(&args, seed)?;
            let sample = trend::Sample {
                n,
                seed,
                edges: run.result.as_ref().map_or(0, |r| r.size()),
                diameter: diameter(&run.graph),
                rounds: run.result.as_ref().and_then(|r| r.rounds),
            };
            Ok((sample, run.record))
        })
        .collect::<Result<_, CliError>>()?;

    let failed = runs.iter().any(|(_, r)| !r.passed);
    let samples: Vec<trend::Sample> = runs.iter().map(|(s, _)| *s).collect();
    let (rows, fit) = trend::summarize(&samples);
    eprintln!(
        "fit: C = {:.6}, ratio spread = {:.3}, a = {}, b = {}",
        fit.c,
        fit.h_ratio_spread,
        fit.a.map_or("-".into(), |a| format!("{a:.4}")),
        fit.b.map_or("-".into(), |b| format!("{b:.4}")),
    );
    let table: Vec<Map<String, Value>> = rows
        .iter()
        .map(|r| match serde_json::to_value(r).expect("row serializes") {
            Value::Object(m) => m,
            _ => unreachable!(),
        })
        .collect();
    Ok(Report {
        runs: table,
        passed: !failed,
        trace: Vec::new(),
        extra: Some(("fit".into(), json!({"fit": fit, "samples": samples}))),
    })
}

fn to_csv(rows: &[Map<String, Value>]) -> Result<Vec<u8>, CliError> {
    let mut header: Vec<&String> = Vec::new();
    for r in rows {
        for k in r.keys() {
            if !header.contains(&k) {
                header.push(k);
            }
        }
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header.iter().map(|k| k.as_str()))?;
    for r in rows {
        w.write_record(header.iter().map(|k| match r.get(*k) {
            None | Some(Value::Null) => String::new(),
            Some(Value::String(s)) => s.clone(),
            Some(v) => v.to_string(),
        }))?;
    }
    w.into_inner().map_err(|e| CliError::Spec(e.to_string()))
}
