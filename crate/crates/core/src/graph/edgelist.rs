//! Plain-text edge lists: a header `n m W`, then `m` lines `u v w` with
//! `u < v`. Lines starting with `#` are comments.

use std::fmt::Write as _;
use std::path::Path as FsPath;

use super::{Edge, Graph, GraphBuilder, GraphError, NodeId, Weight};

fn parse_err(line: usize, message: impl Into<String>) -> GraphError {
    GraphError::Parse {
        line,
        message: message.into(),
    }
}

fn fields<const N: usize>(line_no: usize, line: &str) -> Result<[u64; N], GraphError> {
    let mut out = [0u64; N];
    let mut it = line.split_whitespace();
    for slot in out.iter_mut() {
        let tok = it
            .next()
            .ok_or_else(|| parse_err(line_no, format!("expected {N} fields")))?;
        *slot = tok
            .parse()
            .map_err(|_| parse_err(line_no, format!("not a non-negative integer: {tok:?}")))?;
    }
    if let Some(extra) = it.next() {
        return Err(parse_err(line_no, format!("unexpected trailing field {extra:?}")));
    }
    Ok(out)
}

fn parse_records(text: &str) -> Result<(usize, GraphBuilder), GraphError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (header_line, header) = lines.next().ok_or_else(|| parse_err(1, "missing header"))?;
    let [n, m, bound] = fields::<3>(header_line, header)?;
    let n = n as usize;
    let mut builder = GraphBuilder::new(n, bound).map_err(|e| parse_err(header_line, e.to_string()))?;

    let mut count = 0u64;
    let mut last_line = header_line;
    for (line_no, line) in lines {
        last_line = line_no;
        if count == m {
            return Err(parse_err(line_no, format!("more than the declared {m} edges")));
        }
        let [u, v, w] = fields::<3>(line_no, line)?;
        if u >= v {
            return Err(parse_err(line_no, format!("endpoints must satisfy u < v, got {u} {v}")));
        }
        builder
            .add_edge(u as NodeId, v as NodeId, w as Weight)
            .map_err(|e| parse_err(line_no, e.to_string()))?;
        count += 1;
    }
    if count != m {
        return Err(parse_err(last_line, format!("declared {m} edges, found {count}")));
    }
    Ok((header_line, builder))
}

pub fn parse_edge_list(text: &str) -> Result<Graph, GraphError> {
    let (header_line, builder) = parse_records(text)?;
    builder.finish().map_err(|e| parse_err(header_line, e.to_string()))
}

/// Node count and edges of an edge-list file that need not be connected,
/// such as an exported subgraph.
pub fn parse_edge_set(text: &str) -> Result<(usize, Vec<(Edge, Weight)>), GraphError> {
    let (_, builder) = parse_records(text)?;
    let mut edges: Vec<(Edge, Weight)> = builder
        .adjacency
        .iter()
        .enumerate()
        .flat_map(|(u, row)| {
            row.iter()
                .filter(move |&&(v, _)| u < v)
                .map(move |&(v, w)| (Edge(u, v), w))
        })
        .collect();
    edges.sort_unstable();
    Ok((builder.adjacency.len(), edges))
}

pub fn read_edge_list(path: impl AsRef<FsPath>) -> Result<Graph, GraphError> {
    let text = std::fs::read_to_string(path.as_ref())
        .map_err(|e| GraphError::Io(format!("{}: {e}", path.as_ref().display())))?;
    parse_edge_list(&text)
}

/// Serializes `edges` of `g` (or all of them) in edge-list format.
pub fn write_edge_list<'a, I>(g: &Graph, edges: Option<I>) -> String
where
    I: IntoIterator<Item = &'a Edge>,
{
    let chosen: Vec<(Edge, Weight)> = match edges {
        Some(es) => {
            let mut v: Vec<_> = es
                .into_iter()
                .map(|&e| (e, g.weight(e.0, e.1).expect("edge of host graph")))
                .collect();
            v.sort_unstable();
            v
        }
        None => g.edges().collect(),
    };
    let mut out = format!("{} {} {}\n", g.node_count(), chosen.len(), g.weight_bound());
    for (e, w) in chosen {
        writeln!(out, "{} {} {}", e.0, e.1, w).unwrap();
    }
    out
}
