//! Parsing of the command-line mini languages: graph sources, seed lists
//! and source selections.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::str::FromStr;

use congest_core::graph::{assign_random_weights, generate_graph, read_edge_list, Graph, GraphKind, NodeId};
use congest_core::seed::{derive_seed, rng_from};
use rand::seq::index::sample;
use serde::Serialize;

use crate::error::CliError;

/// `gen:<kind>:<key>=<value>,...` or a path to an edge-list file.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum GraphSource {
    File(PathBuf),
    Generated {
        kind: String,
        params: Vec<(String, String)>,
    },
}

impl FromStr for GraphSource {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let Some(rest) = s.strip_prefix("gen:") else {
            return Ok(Self::File(PathBuf::from(s)));
        };
        let (kind, args) = rest.split_once(':').unwrap_or((rest, ""));
        let params = args
            .split(',')
            .filter(|a| !a.is_empty())
            .map(|a| {
                a.split_once('=')
                    .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                    .ok_or_else(|| CliError::Spec(format!("generator argument `{a}` is not key=value")))
            })
            .collect::<Result<_, _>>()?;
        Ok(Self::Generated {
            kind: kind.to_string(),
            params,
        })
    }
}

impl GraphSource {
    fn param<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        let Self::Generated { kind, params } = self else {
            return Ok(None);
        };
        params
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| {
                v.parse()
                    .map_err(|_| CliError::Spec(format!("bad value `{v}` for `{key}` in gen:{kind}")))
            })
            .transpose()
    }

    fn required<T: FromStr>(&self, key: &str) -> Result<T, CliError> {
        self.param(key)?
            .ok_or_else(|| CliError::Spec(format!("generator needs `{key}=`")))
    }

    /// Copy of a generator spec with `n` set; files are returned unchanged.
    pub fn with_size(&self, n: usize) -> Self {
        match self {
            Self::File(_) => self.clone(),
            Self::Generated { kind, params } => {
                let mut params: Vec<_> = params.iter().filter(|(k, _)| k != "n").cloned().collect();
                params.insert(0, ("n".into(), n.to_string()));
                Self::Generated {
                    kind: kind.clone(),
                    params,
                }
            }
        }
    }

    /// Builds the graph; generators draw from `seed`, an optional `w=` key
    /// assigns random weights in `1..=w`.
    pub fn load(&self, seed: u64) -> Result<Graph, CliError> {
        let Self::Generated { kind, params } = self else {
            let Self::File(path) = self else { unreachable!() };
            return Ok(read_edge_list(path)?);
        };
        let known = ["n", "p", "rows", "cols", "w"];
        if let Some((k, _)) = params.iter().find(|(k, _)| !known.contains(&k.as_str())) {
            return Err(CliError::Spec(format!("unknown generator key `{k}`")));
        }
        let gk = match kind.as_str() {
            "gnp" => GraphKind::Gnp {
                n: self.required("n")?,
                p: self.required("p")?,
            },
            "path" => GraphKind::Path { n: self.required("n")? },
            "cycle" => GraphKind::Cycle { n: self.required("n")? },
            "complete" => GraphKind::Complete { n: self.required("n")? },
            "star" => GraphKind::Star { n: self.required("n")? },
            "grid" => GraphKind::Grid {
                rows: self.required("rows")?,
                cols: self.required("cols")?,
            },
            other => return Err(CliError::Spec(format!("unknown generator `{other}`"))),
        };
        let g = generate_graph(&gk, seed)?;
        Ok(match self.param::<u64>("w")? {
            Some(w) => assign_random_weights(&g, w, seed)?,
            None => g,
        })
    }
}

/// `3`, `0,1,5` or `0..20` (half-open).
pub fn parse_seeds(s: &str) -> Result<Vec<u64>, CliError> {
    let bad = || CliError::Spec(format!("bad seed list `{s}`"));
    let seeds: Vec<u64> = if let Some((a, b)) = s.split_once("..") {
        let (a, b): (u64, u64) = (
            a.trim().parse().map_err(|_| bad())?,
            b.trim().parse().map_err(|_| bad())?,
        );
        (a..b).collect()
    } else {
        s.split(',')
            .filter(|x| !x.trim().is_empty())
            .map(|x| x.trim().parse().map_err(|_| bad()))
            .collect::<Result<_, _>>()?
    };
    if seeds.is_empty() {
        return Err(CliError::Spec("seed list is empty".into()));
    }
    Ok(seeds)
}

/// `0,3,5`, `all` or `random:k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceSelection {
    List(BTreeSet<NodeId>),
    All,
    Random(usize),
}

impl FromStr for SourceSelection {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let bad = || CliError::Spec(format!("bad source selection `{s}`"));
        if s == "all" {
            return Ok(Self::All);
        }
        if let Some(k) = s.strip_prefix("random:") {
            return k.parse().map(Self::Random).map_err(|_| bad());
        }
        let set: BTreeSet<NodeId> = s
            .split(',')
            .map(|x| x.trim().parse().map_err(|_| bad()))
            .collect::<Result<_, _>>()?;
        Ok(Self::List(set))
    }
}

const SOURCE_TAG: u64 = 0x7372_6373;

impl SourceSelection {
    pub fn resolve(&self, n: usize, seed: u64) -> Result<BTreeSet<NodeId>, CliError> {
        let set: BTreeSet<NodeId> = match self {
            Self::All => (0..n).collect(),
            Self::List(set) => set.clone(),
            Self::Random(k) => {
                let mut rng = rng_from(derive_seed(seed, &[SOURCE_TAG]));
                sample(&mut rng, n, (*k).min(n)).into_iter().collect()
            }
        };
        if set.is_empty() {
            return Err(CliError::Spec("source set is empty".into()));
        }
        if let Some(s) = set.iter().find(|&&s| s >= n) {
            return Err(CliError::Spec(format!("source {s} out of range for n = {n}")));
        }
        Ok(set)
    }
}

/// Comma-separated ascending sizes.
pub fn parse_sizes(s: &str) -> Result<Vec<usize>, CliError> {
    let sizes: Vec<usize> = s
        .split(',')
        .map(|x| {
            x.trim()
                .parse()
                .map_err(|_| CliError::Spec(format!("bad size list `{s}`")))
        })
        .collect::<Result<_, _>>()?;
    if sizes.is_empty() || sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::Spec("sizes must be non-empty and strictly ascending".into()));
    }
    Ok(sizes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graph_sources() {
        let g: GraphSource = "gen:gnp:n=10,p=0.5".parse().unwrap();
        assert_eq!(g.load(1).unwrap().node_count(), 10);
        let g: GraphSource = "gen:grid:rows=2,cols=3,w=9".parse().unwrap();
        let g = g.load(1).unwrap();
        assert_eq!((g.node_count(), g.weight_bound()), (6, 9));
        assert!(matches!(
            "fixtures/x.txt".parse::<GraphSource>(),
            Ok(GraphSource::File(_))
        ));
        assert!("gen:gnp:n=10".parse::<GraphSource>().unwrap().load(0).is_err());
        assert!("gen:blob:n=10".parse::<GraphSource>().unwrap().load(0).is_err());
        assert!("gen:path:n=10,q=1".parse::<GraphSource>().unwrap().load(0).is_err());
        assert!("gen:path:n".parse::<GraphSource>().is_err());
        let sized = "gen:gnp:p=0.1".parse::<GraphSource>().unwrap().with_size(20);
        assert_eq!(sized.load(0).unwrap().node_count(), 20);
    }

    #[test]
    fn seeds_and_sources() {
        assert_eq!(parse_seeds("0..3").unwrap(), vec![0, 1, 2]);
        assert_eq!(parse_seeds("4, 2").unwrap(), vec![4, 2]);
        assert!(parse_seeds("").is_err());
        assert!(parse_seeds("3..3").is_err());
        assert_eq!(
            SourceSelection::from_str("all").unwrap().resolve(3, 0).unwrap().len(),
            3
        );
        let r = SourceSelection::from_str("random:4").unwrap();
        assert_eq!(r.resolve(10, 7).unwrap(), r.resolve(10, 7).unwrap());
        assert_eq!(r.resolve(10, 7).unwrap().len(), 4);
        assert!(SourceSelection::from_str("0,9").unwrap().resolve(5, 0).is_err());
        assert!(parse_sizes("64,32").is_err());
    }
}
