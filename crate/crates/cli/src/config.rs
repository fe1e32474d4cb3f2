//! Flat `key=value` experiment configuration.

use std::collections::BTreeMap;
use std::path::PathBuf;

use sha2::{Digest, Sha256};

use secure_congest::algo::examples;
use secure_congest::compiler::Backend;
use secure_congest::graph::{generate, parse_edge_list, Family};
use secure_congest::sim::Strategy;
use secure_congest::Graph;

use crate::{CliError, CliResult};

pub const KEYS: &[&str] = &[
    "graph", "family", "n", "extra", "cols", "seed", "algo", "backend", "beta", "strategy", "out", "privacy", "samples",
    "sizes", "node", "trees",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PrivacyMode {
    Exact,
    Stat,
    PerInstance,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub graph: Option<PathBuf>,
    pub family: Option<String>,
    pub n: Option<usize>,
    pub extra: Option<usize>,
    pub cols: Option<usize>,
    pub seed: u64,
    pub algo: String,
    pub backend: Backend,
    pub beta: Option<usize>,
    pub strategy: String,
    pub out: PathBuf,
    pub privacy: Option<PrivacyMode>,
    pub samples: usize,
    pub sizes: Vec<usize>,
    pub node: Option<usize>,
    pub trees: Option<PathBuf>,
    /// Resolved keys, used for the config hash.
    pairs: BTreeMap<String, String>,
}

/// Parses `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_pairs(text: &str) -> CliResult<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected key=value", i + 1)))?;
        let k = k.trim().to_string();
        if !KEYS.contains(&k.as_str()) {
            return Err(CliError::Config(format!("line {}: unknown key {k:?}", i + 1)));
        }
        out.insert(k, v.trim().to_string());
    }
    Ok(out)
}

fn number<T: std::str::FromStr>(pairs: &BTreeMap<String, String>, key: &str) -> CliResult<Option<T>> {
    pairs
        .get(key)
        .map(|v| v.parse().map_err(|_| CliError::Config(format!("{key}: not a number: {v:?}"))))
        .transpose()
}

impl ExperimentConfig {
    /// Builds a configuration from resolved pairs; `seed` is mandatory.
    pub fn from_pairs(pairs: BTreeMap<String, String>) -> CliResult<Self> {
        let seed = number(&pairs, "seed")?.ok_or_else(|| CliError::Config("seed is mandatory".into()))?;
        let algo = pairs.get("algo").cloned().unwrap_or_else(|| "verify-coloring".into());
        if !examples::NAMES.contains(&algo.as_str()) {
            return Err(CliError::Config(format!("unknown algorithm {algo:?}; known: {:?}", examples::NAMES)));
        }
        let backend = Backend::parse(pairs.get("backend").map_or("psm", String::as_str))?;
        let strategy = pairs.get("strategy").cloned().unwrap_or_else(|| "fifo".into());
        Strategy::parse(&strategy, seed)?;
        let privacy = match pairs.get("privacy").map(String::as_str) {
            None | Some("none") => None,
            Some("exact") => Some(PrivacyMode::Exact),
            Some("stat") => Some(PrivacyMode::Stat),
            Some("per-instance") => Some(PrivacyMode::PerInstance),
            Some(other) => {
                return Err(CliError::Config(format!(
                    "privacy: expected exact, stat or per-instance, got {other:?}"
                )))
            }
        };
        let sizes = match pairs.get("sizes") {
            None => vec![8, 16, 32],
            Some(v) => v
                .split(',')
                .map(|s| s.trim().parse().map_err(|_| CliError::Config(format!("sizes: bad entry {s:?}"))))
                .collect::<CliResult<_>>()?,
        };
        if pairs.contains_key("graph") && pairs.contains_key("family") {
            return Err(CliError::Config("give either graph or family, not both".into()));
        }
        Ok(ExperimentConfig {
            graph: pairs.get("graph").map(PathBuf::from),
            family: pairs.get("family").cloned(),
            n: number(&pairs, "n")?,
            extra: number(&pairs, "extra")?,
            cols: number(&pairs, "cols")?,
            seed,
            algo,
            backend,
            beta: number(&pairs, "beta")?,
            strategy,
            out: PathBuf::from(pairs.get("out").map_or("out", String::as_str)),
            privacy,
            samples: number(&pairs, "samples")?.unwrap_or(10_000),
            sizes,
            node: number(&pairs, "node")?,
            trees: pairs.get("trees").map(PathBuf::from),
            pairs,
        })
    }

    /// SHA-256 prefix of the resolved keys, excluding the output path.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in self.pairs.iter().filter(|(k, _)| k.as_str() != "out") {
            h.update(format!("{k}={v}\n"));
        }
        h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn strategy(&self) -> Strategy {
        Strategy::parse(&self.strategy, self.seed).expect("validated")
    }

    fn family_of(&self, name: &str, n: usize) -> CliResult<Family> {
        Ok(match name {
            "cycle" => Family::Cycle { n },
            "complete" => Family::Complete { n },
            "torus" => Family::Torus {
                rows: n,
                cols: self.cols.unwrap_or(n),
            },
            "random-2vc" => Family::Random2vc {
                n,
                extra: self.extra.unwrap_or(n / 2),
            },
            other => return Err(CliError::Config(format!("unknown family {other:?}"))),
        })
    }

    /// Generated or loaded graph with `n` overriding the configured size.
    pub fn graph_with(&self, n: Option<usize>) -> CliResult<Graph> {
        if let Some(path) = &self.graph {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            return Ok(parse_edge_list(&text)?);
        }
        let name = self.family.as_deref().unwrap_or("cycle");
        let n = n.or(self.n).ok_or_else(|| CliError::Config("family needs n".into()))?;
        if name == "path" {
            return Ok(Graph::path(n));
        }
        Ok(generate(&self.family_of(name, n)?, self.seed)?)
    }

    pub fn graph(&self) -> CliResult<Graph> {
        self.graph_with(None)
    }

    /// Human-readable name of the graph source.
    pub fn graph_label(&self) -> String {
        match (&self.graph, &self.family) {
            (Some(p), _) => p.display().to_string(),
            (None, f) => format!("{} n={}", f.as_deref().unwrap_or("cycle"), self.n.map_or("?".into(), |n| n.to_string())),
        }
    }
}
