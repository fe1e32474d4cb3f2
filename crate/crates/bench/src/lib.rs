//! Round accounting: measured compiled rounds against the bound shape
//! `r'·D·Δ³·log²n` over a fixed corpus.

use serde::Serialize;

use secure_congest::algo::examples::{by_name, xor_gossip};
use secure_congest::algo::AlgorithmSpec;
use secure_congest::compiler::{compile, fit_constant, round_cost, CompileOptions, RoundCost, DEFAULT_CONSTANT};
use secure_congest::graph::{generate, Family};
use secure_congest::private_trees::build_private_trees;
use secure_congest::{Graph, Result};

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Row {
    pub graph: String,
    pub algorithm: String,
    pub cost: RoundCost,
}

/// Compiled rounds at `r` and `2r` gossip rounds.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Doubling {
    pub graph: String,
    pub rounds: usize,
    pub measured: usize,
    pub measured_doubled: usize,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Report {
    pub rows: Vec<Row>,
    pub doubling: Vec<Doubling>,
    pub fitted_constant: f64,
    pub declared_constant: f64,
    pub bounded: bool,
}

pub fn corpus() -> Result<Vec<(String, Graph)>> {
    let mut out = vec![
        ("C4".to_string(), Graph::cycle(4)),
        ("C8".into(), Graph::cycle(8)),
        ("K4".into(), Graph::complete(4)),
        ("K6".into(), Graph::complete(6)),
        ("torus 3x3".into(), generate(&Family::Torus { rows: 3, cols: 3 }, 0)?),
    ];
    for (n, seed) in [(8, 1), (10, 2), (12, 3)] {
        out.push((format!("random-2vc n={n}"), generate(&Family::Random2vc { n, extra: n / 2 }, seed)?));
    }
    Ok(out)
}

fn measure(g: &Graph, algo: &AlgorithmSpec) -> Result<RoundCost> {
    let trees = build_private_trees(g)?;
    round_cost(&compile(algo, g, &trees, CompileOptions::default())?)
}

pub fn round_accounting(corpus: &[(String, Graph)], algorithms: &[&str], gossip_rounds: usize) -> Result<Report> {
    let mut rows = Vec::new();
    let mut doubling = Vec::new();
    for (label, g) in corpus {
        for &name in algorithms {
            rows.push(Row {
                graph: label.clone(),
                algorithm: name.to_string(),
                cost: measure(g, &by_name(g, name)?)?,
            });
        }
        let a = measure(g, &xor_gossip(g, gossip_rounds)?)?;
        let b = measure(g, &xor_gossip(g, 2 * gossip_rounds)?)?;
        doubling.push(Doubling {
            graph: label.clone(),
            rounds: gossip_rounds,
            measured: a.measured,
            measured_doubled: b.measured,
            ratio: b.measured as f64 / a.measured as f64,
        });
    }
    let costs: Vec<RoundCost> = rows.iter().map(|r| r.cost.clone()).collect();
    Ok(Report {
        bounded: costs.iter().all(|c| c.measured as f64 <= c.predicted),
        fitted_constant: fit_constant(&costs),
        declared_constant: DEFAULT_CONSTANT,
        rows,
        doubling,
    })
}

impl Report {
    pub fn table(&self) -> String {
        let mut s = format!(
            "{:<18} {:<16} {:>6} {:>8} {:>10} {:>12} {:>8}\n",
            "graph", "algorithm", "r'", "rounds", "shape", "rounds/shape", "bound"
        );
        for r in &self.rows {
            let c = &r.cost;
            s += &format!(
                "{:<18} {:<16} {:>6} {:>8} {:>10.0} {:>12.5} {:>8}\n",
                r.graph,
                r.algorithm,
                c.compiled_rounds,
                c.measured,
                c.shape,
                c.measured as f64 / c.shape,
                if c.measured as f64 <= c.predicted { "ok" } else { "over" }
            );
        }
        for d in &self.doubling {
            s += &format!(
                "doubling {:<18} r={:<3} {:>6} -> {:>6}  x{:.3}\n",
                d.graph, d.rounds, d.measured, d.measured_doubled, d.ratio
            );
        }
        s += &format!(
            "fitted constant {:.5} (declared {}), all bounded: {}\n",
            self.fitted_constant, self.declared_constant, self.bounded
        );
        s
    }
}
