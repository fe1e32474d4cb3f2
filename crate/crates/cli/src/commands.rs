//! The four subcommands. Each returns its JSON report and writes it, with
//! any artifacts, under the configured output directory.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde_json::{json, Value};

use secure_congest::algo::examples::{by_name, sample_inputs};
use secure_congest::bits::{render, Bits};
use secure_congest::compiler::{compile, fit_constant, round_cost, scan_key_hygiene, CompileOptions, CompiledAlgorithm};
use secure_congest::cycle_cover::{build_cycle_cover, verify_cycle_cover};
use secure_congest::graph::Graph;
use secure_congest::privacy::{check_nodes, Mode, StatParams, Verdict};
use secure_congest::private_trees::{build_private_trees, verify_private_trees, PrivateTrees};
use secure_congest::sim::{run, NetConfig};

use crate::config::{ExperimentConfig, PrivacyMode};
use crate::{CliError, CliResult};

fn write_json(dir: &Path, name: &str, value: &Value) -> CliResult<()> {
    fs::create_dir_all(dir)?;
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
    fs::write(dir.join(name), text + "\n")?;
    Ok(())
}

fn header(cfg: &ExperimentConfig, command: &str, g: &Graph) -> Value {
    json!({
        "command": command,
        "configHash": cfg.hash(),
        "seed": cfg.seed,
        "graph": {
            "source": cfg.graph_label(),
            "nodes": g.node_count(),
            "edges": g.edge_count(),
            "maxDegree": g.max_degree(),
            "diameter": g.diameter().ok(),
        },
    })
}

fn merge(mut base: Value, extra: Value) -> Value {
    if let (Value::Object(b), Value::Object(e)) = (&mut base, extra) {
        b.extend(e);
    }
    base
}

fn outputs_json(outputs: &[Bits]) -> Value {
    outputs.iter().map(|y| render(y)).collect()
}

fn trees_for(cfg: &ExperimentConfig, g: &Graph) -> CliResult<PrivateTrees> {
    match &cfg.trees {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            let value: Value = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            let pt = PrivateTrees::from_json(g, &value)?;
            let report = verify_private_trees(g, &pt);
            if !report.valid {
                return Err(CliError::Precondition(format!("trees file invalid: {:?}", report.violations)));
            }
            Ok(pt)
        }
        None => Ok(build_private_trees(g)?),
    }
}

fn compile_for(cfg: &ExperimentConfig, g: &Graph) -> CliResult<CompiledAlgorithm> {
    let algo = by_name(g, &cfg.algo)?;
    let trees = trees_for(cfg, g)?;
    let opts = CompileOptions {
        backend: cfg.backend,
        strategy: cfg.strategy(),
        beta: cfg.beta,
        ..CompileOptions::default()
    };
    Ok(compile(&algo, g, &trees, opts)?)
}

pub fn cmd_build(cfg: &ExperimentConfig) -> CliResult<Value> {
    let g = cfg.graph()?;
    let cover = build_cycle_cover(&g)?;
    let cover_report = verify_cycle_cover(&g, &cover)?;
    let trees = build_private_trees(&g)?;
    let trees_report = verify_private_trees(&g, &trees);
    if !cover_report.covered || !trees_report.valid {
        return Err(CliError::Internal(format!(
            "construction failed verification: {:?} {:?}",
            cover_report.uncovered, trees_report.violations
        )));
    }
    write_json(&cfg.out, "cycle_cover.json", &cover.to_json())?;
    write_json(&cfg.out, "private_trees.json", &trees.to_json())?;
    let report = merge(
        header(cfg, "build", &g),
        json!({
            "cycleCover": {
                "cycles": cover.cycles.len(),
                "dilation": cover_report.dilation,
                "congestion": cover_report.congestion,
            },
            "privateTrees": {
                "trees": trees.trees.len(),
                "dilation": trees_report.dilation,
                "congestion": trees_report.congestion,
                "valid": trees_report.valid,
            },
        }),
    );
    write_json(&cfg.out, "build.json", &report)?;
    println!(
        "build {}: {} cycles (dilation {}, congestion {}); {} trees (dilation {}, congestion {})",
        cfg.graph_label(),
        cover.cycles.len(),
        cover_report.dilation,
        cover_report.congestion,
        trees.trees.len(),
        trees_report.dilation,
        trees_report.congestion
    );
    Ok(report)
}

/// Seeded executions whose PSM party inputs are checked in per-instance mode.
const PER_INSTANCE_RUNS: usize = 4;

fn privacy_verdicts(cfg: &ExperimentConfig, c: &CompiledAlgorithm, inputs: &[Bits], mode: PrivacyMode) -> CliResult<Vec<Verdict>> {
    let nodes: Vec<usize> = match cfg.node {
        Some(u) if u < c.graph.node_count() => vec![u],
        Some(u) => return Err(CliError::Config(format!("node {u} is not in the graph"))),
        None => c.graph.nodes().collect(),
    };
    let mode = match mode {
        PrivacyMode::Exact => Mode::exact(),
        PrivacyMode::Stat => Mode::Statistical(StatParams {
            samples: cfg.samples,
            seed: cfg.seed,
            ..StatParams::default()
        }),
        PrivacyMode::PerInstance => Mode::PerInstance {
            budget: Mode::DEFAULT_BUDGET,
            runs: PER_INSTANCE_RUNS,
        },
    };
    Ok(check_nodes(c, inputs, &nodes, mode)?)
}

fn verdicts_json(verdicts: &[Verdict]) -> CliResult<Value> {
    serde_json::to_value(verdicts).map_err(|e| CliError::Internal(e.to_string()))
}

pub fn cmd_run(cfg: &ExperimentConfig) -> CliResult<Value> {
    let g = cfg.graph()?;
    let c = compile_for(cfg, &g)?;
    let inputs = sample_inputs(&g, &cfg.algo, cfg.seed)?;
    let plain = run(&g, &c.source, &inputs, cfg.seed, NetConfig::new(&g))?;
    let e = c.run(&inputs, cfg.seed, true)?;
    let hygiene = scan_key_hygiene(&e.transcript);
    let identical = plain.outputs == e.outputs;
    let mut report = merge(
        header(cfg, "run", &g),
        json!({
            "algorithm": cfg.algo,
            "backend": cfg.backend,
            "inputs": outputs_json(&inputs),
            "plain": { "outputs": outputs_json(&plain.outputs), "report": plain.report },
            "compiled": {
                "outputs": outputs_json(&e.outputs),
                "report": e.report,
                "phaseRounds": e.phase_rounds,
                "summary": c.summary()?,
                "keyHygiene": hygiene,
            },
            "outputsIdentical": identical,
        }),
    );
    println!(
        "run {} on {}: plain {} rounds, compiled {} rounds, outputs identical: {identical}",
        cfg.algo,
        cfg.graph_label(),
        plain.report.rounds,
        e.report.rounds
    );
    let mut ok = identical && hygiene.clean();
    if let Some(mode) = cfg.privacy {
        let verdicts = privacy_verdicts(cfg, &c, &inputs, mode)?;
        ok &= verdicts.iter().all(|v| v.pass);
        print_verdicts(&verdicts);
        report["privacy"] = verdicts_json(&verdicts)?;
    }
    write_json(&cfg.out, "run.json", &report)?;
    if !ok {
        return Err(CliError::Internal("compiled run disagrees with the plain run or a check failed".into()));
    }
    Ok(report)
}

fn print_verdicts(verdicts: &[Verdict]) {
    for v in verdicts {
        println!(
            "  node {}: {} {} (distance {:.6}, support {}/{})",
            v.node,
            v.mode,
            if v.pass { "pass" } else { "FAIL" },
            v.distance,
            v.real_support,
            v.sim_support
        );
    }
}

pub fn cmd_privacy(cfg: &ExperimentConfig) -> CliResult<Value> {
    let g = cfg.graph()?;
    let c = compile_for(cfg, &g)?;
    let inputs = sample_inputs(&g, &cfg.algo, cfg.seed)?;
    let mode = cfg.privacy.unwrap_or(PrivacyMode::Exact);
    let verdicts = privacy_verdicts(cfg, &c, &inputs, mode)?;
    println!("privacy {} on {}:", cfg.algo, cfg.graph_label());
    print_verdicts(&verdicts);
    let report = merge(
        header(cfg, "privacy", &g),
        json!({
            "algorithm": cfg.algo,
            "inputs": outputs_json(&inputs),
            "verdicts": verdicts_json(&verdicts)?,
        }),
    );
    write_json(&cfg.out, "privacy.json", &report)?;
    if verdicts.iter().any(|v| !v.pass) {
        return Err(CliError::Internal("privacy check failed".into()));
    }
    Ok(report)
}

pub fn cmd_bench(cfg: &ExperimentConfig) -> CliResult<Value> {
    let cells: Vec<CliResult<(usize, Value, _)>> = cfg
        .sizes
        .par_iter()
        .map(|&n| {
            let g = cfg.graph_with(Some(n))?;
            let c = compile_for(cfg, &g)?;
            let inputs = sample_inputs(&g, &cfg.algo, cfg.seed)?;
            let plain = run(&g, &c.source, &inputs, cfg.seed, NetConfig::new(&g))?;
            let cost = round_cost(&c)?;
            let row = json!({ "n": g.node_count(), "plainRounds": plain.report.rounds, "cost": cost });
            Ok((g.node_count(), row, cost))
        })
        .collect();
    let mut rows = Vec::new();
    let mut costs = Vec::new();
    println!("{:>6} {:>8} {:>10} {:>10} {:>14}", "n", "plain", "sub-rounds", "compiled", "predicted");
    for cell in cells {
        let (n, row, cost) = cell?;
        println!(
            "{n:>6} {:>8} {:>10} {:>10} {:>14.0}",
            row["plainRounds"], cost.compiled_rounds, cost.measured, cost.predicted
        );
        rows.push(row);
        costs.push(cost);
    }
    let fitted = fit_constant(&costs);
    println!("fitted constant: {fitted:.4}");
    let g = cfg.graph_with(cfg.sizes.first().copied())?;
    let report = merge(
        header(cfg, "bench", &g),
        json!({ "algorithm": cfg.algo, "rows": rows, "fittedConstant": fitted }),
    );
    write_json(&cfg.out, "bench.json", &report)?;
    Ok(report)
}
