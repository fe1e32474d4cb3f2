use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use secure_congest_cli::commands::{cmd_bench, cmd_build, cmd_privacy, cmd_run};
use secure_congest_cli::config::{parse_pairs, ExperimentConfig};
use secure_congest_cli::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "secure-congest", version, about = "CONGEST simulation and secure compilation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the cycle cover and private trees of a graph.
    Build(Flags),
    /// Run an algorithm plainly and compiled, and compare.
    Run(Flags),
    /// Check perfect privacy of a compiled algorithm.
    Privacy(Flags),
    /// Sweep graph sizes and report round counts.
    Bench(Flags),
}

#[derive(Args)]
struct Flags {
    /// Flat key=value file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Edge-list file.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// cycle, complete, torus, random-2vc or path.
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    /// Chords added by random-2vc.
    #[arg(long)]
    extra: Option<usize>,
    /// Torus columns (defaults to n).
    #[arg(long)]
    cols: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    algo: Option<String>,
    /// psm or passthrough.
    #[arg(long)]
    backend: Option<String>,
    #[arg(long)]
    beta: Option<usize>,
    /// fifo or random-delay.
    #[arg(long)]
    strategy: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// exact, stat or per-instance.
    #[arg(long)]
    privacy: Option<String>,
    #[arg(long)]
    samples: Option<usize>,
    /// Comma-separated sizes for bench.
    #[arg(long)]
    sizes: Option<String>,
    /// Restrict privacy checks to one node.
    #[arg(long)]
    node: Option<usize>,
    /// Private trees JSON from a previous build.
    #[arg(long)]
    trees: Option<PathBuf>,
}

impl Flags {
    fn resolve(self) -> CliResult<ExperimentConfig> {
        let mut pairs = match &self.config {
            Some(path) => parse_pairs(
                &std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?,
            )?,
            None => BTreeMap::new(),
        };
        let path = |p: Option<PathBuf>| p.map(|p| p.display().to_string());
        let num = |v: Option<usize>| v.map(|v| v.to_string());
        let given = [
            ("graph", path(self.graph)),
            ("family", self.family),
            ("n", num(self.n)),
            ("extra", num(self.extra)),
            ("cols", num(self.cols)),
            ("seed", self.seed.map(|s| s.to_string())),
            ("algo", self.algo),
            ("backend", self.backend),
            ("beta", num(self.beta)),
            ("strategy", self.strategy),
            ("out", path(self.out)),
            ("privacy", self.privacy),
            ("samples", num(self.samples)),
            ("sizes", self.sizes),
            ("node", num(self.node)),
            ("trees", path(self.trees)),
        ];
        for (k, v) in given {
            if let Some(v) = v {
                pairs.insert(k.to_string(), v);
            }
        }
        if pairs.contains_key("graph") {
            pairs.remove("family");
        }
        ExperimentConfig::from_pairs(pairs)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Build(f) => f.resolve().and_then(|c| cmd_build(&c)),
        Command::Run(f) => f.resolve().and_then(|c| cmd_run(&c)),
        Command::Privacy(f) => f.resolve().and_then(|c| cmd_privacy(&c)),
        Command::Bench(f) => f.resolve().and_then(|c| cmd_bench(&c)),
    };
    match result {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
