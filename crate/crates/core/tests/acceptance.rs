//! One line per acceptance criterion; exits non-zero if any fails.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use secure_congest::algo::examples::*;
use secure_congest::algo::{AlgorithmSpec, CircuitBuilder, GateCircuit};
use secure_congest::bits::{from_u64, Bits};
use secure_congest::compiler::*;
use secure_congest::graph::{generate, Family};
use secure_congest::privacy::{check_nodes, check_perfect_privacy, chi_square_homogeneity, Mode, StatParams};
use secure_congest::private_trees::{build_private_trees, build_private_trees_traced, ceil_log2, verify_private_trees, PhaseStats};
use secure_congest::psm::{PsmInstance, PsmMutation};
use secure_congest::sim::{run, NetConfig};
use secure_congest::Graph;

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(results: &mut Vec<bool>, id: usize, name: &str, start: Instant, o: Outcome) {
    let verdict = if o.pass { "PASS" } else { "FAIL" };
    println!("criterion {id:>2} [{verdict}] {name}: {} ({:.1?})", o.detail, start.elapsed());
    results.push(o.pass);
}

struct TreeRecord {
    label: String,
    n: usize,
    max_degree: usize,
    valid: bool,
    violations: usize,
    phases: Vec<PhaseStats>,
    aux_ok: Option<bool>,
    dilation: usize,
    congestion: usize,
    cover: (usize, usize),
}

fn tree_corpus() -> Vec<(String, Graph)> {
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for i in 0..100u64 {
        let n = rng.gen_range(6..=200);
        let extra = rng.gen_range(n / 4..=2 * n);
        out.push((format!("random-2vc n={n} extra={extra} seed={i}"), generate(&Family::Random2vc { n, extra }, i).unwrap()));
    }
    for n in [3, 5, 17, 64, 150] {
        out.push((format!("cycle {n}"), Graph::cycle(n)));
    }
    for n in [4, 9, 24] {
        out.push((format!("complete {n}"), Graph::complete(n)));
    }
    for (r, c) in [(3, 3), (4, 6), (10, 10)] {
        out.push((format!("torus {r}x{c}"), generate(&Family::Torus { rows: r, cols: c }, 0).unwrap()));
    }
    out
}

fn build_tree_records(corpus: &[(String, Graph)]) -> Vec<TreeRecord> {
    corpus
        .iter()
        .map(|(label, g)| {
            let small = g.node_count() <= 60;
            let (pt, trace) = build_private_trees_traced(g, small).unwrap();
            let r = verify_private_trees(g, &pt);
            let aux_ok = small.then(|| trace.aux_graphs.iter().all(|a| a.is_two_vertex_connected_brute().unwrap()));
            TreeRecord {
                label: label.clone(),
                n: g.node_count(),
                max_degree: g.max_degree(),
                valid: r.valid,
                violations: r.violations.len(),
                aux_ok,
                dilation: pt.dilation,
                congestion: pt.congestion,
                cover: trace.cover_parameters(),
                phases: trace.phases,
            }
        })
        .collect()
}

fn criterion_trees(records: &[TreeRecord]) -> Outcome {
    let bad: Vec<_> = records.iter().filter(|r| !r.valid).map(|r| format!("{} ({} violations)", r.label, r.violations)).collect();
    let max_n = records.iter().map(|r| r.n).max().unwrap_or(0);
    Outcome {
        pass: bad.is_empty(),
        detail: format!("{} graphs up to n={max_n}, invalid: {bad:?}", records.len()),
    }
}

fn criterion_halving(records: &[TreeRecord]) -> Outcome {
    let (mut checked, mut bad) = (0usize, Vec::new());
    for r in records {
        for p in &r.phases {
            for (u, (&before, &after)) in p.components_before.iter().zip(&p.components_after).enumerate() {
                if before >= 2 {
                    checked += 1;
                    if after > before / 2 {
                        bad.push(format!("{} phase {} node {u}: {before} -> {after}", r.label, p.phase));
                    }
                }
            }
        }
    }
    Outcome {
        pass: bad.is_empty(),
        detail: format!("{checked} (node, phase) pairs, violations: {:?}", &bad[..bad.len().min(5)]),
    }
}

fn criterion_transfer(records: &[TreeRecord]) -> Outcome {
    let mut dil_bad = Vec::new();
    let mut fitted: f64 = 0.0;
    for r in records {
        let (d, c) = r.cover;
        if r.dilation > 2 * d * r.max_degree {
            dil_bad.push(format!("{}: {} > 2*{d}*{}", r.label, r.dilation, r.max_degree));
        }
        let scale = (c * d * ceil_log2(r.max_degree).max(1)) as f64;
        if scale > 0.0 {
            fitted = fitted.max(r.congestion as f64 / scale);
        }
    }
    Outcome {
        pass: dil_bad.is_empty() && fitted <= 4.0,
        detail: format!("dilation violations {dil_bad:?}; fitted congestion constant C = {fitted:.3} (limit 4)"),
    }
}

fn criterion_aux(records: &[TreeRecord]) -> Outcome {
    let checked: Vec<_> = records.iter().filter_map(|r| r.aux_ok.map(|ok| (r, ok))).collect();
    let bad: Vec<_> = checked.iter().filter(|(_, ok)| !ok).map(|(r, _)| r.label.clone()).collect();
    let graphs: usize = checked.iter().map(|(r, _)| r.phases.len()).sum();
    Outcome {
        pass: bad.is_empty() && !checked.is_empty(),
        detail: format!("{} corpora with n <= 60, {graphs} auxiliary graphs brute-forced, failing: {bad:?}", checked.len()),
    }
}

fn psm_cases() -> Vec<(&'static str, GateCircuit, Vec<usize>)> {
    let mut cases = Vec::new();
    let mut b = CircuitBuilder::new(2);
    let (x, y) = (b.input(0), b.input(1));
    let o = b.and(x, y);
    cases.push(("and", b.finish(vec![o]), vec![1, 1]));
    let mut b = CircuitBuilder::new(2);
    let (x, y) = (b.input(0), b.input(1));
    let o = b.xor(x, y);
    cases.push(("xor", b.finish(vec![o]), vec![1, 1]));
    let mut b = CircuitBuilder::new(3);
    let (s, t, f) = (b.input(0), b.input(1), b.input(2));
    let o = b.mux(s, t, f);
    cases.push(("mux", b.finish(vec![o]), vec![1, 1, 1]));
    let mut b = CircuitBuilder::new(3);
    let (x, y, z) = (b.input(0), b.input(1), b.input(2));
    let a = b.and(x, y);
    let o = b.and(a, z);
    cases.push(("and3", b.finish(vec![o]), vec![1, 1, 1]));
    let mut b = CircuitBuilder::new(3);
    let (x, y, z) = (b.input(0), b.input(1), b.input(2));
    let a = b.and(x, y);
    let o = b.xor(x, z);
    cases.push(("and,xor", b.finish(vec![a, o]), vec![2, 1]));
    cases
}

type Hist = BTreeMap<Vec<Bits>, u64>;

fn hist(bits: usize, f: impl Fn(&[bool]) -> Vec<Bits>) -> Hist {
    let mut h = Hist::new();
    for r in 0..1u64 << bits {
        *h.entry(f(&from_u64(r, bits))).or_insert(0) += 1;
    }
    h
}

/// `2^bits · TV` between two histograms over the same number of draws.
fn scaled_distance(a: &Hist, b: &Hist) -> u64 {
    let mut d = 0;
    for (k, &x) in a {
        d += x.abs_diff(b.get(k).copied().unwrap_or(0));
    }
    for (k, &y) in b {
        if !a.contains_key(k) {
            d += y;
        }
    }
    d / 2
}

fn criterion_psm_correct(cases: &[(&str, GateCircuit, Vec<usize>)]) -> Outcome {
    let (mut runs, mut errors, mut names) = (0u64, 0u64, Vec::new());
    for (name, c, widths) in cases {
        let inst = PsmInstance::from_circuit(c, widths).unwrap();
        let n = inst.randomness_len();
        assert!(n <= 20);
        names.push(format!("{name}:{n}b"));
        let width: usize = widths.iter().sum();
        for x in 0..1u64 << width {
            let xs = inst.split(&from_u64(x, width));
            let y = inst.eval(&xs).unwrap();
            for r in 0..1u64 << n {
                let m = inst.encode_all(&xs, &from_u64(r, n), PsmMutation::None).unwrap();
                runs += 1;
                if inst.decode(&m).unwrap() != y {
                    errors += 1;
                }
            }
        }
    }
    Outcome {
        pass: errors == 0,
        detail: format!("{names:?}, {runs} (input, randomness) pairs, {errors} decode errors"),
    }
}

fn criterion_psm_private(cases: &[(&str, GateCircuit, Vec<usize>)]) -> Outcome {
    let (mut worst, mut compared) = (0u64, 0usize);
    let mut caught = Vec::new();
    for (name, c, widths) in cases {
        let inst = PsmInstance::from_circuit(c, widths).unwrap();
        let (n, sn) = (inst.randomness_len(), inst.simulator_randomness_len());
        assert_eq!(n, sn);
        let width: usize = widths.iter().sum();
        let mut detected = [false; 2];
        for x in 0..1u64 << width {
            let xs = inst.split(&from_u64(x, width));
            let y = inst.eval(&xs).unwrap();
            let sim = hist(sn, |r| inst.simulate(&y, r).unwrap());
            let real = hist(n, |r| inst.encode_all(&xs, r, PsmMutation::None).unwrap());
            worst = worst.max(scaled_distance(&real, &sim));
            compared += 1;
            for (k, m) in [PsmMutation::IdentityR1, PsmMutation::ReusedPad].into_iter().enumerate() {
                if scaled_distance(&hist(n, |r| inst.encode_all(&xs, r, m).unwrap()), &sim) > 0 {
                    detected[k] = true;
                }
            }
        }
        caught.push((name.to_string(), detected));
    }
    // single-gate AND is the designated mutation target
    let mutations_fail = caught.iter().filter(|(n, _)| n == "and").all(|(_, d)| d[0] && d[1]);
    Outcome {
        pass: worst == 0 && mutations_fail,
        detail: format!(
            "{compared} input vectors, max distance {worst}/2^n; mutation detection (identity R1, reused pad): {caught:?}"
        ),
    }
}

fn compiled(g: &Graph, algo: &AlgorithmSpec) -> CompiledAlgorithm {
    let trees = build_private_trees(g).unwrap();
    compile(algo, g, &trees, CompileOptions::default()).unwrap()
}

fn plain_outputs(g: &Graph, algo: &AlgorithmSpec, x: &[Bits]) -> Vec<Bits> {
    run(g, algo, x, 0, NetConfig::new(g)).unwrap().outputs
}

#[derive(Default)]
struct CorrectnessLog {
    compared: usize,
    mismatches: Vec<String>,
    hygiene_runs: usize,
    hygiene_violations: usize,
    costs: Vec<RoundCost>,
}

impl CorrectnessLog {
    fn compare(&mut self, label: &str, c: &CompiledAlgorithm, x: &[Bits], seed: u64) {
        let e = c.run(x, seed, true).unwrap();
        self.hygiene_runs += 1;
        self.hygiene_violations += scan_key_hygiene(&e.transcript).violations.len();
        self.compared += 1;
        if e.outputs != plain_outputs(&c.graph, &c.source, x) {
            self.mismatches.push(format!("{label} {x:?}"));
        }
    }
}

fn small_graphs() -> Vec<(String, Graph)> {
    vec![("C4".into(), Graph::cycle(4)), ("C5".into(), Graph::cycle(5)), ("K4".into(), Graph::complete(4))]
}

fn random_graphs() -> Vec<(String, Graph)> {
    (0..20u64)
        .map(|i| {
            let n = 6 + (i as usize % 7);
            let extra = 1 + (i as usize % 5);
            (format!("random-2vc n={n} extra={extra} seed={i}"), generate(&Family::Random2vc { n, extra }, 100 + i).unwrap())
        })
        .collect()
}

const SUM_WIDTH: usize = 2;
const EXHAUSTIVE_LIMIT: usize = 10;

fn correctness(log: &mut CorrectnessLog) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (label, g) in small_graphs().into_iter().chain(random_graphs()) {
        let n = g.node_count();
        let coloring = verify_coloring(&g, 1).unwrap();
        let sum = sum_to_root(&g, SUM_WIDTH).unwrap();
        let (cc, cs) = (compiled(&g, &coloring), compiled(&g, &sum));
        log.costs.push(round_cost(&cc).unwrap());
        log.costs.push(round_cost(&cs).unwrap());
        let small = label.len() == 2;
        let coloring_inputs_list: Vec<u64> = if n <= EXHAUSTIVE_LIMIT && (small || n <= 8) {
            (0..1u64 << n).collect()
        } else {
            (0..48).map(|_| rng.gen_range(0..1u64 << n)).collect()
        };
        for (k, code) in coloring_inputs_list.into_iter().enumerate() {
            let colors: Vec<u64> = (0..n).map(|u| code >> u & 1).collect();
            log.compare(&format!("{label} coloring"), &cc, &coloring_inputs(&colors, 1), k as u64);
        }
        let values: Vec<Vec<u64>> = if small {
            (0..1u64 << (SUM_WIDTH * n))
                .map(|code| (0..n).map(|u| code >> (SUM_WIDTH * u) & 3).collect())
                .collect()
        } else {
            (0..24).map(|_| (0..n).map(|_| rng.gen_range(0..1 << SUM_WIDTH)).collect()).collect()
        };
        for (k, v) in values.into_iter().enumerate() {
            log.compare(&format!("{label} sum"), &cs, &sum_to_root_inputs(&g, SUM_WIDTH, &v).unwrap(), k as u64);
        }
    }
}

const LUBY_SEEDS: u64 = 2000;

/// Output-vector histograms of compiled and plain Luby runs on C_5.
fn luby(log: &mut CorrectnessLog) -> (f64, f64, usize, usize) {
    let g = Graph::cycle(5);
    let algo = luby_mis(&g, 3).unwrap();
    let c = compiled(&g, &algo);
    log.costs.push(round_cost(&c).unwrap());
    let x = vec![Vec::new(); 5];
    let mut counts: BTreeMap<Vec<Bits>, [u64; 2]> = BTreeMap::new();
    let mut invalid = 0;
    for seed in 0..LUBY_SEEDS {
        let e = c.run(&x, seed, true).unwrap();
        log.hygiene_runs += 1;
        log.hygiene_violations += scan_key_hygiene(&e.transcript).violations.len();
        let check = check_mis(&g, &e.outputs);
        if !(check.independent && check.dominated && check.undecided == 0) {
            invalid += 1;
        }
        counts.entry(e.outputs).or_default()[0] += 1;
        let p = run(&g, &algo, &x, seed, NetConfig::new(&g)).unwrap();
        counts.entry(p.outputs).or_default()[1] += 1;
    }
    let (a, b): (Vec<u64>, Vec<u64>) = counts.values().map(|v| (v[0], v[1])).unzip();
    let (stat, p) = chi_square_homogeneity(&a, &b);
    (stat, p, counts.len(), invalid)
}

fn criterion_end_to_end() -> Outcome {
    let g = Graph::cycle(4);
    let c = compiled(&g, &not_gate(&g).unwrap());
    let nodes: Vec<_> = g.nodes().collect();
    let mut exact_ok = true;
    let mut tapes = 0;
    for code in 0..16u64 {
        let x: Vec<Bits> = (0..4).map(|u| from_u64(code >> u & 1, 1)).collect();
        for v in check_nodes(&c, &x, &nodes, Mode::exact()).unwrap() {
            exact_ok &= v.pass && v.exact_distance.as_deref() == Some("0");
            tapes += v.tapes_enumerated;
        }
    }

    let g5 = Graph::cycle(5);
    let algo = verify_coloring(&g5, 1).unwrap();
    let c5 = compiled(&g5, &algo);
    let x = coloring_inputs(&[0, 1, 0, 1, 1], 1);
    let params = StatParams {
        samples: 100_000,
        ..StatParams::default()
    };
    let v = check_perfect_privacy(&c5, &x, 0, Mode::Statistical(params)).unwrap();
    let worst = v.worst_chunk.as_ref().map(|w| w.p_value).unwrap_or(1.0);
    Outcome {
        pass: exact_ok && v.pass,
        detail: format!(
            "exact: 'not' on C4, all 16 inputs x 4 nodes, distance 0 = {exact_ok}, {tapes} tapes; \
             statistical: verify-coloring on C5 ({} source rounds), node 0, N = {}, TV = {:.4}, min p = {worst:.3e}, pass = {}",
            algo.rounds, params.samples, v.distance, v.pass
        ),
    }
}

/// The first gossip round has no inbound messages, so compiled rounds are
/// affine in `r` with a small negative offset; the ratio tends to 2 from above.
const GOSSIP_ROUNDS: usize = 8;

fn criterion_rounds(costs: &[RoundCost]) -> Outcome {
    let mut ratios = Vec::new();
    let mut corpus = small_graphs();
    corpus.extend(random_graphs().into_iter().take(4));
    let mut all = costs.to_vec();
    for (label, g) in &corpus {
        let r1 = compiled(g, &xor_gossip(g, GOSSIP_ROUNDS).unwrap());
        let r2 = compiled(g, &xor_gossip(g, 2 * GOSSIP_ROUNDS).unwrap());
        let (a, b) = (round_cost(&r1).unwrap(), round_cost(&r2).unwrap());
        ratios.push((label.clone(), b.measured as f64 / a.measured as f64));
        all.push(a);
        all.push(b);
    }
    let linear = ratios.iter().all(|(_, q)| (1.8..=2.2).contains(q));
    let fitted = fit_constant(&all);
    let bounded = all.iter().all(|c| c.measured as f64 <= c.predicted);
    let (lo, hi) = ratios.iter().fold((f64::MAX, 0f64), |(lo, hi), (_, q)| (lo.min(*q), hi.max(*q)));
    Outcome {
        pass: linear && bounded,
        detail: format!(
            "xor-gossip r = {GOSSIP_ROUNDS}: rounds(2r)/rounds(r) in [{lo:.3}, {hi:.3}] over {} graphs; fitted C = {fitted:.4} vs declared {DEFAULT_CONSTANT} over {} measurements",
            ratios.len(),
            all.len()
        ),
    }
}

fn main() {
    let mut results = Vec::new();

    let t = Instant::now();
    let corpus = tree_corpus();
    let records = build_tree_records(&corpus);
    let mut o = criterion_trees(&records);
    let elapsed = t.elapsed();
    o.pass &= elapsed.as_secs_f64() < 60.0;
    report(&mut results, 1, "private-tree validity", t, o);
    let t = Instant::now();
    report(&mut results, 2, "halving law", t, criterion_halving(&records));
    let t = Instant::now();
    report(&mut results, 3, "parameter transfer", t, criterion_transfer(&records));
    let t = Instant::now();
    report(&mut results, 4, "auxiliary 2-vertex-connectivity", t, criterion_aux(&records));

    let cases = psm_cases();
    let t = Instant::now();
    report(&mut results, 5, "PSM perfect correctness", t, criterion_psm_correct(&cases));
    let t = Instant::now();
    report(&mut results, 6, "PSM perfect privacy", t, criterion_psm_private(&cases));

    let t = Instant::now();
    let mut log = CorrectnessLog::default();
    correctness(&mut log);
    let (stat, p, categories, invalid) = luby(&mut log);
    let alpha = 0.01;
    report(
        &mut results,
        7,
        "compiler correctness",
        t,
        Outcome {
            pass: log.mismatches.is_empty() && p >= alpha && invalid == 0,
            detail: format!(
                "{} deterministic comparisons, mismatches {:?}; Luby C5 {LUBY_SEEDS} seeds: chi2 = {stat:.2} over {categories} outcomes, p = {p:.3} (alpha {alpha}), invalid MIS {invalid}",
                log.compared,
                &log.mismatches[..log.mismatches.len().min(3)]
            ),
        },
    );

    let t = Instant::now();
    report(&mut results, 8, "end-to-end perfect privacy", t, criterion_end_to_end());
    let t = Instant::now();
    report(&mut results, 9, "round accounting", t, criterion_rounds(&log.costs));
    let t = Instant::now();
    report(
        &mut results,
        10,
        "key hygiene",
        t,
        Outcome {
            pass: log.hygiene_violations == 0 && log.hygiene_runs > 0,
            detail: format!("{} transcripts scanned, {} violations", log.hygiene_runs, log.hygiene_violations),
        },
    );

    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria pass", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
