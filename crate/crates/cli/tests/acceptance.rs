//! Acceptance run: one line per criterion, at pinned seeds and tolerances.
//!
//! A criterion listed in `EXPECTED_RED` is one that cannot hold as stated
//! (see the decisions ledger). It is still computed in full and printed as
//! FAIL. The run exits non-zero when any outcome differs from what is
//! expected, in either direction.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use bexp_fpp::environment::sample_be_env;
use bexp_fpp::fpp::{brute_force_oracle, first_passage, PassageConstraint, PassageTimeQuery, ORACLE_BUDGET};
use bexp_fpp::graph::{build_layered, LayeredWeighting};
use bexp_fpp::samplers::RngStream;
use bexp_fpp::stats::StatReport;
use bexp_fpp::suites::{self, ConvergenceConfig, CouplingConfig, LayeredConfig};
use bexp_fpp::Digraph;
use rand::Rng;

const SEED: u64 = 42;
const A: [f64; 3] = [1.0, 2.0, 3.0];

/// Criteria whose statement is contradicted by the weights they prescribe.
const EXPECTED_RED: [(u32, &str); 2] = [
    (8, "the prescribed layered weights are not divergence-free, so the two laws differ (KS ≈ 3/70)"),
    (9, "the prescribed layered weights carry 3.5·S out of and 2.5·S into the root"),
];

struct Outcome {
    id: String,
    passed: bool,
    detail: String,
    elapsed: Duration,
    limit: Option<Duration>,
}

fn worst(reports: &[StatReport]) -> String {
    let failing: Vec<&StatReport> = reports.iter().filter(|r| r.gating && !r.passed).collect();
    match failing.first() {
        Some(r) => format!(
            "{} of {} gating checks fail, first {} = {:.4e} > {:.4e}",
            failing.len(),
            reports.iter().filter(|r| r.gating).count(),
            r.name,
            r.statistic,
            r.critical_value
        ),
        None => format!("{} gating checks pass", reports.iter().filter(|r| r.gating).count()),
    }
}

fn timed(id: &str, limit: Option<u64>, f: impl FnOnce() -> (bool, String)) -> Outcome {
    let t = Instant::now();
    let (passed, detail) = f();
    let elapsed = t.elapsed();
    let limit = limit.map(Duration::from_secs);
    Outcome {
        id: id.to_string(),
        passed: passed && limit.is_none_or(|l| elapsed < l),
        detail,
        elapsed,
        limit,
    }
}

fn suite(out: Result<suites::SuiteOutput, suites::SuiteError>) -> (bool, String) {
    match out {
        Ok(o) => (o.passed(), worst(&o.reports)),
        Err(e) => (false, format!("error: {e}")),
    }
}

fn criterion_4() -> (bool, String) {
    let cfg = ConvergenceConfig {
        a: A.to_vec(),
        epsilons: vec![0.5, 0.2, 0.1, 0.05, 0.02],
        n: 20_000,
        seed: SEED,
        allow_tiny: false,
    };
    match suites::convergence(&cfg) {
        Ok(o) => {
            let ks: Vec<String> = o
                .reports
                .iter()
                .filter(|r| r.name.starts_with("convergence/eps=0.02/ks"))
                .map(|r| format!("{:.4}", r.statistic))
                .collect();
            (o.passed(), format!("{}; KS at eps=0.02: {}", worst(&o.reports), ks.join(", ")))
        }
        Err(e) => (false, format!("error: {e}")),
    }
}

fn criterion_6() -> (bool, String) {
    let g = suites::builtin_graph("triangle-chords", None).unwrap();
    let cfg = CouplingConfig {
        n: 20_000,
        seed: SEED,
        ..CouplingConfig::default()
    };
    let main = suites::distributional_suite(&g, &cfg).unwrap();
    let control_graph = suites::negative_control_graph(&g).unwrap();
    let control = suites::distributional_suite(&control_graph, &cfg).unwrap();
    let dual_fails = control
        .reports
        .iter()
        .any(|r| r.gating && !r.passed && r.name.starts_with("phi-check/"));
    let passed = main.passed() && dual_fails;
    let detail = format!(
        "triangle-chords: {}; negative control dual law {}",
        worst(&main.reports),
        if dual_fails { "rejected" } else { "NOT rejected" }
    );
    (passed, detail)
}

fn random_connected(rng: &mut RngStream) -> Digraph {
    let n = rng.random_range(2..=7);
    let mut edges: Vec<(usize, usize, f64)> = (0..n).map(|i| (i, (i + 1) % n, rng.random_range(0.2..3.0))).collect();
    for _ in 0..rng.random_range(0..=2 * n) {
        let (t, h) = (rng.random_range(0..n), rng.random_range(0..n));
        if t != h {
            edges.push((t, h, rng.random_range(0.2..3.0)));
        }
    }
    Digraph::from_edges(n, &edges).unwrap()
}

fn criterion_7() -> (bool, String) {
    let base = RngStream::new(SEED, 700);
    let mut queries = 0usize;
    let mut max_gap = 0.0f64;
    for k in 0..100 {
        let g = random_connected(&mut base.child(k));
        let env = sample_be_env(&g, &base.child(10_000 + k)).unwrap();
        for s in g.vertices() {
            let ret = PassageTimeQuery::constrained(
                s,
                s,
                PassageConstraint {
                    first_edges: g.out_edges(s).to_vec(),
                    last_edges: g.in_edges(s).to_vec(),
                    forbid_intermediate: vec![],
                },
            );
            for q in g.vertices().map(|t| PassageTimeQuery::new(s, t)).chain([ret]) {
                let fast = first_passage(&g, env.weights(), &q).unwrap().value;
                let slow = brute_force_oracle(&g, env.weights(), &q, ORACLE_BUDGET).unwrap().value;
                let gap = if fast == slow { 0.0 } else { (fast - slow).abs() };
                max_gap = max_gap.max(if gap.is_nan() { f64::INFINITY } else { gap });
                queries += 1;
            }
        }
    }
    (max_gap <= 1e-12, format!("{queries} queries on 100 graphs, max gap {max_gap:e}"))
}

fn criterion_8(weighting: LayeredWeighting) -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for a in [[1.0, 2.0, 3.0], [1.0, 1.0, 1.0]] {
        let cfg = LayeredConfig {
            a,
            n: 10_000,
            seed: SEED,
            weighting,
            ..LayeredConfig::default()
        };
        let o = suites::layered_example(&cfg).unwrap();
        let get = |suffix: &str| o.reports.iter().find(|r| r.name.ends_with(suffix)).unwrap();
        let ks = get("/ks-two-sample");
        let exact = get("/six-term-vs-dual-solver");
        ok &= ks.statistic < 0.0276 && exact.passed;
        parts.push(format!(
            "a={a:?}: KS {:.4} (< 0.0276 {}), six-term = dual solver {}",
            ks.statistic,
            if ks.statistic < 0.0276 { "yes" } else { "no" },
            if exact.passed { "yes" } else { "no" }
        ));
    }
    (ok, parts.join("; "))
}

fn criterion_9(weighting: LayeredWeighting) -> (bool, String) {
    let mut rng = RngStream::new(SEED, 900);
    let mut worst_ratio = 0.0f64;
    for _ in 0..20 {
        let a = [(); 3].map(|_| rng.random_range(0.05..10.0));
        let l = build_layered(a, weighting).unwrap();
        let s: f64 = a.iter().sum();
        worst_ratio = worst_ratio.max(l.graph.max_abs_divergence() / s);
    }
    (worst_ratio <= 1e-12, format!("max |div| / (a1+a2+a3) = {worst_ratio:.3e}"))
}

fn read_tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for sub in std::fs::read_dir(dir).unwrap() {
        let sub = sub.unwrap().path();
        for f in std::fs::read_dir(&sub).unwrap() {
            let f = f.unwrap().path();
            let key = f.strip_prefix(dir).unwrap().display().to_string();
            out.insert(key, std::fs::read(&f).unwrap());
        }
    }
    out
}

fn criterion_10() -> (bool, String) {
    let bin = env!("CARGO_BIN_EXE_bexp-fpp");
    let runs: [&[&str]; 4] = [
        &["verify-distributions", "--n", "20000"],
        &["convergence"],
        &["verify-coupling", "--builtin", "triangle-chords"],
        &["layered-example", "--export-witnesses"],
    ];
    let mut trees = Vec::new();
    for workers in ["1", "8", "8"] {
        let dir = tempfile::tempdir().unwrap();
        for args in runs {
            let status = Command::new(bin)
                .args(args)
                .args(["--workers", workers, "--out"])
                .arg(dir.path())
                .output()
                .unwrap()
                .status;
            if status.code().is_none_or(|c| c > 1) {
                return (false, format!("{args:?} exited with {status}"));
            }
        }
        trees.push(read_tree(dir.path()));
    }
    let files = trees[0].len();
    let bytes: usize = trees[0].values().map(Vec::len).sum();
    let same = trees.windows(2).all(|w| w[0] == w[1]);
    (
        same,
        format!("{files} files, {bytes} bytes; workers 1, 8 and 8 again {}", if same { "identical" } else { "DIFFER" }),
    )
}

fn main() {
    // libtest flags such as --nocapture are accepted and ignored
    let mut outcomes = vec![
        timed("1", Some(5), || suite(suites::be_exp_law(&A, 100_000, SEED))),
        timed("2", Some(5), || suite(suites::min_decomposition(&A, 100_000, SEED))),
        timed("3", Some(10), || {
            let mut a = suites::memorylessness(&A, 100_000, SEED).unwrap().reports;
            a.extend(suites::conditional_restriction(&A, 100_000, SEED).unwrap().reports);
            (bexp_fpp::stats::verdict(&a), worst(&a))
        }),
        timed("4", Some(60), criterion_4),
        timed("5", Some(10), || {
            let g = suites::builtin_graph("triangle-chords", None).unwrap();
            suite(suites::algebraic_suite(&g, &CouplingConfig { seed: SEED, ..CouplingConfig::default() }))
        }),
        timed("6", Some(120), criterion_6),
        timed("7", Some(30), criterion_7),
        timed("8", Some(60), || criterion_8(LayeredWeighting::Literal)),
        timed("9", Some(1), || criterion_9(LayeredWeighting::Literal)),
        timed("10", None, criterion_10),
    ];
    let supplementary = vec![
        timed("8 (balanced weights)", None, || criterion_8(LayeredWeighting::Balanced)),
        timed("9 (balanced weights)", None, || criterion_9(LayeredWeighting::Balanced)),
        timed("gamma-dirichlet", None, || {
            suite(suites::gamma_dirichlet_independence(&A, 100_000, SEED))
        }),
    ];

    let mut unexpected = Vec::new();
    println!();
    for o in outcomes.iter_mut() {
        let id: u32 = o.id.parse().unwrap();
        let red = EXPECTED_RED.iter().find(|(c, _)| *c == id);
        let limit = o.limit.map(|l| format!(" / limit {} s", l.as_secs())).unwrap_or_default();
        println!(
            "criterion {:>2}: {}  [{:.2} s{limit}]  {}",
            o.id,
            if o.passed { "PASS" } else { "FAIL" },
            o.elapsed.as_secs_f64(),
            o.detail
        );
        if let Some((_, why)) = red {
            println!("              expected FAIL: {why}");
        }
        if o.passed == red.is_some() {
            unexpected.push(o.id.clone());
        }
    }
    for o in &supplementary {
        println!(
            "supplementary {}: {}  [{:.2} s]  {}",
            o.id,
            if o.passed { "PASS" } else { "FAIL" },
            o.elapsed.as_secs_f64(),
            o.detail
        );
        if !o.passed {
            unexpected.push(o.id.clone());
        }
    }
    let green = outcomes.iter().filter(|o| o.passed).count();
    println!("\n{green}/{} criteria pass; expected red: 8, 9", outcomes.len());
    if !unexpected.is_empty() {
        println!("outcomes differ from expectations for: {}", unexpected.join(", "));
        std::process::exit(1);
    }
}
