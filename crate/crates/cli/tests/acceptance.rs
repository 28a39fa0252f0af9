//! Acceptance criteria, one line per criterion.
//!
//! Criteria listed in `KNOWN_FAILURES` are reported as FAIL and do not fail
//! the target; any other failure, or a known failure that starts passing,
//! exits nonzero.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use kspm::analysis::rational::{frac, int};
use kspm::analysis::{
    build_u_vectors, prefix_sweep, projection_law, run_growth, verify_recurrence, JordanData, Poly,
};
use kspm::pseudolocal::{find_interval_l, predict_suffix};
use kspm::strategies::run_process;
use kspm::{Parameters, RunTrace};
use kspm_cli::bench::check_equivalence;
use kspm_cli::suites::{self, Check, SuiteReport, VerifyOptions};

const GRAINS: u64 = 20_000;
const DS: [usize; 3] = [3, 4, 5];

const KNOWN_FAILURES: &[(u8, &str)] = &[
    (
        7,
        "the stated closed form (N + a_0 + 2/27)/9 is off by 16/243; (N + a_0)/9 + 2/27 holds",
    ),
    (8, "N_min ratios for j = 2..5 are 36.6, 1.59, 3.95, 9.92"),
];

struct Outcome {
    id: u8,
    title: &'static str,
    lines: Vec<String>,
    passed: bool,
    seconds: f64,
}

struct Criterion {
    lines: Vec<String>,
    passed: bool,
}

impl Criterion {
    fn new() -> Self {
        Criterion {
            lines: Vec::new(),
            passed: true,
        }
    }

    fn check(&mut self, c: &Check, label: &str) {
        let status = if c.ok() { "ok" } else { "FAIL" };
        let mut line = format!("{label}{}: {}/{} {status}", c.name, c.passed, c.total);
        if let Some(f) = &c.first_failure {
            line.push_str(&format!(" ({f})"));
        }
        self.lines.push(line);
        self.passed &= c.ok();
    }

    fn report(&mut self, r: &SuiteReport, label: &str, names: &[&str]) {
        for c in &r.checks {
            if names.is_empty() || names.contains(&c.name.as_str()) {
                self.check(c, label);
            }
        }
    }

    fn assert(&mut self, ok: bool, what: impl Into<String>) {
        let what = what.into();
        self.lines
            .push(format!("{what}: {}", if ok { "ok" } else { "FAIL" }));
        self.passed &= ok;
    }

    fn note(&mut self, what: impl Into<String>) {
        self.lines.push(what.into());
    }

    fn budget(&mut self, t0: Instant, limit: f64) {
        let s = t0.elapsed().as_secs_f64();
        self.assert(s < limit, format!("runtime {s:.1}s < {limit:.0}s"));
    }
}

fn p(d: usize) -> Parameters {
    Parameters::new(d).unwrap()
}

fn traces() -> Vec<RunTrace> {
    DS.iter()
        .map(|&d| run_process(GRAINS, p(d)).unwrap())
        .collect()
}

fn single_fire(traces: &[RunTrace]) -> Criterion {
    let t0 = Instant::now();
    let mut c = Criterion::new();
    for t in traces {
        c.report(
            &suites::single_fire(t),
            &format!("D={} ", t.params.d()),
            &[],
        );
    }
    c.budget(t0, 60.0);
    c
}

fn diamond_and_convergence() -> Criterion {
    let t0 = Instant::now();
    let mut c = Criterion::new();
    for d in DS {
        let opts = VerifyOptions {
            d,
            seed: d as u64,
            ..VerifyOptions::default()
        };
        let label = format!("D={d} ");
        c.report(&suites::diamond(&opts, p(d)), &label, &[]);
        c.report(&suites::convergence(&opts, p(d)), &label, &[]);
    }
    c.budget(t0, 60.0 * DS.len() as f64);
    c
}

fn structure_checks(
    traces: &[RunTrace],
    names: &[&str],
    budget: f64,
) -> (Criterion, Vec<SuiteReport>) {
    let t0 = Instant::now();
    let mut c = Criterion::new();
    let reports: Vec<SuiteReport> = traces.iter().map(suites::structure).collect();
    for (t, r) in traces.iter().zip(&reports) {
        c.report(r, &format!("D={} ", t.params.d()), names);
    }
    c.budget(t0, budget);
    (c, reports)
}

/// Suffix match when the first peak fills down only to `l' - D + 2`.
fn default_floor_matches(t: &RunTrace) -> (usize, usize) {
    let d = t.params.d();
    let mut hits = 0;
    let mut total = 0;
    for k in 1..=t.n_grains() {
        let av = t.avalanche(k);
        let Some(l) = find_interval_l(av, t.params) else {
            continue;
        };
        total += 1;
        let prev = t.fixed_point(k - 1);
        let s = av.strategy.as_slice();
        let actual = av
            .peaks
            .iter()
            .find(|&&q| q >= l + d - 1)
            .and_then(|q| s.iter().position(|c| c == q))
            .map_or(&s[s.len()..], |t0| &s[t0..]);
        if predict_suffix(&prev, l, None).as_slice() == actual {
            hits += 1;
        }
    }
    (hits, total)
}

fn peak_prediction(traces: &[RunTrace]) -> Criterion {
    let (mut c, reports) =
        structure_checks(traces, &["predicted peaks", "predicted suffix"], 120.0);
    for (t, r) in traces.iter().zip(&reports) {
        for n in &r.notes {
            c.note(n.clone());
        }
        let (hits, total) = default_floor_matches(t);
        c.note(format!(
            "D={}: first-peak fill-down to l'-D+2 alone matches {hits}/{total}",
            t.params.d()
        ));
    }
    c
}

fn shot_and_mass() -> Criterion {
    let t0 = Instant::now();
    let mut c = Criterion::new();
    for d in DS {
        let r = suites::shot_vector(GRAINS, p(d)).unwrap();
        c.report(
            &r,
            &format!("D={d} "),
            &["shot identity", "weighted mass = k"],
        );
    }
    c.budget(t0, 60.0);
    c
}

fn exact_algebra() -> Criterion {
    let t0 = Instant::now();
    let mut c = Criterion::new();
    let jd = JordanData::compute();
    let x = |a: i64, b: i64| Poly::from_coeffs(&[int(a), int(b)]);
    let expected = &(&Poly::from_coeffs(&[frac(1, 2)]) * &x(1, 2)) * &(&x(-1, 1) * &x(-1, 1));
    c.assert(
        jd.characteristic == expected,
        format!("det(xI - A) = {}", jd.characteristic),
    );
    c.assert(
        jd.eigenvalues == vec![(frac(-1, 2), 1), (int(1), 2)] && jd.geometric == vec![1, 1],
        "eigenvalues -1/2 (simple), 1 (double, one Jordan block)",
    );
    c.assert(jd.projection_shift() == frac(-2, 27), "v = -2/27 e'_3");

    let n_min = prefix_sweep(3, 2_000_000);
    c.assert(
        n_min[0] == Some(2) && n_min[1] == Some(8),
        format!("N_min(1), N_min(2) = {:?}, {:?}", n_min[0], n_min[1]),
    );
    for (j, n) in n_min.iter().enumerate() {
        let j = j + 1;
        let Some(n) = *n else {
            c.assert(false, format!("N_min({j}) found"));
            continue;
        };
        let t = run_process(n, p(3)).unwrap();
        let fix = t.final_fixed_point();
        let us = build_u_vectors(&t.shot, n, fix.sigma().len() + 2, p(3)).unwrap();
        c.assert(
            verify_recurrence(&us, &fix).is_ok(),
            format!("j={j} N={n}: u_(i+1) = A u_i + v_i"),
        );
        match projection_law(&fix, &t.shot, n, j) {
            Ok(law) => {
                c.assert(
                    true,
                    format!(
                        "j={j} N={n}: quarter contraction, (N + a_0)/9 + 2/27 = 4^j x_j = {}, x_j = {} > 0",
                        law.origin, law.x_j
                    ),
                );
                let stated = (int(n as i64 + law.a0) + frac(2, 27)) / int(9);
                c.assert(
                    stated == law.scaled_x(),
                    format!(
                        "j={j} N={n}: (N + a_0 + 2/27)/9 = {stated} vs 4^j x_j = {}",
                        law.scaled_x()
                    ),
                );
            }
            Err(e) => c.assert(false, format!("j={j} N={n}: projection law: {e}")),
        }
    }
    c.budget(t0, 60.0);
    c
}

fn growth() -> Criterion {
    let t0 = Instant::now();
    let mut c = Criterion::new();
    let opts = VerifyOptions {
        grains: 100_000,
        ..VerifyOptions::default()
    };
    let report = run_growth(opts.grains, opts.j_max, opts.cap).unwrap();
    let r = suites::growth_checks(&report, &opts);
    c.report(&r, "", &[]);
    for n in &r.notes {
        c.note(n.clone());
    }
    c.budget(t0, 600.0);
    c
}

fn bench_sanity() -> Criterion {
    let t0 = Instant::now();
    let mut c = Criterion::new();
    for d in DS {
        let e = check_equivalence(GRAINS, p(d)).unwrap();
        c.assert(
            e.mismatch.is_none(),
            format!("D={d}: {} predicted avalanches equal replay", e.avalanches),
        );
        let s = e.stats;
        c.assert(
            s.simulated_above_interval == 0 && s.predicted_avalanches > 0,
            format!(
                "D={d}: simulated firings above interval = {} over {} predicted avalanches",
                s.simulated_above_interval, s.predicted_avalanches
            ),
        );
        c.note(format!(
            "D={d}: {} firings replayed, {} predicted (mean suffix {:.1}), {} fallbacks",
            s.simulated_firings,
            s.predicted_firings,
            s.predicted_firings as f64 / s.predicted_avalanches.max(1) as f64,
            s.fallbacks
        ));
    }
    let naive = kspm_cli::bench::time_naive(GRAINS, p(3));
    let fast = kspm_cli::bench::time_pseudolocal(GRAINS, p(3));
    c.note(format!(
        "D=3 timing: naive {:.3}s, pseudolocal {:.3}s",
        naive.seconds, fast.seconds
    ));
    c.budget(t0, 120.0);
    c
}

fn kspm(args: &[&str]) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_kspm"))
        .args(args)
        .output()
        .unwrap();
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap()
}

fn cli_determinism() -> Criterion {
    let t0 = Instant::now();
    let mut c = Criterion::new();
    let tmp = tempfile::tempdir().unwrap();
    let dir = |n: &str| tmp.path().join(n);
    let s = |p: std::path::PathBuf| p.to_string_lossy().into_owned();

    let run = |out: &str, extra: &[&str]| {
        let mut args = vec![
            "simulate", "--grains", "3000", "--d", "3", "--seed", "42", "--out",
        ];
        let out = s(dir(out));
        args.push(&out);
        args.extend_from_slice(extra);
        kspm(&args).0
    };
    let codes = [run("a", &[]), run("b", &[])];
    c.assert(codes == [0, 0], "two identical simulate runs exit 0");
    c.assert(
        read(&dir("a"), "trace.jsonl") == read(&dir("b"), "trace.jsonl"),
        "trace streams byte-identical",
    );

    let (code, _) = kspm(&[
        "simulate",
        "--grains",
        "1200",
        "--d",
        "3",
        "--seed",
        "42",
        "--snapshot-every",
        "1000",
        "--out",
        &s(dir("r")),
    ]);
    let snap = s(dir("r")
        .join("snapshots")
        .join("snapshot-000000001000.json"));
    let (code2, _) = kspm(&[
        "simulate",
        "--grains",
        "3000",
        "--d",
        "3",
        "--resume-from",
        &snap,
        "--out",
        &s(dir("r")),
    ]);
    c.assert(code == 0 && code2 == 0, "interrupted run and resume exit 0");
    for f in ["trace.jsonl", "fixed_point.tsv", "shot.tsv"] {
        c.assert(
            read(&dir("a"), f) == read(&dir("r"), f),
            format!("resumed {f} equals uninterrupted"),
        );
    }

    let verify = || {
        kspm(&[
            "verify",
            "--suite",
            "convergence",
            "--configs",
            "50",
            "--seeds",
            "5",
            "--seed",
            "9",
        ])
    };
    let (v1, o1) = verify();
    let (v2, o2) = verify();
    c.assert(
        v1 == 0 && v2 == 0 && o1 == o2,
        "seeded convergence output identical",
    );
    c.budget(t0, 120.0);
    c
}

fn main() {
    let t0 = Instant::now();
    let traces = traces();
    println!(
        "traces for D = 3, 4, 5 up to k = {GRAINS}: {:.1}s",
        t0.elapsed().as_secs_f64()
    );

    type Run<'a> = Box<dyn Fn() -> Criterion + 'a>;
    let criteria: Vec<(u8, &str, Run)> = vec![
        (
            1,
            "each column fires at most once",
            Box::new(|| single_fire(&traces)),
        ),
        (
            2,
            "diamond closure and strong convergence",
            Box::new(diamond_and_convergence),
        ),
        (
            3,
            "predicted peaks and suffix equal replay",
            Box::new(|| peak_prediction(&traces)),
        ),
        (
            4,
            "local density gap bounds",
            Box::new(|| structure_checks(&traces, &["local density"], 120.0).0),
        ),
        (
            5,
            "successive fixed point equality",
            Box::new(|| structure_checks(&traces, &["successive equality"], 120.0).0),
        ),
        (
            6,
            "shot identity and weighted mass",
            Box::new(shot_and_mass),
        ),
        (7, "D=3 exact algebra", Box::new(exact_algebra)),
        (8, "growth laws", Box::new(growth)),
        (9, "pseudo-local benchmark sanity", Box::new(bench_sanity)),
        (10, "CLI determinism and resume", Box::new(cli_determinism)),
    ];

    let mut outcomes = Vec::new();
    for (id, title, run) in criteria {
        let t = Instant::now();
        let c = run();
        outcomes.push(Outcome {
            id,
            title,
            lines: c.lines,
            passed: c.passed,
            seconds: t.elapsed().as_secs_f64(),
        });
    }

    println!();
    let mut unexpected = 0;
    for o in &outcomes {
        for l in &o.lines {
            println!("    [{}] {l}", o.id);
        }
    }
    println!();
    for o in &outcomes {
        let known = KNOWN_FAILURES.iter().find(|(id, _)| *id == o.id);
        let status = if o.passed { "PASS" } else { "FAIL" };
        let mut line = format!(
            "criterion {:>2}: {status}  {} ({:.1}s)",
            o.id, o.title, o.seconds
        );
        match (o.passed, known) {
            (false, Some((_, why))) => line.push_str(&format!("  [known: {why}]")),
            (false, None) => unexpected += 1,
            (true, Some(_)) => {
                line.push_str("  [listed as a known failure but passed]");
                unexpected += 1;
            }
            (true, None) => {}
        }
        println!("{line}");
    }
    let passed = outcomes.iter().filter(|o| o.passed).count();
    println!(
        "{passed}/{} criteria pass, {unexpected} unexpected outcomes",
        outcomes.len()
    );
    if unexpected > 0 {
        std::process::exit(1);
    }
}
