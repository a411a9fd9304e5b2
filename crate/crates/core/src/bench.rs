//! Monte-Carlo driver over generated ensembles.
//!
//! Run `i` uses instance seed `base_seed + i`, so any single run can be
//! replayed on its own. Runs execute on a rayon pool; records are kept in
//! run order and the aggregates are a pure fold over them.

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::SdpStatus;
use crate::error::{Error, Result};
use crate::fpp::{multi_start, run_fpp_sca, FppParams, FppResult, FppStatus, MONOTONE_SLACK};
use crate::gen::{derive_seed, random_start, GeneratorSpec};
use crate::hermitian::ComplexVector;
use crate::problem::QcqpInstance;
use crate::schema::{IterateJson, VectorJson};
use crate::sdr::{loss_db, randomize_and_scale, sdr_lower_bound, solve_sdr, SdrResult, DEFAULT_DRAWS};

/// Largest tolerated share of failed runs.
pub const MAX_FAILURE_RATE: f64 = 0.05;
/// Loss averages need at least this many contributing runs.
pub const MIN_LOSS_RUNS: usize = 5;
/// Multicast screening gives up after this many candidates per wanted instance.
pub const MULTICAST_SCREEN_FACTOR: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    SdrOnly,
    FppOnly,
    Both,
    Multicast,
}

impl Scenario {
    fn runs_sdr(self) -> bool {
        self != Scenario::FppOnly
    }

    fn runs_fpp(self) -> bool {
        self != Scenario::SdrOnly
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::SdrOnly => "sdr_only",
            Scenario::FppOnly => "fpp_only",
            Scenario::Both => "both",
            Scenario::Multicast => "multicast",
        })
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sdr_only" => Ok(Scenario::SdrOnly),
            "fpp_only" => Ok(Scenario::FppOnly),
            "both" => Ok(Scenario::Both),
            "multicast" => Ok(Scenario::Multicast),
            other => Err(Error::InvalidParameter(format!("unknown scenario `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub generator: GeneratorSpec,
    /// Number of runs; for the multicast study, the number of SDR-feasible
    /// instances to collect.
    pub runs: usize,
    pub fpp: FppParams,
    pub draws: usize,
    pub base_seed: u64,
    pub scenario: Scenario,
    /// Random starts per run; the best result is kept.
    pub starts: usize,
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
}

impl BenchConfig {
    pub fn new(generator: GeneratorSpec, runs: usize, scenario: Scenario) -> Self {
        Self {
            generator,
            runs,
            fpp: FppParams::default(),
            draws: DEFAULT_DRAWS,
            base_seed: 0,
            scenario,
            starts: 1,
            jobs: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::InvalidParameter("runs must be at least 1".into()));
        }
        if self.starts == 0 {
            return Err(Error::InvalidParameter("starts must be at least 1".into()));
        }
        if self.jobs == Some(0) {
            return Err(Error::InvalidParameter("jobs must be at least 1".into()));
        }
        if (self.scenario == Scenario::Multicast) != self.generator.is_multicast() {
            return Err(Error::InvalidParameter(
                "the multicast scenario requires a multicast generator and vice versa".into(),
            ));
        }
        self.fpp.validate()
    }

    fn in_pool<T: Send>(&self, f: impl FnOnce() -> T + Send) -> Result<T> {
        match self.jobs {
            None => Ok(f()),
            Some(jobs) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(jobs)
                    .build()
                    .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
                Ok(pool.install(f))
            }
        }
    }
}

/// Starting points of the pursuit for instance seed `seed`.
pub fn run_starts(n: usize, seed: u64, starts: usize) -> Vec<ComplexVector> {
    (0..starts)
        .map(|j| match j {
            0 => random_start(n, seed),
            _ => random_start(n, derive_seed(seed, j as u64)),
        })
        .collect()
}

/// Everything recorded about one run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub error: Option<String>,

    pub sdr_status: Option<SdpStatus>,
    pub lower_bound: Option<f64>,
    pub rank1: Option<bool>,
    pub sdr_from_rank_one: Option<bool>,
    pub sdr_feasible: Option<bool>,
    pub sdr_objective: Option<f64>,
    pub sdr_loss_db: Option<f64>,
    pub randomizations_tried: usize,
    /// Total violation of the best-effort randomization point.
    pub best_effort_violation: Option<f64>,

    pub fpp_status: Option<FppStatus>,
    pub fpp_feasible: Option<bool>,
    pub fpp_objective: Option<f64>,
    pub fpp_iters_feasibility: Option<usize>,
    pub fpp_iters_convergence: Option<usize>,
    pub fpp_loss_db: Option<f64>,
    pub fpp_kkt_pass: Option<bool>,
    pub fpp_stationarity: Option<f64>,
    pub fpp_complementarity: Option<f64>,
    pub fpp_max_slack: Option<f64>,
    /// Largest constraint violation of the returned point.
    pub fpp_max_violation: Option<f64>,
    /// Largest increase of the penalized objective along the trace.
    pub fpp_max_increase: Option<f64>,
    pub fpp_feasibility_lost: Option<bool>,
}

impl RunRecord {
    fn new(run: usize, seed: u64) -> Self {
        Self {
            run,
            seed,
            ..Self::default()
        }
    }

    fn record_sdr(&mut self, sdr: &SdrResult) {
        self.sdr_status = Some(sdr.status);
        self.lower_bound = sdr.lower_bound.is_finite().then_some(sdr.lower_bound);
        self.rank1 = Some(sdr.rank1);
        self.sdr_from_rank_one = Some(sdr.from_rank_one);
        self.sdr_feasible = Some(sdr.is_feasible());
        self.sdr_objective = sdr.best_objective;
        self.sdr_loss_db = sdr.loss_db();
        self.randomizations_tried = sdr.randomizations_tried;
        self.best_effort_violation = sdr.best_effort.as_ref().map(|p| p.total_violation);
    }

    fn record_fpp(&mut self, r: &FppResult) {
        self.fpp_status = Some(r.status);
        self.fpp_feasible = Some(r.feasible);
        self.fpp_objective = Some(r.objective);
        self.fpp_iters_feasibility = r.iterations_to_feasibility;
        self.fpp_iters_convergence = Some(r.iterations_to_convergence);
        self.fpp_loss_db = if r.feasible {
            self.lower_bound.and_then(|lb| loss_db(r.objective, lb))
        } else {
            None
        };
        self.fpp_kkt_pass = Some(r.kkt_pass);
        self.fpp_stationarity = Some(r.kkt.stationarity_residual);
        self.fpp_complementarity = Some(r.kkt.complementarity_residual);
        self.fpp_max_slack = Some(r.slack_max());
        self.fpp_max_violation = r
            .trace
            .records
            .last()
            .map(|rec| rec.violations.iter().copied().fold(0.0, f64::max));
        self.fpp_max_increase = Some(r.trace.max_penalized_increase());
        self.fpp_feasibility_lost = Some(r.feasibility_lost);
    }

    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

fn pct(count: usize, total: usize) -> Option<f64> {
    (total > 0).then(|| 100.0 * count as f64 / total as f64)
}

/// Table-style summary of a set of runs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub runs: usize,
    pub failed_runs: usize,
    /// Multicast only: candidates screened to collect the SDR-feasible runs.
    pub screened_instances: Option<usize>,

    pub sdr_runs: usize,
    pub rank1_pct: Option<f64>,
    pub no_feasible_after_randomization_pct: Option<f64>,
    pub feasible_after_randomization_pct: Option<f64>,
    pub sdr_avg_loss_db: Option<f64>,
    pub sdr_loss_runs: usize,

    pub fpp_runs: usize,
    pub fpp_feasible_pct: Option<f64>,
    pub fpp_avg_iters_feasibility: Option<f64>,
    /// Average over runs that converged before the iteration cap.
    pub fpp_avg_iters_convergence: Option<f64>,
    pub fpp_capped_runs: usize,
    pub fpp_avg_loss_db: Option<f64>,
    pub fpp_loss_runs: usize,
    pub fpp_kkt_pass_runs: usize,
    pub fpp_feasibility_lost_runs: usize,
    pub fpp_max_increase: Option<f64>,
    /// Smallest loss over runs with both a bound and a feasible point.
    pub min_loss_db: Option<f64>,
}

impl Aggregates {
    pub fn from_records(records: &[RunRecord]) -> Self {
        let ok: Vec<&RunRecord> = records.iter().filter(|r| !r.failed()).collect();
        let sdr: Vec<&RunRecord> = ok
            .iter()
            .copied()
            .filter(|r| r.sdr_status == Some(SdpStatus::Optimal))
            .collect();
        let rank1 = sdr.iter().filter(|r| r.sdr_from_rank_one == Some(true)).count();
        let randomized_ok = sdr
            .iter()
            .filter(|r| r.sdr_from_rank_one == Some(false) && r.sdr_feasible == Some(true))
            .count();
        let sdr_losses: Vec<f64> = sdr
            .iter()
            .filter(|r| r.sdr_from_rank_one == Some(false))
            .filter_map(|r| r.sdr_loss_db)
            .collect();

        let fpp: Vec<&RunRecord> = ok.iter().copied().filter(|r| r.fpp_status.is_some()).collect();
        let fpp_feasible = fpp.iter().filter(|r| r.fpp_feasible == Some(true)).count();
        let capped = fpp.iter().filter(|r| r.fpp_status == Some(FppStatus::MaxIter)).count();
        let fpp_losses: Vec<f64> = fpp.iter().filter_map(|r| r.fpp_loss_db).collect();
        let all_losses = ok.iter().flat_map(|r| [r.sdr_loss_db, r.fpp_loss_db]).flatten();

        Self {
            runs: records.len(),
            failed_runs: records.len() - ok.len(),
            screened_instances: None,
            sdr_runs: sdr.len(),
            rank1_pct: pct(rank1, sdr.len()),
            no_feasible_after_randomization_pct: pct(sdr.len() - rank1 - randomized_ok, sdr.len()),
            feasible_after_randomization_pct: pct(randomized_ok, sdr.len()),
            sdr_avg_loss_db: (sdr_losses.len() >= MIN_LOSS_RUNS)
                .then(|| mean(sdr_losses.iter().copied()))
                .flatten(),
            sdr_loss_runs: sdr_losses.len(),
            fpp_runs: fpp.len(),
            fpp_feasible_pct: pct(fpp_feasible, fpp.len()),
            fpp_avg_iters_feasibility: mean(
                fpp.iter()
                    .filter(|r| r.fpp_feasible == Some(true))
                    .filter_map(|r| r.fpp_iters_feasibility)
                    .map(|k| k as f64),
            ),
            fpp_avg_iters_convergence: mean(
                fpp.iter()
                    .filter(|r| r.fpp_status != Some(FppStatus::MaxIter))
                    .filter_map(|r| r.fpp_iters_convergence)
                    .map(|k| k as f64),
            ),
            fpp_capped_runs: capped,
            fpp_avg_loss_db: (fpp_losses.len() >= MIN_LOSS_RUNS)
                .then(|| mean(fpp_losses.iter().copied()))
                .flatten(),
            fpp_loss_runs: fpp_losses.len(),
            fpp_kkt_pass_runs: fpp.iter().filter(|r| r.fpp_kkt_pass == Some(true)).count(),
            fpp_feasibility_lost_runs: fpp.iter().filter(|r| r.fpp_feasibility_lost == Some(true)).count(),
            fpp_max_increase: fpp.iter().filter_map(|r| r.fpp_max_increase).reduce(f64::max),
            min_loss_db: all_losses.reduce(f64::min),
        }
    }

    /// `(metric, value)` pairs in a fixed order; absent values are `None`.
    pub fn rows(&self) -> Vec<(&'static str, Option<f64>)> {
        let n = |v: usize| Some(v as f64);
        vec![
            ("runs", n(self.runs)),
            ("failed_runs", n(self.failed_runs)),
            ("screened_instances", self.screened_instances.map(|v| v as f64)),
            ("sdr_runs", n(self.sdr_runs)),
            ("rank1_pct", self.rank1_pct),
            ("no_feasible_after_randomization_pct", self.no_feasible_after_randomization_pct),
            ("feasible_after_randomization_pct", self.feasible_after_randomization_pct),
            ("sdr_avg_loss_db", self.sdr_avg_loss_db),
            ("sdr_loss_runs", n(self.sdr_loss_runs)),
            ("fpp_runs", n(self.fpp_runs)),
            ("fpp_feasible_pct", self.fpp_feasible_pct),
            ("fpp_avg_iters_feasibility", self.fpp_avg_iters_feasibility),
            ("fpp_avg_iters_convergence", self.fpp_avg_iters_convergence),
            ("fpp_capped_runs", n(self.fpp_capped_runs)),
            ("fpp_avg_loss_db", self.fpp_avg_loss_db),
            ("fpp_loss_runs", n(self.fpp_loss_runs)),
            ("fpp_kkt_pass_runs", n(self.fpp_kkt_pass_runs)),
            ("fpp_feasibility_lost_runs", n(self.fpp_feasibility_lost_runs)),
            ("fpp_max_increase", self.fpp_max_increase),
            ("min_loss_db", self.min_loss_db),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub generator: String,
    pub scenario: Scenario,
    pub base_seed: u64,
    pub lambda: f64,
    pub max_iter: usize,
    pub draws: usize,
    pub starts: usize,
    pub aggregates: Aggregates,
    pub records: Vec<RunRecord>,
}

impl BenchReport {
    fn new(cfg: &BenchConfig, records: Vec<RunRecord>, screened: Option<usize>) -> Self {
        let mut aggregates = Aggregates::from_records(&records);
        aggregates.screened_instances = screened;
        Self {
            generator: cfg.generator.to_string(),
            scenario: cfg.scenario,
            base_seed: cfg.base_seed,
            lambda: cfg.fpp.lambda,
            max_iter: cfg.fpp.max_iter,
            draws: cfg.draws,
            starts: cfg.starts,
            aggregates,
            records,
        }
    }

    fn check_failures(self) -> Result<Self> {
        let failed = self.aggregates.failed_runs;
        let total = self.records.len();
        if failed as f64 > MAX_FAILURE_RATE * total as f64 {
            return Err(Error::TooManyFailures { failed, total });
        }
        Ok(self)
    }

    pub fn failures(&self) -> impl Iterator<Item = &RunRecord> {
        self.records.iter().filter(|r| r.failed())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One row per aggregate: `generator,scenario,metric,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("generator,scenario,metric,value\n");
        for (metric, value) in self.aggregates.rows() {
            let value = value.map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!("\"{}\",{},{metric},{value}\n", self.generator, self.scenario));
        }
        out
    }

    /// One JSON object per run.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r)?);
            out.push('\n');
        }
        Ok(out)
    }

    /// Writes `<stem>.json`, `<stem>.csv` and `<stem>.jsonl` into `dir`.
    pub fn write_files(&self, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let outputs = [
            (dir.join(format!("{stem}.json")), self.to_json()? + "\n"),
            (dir.join(format!("{stem}.csv")), self.to_csv()),
            (dir.join(format!("{stem}.jsonl")), self.to_jsonl()?),
        ];
        for (path, text) in &outputs {
            fs::write(path, text)?;
        }
        Ok(outputs.into_iter().map(|(p, _)| p).collect())
    }
}

fn run_one(cfg: &BenchConfig, run: usize) -> RunRecord {
    let seed = cfg.base_seed.wrapping_add(run as u64);
    let mut rec = RunRecord::new(run, seed);
    if let Err(e) = run_one_inner(cfg, seed, &mut rec) {
        rec.error = Some(e.to_string());
    }
    rec
}

fn run_one_inner(cfg: &BenchConfig, seed: u64, rec: &mut RunRecord) -> Result<()> {
    let inst = cfg.generator.generate(seed)?;
    if cfg.scenario.runs_sdr() {
        let sdr = solve_sdr(&inst, cfg.draws, seed, &cfg.fpp.barrier)?;
        rec.record_sdr(&sdr);
        if !matches!(sdr.status, SdpStatus::Optimal | SdpStatus::Infeasible) {
            return Err(Error::Numerical(format!("relaxation ended with status {:?}", sdr.status)));
        }
    }
    if cfg.scenario.runs_fpp() {
        let starts = run_starts(inst.dim(), seed, cfg.starts);
        let result = multi_start(&inst, &starts, &cfg.fpp)?;
        rec.record_fpp(&result);
    }
    Ok(())
}

/// Runs the configured pipelines on `cfg.runs` generated instances.
pub fn run_bench(cfg: &BenchConfig) -> Result<BenchReport> {
    cfg.validate()?;
    if cfg.scenario == Scenario::Multicast {
        return run_multicast_study(cfg);
    }
    let records = cfg.in_pool(|| (0..cfg.runs).into_par_iter().map(|i| run_one(cfg, i)).collect())?;
    BenchReport::new(cfg, records, None).check_failures()
}

/// Outcome of the relaxation screen for one multicast candidate.
enum Screened {
    Feasible(Box<(QcqpInstance, SdrResult)>),
    Rejected,
    Failed(String),
}

fn screen(cfg: &BenchConfig, seed: u64) -> Screened {
    let attempt = || -> Result<Option<(QcqpInstance, SdrResult)>> {
        let inst = cfg.generator.generate(seed)?;
        let sdr = sdr_lower_bound(&inst, &cfg.fpp.barrier)?;
        match sdr.status {
            SdpStatus::Optimal => Ok(Some((inst, sdr))),
            SdpStatus::Infeasible => Ok(None),
            other => Err(Error::Numerical(format!("relaxation ended with status {other:?}"))),
        }
    };
    match attempt() {
        Ok(Some(pair)) => Screened::Feasible(Box::new(pair)),
        Ok(None) => Screened::Rejected,
        Err(e) => Screened::Failed(e.to_string()),
    }
}

fn multicast_run(cfg: &BenchConfig, run: usize, seed: u64, inst: &QcqpInstance, mut sdr: SdrResult) -> RunRecord {
    let mut rec = RunRecord::new(run, seed);
    let outcome = (|| -> Result<()> {
        if !sdr.is_feasible() {
            let rnd = randomize_and_scale(inst, &sdr.x, cfg.draws, seed)?;
            sdr.randomizations_tried = rnd.tried;
            if let Some(p) = &rnd.feasible {
                sdr.best_point = Some(p.x.clone());
                sdr.best_objective = Some(p.objective);
            }
            sdr.best_effort = rnd.best_effort;
        }
        rec.record_sdr(&sdr);
        let z0 = match (&sdr.best_point, &sdr.best_effort) {
            (Some(x), _) => x.clone(),
            (None, Some(p)) => p.x.clone(),
            (None, None) => random_start(inst.dim(), seed),
        };
        let result = run_fpp_sca(inst, &z0, &cfg.fpp)?;
        rec.record_fpp(&result);
        Ok(())
    })();
    if let Err(e) = outcome {
        rec.error = Some(e.to_string());
    }
    rec
}

/// Collects `cfg.runs` instances whose relaxation is feasible (screening
/// seeds `base_seed, base_seed + 1, ...` in order), then runs the relaxation
/// with randomization and the pursuit started at the best-effort
/// randomization point.
pub fn run_multicast_study(cfg: &BenchConfig) -> Result<BenchReport> {
    cfg.validate()?;
    if cfg.scenario != Scenario::Multicast {
        return Err(Error::InvalidParameter("not a multicast configuration".into()));
    }
    let limit = cfg.runs * MULTICAST_SCREEN_FACTOR;
    let (records, screened) = cfg.in_pool(|| {
        let mut accepted: Vec<(u64, QcqpInstance, SdrResult)> = Vec::new();
        let mut failed: Vec<RunRecord> = Vec::new();
        let mut next = 0usize;
        while accepted.len() < cfg.runs && next < limit {
            let batch: Vec<usize> = (next..(next + cfg.runs).min(limit)).collect();
            next += batch.len();
            let results: Vec<(usize, Screened)> = batch
                .into_par_iter()
                .map(|i| (i, screen(cfg, cfg.base_seed.wrapping_add(i as u64))))
                .collect();
            for (i, s) in results {
                if accepted.len() == cfg.runs {
                    break;
                }
                let seed = cfg.base_seed.wrapping_add(i as u64);
                match s {
                    Screened::Feasible(pair) => {
                        let (inst, sdr) = *pair;
                        accepted.push((seed, inst, sdr));
                    }
                    Screened::Rejected => {}
                    Screened::Failed(msg) => failed.push(RunRecord {
                        error: Some(msg),
                        ..RunRecord::new(i, seed)
                    }),
                }
            }
        }
        let screened = accepted
            .last()
            .map(|(seed, _, _)| seed.wrapping_sub(cfg.base_seed) as usize + 1)
            .unwrap_or(next);
        failed.retain(|r| r.run < screened);
        let mut records: Vec<RunRecord> = accepted
            .into_par_iter()
            .enumerate()
            .map(|(run, (seed, inst, sdr))| multicast_run(cfg, run, seed, &inst, sdr))
            .collect();
        let offset = records.len();
        records.extend(failed.into_iter().enumerate().map(|(k, mut r)| {
            r.run = offset + k;
            r
        }));
        (records, screened)
    })?;
    if records.iter().all(|r| r.failed()) {
        return Err(Error::TooManyFailures {
            failed: records.len(),
            total: records.len(),
        });
    }
    BenchReport::new(cfg, records, Some(screened)).check_failures()
}

/// One surrogate constraint of a convex restriction, in lifted real
/// coordinates `(Re x, Im x)`: `y' Q y + b' y <= rhs + slack`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurrogateJson {
    pub constraint: usize,
    pub convex: bool,
    pub quad: Vec<Vec<f64>>,
    pub linear: Vec<f64>,
    pub rhs: f64,
    pub slack: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceFrame {
    #[serde(flatten)]
    pub iterate: IterateJson,
    pub surrogates: Vec<SurrogateJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceCase {
    pub label: String,
    pub z0: VectorJson,
    pub status: FppStatus,
    pub iterations_to_feasibility: Option<usize>,
    pub monotone: bool,
    pub frames: Vec<TraceFrame>,
}

/// Per-iteration restriction data for the two-dimensional example, from the
/// two given starts.
pub fn fig1_traces(z0_a: &ComplexVector, z0_b: &ComplexVector, params: &FppParams) -> Result<Vec<TraceCase>> {
    let inst = crate::fixtures::fig1_instance();
    let splits = inst.split_constraints()?;
    [("a", z0_a), ("b", z0_b)]
        .into_iter()
        .map(|(label, z0)| {
            let result = run_fpp_sca(&inst, z0, params)?;
            let frames = result
                .trace
                .records
                .iter()
                .enumerate()
                .map(|(k, rec)| {
                    let sub = crate::fpp::build_subproblem(&inst, &splits, &rec.z, params.lambda)?;
                    let surrogates = sub
                        .constraints()
                        .iter()
                        .enumerate()
                        .map(|(m, c)| SurrogateJson {
                            constraint: m + 1,
                            convex: splits[m].minus.is_zero(),
                            quad: c.quad.row_iter().map(|r| r.iter().copied().collect()).collect(),
                            linear: c.linear.iter().copied().collect(),
                            rhs: c.rhs,
                            slack: rec.s[m],
                        })
                        .collect();
                    Ok(TraceFrame {
                        iterate: IterateJson::new(k + 1, rec),
                        surrogates,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(TraceCase {
                label: label.to_string(),
                z0: z0.into(),
                status: result.status,
                iterations_to_feasibility: result.iterations_to_feasibility,
                monotone: result.trace.is_monotone(MONOTONE_SLACK),
                frames,
            })
        })
        .collect()
}

/// Writes `case_<label>/iter_<k>.json` per iteration plus
/// `case_<label>/summary.json`.
pub fn export_fig1_traces(dir: &Path, cases: &[TraceCase]) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for case in cases {
        let case_dir = dir.join(format!("case_{}", case.label));
        fs::create_dir_all(&case_dir)?;
        for frame in &case.frames {
            let path = case_dir.join(format!("iter_{:02}.json", frame.iterate.iteration));
            let mut f = fs::File::create(&path)?;
            writeln!(f, "{}", serde_json::to_string_pretty(frame)?)?;
            written.push(path);
        }
        let summary = serde_json::json!({
            "label": case.label,
            "z0": case.z0,
            "status": case.status,
            "iterations_to_feasibility": case.iterations_to_feasibility,
            "iterations": case.frames.len(),
            "monotone": case.monotone,
        });
        let path = case_dir.join("summary.json");
        fs::write(&path, serde_json::to_string_pretty(&summary)? + "\n")?;
        written.push(path);
    }
    Ok(written)
}
