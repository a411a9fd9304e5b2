//! `fppsca` command-line tool.
//!
//! Exit codes: 0 feasible (or a completed study), 2 usage or input error,
//! 3 converged without a feasible point, 4 iteration cap reached.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use fppsca::bench::{export_fig1_traces, fig1_traces, run_bench, run_multicast_study, run_starts, BenchReport, Scenario};
use fppsca::fixtures::{fig1_instance, fig1_start_stuck, fig1_start_success};
use fppsca::fpp::multi_start;
use fppsca::gen::SeededSpec;
use fppsca::schema::{read_instance, write_instance, FppResultJson, SdrResultJson};
use fppsca::sdr::{solve_sdr, DEFAULT_DRAWS};
use fppsca::{ComplexVector, FppParams, FppResult, FppStatus, QcqpInstance};
use num_complex::Complex64;
use serde::Serialize;

use config::BenchFile;

const EXIT_ERROR: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_MAX_ITER: u8 = 4;

#[derive(Parser)]
#[command(name = "fppsca", version, about = "Feasible point pursuit for non-convex complex QCQPs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance from a spec such as `random:n=8,M=16,seed=1`.
    Gen {
        spec: String,
        /// Output problem file.
        #[arg(short, long)]
        out: PathBuf,
        /// Seed used when the spec has none.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the pursuit on a problem file or a generated instance.
    Solve {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        fpp: FppFlags,
        /// Starting point as comma-separated complex entries, e.g. `0,3` or `1+2i,-0.5i`.
        #[arg(long, conflicts_with = "starts")]
        z0: Option<String>,
        /// Number of random starts; the best result is kept.
        #[arg(long, default_value_t = 1)]
        starts: usize,
        /// Include the per-iteration trace in the result file.
        #[arg(long)]
        trace: bool,
        /// Result file.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Solve the semidefinite relaxation and run Gaussian randomization.
    Sdr {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = DEFAULT_DRAWS)]
        draws: usize,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Monte-Carlo study driven by a TOML config.
    Bench(StudyArgs),
    /// Multicast beamforming study driven by a TOML config.
    Multicast(StudyArgs),
    /// Export the two-dimensional example and its per-iteration traces.
    Fig1 {
        #[arg(long, default_value = "fig1")]
        out_dir: PathBuf,
        #[command(flatten)]
        fpp: FppFlags,
        /// Start of the case that reaches feasibility.
        #[arg(long)]
        z0_a: Option<String>,
        /// Start of the case that stalls.
        #[arg(long)]
        z0_b: Option<String>,
    },
}

#[derive(Args)]
struct Input {
    /// Problem file.
    #[arg(short, long)]
    problem: Option<PathBuf>,
    /// Generator spec used instead of a problem file.
    #[arg(long, conflicts_with = "problem")]
    spec: Option<String>,
    /// Seed for generation, random starts and randomization.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct FppFlags {
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    conv_tol: Option<f64>,
}

impl FppFlags {
    fn params(&self) -> Result<FppParams> {
        let mut p = FppParams::default();
        if let Some(v) = self.lambda {
            p.lambda = v;
        }
        if let Some(v) = self.max_iter {
            p.max_iter = v;
        }
        if let Some(v) = self.conv_tol {
            p.conv_tol = v;
        }
        p.validate()?;
        Ok(p)
    }
}

#[derive(Args)]
struct StudyArgs {
    /// Config file.
    config: PathBuf,
    /// Directory for the report files; defaults to the config's `out_dir`.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn run(command: Command) -> Result<u8> {
    match command {
        Command::Gen { spec, out, seed } => {
            let seeded: SeededSpec = spec.parse()?;
            let inst = seeded.spec.generate(seeded.seed.unwrap_or(seed))?;
            write_instance(&out, &inst)?;
            println!(
                "wrote {} (n={}, M={})",
                out.display(),
                inst.dim(),
                inst.num_constraints()
            );
            Ok(0)
        }
        Command::Solve {
            input,
            fpp,
            z0,
            starts,
            trace,
            out,
        } => {
            let params = fpp.params()?;
            let inst = input.load()?;
            let starts = match z0 {
                Some(text) => vec![parse_point(&text, inst.dim())?],
                None if starts == 0 => bail!("--starts must be at least 1"),
                None => run_starts(inst.dim(), input.seed, starts),
            };
            let result = multi_start(&inst, &starts, &params)?;
            print_fpp(&result);
            if let Some(path) = out {
                write_json(&path, &FppResultJson::new(&result, trace))?;
            }
            Ok(exit_code(result.status))
        }
        Command::Sdr { input, draws, out } => {
            let inst = input.load()?;
            let result = solve_sdr(&inst, draws, input.seed, &FppParams::default().barrier)?;
            let json = SdrResultJson::from(&result);
            println!("relaxation: {:?}", result.status);
            println!("lower bound: {}", fmt_opt(json.lower_bound));
            println!("rank one: {} (eigenvalue ratio {:.3e})", result.rank1, result.eigen_ratio);
            println!("randomizations tried: {}", result.randomizations_tried);
            match (json.objective, json.loss_db) {
                (Some(obj), loss) => println!("feasible point: objective {obj:.6}, loss {} dB", fmt_opt(loss)),
                (None, _) => println!("no feasible point found"),
            }
            if let Some(path) = out {
                write_json(&path, &json)?;
            }
            Ok(if result.is_feasible() { 0 } else { EXIT_INFEASIBLE })
        }
        Command::Bench(args) => study(args, false),
        Command::Multicast(args) => study(args, true),
        Command::Fig1 {
            out_dir,
            fpp,
            z0_a,
            z0_b,
        } => {
            let params = fpp.params()?;
            let point = |text: Option<String>, default: ComplexVector| match text {
                Some(t) => parse_point(&t, 2),
                None => Ok(default),
            };
            let a = point(z0_a, fig1_start_success())?;
            let b = point(z0_b, fig1_start_stuck())?;
            let cases = fig1_traces(&a, &b, &params)?;
            let mut written = export_fig1_traces(&out_dir, &cases)?;
            let instance_path = out_dir.join("instance.json");
            write_instance(&instance_path, &fig1_instance())?;
            written.push(instance_path);
            for case in &cases {
                println!(
                    "case ({}): {:?} after {} iterations, first feasible at {}, monotone {}",
                    case.label,
                    case.status,
                    case.frames.len(),
                    case.iterations_to_feasibility
                        .map_or("never".to_string(), |k| k.to_string()),
                    case.monotone
                );
            }
            println!("wrote {} files under {}", written.len(), out_dir.display());
            Ok(0)
        }
    }
}

impl Input {
    fn load(&self) -> Result<QcqpInstance> {
        match (&self.problem, &self.spec) {
            (Some(path), _) => read_instance(path).with_context(|| format!("reading {}", path.display())),
            (None, Some(spec)) => {
                let seeded: SeededSpec = spec.parse()?;
                Ok(seeded.spec.generate(seeded.seed.unwrap_or(self.seed))?)
            }
            (None, None) => bail!("either --problem or --spec is required"),
        }
    }
}

fn study(args: StudyArgs, multicast: bool) -> Result<u8> {
    let file = BenchFile::read(&args.config)?;
    let mut cfg = file.to_config()?;
    if args.jobs.is_some() {
        cfg.jobs = args.jobs;
    }
    if multicast != (cfg.scenario == Scenario::Multicast) {
        bail!(
            "`{}` needs a config with scenario {}",
            if multicast { "multicast" } else { "bench" },
            if multicast { "multicast" } else { "sdr_only, fpp_only or both" }
        );
    }
    cfg.validate()?;
    let report = if multicast {
        run_multicast_study(&cfg)?
    } else {
        run_bench(&cfg)?
    };
    print_report(&report);
    let dir = args.out_dir.unwrap_or_else(|| file.out_dir.clone());
    let stem = args
        .config
        .file_stem()
        .map_or("report".into(), |s| s.to_string_lossy().into_owned());
    for path in report.write_files(&dir, &stem)? {
        println!("wrote {}", path.display());
    }
    Ok(0)
}

fn exit_code(status: FppStatus) -> u8 {
    match status {
        FppStatus::FeasibleKkt | FppStatus::FeasibleConverged => 0,
        FppStatus::InfeasibleConverged => EXIT_INFEASIBLE,
        FppStatus::MaxIter => EXIT_MAX_ITER,
    }
}

/// Parses `a,b,...` where each entry is a complex literal such as `1`, `-2i`
/// or `0.5+1.5i`.
fn parse_point(text: &str, n: usize) -> Result<ComplexVector> {
    let entries = text
        .split(',')
        .map(|e| {
            let e = e.trim();
            e.parse::<Complex64>()
                .map_err(|_| anyhow::anyhow!("`{e}` is not a complex number"))
        })
        .collect::<Result<Vec<_>>>()?;
    if entries.len() != n {
        bail!("starting point has {} entries, the instance needs {n}", entries.len());
    }
    if entries.iter().any(|z| !z.is_finite()) {
        bail!("starting point has non-finite entries");
    }
    Ok(ComplexVector::from_vec(entries))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or("n/a".into(), |v| format!("{v:.6}"))
}

fn print_fpp(r: &FppResult) {
    println!("status: {:?}", r.status);
    println!("objective: {:.6}", r.objective);
    println!("max slack: {:.3e}", r.slack_max());
    println!(
        "iterations: {} (first feasible: {})",
        r.iterations_to_convergence,
        r.iterations_to_feasibility
            .map_or("never".to_string(), |k| k.to_string())
    );
    println!(
        "kkt: stationarity {:.3e}, complementarity {:.3e}, primal violation {:.3e}",
        r.kkt.stationarity_residual, r.kkt.complementarity_residual, r.kkt.primal_violation
    );
}

fn print_report(report: &BenchReport) {
    println!("{} / {}", report.generator, report.scenario);
    for (metric, value) in report.aggregates.rows() {
        println!("  {metric:<40} {}", value.map_or("-".into(), |v| format!("{v:.4}")));
    }
}
