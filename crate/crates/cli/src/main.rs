use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aa_core::allocation::super_optimal;
use aa_core::baselines::{
    exact_solve, heuristic_rr, heuristic_ru, heuristic_ur, heuristic_uu, OracleLimits,
};
use aa_core::bench::{run_sweep, Algorithm, BenchConfig, InstanceSource};
use aa_core::generators::{from_partition, gen_instance, DistSpec};
use aa_core::io::{read_instance, write_assignment, write_instance};
use aa_core::rng::{stream, streams};
use aa_core::solvers::{algorithm1, algorithm2, solve_report_diagnostics};
use aa_core::{Error, Instance};
use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

const USAGE: u8 = 1;
const VALIDATION: u8 = 2;
const SIZE_LIMIT: u8 = 3;
const INVARIANT: u8 = 4;

/// Exact oracle bounds for `reduce`: two servers, so only the thread count matters.
const REDUCE_LIMITS: OracleLimits = OracleLimits {
    n_max: 20,
    m_max: 2,
    c_max: u64::MAX,
};

#[derive(Parser)]
#[command(
    name = "aa",
    version,
    about = "Assign threads to servers and allocate their resources"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance file.
    Gen(GenArgs),
    /// Solve an instance and write the assignment CSV.
    Solve(SolveArgs),
    /// Run a seeded experiment sweep.
    Bench(BenchArgs),
    /// Build the two-server instance for a number-partition question.
    Reduce(ReduceArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum DistKind {
    Uniform,
    Normal,
    Powerlaw,
    Discrete,
    Power,
}

#[derive(Args)]
struct DistArgs {
    #[arg(long, value_enum)]
    dist: DistKind,
    /// Uniform lower bound.
    #[arg(long, default_value_t = 0.0)]
    lo: f64,
    /// Uniform upper bound.
    #[arg(long, default_value_t = 1.0)]
    hi: f64,
    #[arg(long, default_value_t = 1.0)]
    mean: f64,
    #[arg(long, default_value_t = 1.0)]
    sd: f64,
    /// Power-law exponent.
    #[arg(long, default_value_t = 2.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    xmin: f64,
    #[arg(long, default_value_t = 1000.0)]
    xmax: f64,
    /// Low value of the discrete distribution.
    #[arg(long, default_value_t = 1.0)]
    ell: f64,
    /// Ratio of the high to the low discrete value.
    #[arg(long, default_value_t = 5.0)]
    theta: f64,
    /// Probability of the low discrete value.
    #[arg(long, default_value_t = 0.85)]
    gamma: f64,
    /// Exponent of the power curves `u^beta`.
    #[arg(long, default_value_t = 0.5)]
    beta_exp: f64,
}

impl DistArgs {
    fn spec(&self) -> DistSpec {
        match self.dist {
            DistKind::Uniform => DistSpec::Uniform {
                lo: self.lo,
                hi: self.hi,
            },
            DistKind::Normal => DistSpec::Normal {
                mean: self.mean,
                sd: self.sd,
            },
            DistKind::Powerlaw => DistSpec::Powerlaw {
                alpha_exp: self.alpha,
                x_min: self.xmin,
                x_max: self.xmax,
            },
            DistKind::Discrete => DistSpec::Discrete {
                ell: self.ell,
                theta: self.theta,
                gamma_prob: self.gamma,
            },
            DistKind::Power => DistSpec::PowerBeta {
                beta_exp: self.beta_exp,
            },
        }
    }
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    dist: DistArgs,
    /// Number of servers.
    #[arg(long)]
    m: usize,
    /// Threads per server.
    #[arg(long)]
    beta: usize,
    /// Units per server; must be even.
    #[arg(long)]
    capacity: u64,
    #[arg(long, env = "AA_SEED", default_value_t = 0)]
    seed: u64,
    /// Instance file to write (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    alg: Algorithm,
    /// Required by ur, ru and rr.
    #[arg(long, env = "AA_SEED")]
    seed: Option<u64>,
    /// Instance file.
    instance: PathBuf,
    /// Assignment CSV to write (stdout when omitted, with the report on stderr).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Generate a fresh instance per trial from this distribution.
    #[command(flatten)]
    dist: Option<DistArgs>,
    /// Run every trial on this instance file instead.
    #[arg(long, conflicts_with = "dist")]
    instance: Option<PathBuf>,
    #[arg(long, default_value_t = 8)]
    m: usize,
    #[arg(long, default_value_t = 1000)]
    capacity: u64,
    /// Loads as a range `1:15` or a list `1,5,10`.
    #[arg(long, default_value = "1:15")]
    beta: String,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, env = "AA_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "alg2,uu,ur,ru,rr")]
    algs: Vec<Algorithm>,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Per-trial results CSV.
    #[arg(long)]
    out: PathBuf,
    /// Per-cell aggregate CSV.
    #[arg(long)]
    aggregate: PathBuf,
}

#[derive(Args)]
struct ReduceArgs {
    /// Comma-separated positive integers.
    #[arg(long, value_delimiter = ',', required = true)]
    partition: Vec<u64>,
    /// Run the exact oracle and report whether a partition exists.
    #[arg(long)]
    solve: bool,
    /// Instance file to write (stdout when omitted and not solving).
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Error tagged with the process exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        let error = e.into();
        let code = match error.downcast_ref::<Error>() {
            Some(Error::SizeLimitExceeded(_)) => SIZE_LIMIT,
            Some(Error::Parameter(_)) | Some(Error::Io(_)) => USAGE,
            Some(_) => VALIDATION,
            None => USAGE,
        };
        Failure { code, error }
    }
}

fn fail(code: u8, error: anyhow::Error) -> Failure {
    Failure { code, error }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Reduce(args) => cmd_reduce(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { code, error }) => {
            eprintln!("error: {error:#}");
            ExitCode::from(code)
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .with_context(|| format!("cannot create {}", path.display()))
        .map_err(|e| fail(USAGE, e))
}

fn load_instance(path: &Path) -> Result<Instance, Failure> {
    let file = File::open(path)
        .with_context(|| format!("cannot open {}", path.display()))
        .map_err(|e| fail(USAGE, e))?;
    Ok(read_instance(BufReader::new(file))?)
}

fn emit_instance(inst: &Instance, out: Option<&Path>) -> CmdResult {
    match out {
        Some(path) => {
            let mut w = create(path)?;
            write_instance(inst, &mut w)?;
            w.flush()?;
        }
        None => {
            write_instance(inst, io::stdout().lock())?;
            println!();
        }
    }
    Ok(())
}

fn cmd_gen(args: GenArgs) -> CmdResult {
    if args.capacity == 0 || !args.capacity.is_multiple_of(2) {
        return Err(fail(
            USAGE,
            anyhow!(
                "--capacity must be a positive even number, got {}",
                args.capacity
            ),
        ));
    }
    let spec = args.dist.spec();
    let inst = gen_instance(args.m, args.beta, args.capacity, &spec, args.seed)?;
    emit_instance(&inst, args.out.as_deref())?;
    let summary = format!(
        "n={} C={} m={}",
        inst.len(),
        inst.capacity(),
        inst.servers()
    );
    if args.out.is_some() {
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }
    Ok(())
}

fn cmd_solve(args: SolveArgs) -> CmdResult {
    let seed = match (args.alg.is_randomized(), args.seed) {
        (true, None) => {
            return Err(fail(USAGE, anyhow!("--alg {} requires --seed", args.alg)));
        }
        (_, seed) => seed.unwrap_or(0),
    };
    let inst = load_instance(&args.instance)?;
    let so = super_optimal(&inst);

    let mut report = Vec::new();
    let assignment = match args.alg {
        Algorithm::Oracle => {
            let result = exact_solve(&inst, OracleLimits::default())?;
            report.push(format!("F*={}", result.value));
            report.push(format!("explored={}", result.explored));
            result.assignment
        }
        alg => {
            let solved = match alg {
                Algorithm::Alg1 => algorithm1(&inst, &so),
                Algorithm::Alg2 => algorithm2(&inst, &so),
                Algorithm::Uu => heuristic_uu(&inst),
                Algorithm::Ur => heuristic_ur(&inst, &mut stream(seed, streams::UR)),
                Algorithm::Ru => heuristic_ru(&inst, &mut stream(seed, streams::RU)),
                Algorithm::Rr => heuristic_rr(&inst, &mut stream(seed, streams::RR)),
                Algorithm::Oracle => unreachable!(),
            };
            if matches!(alg, Algorithm::Alg1 | Algorithm::Alg2) {
                let diagnostics = solve_report_diagnostics(&inst, &solved, &so);
                let passed = diagnostics.checks.iter().filter(|c| c.passed).count();
                report.push(format!("G={}", solved.linearized_utility));
                report.push(format!("lemmas={passed}/{}", diagnostics.checks.len()));
                for c in diagnostics.violations() {
                    report.push(format!("violation {}: {}", c.name, c.detail));
                }
            }
            solved.assignment
        }
    };
    let verdict = aa_core::verify_assignment(&inst, &assignment)?;
    let ratio = if so.value == 0.0 {
        1.0
    } else {
        verdict.total_utility / so.value
    };
    report.splice(
        0..0,
        [
            format!("algorithm={}", args.alg),
            format!("F={}", verdict.total_utility),
            format!("F_hat={}", so.value),
            format!("ratio_to_so={ratio}"),
        ],
    );

    match &args.out {
        Some(path) => {
            let mut w = create(path)?;
            write_assignment(&inst, &assignment, &mut w)?;
            w.flush()?;
            for line in &report {
                println!("{line}");
            }
        }
        None => {
            write_assignment(&inst, &assignment, io::stdout().lock())?;
            for line in &report {
                eprintln!("{line}");
            }
        }
    }
    Ok(())
}

fn parse_loads(text: &str) -> anyhow::Result<Vec<usize>> {
    let parse = |s: &str| -> anyhow::Result<usize> {
        s.trim()
            .parse()
            .with_context(|| format!("bad load {s:?} in --beta"))
    };
    let loads = match text.split_once(':') {
        Some((a, b)) => {
            let (a, b) = (parse(a)?, parse(b)?);
            if a > b {
                bail!("empty --beta range {text}");
            }
            (a..=b).collect()
        }
        None => text.split(',').map(parse).collect::<anyhow::Result<_>>()?,
    };
    Ok(loads)
}

fn cmd_bench(args: BenchArgs) -> CmdResult {
    let betas = parse_loads(&args.beta).map_err(|e| fail(USAGE, e))?;
    let source = match (&args.dist, &args.instance) {
        (Some(d), _) => InstanceSource::Generated(d.spec()),
        (None, Some(path)) => InstanceSource::Fixed(load_instance(path)?),
        (None, None) => {
            return Err(fail(
                USAGE,
                anyhow!("either --dist or --instance is required"),
            ));
        }
    };
    let mut cfg = BenchConfig::new(args.m, args.capacity, betas, source);
    cfg.trials = args.trials;
    cfg.master_seed = args.seed;
    cfg.algorithms = args.algs;
    cfg.jobs = args.jobs;

    let result = run_sweep(&cfg)?;
    let mut w = create(&args.out)?;
    result.write_results_csv(&mut w)?;
    w.flush()?;
    let mut w = create(&args.aggregate)?;
    result.write_summary_csv(&mut w)?;
    w.flush()?;

    let mut violations = 0usize;
    for (record, v) in result.violations() {
        eprintln!("beta={} trial={}: {v}", record.beta, record.trial);
        violations += 1;
    }
    println!(
        "cells={} trials={} violations={violations}",
        result.records.len() / cfg.trials,
        cfg.trials
    );
    if violations > 0 {
        return Err(fail(
            INVARIANT,
            anyhow!("{violations} per-trial invariant violations"),
        ));
    }
    Ok(())
}

fn cmd_reduce(args: ReduceArgs) -> CmdResult {
    let (inst, target) = from_partition(&args.partition)?;
    if args.out.is_some() || !args.solve {
        emit_instance(&inst, args.out.as_deref())?;
    }
    if args.solve {
        let result = exact_solve(&inst, REDUCE_LIMITS)?;
        println!("F*={} target={target}", result.value);
        if result.value == target as f64 {
            println!("PARTITION-EXISTS");
        } else {
            println!("NO-PARTITION");
        }
    }
    Ok(())
}
