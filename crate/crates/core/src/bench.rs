//! Seeded experiment sweeps comparing the approximation algorithms with the
//! baseline heuristics and the super-optimal bound.
//!
//! Every trial gets its own seed derived from the master seed, the cell's
//! load and the trial index, so results do not depend on how many worker
//! threads run the sweep. Records are always emitted in `(cell, trial)`
//! order.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;

use crate::allocation::super_optimal;
use crate::baselines::{
    exact_solve, rr_assignment, ru_assignment, ur_assignment, uu_assignment, OracleLimits,
};
use crate::error::{Error, Result};
use crate::generators::{gen_instance, DistSpec};
use crate::model::{verify_assignment, Assignment, Instance, Thread, UtilityFunction};
use crate::rng::{derive_seed, stream, streams};
use crate::solvers::{algorithm1, algorithm2, solve_report_diagnostics, ALPHA, REL_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Alg1,
    Alg2,
    Uu,
    Ur,
    Ru,
    Rr,
    Oracle,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::Alg1,
        Algorithm::Alg2,
        Algorithm::Uu,
        Algorithm::Ur,
        Algorithm::Ru,
        Algorithm::Rr,
        Algorithm::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Alg1 => "alg1",
            Algorithm::Alg2 => "alg2",
            Algorithm::Uu => "uu",
            Algorithm::Ur => "ur",
            Algorithm::Ru => "ru",
            Algorithm::Rr => "rr",
            Algorithm::Oracle => "oracle",
        }
    }

    pub fn is_randomized(self) -> bool {
        matches!(self, Algorithm::Ur | Algorithm::Ru | Algorithm::Rr)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown algorithm {s:?}")))
    }
}

#[derive(Debug, Clone)]
pub enum InstanceSource {
    Generated(DistSpec),
    /// The same instance in every trial; only randomized heuristics vary.
    Fixed(Instance),
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub servers: usize,
    pub capacity: u64,
    pub betas: Vec<usize>,
    pub source: InstanceSource,
    pub trials: usize,
    pub master_seed: u64,
    pub algorithms: Vec<Algorithm>,
    pub oracle_limits: OracleLimits,
    /// Worker threads; 1 runs in the calling thread.
    pub jobs: usize,
}

impl BenchConfig {
    pub fn new(servers: usize, capacity: u64, betas: Vec<usize>, source: InstanceSource) -> Self {
        BenchConfig {
            servers,
            capacity,
            betas,
            source,
            trials: 1,
            master_seed: 0,
            algorithms: vec![
                Algorithm::Alg2,
                Algorithm::Uu,
                Algorithm::Ur,
                Algorithm::Ru,
                Algorithm::Rr,
            ],
            oracle_limits: OracleLimits::default(),
            jobs: 1,
        }
    }

    fn dist_name(&self) -> &'static str {
        match &self.source {
            InstanceSource::Generated(spec) => spec.name(),
            InstanceSource::Fixed(_) => "fixed",
        }
    }

    /// `(load label, threads)` per cell.
    fn cells(&self) -> Vec<(f64, usize)> {
        match &self.source {
            InstanceSource::Generated(_) => self
                .betas
                .iter()
                .map(|&b| (b as f64, b * self.servers))
                .collect(),
            InstanceSource::Fixed(inst) => {
                vec![(inst.len() as f64 / inst.servers() as f64, inst.len())]
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Parameter("trials must be at least 1".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::Parameter("no algorithms requested".into()));
        }
        if let InstanceSource::Generated(spec) = &self.source {
            spec.validate()?;
            if self.betas.is_empty() || self.betas.contains(&0) {
                return Err(Error::Parameter("loads must be positive".into()));
            }
            if self.servers == 0 || self.capacity < 2 || !self.capacity.is_multiple_of(2) {
                return Err(Error::Parameter(
                    "servers must be positive and capacity a positive even number".into(),
                ));
            }
        }
        if self.algorithms.contains(&Algorithm::Oracle) {
            let (m, c) = match &self.source {
                InstanceSource::Fixed(inst) => (inst.servers(), inst.capacity()),
                InstanceSource::Generated(_) => (self.servers, self.capacity),
            };
            for (_, n) in self.cells() {
                self.oracle_limits.admits(n, m, c)?;
            }
        }
        Ok(())
    }
}

/// Utilities of every requested algorithm on one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub dist: &'static str,
    pub beta: f64,
    pub trial: usize,
    pub seed: u64,
    pub so_value: f64,
    pub utilities: Vec<(Algorithm, f64)>,
    /// Broken per-trial invariants, empty on a healthy run.
    pub violations: Vec<String>,
}

impl TrialRecord {
    pub fn utility(&self, alg: Algorithm) -> Option<f64> {
        self.utilities
            .iter()
            .find(|(a, _)| *a == alg)
            .map(|&(_, u)| u)
    }

    pub fn ratio_to_so(&self, alg: Algorithm) -> Option<f64> {
        self.utility(alg).map(|u| ratio(u, self.so_value))
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        if num == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        num / den
    }
}

/// `(F̂, utility per algorithm, invariant violations)` of one trial.
pub type TrialOutcome = (f64, Vec<(Algorithm, f64)>, Vec<String>);

/// Runs the requested algorithms on one instance and checks the per-trial
/// invariants: feasibility, `F ≤ F̂`, `F ≥ α·F̂` for both approximation
/// algorithms, their structural lemma checks, and `F ≤ F* ≤ F̂` when the
/// oracle runs.
pub fn run_trial(
    inst: &Instance,
    seed: u64,
    algorithms: &[Algorithm],
    limits: OracleLimits,
) -> Result<TrialOutcome> {
    let so = super_optimal(inst);
    let tol = REL_TOLERANCE * so.value.abs().max(f64::MIN_POSITIVE);
    let mut utilities = Vec::with_capacity(algorithms.len());
    let mut violations = Vec::new();

    for &alg in algorithms {
        let assignment: Assignment = match alg {
            Algorithm::Alg1 | Algorithm::Alg2 => {
                let report = if alg == Algorithm::Alg1 {
                    algorithm1(inst, &so)
                } else {
                    algorithm2(inst, &so)
                };
                if inst.len() >= inst.servers() && !report.alpha_bound_ok {
                    violations.push(format!("{alg}: G below alpha times F-hat"));
                }
                for c in solve_report_diagnostics(inst, &report, &so).violations() {
                    violations.push(format!("{alg}: {} ({})", c.name, c.detail));
                }
                report.assignment
            }
            Algorithm::Uu => uu_assignment(inst),
            Algorithm::Ur => ur_assignment(inst, &mut stream(seed, streams::UR)),
            Algorithm::Ru => ru_assignment(inst, &mut stream(seed, streams::RU)),
            Algorithm::Rr => rr_assignment(inst, &mut stream(seed, streams::RR)),
            Algorithm::Oracle => exact_solve(inst, limits)?.assignment,
        };
        let utility = match verify_assignment(inst, &assignment) {
            Ok(v) => v.total_utility,
            Err(e) => {
                violations.push(format!("{alg}: infeasible ({e})"));
                inst.total_utility(assignment.allocations())
            }
        };
        if utility > so.value + tol {
            violations.push(format!("{alg}: utility {utility} above F-hat {}", so.value));
        }
        if matches!(alg, Algorithm::Alg1 | Algorithm::Alg2) && utility < ALPHA * so.value - tol {
            violations.push(format!("{alg}: utility {utility} below alpha times F-hat"));
        }
        utilities.push((alg, utility));
    }

    if let Some(best) = utilities
        .iter()
        .find(|(a, _)| *a == Algorithm::Oracle)
        .map(|&(_, u)| u)
    {
        for &(alg, u) in &utilities {
            if u > best + tol {
                violations.push(format!("{alg}: utility {u} above the optimum {best}"));
            }
            if matches!(alg, Algorithm::Alg1 | Algorithm::Alg2) && u < ALPHA * best - tol {
                violations.push(format!("{alg}: utility {u} below alpha times the optimum"));
            }
        }
    }

    Ok((so.value, utilities, violations))
}

/// Aggregate over the trials of one cell for one algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub dist: &'static str,
    pub beta: f64,
    pub algorithm: Algorithm,
    pub mean_ratio_to_so: f64,
    pub stderr: f64,
    /// Mean per-trial `alg2 / this`; trials where this algorithm scored 0 are skipped.
    pub mean_alg2_over_this: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub records: Vec<TrialRecord>,
    pub summary: Vec<CellSummary>,
}

impl SweepResult {
    pub fn violations(&self) -> impl Iterator<Item = (&TrialRecord, &String)> {
        self.records
            .iter()
            .flat_map(|r| r.violations.iter().map(move |v| (r, v)))
    }

    pub fn cell(&self, beta: f64, alg: Algorithm) -> Option<&CellSummary> {
        self.summary
            .iter()
            .find(|s| s.beta == beta && s.algorithm == alg)
    }

    pub fn write_results_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "dist",
            "beta",
            "trial",
            "seed",
            "algorithm",
            "utility",
            "so_value",
            "ratio_to_so",
        ])?;
        for r in &self.records {
            for &(alg, u) in &r.utilities {
                w.write_record([
                    r.dist.to_string(),
                    r.beta.to_string(),
                    r.trial.to_string(),
                    r.seed.to_string(),
                    alg.to_string(),
                    u.to_string(),
                    r.so_value.to_string(),
                    ratio(u, r.so_value).to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_summary_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "dist",
            "beta",
            "algorithm",
            "mean_ratio_to_so",
            "stderr",
            "mean_alg2_over_this",
        ])?;
        for s in &self.summary {
            w.write_record([
                s.dist.to_string(),
                s.beta.to_string(),
                s.algorithm.to_string(),
                s.mean_ratio_to_so.to_string(),
                s.stderr.to_string(),
                s.mean_alg2_over_this
                    .map(|x| x.to_string())
                    .unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn summarize(cfg: &BenchConfig, records: &[TrialRecord]) -> Vec<CellSummary> {
    let mut summary = Vec::new();
    for chunk in records.chunks(cfg.trials) {
        let (dist, beta) = (chunk[0].dist, chunk[0].beta);
        for &alg in &cfg.algorithms {
            let ratios: Vec<f64> = chunk.iter().filter_map(|r| r.ratio_to_so(alg)).collect();
            let (mean_ratio_to_so, stderr) = mean_and_stderr(&ratios);
            let mean_alg2_over_this = cfg.algorithms.contains(&Algorithm::Alg2).then(|| {
                let xs: Vec<f64> = chunk
                    .iter()
                    .filter_map(|r| {
                        let this = r.utility(alg)?;
                        (this > 0.0).then(|| r.utility(Algorithm::Alg2).unwrap() / this)
                    })
                    .collect();
                if xs.is_empty() {
                    f64::NAN
                } else {
                    mean_and_stderr(&xs).0
                }
            });
            summary.push(CellSummary {
                dist,
                beta,
                algorithm: alg,
                mean_ratio_to_so,
                stderr,
                mean_alg2_over_this,
            });
        }
    }
    summary
}

/// Runs every `(cell, trial)` of the sweep.
pub fn run_sweep(cfg: &BenchConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let dist = cfg.dist_name();
    let jobs: Vec<(usize, f64, usize)> = cfg
        .cells()
        .into_iter()
        .enumerate()
        .flat_map(|(cell, (beta, _))| (0..cfg.trials).map(move |t| (cell, beta, t)))
        .collect();

    let run = |&(cell, beta, trial): &(usize, f64, usize)| -> Result<TrialRecord> {
        let (seed, generated);
        let inst = match &cfg.source {
            InstanceSource::Generated(spec) => {
                let load = cfg.betas[cell];
                seed = derive_seed(cfg.master_seed, &[load as u64, trial as u64]);
                generated = gen_instance(cfg.servers, load, cfg.capacity, spec, seed)?;
                &generated
            }
            InstanceSource::Fixed(inst) => {
                seed = derive_seed(cfg.master_seed, &[0, trial as u64]);
                inst
            }
        };
        let (so_value, utilities, violations) =
            run_trial(inst, seed, &cfg.algorithms, cfg.oracle_limits)?;
        Ok(TrialRecord {
            dist,
            beta,
            trial,
            seed,
            so_value,
            utilities,
            violations,
        })
    };

    let records: Vec<TrialRecord> = if cfg.jobs <= 1 {
        jobs.iter().map(run).collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
            .map_err(|e| Error::Parameter(e.to_string()))?;
        pool.install(|| jobs.par_iter().map(run).collect::<Result<_>>())?
    };

    let summary = summarize(cfg, &records);
    Ok(SweepResult { records, summary })
}

/// Random concave curve with `k` breakpoints on `[0, C]`.
pub fn random_piecewise<R: Rng + ?Sized>(capacity: u64, k: usize, rng: &mut R) -> UtilityFunction {
    let interior = (k.max(2) - 2).min(capacity.saturating_sub(1) as usize);
    let mut xs: Vec<u64> = sample(rng, capacity as usize - 1, interior)
        .into_iter()
        .map(|x| x as u64 + 1)
        .collect();
    xs.sort_unstable();
    xs.insert(0, 0);
    xs.push(capacity);
    let mut slopes: Vec<f64> = (1..xs.len()).map(|_| rng.random::<f64>()).collect();
    slopes.sort_by(|a, b| b.total_cmp(a));
    let mut y = 0.0;
    let mut points = vec![(0, 0.0)];
    for (w, s) in xs.windows(2).zip(slopes) {
        y += s * (w[1] - w[0]) as f64;
        points.push((w[1], y));
    }
    UtilityFunction::new(points, capacity).expect("sorted slopes give a concave curve")
}

/// Instance of `n` random `k`-breakpoint curves.
pub fn synthetic_instance(
    n: usize,
    servers: usize,
    capacity: u64,
    k: usize,
    seed: u64,
) -> Result<Instance> {
    let threads = (0..n)
        .map(|i| Thread::new(random_piecewise(capacity, k, &mut stream(seed, i as u64))))
        .collect();
    Instance::new(servers, capacity, threads)
}

/// Wall time of super-optimal allocation followed by `alg` (alg1 or alg2).
pub fn time_solve(inst: &Instance, alg: Algorithm) -> Duration {
    let start = Instant::now();
    let so = super_optimal(inst);
    let report = match alg {
        Algorithm::Alg1 => algorithm1(inst, &so),
        _ => algorithm2(inst, &so),
    };
    let elapsed = start.elapsed();
    std::hint::black_box(report);
    elapsed
}

/// End-to-end time of the faster algorithm on a synthetic instance.
pub fn timing_probe(n: usize, servers: usize, capacity: u64, k: usize) -> Result<Duration> {
    let inst = synthetic_instance(n, servers, capacity, k, 0x5eed)?;
    Ok(time_solve(&inst, Algorithm::Alg2))
}
