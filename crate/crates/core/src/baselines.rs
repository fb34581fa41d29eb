//! Baseline heuristics and an exhaustive oracle for small instances.
//!
//! The heuristics cross two assignment rules with two allocation rules:
//!
//! | name | assignment                   | allocation on each server     |
//! |------|------------------------------|-------------------------------|
//! | UU   | round robin                  | equal split                   |
//! | UR   | round robin                  | sequential random fractions   |
//! | RU   | uniform random server        | equal split                   |
//! | RR   | uniform random server        | sequential random fractions   |
//!
//! Random draws happen in a fixed order: server choices for threads
//! `1..n` first, then allocation fractions server by server, threads in
//! index order within a server.

use rand::Rng;

use crate::allocation::{single_server_optimal, super_optimal, SuperOptimalAllocation};
use crate::error::{Error, Result};
use crate::model::{Assignment, Instance, Placement, UtilityFunction};
use crate::solvers::SolveReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleLimits {
    pub n_max: usize,
    pub m_max: usize,
    pub c_max: u64,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits {
            n_max: 10,
            m_max: 3,
            c_max: 16,
        }
    }
}

impl OracleLimits {
    pub fn admits(&self, n: usize, m: usize, c: u64) -> Result<()> {
        if n > self.n_max || m > self.m_max || c > self.c_max {
            return Err(Error::SizeLimitExceeded(format!(
                "n={n} m={m} C={c}, limits n<={} m<={} C<={}",
                self.n_max, self.m_max, self.c_max
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub assignment: Assignment,
    /// `F*`.
    pub value: f64,
    /// Number of canonical groupings examined.
    pub explored: u64,
}

/// Exact optimum by enumerating every split of the threads into at most
/// `m` unlabeled groups, each solved optimally as a single server.
pub fn exact_solve(inst: &Instance, limits: OracleLimits) -> Result<OracleResult> {
    let (n, m, cap) = (inst.len(), inst.servers(), inst.capacity());
    limits.admits(n, m, cap)?;
    if n >= usize::BITS as usize - 1 {
        return Err(Error::SizeLimitExceeded(format!(
            "n={n} is too large to enumerate"
        )));
    }

    // Best single-server allocation for every subset of threads.
    let subsets = 1usize << n;
    let mut best_units: Vec<Vec<u64>> = vec![Vec::new(); subsets];
    let mut best_value = vec![0.0; subsets];
    for mask in 1..subsets {
        let members: Vec<&UtilityFunction> = (0..n)
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| inst.utility(i))
            .collect();
        let a = single_server_optimal(&members, cap);
        best_value[mask] = a.value;
        best_units[mask] = a.units;
    }

    let mut search = Search {
        n,
        m,
        best_value: &best_value,
        groups: Vec::with_capacity(m),
        best: None,
        explored: 0,
    };
    search.descend(0);
    let groups = search.best.expect("at least one grouping exists").1;
    let explored = search.explored;

    let mut entries = vec![
        Placement {
            server: 0,
            allocation: 0
        };
        n
    ];
    let mut value = 0.0;
    for (server, &mask) in groups.iter().enumerate() {
        value += best_value[mask];
        let members = (0..n).filter(|i| mask >> i & 1 == 1);
        for (i, &units) in members.zip(&best_units[mask]) {
            entries[i] = Placement {
                server,
                allocation: units,
            };
        }
    }
    Ok(OracleResult {
        assignment: Assignment::new(entries),
        value,
        explored,
    })
}

struct Search<'a> {
    n: usize,
    m: usize,
    best_value: &'a [f64],
    groups: Vec<usize>,
    best: Option<(f64, Vec<usize>)>,
    explored: u64,
}

impl Search<'_> {
    // Restricted-growth enumeration: thread `i` joins an existing group or
    // opens the next one, so each unlabeled grouping is produced once.
    fn descend(&mut self, i: usize) {
        if i == self.n {
            self.explored += 1;
            let value: f64 = self.groups.iter().map(|&g| self.best_value[g]).sum();
            if self.best.as_ref().is_none_or(|(b, _)| value > *b) {
                self.best = Some((value, self.groups.clone()));
            }
            return;
        }
        for g in 0..self.groups.len() {
            self.groups[g] |= 1 << i;
            self.descend(i + 1);
            self.groups[g] &= !(1 << i);
        }
        if self.groups.len() < self.m {
            self.groups.push(1 << i);
            self.descend(i + 1);
            self.groups.pop();
        }
    }
}

fn round_robin(n: usize, m: usize) -> Vec<usize> {
    (0..n).map(|i| i % m).collect()
}

fn random_servers<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..m)).collect()
}

fn members(servers: &[usize], m: usize) -> Vec<Vec<usize>> {
    let mut groups = vec![Vec::new(); m];
    for (i, &s) in servers.iter().enumerate() {
        groups[s].push(i);
    }
    groups
}

/// Equal split: `⌊C/k⌋` each, the first `C mod k` threads one unit more.
fn split_evenly(servers: &[usize], m: usize, capacity: u64) -> Assignment {
    let mut entries = vec![
        Placement {
            server: 0,
            allocation: 0
        };
        servers.len()
    ];
    for (server, group) in members(servers, m).into_iter().enumerate() {
        let k = group.len() as u64;
        if k == 0 {
            continue;
        }
        for (rank, i) in group.into_iter().enumerate() {
            let extra = u64::from((rank as u64) < capacity % k);
            entries[i] = Placement {
                server,
                allocation: capacity / k + extra,
            };
        }
    }
    Assignment::new(entries)
}

/// Each thread in turn takes `⌊remaining · u⌋` units, `u ~ U[0, 1)`.
/// Whatever is left after the last thread stays unused.
fn split_randomly<R: Rng + ?Sized>(
    servers: &[usize],
    m: usize,
    capacity: u64,
    rng: &mut R,
) -> Assignment {
    let mut entries = vec![
        Placement {
            server: 0,
            allocation: 0
        };
        servers.len()
    ];
    for (server, group) in members(servers, m).into_iter().enumerate() {
        let mut remaining = capacity;
        for i in group {
            let u: f64 = rng.random();
            let take = ((remaining as f64 * u).floor() as u64).min(remaining);
            remaining -= take;
            entries[i] = Placement {
                server,
                allocation: take,
            };
        }
    }
    Assignment::new(entries)
}

pub fn uu_assignment(inst: &Instance) -> Assignment {
    let servers = round_robin(inst.len(), inst.servers());
    split_evenly(&servers, inst.servers(), inst.capacity())
}

pub fn ur_assignment<R: Rng + ?Sized>(inst: &Instance, rng: &mut R) -> Assignment {
    let servers = round_robin(inst.len(), inst.servers());
    split_randomly(&servers, inst.servers(), inst.capacity(), rng)
}

pub fn ru_assignment<R: Rng + ?Sized>(inst: &Instance, rng: &mut R) -> Assignment {
    let servers = random_servers(inst.len(), inst.servers(), rng);
    split_evenly(&servers, inst.servers(), inst.capacity())
}

pub fn rr_assignment<R: Rng + ?Sized>(inst: &Instance, rng: &mut R) -> Assignment {
    let servers = random_servers(inst.len(), inst.servers(), rng);
    split_randomly(&servers, inst.servers(), inst.capacity(), rng)
}

fn report(inst: &Instance, so: &SuperOptimalAllocation, a: Assignment) -> SolveReport {
    SolveReport::new(inst, so, a, (0..inst.len()).collect())
}

pub fn heuristic_uu(inst: &Instance) -> SolveReport {
    report(inst, &super_optimal(inst), uu_assignment(inst))
}

pub fn heuristic_ur<R: Rng + ?Sized>(inst: &Instance, rng: &mut R) -> SolveReport {
    report(inst, &super_optimal(inst), ur_assignment(inst, rng))
}

pub fn heuristic_ru<R: Rng + ?Sized>(inst: &Instance, rng: &mut R) -> SolveReport {
    report(inst, &super_optimal(inst), ru_assignment(inst, rng))
}

pub fn heuristic_rr<R: Rng + ?Sized>(inst: &Instance, rng: &mut R) -> SolveReport {
    report(inst, &super_optimal(inst), rr_assignment(inst, rng))
}
