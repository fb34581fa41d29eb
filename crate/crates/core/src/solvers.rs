//! Approximation algorithms for joint assignment and allocation.
//!
//! Both algorithms work on the linearized utilities derived from the
//! super-optimal allocation and return the resulting placement for the
//! original concave instance. Their output keeps at least
//! `2(√2 − 1) ≈ 0.828` of the super-optimal utility.
//!
//! Ties are broken deterministically: the lowest thread index wins among
//! threads of equal utility, and a thread goes to the server with the most
//! remaining capacity, lowest server index first.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::allocation::SuperOptimalAllocation;
use crate::linearize::{linearize_all, LinearizedFunction};
use crate::model::{Assignment, Instance, Placement};

/// `2(√2 − 1)`.
pub const ALPHA: f64 = 2.0 * (std::f64::consts::SQRT_2 - 1.0);

/// Relative tolerance for utility comparisons against the super-optimal value.
pub const REL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub assignment: Assignment,
    /// `F = Σ f_i(c_i)`.
    pub total_utility: f64,
    /// `G = Σ g_i(c_i)`.
    pub linearized_utility: f64,
    /// `F̂`.
    pub super_optimal_value: f64,
    /// Threads with `c_i = ĉ_i`, ascending.
    pub full_set: Vec<usize>,
    /// Threads with `c_i ≠ ĉ_i`, ascending.
    pub unfull_set: Vec<usize>,
    /// Largest `g_i(ĉ_i)` over unfull threads, 0 if every thread is full.
    pub gamma: f64,
    /// `G ≥ α·F̂` up to [`REL_TOLERANCE`].
    pub alpha_bound_ok: bool,
    /// Threads in the order the solver placed them.
    pub order: Vec<usize>,
}

impl SolveReport {
    pub fn new(
        inst: &Instance,
        so: &SuperOptimalAllocation,
        assignment: Assignment,
        order: Vec<usize>,
    ) -> Self {
        let g = linearize_all(inst.utilities(), &so.c_hat);
        let total_utility = inst.total_utility(assignment.allocations());
        let linearized_utility = g
            .iter()
            .zip(assignment.allocations())
            .map(|(g, c)| g.value_at(c))
            .sum();
        let (full_set, unfull_set): (Vec<usize>, Vec<usize>) =
            (0..inst.len()).partition(|&i| assignment.entries[i].allocation == so.c_hat[i]);
        let gamma = unfull_set.iter().map(|&i| g[i].peak).fold(0.0, f64::max);
        let alpha_bound_ok =
            linearized_utility >= ALPHA * so.value - REL_TOLERANCE * so.value.abs();
        SolveReport {
            assignment,
            total_utility,
            linearized_utility,
            super_optimal_value: so.value,
            full_set,
            unfull_set,
            gamma,
            alpha_bound_ok,
            order,
        }
    }

    /// `F / F̂`, or 1 when `F̂ = 0`.
    pub fn ratio_to_super_optimal(&self) -> f64 {
        if self.super_optimal_value == 0.0 {
            1.0
        } else {
            self.total_utility / self.super_optimal_value
        }
    }
}

/// With fewer threads than servers, thread `i` runs alone on server `i` with `C` units.
fn one_per_server(inst: &Instance, so: &SuperOptimalAllocation) -> SolveReport {
    let entries = (0..inst.len())
        .map(|i| Placement {
            server: i,
            allocation: inst.capacity(),
        })
        .collect();
    SolveReport::new(
        inst,
        so,
        Assignment::new(entries),
        (0..inst.len()).collect(),
    )
}

/// Server with the most remaining capacity, lowest index on ties.
fn roomiest(remaining: &[u64]) -> usize {
    let mut best = 0;
    for (j, &r) in remaining.iter().enumerate().skip(1) {
        if r > remaining[best] {
            best = j;
        }
    }
    best
}

/// Repeatedly places the thread with the highest linearized utility that
/// still fits its super-optimal allocation on some server; when none fits,
/// the thread that gains most from the roomiest server's remainder takes all
/// of it.
pub fn algorithm1(inst: &Instance, so: &SuperOptimalAllocation) -> SolveReport {
    let (n, m) = (inst.len(), inst.servers());
    if n < m {
        return one_per_server(inst, so);
    }
    let g = linearize_all(inst.utilities(), &so.c_hat);
    let mut remaining = vec![inst.capacity(); m];
    let mut unassigned: Vec<usize> = (0..n).collect();
    let mut entries = vec![
        Placement {
            server: 0,
            allocation: 0
        };
        n
    ];
    let mut order = Vec::with_capacity(n);

    while !unassigned.is_empty() {
        let server = roomiest(&remaining);
        let room = remaining[server];

        let mut pick: Option<(usize, f64)> = None;
        for (pos, &i) in unassigned.iter().enumerate() {
            if so.c_hat[i] <= room && pick.is_none_or(|(_, best)| g[i].peak > best) {
                pick = Some((pos, g[i].peak));
            }
        }
        let (pos, allocation) = match pick {
            Some((pos, _)) => (pos, so.c_hat[unassigned[pos]]),
            None => {
                let mut best: Option<(usize, f64)> = None;
                for (pos, &i) in unassigned.iter().enumerate() {
                    let value = g[i].value_at(room);
                    if best.is_none_or(|(_, b)| value > b) {
                        best = Some((pos, value));
                    }
                }
                (best.expect("unassigned is nonempty").0, room)
            }
        };

        let thread = unassigned.remove(pos);
        entries[thread] = Placement { server, allocation };
        remaining[server] -= allocation;
        order.push(thread);
    }

    SolveReport::new(inst, so, Assignment::new(entries), order)
}

/// Order in which the faster algorithm visits threads: by `g_i(ĉ_i)`
/// descending, then everything after the first `m` re-sorted by slope
/// `g_i(ĉ_i)/ĉ_i` descending. A zero cap counts as infinite slope.
fn visiting_order(g: &[LinearizedFunction], m: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..g.len()).collect();
    order.sort_by(|&a, &b| g[b].peak.total_cmp(&g[a].peak).then(a.cmp(&b)));
    if order.len() > m {
        order[m..].sort_by(|&a, &b| g[b].slope.total_cmp(&g[a].slope).then(a.cmp(&b)));
    }
    order
}

/// Visits threads in a fixed order and gives each `min(ĉ_i, C_j)` on the
/// server `j` with the most remaining capacity, tracked in a max-heap.
pub fn algorithm2(inst: &Instance, so: &SuperOptimalAllocation) -> SolveReport {
    let (n, m) = (inst.len(), inst.servers());
    if n < m {
        return one_per_server(inst, so);
    }
    let g = linearize_all(inst.utilities(), &so.c_hat);
    let order = visiting_order(&g, m);

    let mut heap: BinaryHeap<(u64, Reverse<usize>)> =
        (0..m).map(|j| (inst.capacity(), Reverse(j))).collect();
    let mut entries = vec![
        Placement {
            server: 0,
            allocation: 0
        };
        n
    ];
    for &i in &order {
        let (room, Reverse(server)) = heap.pop().expect("heap holds every server");
        let allocation = so.c_hat[i].min(room);
        entries[i] = Placement { server, allocation };
        heap.push((room - allocation, Reverse(server)));
    }

    SolveReport::new(inst, so, Assignment::new(entries), order)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Structural checks on an approximation run.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub checks: Vec<LemmaCheck>,
}

impl Diagnostics {
    pub fn violations(&self) -> impl Iterator<Item = &LemmaCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn into_result(self) -> crate::Result<Self> {
        let failed = self
            .violations()
            .next()
            .map(|c| format!("{}: {}", c.name, c.detail));
        match failed {
            Some(msg) => Err(crate::Error::LemmaViolation(msg)),
            None => Ok(self),
        }
    }
}

/// Recomputes the full/unfull split of a report produced by
/// [`algorithm1`] or [`algorithm2`] and checks the structural properties
/// the approximation guarantee rests on.
///
/// The checks are:
/// - `consistent_sets`: the report's full set, unfull set and `γ` match a
///   fresh computation, and no thread gets more than `ĉ_i`;
/// - `one_unfull_per_server`: no server hosts two unfull threads;
/// - `unfull_count`: at most `m − 1` unfull threads;
/// - `unfull_resources`: `Σ_E c_i ≥ (|E|/m)·Σ_E ĉ_i`;
/// - `first_m_full`: the first `m` placed threads are full with `g_i(c_i) ≥ γ`;
/// - `full_utility`: `Σ_D g_i(c_i) ≥ m·γ`;
/// - `slope_order`: among unfull threads, a strictly steeper slope never
///   receives fewer units.
pub fn solve_report_diagnostics(
    inst: &Instance,
    report: &SolveReport,
    so: &SuperOptimalAllocation,
) -> Diagnostics {
    let m = inst.servers();
    let g = linearize_all(inst.utilities(), &so.c_hat);
    let c: Vec<u64> = report.assignment.allocations().collect();
    let (full, unfull): (Vec<usize>, Vec<usize>) =
        (0..inst.len()).partition(|&i| c[i] == so.c_hat[i]);
    let gamma = unfull.iter().map(|&i| g[i].peak).fold(0.0, f64::max);
    let tol = REL_TOLERANCE * so.value.abs().max(1.0);
    let mut checks = Vec::new();
    let mut check = |name: &'static str, passed: bool, detail: String| {
        checks.push(LemmaCheck {
            name,
            passed,
            detail,
        })
    };

    let over: Vec<usize> = (0..inst.len()).filter(|&i| c[i] > so.c_hat[i]).collect();
    check(
        "consistent_sets",
        full == report.full_set
            && unfull == report.unfull_set
            && gamma == report.gamma
            && over.is_empty(),
        format!(
            "|D|={} |E|={} gamma={gamma} over-cap={over:?}",
            full.len(),
            unfull.len()
        ),
    );

    let mut per_server = vec![0usize; m];
    for &i in &unfull {
        per_server[report.assignment.entries[i].server] += 1;
    }
    let crowded: Vec<usize> = (0..m)
        .filter(|&j| per_server[j] > 1)
        .map(|j| j + 1)
        .collect();
    check(
        "one_unfull_per_server",
        crowded.is_empty(),
        format!("servers with several unfull threads: {crowded:?}"),
    );

    check(
        "unfull_count",
        unfull.is_empty() || unfull.len() < m,
        format!("|E|={} m={m}", unfull.len()),
    );

    let got: u64 = unfull.iter().map(|&i| c[i]).sum();
    let wanted: u64 = unfull.iter().map(|&i| so.c_hat[i]).sum();
    check(
        "unfull_resources",
        got as u128 * m as u128 >= unfull.len() as u128 * wanted as u128,
        format!("sum c={got} sum c_hat={wanted} |E|={} m={m}", unfull.len()),
    );

    let head: Vec<usize> = report.order.iter().take(m).copied().collect();
    let weak: Vec<usize> = head
        .iter()
        .copied()
        .filter(|&i| c[i] != so.c_hat[i] || g[i].value_at(c[i]) < gamma)
        .collect();
    check(
        "first_m_full",
        report.order.len() == inst.len() && weak.is_empty(),
        format!("early threads not full or below gamma: {weak:?}"),
    );

    let full_g: f64 = full.iter().map(|&i| g[i].value_at(c[i])).sum();
    check(
        "full_utility",
        unfull.is_empty() || full_g >= m as f64 * gamma - tol,
        format!("sum_D g={full_g} m*gamma={}", m as f64 * gamma),
    );

    let mut inversions = Vec::new();
    for &a in &unfull {
        for &b in &unfull {
            if g[a].slope > g[b].slope && c[a] < c[b] {
                inversions.push((a + 1, b + 1));
            }
        }
    }
    check(
        "slope_order",
        inversions.is_empty(),
        format!("steeper thread got fewer units: {inversions:?}"),
    );

    Diagnostics { checks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocation::super_optimal;
    use crate::model::tests::{curve, tight};
    use crate::model::{verify_assignment, UtilityFunction};

    fn placements(a: &Assignment) -> Vec<(usize, u64)> {
        a.entries.iter().map(|p| (p.server, p.allocation)).collect()
    }

    #[test]
    fn alpha_constant() {
        assert_eq!(ALPHA, 2.0 * (2f64.sqrt() - 1.0));
    }

    #[test]
    fn tight_trace_algorithm1() {
        let inst = tight();
        let so = super_optimal(&inst);
        let r = algorithm1(&inst, &so);
        assert_eq!(placements(&r.assignment), vec![(0, 1), (1, 1), (0, 1)]);
        assert_eq!(r.total_utility, 2.5);
        assert_eq!(r.unfull_set, vec![2]);
        assert_eq!(r.gamma, 1.0);
        assert!(r.alpha_bound_ok);
        assert!(solve_report_diagnostics(&inst, &r, &so).all_passed());
    }

    #[test]
    fn tight_trace_algorithm2() {
        let inst = tight();
        let so = super_optimal(&inst);
        let r = algorithm2(&inst, &so);
        assert_eq!(placements(&r.assignment), vec![(0, 1), (1, 1), (0, 1)]);
        assert_eq!(r.total_utility, 2.5);
        assert_eq!(r.full_set, vec![0, 1]);
        assert_eq!(r.unfull_set, vec![2]);
        let d = solve_report_diagnostics(&inst, &r, &so);
        assert!(d.all_passed(), "{:?}", d.violations().collect::<Vec<_>>());
    }

    #[test]
    fn lone_thread_takes_first_server() {
        let inst = Instance::from_utilities(2, 3, [curve(&[(0, 0.0), (3, 3.0)])]).unwrap();
        let so = super_optimal(&inst);
        for r in [algorithm1(&inst, &so), algorithm2(&inst, &so)] {
            assert_eq!(placements(&r.assignment), vec![(0, 3)]);
            assert_eq!(r.total_utility, 3.0);
        }
    }

    #[test]
    fn four_sqrt_threads_on_two_servers() {
        let values: Vec<f64> = (0..=4).map(|u| (u as f64).sqrt()).collect();
        let f = UtilityFunction::from_table(&values).unwrap();
        let inst = Instance::from_utilities(2, 4, vec![f; 4]).unwrap();
        let so = super_optimal(&inst);
        assert_eq!(so.c_hat, vec![2, 2, 2, 2]);
        for r in [algorithm1(&inst, &so), algorithm2(&inst, &so)] {
            assert!(r.unfull_set.is_empty());
            assert!((r.total_utility - 4.0 * 2f64.sqrt()).abs() < 1e-12);
            assert_eq!(r.total_utility, so.value);
            verify_assignment(&inst, &r.assignment).unwrap();
        }
    }

    #[test]
    fn one_thread_per_server_gets_everything() {
        let f = curve(&[(0, 0.0), (2, 3.0), (6, 5.0)]);
        let inst = Instance::from_utilities(3, 6, vec![f; 3]).unwrap();
        let so = super_optimal(&inst);
        let r = algorithm2(&inst, &so);
        let mut servers: Vec<usize> = r.assignment.entries.iter().map(|p| p.server).collect();
        servers.sort();
        assert_eq!(servers, vec![0, 1, 2]);
        assert!(r.assignment.entries.iter().all(|p| p.allocation == 6));
        assert_eq!(r.total_utility, 15.0);
    }

    #[test]
    fn zero_cap_threads_sort_first_in_tail() {
        let g = [
            LinearizedFunction {
                cap: 4,
                peak: 2.0,
                slope: 0.5,
            },
            LinearizedFunction {
                cap: 0,
                peak: 0.0,
                slope: f64::INFINITY,
            },
            LinearizedFunction {
                cap: 2,
                peak: 1.5,
                slope: 0.75,
            },
            LinearizedFunction {
                cap: 1,
                peak: 1.0,
                slope: 1.0,
            },
        ];
        assert_eq!(visiting_order(&g, 1), vec![0, 1, 3, 2]);
    }

    #[test]
    fn diagnostics_catch_a_bad_report() {
        let inst = tight();
        let so = super_optimal(&inst);
        let mut r = algorithm2(&inst, &so);
        // Crowd thread 2 next to thread 3 and shrink both.
        r.assignment.entries[1] = Placement {
            server: 0,
            allocation: 0,
        };
        r.assignment.entries[2] = Placement {
            server: 0,
            allocation: 0,
        };
        r.unfull_set = vec![1, 2];
        r.full_set = vec![0];
        let d = solve_report_diagnostics(&inst, &r, &so);
        let failed: Vec<&str> = d.violations().map(|c| c.name).collect();
        assert!(failed.contains(&"one_unfull_per_server"));
        assert!(failed.contains(&"unfull_count"));
        assert!(d.into_result().is_err());
    }
}
