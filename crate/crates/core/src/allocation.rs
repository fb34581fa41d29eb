//! Separable concave maximization over a single pool of resource units.
//!
//! [`water_fill`] finds the threshold marginal value `λ*`: the largest
//! value such that at least `budget` units are worth `λ*` or more, so at
//! most `budget` units are worth strictly more. Every unit strictly above
//! the line is granted, and the remaining budget is filled from units
//! sitting exactly on the line in ascending thread order.
//!
//! `λ*` is located by bisection over the bit patterns of nonnegative `f64`
//! values, which are ordered like the values themselves. That bounds the
//! search to 64 probes, each costing a binary search per thread over its
//! segments, and always lands on a realized marginal value.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use crate::model::{Instance, UtilityFunction};

/// Result of a single-pool allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub units: Vec<u64>,
    pub value: f64,
    /// Marginal value at the water line (0 when the whole domain fits).
    pub threshold: f64,
}

/// Optimum of the relaxation that pools all `m·C` units.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperOptimalAllocation {
    pub c_hat: Vec<u64>,
    pub value: f64,
    pub threshold: f64,
}

/// Maximizes `Σ f_i(c_i)` subject to `Σ c_i ≤ budget` and `c_i ≤ C_i`.
///
/// When the budget covers fewer units than the curves' combined domain,
/// exactly `budget` units are handed out (zero-marginal units included).
pub fn water_fill(fs: &[&UtilityFunction], budget: u64) -> Allocation {
    let total: u64 = fs.iter().map(|f| f.capacity()).sum();
    if budget >= total {
        let units: Vec<u64> = fs.iter().map(|f| f.capacity()).collect();
        return Allocation {
            value: value_of(fs, &units),
            units,
            threshold: 0.0,
        };
    }

    let at_least = |level: f64| -> u64 { fs.iter().map(|f| f.units_at_least(level)).sum() };

    // Largest level with at least `budget` units at or above it.
    let top = fs.iter().map(|f| f.max_marginal()).fold(0.0, f64::max);
    let (mut lo, mut hi) = (0u64, top.to_bits());
    while lo < hi {
        let mid = lo + (hi - lo).div_ceil(2);
        if at_least(f64::from_bits(mid)) >= budget {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    let threshold = f64::from_bits(lo);

    let mut units: Vec<u64> = fs.iter().map(|f| f.units_above(threshold)).collect();
    let mut rest = budget - units.iter().sum::<u64>();
    for (f, c) in fs.iter().zip(units.iter_mut()) {
        if rest == 0 {
            break;
        }
        let extra = (f.units_at_least(threshold) - *c).min(rest);
        *c += extra;
        rest -= extra;
    }
    debug_assert_eq!(rest, 0, "water line must cover the budget");

    Allocation {
        value: value_of(fs, &units),
        units,
        threshold,
    }
}

/// Optimal allocation of one server's `budget` among the given threads.
pub fn single_server_optimal(fs: &[&UtilityFunction], budget: u64) -> Allocation {
    water_fill(fs, budget)
}

/// The super-optimal allocation: all threads share a pool of `min(n, m)·C` units.
///
/// With fewer threads than servers every thread simply receives `C`.
pub fn super_optimal(inst: &Instance) -> SuperOptimalAllocation {
    let fs: Vec<&UtilityFunction> = inst.utilities().collect();
    let budget = inst.servers().min(inst.len()) as u64 * inst.capacity();
    let Allocation {
        units,
        value,
        threshold,
    } = water_fill(&fs, budget);
    SuperOptimalAllocation {
        c_hat: units,
        value,
        threshold,
    }
}

#[derive(PartialEq)]
struct Gain(f64);

impl Eq for Gain {}

impl PartialOrd for Gain {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Gain {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Unit-by-unit greedy allocation, `O(budget · log n)`.
///
/// Each step grants one unit to the thread whose next unit adds the most
/// utility (lowest index on ties). Meant as a slow cross-check for
/// [`water_fill`]; it reads the curves only through `value_at`.
pub fn greedy_allocate_oracle(fs: &[&UtilityFunction], budget: u64) -> Allocation {
    let mut units = vec![0u64; fs.len()];
    let next_gain = |f: &UtilityFunction, c: u64| f.value_at(c + 1) - f.value_at(c);
    let mut heap: BinaryHeap<(Gain, Reverse<usize>)> = fs
        .iter()
        .enumerate()
        .filter(|(_, f)| f.capacity() > 0)
        .map(|(i, f)| (Gain(next_gain(f, 0)), Reverse(i)))
        .collect();
    let mut granted = 0;
    let mut threshold = 0.0;
    while granted < budget {
        let Some((Gain(gain), Reverse(i))) = heap.pop() else {
            break;
        };
        units[i] += 1;
        granted += 1;
        threshold = gain;
        if units[i] < fs[i].capacity() {
            heap.push((Gain(next_gain(fs[i], units[i])), Reverse(i)));
        }
    }
    Allocation {
        value: value_of(fs, &units),
        units,
        threshold,
    }
}

fn value_of(fs: &[&UtilityFunction], units: &[u64]) -> f64 {
    fs.iter().zip(units).map(|(f, &c)| f.value_at(c)).sum()
}
