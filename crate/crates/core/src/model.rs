//! Domain types: utility curves, instances and assignments.
//!
//! Resources are integral units. A utility curve is stored as its
//! breakpoints; between breakpoints it is linear, so the unit marginal
//! `f(u) - f(u-1)` is constant on every segment and equals its slope.

use crate::error::{CurveError, Error, Result, Violation};

/// Absolute tolerance used for monotonicity and concavity checks on slopes.
pub const SLOPE_TOLERANCE: f64 = 1e-9;

/// A nondecreasing concave piecewise-linear utility curve on `[0, C]`.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityFunction {
    points: Vec<(u64, f64)>,
    // Per-segment unit marginals, clamped to be nonnegative and
    // nonincreasing. They differ from the raw slopes by at most the
    // validation tolerance.
    marginals: Vec<f64>,
}

impl UtilityFunction {
    /// Builds a curve whose domain must end at `capacity`.
    pub fn new(points: Vec<(u64, f64)>, capacity: u64) -> Result<Self, CurveError> {
        match Self::check(&points, capacity).into_iter().next() {
            Some(err) => Err(err),
            None => Ok(Self::from_checked(points)),
        }
    }

    /// Dense curve from per-unit values `values[u] = f(u)`, `u = 0..=C`.
    pub fn from_table(values: &[f64]) -> Result<Self, CurveError> {
        if values.is_empty() {
            return Err(CurveError::Empty);
        }
        let capacity = (values.len() - 1) as u64;
        let points = values
            .iter()
            .enumerate()
            .map(|(u, &y)| (u as u64, y))
            .collect();
        Self::new(points, capacity)
    }

    /// Every defect of the given breakpoint list, in breakpoint order.
    pub fn check(points: &[(u64, f64)], capacity: u64) -> Vec<CurveError> {
        let mut errors = Vec::new();
        let Some(&(first, _)) = points.first() else {
            return vec![CurveError::Empty];
        };
        if first != 0 {
            errors.push(CurveError::Origin(first));
        }
        for (k, &(_, y)) in points.iter().enumerate() {
            if !y.is_finite() || y < 0.0 {
                errors.push(CurveError::BadValue(k));
            }
        }
        let mut ordered = true;
        for k in 1..points.len() {
            if points[k].0 <= points[k - 1].0 {
                errors.push(CurveError::Unordered(k));
                ordered = false;
            }
        }
        let last = points[points.len() - 1].0;
        if last != capacity {
            errors.push(CurveError::Domain { last, capacity });
        }
        if !ordered {
            return errors;
        }
        let slopes = raw_slopes(points);
        for (segment, &slope) in slopes.iter().enumerate() {
            if slope < -SLOPE_TOLERANCE {
                errors.push(CurveError::Monotonicity { segment, slope });
            }
        }
        for k in 1..slopes.len() {
            if slopes[k] > slopes[k - 1] + SLOPE_TOLERANCE {
                errors.push(CurveError::Concavity {
                    at: k,
                    before: slopes[k - 1],
                    after: slopes[k],
                });
            }
        }
        errors
    }

    fn from_checked(points: Vec<(u64, f64)>) -> Self {
        let mut marginals = raw_slopes(&points);
        let mut ceiling = f64::INFINITY;
        for s in marginals.iter_mut() {
            ceiling = ceiling.min(*s);
            *s = if ceiling > 0.0 { ceiling } else { 0.0 };
        }
        UtilityFunction { points, marginals }
    }

    pub fn breakpoints(&self) -> &[(u64, f64)] {
        &self.points
    }

    /// Right end of the domain.
    pub fn capacity(&self) -> u64 {
        self.points[self.points.len() - 1].0
    }

    /// Checked evaluation.
    pub fn evaluate(&self, x: u64) -> Result<f64> {
        if x > self.capacity() {
            return Err(Error::OutOfDomain {
                x,
                capacity: self.capacity(),
            });
        }
        Ok(self.value_at(x))
    }

    /// Evaluates `f(x)` by linear interpolation.
    ///
    /// Panics in debug builds when `x` lies outside `[0, C]`; release
    /// builds clamp to `f(C)`.
    pub fn value_at(&self, x: u64) -> f64 {
        debug_assert!(
            x <= self.capacity(),
            "x={x} outside [0, {}]",
            self.capacity()
        );
        let k = self.points.partition_point(|&(px, _)| px <= x);
        if k == self.points.len() {
            return self.points[k - 1].1;
        }
        let (x0, y0) = self.points[k - 1];
        if x0 == x {
            return y0;
        }
        let (x1, y1) = self.points[k];
        y0 + (y1 - y0) * (x - x0) as f64 / (x1 - x0) as f64
    }

    /// The unit marginal `f(u) - f(u-1)` for `u` in `1..=C`.
    pub fn marginal(&self, u: u64) -> f64 {
        debug_assert!(u >= 1 && u <= self.capacity());
        let k = self.points.partition_point(|&(px, _)| px < u);
        self.marginals[k - 1]
    }

    /// Number of leading units whose marginal is strictly above `level`.
    pub fn units_above(&self, level: f64) -> u64 {
        let k = self.marginals.partition_point(|&s| s > level);
        self.points[k].0
    }

    /// Number of leading units whose marginal is at least `level`.
    pub fn units_at_least(&self, level: f64) -> u64 {
        let k = self.marginals.partition_point(|&s| s >= level);
        self.points[k].0
    }

    /// Largest unit marginal, 0 when the curve is flat.
    pub fn max_marginal(&self) -> f64 {
        self.marginals.first().copied().unwrap_or(0.0)
    }
}

fn raw_slopes(points: &[(u64, f64)]) -> Vec<f64> {
    points
        .windows(2)
        .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0) as f64)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Thread {
    pub name: Option<String>,
    pub utility: UtilityFunction,
}

impl Thread {
    pub fn new(utility: UtilityFunction) -> Self {
        Thread {
            name: None,
            utility,
        }
    }

    pub fn named(name: impl Into<String>, utility: UtilityFunction) -> Self {
        Thread {
            name: Some(name.into()),
            utility,
        }
    }
}

/// `m` homogeneous servers with `C` units each and `n` threads.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    servers: usize,
    capacity: u64,
    threads: Vec<Thread>,
    metadata: serde_json::Map<String, serde_json::Value>,
}

impl Instance {
    pub fn new(servers: usize, capacity: u64, threads: Vec<Thread>) -> Result<Self> {
        let mut violations = Vec::new();
        if servers == 0 {
            violations.push(Violation::Shape("at least one server is required".into()));
        }
        if capacity == 0 {
            violations.push(Violation::Shape("capacity must be positive".into()));
        }
        if threads.is_empty() {
            violations.push(Violation::Shape("at least one thread is required".into()));
        }
        for (index, t) in threads.iter().enumerate() {
            if t.utility.capacity() != capacity {
                violations.push(Violation::Thread {
                    index,
                    error: CurveError::Domain {
                        last: t.utility.capacity(),
                        capacity,
                    },
                });
            }
        }
        if !violations.is_empty() {
            return Err(Error::Invalid(violations));
        }
        Ok(Instance {
            servers,
            capacity,
            threads,
            metadata: Default::default(),
        })
    }

    /// Convenience constructor for unnamed threads.
    pub fn from_utilities(
        servers: usize,
        capacity: u64,
        utilities: impl IntoIterator<Item = UtilityFunction>,
    ) -> Result<Self> {
        Self::new(
            servers,
            capacity,
            utilities.into_iter().map(Thread::new).collect(),
        )
    }

    pub fn with_metadata(mut self, metadata: serde_json::Map<String, serde_json::Value>) -> Self {
        self.metadata = metadata;
        self
    }

    pub fn servers(&self) -> usize {
        self.servers
    }

    pub fn capacity(&self) -> u64 {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.threads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.threads.is_empty()
    }

    pub fn threads(&self) -> &[Thread] {
        &self.threads
    }

    pub fn utility(&self, thread: usize) -> &UtilityFunction {
        &self.threads[thread].utility
    }

    pub fn utilities(&self) -> impl ExactSizeIterator<Item = &UtilityFunction> + Clone {
        self.threads.iter().map(|t| &t.utility)
    }

    pub fn metadata(&self) -> &serde_json::Map<String, serde_json::Value> {
        &self.metadata
    }

    /// `Σ f_i(c_i)` for the given per-thread allocations, summed in thread order.
    pub fn total_utility(&self, allocations: impl IntoIterator<Item = u64>) -> f64 {
        self.utilities()
            .zip(allocations)
            .map(|(f, c)| f.value_at(c))
            .sum()
    }
}

/// Placement of one thread: zero-based server index and allocated units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Placement {
    pub server: usize,
    pub allocation: u64,
}

/// One placement per thread, in thread order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment {
    pub entries: Vec<Placement>,
}

impl Assignment {
    pub fn new(entries: Vec<Placement>) -> Self {
        Assignment { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn allocations(&self) -> impl Iterator<Item = u64> + '_ {
        self.entries.iter().map(|p| p.allocation)
    }

    /// Units used on each server.
    pub fn loads(&self, servers: usize) -> Vec<u64> {
        let mut loads = vec![0; servers];
        for p in &self.entries {
            loads[p.server] += p.allocation;
        }
        loads
    }
}

/// Outcome of a successful feasibility check.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub total_utility: f64,
    /// Unused units per server.
    pub residuals: Vec<u64>,
}

/// Checks that `assignment` covers every thread and respects every server's capacity.
pub fn verify_assignment(inst: &Instance, assignment: &Assignment) -> Result<Verdict> {
    if assignment.len() != inst.len() {
        return Err(Error::ThreadCount {
            expected: inst.len(),
            found: assignment.len(),
        });
    }
    let mut loads = vec![0u64; inst.servers()];
    for (thread, p) in assignment.entries.iter().enumerate() {
        if p.server >= inst.servers() {
            return Err(Error::ServerOutOfRange {
                thread: thread + 1,
                server: p.server + 1,
                servers: inst.servers(),
            });
        }
        if p.allocation > inst.capacity() {
            return Err(Error::AllocationOutOfRange {
                thread: thread + 1,
                allocation: p.allocation,
                capacity: inst.capacity(),
            });
        }
        loads[p.server] += p.allocation;
    }
    for (server, &load) in loads.iter().enumerate() {
        if load > inst.capacity() {
            return Err(Error::CapacityExceeded {
                server: server + 1,
                overflow: load - inst.capacity(),
            });
        }
    }
    Ok(Verdict {
        total_utility: inst.total_utility(assignment.allocations()),
        residuals: loads.iter().map(|&l| inst.capacity() - l).collect(),
    })
}
