use thiserror::Error;

/// A defect in a single utility curve.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CurveError {
    #[error("curve has no breakpoints")]
    Empty,
    #[error("first breakpoint is at x={0}, expected x=0")]
    Origin(u64),
    #[error("breakpoint x values must strictly increase (breakpoint {0})")]
    Unordered(usize),
    #[error("utility at breakpoint {0} is negative or not finite")]
    BadValue(usize),
    #[error("domain ends at x={last}, expected the capacity {capacity}")]
    Domain { last: u64, capacity: u64 },
    #[error("utility decreases on segment {segment} (slope {slope})")]
    Monotonicity { segment: usize, slope: f64 },
    #[error("slope rises from {before} to {after} at breakpoint {at}")]
    Concavity { at: usize, before: f64, after: f64 },
}

/// One problem found while validating an instance.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Shape(String),
    Thread { index: usize, error: CurveError },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::Shape(msg) => f.write_str(msg),
            Violation::Thread { index, error } => write!(f, "thread {}: {}", index + 1, error),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Curve(#[from] CurveError),

    #[error("invalid instance: {}", join(.0))]
    Invalid(Vec<Violation>),

    #[error("x={x} is outside the domain [0, {capacity}]")]
    OutOfDomain { x: u64, capacity: u64 },

    #[error("server {server} is over capacity by {overflow} units")]
    CapacityExceeded { server: usize, overflow: u64 },

    #[error("assignment has {found} entries, instance has {expected} threads")]
    ThreadCount { expected: usize, found: usize },

    #[error("thread {thread} is placed on server {server}, instance has {servers} servers")]
    ServerOutOfRange {
        thread: usize,
        server: usize,
        servers: usize,
    },

    #[error("thread {thread} allocation {allocation} exceeds capacity {capacity}")]
    AllocationOutOfRange {
        thread: usize,
        allocation: u64,
        capacity: u64,
    },

    #[error("instance exceeds oracle limits: {0}")]
    SizeLimitExceeded(String),

    #[error("partition numbers sum to {0}, which is odd")]
    OddSum(u64),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("lemma check failed: {0}")]
    LemmaViolation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn join(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
