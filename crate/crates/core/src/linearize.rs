//! Two-segment linearized utilities built from a super-optimal allocation.

use crate::model::UtilityFunction;

/// `g(x) = peak · x / cap` below `cap`, `peak` from `cap` on.
///
/// A zero cap makes `g` the constant `f(0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearizedFunction {
    pub cap: u64,
    pub peak: f64,
    /// `peak / cap`, or `+∞` when `cap == 0`.
    pub slope: f64,
}

impl LinearizedFunction {
    pub fn value_at(&self, x: u64) -> f64 {
        if x >= self.cap {
            self.peak
        } else {
            self.slope * x as f64
        }
    }
}

pub fn linearize(f: &UtilityFunction, c_hat: u64) -> LinearizedFunction {
    let peak = f.value_at(c_hat);
    let slope = if c_hat == 0 {
        f64::INFINITY
    } else {
        peak / c_hat as f64
    };
    LinearizedFunction {
        cap: c_hat,
        peak,
        slope,
    }
}

/// Linearizes every curve at its super-optimal allocation.
pub fn linearize_all<'a>(
    fs: impl IntoIterator<Item = &'a UtilityFunction>,
    c_hat: &[u64],
) -> Vec<LinearizedFunction> {
    fs.into_iter()
        .zip(c_hat)
        .map(|(f, &c)| linearize(f, c))
        .collect()
}
