//! Joint thread assignment and resource allocation.
//!
//! `n` threads, each described by a nondecreasing concave utility curve,
//! must be placed on `m` identical servers holding `C` resource units each,
//! and every server's units split among its threads so that total utility
//! is maximal. The problem is NP-hard already for two servers.
//!
//! The crate provides:
//!
//! - [`allocation`]: optimal single-pool allocation by water-filling, which
//!   yields the super-optimal bound `F̂` when all `m·C` units are pooled;
//! - [`linearize`]: two-segment under-approximations built from that bound;
//! - [`solvers`]: two approximation algorithms guaranteeing
//!   `F ≥ 2(√2 − 1)·F̂`, with a structural self-check;
//! - [`baselines`]: round-robin/random heuristics and an exact oracle for
//!   small instances;
//! - [`generators`]: random concave curves, power curves and the
//!   number-partition reduction;
//! - [`bench`]: reproducible experiment sweeps with CSV output.
//!
//! ```
//! use aa_core::{allocation::super_optimal, solvers::algorithm2, Instance, UtilityFunction};
//!
//! let step = UtilityFunction::new(vec![(0, 0.0), (1, 1.0), (2, 1.0)], 2).unwrap();
//! let line = UtilityFunction::new(vec![(0, 0.0), (2, 1.0)], 2).unwrap();
//! let inst = Instance::from_utilities(2, 2, [step.clone(), step, line]).unwrap();
//!
//! let so = super_optimal(&inst);
//! let report = algorithm2(&inst, &so);
//! assert_eq!(so.value, 3.0);
//! assert_eq!(report.total_utility, 2.5);
//! ```

pub mod allocation;
pub mod baselines;
pub mod bench;
pub mod error;
pub mod generators;
pub mod io;
pub mod linearize;
pub mod model;
pub mod rng;
pub mod solvers;

pub use error::{CurveError, Error, Result, Violation};
pub use model::{verify_assignment, Assignment, Instance, Placement, Thread, UtilityFunction};
