//! Random-key continuous ant colony optimization for variable-sized bin
//! packing with multi-dimensional capacities and quadratic penalties for
//! separating linked items.
//!
//! The crate is organized bottom-up:
//!
//! - [`instance`]: instance files, generation and link statistics.
//! - [`solution`]: packings, the objective and tie-breaking.
//! - [`decode`]: random-key encoding, construction heuristics and the decoder.
//! - [`refine`]: bin-type replacement, bin merging and item relocation.
//! - [`aco`]: the continuous ACO engine, its archive and decode cache.
//! - [`qlearn`]: online parameter control.
//! - [`milp`]: LP-format export of the quadratic and linearized models.
//! - [`solver`], [`oracle`], [`metrics`], [`bench`]: multi-worker runs,
//!   exhaustive search for small instances and benchmark reporting.

pub mod aco;
pub mod bench;
pub mod decode;
pub mod instance;
pub mod metrics;
pub mod milp;
pub mod oracle;
pub mod par;
pub mod problem;
pub mod qlearn;
pub mod refine;
pub mod solution;
pub mod solver;

pub use decode::{decode, encode, RandomKeyVector};
pub use instance::{generate_instance, parse_instance, CostShape, Instance, LinkStats};
pub use problem::{AssignRule, PairCounting, Problem, ProblemOptions};
pub use solution::{compare, objective, objective_via_z, Bin, PackingSolution};
pub use solver::{solve, Budget, RunConfig, SolveOutcome};
