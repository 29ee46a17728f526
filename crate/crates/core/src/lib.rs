//! Simulation and verification laboratory for lamplighter random walks on
//! finitely generated groups.
//!
//! The crate computes exact weighted word metrics and travelling-salesman
//! pseudo-metrics, runs seeded Monte Carlo walks on wreath products
//! `Z_r wr G`, estimates the rates of escape, and mechanically checks the
//! finite distance lemmas behind the acceleration results.
//!
//! Modules:
//!
//! * [`group`] — group backends (integer lattices, free groups, `Z2 * Z2`)
//!   with the exact weighted word metric, balls and distance matrices;
//! * [`wreath`] — lamp configurations, the wreath product law and the lifted
//!   length function;
//! * [`tsp`] — exact and heuristic solvers for the tour pseudo-metric;
//! * [`walk`] — step measures, seeded trajectories and their statistics;
//! * [`estimators`] — rate-of-escape, return-probability and related
//!   Monte Carlo estimators with confidence intervals;
//! * [`cases`] — sigma-triple selection and mechanical lemma verification.

pub mod cases;
pub mod stats;
pub mod estimators;
pub mod group;
pub mod rational;
pub mod tsp;
pub mod walk;
pub mod wreath;

pub use group::{Backend, BackendKind, Element, Generator, MetricError};
pub use rational::{parse_rat, rat, rat_to_f64, rat_to_string, Rat};
pub use tsp::{TspConfig, TspMode, TspResult, TspStrategy};
pub use wreath::{Configuration, LengthParams, WreathElement};
