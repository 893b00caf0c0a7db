//! Minimum-cost data source selection for Bayesian learning.
//!
//! An instance consists of a finite state space, a set of candidate data
//! sources with known signal likelihoods (or, equivalently, with known
//! distinguishability structure), a prior belief, and per-state error
//! budgets. The goal is to pick a cheapest subset of sources so that the
//! steady-state learning error stays within budget for every hypothesis
//! about the true state.
//!
//! The crate provides:
//!
//! * [`model`] — instance types, validation, and the observational
//!   equivalence structure of the sources;
//! * [`objective`] — the exact-rational coverage function that turns the
//!   selection problem into submodular set covering;
//! * [`solvers`] — the standard greedy, the threshold ("fast") greedy, a
//!   brute-force oracle, and the set-cover reduction;
//! * [`bounds`] — a-posteriori approximation-ratio bounds for solver traces;
//! * [`simulate`] — Bayesian and distributed non-Bayesian belief recursions
//!   to validate the closed-form steady-state errors;
//! * [`harness`] — seeded random instance generation, the benchmark
//!   campaign, and CSV/SVG reporting.
//!
//! All probabilities are exact rationals ([`Rat`]); state and source sets
//! are bitsets over dense indices, capped at 64 states and 64 sources.

pub mod bitset;
pub mod bounds;
pub mod harness;
pub mod model;
pub mod objective;
pub mod rational;
pub mod simulate;
pub mod solvers;

pub use bitset::{all_subsets, BitSet};
pub use model::{BldsInstance, DistinguishabilityMap, Source, SourceModel, StateSpace, ValidatedInstance};
pub use objective::{ActiveStateSet, Evaluator};
pub use rational::Rat;
pub use solvers::{FastGreedyConfig, SetCoverInstance, Solution, SolveTrace};
