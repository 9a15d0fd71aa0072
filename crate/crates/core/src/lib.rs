//! Metric distortion of single-winner voting rules.
//!
//! Voters and candidates live in an unknown pseudo-metric space; a voting rule
//! only sees rankings (or a compressed message derived from each ranking). The
//! *distortion* of a rule is the worst ratio, over every metric consistent with
//! the observed rankings, between the social cost of the elected candidate and
//! the cheapest candidate.
//!
//! The crate is organised as:
//!
//! * [`election`]: candidates, rankings, weighted vote profiles, distributions.
//! * [`metric`]: metric validation, consistency, costs, explicit cost ratios.
//! * [`rules`]: deterministic and randomized mechanisms, comparison graphs.
//! * [`lp`]: a dense-tableau simplex and the worst-case distortion LP.
//! * [`communication`]: message partitions of the ranking space and rules that
//!   only observe messages.
//! * [`adversary`]: executable lower-bound constructions that certify a
//!   specific rule's distortion with an explicit metric.

pub mod adversary;
pub mod communication;
pub mod election;
mod error;
pub mod lp;
pub mod metric;
pub mod perm;
pub mod rational;
pub mod rules;

pub use error::{Error, Result};
pub use rational::Rational;
