//! Source localization for SI contagion on extended-star hypertrees.
//!
//! A hub hyperedge `E_0` (a superspreading event) is joined to `m` arms of
//! hyperedges. Consecutive hyperedges share `v` members, and infection
//! crosses such an overlap after an exponential wait with rate `v`. Given
//! the infected region observed in a snapshot, the crate estimates which
//! hyperedge started the outbreak:
//!
//! - [`estimator`] holds the closed-form weighted estimator and its
//!   simple-graph special case.
//! - [`spreading`] simulates the dynamics and computes exact likelihoods by
//!   enumeration (small patterns) or by integrating transient state
//!   probabilities over time (any size).
//! - [`noise`] perturbs observed patterns to measure estimator sensitivity.
//! - [`experiments`] compares the closed form against the likelihood-based
//!   reference over random ensembles.

pub mod error;
pub mod estimator;
pub mod experiments;
pub mod hypertree;
pub mod noise;
pub mod rng;
pub mod spreading;

pub use error::{Error, Result};
pub use estimator::{graph_estimate, hyper_estimate, position_snap, ClosedFormResult};
pub use hypertree::{
    cumulative_position, weighted_length, Arm, Generator, HypertreeStar, InfectionPattern,
    OverlapMode, SourceEstimate,
};
pub use spreading::{ExitRule, Region, Span};

/// Version string embedded in every output artifact.
pub const ARTIFACT_VERSION: &str = concat!("hyperstar ", env!("CARGO_PKG_VERSION"));

/// Weighted lengths closer than this are treated as equal.
pub const TIE_EPS: f64 = 1e-9;
