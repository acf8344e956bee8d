//! Quantum-adjusted risk scoring for cryptographic asset inventories.
//!
//! The crate is layered bottom-up:
//!
//! - [`risk_model`]: the Mosca inequality, urgency ratio, sigmoid temporal
//!   urgency and the weighted composite score.
//! - [`inventory`]: asset inventory, primitive catalog and severity feed parsing.
//! - [`policy`]: deprecation/disallowance timelines projected onto assets.
//! - [`knowledge`]: alias-resolving shared memory graph with source-tier trust.
//! - [`agents`]: rule-based workers for the five roles and the supervisor review.
//! - [`orchestrator`]: task-graph decomposition, single-slot execution with
//!   review/retry, and report synthesis.
//! - [`scenario`]: sweeps, Monte Carlo over the CRQC arrival date, rank stability.

pub mod agents;
pub mod error;
pub mod inventory;
pub mod knowledge;
pub mod orchestrator;
pub mod policy;
pub mod risk_model;
pub mod scenario;

pub use error::{Error, Result};
