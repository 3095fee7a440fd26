//! Global attractivity analysis for discrete-time non-autonomous Hopfield
//! networks with leakage delays, time-varying delays and infinite
//! distributed delays.
//!
//! The pipeline is:
//!
//! 1. [`model::load_model`] parses a JSON model description whose
//!    coefficients are written in the [`expr`] DSL.
//! 2. [`model::check_hypotheses`] and [`model::summarize_coefficients`]
//!    establish the standing assumptions and the sup/limsup summaries.
//! 3. [`model::build_criterion_matrices`] forms the two Z-matrices which
//!    [`matrix::classify`] sorts into non-M, singular M and non-singular M,
//!    together with irreducibility.
//! 4. [`criterion::decide`] turns all of that into a verdict, and
//!    [`simulator::run`] checks it empirically.

pub mod builtin;
pub mod criterion;
pub mod envelope;
pub mod expr;
pub mod matrix;
pub mod model;
pub mod simulator;

mod error;

pub use error::{Error, Result};

/// Numerical thresholds shared by the checks.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Tolerances {
    /// Slack allowed when a sampled coefficient is compared to its sup.
    pub sup: f64,
    /// Slack on kernel partial sums against their declared total.
    pub sum: f64,
    /// Equilibrium residual threshold.
    pub eq: f64,
    /// Zero threshold for M-matrix tests, relative to the infinity norm.
    pub minor: f64,
    /// Envelope dominance slack.
    pub env: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            sup: 1e-9,
            sum: 1e-9,
            eq: 1e-10,
            minor: 1e-9,
            env: 1e-9,
        }
    }
}

/// Default sampling horizon for hypothesis checks.
pub const DEFAULT_HORIZON: u64 = 10_000;
