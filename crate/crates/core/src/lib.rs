//! Normalized random measures built from interacting point processes.
//!
//! A normalized random measure places i.i.d. positive jumps on the points of a
//! finite point process and normalizes the total mass; the law of the point
//! process controls the interaction between the support points (independence
//! for Poisson, repulsion for Strauss and determinantal processes, attraction
//! for shot-noise Cox processes). This crate provides
//!
//! * the jump law and its Laplace-transform machinery ([`jumps`]),
//! * simulation, densities, moment measures, reduced Palm transforms and
//!   tilted Laplace functionals for the four process families ([`pointproc`]),
//! * prior functionals and distinct-value laws of the normalized measure
//!   ([`nrm`]),
//! * conditional and marginal Gibbs samplers for mixture models with these
//!   measures as mixing distributions, including the shot-noise Cox variant
//!   with its two-level grouping ([`mcmc`]),
//! * posterior summaries ([`summaries`]) and a file-driven CLI ([`cli`]).
//!
//! Run `nrmatom --help` for the command-line interface.

pub mod cli;
pub mod jumps;
pub mod mcmc;
pub mod mixture;
pub mod nrm;
pub mod pointproc;
pub mod rngutil;
pub mod specfun;
pub mod summaries;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates its domain (negative rate, empty region, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// A numerical routine failed to reach its accuracy target.
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// The adaptive quadrature did not converge within the refinement budget.
    #[error("integral did not converge: {0}")]
    QuadratureDiverged(String),
    /// Determinantal-process existence condition violated.
    #[error("DPP existence violated: {0}")]
    DppExistence(String),
    /// Anchor configuration unusable for a reduced Palm transform.
    #[error("anchors degenerate for DPP Palm: {0}")]
    DegenerateAnchors(String),
    /// Configuration file / CLI input problems.
    #[error("config error: {0}")]
    Config(String),
    /// Dataset parsing problems, with position information.
    #[error("data error: {0}")]
    Data(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
