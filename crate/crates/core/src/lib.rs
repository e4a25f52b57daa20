//! Verification engine for the conifold conditions of the mirror Laurent
//! polynomial of the blowup of `P^n` along a linear `P^r`.
//!
//! The pipeline builds the family data ([`family`]), finds and certifies all
//! roots of the reduced univariate polynomial ([`polyroots`]), classifies the
//! resulting critical spectrum and checks the conditions and bounds
//! ([`verifier`]), optionally corroborates everything against a brute-force
//! solve of the full critical-point system ([`oracle`]), and assembles
//! serializable reports ([`report`]).

// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod family;
pub mod oracle;
pub mod polynomial;
pub mod polyroots;
pub mod report;
pub mod verifier;

pub use error::{Error, Result, Stage};
pub use family::FamilyParams;
pub use polynomial::DensePolynomial;

/// Version string embedded in every report.
pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));
