//! Exact chain-level topology on polytopal manifolds with corners.
//!
//! Everything in this crate is computed over exact rational arithmetic: cells are
//! rational polytopes glued by affine identifications, chains carry piecewise-affine
//! maps into flat targets (`R^d` or the torus `T^d`), and every operation — boundary,
//! products, transversal intersection, operadic composition, path/loop gluing — is a
//! finite exact computation with deterministic output.
//!
//! Module map:
//!
//! * [`scalar`] / [`linalg`] — scalar bound and exact matrix kernel (rank, kernels,
//!   solving) used by all the homological machinery.
//! * [`geometry`] — rational polytopes, affine maps, facet enumeration, volumes.
//! * [`complex`] — oriented polytopal cell complexes with corner structure: validation,
//!   products, strata by corner depth, boundary sheets, quotient gluing.
//! * [`chain`] — formal chains of complex-with-map generators, their differential and
//!   cross products.
//! * [`homology`] — boundary matrices, Betti numbers, homology bases and coordinates.
//! * [`transversal`] — transversality reports, fiber products, the intersection
//!   product, traces, pairings and deterministic perturbation.
//! * [`discs`] — the little `d`-discs operad with exact validity certificates.
//! * [`spheres`] — sphere-space chains (maps from a collared disc), evaluation, the
//!   configuration-driven gluing operation, loop products and the degree-two bracket.
//! * [`branes`] — path chains with endpoints on affine subtorus branes, composition,
//!   time reversal and the closed-loop trace.
//! * [`cobordism`] — the restricted dimension-one field-theory functor: labeled point
//!   objects, matched-interval morphisms, completions, induced matrices, monoidal
//!   structure and pullbacks.
//! * [`format`] — the plain-text document format shared with the command-line tool.

pub mod branes;
pub mod chain;
pub mod cobordism;
pub mod complex;
pub mod discs;
pub mod format;
pub mod geometry;
pub mod homology;
pub mod linalg;
pub mod scalar;
pub mod spheres;
pub mod transversal;

pub use scalar::{Rat, Scalar};

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A structural invariant failed; the message lists the diagnostics.
    #[error("validation failed: {0}")]
    Invalid(String),
    /// An operation required transversal inputs; the report explains the failure.
    #[error("inputs are not transversal: {0}")]
    NotTransversal(Box<transversal::TransversalityReport>),
    /// A document could not be parsed.
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    /// The inputs are outside the supported range of an operation.
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
    pub(crate) fn unsupported(msg: impl Into<String>) -> Self {
        Error::Unsupported(msg.into())
    }
}
