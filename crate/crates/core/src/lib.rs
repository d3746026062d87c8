//! Convex-body calculus for matrix weights on finite dyadic grids.
//!
//! Everything lives on the uniform dyadic grid of `[0,1)^d`: functions are
//! piecewise constant on cells, integrals are exact sums, and the convex-set
//! valued objects (Aumann averages, maximal operators, sparse dominants) are
//! polytope arithmetic with certified containment checks.
//!
//! Layout:
//! - [`convexgeom`]: origin-symmetric convex bodies (gauge, support, Minkowski
//!   sums, hulls, Löwner/John ellipsoids, Hausdorff distance).
//! - [`dyadic`]: cube arithmetic and the exact sparse / pairwise-disjoint
//!   predicates.
//! - [`fields`]: vector fields, matrix weights, convex-set valued fields, and
//!   Aumann averages over cubes.
//! - [`spaces`]: `L^p_W` norms, Köthe pairings, reducing matrices, and general
//!   norm functions.
//! - [`operators`]: averaging operators, the convex-set valued maximal
//!   operator, operator-norm estimators, and the Rubio de Francia iteration.
//! - [`sparse`]: the stopping-time sparse domination algorithm and its
//!   verification.
//! - [`muckenhoupt`]: Muckenhoupt constants and weak-type maximal norms.
//! - [`extrapolation`]: norm-function interpolation and extrapolation weight
//!   certificates.
//! - [`io`]: plain-text serialization of bodies, fields, weights, and cube
//!   collections.

pub mod convexgeom;
pub mod dyadic;
pub mod extrapolation;
pub mod fields;
pub mod io;
pub mod muckenhoupt;
pub mod operators;
pub mod rng;
pub mod sparse;
pub mod spaces;

use thiserror::Error;

/// Errors surfaced by the library. Input errors carry enough context to name
/// the offending object (cube, cell, dimension pair).
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("cube {0} is outside the grid")]
    CubeOutsideGrid(String),
    #[error("level range {min}..={max} invalid for grid depth {depth}")]
    LevelRange { min: usize, max: usize, depth: usize },
    #[error("collection is not pairwise disjoint: {witness} overlaps {other}")]
    NotPairwiseDisjoint { witness: String, other: String },
    #[error("collection is not sparse: witness cube {0}")]
    NotSparse(String),
    #[error("matrix at cell {cell} is not symmetric positive definite: {reason}")]
    NotSpd { cell: String, reason: String },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
