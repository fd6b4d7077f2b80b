//! Orthogonal rational functions (ORFs) on the unit circle with prescribed
//! poles anywhere off the circle.
//!
//! The crate builds orthonormal rational bases for a measure on the circle,
//! derives their recurrence data, forms para-orthogonal functions whose zeros
//! are quadrature nodes, and realizes the multiplication operator as a product
//! of elementary 2x2-block unitary factors (snake matrices) whose truncations
//! reproduce the same nodes and weights spectrally.  A small self-contained
//! dense complex eigensolver backs the spectral route, and the `ampd` module
//! checks the ordering-invariance properties of such factored matrices.

pub mod extc;
pub mod ratfun;
pub mod measure;
pub mod eig;
pub mod orf;
pub mod porf;
pub mod matfac;
pub mod ampd;

use num_complex::Complex64;
use thiserror::Error;

/// Crate-wide error type; variants map onto the CLI exit-code classes
/// (bad input, invariant failure, numerical failure).
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A Blaschke-factor or rational-function denominator vanished at the
    /// evaluation point.
    #[error("evaluation point z = {z} hits a pole (|denominator| = {denom:.3e})")]
    PoleHit { z: Complex64, denom: f64 },

    /// Pole sequences must stay off the unit circle.
    #[error("pole {index} lies on the unit circle (| |gamma| - 1 | = {dist:.3e} < 1e-12)")]
    PoleOnCircle { index: usize, dist: f64 },

    /// Malformed file, flag, or argument combination.
    #[error("invalid input: {0}")]
    BadInput(String),

    /// A rational function was handed to a space it does not live in.
    #[error("space mismatch: {0}")]
    SpaceMismatch(String),

    /// Gram matrix of the basis is numerically rank deficient for this
    /// measure (too few nodes, or basis functions coincide on the support).
    #[error("gram matrix rank deficient at step {n}: {detail}")]
    RankDeficient { n: usize, detail: String },

    /// Synthesized recurrence parameters violate their admissible region.
    #[error("recurrence parameter outside admissible region: {0}")]
    ParamRegionViolation(String),

    /// The normalization value phi_k^{nu*}(nu_k) is numerically zero, which
    /// cannot happen for a genuine positive measure.
    #[error("normalization value vanished at degree {index}")]
    NormalizationDegenerate { index: usize },

    /// A squared recurrence scale e_n^2 came out non-positive.
    #[error("e_{index}^2 = {value:.3e} is not positive")]
    NonPositiveESquared { index: usize, value: f64 },

    /// Two pole sequences that must agree do not.
    #[error("pole sequences do not match: {0}")]
    SequenceMismatch(String),

    /// Snake-product shape word and supplied data disagree.
    #[error("snake shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("tau must be unimodular, got modulus {modulus:.3e}")]
    BadTau { modulus: f64 },

    /// Christoffel-Darboux denominator 1 - zeta(z) conj(zeta(w)) is ~0 and no
    /// fallback form applies.
    #[error("degenerate CD denominator at z = {z}, w = {w}")]
    DegenerateDenominator { z: Complex64, w: Complex64 },

    /// Evaluation point too close to the support of a discrete measure.
    #[error("point z = {z} is within {dist:.3e} of the measure support")]
    TooCloseToSupport { z: Complex64, dist: f64 },

    /// A para-orthogonal zero strayed from the unit circle.
    #[error("PORF zero {index} off the unit circle: | |xi| - 1 | = {dist:.3e}")]
    ZeroOffCircle { index: usize, dist: f64 },

    /// Derivative in the second-kind weight formula is numerically zero.
    #[error("PORF derivative degenerate at node {node} (|Q'| = {magnitude:.3e})")]
    DerivativeDegenerate { node: Complex64, magnitude: f64 },

    /// Operator Moebius transform hit a singular resolvent factor.
    #[error("singular resolvent in operator Moebius transform: {0}")]
    SingularResolvent(String),

    /// Linear solve hit a numerically zero pivot.
    #[error("matrix is numerically singular (pivot {pivot:.3e})")]
    SingularMatrix { pivot: f64 },

    /// QR iteration failed to deflate within the sweep budget.
    #[error("eigensolver did not converge after {iterations} sweeps on a {n}x{n} matrix")]
    NoConvergence { iterations: usize, n: usize },

    /// Leading polynomial coefficient is ~0; companion matrix undefined.
    #[error("leading coefficient too small to form a companion matrix")]
    DegenerateLeading,

    /// Eigenvector extraction met a defective (non-diagonalizable) cluster.
    #[error("defective eigenvalue cluster near {eigenvalue}")]
    DefectiveCluster { eigenvalue: Complex64 },

    /// Requested enumeration is combinatorially too large.
    #[error("requested {requested} orderings, cap is {cap}")]
    TooLarge { requested: usize, cap: usize },

    /// Pencil determinant vanished at every probe point.
    #[error("pencil is singular at every evaluation point")]
    SingularPencilEverywhere,

    /// An AMPD factor with |delta| on the circle makes the product reducible.
    #[error("factor {index} reducible: |delta| = {modulus} is within 1e-10 of 1")]
    ReducibleFactor { index: usize, modulus: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
