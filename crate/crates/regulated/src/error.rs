//! Crate-wide error type.
//!
//! One enum covers every fallible operation so downstream callers (the CLI in
//! particular) can classify failures uniformly: errors about malformed input
//! values versus errors about the mathematical object or query point.

use thiserror::Error;

/// Errors raised by the operations in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The query point lies outside the host interval.
    #[error("point {point} is outside the domain")]
    OutOfDomain { point: f64 },

    /// The query point is a domain endpoint where the requested one-sided
    /// limit has no neighborhood to approach from.
    #[error("no left neighborhood at {point}")]
    NoLeftNeighborhood { point: f64 },

    /// Mirror of [`Error::NoLeftNeighborhood`] for right limits.
    #[error("no right neighborhood at {point}")]
    NoRightNeighborhood { point: f64 },

    /// The query point is a domain endpoint; the operation needs a two-sided
    /// neighborhood.
    #[error("point {point} is a domain boundary point")]
    BoundaryPoint { point: f64 },

    /// A jump-size threshold must be strictly positive.
    #[error("threshold eps must be > 0, got {eps}")]
    NonpositiveEpsilon { eps: f64 },

    /// A summation tolerance must be strictly positive.
    #[error("tolerance must be > 0, got {tol}")]
    NonpositiveTolerance { tol: f64 },

    /// The scan window is unbounded and the generated jump rule carries no
    /// global cutoff certificate for the requested threshold.
    #[error("window is unbounded and the jump rule has no global cutoff certificate")]
    UnboundedWindowWithoutCertificate,

    /// The requested window is not contained in the host interval.
    #[error("window is not contained in the domain")]
    WindowNotInDomain,

    /// The two operands are indexed over different index domains.
    #[error("index domains do not match: {detail}")]
    MismatchedDomains { detail: String },

    /// Linear combinations of weight families require nonnegative
    /// coefficients.
    #[error("coefficient must be >= 0, got {coefficient}")]
    NegativeCoefficient { coefficient: f64 },

    /// Two cells of a claimed partition both contain the same index.
    #[error("partition cells overlap at index {index}")]
    OverlappingCells { index: String },

    /// The object carries no usable tail bound (a table without a beyond
    /// bound, or a restriction of a certified-divergent rule), so no sum
    /// can be certified.
    #[error("no tail bound available to certify the sum")]
    MissingTailBound,

    /// The operation requires a finite unordered sum but the family is not
    /// summable.
    #[error("weight family is not summable")]
    NotSummable,

    /// The time set reaches a boundary point of the host interval, where
    /// two-sided jumps are undefined.
    #[error("time set touches the domain boundary at {point}")]
    TimeSetTouchesBoundary { point: f64 },

    /// The size set accumulates at zero, so the count over a generated jump
    /// rule has no finite certificate.
    #[error("size set touches zero; count over a generated jump rule is not certified")]
    SizeSetTouchesZero,

    /// Two rectangles of a claimed disjoint list both contain the same
    /// (time, jump) pair.
    #[error("rectangles overlap at time {time}")]
    OverlappingRectangles { time: f64 },

    /// The simulation model fails validation.
    #[error("invalid model: {reason}")]
    InvalidModel { reason: String },

    /// The jump-size transform specification fails validation.
    #[error("invalid size transform: {reason}")]
    InvalidPhi { reason: String },

    /// A closed-form base expression failed to parse.
    #[error("expression parse error: {0}")]
    Parse(#[from] crate::expr::ParseError),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// `true` when the error concerns the mathematical object or query
    /// (domain membership, summability, certification) rather than a
    /// malformed input value. The CLI maps the two classes to different
    /// exit codes.
    pub fn is_domain_error(&self) -> bool {
        matches!(
            self,
            Error::OutOfDomain { .. }
                | Error::NoLeftNeighborhood { .. }
                | Error::NoRightNeighborhood { .. }
                | Error::BoundaryPoint { .. }
                | Error::UnboundedWindowWithoutCertificate
                | Error::WindowNotInDomain
                | Error::MismatchedDomains { .. }
                | Error::OverlappingCells { .. }
                | Error::NotSummable
                | Error::TimeSetTouchesBoundary { .. }
                | Error::SizeSetTouchesZero
                | Error::OverlappingRectangles { .. }
        )
    }

    /// Machine-readable error tag, stable across releases.
    pub fn code(&self) -> &'static str {
        match self {
            Error::OutOfDomain { .. } => "OutOfDomain",
            Error::NoLeftNeighborhood { .. } => "NoLeftNeighborhood",
            Error::NoRightNeighborhood { .. } => "NoRightNeighborhood",
            Error::BoundaryPoint { .. } => "BoundaryPoint",
            Error::NonpositiveEpsilon { .. } => "NonpositiveEpsilon",
            Error::NonpositiveTolerance { .. } => "NonpositiveTolerance",
            Error::UnboundedWindowWithoutCertificate => "UnboundedWindowWithoutCertificate",
            Error::WindowNotInDomain => "WindowNotInDomain",
            Error::MismatchedDomains { .. } => "MismatchedDomains",
            Error::NegativeCoefficient { .. } => "NegativeCoefficient",
            Error::OverlappingCells { .. } => "OverlappingCells",
            Error::MissingTailBound => "MissingTailBound",
            Error::NotSummable => "NotSummable",
            Error::TimeSetTouchesBoundary { .. } => "TimeSetTouchesBoundary",
            Error::SizeSetTouchesZero => "SizeSetTouchesZero",
            Error::OverlappingRectangles { .. } => "OverlappingRectangles",
            Error::InvalidModel { .. } => "InvalidModel",
            Error::InvalidPhi { .. } => "InvalidPhi",
            Error::Parse(_) => "ParseError",
        }
    }
}
