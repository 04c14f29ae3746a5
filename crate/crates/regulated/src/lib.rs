//! Regulated functions with explicit jump structure.
//!
//! A regulated function is represented as a continuous closed-form base
//! plus a *jump train*: a strictly ordered collection of atoms, each
//! carrying a left and a right gap. From that representation the crate
//! computes pointwise values, one-sided limits, exact jumps, threshold
//! jump scans, and size-layered partitions of the jump set; it evaluates
//! unordered sums over countable weight families with certified error
//! bounds, builds the induced jump measure (counting integrals, transformed
//! jump sums, cumulative jump functions, rectangle counts), and simulates
//! random paths with reproducible streams.
//!
//! Everything numeric is plain `f64`. Wherever a result is advertised as
//! exact — jump sizes, threshold comparisons at representable sizes, layer
//! membership, reflections — the implementation uses direct reads and
//! exact comparisons rather than summation, so those guarantees are
//! bit-level, not approximate. Truncated tails of generated (rule-based)
//! objects always come with the bound actually achieved.

pub mod error;
pub mod expr;
pub mod function;
pub mod index_set;
pub mod interval;
pub mod jump_measure;
mod kahan;
pub mod path_sim;
pub mod train;
pub mod unordered;

pub use error::{Error, Result};
pub use expr::ContinuousBase;
pub use function::{
    CheckItem, JumpPoint, LayeredPartition, RegulatedFn, ValidationReport,
    DEFAULT_PARTITION_DEPTH,
};
pub use index_set::{IndexKey, IndexSetExpr};
pub use interval::IntervalSpec;
pub use jump_measure::{
    counting_family, cumulative_jump_function, dirac_family, family_measure, jump_count,
    jump_counts, phi_sum, sigma_finite_witness, PhiSpec, Rectangle, SizeSet,
};
pub use path_sim::{
    empirical_jump_census, simulate, split_gaps, stopping_times, CensusStats, JumpDist,
    PathModel, SamplePath, StoppingTimeSequence,
};
pub use train::{AtomOp, GeneratedTrain, JumpAtom, JumpTrain, TrainRule, MAX_GENERATED_TERMS};
pub use unordered::{
    linear_combine, sum_double, DoubleSeriesSpec, FamilyRule, GeneratedFamily, SumOrder,
    SumResult, WeightFamily,
};

/// Default tail tolerance for truncated generated objects.
pub const DEFAULT_TOLERANCE: f64 = 1e-12;

/// Running partial sums whose magnitude passes this threshold are declared
/// divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1e15;
