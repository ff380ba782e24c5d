use thiserror::Error;

use crate::linalg::LinalgError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("{kind} size {n} out of range")]
    SizeOutOfRange { kind: &'static str, n: usize },
    #[error("direct sum needs at least one part")]
    EmptyParts,
    #[error("element belongs to algebra #{found}, expected #{expected}")]
    AlgebraMismatch { expected: u64, found: u64 },
    #[error("coordinate vector has length {found}, algebra dimension is {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("element is not self-adjoint (residual {residual:.3e})")]
    NotSelfAdjoint { residual: f64 },
    #[error("element is not a tripotent (residual {residual:.3e})")]
    NotTripotent { residual: f64 },
    #[error("element is not unitary (residual {residual:.3e})")]
    NotUnitary { residual: f64 },
    #[error("element is not a projection (residual {residual:.3e})")]
    NotProjection { residual: f64 },
    #[error("ill-conditioned: {0}")]
    IllConditioned(String),
    #[error("verification failed: {0}")]
    VerificationFailed(String),
    #[error("unitary log is ambiguous: spectrum meets -1")]
    BranchAmbiguity,
    #[error("operation requires a {0}")]
    WrongKind(&'static str),
    #[error("algebra is not a factor (centre has dimension {center_dim})")]
    NotAFactor { center_dim: usize },
    #[error("algebra has a type I2 (spin factor) summand")]
    TypeI2Present,
    #[error("hypothesis failed: {0}")]
    HypothesisFailed(String),
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("sampler produced a pair that does not operator commute (residual {residual:.3e})")]
    SamplerViolation { residual: f64 },
    #[error("image of a unitary is not unitary (residual {residual:.3e})")]
    NonUnitaryImage { residual: f64 },
    #[error("inconsistent: {0}")]
    Inconsistent(String),
    #[error("parameter out of range: {0}")]
    ParamOutOfRange(String),
    #[error("measure is not finitely additive (residual {residual:.3e})")]
    AdditivityViolation { residual: f64 },
    #[error("sampled projections do not span the self-adjoint part")]
    ProjectionsDoNotSpan,
    #[error("descriptor: {0}")]
    Descriptor(String),
}

pub type Result<T> = std::result::Result<T, Error>;
