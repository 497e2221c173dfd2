use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("unknown link function `{0}`")]
    UnknownLink(String),
    #[error("link `{0}` does not provide the derivative needed for Newton updates")]
    DerivativeUnavailable(String),
    #[error("link `{0}` has an unbounded derivative; a finite bound is required for the noise scale")]
    UnboundedLink(String),
    #[error("invalid privacy parameters: epsilon = {epsilon}, delta = {delta}")]
    InvalidPrivacy { epsilon: f64, delta: f64 },
    #[error("record outside declared bounds: {what} = {value} exceeds {limit}")]
    BoundViolation { what: &'static str, value: f64, limit: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("sufficient statistics already augmented with public data")]
    AlreadyAugmented,
    #[error("no private reports to normalize by")]
    NoReports,
    #[error("linear system is singular to working precision (min |λ| = {min_singular}, max |λ| = {max_singular})")]
    IllConditioned { min_singular: f64, max_singular: f64 },
    #[error("public unlabeled set is empty")]
    EmptyPublicSet,
    #[error("Newton iteration failed: {0}")]
    NewtonDiverged(&'static str),
    #[error("no root in bracket [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    NoRootInBracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
    #[error("bisection bracket [{lo}, {hi}] collapsed with residual {residual}")]
    BisectionStalled { lo: f64, hi: f64, residual: f64 },
    #[error("link kind does not match estimation mode")]
    KindMismatch,
    #[error("private dataset has no labels")]
    MissingLabels,
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    #[error("invalid option: {0}")]
    InvalidOption(&'static str),
}
