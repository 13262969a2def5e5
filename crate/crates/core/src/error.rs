use thiserror::Error;

/// Errors surfaced by the library. Numerical "no result" outcomes (an
/// inconsistent linear system, a reduction condition that does not hold)
/// are reported through `Option`, not through this type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite entry at row {row}, col {col}")]
    NonFinite { row: usize, col: usize },

    #[error("invalid tolerance: {0}")]
    Tolerance(String),

    #[error("eigenvalue iteration failed to converge")]
    EigenConvergence,

    #[error("pivot y'Cx is within tolerance of zero")]
    ZeroPivot,

    #[error("matrix is identically zero")]
    ZeroMatrix,

    #[error("stage-2 reduction requires s + t > 0 (got s = {s}, t = {t})")]
    StagePrecondition { s: usize, t: usize },

    #[error("game already has rank 0 (zero-sum up to tolerance)")]
    RankZero,

    #[error("positive scale required: {0}")]
    NonPositiveScale(&'static str),

    #[error("game is {m}x{n}, oracle support enumeration is capped at {cap}x{cap}")]
    SizeCap { m: usize, n: usize, cap: usize },

    #[error("equilibrium comparison is unreliable for degenerate games")]
    Degenerate,

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("numerical breakdown: {0}")]
    Numerical(String),
}
