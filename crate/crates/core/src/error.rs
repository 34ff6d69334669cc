use thiserror::Error;

use crate::dynamics::EvolutionResult;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("spectral weights are not normalized: sum of weights is {sum} (expected 1)")]
    Normalization { sum: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("poles {first} and {second} coincide; only simple poles are supported")]
    DegeneratePoles { first: usize, second: usize },

    #[error("pole {index} has a vanishing residue")]
    ZeroResidue { index: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("transition frequency {frequency} matches no pair of system levels")]
    EmptyOperator { frequency: f64 },

    #[error("operator is not Hermitian (deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error(
        "mode couplings are complex; use the pathological or regularized generator instead of the direct Lindblad form"
    )]
    ComplexCouplings,

    #[error("structural error: {0}")]
    Structural(String),

    #[error("unsupported-regularization: {modes} complex-coupled modes (only two-mode rotation is available)")]
    UnsupportedRegularization { modes: usize },

    #[error("singular rotation: |1 + mu^2| = {value:e}")]
    SingularRotation { value: f64 },

    #[error("positivity violation: rotated decay rates Gamma = ({gamma1}, {gamma2}) must be non-negative")]
    PositivityViolation { gamma1: f64, gamma2: f64 },

    #[error("infeasible rotation: {0}")]
    Infeasible(String),

    #[error(
        "truncation guard tripped at t = {time}: top Fock population of mode {mode} is {population:e} (limit {limit:e})"
    )]
    TruncationGuard {
        time: f64,
        mode: usize,
        population: f64,
        limit: f64,
        partial: Box<EvolutionResult>,
    },

    #[error("integration step {step:e} underflows for interval {interval:e}")]
    StepUnderflow { step: f64, interval: f64 },

    #[error("invariant violated at t = {time}: {what} = {value:e}")]
    InvariantViolation { time: f64, what: String, value: f64 },

    #[error("refused: {0}")]
    Refused(String),

    #[error("discretized bath recurrence time {recurrence:.4} must exceed twice the final time {t_max:.4}")]
    Recurrence { recurrence: f64, t_max: f64 },
}
