use thiserror::Error;

use crate::design::Effect;

pub type Result<T> = std::result::Result<T, ScreeningError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScreeningError {
    #[error("invalid design: {0}")]
    InvalidDesign(String),

    #[error("factor index {index} out of range for {factors} factors")]
    FactorOutOfRange { index: usize, factors: usize },

    #[error("interaction indices must satisfy i < j, got ({0}, {1})")]
    UnorderedInteraction(usize, usize),

    #[error("duplicate effect {0:?}")]
    DuplicateEffect(Effect),

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("constant response: nothing to screen")]
    ConstantResponse,

    #[error("rank-deficient subset: column for {0:?} depends on earlier columns")]
    RankDeficient(Effect),

    #[error("subset of {size} effects too large for {runs} runs")]
    SubsetTooLarge { size: usize, runs: usize },

    #[error("saturated model: no residual degrees of freedom")]
    SaturatedModel,

    #[error("negative delta {0}")]
    NegativeDelta(f64),

    #[error("model matrix is not orthogonal (max deviation {0:.3e})")]
    NotOrthogonal(f64),

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("simplex iteration limit reached after {0} pivots")]
    IterationLimit(usize),

    #[error("every delta value failed: {0}")]
    AllDeltasFailed(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("infeasible truth model: {0}")]
    InfeasibleTruth(String),

    #[error("parse error at row {row}, column {col}: {msg}")]
    Parse { row: usize, col: usize, msg: String },

    #[error("io error: {0}")]
    Io(String),
}

impl ScreeningError {
    /// True for failures of the numerical pipeline rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            ScreeningError::RankDeficient(_)
                | ScreeningError::SaturatedModel
                | ScreeningError::NotOrthogonal(_)
                | ScreeningError::Infeasible
                | ScreeningError::Unbounded
                | ScreeningError::IterationLimit(_)
                | ScreeningError::AllDeltasFailed(_)
        )
    }
}

impl From<std::io::Error> for ScreeningError {
    fn from(e: std::io::Error) -> Self {
        ScreeningError::Io(e.to_string())
    }
}
