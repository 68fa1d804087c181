use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("jets differ in base point or order: {left:?} vs {right:?}")]
    MismatchedJets {
        left: (f64, usize),
        right: (f64, usize),
    },
    #[error("division by a jet with value {0:e}")]
    DivisionByZeroJet(f64),
    #[error("root or real power of a jet with non-positive value {0}")]
    NonPositiveBase(f64),
    #[error("jet order exhausted")]
    OrderExhausted,
    #[error("jet order {requested} exceeds the supported maximum {max}")]
    OrderTooLarge { requested: usize, max: usize },
    #[error("the coordinate jet needs order at least 1")]
    CoordinateNeedsDerivative,
    #[error("a jet needs at least one coefficient")]
    EmptyJet,

    #[error("slot {slot} out of range for rank {rank}")]
    SlotOutOfRange { slot: usize, rank: usize },
    #[error("invalid permutation {0:?}")]
    InvalidPermutation(Vec<usize>),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("tensor rank {0} exceeds the supported maximum 6")]
    RankTooLarge(usize),

    #[error("invalid frame: {0}")]
    InvalidFrame(String),
    #[error("Jacobi identity violated: residual {residual:e} at ({i},{j},{k})")]
    JacobiViolation {
        residual: f64,
        i: usize,
        j: usize,
        k: usize,
    },
    #[error("invalid complex structure: {0}")]
    InvalidComplexStructure(String),
    #[error("no index convention reproduces the reference Ricci table: {0}")]
    Convention(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("unknown table id {0:?}")]
    UnknownTable(String),
    #[error("precondition not met: {0}")]
    PreconditionNotMet(String),
    #[error("scalar curvature is not constant (relative drift {0:e})")]
    NotConstantScalar(f64),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
