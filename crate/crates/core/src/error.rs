use thiserror::Error;

use crate::rat::Rat;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("value {value} outside [0, 1)")]
    OutOfUnitInterval { value: Rat },
    #[error("inadmissible shift: d(δ)=0 for δ={delta}")]
    InadmissibleShift { delta: Rat },
    #[error("inadmissible shift family: pairwise dyadic distance is 0")]
    InadmissibleFamily,
    #[error("invalid arc: {0}")]
    InvalidArc(String),
    #[error("invalid step function: {0}")]
    InvalidStepFn(String),
    #[error("invalid grid function: {0}")]
    InvalidGridFn(String),
    #[error("invalid atom: {0}")]
    InvalidAtom(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("need at least {min} entries, got {got}")]
    TooFew { min: usize, got: usize },
    #[error("empty grid")]
    EmptyGrid,
    #[error("level {level} outside the supported range")]
    LevelOutOfRange { level: i64 },
    #[error("nesting violated between levels {level} and {next}: offset difference {diff}")]
    NestingViolated { level: i32, next: i32, diff: Rat },
    #[error("no fit found: {0}")]
    NoFit(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
