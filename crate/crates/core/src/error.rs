use thiserror::Error;

use crate::model::{ScoreSeq, Type};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParams { name: &'static str, reason: String },

    #[error("strategy has no stop probability for {type_} students after {history}")]
    MissingStrategyEntry { type_: Type, history: ScoreSeq },

    #[error("stop probability for {type_} students after {history} is outside [0, 1]")]
    InvalidProbability { type_: Type, history: ScoreSeq },

    #[error("unsupported number of tests k = {k}: {requirement}")]
    UnsupportedK { k: u32, requirement: &'static str },

    #[error("no equilibrium of this kind exists at these parameters")]
    NoEquilibrium,

    #[error("index n = {n} out of range 2..={k}")]
    BadIndex { n: u32, k: u32 },

    #[error("exhaustive enumeration is limited to k <= 3 (got k = {k}); pick a named policy family instead")]
    ScopeTooLarge { k: u32 },

    #[error("malformed profile: {0}")]
    Malformed(String),

    #[error("population size must be at least 1")]
    EmptyPopulation,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
