use thiserror::Error;

use crate::mdp::StateRef;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("reachable state count exceeds the cap of {cap}")]
    CapExceeded { cap: usize },

    #[error("query budget exhausted: {spent} of {budget} spent, {requested} more requested")]
    BudgetExhausted { budget: u64, spent: u64, requested: u64 },

    #[error("state {0:?} is not a valid non-terminal state of this MDP")]
    InvalidState(StateRef),

    #[error("episode already finished")]
    EpisodeFinished,

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid transition support: {0}")]
    InvalidSupport(String),

    #[error("family members do not share a state-action space")]
    NotSharedSpace,

    #[error("family is not flagged with shared deterministic transitions")]
    NotDeterministicFamily,
}

pub type Result<T> = std::result::Result<T, Error>;
