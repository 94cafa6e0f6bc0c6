use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use crate::kernel::Status;
use crate::trajectory::DiscretizedTrajectory;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A parameter violates its documented constraint.
    #[error("{name} must be {requirement}")]
    Invalid { name: String, requirement: String },

    /// A model function was evaluated outside its domain.
    #[error("{what} outside its domain (got {value})")]
    Domain { what: &'static str, value: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid visiting order: {0}")]
    InvalidOrder(String),

    /// A search bracket could not be established.
    #[error("bracketing failed: {0}")]
    Bracket(String),

    #[error(transparent)]
    Subproblem(Box<SubproblemFailure>),
}

impl Error {
    pub(crate) fn invalid(name: impl Into<String>, requirement: impl Into<String>) -> Self {
        Error::Invalid {
            name: name.into(),
            requirement: requirement.into(),
        }
    }
}

/// Failure of a convex subproblem inside a successive convex approximation
/// loop. Carries what was computed up to the failing iteration.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("convex subproblem failed at SCA iteration {iteration} with status {status:?}")]
pub struct SubproblemFailure {
    pub iteration: usize,
    pub status: Status,
    /// Objective values of the completed iterations.
    pub trace: Vec<f64>,
    /// Last trajectory known to be feasible, when the planner has one.
    pub last_trajectory: Option<DiscretizedTrajectory>,
    /// Canonical text dump of the failing program.
    pub program_dump: String,
}
