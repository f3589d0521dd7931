use alloc::boxed::Box;
use alloc::string::String;

use thiserror::Error;

use crate::extension::ExtensionResult;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty dataset")]
    EmptyDataset,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("non-finite value at row {row}")]
    NonFinite { row: usize },

    #[error("rows {first} and {second} share an input but have different labels")]
    DuplicateConflict { first: usize, second: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid edge ({i}, {j}): {reason}")]
    InvalidEdge {
        i: usize,
        j: usize,
        reason: &'static str,
    },

    #[error(
        "singular system: the component containing vertex {vertex} has no positive vertex weight"
    )]
    SingularSystem { vertex: usize },

    #[error(
        "linear solver stopped after {iterations} iterations at relative residual {residual:e}"
    )]
    NotConverged { iterations: usize, residual: f64 },

    #[error("vertex {vertex} is not connected to any vertex with a known label")]
    DisconnectedVertex { vertex: usize },

    #[error("labels are not Lipschitz-consistent at this budget: worst slack {worst_slack}")]
    ExtensionInfeasible {
        worst_slack: f64,
        result: Box<ExtensionResult>,
    },

    #[error(
        "multi-point extension left an edge at ratio {max_violation} after {iterations} iterations"
    )]
    MultiExtensionInfeasible {
        max_violation: f64,
        iterations: usize,
    },

    #[error("distortion budget {phi0} is below the optimum (certified lower bound {lower_bound})")]
    Phi0TooSmall { phi0: f64, lower_bound: f64 },

    #[error("smoothing did not reach the target: edge ratio {max_violation}, distortion {distortion} after {iterations} iterations")]
    SmoothingInfeasible {
        max_violation: f64,
        distortion: f64,
        iterations: usize,
    },

    #[error("target end effector at distance {distance} is out of reach {reach}")]
    Unreachable { distance: f64, reach: f64 },

    #[error("every candidate failed")]
    NoViableCandidate,
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
