//! Vector-valued regression between Euclidean spaces under a Lipschitz budget.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only the numerical
//! pieces:
//!
//! - [`dataset`] / [`risk`]: labeled samples `x_i ∈ ℝᵃ → y_i ∈ ℝᵇ` and the
//!   empirical risk functionals.
//! - [`graph`]: the constraint edge sets (complete graph, symmetrized k-NN with
//!   MST augmentation, greedy geometric spanner).
//! - [`laplace`]: weighted graph Laplacian systems `(L + Λ) Ỹᵀ = B`.
//! - [`smoothing`]: label smoothing, i.e. the minimum-distortion projection of
//!   the labels onto the set of `L`-Lipschitz labelings, solved approximately
//!   with multiplicative weights over the constraints.
//! - [`extension`]: approximate Lipschitz extension to new query points, for a
//!   single query or a batch of jointly constrained queries.
//! - [`selection`]: choosing `L` by structural risk minimization or by
//!   cross-validation.
//! - [`baseline`]: Nadaraya-Watson kernel regression.
//! - [`robokin`]: planar manipulator kinematics and the pose-correspondence
//!   data generator.
//!
//! File formats, the CLI and the experiment harness live in the companion
//! `lipreg` crate.

#![no_std]
#![forbid(unsafe_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod baseline;
pub mod dataset;
mod error;
pub mod extension;
pub mod graph;
pub mod laplace;
pub(crate) mod math;
pub mod points;
pub mod risk;
pub mod robokin;
pub mod selection;
pub mod smoothing;

pub use dataset::LabeledDataset;
pub use error::{Error, Result};
pub use extension::{extend_multi, extend_one_point, ExtensionConfig, ExtensionResult};
pub use graph::{ConstraintGraph, GraphPolicy};
pub use points::Points;
pub use risk::{empirical_risk, squared_loss, RiskReport};
pub use smoothing::{smooth, smooth_auto, SmoothingConfig, SmoothingResult};
