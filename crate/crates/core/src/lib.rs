//! Implicit residual networks.
//!
//! A block maps `x` to the solution `y` of `y = x + h[(1−θ) F(x) + θ F(y)]`.
//! `θ = 0` is a plain residual layer, `θ = 1/2` the trapezoidal rule. The
//! crate provides the block with exact backpropagation, a model that stacks
//! blocks, the linear stability analysis that motivates the construction,
//! and the two benchmark datasets.

pub mod block;
pub mod datasets;
pub mod error;
pub mod network;
pub mod numkit;
pub mod stability;

pub use block::{ActivationKind, BlockParams, ImplicitBlockConfig, TapeEntry, WeightMode};
pub use datasets::{LabeledSet, TaskKind};
pub use error::{Error, Result};
pub use network::{LossKind, Model, ModelSpec, TrainConfig, TrainRecord};
pub use numkit::{Matrix, Rng, Vector};
pub use stability::{SchemeKind, SpectralReport, TestSystem, Trajectory};
