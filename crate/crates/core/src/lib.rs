//! attnlab is a numerical laboratory for studying how vanilla gradient
//! descent trains a single-layer softmax-attention network with a
//! feedforward block and scaled residual connections.
//!
//! The crate provides
//!
//! - a dependency-free dense linear-algebra layer with a Jacobi SVD
//!   ([`matrix`]),
//! - exact forward semantics of the model and its squared-Frobenius loss
//!   ([`model`]),
//! - closed-form gradients for all six weight matrices together with a
//!   finite-difference oracle ([`grad`]),
//! - deterministic gradient-descent training with loss traces and
//!   convergence-rate fitting ([`optimizer`]),
//! - every constant in the linear-convergence certificate (the contraction
//!   constant `alpha`, learning-rate constants, initialisation requirement,
//!   conditioning ratio and rank-collapse probes) ([`theory`]),
//! - experiment orchestration: synthetic data, CSV ingestion, residual
//!   ablations and sweeps over the residual coefficient ([`harness`]).
//!
//! The guide under `book/` walks through the concepts chapter by chapter;
//! its code listings compile and run as doc-tests of this crate.

pub mod grad;
pub mod harness;
pub mod matrix;
pub mod model;
pub mod optimizer;
pub mod rng;
pub mod special;
pub mod theory;

mod book;

pub use matrix::{Matrix, MatrixError, SvdResult};
pub use model::{
    activation_apply, activation_derivative, attention, forward, loss, loss_stacked, softmax_jacobian,
    softmax_rows, Activation, Dataset, ForwardTrace, ModelConfig, ModelError, Params,
};
pub use rng::Rng;
