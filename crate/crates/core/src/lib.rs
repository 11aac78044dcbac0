//! Bayesian inference for dependent gene expression.
//!
//! Each expression measurement is assigned a latent class (under-, normally
//! or over-expressed) through a uniform-normal-uniform mixture; the classes
//! are thresholded probit scores whose joint law is a simultaneous-equations
//! Gaussian structured by a directed pathway graph. The sampler explores
//! edge subsets of a prior pathway with reversible-jump moves and reports
//! posterior expression probabilities and edge inclusion probabilities.

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod graph;
pub mod io;
pub mod model;
pub mod run;
pub mod sampler;
pub mod simulate;
pub mod special;
pub mod summarize;
pub mod trace;

pub use error::{Error, Result};
