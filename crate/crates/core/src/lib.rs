//! Row exchangeable arrays over finite alphabets.
//!
//! An array is row exchangeable when each row is an exchangeable sequence
//! and the rows, taken as sequence-valued variables, are exchangeable too.
//! Such an array is driven by a random row distribution per row, drawn
//! i.i.d. from a random row distribution generator. This crate makes that
//! structure computable for finite models:
//!
//! - [`measures`]: PMFs, measures on PMFs, empirical estimators, total
//!   variation and Prohorov distances.
//! - [`representation`]: counter-based uniform streams, the binary digit
//!   split of one uniform into two, and array samplers driven by
//!   representation functions `f(alpha, beta_i, lambda_ij)`.
//! - [`hiermodel`]: finite hierarchical models, their sampler and their
//!   representation function.
//! - [`inference`]: exact posteriors over generators and row distributions,
//!   predictive probabilities, and a brute-force enumeration oracle.
//! - [`diagnostics`]: seeded chi-square, law of large numbers and
//!   convergence checks.
//!
//! The crate is `no_std` and needs only `alloc`.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod diagnostics;
pub mod error;
pub mod hiermodel;
pub mod inference;
mod math;
pub mod measures;
pub mod representation;

pub use error::{Error, Result};
