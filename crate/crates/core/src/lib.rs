//! Explicit geometric-ergodicity constants for Markov chains.
//!
//! Drift, minorization and petiteness certificates go in; explicit
//! `(D, gamma)` with `|P^n phi(x) - pi(phi)| <= D V(x) ||phi||_V gamma^n` come
//! out, together with exact finite-chain checks of every step.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain;
pub mod drift;
pub mod error;
pub mod harris;
pub mod kendall;
pub mod logspace;
pub mod montecarlo;
pub mod renewal;
pub mod report;
pub mod splitting;

pub use error::{Error, Result};
pub use logspace::{LogReal, Rate};
