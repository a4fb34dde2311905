//! How reliable is a ranking computed from noise-corrupted scores?
//!
//! Objects carry true scores drawn from a distribution q; what is observed is
//! score + Gaussian noise, and the ranking induced by the noisy scores
//! deviates from the true one. This crate quantifies that deviation two ways:
//!
//! * **Pair agreement (Kendall's tau on [0, 1])** — [`kendall`] computes its
//!   analytical mean and variance at any noise level.
//! * **Top-K-list overlap** — [`tkl`] computes the large-N distribution of
//!   the overlap via a saddle-point evaluation, including its mode f0 and
//!   variance.
//!
//! [`montecarlo`] provides the exact-simulation oracle both are validated
//! against, and [`study`] inverts the analytics into sample-size requirements
//! for ranked feature-selection studies (Fisher-transformed correlation
//! scores, noise variance 1/(n - 3)).
//!
//! ```
//! use rankstab::dist::ScoreDistribution;
//!
//! let q = ScoreDistribution::gaussian(0.0, 1.0).unwrap();
//! // expected pair agreement at signal-to-noise ratio 1
//! let mu = rankstab::kendall::mean_tau(&q, 1.0).unwrap();
//! assert!((mu - 0.75).abs() < 1e-6);
//! // most probable top-10% list overlap at the same noise level
//! let f0 = rankstab::tkl::mode_overlap(&q, 1.0, 0.1).unwrap();
//! assert!(f0 < mu);
//! ```
//!
//! Runnable walkthroughs live in `examples/`; the `rankstab` binary exposes
//! the same functionality as batch commands (`analyze`, `simulate`, `plan`).

// `!(x > 0.0)` in input validation is intentional: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bvn;
pub mod cli;
pub mod dist;
mod error;
pub mod kendall;
pub mod montecarlo;
pub mod quad;
pub mod rng;
pub mod study;
pub mod tkl;

pub use error::{Error, Result};
