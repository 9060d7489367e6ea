//! Joint modelling of a social graph and users' check-in trajectories.
//!
//! Users carry a preference embedding and a pair of network embeddings; links
//! are Bernoulli in the inner product of network embeddings. Next locations are
//! scored from a context that concatenates the user's network and preference
//! embeddings with a short-term recurrent state (reset at every six-hour gap)
//! and a gated long-term state that runs over the whole history.
//!
//! Module map:
//!
//! * [`data`]: check-in and edge parsing, filtering, subtrajectory segmentation,
//!   splits, correlation statistics and the binary dataset cache.
//! * [`model`]: parameters, forward computations and the full-likelihood oracles.
//! * [`train`]: negative sampling, backpropagation through time, AdaGrad and
//!   the alternating training loop.
//! * [`gradcheck`]: finite-difference verification of the analytic gradients.
//! * [`eval`]: Recall@K for next-location and friend recommendation.
//! * [`synth`]: seeded synthetic datasets with planted community structure.
//! * [`cli`]: the command implementations behind the `jntm` binary.

pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod gradcheck;
pub mod math;
pub mod model;
pub mod rng;
pub mod synth;
pub mod train;

pub use error::{Error, Result};
