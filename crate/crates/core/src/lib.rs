//! Bayesian joint latent class models for longitudinal and time-to-event data.
//!
//! Subjects move between latent classes over time through a multinomial
//! logistic membership model. Within a class, the longitudinal response
//! follows a linear mixed model and the event time follows a Gompertz
//! proportional-hazards model. Both submodels share a random-effects vector
//! whose covariance is regressed on subject covariates through a modified
//! Cholesky decomposition.
//!
//! The crate is organised bottom-up:
//!
//! * [`data`], [`schema`] and [`params`] hold the domain types, validation and
//!   CSV ingestion.
//! * [`covariance`] builds per-subject covariance factors and the
//!   random-effects density.
//! * [`likelihood`] provides every density used by the joint likelihood.
//! * [`mcmc`] is the sampler: conjugate Gibbs updates, discrete class updates
//!   and per-block adaptive Metropolis.
//! * [`inference`] turns a chain into membership probabilities, dynamic
//!   survival predictions, DIC scores and evaluation metrics.
//! * [`simulate`] generates synthetic data from the model.
//!
//! Per-subject work fans out over a rayon pool when the `parallel` feature is
//! enabled (the default). Every random draw made inside a parallel region
//! comes from a per-subject substream, so results are bit-identical between
//! parallel and sequential execution.

pub mod covariance;
pub mod data;
pub mod error;
pub mod inference;
pub mod likelihood;
pub mod mcmc;
pub mod parallel;
pub mod params;
pub mod rng;
pub mod schema;
pub mod simulate;

pub use error::{JlcmError, Result};
