//! Multiple-model Poisson multi-Bernoulli mixture (MM-PMBM) tracking of an
//! unknown, time-varying number of maneuvering targets.
//!
//! - [`gaussian`]: Gaussian propagation/update identities and mixture reduction.
//! - [`jms`]: CV/CT motion models, the position sensor, and the jump-Markov model set.
//! - [`pmbm`]: the filter recursion, hypothesis management, and state extraction.
//! - [`assignment`]: optimal and k-best assignment (Murty) and gating.
//! - [`metrics`]: OSPA and cardinality statistics.
//! - [`simulator`]: truth and measurement generation and the Monte Carlo harness.
//! - [`config`], [`report`], [`cli`]: the experiment runner behind the `mm-pmbm` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod assignment;
pub mod cli;
pub mod config;
pub mod error;
pub mod gaussian;
pub mod jms;
pub mod metrics;
pub mod pmbm;
pub mod report;
pub mod simulator;

pub use error::{Error, Result};
