#![allow(clippy::neg_cmp_op_on_partial_ord)]
//! Exact and Monte Carlo laboratory for Glauber dynamics on the multi-block
//! Curie-Weiss Ising model.
//!
//! The [`kernel`] module works with the exact lumped magnetization chain, the
//! [`dynamics`] module simulates and couples full spin configurations, and
//! [`analysis`] turns both into scaling experiments.

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod kernel;
pub mod linalg;
pub mod model;
pub mod quadrature;
pub mod report;
pub mod spectral;

pub use error::{Error, Result};
pub use model::{BlockModel, MagState, Proportion, SpinConfig};
