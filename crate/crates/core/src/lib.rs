//! Numerical laboratory for the mixed even-spin Sherrington-Kirkpatrick model
//! coupled to a Curie-Weiss ferromagnetic interaction.
//!
//! The analytic side ([`cw`], [`parisi`], [`variational`]) computes the
//! limiting free energy as a maximum over the magnetization of the SK free
//! energy with a shifted field. The stochastic side ([`simulator`]) samples
//! finite systems exactly or by heat-bath Monte Carlo and measures the
//! overlap and magnetization statistics the limit theory predicts.

pub mod cw;
pub mod error;
pub mod model;
pub mod parisi;
pub mod quadrature;
pub mod simulator;
pub mod special;
pub mod variational;
pub mod verify;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
pub use model::{GaussianField, MixtureXi, ParamBlock, TemperaturePoint};
