//! Scaling theory of high-reliability chance-constrained provisioning.

pub mod distributions;
pub mod linalg;
pub mod lp;
pub mod rng;
pub mod scaling;
pub mod special;
pub mod error;
pub mod optim;
pub mod ccp;
pub mod approx;
pub mod dro;
pub mod datadriven;
