//! Exact finite-sample and asymptotic laws of hard, soft and adaptive soft
//! thresholding estimators in Gaussian linear regression, with the data-level
//! estimators and a seeded Monte Carlo harness to check them against.

pub mod asymptotics;
pub mod error;
pub mod estimators;
pub mod finite_dist;
pub mod mc_harness;
pub mod selfcheck;
pub mod specfun;

pub use error::{Error, Result};
pub use finite_dist::{ComponentSpec, EstimatorKind, MixtureDistribution, Scaling, VarianceMode};
pub use specfun::ExtReal;
